//! Whitespace-separated landmark coordinates, one point per line.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::evaluation::LandmarkSet;
use crate::volume::GridGeometry;

/// Reads voxel-index landmarks. `index_base` is subtracted from every
/// coordinate (DIR-Lab files are commonly 1-based).
pub fn read_landmarks_dirlab(path: &Path, geometry: &GridGeometry, index_base: u32) -> Result<LandmarkSet> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let n = geometry.ndim();
    let base = index_base as f64;
    let mut points = Vec::new();
    for (k, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let parse_err = |msg: String| Error::Parse { path: path.to_path_buf(), line: k + 1, msg };
        let xs: Vec<f64> = line
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|t| !t.is_empty())
            .map(|t| t.parse::<f64>().map_err(|_| parse_err(format!("`{t}` is not a number"))))
            .collect::<Result<_>>()?;
        if xs.len() != n {
            return Err(parse_err(format!("expected {n} coordinates, found {}", xs.len())));
        }
        if xs.iter().any(|x| !x.is_finite()) {
            return Err(parse_err("coordinates must be finite".into()));
        }
        let mut p = [0.0; 3];
        for (a, x) in xs.iter().enumerate() {
            p[a] = x - base;
        }
        points.push(p);
    }
    LandmarkSet::new(points, geometry.clone())
}

/// Writes landmarks with the given index base, one point per line.
pub fn write_landmarks(path: &Path, lms: &LandmarkSet, index_base: u32) -> Result<()> {
    let n = lms.geometry().ndim();
    let mut out = String::new();
    for p in lms.points() {
        let row: Vec<String> = p[..n].iter().map(|x| (x + index_base as f64).to_string()).collect();
        out += &row.join("\t");
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_triples_and_reports_bad_lines() {
        let dir = tempfile::tempdir().unwrap();
        let g = GridGeometry::unit(&[10, 10, 10]).unwrap();
        let p = dir.path().join("l.txt");
        let body: String = (0..300).map(|i| format!("{} {}\t{}\n", i % 7 + 1, i % 5 + 1, i % 3 + 1)).collect();
        fs::write(&p, &body).unwrap();
        let l = read_landmarks_dirlab(&p, &g, 1).unwrap();
        assert_eq!(l.len(), 300);
        assert_eq!(l.points()[1], [1.0, 1.0, 1.0]);
        assert_eq!(read_landmarks_dirlab(&p, &g, 0).unwrap().points()[0], [1.0, 1.0, 1.0]);

        fs::write(&p, "").unwrap();
        assert!(read_landmarks_dirlab(&p, &g, 0).unwrap().is_empty());

        fs::write(&p, "1 2 3\n4 5\n").unwrap();
        assert!(matches!(read_landmarks_dirlab(&p, &g, 0), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn write_then_read() {
        let dir = tempfile::tempdir().unwrap();
        let g = GridGeometry::unit(&[10, 10, 10]).unwrap();
        let l = LandmarkSet::new(vec![[1.25, 2.0, 3.5], [0.0, 9.0, 4.0]], g.clone()).unwrap();
        let p = dir.path().join("l.txt");
        write_landmarks(&p, &l, 1).unwrap();
        assert_eq!(read_landmarks_dirlab(&p, &g, 1).unwrap(), l);
    }
}
