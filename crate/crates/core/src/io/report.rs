//! JSON and CSV reports.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluation::{BasinReport, SimilarityProfile, TreReport};
use crate::registration::{LevelTrace, RegistrationResult, StageConfig};
use crate::transform::{Parametric, Transform};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageSummary {
    pub transform: String,
    pub metric: String,
    pub representation: String,
    pub gamma: Option<f64>,
    pub levels: Vec<usize>,
    pub iterations: usize,
}

impl From<&StageConfig> for StageSummary {
    fn from(s: &StageConfig) -> Self {
        let gamma = match &s.representation {
            crate::registration::RepresentationKind::Vfc(p) => Some(p.gamma),
            _ => None,
        };
        StageSummary {
            transform: s.transform.name().into(),
            metric: s.metric.name().into(),
            representation: s.representation.name().into(),
            gamma,
            levels: s.levels.clone(),
            iterations: s.optimizer.max_iterations,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelSummary {
    pub stage: usize,
    pub level: usize,
    pub factor: usize,
    pub iterations: usize,
    pub converged: bool,
    /// Oriented metric after every accepted step.
    pub trace: Vec<f64>,
}

impl From<&LevelTrace> for LevelSummary {
    fn from(t: &LevelTrace) -> Self {
        LevelSummary {
            stage: t.stage,
            level: t.level,
            factor: t.factor,
            iterations: t.iterations,
            converged: t.converged,
            trace: t.values.clone(),
        }
    }
}

/// Parameters of one stage of the final transform. B-spline stages report
/// the largest control-point displacement instead of every coefficient.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransformSummary {
    pub kind: String,
    pub parameters: Vec<f64>,
    pub displacement_mm: Option<f64>,
}

impl TransformSummary {
    pub fn of(t: &Transform) -> Vec<TransformSummary> {
        match t {
            Transform::Composite(c) => c.items().iter().flat_map(TransformSummary::of).collect(),
            Transform::Translation(tr) => vec![TransformSummary {
                kind: t.kind().into(),
                parameters: tr.offset().to_vec(),
                displacement_mm: Some(tr.offset().iter().map(|v| v * v).sum::<f64>().sqrt()),
            }],
            Transform::Affine(_) => {
                vec![TransformSummary { kind: t.kind().into(), parameters: t.parameters(), displacement_mm: None }]
            }
            Transform::BSpline(b) => {
                let n = b.control_grid().len();
                let c = b.coefficients();
                let max = (0..n)
                    .map(|i| (0..b.ndim()).map(|a| c[a * n + i].powi(2)).sum::<f64>().sqrt())
                    .fold(0.0, f64::max);
                vec![TransformSummary { kind: t.kind().into(), parameters: Vec::new(), displacement_mm: Some(max) }]
            }
        }
    }
}

/// Registration report. Wall time is left out unless requested so that
/// repeated runs produce identical files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegistrationReport {
    pub schema_version: u32,
    pub stages: Vec<StageSummary>,
    pub levels: Vec<LevelSummary>,
    pub converged: bool,
    pub final_metric: Option<f64>,
    pub final_transform: Vec<TransformSummary>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub wall_time_seconds: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub error: Option<String>,
}

impl RegistrationReport {
    pub fn new(stages: &[StageConfig], r: &RegistrationResult, include_time: bool) -> Self {
        RegistrationReport {
            schema_version: REPORT_SCHEMA_VERSION,
            stages: stages.iter().map(StageSummary::from).collect(),
            levels: r.traces.iter().map(LevelSummary::from).collect(),
            converged: r.converged,
            final_metric: r.traces.last().and_then(|t| t.values.last().copied()),
            final_transform: TransformSummary::of(&r.transform),
            wall_time_seconds: include_time.then_some(r.wall_time.as_secs_f64()),
            error: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileReport {
    pub schema_version: u32,
    pub profile: SimilarityProfile,
    pub basin: BasinReport,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TreSummary {
    pub schema_version: u32,
    pub count: usize,
    pub original: TreReport,
    pub registered: TreReport,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiceEntry {
    pub label: u32,
    pub dice: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiceSummary {
    pub schema_version: u32,
    pub labels: Vec<DiceEntry>,
    pub mean: f64,
    pub std: f64,
}

/// Writes any report as pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, report: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(report)? + "\n";
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Parse { path: path.to_path_buf(), line: 0, msg: format!("{other:?}") },
    }
}

fn write_rows(path: &Path, header: [&str; 2], rows: impl Iterator<Item = (String, f64)>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    w.write_record(header).map_err(|e| csv_err(path, e))?;
    for (a, b) in rows {
        w.write_record([a, b.to_string()]).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// `shift,value` per line.
pub fn write_profile_csv(path: &Path, p: &SimilarityProfile) -> Result<()> {
    write_rows(path, ["shift", "value"], p.shifts.iter().zip(&p.values).map(|(s, v)| (s.to_string(), *v)))
}

/// Reads back `shift,value` rows.
pub fn read_profile_csv(path: &Path) -> Result<Vec<(i64, f64)>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    r.deserialize().map(|row| row.map_err(|e| csv_err(path, e))).collect()
}

/// `landmark,tre_mm` per line, 0-based landmark index.
pub fn write_tre_csv(path: &Path, t: &TreReport) -> Result<()> {
    write_rows(path, ["landmark", "tre_mm"], t.per_point.iter().enumerate().map(|(i, v)| (i.to_string(), *v)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evaluation::ProfileMetadata;

    #[test]
    fn profile_csv_and_json_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = SimilarityProfile {
            axis: 1,
            shifts: vec![-2, -1, 0, 1, 2],
            values: vec![0.5, 0.25, -1.0 / 3.0, 0.25, 0.5],
            metadata: ProfileMetadata {
                metric: "mean_dot_product".into(),
                representation: "vfc".into(),
                gamma: Some(3.0),
                noise_percent: Some(9.0),
                seed: Some(7),
            },
        };
        let csv_path = dir.path().join("p.csv");
        write_profile_csv(&csv_path, &p).unwrap();
        let text = fs::read_to_string(&csv_path).unwrap();
        assert!(text.starts_with("shift,value\n-2,0.5\n"));
        let rows = read_profile_csv(&csv_path).unwrap();
        assert_eq!(rows[2], (0, -1.0 / 3.0));

        let report = ProfileReport {
            schema_version: REPORT_SCHEMA_VERSION,
            basin: crate::evaluation::basin_analysis(&p).unwrap(),
            profile: p,
        };
        let j = dir.path().join("p.json");
        write_json(&j, &report).unwrap();
        let first = fs::read(&j).unwrap();
        assert_eq!(read_json::<ProfileReport>(&j).unwrap(), report);
        write_json(&j, &report).unwrap();
        assert_eq!(fs::read(&j).unwrap(), first);
    }

    #[test]
    fn tre_csv_has_header_plus_one_line_per_point() {
        let dir = tempfile::tempdir().unwrap();
        let t = TreReport { mean: 1.0, std: 0.5, per_point: vec![0.5, 1.5, 1.0] };
        let path = dir.path().join("t.csv");
        write_tre_csv(&path, &t).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), 4);
        assert_eq!(text.lines().next(), Some("landmark,tre_mm"));
    }
}
