//! Pipeline configuration files.
//!
//! ```text
//! # comment
//! [stage]
//! transform = affine
//! metric = ncc
//! representation = vfc
//! gamma = 3.0
//!
//! [stage]
//! transform = bspline
//! ...
//! ```
//!
//! Several `key=value` pairs may share a line when no value contains
//! spaces. Keys before the first `[stage]` header open an implicit first
//! stage.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::metrics::{MetricKind, ScalarMetric};
use crate::registration::{GradientMode, RepresentationKind, StageConfig, TransformKind};
use crate::repr::{VfcParams, DEFAULT_EPSILON_CENTER, DEFAULT_NOISE_ETA, DEFAULT_RADIUS};

use super::metaimage::read_labels;

/// γ for the anatomy presets.
pub fn preset_gamma(name: &str) -> Option<f64> {
    match name {
        "lung" => Some(3.0),
        "brain" => Some(4.0),
        "abdomen" => Some(2.5),
        _ => None,
    }
}

#[derive(Default)]
struct Raw {
    line: usize,
    pairs: Vec<(usize, String, String)>,
}

fn split_pairs(line: &str) -> Option<Vec<(String, String)>> {
    let tokens: Vec<&str> = line.split_whitespace().collect();
    if tokens.len() > 1 && tokens.iter().all(|t| t.contains('=') && !t.starts_with('=') && !t.ends_with('=')) {
        return Some(
            tokens
                .iter()
                .map(|t| {
                    let (k, v) = t.split_once('=').expect("checked");
                    (k.to_string(), v.to_string())
                })
                .collect(),
        );
    }
    let (k, v) = line.split_once('=')?;
    Some(vec![(k.trim().to_string(), v.trim().to_string())])
}

/// Parses configuration text. Mask paths are resolved against `base_dir`.
pub fn parse_config(text: &str, path: &Path, base_dir: &Path) -> Result<Vec<StageConfig>> {
    let err = |line: usize, msg: String| Error::Parse { path: path.to_path_buf(), line, msg };
    let mut stages: Vec<Raw> = Vec::new();
    for (k, line) in text.lines().enumerate() {
        let n = k + 1;
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if line.starts_with('[') {
            if line != "[stage]" {
                return Err(err(n, format!("unknown section `{line}`")));
            }
            stages.push(Raw { line: n, pairs: Vec::new() });
            continue;
        }
        let pairs = split_pairs(line).ok_or_else(|| err(n, format!("expected `key = value`, got `{line}`")))?;
        if stages.is_empty() {
            stages.push(Raw { line: n, pairs: Vec::new() });
        }
        let cur = stages.last_mut().expect("pushed");
        for (key, value) in pairs {
            if cur.pairs.iter().any(|(_, k, _)| *k == key) {
                return Err(err(n, format!("key `{key}` repeated in stage")));
            }
            cur.pairs.push((n, key, value));
        }
    }
    if stages.is_empty() {
        return Err(Error::Config(format!("{}: no stages defined", path.display())));
    }
    stages.iter().map(|raw| build_stage(raw, path, base_dir)).collect()
}

fn build_stage(raw: &Raw, path: &Path, base_dir: &Path) -> Result<StageConfig> {
    let err = |line: usize, msg: String| Error::Parse { path: path.to_path_buf(), line, msg };
    let invalid = |line: usize, key: &str, value: &str| err(line, format!("invalid value `{value}` for key `{key}`"));
    let find = |key: &str| raw.pairs.iter().find(|(_, k, _)| k == key).map(|(l, _, v)| (*l, v.as_str()));
    let num = |key: &str| -> Result<Option<f64>> {
        match find(key) {
            None => Ok(None),
            Some((l, v)) => match v.parse::<f64>() {
                Ok(x) if x.is_finite() => Ok(Some(x)),
                _ => Err(invalid(l, key, v)),
            },
        }
    };
    let int = |key: &str| -> Result<Option<usize>> {
        match find(key) {
            None => Ok(None),
            Some((l, v)) => v.parse::<usize>().map(Some).map_err(|_| invalid(l, key, v)),
        }
    };
    let flag = |key: &str| -> Result<Option<bool>> {
        match find(key) {
            None => Ok(None),
            Some((l, v)) => match v {
                "true" | "yes" | "1" => Ok(Some(true)),
                "false" | "no" | "0" => Ok(Some(false)),
                _ => Err(invalid(l, key, v)),
            },
        }
    };

    const KNOWN: [&str; 18] = [
        "transform", "metric", "representation", "gamma", "kernel_radius", "levels", "iterations", "grid_spacing",
        "mask", "preset", "bins", "normalize", "eta", "epsilon_center", "step", "min_step", "gradient", "prewarp",
    ];
    for (l, k, _) in &raw.pairs {
        if !KNOWN.contains(&k.as_str()) {
            return Err(err(*l, format!("unknown key `{k}`")));
        }
    }

    let (tl, tv) = find("transform").ok_or_else(|| Error::MissingKey { path: path.to_path_buf(), key: "transform".into() })?;
    let transform = TransformKind::parse(tv).ok_or_else(|| invalid(tl, "transform", tv))?;
    let metric = match find("metric") {
        None => MetricKind::Scalar(ScalarMetric::Ssd),
        Some((l, v)) => MetricKind::parse(v).ok_or_else(|| invalid(l, "metric", v))?,
    };
    let metric = match (metric, int("bins")?) {
        (MetricKind::Scalar(ScalarMetric::Nmi { .. }), Some(b)) if b >= 2 => MetricKind::Scalar(ScalarMetric::Nmi { bins: b }),
        (_, Some(b)) if b < 2 => return Err(invalid(find("bins").expect("present").0, "bins", &b.to_string())),
        (m, _) => m,
    };
    let mut gamma = 3.0;
    if let Some((l, v)) = find("preset") {
        gamma = preset_gamma(v).ok_or_else(|| invalid(l, "preset", v))?;
    }
    if let Some(g) = num("gamma")? {
        if g <= 0.0 {
            return Err(invalid(find("gamma").expect("present").0, "gamma", &g.to_string()));
        }
        gamma = g;
    }
    let representation = match find("representation") {
        None | Some((_, "vfc")) => RepresentationKind::Vfc(VfcParams {
            gamma,
            radius: int("kernel_radius")?.unwrap_or(DEFAULT_RADIUS),
            epsilon_center: num("epsilon_center")?.unwrap_or(DEFAULT_EPSILON_CENTER),
            normalize: flag("normalize")?.unwrap_or(true),
            ..VfcParams::default()
        }),
        Some((_, "ngf")) => RepresentationKind::Ngf { eta: num("eta")?.unwrap_or(DEFAULT_NOISE_ETA) },
        Some((_, "intensity")) => RepresentationKind::Intensity,
        Some((l, v)) => return Err(invalid(l, "representation", v)),
    };
    let mut stage = StageConfig::new(transform, metric, representation);
    if let Some((l, v)) = find("levels") {
        let levels: std::result::Result<Vec<usize>, _> =
            v.split(|c: char| c == ',' || c.is_whitespace()).filter(|t| !t.is_empty()).map(str::parse).collect();
        stage.levels = levels.map_err(|_| invalid(l, "levels", v))?;
    }
    if let Some(i) = int("iterations")? {
        stage.optimizer.max_iterations = i;
    }
    if let Some(s) = num("step")? {
        stage.optimizer.initial_step = s;
    }
    if let Some(s) = num("min_step")? {
        stage.optimizer.min_step = s;
    }
    if let Some((l, v)) = find("gradient") {
        stage.optimizer.gradient = match v {
            "analytic" => GradientMode::Analytic,
            "fd" | "finite_difference" => GradientMode::FiniteDifference,
            _ => return Err(invalid(l, "gradient", v)),
        };
    }
    stage.grid_spacing = num("grid_spacing")?;
    if let Some(p) = flag("prewarp")? {
        stage.prewarp = p;
    }
    if let Some((_, v)) = find("mask") {
        stage.mask = Some(read_labels(&base_dir.join(v))?);
    }
    stage.validate().map_err(|e| match e {
        Error::Config(m) => err(raw.line, m),
        other => other,
    })?;
    Ok(stage)
}

/// Reads a pipeline file; relative mask paths resolve against its directory.
pub fn read_config(path: &Path) -> Result<Vec<StageConfig>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config(&text, path, path.parent().unwrap_or(Path::new(".")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::registration::DEFAULT_LEVELS;

    fn parse(text: &str) -> Result<Vec<StageConfig>> {
        parse_config(text, Path::new("p.cfg"), Path::new("."))
    }

    #[test]
    fn minimal_config_takes_defaults() {
        let s = parse("transform=translation metric=ssd representation=vfc\n").unwrap();
        assert_eq!(s.len(), 1);
        let RepresentationKind::Vfc(p) = &s[0].representation else { panic!() };
        assert_eq!((p.gamma, p.radius), (3.0, 50));
        assert_eq!(s[0].levels, DEFAULT_LEVELS.to_vec());
        assert_eq!(s[0].transform, TransformKind::Translation);
    }

    #[test]
    fn sections_and_values() {
        let text = "# pipeline\n[stage]\ntransform = affine\nmetric = nmi\nbins = 16\nrepresentation = intensity\nlevels = 2, 1\n\n[stage]\ntransform = bspline\nrepresentation = vfc\ngamma = 2.5\ngrid_spacing = 10\niterations = 40\n";
        let s = parse(text).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s[0].metric, MetricKind::Scalar(ScalarMetric::Nmi { bins: 16 }));
        assert_eq!(s[0].levels, vec![2, 1]);
        let RepresentationKind::Vfc(p) = &s[1].representation else { panic!() };
        assert_eq!(p.gamma, 2.5);
        assert_eq!(s[1].grid_spacing, Some(10.0));
        assert_eq!(s[1].optimizer.max_iterations, 40);
        let preset = parse("transform = affine\npreset = brain\n").unwrap();
        let RepresentationKind::Vfc(p) = &preset[0].representation else { panic!() };
        assert_eq!(p.gamma, 4.0);
        assert_eq!(crate::metrics::DEFAULT_BINS, 32);
    }

    #[test]
    fn errors_name_the_key() {
        let e = parse("transform = affine\nmetric = foo\n").unwrap_err();
        assert!(matches!(&e, Error::Parse { line: 2, msg, .. } if msg.contains("metric") && msg.contains("foo")));
        let e = parse("transform = affine\ncolour = red\n").unwrap_err();
        assert!(matches!(&e, Error::Parse { msg, .. } if msg.contains("colour")));
        assert!(matches!(parse("# nothing\n"), Err(Error::Config(_))));
        assert!(matches!(parse("metric = ssd\n"), Err(Error::MissingKey { .. })));
        assert!(parse("transform = affine\nlevels = 1, 2\n").is_err());
        assert!(parse("transform = affine\ngamma = abc\n").is_err());
    }
}
