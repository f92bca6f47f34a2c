//! Multi-stage, multi-resolution registration.
//!
//! Each stage warps the moving image by the transform accumulated so far,
//! then optimizes its own transform coarse to fine. At every pyramid level
//! both images are downsampled, their representations are rebuilt, and the
//! moving representation is warped channel by channel inside the metric.

mod objective;
mod optimizer;

pub use objective::{objective, represent, Objective, Representation, Stencil};
pub use optimizer::{optimize_level, GradientMode, LevelOutcome, OptimizerParams};

use std::time::{Duration, Instant};

use crate::error::{Error, Result};
use crate::metrics::MetricKind;
use crate::repr::{VfcParams, DEFAULT_NOISE_ETA};
use crate::transform::{AffineTransform, BSplineTransform, CompositeTransform, Transform, TranslationTransform};
use crate::volume::{downsample, resample, GridGeometry, LabelVolume, ScalarVolume};

/// Default pyramid, coarse to fine.
pub const DEFAULT_LEVELS: [usize; 3] = [4, 2, 1];
/// Control-point spacing (voxels) of the last B-spline stage.
pub const DEFAULT_FINAL_GRID_SPACING: f64 = 8.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TransformKind {
    Translation,
    Affine,
    BSpline,
}

impl TransformKind {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "translation" => Some(TransformKind::Translation),
            "affine" => Some(TransformKind::Affine),
            "bspline" | "b-spline" => Some(TransformKind::BSpline),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            TransformKind::Translation => "translation",
            TransformKind::Affine => "affine",
            TransformKind::BSpline => "bspline",
        }
    }
}

/// What the metric compares.
#[derive(Clone, Debug, PartialEq)]
pub enum RepresentationKind {
    Intensity,
    Vfc(VfcParams),
    Ngf { eta: f64 },
}

impl RepresentationKind {
    pub fn name(&self) -> &'static str {
        match self {
            RepresentationKind::Intensity => "intensity",
            RepresentationKind::Vfc(_) => "vfc",
            RepresentationKind::Ngf { .. } => "ngf",
        }
    }

    /// Representation with default parameters.
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "intensity" => Some(RepresentationKind::Intensity),
            "vfc" => Some(RepresentationKind::Vfc(VfcParams::default())),
            "ngf" => Some(RepresentationKind::Ngf { eta: DEFAULT_NOISE_ETA }),
            _ => None,
        }
    }
}

/// One registration stage.
#[derive(Clone, Debug, PartialEq)]
pub struct StageConfig {
    pub transform: TransformKind,
    pub metric: MetricKind,
    pub representation: RepresentationKind,
    /// Downsampling factors, coarse to fine.
    pub levels: Vec<usize>,
    pub optimizer: OptimizerParams,
    /// B-spline control spacing in fixed-image voxels; `None` picks the
    /// stage's place in the halving schedule.
    pub grid_spacing: Option<f64>,
    /// Restricts the metric to nonzero voxels of this fixed-grid mask.
    pub mask: Option<LabelVolume>,
    /// Resample the moving image through the previous stages before this
    /// one (otherwise the previous stages are chained inside the metric).
    pub prewarp: bool,
}

impl StageConfig {
    pub fn new(transform: TransformKind, metric: MetricKind, representation: RepresentationKind) -> Self {
        StageConfig {
            transform,
            metric,
            representation,
            levels: DEFAULT_LEVELS.to_vec(),
            optimizer: OptimizerParams::default(),
            grid_spacing: None,
            mask: None,
            prewarp: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.levels.is_empty() || self.levels.contains(&0) {
            return Err(Error::Config("levels must be a non-empty list of positive factors".into()));
        }
        if self.levels.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::Config(format!("levels {:?} are not ordered coarse to fine", self.levels)));
        }
        if let Some(s) = self.grid_spacing {
            if !(s > 0.0) {
                return Err(Error::Config(format!("grid_spacing must be positive, got {s}")));
            }
        }
        self.optimizer.validate()
    }
}

/// Objective history of one pyramid level.
#[derive(Clone, Debug, PartialEq)]
pub struct LevelTrace {
    pub stage: usize,
    pub level: usize,
    pub factor: usize,
    pub values: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Clone, Debug)]
pub struct RegistrationResult {
    /// Maps fixed physical points into the moving image.
    pub transform: Transform,
    pub traces: Vec<LevelTrace>,
    pub wall_time: Duration,
    pub converged: bool,
}

/// A stage failed; `partial` holds everything completed before it.
#[derive(Debug, thiserror::Error)]
#[error("stage {stage} failed: {error}")]
pub struct RegistrationFailure {
    pub stage: usize,
    pub error: Error,
    pub partial: Box<RegistrationResult>,
}

/// Progress notification after each optimizer iteration.
#[derive(Clone, Copy, Debug)]
pub struct Progress {
    pub stage: usize,
    pub level: usize,
    pub iteration: usize,
    pub metric: f64,
}

fn initial_transform(kind: TransformKind, fixed: &GridGeometry, spacing_vox: f64) -> Result<Transform> {
    Ok(match kind {
        TransformKind::Translation => TranslationTransform::zero(fixed.ndim()).into(),
        TransformKind::Affine => AffineTransform::centered(fixed).into(),
        TransformKind::BSpline => {
            let mm: Vec<f64> = fixed.spacing().iter().map(|s| s * spacing_vox).collect();
            BSplineTransform::covering(fixed, &mm)?.into()
        }
    })
}

/// Control spacing per stage: explicit values win, the rest double going
/// backwards from the final B-spline stage.
fn grid_schedule(stages: &[StageConfig]) -> Vec<f64> {
    let bspline: Vec<usize> = (0..stages.len()).filter(|&i| stages[i].transform == TransformKind::BSpline).collect();
    let mut out = vec![DEFAULT_FINAL_GRID_SPACING; stages.len()];
    for (rank, &i) in bspline.iter().enumerate() {
        let halvings = (bspline.len() - 1 - rank) as i32;
        out[i] = stages[i].grid_spacing.unwrap_or(DEFAULT_FINAL_GRID_SPACING * 2f64.powi(halvings));
    }
    out
}

fn downsample_mask(mask: &LabelVolume, level: &GridGeometry, factor: usize) -> LabelVolume {
    let src = mask.geometry();
    let labels = (0..level.len())
        .map(|i| {
            let [a, b, c] = level.voxel_coords(i);
            let n = src.ndim();
            let k = if n == 3 { c * factor } else { 0 };
            mask.labels()[src.linear_index(a * factor, b * factor, k)]
        })
        .collect();
    LabelVolume::new(level.clone(), labels).expect("level grid matches label count")
}

/// Runs `stages` in order without progress reporting.
pub fn register(
    stages: &[StageConfig],
    fixed: &ScalarVolume,
    moving: &ScalarVolume,
) -> std::result::Result<RegistrationResult, RegistrationFailure> {
    register_with_progress(stages, fixed, moving, &mut |_| {})
}

/// Runs `stages` in order, reporting every optimizer iteration.
pub fn register_with_progress(
    stages: &[StageConfig],
    fixed: &ScalarVolume,
    moving: &ScalarVolume,
    progress: &mut dyn FnMut(&Progress),
) -> std::result::Result<RegistrationResult, RegistrationFailure> {
    let start = Instant::now();
    let ndim = fixed.geometry().ndim();
    let mut result = RegistrationResult {
        transform: Transform::Composite(
            CompositeTransform::new(vec![Transform::identity(ndim)]).expect("single item"),
        ),
        traces: Vec::new(),
        wall_time: Duration::ZERO,
        converged: true,
    };
    let mut total: Option<Transform> = None;
    let schedule = grid_schedule(stages);
    let fail = |stage: usize, error: Error, mut partial: RegistrationResult| {
        partial.wall_time = start.elapsed();
        RegistrationFailure { stage, error, partial: Box::new(partial) }
    };
    if stages.is_empty() {
        return Err(fail(0, Error::Config("pipeline has no stages".into()), result));
    }
    if ndim != moving.geometry().ndim() {
        return Err(fail(0, Error::GeometryMismatch("fixed and moving differ in dimensionality".into()), result));
    }
    for (s, stage) in stages.iter().enumerate() {
        let outcome = run_stage(s, stage, schedule[s], fixed, moving, total.as_ref(), progress);
        match outcome {
            Ok((t, traces)) => {
                result.converged &= traces.iter().all(|l| l.converged);
                result.traces.extend(traces);
                let next = match total.take() {
                    Some(prev) => prev.compose(t),
                    None => Transform::Composite(CompositeTransform::new(vec![t]).expect("single item")),
                };
                result.transform = next.clone();
                total = Some(next);
            }
            Err(e) => return Err(fail(s, e, result)),
        }
    }
    result.wall_time = start.elapsed();
    Ok(result)
}

fn run_stage(
    s: usize,
    stage: &StageConfig,
    spacing_vox: f64,
    fixed: &ScalarVolume,
    moving: &ScalarVolume,
    previous: Option<&Transform>,
    progress: &mut dyn FnMut(&Progress),
) -> Result<(Transform, Vec<LevelTrace>)> {
    stage.validate()?;
    if let Some(m) = &stage.mask {
        fixed.geometry().ensure_same(m.geometry())?;
    }
    let ndim = fixed.geometry().ndim();
    let prewarped;
    let (source, outer) = match previous {
        Some(t) if stage.prewarp => {
            prewarped = resample(moving, t, fixed.geometry());
            (&prewarped, None)
        }
        Some(t) => (moving, Some(t)),
        None => (moving, None),
    };
    let mut t = initial_transform(stage.transform, fixed.geometry(), spacing_vox)?;
    let mut traces = Vec::new();
    for (l, &factor) in stage.levels.iter().enumerate() {
        let f = vec![factor; ndim];
        let fixed_l = downsample(fixed, &f)?;
        let moving_l = downsample(source, &f)?;
        let (rep_f, rep_m) = crate::par::join(
            || represent(&fixed_l, &stage.representation),
            || represent(&moving_l, &stage.representation),
        );
        let (rep_f, rep_m) = (rep_f?, rep_m?);
        let mask_l = stage.mask.as_ref().map(|m| downsample_mask(m, fixed_l.geometry(), factor));
        let mut obj = Objective::new(&rep_f, &rep_m, stage.metric, mask_l.as_ref())?;
        if let Some(o) = outer {
            obj = obj.with_outer(o);
        }
        let out = optimize_level(&obj, t, &stage.optimizer, &mut |iteration, metric| {
            progress(&Progress { stage: s, level: l, iteration, metric })
        })?;
        traces.push(LevelTrace {
            stage: s,
            level: l,
            factor,
            values: out.trace,
            iterations: out.iterations,
            converged: out.converged,
        });
        t = out.transform;
    }
    Ok((t, traces))
}
