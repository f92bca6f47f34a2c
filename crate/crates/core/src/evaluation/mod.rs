//! Landmark error, label overlap, and translation-basin studies.

mod basin;
pub mod phantom;

pub use basin::{basin_analysis, translation_profile, BasinReport, ProfileMetadata, SimilarityProfile};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::transform::SpatialTransform;
use crate::volume::{GridGeometry, LabelVolume, Point};

/// Points in (possibly fractional) voxel indices of `geometry`.
#[derive(Clone, Debug, PartialEq)]
pub struct LandmarkSet {
    points: Vec<[f64; 3]>,
    geometry: GridGeometry,
}

impl LandmarkSet {
    pub fn new(points: Vec<[f64; 3]>, geometry: GridGeometry) -> Result<Self> {
        let n = geometry.ndim();
        for (i, p) in points.iter().enumerate() {
            if p.iter().any(|v| !v.is_finite()) || (n == 2 && p[2] != 0.0) {
                return Err(Error::Parameter(format!("landmark {i} is invalid: {p:?}")));
            }
        }
        Ok(LandmarkSet { points, geometry })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[[f64; 3]] {
        &self.points
    }

    pub fn geometry(&self) -> &GridGeometry {
        &self.geometry
    }

    /// Point `i` in millimetres.
    pub fn physical(&self, i: usize) -> Point {
        self.geometry.index_to_physical(&self.points[i])
    }
}

/// Per-point and summary target registration error in millimetres.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TreReport {
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
    pub per_point: Vec<f64>,
}

/// Distance between `t(fixed_i)` and `moving_i` for every pair.
pub fn tre<T: SpatialTransform + ?Sized>(fixed: &LandmarkSet, moving: &LandmarkSet, t: &T) -> Result<TreReport> {
    if fixed.len() != moving.len() {
        return Err(Error::CountMismatch(fixed.len(), moving.len()));
    }
    let per_point: Vec<f64> = (0..fixed.len())
        .map(|i| {
            let a = t.apply(&fixed.physical(i));
            let b = moving.physical(i);
            (0..3).map(|k| (a[k] - b[k]).powi(2)).sum::<f64>().sqrt()
        })
        .collect();
    let (mean, std) = mean_std(&per_point);
    Ok(TreReport { mean, std, per_point })
}

/// Mean and population standard deviation; zeros for an empty slice.
pub fn mean_std(v: &[f64]) -> (f64, f64) {
    if v.is_empty() {
        return (0.0, 0.0);
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// `2|A ∩ B| / (|A| + |B|)` for one label.
pub fn dice(a: &LabelVolume, b: &LabelVolume, label: u32) -> Result<f64> {
    a.geometry().ensure_same(b.geometry())?;
    if label == 0 {
        return Err(Error::Parameter("label 0 is background".into()));
    }
    let (mut na, mut nb, mut both) = (0usize, 0usize, 0usize);
    for (&x, &y) in a.labels().iter().zip(b.labels()) {
        let (ia, ib) = (x == label, y == label);
        na += ia as usize;
        nb += ib as usize;
        both += (ia && ib) as usize;
    }
    if na + nb == 0 {
        return Err(Error::BothEmpty(label));
    }
    Ok(2.0 * both as f64 / (na + nb) as f64)
}
