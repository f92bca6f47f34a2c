use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::MetricKind;
use crate::registration::{represent, Objective, RepresentationKind};
use crate::transform::{Transform, TranslationTransform};
use crate::volume::{LabelVolume, ScalarVolume};

/// Settings recorded with a profile.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileMetadata {
    pub metric: String,
    pub representation: String,
    pub gamma: Option<f64>,
    pub noise_percent: Option<f64>,
    pub seed: Option<u64>,
}

/// Oriented (minimised) metric against whole-voxel shifts along one axis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimilarityProfile {
    pub axis: usize,
    pub shifts: Vec<i64>,
    pub values: Vec<f64>,
    pub metadata: ProfileMetadata,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BasinReport {
    pub global_min_shift: i64,
    pub local_minima_count: usize,
    pub capture_range: i64,
}

/// Compares `fixed(x)` with `moving(x + s e_axis)` for every shift `s`.
///
/// Representations are built once; shifting is exact because every sample
/// lands on a voxel centre. Only voxels that stay inside the grid under the
/// largest shift are compared, so the support does not depend on `s`.
pub fn translation_profile(
    fixed: &ScalarVolume,
    moving: &ScalarVolume,
    representation: &RepresentationKind,
    metric: MetricKind,
    axis: usize,
    shifts: &[i64],
) -> Result<SimilarityProfile> {
    let g = fixed.geometry();
    g.ensure_same(moving.geometry())?;
    if axis >= g.ndim() {
        return Err(Error::Parameter(format!("axis {axis} out of range for a {}-D image", g.ndim())));
    }
    if shifts.windows(2).any(|w| w[0] >= w[1]) || shifts.is_empty() {
        return Err(Error::Parameter("shifts must be non-empty and strictly increasing".into()));
    }
    let reach = shifts.iter().map(|s| s.unsigned_abs() as usize).max().unwrap_or(0);
    let n = g.dims()[axis];
    if n <= 2 * reach {
        return Err(Error::EmptySupport(format!("shift reach {reach} leaves no overlap on an axis of {n} voxels")));
    }
    let support = LabelVolume::new(
        g.clone(),
        (0..g.len()).map(|i| {
            let c = g.voxel_coords(i)[axis];
            (c >= reach && c < n - reach) as u32
        })
        .collect(),
    )?;
    let (rf, rm) = crate::par::join(|| represent(fixed, representation), || represent(moving, representation));
    let (rf, rm) = (rf?, rm?);
    let obj = Objective::new(&rf, &rm, metric, Some(&support))?;
    let step = g.spacing()[axis];
    let values = crate::par::map(shifts.len(), |k| {
        let mut offset = vec![0.0; g.ndim()];
        offset[axis] = shifts[k] as f64 * step;
        let t: Transform = TranslationTransform::new(&offset).into();
        obj.oriented(&t)
    })
    .into_iter()
    .collect::<Result<Vec<f64>>>()?;
    let gamma = match representation {
        RepresentationKind::Vfc(p) => Some(p.gamma),
        _ => None,
    };
    Ok(SimilarityProfile {
        axis,
        shifts: shifts.to_vec(),
        values,
        metadata: ProfileMetadata {
            metric: metric.name().into(),
            representation: representation.name().into(),
            gamma,
            noise_percent: None,
            seed: None,
        },
    })
}

/// Local minima and capture range of a profile.
///
/// Runs of equal values count as one sample. A minimum is a run strictly
/// below both neighbouring runs; a global minimum at either end also counts.
/// The capture range spans the samples from which the profile descends
/// monotonically (non-strictly) into the global minimum.
pub fn basin_analysis(p: &SimilarityProfile) -> Result<BasinReport> {
    let v = &p.values;
    if v.len() < 5 || v.len() != p.shifts.len() {
        return Err(Error::Parameter(format!("basin analysis needs at least 5 samples, got {}", v.len())));
    }
    let g = (0..v.len()).fold(0, |b, i| if v[i] < v[b] { i } else { b });
    let mut runs: Vec<(usize, usize)> = Vec::new();
    for i in 0..v.len() {
        match runs.last_mut() {
            Some(r) if v[r.1] == v[i] => r.1 = i,
            _ => runs.push((i, i)),
        }
    }
    let mut count = (1..runs.len().saturating_sub(1))
        .filter(|&k| v[runs[k].0] < v[runs[k - 1].0] && v[runs[k].0] < v[runs[k + 1].0])
        .count();
    let g_run = runs.iter().position(|r| r.0 <= g && g <= r.1).expect("global minimum lies in a run");
    if g_run == 0 || g_run == runs.len() - 1 {
        count += 1;
    }
    let mut lo = g;
    while lo > 0 && v[lo - 1] >= v[lo] {
        lo -= 1;
    }
    let mut hi = g;
    while hi + 1 < v.len() && v[hi + 1] >= v[hi] {
        hi += 1;
    }
    Ok(BasinReport {
        global_min_shift: p.shifts[g],
        local_minima_count: count,
        capture_range: p.shifts[hi] - p.shifts[lo],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::ScalarMetric;
    use crate::repr::VfcParams;
    use crate::volume::GridGeometry;

    fn profile(values: Vec<f64>) -> SimilarityProfile {
        let h = (values.len() / 2) as i64;
        SimilarityProfile {
            axis: 0,
            shifts: (-h..-h + values.len() as i64).collect(),
            values,
            metadata: ProfileMetadata {
                metric: "ssd".into(),
                representation: "intensity".into(),
                gamma: None,
                noise_percent: None,
                seed: None,
            },
        }
    }

    #[test]
    fn parabola_has_one_minimum_and_full_capture() {
        let p = profile((-5..=5).map(|s| (s * s) as f64).collect());
        let b = basin_analysis(&p).unwrap();
        assert_eq!(b, BasinReport { global_min_shift: 0, local_minima_count: 1, capture_range: 10 });
    }

    #[test]
    fn w_shape_has_two_minima() {
        let p = profile(vec![4.0, 2.0, 1.0, 2.0, 3.0, 2.0, 0.5, 2.0, 4.0]);
        let b = basin_analysis(&p).unwrap();
        assert_eq!(b.local_minima_count, 2);
        assert_eq!(b.global_min_shift, 2);
        assert_eq!(b.capture_range, 4);
    }

    #[test]
    fn plateaus_and_edges() {
        let p = profile(vec![3.0, 1.0, 1.0, 1.0, 3.0]);
        assert_eq!(basin_analysis(&p).unwrap().local_minima_count, 1);
        let mono = profile(vec![5.0, 4.0, 3.0, 2.0, 1.0]);
        let b = basin_analysis(&mono).unwrap();
        assert_eq!((b.local_minima_count, b.capture_range, b.global_min_shift), (1, 4, 2));
        assert!(basin_analysis(&profile(vec![1.0; 4])).is_err());
    }

    fn symmetric_image() -> ScalarVolume {
        let g = GridGeometry::unit(&[41, 31]).unwrap();
        ScalarVolume::from_fn(g, |p| {
            let (x, y) = (p[0] - 20.0, p[1] - 15.0);
            100.0 * (-(x * x / 40.0 + y * y / 30.0)).exp() + 40.0 * (-(x * x) / 8.0).exp() * (y / 5.0).cos()
        })
        .unwrap()
    }

    #[test]
    fn self_profiles_are_minimal_at_zero_and_symmetric() {
        let v = symmetric_image();
        let shifts: Vec<i64> = (-8..=8).collect();
        let vfc = RepresentationKind::Vfc(VfcParams { radius: 12, ..VfcParams::default() });
        for (rep, metric) in [
            (RepresentationKind::Intensity, MetricKind::Scalar(ScalarMetric::Ssd)),
            (RepresentationKind::Intensity, MetricKind::Scalar(ScalarMetric::Ncc)),
            (vfc.clone(), MetricKind::MeanDotProduct),
            (RepresentationKind::Ngf { eta: 0.1 }, MetricKind::Ngf),
        ] {
            let p = translation_profile(&v, &v, &rep, metric, 0, &shifts).unwrap();
            let b = basin_analysis(&p).unwrap();
            assert_eq!(b.global_min_shift, 0, "{}", metric.name());
            for k in 0..8 {
                assert!((p.values[k] - p.values[16 - k]).abs() < 1e-6, "{} {k}", metric.name());
            }
        }
    }

    #[test]
    fn normalized_self_profile_reaches_minus_one() {
        let v = symmetric_image();
        let vfc = RepresentationKind::Vfc(VfcParams { radius: 12, ..VfcParams::default() });
        let p = translation_profile(&v, &v, &vfc, MetricKind::MeanDotProduct, 1, &[-2, -1, 0, 1, 2]).unwrap();
        // Corners farther than the kernel reach from any edge stay below unit length.
        assert!(p.values[2] < -0.8 && p.values[2] >= -1.0 - 1e-12);
        assert!(p.values.iter().all(|&x| x >= p.values[2]));
    }

    #[test]
    fn profile_matches_objective_on_shifted_copy() {
        let v = symmetric_image();
        let p = translation_profile(&v, &v, &RepresentationKind::Intensity, MetricKind::Scalar(ScalarMetric::Ssd), 0, &[-3, 0, 3])
            .unwrap();
        // Direct evaluation on the support [3, 37].
        let g = v.geometry();
        let mut s = 0.0;
        let mut n = 0.0;
        for j in 0..31 {
            for i in 3..38 {
                let d = v.get(i, j, 0) - v.get(i + 3, j, 0);
                s += d * d;
                n += 1.0;
            }
        }
        assert!((p.values[2] - s / n).abs() < 1e-9 * (1.0 + s / n));
        assert_eq!(g.dims()[0], 41);
    }

    #[test]
    fn support_must_remain() {
        let v = symmetric_image();
        let r = translation_profile(&v, &v, &RepresentationKind::Intensity, MetricKind::Scalar(ScalarMetric::Ssd), 1, &[-16, 16]);
        assert!(matches!(r, Err(Error::EmptySupport(_))));
    }
}
