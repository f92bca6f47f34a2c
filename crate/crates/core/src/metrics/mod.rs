//! Similarity metrics on scalar volumes and vector fields.
//!
//! Every metric is also available at slice level together with its
//! derivative with respect to the moving samples, which is what the
//! registration engine differentiates through.

mod histogram;
mod scalar;

pub use histogram::JointHistogram;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::volume::{LabelVolume, ScalarVolume, VectorField};

pub(crate) use histogram::{nmi_slices, value_range};
pub(crate) use scalar::{ncc_slices, ssd_slices};

/// Default joint-histogram bin count.
pub const DEFAULT_BINS: usize = 32;

/// Whether larger or smaller values mean better alignment.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Orientation {
    Maximize,
    Minimize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MetricValue {
    pub value: f64,
    pub orientation: Orientation,
}

impl MetricValue {
    pub fn minimize(value: f64) -> Self {
        MetricValue { value, orientation: Orientation::Minimize }
    }

    pub fn maximize(value: f64) -> Self {
        MetricValue { value, orientation: Orientation::Maximize }
    }

    /// Value in minimisation form (maximised metrics negated).
    pub fn oriented(&self) -> f64 {
        match self.orientation {
            Orientation::Minimize => self.value,
            Orientation::Maximize => -self.value,
        }
    }
}

/// Scalar metrics usable inside the component average.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScalarMetric {
    Ssd,
    Ncc,
    Nmi { bins: usize },
}

/// Metric selector for registration and translation studies.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MetricKind {
    /// Component-averaged scalar metric (plain scalar metric on one channel).
    Scalar(ScalarMetric),
    /// `-mean <f, g>`.
    MeanDotProduct,
    /// `-1/2 mean <f, g>`.
    Ngf,
}

impl MetricKind {
    pub fn name(&self) -> &'static str {
        match self {
            MetricKind::Scalar(ScalarMetric::Ssd) => "ssd",
            MetricKind::Scalar(ScalarMetric::Ncc) => "ncc",
            MetricKind::Scalar(ScalarMetric::Nmi { .. }) => "nmi",
            MetricKind::MeanDotProduct => "mean_dot_product",
            MetricKind::Ngf => "ngf",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "ssd" => MetricKind::Scalar(ScalarMetric::Ssd),
            "ncc" => MetricKind::Scalar(ScalarMetric::Ncc),
            "nmi" => MetricKind::Scalar(ScalarMetric::Nmi { bins: DEFAULT_BINS }),
            "mean_dot_product" | "mdp" => MetricKind::MeanDotProduct,
            "ngf" => MetricKind::Ngf,
            _ => return None,
        })
    }

    pub fn orientation(&self) -> Orientation {
        match self {
            MetricKind::Scalar(ScalarMetric::Ncc) | MetricKind::Scalar(ScalarMetric::Nmi { .. }) => {
                Orientation::Maximize
            }
            _ => Orientation::Minimize,
        }
    }
}

fn mask_slice<'a>(
    geometry: &crate::volume::GridGeometry,
    mask: Option<&'a LabelVolume>,
) -> Result<Option<&'a [u32]>> {
    match mask {
        Some(m) => {
            geometry.ensure_same(m.geometry())?;
            Ok(Some(m.labels()))
        }
        None => Ok(None),
    }
}

/// Mean squared difference.
pub fn ssd(a: &ScalarVolume, b: &ScalarVolume, mask: Option<&LabelVolume>) -> Result<MetricValue> {
    a.geometry().ensure_same(b.geometry())?;
    let m = mask_slice(a.geometry(), mask)?;
    Ok(MetricValue::minimize(ssd_slices(a.values(), b.values(), m, None)?))
}

/// Global Pearson correlation.
pub fn ncc(a: &ScalarVolume, b: &ScalarVolume, mask: Option<&LabelVolume>) -> Result<MetricValue> {
    a.geometry().ensure_same(b.geometry())?;
    let m = mask_slice(a.geometry(), mask)?;
    Ok(MetricValue::maximize(ncc_slices(a.values(), b.values(), m, None)?))
}

/// `(H(A) + H(B)) / H(A, B)` from a partial-volume joint histogram over the
/// masked value ranges.
pub fn nmi(a: &ScalarVolume, b: &ScalarVolume, bins: usize, mask: Option<&LabelVolume>) -> Result<MetricValue> {
    a.geometry().ensure_same(b.geometry())?;
    let m = mask_slice(a.geometry(), mask)?;
    let ra = value_range(a.values(), m)?;
    let rb = value_range(b.values(), m)?;
    Ok(MetricValue::maximize(nmi_slices(a.values(), b.values(), m, bins, ra, rb, None)?))
}

fn dot_mean(f: &VectorField, g: &VectorField, mask: Option<&LabelVolume>) -> Result<f64> {
    f.geometry().ensure_same(g.geometry())?;
    if f.n_components() != g.n_components() {
        return Err(Error::GeometryMismatch("fields differ in component count".into()));
    }
    let m = mask_slice(f.geometry(), mask)?;
    let n = f.geometry().len();
    let active = |i: usize| m.is_none_or(|m| m[i] != 0);
    let count = (0..n).filter(|&i| active(i)).count();
    if count == 0 {
        return Err(Error::EmptySupport("no voxels in mask".into()));
    }
    let sum = crate::par::sum(n, |i| {
        if active(i) {
            f.components().iter().zip(g.components()).map(|(a, b)| a[i] * b[i]).sum()
        } else {
            0.0
        }
    });
    Ok(sum / count as f64)
}

/// `-(1/|Ω|) Σ <f, g>`, minimised.
pub fn mean_dot_product(f: &VectorField, g: &VectorField, mask: Option<&LabelVolume>) -> Result<MetricValue> {
    Ok(MetricValue::minimize(-dot_mean(f, g, mask)?))
}

/// `-1/2` times the mean inner product of two normalized gradient fields.
pub fn ngf_metric(f: &VectorField, g: &VectorField) -> Result<MetricValue> {
    Ok(MetricValue::minimize(-0.5 * dot_mean(f, g, None)?))
}

/// Average of `inner` over the field components. Any degenerate component
/// fails the whole metric.
pub fn vector_field_similarity(
    df: &VectorField,
    dg: &VectorField,
    inner: ScalarMetric,
    mask: Option<&LabelVolume>,
) -> Result<MetricValue> {
    df.geometry().ensure_same(dg.geometry())?;
    if df.n_components() != dg.n_components() {
        return Err(Error::GeometryMismatch("fields differ in component count".into()));
    }
    let n = df.n_components();
    let mut total = 0.0;
    let mut orientation = Orientation::Minimize;
    for c in 0..n {
        let (a, b) = (df.component_volume(c), dg.component_volume(c));
        let v = match inner {
            ScalarMetric::Ssd => ssd(&a, &b, mask)?,
            ScalarMetric::Ncc => ncc(&a, &b, mask)?,
            ScalarMetric::Nmi { bins } => nmi(&a, &b, bins, mask)?,
        };
        orientation = v.orientation;
        total += v.value;
    }
    Ok(MetricValue { value: total / n as f64, orientation })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::volume::GridGeometry;

    fn unit_field(g: &GridGeometry, v: [f64; 3]) -> VectorField {
        let n = g.len();
        VectorField::new(g.clone(), (0..g.ndim()).map(|c| vec![v[c]; n]).collect()).unwrap()
    }

    #[test]
    fn dot_product_metrics() {
        let g = GridGeometry::unit(&[3, 4, 2]).unwrap();
        let f = unit_field(&g, [0.6, 0.8, 0.0]);
        let o = unit_field(&g, [-0.8, 0.6, 0.0]);
        assert!((mean_dot_product(&f, &f, None).unwrap().value + 1.0).abs() < 1e-15);
        assert!((mean_dot_product(&f, &f.negated(), None).unwrap().value - 1.0).abs() < 1e-15);
        assert!(mean_dot_product(&f, &o, None).unwrap().value.abs() < 1e-15);
        assert!((ngf_metric(&f, &f).unwrap().value + 0.5).abs() < 1e-15);
        assert!((ngf_metric(&f, &f.negated()).unwrap().value - 0.5).abs() < 1e-15);
        assert_eq!(ngf_metric(&VectorField::zeros(g.clone()), &f).unwrap().value, 0.0);
    }

    #[test]
    fn mean_dot_product_is_bilinear() {
        let g = GridGeometry::unit(&[4, 4]).unwrap();
        let f = VectorField::new(g.clone(), vec![(0..16).map(|i| i as f64).collect(), vec![0.5; 16]]).unwrap();
        let h = VectorField::new(g.clone(), vec![(0..16).map(|i| (i as f64).sin()).collect(), vec![-1.0; 16]]).unwrap();
        let h3 = VectorField::new(g, h.components().iter().map(|c| c.iter().map(|x| 3.0 * x).collect()).collect()).unwrap();
        let a = mean_dot_product(&f, &h, None).unwrap().value;
        let b = mean_dot_product(&f, &h3, None).unwrap().value;
        assert!((3.0 * a - b).abs() < 1e-12);
    }

    #[test]
    fn component_average_of_ssd() {
        let g = GridGeometry::unit(&[2, 2]).unwrap();
        let df = VectorField::new(g.clone(), vec![vec![0.0; 4], vec![0.0; 4]]).unwrap();
        // Component 1 SSD 0.2, component 2 SSD 0.4.
        let a = 0.2f64.sqrt();
        let b = 0.4f64.sqrt();
        let dg = VectorField::new(g, vec![vec![a; 4], vec![b; 4]]).unwrap();
        let v = vector_field_similarity(&df, &dg, ScalarMetric::Ssd, None).unwrap();
        assert!((v.value - 0.3).abs() < 1e-12);
        assert_eq!(vector_field_similarity(&df, &df, ScalarMetric::Ssd, None).unwrap().value, 0.0);
    }

    #[test]
    fn component_average_of_ncc_and_failure() {
        let g = GridGeometry::unit(&[3, 3]).unwrap();
        let f = VectorField::new(
            g.clone(),
            vec![(0..9).map(|i| i as f64).collect(), (0..9).map(|i| (i * i) as f64).collect()],
        )
        .unwrap();
        let v = vector_field_similarity(&f, &f, ScalarMetric::Ncc, None).unwrap();
        assert!((v.value - 1.0).abs() < 1e-12);
        assert_eq!(v.orientation, Orientation::Maximize);
        let flat = VectorField::new(g, vec![(0..9).map(|i| i as f64).collect(), vec![1.0; 9]]).unwrap();
        assert!(matches!(
            vector_field_similarity(&flat, &flat, ScalarMetric::Ncc, None),
            Err(Error::UndefinedMetric(_))
        ));
    }

    #[test]
    fn metric_kind_names_round_trip() {
        for name in ["ssd", "ncc", "nmi", "mean_dot_product", "ngf"] {
            assert_eq!(MetricKind::parse(name).unwrap().name(), name);
        }
        assert!(MetricKind::parse("foo").is_none());
    }
}
