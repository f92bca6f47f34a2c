//! Transform models mapping fixed-image physical points into the moving
//! image (pull-back convention).

mod affine;
mod bspline;

pub use affine::{AffineTransform, TranslationTransform};
pub use bspline::{bspline_weights, BSplineTransform};

use crate::error::{Error, Result};
use crate::volume::{GridGeometry, Point};

/// Anything that maps a physical point to a physical point.
pub trait SpatialTransform: Sync {
    fn apply(&self, p: &Point) -> Point;
}

/// A transform with a flat parameter vector that the optimizer can drive.
pub trait Parametric: SpatialTransform {
    fn n_parameters(&self) -> usize;
    fn parameters(&self) -> Vec<f64>;
    fn set_parameters(&mut self, p: &[f64]) -> Result<()>;

    /// Adds `v^T dT(x)/dp` into `grad` (length `n_parameters`).
    fn accumulate_jacobian(&self, x: &Point, v: &[f64; 3], grad: &mut [f64]);

    /// Millimetres of point motion caused by a unit change of each parameter
    /// over `domain`; used to put parameters on a common scale.
    fn parameter_scales(&self, domain: &GridGeometry) -> Vec<f64>;
}

fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::LengthMismatch { expected, got })
    }
}

/// Any supported transform model.
#[derive(Clone, Debug, PartialEq)]
pub enum Transform {
    Translation(TranslationTransform),
    Affine(AffineTransform),
    BSpline(BSplineTransform),
    Composite(CompositeTransform),
}

impl Transform {
    /// Zero translation.
    pub fn identity(ndim: usize) -> Self {
        Transform::Translation(TranslationTransform::zero(ndim))
    }

    pub fn ndim(&self) -> usize {
        match self {
            Transform::Translation(t) => t.ndim(),
            Transform::Affine(t) => t.ndim(),
            Transform::BSpline(t) => t.ndim(),
            Transform::Composite(c) => c.items[0].ndim(),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Transform::Translation(_) => "translation",
            Transform::Affine(_) => "affine",
            Transform::BSpline(_) => "bspline",
            Transform::Composite(_) => "composite",
        }
    }

    /// `self ∘ inner`: applies `inner` first.
    pub fn compose(self, inner: Transform) -> Transform {
        let mut items = match self {
            Transform::Composite(c) => c.items,
            t => vec![t],
        };
        match inner {
            Transform::Composite(c) => items.extend(c.items),
            t => items.push(t),
        }
        Transform::Composite(CompositeTransform { items })
    }
}

impl SpatialTransform for Transform {
    fn apply(&self, p: &Point) -> Point {
        match self {
            Transform::Translation(t) => t.apply(p),
            Transform::Affine(t) => t.apply(p),
            Transform::BSpline(t) => t.apply(p),
            Transform::Composite(t) => t.apply(p),
        }
    }
}

impl Parametric for Transform {
    fn n_parameters(&self) -> usize {
        match self {
            Transform::Translation(t) => t.n_parameters(),
            Transform::Affine(t) => t.n_parameters(),
            Transform::BSpline(t) => t.n_parameters(),
            Transform::Composite(t) => t.items.iter().map(|t| t.n_parameters()).sum(),
        }
    }

    fn parameters(&self) -> Vec<f64> {
        match self {
            Transform::Translation(t) => t.parameters(),
            Transform::Affine(t) => t.parameters(),
            Transform::BSpline(t) => t.parameters(),
            Transform::Composite(t) => t.items.iter().flat_map(|t| t.parameters()).collect(),
        }
    }

    fn set_parameters(&mut self, p: &[f64]) -> Result<()> {
        match self {
            Transform::Translation(t) => t.set_parameters(p),
            Transform::Affine(t) => t.set_parameters(p),
            Transform::BSpline(t) => t.set_parameters(p),
            Transform::Composite(t) => {
                check_len(t.items.iter().map(|t| t.n_parameters()).sum(), p.len())?;
                let mut at = 0;
                for item in &mut t.items {
                    let n = item.n_parameters();
                    item.set_parameters(&p[at..at + n])?;
                    at += n;
                }
                Ok(())
            }
        }
    }

    fn accumulate_jacobian(&self, x: &Point, v: &[f64; 3], grad: &mut [f64]) {
        match self {
            Transform::Translation(t) => t.accumulate_jacobian(x, v, grad),
            Transform::Affine(t) => t.accumulate_jacobian(x, v, grad),
            Transform::BSpline(t) => t.accumulate_jacobian(x, v, grad),
            Transform::Composite(t) => t.accumulate_jacobian_numeric(x, v, grad),
        }
    }

    fn parameter_scales(&self, domain: &GridGeometry) -> Vec<f64> {
        match self {
            Transform::Translation(t) => t.parameter_scales(domain),
            Transform::Affine(t) => t.parameter_scales(domain),
            Transform::BSpline(t) => t.parameter_scales(domain),
            Transform::Composite(t) => t.items.iter().flat_map(|t| t.parameter_scales(domain)).collect(),
        }
    }
}

impl From<TranslationTransform> for Transform {
    fn from(t: TranslationTransform) -> Self {
        Transform::Translation(t)
    }
}

impl From<AffineTransform> for Transform {
    fn from(t: AffineTransform) -> Self {
        Transform::Affine(t)
    }
}

impl From<BSplineTransform> for Transform {
    fn from(t: BSplineTransform) -> Self {
        Transform::BSpline(t)
    }
}

/// Ordered list of transforms evaluated last-to-first.
#[derive(Clone, Debug, PartialEq)]
pub struct CompositeTransform {
    items: Vec<Transform>,
}

impl CompositeTransform {
    pub fn new(items: Vec<Transform>) -> Result<Self> {
        if items.is_empty() {
            return Err(Error::Parameter("composite transform needs at least one item".into()));
        }
        let n = items[0].ndim();
        if items.iter().any(|t| t.ndim() != n) {
            return Err(Error::Parameter("composite items differ in dimensionality".into()));
        }
        Ok(CompositeTransform { items })
    }

    pub fn items(&self) -> &[Transform] {
        &self.items
    }

    // Central differences through the chain; stages never optimize a
    // composite, so this only has to be correct.
    fn accumulate_jacobian_numeric(&self, x: &Point, v: &[f64; 3], grad: &mut [f64]) {
        let mut probe = self.clone();
        let mut p: Vec<f64> = self.items.iter().flat_map(|t| t.parameters()).collect();
        for i in 0..p.len() {
            let h = 1e-6 * p[i].abs().max(1.0);
            let orig = p[i];
            p[i] = orig + h;
            probe = set_all(probe, &p);
            let up = probe.apply(x);
            p[i] = orig - h;
            probe = set_all(probe, &p);
            let dn = probe.apply(x);
            p[i] = orig;
            grad[i] += (0..3).map(|k| v[k] * (up[k] - dn[k]) / (2.0 * h)).sum::<f64>();
        }
    }
}

fn set_all(c: CompositeTransform, p: &[f64]) -> CompositeTransform {
    let mut t = Transform::Composite(c);
    t.set_parameters(p).expect("length checked by caller");
    match t {
        Transform::Composite(c) => c,
        _ => unreachable!(),
    }
}

impl SpatialTransform for CompositeTransform {
    fn apply(&self, p: &Point) -> Point {
        self.items.iter().rev().fold(*p, |q, t| t.apply(&q))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_affine() -> AffineTransform {
        let mut a = AffineTransform::identity(3);
        a.set_matrix([[1.1, 0.2, 0.0], [0.0, 0.9, -0.1], [0.05, 0.0, 1.0]]);
        a.set_offset([1.0, -2.0, 0.5]);
        a.set_center([3.0, 3.0, 3.0]);
        a
    }

    fn sample_bspline() -> BSplineTransform {
        let fixed = GridGeometry::unit(&[12, 12, 12]).unwrap();
        let mut b = BSplineTransform::covering(&fixed, &[4.0, 4.0, 4.0]).unwrap();
        let p: Vec<f64> = (0..b.n_parameters()).map(|i| ((i as f64) * 0.7).sin()).collect();
        b.set_parameters(&p).unwrap();
        b
    }

    #[test]
    fn composition_applies_inner_first() {
        let a: Transform = sample_affine().into();
        let b: Transform = sample_bspline().into();
        let c: Transform = TranslationTransform::new(&[0.3, 0.1, -0.2]).into();
        let ab = a.clone().compose(b.clone());
        let abc = ab.clone().compose(c.clone());
        let a_bc = a.clone().compose(b.clone().compose(c.clone()));
        for x in [[1.0, 2.0, 3.0], [5.5, 7.25, 2.0], [10.0, 0.5, 9.0]] {
            let direct = a.apply(&b.apply(&c.apply(&x)));
            for composed in [&abc, &a_bc] {
                let y = composed.apply(&x);
                for k in 0..3 {
                    assert!((y[k] - direct[k]).abs() < 1e-9);
                }
            }
            let y = ab.apply(&x);
            let d = a.apply(&b.apply(&x));
            assert!((0..3).all(|k| (y[k] - d[k]).abs() < 1e-9));
        }
    }

    #[test]
    fn composite_parameters_concatenate() {
        let a: Transform = sample_affine().into();
        let b: Transform = TranslationTransform::new(&[1.0, 2.0, 3.0]).into();
        let mut c = a.compose(b);
        assert_eq!(c.n_parameters(), 12 + 3);
        let mut p = c.parameters();
        p[13] = 9.0;
        c.set_parameters(&p).unwrap();
        assert_eq!(c.parameters(), p);
        assert!(c.set_parameters(&p[..3]).is_err());
    }

    #[test]
    fn empty_composite_is_rejected() {
        assert!(CompositeTransform::new(vec![]).is_err());
    }
}
