use crate::error::{Error, Result};
use crate::metrics::{ncc_slices, nmi_slices, ssd_slices, value_range, MetricKind, MetricValue, ScalarMetric};
use crate::par;
use crate::repr::{make_representation, RepresentationConfig};
use crate::transform::{Parametric, SpatialTransform, Transform};
use crate::volume::{sample_index, sample_index_with_gradient, GridGeometry, LabelVolume, ScalarVolume, VectorField};

use super::RepresentationKind;

/// An image as the metric sees it: raw intensities or a vector field.
#[derive(Clone, Debug, PartialEq)]
pub enum Representation {
    Intensity(ScalarVolume),
    Field(VectorField),
}

impl Representation {
    pub fn geometry(&self) -> &GridGeometry {
        match self {
            Representation::Intensity(v) => v.geometry(),
            Representation::Field(f) => f.geometry(),
        }
    }

    /// Channels compared by the metric.
    pub fn channels(&self) -> Vec<&[f64]> {
        match self {
            Representation::Intensity(v) => vec![v.values()],
            Representation::Field(f) => f.components().iter().map(|c| c.as_slice()).collect(),
        }
    }
}

/// Builds the representation selected by `kind`.
pub fn represent(v: &ScalarVolume, kind: &RepresentationKind) -> Result<Representation> {
    Ok(match kind {
        RepresentationKind::Intensity => Representation::Intensity(v.clone()),
        RepresentationKind::Vfc(p) => {
            Representation::Field(make_representation(v, &RepresentationConfig::Vfc(p.clone()))?)
        }
        RepresentationKind::Ngf { eta } => {
            Representation::Field(make_representation(v, &RepresentationConfig::Ngf { eta: *eta })?)
        }
    })
}

/// Finite-difference stencils for [`Objective::finite_difference_gradient`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stencil {
    Central,
    FivePoint,
}

/// `S(fixed, moving ∘ t)` for one pyramid level.
pub struct Objective<'a> {
    fixed: &'a Representation,
    moving: &'a Representation,
    metric: MetricKind,
    mask: Option<&'a [u32]>,
    outer: Option<&'a Transform>,
    active: usize,
    ranges: Vec<((f64, f64), (f64, f64))>,
}

impl<'a> Objective<'a> {
    pub fn new(
        fixed: &'a Representation,
        moving: &'a Representation,
        metric: MetricKind,
        mask: Option<&'a LabelVolume>,
    ) -> Result<Self> {
        let (fc, mc) = (fixed.channels(), moving.channels());
        if fc.len() != mc.len() {
            return Err(Error::GeometryMismatch(format!(
                "fixed has {} channels, moving has {}",
                fc.len(),
                mc.len()
            )));
        }
        if fixed.geometry().ndim() != moving.geometry().ndim() {
            return Err(Error::GeometryMismatch("fixed and moving differ in dimensionality".into()));
        }
        let mask = match mask {
            Some(m) => {
                fixed.geometry().ensure_same(m.geometry())?;
                Some(m.labels())
            }
            None => None,
        };
        let active = mask.map_or(fixed.geometry().len(), |m| m.iter().filter(|&&l| l != 0).count());
        if active == 0 {
            return Err(Error::EmptySupport("fixed mask is empty".into()));
        }
        let ranges = match metric {
            MetricKind::Scalar(ScalarMetric::Nmi { .. }) => fc
                .iter()
                .zip(&mc)
                .map(|(f, m)| Ok((value_range(f, mask)?, value_range(m, None)?)))
                .collect::<Result<_>>()?,
            _ => Vec::new(),
        };
        Ok(Objective { fixed, moving, metric, mask, outer: None, active, ranges })
    }

    /// Evaluates `S(fixed, moving ∘ outer ∘ t)` instead.
    pub fn with_outer(mut self, outer: &'a Transform) -> Self {
        self.outer = Some(outer);
        self
    }

    pub fn has_outer(&self) -> bool {
        self.outer.is_some()
    }

    pub fn fixed_geometry(&self) -> &GridGeometry {
        self.fixed.geometry()
    }

    fn is_active(&self, i: usize) -> bool {
        self.mask.is_none_or(|m| m[i] != 0)
    }

    pub fn value(&self, t: &Transform) -> Result<MetricValue> {
        let (v, _) = self.evaluate(t, false)?;
        Ok(v)
    }

    /// Oriented (minimised) value and its analytic gradient with respect to
    /// the parameters of `t`.
    pub fn value_and_gradient(&self, t: &Transform) -> Result<(f64, Vec<f64>)> {
        if self.outer.is_some() {
            return Err(Error::Config("analytic gradients need a pre-warped moving image".into()));
        }
        let (v, g) = self.evaluate(t, true)?;
        Ok((v.oriented(), g.expect("requested")))
    }

    /// Oriented value only.
    pub fn oriented(&self, t: &Transform) -> Result<f64> {
        Ok(self.value(t)?.oriented())
    }

    /// Finite-difference gradient with per-parameter steps `step_mm / scale`.
    pub fn finite_difference_gradient(&self, t: &Transform, step_mm: f64, stencil: Stencil) -> Result<Vec<f64>> {
        let p0 = t.parameters();
        let scales = t.parameter_scales(self.fixed.geometry());
        let mut probe = t.clone();
        let mut at = |p: &[f64]| -> Result<f64> {
            probe.set_parameters(p)?;
            self.oriented(&probe)
        };
        let mut g = vec![0.0; p0.len()];
        let mut p = p0.clone();
        for i in 0..p0.len() {
            let h = step_mm / scales[i];
            let mut f = |k: f64| -> Result<f64> {
                p[i] = p0[i] + k * h;
                let v = at(&p);
                p[i] = p0[i];
                v
            };
            g[i] = match stencil {
                Stencil::Central => (f(1.0)? - f(-1.0)?) / (2.0 * h),
                Stencil::FivePoint => (-f(2.0)? + 8.0 * f(1.0)? - 8.0 * f(-1.0)? + f(-2.0)?) / (12.0 * h),
            };
        }
        Ok(g)
    }

    fn evaluate(&self, t: &Transform, want_grad: bool) -> Result<(MetricValue, Option<Vec<f64>>)> {
        let fg = self.fixed.geometry();
        let mg = self.moving.geometry();
        let n = fg.len();
        let coords: Vec<[f64; 3]> = par::map(n, |i| {
            if !self.is_active(i) {
                return [f64::NAN; 3];
            }
            let mut y = t.apply(&fg.voxel_point(i));
            if let Some(o) = self.outer {
                y = o.apply(&y);
            }
            mg.physical_to_index(&y)
        });
        let fixed = self.fixed.channels();
        let moving = self.moving.channels();
        let nc = moving.len();
        let mut warped = Vec::with_capacity(nc);
        let mut grads = Vec::with_capacity(if want_grad { nc } else { 0 });
        for m in &moving {
            if want_grad {
                let (v, g): (Vec<f64>, Vec<[f64; 3]>) = par::map(n, |i| {
                    if self.is_active(i) {
                        sample_index_with_gradient(m, mg, &coords[i], 0.0)
                    } else {
                        (0.0, [0.0; 3])
                    }
                })
                .into_iter()
                .unzip();
                warped.push(v);
                grads.push(g);
            } else {
                warped.push(par::map(n, |i| if self.is_active(i) { sample_index(m, mg, &coords[i], 0.0) } else { 0.0 }));
            }
        }

        let mut dsdm: Vec<Vec<f64>> = if want_grad { vec![vec![0.0; n]; nc] } else { Vec::new() };
        let value = match self.metric {
            MetricKind::Scalar(inner) => {
                let mut total = 0.0;
                let sign = if matches!(inner, ScalarMetric::Ssd) { 1.0 } else { -1.0 };
                for c in 0..nc {
                    let g = if want_grad { Some(dsdm[c].as_mut_slice()) } else { None };
                    total += match inner {
                        ScalarMetric::Ssd => ssd_slices(fixed[c], &warped[c], self.mask, g)?,
                        ScalarMetric::Ncc => ncc_slices(fixed[c], &warped[c], self.mask, g)?,
                        ScalarMetric::Nmi { bins } => {
                            let (ra, rb) = self.ranges[c];
                            nmi_slices(fixed[c], &warped[c], self.mask, bins, ra, rb, g)?
                        }
                    };
                }
                let scale = sign / nc as f64;
                for d in dsdm.iter_mut() {
                    d.iter_mut().for_each(|x| *x *= scale);
                }
                let v = total / nc as f64;
                if sign > 0.0 { MetricValue::minimize(v) } else { MetricValue::maximize(v) }
            }
            MetricKind::MeanDotProduct | MetricKind::Ngf => {
                let w = if self.metric == MetricKind::Ngf { 0.5 } else { 1.0 };
                let na = self.active as f64;
                let s = par::sum(n, |i| {
                    if self.is_active(i) {
                        (0..nc).map(|c| fixed[c][i] * warped[c][i]).sum()
                    } else {
                        0.0
                    }
                });
                for (c, d) in dsdm.iter_mut().enumerate() {
                    par::fill(d, |i| if self.is_active(i) { -w * fixed[c][i] / na } else { 0.0 });
                }
                MetricValue::minimize(-w * s / na)
            }
        };
        if !value.value.is_finite() {
            return Err(Error::NonFinite(format!("{} evaluated to {}", self.metric.name(), value.value)));
        }
        if !want_grad {
            return Ok((value, None));
        }

        let np = t.n_parameters();
        let inv_sp = mg.spacing3().map(|s| 1.0 / s);
        let parts = par::map_chunks(n, par::CHUNK, |r| {
            let mut g = vec![0.0; np];
            for i in r {
                if !self.is_active(i) {
                    continue;
                }
                let mut v = [0.0; 3];
                for c in 0..nc {
                    let d = dsdm[c][i];
                    if d != 0.0 {
                        for a in 0..3 {
                            v[a] += d * grads[c][i][a] * inv_sp[a];
                        }
                    }
                }
                if v != [0.0; 3] {
                    t.accumulate_jacobian(&fg.voxel_point(i), &v, &mut g);
                }
            }
            g
        });
        let mut grad = vec![0.0; np];
        for p in parts {
            for (a, b) in grad.iter_mut().zip(p) {
                *a += b;
            }
        }
        Ok((value, Some(grad)))
    }
}

/// One-shot objective evaluation.
pub fn objective(
    fixed: &Representation,
    moving: &Representation,
    t: &Transform,
    metric: MetricKind,
    mask: Option<&LabelVolume>,
) -> Result<MetricValue> {
    Objective::new(fixed, moving, metric, mask)?.value(t)
}
