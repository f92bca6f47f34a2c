use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::transform::{Parametric, Transform};

use super::objective::{Objective, Stencil};

/// How the optimizer obtains gradients.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GradientMode {
    Analytic,
    FiniteDifference,
}

/// Adaptive-gain gradient descent settings. Step lengths are the largest
/// point motion per update, in voxels of the current level.
#[derive(Clone, Debug, PartialEq)]
pub struct OptimizerParams {
    pub max_iterations: usize,
    pub initial_step: f64,
    pub min_step: f64,
    pub grow: f64,
    pub shrink: f64,
    pub relative_tolerance: f64,
    pub window: usize,
    pub gradient: GradientMode,
}

impl Default for OptimizerParams {
    fn default() -> Self {
        OptimizerParams {
            max_iterations: 250,
            initial_step: 1.0,
            min_step: 1e-3,
            grow: 1.2,
            shrink: 0.5,
            relative_tolerance: 1e-6,
            window: 10,
            gradient: GradientMode::Analytic,
        }
    }
}

impl OptimizerParams {
    pub fn validate(&self) -> Result<()> {
        let ok = self.max_iterations >= 1
            && self.initial_step > 0.0
            && self.min_step > 0.0
            && self.min_step <= self.initial_step
            && self.grow >= 1.0
            && self.shrink > 0.0
            && self.shrink < 1.0
            && self.relative_tolerance >= 0.0
            && self.window >= 1;
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid optimizer settings {self:?}")))
        }
    }
}

/// Result of optimizing one level.
#[derive(Clone, Debug)]
pub struct LevelOutcome {
    pub transform: Transform,
    /// Oriented objective after every accepted step, starting at `t0`.
    pub trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

fn evaluate(obj: &Objective, t: &Transform, mode: GradientMode, fd_step: f64) -> Result<(f64, Vec<f64>)> {
    let (f, g) = if mode == GradientMode::FiniteDifference || obj.has_outer() {
        (obj.oriented(t)?, obj.finite_difference_gradient(t, fd_step, Stencil::Central)?)
    } else {
        obj.value_and_gradient(t)?
    };
    if !f.is_finite() || g.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!("objective {f} at parameters {:?}", t.parameters())));
    }
    Ok((f, g))
}

/// Minimises the oriented objective from `t0`. `observe(iteration, value)`
/// is called after every iteration with the current best value.
pub fn optimize_level(
    obj: &Objective,
    t0: Transform,
    params: &OptimizerParams,
    observe: &mut dyn FnMut(usize, f64),
) -> Result<LevelOutcome> {
    params.validate()?;
    let geometry = obj.fixed_geometry();
    let unit = geometry.spacing().iter().cloned().fold(f64::INFINITY, f64::min);
    let fd_step = 1e-3 * unit;
    let scales = t0.parameter_scales(geometry);
    let mut t = t0;
    let mut p = t.parameters();
    let (mut f, mut g) = evaluate(obj, &t, params.gradient, fd_step)?;
    let mut trace = vec![f];
    let mut step = params.initial_step * unit;
    let min_step = params.min_step * unit;
    let mut converged = false;
    let mut iterations = 0;
    let mut trial = t.clone();
    while iterations < params.max_iterations {
        iterations += 1;
        let d: Vec<f64> = g.iter().zip(&scales).map(|(gi, si)| gi / si).collect();
        let norm = d.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if norm == 0.0 {
            converged = true;
            break;
        }
        let cand: Vec<f64> = p
            .iter()
            .zip(&d)
            .zip(&scales)
            .map(|((pi, di), si)| pi - step * di / norm / si)
            .collect();
        trial.set_parameters(&cand)?;
        let (ft, gt) = evaluate(obj, &trial, params.gradient, fd_step)?;
        if ft < f {
            p = cand;
            f = ft;
            g = gt;
            std::mem::swap(&mut t, &mut trial);
            trace.push(f);
            step *= params.grow;
        } else {
            step *= params.shrink;
        }
        observe(iterations, f);
        if step < min_step {
            converged = true;
            break;
        }
        let k = trace.len();
        if k > params.window {
            let old = trace[k - 1 - params.window];
            if (old - f).abs() <= params.relative_tolerance * f.abs().max(f64::MIN_POSITIVE) {
                converged = true;
                break;
            }
        }
    }
    t.set_parameters(&p)?;
    Ok(LevelOutcome { transform: t, trace, iterations, converged })
}
