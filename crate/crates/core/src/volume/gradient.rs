use super::{ScalarVolume, VectorField};
use crate::error::{Error, Result};

/// Units of a finite-difference gradient.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum GradientUnits {
    /// Per millimetre (divided by spacing).
    #[default]
    Physical,
    /// Per voxel step.
    Voxel,
}

/// Central-difference gradient in physical units; one-sided at the borders.
pub fn gradient(v: &ScalarVolume) -> Result<VectorField> {
    gradient_with(v, GradientUnits::Physical)
}

pub fn gradient_with(v: &ScalarVolume, units: GradientUnits) -> Result<VectorField> {
    let g = v.geometry();
    for (a, &n) in g.dims().iter().enumerate() {
        if n < 2 {
            return Err(Error::DegenerateGrid(format!(
                "axis {a} has {n} voxel(s); finite differences need at least 2"
            )));
        }
    }
    let dims = g.dims3();
    let strides = [1, dims[0], dims[0] * dims[1]];
    let values = v.values();
    let components = (0..g.ndim())
        .map(|a| {
            let h = match units {
                GradientUnits::Physical => g.spacing()[a],
                GradientUnits::Voxel => 1.0,
            };
            let n = dims[a];
            let s = strides[a];
            let mut out = vec![0.0; values.len()];
            crate::par::fill(&mut out, |idx| {
                let c = g.voxel_coords(idx)[a];
                if c == 0 {
                    (values[idx + s] - values[idx]) / h
                } else if c == n - 1 {
                    (values[idx] - values[idx - s]) / h
                } else {
                    (values[idx + s] - values[idx - s]) / (2.0 * h)
                }
            });
            out
        })
        .collect();
    Ok(VectorField::from_raw(g.clone(), components))
}
