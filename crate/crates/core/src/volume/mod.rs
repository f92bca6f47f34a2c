//! Regular-grid volumes: geometry, scalar/vector/label images and the
//! per-voxel operators built on them.

mod gradient;
mod interp;
mod pyramid;
mod resample;

pub use gradient::{gradient, gradient_with, GradientUnits};
pub use interp::{sample_linear, sample_linear_fill, DEFAULT_FILL};
pub(crate) use interp::{sample_index, sample_index_with_gradient};
pub use pyramid::{downsample, gaussian_smooth};
pub use resample::{resample, resample_field, resample_fill};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Physical point in millimetres. Two-axis grids leave the last entry at 0.
pub type Point = [f64; 3];

/// Grid layout of a 2-D or 3-D image. Unused axes of a 2-D grid have one
/// voxel, unit spacing and zero origin. Index order is x fastest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridGeometry {
    ndim: usize,
    dims: [usize; 3],
    spacing: [f64; 3],
    origin: [f64; 3],
}

impl GridGeometry {
    pub fn new(dims: &[usize], spacing: &[f64], origin: &[f64]) -> Result<Self> {
        let ndim = dims.len();
        if !(2..=3).contains(&ndim) {
            return Err(Error::Parameter(format!("grids have 2 or 3 axes, got {ndim}")));
        }
        if spacing.len() != ndim || origin.len() != ndim {
            return Err(Error::Parameter(format!(
                "dims/spacing/origin lengths differ ({}, {}, {})",
                ndim,
                spacing.len(),
                origin.len()
            )));
        }
        let mut g = GridGeometry {
            ndim,
            dims: [1; 3],
            spacing: [1.0; 3],
            origin: [0.0; 3],
        };
        for a in 0..ndim {
            if dims[a] == 0 {
                return Err(Error::Parameter(format!("axis {a} has zero voxels")));
            }
            if !(spacing[a] > 0.0 && spacing[a].is_finite()) {
                return Err(Error::Parameter(format!(
                    "spacing along axis {a} must be positive, got {}",
                    spacing[a]
                )));
            }
            if !origin[a].is_finite() {
                return Err(Error::Parameter(format!("origin along axis {a} is not finite")));
            }
            g.dims[a] = dims[a];
            g.spacing[a] = spacing[a];
            g.origin[a] = origin[a];
        }
        Ok(g)
    }

    /// Unit spacing, zero origin.
    pub fn unit(dims: &[usize]) -> Result<Self> {
        let n = dims.len();
        Self::new(dims, &vec![1.0; n], &vec![0.0; n])
    }

    pub fn ndim(&self) -> usize {
        self.ndim
    }

    /// Voxel counts on the active axes.
    pub fn dims(&self) -> &[usize] {
        &self.dims[..self.ndim]
    }

    pub fn spacing(&self) -> &[f64] {
        &self.spacing[..self.ndim]
    }

    pub fn origin(&self) -> &[f64] {
        &self.origin[..self.ndim]
    }

    pub(crate) fn dims3(&self) -> [usize; 3] {
        self.dims
    }

    pub(crate) fn spacing3(&self) -> [f64; 3] {
        self.spacing
    }

    pub(crate) fn origin3(&self) -> [f64; 3] {
        self.origin
    }

    pub fn len(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn linear_index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.dims[0] * (j + self.dims[1] * k)
    }

    #[inline]
    pub fn voxel_coords(&self, idx: usize) -> [usize; 3] {
        let i = idx % self.dims[0];
        let r = idx / self.dims[0];
        [i, r % self.dims[1], r / self.dims[1]]
    }

    /// `origin + index * spacing`, accepting fractional indices.
    #[inline]
    pub fn index_to_physical(&self, idx: &[f64; 3]) -> Point {
        let mut p = [0.0; 3];
        for a in 0..self.ndim {
            p[a] = self.origin[a] + idx[a] * self.spacing[a];
        }
        p
    }

    #[inline]
    pub fn physical_to_index(&self, p: &Point) -> [f64; 3] {
        let mut u = [0.0; 3];
        for a in 0..self.ndim {
            u[a] = (p[a] - self.origin[a]) / self.spacing[a];
        }
        u
    }

    /// Physical position of voxel `idx`.
    #[inline]
    pub fn voxel_point(&self, idx: usize) -> Point {
        let c = self.voxel_coords(idx);
        self.index_to_physical(&[c[0] as f64, c[1] as f64, c[2] as f64])
    }

    /// Physical extent `(n - 1) * spacing` per active axis.
    pub fn extent(&self) -> Vec<f64> {
        (0..self.ndim)
            .map(|a| (self.dims[a] as f64 - 1.0) * self.spacing[a])
            .collect()
    }

    /// Geometric centre of the voxel lattice.
    pub fn center(&self) -> Point {
        let mut c = [0.0; 3];
        for a in 0..self.ndim {
            c[a] = self.origin[a] + 0.5 * (self.dims[a] as f64 - 1.0) * self.spacing[a];
        }
        c
    }

    pub fn same_grid(&self, other: &GridGeometry) -> bool {
        let close = |x: f64, y: f64| (x - y).abs() <= 1e-9 * (1.0 + x.abs().max(y.abs()));
        self.ndim == other.ndim
            && self.dims == other.dims
            && (0..3).all(|a| close(self.spacing[a], other.spacing[a]))
            && (0..3).all(|a| close(self.origin[a], other.origin[a]))
    }

    pub fn ensure_same(&self, other: &GridGeometry) -> Result<()> {
        if self.same_grid(other) {
            Ok(())
        } else {
            Err(Error::GeometryMismatch(format!(
                "{:?}/{:?} vs {:?}/{:?}",
                self.dims(),
                self.spacing(),
                other.dims(),
                other.spacing()
            )))
        }
    }
}

/// One finite scalar per voxel.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarVolume {
    geometry: GridGeometry,
    values: Vec<f64>,
}

impl ScalarVolume {
    pub fn new(geometry: GridGeometry, values: Vec<f64>) -> Result<Self> {
        if values.len() != geometry.len() {
            return Err(Error::GeometryMismatch(format!(
                "{} values for a grid of {} voxels",
                values.len(),
                geometry.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Parameter(format!("non-finite value at voxel {i}")));
        }
        Ok(ScalarVolume { geometry, values })
    }

    /// Construction for values already known to be finite and sized.
    pub(crate) fn from_raw(geometry: GridGeometry, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), geometry.len());
        ScalarVolume { geometry, values }
    }

    pub fn filled(geometry: GridGeometry, value: f64) -> Self {
        let n = geometry.len();
        ScalarVolume { geometry, values: vec![value; n] }
    }

    /// Builds a volume by evaluating `f` at each voxel's physical position.
    pub fn from_fn<F>(geometry: GridGeometry, f: F) -> Result<Self>
    where
        F: Fn(&Point) -> f64 + Sync + Send,
    {
        let mut values = vec![0.0; geometry.len()];
        let g = &geometry;
        crate::par::fill(&mut values, |idx| f(&g.voxel_point(idx)));
        Self::new(geometry, values)
    }

    pub fn geometry(&self) -> &GridGeometry {
        &self.geometry
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.values[self.geometry.linear_index(i, j, k)]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.geometry.clone(), self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
    }

    pub fn mean(&self) -> f64 {
        let v = &self.values;
        crate::par::sum(v.len(), |i| v[i]) / v.len() as f64
    }
}

/// One vector per voxel with as many components as the grid has axes.
/// Stored component-major.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorField {
    geometry: GridGeometry,
    components: Vec<Vec<f64>>,
}

impl VectorField {
    pub fn new(geometry: GridGeometry, components: Vec<Vec<f64>>) -> Result<Self> {
        if components.len() != geometry.ndim() {
            return Err(Error::GeometryMismatch(format!(
                "{} components on a {}-axis grid",
                components.len(),
                geometry.ndim()
            )));
        }
        for (c, comp) in components.iter().enumerate() {
            if comp.len() != geometry.len() {
                return Err(Error::GeometryMismatch(format!(
                    "component {c} has {} values for {} voxels",
                    comp.len(),
                    geometry.len()
                )));
            }
            if comp.iter().any(|v| !v.is_finite()) {
                return Err(Error::Parameter(format!("component {c} has non-finite values")));
            }
        }
        Ok(VectorField { geometry, components })
    }

    pub(crate) fn from_raw(geometry: GridGeometry, components: Vec<Vec<f64>>) -> Self {
        debug_assert_eq!(components.len(), geometry.ndim());
        VectorField { geometry, components }
    }

    pub fn zeros(geometry: GridGeometry) -> Self {
        let n = geometry.len();
        let components = vec![vec![0.0; n]; geometry.ndim()];
        VectorField { geometry, components }
    }

    /// Stacks per-axis scalar volumes sharing one geometry.
    pub fn from_volumes(volumes: Vec<ScalarVolume>) -> Result<Self> {
        let geometry = volumes
            .first()
            .ok_or_else(|| Error::Parameter("no components".into()))?
            .geometry
            .clone();
        for v in &volumes {
            geometry.ensure_same(&v.geometry)?;
        }
        Self::new(geometry, volumes.into_iter().map(|v| v.values).collect())
    }

    pub fn geometry(&self) -> &GridGeometry {
        &self.geometry
    }

    pub fn n_components(&self) -> usize {
        self.components.len()
    }

    pub fn component(&self, c: usize) -> &[f64] {
        &self.components[c]
    }

    pub fn components(&self) -> &[Vec<f64>] {
        &self.components
    }

    pub fn component_volume(&self, c: usize) -> ScalarVolume {
        ScalarVolume::from_raw(self.geometry.clone(), self.components[c].clone())
    }

    pub fn into_volumes(self) -> Vec<ScalarVolume> {
        let g = self.geometry;
        self.components
            .into_iter()
            .map(|c| ScalarVolume::from_raw(g.clone(), c))
            .collect()
    }

    #[inline]
    pub fn vector(&self, idx: usize) -> [f64; 3] {
        let mut v = [0.0; 3];
        for (c, comp) in self.components.iter().enumerate() {
            v[c] = comp[idx];
        }
        v
    }

    pub fn magnitude(&self, idx: usize) -> f64 {
        self.components.iter().map(|c| c[idx] * c[idx]).sum::<f64>().sqrt()
    }

    pub fn max_magnitude(&self) -> f64 {
        (0..self.geometry.len()).map(|i| self.magnitude(i)).fold(0.0, f64::max)
    }

    /// Component-wise negation.
    pub fn negated(&self) -> Self {
        VectorField {
            geometry: self.geometry.clone(),
            components: self
                .components
                .iter()
                .map(|c| c.iter().map(|v| -v).collect())
                .collect(),
        }
    }

    /// Largest absolute component difference.
    pub fn max_abs_diff(&self, other: &VectorField) -> f64 {
        self.components
            .iter()
            .zip(&other.components)
            .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()))
            .fold(0.0, f64::max)
    }
}

/// Non-negative integer label per voxel; 0 is background.
#[derive(Clone, Debug, PartialEq)]
pub struct LabelVolume {
    geometry: GridGeometry,
    labels: Vec<u32>,
}

impl LabelVolume {
    pub fn new(geometry: GridGeometry, labels: Vec<u32>) -> Result<Self> {
        if labels.len() != geometry.len() {
            return Err(Error::GeometryMismatch(format!(
                "{} labels for a grid of {} voxels",
                labels.len(),
                geometry.len()
            )));
        }
        Ok(LabelVolume { geometry, labels })
    }

    /// Every voxel set to `label`.
    pub fn filled(geometry: GridGeometry, label: u32) -> Self {
        let n = geometry.len();
        LabelVolume { geometry, labels: vec![label; n] }
    }

    pub fn from_fn<F: Fn(&Point) -> u32>(geometry: GridGeometry, f: F) -> Self {
        let labels = (0..geometry.len()).map(|i| f(&geometry.voxel_point(i))).collect();
        LabelVolume { geometry, labels }
    }

    pub fn geometry(&self) -> &GridGeometry {
        &self.geometry
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    /// True where the voxel is foreground (label != 0).
    #[inline]
    pub fn contains(&self, idx: usize) -> bool {
        self.labels[idx] != 0
    }

    pub fn count(&self) -> usize {
        self.labels.iter().filter(|&&l| l != 0).count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn geometry_rejects_bad_input() {
        assert!(GridGeometry::new(&[4, 4], &[1.0, 0.0], &[0.0, 0.0]).is_err());
        assert!(GridGeometry::new(&[4, 0, 2], &[1.0; 3], &[0.0; 3]).is_err());
        assert!(GridGeometry::new(&[4], &[1.0], &[0.0]).is_err());
        assert!(GridGeometry::new(&[4, 4], &[1.0], &[0.0, 0.0]).is_err());
    }

    #[test]
    fn index_physical_round_trip() {
        let g = GridGeometry::new(&[5, 6, 7], &[0.5, 1.0, 2.5], &[-3.0, 1.0, 10.0]).unwrap();
        let idx = g.linear_index(2, 3, 4);
        assert_eq!(g.voxel_coords(idx), [2, 3, 4]);
        let p = g.voxel_point(idx);
        assert_eq!(p, [-2.0, 4.0, 20.0]);
        let u = g.physical_to_index(&p);
        assert_eq!(u, [2.0, 3.0, 4.0]);
    }

    #[test]
    fn scalar_volume_rejects_nan_and_wrong_length() {
        let g = GridGeometry::unit(&[2, 2]).unwrap();
        assert!(ScalarVolume::new(g.clone(), vec![0.0; 3]).is_err());
        assert!(ScalarVolume::new(g, vec![0.0, f64::NAN, 0.0, 0.0]).is_err());
    }

    #[test]
    fn vector_field_component_count_follows_axes() {
        let g = GridGeometry::unit(&[2, 2, 2]).unwrap();
        assert!(VectorField::new(g.clone(), vec![vec![0.0; 8]; 2]).is_err());
        let f = VectorField::new(g, vec![vec![1.0; 8], vec![0.0; 8], vec![0.0; 8]]).unwrap();
        assert_eq!(f.vector(3), [1.0, 0.0, 0.0]);
        assert_eq!(f.magnitude(3), 1.0);
    }
}
