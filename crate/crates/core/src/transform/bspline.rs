use super::{check_len, Parametric, SpatialTransform};
use crate::error::{Error, Result};
use crate::volume::{GridGeometry, Point};

/// Cubic B-spline basis values at fractional position `u` in `[0, 1)`.
#[inline]
pub fn bspline_weights(u: f64) -> [f64; 4] {
    let u2 = u * u;
    let u3 = u2 * u;
    let v = 1.0 - u;
    [
        v * v * v / 6.0,
        (3.0 * u3 - 6.0 * u2 + 4.0) / 6.0,
        (-3.0 * u3 + 3.0 * u2 + 3.0 * u + 1.0) / 6.0,
        u3 / 6.0,
    ]
}

/// Cubic B-spline free-form deformation. Coefficients are millimetre
/// displacements at the control points, stored axis-major (all x
/// displacements, then y, then z).
#[derive(Clone, Debug, PartialEq)]
pub struct BSplineTransform {
    control: GridGeometry,
    coefficients: Vec<f64>,
}

/// Control points touched by one physical point.
pub(crate) struct Support {
    pub base: [usize; 3],
    pub weights: [[f64; 4]; 3],
}

impl BSplineTransform {
    /// Zero-displacement transform on an explicit control grid.
    pub fn new(control: GridGeometry) -> Result<Self> {
        if control.dims().iter().any(|&n| n < 4) {
            return Err(Error::Parameter(format!(
                "cubic control grids need at least 4 points per axis, got {:?}",
                control.dims()
            )));
        }
        let n = control.ndim() * control.len();
        Ok(BSplineTransform { control, coefficients: vec![0.0; n] })
    }

    /// Control grid with `spacing_mm` covering `fixed` plus the cubic margin.
    pub fn covering(fixed: &GridGeometry, spacing_mm: &[f64]) -> Result<Self> {
        let n = fixed.ndim();
        if spacing_mm.len() != n || spacing_mm.iter().any(|s| !(*s > 0.0)) {
            return Err(Error::Parameter(format!("invalid control spacing {spacing_mm:?}")));
        }
        let extent = fixed.extent();
        let dims: Vec<usize> = (0..n)
            .map(|a| (extent[a] / spacing_mm[a] + 1e-9).floor() as usize + 4)
            .collect();
        let origin: Vec<f64> = (0..n).map(|a| fixed.origin()[a] - spacing_mm[a]).collect();
        Self::new(GridGeometry::new(&dims, spacing_mm, &origin)?)
    }

    pub fn ndim(&self) -> usize {
        self.control.ndim()
    }

    pub fn control_grid(&self) -> &GridGeometry {
        &self.control
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    /// Replaces the coefficient vector (see [`Parametric::set_parameters`]).
    pub fn with_coefficients(mut self, c: Vec<f64>) -> Result<Self> {
        check_len(self.coefficients.len(), c.len())?;
        self.coefficients = c;
        Ok(self)
    }

    #[inline]
    pub(crate) fn support(&self, p: &Point) -> Option<Support> {
        let dims = self.control.dims3();
        let sp = self.control.spacing3();
        let or = self.control.origin3();
        let mut s = Support { base: [0; 3], weights: [[1.0, 0.0, 0.0, 0.0]; 3] };
        for a in 0..self.control.ndim() {
            let t = (p[a] - or[a]) / sp[a];
            let f = t.floor();
            if !(f >= 1.0 && f + 2.0 <= (dims[a] - 1) as f64) {
                return None;
            }
            s.base[a] = f as usize - 1;
            s.weights[a] = bspline_weights(t - f);
        }
        Some(s)
    }

    /// Displacement at `p`; zero outside the valid region.
    #[inline]
    pub fn displacement(&self, p: &Point) -> [f64; 3] {
        let Some(s) = self.support(p) else { return [0.0; 3] };
        let dims = self.control.dims3();
        let ncp = self.control.len();
        let n = self.control.ndim();
        let kz = if n == 3 { 4 } else { 1 };
        let mut d = [0.0; 3];
        for c in 0..kz {
            let wz = s.weights[2][c];
            let z = s.base[2] + c;
            for b in 0..4 {
                let wyz = wz * s.weights[1][b];
                let row = (s.base[1] + b + dims[1] * z) * dims[0] + s.base[0];
                for a in 0..4 {
                    let w = wyz * s.weights[0][a];
                    let cp = row + a;
                    for (ax, dv) in d.iter_mut().enumerate().take(n) {
                        *dv += w * self.coefficients[ax * ncp + cp];
                    }
                }
            }
        }
        d
    }
}

impl SpatialTransform for BSplineTransform {
    #[inline]
    fn apply(&self, p: &Point) -> Point {
        let d = self.displacement(p);
        [p[0] + d[0], p[1] + d[1], p[2] + d[2]]
    }
}

impl Parametric for BSplineTransform {
    fn n_parameters(&self) -> usize {
        self.coefficients.len()
    }

    fn parameters(&self) -> Vec<f64> {
        self.coefficients.clone()
    }

    fn set_parameters(&mut self, p: &[f64]) -> Result<()> {
        check_len(self.coefficients.len(), p.len())?;
        self.coefficients.copy_from_slice(p);
        Ok(())
    }

    fn accumulate_jacobian(&self, x: &Point, v: &[f64; 3], grad: &mut [f64]) {
        let Some(s) = self.support(x) else { return };
        let dims = self.control.dims3();
        let ncp = self.control.len();
        let n = self.control.ndim();
        let kz = if n == 3 { 4 } else { 1 };
        for c in 0..kz {
            let wz = s.weights[2][c];
            let z = s.base[2] + c;
            for b in 0..4 {
                let wyz = wz * s.weights[1][b];
                let row = (s.base[1] + b + dims[1] * z) * dims[0] + s.base[0];
                for a in 0..4 {
                    let w = wyz * s.weights[0][a];
                    for ax in 0..n {
                        grad[ax * ncp + row + a] += w * v[ax];
                    }
                }
            }
        }
    }

    fn parameter_scales(&self, _domain: &GridGeometry) -> Vec<f64> {
        vec![1.0; self.coefficients.len()]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn knot_values() {
        let w = bspline_weights(0.0);
        let e = [1.0 / 6.0, 4.0 / 6.0, 1.0 / 6.0, 0.0];
        for k in 0..4 {
            assert!((w[k] - e[k]).abs() < 1e-15);
        }
        let w = bspline_weights(0.5);
        let e = [1.0 / 48.0, 23.0 / 48.0, 23.0 / 48.0, 1.0 / 48.0];
        for k in 0..4 {
            assert!((w[k] - e[k]).abs() < 1e-15);
        }
    }

    #[test]
    fn partition_of_unity() {
        for i in 0..1000 {
            let u = i as f64 / 1000.0;
            let s: f64 = bspline_weights(u).iter().sum();
            assert!((s - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_coefficients_are_identity() {
        let fixed = GridGeometry::unit(&[10, 10, 10]).unwrap();
        let b = BSplineTransform::covering(&fixed, &[3.0, 3.0, 3.0]).unwrap();
        assert_eq!(b.apply(&[4.3, 2.2, 7.9]), [4.3, 2.2, 7.9]);
    }

    #[test]
    fn parameter_count_for_5_cubed() {
        let g = GridGeometry::unit(&[5, 5, 5]).unwrap();
        let b = BSplineTransform::new(g).unwrap();
        assert_eq!(b.n_parameters(), 375);
    }

    #[test]
    fn constant_coefficients_give_constant_displacement() {
        let fixed = GridGeometry::new(&[17, 13, 9], &[1.0, 1.5, 2.0], &[-4.0, 0.0, 2.0]).unwrap();
        let b = BSplineTransform::covering(&fixed, &[5.0, 4.0, 6.0]).unwrap();
        let ncp = b.control_grid().len();
        let mut p = vec![0.0; 3 * ncp];
        p[..ncp].fill(1.5);
        p[ncp..2 * ncp].fill(-2.0);
        p[2 * ncp..].fill(0.25);
        let b = b.with_coefficients(p).unwrap();
        for idx in 0..fixed.len() {
            let d = b.displacement(&fixed.voxel_point(idx));
            assert!((d[0] - 1.5).abs() < 1e-9);
            assert!((d[1] + 2.0).abs() < 1e-9);
            assert!((d[2] - 0.25).abs() < 1e-9);
        }
    }

    #[test]
    fn outside_valid_region_is_identity() {
        let fixed = GridGeometry::unit(&[8, 8]).unwrap();
        let b = BSplineTransform::covering(&fixed, &[2.0, 2.0]).unwrap();
        let n = b.n_parameters();
        let b = b.with_coefficients(vec![1.0; n]).unwrap();
        assert_eq!(b.apply(&[-50.0, 3.0, 0.0]), [-50.0, 3.0, 0.0]);
        let d = b.apply(&[3.0, 3.0, 0.0]);
        assert!((d[0] - 4.0).abs() < 1e-12);
    }

    #[test]
    fn displacement_is_continuous() {
        let fixed = GridGeometry::unit(&[20, 20]).unwrap();
        let b = BSplineTransform::covering(&fixed, &[4.0, 4.0]).unwrap();
        let n = b.n_parameters();
        let coeffs: Vec<f64> = (0..n).map(|i| ((i * 7919) % 13) as f64 - 6.0).collect();
        let max_c = coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
        let b = b.with_coefficients(coeffs).unwrap();
        let h = 0.01;
        let mut x = 0.0;
        while x < 19.0 {
            let d0 = b.displacement(&[x, 7.3, 0.0]);
            let d1 = b.displacement(&[x + h, 7.3, 0.0]);
            // |d'| <= 2 * max|c| / spacing for the cubic basis.
            assert!((d1[0] - d0[0]).abs() <= 2.0 * max_c / 4.0 * h + 1e-12);
            x += h;
        }
    }

    #[test]
    fn jacobian_matches_differences() {
        let fixed = GridGeometry::unit(&[9, 9, 9]).unwrap();
        let b = BSplineTransform::covering(&fixed, &[3.0, 3.0, 3.0]).unwrap();
        let n = b.n_parameters();
        let b = b
            .with_coefficients((0..n).map(|i| (i as f64 * 0.37).cos()).collect())
            .unwrap();
        let x = [4.2, 3.7, 5.1];
        let v = [0.5, -1.0, 2.0];
        let mut g = vec![0.0; n];
        b.accumulate_jacobian(&x, &v, &mut g);
        let y0 = b.apply(&x);
        let p0 = b.parameters();
        for i in (0..n).step_by(7) {
            let mut p = p0.clone();
            p[i] += 1.0;
            let y1 = b.clone().with_coefficients(p).unwrap().apply(&x);
            let fd: f64 = (0..3).map(|k| v[k] * (y1[k] - y0[k])).sum();
            assert!((fd - g[i]).abs() < 1e-9);
        }
    }
}
