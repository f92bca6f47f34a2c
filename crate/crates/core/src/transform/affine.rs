use super::{check_len, Parametric, SpatialTransform};
use crate::error::{Error, Result};
use crate::volume::{GridGeometry, Point};

/// `x + offset`.
#[derive(Clone, Debug, PartialEq)]
pub struct TranslationTransform {
    ndim: usize,
    offset: [f64; 3],
}

impl TranslationTransform {
    pub fn new(offset: &[f64]) -> Self {
        let mut o = [0.0; 3];
        o[..offset.len()].copy_from_slice(offset);
        TranslationTransform { ndim: offset.len(), offset: o }
    }

    pub fn zero(ndim: usize) -> Self {
        TranslationTransform { ndim, offset: [0.0; 3] }
    }

    pub fn ndim(&self) -> usize {
        self.ndim
    }

    pub fn offset(&self) -> &[f64] {
        &self.offset[..self.ndim]
    }
}

impl SpatialTransform for TranslationTransform {
    #[inline]
    fn apply(&self, p: &Point) -> Point {
        [p[0] + self.offset[0], p[1] + self.offset[1], p[2] + self.offset[2]]
    }
}

impl Parametric for TranslationTransform {
    fn n_parameters(&self) -> usize {
        self.ndim
    }

    fn parameters(&self) -> Vec<f64> {
        self.offset().to_vec()
    }

    fn set_parameters(&mut self, p: &[f64]) -> Result<()> {
        check_len(self.ndim, p.len())?;
        self.offset[..self.ndim].copy_from_slice(p);
        Ok(())
    }

    fn accumulate_jacobian(&self, _x: &Point, v: &[f64; 3], grad: &mut [f64]) {
        for a in 0..self.ndim {
            grad[a] += v[a];
        }
    }

    fn parameter_scales(&self, _domain: &GridGeometry) -> Vec<f64> {
        vec![1.0; self.ndim]
    }
}

/// `matrix (x - center) + center + offset`. Parameters are the matrix
/// (row-major) followed by the offset; the center is fixed.
#[derive(Clone, Debug, PartialEq)]
pub struct AffineTransform {
    ndim: usize,
    matrix: [[f64; 3]; 3],
    offset: [f64; 3],
    center: [f64; 3],
}

impl AffineTransform {
    pub fn identity(ndim: usize) -> Self {
        AffineTransform {
            ndim,
            matrix: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
            offset: [0.0; 3],
            center: [0.0; 3],
        }
    }

    /// Identity rotating about the centre of `domain`.
    pub fn centered(domain: &GridGeometry) -> Self {
        let mut a = Self::identity(domain.ndim());
        a.center = domain.center();
        a
    }

    pub fn from_parts(ndim: usize, matrix: &[f64], offset: &[f64], center: &[f64]) -> Result<Self> {
        if matrix.len() != ndim * ndim || offset.len() != ndim || center.len() != ndim {
            return Err(Error::Parameter(format!("affine parts do not match {ndim} axes")));
        }
        let mut a = Self::identity(ndim);
        for r in 0..ndim {
            for c in 0..ndim {
                a.matrix[r][c] = matrix[r * ndim + c];
            }
        }
        a.offset[..ndim].copy_from_slice(offset);
        a.center[..ndim].copy_from_slice(center);
        if a.determinant().abs() < 1e-12 {
            return Err(Error::Parameter("affine matrix is singular".into()));
        }
        Ok(a)
    }

    pub fn ndim(&self) -> usize {
        self.ndim
    }

    /// Sets the full 3x3 block; only the leading `ndim` rows/columns are used.
    pub fn set_matrix(&mut self, m: [[f64; 3]; 3]) {
        self.matrix = m;
        for a in self.ndim..3 {
            for b in 0..3 {
                self.matrix[a][b] = if a == b { 1.0 } else { 0.0 };
                self.matrix[b][a] = if a == b { 1.0 } else { 0.0 };
            }
        }
    }

    pub fn set_offset(&mut self, o: [f64; 3]) {
        self.offset = o;
        for a in self.ndim..3 {
            self.offset[a] = 0.0;
        }
    }

    pub fn set_center(&mut self, c: [f64; 3]) {
        self.center = c;
        for a in self.ndim..3 {
            self.center[a] = 0.0;
        }
    }

    pub fn matrix_flat(&self) -> Vec<f64> {
        (0..self.ndim)
            .flat_map(|r| (0..self.ndim).map(move |c| (r, c)))
            .map(|(r, c)| self.matrix[r][c])
            .collect()
    }

    pub fn offset(&self) -> &[f64] {
        &self.offset[..self.ndim]
    }

    pub fn center(&self) -> &[f64] {
        &self.center[..self.ndim]
    }

    pub fn determinant(&self) -> f64 {
        let m = &self.matrix;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }
}

impl SpatialTransform for AffineTransform {
    #[inline]
    fn apply(&self, p: &Point) -> Point {
        let d = [p[0] - self.center[0], p[1] - self.center[1], p[2] - self.center[2]];
        let mut out = [0.0; 3];
        for r in 0..3 {
            out[r] = self.matrix[r][0] * d[0]
                + self.matrix[r][1] * d[1]
                + self.matrix[r][2] * d[2]
                + self.center[r]
                + self.offset[r];
        }
        out
    }
}

impl Parametric for AffineTransform {
    fn n_parameters(&self) -> usize {
        self.ndim * (self.ndim + 1)
    }

    fn parameters(&self) -> Vec<f64> {
        let mut p = self.matrix_flat();
        p.extend_from_slice(self.offset());
        p
    }

    fn set_parameters(&mut self, p: &[f64]) -> Result<()> {
        check_len(self.n_parameters(), p.len())?;
        let n = self.ndim;
        for r in 0..n {
            for c in 0..n {
                self.matrix[r][c] = p[r * n + c];
            }
        }
        self.offset[..n].copy_from_slice(&p[n * n..]);
        Ok(())
    }

    fn accumulate_jacobian(&self, x: &Point, v: &[f64; 3], grad: &mut [f64]) {
        let n = self.ndim;
        for r in 0..n {
            for c in 0..n {
                grad[r * n + c] += v[r] * (x[c] - self.center[c]);
            }
            grad[n * n + r] += v[r];
        }
    }

    fn parameter_scales(&self, domain: &GridGeometry) -> Vec<f64> {
        let n = self.ndim;
        // Largest distance from the centre along each axis.
        let reach: Vec<f64> = (0..n)
            .map(|a| {
                let lo = domain.origin()[a];
                let hi = lo + domain.extent()[a];
                (lo - self.center[a]).abs().max((hi - self.center[a]).abs()).max(1e-6)
            })
            .collect();
        let mut s = Vec::with_capacity(self.n_parameters());
        for _r in 0..n {
            s.extend_from_slice(&reach);
        }
        s.extend(std::iter::repeat_n(1.0, n));
        s
    }
}
