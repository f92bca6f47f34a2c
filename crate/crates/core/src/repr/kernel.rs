use crate::error::{Error, Result};

/// Default kernel radius in voxels (support of 100 voxels across).
pub const DEFAULT_RADIUS: usize = 50;
/// Default guard added to `r^gamma`.
pub const DEFAULT_EPSILON_CENTER: f64 = 1e-8;

/// Centre-pointing vector kernel with magnitude `1 / (r^gamma + eps)`.
///
/// Taps live on a `(2R+1)^n` lattice; taps farther than `R` from the centre
/// and the centre tap itself are zero.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorFieldKernel {
    radius: usize,
    gamma: f64,
    epsilon_center: f64,
    ndim: usize,
    taps: Vec<[f64; 3]>,
}

impl VectorFieldKernel {
    pub fn new(radius: usize, gamma: f64, epsilon_center: f64, ndim: usize) -> Result<Self> {
        if radius == 0 {
            return Err(Error::Parameter("kernel radius must be >= 1".into()));
        }
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::Parameter(format!("gamma must be positive, got {gamma}")));
        }
        if !(epsilon_center > 0.0 && epsilon_center.is_finite()) {
            return Err(Error::Parameter(format!(
                "kernel epsilon must be positive, got {epsilon_center}"
            )));
        }
        if !(2..=3).contains(&ndim) {
            return Err(Error::Parameter(format!("kernels have 2 or 3 axes, got {ndim}")));
        }
        let w = 2 * radius + 1;
        let depth = if ndim == 3 { w } else { 1 };
        let r = radius as isize;
        let zr = if ndim == 3 { r } else { 0 };
        let mut taps = Vec::with_capacity(w * w * depth);
        for dz in -zr..=zr {
            for dy in -r..=r {
                for dx in -r..=r {
                    taps.push(tap_vector([dx, dy, dz], radius, gamma, epsilon_center));
                }
            }
        }
        Ok(VectorFieldKernel { radius, gamma, epsilon_center, ndim, taps })
    }

    pub fn with_defaults(gamma: f64, ndim: usize) -> Result<Self> {
        Self::new(DEFAULT_RADIUS, gamma, DEFAULT_EPSILON_CENTER, ndim)
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn epsilon_center(&self) -> f64 {
        self.epsilon_center
    }

    pub fn ndim(&self) -> usize {
        self.ndim
    }

    /// Tap at a voxel offset from the centre; zero outside the lattice.
    pub fn tap(&self, offset: [isize; 3]) -> [f64; 3] {
        let r = self.radius as isize;
        let zr = if self.ndim == 3 { r } else { 0 };
        if offset[0].abs() > r || offset[1].abs() > r || offset[2].abs() > zr {
            return [0.0; 3];
        }
        let w = (2 * r + 1) as usize;
        let i = (offset[0] + r) as usize + w * ((offset[1] + r) as usize + w * (offset[2] + zr) as usize);
        self.taps[i]
    }

    /// Magnitude law at distance `r`.
    pub fn magnitude(&self, r: f64) -> f64 {
        1.0 / (r.powf(self.gamma) + self.epsilon_center)
    }

    pub fn taps(&self) -> &[[f64; 3]] {
        &self.taps
    }
}

#[inline]
fn tap_vector(d: [isize; 3], radius: usize, gamma: f64, eps: f64) -> [f64; 3] {
    let r2 = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]) as f64;
    if r2 == 0.0 || r2 > (radius * radius) as f64 {
        return [0.0; 3];
    }
    let r = r2.sqrt();
    let m = 1.0 / (r.powf(gamma) + eps);
    let s = -m / r;
    [s * d[0] as f64, s * d[1] as f64, s * d[2] as f64]
}
