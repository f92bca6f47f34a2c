//! Vector-valued structural representations: squared-gradient edge maps,
//! vector field convolution (VFC) fields and normalized gradient fields.

mod kernel;
mod vfc;

pub use kernel::{VectorFieldKernel, DEFAULT_EPSILON_CENTER, DEFAULT_RADIUS};
pub use vfc::{vfc_field, vfc_field_with, ConvolutionMethod};

use crate::error::{Error, Result};
use crate::volume::{gradient_with, GradientUnits, GridGeometry, ScalarVolume, VectorField};

/// Default relative factor for the NGF noise estimate.
pub const DEFAULT_NOISE_ETA: f64 = 0.1;
/// Default normalisation floor relative to the largest field magnitude.
pub const DEFAULT_FLOOR_RELATIVE: f64 = 1e-3;

/// Non-negative scalar image highlighting boundaries.
#[derive(Clone, Debug, PartialEq)]
pub struct EdgeMap(ScalarVolume);

impl EdgeMap {
    pub fn new(v: ScalarVolume) -> Result<Self> {
        if v.values().iter().any(|&x| x < 0.0) {
            return Err(Error::Parameter("edge maps must be non-negative".into()));
        }
        Ok(EdgeMap(v))
    }

    pub fn geometry(&self) -> &GridGeometry {
        self.0.geometry()
    }

    pub fn values(&self) -> &[f64] {
        self.0.values()
    }

    pub fn as_volume(&self) -> &ScalarVolume {
        &self.0
    }
}

/// `f = |grad I|^2`.
pub fn edge_map_squared_gradient(v: &ScalarVolume) -> Result<EdgeMap> {
    edge_map_with(v, GradientUnits::Physical)
}

pub fn edge_map_with(v: &ScalarVolume, units: GradientUnits) -> Result<EdgeMap> {
    let grad = gradient_with(v, units)?;
    let mut out = vec![0.0; grad.geometry().len()];
    crate::par::fill(&mut out, |i| grad.components().iter().map(|c| c[i] * c[i]).sum());
    Ok(EdgeMap(ScalarVolume::from_raw(v.geometry().clone(), out)))
}

/// Divides every vector by `sqrt(|v|^2 + floor^2)`.
pub fn normalize_field(f: &VectorField, floor: f64) -> Result<VectorField> {
    if !(floor > 0.0 && floor.is_finite()) {
        return Err(Error::Parameter(format!("normalisation floor must be positive, got {floor}")));
    }
    Ok(scale_by_magnitude(f, floor * floor))
}

/// [`normalize_field`] with the floor at `rel * max |v|`; an all-zero field
/// is returned unchanged.
pub fn normalize_field_relative(f: &VectorField, rel: f64) -> Result<VectorField> {
    let m = f.max_magnitude();
    if m == 0.0 {
        return Ok(f.clone());
    }
    normalize_field(f, rel * m)
}

fn scale_by_magnitude(f: &VectorField, eps2: f64) -> VectorField {
    let g = f.geometry();
    let mut scale = vec![0.0; g.len()];
    crate::par::fill(&mut scale, |i| {
        let m2: f64 = f.components().iter().map(|c| c[i] * c[i]).sum();
        let d = (m2 + eps2).sqrt();
        if d > 0.0 {
            1.0 / d
        } else {
            0.0
        }
    });
    let components = f
        .components()
        .iter()
        .map(|c| c.iter().zip(&scale).map(|(v, s)| v * s).collect())
        .collect();
    VectorField::from_raw(g.clone(), components)
}

/// NGF regulariser; same units as the gradient magnitude.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseEstimate {
    epsilon_ngf: f64,
}

impl NoiseEstimate {
    pub fn new(epsilon_ngf: f64) -> Result<Self> {
        if !(epsilon_ngf >= 0.0 && epsilon_ngf.is_finite()) {
            return Err(Error::Parameter(format!("noise level must be >= 0, got {epsilon_ngf}")));
        }
        Ok(NoiseEstimate { epsilon_ngf })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon_ngf
    }
}

/// `eta` times the mean gradient magnitude.
pub fn estimate_noise(v: &ScalarVolume, eta: f64) -> Result<NoiseEstimate> {
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(Error::Parameter(format!("eta must be positive, got {eta}")));
    }
    let grad = gradient_with(v, GradientUnits::Physical)?;
    let n = grad.geometry().len();
    let mean = crate::par::sum(n, |i| grad.magnitude(i)) / n as f64;
    NoiseEstimate::new(eta * mean)
}

/// `grad I / sqrt(|grad I|^2 + eps^2)`; zero where both vanish.
pub fn ngf(v: &ScalarVolume, noise: NoiseEstimate) -> Result<VectorField> {
    let grad = gradient_with(v, GradientUnits::Physical)?;
    Ok(scale_by_magnitude(&grad, noise.epsilon() * noise.epsilon()))
}

/// Parameters of a VFC representation.
#[derive(Clone, Debug, PartialEq)]
pub struct VfcParams {
    pub gamma: f64,
    pub radius: usize,
    pub epsilon_center: f64,
    pub normalize: bool,
    pub floor_relative: f64,
    pub units: GradientUnits,
}

impl VfcParams {
    pub fn with_gamma(gamma: f64) -> Self {
        VfcParams { gamma, ..Default::default() }
    }
}

impl Default for VfcParams {
    fn default() -> Self {
        VfcParams {
            gamma: 3.0,
            radius: DEFAULT_RADIUS,
            epsilon_center: DEFAULT_EPSILON_CENTER,
            normalize: true,
            floor_relative: DEFAULT_FLOOR_RELATIVE,
            units: GradientUnits::Physical,
        }
    }
}

/// Which vector representation to build.
#[derive(Clone, Debug, PartialEq)]
pub enum RepresentationConfig {
    Vfc(VfcParams),
    /// NGF with the noise level estimated as `eta` times the mean gradient
    /// magnitude.
    Ngf { eta: f64 },
}

impl RepresentationConfig {
    pub fn ngf() -> Self {
        RepresentationConfig::Ngf { eta: DEFAULT_NOISE_ETA }
    }
}

/// Builds the configured representation of `v`.
pub fn make_representation(v: &ScalarVolume, cfg: &RepresentationConfig) -> Result<VectorField> {
    match cfg {
        RepresentationConfig::Vfc(p) => {
            let em = edge_map_with(v, p.units)?;
            let k = VectorFieldKernel::new(p.radius, p.gamma, p.epsilon_center, v.geometry().ndim())?;
            let field = vfc_field(&em, &k)?;
            if p.normalize {
                normalize_field_relative(&field, p.floor_relative)
            } else {
                Ok(field)
            }
        }
        RepresentationConfig::Ngf { eta } => {
            let noise = estimate_noise(v, *eta)?;
            ngf(v, noise)
        }
    }
}

/// Magnitude-weighted mean angle (radians) between each vector and its
/// forward neighbours along every axis. Zero for an all-zero field.
pub fn roughness(f: &VectorField) -> f64 {
    let g = f.geometry();
    let dims = g.dims3();
    let strides = [1, dims[0], dims[0] * dims[1]];
    let parts = crate::par::map_chunks(g.len(), crate::par::CHUNK, |r| {
        let (mut num, mut den) = (0.0, 0.0);
        for idx in r {
            let c = g.voxel_coords(idx);
            let a = f.vector(idx);
            let na = f.magnitude(idx);
            if na == 0.0 {
                continue;
            }
            for ax in 0..g.ndim() {
                if c[ax] + 1 >= dims[ax] {
                    continue;
                }
                let j = idx + strides[ax];
                let nb = f.magnitude(j);
                if nb == 0.0 {
                    continue;
                }
                let b = f.vector(j);
                let dot = a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
                let cross = [
                    a[1] * b[2] - a[2] * b[1],
                    a[2] * b[0] - a[0] * b[2],
                    a[0] * b[1] - a[1] * b[0],
                ];
                let sin = (cross[0] * cross[0] + cross[1] * cross[1] + cross[2] * cross[2]).sqrt();
                let w = na * nb;
                num += w * sin.atan2(dot);
                den += w;
            }
        }
        (num, den)
    });
    let (num, den) = parts.into_iter().fold((0.0, 0.0), |(a, b), (c, d)| (a + c, b + d));
    if den > 0.0 {
        num / den
    } else {
        0.0
    }
}
