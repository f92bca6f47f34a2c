//! Synthetic images with known geometry for studies and tests.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::transform::{BSplineTransform, Parametric};
use crate::volume::{GridGeometry, LabelVolume, Point, ScalarVolume};

/// Soft inside-indicator for a signed distance `d` (negative inside).
fn soft(d: f64, width: f64) -> f64 {
    0.5 * (1.0 - (d / width).tanh())
}

/// Approximate signed distance to an axis-aligned ellipsoid.
fn ellipsoid(p: &Point, c: [f64; 3], a: [f64; 3], ndim: usize) -> f64 {
    let r = (0..ndim).map(|k| ((p[k] - c[k]) / a[k]).powi(2)).sum::<f64>().sqrt();
    let amin = a[..ndim].iter().cloned().fold(f64::INFINITY, f64::min);
    (r - 1.0) * amin
}

/// Ellipsoidal body with four inner structures of different contrast and
/// optional small spots, defined in continuous voxel coordinates of an
/// `n`-cube.
#[derive(Clone, Debug)]
pub struct BodyPhantom {
    n: usize,
    edge_width: f64,
    spots: Vec<([f64; 3], f64, f64)>,
}

impl BodyPhantom {
    pub fn new(n: usize) -> Self {
        BodyPhantom { n, edge_width: 1.0, spots: Vec::new() }
    }

    /// Adds `count` seeded spherical spots (radius 1.5 to 3.5 voxels at
    /// scale 64, contrast ±20 to ±50) inside the body, so that every region
    /// carries structure in all directions.
    pub fn with_spots(mut self, count: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = self.n as f64 / 64.0;
        let c = self.center();
        while self.spots.len() < count {
            let p = [
                c + rng.random_range(-24.0..24.0) * s,
                c + rng.random_range(-20.0..20.0) * s,
                c + rng.random_range(-22.0..22.0) * s,
            ];
            let r = rng.random_range(1.5..3.5) * s;
            if self.body_distance(&p) > -(r + 1.0) {
                continue;
            }
            let amp = rng.random_range(20.0..50.0) * if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            self.spots.push((p, r, amp));
        }
        self
    }

    pub fn geometry(&self) -> GridGeometry {
        GridGeometry::unit(&[self.n; 3]).expect("positive size")
    }

    fn center(&self) -> f64 {
        (self.n as f64 - 1.0) / 2.0
    }

    fn body_distance(&self, p: &Point) -> f64 {
        let s = self.n as f64 / 64.0;
        let c = self.center();
        ellipsoid(p, [c; 3], [26.0 * s, 22.0 * s, 24.0 * s], 3)
    }

    /// Intensity at `p` (voxel coordinates); about 0 to 180 without spots.
    pub fn intensity(&self, p: &Point) -> f64 {
        let s = self.n as f64 / 64.0;
        let c = self.center();
        let at = |o: [f64; 3]| [c + o[0] * s, c + o[1] * s, c + o[2] * s];
        let sc = |a: [f64; 3]| [a[0] * s, a[1] * s, a[2] * s];
        let w = self.edge_width;
        100.0 * soft(self.body_distance(p), w)
            + 80.0 * soft(ellipsoid(p, at([-8.0, -6.0, -4.0]), sc([7.0; 3]), 3), w)
            - 60.0 * soft(ellipsoid(p, at([9.0, 5.0, 3.0]), sc([8.0, 5.0, 6.0]), 3), w)
            + 50.0 * soft(ellipsoid(p, at([2.0, -10.0, 8.0]), sc([4.0; 3]), 3), w)
            + 60.0 * soft(ellipsoid(p, at([-10.0, 10.0, 0.0]), sc([3.0, 3.0, 12.0]), 3), w)
            + self
                .spots
                .iter()
                .map(|(c, r, a)| {
                    let d = (0..3).map(|k| (p[k] - c[k]).powi(2)).sum::<f64>().sqrt() - r;
                    if d > 8.0 * w { 0.0 } else { a * soft(d, w) }
                })
                .sum::<f64>()
    }

    pub fn volume(&self) -> ScalarVolume {
        ScalarVolume::from_fn(self.geometry(), |p| self.intensity(p)).expect("finite phantom")
    }

    /// The phantom rounded to integers (exact under `max - I`).
    pub fn integer_volume(&self) -> ScalarVolume {
        ScalarVolume::from_fn(self.geometry(), |p| self.intensity(p).round()).expect("finite phantom")
    }

    /// Nonzero inside the body.
    pub fn body_mask(&self) -> LabelVolume {
        LabelVolume::from_fn(self.geometry(), |p| (self.body_distance(p) < 0.0) as u32)
    }
}

/// Axial brain-like slice: scalp, skull, CSF, folded cortex, white matter,
/// ventricles and deep grey nuclei with T1-like contrast.
pub fn brain_slice(n: usize) -> ScalarVolume {
    let g = GridGeometry::unit(&[n, n]).expect("positive size");
    let s = n as f64 / 128.0;
    let c = (n as f64 - 1.0) / 2.0;
    let w = 0.6;
    let e = |p: &Point, o: [f64; 2], a: [f64; 2]| {
        soft(ellipsoid(p, [c + o[0] * s, c + o[1] * s, 0.0], [a[0] * s, a[1] * s, 1.0], 2), w)
    };
    ScalarVolume::from_fn(g, |p| {
        let (x, y) = (p[0] - c, p[1] - c);
        let theta = y.atan2(x);
        let fold = 1.0 + 0.1 * (7.0 * theta).sin() + 0.04 * (13.0 * theta + 0.5).cos();
        let wm = soft(ellipsoid(p, [c, c, 0.0], [38.0 * s * fold, 30.0 * s * fold, 1.0], 2), w);
        70.0 * e(p, [0.0, 0.0], [58.0, 50.0]) - 55.0 * e(p, [0.0, 0.0], [54.0, 46.0])
            + 25.0 * e(p, [0.0, 0.0], [51.0, 43.0])
            + 40.0 * e(p, [0.0, 0.0], [49.0, 41.0])
            + 50.0 * wm
            - 100.0 * (e(p, [-7.0, -4.0], [4.0, 12.0]) + e(p, [7.0, -4.0], [4.0, 12.0]))
            - 50.0 * (e(p, [-16.0, 5.0], [6.0, 8.0]) + e(p, [16.0, 5.0], [6.0, 8.0]))
    })
    .expect("finite phantom")
}

/// Adds zero-mean Gaussian noise with standard deviation `percent` % of the
/// image's dynamic range.
pub fn add_gaussian_noise(v: &ScalarVolume, percent: f64, seed: u64) -> Result<ScalarVolume> {
    if !(percent >= 0.0 && percent.is_finite()) {
        return Err(Error::Parameter(format!("noise level must be non-negative, got {percent}")));
    }
    let (lo, hi) = v.min_max();
    let sigma = percent / 100.0 * (hi - lo);
    if sigma == 0.0 {
        return Ok(v.clone());
    }
    let normal = Normal::new(0.0, sigma).map_err(|e| Error::Parameter(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = v.values().iter().map(|x| x + normal.sample(&mut rng)).collect();
    ScalarVolume::new(v.geometry().clone(), values)
}

/// Random cubic B-spline deformation on `domain` with control spacing
/// `spacing_vox` whose largest displacement over the voxel centres is
/// `max_displacement` voxels.
pub fn random_bspline_warp(domain: &GridGeometry, spacing_vox: f64, max_displacement: f64, seed: u64) -> Result<BSplineTransform> {
    let mm: Vec<f64> = domain.spacing().iter().map(|s| s * spacing_vox).collect();
    let mut t = BSplineTransform::covering(domain, &mm)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p: Vec<f64> = (0..t.n_parameters()).map(|_| rng.random_range(-1.0..1.0)).collect();
    t.set_parameters(&p)?;
    let inv: Vec<f64> = domain.spacing().iter().map(|s| 1.0 / s).collect();
    let peak = crate::par::map(domain.len(), |i| {
        let d = t.displacement(&domain.voxel_point(i));
        (0..domain.ndim()).map(|k| (d[k] * inv[k]).powi(2)).sum::<f64>().sqrt()
    })
    .into_iter()
    .fold(0.0f64, f64::max);
    if peak == 0.0 {
        return Err(Error::Parameter("warp has no displacement".into()));
    }
    let scaled: Vec<f64> = p.iter().map(|c| c * max_displacement / peak).collect();
    t.set_parameters(&scaled)?;
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transform::SpatialTransform;

    #[test]
    fn body_phantom_has_contrast_inside_body() {
        let ph = BodyPhantom::new(32);
        let v = ph.volume();
        let (lo, hi) = v.min_max();
        assert!(lo >= -1e-6 && hi > 150.0);
        assert!(v.get(0, 0, 0) < 1e-3);
        let mask = ph.body_mask();
        assert!(mask.count() > 32 * 32 * 32 / 6);
        let iv = ph.integer_volume();
        assert!(iv.values().iter().all(|x| x.fract() == 0.0));
        let spotted = BodyPhantom::new(32).with_spots(20, 3);
        assert_eq!(spotted.spots.len(), 20);
        assert_ne!(spotted.volume(), v);
        assert_eq!(spotted.volume().get(0, 0, 0), v.get(0, 0, 0));
    }

    #[test]
    fn brain_slice_has_tissue_classes() {
        let v = brain_slice(128);
        assert_eq!(v.geometry().dims(), &[128, 128]);
        let wm = v.get(64, 85, 0);
        let gm = v.get(64, 64 + 45, 0);
        assert!(wm > gm && gm > 0.0, "{wm} {gm}");
        assert!(v.get(0, 0, 0).abs() < 1e-3);
    }

    #[test]
    fn noise_is_seeded_and_scaled() {
        let v = brain_slice(64);
        let a = add_gaussian_noise(&v, 9.0, 7).unwrap();
        let b = add_gaussian_noise(&v, 9.0, 7).unwrap();
        let c = add_gaussian_noise(&v, 9.0, 8).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        let (lo, hi) = v.min_max();
        let n = v.values().len() as f64;
        let var = a.values().iter().zip(v.values()).map(|(x, y)| (x - y).powi(2)).sum::<f64>() / n;
        let expected = 0.09 * (hi - lo);
        assert!((var.sqrt() / expected - 1.0).abs() < 0.05);
        assert_eq!(add_gaussian_noise(&v, 0.0, 1).unwrap(), v);
    }

    #[test]
    fn warp_reaches_requested_peak() {
        let g = GridGeometry::unit(&[20, 20, 20]).unwrap();
        let t = random_bspline_warp(&g, 8.0, 3.0, 1).unwrap();
        let peak = (0..g.len())
            .map(|i| {
                let p = g.voxel_point(i);
                let q = t.apply(&p);
                (0..3).map(|k| (q[k] - p[k]).powi(2)).sum::<f64>().sqrt()
            })
            .fold(0.0f64, f64::max);
        assert!((peak - 3.0).abs() < 1e-9);
    }
}
