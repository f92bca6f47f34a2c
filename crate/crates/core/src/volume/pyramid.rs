use super::{GridGeometry, ScalarVolume};
use crate::error::{Error, Result};

fn gaussian_taps(sigma: f64) -> Vec<f64> {
    let radius = (3.0 * sigma).ceil() as isize;
    let w: Vec<f64> = (-radius..=radius)
        .map(|d| (-(d * d) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|x| x / s).collect()
}

/// Separable Gaussian smoothing with per-axis `sigma` in voxels and
/// replicated borders. A zero sigma leaves that axis untouched.
pub fn gaussian_smooth(v: &ScalarVolume, sigma: &[f64]) -> Result<ScalarVolume> {
    let g = v.geometry();
    if sigma.len() != g.ndim() || sigma.iter().any(|s| !(*s >= 0.0)) {
        return Err(Error::Parameter(format!("invalid smoothing sigma {sigma:?}")));
    }
    let dims = g.dims3();
    let strides = [1, dims[0], dims[0] * dims[1]];
    let mut cur = v.values().to_vec();
    for (a, &s) in sigma.iter().enumerate() {
        if s == 0.0 || dims[a] == 1 {
            continue;
        }
        let taps = gaussian_taps(s);
        let r = (taps.len() / 2) as isize;
        let n = dims[a] as isize;
        let stride = strides[a];
        let src = cur;
        let mut out = vec![0.0; src.len()];
        crate::par::fill(&mut out, |idx| {
            let c = g.voxel_coords(idx)[a] as isize;
            let base = idx - c as usize * stride;
            taps.iter()
                .enumerate()
                .map(|(t, w)| {
                    let p = (c + t as isize - r).clamp(0, n - 1) as usize;
                    w * src[base + p * stride]
                })
                .sum()
        });
        cur = out;
    }
    Ok(ScalarVolume::from_raw(g.clone(), cur))
}

/// Gaussian pre-smoothing (sigma = 0.5 * factor voxels) followed by
/// decimation; spacing grows by the factor, origin is kept.
pub fn downsample(v: &ScalarVolume, factor: &[usize]) -> Result<ScalarVolume> {
    let g = v.geometry();
    if factor.len() != g.ndim() {
        return Err(Error::Parameter(format!(
            "{} factors for a {}-axis grid",
            factor.len(),
            g.ndim()
        )));
    }
    if factor.contains(&0) {
        return Err(Error::Parameter("downsampling factors must be >= 1".into()));
    }
    let out_dims: Vec<usize> = g
        .dims()
        .iter()
        .zip(factor)
        .map(|(&n, &f)| (n - 1) / f + 1)
        .collect();
    for (a, (&n, &f)) in g.dims().iter().zip(factor).enumerate() {
        if f > 1 && out_dims[a] < 2 {
            return Err(Error::PyramidDepth(format!(
                "factor {f} reduces axis {a} ({n} voxels) below 2 voxels"
            )));
        }
    }
    let sigma: Vec<f64> = factor.iter().map(|&f| 0.5 * f as f64).collect();
    let smooth = gaussian_smooth(v, &sigma)?;
    if factor.iter().all(|&f| f == 1) {
        return Ok(smooth);
    }
    let spacing: Vec<f64> = g.spacing().iter().zip(factor).map(|(s, &f)| s * f as f64).collect();
    let og = GridGeometry::new(&out_dims, &spacing, g.origin())?;
    let f3 = {
        let mut f3 = [1usize; 3];
        f3[..factor.len()].copy_from_slice(factor);
        f3
    };
    let src = smooth.values();
    let mut out = vec![0.0; og.len()];
    crate::par::fill(&mut out, |idx| {
        let c = og.voxel_coords(idx);
        src[g.linear_index(c[0] * f3[0], c[1] * f3[1], c[2] * f3[2])]
    });
    Ok(ScalarVolume::from_raw(og, out))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn factor_one_keeps_geometry() {
        let g = GridGeometry::new(&[6, 5, 4], &[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap();
        let v = ScalarVolume::from_fn(g.clone(), |p| p[0] * p[1]).unwrap();
        let d = downsample(&v, &[1, 1, 1]).unwrap();
        assert_eq!(d.geometry(), &g);
        assert_ne!(d.values(), v.values());
    }

    #[test]
    fn constant_stays_constant() {
        let g = GridGeometry::unit(&[9, 8, 7]).unwrap();
        let v = ScalarVolume::filled(g, 5.0);
        for f in [1usize, 2, 3] {
            let d = downsample(&v, &[f, f, f]).unwrap();
            for x in d.values() {
                assert!((x - 5.0).abs() <= 5.0 * 1e-14);
            }
            assert!((d.mean() - 5.0).abs() <= 5.0 * 1e-14);
        }
    }

    #[test]
    fn checkerboard_values_strictly_inside_range() {
        let g = GridGeometry::unit(&[8, 8]).unwrap();
        let v = ScalarVolume::from_fn(g, |p| ((p[0] as i64 + p[1] as i64) % 2) as f64).unwrap();
        let d = downsample(&v, &[2, 2]).unwrap();
        assert_eq!(d.geometry().dims(), &[4, 4]);
        assert_eq!(d.geometry().spacing(), &[2.0, 2.0]);
        for &x in d.values() {
            assert!(x > 0.0 && x < 1.0, "{x}");
        }
        // Reference: separable 7-tap Gaussian with sigma 1, replicated borders.
        let w: Vec<f64> = (-3i32..=3).map(|d| (-(d * d) as f64 / 2.0).exp()).collect();
        let s: f64 = w.iter().sum();
        let at = |i: i32, j: i32| ((i.clamp(0, 7) + j.clamp(0, 7)) % 2) as f64;
        let mut oracle = 0.0;
        for (a, wa) in w.iter().enumerate() {
            for (b, wb) in w.iter().enumerate() {
                oracle += wa * wb * at(2 + a as i32 - 3, 2 + b as i32 - 3);
            }
        }
        oracle /= s * s;
        let got = d.get(1, 1, 0);
        assert!((got - oracle).abs() < 1e-12, "{got} vs {oracle}");
    }

    #[test]
    fn too_deep_pyramid_is_an_error() {
        let v = ScalarVolume::filled(GridGeometry::unit(&[3, 16]).unwrap(), 1.0);
        assert!(matches!(downsample(&v, &[4, 2]), Err(Error::PyramidDepth(_))));
    }
}
