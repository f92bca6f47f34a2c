use super::{GridGeometry, Point, ScalarVolume};

/// Fill value for samples outside the grid.
pub const DEFAULT_FILL: f64 = 0.0;

/// Multilinear interpolation at a physical point; out-of-grid neighbours take
/// the value [`DEFAULT_FILL`].
pub fn sample_linear(v: &ScalarVolume, p: &Point) -> f64 {
    sample_linear_fill(v, p, DEFAULT_FILL)
}

pub fn sample_linear_fill(v: &ScalarVolume, p: &Point, fill: f64) -> f64 {
    let g = v.geometry();
    sample_index(v.values(), g, &g.physical_to_index(p), fill)
}

#[inline]
fn axis_cell(u: f64, n: usize) -> Option<(isize, f64)> {
    // Neighbours i0 and i0 + 1 both outside the grid.
    if !(u > -1.0 && u < n as f64) {
        return None;
    }
    let f = u.floor();
    Some((f as isize, u - f))
}

#[inline]
fn fetch(values: &[f64], dims: &[usize; 3], i: isize, j: isize, k: isize, fill: f64) -> f64 {
    if i < 0
        || j < 0
        || k < 0
        || i as usize >= dims[0]
        || j as usize >= dims[1]
        || k as usize >= dims[2]
    {
        fill
    } else {
        values[i as usize + dims[0] * (j as usize + dims[1] * k as usize)]
    }
}

/// Interpolates at continuous index `u`.
#[inline]
pub(crate) fn sample_index(values: &[f64], g: &GridGeometry, u: &[f64; 3], fill: f64) -> f64 {
    let dims = g.dims3();
    let Some((i, tx)) = axis_cell(u[0], dims[0]) else { return fill };
    let Some((j, ty)) = axis_cell(u[1], dims[1]) else { return fill };
    if g.ndim() == 2 {
        let v00 = fetch(values, &dims, i, j, 0, fill);
        let v10 = fetch(values, &dims, i + 1, j, 0, fill);
        let v01 = fetch(values, &dims, i, j + 1, 0, fill);
        let v11 = fetch(values, &dims, i + 1, j + 1, 0, fill);
        let a = v00 + tx * (v10 - v00);
        let b = v01 + tx * (v11 - v01);
        return a + ty * (b - a);
    }
    let Some((k, tz)) = axis_cell(u[2], dims[2]) else { return fill };
    let c = |di, dj, dk| fetch(values, &dims, i + di, j + dj, k + dk, fill);
    let (c000, c100, c010, c110) = (c(0, 0, 0), c(1, 0, 0), c(0, 1, 0), c(1, 1, 0));
    let (c001, c101, c011, c111) = (c(0, 0, 1), c(1, 0, 1), c(0, 1, 1), c(1, 1, 1));
    let x00 = c000 + tx * (c100 - c000);
    let x10 = c010 + tx * (c110 - c010);
    let x01 = c001 + tx * (c101 - c001);
    let x11 = c011 + tx * (c111 - c011);
    let y0 = x00 + ty * (x10 - x00);
    let y1 = x01 + ty * (x11 - x01);
    y0 + tz * (y1 - y0)
}

/// Value and index-space gradient of the multilinear interpolant.
#[inline]
pub(crate) fn sample_index_with_gradient(
    values: &[f64],
    g: &GridGeometry,
    u: &[f64; 3],
    fill: f64,
) -> (f64, [f64; 3]) {
    let dims = g.dims3();
    let Some((i, tx)) = axis_cell(u[0], dims[0]) else { return (fill, [0.0; 3]) };
    let Some((j, ty)) = axis_cell(u[1], dims[1]) else { return (fill, [0.0; 3]) };
    if g.ndim() == 2 {
        let v00 = fetch(values, &dims, i, j, 0, fill);
        let v10 = fetch(values, &dims, i + 1, j, 0, fill);
        let v01 = fetch(values, &dims, i, j + 1, 0, fill);
        let v11 = fetch(values, &dims, i + 1, j + 1, 0, fill);
        let a = v00 + tx * (v10 - v00);
        let b = v01 + tx * (v11 - v01);
        let gx = (1.0 - ty) * (v10 - v00) + ty * (v11 - v01);
        return (a + ty * (b - a), [gx, b - a, 0.0]);
    }
    let Some((k, tz)) = axis_cell(u[2], dims[2]) else { return (fill, [0.0; 3]) };
    let c = |di, dj, dk| fetch(values, &dims, i + di, j + dj, k + dk, fill);
    let (c000, c100, c010, c110) = (c(0, 0, 0), c(1, 0, 0), c(0, 1, 0), c(1, 1, 0));
    let (c001, c101, c011, c111) = (c(0, 0, 1), c(1, 0, 1), c(0, 1, 1), c(1, 1, 1));
    let x00 = c000 + tx * (c100 - c000);
    let x10 = c010 + tx * (c110 - c010);
    let x01 = c001 + tx * (c101 - c001);
    let x11 = c011 + tx * (c111 - c011);
    let y0 = x00 + ty * (x10 - x00);
    let y1 = x01 + ty * (x11 - x01);
    let value = y0 + tz * (y1 - y0);

    let (sy, sz) = (1.0 - ty, 1.0 - tz);
    let gx = sz * (sy * (c100 - c000) + ty * (c110 - c010))
        + tz * (sy * (c101 - c001) + ty * (c111 - c011));
    let gy = sz * (x10 - x00) + tz * (x11 - x01);
    let gz = y1 - y0;
    (value, [gx, gy, gz])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vol3() -> ScalarVolume {
        let g = GridGeometry::new(&[4, 5, 6], &[1.0, 2.0, 0.5], &[1.0, -1.0, 0.0]).unwrap();
        ScalarVolume::from_fn(g, |p| (p[0] * 1.3).sin() + p[1] * p[2]).unwrap()
    }

    #[test]
    fn voxel_centers_are_reproduced() {
        let v = vol3();
        let g = v.geometry();
        for idx in 0..g.len() {
            assert_eq!(sample_linear(&v, &g.voxel_point(idx)), v.values()[idx]);
        }
    }

    #[test]
    fn midpoint_is_average() {
        let g = GridGeometry::unit(&[2, 2]).unwrap();
        let v = ScalarVolume::new(g, vec![2.0, 4.0, 2.0, 4.0]).unwrap();
        assert_eq!(sample_linear(&v, &[0.5, 0.0, 0.0]), 3.0);
    }

    #[test]
    fn far_outside_returns_fill() {
        let v = vol3();
        assert_eq!(sample_linear(&v, &[-100.0, 0.0, 0.0]), 0.0);
        assert_eq!(sample_linear_fill(&v, &[1.0, 500.0, 1.0], -7.0), -7.0);
    }

    #[test]
    fn affine_intensity_is_exact() {
        let g = GridGeometry::new(&[5, 6, 4], &[1.5, 1.0, 2.0], &[0.0, 0.0, 0.0]).unwrap();
        let f = |p: &Point| 0.5 + 2.0 * p[0] - 3.0 * p[1] + 0.25 * p[2];
        let v = ScalarVolume::from_fn(g, f).unwrap();
        for p in [[1.1, 2.3, 0.7], [4.9, 0.2, 5.9], [3.0, 4.99, 1.0]] {
            assert!((sample_linear(&v, &p) - f(&p)).abs() < 1e-12);
        }
    }

    #[test]
    fn analytic_gradient_matches_differences() {
        let v = vol3();
        let g = v.geometry();
        let u = [1.3, 2.6, 3.2];
        let (val, grad) = sample_index_with_gradient(v.values(), g, &u, 0.0);
        assert_eq!(val, sample_index(v.values(), g, &u, 0.0));
        let h = 1e-6;
        for a in 0..3 {
            let mut up = u;
            let mut dn = u;
            up[a] += h;
            dn[a] -= h;
            let fd = (sample_index(v.values(), g, &up, 0.0) - sample_index(v.values(), g, &dn, 0.0))
                / (2.0 * h);
            assert!((fd - grad[a]).abs() < 1e-6, "axis {a}: {fd} vs {}", grad[a]);
        }
    }
}
