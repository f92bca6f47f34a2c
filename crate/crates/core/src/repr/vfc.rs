use num_complex::Complex64;

use super::{EdgeMap, VectorFieldKernel};
use crate::error::{Error, Result};
use crate::fft::{fast_len, Spectrum};
use crate::volume::VectorField;

/// How `vfc_field` evaluates the convolution.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ConvolutionMethod {
    /// Direct summation for small problems, FFT otherwise.
    #[default]
    Auto,
    Direct,
    Fourier,
}

/// Voxel-times-tap count under which `Auto` sums directly.
const DIRECT_WORK_LIMIT: usize = 1 << 21;
/// Upper bound on padded FFT buffers (complex samples).
const MAX_PADDED_VOXELS: usize = 1 << 28;

/// `F = f * K`, one convolution per vector component, zero outside the grid.
pub fn vfc_field(em: &EdgeMap, k: &VectorFieldKernel) -> Result<VectorField> {
    vfc_field_with(em, k, ConvolutionMethod::Auto)
}

pub fn vfc_field_with(em: &EdgeMap, k: &VectorFieldKernel, method: ConvolutionMethod) -> Result<VectorField> {
    let g = em.geometry();
    if g.ndim() != k.ndim() {
        return Err(Error::Config(format!(
            "{}-axis kernel applied to a {}-axis edge map",
            k.ndim(),
            g.ndim()
        )));
    }
    let reach = effective_reach(em, k);
    let taps: usize = reach.iter().map(|r| 2 * r + 1).product();
    let method = match method {
        ConvolutionMethod::Auto if g.len().saturating_mul(taps) <= DIRECT_WORK_LIMIT => ConvolutionMethod::Direct,
        ConvolutionMethod::Auto => ConvolutionMethod::Fourier,
        m => m,
    };
    match method {
        ConvolutionMethod::Direct => Ok(direct(em, k, reach)),
        _ => fourier(em, k, reach),
    }
}

/// Kernel taps farther than the grid extent never reach a grid voxel.
fn effective_reach(em: &EdgeMap, k: &VectorFieldKernel) -> [usize; 3] {
    let d = em.geometry().dims3();
    let mut r = [0; 3];
    for a in 0..k.ndim() {
        r[a] = k.radius().min(d[a] - 1);
    }
    r
}

fn direct(em: &EdgeMap, k: &VectorFieldKernel, reach: [usize; 3]) -> VectorField {
    let g = em.geometry().clone();
    let dims = g.dims3();
    let f = em.values();
    let n = g.ndim();
    // Output-major loop: F(x) = sum_y f(y) K(x - y).
    let vectors: Vec<[f64; 3]> = crate::par::map(g.len(), |idx| {
        let c = g.voxel_coords(idx);
        let mut acc = [0.0; 3];
        let lo = |a: usize| c[a].saturating_sub(reach[a]);
        let hi = |a: usize| (c[a] + reach[a]).min(dims[a] - 1);
        for z in lo(2)..=hi(2) {
            for y in lo(1)..=hi(1) {
                for x in lo(0)..=hi(0) {
                    let w = f[g.linear_index(x, y, z)];
                    if w == 0.0 {
                        continue;
                    }
                    let t = k.tap([
                        c[0] as isize - x as isize,
                        c[1] as isize - y as isize,
                        c[2] as isize - z as isize,
                    ]);
                    for a in 0..n {
                        acc[a] += w * t[a];
                    }
                }
            }
        }
        acc
    });
    let components = (0..n).map(|a| vectors.iter().map(|v| v[a]).collect()).collect();
    VectorField::from_raw(g, components)
}

fn fourier(em: &EdgeMap, k: &VectorFieldKernel, reach: [usize; 3]) -> Result<VectorField> {
    let g = em.geometry().clone();
    let dims = g.dims3();
    let n = g.ndim();
    // Padding by the reach alone already keeps circular wrap-around out of
    // the cropped output.
    let mut padded = [1; 3];
    for a in 0..n {
        padded[a] = fast_len(dims[a] + reach[a]);
    }
    if padded.iter().product::<usize>() > MAX_PADDED_VOXELS {
        return Err(Error::Config(format!(
            "padded convolution grid {padded:?} is too large"
        )));
    }

    let load_kernel = |comp_re: usize, comp_im: Option<usize>| {
        let mut s = Spectrum::zeros(padded);
        let r = [reach[0] as isize, reach[1] as isize, reach[2] as isize];
        for dz in -r[2]..=r[2] {
            for dy in -r[1]..=r[1] {
                for dx in -r[0]..=r[0] {
                    let t = k.tap([dx, dy, dz]);
                    let wrap = |d: isize, p: usize| d.rem_euclid(p as isize) as usize;
                    let i = s.index(wrap(dx, padded[0]), wrap(dy, padded[1]), wrap(dz, padded[2]));
                    s.data[i] = Complex64::new(t[comp_re], comp_im.map_or(0.0, |c| t[c]));
                }
            }
        }
        s.forward();
        s
    };

    let load_edges = || {
        let mut s = Spectrum::zeros(padded);
        let f = em.values();
        for z in 0..dims[2] {
            for y in 0..dims[1] {
                for x in 0..dims[0] {
                    let i = s.index(x, y, z);
                    s.data[i] = Complex64::new(f[g.linear_index(x, y, z)], 0.0);
                }
            }
        }
        s.forward();
        s
    };

    // x and y share one complex transform (real and imaginary parts).
    let (edges, (kxy, kz)) = crate::par::join(load_edges, || {
        crate::par::join(|| load_kernel(0, Some(1)), || (n == 3).then(|| load_kernel(2, None)))
    });

    let crop = |s: &Spectrum, imag: bool| -> Vec<f64> {
        let mut out = vec![0.0; g.len()];
        crate::par::fill(&mut out, |idx| {
            let c = g.voxel_coords(idx);
            let v = s.data[s.index(c[0], c[1], c[2])];
            if imag {
                v.im
            } else {
                v.re
            }
        });
        out
    };

    let mut xy = Spectrum { dims: padded, data: edges.data.clone() };
    xy.multiply(&kxy);
    xy.inverse();
    let mut components = vec![crop(&xy, false), crop(&xy, true)];
    drop(xy);
    if let Some(kz) = kz {
        let mut z = edges;
        z.multiply(&kz);
        z.inverse();
        components.push(crop(&z, false));
    }
    Ok(VectorField::from_raw(g, components))
}
