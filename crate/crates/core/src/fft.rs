//! Zero-padded FFT convolution on 2-D/3-D grids.

use num_complex::Complex64;
use rustfft::FftPlanner;

/// Smallest `n' >= n` whose only prime factors are 2, 3 and 5.
pub(crate) fn fast_len(n: usize) -> usize {
    let mut m = n.max(1);
    loop {
        let mut r = m;
        for p in [2, 3, 5] {
            while r.is_multiple_of(p) {
                r /= p;
            }
        }
        if r == 1 {
            return m;
        }
        m += 1;
    }
}

/// Complex buffer on a padded 3-D box, x fastest.
pub(crate) struct Spectrum {
    pub dims: [usize; 3],
    pub data: Vec<Complex64>,
}

impl Spectrum {
    pub fn zeros(dims: [usize; 3]) -> Self {
        Spectrum { dims, data: vec![Complex64::new(0.0, 0.0); dims.iter().product()] }
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.dims[0] * (j + self.dims[1] * k)
    }

    pub fn forward(&mut self) {
        self.transform(false);
    }

    /// Inverse transform including the 1/N normalisation.
    pub fn inverse(&mut self) {
        self.transform(true);
        let s = 1.0 / self.data.len() as f64;
        for v in &mut self.data {
            *v *= s;
        }
    }

    fn transform(&mut self, inverse: bool) {
        let [nx, ny, nz] = self.dims;
        let mut planner = FftPlanner::<f64>::new();
        let plan = |planner: &mut FftPlanner<f64>, n: usize| {
            if inverse {
                planner.plan_fft_inverse(n)
            } else {
                planner.plan_fft_forward(n)
            }
        };
        // x lines are contiguous.
        if nx > 1 {
            let fft = plan(&mut planner, nx);
            crate::par::for_each_chunk_mut(&mut self.data, nx, |_, line| fft.process(line));
        }
        // y lines: each z slab is independent.
        if ny > 1 {
            let fft = plan(&mut planner, ny);
            crate::par::for_each_chunk_mut(&mut self.data, nx * ny, |_, slab| {
                let mut line = vec![Complex64::new(0.0, 0.0); ny];
                let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
                for i in 0..nx {
                    for j in 0..ny {
                        line[j] = slab[i + nx * j];
                    }
                    fft.process_with_scratch(&mut line, &mut scratch);
                    for j in 0..ny {
                        slab[i + nx * j] = line[j];
                    }
                }
            });
        }
        // z lines: gather per y row, transform, scatter back.
        if nz > 1 {
            let fft = plan(&mut planner, nz);
            let data = &self.data;
            let rows: Vec<Vec<Complex64>> = crate::par::map(ny, |j| {
                let mut out = vec![Complex64::new(0.0, 0.0); nx * nz];
                let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
                for i in 0..nx {
                    let line = &mut out[i * nz..(i + 1) * nz];
                    for (k, v) in line.iter_mut().enumerate() {
                        *v = data[i + nx * (j + ny * k)];
                    }
                    fft.process_with_scratch(line, &mut scratch);
                }
                out
            });
            for (j, row) in rows.into_iter().enumerate() {
                for i in 0..nx {
                    for k in 0..nz {
                        self.data[i + nx * (j + ny * k)] = row[i * nz + k];
                    }
                }
            }
        }
    }

    /// Pointwise product in place.
    pub fn multiply(&mut self, other: &Spectrum) {
        debug_assert_eq!(self.dims, other.dims);
        let o = &other.data;
        crate::par::for_each_chunk_mut(&mut self.data, crate::par::CHUNK, |c, s| {
            let base = c * crate::par::CHUNK;
            for (k, v) in s.iter_mut().enumerate() {
                *v *= o[base + k];
            }
        });
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fast_lengths() {
        assert_eq!(fast_len(1), 1);
        assert_eq!(fast_len(7), 8);
        assert_eq!(fast_len(114), 120);
        assert_eq!(fast_len(121), 125);
    }

    #[test]
    fn forward_inverse_round_trip() {
        let mut s = Spectrum::zeros([6, 5, 4]);
        for (i, v) in s.data.iter_mut().enumerate() {
            *v = Complex64::new((i as f64 * 0.3).sin(), (i as f64 * 0.11).cos());
        }
        let orig = s.data.clone();
        s.forward();
        s.inverse();
        for (a, b) in s.data.iter().zip(&orig) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn dc_term_is_sum() {
        let mut s = Spectrum::zeros([4, 3, 2]);
        for (i, v) in s.data.iter_mut().enumerate() {
            *v = Complex64::new(i as f64, 0.0);
        }
        s.forward();
        assert!((s.data[0].re - (0..24).sum::<usize>() as f64).abs() < 1e-9);
    }
}
