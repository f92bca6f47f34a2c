use crate::error::{Error, Result};
use crate::par;

/// Joint histogram with partial-volume (linear) bin assignment.
///
/// A value `v` maps to the continuous bin coordinate
/// `t = (v - lo) / (hi - lo) * (bins - 1)`, clamped to `[0, bins - 1]`, and
/// its unit weight is split between the two nearest bins. A sample pair
/// spreads over the four neighbouring cells with the comonotone coupling of
/// the two splits: the marginals are the linear splits, and a pair of equal
/// values stays on the diagonal, so `NMI(a, a) = 2`.
#[derive(Clone, Debug, PartialEq)]
pub struct JointHistogram {
    bins: usize,
    range_a: (f64, f64),
    range_b: (f64, f64),
    counts: Vec<f64>,
    total: f64,
}

#[derive(Clone, Copy)]
struct Binning {
    lo: f64,
    scale: f64,
    bins: usize,
}

impl Binning {
    fn new(range: (f64, f64), bins: usize) -> Self {
        Binning { lo: range.0, scale: (bins - 1) as f64 / (range.1 - range.0), bins }
    }

    /// Lower bin, weight of the upper bin, and `dt/dv` (0 when clamped).
    #[inline]
    fn locate(&self, v: f64) -> (usize, f64, f64) {
        let t = (v - self.lo) * self.scale;
        let top = (self.bins - 1) as f64;
        if t <= 0.0 {
            return (0, 0.0, 0.0);
        }
        if t >= top {
            return (self.bins - 2, 1.0, 0.0);
        }
        let i = (t.floor() as usize).min(self.bins - 2);
        (i, t - i as f64, self.scale)
    }
}

fn check_range(r: (f64, f64)) -> Result<()> {
    if !(r.0.is_finite() && r.1.is_finite()) || r.1 - r.0 <= 1e-12 * (1.0 + r.0.abs().max(r.1.abs())) {
        return Err(Error::UndefinedMetric(format!("histogram range [{}, {}] is empty", r.0, r.1)));
    }
    Ok(())
}

/// Min and max over the active samples.
pub(crate) fn value_range(values: &[f64], mask: Option<&[u32]>) -> Result<(f64, f64)> {
    let parts = par::map_chunks(values.len(), par::CHUNK, |r| {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in r {
            if mask.is_none_or(|m| m[i] != 0) {
                lo = lo.min(values[i]);
                hi = hi.max(values[i]);
            }
        }
        (lo, hi)
    });
    let (lo, hi) = parts
        .into_iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |a, p| (a.0.min(p.0), a.1.max(p.1)));
    if lo > hi {
        return Err(Error::EmptySupport("no voxels in mask".into()));
    }
    Ok((lo, hi))
}

fn entropy(p: impl Iterator<Item = f64>) -> f64 {
    -p.filter(|&q| q > 0.0).map(|q| q * q.ln()).sum::<f64>()
}

impl JointHistogram {
    /// Empty histogram with `bins` bins per axis over the given value ranges.
    pub fn new(bins: usize, range_a: (f64, f64), range_b: (f64, f64)) -> Result<Self> {
        if bins < 2 {
            return Err(Error::Parameter("histogram needs at least 2 bins".into()));
        }
        check_range(range_a)?;
        check_range(range_b)?;
        Ok(JointHistogram { bins, range_a, range_b, counts: vec![0.0; bins * bins], total: 0.0 })
    }

    /// Adds all active sample pairs.
    pub fn accumulate(&mut self, a: &[f64], b: &[f64], mask: Option<&[u32]>) -> Result<()> {
        if a.len() != b.len() {
            return Err(Error::LengthMismatch { expected: a.len(), got: b.len() });
        }
        let (ba, bb) = (Binning::new(self.range_a, self.bins), Binning::new(self.range_b, self.bins));
        let nb = self.bins;
        let parts = par::map_chunks(a.len(), par::CHUNK, |r| {
            let mut h = vec![0.0; nb * nb];
            let mut n = 0.0;
            for x in r {
                if mask.is_none_or(|m| m[x] != 0) {
                    let (i, fi, _) = ba.locate(a[x]);
                    let (j, fj, _) = bb.locate(b[x]);
                    h[i * nb + j] += (1.0 - fi).min(1.0 - fj);
                    h[(i + 1) * nb + j + 1] += fi.min(fj);
                    if fi > fj {
                        h[(i + 1) * nb + j] += fi - fj;
                    } else {
                        h[i * nb + j + 1] += fj - fi;
                    }
                    n += 1.0;
                }
            }
            (h, n)
        });
        for (h, n) in parts {
            for (c, v) in self.counts.iter_mut().zip(h) {
                *c += v;
            }
            self.total += n;
        }
        Ok(())
    }

    pub fn bins(&self) -> usize {
        self.bins
    }

    /// Accumulated weight per `(a_bin, b_bin)`, row-major in `a`.
    pub fn counts(&self) -> &[f64] {
        &self.counts
    }

    /// Number of sample pairs added.
    pub fn total(&self) -> f64 {
        self.total
    }

    fn probabilities(&self) -> Result<Vec<f64>> {
        if self.total == 0.0 {
            return Err(Error::EmptySupport("histogram is empty".into()));
        }
        Ok(self.counts.iter().map(|c| c / self.total).collect())
    }

    /// Marginal entropies `(H(A), H(B))` in nats.
    pub fn marginal_entropies(&self) -> Result<(f64, f64)> {
        let p = self.probabilities()?;
        let nb = self.bins;
        let pa = (0..nb).map(|i| p[i * nb..(i + 1) * nb].iter().sum::<f64>());
        let ha = entropy(pa);
        let hb = entropy((0..nb).map(|j| (0..nb).map(|i| p[i * nb + j]).sum::<f64>()));
        Ok((ha, hb))
    }

    /// Joint entropy `H(A, B)` in nats.
    pub fn joint_entropy(&self) -> Result<f64> {
        Ok(entropy(self.probabilities()?.into_iter()))
    }

    /// `(H(A) + H(B)) / H(A, B)`.
    pub fn nmi(&self) -> Result<f64> {
        let (ha, hb) = self.marginal_entropies()?;
        let hab = self.joint_entropy()?;
        if hab <= 0.0 {
            return Err(Error::UndefinedMetric("joint entropy is zero".into()));
        }
        Ok((ha + hb) / hab)
    }
}

/// NMI over fixed ranges; `grad` receives `d/db` when given.
pub(crate) fn nmi_slices(
    a: &[f64],
    b: &[f64],
    mask: Option<&[u32]>,
    bins: usize,
    range_a: (f64, f64),
    range_b: (f64, f64),
    grad: Option<&mut [f64]>,
) -> Result<f64> {
    let mut h = JointHistogram::new(bins, range_a, range_b)?;
    h.accumulate(a, b, mask)?;
    if h.total == 0.0 {
        return Err(Error::EmptySupport("no voxels in mask".into()));
    }
    let (ha, hb) = h.marginal_entropies()?;
    let hab = h.joint_entropy()?;
    if ha <= 1e-12 || hb <= 1e-12 || hab <= 1e-12 {
        return Err(Error::UndefinedMetric("entropy of a constant image".into()));
    }
    let value = (ha + hb) / hab;
    if let Some(g) = grad {
        let nb = bins;
        let n = h.total;
        let log = |p: f64| if p > 0.0 { (p / n).ln() } else { 0.0 };
        let log_joint: Vec<f64> = h.counts.iter().map(|&c| log(c)).collect();
        let log_b: Vec<f64> = (0..nb).map(|j| log((0..nb).map(|i| h.counts[i * nb + j]).sum())).collect();
        let (ba, bb) = (Binning::new(range_a, bins), Binning::new(range_b, bins));
        par::fill(g, |x| {
            if !mask.is_none_or(|m| m[x] != 0) {
                return 0.0;
            }
            let (j, _, s) = bb.locate(b[x]);
            if s == 0.0 {
                return 0.0;
            }
            let (i, fi, _) = ba.locate(a[x]);
            let (_, fj, _) = bb.locate(b[x]);
            // Moving b shifts weight between two cells of a single row.
            let r = if fj < fi { i + 1 } else { i };
            let dhb = -(s / n) * (log_b[j + 1] - log_b[j]);
            let dhab = -(s / n) * (log_joint[r * nb + j + 1] - log_joint[r * nb + j]);
            (dhb - value * dhab) / hab
        });
    }
    Ok(value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Straight-line partial-volume NMI, written independently of the
    /// chunked implementation: the coupling is built by sweeping both unit
    /// intervals together.
    fn reference_nmi(a: &[f64], b: &[f64], bins: usize) -> f64 {
        let lo_a = a.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi_a = a.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lo_b = b.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi_b = b.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut joint = vec![vec![0.0; bins]; bins];
        let spread = |v: f64, lo: f64, hi: f64| -> Vec<(usize, f64)> {
            let t = (v - lo) / (hi - lo) * (bins - 1) as f64;
            let k = (t.floor() as usize).min(bins - 2);
            vec![(k, 1.0 - (t - k as f64)), (k + 1, t - k as f64)]
        };
        for (&x, &y) in a.iter().zip(b) {
            let (sa, sb) = (spread(x, lo_a, hi_a), spread(y, lo_b, hi_b));
            let (mut u, mut p, mut q) = (0.0, 0, 0);
            let (mut ea, mut eb) = (sa[0].1, sb[0].1);
            while u < 1.0 {
                let next = ea.min(eb);
                joint[sa[p].0][sb[q].0] += (next - u) / a.len() as f64;
                u = next;
                if ea <= u && p == 0 {
                    p = 1;
                    ea = 1.0;
                }
                if eb <= u && q == 0 {
                    q = 1;
                    eb = 1.0;
                }
            }
        }
        let h = |ps: Vec<f64>| -> f64 { ps.iter().filter(|p| **p > 0.0).map(|p| -p * p.ln()).sum() };
        let pa: Vec<f64> = joint.iter().map(|r| r.iter().sum()).collect();
        let pb: Vec<f64> = (0..bins).map(|j| joint.iter().map(|r| r[j]).sum()).collect();
        let pab: Vec<f64> = joint.into_iter().flatten().collect();
        (h(pa) + h(pb)) / h(pab)
    }

    fn random(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| rng.random_range(-5.0..20.0)).collect()
    }

    #[test]
    fn matches_reference_histogram() {
        let a = random(10_000, 1);
        let b: Vec<f64> = a.iter().zip(random(10_000, 2)).map(|(x, y)| x + 0.3 * y).collect();
        let ra = value_range(&a, None).unwrap();
        let rb = value_range(&b, None).unwrap();
        let v = nmi_slices(&a, &b, None, 32, ra, rb, None).unwrap();
        assert!((v - reference_nmi(&a, &b, 32)).abs() < 1e-12);
    }

    #[test]
    fn weights_sum_to_sample_count() {
        let a = random(777, 3);
        let mut h = JointHistogram::new(16, (-5.0, 20.0), (-5.0, 20.0)).unwrap();
        h.accumulate(&a, &a, None).unwrap();
        assert!((h.counts().iter().sum::<f64>() - 777.0).abs() < 1e-9);
        assert_eq!(h.total(), 777.0);
    }

    #[test]
    fn identical_images_have_largest_nmi() {
        let a = random(4000, 4);
        let r = value_range(&a, None).unwrap();
        let same = nmi_slices(&a, &a, None, 32, r, r, None).unwrap();
        let b = random(4000, 5);
        let rb = value_range(&b, None).unwrap();
        let indep = nmi_slices(&a, &b, None, 32, r, rb, None).unwrap();
        assert!(same > indep);
        assert!((same - 2.0).abs() < 1e-12 && indep >= 1.0 - 1e-12);
    }

    #[test]
    fn constant_image_is_undefined() {
        let a = random(100, 6);
        assert!(matches!(value_range(&[1.0; 100], None).and_then(|r| JointHistogram::new(8, r, r)), Err(Error::UndefinedMetric(_))));
        let ra = value_range(&a, None).unwrap();
        assert!(nmi_slices(&a, &[0.0; 100], None, 8, ra, (0.0, 1.0), None).is_err());
        assert!(matches!(value_range(&a, Some(&[0; 100])), Err(Error::EmptySupport(_))));
    }

    #[test]
    fn derivative_matches_differences() {
        let a = random(3000, 7);
        let b: Vec<f64> = a.iter().zip(random(3000, 8)).map(|(x, y)| 0.5 * x + y).collect();
        let ra = value_range(&a, None).unwrap();
        let rb = (-20.0, 40.0);
        let mut g = vec![0.0; b.len()];
        nmi_slices(&a, &b, None, 16, ra, rb, Some(&mut g)).unwrap();
        for x in [0, 17, 512, 2999] {
            let h = 1e-5;
            let mut up = b.clone();
            up[x] += h;
            let mut dn = b.clone();
            dn[x] -= h;
            let fd = (nmi_slices(&a, &up, None, 16, ra, rb, None).unwrap()
                - nmi_slices(&a, &dn, None, 16, ra, rb, None).unwrap())
                / (2.0 * h);
            assert!((fd - g[x]).abs() < 1e-6 * (1.0 + fd.abs()), "{x}: {fd} vs {}", g[x]);
        }
    }
}
