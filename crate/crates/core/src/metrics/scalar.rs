use crate::error::{Error, Result};

#[inline]
fn active(mask: Option<&[u32]>, i: usize) -> bool {
    mask.is_none_or(|m| m[i] != 0)
}

fn count(n: usize, mask: Option<&[u32]>) -> Result<usize> {
    let c = match mask {
        Some(m) => m.iter().filter(|&&l| l != 0).count(),
        None => n,
    };
    if c == 0 {
        Err(Error::EmptySupport("no voxels in mask".into()))
    } else {
        Ok(c)
    }
}

/// Mean squared difference; `grad` receives `d/db` when given.
pub(crate) fn ssd_slices(a: &[f64], b: &[f64], mask: Option<&[u32]>, grad: Option<&mut [f64]>) -> Result<f64> {
    let n = count(a.len(), mask)? as f64;
    let s = crate::par::sum(a.len(), |i| {
        if active(mask, i) {
            let d = a[i] - b[i];
            d * d
        } else {
            0.0
        }
    });
    if let Some(g) = grad {
        crate::par::fill(g, |i| if active(mask, i) { -2.0 * (a[i] - b[i]) / n } else { 0.0 });
    }
    Ok(s / n)
}

/// Pearson correlation; `grad` receives `d/db` when given.
pub(crate) fn ncc_slices(a: &[f64], b: &[f64], mask: Option<&[u32]>, grad: Option<&mut [f64]>) -> Result<f64> {
    let n = count(a.len(), mask)? as f64;
    let ma = crate::par::sum(a.len(), |i| if active(mask, i) { a[i] } else { 0.0 }) / n;
    let mb = crate::par::sum(a.len(), |i| if active(mask, i) { b[i] } else { 0.0 }) / n;
    let parts = crate::par::map_chunks(a.len(), crate::par::CHUNK, |r| {
        let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
        for i in r {
            if active(mask, i) {
                let (da, db) = (a[i] - ma, b[i] - mb);
                sab += da * db;
                saa += da * da;
                sbb += db * db;
            }
        }
        (sab, saa, sbb)
    });
    let (sab, saa, sbb) = parts
        .into_iter()
        .fold((0.0, 0.0, 0.0), |acc, p| (acc.0 + p.0, acc.1 + p.1, acc.2 + p.2));
    // Relative floor so that constant images with rounding noise still count
    // as constant.
    let tiny = |s: f64, m: f64| s <= 1e-24 * n * (1.0 + m * m);
    if tiny(saa, ma) || tiny(sbb, mb) {
        return Err(Error::UndefinedMetric("correlation of a constant image".into()));
    }
    let norm = (saa * sbb).sqrt();
    let r = sab / norm;
    if let Some(g) = grad {
        crate::par::fill(g, |i| {
            if active(mask, i) {
                (a[i] - ma) / norm - r * (b[i] - mb) / sbb
            } else {
                0.0
            }
        });
    }
    Ok(r)
}
