use super::Window;
use crate::error::{Error, Result};

/// Hausdorff distance between two finite sets after restriction to `window`.
pub fn hausdorff_distance(a: &[f64], b: &[f64], window: Window) -> Result<f64> {
    let mut ra: Vec<f64> = a.iter().copied().filter(|&x| window.contains(x)).collect();
    let mut rb: Vec<f64> = b.iter().copied().filter(|&x| window.contains(x)).collect();
    if ra.is_empty() || rb.is_empty() {
        return Err(Error::EmptyAfterWindow);
    }
    ra.sort_by(f64::total_cmp);
    rb.sort_by(f64::total_cmp);
    Ok(directed(&ra, &rb).max(directed(&rb, &ra)))
}

fn directed(from: &[f64], to: &[f64]) -> f64 {
    from.iter()
        .map(|&x| {
            let k = to.partition_point(|&v| v < x);
            let mut d = f64::INFINITY;
            if k < to.len() {
                d = d.min(to[k] - x);
            }
            if k > 0 {
                d = d.min(x - to[k - 1]);
            }
            d
        })
        .fold(0.0, f64::max)
}

/// Hausdorff distance between two finite unions of closed intervals, each
/// clipped to `window`. Used for band spectra, which are interval unions.
pub fn hausdorff_intervals(a: &[(f64, f64)], b: &[(f64, f64)], window: Window) -> Result<f64> {
    let ua = clip_merge(a, window);
    let ub = clip_merge(b, window);
    if ua.is_empty() || ub.is_empty() {
        return Err(Error::EmptyAfterWindow);
    }
    Ok(directed_union(&ua, &ub).max(directed_union(&ub, &ua)))
}

fn clip_merge(set: &[(f64, f64)], window: Window) -> Vec<(f64, f64)> {
    let mut v: Vec<(f64, f64)> = set
        .iter()
        .map(|&(lo, hi)| (lo.min(hi).max(window.lo), hi.max(lo).min(window.hi)))
        .filter(|&(lo, hi)| lo <= hi)
        .collect();
    v.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut out: Vec<(f64, f64)> = Vec::with_capacity(v.len());
    for (lo, hi) in v {
        match out.last_mut() {
            Some(last) if lo <= last.1 => last.1 = last.1.max(hi),
            _ => out.push((lo, hi)),
        }
    }
    out
}

fn dist_to_union(x: f64, u: &[(f64, f64)]) -> f64 {
    let k = u.partition_point(|iv| iv.1 < x);
    let mut d = f64::INFINITY;
    if k < u.len() {
        d = d.min((u[k].0 - x).max(0.0));
    }
    if k > 0 {
        d = d.min(x - u[k - 1].1);
    }
    d
}

/// `sup_{x in from} dist(x, to)`; the supremum sits at an endpoint of `from`
/// or at the midpoint of a gap of `to`.
fn directed_union(from: &[(f64, f64)], to: &[(f64, f64)]) -> f64 {
    let mut best = 0.0f64;
    for &(lo, hi) in from {
        best = best.max(dist_to_union(lo, to)).max(dist_to_union(hi, to));
    }
    for w in to.windows(2) {
        let mid = 0.5 * (w[0].1 + w[1].0);
        let inside = from
            .get(from.partition_point(|iv| iv.1 < mid))
            .is_some_and(|iv| iv.0 <= mid);
        if inside {
            best = best.max(dist_to_union(mid, to));
        }
    }
    best
}
