/// Hermitian operator whose eigenvalue counts can be queried directly.
pub trait Inertia {
    fn dim(&self) -> usize;
    /// Number of eigenvalues strictly below `sigma`.
    fn count_below(&self, sigma: f64) -> usize;
    /// Interval guaranteed to contain the spectrum.
    fn bounds(&self) -> (f64, f64);
}

const REL_TOL: f64 = 1e-13;

/// Eigenvalues in `[lo, hi)` by bisection on inertia counts, ascending,
/// repeated according to multiplicity.
pub fn eigenvalues_in_range<T: Inertia + ?Sized>(op: &T, lo: f64, hi: f64) -> Vec<f64> {
    let floor = abs_floor(op);
    let c_lo = op.count_below(lo);
    let c_hi = op.count_below(hi);
    let mut out = Vec::with_capacity(c_hi.saturating_sub(c_lo));
    bisect(op, lo, hi, c_lo, c_hi, 0, usize::MAX, floor, &mut out);
    out
}

/// As [`eigenvalues_in_range`], resolving each eigenvalue only to `abs_tol`.
pub fn eigenvalues_in_range_tol<T: Inertia + ?Sized>(op: &T, lo: f64, hi: f64, abs_tol: f64) -> Vec<f64> {
    let floor = abs_floor(op).max(abs_tol);
    let c_lo = op.count_below(lo);
    let c_hi = op.count_below(hi);
    let mut out = Vec::with_capacity(c_hi.saturating_sub(c_lo));
    bisect(op, lo, hi, c_lo, c_hi, 0, usize::MAX, floor, &mut out);
    out
}

/// The `count` smallest eigenvalues (fewer if the dimension is smaller).
pub fn lowest_eigenvalues<T: Inertia + ?Sized>(op: &T, count: usize) -> Vec<f64> {
    let (lo, hi) = op.bounds();
    let pad = 1e-8 * (lo.abs() + hi.abs() + 1.0);
    let (lo, hi) = (lo - pad, hi + pad);
    let floor = abs_floor(op);
    let c_hi = op.count_below(hi);
    let mut out = Vec::with_capacity(count.min(c_hi));
    bisect(op, lo, hi, 0, c_hi, 0, count, floor, &mut out);
    out
}

fn abs_floor<T: Inertia + ?Sized>(op: &T) -> f64 {
    let (lo, hi) = op.bounds();
    1e-14 * lo.abs().max(hi.abs()).max(1.0)
}

#[allow(clippy::too_many_arguments)]
fn bisect<T: Inertia + ?Sized>(
    op: &T,
    a: f64,
    b: f64,
    ca: usize,
    cb: usize,
    want_lo: usize,
    want_hi: usize,
    floor: f64,
    out: &mut Vec<f64>,
) {
    if cb <= ca || cb <= want_lo || ca >= want_hi {
        return;
    }
    let tol = (REL_TOL * a.abs().max(b.abs())).max(floor);
    if b - a <= tol {
        let mid = 0.5 * (a + b);
        let from = ca.max(want_lo);
        let to = cb.min(want_hi);
        out.extend(std::iter::repeat_n(mid, to - from));
        return;
    }
    let mid = 0.5 * (a + b);
    if mid <= a || mid >= b {
        let from = ca.max(want_lo);
        let to = cb.min(want_hi);
        out.extend(std::iter::repeat_n(mid, to - from));
        return;
    }
    let cm = op.count_below(mid).clamp(ca, cb);
    bisect(op, a, mid, ca, cm, want_lo, want_hi, floor, out);
    bisect(op, mid, b, cm, cb, want_lo, want_hi, floor, out);
}
