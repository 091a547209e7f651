use num_complex::Complex64;

use super::SpectrumSample;
use crate::error::{Error, Result};

/// Absolute tolerance on `|a_ij - conj(a_ji)|`.
pub const HERMITIAN_TOL: f64 = 1e-12;

const QL_TOL: f64 = 1e-14;
const QL_MAX_ITER: usize = 50;

/// Dense complex matrix, row-major. Hermiticity is checked by the solvers.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix {
    n: usize,
    data: Vec<Complex64>,
}

impl HermitianMatrix {
    pub fn new(n: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                found: data.len(),
            });
        }
        Ok(Self { n, data })
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![Complex64::new(0.0, 0.0); n * n],
        }
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(f(i, j));
            }
        }
        Self { n, data }
    }

    pub fn from_real(n: usize, data: &[f64]) -> Result<Self> {
        Self::new(n, data.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: Complex64) {
        self.data[i * self.n + j] = v;
    }

    /// Adds `v` at `(i, j)` and `conj(v)` at `(j, i)`; the diagonal gets `v` once.
    pub fn add_hermitian(&mut self, i: usize, j: usize, v: Complex64) {
        let n = self.n;
        if i == j {
            self.data[i * n + i] += v;
        } else {
            self.data[i * n + j] += v;
            self.data[j * n + i] += v.conj();
        }
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.data
    }

    pub fn max_asymmetry(&self) -> f64 {
        let n = self.n;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in i..n {
                let d = (self.data[i * n + j] - self.data[j * n + i].conj()).norm();
                worst = worst.max(d);
            }
        }
        worst
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.data[i * self.n + i].re).sum()
    }

    pub fn check(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::DimensionZero);
        }
        let asymmetry = self.max_asymmetry();
        if asymmetry > HERMITIAN_TOL || asymmetry.is_nan() {
            return Err(Error::NonHermitianInput { asymmetry });
        }
        Ok(())
    }

    pub fn mul_vec(&self, x: &[Complex64]) -> Vec<Complex64> {
        let n = self.n;
        (0..n)
            .map(|i| self.data[i * n..(i + 1) * n].iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }
}

/// All eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(m: &HermitianMatrix) -> Result<SpectrumSample> {
    m.check()?;
    let (mut d, mut e) = householder_tridiagonal(m);
    tql_implicit(&mut d, &mut e)?;
    Ok(SpectrumSample::new(d))
}

/// Eigenvalues of `a v = lambda diag(b) v`.
pub fn generalized_hermitian_eigenvalues(a: &HermitianMatrix, b_diag: &[f64]) -> Result<SpectrumSample> {
    a.check()?;
    if b_diag.len() != a.n {
        return Err(Error::DimensionMismatch {
            expected: a.n,
            found: b_diag.len(),
        });
    }
    if let Some((index, &value)) = b_diag.iter().enumerate().find(|(_, &b)| !(b > 0.0)) {
        return Err(Error::NonPositiveWeight { index, value });
    }
    let s: Vec<f64> = b_diag.iter().map(|b| 1.0 / b.sqrt()).collect();
    let n = a.n;
    let scaled = HermitianMatrix::from_fn(n, |i, j| a.get(i, j) * (s[i] * s[j]));
    hermitian_eigenvalues(&scaled)
}

/// `L^{-1} K L^{-H}` where `W = L L^H`. Fails with `IndefiniteWeight` when the
/// Cholesky factorisation of `w` breaks down.
pub fn cholesky_reduce(k: &HermitianMatrix, w: &HermitianMatrix) -> Result<HermitianMatrix> {
    k.check()?;
    w.check()?;
    let n = k.n;
    if w.n != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: w.n,
        });
    }
    let mut l = vec![Complex64::new(0.0, 0.0); n * n];
    for j in 0..n {
        let mut diag = w.get(j, j).re;
        for p in 0..j {
            diag -= l[j * n + p].norm_sqr();
        }
        if !(diag > 0.0) {
            return Err(Error::IndefiniteWeight);
        }
        let ljj = diag.sqrt();
        l[j * n + j] = Complex64::new(ljj, 0.0);
        for i in j + 1..n {
            let mut s = w.get(i, j);
            for p in 0..j {
                s -= l[i * n + p] * l[j * n + p].conj();
            }
            l[i * n + j] = s / ljj;
        }
    }
    // Y = L^{-1} K, column by column forward substitution.
    let mut y = k.data.clone();
    for col in 0..n {
        for i in 0..n {
            let mut s = y[i * n + col];
            for p in 0..i {
                s -= l[i * n + p] * y[p * n + col];
            }
            y[i * n + col] = s / l[i * n + i];
        }
    }
    // C = Y L^{-H}: solve C L^H = Y row by row.
    let mut c = y;
    for row in 0..n {
        for j in 0..n {
            let mut s = c[row * n + j];
            for p in 0..j {
                s -= c[row * n + p] * l[j * n + p].conj();
            }
            c[row * n + j] = s / l[j * n + j];
        }
    }
    for i in 0..n {
        c[i * n + i].im = 0.0;
        for j in i + 1..n {
            let avg = (c[i * n + j] + c[j * n + i].conj()) * 0.5;
            c[i * n + j] = avg;
            c[j * n + i] = avg.conj();
        }
    }
    Ok(HermitianMatrix { n, data: c })
}

/// Householder reduction to real symmetric tridiagonal form.
/// Returns the diagonal and the subdiagonal (length n, last entry zero).
fn householder_tridiagonal(m: &HermitianMatrix) -> (Vec<f64>, Vec<f64>) {
    let n = m.n;
    let mut a = m.data.clone();
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    let mut v = vec![Complex64::new(0.0, 0.0); n];
    let mut p = vec![Complex64::new(0.0, 0.0); n];

    for k in 0..n.saturating_sub(2) {
        let len = n - k - 1;
        let norm: f64 = (k + 1..n).map(|i| a[i * n + k].norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            e[k] = 0.0;
            continue;
        }
        let x0 = a[(k + 1) * n + k];
        let phase = if x0.norm() > 0.0 {
            x0 / x0.norm()
        } else {
            Complex64::new(1.0, 0.0)
        };
        let alpha = -phase * norm;
        for (t, i) in (k + 1..n).enumerate() {
            v[t] = a[i * n + k];
        }
        v[0] -= alpha;
        let vnorm: f64 = v[..len].iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if vnorm == 0.0 {
            e[k] = norm;
            continue;
        }
        for z in &mut v[..len] {
            *z /= vnorm;
        }
        // p = A22 v
        for (t, i) in (k + 1..n).enumerate() {
            let row = &a[i * n + k + 1..i * n + n];
            p[t] = row.iter().zip(&v[..len]).map(|(x, y)| x * y).sum();
        }
        let r: f64 = v[..len].iter().zip(&p[..len]).map(|(x, y)| (x.conj() * y).re).sum();
        for t in 0..len {
            p[t] -= v[t] * r;
        }
        // A22 -= 2 v w^H + 2 w v^H
        for (ti, i) in (k + 1..n).enumerate() {
            let vi = v[ti] * 2.0;
            let wi = p[ti] * 2.0;
            let row = &mut a[i * n + k + 1..i * n + n];
            for (tj, x) in row.iter_mut().enumerate() {
                *x -= vi * p[tj].conj() + wi * v[tj].conj();
            }
        }
        e[k] = norm;
        for i in k + 1..n {
            a[i * n + k] = Complex64::new(0.0, 0.0);
            a[k * n + i] = Complex64::new(0.0, 0.0);
        }
    }
    if n >= 2 {
        e[n - 2] = a[(n - 1) * n + n - 2].norm();
    }
    for i in 0..n {
        d[i] = a[i * n + i].re;
    }
    (d, e)
}

/// Implicit-shift QL on a real symmetric tridiagonal matrix, eigenvalues only.
/// `e[i]` couples `i` and `i + 1`; `e[n-1]` is ignored.
pub(crate) fn tql_implicit(d: &mut [f64], e: &mut [f64]) -> Result<()> {
    let n = d.len();
    if n <= 1 {
        return Ok(());
    }
    e[n - 1] = 0.0;
    let norm = d.iter().chain(e.iter()).fold(0.0f64, |acc, x| acc.max(x.abs()));
    let floor = f64::MIN_POSITIVE.max(norm * 1e-12);

    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m < n - 1 {
                let scale = (d[m].abs() + d[m + 1].abs()).max(floor);
                if e[m].abs() <= QL_TOL * scale {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            if iter == QL_MAX_ITER {
                return Err(Error::IterationLimit { index: l });
            }
            iter += 1;
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut underflow = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}
