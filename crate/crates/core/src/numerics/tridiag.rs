use num_complex::Complex64;

use super::slicing::{eigenvalues_in_range, Inertia};
use super::SpectrumSample;
use crate::error::{Error, Result};

/// Real symmetric tridiagonal matrix. `off[i]` couples `i` and `i + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymTridiagonal {
    diag: Vec<f64>,
    off: Vec<f64>,
}

impl SymTridiagonal {
    pub fn new(diag: Vec<f64>, off: Vec<f64>) -> Result<Self> {
        if diag.is_empty() {
            return Err(Error::DimensionZero);
        }
        if off.len() + 1 != diag.len() {
            return Err(Error::DimensionMismatch {
                expected: diag.len() - 1,
                found: off.len(),
            });
        }
        Ok(Self { diag, off })
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn off(&self) -> &[f64] {
        &self.off
    }

    /// `D^{-1/2} A D^{-1/2}` for positive weights `D`.
    pub fn scaled_by_weights(&self, weights: &[f64]) -> Result<Self> {
        check_weights(weights, self.dim())?;
        let s: Vec<f64> = weights.iter().map(|w| 1.0 / w.sqrt()).collect();
        let diag = self.diag.iter().zip(&s).map(|(d, s)| d * s * s).collect();
        let off = self.off.iter().enumerate().map(|(i, o)| o * s[i] * s[i + 1]).collect();
        Ok(Self { diag, off })
    }

    /// Every eigenvalue through implicit QL.
    pub fn eigenvalues(&self) -> Result<SpectrumSample> {
        let mut d = self.diag.clone();
        let mut e = self.off.clone();
        e.push(0.0);
        super::dense::tql_implicit(&mut d, &mut e)?;
        Ok(SpectrumSample::new(d))
    }

    pub fn eigenvalues_in(&self, lo: f64, hi: f64) -> Vec<f64> {
        eigenvalues_in_range(self, lo, hi)
    }

    /// Unit eigenvector for an accurate eigenvalue, by inverse iteration.
    /// Vectors in `previous` (for nearby eigenvalues) are projected out.
    pub fn eigenvector(&self, lambda: f64, previous: &[Vec<f64>]) -> Vec<f64> {
        let n = self.dim();
        let sub: Vec<Complex64> = self.off.iter().map(|&x| x.into()).collect();
        let d: Vec<Complex64> = self.diag.iter().map(|&x| (x - lambda).into()).collect();
        let lu = TridiagLu::factor(&sub, &d, &sub, self.scale());
        let mut x = start_vector(n);
        for _ in 0..3 {
            for p in previous {
                let dot: f64 = p.iter().zip(&x).map(|(a, b)| a * b.re).sum();
                for (xi, pi) in x.iter_mut().zip(p) {
                    *xi -= dot * pi;
                }
            }
            lu.solve(&mut x);
            normalize(&mut x);
        }
        let mut v: Vec<f64> = x.iter().map(|z| z.re).collect();
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        v.iter_mut().for_each(|a| *a /= norm);
        v
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let n = self.dim();
        (0..n)
            .map(|i| {
                let mut s = self.diag[i] * x[i];
                if i > 0 {
                    s += self.off[i - 1] * x[i - 1];
                }
                if i + 1 < n {
                    s += self.off[i] * x[i + 1];
                }
                s
            })
            .collect()
    }

    fn scale(&self) -> f64 {
        self.diag
            .iter()
            .chain(&self.off)
            .fold(0.0f64, |a, b| a.max(b.abs()))
            .max(1.0)
    }
}

impl Inertia for SymTridiagonal {
    fn dim(&self) -> usize {
        self.diag.len()
    }

    fn count_below(&self, sigma: f64) -> usize {
        let tiny = f64::EPSILON * self.scale();
        let mut count = 0;
        let mut q = 1.0;
        for i in 0..self.diag.len() {
            let coupling = if i > 0 {
                self.off[i - 1] * self.off[i - 1] / q
            } else {
                0.0
            };
            q = self.diag[i] - sigma - coupling;
            if q == 0.0 {
                q = -tiny;
            }
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    fn bounds(&self) -> (f64, f64) {
        let n = self.diag.len();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let mut r = 0.0;
            if i > 0 {
                r += self.off[i - 1].abs();
            }
            if i + 1 < n {
                r += self.off[i].abs();
            }
            lo = lo.min(self.diag[i] - r);
            hi = hi.max(self.diag[i] + r);
        }
        (lo, hi)
    }
}

pub(crate) fn check_weights(weights: &[f64], n: usize) -> Result<()> {
    if weights.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: weights.len(),
        });
    }
    if let Some((index, &value)) = weights.iter().enumerate().find(|(_, &w)| !(w > 0.0)) {
        return Err(Error::NonPositiveWeight { index, value });
    }
    Ok(())
}

/// Deterministic start vector with no parity symmetry.
pub(crate) fn start_vector(n: usize) -> Vec<Complex64> {
    let mut x: Vec<Complex64> = (0..n)
        .map(|i| {
            let t = i as f64;
            Complex64::new(1.0 + 0.5 * (0.37 * t + 0.1).sin() + 0.01 * t / n as f64, 0.0)
        })
        .collect();
    normalize(&mut x);
    x
}

pub(crate) fn normalize(x: &mut [Complex64]) {
    let norm = x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if norm > 0.0 {
        x.iter_mut().for_each(|z| *z /= norm);
    }
}

/// LU factorisation of a general complex tridiagonal matrix with partial
/// pivoting (one extra superdiagonal of fill).
pub(crate) struct TridiagLu {
    dl: Vec<Complex64>,
    d: Vec<Complex64>,
    du: Vec<Complex64>,
    du2: Vec<Complex64>,
    swapped: Vec<bool>,
}

impl TridiagLu {
    /// `sub[i]` is entry `(i+1, i)`, `sup[i]` is `(i, i+1)`. Exact zero pivots
    /// are replaced by `eps * scale` so that inverse iteration can proceed.
    pub(crate) fn factor(sub: &[Complex64], diag: &[Complex64], sup: &[Complex64], scale: f64) -> Self {
        let n = diag.len();
        let mut dl = sub[..n.saturating_sub(1)].to_vec();
        let mut d = diag.to_vec();
        let mut du = sup[..n.saturating_sub(1)].to_vec();
        let mut du2 = vec![Complex64::new(0.0, 0.0); n.saturating_sub(2)];
        let mut swapped = vec![false; n.saturating_sub(1)];
        let tiny = f64::EPSILON * scale;
        for i in 0..n.saturating_sub(1) {
            if d[i].norm() >= dl[i].norm() {
                if d[i].norm() == 0.0 {
                    d[i] = Complex64::new(tiny, 0.0);
                }
                let fact = dl[i] / d[i];
                dl[i] = fact;
                d[i + 1] -= fact * du[i];
            } else {
                let fact = d[i] / dl[i];
                d[i] = dl[i];
                dl[i] = fact;
                let temp = du[i];
                du[i] = d[i + 1];
                d[i + 1] = temp - fact * d[i + 1];
                if i + 2 < n {
                    du2[i] = du[i + 1];
                    du[i + 1] = -fact * du[i + 1];
                }
                swapped[i] = true;
            }
        }
        if n > 0 && d[n - 1].norm() == 0.0 {
            d[n - 1] = Complex64::new(tiny, 0.0);
        }
        Self {
            dl,
            d,
            du,
            du2,
            swapped,
        }
    }

    pub(crate) fn solve(&self, b: &mut [Complex64]) {
        let n = self.d.len();
        for i in 0..n.saturating_sub(1) {
            if self.swapped[i] {
                let temp = b[i];
                b[i] = b[i + 1];
                b[i + 1] = temp - self.dl[i] * b[i];
            } else {
                let t = self.dl[i] * b[i];
                b[i + 1] -= t;
            }
        }
        if n == 0 {
            return;
        }
        b[n - 1] /= self.d[n - 1];
        if n > 1 {
            b[n - 2] = (b[n - 2] - self.du[n - 2] * b[n - 1]) / self.d[n - 2];
        }
        for i in (0..n.saturating_sub(2)).rev() {
            b[i] = (b[i] - self.du[i] * b[i + 1] - self.du2[i] * b[i + 2]) / self.d[i];
        }
    }
}
