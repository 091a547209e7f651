use num_complex::Complex64;

use super::slicing::{eigenvalues_in_range, lowest_eigenvalues, Inertia};
use super::tridiag::{check_weights, normalize, start_vector, TridiagLu};
use super::{HermitianMatrix, SpectrumSample};
use crate::error::{Error, Result};

/// Hermitian matrix with a periodic tridiagonal pattern:
/// `A[i][i] = diag[i]`, `A[i][i+1] = off[i]` for `i < n-1`, and the corner
/// `A[n-1][0] = off[n-1]`. All other entries follow from Hermitian symmetry.
///
/// This is the shape of a Bloch chain: the corner carries the quasi-momentum
/// phase.
#[derive(Debug, Clone, PartialEq)]
pub struct CyclicTridiagonal {
    diag: Vec<f64>,
    off: Vec<Complex64>,
}

impl CyclicTridiagonal {
    pub fn new(diag: Vec<f64>, off: Vec<Complex64>) -> Result<Self> {
        let n = diag.len();
        if n == 0 {
            return Err(Error::DimensionZero);
        }
        if off.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: off.len(),
            });
        }
        if n < 3 {
            return Err(Error::InvalidParameter(
                "cyclic tridiagonal matrices need at least 3 rows".into(),
            ));
        }
        Ok(Self { diag, off })
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn off(&self) -> &[Complex64] {
        &self.off
    }

    /// Symmetric reduction `D^{-1/2} A D^{-1/2}`.
    pub fn scaled_by_weights(&self, weights: &[f64]) -> Result<Self> {
        let n = self.dim();
        check_weights(weights, n)?;
        let s: Vec<f64> = weights.iter().map(|w| 1.0 / w.sqrt()).collect();
        let diag = (0..n).map(|i| self.diag[i] * s[i] * s[i]).collect();
        let off = (0..n).map(|i| self.off[i] * (s[i] * s[(i + 1) % n])).collect();
        Ok(Self { diag, off })
    }

    pub fn to_dense(&self) -> HermitianMatrix {
        let n = self.dim();
        let mut m = HermitianMatrix::zeros(n);
        for i in 0..n {
            m.add_hermitian(i, i, self.diag[i].into());
        }
        for i in 0..n - 1 {
            m.add_hermitian(i, i + 1, self.off[i]);
        }
        m.add_hermitian(n - 1, 0, self.off[n - 1]);
        m
    }

    pub fn mul_vec(&self, x: &[Complex64]) -> Vec<Complex64> {
        let n = self.dim();
        let mut y: Vec<Complex64> = (0..n).map(|i| x[i] * self.diag[i]).collect();
        for i in 0..n - 1 {
            y[i] += self.off[i] * x[i + 1];
            y[i + 1] += self.off[i].conj() * x[i];
        }
        y[n - 1] += self.off[n - 1] * x[0];
        y[0] += self.off[n - 1].conj() * x[n - 1];
        y
    }

    pub fn eigenvalues_in(&self, lo: f64, hi: f64) -> Vec<f64> {
        eigenvalues_in_range(self, lo, hi)
    }

    pub fn lowest(&self, count: usize) -> Vec<f64> {
        lowest_eigenvalues(self, count)
    }

    pub fn eigenvalues(&self) -> SpectrumSample {
        let (lo, hi) = self.bounds();
        SpectrumSample::new(eigenvalues_in_range(self, lo - 1.0, hi + 1.0))
    }

    /// Unit eigenvector by inverse iteration with Sherman-Morrison for the
    /// corner coupling. `previous` vectors are projected out first.
    pub fn eigenvector(&self, lambda: f64, previous: &[Vec<Complex64>]) -> Vec<Complex64> {
        let n = self.dim();
        let scale = self.scale();
        let mut d: Vec<Complex64> = self.diag.iter().map(|&x| (x - lambda).into()).collect();
        let sup: Vec<Complex64> = self.off[..n - 1].to_vec();
        let sub: Vec<Complex64> = sup.iter().map(|z| z.conj()).collect();
        // A - lambda = T + u v^T with u = (gamma, 0.., b), v = (1, 0.., a / gamma)
        let a = self.off[n - 1].conj();
        let b = self.off[n - 1];
        let gamma = Complex64::new(-(d[0].re.abs().max(scale * 1e-3)), 0.0);
        d[0] -= gamma;
        d[n - 1] -= a * b / gamma;
        let lu = TridiagLu::factor(&sub, &d, &sup, scale);
        let mut z = vec![Complex64::new(0.0, 0.0); n];
        z[0] = gamma;
        z[n - 1] = b;
        lu.solve(&mut z);
        let vz = z[0] + a / gamma * z[n - 1];
        let denom = Complex64::new(1.0, 0.0) + vz;

        let mut x = start_vector(n);
        for _ in 0..3 {
            for p in previous {
                let dot: Complex64 = p.iter().zip(&x).map(|(pi, xi)| pi.conj() * xi).sum();
                for (xi, pi) in x.iter_mut().zip(p) {
                    *xi -= dot * pi;
                }
            }
            lu.solve(&mut x);
            let vy = x[0] + a / gamma * x[n - 1];
            let coef = if denom.norm() > 0.0 { vy / denom } else { vy };
            for (xi, zi) in x.iter_mut().zip(&z) {
                *xi -= coef * zi;
            }
            normalize(&mut x);
        }
        x
    }

    fn scale(&self) -> f64 {
        self.diag
            .iter()
            .map(|x| x.abs())
            .chain(self.off.iter().map(|z| z.norm()))
            .fold(0.0f64, f64::max)
            .max(1.0)
    }
}

impl Inertia for CyclicTridiagonal {
    fn dim(&self) -> usize {
        self.diag.len()
    }

    /// Pivot-free `LDL^H` of `A - sigma I`, tracking the fill in the last
    /// column. By Sylvester's law the number of negative pivots is the
    /// number of eigenvalues below `sigma`.
    fn count_below(&self, sigma: f64) -> usize {
        let n = self.diag.len();
        let tiny = f64::EPSILON * self.scale();
        let off = &self.off;
        let mut count = 0;
        let mut p = self.diag[0] - sigma;
        let mut f = off[n - 1].conj();
        let mut g = 0.0;
        for k in 0..n - 1 {
            if p == 0.0 {
                p = -tiny;
            }
            if p < 0.0 {
                count += 1;
            }
            g += f.norm_sqr() / p;
            if k < n - 2 {
                let next_p = self.diag[k + 1] - sigma - off[k].norm_sqr() / p;
                let base = if k + 1 == n - 2 {
                    off[n - 2]
                } else {
                    Complex64::new(0.0, 0.0)
                };
                f = base - off[k].conj() / p * f;
                p = next_p;
            }
        }
        let last = self.diag[n - 1] - sigma - g;
        if last <= 0.0 {
            count += 1;
        }
        count
    }

    fn bounds(&self) -> (f64, f64) {
        let n = self.diag.len();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let r = self.off[i].norm() + self.off[(i + n - 1) % n].norm();
            lo = lo.min(self.diag[i] - r);
            hi = hi.max(self.diag[i] + r);
        }
        (lo, hi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::hermitian_eigenvalues;
    use std::f64::consts::PI;

    fn chain(n: usize, phase: f64) -> CyclicTridiagonal {
        let diag: Vec<f64> = (0..n).map(|i| 2.0 + 0.3 * (i as f64).cos()).collect();
        let mut off = vec![Complex64::new(-1.0, 0.0); n];
        off[n - 1] = -Complex64::from_polar(1.0, phase);
        CyclicTridiagonal::new(diag, off).unwrap()
    }

    #[test]
    fn periodic_laplacian_closed_form() {
        let n = 12;
        let c = CyclicTridiagonal::new(vec![2.0; n], vec![Complex64::new(-1.0, 0.0); n]).unwrap();
        let mut exact: Vec<f64> = (0..n)
            .map(|m| 2.0 - 2.0 * (2.0 * PI * m as f64 / n as f64).cos())
            .collect();
        exact.sort_by(f64::total_cmp);
        let got = c.eigenvalues().eigenvalues;
        assert_eq!(got.len(), n);
        for (a, b) in got.iter().zip(&exact) {
            assert!((a - b).abs() < 1e-8, "{a} vs {b}");
        }
    }

    #[test]
    fn matches_dense_solver_with_phase() {
        for &phase in &[0.0, 0.4, PI, 2.5] {
            let c = chain(17, phase);
            let dense = hermitian_eigenvalues(&c.to_dense()).unwrap().eigenvalues;
            let sliced = c.eigenvalues().eigenvalues;
            for (a, b) in dense.iter().zip(&sliced) {
                assert!((a - b).abs() < 1e-9, "phase {phase}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn eigenvector_residual() {
        let c = chain(40, 1.1);
        let ev = c.lowest(4);
        let mut prev: Vec<Vec<Complex64>> = Vec::new();
        for &lam in &ev {
            let v = c.eigenvector(lam, &prev);
            let av = c.mul_vec(&v);
            let res: f64 = av
                .iter()
                .zip(&v)
                .map(|(a, b)| (a - b * lam).norm_sqr())
                .sum::<f64>()
                .sqrt();
            assert!(res < 1e-8, "residual {res}");
            prev.push(v);
        }
    }
}
