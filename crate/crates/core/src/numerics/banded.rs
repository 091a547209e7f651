use num_complex::Complex64;

use super::slicing::Inertia;
use super::HermitianMatrix;
use crate::error::{Error, Result};

/// Hermitian band matrix stored as its lower band (diagonal included).
#[derive(Debug, Clone, PartialEq)]
pub struct BandedHermitian {
    n: usize,
    bw: usize,
    /// `data[i * (bw + 1) + (i - j)] = A[i][j]` for `i - bw <= j <= i`.
    data: Vec<Complex64>,
    weight: Option<Vec<Complex64>>,
}

impl BandedHermitian {
    /// Builds the band from a function giving `A[i][j]` for `j <= i`.
    pub fn from_fn(n: usize, bw: usize, f: impl FnMut(usize, usize) -> Complex64) -> Result<Self> {
        if n == 0 {
            return Err(Error::DimensionZero);
        }
        let data = fill_band(n, bw, f)?;
        Ok(Self {
            n,
            bw,
            data,
            weight: None,
        })
    }

    /// Attaches a right-hand-side matrix `W` with the same band, turning the
    /// inertia queries into counts for the pencil `A - sigma W`. `W` must be
    /// positive definite for the counts to mean eigenvalues of `A c = l W c`.
    pub fn with_weight(mut self, f: impl FnMut(usize, usize) -> Complex64) -> Result<Self> {
        self.weight = Some(fill_band(self.n, self.bw, f)?);
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.bw
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        lookup(&self.data, self.bw, i, j)
    }

    pub fn weight_get(&self, i: usize, j: usize) -> Option<Complex64> {
        self.weight.as_ref().map(|w| lookup(w, self.bw, i, j))
    }

    pub fn to_dense(&self) -> HermitianMatrix {
        HermitianMatrix::from_fn(self.n, |i, j| self.get(i, j))
    }

    pub fn weight_dense(&self) -> Option<HermitianMatrix> {
        self.weight
            .as_ref()
            .map(|w| HermitianMatrix::from_fn(self.n, |i, j| lookup(w, self.bw, i, j)))
    }

    /// True when the weight (or identity) admits a Cholesky factorisation.
    pub fn weight_is_positive_definite(&self) -> bool {
        self.ldl_negative_pivots(0.0, true) == 0
    }

    fn gershgorin(band: &[Complex64], n: usize, bw: usize) -> (f64, f64) {
        let mut radius = vec![0.0; n];
        let mut diag = vec![0.0; n];
        for i in 0..n {
            let row = &band[i * (bw + 1)..(i + 1) * (bw + 1)];
            diag[i] = row[0].re;
            for (o, z) in row.iter().enumerate().skip(1) {
                if o > i {
                    break;
                }
                radius[i] += z.norm();
                radius[i - o] += z.norm();
            }
        }
        let lo = (0..n).map(|i| diag[i] - radius[i]).fold(f64::INFINITY, f64::min);
        let hi = (0..n).map(|i| diag[i] + radius[i]).fold(f64::NEG_INFINITY, f64::max);
        (lo, hi)
    }

    /// Negative pivots of `A - sigma W` (or of `W` alone when `weight_only`).
    fn ldl_negative_pivots(&self, sigma: f64, weight_only: bool) -> usize {
        let n = self.n;
        let bw = self.bw;
        let stride = bw + 1;
        let mut a: Vec<Complex64> = match (&self.weight, weight_only) {
            (Some(w), true) => w.clone(),
            (None, true) => return 0,
            (Some(w), false) => self.data.iter().zip(w).map(|(x, y)| x - y * sigma).collect(),
            (None, false) => {
                let mut a = self.data.clone();
                for i in 0..n {
                    a[i * stride].re -= sigma;
                }
                a
            }
        };
        let scale = a.iter().map(|z| z.norm()).fold(0.0f64, f64::max).max(1.0);
        let tiny = f64::EPSILON * scale;
        let mut col = vec![Complex64::new(0.0, 0.0); bw];
        let mut negatives = 0;
        for k in 0..n {
            let mut p = a[k * stride].re;
            if p == 0.0 {
                p = -tiny;
            }
            if p < 0.0 {
                negatives += 1;
            }
            let last = (k + bw).min(n - 1);
            let m = last - k;
            for (t, c) in col.iter_mut().take(m).enumerate() {
                let i = k + 1 + t;
                *c = a[i * stride + (i - k)];
            }
            let inv_p = 1.0 / p;
            for t in 0..m {
                let i = k + 1 + t;
                let li = col[t] * inv_p;
                if li == Complex64::new(0.0, 0.0) {
                    continue;
                }
                let row = &mut a[i * stride..i * stride + t + 1];
                // row[o] is A[i][i - o], o = 0..=t, with column j = i - o >= k + 1
                for (o, x) in row.iter_mut().enumerate() {
                    *x -= li * col[t - o].conj();
                }
            }
        }
        negatives
    }
}

impl Inertia for BandedHermitian {
    fn dim(&self) -> usize {
        self.n
    }

    fn count_below(&self, sigma: f64) -> usize {
        self.ldl_negative_pivots(sigma, false)
    }

    fn bounds(&self) -> (f64, f64) {
        let (kl, kh) = Self::gershgorin(&self.data, self.n, self.bw);
        match &self.weight {
            None => (kl, kh),
            Some(w) => {
                let (wl, wh) = Self::gershgorin(w, self.n, self.bw);
                if wl <= 0.0 {
                    let big = kl.abs().max(kh.abs()) * 1e6 + 1.0;
                    return (-big, big);
                }
                let c = [kl / wl, kl / wh, kh / wl, kh / wh];
                (
                    c.iter().copied().fold(f64::INFINITY, f64::min),
                    c.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                )
            }
        }
    }
}

fn fill_band(n: usize, bw: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Result<Vec<Complex64>> {
    let stride = bw + 1;
    let mut data = vec![Complex64::new(0.0, 0.0); n * stride];
    let mut worst = 0.0f64;
    for i in 0..n {
        for o in 0..=bw.min(i) {
            let v = f(i, i - o);
            if o == 0 {
                worst = worst.max(v.im.abs());
                data[i * stride] = Complex64::new(v.re, 0.0);
            } else {
                data[i * stride + o] = v;
            }
        }
    }
    if worst > super::HERMITIAN_TOL {
        return Err(Error::NonHermitianInput { asymmetry: worst });
    }
    Ok(data)
}

fn lookup(band: &[Complex64], bw: usize, i: usize, j: usize) -> Complex64 {
    let (r, c, conj) = if j <= i { (i, j, false) } else { (j, i, true) };
    let o = r - c;
    if o > bw {
        return Complex64::new(0.0, 0.0);
    }
    let v = band[r * (bw + 1) + o];
    if conj {
        v.conj()
    } else {
        v
    }
}
