//! Transfer matrices, the Fibonacci trace map and super band gaps.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::contfrac::RationalApproximant;
use crate::error::{Error, Result};
use crate::numerics::Window;
use crate::potentials::{Coefficient1D, ProblemKind, QuasiperiodicProblem, Tile};
use crate::tiling::fibonacci_word;

/// Magnitude above which trace values are stored as `+inf`.
pub const TRACE_CAP: f64 = 1e150;

pub const DEFAULT_EPSILON: f64 = 1e-3;

/// A unimodular 2x2 matrix propagating `(u, u')` across a segment at spectral
/// parameter `lambda` (`omega^2` for wave problems).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransferMatrix {
    pub m: [[f64; 2]; 2],
    pub lambda: f64,
}

impl TransferMatrix {
    pub fn identity(lambda: f64) -> Self {
        Self {
            m: [[1.0, 0.0], [0.0, 1.0]],
            lambda,
        }
    }

    pub fn omega(&self) -> f64 {
        self.lambda.max(0.0).sqrt()
    }

    pub fn trace(&self) -> f64 {
        self.m[0][0] + self.m[1][1]
    }

    pub fn det(&self) -> f64 {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }

    /// `self * rhs`: apply `rhs` first.
    pub fn then_after(&self, rhs: &Self) -> Self {
        let (a, b) = (&self.m, &rhs.m);
        let mut m = [[0.0; 2]; 2];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        Self { m, lambda: self.lambda }
    }

    /// Moduli `(|mu_min|, |mu_max|)` of the eigenvalues, assuming `det = 1`.
    pub fn eigenvalue_moduli(&self) -> (f64, f64) {
        let t = self.trace().abs();
        if t <= 2.0 {
            return (1.0, 1.0);
        }
        let big = 0.5 * (t + (t * t - 4.0).sqrt());
        (1.0 / big, big)
    }

    fn renormalized(mut self) -> Self {
        let d = self.det();
        if (d - 1.0).abs() > 1e-8 && d > 0.0 {
            let s = 1.0 / d.sqrt();
            self.m.iter_mut().flatten().for_each(|v| *v *= s);
        }
        self
    }
}

/// Monodromy of `u'' + (omega/c)^2 u = 0` across a tile of length `length`.
pub fn tile_transfer(length: f64, wavespeed: f64, omega: f64) -> TransferMatrix {
    let k = omega.abs() / wavespeed;
    let kl = k * length;
    let (s, c) = kl.sin_cos();
    let sinc = if k == 0.0 { length } else { s / k };
    TransferMatrix {
        m: [[c, sinc], [-k * s, c]],
        lambda: omega * omega,
    }
}

/// Product of tile matrices along `word`, first letter applied first.
pub fn word_transfer(tiles: &BTreeMap<char, Tile>, word: &str, omega: f64) -> Result<TransferMatrix> {
    let mut acc = TransferMatrix::identity(omega * omega);
    for letter in word.chars() {
        let t = tiles.get(&letter).ok_or(Error::UnknownLetter { letter })?;
        acc = tile_transfer(t.length, t.value, omega).then_after(&acc);
    }
    Ok(acc)
}

/// Traces `x_1..x_{n_max}` of Fibonacci-word transfer matrices at one frequency.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceSequence {
    pub omega: f64,
    pub values: Vec<f64>,
    /// Directly multiplied matrices of generations 1, 2 and 3.
    pub seeds: [TransferMatrix; 3],
}

impl TraceSequence {
    /// `x_n`, one-based.
    pub fn x(&self, n: usize) -> f64 {
        self.values[n - 1]
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Seeds from words of generations 1 to 3, then `x_{n+1} = x_n x_{n-1} - x_{n-2}`.
pub fn trace_sequence(tiles: &BTreeMap<char, Tile>, omega: f64, n_max: usize) -> Result<TraceSequence> {
    if n_max < 3 {
        return Err(Error::InvalidParameter(format!("n_max = {n_max} must be at least 3")));
    }
    let mut seeds = [TransferMatrix::identity(omega * omega); 3];
    for (g, seed) in seeds.iter_mut().enumerate() {
        *seed = word_transfer(tiles, &fibonacci_word(g + 1)?.letters, omega)?;
    }
    let mut values: Vec<f64> = seeds.iter().map(TransferMatrix::trace).collect();
    while values.len() < n_max {
        let k = values.len();
        let next = values[k - 1] * values[k - 2] - values[k - 3];
        values.push(if next.is_finite() && next.abs() <= TRACE_CAP {
            next
        } else {
            f64::INFINITY
        });
    }
    Ok(TraceSequence { omega, values, seeds })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Criterion {
    Theorem,
    Corollary,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SuperBandGapCertificate {
    pub omega_lo: f64,
    pub omega_hi: f64,
    /// Smallest `N` with `|x_n| > 2` for all `n >= N`.
    pub index: usize,
    pub criterion: Criterion,
    pub epsilon: Option<f64>,
}

impl SuperBandGapCertificate {
    pub fn window(&self) -> Window {
        Window {
            lo: self.omega_lo,
            hi: self.omega_hi,
        }
    }

    /// The certified interval in `lambda = omega^2`.
    pub fn lambda_range(&self) -> (f64, f64) {
        (self.omega_lo.powi(2), self.omega_hi.powi(2))
    }
}

/// Smallest `N` passing either the growth test `|x_N| > 2`,
/// `|x_{N+1}| >= |x_N|`, `|x_{N+2}| >= |x_{N+1}|` or the test of two
/// consecutive values above `2 + eps`. Ties go to the growth test.
pub fn certify_super_band_gap(ts: &TraceSequence, eps: f64) -> Option<SuperBandGapCertificate> {
    let a: Vec<f64> = ts.values.iter().map(|x| x.abs()).collect();
    let cert = |index, criterion, epsilon| SuperBandGapCertificate {
        omega_lo: ts.omega,
        omega_hi: ts.omega,
        index,
        criterion,
        epsilon,
    };
    let theorem = a
        .windows(3)
        .position(|w| w[0] > 2.0 && w[1] >= w[0] && w[2] >= w[1])
        .map(|n| cert(n + 1, Criterion::Theorem, None));
    let corollary = a
        .windows(2)
        .position(|w| w[0] > 2.0 + eps && w[1] > 2.0 + eps)
        .map(|n| cert(n + 1, Criterion::Corollary, Some(eps)));
    match (theorem, corollary) {
        (Some(t), Some(c)) if c.index < t.index => Some(c),
        (Some(t), _) => Some(t),
        (None, c) => c,
    }
}

/// One frequency of a scan.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanSample {
    pub traces: TraceSequence,
    pub certificate: Option<SuperBandGapCertificate>,
}

/// Trace sequences and certificates on `resolution` equispaced frequencies.
pub fn trace_scan(
    tiles: &BTreeMap<char, Tile>,
    window: Window,
    resolution: usize,
    eps: f64,
    n_max: usize,
) -> Result<Vec<ScanSample>> {
    if resolution < 100 {
        return Err(Error::InvalidParameter(format!(
            "scan resolution {resolution} is below 100"
        )));
    }
    if !(eps > 0.0) {
        return Err(Error::InvalidParameter(format!("epsilon {eps} must be positive")));
    }
    let step = window.width() / (resolution - 1) as f64;
    (0..resolution)
        .into_par_iter()
        .map(|i| {
            let omega = if i + 1 == resolution {
                window.hi
            } else {
                window.lo + i as f64 * step
            };
            let traces = trace_sequence(tiles, omega, n_max)?;
            let certificate = certify_super_band_gap(&traces, eps);
            Ok(ScanSample { traces, certificate })
        })
        .collect()
}

/// Maximal runs of certified samples, each with the largest index in the run.
pub fn merge_certified(samples: &[ScanSample]) -> Vec<SuperBandGapCertificate> {
    let mut out: Vec<SuperBandGapCertificate> = Vec::new();
    let mut open = false;
    for s in samples {
        match (s.certificate, open) {
            (Some(c), true) => {
                let last = out.last_mut().expect("open run");
                last.omega_hi = c.omega_hi;
                last.index = last.index.max(c.index);
                if c.criterion == Criterion::Corollary {
                    last.criterion = Criterion::Corollary;
                    last.epsilon = c.epsilon;
                }
            }
            (Some(c), false) => {
                out.push(c);
                open = true;
            }
            (None, _) => open = false,
        }
    }
    out
}

pub fn scan_super_band_gaps(
    tiles: &BTreeMap<char, Tile>,
    window: Window,
    resolution: usize,
    eps: f64,
    n_max: usize,
) -> Result<Vec<SuperBandGapCertificate>> {
    Ok(merge_certified(&trace_scan(tiles, window, resolution, eps, n_max)?))
}

/// Monodromy of `u'' = (V - lambda w) u` over `[0, period]` by classical RK4
/// with the largest step not exceeding `step`.
pub fn cell_transfer_rk4(
    coef: &Coefficient1D,
    kind: ProblemKind,
    period: f64,
    lambda: f64,
    step: f64,
) -> Result<TransferMatrix> {
    if !(step > 0.0) || !(period > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "step {step} and period {period} must be positive"
        )));
    }
    let n = (period / step).ceil() as usize;
    let h = period / n as f64;
    let a = |x: f64| {
        let (v, w) = kind.split(coef.eval(x));
        v - lambda * w
    };
    let rhs = |x: f64, y: [f64; 2]| [y[1], a(x) * y[0]];
    let mut cols = [[1.0, 0.0], [0.0, 1.0]];
    for i in 0..n {
        let x = i as f64 * h;
        for y in cols.iter_mut() {
            let k1 = rhs(x, *y);
            let k2 = rhs(x + 0.5 * h, [y[0] + 0.5 * h * k1[0], y[1] + 0.5 * h * k1[1]]);
            let k3 = rhs(x + 0.5 * h, [y[0] + 0.5 * h * k2[0], y[1] + 0.5 * h * k2[1]]);
            let k4 = rhs(x + h, [y[0] + h * k3[0], y[1] + h * k3[1]]);
            for c in 0..2 {
                y[c] += h / 6.0 * (k1[c] + 2.0 * k2[c] + 2.0 * k3[c] + k4[c]);
            }
        }
    }
    Ok(TransferMatrix {
        m: [[cols[0][0], cols[1][0]], [cols[0][1], cols[1][1]]],
        lambda,
    }
    .renormalized())
}

/// Transfer matrix of the finite-difference recurrence
/// `u_{i+1} = (2 + h^2 (V_i - lambda w_i)) u_i - u_{i-1}` on `(u_i, u_{i-1})`.
/// Its trace decides exactly whether `lambda` lies in a discrete Bloch band.
pub fn fd_cell_transfer(potential: &[f64], weight: Option<&[f64]>, h: f64, lambda: f64) -> TransferMatrix {
    let mut m = [[1.0, 0.0], [0.0, 1.0]];
    for (i, v) in potential.iter().enumerate() {
        let w = weight.map_or(1.0, |w| w[i]);
        let a = 2.0 + h * h * (v - lambda * w);
        m = [[a * m[0][0] - m[1][0], a * m[0][1] - m[1][1]], m[0]];
    }
    TransferMatrix { m, lambda }
}

/// Where a decay estimate takes its period cells from.
#[derive(Debug, Clone, Copy)]
pub enum DecaySource<'a> {
    /// Periodic approximants of a smooth field, integrated with RK4 at `step`.
    Field {
        problem: &'a QuasiperiodicProblem,
        approximants: &'a [RationalApproximant],
        step: f64,
    },
    /// Fibonacci words of the listed generations built from `tiles`.
    Laminate {
        tiles: &'a BTreeMap<char, Tile>,
        generations: &'a [usize],
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayLevel {
    pub period: f64,
    pub trace: f64,
    pub mu_min: f64,
    /// `log|mu_min| / period`; `None` when `|trace| <= 2`.
    pub rate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayEstimate {
    pub rate: f64,
    pub levels: Vec<DecayLevel>,
}

/// `min_k log|mu_{k,min}| / q_k` over the period cells of `source` at `lambda`.
/// Levels whose cell is not in a gap at `lambda` are skipped; `NotInGap` when
/// none is.
pub fn decay_rate_estimate(source: DecaySource<'_>, lambda: f64) -> Result<DecayEstimate> {
    let cells: Vec<(f64, TransferMatrix)> = match source {
        DecaySource::Field {
            problem,
            approximants,
            step,
        } => approximants
            .iter()
            .map(|a| {
                let coef = problem.field.periodic_approximant(a);
                let period = a.q as f64;
                Ok((period, cell_transfer_rk4(&coef, problem.kind, period, lambda, step)?))
            })
            .collect::<Result<_>>()?,
        DecaySource::Laminate { tiles, generations } => {
            let omega = lambda.max(0.0).sqrt();
            generations
                .iter()
                .map(|&g| {
                    let word = fibonacci_word(g)?;
                    let mut period = 0.0;
                    for c in word.letters.chars() {
                        period += tiles.get(&c).ok_or(Error::UnknownLetter { letter: c })?.length;
                    }
                    Ok((period, word_transfer(tiles, &word.letters, omega)?))
                })
                .collect::<Result<_>>()?
        }
    };
    let levels: Vec<DecayLevel> = cells
        .into_iter()
        .map(|(period, t)| {
            let trace = t.trace();
            let (mu_min, _) = t.eigenvalue_moduli();
            DecayLevel {
                period,
                trace,
                mu_min,
                rate: (trace.abs() > 2.0).then(|| mu_min.ln() / period),
            }
        })
        .collect();
    let rate = levels
        .iter()
        .filter_map(|l| l.rate)
        .fold(None, |acc: Option<f64>, r| Some(acc.map_or(r, |a| a.min(r))))
        .ok_or(Error::NotInGap { lambda })?;
    Ok(DecayEstimate { rate, levels })
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::potentials::Laminate;

    fn mat_close(a: &TransferMatrix, b: [[f64; 2]; 2], tol: f64) -> bool {
        (0..2).all(|i| (0..2).all(|j| (a.m[i][j] - b[i][j]).abs() <= tol))
    }

    #[test]
    fn single_tile_closed_forms() {
        for w in [0.3, 1.0, 2.7] {
            let t = tile_transfer(1.0, 1.0, w);
            assert!((t.trace() - 2.0 * w.cos()).abs() < 1e-14);
            assert!((t.det() - 1.0).abs() < 1e-12);
        }
        assert!(mat_close(&tile_transfer(2.5, 3.0, 0.0), [[1.0, 2.5], [0.0, 1.0]], 0.0));
        assert!(mat_close(
            &tile_transfer(PI, 1.0, 1.0),
            [[-1.0, 0.0], [0.0, -1.0]],
            1e-15
        ));
    }

    #[test]
    fn zero_frequency_is_a_fixed_point() {
        let ts = trace_sequence(&Laminate::default_tiles(), 0.0, 30).unwrap();
        assert!(ts.values.iter().all(|&x| x == 2.0));
        assert!(certify_super_band_gap(&ts, 1e-3).is_none());
    }

    #[test]
    fn recursion_matches_direct_products() {
        let tiles = Laminate::default_tiles();
        for w in [0.37, 1.1, 2.9, 4.4] {
            let ts = trace_sequence(&tiles, w, 10).unwrap();
            for n in 1..=10 {
                let direct = word_transfer(&tiles, &fibonacci_word(n).unwrap().letters, w).unwrap();
                let scale = ts.values.iter().fold(1.0f64, |m, x| m.max(x.abs()));
                assert!((direct.trace() - ts.x(n)).abs() <= 1e-8 * scale, "n={n} w={w}");
                assert!((direct.det() - 1.0).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn certificate_conditions() {
        let mut ts = trace_sequence(&Laminate::default_tiles(), 0.0, 5).unwrap();
        ts.values = vec![3.0, 4.0, 13.0, 49.0, 633.0];
        let c = certify_super_band_gap(&ts, 1e-3).unwrap();
        assert_eq!((c.index, c.criterion), (1, Criterion::Theorem));
        ts.values = vec![1.0, -2.0, 0.5, 2.0, -1.5];
        assert!(certify_super_band_gap(&ts, 1e-3).is_none());
        ts.values = vec![1.0, 3.0, 2.5, 0.0, 0.0];
        let c = certify_super_band_gap(&ts, 1e-3).unwrap();
        assert_eq!((c.index, c.criterion, c.epsilon), (2, Criterion::Corollary, Some(1e-3)));
    }

    #[test]
    fn homogeneous_laminate_has_no_gaps() {
        let mut tiles = Laminate::default_tiles();
        tiles.insert(
            'b',
            Tile {
                length: 1.0,
                value: 1.0,
            },
        );
        let w = Window::new(0.01, 10.0).unwrap();
        assert!(scan_super_band_gaps(&tiles, w, 500, 1e-3, 40).unwrap().is_empty());
    }

    #[test]
    fn golden_laminate_certificates_persist_in_n_max() {
        let tiles = Laminate::default_tiles();
        let w = Window::new(0.01, 2.0 * PI).unwrap();
        let short = trace_scan(&tiles, w, 400, 1e-3, 20).unwrap();
        let long = trace_scan(&tiles, w, 400, 1e-3, 40).unwrap();
        assert!(short.iter().any(|s| s.certificate.is_some()));
        for (a, b) in short.iter().zip(&long) {
            if let Some(c) = a.certificate {
                assert!(b.certificate.unwrap().index <= c.index);
                let tail = &b.traces.values[c.index - 1..];
                assert!(tail.iter().all(|x| x.abs() > 2.0));
                if c.criterion == Criterion::Theorem {
                    let tail = &b.traces.values[c.index - 1..];
                    // saturated values compare equal
                    assert!(tail.windows(2).all(|p| p[1].abs() >= p[0].abs()));
                }
            }
        }
    }

    #[test]
    fn scan_rejects_low_resolution() {
        let w = Window::new(0.0, 1.0).unwrap();
        assert!(trace_scan(&Laminate::default_tiles(), w, 50, 1e-3, 10).is_err());
    }

    #[test]
    fn uniform_cell_decay_from_quadratic_formula() {
        // single periodic cell of constant potential 1: gap below the band edge
        let problem = QuasiperiodicProblem::new(
            ProblemKind::Schrodinger,
            crate::potentials::CoefficientField::new(crate::potentials::Surface::constant(1.0), 1.0),
        )
        .unwrap();
        let approx = [RationalApproximant::rational(1, 1).unwrap()];
        let lambda = 0.5;
        let est = decay_rate_estimate(
            DecaySource::Field {
                problem: &problem,
                approximants: &approx,
                step: 1e-3,
            },
            lambda,
        )
        .unwrap();
        // cell monodromy is [[cosh k, sinh k / k], [k sinh k, cosh k]] with k = sqrt(V - lambda)
        let k: f64 = (1.0f64 - lambda).sqrt();
        let t = 2.0 * k.cosh();
        let mu = (t - (t * t - 4.0).sqrt()) / 2.0;
        assert!((est.rate - mu.ln()).abs() < 1e-9);
        assert!((est.rate + k).abs() < 1e-9);
        let l = est.levels[0];
        assert!(l.mu_min < 1.0);
    }

    #[test]
    fn decay_outside_every_gap_is_reported() {
        let tiles = Laminate::default_tiles();
        let err = decay_rate_estimate(
            DecaySource::Laminate {
                tiles: &tiles,
                generations: &[1, 2],
            },
            0.0,
        )
        .unwrap_err();
        assert_eq!(err.name(), "NotInGap");
    }

    #[test]
    fn fd_transfer_detects_bloch_band() {
        // free chain: discrete band is [0, 4/h^2]
        let n = 20;
        let h = 0.1;
        let v = vec![0.0; n];
        assert!(fd_cell_transfer(&v, None, h, 10.0).trace().abs() <= 2.0 + 1e-12);
        assert!(fd_cell_transfer(&v, None, h, -1.0).trace().abs() > 2.0);
        assert!(fd_cell_transfer(&v, None, h, 401.0).trace().abs() > 2.0);
        assert!((fd_cell_transfer(&v, None, h, 3.0).det() - 1.0).abs() < 1e-10);
    }
}
