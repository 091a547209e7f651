//! Floquet-Bloch spectra of periodic approximants.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::contfrac::RationalApproximant;
use crate::error::{Error, Result};
use crate::numerics::{hausdorff_intervals, CyclicTridiagonal, HermitianMatrix, Inertia, Window};
use crate::potentials::{Coefficient1D, ProblemKind, QuasiperiodicProblem};

pub const MIN_POINTS: usize = 8;

/// One Bloch cell problem: samples of the potential (and optional weight) on
/// `N` uniform points of a period `T`, with quasi-momentum `alpha`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlochProblem {
    potential: Vec<f64>,
    weight: Option<Vec<f64>>,
    period: f64,
    alpha: f64,
}

impl BlochProblem {
    /// `alpha` must lie in the closed zone `[0, 2 pi / T]`.
    pub fn new(potential: Vec<f64>, weight: Option<Vec<f64>>, period: f64, alpha: f64) -> Result<Self> {
        let n = potential.len();
        if n < MIN_POINTS {
            return Err(Error::GridTooCoarse { points: n });
        }
        if !(period > 0.0) || !period.is_finite() {
            return Err(Error::InvalidParameter(format!("period {period} must be positive")));
        }
        let zone = TAU / period;
        if !(alpha >= 0.0 && alpha <= zone * (1.0 + 1e-12)) {
            return Err(Error::InvalidParameter(format!(
                "quasi-momentum {alpha} outside [0, {zone}]"
            )));
        }
        if let Some(w) = &weight {
            if w.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: w.len(),
                });
            }
            if let Some((index, &value)) = w.iter().enumerate().find(|(_, &x)| !(x > 0.0)) {
                return Err(Error::NonPositiveWeight { index, value });
            }
        }
        Ok(Self {
            potential,
            weight,
            period,
            alpha,
        })
    }

    pub fn points(&self) -> usize {
        self.potential.len()
    }

    pub fn h(&self) -> f64 {
        self.period / self.potential.len() as f64
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn weight(&self) -> Option<&[f64]> {
        self.weight.as_deref()
    }

    pub fn with_alpha(&self, alpha: f64) -> Result<Self> {
        Self::new(self.potential.clone(), self.weight.clone(), self.period, alpha)
    }

    /// `-(u_{i-1} - 2u_i + u_{i+1})/h^2 + V_i u_i` with `u_N = e^{i alpha T} u_0`,
    /// as a cyclic tridiagonal matrix (weight not applied).
    pub fn stiffness(&self) -> CyclicTridiagonal {
        let n = self.points();
        let inv_h2 = 1.0 / (self.h() * self.h());
        let diag = self.potential.iter().map(|v| 2.0 * inv_h2 + v).collect();
        let mut off = vec![Complex64::new(-inv_h2, 0.0); n];
        off[n - 1] = -Complex64::from_polar(inv_h2, self.alpha * self.period);
        CyclicTridiagonal::new(diag, off).expect("n >= 8")
    }

    /// The operator actually diagonalised: the stiffness matrix, symmetrically
    /// scaled by the weight when present.
    pub fn operator(&self) -> CyclicTridiagonal {
        let k = self.stiffness();
        match &self.weight {
            Some(w) => k.scaled_by_weights(w).expect("validated weights"),
            None => k,
        }
    }

    /// The `count` lowest eigenvalues.
    pub fn lowest(&self, count: usize) -> Vec<f64> {
        self.operator().lowest(count)
    }
}

/// Dense Hermitian matrix of the Bloch stiffness operator.
pub fn assemble_bloch(problem: &BlochProblem) -> Result<HermitianMatrix> {
    if problem.points() < MIN_POINTS {
        return Err(Error::GridTooCoarse {
            points: problem.points(),
        });
    }
    Ok(problem.stiffness().to_dense())
}

/// Potential and weight samples of a coefficient on `n` points of `[0, period)`.
/// Laminates are sampled by exact cell means.
pub fn sample_cell(coef: &Coefficient1D, kind: ProblemKind, period: f64, n: usize) -> (Vec<f64>, Option<Vec<f64>>) {
    let h = period / n as f64;
    let mut potential = Vec::with_capacity(n);
    let mut weight = Vec::with_capacity(n);
    for i in 0..n {
        let x = i as f64 * h;
        potential.push(coef.cell_mean(x, h, &|f| kind.split(f).0));
        weight.push(coef.cell_mean(x, h, &|f| kind.split(f).1));
    }
    (potential, kind.has_weight().then_some(weight))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BandSettings {
    pub alpha_count: usize,
    /// `None`: enough bands to reach the top of `window`.
    pub n_bands: Option<usize>,
    pub points_per_unit: usize,
    pub window: Window,
}

impl Default for BandSettings {
    fn default() -> Self {
        Self {
            alpha_count: 64,
            n_bands: None,
            points_per_unit: 40,
            window: Window { lo: 0.0, hi: 30.0 },
        }
    }
}

/// Eigenvalue samples: `bands[j][b]` is the `b`-th eigenvalue at `alphas[j]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandDiagram {
    pub alphas: Vec<f64>,
    pub bands: Vec<Vec<f64>>,
    pub period: f64,
    pub level: Option<RationalApproximant>,
    /// Grid spacing of the cell discretisation.
    pub h: f64,
    /// Largest weight sample (1 for Schrodinger problems).
    pub weight_max: f64,
    /// Eigenvalues at `alpha = pi / T` when that point is not on the grid;
    /// band edges of one-dimensional operators sit at `0` or `pi / T`.
    #[serde(default)]
    pub zone_edge: Option<Vec<f64>>,
}

impl BandDiagram {
    pub fn n_bands(&self) -> usize {
        self.bands.first().map_or(0, Vec::len)
    }

    /// Band `b` as a function of the quasi-momentum.
    pub fn band(&self, b: usize) -> Vec<f64> {
        self.bands.iter().map(|row| row[b]).collect()
    }

    /// `[min, max]` of each band, refined at interior extrema by a
    /// three-point parabola.
    pub fn band_ranges(&self) -> Vec<(f64, f64)> {
        (0..self.n_bands())
            .map(|b| {
                let v = self.band(b);
                let (mut lo, mut hi) = (refined_extremum(&v, false), refined_extremum(&v, true));
                if let Some(e) = &self.zone_edge {
                    lo = lo.min(e[b]);
                    hi = hi.max(e[b]);
                }
                (lo, hi)
            })
            .collect()
    }

    /// Every sampled eigenvalue.
    pub fn all_values(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.bands.iter().flatten().copied().collect();
        v.sort_by(f64::total_cmp);
        v
    }

    /// Leading-order error of the three-point stencil at eigenvalue `lambda`.
    pub fn discretization_error(&self, lambda: f64) -> f64 {
        let k2 = lambda.abs() * self.weight_max;
        k2 * k2 * self.h * self.h / 12.0 / self.weight_max
    }
}

fn refined_extremum(v: &[f64], maximum: bool) -> f64 {
    let sign = if maximum { -1.0 } else { 1.0 };
    let (j, &best) = v
        .iter()
        .enumerate()
        .min_by(|a, b| (sign * a.1).total_cmp(&(sign * b.1)))
        .expect("nonempty band");
    if j == 0 || j + 1 == v.len() {
        return best;
    }
    let (y0, y1, y2) = (v[j - 1], v[j], v[j + 1]);
    let curv = y0 - 2.0 * y1 + y2;
    if sign * curv <= 0.0 {
        return best;
    }
    let vertex = y1 - (y2 - y0) * (y2 - y0) / (8.0 * curv);
    if maximum {
        vertex.max(best)
    } else {
        vertex.min(best)
    }
}

/// Band diagram of the `p/q` approximant of a quasiperiodic problem.
pub fn band_diagram(
    problem: &QuasiperiodicProblem,
    approx: &RationalApproximant,
    settings: &BandSettings,
) -> Result<BandDiagram> {
    let coef = problem.field.periodic_approximant(approx);
    let mut bd = band_diagram_for(&coef, problem.kind, approx.q as f64, settings)?;
    bd.level = Some(*approx);
    Ok(bd)
}

/// Band diagram of any periodic coefficient with the given period.
pub fn band_diagram_for(
    coef: &Coefficient1D,
    kind: ProblemKind,
    period: f64,
    settings: &BandSettings,
) -> Result<BandDiagram> {
    if settings.alpha_count < 2 {
        return Err(Error::InvalidParameter("alpha_count must be at least 2".into()));
    }
    if settings.n_bands == Some(0) {
        return Err(Error::InvalidParameter("n_bands must be at least 1".into()));
    }
    let n = (settings.points_per_unit as f64 * period).round() as usize;
    let (potential, weight) = sample_cell(coef, kind, period, n);
    let weight_max = weight.as_ref().map_or(1.0, |w| w.iter().copied().fold(0.0, f64::max));
    let base = BlochProblem::new(potential, weight, period, 0.0)?;
    let zone = TAU / period;
    let n_bands = match settings.n_bands {
        Some(k) => k.min(n),
        None => {
            let top = settings.window.hi;
            let c0 = base.operator().count_below(top);
            let c1 = base.with_alpha(PI / period)?.operator().count_below(top);
            (c0.max(c1) + 1).min(n)
        }
    };
    let alphas: Vec<f64> = (0..settings.alpha_count)
        .map(|j| j as f64 * zone / (settings.alpha_count - 1) as f64)
        .collect();
    let bands = alphas
        .par_iter()
        .map(|&a| Ok(base.with_alpha(a.min(zone))?.lowest(n_bands)))
        .collect::<Result<Vec<_>>>()?;
    let zone_edge = settings
        .alpha_count
        .is_multiple_of(2)
        .then(|| base.with_alpha(PI / period).map(|p| p.lowest(n_bands)))
        .transpose()?;
    Ok(BandDiagram {
        alphas,
        bands,
        period,
        level: None,
        h: base.h(),
        weight_max,
        zone_edge,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Gap {
    pub lo: f64,
    pub hi: f64,
}

impl Gap {
    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, x: f64) -> bool {
        x > self.lo && x < self.hi
    }

    /// Distance from `x` to the nearest edge, negative outside the gap.
    pub fn depth(&self, x: f64) -> f64 {
        (x - self.lo).min(self.hi - x)
    }

    pub fn inflated(&self, fraction: f64) -> Gap {
        let pad = 0.5 * fraction * self.width();
        Gap {
            lo: self.lo - pad,
            hi: self.hi + pad,
        }
    }
}

/// Disjoint, sorted open intervals free of spectrum inside a window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapSet {
    pub window: Window,
    pub gaps: Vec<Gap>,
}

impl GapSet {
    pub fn is_empty(&self) -> bool {
        self.gaps.is_empty()
    }

    pub fn len(&self) -> usize {
        self.gaps.len()
    }

    pub fn containing(&self, x: f64) -> Option<&Gap> {
        self.gaps.iter().find(|g| g.contains(x))
    }

    /// Gaps at least `min_width` wide.
    pub fn wider_than(&self, min_width: f64) -> GapSet {
        GapSet {
            window: self.window,
            gaps: self.gaps.iter().copied().filter(|g| g.width() >= min_width).collect(),
        }
    }
}

/// Complement of the union of band ranges inside `window`, ignoring gaps
/// narrower than `merge_tol` (default: five times the discretisation error
/// at the top of the window). Nothing is reported above the highest
/// computed band.
pub fn extract_gaps(bd: &BandDiagram, window: Window, merge_tol: Option<f64>) -> GapSet {
    let tol = merge_tol.unwrap_or_else(|| 5.0 * bd.discretization_error(window.hi));
    gaps_from_ranges(&bd.band_ranges(), window, tol)
}

pub fn gaps_from_ranges(ranges: &[(f64, f64)], window: Window, merge_tol: f64) -> GapSet {
    let mut r: Vec<(f64, f64)> = ranges.to_vec();
    r.sort_by(|a, b| a.0.total_cmp(&b.0));
    let top = r.iter().map(|x| x.1).fold(f64::NEG_INFINITY, f64::max);
    let hi = window.hi.min(top);
    let mut gaps = Vec::new();
    let mut cursor = window.lo;
    for &(lo, up) in &r {
        if lo > cursor && cursor < hi {
            let g = Gap {
                lo: cursor,
                hi: lo.min(hi),
            };
            if g.width() > merge_tol && g.width() > 0.0 {
                gaps.push(g);
            }
        }
        cursor = cursor.max(up);
    }
    GapSet { window, gaps }
}

/// Intersection of several gap sets over a common window.
pub fn shared_gaps(sets: &[GapSet], min_width: f64) -> GapSet {
    let window = sets.first().map_or(Window { lo: 0.0, hi: 0.0 }, |s| s.window);
    let mut current: Vec<Gap> = sets.first().map_or(Vec::new(), |s| s.gaps.clone());
    for s in sets.iter().skip(1) {
        let mut next = Vec::new();
        for a in &current {
            for b in &s.gaps {
                let lo = a.lo.max(b.lo);
                let hi = a.hi.min(b.hi);
                if hi - lo > min_width {
                    next.push(Gap { lo, hi });
                }
            }
        }
        current = next;
    }
    GapSet { window, gaps: current }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub q: i64,
    pub q_next: i64,
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceTable {
    pub rows: Vec<ConvergenceRow>,
    /// Least-squares `C` in `d = C / q`.
    pub constant: f64,
    /// Slope of `log d` against `log q`; `None` if some distance is zero.
    pub slope: Option<f64>,
}

impl ConvergenceTable {
    pub fn strictly_decreasing(&self) -> bool {
        self.rows.windows(2).all(|w| w[1].distance < w[0].distance)
    }
}

/// Hausdorff distances between the band spectra (as interval unions) of
/// consecutive approximants, restricted to `window`.
pub fn convergence_study(
    problem: &QuasiperiodicProblem,
    levels: &[RationalApproximant],
    window: Window,
    settings: &BandSettings,
) -> Result<ConvergenceTable> {
    if levels.len() < 3 {
        return Err(Error::InvalidParameter(
            "a convergence study needs at least 3 levels".into(),
        ));
    }
    let settings = BandSettings { window, ..*settings };
    let spectra = levels
        .iter()
        .map(|a| band_diagram(problem, a, &settings).map(|bd| bd.band_ranges()))
        .collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::new();
    for (k, pair) in spectra.windows(2).enumerate() {
        let distance = hausdorff_intervals(&pair[0], &pair[1], window)?;
        rows.push(ConvergenceRow {
            q: levels[k].q,
            q_next: levels[k + 1].q,
            distance,
        });
    }
    Ok(fit_rate(rows))
}

pub fn fit_rate(rows: Vec<ConvergenceRow>) -> ConvergenceTable {
    let num: f64 = rows.iter().map(|r| r.distance / r.q as f64).sum();
    let den: f64 = rows.iter().map(|r| 1.0 / (r.q as f64 * r.q as f64)).sum();
    let constant = if den > 0.0 { num / den } else { 0.0 };
    let slope = if rows.len() >= 2 && rows.iter().all(|r| r.distance > 0.0) {
        let pts: Vec<(f64, f64)> = rows.iter().map(|r| ((r.q as f64).ln(), r.distance.ln())).collect();
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        (sxx > 0.0).then(|| sxy / sxx)
    } else {
        None
    };
    ConvergenceTable { rows, constant, slope }
}
