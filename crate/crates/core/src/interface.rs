//! Localized modes of reflected operators on a truncated line.

use serde::{Deserialize, Serialize};

use crate::contfrac::{cf_elements, convergents, RationalApproximant};
use crate::error::{Error, Result};
use crate::numerics::{fit_exponential_envelope, SymTridiagonal, Window};
use crate::potentials::{reflect, Coefficient1D, ProblemKind, QuasiperiodicProblem};
use crate::supercell::{band_diagram, extract_gaps, shared_gaps, BandSettings, Gap, GapSet};
use crate::transfermap::{decay_rate_estimate, DecayEstimate, DecaySource};

pub const DEFAULT_HALF_WIDTH: f64 = 144.0;
pub const DEFAULT_H: f64 = 0.005;
/// Largest admissible `|u(+-L)| / max |u|` for an accepted mode.
pub const EDGE_RATIO_MAX: f64 = 1e-3;
/// Modes whose fitted rate is not below this are treated as extended.
pub const FLAT_RATE: f64 = -1e-3;
/// Fits use `|x| <= FIT_FRACTION * L`.
pub const FIT_FRACTION: f64 = 0.6;
const FIT_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    Dirichlet,
    Neumann,
}

/// A reflected coefficient on `[-L, L]` with grid spacing `h`.
#[derive(Debug, Clone, PartialEq)]
pub struct InterfaceProblem {
    pub coefficient: Coefficient1D,
    pub kind: ProblemKind,
    pub half_width: f64,
    pub h: f64,
    pub boundary: Boundary,
}

impl InterfaceProblem {
    pub fn new(
        coefficient: Coefficient1D,
        kind: ProblemKind,
        half_width: f64,
        h: f64,
        boundary: Boundary,
    ) -> Result<Self> {
        if !(h > 0.0) || !(half_width > 0.0) || !h.is_finite() || !half_width.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "half-width {half_width} and spacing {h} must be positive"
            )));
        }
        let p = Self {
            coefficient,
            kind,
            half_width,
            h,
            boundary,
        };
        let n = p.grid().len();
        if n < crate::supercell::MIN_POINTS {
            return Err(Error::GridTooCoarse { points: n });
        }
        let probes = 64;
        for k in 1..=probes {
            let x = half_width * k as f64 / probes as f64;
            let (a, b) = (p.coefficient.eval(x), p.coefficient.eval(-x));
            if (a - b).abs() > 1e-12 * a.abs().max(1.0) {
                return Err(Error::InvalidParameter(format!(
                    "coefficient is not even: f({x}) = {a}, f(-{x}) = {b}"
                )));
            }
        }
        Ok(p)
    }

    /// The reflected quasiperiodic problem `x -> F(|x|, theta |x|)`.
    pub fn reflected(problem: &QuasiperiodicProblem, half_width: f64, h: f64) -> Result<Self> {
        Self::new(
            reflect(problem.field.as_slice()),
            problem.kind,
            half_width,
            h,
            Boundary::Dirichlet,
        )
    }

    pub fn with_boundary(&self, boundary: Boundary) -> Result<Self> {
        Self::new(self.coefficient.clone(), self.kind, self.half_width, self.h, boundary)
    }

    pub fn with_half_width(&self, half_width: f64) -> Result<Self> {
        Self::new(self.coefficient.clone(), self.kind, half_width, self.h, self.boundary)
    }

    fn cells(&self) -> usize {
        (2.0 * self.half_width / self.h).round() as usize
    }

    fn step(&self) -> f64 {
        2.0 * self.half_width / self.cells() as f64
    }

    /// Unknown locations: interior nodes for Dirichlet, cell centres for
    /// Neumann. Symmetric about 0.
    pub fn grid(&self) -> Vec<f64> {
        let n = self.cells();
        let h = self.step();
        let l = self.half_width;
        match self.boundary {
            Boundary::Dirichlet => (1..n).map(|i| -l + i as f64 * h).collect(),
            Boundary::Neumann => (0..n).map(|i| -l + (i as f64 + 0.5) * h).collect(),
        }
    }

    fn samples(&self) -> (Vec<f64>, Option<Vec<f64>>) {
        let h = self.step();
        let kind = self.kind;
        let grid = self.grid();
        let v = grid
            .iter()
            .map(|&x| self.coefficient.cell_mean(x, h, &|f| kind.split(f).0))
            .collect();
        let w = kind.has_weight().then(|| {
            grid.iter()
                .map(|&x| self.coefficient.cell_mean(x, h, &|f| kind.split(f).1))
                .collect()
        });
        (v, w)
    }

    /// Symmetric tridiagonal operator, weight-scaled when present.
    pub fn operator(&self) -> Result<SymTridiagonal> {
        let h = self.step();
        let inv_h2 = 1.0 / (h * h);
        let (v, w) = self.samples();
        let n = v.len();
        let mut diag: Vec<f64> = v.iter().map(|x| 2.0 * inv_h2 + x).collect();
        if self.boundary == Boundary::Neumann {
            diag[0] -= inv_h2;
            diag[n - 1] -= inv_h2;
        }
        let t = SymTridiagonal::new(diag, vec![-inv_h2; n - 1])?;
        match &w {
            Some(w) => t.scaled_by_weights(w),
            None => Ok(t),
        }
    }
}

/// Eigenpairs of an interface problem inside a window.
#[derive(Debug, Clone, PartialEq)]
pub struct InterfaceSolution {
    pub x: Vec<f64>,
    /// `(eigenvalue, eigenvector)` with `max |u| = 1`, largest entry positive.
    pub pairs: Vec<(f64, Vec<f64>)>,
}

/// All eigenvalues of the discretised problem in `window`, with eigenvectors.
pub fn solve_interface(p: &InterfaceProblem, window: Window) -> Result<InterfaceSolution> {
    let op = p.operator()?;
    let w = p.samples().1;
    let values = op.eigenvalues_in(window.lo, window.hi);
    let mut raw: Vec<Vec<f64>> = Vec::with_capacity(values.len());
    let mut pairs = Vec::with_capacity(values.len());
    for (k, &e) in values.iter().enumerate() {
        let close = 1e-8 * e.abs().max(1.0);
        let previous: Vec<Vec<f64>> = (0..k)
            .filter(|&j| (values[j] - e).abs() < close)
            .map(|j| raw[j].clone())
            .collect();
        let v = op.eigenvector(e, &previous);
        let mut u: Vec<f64> = match &w {
            Some(w) => v.iter().zip(w).map(|(a, b)| a / b.sqrt()).collect(),
            None => v.clone(),
        };
        let peak = u
            .iter()
            .copied()
            .max_by(|a, b| a.abs().total_cmp(&b.abs()))
            .unwrap_or(1.0);
        u.iter_mut().for_each(|a| *a /= peak);
        raw.push(v);
        pairs.push((e, u));
    }
    Ok(InterfaceSolution { x: p.grid(), pairs })
}

/// A mode strictly inside a gap, decaying on both sides.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterfaceMode {
    pub eigenvalue: f64,
    pub gap: Gap,
    pub isolation_margin: f64,
    /// Mean of the two half-axis rates.
    pub rate: f64,
    pub rate_left: f64,
    pub rate_right: f64,
    pub edge_ratio: f64,
    #[serde(skip)]
    pub x: Vec<f64>,
    #[serde(skip)]
    pub u: Vec<f64>,
}

impl InterfaceMode {
    /// Relative difference between the even and odd halves, `max |u(x) -+ u(-x)|`.
    pub fn parity_defect(&self) -> f64 {
        let n = self.u.len();
        let even = (0..n)
            .map(|i| (self.u[i] - self.u[n - 1 - i]).abs())
            .fold(0.0, f64::max);
        let odd = (0..n)
            .map(|i| (self.u[i] + self.u[n - 1 - i]).abs())
            .fold(0.0, f64::max);
        even.min(odd)
    }
}

fn half_axis_rate(x: &[f64], u: &[f64], half_width: f64, sign: f64) -> Result<f64> {
    let peak = u.iter().fold(0.0f64, |m, a| m.max(a.abs()));
    let mut samples: Vec<(f64, f64)> = x
        .iter()
        .zip(u)
        .map(|(&x, &a)| (sign * x, a.abs()))
        .filter(|&(s, a)| s > 0.0 && s <= FIT_FRACTION * half_width && a >= FIT_FLOOR * peak)
        .collect();
    samples.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(fit_exponential_envelope(&samples)?.rate)
}

/// Keeps candidates inside `gaps` that decay on both half-axes. A kept mode
/// that does not vanish at the truncation boundary is a `TruncationSuspect`.
pub fn classify_modes(sol: &InterfaceSolution, gaps: &GapSet, half_width: f64) -> Result<Vec<InterfaceMode>> {
    let mut out = Vec::new();
    for (e, u) in &sol.pairs {
        let Some(gap) = gaps.containing(*e) else {
            continue;
        };
        let right = half_axis_rate(&sol.x, u, half_width, 1.0);
        let left = half_axis_rate(&sol.x, u, half_width, -1.0);
        let (Ok(rate_right), Ok(rate_left)) = (right, left) else {
            continue;
        };
        if rate_right >= FLAT_RATE || rate_left >= FLAT_RATE {
            continue;
        }
        let peak = u.iter().fold(0.0f64, |m, a| m.max(a.abs()));
        let edge = u[0].abs().max(u[u.len() - 1].abs());
        let edge_ratio = edge / peak;
        if edge_ratio > EDGE_RATIO_MAX {
            return Err(Error::TruncationSuspect {
                eigenvalue: *e,
                ratio: edge_ratio,
            });
        }
        out.push(InterfaceMode {
            eigenvalue: *e,
            gap: *gap,
            isolation_margin: gap.depth(*e),
            rate: 0.5 * (rate_left + rate_right),
            rate_left,
            rate_right,
            edge_ratio,
            x: sol.x.clone(),
            u: u.clone(),
        });
    }
    Ok(out)
}

/// `|fitted - estimated| / |estimated|`.
pub fn compare_decay(mode: &InterfaceMode, estimate: f64) -> f64 {
    (mode.rate - estimate).abs() / estimate.abs()
}

/// Gaps shared by the supercell spectra of the given approximants, at least
/// `min_width` wide.
pub fn interface_gaps(
    problem: &QuasiperiodicProblem,
    approximants: &[RationalApproximant],
    settings: &BandSettings,
    min_width: f64,
) -> Result<GapSet> {
    let sets = approximants
        .iter()
        .map(|a| {
            Ok(extract_gaps(
                &band_diagram(problem, a, settings)?,
                settings.window,
                None,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(shared_gaps(&sets, min_width))
}

/// Union of the gaps, each widened by `fraction` of its width, as search windows.
pub fn search_windows(gaps: &GapSet, fraction: f64) -> Vec<Window> {
    let mut out: Vec<Window> = Vec::new();
    for g in &gaps.gaps {
        let g = g.inflated(fraction);
        match out.last_mut() {
            Some(w) if g.lo <= w.hi => w.hi = w.hi.max(g.hi),
            _ => out.push(Window { lo: g.lo, hi: g.hi }),
        }
    }
    out
}

/// Parameters of a full interface-mode search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InterfaceSettings {
    pub half_width: f64,
    pub h: f64,
    pub boundary: Boundary,
    /// Approximant denominators whose shared gaps are searched.
    pub gap_denominators: Vec<i64>,
    pub bands: BandSettings,
    pub min_gap_width: f64,
    pub search_inflation: f64,
    /// Restricts the search to this window when set.
    pub window: Option<Window>,
    /// Approximant denominators used by the transfer-matrix decay estimate.
    pub estimate_denominators: Vec<i64>,
    /// RK4 step of the estimate as a fraction of `h`.
    pub estimate_step_fraction: f64,
}

impl Default for InterfaceSettings {
    fn default() -> Self {
        Self {
            half_width: DEFAULT_HALF_WIDTH,
            h: DEFAULT_H,
            boundary: Boundary::Dirichlet,
            gap_denominators: vec![13, 21, 34],
            bands: BandSettings {
                points_per_unit: 100,
                ..BandSettings::default()
            },
            min_gap_width: 0.1,
            search_inflation: 0.05,
            window: None,
            estimate_denominators: vec![2, 3, 5, 8, 13],
            estimate_step_fraction: 0.25,
        }
    }
}

/// A located mode together with its transfer-matrix decay estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterfaceFinding {
    pub mode: InterfaceMode,
    pub estimate: Option<DecayEstimate>,
    pub relative_error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterfaceStudy {
    pub gaps: GapSet,
    pub findings: Vec<InterfaceFinding>,
}

/// Convergents of `theta` whose denominators appear in `denominators`, in
/// the order given.
pub fn approximants_with_denominators(theta: f64, denominators: &[i64]) -> Result<Vec<RationalApproximant>> {
    let cf = cf_elements(theta, 12)?;
    let all = convergents(&cf, cf.elements().len())?;
    denominators
        .iter()
        .map(|&q| {
            all.iter()
                .find(|a| a.q == q)
                .copied()
                .ok_or_else(|| Error::InvalidParameter(format!("{q} is not a convergent denominator of {theta}")))
        })
        .collect()
}

/// Gaps, localized modes and decay estimates for the reflected problem.
pub fn interface_study(problem: &QuasiperiodicProblem, settings: &InterfaceSettings) -> Result<InterfaceStudy> {
    let theta = problem.field.theta;
    let gap_levels = approximants_with_denominators(theta, &settings.gap_denominators)?;
    let estimate_levels = approximants_with_denominators(theta, &settings.estimate_denominators)?;
    let gaps = interface_gaps(problem, &gap_levels, &settings.bands, settings.min_gap_width)?;
    let ip = InterfaceProblem::reflected(problem, settings.half_width, settings.h)?.with_boundary(settings.boundary)?;
    let mut modes = Vec::new();
    for w in search_windows(&gaps, settings.search_inflation) {
        let w = match settings.window {
            Some(r) if r.lo.max(w.lo) < r.hi.min(w.hi) => Window {
                lo: r.lo.max(w.lo),
                hi: r.hi.min(w.hi),
            },
            Some(_) => continue,
            None => w,
        };
        let sol = solve_interface(&ip, w)?;
        modes.extend(classify_modes(&sol, &gaps, settings.half_width)?);
    }
    let findings = modes
        .into_iter()
        .map(|mode| {
            let source = DecaySource::Field {
                problem,
                approximants: &estimate_levels,
                step: settings.h * settings.estimate_step_fraction,
            };
            match decay_rate_estimate(source, mode.eigenvalue) {
                Ok(est) => {
                    let err = compare_decay(&mode, est.rate);
                    Ok(InterfaceFinding {
                        mode,
                        estimate: Some(est),
                        relative_error: Some(err),
                    })
                }
                Err(Error::NotInGap { .. }) => Ok(InterfaceFinding {
                    mode,
                    estimate: None,
                    relative_error: None,
                }),
                Err(e) => Err(e),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(InterfaceStudy { gaps, findings })
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::potentials::{CoefficientField, Surface};

    fn free(half_width: f64, h: f64, boundary: Boundary) -> InterfaceProblem {
        let field = CoefficientField::new(Surface::zero(), 1.0);
        InterfaceProblem::new(
            reflect(field.as_slice()),
            ProblemKind::Schrodinger,
            half_width,
            h,
            boundary,
        )
        .unwrap()
    }

    #[test]
    fn particle_in_a_box() {
        let p = free(2.0, 0.001, Boundary::Dirichlet);
        let sol = solve_interface(&p, Window::new(0.0, 10.0).unwrap()).unwrap();
        assert_eq!(sol.pairs.len(), 4);
        for (k, (e, _)) in sol.pairs.iter().enumerate() {
            let exact = ((k + 1) as f64 * PI / 4.0).powi(2);
            assert!((e - exact).abs() < 1e-5 * exact, "{e} vs {exact}");
        }
        let neumann = solve_interface(
            &p.with_boundary(Boundary::Neumann).unwrap(),
            Window::new(-1.0, 3.0).unwrap(),
        )
        .unwrap();
        assert!(neumann.pairs[0].0.abs() < 1e-6);
        assert!((neumann.pairs[1].0 - (PI / 4.0).powi(2)).abs() < 1e-5);
    }

    #[test]
    fn eigenvectors_have_parity() {
        let p = free(2.0, 0.01, Boundary::Dirichlet);
        let sol = solve_interface(&p, Window::new(0.0, 10.0).unwrap()).unwrap();
        for (_, u) in &sol.pairs {
            let n = u.len();
            let even = (0..n).all(|i| (u[i] - u[n - 1 - i]).abs() < 1e-8);
            let odd = (0..n).all(|i| (u[i] + u[n - 1 - i]).abs() < 1e-8);
            assert!(even ^ odd);
        }
    }

    #[test]
    fn rejects_uneven_coefficient() {
        let field = CoefficientField::new(Surface::sin2d(), crate::contfrac::GOLDEN);
        let err = InterfaceProblem::new(
            field.as_slice(),
            ProblemKind::Schrodinger,
            5.0,
            0.01,
            Boundary::Dirichlet,
        );
        assert!(matches!(err, Err(Error::InvalidParameter(_))));
    }

    fn synthetic(rate: f64, omega: f64, half_width: f64) -> InterfaceSolution {
        let x: Vec<f64> = (0..4001)
            .map(|i| -half_width + i as f64 * half_width / 2000.0)
            .collect();
        let u = x.iter().map(|&t| (rate * t.abs()).exp() * (omega * t).cos()).collect();
        InterfaceSolution {
            x,
            pairs: vec![(1.5, u)],
        }
    }

    fn one_gap() -> GapSet {
        GapSet {
            window: Window::new(0.0, 3.0).unwrap(),
            gaps: vec![Gap { lo: 1.0, hi: 2.0 }],
        }
    }

    #[test]
    fn synthetic_mode_recovers_rate() {
        let sol = synthetic(-0.4, 3.0, 40.0);
        let modes = classify_modes(&sol, &one_gap(), 40.0).unwrap();
        assert_eq!(modes.len(), 1);
        let m = &modes[0];
        assert!(compare_decay(m, -0.4) < 1e-2);
        assert!((m.rate_left - m.rate_right).abs() < 1e-6);
        assert!((m.isolation_margin - 0.5).abs() < 1e-12);
        assert!(m.parity_defect() < 1e-12);
    }

    #[test]
    fn classification_filters() {
        let flat = synthetic(0.0, 3.0, 40.0);
        assert!(classify_modes(&flat, &one_gap(), 40.0).unwrap().is_empty());
        let mut outside = synthetic(-0.4, 3.0, 40.0);
        outside.pairs[0].0 = 2.5;
        assert!(classify_modes(&outside, &one_gap(), 40.0).unwrap().is_empty());
        let slow = synthetic(-0.05, 3.0, 40.0);
        assert!(matches!(
            classify_modes(&slow, &one_gap(), 40.0),
            Err(Error::TruncationSuspect { .. })
        ));
    }

    #[test]
    fn windows_merge_when_inflated() {
        let gaps = GapSet {
            window: Window::new(0.0, 10.0).unwrap(),
            gaps: vec![
                Gap { lo: 1.0, hi: 2.0 },
                Gap { lo: 2.02, hi: 3.0 },
                Gap { lo: 5.0, hi: 6.0 },
            ],
        };
        let w = search_windows(&gaps, 0.05);
        assert_eq!(w.len(), 2);
        assert!((w[0].lo - 0.975).abs() < 1e-12 && (w[0].hi - 3.0245).abs() < 1e-12);
    }
}
