//! Coefficient functions: quasiperiodic slices of torus functions, their
//! periodic approximants, reflected variants and piecewise-constant laminates.

use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::contfrac::RationalApproximant;
use crate::error::{Error, Result};
use crate::tiling::TilingWord;

/// One term `c exp(2 pi i (m x + n y))` of a torus Fourier series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FourierTerm {
    pub m: i32,
    pub n: i32,
    pub coeff: Complex64,
}

/// Real-valued, doubly 1-periodic function given by a finite Fourier series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Surface {
    terms: Vec<FourierTerm>,
}

const SYMMETRY_TOL: f64 = 1e-12;

impl Surface {
    /// Terms with the same `(m, n)` are summed; the result must be
    /// Hermitian-symmetric, `c(-m,-n) = conj c(m,n)`.
    pub fn from_terms(terms: &[FourierTerm]) -> Result<Self> {
        let mut map: BTreeMap<(i32, i32), Complex64> = BTreeMap::new();
        for t in terms {
            *map.entry((t.m, t.n)).or_default() += t.coeff;
        }
        for (&(m, n), &c) in &map {
            let partner = map.get(&(-m, -n)).copied().unwrap_or_default();
            if (partner - c.conj()).norm() > SYMMETRY_TOL {
                return Err(Error::NonHermitianCoefficients { m, n });
            }
        }
        let terms = map
            .into_iter()
            .filter(|(_, c)| c.norm() > 0.0)
            .map(|((m, n), coeff)| FourierTerm { m, n, coeff })
            .collect();
        Ok(Self { terms })
    }

    /// `sin 2 pi x + sin 2 pi y`.
    pub fn sin2d() -> Self {
        Self::sin2d_plus(0.0)
    }

    /// `sin 2 pi x + sin 2 pi y + c`.
    pub fn sin2d_plus(c: f64) -> Self {
        let h = Complex64::new(0.0, 0.5);
        let mut terms = vec![
            FourierTerm { m: 1, n: 0, coeff: -h },
            FourierTerm { m: -1, n: 0, coeff: h },
            FourierTerm { m: 0, n: 1, coeff: -h },
            FourierTerm { m: 0, n: -1, coeff: h },
        ];
        if c != 0.0 {
            terms.push(FourierTerm {
                m: 0,
                n: 0,
                coeff: c.into(),
            });
        }
        Self::from_terms(&terms).expect("symmetric by construction")
    }

    pub fn constant(c: f64) -> Self {
        Self::from_terms(&[FourierTerm {
            m: 0,
            n: 0,
            coeff: c.into(),
        }])
        .expect("symmetric")
    }

    pub fn zero() -> Self {
        Self { terms: Vec::new() }
    }

    pub fn terms(&self) -> &[FourierTerm] {
        &self.terms
    }

    pub fn coefficient(&self, m: i32, n: i32) -> Complex64 {
        self.terms
            .iter()
            .find(|t| t.m == m && t.n == n)
            .map(|t| t.coeff)
            .unwrap_or_default()
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        self.terms
            .iter()
            .map(|t| {
                let phase = TAU * (t.m as f64 * x.rem_euclid(1.0) + t.n as f64 * y.rem_euclid(1.0));
                (t.coeff * Complex64::from_polar(1.0, phase)).re
            })
            .sum()
    }

    /// Bound on `|dF/dy|`.
    pub fn lipschitz_y(&self) -> f64 {
        self.terms
            .iter()
            .map(|t| t.coeff.norm() * TAU * t.n.unsigned_abs() as f64)
            .sum()
    }

    /// Lower bound `c_00 - sum |c_mn|` over the non-constant terms.
    pub fn lower_bound(&self) -> f64 {
        let mean = self.coefficient(0, 0).re;
        let rest: f64 = self
            .terms
            .iter()
            .filter(|t| (t.m, t.n) != (0, 0))
            .map(|t| t.coeff.norm())
            .sum();
        mean - rest
    }

    /// Largest `|m|` and `|n|` in the support.
    pub fn support_radius(&self) -> (u32, u32) {
        self.terms.iter().fold((0, 0), |(a, b), t| {
            (a.max(t.m.unsigned_abs()), b.max(t.n.unsigned_abs()))
        })
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }
}

/// A torus function restricted to the line through `offset` with slope `theta`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientField {
    pub surface: Surface,
    pub theta: f64,
    pub offset: (f64, f64),
}

impl CoefficientField {
    pub fn new(surface: Surface, theta: f64) -> Self {
        Self {
            surface,
            theta,
            offset: (0.0, 0.0),
        }
    }

    pub fn with_offset(mut self, y1: f64, y2: f64) -> Self {
        self.offset = (y1, y2);
        self
    }

    /// `F(x + y1, theta x + y2)`.
    pub fn slice(&self, x: f64) -> f64 {
        self.surface.eval(x + self.offset.0, self.theta * x + self.offset.1)
    }

    /// `F(x, (p/q) x)`, periodic with period `q`. Offsets are not carried
    /// over: supercells always use the zero offset.
    pub fn periodic_approximant(&self, approx: &RationalApproximant) -> Coefficient1D {
        Coefficient1D::Periodic {
            surface: self.surface.clone(),
            p: approx.p,
            q: approx.q,
        }
    }

    pub fn as_slice(&self) -> Coefficient1D {
        Coefficient1D::Slice(self.clone())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CoefficientKind {
    QuasiperiodicSlice,
    Periodic,
    Reflected,
    Laminate,
}

/// Tile of a laminate: its length and the material value on it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tile {
    pub length: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Laminate {
    pub tiles: BTreeMap<char, Tile>,
    pub word: TilingWord,
}

impl Laminate {
    /// Golden laminate default tiles: `a = (1, 1)`, `b = (1, 2)`.
    pub fn default_tiles() -> BTreeMap<char, Tile> {
        BTreeMap::from([
            (
                'a',
                Tile {
                    length: 1.0,
                    value: 1.0,
                },
            ),
            (
                'b',
                Tile {
                    length: 1.0,
                    value: 2.0,
                },
            ),
        ])
    }

    pub fn new(tiles: BTreeMap<char, Tile>, word: TilingWord) -> Result<Self> {
        for (c, t) in &tiles {
            if !(t.length > 0.0) || !(t.value > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "tile '{c}' needs positive length and value"
                )));
            }
        }
        Ok(Self { tiles, word })
    }

    pub fn total_length(&self) -> Result<f64> {
        self.word.letters.chars().map(|c| self.tile(c).map(|t| t.length)).sum()
    }

    pub fn tile(&self, letter: char) -> Result<Tile> {
        self.tiles.get(&letter).copied().ok_or(Error::UnknownLetter { letter })
    }
}

/// A one-dimensional coefficient function.
#[derive(Debug, Clone, PartialEq)]
pub enum Coefficient1D {
    Slice(CoefficientField),
    Periodic { surface: Surface, p: i64, q: i64 },
    Reflected(Arc<Coefficient1D>),
    Laminate(PiecewiseConstant),
}

/// Step function with breakpoints `breaks[0] = 0 < ... < breaks[k] = total`.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseConstant {
    breaks: Vec<f64>,
    values: Vec<f64>,
    periodic: bool,
}

impl PiecewiseConstant {
    pub fn total(&self) -> f64 {
        *self.breaks.last().expect("nonempty")
    }

    fn locate(&self, x: f64) -> f64 {
        let total = self.total();
        let x = if self.periodic {
            x.rem_euclid(total)
        } else {
            x.clamp(0.0, total)
        };
        let k = self.breaks.partition_point(|&b| b <= x);
        self.values[k.saturating_sub(1).min(self.values.len() - 1)]
    }

    /// Exact mean of `g(value)` over `[a, b]`.
    fn mean_of(&self, a: f64, b: f64, g: &dyn Fn(f64) -> f64) -> f64 {
        if b <= a {
            return g(self.locate(a));
        }
        let total = self.total();
        let mut acc = 0.0;
        let mut x = a;
        while x < b {
            let (base, local) = if self.periodic {
                let mut shift = (x / total).floor() * total;
                if x - shift >= total {
                    shift += total;
                }
                (shift, (x - shift).max(0.0))
            } else {
                (0.0, x.clamp(0.0, total))
            };
            let k = self
                .breaks
                .partition_point(|&t| t <= local)
                .saturating_sub(1)
                .min(self.values.len() - 1);
            let mut end = if k + 1 < self.breaks.len() && (self.periodic || local < total) {
                base + self.breaks[k + 1]
            } else {
                b
            };
            if end <= x {
                end = b;
            }
            let end = end.min(b);
            acc += (end - x) * g(self.values[k]);
            x = end;
        }
        acc / (b - a)
    }

    pub fn pieces(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.breaks.windows(2).zip(&self.values).map(|(w, &v)| (w[0], w[1], v))
    }
}

impl Coefficient1D {
    pub fn kind(&self) -> CoefficientKind {
        match self {
            Coefficient1D::Slice(_) => CoefficientKind::QuasiperiodicSlice,
            Coefficient1D::Periodic { .. } => CoefficientKind::Periodic,
            Coefficient1D::Reflected(_) => CoefficientKind::Reflected,
            Coefficient1D::Laminate(_) => CoefficientKind::Laminate,
        }
    }

    pub fn period(&self) -> Option<f64> {
        match self {
            Coefficient1D::Periodic { q, .. } => Some(*q as f64),
            Coefficient1D::Laminate(pc) if pc.periodic => Some(pc.total()),
            _ => None,
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Coefficient1D::Slice(f) => f.slice(x),
            Coefficient1D::Periodic { surface, p, q } => {
                // reduce modulo the period first so that f(x + q) = f(x) exactly
                let qf = *q as f64;
                let xr = x.rem_euclid(qf);
                surface.eval(xr, *p as f64 * xr / qf)
            }
            Coefficient1D::Reflected(inner) => inner.eval(x.abs()),
            Coefficient1D::Laminate(pc) => pc.locate(x),
        }
    }

    /// Mean of `g(f)` over the cell `[x - h/2, x + h/2]`: exact for
    /// laminates, the point value `g(f(x))` otherwise.
    pub fn cell_mean(&self, x: f64, h: f64, g: &dyn Fn(f64) -> f64) -> f64 {
        match self {
            Coefficient1D::Laminate(pc) => pc.mean_of(x - 0.5 * h, x + 0.5 * h, g),
            Coefficient1D::Reflected(inner) if matches!(**inner, Coefficient1D::Laminate(_)) => {
                let (a, b) = (x - 0.5 * h, x + 0.5 * h);
                if a >= 0.0 || b <= 0.0 {
                    let (lo, hi) = (a.abs().min(b.abs()), a.abs().max(b.abs()));
                    inner.cell_mean(0.5 * (lo + hi), hi - lo, g)
                } else {
                    let left = inner.cell_mean(-a / 2.0, -a, g) * (-a);
                    let right = inner.cell_mean(b / 2.0, b, g) * b;
                    (left + right) / (b - a)
                }
            }
            _ => g(self.eval(x)),
        }
    }
}

/// `x -> c(|x|)`.
pub fn reflect(c: Coefficient1D) -> Coefficient1D {
    Coefficient1D::Reflected(Arc::new(c))
}

/// Step function laid out left to right from 0 following the laminate word.
pub fn laminate_coefficient(lam: &Laminate, periodize: bool) -> Result<Coefficient1D> {
    if lam.word.is_empty() {
        return Err(Error::EmptyWord);
    }
    let mut breaks = vec![0.0];
    let mut values = Vec::with_capacity(lam.word.len());
    let mut x = 0.0;
    for c in lam.word.letters.chars() {
        let t = lam.tile(c)?;
        x += t.length;
        breaks.push(x);
        values.push(t.value);
    }
    Ok(Coefficient1D::Laminate(PiecewiseConstant {
        breaks,
        values,
        periodic: periodize,
    }))
}

/// Which differential equation a coefficient field enters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProblemKind {
    /// `-u'' + f u = lambda u`.
    Schrodinger,
    /// `-u'' = lambda f u` with `f > 0`.
    Generalized,
    /// `-u'' = lambda u / f^2` with `f > 0` a wave speed (laminates).
    WaveSpeed,
}

impl ProblemKind {
    /// Potential and weight of the operator at a coefficient value.
    pub fn split(self, f: f64) -> (f64, f64) {
        match self {
            ProblemKind::Schrodinger => (f, 1.0),
            ProblemKind::Generalized => (0.0, f),
            ProblemKind::WaveSpeed => (0.0, 1.0 / (f * f)),
        }
    }

    pub fn has_weight(self) -> bool {
        self != ProblemKind::Schrodinger
    }
}

/// A quasiperiodic operator: the field and how it enters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuasiperiodicProblem {
    pub kind: ProblemKind,
    pub field: CoefficientField,
}

impl QuasiperiodicProblem {
    pub fn new(kind: ProblemKind, field: CoefficientField) -> Result<Self> {
        if kind.has_weight() && !(field.surface.lower_bound() > 0.0) {
            return Err(Error::InvalidParameter(
                "generalized problems need a weight bounded away from zero".into(),
            ));
        }
        Ok(Self { kind, field })
    }

    /// `-u'' + (sin 2 pi x + sin 2 pi theta x) u = lambda u`.
    pub fn sin2d_schrodinger(theta: f64) -> Self {
        Self {
            kind: ProblemKind::Schrodinger,
            field: CoefficientField::new(Surface::sin2d(), theta),
        }
    }

    /// `-u'' = lambda (sin 2 pi x + sin 2 pi theta x + 3) u`.
    pub fn sin2d_generalized(theta: f64) -> Self {
        Self {
            kind: ProblemKind::Generalized,
            field: CoefficientField::new(Surface::sin2d_plus(3.0), theta),
        }
    }

    pub fn split(&self, f: f64) -> (f64, f64) {
        self.kind.split(f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contfrac::{golden_convergents, GOLDEN};

    #[test]
    fn slices() {
        let f = CoefficientField::new(Surface::sin2d(), GOLDEN);
        assert!(f.slice(0.0).abs() < 1e-15);
        let theta = 0.77;
        let g = CoefficientField::new(Surface::sin2d(), theta);
        let expect = 1.0 + (TAU * theta / 4.0).sin();
        assert!((g.slice(0.25) - expect).abs() < 1e-12);
        let c = CoefficientField::new(Surface::constant(2.5), GOLDEN);
        assert!((c.slice(3.7) - 2.5).abs() < 1e-15);
    }

    #[test]
    fn rejects_non_hermitian_series() {
        let err = Surface::from_terms(&[FourierTerm {
            m: 1,
            n: 0,
            coeff: Complex64::new(1.0, 0.0),
        }])
        .unwrap_err();
        assert_eq!(err, Error::NonHermitianCoefficients { m: 1, n: 0 });
    }

    #[test]
    fn sin2d_coefficients() {
        let s = Surface::sin2d();
        assert_eq!(s.terms().len(), 4);
        assert_eq!(s.coefficient(1, 0), Complex64::new(0.0, -0.5));
        assert_eq!(s.coefficient(-1, 0), Complex64::new(0.0, 0.5));
        for &(x, y) in &[(0.1, 0.7), (0.25, 0.0), (0.9, 0.33)] {
            let direct = (TAU * x).sin() + (TAU * y).sin();
            assert!((s.eval(x, y) - direct).abs() < 1e-14);
        }
    }

    #[test]
    fn approximant_periods() {
        let f = CoefficientField::new(Surface::sin2d(), GOLDEN);
        let conv = golden_convergents(8).unwrap();
        let three_halves = conv.iter().find(|a| a.q == 2).unwrap();
        assert_eq!(f.periodic_approximant(three_halves).period(), Some(2.0));
        let c = f.periodic_approximant(&conv[6]);
        assert_eq!(c.period(), Some(13.0));
        for i in 0..20 {
            let x = 0.37 * i as f64;
            assert!((c.eval(x + 13.0) - c.eval(x)).abs() < 1e-12);
        }
    }

    #[test]
    fn reflection() {
        let f = CoefficientField::new(Surface::sin2d(), GOLDEN).as_slice();
        let r = reflect(f.clone());
        assert_eq!(r.eval(-0.3), f.eval(0.3));
        assert_eq!(r.kind(), CoefficientKind::Reflected);
        let s = reflect(
            CoefficientField::new(
                Surface::from_terms(&[
                    FourierTerm {
                        m: 1,
                        n: 0,
                        coeff: Complex64::new(0.0, -0.5),
                    },
                    FourierTerm {
                        m: -1,
                        n: 0,
                        coeff: Complex64::new(0.0, 0.5),
                    },
                ])
                .unwrap(),
                0.0,
            )
            .as_slice(),
        );
        assert!((s.eval(0.25) - 1.0).abs() < 1e-14 && (s.eval(-0.25) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn laminates() {
        let tiles = BTreeMap::from([(
            'a',
            Tile {
                length: 1.0,
                value: 4.0,
            },
        )]);
        let lam = Laminate::new(tiles, TilingWord::new("a", 1)).unwrap();
        let c = laminate_coefficient(&lam, true).unwrap();
        assert_eq!(c.period(), Some(1.0));
        assert_eq!(c.eval(0.3), 4.0);
        assert_eq!(c.eval(17.9), 4.0);

        let lam = Laminate::new(Laminate::default_tiles(), TilingWord::new("ab", 2)).unwrap();
        let c = laminate_coefficient(&lam, false).unwrap();
        assert_eq!((c.eval(0.5), c.eval(1.5)), (1.0, 2.0));
        assert_eq!(c.period(), None);
        // exact cell mean straddling the break at 1
        let m = c.cell_mean(1.0, 0.5, &|v| v);
        assert!((m - 1.5).abs() < 1e-15);

        let empty = Laminate::new(Laminate::default_tiles(), TilingWord::new("", 0)).unwrap();
        assert_eq!(laminate_coefficient(&empty, true).unwrap_err(), Error::EmptyWord);
    }

    #[test]
    fn periodic_laminate_cell_mean_wraps() {
        let lam = Laminate::new(Laminate::default_tiles(), TilingWord::new("ab", 2)).unwrap();
        let c = laminate_coefficient(&lam, true).unwrap();
        // [1.75, 2.25] covers b on [1.75, 2) and a on [2, 2.25)
        let m = c.cell_mean(2.0, 0.5, &|v| 1.0 / (v * v));
        assert!((m - 0.5 * (0.25 + 1.0)).abs() < 1e-15);
        let m = c.cell_mean(-0.25, 0.5, &|v| v);
        assert!((m - 2.0).abs() < 1e-15);
    }
}
