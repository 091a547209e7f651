//! Continued fractions and their convergents.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The golden ratio `(1 + sqrt 5) / 2`.
pub const GOLDEN: f64 = 1.618_033_988_749_895;

const MAX_FLOAT_ELEMENTS: usize = 15;
const FRAC_CUTOFF: f64 = 1e-12;

/// Numbers whose expansions are generated symbolically.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExactTag {
    Golden,
    Sqrt2,
    Rational { p: i64, q: i64 },
}

impl ExactTag {
    pub fn value(&self) -> f64 {
        match *self {
            ExactTag::Golden => GOLDEN,
            ExactTag::Sqrt2 => std::f64::consts::SQRT_2,
            ExactTag::Rational { p, q } => p as f64 / q as f64,
        }
    }
}

/// Input to [`cf_elements`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CfSource {
    Value(f64),
    Exact(ExactTag),
}

impl From<f64> for CfSource {
    fn from(x: f64) -> Self {
        CfSource::Value(x)
    }
}

impl From<ExactTag> for CfSource {
    fn from(t: ExactTag) -> Self {
        CfSource::Exact(t)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContinuedFraction {
    elements: Vec<i64>,
    exact_tag: Option<ExactTag>,
}

impl ContinuedFraction {
    /// Validates `a_k >= 1` for `k >= 1`; a trailing 1 is folded into the
    /// previous element.
    pub fn from_elements(mut elements: Vec<i64>) -> Result<Self> {
        if elements.is_empty() {
            return Err(Error::InvalidParameter(
                "continued fraction needs at least one element".into(),
            ));
        }
        if let Some(bad) = elements.iter().skip(1).find(|&&a| a < 1) {
            return Err(Error::InvalidParameter(format!(
                "continued fraction element {bad} is below 1"
            )));
        }
        canonicalize(&mut elements);
        Ok(Self {
            elements,
            exact_tag: None,
        })
    }

    pub fn elements(&self) -> &[i64] {
        &self.elements
    }

    pub fn exact_tag(&self) -> Option<ExactTag> {
        self.exact_tag
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }
}

fn canonicalize(e: &mut Vec<i64>) {
    if e.len() > 1 && e[e.len() - 1] == 1 {
        e.pop();
        *e.last_mut().unwrap() += 1;
    }
}

/// A convergent `p/q` with its index and, when the next denominator is
/// known, the bound `1/(q_k q_{k+1})` on `|x - p/q|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RationalApproximant {
    pub p: i64,
    pub q: i64,
    pub index: usize,
    pub error_bound: Option<f64>,
}

impl RationalApproximant {
    /// A bare rational `p/q` in lowest terms, outside any sequence.
    pub fn rational(p: i64, q: i64) -> Result<Self> {
        if q <= 0 {
            return Err(Error::InvalidParameter(format!("denominator {q} must be positive")));
        }
        let g = gcd(p.unsigned_abs(), q as u64) as i64;
        Ok(Self {
            p: p / g,
            q: q / g,
            index: 0,
            error_bound: None,
        })
    }

    pub fn value(&self) -> f64 {
        self.p as f64 / self.q as f64
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a.max(1)
}

/// The first `k_max` elements of the canonical expansion of `x`. Finite
/// expansions may return fewer elements.
pub fn cf_elements(x: impl Into<CfSource>, k_max: usize) -> Result<ContinuedFraction> {
    if k_max == 0 {
        return Err(Error::InvalidParameter("k_max must be at least 1".into()));
    }
    match x.into() {
        CfSource::Exact(tag) => {
            let elements = match tag {
                ExactTag::Golden => vec![1; k_max],
                ExactTag::Sqrt2 => {
                    let mut e = vec![2; k_max];
                    e[0] = 1;
                    e
                }
                ExactTag::Rational { p, q } => {
                    let mut e = euclid(p, q)?;
                    e.truncate(k_max);
                    e
                }
            };
            Ok(ContinuedFraction {
                elements,
                exact_tag: Some(tag),
            })
        }
        CfSource::Value(x) => float_elements(x, k_max),
    }
}

fn euclid(p: i64, q: i64) -> Result<Vec<i64>> {
    if q <= 0 {
        return Err(Error::InvalidParameter(format!("denominator {q} must be positive")));
    }
    let mut e = Vec::new();
    let (mut a, mut b) = (p as i128, q as i128);
    loop {
        let fl = a.div_euclid(b);
        e.push(fl as i64);
        let r = a.rem_euclid(b);
        if r == 0 {
            break;
        }
        (a, b) = (b, r);
    }
    Ok(e)
}

/// `p/q` equals `x` to rounding while `q` is far too small for an
/// irrational number to be matched that closely.
fn reproduces(p: f64, q: f64, x: f64) -> bool {
    q * q * f64::EPSILON < 1e-4 && (p / q - x).abs() <= 4.0 * f64::EPSILON * x.abs()
}

fn float_elements(x: f64, k_max: usize) -> Result<ContinuedFraction> {
    if !x.is_finite() {
        return Err(Error::InvalidParameter(format!("cannot expand {x}")));
    }
    let mut elements = Vec::new();
    let a0 = x.floor();
    elements.push(a0 as i64);
    let mut frac = x - a0;
    let mut terminated = false;
    let (mut p, mut p_prev) = (a0, 1.0);
    let (mut q, mut q_prev) = (1.0, 0.0);
    while elements.len() < k_max {
        if frac < FRAC_CUTOFF || reproduces(p, q, x) {
            terminated = true;
            break;
        }
        if elements.len() >= MAX_FLOAT_ELEMENTS {
            return Err(Error::PrecisionExhausted {
                elements: MAX_FLOAT_ELEMENTS,
            });
        }
        let y = 1.0 / frac;
        let nearest = y.round();
        let a = if (y - nearest).abs() < 1e-9 * y {
            nearest
        } else {
            y.floor()
        };
        elements.push(a as i64);
        (p, p_prev) = (a * p + p_prev, p);
        (q, q_prev) = (a * q + q_prev, q);
        frac = (y - a).max(0.0);
    }
    if !terminated && (frac < FRAC_CUTOFF || reproduces(p, q, x)) {
        terminated = true;
    }
    if terminated {
        canonicalize(&mut elements);
    }
    Ok(ContinuedFraction {
        elements,
        exact_tag: None,
    })
}

/// The first `count` convergents by the standard three-term recurrence.
pub fn convergents(cf: &ContinuedFraction, count: usize) -> Result<Vec<RationalApproximant>> {
    let e = &cf.elements;
    if count > e.len() {
        return Err(Error::NotEnoughElements {
            available: e.len(),
            requested: count,
        });
    }
    let overflow = || Error::Overflow {
        context: "convergent recurrence",
    };
    let (mut p_prev, mut q_prev) = (1i64, 0i64);
    let (mut p, mut q) = (e[0], 1i64);
    let mut pq = vec![(p, q)];
    let last = (count + 1).min(e.len());
    for &a in &e[1..last] {
        let p_next = a
            .checked_mul(p)
            .and_then(|v| v.checked_add(p_prev))
            .ok_or_else(overflow)?;
        let q_next = a
            .checked_mul(q)
            .and_then(|v| v.checked_add(q_prev))
            .ok_or_else(overflow)?;
        (p_prev, q_prev, p, q) = (p, q, p_next, q_next);
        pq.push((p, q));
    }
    Ok((0..count)
        .map(|k| RationalApproximant {
            p: pq[k].0,
            q: pq[k].1,
            index: k,
            error_bound: pq.get(k + 1).map(|&(_, qn)| 1.0 / (pq[k].1 as f64 * qn as f64)),
        })
        .collect())
}

/// Golden-ratio convergents `1/1, 2/1, 3/2, 5/3, ...`.
pub fn golden_convergents(count: usize) -> Result<Vec<RationalApproximant>> {
    let cf = cf_elements(ExactTag::Golden, count.max(1) + 1)?;
    convergents(&cf, count)
}

/// The golden convergent with denominator `q`, if `q` is a Fibonacci number.
pub fn golden_with_denominator(q: i64) -> Result<RationalApproximant> {
    let all = golden_convergents(60)?;
    all.into_iter()
        .find(|a| a.q == q)
        .ok_or_else(|| Error::InvalidParameter(format!("{q} is not a golden convergent denominator")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_elements_and_convergents() {
        let cf = cf_elements(ExactTag::Golden, 6).unwrap();
        assert_eq!(cf.elements(), &[1, 1, 1, 1, 1, 1]);
        let conv = golden_convergents(7).unwrap();
        let pq: Vec<(i64, i64)> = conv.iter().map(|a| (a.p, a.q)).collect();
        assert_eq!(pq, vec![(1, 1), (2, 1), (3, 2), (5, 3), (8, 5), (13, 8), (21, 13)]);
    }

    #[test]
    fn float_expansions() {
        assert_eq!(cf_elements(1.5, 10).unwrap().elements(), &[1, 2]);
        let s = cf_elements(std::f64::consts::SQRT_2, 8).unwrap();
        assert_eq!(s.elements(), &[1, 2, 2, 2, 2, 2, 2, 2]);
        assert_eq!(cf_elements(-0.5, 5).unwrap().elements(), &[-1, 2]);
        assert_eq!(
            cf_elements(std::f64::consts::PI, 20).unwrap_err(),
            Error::PrecisionExhausted { elements: 15 }
        );
        assert_eq!(cf_elements(0.75, 4).unwrap().elements(), &[0, 1, 3]);
        assert_eq!(cf_elements(193.0 / 107.0, 12).unwrap().elements(), &[1, 1, 4, 10, 2]);
    }

    #[test]
    fn sqrt2_convergents() {
        let cf = cf_elements(ExactTag::Sqrt2, 5).unwrap();
        let c = convergents(&cf, 4).unwrap();
        let pq: Vec<(i64, i64)> = c.iter().map(|a| (a.p, a.q)).collect();
        assert_eq!(pq, vec![(1, 1), (3, 2), (7, 5), (17, 12)]);
        assert!(c[3].error_bound.is_some());
    }

    #[test]
    fn single_element_and_errors() {
        let cf = ContinuedFraction::from_elements(vec![4]).unwrap();
        let c = convergents(&cf, 1).unwrap();
        assert_eq!((c[0].p, c[0].q, c[0].error_bound), (4, 1, None));
        assert_eq!(
            convergents(&cf, 2).unwrap_err(),
            Error::NotEnoughElements {
                available: 1,
                requested: 2
            }
        );
        assert_eq!(
            ContinuedFraction::from_elements(vec![1, 2, 1]).unwrap().elements(),
            &[1, 3]
        );
        let r = cf_elements(ExactTag::Rational { p: 21, q: 13 }, 10).unwrap();
        assert_eq!(r.elements(), &[1, 1, 1, 1, 1, 2]);
    }

    #[test]
    fn overflow_is_reported() {
        let cf = ContinuedFraction::from_elements(vec![1; 120]).unwrap();
        assert_eq!(convergents(&cf, 100).unwrap_err().name(), "Overflow");
    }

    #[test]
    fn lookup_by_denominator() {
        assert_eq!(golden_with_denominator(13).unwrap().p, 21);
        assert_eq!(golden_with_denominator(2).unwrap().p, 3);
        assert!(golden_with_denominator(4).is_err());
    }
}
