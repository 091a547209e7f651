use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `|u(x)| ~ exp(intercept + rate * x)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpFit {
    pub rate: f64,
    pub intercept: f64,
}

const HALF_WINDOW: usize = 2;

/// Least-squares exponential fit through the envelope of an oscillating
/// signal. The envelope is the set of samples that are maximal within
/// a window of five neighbouring samples; if fewer than three such maxima
/// exist (a monotone signal, say) every positive sample is used.
pub fn fit_exponential_envelope(samples: &[(f64, f64)]) -> Result<ExpFit> {
    let positive: Vec<(f64, f64)> = samples
        .iter()
        .map(|&(x, a)| (x, a.abs()))
        .filter(|&(_, a)| a > 0.0 && a.is_finite())
        .collect();
    if positive.len() < 3 {
        return Err(Error::InsufficientSamples { found: positive.len() });
    }
    let amp: Vec<f64> = samples.iter().map(|s| s.1.abs()).collect();
    let n = samples.len();
    let peaks: Vec<(f64, f64)> = (0..n)
        .filter(|&i| {
            let lo = i.saturating_sub(HALF_WINDOW);
            let hi = (i + HALF_WINDOW).min(n - 1);
            amp[i] > 0.0 && (lo..=hi).all(|j| amp[j] <= amp[i])
        })
        .map(|i| (samples[i].0, amp[i]))
        .collect();
    let points = if peaks.len() >= 3 { peaks } else { positive };
    line_fit(&points)
}

fn line_fit(points: &[(f64, f64)]) -> Result<ExpFit> {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1.ln()).sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for &(x, a) in points {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (a.ln() - my);
    }
    if sxx <= f64::EPSILON * (mx * mx * n).max(f64::MIN_POSITIVE) {
        return Err(Error::DegenerateFit);
    }
    let rate = sxy / sxx;
    Ok(ExpFit {
        rate,
        intercept: my - rate * mx,
    })
}
