//! Gamma contact-duration model and the closeness weight derived from it.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trace::ContactStats;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;
const EPS: f64 = 1e-16;
const MAX_ITER: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaParams {
    pub shape: f64,
    /// Scale in seconds.
    pub scale: f64,
}

impl GammaParams {
    pub fn new(shape: f64, scale: f64) -> Result<Self> {
        if !(shape > 0.0 && shape.is_finite()) || !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::domain(format!("invalid gamma parameters k={shape}, theta={scale}")));
        }
        Ok(GammaParams { shape, scale })
    }

    pub fn mean(&self) -> f64 {
        self.shape * self.scale
    }

    pub fn variance(&self) -> f64 {
        self.shape * self.scale * self.scale
    }
}

/// Contact-duration model of one UE pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum DurationModel {
    Gamma(GammaParams),
    /// Zero observed variance: every contact lasted `mean` seconds.
    Deterministic { mean: f64 },
}

/// Method-of-moments fit `k = M²/I`, `θ = I/M`.
///
/// Zero variance yields [`DurationModel::Deterministic`].
pub fn fit_gamma(stats: &ContactStats) -> Result<DurationModel> {
    fit_moments(stats.mean_duration, stats.var_duration)
}

pub fn fit_moments(mean: f64, var: f64) -> Result<DurationModel> {
    if !(mean > 0.0 && mean.is_finite()) {
        return Err(Error::domain(format!("mean duration must be positive, got {mean}")));
    }
    if !(var >= 0.0 && var.is_finite()) {
        return Err(Error::domain(format!("variance must be non-negative, got {var}")));
    }
    if var == 0.0 {
        return Ok(DurationModel::Deterministic { mean });
    }
    Ok(DurationModel::Gamma(GammaParams::new(mean * mean / var, var / mean)?))
}

/// Natural log of Γ(x) for x > 0 (Lanczos, g = 7).
pub fn ln_gamma(x: f64) -> f64 {
    const G: f64 = 7.0;
    #[allow(clippy::excessive_precision)]
    const COEF: [f64; 9] = [
        0.999_999_999_999_809_93,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_13,
        -176.615_029_162_140_59,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_571_6e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        // reflection
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = COEF[0];
    for (i, c) in COEF.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + G + 0.5;
    LN_SQRT_2PI + (x + 0.5) * t.ln() - t + acc.ln()
}

/// Tail of the Stirling series: ln Γ(a+1) − [(a+½)ln a − a + ln√(2π)].
fn stirling_error(a: f64) -> f64 {
    if a < 10.0 {
        return ln_gamma(a + 1.0) - ((a + 0.5) * a.ln() - a + LN_SQRT_2PI);
    }
    let r = 1.0 / a;
    let r2 = r * r;
    r * (1.0 / 12.0 - r2 * (1.0 / 360.0 - r2 * (1.0 / 1260.0 - r2 * (1.0 / 1680.0 - r2 / 1188.0))))
}

/// ln(x^a e^{-x} / Γ(a+1)), accurate for large `a` near the peak.
fn ln_poisson_term(a: f64, x: f64) -> f64 {
    if a < 10.0 {
        return a * x.ln() - x - ln_gamma(a + 1.0);
    }
    let d = (x - a) / a;
    -a * (d - d.ln_1p()) - 0.5 * (std::f64::consts::TAU * a).ln() - stirling_error(a)
}

/// Regularized lower incomplete gamma function P(k, x) = γ(k, x)/Γ(k).
///
/// Power series below `x = k + 1`, Lentz continued fraction for the upper
/// tail above it.
pub fn regularized_lower_incomplete_gamma(shape: f64, x: f64) -> Result<f64> {
    if !(shape > 0.0) || !shape.is_finite() {
        return Err(Error::domain(format!("incomplete gamma needs shape > 0, got {shape}")));
    }
    if !(x >= 0.0) {
        return Err(Error::domain(format!("incomplete gamma needs x >= 0, got {x}")));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x.is_infinite() {
        return Ok(1.0);
    }
    let p = if x < shape + 1.0 { lower_series(shape, x) } else { 1.0 - upper_fraction(shape, x) };
    Ok(p.clamp(0.0, 1.0))
}

fn lower_series(a: f64, x: f64) -> f64 {
    let log_pre = ln_poisson_term(a, x);
    if log_pre < -745.0 {
        return 0.0;
    }
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut denom = a;
    for _ in 0..MAX_ITER {
        denom += 1.0;
        term *= x / denom;
        sum += term;
        if term < sum * EPS {
            break;
        }
    }
    sum * log_pre.exp()
}

fn upper_fraction(a: f64, x: f64) -> f64 {
    // Q(a, x) prefactor is x^a e^{-x} / Γ(a) = a · x^a e^{-x} / Γ(a+1)
    let log_pre = ln_poisson_term(a, x) + a.ln();
    if log_pre < -745.0 {
        return 0.0;
    }
    const TINY: f64 = 1e-300;
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..MAX_ITER {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < EPS {
            break;
        }
    }
    log_pre.exp() * h
}

/// Gamma density `x^{k-1} e^{-x/θ} / (θ^k Γ(k))`.
pub fn contact_pdf(params: GammaParams, x: f64) -> Result<f64> {
    if !(x >= 0.0) {
        return Err(Error::domain(format!("density needs x >= 0, got {x}")));
    }
    let GammaParams { shape: k, scale: theta } = params;
    if x == 0.0 {
        return Ok(if k < 1.0 {
            f64::INFINITY
        } else if k == 1.0 {
            1.0 / theta
        } else {
            0.0
        });
    }
    let ln = (k - 1.0) * x.ln() - x / theta - k * theta.ln() - ln_gamma(k);
    Ok(ln.exp())
}

/// Probability that a contact lasts at least `x_min` seconds.
pub fn closeness(model: DurationModel, x_min: f64) -> Result<f64> {
    if !(x_min >= 0.0) {
        return Err(Error::domain(format!("x_min must be non-negative, got {x_min}")));
    }
    if x_min == 0.0 {
        return Ok(1.0);
    }
    match model {
        DurationModel::Gamma(p) => {
            let cdf = regularized_lower_incomplete_gamma(p.shape, x_min / p.scale)?;
            Ok((1.0 - cdf).clamp(0.0, 1.0))
        }
        DurationModel::Deterministic { mean } => Ok(if mean >= x_min { 1.0 } else { 0.0 }),
    }
}
