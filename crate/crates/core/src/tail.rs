//! Distribution of the number of old contents `m_n^h` a user selects.
//!
//! Two analytic views are provided: Chernoff tail bounds around the mean
//! `μ = (n-1)α/n`, and the Skellam model `m_n^h = m_n - m_n^0` with
//! `m_n ~ Poisson(α)`, `m_n^0 ~ Poisson(α/n)`, evaluated both through a
//! saddlepoint approximation and an exact truncated convolution. The
//! empirical distribution comes from replaying the IBP itself.

use std::io::Write;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ibp::IbpState;
use crate::social::ln_gamma;

pub const TABLE_HEADER: &str = "k,exact_pmf,exact_cdf,sp_pmf,sp_cdf,empirical_cdf,chernoff_bound_on_cdf";

/// Smallest value reported as a plain probability; below it use the log form.
pub const MIN_REPORTED: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailParams {
    /// Mean of the total selection count `m_n`.
    pub mu1: f64,
    /// Mean of the new selection count `m_n^0`.
    pub mu2: f64,
}

impl TailParams {
    pub fn new(mu1: f64, mu2: f64) -> Result<Self> {
        if !(mu1 > 0.0 && mu2 > 0.0 && mu1.is_finite() && mu2.is_finite()) {
            return Err(Error::domain(format!("Skellam means must be positive, got {mu1}, {mu2}")));
        }
        Ok(TailParams { mu1, mu2 })
    }

    /// Parameters for user `n` of an IBP with concentration `alpha`.
    pub fn from_ibp(alpha: f64, n: u64) -> Result<Self> {
        if n < 2 {
            return Err(Error::domain(format!("need n >= 2 for a non-degenerate old-content count, got {n}")));
        }
        Self::new(alpha, alpha / n as f64)
    }

    pub fn mu(&self) -> f64 {
        self.mu1 - self.mu2
    }
}

/// ln of the lower-tail bound `[e^{-δ} / (1-δ)^{1-δ}]^μ`.
pub fn ln_chernoff_lower(mu: f64, delta: f64) -> Result<f64> {
    if !(delta >= 0.0) {
        return Err(Error::domain(format!("delta must be positive, got {delta}")));
    }
    if delta >= 1.0 {
        return Err(Error::domain(format!("lower-tail bound needs delta < 1, got {delta}")));
    }
    check_mu(mu)?;
    Ok(mu * (-delta - (1.0 - delta) * (-delta).ln_1p()))
}

/// ln of the upper-tail bound `[e^{δ} / (1+δ)^{1+δ}]^μ`.
pub fn ln_chernoff_upper(mu: f64, delta: f64) -> Result<f64> {
    if !(delta >= 0.0) || delta.is_infinite() {
        return Err(Error::domain(format!("delta must be positive, got {delta}")));
    }
    check_mu(mu)?;
    Ok(mu * (delta - (1.0 + delta) * delta.ln_1p()))
}

fn check_mu(mu: f64) -> Result<()> {
    if !(mu > 0.0 && mu.is_finite()) {
        return Err(Error::domain(format!("mu must be positive, got {mu}")));
    }
    Ok(())
}

/// Bound on `P{X < (1-δ)μ}`.
pub fn chernoff_lower(mu: f64, delta: f64) -> Result<f64> {
    ln_chernoff_lower(mu, delta).map(f64::exp)
}

/// Bound on `P{X > (1+δ)μ}`.
pub fn chernoff_upper(mu: f64, delta: f64) -> Result<f64> {
    ln_chernoff_upper(mu, delta).map(f64::exp)
}

/// Saddlepoint quantities `(C, D)` at integer `k`, with `C - D = k` and
/// `C·D = μ1·μ2`. Each is computed from the cancellation-free branch.
pub fn saddlepoint_terms(params: TailParams, k: i64) -> (f64, f64) {
    let k = k as f64;
    let prod = params.mu1 * params.mu2;
    let s = (k * k + 4.0 * prod).sqrt();
    if k >= 0.0 {
        let c = (k + s) / 2.0;
        (c, 2.0 * prod / (k + s))
    } else {
        let d = (s - k) / 2.0;
        (2.0 * prod / (s - k), d)
    }
}

pub fn ln_saddlepoint_pmf(params: TailParams, k: i64) -> f64 {
    let (c, d) = saddlepoint_terms(params, k);
    -0.5 * (std::f64::consts::TAU * (c + d)).ln() - (params.mu1 + params.mu2) + c + d + k as f64 * (d / params.mu2).ln()
}

pub fn saddlepoint_pmf(params: TailParams, k: i64) -> f64 {
    ln_saddlepoint_pmf(params, k).exp()
}

/// Saddlepoint CDF summed from `k = 0`, so negative Skellam support is not
/// included. Returns 0 for `m < 0`.
pub fn saddlepoint_cdf(params: TailParams, m: i64) -> f64 {
    if m < 0 {
        return 0.0;
    }
    (0..=m).map(|k| saddlepoint_pmf(params, k)).sum::<f64>().clamp(0.0, 1.0)
}

fn ln_poisson(lambda: f64, j: i64) -> f64 {
    j as f64 * lambda.ln() - lambda - ln_gamma(j as f64 + 1.0)
}

/// `P(X - Y = k)` for independent `X ~ Poisson(μ1)`, `Y ~ Poisson(μ2)` by
/// direct convolution over `Y`.
pub fn exact_skellam_pmf(params: TailParams, k: i64) -> f64 {
    let TailParams { mu1, mu2 } = params;
    let start = (-k).max(0);
    // Beyond both modes the terms decay geometrically; stop once they no
    // longer move the sum at 1e-17 relative.
    let past_modes = (mu2.ceil() as i64).max(mu1.ceil() as i64 - k).max(start);
    let mut sum = 0.0;
    let mut i = start;
    loop {
        let term = (ln_poisson(mu1, i + k) + ln_poisson(mu2, i)).exp();
        sum += term;
        if i > past_modes && (term <= sum * 1e-17 || term == 0.0) {
            break;
        }
        i += 1;
    }
    sum
}

/// Support half-width covering all but ~1e-15 of the Skellam mass.
fn skellam_span(params: TailParams) -> (i64, i64) {
    let sd = (params.mu1 + params.mu2).sqrt();
    let lo = -(params.mu2 + 12.0 * sd + 40.0).ceil() as i64;
    let hi = (params.mu1 + 12.0 * sd + 40.0).ceil() as i64;
    (lo, hi)
}

/// Exact `P(X - Y <= m)` including negative support.
pub fn exact_skellam_cdf(params: TailParams, m: i64) -> f64 {
    let (lo, _) = skellam_span(params);
    if m < lo {
        return 0.0;
    }
    (lo..=m).map(|k| exact_skellam_pmf(params, k)).sum::<f64>().clamp(0.0, 1.0)
}

/// Empirical CDF of integer samples on the grid `min..=max`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalCdf {
    pub min: i64,
    /// `values[i] = F(min + i)`.
    pub values: Vec<f64>,
    pub n_samples: usize,
}

impl EmpiricalCdf {
    pub fn max(&self) -> i64 {
        self.min + self.values.len() as i64 - 1
    }

    pub fn eval(&self, x: i64) -> f64 {
        if x < self.min {
            0.0
        } else if x > self.max() {
            1.0
        } else {
            self.values[(x - self.min) as usize]
        }
    }

    pub fn mean(&self) -> f64 {
        let mut prev = 0.0;
        let mut acc = 0.0;
        for (i, f) in self.values.iter().enumerate() {
            acc += (self.min + i as i64) as f64 * (f - prev);
            prev = *f;
        }
        acc
    }
}

pub fn empirical_cdf(samples: &[i64]) -> Result<EmpiricalCdf> {
    let (&min, &max) = match (samples.iter().min(), samples.iter().max()) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(Error::domain("empirical CDF of an empty sample")),
    };
    let mut counts = vec![0usize; (max - min + 1) as usize];
    for &s in samples {
        counts[(s - min) as usize] += 1;
    }
    let n = samples.len() as f64;
    let mut acc = 0usize;
    let values = counts
        .into_iter()
        .map(|c| {
            acc += c;
            acc as f64 / n
        })
        .collect();
    Ok(EmpiricalCdf { min, values, n_samples: samples.len() })
}

/// Replays a fresh `n`-user IBP `n_samples` times and records `m_n^h`.
pub fn sample_old_counts<R: Rng + ?Sized>(alpha: f64, n: u64, n_samples: usize, rng: &mut R) -> Result<Vec<i64>> {
    let mut out = Vec::with_capacity(n_samples);
    for _ in 0..n_samples {
        let mut state = IbpState::new(alpha)?;
        let mut last = None;
        for _ in 0..n {
            last = Some(state.select(rng));
        }
        out.push(last.map_or(0, |o| o.old_count() as i64));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionTable {
    pub params: TailParams,
    pub support: Vec<i64>,
    pub exact_pmf: Vec<f64>,
    pub exact_cdf: Vec<f64>,
    pub saddlepoint_pmf: Vec<f64>,
    pub saddlepoint_cdf: Vec<f64>,
    pub empirical_cdf: Vec<f64>,
    /// Lower-tail bound at `x < μ`, 1 elsewhere. Bounds `F(x)` from above.
    pub chernoff_lower_curve: Vec<f64>,
    /// Upper-tail bound at `x > μ`, 1 elsewhere. Bounds `1 - F(x)` from above.
    pub chernoff_upper_curve: Vec<f64>,
    /// Saddlepoint mass left out by starting the CDF sum at 0, i.e.
    /// `1 - Σ_{k>=0} f̂(k)` over the effective support.
    pub saddlepoint_deficit: f64,
    pub empirical_mean: f64,
}

impl DistributionTable {
    /// The single-column bound in the CSV: the lower-tail bound where it
    /// applies, otherwise `1 - upper-tail bound`, which bounds `F` from below.
    pub fn bound_on_cdf(&self, i: usize) -> f64 {
        let x = self.support[i] as f64;
        let mu = self.params.mu();
        if x < mu {
            self.chernoff_lower_curve[i]
        } else if x > mu {
            1.0 - self.chernoff_upper_curve[i]
        } else {
            1.0
        }
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{TABLE_HEADER}")?;
        for (i, k) in self.support.iter().enumerate() {
            writeln!(
                out,
                "{},{},{},{},{},{},{}",
                k,
                self.exact_pmf[i],
                self.exact_cdf[i],
                self.saddlepoint_pmf[i],
                self.saddlepoint_cdf[i],
                self.empirical_cdf[i],
                self.bound_on_cdf(i)
            )?;
        }
        Ok(())
    }
}

/// Chernoff curves at integer `x` with `δ(x) = |μ - x| / μ`.
pub fn chernoff_curves(mu: f64, x: i64) -> Result<(f64, f64)> {
    let xf = x as f64;
    let delta = (mu - xf).abs() / mu;
    let lower = if xf < mu {
        if delta >= 1.0 {
            // x < 0: the event X < x is empty
            0.0
        } else {
            chernoff_lower(mu, delta)?
        }
    } else {
        1.0
    };
    let upper = if xf > mu { chernoff_upper(mu, delta)? } else { 1.0 };
    Ok((lower, upper))
}

/// Assembles every column on the grid `0..=max(40, μ1 + 10σ, max sample)`.
pub fn build_table<R: Rng + ?Sized>(alpha: f64, n: u64, n_samples: usize, rng: &mut R) -> Result<DistributionTable> {
    if n_samples == 0 {
        return Err(Error::domain("need at least one sample"));
    }
    let params = TailParams::from_ibp(alpha, n)?;
    let samples = sample_old_counts(alpha, n, n_samples, rng)?;
    let emp = empirical_cdf(&samples)?;

    let sd = (params.mu1 + params.mu2).sqrt();
    let top = 40.max((params.mu1 + 10.0 * sd).ceil() as i64).max(emp.max());
    let support: Vec<i64> = (0..=top).collect();

    let exact_pmf: Vec<f64> = support.iter().map(|&k| exact_skellam_pmf(params, k)).collect();
    let negative_mass = exact_skellam_cdf(params, -1);
    let exact_cdf: Vec<f64> = exact_pmf
        .iter()
        .scan(negative_mass, |acc, p| {
            *acc += p;
            Some(acc.min(1.0))
        })
        .collect();
    let sp_pmf: Vec<f64> = support.iter().map(|&k| saddlepoint_pmf(params, k)).collect();
    let sp_cdf: Vec<f64> = sp_pmf
        .iter()
        .scan(0.0, |acc, p| {
            *acc += p;
            Some(acc.clamp(0.0, 1.0))
        })
        .collect();
    let (_, hi) = skellam_span(params);
    let sp_total: f64 = (0..=hi.max(top)).map(|k| saddlepoint_pmf(params, k)).sum();

    let mut lower = Vec::with_capacity(support.len());
    let mut upper = Vec::with_capacity(support.len());
    for &x in &support {
        let (l, u) = chernoff_curves(params.mu(), x)?;
        lower.push(l);
        upper.push(u);
    }
    let table = DistributionTable {
        params,
        empirical_cdf: support.iter().map(|&k| emp.eval(k)).collect(),
        support,
        exact_pmf,
        exact_cdf,
        saddlepoint_pmf: sp_pmf,
        saddlepoint_cdf: sp_cdf,
        chernoff_lower_curve: lower,
        chernoff_upper_curve: upper,
        saddlepoint_deficit: 1.0 - sp_total,
        empirical_mean: emp.mean(),
    };
    log::info!(
        "tail table: mu={} saddlepoint deficit={:.3e} empirical mean={:.4}",
        params.mu(),
        table.saddlepoint_deficit,
        table.empirical_mean
    );
    Ok(table)
}
