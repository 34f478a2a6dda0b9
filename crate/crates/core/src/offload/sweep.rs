//! Repeated runs over a swept parameter.

use std::io::Write;

use serde::{Deserialize, Serialize};

use super::config::{SimConfig, SweepParam};
use super::engine::{run_simulation, RunMetrics};
use crate::error::{Error, Result};

pub const RESULTS_HEADER: &str = "param_value,seed,enb_sum_rate,d2d_sum_rate,offloaded_fraction,mean_utility";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    /// `None` for a plain single run.
    pub param_value: Option<f64>,
    pub seed: u64,
    pub metrics: RunMetrics,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub param_value: f64,
    pub repetitions: usize,
    pub enb_sum_rate: f64,
    pub d2d_sum_rate: f64,
    pub offloaded_fraction: f64,
    pub mean_utility: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub parameter: SweepParam,
    /// Every run, ordered by value index then repetition.
    pub runs: Vec<RunRecord>,
    /// Means over repetitions, one per value in input order.
    pub points: Vec<SweepPoint>,
}

/// Seed of repetition `rep`. Repetitions share seeds across parameter
/// values, so every value sees the same traces, placements and selections.
pub fn repetition_seed(base: u64, rep: usize) -> u64 {
    base.wrapping_add(rep as u64)
}

pub fn sweep(config: &SimConfig, parameter: SweepParam, values: &[f64], repetitions: usize) -> Result<SweepTable> {
    if values.is_empty() {
        return Err(Error::config("sweep needs at least one value"));
    }
    if repetitions == 0 {
        return Err(Error::config("sweep needs at least one repetition"));
    }
    let mut jobs = Vec::with_capacity(values.len() * repetitions);
    for &value in values {
        for rep in 0..repetitions {
            let mut cfg = config.clone();
            cfg.sweep = None;
            parameter.apply(&mut cfg, value);
            cfg.seed = repetition_seed(config.seed, rep);
            cfg.validate()?;
            jobs.push(cfg);
        }
    }

    let run = |cfg: &SimConfig| -> Result<RunRecord> {
        Ok(RunRecord { param_value: Some(parameter.current(cfg)), seed: cfg.seed, metrics: run_simulation(cfg)?.metrics })
    };
    #[cfg(feature = "parallel")]
    let runs: Vec<RunRecord> = {
        use rayon::prelude::*;
        jobs.par_iter().map(run).collect::<Result<_>>()?
    };
    #[cfg(not(feature = "parallel"))]
    let runs: Vec<RunRecord> = jobs.iter().map(run).collect::<Result<_>>()?;

    let points = runs
        .chunks(repetitions)
        .zip(values)
        .map(|(chunk, &value)| {
            let n = chunk.len() as f64;
            let mean = |f: &dyn Fn(&RunMetrics) -> f64| chunk.iter().map(|r| f(&r.metrics)).sum::<f64>() / n;
            SweepPoint {
                param_value: value,
                repetitions: chunk.len(),
                enb_sum_rate: mean(&|m| m.enb_sum_rate),
                d2d_sum_rate: mean(&|m| m.d2d_sum_rate),
                offloaded_fraction: mean(&|m| m.offloaded_fraction),
                mean_utility: mean(&|m| m.mean_utility()),
            }
        })
        .collect();
    Ok(SweepTable { parameter, runs, points })
}

pub fn write_results<W: Write>(mut out: W, runs: &[RunRecord]) -> Result<()> {
    writeln!(out, "{RESULTS_HEADER}")?;
    for r in runs {
        let value = r.param_value.map(|v| v.to_string()).unwrap_or_default();
        let m = &r.metrics;
        writeln!(
            out,
            "{},{},{},{},{},{}",
            value,
            r.seed,
            m.enb_sum_rate,
            m.d2d_sum_rate,
            m.offloaded_fraction,
            m.mean_utility()
        )?;
    }
    Ok(())
}
