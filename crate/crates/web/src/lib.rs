//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Each exported function returns a JSON string. The `*_json` functions hold
//! the logic and run natively too; the exports only convert errors.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use d2dsim::offload::{sweep, SimConfig, SweepParam, SyntheticTrace, TraceSource};
use d2dsim::rng::{stream, Stream};
use d2dsim::social::{closeness, contact_pdf, fit_moments, DurationModel};
use d2dsim::tail::build_table;
use d2dsim::Result;

#[derive(Serialize)]
struct TailView {
    mu: f64,
    k: Vec<i64>,
    exact_cdf: Vec<f64>,
    saddlepoint_cdf: Vec<f64>,
    empirical_cdf: Vec<f64>,
    bound: Vec<f64>,
    saddlepoint_deficit: f64,
    empirical_mean: f64,
}

pub fn tail_table_json(alpha: f64, n: u32, samples: u32, seed: u64) -> Result<String> {
    let table = build_table(alpha, n.into(), samples as usize, &mut stream(seed, Stream::Tail))?;
    let view = TailView {
        mu: table.params.mu(),
        bound: (0..table.support.len()).map(|i| table.bound_on_cdf(i)).collect(),
        k: table.support,
        exact_cdf: table.exact_cdf,
        saddlepoint_cdf: table.saddlepoint_cdf,
        empirical_cdf: table.empirical_cdf,
        saddlepoint_deficit: table.saddlepoint_deficit,
        empirical_mean: table.empirical_mean,
    };
    Ok(serde_json::to_string(&view)?)
}

#[derive(Serialize)]
struct ClosenessView {
    shape: Option<f64>,
    scale: Option<f64>,
    x: Vec<f64>,
    pdf: Vec<f64>,
    closeness: Vec<f64>,
}

/// Density of the moment-fitted duration model and the closeness it gives
/// for each `x_min` on `[0, x_max]`.
pub fn closeness_curve_json(mean: f64, variance: f64, x_max: f64, points: u32) -> Result<String> {
    let model = fit_moments(mean, variance)?;
    let points = points.max(2) as usize;
    let x: Vec<f64> = (0..points).map(|i| x_max * i as f64 / (points - 1) as f64).collect();
    let mut view = ClosenessView { shape: None, scale: None, x, pdf: Vec::new(), closeness: Vec::new() };
    for &xi in &view.x {
        view.closeness.push(closeness(model, xi)?);
        view.pdf.push(match model {
            // plot the singular k < 1 density at the origin as a gap
            DurationModel::Gamma(p) => contact_pdf(p, xi).map(|d| if d.is_finite() { d } else { f64::NAN })?,
            DurationModel::Deterministic { .. } => 0.0,
        });
    }
    if let DurationModel::Gamma(p) = model {
        view.shape = Some(p.shape);
        view.scale = Some(p.scale);
    }
    Ok(serde_json::to_string(&view)?)
}

/// Mean metrics of a single-OffSN scenario over a `d_max` sweep.
pub fn d_max_sweep_json(values: &[f64], n_users: u32, repetitions: u32, seed: u64) -> Result<String> {
    let n_users = n_users as usize;
    let config = SimConfig {
        seed,
        n_users,
        trace: TraceSource::Synthetic(SyntheticTrace { groups: vec![n_users], ..Default::default() }),
        ..Default::default()
    };
    let table = sweep(&config, SweepParam::DMax, values, repetitions as usize)?;
    Ok(serde_json::to_string(&table.points)?)
}

fn js(r: Result<String>) -> std::result::Result<String, JsError> {
    r.map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen(js_name = tailTable)]
pub fn tail_table(alpha: f64, n: u32, samples: u32, seed: u64) -> std::result::Result<String, JsError> {
    js(tail_table_json(alpha, n, samples, seed))
}

#[wasm_bindgen(js_name = closenessCurve)]
pub fn closeness_curve(mean: f64, variance: f64, x_max: f64, points: u32) -> std::result::Result<String, JsError> {
    js(closeness_curve_json(mean, variance, x_max, points))
}

#[wasm_bindgen(js_name = dMaxSweep)]
pub fn d_max_sweep(values: Vec<f64>, n_users: u32, repetitions: u32, seed: u64) -> std::result::Result<String, JsError> {
    js(d_max_sweep_json(&values, n_users, repetitions, seed))
}
