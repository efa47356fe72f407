//! WebAssembly bindings for the demo page in `www/`. Results cross the
//! boundary as JSON strings; the `*_data` functions are the plain-Rust
//! versions used by the native tests.

use mibvp::admissibility::scan_k;
use mibvp::config::builtin;
use mibvp::kernel::{kernel_table, GreenKernel};
use mibvp::monotone::{run, RunOptions};
use mibvp::{BoundaryConfig, Regime, ShiftedOperator};
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// `n x n` kernel samples, row-major in `x`.
#[derive(Debug, Serialize)]
pub struct KernelGrid {
    pub n: usize,
    pub k: f64,
    pub values: Vec<f64>,
    pub min: f64,
    pub max: f64,
}

pub fn kernel_grid_data(
    xi: f64,
    eta: f64,
    lambda1: f64,
    lambda2: f64,
    k: f64,
    n: usize,
) -> Result<KernelGrid, String> {
    if !(2..=401).contains(&n) {
        return Err(format!("grid size must be in 2..=401, got {n}"));
    }
    let config = BoundaryConfig::new(xi, eta, lambda1, lambda2).map_err(|e| e.to_string())?;
    let op = ShiftedOperator::new(k).map_err(|e| e.to_string())?;
    let kernel = GreenKernel::new(&config, &op).map_err(|e| e.to_string())?;
    let values: Vec<f64> = kernel_table(&kernel, n).into_iter().map(|p| p.value).collect();
    let (min, max) =
        values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(*v), b.max(*v)));
    Ok(KernelGrid { n, k, values, min, max })
}

#[derive(Debug, Serialize)]
pub struct RunView {
    pub k: f64,
    pub steps: usize,
    pub converged: bool,
    pub monotone: bool,
    pub nodes: Vec<f64>,
    /// Selected iterates `(n, c_n, d_n)`, always including the first and last.
    pub iterates: Vec<(usize, Vec<f64>, Vec<f64>)>,
    pub gaps: Vec<f64>,
}

pub fn run_example_data(
    name: &str,
    k: f64,
    grid_n: usize,
    max_iter: usize,
    shown: usize,
) -> Result<RunView, String> {
    let cfg = builtin(name).ok_or_else(|| format!("unknown example `{name}`"))?;
    let problem = cfg.build().map_err(|e| e.to_string())?;
    let opts = RunOptions { grid_n, max_iter, tol: cfg.tol };
    let trace = run(&problem, k, &opts).map_err(|e| e.to_string())?;
    let last = trace.steps();
    let stride = (last / shown.max(1)).max(1);
    let mut picks: Vec<usize> = (0..=last).step_by(stride).collect();
    if picks.last() != Some(&last) {
        picks.push(last);
    }
    let iterates =
        picks.into_iter().map(|n| (n, trace.lower[n].u.clone(), trace.upper[n].u.clone())).collect();
    Ok(RunView {
        k,
        steps: last,
        converged: trace.converged,
        monotone: trace.all_flags_hold(),
        nodes: trace.nodes.clone(),
        iterates,
        gaps: trace.gaps.clone(),
    })
}

#[derive(Debug, Serialize)]
pub struct MarginView {
    pub ks: Vec<f64>,
    /// One curve per condition id.
    pub curves: Vec<(String, Vec<f64>)>,
    pub intervals: Vec<(f64, f64)>,
}

pub fn scan_margins_data(name: &str, lo: f64, hi: f64, steps: usize) -> Result<MarginView, String> {
    let cfg = builtin(name).ok_or_else(|| format!("unknown example `{name}`"))?;
    let problem = cfg.build().map_err(|e| e.to_string())?;
    let lip = problem.lipschitz.as_ref().expect("build attaches Lipschitz data");
    let regime = if hi <= 0.0 { Regime::NegativeK } else { Regime::PositiveK };
    let scan = scan_k(&cfg.boundary, lip, regime, lo, hi, steps).map_err(|e| e.to_string())?;
    let ks = scan.samples.iter().map(|s| s.k).collect();
    let ids: Vec<String> =
        scan.samples.first().map(|s| s.conditions.iter().map(|c| c.id.clone()).collect()).unwrap_or_default();
    let curves = ids
        .into_iter()
        .map(|id| {
            let m = scan.samples.iter().map(|s| s.get(&id).map_or(f64::NAN, |c| c.margin)).collect();
            (id, m)
        })
        .collect();
    let intervals = scan.intervals.iter().map(|i| (i.lo, i.hi)).collect();
    Ok(MarginView { ks, curves, intervals })
}

fn to_js<T: Serialize>(r: Result<T, String>) -> Result<String, JsValue> {
    r.and_then(|v| serde_json::to_string(&v).map_err(|e| e.to_string())).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn kernel_grid(
    xi: f64,
    eta: f64,
    lambda1: f64,
    lambda2: f64,
    k: f64,
    n: usize,
) -> Result<String, JsValue> {
    to_js(kernel_grid_data(xi, eta, lambda1, lambda2, k, n))
}

#[wasm_bindgen]
pub fn run_example(name: &str, k: f64, grid_n: usize, max_iter: usize) -> Result<String, JsValue> {
    to_js(run_example_data(name, k, grid_n, max_iter, 12))
}

#[wasm_bindgen]
pub fn scan_margins(name: &str, lo: f64, hi: f64, steps: usize) -> Result<String, JsValue> {
    to_js(scan_margins_data(name, lo, hi, steps))
}
