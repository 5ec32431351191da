//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Every entry point takes a built-in field name, a parameter string such as
//! `"N=8 eps=0.001"` and a disk, and returns JSON.

use std::collections::BTreeMap;

use fastescape::builtins::builtin;
use fastescape::field::estimate_bounds;
use fastescape::flow::{default_max_length, escape_length_with, IntegratorConfig};
use fastescape::planner::{plan_escape_with, PlanMode, PlanOptions};
use fastescape::report::to_json;
use fastescape::stream::{compute_stream_function, extract_level_set};
use fastescape::{perpendicular, Disk, Error, PlanarField, Point2, Result};
use wasm_bindgen::prelude::*;

const BOUNDS_SAMPLES: usize = 4096;
/// Coarser than the command-line default so that a click answers quickly.
const GRID_SPACING: f64 = 1.0 / 128.0;

/// Parses whitespace- or comma-separated `K=V` pairs.
pub fn parse_params(text: &str) -> Result<BTreeMap<String, f64>> {
    text.split(|c: char| c.is_whitespace() || c == ',')
        .filter(|s| !s.is_empty())
        .map(|pair| {
            let (k, v) = pair.split_once('=').ok_or_else(|| Error::InvalidInput(format!("expected K=V, got `{pair}`")))?;
            let v: f64 = v.parse().map_err(|_| Error::InvalidInput(format!("parameter `{k}` needs a number")))?;
            Ok((k.to_string(), v))
        })
        .collect()
}

struct Setup {
    field: PlanarField,
    disk: Disk,
    integrator: IntegratorConfig,
}

fn setup(field: &str, params: &str, seed: u64, x: f64, y: f64, radius: f64) -> Result<Setup> {
    let params = parse_params(params)?;
    let integrator = params.get("N").map_or_else(IntegratorConfig::default, |&n| IntegratorConfig::for_wavenumber(n));
    Ok(Setup { field: builtin(field, &params, seed)?, disk: Disk::new(Point2::new(x, y), radius)?, integrator })
}

/// Escape of the flow (or of its quarter turn) from the disk around its start.
pub fn escape_json(field: &str, params: &str, seed: u64, x: f64, y: f64, radius: f64, quarter_turn: bool) -> Result<String> {
    let s = setup(field, params, seed, x, y, radius)?;
    let f = if quarter_turn { perpendicular(&s.field) } else { s.field };
    let b = estimate_bounds(&f, &s.disk, BOUNDS_SAMPLES)?;
    let budget = default_max_length((!b.vanishing).then_some(&b)) * radius;
    to_json(&escape_length_with(&f, s.disk.center, radius, budget, &s.integrator)?)
}

/// Two-leg escape plan from the disk center.
pub fn plan_json(field: &str, params: &str, seed: u64, x: f64, y: f64, radius: f64, signed: bool) -> Result<String> {
    let s = setup(field, params, seed, x, y, radius)?;
    let opts = PlanOptions { radius, h: GRID_SPACING * radius, integrator: s.integrator, ..PlanOptions::default() };
    let mode = if signed { PlanMode::Signed } else { PlanMode::Unsigned };
    to_json(&plan_escape_with(&s.field, s.disk.center, mode, &opts)?)
}

/// `count` evenly spaced level sets of the stream function on the disk.
pub fn level_sets_json(field: &str, params: &str, seed: u64, x: f64, y: f64, radius: f64, count: usize) -> Result<String> {
    let s = setup(field, params, seed, x, y, radius)?;
    let grid = compute_stream_function(&s.field, &s.disk, GRID_SPACING * radius, s.disk.center)?;
    let (lo, hi) = grid.range_within(&s.disk, 0.0);
    let k = count.max(1);
    let sets: Vec<_> = (0..k)
        .map(|i| extract_level_set(&grid, lo + (hi - lo) * (i as f64 + 0.5) / k as f64, &s.disk))
        .collect();
    to_json(&sets)
}

fn js(r: Result<String>) -> std::result::Result<String, JsError> {
    r.map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen]
pub fn escape(field: &str, params: &str, seed: u64, x: f64, y: f64, radius: f64, quarter_turn: bool) -> std::result::Result<String, JsError> {
    js(escape_json(field, params, seed, x, y, radius, quarter_turn))
}

#[wasm_bindgen]
pub fn plan(field: &str, params: &str, seed: u64, x: f64, y: f64, radius: f64, signed: bool) -> std::result::Result<String, JsError> {
    js(plan_json(field, params, seed, x, y, radius, signed))
}

#[wasm_bindgen(js_name = levelSets)]
pub fn level_sets(field: &str, params: &str, seed: u64, x: f64, y: f64, radius: f64, count: usize) -> std::result::Result<String, JsError> {
    js(level_sets_json(field, params, seed, x, y, radius, count))
}
