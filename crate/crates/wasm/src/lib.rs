//! Browser bindings: analytic outage curves, surface partitioning and a
//! small Monte Carlo run, each returning JSON.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

use starnoma::analysis::{op_asymptotic, op_exact};
use starnoma::model::{preset, Partition, Scenario};
use starnoma::partition::{fixture, two_stage_partition, PartitionRequest, FIXTURE_NAMES};
use starnoma::sim::{mc_sweep, McConfig};

/// Largest Monte Carlo budget accepted from the page.
pub const MAX_TRIALS: u64 = 200_000;

fn fail(e: impl std::fmt::Display) -> JsValue {
    JsValue::from_str(&e.to_string())
}

fn scenario(id: u8, n_total: usize) -> Result<Scenario, String> {
    let s = preset(id).map_err(|e| e.to_string())?.with_n_total(n_total);
    s.validate().map_err(|e| e.to_string())?;
    Ok(s)
}

/// Comma-separated counts, else the shipped fixture row for this size,
/// else both allocation stages.
fn partition_for(s: &Scenario, id: u8, counts: &str) -> Result<Partition, String> {
    let counts = counts.trim();
    if !counts.is_empty() {
        let c = counts
            .split(',')
            .map(|x| {
                x.trim()
                    .parse::<usize>()
                    .map_err(|e| format!("bad count {x:?}: {e}"))
            })
            .collect::<Result<Vec<_>, _>>()?;
        return Partition::new(s, c).map_err(|e| e.to_string());
    }
    let name = FIXTURE_NAMES
        .iter()
        .find(|(_, case)| *case == id)
        .map(|(n, _)| *n);
    if let Some(table) = name.and_then(fixture).and_then(Result::ok) {
        if let Some(row) = table.rows.iter().find(|r| r.n_total == s.n_total) {
            return Partition::new(s, row.counts.clone()).map_err(|e| e.to_string());
        }
    }
    two_stage_partition(s, &PartitionRequest::from_scenario(s, 0.6))
        .map(|o| o.partition)
        .map_err(|e| e.to_string())
}

fn powers(start: f64, stop: f64, step: f64) -> Result<Vec<f64>, String> {
    if !(step > 0.0) || !(stop >= start) || (stop - start) / step > 400.0 {
        return Err("sweep needs step > 0, stop >= start and at most 400 points".into());
    }
    let n = ((stop - start) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|i| start + step * i as f64).collect())
}

fn analytic(
    id: u8,
    n_total: usize,
    counts: &str,
    start: f64,
    stop: f64,
    step: f64,
) -> Result<Value, String> {
    let s = scenario(id, n_total)?;
    let part = partition_for(&s, id, counts)?;
    let p = powers(start, stop, step)?;
    let users = (0..s.num_users())
        .map(|k| {
            let op = p
                .iter()
                .map(|&x| op_exact(&s, &part, k, x).map_err(|e| e.to_string()))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(json!({ "op": op, "floor": op_asymptotic(&s, &part, k) }))
        })
        .collect::<Result<Vec<_>, String>>()?;
    Ok(json!({ "p_dbm": p, "counts": part.counts(), "users": users }))
}

fn allocate(id: u8, n_total: usize, epsilon: f64, realizations: u64) -> Result<Value, String> {
    let s = scenario(id, n_total)?;
    let req = PartitionRequest {
        realizations,
        ..PartitionRequest::from_scenario(&s, epsilon)
    };
    let out = two_stage_partition(&s, &req).map_err(|e| e.to_string())?;
    Ok(json!({
        "counts": out.partition.counts(),
        "n_thr": out.n_thr,
        "searched": out.searched,
        "rates": out.rates,
        "r_min": req.r_min,
        "sides": [out.partition.n_t(), out.partition.n_r()],
    }))
}

#[allow(clippy::too_many_arguments)]
fn monte_carlo(
    id: u8,
    n_total: usize,
    counts: &str,
    start: f64,
    stop: f64,
    step: f64,
    trials: u64,
    seed: u64,
    kappa: f64,
) -> Result<Value, String> {
    if trials > MAX_TRIALS {
        return Err(format!("at most {MAX_TRIALS} trials in the browser"));
    }
    let mut s = scenario(id, n_total)?;
    s.phase_error_kappa = kappa.is_finite().then_some(kappa);
    s.validate().map_err(|e| e.to_string())?;
    let part = partition_for(&s, id, counts)?;
    let p = powers(start, stop, step)?;
    let sweep = mc_sweep(&s, &part, &p, &McConfig::new(trials, seed)).map_err(|e| e.to_string())?;
    let users: Vec<Value> = (0..s.num_users())
        .map(|k| {
            let op: Vec<f64> = sweep.points.iter().map(|x| x.proposed.op[k].mean).collect();
            let se: Vec<f64> = sweep.points.iter().map(|x| x.proposed.op[k].se).collect();
            json!({ "op": op, "se": se })
        })
        .collect();
    let sumrate: Vec<f64> = sweep
        .points
        .iter()
        .map(|x| x.proposed.sumrate.mean)
        .collect();
    Ok(json!({ "p_dbm": p, "counts": part.counts(), "users": users, "sumrate": sumrate }))
}

/// Analytic outage and floor per user over a power sweep. `counts` may be
/// empty to use the shipped or computed allocation.
#[wasm_bindgen(js_name = analyticCurve)]
pub fn analytic_curve(
    id: u8,
    n_total: usize,
    counts: &str,
    start: f64,
    stop: f64,
    step: f64,
) -> Result<String, JsValue> {
    analytic(id, n_total, counts, start, stop, step)
        .map(|v| v.to_string())
        .map_err(fail)
}

/// Two-stage allocation with the preset's rate targets.
#[wasm_bindgen(js_name = partition)]
pub fn partition(
    id: u8,
    n_total: usize,
    epsilon: f64,
    realizations: u64,
) -> Result<String, JsValue> {
    allocate(id, n_total, epsilon, realizations)
        .map(|v| v.to_string())
        .map_err(fail)
}

/// Monte Carlo outage and sum rate; `kappa` is infinite for perfect phases.
#[wasm_bindgen(js_name = monteCarloCurve)]
#[allow(clippy::too_many_arguments)]
pub fn monte_carlo_curve(
    id: u8,
    n_total: usize,
    counts: &str,
    start: f64,
    stop: f64,
    step: f64,
    trials: u64,
    seed: u64,
    kappa: f64,
) -> Result<String, JsValue> {
    monte_carlo(id, n_total, counts, start, stop, step, trials, seed, kappa)
        .map(|v| v.to_string())
        .map_err(fail)
}
