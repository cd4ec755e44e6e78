//! Browser bindings: generate an instance, solve it with one scheme, and
//! check how many replicas an availability class needs.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use vnfplace::availsim::{rate_lower_bound, simulate_copies, VERDICT_CONFIDENCE};
use vnfplace::experiments::{run_scheme, PipelineOptions, Scheme};
use vnfplace::gen::{generate, GeneratorConfig, UpfCatalog};
use vnfplace::{required_replicas, service_failure_prob, FailureModel, ProblemInstance};

#[derive(Serialize)]
struct SolveView {
    scheme: String,
    reward: f64,
    served: f64,
    requests: usize,
    utilization_pct: [f64; 4],
    feasible: bool,
    /// MEC ids per request; empty for `lr`.
    placements: Vec<Vec<usize>>,
    replicas: Vec<u32>,
}

#[derive(Serialize)]
struct ReplicaView {
    required: u32,
    copies: usize,
    trials: u64,
    availability: f64,
    threshold: f64,
    pass: bool,
}

pub fn generate_json(mecs: usize, requests: usize, seed: u64) -> Result<String, String> {
    let cfg = GeneratorConfig {
        mec_count: mecs,
        request_count: requests,
        seed,
        ..Default::default()
    };
    cfg.validate().map_err(|e| e.to_string())?;
    generate(&cfg, &UpfCatalog::default())
        .and_then(|inst| inst.to_json())
        .map_err(|e| e.to_string())
}

pub fn solve_json(instance: &str, scheme: &str, seed: u64) -> Result<String, String> {
    let inst = ProblemInstance::from_json(instance).map_err(|e| e.to_string())?;
    let scheme: Scheme = scheme.parse().map_err(|e: vnfplace::Error| e.to_string())?;
    let res = run_scheme(&inst, scheme, seed, &PipelineOptions::default()).map_err(|e| e.to_string())?;
    let placements = match &res.integral {
        Some(sol) => sol
            .x
            .iter()
            .map(|row| row.iter().enumerate().filter(|(_, &on)| on).map(|(m, _)| m).collect())
            .collect(),
        None => Vec::new(),
    };
    let view = SolveView {
        scheme: scheme.name().into(),
        reward: res.reward,
        served: res.served,
        requests: inst.request_count(),
        utilization_pct: res.utilization.map(|u| 100.0 * u),
        feasible: res.feasible,
        placements,
        replicas: inst.replicas.clone(),
    };
    serde_json::to_string(&view).map_err(|e| e.to_string())
}

pub fn replicas_json(failure_threshold: f64, copies: Option<usize>, trials: u64, seed: u64) -> Result<String, String> {
    let fm = FailureModel::default();
    let eps = service_failure_prob(&fm).map_err(|e| e.to_string())?;
    let required = required_replicas(&fm, failure_threshold).map_err(|e| e.to_string())?;
    let copies = copies.unwrap_or(required as usize);
    let delivered = simulate_copies(copies, eps, trials, seed);
    let lower = rate_lower_bound(trials - delivered, trials, VERDICT_CONFIDENCE);
    let view = ReplicaView {
        required,
        copies,
        trials,
        availability: delivered as f64 / trials as f64,
        threshold: 1.0 - failure_threshold,
        pass: lower <= failure_threshold,
    };
    serde_json::to_string(&view).map_err(|e| e.to_string())
}

#[wasm_bindgen(js_name = generateInstance)]
pub fn generate_instance(mecs: usize, requests: usize, seed: u32) -> Result<String, JsError> {
    generate_json(mecs, requests, seed as u64).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn solve(instance: &str, scheme: &str, seed: u32) -> Result<String, JsError> {
    solve_json(instance, scheme, seed as u64).map_err(|e| JsError::new(&e))
}

/// `copies = 0` simulates the required replica count.
#[wasm_bindgen(js_name = checkReplicas)]
pub fn check_replicas(failure_threshold: f64, copies: usize, trials: u32, seed: u32) -> Result<String, JsError> {
    let copies = (copies > 0).then_some(copies);
    replicas_json(failure_threshold, copies, trials as u64, seed as u64).map_err(|e| JsError::new(&e))
}
