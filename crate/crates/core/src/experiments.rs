//! Scheme comparison sweeps.
//!
//! Schemes:
//! - `lr`: the relaxed optimum (fractional reward, served measure `Σ ỹ`).
//! - `rr`: one randomized rounding of `lr`; may overload MECs.
//! - `greedy`: `rr` followed by the greedy repair.
//! - `wo-avl`: the greedy pipeline run with every `Ψ_r = 1`, then judged
//!   against the true `Ψ_r` (under-replicated requests count as unserved).
//! - `exact`: the binary optimum, only on instances within the size limits;
//!   runs that exhaust the node budget are left out and counted.
//!
//! Run `k` of every sweep point uses the instance seed `derive_seed(base, k)`,
//! so points share their random instances and adding runs never changes
//! earlier ones. Summary and per-run CSVs are deterministic given the base
//! seed; wall-clock times go to a separate CSV.

use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::bounds::{bound_report, BoundReport};
use crate::error::{Error, Result};
use crate::gen::{generate, GeneratorConfig, UpfCatalog};
use crate::lp::{solve_relaxation, SolverOptions};
use crate::model::{evaluate_solution, FractionalSolution, IntegralSolution, ProblemInstance, Resource};
use crate::oracle::{enforce_true_redundancy, solve_exact, strip_availability, OracleLimits};
use crate::repair::{greedy_repair_with, RepairOptions};
use crate::rounding::randomized_round;
use crate::seed::derive_seed;
use crate::stats::confidence_interval;

const ROUNDING_STREAM: u64 = 0x005E_ED0F_0001;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    Lr,
    Rr,
    Greedy,
    WoAvl,
    Exact,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::Lr => "lr",
            Scheme::Rr => "rr",
            Scheme::Greedy => "greedy",
            Scheme::WoAvl => "wo-avl",
            Scheme::Exact => "exact",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "lr" => Ok(Scheme::Lr),
            "rr" => Ok(Scheme::Rr),
            "greedy" => Ok(Scheme::Greedy),
            "wo-avl" | "woavl" | "wo_avl" => Ok(Scheme::WoAvl),
            "exact" | "integer" => Ok(Scheme::Exact),
            other => Err(Error::Config(format!("unknown scheme `{other}`"))),
        }
    }
}

/// Outcome of one scheme on one instance.
#[derive(Clone, Debug, PartialEq)]
pub struct SchemeResult {
    pub scheme: Scheme,
    pub reward: f64,
    /// Served requests; `Σ ỹ` for the fractional scheme.
    pub served: f64,
    /// Capacity-weighted utilization per resource, as a fraction.
    pub utilization: [f64; 4],
    pub feasible: bool,
    pub fractional: Option<FractionalSolution>,
    pub integral: Option<IntegralSolution>,
    pub bounds: Option<BoundReport>,
}

impl SchemeResult {
    pub fn served_pct(&self, requests: usize) -> f64 {
        if requests == 0 {
            0.0
        } else {
            100.0 * self.served / requests as f64
        }
    }
}

fn fractional_result(inst: &ProblemInstance, frac: &FractionalSolution) -> SchemeResult {
    let mut total_cap = [0.0; 4];
    let mut total_load = [0.0; 4];
    for (m, load) in frac.loads(inst).iter().enumerate() {
        for res in Resource::ALL {
            total_cap[res.index()] += inst.mecs[m].capacity(res);
            total_load[res.index()] += load[res.index()];
        }
    }
    SchemeResult {
        scheme: Scheme::Lr,
        reward: frac.objective,
        served: frac.served_measure(),
        utilization: std::array::from_fn(|i| if total_cap[i] > 0.0 { total_load[i] / total_cap[i] } else { 0.0 }),
        feasible: true,
        fractional: Some(frac.clone()),
        integral: None,
        bounds: None,
    }
}

fn integral_result(inst: &ProblemInstance, scheme: Scheme, sol: IntegralSolution) -> Result<SchemeResult> {
    let metrics = evaluate_solution(inst, &sol)?;
    Ok(SchemeResult {
        scheme,
        reward: metrics.total_reward,
        served: metrics.served_count as f64,
        utilization: metrics.aggregate_utilization,
        feasible: metrics.feasible,
        fractional: None,
        integral: Some(sol),
        bounds: None,
    })
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct PipelineOptions {
    pub solver: SolverOptions,
    pub repair: RepairOptions,
    pub oracle: OracleLimits,
}

/// Runs one scheme end to end. `seed` drives the rounding.
pub fn run_scheme(inst: &ProblemInstance, scheme: Scheme, seed: u64, opts: &PipelineOptions) -> Result<SchemeResult> {
    match scheme {
        Scheme::Lr => Ok(fractional_result(inst, &solve_relaxation(inst, &opts.solver)?)),
        Scheme::Rr => {
            let frac = solve_relaxation(inst, &opts.solver)?;
            let mut res = integral_result(inst, Scheme::Rr, randomized_round(&frac, inst, seed)?)?;
            res.bounds = Some(bound_report(&frac, inst)?);
            res.fractional = Some(frac);
            Ok(res)
        }
        Scheme::Greedy => {
            let frac = solve_relaxation(inst, &opts.solver)?;
            let rounded = randomized_round(&frac, inst, seed)?;
            integral_result(inst, Scheme::Greedy, greedy_repair_with(inst, &rounded, &opts.repair)?)
        }
        Scheme::WoAvl => {
            let blind = strip_availability(inst);
            let frac = solve_relaxation(&blind, &opts.solver)?;
            let rounded = randomized_round(&frac, &blind, seed)?;
            let repaired = greedy_repair_with(&blind, &rounded, &opts.repair)?;
            integral_result(inst, Scheme::WoAvl, enforce_true_redundancy(inst, &repaired)?)
        }
        Scheme::Exact => {
            let exact = solve_exact(inst, &opts.oracle)?;
            integral_result(inst, Scheme::Exact, exact.solution)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResourceSweep {
    pub resource: Resource,
    pub values: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub request_counts: Vec<usize>,
    /// Each sweep varies one capacity with the others held at `fixed_capacities`.
    pub resource_sweeps: Vec<ResourceSweep>,
    pub sweep_request_count: usize,
    /// CPU, RAM, uplink, downlink of every MEC during resource sweeps.
    pub fixed_capacities: [f64; 4],
    pub runs: usize,
    pub confidence: f64,
    pub base_seed: u64,
    pub schemes: Vec<Scheme>,
    /// `exact` only runs on instances with at most this many requests.
    pub exact_max_requests: usize,
    pub exact_max_mecs: usize,
    pub oracle: OracleLimits,
    pub repair: RepairOptions,
    /// When false, failed runs are skipped and counted instead of aborting.
    /// `exact` runs that hit the node limit are always skipped and counted.
    pub abort_on_failure: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            request_counts: vec![30, 35, 40, 50, 60],
            resource_sweeps: Vec::new(),
            sweep_request_count: 50,
            fixed_capacities: [40.0, 48.0, 75.0, 250.0],
            runs: 50,
            confidence: 0.95,
            base_seed: 1,
            schemes: vec![Scheme::Lr, Scheme::Rr, Scheme::Greedy, Scheme::WoAvl],
            exact_max_requests: 12,
            exact_max_mecs: 4,
            oracle: OracleLimits::default(),
            repair: RepairOptions::default(),
            abort_on_failure: true,
        }
    }
}

impl ExperimentConfig {
    /// The four resource sweeps around the fixed capacities.
    pub fn standard_resource_sweeps() -> Vec<ResourceSweep> {
        vec![
            ResourceSweep {
                resource: Resource::Cpu,
                values: vec![16.0, 24.0, 32.0, 40.0, 48.0, 56.0],
            },
            ResourceSweep {
                resource: Resource::Ram,
                values: vec![24.0, 32.0, 48.0, 64.0, 80.0],
            },
            ResourceSweep {
                resource: Resource::Uplink,
                values: vec![45.0, 60.0, 75.0, 90.0, 105.0],
            },
            ResourceSweep {
                resource: Resource::Downlink,
                values: vec![150.0, 200.0, 250.0, 300.0, 350.0],
            },
        ]
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.runs < 2 {
            return bad("runs must be at least 2 for confidence intervals".into());
        }
        if !(self.confidence > 0.0 && self.confidence < 1.0) {
            return bad(format!("confidence {} outside (0, 1)", self.confidence));
        }
        if self.schemes.is_empty() {
            return bad("no schemes selected".into());
        }
        if self.request_counts.contains(&0) || self.sweep_request_count == 0 {
            return bad("request counts must be positive".into());
        }
        if self.fixed_capacities.iter().any(|&c| !(c > 0.0)) {
            return bad("fixed capacities must be positive".into());
        }
        for sweep in &self.resource_sweeps {
            for &v in &sweep.values {
                let integral = matches!(sweep.resource, Resource::Cpu | Resource::Ram);
                if !(v > 0.0) || (integral && v.fract() != 0.0) {
                    return bad(format!("{} sweep value {v} is not a positive capacity", sweep.resource));
                }
            }
        }
        for (name, v) in [("cpu", self.fixed_capacities[0]), ("ram", self.fixed_capacities[1])] {
            if v.fract() != 0.0 {
                return bad(format!("fixed {name} capacity {v} must be integral"));
            }
        }
        Ok(())
    }

    fn points(&self, base: &GeneratorConfig) -> Vec<SweepPoint> {
        let mut out = Vec::new();
        for &r in &self.request_counts {
            out.push(SweepPoint {
                sweep: "requests".into(),
                value: r as f64,
                generator: GeneratorConfig {
                    request_count: r,
                    ..base.clone()
                },
            });
        }
        for sweep in &self.resource_sweeps {
            for &v in &sweep.values {
                let mut caps = self.fixed_capacities;
                caps[sweep.resource.index()] = v;
                out.push(SweepPoint {
                    sweep: sweep.resource.name().into(),
                    value: v,
                    generator: GeneratorConfig {
                        request_count: self.sweep_request_count,
                        cpu_range: [caps[0] as u32; 2],
                        ram_range: [caps[1] as u32; 2],
                        uplink_capacity: caps[2],
                        downlink_capacity: caps[3],
                        ..base.clone()
                    },
                });
            }
        }
        out
    }
}

struct SweepPoint {
    sweep: String,
    value: f64,
    generator: GeneratorConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub scheme: Scheme,
    pub sweep: String,
    pub point: f64,
    pub run: usize,
    pub instance_seed: u64,
    pub requests: usize,
    pub reward: f64,
    pub served_pct: f64,
    /// Percent, CPU/RAM/uplink/downlink.
    pub utilization_pct: [f64; 4],
    pub feasible: bool,
    pub seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub scheme: Scheme,
    pub sweep: String,
    pub point: f64,
    pub metric: String,
    pub mean: f64,
    pub ci_half_width: f64,
    pub n: usize,
    pub failed: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub confidence: f64,
    pub base_seed: u64,
    pub summary: Vec<SummaryRow>,
    pub runs: Vec<RunRecord>,
    /// `(scheme, sweep, point, mean seconds, CI half-width)`.
    pub timing: Vec<(Scheme, String, f64, f64, f64)>,
}

pub const METRICS: [&str; 7] = [
    "reward",
    "served_pct",
    "cpu_util_pct",
    "ram_util_pct",
    "uplink_util_pct",
    "downlink_util_pct",
    "violation_rate",
];

impl ExperimentReport {
    pub fn find(&self, scheme: Scheme, sweep: &str, point: f64, metric: &str) -> Option<&SummaryRow> {
        self.summary
            .iter()
            .find(|r| r.scheme == scheme && r.sweep == sweep && r.point == point && r.metric == metric)
    }

    /// Summary CSV: one row per (scheme, sweep point, metric).
    pub fn write_summary_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["scheme", "sweep", "point", "metric", "mean", "ci_half_width", "n", "failed"])?;
        for r in &self.summary {
            w.write_record([
                r.scheme.name().to_string(),
                r.sweep.clone(),
                fmt_point(r.point),
                r.metric.clone(),
                format!("{:.6}", r.mean),
                format!("{:.6}", r.ci_half_width),
                r.n.to_string(),
                r.failed.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Long-format per-run CSV without wall-clock times.
    pub fn write_runs_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "scheme",
            "sweep",
            "point",
            "run",
            "instance_seed",
            "requests",
            "reward",
            "served_pct",
            "cpu_util_pct",
            "ram_util_pct",
            "uplink_util_pct",
            "downlink_util_pct",
            "feasible",
        ])?;
        for r in &self.runs {
            let mut rec = vec![
                r.scheme.name().to_string(),
                r.sweep.clone(),
                fmt_point(r.point),
                r.run.to_string(),
                r.instance_seed.to_string(),
                r.requests.to_string(),
                format!("{:.6}", r.reward),
                format!("{:.6}", r.served_pct),
            ];
            rec.extend(r.utilization_pct.iter().map(|u| format!("{u:.6}")));
            rec.push(r.feasible.to_string());
            w.write_record(rec)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_timing_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["scheme", "sweep", "point", "mean_seconds", "ci_half_width"])?;
        for (scheme, sweep, point, mean, half) in &self.timing {
            w.write_record([
                scheme.name().to_string(),
                sweep.clone(),
                fmt_point(*point),
                format!("{mean:.6e}"),
                format!("{half:.6e}"),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn fmt_point(v: f64) -> String {
    if v.fract() == 0.0 {
        format!("{}", v as i64)
    } else {
        format!("{v}")
    }
}

/// Per-run results of every selected scheme, sharing the LP and rounding
/// between `rr` and `greedy`.
fn run_once(
    inst: &ProblemInstance,
    cfg: &ExperimentConfig,
    opts: &PipelineOptions,
    round_seed: u64,
) -> Vec<(Scheme, Result<(SchemeResult, f64)>)> {
    let wants = |s: Scheme| cfg.schemes.contains(&s);
    let mut out = Vec::new();

    let needs_lp = wants(Scheme::Lr) || wants(Scheme::Rr) || wants(Scheme::Greedy);
    if needs_lp {
        let t0 = Instant::now();
        let lp = solve_relaxation(inst, &opts.solver);
        let t_lp = t0.elapsed().as_secs_f64();
        match lp {
            Err(e) => {
                let msg = e.to_string();
                for s in [Scheme::Lr, Scheme::Rr, Scheme::Greedy] {
                    if wants(s) {
                        out.push((s, Err(Error::NumericalInstability(msg.clone()))));
                    }
                }
            }
            Ok(frac) => {
                if wants(Scheme::Lr) {
                    out.push((Scheme::Lr, Ok((fractional_result(inst, &frac), t_lp))));
                }
                if wants(Scheme::Rr) || wants(Scheme::Greedy) {
                    let t1 = Instant::now();
                    let rounded = randomized_round(&frac, inst, round_seed);
                    let t_rr = t_lp + t1.elapsed().as_secs_f64();
                    match rounded {
                        Err(e) => {
                            let msg = e.to_string();
                            for s in [Scheme::Rr, Scheme::Greedy] {
                                if wants(s) {
                                    out.push((s, Err(Error::Domain(msg.clone()))));
                                }
                            }
                        }
                        Ok(rounded) => {
                            if wants(Scheme::Rr) {
                                out.push((
                                    Scheme::Rr,
                                    integral_result(inst, Scheme::Rr, rounded.clone()).map(|r| (r, t_rr)),
                                ));
                            }
                            if wants(Scheme::Greedy) {
                                let t2 = Instant::now();
                                let res = greedy_repair_with(inst, &rounded, &opts.repair)
                                    .and_then(|s| integral_result(inst, Scheme::Greedy, s));
                                let t_g = t_rr + t2.elapsed().as_secs_f64();
                                out.push((Scheme::Greedy, res.map(|r| (r, t_g))));
                            }
                        }
                    }
                }
            }
        }
    }
    if wants(Scheme::WoAvl) {
        let t0 = Instant::now();
        let res = run_scheme(inst, Scheme::WoAvl, round_seed, opts);
        out.push((Scheme::WoAvl, res.map(|r| (r, t0.elapsed().as_secs_f64()))));
    }
    if wants(Scheme::Exact)
        && inst.request_count() <= cfg.exact_max_requests
        && inst.mec_count() <= cfg.exact_max_mecs
    {
        let t0 = Instant::now();
        let res = run_scheme(inst, Scheme::Exact, round_seed, opts);
        out.push((Scheme::Exact, res.map(|r| (r, t0.elapsed().as_secs_f64()))));
    }
    out.sort_by_key(|(s, _)| *s);
    out
}

pub fn run_experiment(cfg: &ExperimentConfig, base: &GeneratorConfig, solver: &SolverOptions) -> Result<ExperimentReport> {
    cfg.validate()?;
    base.validate()?;
    let opts = PipelineOptions {
        solver: solver.clone(),
        repair: cfg.repair.clone(),
        oracle: cfg.oracle.clone(),
    };
    let catalog = UpfCatalog::default();
    let mut report = ExperimentReport {
        confidence: cfg.confidence,
        base_seed: cfg.base_seed,
        summary: Vec::new(),
        runs: Vec::new(),
        timing: Vec::new(),
    };

    for point in cfg.points(base) {
        let one_run = |run: usize| -> Result<Vec<(Scheme, Result<(SchemeResult, f64)>)>> {
            let instance_seed = derive_seed(cfg.base_seed, run as u64);
            let gen_cfg = GeneratorConfig {
                seed: instance_seed,
                ..point.generator.clone()
            };
            let inst = generate(&gen_cfg, &catalog)?;
            Ok(run_once(&inst, cfg, &opts, derive_seed(instance_seed, ROUNDING_STREAM)))
        };
        #[cfg(feature = "parallel")]
        let per_run: Vec<_> = {
            use rayon::prelude::*;
            (0..cfg.runs).into_par_iter().map(one_run).collect()
        };
        #[cfg(not(feature = "parallel"))]
        let per_run: Vec<_> = (0..cfg.runs).map(one_run).collect();

        let mut by_scheme: Vec<(Scheme, Vec<RunRecord>, usize)> = Vec::new();
        for (run, outcome) in per_run.into_iter().enumerate() {
            let instance_seed = derive_seed(cfg.base_seed, run as u64);
            let requests = point.generator.request_count;
            for (scheme, res) in outcome? {
                let slot = match by_scheme.iter().position(|(s, _, _)| *s == scheme) {
                    Some(i) => i,
                    None => {
                        by_scheme.push((scheme, Vec::new(), 0));
                        by_scheme.len() - 1
                    }
                };
                match res {
                    Ok((r, seconds)) => by_scheme[slot].1.push(RunRecord {
                        scheme,
                        sweep: point.sweep.clone(),
                        point: point.value,
                        run,
                        instance_seed,
                        requests,
                        reward: r.reward,
                        served_pct: r.served_pct(requests),
                        utilization_pct: r.utilization.map(|u| 100.0 * u),
                        feasible: r.feasible,
                        seconds,
                    }),
                    Err(Error::LimitExceeded { .. }) if scheme == Scheme::Exact => by_scheme[slot].2 += 1,
                    Err(e) if cfg.abort_on_failure => {
                        return Err(Error::NumericalInstability(format!(
                            "{scheme} failed on {} = {} run {run}: {e}",
                            point.sweep, point.value
                        )))
                    }
                    Err(_) => by_scheme[slot].2 += 1,
                }
            }
        }
        by_scheme.sort_by_key(|(s, _, _)| *s);

        for (scheme, records, failed) in by_scheme {
            let columns: [Vec<f64>; 7] = [
                records.iter().map(|r| r.reward).collect(),
                records.iter().map(|r| r.served_pct).collect(),
                records.iter().map(|r| r.utilization_pct[0]).collect(),
                records.iter().map(|r| r.utilization_pct[1]).collect(),
                records.iter().map(|r| r.utilization_pct[2]).collect(),
                records.iter().map(|r| r.utilization_pct[3]).collect(),
                records.iter().map(|r| if r.feasible { 0.0 } else { 1.0 }).collect(),
            ];
            for (metric, samples) in METRICS.iter().zip(columns) {
                let (mean, half) = summarize(&samples, cfg.confidence)?;
                report.summary.push(SummaryRow {
                    scheme,
                    sweep: point.sweep.clone(),
                    point: point.value,
                    metric: metric.to_string(),
                    mean,
                    ci_half_width: half,
                    n: samples.len(),
                    failed,
                });
            }
            let secs: Vec<f64> = records.iter().map(|r| r.seconds).collect();
            let (mean, half) = summarize(&secs, cfg.confidence)?;
            report.timing.push((scheme, point.sweep.clone(), point.value, mean, half));
            report.runs.extend(records);
        }
    }
    Ok(report)
}

fn summarize(samples: &[f64], level: f64) -> Result<(f64, f64)> {
    match samples.len() {
        0 => Ok((f64::NAN, f64::NAN)),
        1 => Ok((samples[0], f64::NAN)),
        _ => confidence_interval(samples, level),
    }
}
