//! Concentration guarantees of the rounding step.
//!
//! For a resource on MEC `m`, with `α = max_r demand_r` over all requests and
//! normalized expected load `μ = Σ_r x̃[r][m]·demand_r / α`, the rounded load
//! stays below `(1 + δ)` times the relaxed load with probability at least
//! `1 - 1/R²`, where `δ = 3·ln(R)/μ + 3`.
//!
//! For the reward, with `α_opt = max_r ζ_r` and `μ_opt = Σ_r ζ_r·ỹ_r / α_opt`,
//! the rounded reward is at least `(1 - δ_opt)` times the relaxed optimum with
//! the same probability, `δ_opt = sqrt(4·ln(R)/μ_opt)`. Factors at or below
//! zero are reported as vacuous, not clamped.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{FractionalSolution, ProblemInstance, Resource};
use crate::rounding::rounding_ensemble;

/// `δ` for a resource: `3·ln(R)/μ + 3`.
pub fn violation_slack(request_count: usize, mu: f64) -> f64 {
    3.0 * (request_count as f64).ln() / mu + 3.0
}

/// The factor as stated for the load bound: `3·ln(R)/μ + 4`.
pub fn stated_violation_factor(request_count: usize, mu: f64) -> f64 {
    3.0 * (request_count as f64).ln() / mu + 4.0
}

/// `(α, μ)` for one resource on one MEC.
pub fn normalized_load(frac: &FractionalSolution, inst: &ProblemInstance, resource: Resource, mec: usize) -> (f64, f64) {
    let alpha = inst
        .requests
        .iter()
        .map(|r| r.demand(resource))
        .fold(0.0, f64::max);
    if alpha <= 0.0 {
        return (0.0, 0.0);
    }
    (alpha, frac.load(inst, resource, mec) / alpha)
}

/// `1 + δ` for one resource on one MEC. Undefined when nothing is placed there.
pub fn violation_factor(
    frac: &FractionalSolution,
    inst: &ProblemInstance,
    resource: Resource,
    mec: usize,
) -> Result<f64> {
    let (_, mu) = normalized_load(frac, inst, resource, mec);
    if mu <= 0.0 {
        return Err(Error::UndefinedBound("no fractional load on this MEC"));
    }
    let factor = 1.0 + violation_slack(inst.request_count(), mu);
    debug_assert!((factor - stated_violation_factor(inst.request_count(), mu)).abs() <= 1e-9 * factor);
    Ok(factor)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveBound {
    pub alpha: f64,
    pub mu: f64,
    pub delta: f64,
    /// `1 - δ_opt`; may be negative.
    pub factor: f64,
    pub vacuous: bool,
}

pub fn objective_bound_factor(frac: &FractionalSolution, inst: &ProblemInstance) -> Result<ObjectiveBound> {
    frac.check_dims(inst)?;
    let alpha = inst.requests.iter().map(|r| r.reward).fold(0.0, f64::max);
    let mass: f64 = inst.requests.iter().zip(&frac.y).map(|(r, y)| r.reward * y).sum();
    if alpha <= 0.0 || mass <= 0.0 {
        return Err(Error::UndefinedBound("relaxed reward is zero"));
    }
    Ok(objective_bound_from_mu(inst.request_count(), alpha, mass / alpha))
}

pub fn objective_bound_from_mu(request_count: usize, alpha: f64, mu: f64) -> ObjectiveBound {
    let delta = (4.0 * (request_count as f64).ln() / mu).sqrt();
    let factor = 1.0 - delta;
    ObjectiveBound {
        alpha,
        mu,
        delta,
        factor,
        vacuous: factor <= 0.0,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResourceBound {
    pub resource: Resource,
    pub mec: usize,
    pub alpha: f64,
    pub mu: f64,
    pub lp_load: f64,
    pub capacity: f64,
    /// `None` when the MEC carries no fractional load of this resource.
    pub delta: Option<f64>,
    pub factor: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub request_count: usize,
    pub mec_count: usize,
    pub resources: Vec<ResourceBound>,
    pub objective: Option<ObjectiveBound>,
}

pub fn bound_report(frac: &FractionalSolution, inst: &ProblemInstance) -> Result<BoundReport> {
    frac.check_dims(inst)?;
    let mut resources = Vec::with_capacity(4 * inst.mec_count());
    for m in 0..inst.mec_count() {
        for res in Resource::ALL {
            let (alpha, mu) = normalized_load(frac, inst, res, m);
            let (delta, factor) = if mu > 0.0 {
                let d = violation_slack(inst.request_count(), mu);
                (Some(d), Some(1.0 + d))
            } else {
                (None, None)
            };
            resources.push(ResourceBound {
                resource: res,
                mec: m,
                alpha,
                mu,
                lp_load: frac.load(inst, res, m),
                capacity: inst.mecs[m].capacity(res),
                delta,
                factor,
            });
        }
    }
    Ok(BoundReport {
        request_count: inst.request_count(),
        mec_count: inst.mec_count(),
        resources,
        objective: objective_bound_factor(frac, inst).ok(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResourceExceedance {
    pub resource: Resource,
    /// Fraction of runs in which some MEC's load exceeded `(1 + δ)·lp_load`.
    pub exceed_fraction: f64,
    pub max_load_over_capacity: f64,
    pub max_load_over_lp: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ViolationCheck {
    pub runs: usize,
    pub request_count: usize,
    pub mec_count: usize,
    pub mec_to_request_ratio: f64,
    pub per_resource: Vec<ResourceExceedance>,
    /// Fraction of runs in which any resource on any MEC exceeded its factor.
    pub any_exceed_fraction: f64,
    /// `1/R²`, the per-resource tail the bound promises.
    pub theoretical_tail: f64,
}

/// Rounds `frac` with seeds `seed0..seed0+n_seeds` and counts how often a
/// rounded load exceeds its factor times the relaxed load.
pub fn empirical_violation_check(
    inst: &ProblemInstance,
    frac: &FractionalSolution,
    seed0: u64,
    n_seeds: usize,
) -> Result<ViolationCheck> {
    if n_seeds < 100 {
        return Err(Error::Domain(format!("need at least 100 roundings, got {n_seeds}")));
    }
    let report = bound_report(frac, inst)?;
    let ensemble = rounding_ensemble(frac, inst, seed0, n_seeds)?;

    let mut exceed_runs = [0usize; 4];
    let mut any_runs = 0usize;
    let mut max_cap = [0.0f64; 4];
    let mut max_lp = [0.0f64; 4];
    for (_, metrics) in &ensemble {
        let mut hit = [false; 4];
        for b in &report.resources {
            let i = b.resource.index();
            let load = metrics.loads[b.mec][i];
            max_cap[i] = max_cap[i].max(load / b.capacity);
            if let Some(f) = b.factor {
                max_lp[i] = max_lp[i].max(load / b.lp_load);
                if load > f * b.lp_load * (1.0 + 1e-12) {
                    hit[i] = true;
                }
            }
        }
        for i in 0..4 {
            exceed_runs[i] += hit[i] as usize;
        }
        any_runs += hit.iter().any(|&h| h) as usize;
    }

    let n = n_seeds as f64;
    let r = inst.request_count().max(1) as f64;
    Ok(ViolationCheck {
        runs: n_seeds,
        request_count: inst.request_count(),
        mec_count: inst.mec_count(),
        mec_to_request_ratio: inst.mec_count() as f64 / r,
        per_resource: Resource::ALL
            .iter()
            .map(|&res| ResourceExceedance {
                resource: res,
                exceed_fraction: exceed_runs[res.index()] as f64 / n,
                max_load_over_capacity: max_cap[res.index()],
                max_load_over_lp: max_lp[res.index()],
            })
            .collect(),
        any_exceed_fraction: any_runs as f64 / n,
        theoretical_tail: 1.0 / (r * r),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::tests::{instance, mec, request};

    #[test]
    fn factor_at_fifty_requests() {
        // 3·ln 50 / 10 + 4
        let f = stated_violation_factor(50, 10.0);
        assert!((f - 5.173_606_9).abs() < 1e-6, "{f}");
        assert!((1.0 + violation_slack(50, 10.0) - f).abs() < 1e-12);
    }

    #[test]
    fn factor_tends_to_four() {
        assert!((stated_violation_factor(50, 1e12) - 4.0).abs() < 1e-9);
    }

    #[test]
    fn objective_bound_values() {
        let b = objective_bound_from_mu(50, 1.0, 20.0);
        assert!((b.delta - 0.884_536_376).abs() < 1e-8, "{}", b.delta);
        assert!((b.factor - 0.115_463_624).abs() < 1e-8);
        assert!(!b.vacuous);
        let threshold = 4.0 * 50f64.ln();
        assert!((threshold - 15.648_092_022).abs() < 1e-8);
        assert!(objective_bound_from_mu(50, 1.0, threshold).factor.abs() < 1e-12);
        assert!(objective_bound_from_mu(50, 1.0, 10.0).vacuous);
        assert!((objective_bound_from_mu(50, 1.0, 1e15).factor - 1.0).abs() < 1e-6);
    }

    #[test]
    fn equal_demands_cancel_alpha() {
        let make = |c: f64| {
            instance(
                vec![mec(0, 100.0, 100.0, 100.0, 100.0)],
                (0..3).map(|i| request(i, [c, 1.0, 1.0, 1.0], 1.0)).collect(),
                vec![1; 3],
            )
        };
        let frac = FractionalSolution {
            x: vec![vec![0.5], vec![0.25], vec![1.0]],
            y: vec![0.5, 0.25, 1.0],
            objective: 1.75,
        };
        let a = violation_factor(&frac, &make(2.0), Resource::Cpu, 0).unwrap();
        let b = violation_factor(&frac, &make(7.0), Resource::Cpu, 0).unwrap();
        assert!((a - b).abs() < 1e-12);
        assert!((a - stated_violation_factor(3, 1.75)).abs() < 1e-12);
    }

    #[test]
    fn undefined_without_load() {
        let inst = instance(vec![mec(0, 1.0, 1.0, 1.0, 1.0)], vec![request(0, [1.0; 4], 1.0)], vec![1]);
        let frac = FractionalSolution {
            x: vec![vec![0.0]],
            y: vec![0.0],
            objective: 0.0,
        };
        assert!(matches!(
            violation_factor(&frac, &inst, Resource::Cpu, 0),
            Err(Error::UndefinedBound(_))
        ));
        assert!(objective_bound_factor(&frac, &inst).is_err());
    }

    #[test]
    fn integral_fraction_never_exceeds() {
        let inst = instance(
            vec![mec(0, 10.0, 10.0, 10.0, 10.0), mec(1, 10.0, 10.0, 10.0, 10.0)],
            (0..4).map(|i| request(i, [2.0, 2.0, 2.0, 2.0], 1.0 + i as f64)).collect(),
            vec![1; 4],
        );
        let frac = FractionalSolution {
            x: vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 0.0], vec![0.0, 0.0]],
            y: vec![1.0, 1.0, 1.0, 0.0],
            objective: 6.0,
        };
        let check = empirical_violation_check(&inst, &frac, 3, 200).unwrap();
        assert_eq!(check.any_exceed_fraction, 0.0);
        for p in &check.per_resource {
            assert!((p.max_load_over_lp - 1.0).abs() < 1e-12);
        }
    }
}
