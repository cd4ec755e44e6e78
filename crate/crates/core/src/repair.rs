//! Greedy feasibility repair of a rounded solution.
//!
//! 1. Placements of unserved requests are pruned, and served requests that
//!    lack their `Ψ_r` copies are dropped.
//! 2. Optionally, surplus copies (beyond `Ψ_r`) on overloaded MECs are trimmed.
//! 3. MECs are visited in ascending id. While a MEC is over any capacity, the
//!    lowest-reward request placed on it (larger id on ties) is dropped from
//!    every MEC, and loads are decremented wherever it was placed.
//!
//! Loads only ever decrease, so a MEC that is fixed stays fixed.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::model::{evaluate_solution, IntegralSolution, ProblemInstance, Resource, CAPACITY_EPS};

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RepairOptions {
    /// Remove surplus replicas from overloaded MECs before dropping requests.
    pub trim_excess_replicas: bool,
}

struct Loads {
    per_mec: Vec<[f64; 4]>,
}

impl Loads {
    fn of(inst: &ProblemInstance, sol: &IntegralSolution) -> Self {
        let mut per_mec = vec![[0.0; 4]; inst.mec_count()];
        for (r, req) in inst.requests.iter().enumerate() {
            for (m, &on) in sol.x[r].iter().enumerate() {
                if on {
                    for res in Resource::ALL {
                        per_mec[m][res.index()] += req.demand(res);
                    }
                }
            }
        }
        Loads { per_mec }
    }

    fn overloaded(&self, inst: &ProblemInstance, m: usize) -> bool {
        Resource::ALL
            .iter()
            .any(|&res| self.per_mec[m][res.index()] > inst.mecs[m].capacity(res) + CAPACITY_EPS)
    }

    fn remove(&mut self, inst: &ProblemInstance, r: usize, m: usize) {
        for res in Resource::ALL {
            self.per_mec[m][res.index()] -= inst.requests[r].demand(res);
        }
    }
}

pub fn greedy_repair(inst: &ProblemInstance, sol: &IntegralSolution) -> Result<IntegralSolution> {
    greedy_repair_with(inst, sol, &RepairOptions::default())
}

pub fn greedy_repair_with(
    inst: &ProblemInstance,
    sol: &IntegralSolution,
    opts: &RepairOptions,
) -> Result<IntegralSolution> {
    sol.check_dims(inst)?;
    let mut out = sol.clone();

    for r in 0..inst.request_count() {
        if !out.y[r] || out.placements(r) < inst.replicas[r] as usize {
            out.drop_request(r);
        }
    }

    let mut loads = Loads::of(inst, &out);

    if opts.trim_excess_replicas {
        for m in 0..inst.mec_count() {
            // lowest reward first, same order as request removal
            let mut surplus: Vec<usize> = (0..inst.request_count())
                .filter(|&r| out.x[r][m] && out.placements(r) > inst.replicas[r] as usize)
                .collect();
            surplus.sort_by(|&a, &b| removal_order(inst, a, b));
            for r in surplus {
                if !loads.overloaded(inst, m) {
                    break;
                }
                if out.placements(r) > inst.replicas[r] as usize {
                    out.x[r][m] = false;
                    loads.remove(inst, r, m);
                }
            }
        }
    }

    for m in 0..inst.mec_count() {
        while loads.overloaded(inst, m) {
            let victim = (0..inst.request_count())
                .filter(|&r| out.x[r][m])
                .min_by(|&a, &b| removal_order(inst, a, b))
                .expect("an overloaded MEC hosts at least one request");
            for host in 0..inst.mec_count() {
                if out.x[victim][host] {
                    loads.remove(inst, victim, host);
                }
            }
            out.drop_request(victim);
        }
    }

    debug_assert!(evaluate_solution(inst, &out)?.feasible);
    Ok(out)
}

/// Removal priority: smaller reward first, larger id first on equal reward.
fn removal_order(inst: &ProblemInstance, a: usize, b: usize) -> std::cmp::Ordering {
    inst.requests[a]
        .reward
        .total_cmp(&inst.requests[b].reward)
        .then(b.cmp(&a))
}
