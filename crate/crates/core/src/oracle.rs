//! Exact solutions of the binary placement problem for small instances, and
//! the availability-blind baseline.
//!
//! Both search modes decide requests in id order. A request is either left
//! unserved or served on exactly `Ψ_r` distinct MECs: extra copies consume
//! capacity and earn nothing, so some optimal solution never uses them.
//! [`solve_exhaustive_general`] drops that reduction and is kept for
//! cross-checking it.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lp::{build_relaxed_program, solve_lp, x_index, y_index, LinearProgram, Row, Sense, SolverOptions};
use crate::model::{IntegralSolution, ProblemInstance, Resource, CAPACITY_EPS};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SearchMode {
    Exhaustive,
    BranchAndBound,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleLimits {
    pub max_nodes: u64,
    pub mode: SearchMode,
}

impl Default for OracleLimits {
    fn default() -> Self {
        OracleLimits {
            max_nodes: 1_000_000,
            mode: SearchMode::BranchAndBound,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExactSolution {
    pub solution: IntegralSolution,
    pub objective: f64,
    pub nodes: u64,
}

/// Lexicographic `k`-subsets of `0..n`.
pub fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if k > n {
        return out;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(idx.clone());
        let Some(i) = (0..k).rev().find(|&i| idx[i] != i + n - k) else {
            return out;
        };
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

struct Search<'a> {
    inst: &'a ProblemInstance,
    /// Serving options per request, each a MEC subset.
    options: Vec<Vec<Vec<usize>>>,
    /// Requests in branching order: reward descending, then larger demand.
    order: Vec<usize>,
    loads: Vec<[f64; 4]>,
    choice: Vec<Option<usize>>,
    best: f64,
    best_choice: Vec<Option<usize>>,
    nodes: u64,
    max_nodes: u64,
    /// Reward still obtainable from `order[d..]`.
    suffix_reward: Vec<f64>,
    lp: Option<(LinearProgram, SolverOptions)>,
}

impl<'a> Search<'a> {
    fn new(inst: &'a ProblemInstance, options: Vec<Vec<Vec<usize>>>, max_nodes: u64, use_lp: bool) -> Self {
        let n = inst.request_count();
        let mut order: Vec<usize> = (0..n).collect();
        let size = |r: usize| Resource::ALL.iter().map(|&res| inst.requests[r].demand(res)).sum::<f64>();
        order.sort_by(|&a, &b| {
            inst.requests[b]
                .reward
                .total_cmp(&inst.requests[a].reward)
                .then(size(b).total_cmp(&size(a)))
                .then(a.cmp(&b))
        });
        let mut suffix_reward = vec![0.0; n + 1];
        for d in (0..n).rev() {
            suffix_reward[d] = suffix_reward[d + 1] + inst.requests[order[d]].reward;
        }
        Search {
            inst,
            options,
            order,
            loads: vec![[0.0; 4]; inst.mec_count()],
            choice: vec![None; n],
            best: 0.0,
            best_choice: vec![None; n],
            nodes: 0,
            max_nodes,
            suffix_reward,
            lp: use_lp.then(|| (counting_program(inst), SolverOptions::default())),
        }
    }

    /// Most open-request copies that MEC `m` can still take: the smallest
    /// demands are packed greedily, per resource.
    fn copy_limit(&self, depth: usize, m: usize) -> usize {
        let open: Vec<usize> = self.order[depth..].iter().copied().filter(|&k| self.fits_on(k, m)).collect();
        Resource::ALL
            .iter()
            .map(|&res| {
                let mut ds: Vec<f64> = open.iter().map(|&k| self.inst.requests[k].demand(res)).collect();
                ds.sort_by(f64::total_cmp);
                let mut room = self.inst.mecs[m].capacity(res) - self.loads[m][res.index()] + CAPACITY_EPS;
                let mut n = 0;
                for d in ds {
                    if d > room {
                        break;
                    }
                    room -= d;
                    n += 1;
                }
                n
            })
            .min()
            .unwrap_or(0)
    }

    fn fits_on(&self, r: usize, m: usize) -> bool {
        let req = &self.inst.requests[r];
        Resource::ALL
            .iter()
            .all(|&res| self.loads[m][res.index()] + req.demand(res) <= self.inst.mecs[m].capacity(res) + CAPACITY_EPS)
    }

    fn fits(&self, r: usize, subset: &[usize]) -> bool {
        subset.iter().all(|&m| self.fits_on(r, m))
    }

    fn apply(&mut self, r: usize, opt: usize, sign: f64) {
        let req = &self.inst.requests[r];
        for &m in &self.options[r][opt] {
            for res in Resource::ALL {
                self.loads[m][res.index()] += sign * req.demand(res);
            }
        }
    }

    /// Relaxation of the residual problem with `order[..depth]` fixed. An
    /// open request may only use MECs it still fits on alone.
    fn lp_bound(&mut self, depth: usize) -> Result<Option<f64>> {
        if self.lp.is_none() {
            return Ok(None);
        }
        let inst = self.inst;
        let mut bounds = Vec::with_capacity(inst.request_count() * (inst.mec_count() + 1));
        for (d, &k) in self.order.iter().enumerate() {
            if d < depth {
                let on: Vec<usize> = self.choice[k].map(|opt| self.options[k][opt].clone()).unwrap_or_default();
                for m in 0..inst.mec_count() {
                    let v = if on.contains(&m) { 1.0 } else { 0.0 };
                    bounds.push((x_index(inst, k, m), v, v));
                }
                let v = if on.is_empty() { 0.0 } else { 1.0 };
                bounds.push((y_index(inst, k), v, v));
            } else {
                let mut open = 0;
                for m in 0..inst.mec_count() {
                    let ok = self.fits_on(k, m);
                    open += ok as u32;
                    bounds.push((x_index(inst, k, m), 0.0, if ok { 1.0 } else { 0.0 }));
                }
                let ok = open >= inst.replicas[k];
                bounds.push((y_index(inst, k), 0.0, if ok { 1.0 } else { 0.0 }));
            }
        }
        let limits: Vec<f64> = (0..inst.mec_count())
            .map(|m| {
                let fixed = self.order[..depth]
                    .iter()
                    .filter(|&&k| self.choice[k].is_some_and(|opt| self.options[k][opt].contains(&m)))
                    .count();
                (fixed + self.copy_limit(depth, m)) as f64
            })
            .collect();
        let (lp, opts) = self.lp.as_mut().expect("checked above");
        for (j, lo, hi) in bounds {
            lp.lower[j] = lo;
            lp.upper[j] = hi;
        }
        let first = lp.rows.len() - inst.mec_count();
        for (row, limit) in lp.rows[first..].iter_mut().zip(limits) {
            row.rhs = limit;
        }
        match solve_lp(lp, opts) {
            Ok(sol) => Ok(Some(sol.objective)),
            Err(Error::Infeasible) => Ok(Some(f64::NEG_INFINITY)),
            Err(e) => Err(e),
        }
    }

    fn dfs(&mut self, depth: usize, reward: f64) -> Result<()> {
        self.nodes += 1;
        if self.nodes > self.max_nodes {
            return Err(Error::LimitExceeded {
                nodes: self.max_nodes,
                incumbent: self.best,
                bound: 0.0,
            });
        }
        if depth == self.inst.request_count() {
            if reward > self.best + 1e-12 {
                self.best = reward;
                self.best_choice = self.choice.clone();
            }
            return Ok(());
        }
        if self.lp.is_some() {
            if reward + self.suffix_reward[depth] <= self.best + 1e-9 {
                return Ok(());
            }
            if let Some(bound) = self.lp_bound(depth)? {
                if bound <= self.best + 1e-9 {
                    return Ok(());
                }
            }
        }
        let r = self.order[depth];
        for opt in 0..self.options[r].len() {
            if !self.fits(r, &self.options[r][opt]) {
                continue;
            }
            self.apply(r, opt, 1.0);
            self.choice[r] = Some(opt);
            let res = self.dfs(depth + 1, reward + self.inst.requests[r].reward);
            self.choice[r] = None;
            self.apply(r, opt, -1.0);
            res?;
        }
        self.dfs(depth + 1, reward)
    }

    fn solution(&self) -> IntegralSolution {
        let mut sol = IntegralSolution::empty(self.inst.request_count(), self.inst.mec_count());
        for (r, c) in self.best_choice.iter().enumerate() {
            if let Some(opt) = c {
                for &m in &self.options[r][*opt] {
                    sol.x[r][m] = true;
                }
                sol.y[r] = true;
            }
        }
        sol
    }
}

/// The relaxed program plus one copy-count row per MEC, `Σ_r x[r][m] <= n_m`.
fn counting_program(inst: &ProblemInstance) -> LinearProgram {
    let mut lp = build_relaxed_program(inst);
    for m in 0..inst.mec_count() {
        lp.rows.push(Row {
            name: format!("count_{m}"),
            coeffs: (0..inst.request_count()).map(|k| (x_index(inst, k, m), 1.0)).collect(),
            sense: Sense::Le,
            rhs: inst.request_count() as f64,
        });
    }
    lp
}

fn run(inst: &ProblemInstance, options: Vec<Vec<Vec<usize>>>, max_nodes: u64, use_lp: bool) -> Result<ExactSolution> {
    inst.validate()?;
    let mut search = Search::new(inst, options, max_nodes, use_lp);
    match search.dfs(0, 0.0) {
        Ok(()) => Ok(ExactSolution {
            solution: search.solution(),
            objective: search.best,
            nodes: search.nodes,
        }),
        Err(Error::LimitExceeded { nodes, incumbent, .. }) => {
            let root = solve_lp(&build_relaxed_program(inst), &SolverOptions::default())
                .map(|s| s.objective)
                .unwrap_or(search.suffix_reward[0]);
            Err(Error::LimitExceeded {
                nodes,
                incumbent,
                bound: root,
            })
        }
        Err(e) => Err(e),
    }
}

/// Provably optimal binary solution.
pub fn solve_exact(inst: &ProblemInstance, limits: &OracleLimits) -> Result<ExactSolution> {
    let options = (0..inst.request_count())
        .map(|r| combinations(inst.mec_count(), inst.replicas[r] as usize))
        .collect();
    run(inst, options, limits.max_nodes, limits.mode == SearchMode::BranchAndBound)
}

/// Enumerates every MEC subset of size at least `Ψ_r` per request.
pub fn solve_exhaustive_general(inst: &ProblemInstance, max_nodes: u64) -> Result<ExactSolution> {
    let options = (0..inst.request_count())
        .map(|r| {
            (inst.replicas[r] as usize..=inst.mec_count())
                .flat_map(|k| combinations(inst.mec_count(), k))
                .collect()
        })
        .collect();
    run(inst, options, max_nodes, false)
}

/// Copy of `inst` with every `Ψ_r` forced to one. Thresholds are kept so
/// the result can be judged against the true requirement.
pub fn strip_availability(inst: &ProblemInstance) -> ProblemInstance {
    ProblemInstance {
        replicas: vec![1; inst.request_count()],
        ..inst.clone()
    }
}

/// Drops every served request of `sol` that has fewer copies than the true
/// `Ψ_r` of `inst`: such a request is not actually available.
pub fn enforce_true_redundancy(inst: &ProblemInstance, sol: &IntegralSolution) -> Result<IntegralSolution> {
    sol.check_dims(inst)?;
    let mut out = sol.clone();
    for r in 0..inst.request_count() {
        if out.y[r] && out.placements(r) < inst.replicas[r] as usize {
            out.drop_request(r);
        }
    }
    Ok(out)
}
