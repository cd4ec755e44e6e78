//! The relaxed placement program and a bounded-variable primal simplex.
//!
//! Variables keep their box bounds inside the ratio test instead of being
//! turned into rows, so the `[0, 1]` bounds on every placement and admission
//! variable cost nothing. The tableau is dense; rows are stored sparse in
//! [`LinearProgram`].
//!
//! Pricing is largest reduced cost. After `bland_threshold` consecutive
//! degenerate pivots the solver switches to Bland's rule for the rest of the
//! phase, which guarantees termination.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::model::{FractionalSolution, ProblemInstance, Resource};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Le,
    Ge,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Row {
    pub name: String,
    pub coeffs: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

impl Row {
    pub fn activity(&self, values: &[f64]) -> f64 {
        self.coeffs.iter().map(|&(j, a)| a * values[j]).sum()
    }

    /// How far `values` sit on the wrong side of this row (0 when satisfied).
    pub fn violation(&self, values: &[f64]) -> f64 {
        let act = self.activity(values);
        match self.sense {
            Sense::Le => (act - self.rhs).max(0.0),
            Sense::Ge => (self.rhs - act).max(0.0),
        }
    }
}

/// `maximize objective·v` subject to `rows` and `lower <= v <= upper`.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub rows: Vec<Row>,
    pub names: Vec<String>,
}

impl LinearProgram {
    /// Program with `n` variables bounded to `[0, 1]` and no rows.
    pub fn with_unit_box(objective: Vec<f64>) -> Self {
        let n = objective.len();
        LinearProgram {
            objective,
            lower: vec![0.0; n],
            upper: vec![1.0; n],
            rows: Vec::new(),
            names: (0..n).map(|j| format!("v{j}")).collect(),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.num_vars();
        for (what, len) in [("lower bounds", self.lower.len()), ("upper bounds", self.upper.len()), ("names", self.names.len())] {
            if len != n {
                return Err(Error::DimensionMismatch {
                    what,
                    expected: n,
                    found: len,
                });
            }
        }
        for row in &self.rows {
            if !row.rhs.is_finite() {
                return Err(Error::Domain(format!("row {} has non-finite rhs", row.name)));
            }
            if let Some(&(j, a)) = row.coeffs.iter().find(|&&(j, a)| j >= n || !a.is_finite()) {
                return Err(Error::Domain(format!("row {} has bad entry ({j}, {a})", row.name)));
            }
        }
        for j in 0..n {
            if !self.lower[j].is_finite() || !self.upper[j].is_finite() || !self.objective[j].is_finite() {
                return Err(Error::Domain(format!("variable {j} needs finite bounds and cost")));
            }
        }
        Ok(())
    }

    pub fn objective_value(&self, values: &[f64]) -> f64 {
        self.objective.iter().zip(values).map(|(c, v)| c * v).sum()
    }

    /// Largest row or bound violation of `values`.
    pub fn max_violation(&self, values: &[f64]) -> f64 {
        let rows = self.rows.iter().map(|r| r.violation(values));
        let bounds = values
            .iter()
            .enumerate()
            .map(|(j, &v)| (self.lower[j] - v).max(v - self.upper[j]).max(0.0));
        rows.chain(bounds).fold(0.0, f64::max)
    }

    /// CPLEX-style LP text, for checking against external solvers.
    pub fn to_lp_format(&self) -> String {
        let mut out = String::new();
        let term = |out: &mut String, first: bool, a: f64, name: &str| {
            let sign = if a < 0.0 { "-" } else if first { "" } else { "+" };
            let mag = a.abs();
            if first {
                let _ = write!(out, "{sign}{} {name}", fmt_num(mag));
            } else {
                let _ = write!(out, "{sign} {} {name}", fmt_num(mag));
            }
        };
        out.push_str("Maximize\n obj:");
        let mut first = true;
        for (j, &c) in self.objective.iter().enumerate() {
            if c != 0.0 {
                out.push(' ');
                term(&mut out, first, c, &self.names[j]);
                first = false;
            }
        }
        if first {
            out.push_str(" 0");
        }
        out.push_str("\nSubject To\n");
        for row in &self.rows {
            let _ = write!(out, " {}:", row.name);
            let mut first = true;
            for &(j, a) in &row.coeffs {
                out.push(' ');
                term(&mut out, first, a, &self.names[j]);
                first = false;
            }
            if first {
                out.push_str(" 0 ");
                out.push_str(&self.names.first().cloned().unwrap_or_default());
            }
            let op = match row.sense {
                Sense::Le => "<=",
                Sense::Ge => ">=",
            };
            let _ = writeln!(out, " {op} {}", fmt_num(row.rhs));
        }
        out.push_str("Bounds\n");
        for j in 0..self.num_vars() {
            let _ = writeln!(
                out,
                " {} <= {} <= {}",
                fmt_num(self.lower[j]),
                self.names[j],
                fmt_num(self.upper[j])
            );
        }
        out.push_str("End\n");
        out
    }
}

fn fmt_num(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        format!("{v}")
    }
}

/// Column of `x[r][m]` in the relaxed program.
pub fn x_index(inst: &ProblemInstance, request: usize, mec: usize) -> usize {
    request * inst.mec_count() + mec
}

/// Column of `y[r]` in the relaxed program.
pub fn y_index(inst: &ProblemInstance, request: usize) -> usize {
    inst.request_count() * inst.mec_count() + request
}

/// Relaxed placement program. Columns are `x[r][m]` (row-major) followed by
/// `y[r]`. Rows: one redundancy row per request, one admission row per
/// request, then four capacity rows per MEC in [`Resource::ALL`] order.
pub fn build_relaxed_program(inst: &ProblemInstance) -> LinearProgram {
    let (nr, nm) = (inst.request_count(), inst.mec_count());
    let n = nr * nm + nr;
    let mut objective = vec![0.0; n];
    let mut names = Vec::with_capacity(n);
    for r in 0..nr {
        for m in 0..nm {
            names.push(format!("x_{r}_{m}"));
        }
    }
    for (r, req) in inst.requests.iter().enumerate() {
        names.push(format!("y_{r}"));
        objective[y_index(inst, r)] = req.reward;
    }

    let mut rows = Vec::with_capacity(2 * nr + 4 * nm);
    for r in 0..nr {
        let mut coeffs: Vec<(usize, f64)> = (0..nm).map(|m| (x_index(inst, r, m), 1.0)).collect();
        coeffs.push((y_index(inst, r), -(inst.replicas[r] as f64)));
        rows.push(Row {
            name: format!("redundancy_{r}"),
            coeffs,
            sense: Sense::Ge,
            rhs: 0.0,
        });
    }
    for r in 0..nr {
        rows.push(Row {
            name: format!("admit_{r}"),
            coeffs: vec![(y_index(inst, r), 1.0)],
            sense: Sense::Le,
            rhs: 1.0,
        });
    }
    for (m, mec) in inst.mecs.iter().enumerate() {
        for res in Resource::ALL {
            rows.push(Row {
                name: format!("{res}_{m}"),
                coeffs: inst
                    .requests
                    .iter()
                    .enumerate()
                    .map(|(r, req)| (x_index(inst, r, m), req.demand(res)))
                    .collect(),
                sense: Sense::Le,
                rhs: mec.capacity(res),
            });
        }
    }
    LinearProgram {
        objective,
        lower: vec![0.0; n],
        upper: vec![1.0; n],
        rows,
        names,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverOptions {
    /// Primal feasibility and reduced-cost tolerance.
    pub tol: f64,
    /// Tableau entries at or below this magnitude are never pivoted on.
    pub pivot_floor: f64,
    /// Defaults to `100·(rows + columns) + 1000` when `None`.
    pub max_iterations: Option<usize>,
    /// Consecutive degenerate pivots before switching to Bland's rule.
    pub bland_threshold: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol: 1e-7,
            pivot_floor: 1e-10,
            max_iterations: None,
            bland_threshold: 50,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LpSolution {
    pub values: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Status {
    Basic,
    AtLower,
    AtUpper,
}

struct Tableau {
    /// `B⁻¹[A | b]`, one row per constraint; last entry of each row is `B⁻¹b`.
    t: Vec<Vec<f64>>,
    basis: Vec<usize>,
    status: Vec<Status>,
    /// Upper bounds of shifted columns (lower bounds are all zero).
    upper: Vec<f64>,
    /// Values of the basic variables.
    beta: Vec<f64>,
    n_struct: usize,
    first_artificial: usize,
    iterations: usize,
    max_iterations: usize,
    opts: SolverOptions,
}

impl Tableau {
    fn ncols(&self) -> usize {
        self.upper.len()
    }

    fn reduced_costs(&self, cost: &[f64]) -> Vec<f64> {
        let mut d = cost.to_vec();
        for (i, row) in self.t.iter().enumerate() {
            let cb = cost[self.basis[i]];
            if cb != 0.0 {
                for (dj, &a) in d.iter_mut().zip(row) {
                    *dj -= cb * a;
                }
            }
        }
        for &b in &self.basis {
            d[b] = 0.0;
        }
        d
    }

    /// Rebuilds basic values from `B⁻¹b` and the nonbasic bound statuses.
    fn refresh_beta(&mut self) {
        let rhs = self.ncols();
        let at_upper: Vec<usize> = (0..self.ncols()).filter(|&j| self.status[j] == Status::AtUpper).collect();
        for (i, row) in self.t.iter().enumerate() {
            let mut v = row[rhs];
            for &j in &at_upper {
                v -= row[j] * self.upper[j];
            }
            self.beta[i] = v;
        }
    }

    fn pivot(&mut self, r: usize, j: usize) {
        let p = self.t[r][j];
        for a in self.t[r].iter_mut() {
            *a /= p;
        }
        let pivot_row = std::mem::take(&mut self.t[r]);
        for (i, row) in self.t.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[j];
            if f != 0.0 {
                for (a, &b) in row.iter_mut().zip(&pivot_row) {
                    *a -= f * b;
                }
                row[j] = 0.0;
            }
        }
        self.t[r] = pivot_row;
    }

    /// Maximizes `cost` over the current basis. `eligible` filters entering columns.
    fn optimize(&mut self, cost: &[f64], eligible: impl Fn(usize) -> bool) -> Result<()> {
        let tol = self.opts.tol;
        let floor = self.opts.pivot_floor;
        let mut d = self.reduced_costs(cost);
        let mut degenerate_run = 0usize;
        let mut bland = false;

        loop {
            // pricing
            let mut entering: Option<(usize, f64)> = None;
            for j in 0..self.ncols() {
                if self.status[j] == Status::Basic || !eligible(j) || self.upper[j] <= 0.0 {
                    continue;
                }
                let score = match self.status[j] {
                    Status::AtLower if d[j] > tol => d[j],
                    Status::AtUpper if d[j] < -tol => -d[j],
                    _ => continue,
                };
                if bland {
                    entering = Some((j, score));
                    break;
                }
                if entering.is_none_or(|(_, best)| score > best) {
                    entering = Some((j, score));
                }
            }
            let Some((j, _)) = entering else {
                return Ok(());
            };

            if self.iterations >= self.max_iterations {
                return Err(Error::IterationLimit(self.max_iterations));
            }
            self.iterations += 1;

            let dir = if self.status[j] == Status::AtLower { 1.0 } else { -1.0 };

            // ratio test
            let mut step = self.upper[j];
            let mut leaving: Option<(usize, Status)> = None;
            for i in 0..self.t.len() {
                let a = self.t[i][j];
                if a.abs() <= floor {
                    continue;
                }
                let alpha = dir * a;
                let bi = self.basis[i];
                let (limit, to) = if alpha > 0.0 {
                    (self.beta[i].max(0.0) / alpha, Status::AtLower)
                } else if self.upper[bi].is_finite() {
                    ((self.upper[bi] - self.beta[i]).max(0.0) / -alpha, Status::AtUpper)
                } else {
                    continue;
                };
                let better = match leaving {
                    None => limit < step,
                    Some((k, _)) => {
                        if limit < step - 1e-12 {
                            true
                        } else if limit <= step + 1e-12 {
                            if bland {
                                bi < self.basis[k]
                            } else {
                                a.abs() > self.t[k][j].abs()
                            }
                        } else {
                            false
                        }
                    }
                };
                if better {
                    step = limit;
                    leaving = Some((i, to));
                }
            }
            if !step.is_finite() {
                return Err(Error::Unbounded);
            }

            if step <= tol {
                degenerate_run += 1;
                if degenerate_run >= self.opts.bland_threshold {
                    bland = true;
                }
            } else {
                degenerate_run = 0;
            }

            for i in 0..self.t.len() {
                let a = self.t[i][j];
                if a != 0.0 {
                    self.beta[i] -= dir * a * step;
                }
            }

            match leaving {
                None => {
                    // bound flip
                    self.status[j] = if dir > 0.0 { Status::AtUpper } else { Status::AtLower };
                }
                Some((r, to)) => {
                    let entering_value = if dir > 0.0 { step } else { self.upper[j] - step };
                    let out = self.basis[r];
                    self.status[out] = to;
                    self.status[j] = Status::Basic;
                    self.basis[r] = j;
                    self.pivot(r, j);
                    self.beta[r] = entering_value;
                    let dj = d[j];
                    for (dk, &a) in d.iter_mut().zip(&self.t[r]) {
                        *dk -= dj * a;
                    }
                    d[j] = 0.0;
                }
            }
        }
    }
}

/// Solves `lp` to optimality. Returns [`Error::Infeasible`] or
/// [`Error::Unbounded`] for programs without a finite optimum.
pub fn solve_lp(lp: &LinearProgram, opts: &SolverOptions) -> Result<LpSolution> {
    lp.validate()?;
    let n = lp.num_vars();
    let m = lp.rows.len();
    for j in 0..n {
        if lp.lower[j] > lp.upper[j] + opts.tol {
            return Err(Error::Infeasible);
        }
    }

    // Shift x = lower + x'. Every row gets one slack; rows whose slack
    // cannot start feasible get an artificial.
    let mut rhs = Vec::with_capacity(m);
    let mut dense = Vec::with_capacity(m);
    for row in &lp.rows {
        let mut a = vec![0.0; n];
        for &(j, v) in &row.coeffs {
            a[j] += v;
        }
        let shift: f64 = a.iter().zip(&lp.lower).map(|(a, l)| a * l).sum();
        rhs.push(row.rhs - shift);
        dense.push(a);
    }
    let slack_sign: Vec<f64> = lp.rows.iter().map(|r| if r.sense == Sense::Le { 1.0 } else { -1.0 }).collect();
    let needs_artificial: Vec<bool> = (0..m).map(|i| rhs[i] * slack_sign[i] < 0.0).collect();
    let n_art = needs_artificial.iter().filter(|&&b| b).count();
    let first_artificial = n + m;
    let ncols = n + m + n_art;

    let mut t = vec![vec![0.0; ncols + 1]; m];
    let mut basis = vec![0; m];
    let mut status = vec![Status::AtLower; ncols];
    let mut upper: Vec<f64> = (0..n).map(|j| (lp.upper[j] - lp.lower[j]).max(0.0)).collect();
    upper.extend(std::iter::repeat_n(f64::INFINITY, m + n_art));
    let mut beta = vec![0.0; m];
    let mut art = first_artificial;
    for i in 0..m {
        // orient the row so its basic column has coefficient +1 and rhs >= 0
        let sign = if needs_artificial[i] { rhs[i].signum() } else { slack_sign[i] };
        let row = &mut t[i];
        for j in 0..n {
            row[j] = sign * dense[i][j];
        }
        row[n + i] = sign * slack_sign[i];
        row[ncols] = sign * rhs[i];
        beta[i] = row[ncols];
        if needs_artificial[i] {
            row[art] = 1.0;
            basis[i] = art;
            status[art] = Status::Basic;
            art += 1;
        } else {
            basis[i] = n + i;
            status[n + i] = Status::Basic;
        }
    }

    let mut tab = Tableau {
        t,
        basis,
        status,
        upper,
        beta,
        n_struct: n,
        first_artificial,
        iterations: 0,
        max_iterations: opts.max_iterations.unwrap_or(100 * (m + ncols) + 1000),
        opts: opts.clone(),
    };

    if n_art > 0 {
        let mut cost = vec![0.0; ncols];
        cost[first_artificial..].iter_mut().for_each(|c| *c = -1.0);
        tab.optimize(&cost, |_| true)?;
        tab.refresh_beta();
        let infeasibility: f64 = (0..m)
            .filter(|&i| tab.basis[i] >= first_artificial)
            .map(|i| tab.beta[i].abs())
            .sum();
        let scale = 1.0 + rhs.iter().fold(0.0f64, |a, b| a.max(b.abs()));
        if infeasibility > opts.tol.sqrt().min(1e-5) * scale {
            return Err(Error::Infeasible);
        }
        // Artificials are pinned at zero; basic ones stay as harmless
        // placeholders for redundant rows.
        for j in first_artificial..ncols {
            tab.upper[j] = 0.0;
        }
    }

    let mut cost = vec![0.0; ncols];
    cost[..n].copy_from_slice(&lp.objective);
    let fa = tab.first_artificial;
    tab.optimize(&cost, |j| j < fa)?;
    tab.refresh_beta();

    let mut values: Vec<f64> = (0..n)
        .map(|j| match tab.status[j] {
            Status::AtUpper => tab.upper[j],
            _ => 0.0,
        })
        .collect();
    for (i, &b) in tab.basis.iter().enumerate() {
        if b < tab.n_struct {
            values[b] = tab.beta[i];
        }
    }
    for j in 0..n {
        values[j] = (values[j] + lp.lower[j]).clamp(lp.lower[j], lp.upper[j]);
    }

    let worst = lp.max_violation(&values);
    let scale = 1.0 + lp.rows.iter().fold(0.0f64, |a, r| a.max(r.rhs.abs()));
    if worst > 1e3 * opts.tol * scale {
        return Err(Error::NumericalInstability(format!(
            "solution violates a row by {worst:e} after {} pivots",
            tab.iterations
        )));
    }

    Ok(LpSolution {
        objective: lp.objective_value(&values),
        values,
        iterations: tab.iterations,
    })
}

/// Builds and solves the relaxed program for `inst`.
pub fn solve_relaxation(inst: &ProblemInstance, opts: &SolverOptions) -> Result<FractionalSolution> {
    let lp = build_relaxed_program(inst);
    let sol = solve_lp(&lp, opts)?;
    Ok(fractional_from_values(inst, &sol.values, sol.objective))
}

pub fn fractional_from_values(inst: &ProblemInstance, values: &[f64], objective: f64) -> FractionalSolution {
    let x = (0..inst.request_count())
        .map(|r| (0..inst.mec_count()).map(|m| values[x_index(inst, r, m)]).collect())
        .collect();
    let y = (0..inst.request_count()).map(|r| values[y_index(inst, r)]).collect();
    FractionalSolution { x, y, objective }
}
