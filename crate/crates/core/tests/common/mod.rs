#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use vnfplace::gen::{generate, GeneratorConfig, UpfCatalog};
use vnfplace::lp::{LinearProgram, Row, Sense};
use vnfplace::ProblemInstance;

/// Solves `A v = b` by Gaussian elimination with partial pivoting.
fn solve_square(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-9 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            if f != 0.0 {
                for k in col..n {
                    a[row][k] -= f * a[col][k];
                }
                b[row] -= f * b[col];
            }
        }
    }
    let mut v = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|k| a[i][k] * v[k]).sum();
        v[i] = (b[i] - s) / a[i][i];
    }
    Some(v)
}

fn next_subset(idx: &mut [usize], total: usize) -> bool {
    let k = idx.len();
    for i in (0..k).rev() {
        if idx[i] < total - k + i {
            idx[i] += 1;
            for j in i + 1..k {
                idx[j] = idx[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Best objective over all basic feasible points, or `None` when infeasible.
/// Every variable must have finite bounds, so the region is a polytope.
pub fn vertex_optimum(lp: &LinearProgram) -> Option<f64> {
    let n = lp.num_vars();
    if n == 0 {
        return lp.rows.iter().all(|r| r.violation(&[]) <= 1e-9).then_some(0.0);
    }
    // hyperplanes: rows first, then lower and upper bounds
    let mut planes: Vec<(Vec<f64>, f64)> = Vec::new();
    for row in &lp.rows {
        let mut a = vec![0.0; n];
        for &(j, c) in &row.coeffs {
            a[j] += c;
        }
        planes.push((a, row.rhs));
    }
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        planes.push((e.clone(), lp.lower[j]));
        planes.push((e, lp.upper[j]));
    }
    let mut best: Option<f64> = None;
    let mut idx: Vec<usize> = (0..n).collect();
    loop {
        let a = idx.iter().map(|&i| planes[i].0.clone()).collect();
        let b = idx.iter().map(|&i| planes[i].1).collect();
        if let Some(v) = solve_square(a, b) {
            let inside = (0..n).all(|j| v[j] >= lp.lower[j] - 1e-7 && v[j] <= lp.upper[j] + 1e-7)
                && lp.rows.iter().all(|r| r.violation(&v) <= 1e-7);
            if inside {
                let z = lp.objective_value(&v);
                best = Some(best.map_or(z, |b: f64| b.max(z)));
            }
        }
        if !next_subset(&mut idx, planes.len()) {
            break;
        }
    }
    best
}

/// Random program with 1..=6 variables in boxes and up to 4 mixed rows.
pub fn random_program(seed: u64) -> LinearProgram {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(1..=6);
    let objective: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..5.0)).collect();
    let mut lp = LinearProgram::with_unit_box(objective);
    for j in 0..n {
        let lo = if rng.random_bool(0.3) { rng.random_range(-2.0..0.5) } else { 0.0 };
        lp.lower[j] = lo;
        lp.upper[j] = lo + rng.random_range(0.0..4.0);
    }
    for i in 0..rng.random_range(0..=4) {
        let mut coeffs = Vec::new();
        for j in 0..n {
            if rng.random_bool(0.7) {
                coeffs.push((j, rng.random_range(-2.0..3.0)));
            }
        }
        let sense = if rng.random_bool(0.75) { Sense::Le } else { Sense::Ge };
        let rhs = match sense {
            Sense::Le => rng.random_range(0.0..6.0),
            Sense::Ge => rng.random_range(-2.0..2.0),
        };
        lp.rows.push(Row {
            name: format!("c{i}"),
            coeffs,
            sense,
            rhs,
        });
    }
    lp
}

/// Small generated instance with scaled-down, often binding capacities.
pub fn small_instance(seed: u64, max_requests: usize, max_mecs: usize) -> ProblemInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xA5A5);
    let cpu_lo = rng.random_range(6..=20);
    let ram_lo = rng.random_range(8..=24);
    let cfg = GeneratorConfig {
        mec_count: rng.random_range(1..=max_mecs),
        request_count: rng.random_range(1..=max_requests),
        cpu_range: [cpu_lo, cpu_lo + 10],
        ram_range: [ram_lo, ram_lo + 10],
        uplink_capacity: rng.random_range(15.0..60.0),
        downlink_capacity: rng.random_range(60.0..200.0),
        seed,
        ..Default::default()
    };
    generate(&cfg, &UpfCatalog::default()).expect("valid generator config")
}
