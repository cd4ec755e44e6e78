//! Randomized rounding of the relaxed solution.
//!
//! For each request in order, every `x̂[r][m]` is drawn as an independent
//! Bernoulli(`x̃[r][m]`); then, only if at least `Ψ_r` placements came up,
//! `ŷ[r]` is drawn as Bernoulli(`ỹ[r]`). One uniform is consumed per `x`
//! entry and one per gated `y`, from a `ChaCha8Rng` seeded with `seed`.
//!
//! The output always satisfies the redundancy and admission families; the
//! capacity rows may be violated.

use rand::Rng as _;

use crate::error::{Error, Result};
use crate::model::{evaluate_solution, FractionalSolution, IntegralSolution, ProblemInstance, SolutionMetrics};
use crate::seed::rng_from_seed;

/// Probabilities within this distance outside `[0, 1]` are clamped.
pub const CLAMP_TOL: f64 = 1e-7;

fn probability(p: f64, what: &str, r: usize) -> Result<f64> {
    if !(-CLAMP_TOL..=1.0 + CLAMP_TOL).contains(&p) {
        return Err(Error::Domain(format!("{what} probability {p} for request {r} outside [0, 1]")));
    }
    Ok(p.clamp(0.0, 1.0))
}

pub fn randomized_round(frac: &FractionalSolution, inst: &ProblemInstance, seed: u64) -> Result<IntegralSolution> {
    frac.check_dims(inst)?;
    let mut rng = rng_from_seed(seed);
    let mut out = IntegralSolution::empty(inst.request_count(), inst.mec_count());
    for r in 0..inst.request_count() {
        let mut placed = 0u32;
        for m in 0..inst.mec_count() {
            let p = probability(frac.x[r][m], "placement", r)?;
            if rng.random::<f64>() < p {
                out.x[r][m] = true;
                placed += 1;
            }
        }
        if placed >= inst.replicas[r] {
            let q = probability(frac.y[r], "admission", r)?;
            out.y[r] = rng.random::<f64>() < q;
        }
    }
    Ok(out)
}

/// `n_seeds` roundings using seeds `seed0, seed0 + 1, …`, each evaluated.
/// Output order follows the seed order.
pub fn rounding_ensemble(
    frac: &FractionalSolution,
    inst: &ProblemInstance,
    seed0: u64,
    n_seeds: usize,
) -> Result<Vec<(IntegralSolution, SolutionMetrics)>> {
    if n_seeds == 0 {
        return Err(Error::Domain("ensemble needs at least one seed".into()));
    }
    let one = |k: usize| -> Result<(IntegralSolution, SolutionMetrics)> {
        let sol = randomized_round(frac, inst, seed0.wrapping_add(k as u64))?;
        let metrics = evaluate_solution(inst, &sol)?;
        Ok((sol, metrics))
    };
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..n_seeds).into_par_iter().map(one).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n_seeds).map(one).collect()
    }
}

/// Probability that at least `need` of the independent Bernoulli(`probs`)
/// placements succeed. Exact dynamic program over the count.
pub fn gate_probability(probs: &[f64], need: u32) -> f64 {
    let mut dist = vec![0.0; probs.len() + 1];
    dist[0] = 1.0;
    for (k, &p) in probs.iter().enumerate() {
        let p = p.clamp(0.0, 1.0);
        for c in (0..=k + 1).rev() {
            let stay = if c <= k { dist[c] * (1.0 - p) } else { 0.0 };
            let up = if c > 0 { dist[c - 1] * p } else { 0.0 };
            dist[c] = stay + up;
        }
    }
    dist.iter().skip(need as usize).sum()
}

/// Expected rounded reward: `Σ_r ζ_r · ỹ_r · Pr[gate passes for r]`.
pub fn expected_rounded_reward(frac: &FractionalSolution, inst: &ProblemInstance) -> f64 {
    inst.requests
        .iter()
        .enumerate()
        .map(|(r, req)| req.reward * frac.y[r].clamp(0.0, 1.0) * gate_probability(&frac.x[r], inst.replicas[r]))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::tests::{instance, mec, request};

    fn two_mec_instance(psi: u32) -> ProblemInstance {
        instance(
            vec![mec(0, 10.0, 10.0, 10.0, 10.0), mec(1, 10.0, 10.0, 10.0, 10.0)],
            vec![request(0, [1.0; 4], 3.0)],
            vec![psi],
        )
    }

    #[test]
    fn integral_input_always_served() {
        let inst = two_mec_instance(2);
        let frac = FractionalSolution {
            x: vec![vec![1.0, 1.0]],
            y: vec![1.0],
            objective: 3.0,
        };
        for seed in 0..200 {
            let sol = randomized_round(&frac, &inst, seed).unwrap();
            assert!(sol.y[0]);
            assert_eq!(sol.placements(0), 2);
        }
    }

    #[test]
    fn zero_input_gives_empty_solution() {
        let inst = two_mec_instance(1);
        let frac = FractionalSolution {
            x: vec![vec![0.0, 0.0]],
            y: vec![0.0],
            objective: 0.0,
        };
        let sol = randomized_round(&frac, &inst, 9).unwrap();
        assert_eq!(sol, IntegralSolution::empty(1, 2));
    }

    #[test]
    fn gate_blocks_short_placements() {
        let inst = two_mec_instance(2);
        let frac = FractionalSolution {
            x: vec![vec![1.0, 0.5]],
            y: vec![1.0],
            objective: 3.0,
        };
        for seed in 0..500 {
            let sol = randomized_round(&frac, &inst, seed).unwrap();
            assert_eq!(sol.y[0], sol.placements(0) == 2);
        }
    }

    #[test]
    fn tiny_overshoot_clamped_large_rejected() {
        let inst = two_mec_instance(1);
        let ok = FractionalSolution {
            x: vec![vec![1.0 + 5e-8, -5e-8]],
            y: vec![1.0],
            objective: 3.0,
        };
        let sol = randomized_round(&ok, &inst, 1).unwrap();
        assert!(sol.x[0][0] && !sol.x[0][1]);
        let bad = FractionalSolution {
            x: vec![vec![1.1, 0.0]],
            ..ok
        };
        assert!(matches!(randomized_round(&bad, &inst, 1), Err(Error::Domain(_))));
    }

    #[test]
    fn same_seed_same_output() {
        let inst = two_mec_instance(1);
        let frac = FractionalSolution {
            x: vec![vec![0.3, 0.6]],
            y: vec![0.7],
            objective: 2.1,
        };
        assert_eq!(
            randomized_round(&frac, &inst, 77).unwrap(),
            randomized_round(&frac, &inst, 77).unwrap()
        );
    }

    #[test]
    fn ensemble_of_one_matches_single() {
        let inst = two_mec_instance(1);
        let frac = FractionalSolution {
            x: vec![vec![0.3, 0.6]],
            y: vec![0.7],
            objective: 2.1,
        };
        let ens = rounding_ensemble(&frac, &inst, 5, 1).unwrap();
        assert_eq!(ens[0].0, randomized_round(&frac, &inst, 5).unwrap());
        assert!(rounding_ensemble(&frac, &inst, 5, 0).is_err());
    }

    #[test]
    fn gate_probability_small_cases() {
        assert!((gate_probability(&[0.5, 0.5], 1) - 0.75).abs() < 1e-15);
        assert!((gate_probability(&[0.5, 0.5], 2) - 0.25).abs() < 1e-15);
        assert!((gate_probability(&[0.5; 4], 2) - 11.0 / 16.0).abs() < 1e-15);
        assert_eq!(gate_probability(&[0.2], 0), 1.0);
        assert_eq!(gate_probability(&[1.0, 1.0], 2), 1.0);
    }
}
