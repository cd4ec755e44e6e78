//! Monte Carlo availability of placed requests.
//!
//! In every trial each copy of a request fails independently with the
//! per-MEC service failure probability `ε_m`; the request is delivered when
//! at least one copy survives. Copy `j` of request `r` draws from its own
//! stream, so adding a copy never turns a delivered trial into a lost one.

use std::io::Write;

use rand::Rng as _;
use serde::{Deserialize, Serialize};
use statrs::distribution::{Beta, ContinuousCDF};

use crate::error::{Error, Result};
use crate::model::{service_failure_prob, IntegralSolution, ProblemInstance};
use crate::seed::{derive_seed, rng_from_seed};

/// One-sided confidence used for the pass/fail verdicts.
pub const VERDICT_CONFIDENCE: f64 = 0.99;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RequestAvailability {
    pub request: usize,
    pub served: bool,
    pub required_replicas: u32,
    pub placements: usize,
    pub trials: u64,
    pub delivered: u64,
    pub availability: f64,
    /// Required availability `1 - ε_r`.
    pub threshold: f64,
    /// Lower confidence bound on the failure rate.
    pub failure_rate_lower: f64,
    /// Data consistent with `availability >= threshold` at the verdict confidence.
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AvailabilityReport {
    pub trials: u64,
    pub seed: u64,
    pub service_failure: f64,
    pub requests: Vec<RequestAvailability>,
    /// Delivered over attempted trials, across served requests.
    pub packet_delivery_ratio: f64,
    /// Share of all requests served at MECs.
    pub served_fraction: f64,
}

/// Delivered trials for `copies` independent copies failing with `eps` each.
pub fn simulate_copies(copies: usize, eps: f64, trials: u64, seed: u64) -> u64 {
    if copies == 0 {
        return 0;
    }
    let mut streams: Vec<_> = (0..copies)
        .map(|j| rng_from_seed(derive_seed(seed, j as u64)))
        .collect();
    let mut delivered = 0;
    for _ in 0..trials {
        let mut all_failed = true;
        // every stream advances once per trial
        for rng in streams.iter_mut() {
            if rng.random::<f64>() >= eps {
                all_failed = false;
            }
        }
        delivered += (!all_failed) as u64;
    }
    delivered
}

/// One-sided Clopper-Pearson lower bound on a binomial rate.
pub fn rate_lower_bound(successes: u64, trials: u64, confidence: f64) -> f64 {
    if successes == 0 {
        return 0.0;
    }
    let beta = Beta::new(successes as f64, (trials - successes + 1) as f64).expect("positive shape parameters");
    beta.inverse_cdf(1.0 - confidence)
}

/// One-sided Clopper-Pearson upper bound on a binomial rate.
pub fn rate_upper_bound(successes: u64, trials: u64, confidence: f64) -> f64 {
    if successes == trials {
        return 1.0;
    }
    let beta = Beta::new((successes + 1) as f64, (trials - successes) as f64).expect("positive shape parameters");
    beta.inverse_cdf(confidence)
}

pub fn simulate_availability(
    inst: &ProblemInstance,
    sol: &IntegralSolution,
    trials: u64,
    seed: u64,
) -> Result<AvailabilityReport> {
    if trials < 1000 {
        return Err(Error::Domain(format!("need at least 1000 trials, got {trials}")));
    }
    sol.check_dims(inst)?;
    let eps = service_failure_prob(&inst.failure_model)?;

    let one = |r: usize| -> RequestAvailability {
        let placements = sol.placements(r);
        let delivered = simulate_copies(placements, eps, trials, derive_seed(seed, r as u64));
        let failures = trials - delivered;
        let failure_rate_lower = rate_lower_bound(failures, trials, VERDICT_CONFIDENCE);
        RequestAvailability {
            request: r,
            served: sol.y[r],
            required_replicas: inst.replicas[r],
            placements,
            trials,
            delivered,
            availability: delivered as f64 / trials as f64,
            threshold: 1.0 - inst.requests[r].failure_threshold,
            failure_rate_lower,
            pass: failure_rate_lower <= inst.requests[r].failure_threshold,
        }
    };
    #[cfg(feature = "parallel")]
    let requests: Vec<RequestAvailability> = {
        use rayon::prelude::*;
        (0..inst.request_count()).into_par_iter().map(one).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let requests: Vec<RequestAvailability> = (0..inst.request_count()).map(one).collect();

    let served: Vec<&RequestAvailability> = requests.iter().filter(|r| r.served).collect();
    let packet_delivery_ratio = if served.is_empty() {
        0.0
    } else {
        served.iter().map(|r| r.delivered as f64).sum::<f64>() / (served.len() as f64 * trials as f64)
    };
    let served_fraction = if requests.is_empty() {
        0.0
    } else {
        served.len() as f64 / requests.len() as f64
    };
    Ok(AvailabilityReport {
        trials,
        seed,
        service_failure: eps,
        requests,
        packet_delivery_ratio,
        served_fraction,
    })
}

/// CSV with one row per request.
pub fn write_availability_csv<W: Write>(report: &AvailabilityReport, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "request",
        "served",
        "required_replicas",
        "placements",
        "trials",
        "delivered",
        "availability",
        "threshold",
        "pass",
    ])?;
    for r in &report.requests {
        w.write_record([
            r.request.to_string(),
            r.served.to_string(),
            r.required_replicas.to_string(),
            r.placements.to_string(),
            r.trials.to_string(),
            r.delivered.to_string(),
            format!("{:.8}", r.availability),
            format!("{:.8}", r.threshold),
            if r.pass { "pass" } else { "fail" }.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
