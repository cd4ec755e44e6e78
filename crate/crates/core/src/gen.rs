//! Seeded instance generation.
//!
//! MEC capacities come from one stream; request `k` draws from its own
//! stream derived from `(seed, k)`, so request `k` is the same whatever the
//! total request count.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{FailureModel, MecNode, ProblemInstance, ServiceRequest, UpfKind};
use crate::seed::{derive_seed, rng_from_seed, Rng};

const MEC_STREAM: u64 = u64::MAX;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneratorConfig {
    pub mec_count: usize,
    /// Inclusive integer range of CPU cores per MEC.
    pub cpu_range: [u32; 2],
    /// Inclusive integer range of RAM (GB) per MEC.
    pub ram_range: [u32; 2],
    pub uplink_capacity: f64,
    pub downlink_capacity: f64,
    pub request_count: usize,
    /// Availability classes `1 - ε_r`.
    pub availability_levels: Vec<f64>,
    /// Relative weights of the availability classes; uniform when absent.
    pub availability_weights: Option<Vec<f64>>,
    pub reward_base_range: [f64; 2],
    pub uplink_demand_range: [f64; 2],
    pub downlink_demand_range: [f64; 2],
    pub failure_model: FailureModel,
    pub seed: u64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            mec_count: 10,
            cpu_range: [32, 56],
            ram_range: [32, 80],
            uplink_capacity: 75.0,
            downlink_capacity: 250.0,
            request_count: 50,
            availability_levels: vec![0.99, 0.999, 0.9999],
            availability_weights: None,
            reward_base_range: [6.0, 8.0],
            uplink_demand_range: [6.0, 15.0],
            downlink_demand_range: [20.0, 40.0],
            failure_model: FailureModel::default(),
            seed: 0,
        }
    }
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.mec_count == 0 {
            return bad("mec_count must be positive".into());
        }
        if self.request_count == 0 {
            return bad("request_count must be positive".into());
        }
        for (name, [lo, hi]) in [("cpu_range", self.cpu_range), ("ram_range", self.ram_range)] {
            if lo == 0 || lo > hi {
                return bad(format!("{name} [{lo}, {hi}] must be a nonempty positive range"));
            }
        }
        for (name, [lo, hi]) in [
            ("reward_base_range", self.reward_base_range),
            ("uplink_demand_range", self.uplink_demand_range),
            ("downlink_demand_range", self.downlink_demand_range),
        ] {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return bad(format!("{name} [{lo}, {hi}] is not a nonempty range"));
            }
        }
        if self.reward_base_range[0] < 0.0 {
            return bad("reward_base_range must be nonnegative".into());
        }
        if self.uplink_demand_range[0] <= 0.0 || self.downlink_demand_range[0] <= 0.0 {
            return bad("bandwidth demands must be positive".into());
        }
        if !(self.uplink_capacity > 0.0 && self.downlink_capacity > 0.0) {
            return bad("link capacities must be positive".into());
        }
        if self.availability_levels.is_empty() {
            return bad("availability_levels is empty".into());
        }
        if let Some(&a) = self.availability_levels.iter().find(|&&a| !(a > 0.0 && a < 1.0)) {
            return bad(format!("availability level {a} outside (0, 1)"));
        }
        if let Some(w) = &self.availability_weights {
            if w.len() != self.availability_levels.len() {
                return bad("availability_weights length differs from availability_levels".into());
            }
            if w.iter().any(|&v| !(v >= 0.0 && v.is_finite())) || w.iter().sum::<f64>() <= 0.0 {
                return bad("availability_weights must be nonnegative with a positive sum".into());
            }
        }
        crate::model::service_failure_prob(&self.failure_model)
            .map_err(|e| Error::Config(e.to_string()))?;
        Ok(())
    }
}

/// CPU cores and RAM (GB) for each UPF kind, plus the mandatory/optional split.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UpfCatalog {
    pub entries: Vec<(UpfKind, f64, f64)>,
    /// Always present in a chain.
    pub mandatory: Vec<UpfKind>,
    /// Two distinct kinds are drawn from this set per request.
    pub optional: Vec<UpfKind>,
}

impl Default for UpfCatalog {
    fn default() -> Self {
        use UpfKind::*;
        UpfCatalog {
            entries: vec![
                (Idps, 2.0, 2.0),
                (Fw, 2.0, 3.0),
                (Nat, 1.0, 1.0),
                (Tm, 1.0, 3.0),
                (Voc, 2.0, 2.0),
                (Woc, 1.0, 2.0),
            ],
            mandatory: vec![Nat, Fw],
            optional: vec![Idps, Tm, Voc, Woc],
        }
    }
}

impl UpfCatalog {
    pub fn requirements(&self, kind: UpfKind) -> Option<(f64, f64)> {
        self.entries
            .iter()
            .find(|(k, _, _)| *k == kind)
            .map(|&(_, cpu, ram)| (cpu, ram))
    }

    /// Summed (CPU, RAM) of a chain.
    pub fn chain_demand(&self, chain: &[UpfKind]) -> Result<(f64, f64)> {
        chain.iter().try_fold((0.0, 0.0), |(c, d), &kind| {
            let (cpu, ram) = self
                .requirements(kind)
                .ok_or_else(|| Error::Config(format!("UPF {kind:?} missing from catalog")))?;
            Ok((c + cpu, d + ram))
        })
    }

    fn validate(&self) -> Result<()> {
        if self.optional.len() < 2 {
            return Err(Error::Config("catalog needs at least two optional UPFs".into()));
        }
        for &kind in self.mandatory.iter().chain(&self.optional) {
            match self.requirements(kind) {
                Some((c, d)) if c > 0.0 && d > 0.0 => {}
                _ => return Err(Error::Config(format!("UPF {kind:?} has no positive requirements"))),
            }
        }
        Ok(())
    }
}

fn uniform(rng: &mut Rng, [lo, hi]: [f64; 2]) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.random_range(lo..hi)
    }
}

fn pick_weighted(rng: &mut Rng, weights: Option<&[f64]>, n: usize) -> usize {
    match weights {
        None => rng.random_range(0..n),
        Some(w) => {
            let total: f64 = w.iter().sum();
            let mut u = rng.random::<f64>() * total;
            for (i, &wi) in w.iter().enumerate() {
                if u < wi {
                    return i;
                }
                u -= wi;
            }
            // float leftovers land on the last class with positive weight
            w.iter().rposition(|&wi| wi > 0.0).unwrap_or(n - 1)
        }
    }
}

pub fn generate_mecs(cfg: &GeneratorConfig) -> Vec<MecNode> {
    let mut rng = rng_from_seed(derive_seed(cfg.seed, MEC_STREAM));
    (0..cfg.mec_count)
        .map(|id| MecNode {
            id,
            cpu_capacity: rng.random_range(cfg.cpu_range[0]..=cfg.cpu_range[1]) as f64,
            ram_capacity: rng.random_range(cfg.ram_range[0]..=cfg.ram_range[1]) as f64,
            uplink_capacity: cfg.uplink_capacity,
            downlink_capacity: cfg.downlink_capacity,
        })
        .collect()
}

/// Draws request `id` from its own stream.
pub fn generate_request(cfg: &GeneratorConfig, catalog: &UpfCatalog, id: usize) -> Result<ServiceRequest> {
    let mut rng = rng_from_seed(derive_seed(cfg.seed, id as u64));
    let k = catalog.optional.len();
    let a = rng.random_range(0..k);
    let mut b = rng.random_range(0..k - 1);
    if b >= a {
        b += 1;
    }
    let (first, second) = (a.min(b), a.max(b));
    let mut chain = catalog.mandatory.clone();
    chain.push(catalog.optional[first]);
    chain.push(catalog.optional[second]);
    let (cpu, ram) = catalog.chain_demand(&chain)?;

    let level = cfg.availability_levels
        [pick_weighted(&mut rng, cfg.availability_weights.as_deref(), cfg.availability_levels.len())];
    let failure_threshold = 1.0 - level;
    let uplink = uniform(&mut rng, cfg.uplink_demand_range);
    let downlink = uniform(&mut rng, cfg.downlink_demand_range);
    let base = uniform(&mut rng, cfg.reward_base_range);

    Ok(ServiceRequest {
        id,
        cpu_demand: cpu,
        ram_demand: ram,
        uplink_demand: uplink,
        downlink_demand: downlink,
        failure_threshold,
        reward: base * level,
        upf_chain: chain,
    })
}

pub fn generate(cfg: &GeneratorConfig, catalog: &UpfCatalog) -> Result<ProblemInstance> {
    cfg.validate()?;
    catalog.validate()?;
    let mecs = generate_mecs(cfg);
    let requests = (0..cfg.request_count)
        .map(|id| generate_request(cfg, catalog, id))
        .collect::<Result<Vec<_>>>()?;
    ProblemInstance::new(mecs, requests, cfg.failure_model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use UpfKind::*;

    #[test]
    fn catalog_matches_upf_table() {
        let cat = UpfCatalog::default();
        assert_eq!(cat.requirements(Idps), Some((2.0, 2.0)));
        assert_eq!(cat.requirements(Fw), Some((2.0, 3.0)));
        assert_eq!(cat.requirements(Nat), Some((1.0, 1.0)));
        assert_eq!(cat.requirements(Tm), Some((1.0, 3.0)));
        assert_eq!(cat.requirements(Voc), Some((2.0, 2.0)));
        assert_eq!(cat.requirements(Woc), Some((1.0, 2.0)));
    }

    #[test]
    fn chain_demands() {
        let cat = UpfCatalog::default();
        assert_eq!(cat.chain_demand(&[Nat, Fw, Idps, Tm]).unwrap(), (6.0, 9.0));
        assert_eq!(cat.chain_demand(&[Nat, Fw, Voc, Woc]).unwrap(), (6.0, 8.0));
    }

    #[test]
    fn same_seed_same_instance() {
        let cfg = GeneratorConfig {
            seed: 42,
            ..Default::default()
        };
        let a = generate(&cfg, &UpfCatalog::default()).unwrap();
        let b = generate(&cfg, &UpfCatalog::default()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
    }

    #[test]
    fn request_prefix_stable_across_counts() {
        let small = GeneratorConfig {
            request_count: 30,
            seed: 7,
            ..Default::default()
        };
        let big = GeneratorConfig {
            request_count: 60,
            ..small.clone()
        };
        let a = generate(&small, &UpfCatalog::default()).unwrap();
        let b = generate(&big, &UpfCatalog::default()).unwrap();
        assert_eq!(a.requests[..], b.requests[..30]);
        assert_eq!(a.mecs, b.mecs);
    }

    #[test]
    fn default_shape() {
        let inst = generate(&GeneratorConfig::default(), &UpfCatalog::default()).unwrap();
        assert_eq!(inst.mec_count(), 10);
        for m in &inst.mecs {
            assert_eq!(m.uplink_capacity, 75.0);
            assert_eq!(m.downlink_capacity, 250.0);
            assert!((32.0..=56.0).contains(&m.cpu_capacity) && m.cpu_capacity.fract() == 0.0);
            assert!((32.0..=80.0).contains(&m.ram_capacity) && m.ram_capacity.fract() == 0.0);
        }
        for r in &inst.requests {
            assert_eq!(&r.upf_chain[..2], &[Nat, Fw]);
            assert_ne!(r.upf_chain[2], r.upf_chain[3]);
            assert!((6.0..15.0).contains(&r.uplink_demand));
            assert!((20.0..40.0).contains(&r.downlink_demand));
        }
    }

    #[test]
    fn weighted_levels_respected() {
        let cfg = GeneratorConfig {
            availability_weights: Some(vec![0.0, 1.0, 0.0]),
            request_count: 40,
            ..Default::default()
        };
        let inst = generate(&cfg, &UpfCatalog::default()).unwrap();
        assert!(inst.requests.iter().all(|r| (r.failure_threshold - 0.001).abs() < 1e-12));
        assert!(inst.replicas.iter().all(|&p| p == 2));
    }

    #[test]
    fn invalid_configs_rejected() {
        let cases = [
            GeneratorConfig {
                mec_count: 0,
                ..Default::default()
            },
            GeneratorConfig {
                cpu_range: [56, 32],
                ..Default::default()
            },
            GeneratorConfig {
                availability_levels: vec![1.0],
                ..Default::default()
            },
            GeneratorConfig {
                availability_weights: Some(vec![1.0]),
                ..Default::default()
            },
            GeneratorConfig {
                uplink_demand_range: [0.0, 1.0],
                ..Default::default()
            },
        ];
        for cfg in cases {
            assert!(matches!(cfg.validate(), Err(Error::Config(_))), "{cfg:?}");
        }
    }
}
