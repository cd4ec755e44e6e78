//! Instances, solutions, the availability/replica formulas and the
//! constraint evaluator.
//!
//! A request `r` is *served* (`y[r] = 1`) when copies of its whole UPF chain
//! sit on at least `Ψ_r` distinct MECs (`x[r][m] = 1`). Every copy consumes
//! the request's full demand on the MEC that hosts it.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Slack allowed when comparing a load against a capacity.
pub const CAPACITY_EPS: f64 = 1e-9;

/// Version tag written into instance and solution documents.
pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Resource {
    Cpu,
    Ram,
    Uplink,
    Downlink,
}

impl Resource {
    pub const ALL: [Resource; 4] = [Resource::Cpu, Resource::Ram, Resource::Uplink, Resource::Downlink];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Resource::Cpu => "cpu",
            Resource::Ram => "ram",
            Resource::Uplink => "uplink",
            Resource::Downlink => "downlink",
        }
    }
}

impl fmt::Display for Resource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Resource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "cpu" => Ok(Resource::Cpu),
            "ram" => Ok(Resource::Ram),
            "uplink" | "up" => Ok(Resource::Uplink),
            "downlink" | "dw" | "down" => Ok(Resource::Downlink),
            other => Err(Error::Config(format!("unknown resource `{other}`"))),
        }
    }
}

/// User-plane function kinds that can appear in a request's chain.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum UpfKind {
    Idps,
    Fw,
    Nat,
    Tm,
    Voc,
    Woc,
}

impl UpfKind {
    pub const ALL: [UpfKind; 6] = [
        UpfKind::Idps,
        UpfKind::Fw,
        UpfKind::Nat,
        UpfKind::Tm,
        UpfKind::Voc,
        UpfKind::Woc,
    ];
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MecNode {
    pub id: usize,
    pub cpu_capacity: f64,
    pub ram_capacity: f64,
    pub uplink_capacity: f64,
    pub downlink_capacity: f64,
}

impl MecNode {
    pub fn capacity(&self, resource: Resource) -> f64 {
        match resource {
            Resource::Cpu => self.cpu_capacity,
            Resource::Ram => self.ram_capacity,
            Resource::Uplink => self.uplink_capacity,
            Resource::Downlink => self.downlink_capacity,
        }
    }

    pub fn set_capacity(&mut self, resource: Resource, value: f64) {
        match resource {
            Resource::Cpu => self.cpu_capacity = value,
            Resource::Ram => self.ram_capacity = value,
            Resource::Uplink => self.uplink_capacity = value,
            Resource::Downlink => self.downlink_capacity = value,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ServiceRequest {
    pub id: usize,
    pub cpu_demand: f64,
    pub ram_demand: f64,
    pub uplink_demand: f64,
    pub downlink_demand: f64,
    /// Tolerated probability that the service is unavailable.
    pub failure_threshold: f64,
    pub reward: f64,
    #[serde(default)]
    pub upf_chain: Vec<UpfKind>,
}

impl ServiceRequest {
    pub fn demand(&self, resource: Resource) -> f64 {
        match resource {
            Resource::Cpu => self.cpu_demand,
            Resource::Ram => self.ram_demand,
            Resource::Uplink => self.uplink_demand,
            Resource::Downlink => self.downlink_demand,
        }
    }

    pub fn set_demand(&mut self, resource: Resource, value: f64) {
        match resource {
            Resource::Cpu => self.cpu_demand = value,
            Resource::Ram => self.ram_demand = value,
            Resource::Uplink => self.uplink_demand = value,
            Resource::Downlink => self.downlink_demand = value,
        }
    }
}

/// Independent software (VNF) and host (PM) failure probabilities.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FailureModel {
    pub vnf_failure: f64,
    pub pm_failure: f64,
}

impl Default for FailureModel {
    fn default() -> Self {
        FailureModel {
            vnf_failure: 0.001,
            pm_failure: 0.004,
        }
    }
}

/// Failure probability of one copy of a service on one MEC: `ε_v + ε_p`.
pub fn service_failure_prob(fm: &FailureModel) -> Result<f64> {
    let eps = fm.vnf_failure + fm.pm_failure;
    if !(fm.vnf_failure >= 0.0 && fm.pm_failure >= 0.0) {
        return Err(Error::InvalidModel(format!(
            "failure probabilities must be nonnegative (vnf={}, pm={})",
            fm.vnf_failure, fm.pm_failure
        )));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidModel(format!(
            "combined failure probability {eps} must lie in (0, 1)"
        )));
    }
    Ok(eps)
}

/// Number of distinct MECs that must host request copies so that the
/// probability of all of them failing is at most `failure_threshold`:
/// `⌈ln ε_r / ln ε_m⌉`, never less than one.
pub fn required_replicas(fm: &FailureModel, failure_threshold: f64) -> Result<u32> {
    if !(failure_threshold > 0.0 && failure_threshold < 1.0) {
        return Err(Error::Domain(format!(
            "failure threshold {failure_threshold} outside (0, 1)"
        )));
    }
    let eps_m = service_failure_prob(fm)?;
    let exact = failure_threshold.ln() / eps_m.ln();
    // 1e-9 absorbs rounding when ε_r is an exact power of ε_m.
    let psi = (exact - 1e-9).ceil();
    Ok(psi.max(1.0) as u32)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProblemInstance {
    pub mecs: Vec<MecNode>,
    pub requests: Vec<ServiceRequest>,
    pub failure_model: FailureModel,
    /// Ψ_r per request.
    pub replicas: Vec<u32>,
}

impl ProblemInstance {
    /// Builds an instance, deriving every `Ψ_r` from the failure model.
    pub fn new(mecs: Vec<MecNode>, requests: Vec<ServiceRequest>, failure_model: FailureModel) -> Result<Self> {
        let replicas = requests
            .iter()
            .map(|r| required_replicas(&failure_model, r.failure_threshold))
            .collect::<Result<Vec<_>>>()?;
        let inst = ProblemInstance {
            mecs,
            requests,
            failure_model,
            replicas,
        };
        inst.validate()?;
        Ok(inst)
    }

    pub fn mec_count(&self) -> usize {
        self.mecs.len()
    }

    pub fn request_count(&self) -> usize {
        self.requests.len()
    }

    pub fn validate(&self) -> Result<()> {
        service_failure_prob(&self.failure_model)?;
        if self.replicas.len() != self.requests.len() {
            return Err(Error::DimensionMismatch {
                what: "replica counts",
                expected: self.requests.len(),
                found: self.replicas.len(),
            });
        }
        for (i, mec) in self.mecs.iter().enumerate() {
            if mec.id != i {
                return Err(Error::InvalidModel(format!("MEC at position {i} has id {}", mec.id)));
            }
            for res in Resource::ALL {
                let c = mec.capacity(res);
                if !(c.is_finite() && c > 0.0) {
                    return Err(Error::InvalidModel(format!("MEC {i} has {res} capacity {c}")));
                }
            }
        }
        for (i, req) in self.requests.iter().enumerate() {
            if req.id != i {
                return Err(Error::InvalidModel(format!("request at position {i} has id {}", req.id)));
            }
            for res in Resource::ALL {
                let d = req.demand(res);
                if !(d.is_finite() && d > 0.0) {
                    return Err(Error::InvalidModel(format!("request {i} has {res} demand {d}")));
                }
            }
            if !(req.failure_threshold > 0.0 && req.failure_threshold < 1.0) {
                return Err(Error::InvalidModel(format!(
                    "request {i} failure threshold {} outside (0, 1)",
                    req.failure_threshold
                )));
            }
            if !(req.reward.is_finite() && req.reward >= 0.0) {
                return Err(Error::InvalidModel(format!("request {i} reward {}", req.reward)));
            }
            if self.replicas[i] == 0 {
                return Err(Error::InvalidModel(format!("request {i} has zero replicas")));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        let doc = InstanceDocument {
            version: FORMAT_VERSION,
            mecs: self.mecs.clone(),
            requests: self.requests.clone(),
            failure_model: self.failure_model,
            replicas: Some(self.replicas.clone()),
        };
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    /// Parses an instance document. When `replicas` is absent it is derived
    /// from the failure model.
    pub fn from_json(text: &str) -> Result<Self> {
        let doc: InstanceDocument = serde_json::from_str(text)?;
        if doc.version != FORMAT_VERSION {
            return Err(Error::Config(format!("unsupported instance version {}", doc.version)));
        }
        let inst = match doc.replicas {
            Some(replicas) => ProblemInstance {
                mecs: doc.mecs,
                requests: doc.requests,
                failure_model: doc.failure_model,
                replicas,
            },
            None => return ProblemInstance::new(doc.mecs, doc.requests, doc.failure_model),
        };
        inst.validate()?;
        Ok(inst)
    }
}

#[derive(Serialize, Deserialize)]
struct InstanceDocument {
    version: u32,
    mecs: Vec<MecNode>,
    requests: Vec<ServiceRequest>,
    #[serde(default)]
    failure_model: FailureModel,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    replicas: Option<Vec<u32>>,
}

/// Binary placement `x[r][m]` and admission `y[r]`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntegralSolution {
    pub x: Vec<Vec<bool>>,
    pub y: Vec<bool>,
}

impl IntegralSolution {
    pub fn empty(requests: usize, mecs: usize) -> Self {
        IntegralSolution {
            x: vec![vec![false; mecs]; requests],
            y: vec![false; requests],
        }
    }

    pub fn placements(&self, request: usize) -> usize {
        self.x[request].iter().filter(|&&b| b).count()
    }

    pub fn served(&self) -> impl Iterator<Item = usize> + '_ {
        self.y.iter().enumerate().filter(|(_, &s)| s).map(|(r, _)| r)
    }

    /// Zeroes every placement of `request` and marks it unserved.
    pub fn drop_request(&mut self, request: usize) {
        self.x[request].iter_mut().for_each(|b| *b = false);
        self.y[request] = false;
    }

    pub fn check_dims(&self, inst: &ProblemInstance) -> Result<()> {
        check_dims(self.x.iter().map(Vec::len), self.x.len(), self.y.len(), inst)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&SolutionDocument {
            version: FORMAT_VERSION,
            x: self.x.iter().map(|row| row.iter().map(|&b| b as u8).collect()).collect(),
            y: self.y.iter().map(|&b| b as u8).collect(),
        })?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: SolutionDocument = serde_json::from_str(text)?;
        if doc.version != FORMAT_VERSION {
            return Err(Error::Config(format!("unsupported solution version {}", doc.version)));
        }
        let bit = |v: u8| match v {
            0 => Ok(false),
            1 => Ok(true),
            other => Err(Error::Domain(format!("solution entry {other} is not binary"))),
        };
        let x = doc
            .x
            .into_iter()
            .map(|row| row.into_iter().map(bit).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        let y = doc.y.into_iter().map(bit).collect::<Result<Vec<_>>>()?;
        Ok(IntegralSolution { x, y })
    }
}

#[derive(Serialize, Deserialize)]
struct SolutionDocument {
    version: u32,
    x: Vec<Vec<u8>>,
    y: Vec<u8>,
}

fn check_dims(
    row_lens: impl Iterator<Item = usize>,
    rows: usize,
    y_len: usize,
    inst: &ProblemInstance,
) -> Result<()> {
    let r = inst.request_count();
    if rows != r {
        return Err(Error::DimensionMismatch {
            what: "placement rows",
            expected: r,
            found: rows,
        });
    }
    if y_len != r {
        return Err(Error::DimensionMismatch {
            what: "admission vector",
            expected: r,
            found: y_len,
        });
    }
    for len in row_lens {
        if len != inst.mec_count() {
            return Err(Error::DimensionMismatch {
                what: "placement columns",
                expected: inst.mec_count(),
                found: len,
            });
        }
    }
    Ok(())
}

/// Optimal point of the relaxed program.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FractionalSolution {
    pub x: Vec<Vec<f64>>,
    pub y: Vec<f64>,
    pub objective: f64,
}

impl FractionalSolution {
    pub fn check_dims(&self, inst: &ProblemInstance) -> Result<()> {
        check_dims(self.x.iter().map(Vec::len), self.x.len(), self.y.len(), inst)
    }

    /// `Σ_r x̃[r][m]·demand_r` on one MEC.
    pub fn load(&self, inst: &ProblemInstance, resource: Resource, mec: usize) -> f64 {
        inst.requests
            .iter()
            .zip(&self.x)
            .map(|(req, row)| row[mec] * req.demand(resource))
            .sum()
    }

    /// Sum of `ỹ`, the fractional count of served requests.
    pub fn served_measure(&self) -> f64 {
        self.y.iter().sum()
    }

    /// Per-MEC fractional loads, indexed `[mec][resource]`.
    pub fn loads(&self, inst: &ProblemInstance) -> Vec<[f64; 4]> {
        (0..inst.mec_count())
            .map(|m| Resource::ALL.map(|res| self.load(inst, res, m)))
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ConstraintKind {
    /// A served request with fewer than Ψ_r placements.
    Redundancy { request: usize },
    /// Load above capacity on one MEC.
    Capacity { resource: Resource, mec: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub constraint: ConstraintKind,
    /// Missing replicas for redundancy, load minus capacity for capacity.
    pub overshoot: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolutionMetrics {
    pub total_reward: f64,
    pub served_count: usize,
    /// Absolute loads, indexed `[mec][resource]`.
    pub loads: Vec<[f64; 4]>,
    /// Load over capacity, indexed `[mec][resource]`.
    pub utilization: Vec<[f64; 4]>,
    /// Capacity-weighted mean utilization per resource (total load / total capacity).
    pub aggregate_utilization: [f64; 4],
    pub feasible: bool,
    pub violations: Vec<Violation>,
    /// `(request, mec)` pairs placed for an unserved request.
    pub wasted_placements: Vec<(usize, usize)>,
}

impl SolutionMetrics {
    pub fn max_utilization(&self) -> f64 {
        self.utilization
            .iter()
            .flat_map(|u| u.iter().copied())
            .fold(0.0, f64::max)
    }
}

/// Checks a binary solution against the redundancy and capacity families
/// and reports reward, loads and utilization. Unserved placements still
/// occupy capacity.
pub fn evaluate_solution(inst: &ProblemInstance, sol: &IntegralSolution) -> Result<SolutionMetrics> {
    sol.check_dims(inst)?;
    let mut loads = vec![[0.0f64; 4]; inst.mec_count()];
    let mut violations = Vec::new();
    let mut wasted = Vec::new();
    let mut total_reward = 0.0;
    let mut served_count = 0;

    for (r, req) in inst.requests.iter().enumerate() {
        let placed = sol.placements(r);
        if sol.y[r] {
            total_reward += req.reward;
            served_count += 1;
            let need = inst.replicas[r] as usize;
            if placed < need {
                violations.push(Violation {
                    constraint: ConstraintKind::Redundancy { request: r },
                    overshoot: (need - placed) as f64,
                });
            }
        }
        for (m, &on) in sol.x[r].iter().enumerate() {
            if !on {
                continue;
            }
            if !sol.y[r] {
                wasted.push((r, m));
            }
            for res in Resource::ALL {
                loads[m][res.index()] += req.demand(res);
            }
        }
    }

    let mut utilization = Vec::with_capacity(inst.mec_count());
    let mut total_cap = [0.0f64; 4];
    let mut total_load = [0.0f64; 4];
    for (m, mec) in inst.mecs.iter().enumerate() {
        let mut u = [0.0; 4];
        for res in Resource::ALL {
            let i = res.index();
            let cap = mec.capacity(res);
            u[i] = loads[m][i] / cap;
            total_cap[i] += cap;
            total_load[i] += loads[m][i];
            if loads[m][i] > cap + CAPACITY_EPS {
                violations.push(Violation {
                    constraint: ConstraintKind::Capacity { resource: res, mec: m },
                    overshoot: loads[m][i] - cap,
                });
            }
        }
        utilization.push(u);
    }
    let aggregate_utilization =
        std::array::from_fn(|i| if total_cap[i] > 0.0 { total_load[i] / total_cap[i] } else { 0.0 });

    Ok(SolutionMetrics {
        total_reward,
        served_count,
        loads,
        utilization,
        aggregate_utilization,
        feasible: violations.is_empty(),
        violations,
        wasted_placements: wasted,
    })
}
