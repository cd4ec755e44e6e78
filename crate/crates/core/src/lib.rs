//! Availability-aware placement of user-plane function chains on MEC nodes.
//!
//! The pipeline is: generate or load a [`model::ProblemInstance`], solve its
//! LP relaxation ([`lp`]), round the fractional point ([`rounding`]), and
//! restore feasibility greedily ([`repair`]). [`bounds`] reports the
//! concentration guarantees of the rounding step, [`oracle`] solves small
//! instances exactly, [`availsim`] checks the replica rule by Monte Carlo,
//! and [`experiments`] runs the comparison sweeps.
//!
//! Cost of one pipeline run with `N = M·R` placement variables: the dense
//! simplex is `O(N³)` in the worst case, rounding is `O(N)` draws and the
//! greedy repair is `O(M·R)` plus a sort per overloaded MEC.

pub mod error;
pub mod model;
pub mod seed;
pub mod gen;
pub mod lp;
pub mod rounding;
pub mod repair;
pub mod bounds;
pub mod oracle;
pub mod availsim;
pub mod stats;
pub mod experiments;
pub mod config;

pub use error::{Error, Result};
pub use model::{
    evaluate_solution, required_replicas, service_failure_prob, FailureModel, FractionalSolution,
    IntegralSolution, MecNode, ProblemInstance, Resource, ServiceRequest, SolutionMetrics,
};
