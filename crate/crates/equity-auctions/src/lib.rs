//! Equity-constrained single-good auctions.
//!
//! A seller allocates one good among bidders split into a minority and a
//! majority group, subject to an ex-post equity constraint: the total
//! allocation to the minority group must be at least `gamma` times the total
//! allocation to the majority group. This crate provides
//!
//! - [`stochastic`]: the revenue-optimal mechanism under a known product of
//!   regular value distributions, in closed form;
//! - [`robust`]: a distribution-free mechanism whose worst-case regret is
//!   within a factor `e * theta(gamma) <= 1.31` of the best achievable;
//! - [`bounds`]: the regret-bound machinery behind that factor;
//! - [`lp`]: grid-discretized mechanism design LPs with a self-contained
//!   revised simplex solver, used to compute numerical benchmarks;
//! - [`eval`]: revenue/regret evaluation, stress tests under contaminated
//!   distributions, and brute-force oracles;
//! - [`mech`]: mechanism abstractions and feasibility audits (IC/IR/AF/Eq).
//!
//! See the `examples/` directory for one runnable example per capability and
//! the `equity-auctions` binary for a scriptable front end.

pub mod bounds;
pub mod cli;
pub mod dists;
pub mod error;
pub mod eval;
pub mod lp;
pub mod mech;
pub mod quad;
pub mod robust;
pub mod stochastic;
pub mod util;

pub use bounds::BoundsSummary;
pub use dists::{
    DiscreteJoint, DistributionConfig, GroupStructure, JointValueDistribution, RegularMarginal,
};
pub use error::{Error, Result};
pub use eval::EvaluationReport;
pub use mech::{AuditReport, Mechanism, Outcome, ValueProfile};
pub use robust::RobustMechanism;
pub use stochastic::StochasticMechanism;
