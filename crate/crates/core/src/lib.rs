//! Joint source/relay power allocation for a two-hop decode-and-forward relay
//! whose source harvests RF energy from the relay's own transmissions.
//!
//! * [`model`]: instances, allocations, throughput and constraint checks.
//! * [`closedform`]: the linear-time analytic optimum.
//! * [`oracle`]: independent numeric maximizers.
//! * [`baselines`]: greedy, equal-split and source-only reference policies.

pub mod baselines;
pub mod closedform;
pub mod error;
pub mod model;
pub mod oracle;

pub use error::{Error, Result};
pub use model::{
    check_feasibility, derive_ratios, evaluate_throughput, Allocation, Branch, DerivedRatios,
    Diagnostics, Feasibility, PolicyKind, ReducedProblem, SolveReport, SystemParams,
    FEASIBILITY_TOL,
};
