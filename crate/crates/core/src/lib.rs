//! A workbench for constructing, executing, and mechanically verifying
//! obviously strategyproof (OSP) mechanisms through cycle monotonicity.
//!
//! The pieces:
//!
//! - exact rational arithmetic, finite type domains, allocations, payments;
//! - implementation trees (extensive-form querying protocols) with current
//!   domains, separating events, validation, and exhaustive enumeration;
//! - per-agent incentive graphs, negative-cycle detection with certificates,
//!   and shortest-path payment synthesis;
//! - scheduling mechanisms for related machines: exact two-value mechanisms,
//!   descending/ascending hybrids with square-root guarantees, the exact
//!   two-agent three-value construction, clock-auction templates, and a
//!   mechanized lower-bound case analysis;
//! - set-system procurement: selectability, the feasibility characterization
//!   for exactly optimal OSP mechanisms, and the adaptive optimal protocol;
//! - deliberately naive brute-force oracles cross-checking all of the above.

pub mod allocation;
pub mod cmon;
pub mod domain;
pub mod error;
pub mod imptree;
pub mod mechanism;
pub mod oracle;
pub mod rational;
pub mod scheduling;
pub mod setsystem;
mod util;

pub use allocation::{makespan, social_cost, Allocation, AllocationRule, PaymentTable};
pub use domain::{DomainProfile, TypeProfile};
pub use error::{Error, Result};
pub use imptree::{ImplementationTree, LeafOutcome, NodeId, SeparatingEvent, TreeSpec};
pub use mechanism::{Mechanism, MechanismTranscript, QueryRecord};
pub use rational::{rational_cmp, Rational};
