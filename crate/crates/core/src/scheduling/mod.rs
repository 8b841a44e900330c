//! Related-machine scheduling of identical jobs: mechanisms, approximation
//! sweeps, and lower-bound witness replays.

mod greedy;
mod lower_bound;
mod small_domain;
mod sqrt_mechanisms;
mod templates;
mod two_value;

pub use greedy::{balance_conditions_hold, greedy_on_subset, greedy_optimal};
pub use lower_bound::{
    lower_bound_witnesses, BranchClosure, BranchRecord, ForcedZero, LowerBoundParams,
    LowerBoundReport, SplitChoice, StepRecord,
};
pub use small_domain::{default_payment_constants, two_job_three_value_mechanism};
pub use sqrt_mechanisms::{
    ceil_sqrt, mech_few_jobs, mech_many_jobs, mech_many_jobs_with, SurvivorEstimate,
};
pub use templates::{
    ascending_takeall_auction, descending_elimination_auction,
    descending_then_ascending_single_item,
};
pub use two_value::{
    balanced_two_value_rule, direct_revelation_tree, greedy_mechanism,
    proportional_payment_mechanism, strongly_monotone_check,
};

pub use crate::mechanism::{Mechanism, MechanismTranscript, QueryRecord};

use crate::allocation::{makespan, AllocationRule};
use crate::domain::{DomainProfile, TypeProfile};
use crate::error::{Error, Result};
use crate::oracle::{brute_makespan_optima, OracleBudget};
use crate::rational::Rational;
use crate::util::parallel_max;
use serde::{Deserialize, Serialize};
use std::cmp::Reverse;

/// `n` related machines, `m` identical jobs, finite cost domains.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SchedulingInstance {
    pub n: usize,
    pub m: u64,
    pub domains: DomainProfile,
}

impl SchedulingInstance {
    pub fn new(n: usize, m: u64, domains: DomainProfile) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidInstance("need at least one machine".into()));
        }
        if domains.agents() != n {
            return Err(Error::LengthMismatch { expected: n, got: domains.agents() });
        }
        Ok(SchedulingInstance { n, m, domains })
    }
}

#[derive(Deserialize)]
struct SchedulingInstanceWire {
    n: usize,
    m: u64,
    domains: Vec<Vec<Rational>>,
}

impl<'de> Deserialize<'de> for SchedulingInstance {
    fn deserialize<D: serde::Deserializer<'de>>(
        deserializer: D,
    ) -> std::result::Result<Self, D::Error> {
        let wire = SchedulingInstanceWire::deserialize(deserializer)?;
        let domains = DomainProfile::new(wire.domains).map_err(serde::de::Error::custom)?;
        SchedulingInstance::new(wire.n, wire.m, domains).map_err(serde::de::Error::custom)
    }
}

/// Worst-case makespan ratio of a rule against the exhaustive optimum.
#[derive(Clone, Debug, Serialize)]
pub struct SweepReport {
    pub worst_ratio: Rational,
    pub witness: TypeProfile,
    pub profiles_checked: usize,
}

/// Exact worst-case approximation ratio over every profile of the instance
/// domain. Profiles where both the mechanism and the optimum have makespan
/// zero count as ratio one.
pub fn approx_sweep(
    rule: &AllocationRule,
    instance: &SchedulingInstance,
    budget: &OracleBudget,
) -> Result<SweepReport> {
    let domains = rule.domains();
    if domains != &instance.domains {
        return Err(Error::InvalidInstance("rule and instance domains differ".into()));
    }
    let total = domains.profile_count()?;
    if total > budget.max_profiles {
        return Err(Error::BudgetExceeded(format!(
            "{total} profiles exceed the sweep budget"
        )));
    }
    let score = |index: usize| -> (Rational, Reverse<usize>) {
        let profile = domains.profile_at(index);
        let achieved = makespan(rule.get_by_index(index), &profile).expect("lengths match");
        let optima = brute_makespan_optima(&profile, instance.m).expect("lengths match");
        let best = makespan(&optima[0], &profile).expect("lengths match");
        let ratio = if best.is_zero() {
            if achieved.is_zero() {
                Rational::one()
            } else {
                // zero optimum with positive cost cannot happen for positive
                // domains; treat as an arbitrarily bad witness
                Rational::from(u64::MAX)
            }
        } else {
            &achieved / &best
        };
        (ratio, Reverse(index))
    };
    let (worst_ratio, Reverse(index)) =
        parallel_max(total, &score).ok_or_else(|| Error::InvalidInstance("empty domain".into()))?;
    Ok(SweepReport { worst_ratio, witness: domains.profile_at(index), profiles_checked: total })
}

/// Seeded random sample of the profile space, for instances too large to
/// exhaust. The reported ratio is a lower bound on the true worst case.
pub fn approx_sweep_sampled(
    rule: &AllocationRule,
    instance: &SchedulingInstance,
    samples: usize,
    seed: u64,
) -> Result<SweepReport> {
    use rand::{rngs::StdRng, RngExt, SeedableRng};
    let domains = rule.domains();
    if domains != &instance.domains {
        return Err(Error::InvalidInstance("rule and instance domains differ".into()));
    }
    let total = domains.profile_count()?;
    let mut rng = StdRng::seed_from_u64(seed);
    let mut worst: Option<(Rational, usize)> = None;
    for _ in 0..samples {
        let index = rng.random_range(0..total);
        let profile = domains.profile_at(index);
        let achieved = makespan(rule.get_by_index(index), &profile)?;
        let optima = brute_makespan_optima(&profile, instance.m)?;
        let best = makespan(&optima[0], &profile)?;
        let ratio = if best.is_zero() { Rational::one() } else { &achieved / &best };
        if worst.as_ref().is_none_or(|(w, _)| ratio > *w) {
            worst = Some((ratio, index));
        }
    }
    let (worst_ratio, index) =
        worst.ok_or_else(|| Error::Precondition("sample count must be positive".into()))?;
    Ok(SweepReport { worst_ratio, witness: domains.profile_at(index), profiles_checked: samples })
}
