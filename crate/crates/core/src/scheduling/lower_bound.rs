//! Mechanized case analysis showing that, on square instances with steep
//! three-value domains, no OSP mechanism beats a `sqrt(n)` approximation.
//!
//! The analysis walks every way the first few divergent agents could split
//! their domains. Each branch either closes immediately (an approximation
//! bound is violated, or two forced allocations form a negative two-cycle) or
//! forces the mechanism to withhold jobs from high-revealing agents until the
//! all-high profile overloads the few machines still eligible.

use super::sqrt_mechanisms::ceil_sqrt;
use crate::allocation::{makespan, Allocation};
use crate::domain::TypeProfile;
use crate::error::{Error, Result};
use crate::oracle::compositions;
use crate::rational::Rational;
use serde::Serialize;

/// How an undetermined agent's domain is split at her first divergence.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum SplitChoice {
    /// The agent never diverges in the all-high subtree.
    NoDivergence,
    /// Low isolated: `{low} | {mid, high}` (mid and high stay together).
    LowVersusRest,
    /// Mid isolated: `{mid} | {low, high}`.
    MidVersusRest,
    /// High isolated: `{high} | {low, mid}`.
    HighVersusRest,
    /// Full separation: `{low} | {mid} | {high}`.
    ThreeWay,
}

/// Evidence that a high reveal must carry zero jobs: any allocation giving the
/// agent a job, against the forced zero at `probe`, forms a two-cycle of
/// weight at most `mid - high < 0`.
#[derive(Clone, Debug, Serialize)]
pub struct ForcedZero {
    pub agent: usize,
    pub probe: TypeProfile,
    /// Minimum exact ratio over allocations granting the agent a job at the
    /// probe; at least the square root bound, so such grants are forbidden.
    pub min_ratio: Rational,
}

#[derive(Clone, Debug, Serialize)]
pub struct StepRecord {
    pub agent: usize,
    pub choice: SplitChoice,
    pub forced: Option<ForcedZero>,
}

#[derive(Clone, Debug, Serialize)]
pub enum BranchClosure {
    /// The split keeps mid and high together, so approximation bounds force
    /// full load on the mid side and partial load on the low side: a negative
    /// two-cycle.
    NegativeTwoCycle {
        agent: usize,
        high_profile: TypeProfile,
        low_profile: TypeProfile,
        high_load: u64,
        low_load_max: u64,
        weight_bound: Rational,
        high_side_min_ratio: Rational,
        low_side_min_ratio: Rational,
    },
    /// A never-diverging agent pins one allocation across her whole domain;
    /// every candidate allocation violates the bound on one of two profiles.
    NoDivergenceContradiction {
        agent: usize,
        all_high: TypeProfile,
        probe: TypeProfile,
        min_ratio: Rational,
    },
    /// All forced zeros together overload the surviving machines on the
    /// all-high profile.
    AllHighContradiction {
        zero_agents: Vec<usize>,
        profile: TypeProfile,
        min_ratio: Rational,
    },
}

#[derive(Clone, Debug, Serialize)]
pub struct BranchRecord {
    pub path: Vec<StepRecord>,
    pub closure: BranchClosure,
}

#[derive(Clone, Debug, Serialize)]
pub struct LowerBoundParams {
    pub n: usize,
    pub m: u64,
    pub low: Rational,
    pub mid: Rational,
    pub high: Rational,
    /// The exact square root of `n`, the bound being certified.
    pub root: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct LowerBoundReport {
    pub params: LowerBoundParams,
    pub branches: Vec<BranchRecord>,
    pub all_closed: bool,
}

struct Analysis {
    n: usize,
    m: u64,
    root: Rational,
    low: Rational,
    mid: Rational,
    high: Rational,
    allocations: Vec<Allocation>,
}

impl Analysis {
    fn opt(&self, profile: &TypeProfile) -> Rational {
        self.allocations
            .iter()
            .map(|a| makespan(a, profile).expect("lengths match"))
            .min()
            .expect("allocation set is non-empty")
    }

    /// Minimum exact ratio over allocations satisfying `keep`.
    fn min_ratio_over(
        &self,
        profile: &TypeProfile,
        keep: impl Fn(&Allocation) -> bool,
    ) -> Rational {
        let opt = self.opt(profile);
        self.allocations
            .iter()
            .filter(|a| keep(a))
            .map(|a| &makespan(a, profile).expect("lengths match") / &opt)
            .min()
            .expect("some allocation satisfies the constraint")
    }

    /// all-high except `mid` at `agent`
    fn mid_probe(&self, agent: usize) -> TypeProfile {
        TypeProfile(
            (0..self.n)
                .map(|j| if j == agent { self.mid.clone() } else { self.high.clone() })
                .collect(),
        )
    }

    /// high before `agent`, `value` at `agent`, low after
    fn staircase(&self, agent: usize, value: &Rational) -> TypeProfile {
        TypeProfile(
            (0..self.n)
                .map(|j| {
                    if j < agent {
                        self.high.clone()
                    } else if j == agent {
                        value.clone()
                    } else {
                        self.low.clone()
                    }
                })
                .collect(),
        )
    }

    fn all_high(&self) -> TypeProfile {
        TypeProfile(vec![self.high.clone(); self.n])
    }
}

/// Replays the full first-divergence case analysis for `n = m = c^2` machines
/// and jobs over the domain `{low, mid, high}` with `mid >= m*low` and
/// `high >= m*c*mid`. Agents are taken in divergence order; the domain is
/// homogeneous, so fixing that order to the agent indices loses no generality.
pub fn lower_bound_witnesses(
    n: usize,
    low: &Rational,
    mid: &Rational,
    high: &Rational,
) -> Result<LowerBoundReport> {
    let c = ceil_sqrt(n as u64);
    if c * c != n as u64 {
        return Err(Error::Precondition(format!("n must be a perfect square, got {n}")));
    }
    if !(low < mid && mid < high) || !low.is_positive() {
        return Err(Error::Precondition("need 0 < low < mid < high".into()));
    }
    let m = n as u64;
    if mid < &low.scale(m) || high < &mid.scale(m * c) {
        return Err(Error::Precondition(
            "domain spread too small: need mid >= m*low and high >= m*sqrt(n)*mid".into(),
        ));
    }
    let params = LowerBoundParams {
        n,
        m,
        low: low.clone(),
        mid: mid.clone(),
        high: high.clone(),
        root: c,
    };
    if n == 1 {
        // a single machine takes every job; nothing to certify
        return Ok(LowerBoundReport { params, branches: Vec::new(), all_closed: true });
    }

    let analysis = Analysis {
        n,
        m,
        root: Rational::from(c),
        low: low.clone(),
        mid: mid.clone(),
        high: high.clone(),
        allocations: compositions(m, n),
    };

    let levels = n - c as usize + 1;
    let mut branches = Vec::new();
    let mut all_closed = true;
    let mut path: Vec<StepRecord> = Vec::new();
    walk(&analysis, 0, levels, &mut path, &mut branches, &mut all_closed);
    Ok(LowerBoundReport { params, branches, all_closed })
}

fn walk(
    analysis: &Analysis,
    level: usize,
    levels: usize,
    path: &mut Vec<StepRecord>,
    branches: &mut Vec<BranchRecord>,
    all_closed: &mut bool,
) {
    let agent = level;
    if level == levels {
        // every surviving step forced a zero on its high side
        let zero_agents: Vec<usize> =
            path.iter().filter(|s| s.forced.is_some()).map(|s| s.agent).collect();
        let profile = analysis.all_high();
        let min_ratio = analysis
            .min_ratio_over(&profile, |a| zero_agents.iter().all(|&z| a.load(z) == 0));
        if min_ratio < analysis.root {
            *all_closed = false;
        }
        branches.push(BranchRecord {
            path: path.clone(),
            closure: BranchClosure::AllHighContradiction { zero_agents, profile, min_ratio },
        });
        return;
    }
    let choices = [
        SplitChoice::NoDivergence,
        SplitChoice::LowVersusRest,
        SplitChoice::MidVersusRest,
        SplitChoice::HighVersusRest,
        SplitChoice::ThreeWay,
    ];
    for choice in choices {
        match &choice {
            SplitChoice::NoDivergence => {
                // one allocation serves the agent's whole domain: it either
                // hands her everything (bad on all-high) or something less
                // (bad on the mid probe)
                let all_high = analysis.all_high();
                let probe = analysis.mid_probe(agent);
                let opt_high = analysis.opt(&all_high);
                let opt_probe = analysis.opt(&probe);
                let min_ratio = analysis
                    .allocations
                    .iter()
                    .map(|a| {
                        if a.load(agent) == analysis.m {
                            &makespan(a, &all_high).expect("lengths match") / &opt_high
                        } else {
                            &makespan(a, &probe).expect("lengths match") / &opt_probe
                        }
                    })
                    .min()
                    .expect("allocations exist");
                if min_ratio < analysis.root {
                    *all_closed = false;
                }
                path.push(StepRecord { agent, choice: choice.clone(), forced: None });
                branches.push(BranchRecord {
                    path: path.clone(),
                    closure: BranchClosure::NoDivergenceContradiction {
                        agent,
                        all_high,
                        probe,
                        min_ratio,
                    },
                });
                path.pop();
            }
            SplitChoice::LowVersusRest => {
                // mid and high act alike here: approximation forces the full
                // load on the mid probe and forbids it on the low staircase
                let high_profile = analysis.mid_probe(agent);
                let low_profile = analysis.staircase(agent, &analysis.low);
                let high_side_min_ratio = analysis
                    .min_ratio_over(&high_profile, |a| a.load(agent) < analysis.m);
                let low_side_min_ratio = analysis
                    .min_ratio_over(&low_profile, |a| a.load(agent) == analysis.m);
                if high_side_min_ratio < analysis.root || low_side_min_ratio < analysis.root {
                    *all_closed = false;
                }
                path.push(StepRecord { agent, choice: choice.clone(), forced: None });
                branches.push(BranchRecord {
                    path: path.clone(),
                    closure: BranchClosure::NegativeTwoCycle {
                        agent,
                        high_profile,
                        low_profile,
                        high_load: analysis.m,
                        low_load_max: analysis.m - 1,
                        weight_bound: &analysis.low - &analysis.mid,
                        high_side_min_ratio,
                        low_side_min_ratio,
                    },
                });
                path.pop();
            }
            _ => {
                // mid and high are separated; within the part of the analysis
                // that certifies the bound, a high reveal must carry no jobs
                let forced = if level + 1 < levels {
                    let probe = analysis.staircase(agent, &analysis.mid);
                    let min_ratio =
                        analysis.min_ratio_over(&probe, |a| a.load(agent) >= 1);
                    if min_ratio < analysis.root {
                        *all_closed = false;
                    }
                    Some(ForcedZero { agent, probe, min_ratio })
                } else {
                    None
                };
                path.push(StepRecord { agent, choice: choice.clone(), forced });
                walk(analysis, level + 1, levels, path, branches, all_closed);
                path.pop();
            }
        }
    }
}
