//! Single-winner clock auctions. One state machine covers three protocols:
//! a pure descending elimination (last survivor takes every job), a pure
//! ascending auction (first acceptance takes every job), and the hybrid that
//! eliminates machines top-down until two remain and then lets an ascending
//! clock pick the winner.

use crate::allocation::Allocation;
use crate::domain::DomainProfile;
use crate::error::{Error, Result};
use crate::imptree::ImplementationTree;
use crate::mechanism::{expand_protocol, AdaptiveProtocol, Mechanism, Step};
use crate::rational::Rational;

#[derive(Clone)]
struct ClockAuction<'a> {
    domains: &'a DomainProfile,
    jobs: u64,
    /// Descending eliminations stop once this many candidates remain.
    stop_at: usize,
    candidate: Vec<bool>,
    lo: Vec<usize>,
    hi: Vec<usize>,
    winner: Option<usize>,
}

impl<'a> ClockAuction<'a> {
    fn new(domains: &'a DomainProfile, jobs: u64, stop_at: usize) -> Self {
        let n = domains.agents();
        ClockAuction {
            domains,
            jobs,
            stop_at,
            candidate: vec![true; n],
            lo: vec![0; n],
            hi: domains.domains().iter().map(|d| d.len() - 1).collect(),
            winner: None,
        }
    }

    fn remaining(&self) -> usize {
        self.candidate.iter().filter(|&&c| c).count()
    }

    fn prize(&self, winner: usize) -> Allocation {
        let mut loads = vec![0u64; self.domains.agents()];
        loads[winner] = self.jobs;
        Allocation(loads)
    }
}

impl AdaptiveProtocol for ClockAuction<'_> {
    fn current_domain(&self, agent: usize) -> &[Rational] {
        &self.domains.domain(agent)[self.lo[agent]..=self.hi[agent]]
    }

    fn next(&self) -> Result<Step> {
        if let Some(winner) = self.winner {
            return Ok(Step::Done(self.prize(winner)));
        }
        let remaining = self.remaining();
        if remaining == 1 {
            let survivor = self.candidate.iter().position(|&c| c).expect("one candidate");
            return Ok(Step::Done(self.prize(survivor)));
        }
        if remaining > self.stop_at {
            // descending clock: highest current upper bound, lowest index first
            let mut best: Option<(usize, &Rational)> = None;
            for agent in 0..self.candidate.len() {
                if !self.candidate[agent] {
                    continue;
                }
                let price = &self.domains.domain(agent)[self.hi[agent]];
                if best.is_none_or(|(_, p)| price > p) {
                    best = Some((agent, price));
                }
            }
            let (agent, price) = best.expect("candidates remain");
            return Ok(Step::Ask { agent, value: price.clone() });
        }
        // ascending clock: lowest current lower bound, lowest index first
        let mut best: Option<(usize, &Rational)> = None;
        for agent in 0..self.candidate.len() {
            if !self.candidate[agent] {
                continue;
            }
            let price = &self.domains.domain(agent)[self.lo[agent]];
            if best.is_none_or(|(_, p)| price < p) {
                best = Some((agent, price));
            }
        }
        let (agent, price) = best.expect("candidates remain");
        Ok(Step::Ask { agent, value: price.clone() })
    }

    fn answer(&mut self, agent: usize, asked: &Rational, yes: bool) -> Result<()> {
        let descending = self.remaining() > self.stop_at;
        let position = self
            .domains
            .domain(agent)
            .binary_search(asked)
            .map_err(|_| Error::InvariantViolation("asked price outside the domain".into()))?;
        if descending {
            if yes {
                self.candidate[agent] = false;
                self.lo[agent] = position;
                self.hi[agent] = position;
            } else {
                debug_assert!(self.hi[agent] > self.lo[agent]);
                self.hi[agent] -= 1;
            }
        } else if yes {
            self.winner = Some(agent);
            self.lo[agent] = position;
            self.hi[agent] = position;
        } else {
            debug_assert!(self.lo[agent] < self.hi[agent]);
            self.lo[agent] += 1;
        }
        Ok(())
    }
}

fn build(domains: &DomainProfile, jobs: u64, stop_at: usize) -> Result<Mechanism> {
    if domains.agents() == 0 {
        return Err(Error::InvalidInstance("no agents".into()));
    }
    let auction = ClockAuction::new(domains, jobs, stop_at);
    let spec = expand_protocol(auction)?;
    let tree = ImplementationTree::from_spec(domains.clone(), spec)?;
    Mechanism::from_tree(tree)
}

/// Descending clock; machines accepting the current top price are eliminated
/// with zero jobs, and the last survivor receives all `jobs`.
pub fn descending_elimination_auction(domains: &DomainProfile, jobs: u64) -> Result<Mechanism> {
    build(domains, jobs, 1)
}

/// Ascending clock; the first machine to accept the current bottom price
/// receives all `jobs`.
pub fn ascending_takeall_auction(domains: &DomainProfile, jobs: u64) -> Result<Mechanism> {
    build(domains, jobs, domains.agents().max(1))
}

/// Descending eliminations until two candidates remain, then an ascending
/// clock between them; the winner receives the single item.
pub fn descending_then_ascending_single_item(domains: &DomainProfile) -> Result<Mechanism> {
    build(domains, 1, 2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cmon::{check_osp, check_two_cycles};
    use crate::domain::TypeProfile;
    use crate::rational::rat;

    #[test]
    fn descending_template_keeps_the_last_survivor() {
        let domains = DomainProfile::homogeneous(3, vec![rat(1), rat(9), rat(81)]).unwrap();
        let mech = descending_elimination_auction(&domains, 3).unwrap();
        // on the all-high profile the first two acceptances eliminate agents
        // 0 and 1, so agent 2 carries all three jobs
        let allocation =
            mech.allocation_for(&TypeProfile(vec![rat(81), rat(81), rat(81)])).unwrap();
        assert_eq!(allocation, &Allocation(vec![0, 0, 3]));
        assert!(check_two_cycles(&mech.rule, &mech.tree).unwrap().holds);
        assert!(check_osp(&mech.rule, &mech.tree).unwrap().is_osp());
    }

    #[test]
    fn ascending_template_hands_everything_to_the_first_acceptor() {
        let domains = DomainProfile::homogeneous(3, vec![rat(1), rat(9), rat(81)]).unwrap();
        let mech = ascending_takeall_auction(&domains, 3).unwrap();
        let allocation = mech.allocation_for(&TypeProfile(vec![rat(1), rat(1), rat(1)])).unwrap();
        assert_eq!(allocation, &Allocation(vec![3, 0, 0]));
        assert!(check_two_cycles(&mech.rule, &mech.tree).unwrap().holds);
    }

    #[test]
    fn single_item_auction_selects_a_minimum_cost_agent() {
        let domains = DomainProfile::new(vec![
            vec![rat(1), rat(2), rat(3), rat(4)],
            vec![rat(1), rat(3), rat(4)],
            vec![rat(1), rat(3), rat(4)],
        ])
        .unwrap();
        let mech = descending_then_ascending_single_item(&domains).unwrap();
        for profile in mech.rule.domains().profiles() {
            let allocation = mech.allocation_for(&profile).unwrap();
            assert_eq!(allocation.total(), 1);
            let winner = allocation.selected().next().unwrap();
            let min = profile.iter().min().unwrap();
            assert_eq!(profile.get(winner), min, "profile {profile:?}");
        }
    }
}
