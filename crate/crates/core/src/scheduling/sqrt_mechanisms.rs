//! Descending/ascending hybrid mechanisms: a descending clock eliminates slow
//! machines until `ceil(sqrt(n))` survive, then an ascending clock commits the
//! fast ones. One variant computes an exact optimum over the survivors when
//! jobs are plentiful; the other hands out price-capped job blocks when jobs
//! are scarce.

use super::greedy::greedy_on_subset;
use super::SchedulingInstance;
use crate::allocation::Allocation;
use crate::domain::DomainProfile;
use crate::error::{Error, Result};
use crate::imptree::ImplementationTree;
use crate::mechanism::{expand_protocol, AdaptiveProtocol, Mechanism, Step};
use crate::rational::Rational;

/// Exact integer `ceil(sqrt(n))`.
pub fn ceil_sqrt(n: u64) -> u64 {
    let s = n.isqrt();
    if s * s < n {
        s + 1
    } else {
        s
    }
}

/// How the ascending phase estimates the surviving machines' unknown costs
/// when computing the optimum over survivors.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum SurvivorEstimate {
    /// Cheapest cost revealed by a machine eliminated in the descending phase
    /// (the last elimination price); falls back to the surviving upper bounds
    /// when nobody was eliminated.
    #[default]
    CheapestEliminated,
    /// Highest current upper bound among the surviving machines.
    HighestSurvivorBound,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Variant {
    ManyJobs(SurvivorEstimate),
    FewJobs,
}

#[derive(Clone)]
struct HybridAuction<'a> {
    domains: &'a DomainProfile,
    m: u64,
    root: u64,
    variant: Variant,
    alive: Vec<bool>,
    /// Current domain of agent `i` is `domains[i][lo[i]..=hi[i]]`.
    lo: Vec<usize>,
    hi: Vec<usize>,
    /// Exact costs revealed by eliminated machines.
    revealed: Vec<Option<Rational>>,
    /// Last price asked during the descending phase.
    last_descending_price: Option<Rational>,
    jobs_left: u64,
    assigned: Vec<u64>,
    result: Option<Allocation>,
}

impl<'a> HybridAuction<'a> {
    fn new(domains: &'a DomainProfile, m: u64, variant: Variant) -> Self {
        let n = domains.agents();
        HybridAuction {
            domains,
            m,
            root: ceil_sqrt(n as u64),
            variant,
            alive: vec![true; n],
            lo: vec![0; n],
            hi: domains.domains().iter().map(|d| d.len() - 1).collect(),
            revealed: vec![None; n],
            last_descending_price: None,
            jobs_left: m,
            assigned: vec![0; n],
            result: None,
        }
    }

    fn alive_count(&self) -> usize {
        self.alive.iter().filter(|&&a| a).count()
    }

    fn in_descending_phase(&self) -> bool {
        self.alive_count() as u64 > self.root
    }

    fn upper(&self, agent: usize) -> &Rational {
        &self.domains.domain(agent)[self.hi[agent]]
    }

    fn lower(&self, agent: usize) -> &Rational {
        &self.domains.domain(agent)[self.lo[agent]]
    }

    /// Highest current upper bound, lowest index on ties.
    fn descending_target(&self) -> (usize, Rational) {
        let mut best: Option<(usize, &Rational)> = None;
        for agent in 0..self.alive.len() {
            if !self.alive[agent] {
                continue;
            }
            let price = self.upper(agent);
            if best.is_none_or(|(_, p)| price > p) {
                best = Some((agent, price));
            }
        }
        let (agent, price) = best.expect("descending phase runs only with alive machines");
        (agent, price.clone())
    }

    /// Lowest current lower bound, lowest index on ties.
    fn ascending_target(&self) -> (usize, Rational) {
        let mut best: Option<(usize, &Rational)> = None;
        for agent in 0..self.alive.len() {
            if !self.alive[agent] {
                continue;
            }
            let price = self.lower(agent);
            if best.is_none_or(|(_, p)| price < p) {
                best = Some((agent, price));
            }
        }
        let (agent, price) = best.expect("ascending phase runs only with alive machines");
        (agent, price.clone())
    }

    fn survivor_estimate(&self, estimate: SurvivorEstimate) -> Rational {
        let highest_survivor = || {
            (0..self.alive.len())
                .filter(|&a| self.alive[a])
                .map(|a| self.upper(a).clone())
                .max()
                .expect("some machine survives")
        };
        match estimate {
            SurvivorEstimate::CheapestEliminated => self
                .revealed
                .iter()
                .flatten()
                .min()
                .cloned()
                .unwrap_or_else(highest_survivor),
            SurvivorEstimate::HighestSurvivorBound => highest_survivor(),
        }
    }

    fn grant_cap(&self) -> Rational {
        // price anchor for the few-jobs grant rule
        match &self.last_descending_price {
            Some(p) => p.clone(),
            None => (0..self.domains.agents())
                .map(|a| self.domains.high(a).clone())
                .max()
                .expect("instances have at least one agent"),
        }
    }
}

impl AdaptiveProtocol for HybridAuction<'_> {
    fn current_domain(&self, agent: usize) -> &[Rational] {
        &self.domains.domain(agent)[self.lo[agent]..=self.hi[agent]]
    }

    fn next(&self) -> Result<Step> {
        if let Some(result) = &self.result {
            return Ok(Step::Done(result.clone()));
        }
        if self.in_descending_phase() {
            let (agent, price) = self.descending_target();
            return Ok(Step::Ask { agent, value: price });
        }
        match self.variant {
            Variant::ManyJobs(_) => {
                let (agent, price) = self.ascending_target();
                Ok(Step::Ask { agent, value: price })
            }
            Variant::FewJobs => {
                if self.alive_count() == 0 {
                    return Ok(Step::Done(Allocation(self.assigned.clone())));
                }
                let (agent, price) = self.ascending_target();
                Ok(Step::Ask { agent, value: price })
            }
        }
    }

    fn answer(&mut self, agent: usize, asked: &Rational, yes: bool) -> Result<()> {
        if self.in_descending_phase() {
            self.last_descending_price = Some(asked.clone());
            if yes {
                self.alive[agent] = false;
                self.revealed[agent] = Some(asked.clone());
                self.lo[agent] = self.hi[agent];
            } else {
                debug_assert!(self.hi[agent] > self.lo[agent]);
                self.hi[agent] -= 1;
            }
            return Ok(());
        }
        if !yes {
            debug_assert!(self.lo[agent] < self.hi[agent]);
            self.lo[agent] += 1;
            return Ok(());
        }
        match self.variant {
            Variant::ManyJobs(estimate) => {
                let survivors: Vec<usize> =
                    (0..self.alive.len()).filter(|&a| self.alive[a]).collect();
                let fill = self.survivor_estimate(estimate);
                let mut costs: Vec<Rational> =
                    survivors.iter().map(|_| fill.clone()).collect();
                let slot = survivors.iter().position(|&a| a == agent).expect("asked agent is alive");
                costs[slot] = asked.clone();
                let profile = crate::domain::TypeProfile(
                    (0..self.domains.agents())
                        .map(|a| match survivors.iter().position(|&s| s == a) {
                            Some(k) => costs[k].clone(),
                            None => Rational::one(),
                        })
                        .collect(),
                );
                let allocation = greedy_on_subset(&profile, &survivors, self.m)?;
                self.result = Some(allocation);
            }
            Variant::FewJobs => {
                let remaining = self.alive_count() as u64;
                let quota = self.jobs_left.div_ceil(remaining);
                let cap = self.grant_cap();
                let budget = cap.scale(self.root);
                if asked.scale(quota) > budget {
                    return Err(Error::InvariantViolation(
                        "grant quota exceeds the price cap; job count is too large".into(),
                    ));
                }
                let mut grant = self.jobs_left;
                while grant > quota && asked.scale(grant) > budget {
                    grant -= 1;
                }
                self.assigned[agent] = grant;
                self.jobs_left -= grant;
                self.alive[agent] = false;
                self.lo[agent] = self.hi[agent].min(
                    self.domains.domain(agent).binary_search(asked).expect("asked from domain"),
                );
            }
        }
        Ok(())
    }
}

fn validate_positive_costs(instance: &SchedulingInstance) -> Result<()> {
    if instance.m > 0
        && instance.domains.domains().iter().any(|d| d.iter().any(|v| !v.is_positive()))
    {
        return Err(Error::NonPositiveCost);
    }
    Ok(())
}

fn trivial_if_degenerate(instance: &SchedulingInstance) -> Option<Result<Mechanism>> {
    let n = instance.domains.agents();
    if instance.m == 0 || n == 1 {
        let allocation = if n == 1 {
            Allocation(vec![instance.m])
        } else {
            Allocation::zeros(n)
        };
        let build = ImplementationTree::trivial(instance.domains.clone(), allocation)
            .and_then(Mechanism::from_tree);
        return Some(build);
    }
    None
}

/// Hybrid mechanism for plentiful jobs: the first ascending acceptance fixes
/// an estimated survivor profile and assigns the exact greedy optimum on it.
pub fn mech_many_jobs(instance: &SchedulingInstance) -> Result<Mechanism> {
    mech_many_jobs_with(instance, SurvivorEstimate::default())
}

pub fn mech_many_jobs_with(
    instance: &SchedulingInstance,
    estimate: SurvivorEstimate,
) -> Result<Mechanism> {
    validate_positive_costs(instance)?;
    if let Some(trivial) = trivial_if_degenerate(instance) {
        return trivial;
    }
    let auction =
        HybridAuction::new(&instance.domains, instance.m, Variant::ManyJobs(estimate));
    let spec = expand_protocol(auction)?;
    let tree = ImplementationTree::from_spec(instance.domains.clone(), spec)?;
    Mechanism::from_tree(tree)
}

/// Hybrid mechanism for scarce jobs (`m <= ceil(sqrt(n))^2`): each ascending
/// acceptance at price `q` grants the largest block `z` with
/// `quota <= z <= remaining` and `z * q` within `ceil(sqrt(n))` times the
/// descending anchor price.
pub fn mech_few_jobs(instance: &SchedulingInstance) -> Result<Mechanism> {
    validate_positive_costs(instance)?;
    let n = instance.domains.agents() as u64;
    let root = ceil_sqrt(n);
    if instance.m > root * root {
        return Err(Error::Precondition(format!(
            "few-jobs mechanism requires m <= {}, got {}",
            root * root,
            instance.m
        )));
    }
    if let Some(trivial) = trivial_if_degenerate(instance) {
        return trivial;
    }
    let auction = HybridAuction::new(&instance.domains, instance.m, Variant::FewJobs);
    let spec = expand_protocol(auction)?;
    let tree = ImplementationTree::from_spec(instance.domains.clone(), spec)?;
    Mechanism::from_tree(tree)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cmon::{check_osp, check_two_cycles};
    use crate::domain::TypeProfile;
    use crate::rational::rat;

    fn instance(n: usize, m: u64, values: &[i64]) -> SchedulingInstance {
        let domains =
            DomainProfile::homogeneous(n, values.iter().map(|&v| rat(v)).collect()).unwrap();
        SchedulingInstance::new(n, m, domains).unwrap()
    }

    #[test]
    fn ceil_sqrt_is_exact() {
        for (n, expect) in [(1, 1), (2, 2), (3, 2), (4, 2), (5, 3), (9, 3), (10, 4), (16, 4)] {
            assert_eq!(ceil_sqrt(n), expect);
        }
    }

    #[test]
    fn many_jobs_allocates_everything() {
        let inst = instance(4, 5, &[1, 2, 4]);
        let mech = mech_many_jobs(&inst).unwrap();
        for profile in mech.rule.domains().profiles() {
            let allocation = mech.allocation_for(&profile).unwrap();
            assert_eq!(allocation.total(), 5, "profile {profile:?}");
        }
    }

    #[test]
    fn many_jobs_passes_two_cycles_under_both_estimates() {
        let inst = instance(3, 4, &[1, 2, 4]);
        for estimate in
            [SurvivorEstimate::CheapestEliminated, SurvivorEstimate::HighestSurvivorBound]
        {
            let mech = mech_many_jobs_with(&inst, estimate).unwrap();
            let report = check_two_cycles(&mech.rule, &mech.tree).unwrap();
            assert!(report.holds, "estimate {estimate:?}");
            assert!(check_osp(&mech.rule, &mech.tree).unwrap().is_osp());
        }
    }

    #[test]
    fn few_jobs_respects_the_job_cap() {
        let inst = instance(4, 5, &[1, 2, 4]);
        assert!(matches!(mech_few_jobs(&inst), Err(Error::Precondition(_))));
        let inst = instance(4, 4, &[1, 2, 4]);
        let mech = mech_few_jobs(&inst).unwrap();
        for profile in mech.rule.domains().profiles() {
            assert_eq!(mech.allocation_for(&profile).unwrap().total(), 4);
        }
        assert!(check_two_cycles(&mech.rule, &mech.tree).unwrap().holds);
    }

    #[test]
    fn few_jobs_stays_within_root_on_a_spread_domain() {
        let inst = instance(4, 4, &[1, 5, 100]);
        let mech = mech_few_jobs(&inst).unwrap();
        let report = crate::scheduling::approx_sweep(
            &mech.rule,
            &inst,
            &crate::oracle::OracleBudget::default(),
        )
        .unwrap();
        assert!(report.worst_ratio <= rat(2), "ratio {}", report.worst_ratio);
    }

    #[test]
    fn degenerate_instances_short_circuit() {
        let inst = instance(1, 3, &[1, 2]);
        let mech = mech_many_jobs(&inst).unwrap();
        assert!(mech.tree.is_trivial());
        assert_eq!(
            mech.allocation_for(&TypeProfile(vec![rat(2)])).unwrap(),
            &Allocation(vec![3])
        );
        let inst = instance(1, 1, &[1, 2]);
        let mech = mech_few_jobs(&inst).unwrap();
        assert!(mech.tree.is_trivial());
        assert_eq!(
            mech.allocation_for(&TypeProfile(vec![rat(1)])).unwrap(),
            &Allocation(vec![1])
        );
        let inst = instance(3, 0, &[1, 2]);
        let mech = mech_few_jobs(&inst).unwrap();
        assert!(mech.tree.is_trivial());
    }

    #[test]
    fn heterogeneous_three_value_domains_stay_monotone() {
        // per-agent domains with distinct values and sizes exercise clock
        // states that homogeneous instances never reach
        let domains = DomainProfile::new(vec![
            vec![rat(1), rat(2), rat(4)],
            vec![rat(1), rat(3), rat(9)],
            vec![rat(2), rat(5), rat(7)],
            vec![rat(1), rat(2), rat(8)],
        ])
        .unwrap();
        let inst = SchedulingInstance::new(4, 4, domains.clone()).unwrap();
        for estimate in
            [SurvivorEstimate::CheapestEliminated, SurvivorEstimate::HighestSurvivorBound]
        {
            let mech = mech_many_jobs_with(&inst, estimate).unwrap();
            assert!(check_two_cycles(&mech.rule, &mech.tree).unwrap().holds);
            assert!(check_osp(&mech.rule, &mech.tree).unwrap().is_osp());
            for profile in domains.profiles() {
                assert_eq!(mech.allocation_for(&profile).unwrap().total(), 4);
            }
        }
        let mech = mech_few_jobs(&inst).unwrap();
        assert!(check_two_cycles(&mech.rule, &mech.tree).unwrap().holds);
        assert!(check_osp(&mech.rule, &mech.tree).unwrap().is_osp());
        for profile in domains.profiles() {
            let transcript = mech.run(&profile).unwrap();
            assert!(transcript.replays_on(&mech, &profile).unwrap());
            assert_eq!(transcript.allocation.total(), 4);
        }
        // mixed domain sizes, including singletons
        let domains = DomainProfile::new(vec![
            vec![rat(3)],
            vec![rat(1), rat(9)],
            vec![rat(2), rat(4), rat(6)],
        ])
        .unwrap();
        let inst = SchedulingInstance::new(3, 4, domains).unwrap();
        let mech = mech_few_jobs(&inst).unwrap();
        assert!(check_two_cycles(&mech.rule, &mech.tree).unwrap().holds);
        assert!(check_osp(&mech.rule, &mech.tree).unwrap().is_osp());
        let mech = mech_many_jobs(&inst).unwrap();
        assert!(check_two_cycles(&mech.rule, &mech.tree).unwrap().holds);
        assert!(check_osp(&mech.rule, &mech.tree).unwrap().is_osp());
    }

    #[test]
    fn transcripts_replay_to_the_same_leaf() {
        let inst = instance(4, 4, &[1, 2, 4]);
        let mech = mech_few_jobs(&inst).unwrap();
        for profile in mech.rule.domains().profiles() {
            let transcript = mech.run(&profile).unwrap();
            assert!(transcript.replays_on(&mech, &profile).unwrap());
            assert_eq!(&transcript.allocation, mech.allocation_for(&profile).unwrap());
        }
    }
}
