//! Exact OSP mechanisms for two-value cost domains: strong monotonicity,
//! proportional payments, and the adaptive-order greedy revelation mechanism.

use super::greedy::greedy_optimal;
use super::SchedulingInstance;
use crate::allocation::{AllocationRule, PaymentTable};
use crate::domain::{DomainProfile, TypeProfile};
use crate::error::{Error, Result};
use crate::imptree::{ImplementationTree, TreeSpec};
use crate::mechanism::Mechanism;
use crate::rational::Rational;

/// Strong monotonicity over a homogeneous two-value domain `{low, high}`:
/// every load an agent can receive on a low report weakly dominates every
/// load she can receive on a high report, across all other-agent profiles.
pub fn strongly_monotone_check(rule: &AllocationRule) -> Result<bool> {
    let domains = rule.domains();
    let (low, high) = homogeneous_two_values(domains)?;
    for agent in 0..domains.agents() {
        let mut min_low: Option<u64> = None;
        let mut max_high: Option<u64> = None;
        for (index, profile) in domains.profiles().enumerate() {
            let load = rule.get_by_index(index).load(agent);
            if profile.get(agent) == &low {
                min_low = Some(min_low.map_or(load, |v| v.min(load)));
            } else if profile.get(agent) == &high {
                max_high = Some(max_high.map_or(load, |v| v.max(load)));
            }
        }
        if let (Some(lo), Some(hi)) = (min_low, max_high) {
            if lo < hi {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

fn homogeneous_two_values(domains: &DomainProfile) -> Result<(Rational, Rational)> {
    let first = domains.domain(0);
    if first.len() != 2 || domains.domains().iter().any(|d| d != first) {
        return Err(Error::Precondition(
            "strong monotonicity is defined over a homogeneous two-value domain".into(),
        ));
    }
    Ok((first[0].clone(), first[1].clone()))
}

/// Direct-revelation mechanism paying `p` per allocated job, `low < p < high`.
/// OSP exactly when the rule is strongly monotone; the constructor does not
/// check monotonicity so that violations can be certified downstream.
pub fn proportional_payment_mechanism(rule: &AllocationRule, p: &Rational) -> Result<Mechanism> {
    let domains = rule.domains().clone();
    let (low, high) = homogeneous_two_values(&domains)?;
    if !(&low < p && p < &high) {
        return Err(Error::Precondition(format!(
            "per-job payment must satisfy {low} < p < {high}, got {p}"
        )));
    }
    let tree = direct_revelation_tree(&domains, rule)?;
    let payments = PaymentTable::tabulate(domains, |profile| {
        let allocation = rule.get(profile).expect("rule is total");
        (0..profile.len()).map(|i| p.scale(allocation.load(i))).collect()
    })?;
    Ok(Mechanism { tree, rule: rule.clone(), payments: Some(payments) })
}

/// Queries agents in index order, each splitting her full current domain into
/// singletons.
pub fn direct_revelation_tree(
    domains: &DomainProfile,
    rule: &AllocationRule,
) -> Result<ImplementationTree> {
    fn build(
        domains: &DomainProfile,
        rule: &AllocationRule,
        agent: usize,
        prefix: &mut Vec<Rational>,
    ) -> Result<TreeSpec> {
        if agent == domains.agents() {
            let profile = TypeProfile(prefix.clone());
            return Ok(TreeSpec::leaf(rule.get(&profile)?.clone()));
        }
        if domains.domain(agent).len() == 1 {
            prefix.push(domains.domain(agent)[0].clone());
            let spec = build(domains, rule, agent + 1, prefix)?;
            prefix.pop();
            return Ok(spec);
        }
        let mut children = Vec::new();
        for value in domains.domain(agent) {
            prefix.push(value.clone());
            let subtree = build(domains, rule, agent + 1, prefix)?;
            prefix.pop();
            children.push((vec![value.clone()], subtree));
        }
        Ok(TreeSpec::node(agent, children))
    }
    let mut prefix = Vec::new();
    let spec = build(domains, rule, 0, &mut prefix)?;
    ImplementationTree::from_spec(domains.clone(), spec)
}

/// The balanced optimum for homogeneous two-value domains, defined through
/// per-count allocation vectors: with `l` agents reporting low, low reporters
/// receive the `l` largest entries of the optimal load vector for that count,
/// high reporters the rest, each side filled in index order.
pub fn balanced_two_value_rule(
    agents: usize,
    m: u64,
    low: &Rational,
    high: &Rational,
) -> Result<AllocationRule> {
    let domains = DomainProfile::homogeneous(agents, vec![low.clone(), high.clone()])?;
    // per-count sorted load vectors from the greedy optimum
    let mut per_count: Vec<Vec<u64>> = Vec::with_capacity(agents + 1);
    for l in 0..=agents {
        let profile = TypeProfile(
            (0..agents)
                .map(|i| if i < l { low.clone() } else { high.clone() })
                .collect(),
        );
        let mut loads = greedy_optimal(&profile, m)?.0;
        loads.sort_unstable_by(|a, b| b.cmp(a));
        per_count.push(loads);
    }
    AllocationRule::tabulate(domains, move |profile| {
        let l = profile.iter().filter(|v| *v == low).count();
        let vector = &per_count[l];
        let mut loads = vec![0u64; agents];
        let mut low_rank = 0usize;
        let mut high_rank = 0usize;
        for (i, value) in profile.iter().enumerate() {
            if value == low {
                loads[i] = vector[low_rank];
                low_rank += 1;
            } else {
                loads[i] = vector[l + high_rank];
                high_rank += 1;
            }
        }
        crate::allocation::Allocation(loads)
    })
}

/// Adaptive-order full-revelation greedy mechanism for heterogeneous two-value
/// domains `{low_i, high_i}`. At each step it queries the lowest-index unasked
/// agent whose pending-jobs comparison does not increase when the unknown
/// agents flip from all-low to all-high, then returns the greedy optimum on
/// the elicited profile.
pub fn greedy_mechanism(instance: &SchedulingInstance) -> Result<Mechanism> {
    let domains = instance.domains.clone();
    for (i, d) in domains.domains().iter().enumerate() {
        if d.len() > 2 {
            return Err(Error::Precondition(format!(
                "greedy mechanism expects two-value domains; agent {i} has {}",
                d.len()
            )));
        }
        if d[0].is_zero() && instance.m > 0 {
            return Err(Error::NonPositiveCost);
        }
    }
    let m = instance.m;
    if m == 0 || domains.agents() == 1 {
        let allocation = if domains.agents() == 1 {
            crate::allocation::Allocation(vec![m])
        } else {
            crate::allocation::Allocation::zeros(domains.agents())
        };
        let tree = ImplementationTree::trivial(domains, allocation)?;
        return Mechanism::from_tree(tree);
    }
    let spec = expand_greedy(&domains, m, &mut vec![None; domains.agents()])?;
    let tree = ImplementationTree::from_spec(domains.clone(), spec)?;
    Mechanism::from_tree(tree)
}

fn expand_greedy(
    domains: &DomainProfile,
    m: u64,
    revealed: &mut Vec<Option<Rational>>,
) -> Result<TreeSpec> {
    if revealed.iter().all(Option::is_some) {
        let profile =
            TypeProfile(revealed.iter().map(|v| v.clone().expect("all revealed")).collect());
        return Ok(TreeSpec::leaf(greedy_optimal(&profile, m)?));
    }
    let next = pending_agent(domains, m, revealed)?;
    // degenerate single-value domain: reveal without a query
    if domains.domain(next).len() == 1 {
        revealed[next] = Some(domains.domain(next)[0].clone());
        let spec = expand_greedy(domains, m, revealed)?;
        revealed[next] = None;
        return Ok(spec);
    }
    let mut children = Vec::new();
    for value in domains.domain(next) {
        revealed[next] = Some(value.clone());
        let subtree = expand_greedy(domains, m, revealed)?;
        revealed[next] = None;
        children.push((vec![value.clone()], subtree));
    }
    Ok(TreeSpec::node(next, children))
}

/// Lowest-index unasked agent whose greedy load with unknowns at their lows is
/// at least her greedy load with unknowns at their highs.
fn pending_agent(
    domains: &DomainProfile,
    m: u64,
    revealed: &[Option<Rational>],
) -> Result<usize> {
    let fill = |high_fill: bool| -> TypeProfile {
        TypeProfile(
            revealed
                .iter()
                .enumerate()
                .map(|(i, v)| match v {
                    Some(value) => value.clone(),
                    None => {
                        let d = domains.domain(i);
                        if high_fill {
                            d.last().expect("non-empty").clone()
                        } else {
                            d[0].clone()
                        }
                    }
                })
                .collect(),
        )
    };
    let low_alloc = greedy_optimal(&fill(false), m)?;
    let high_alloc = greedy_optimal(&fill(true), m)?;
    for (candidate, value) in revealed.iter().enumerate() {
        if value.is_some() {
            continue;
        }
        if low_alloc.load(candidate) >= high_alloc.load(candidate) {
            return Ok(candidate);
        }
    }
    Err(Error::InvariantViolation(
        "no unasked agent satisfies the pending-jobs comparison".into(),
    ))
}
