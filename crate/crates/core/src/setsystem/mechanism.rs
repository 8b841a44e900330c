//! The adaptive optimal mechanism for feasible set systems: interleaved
//! low/high pin queries that shrink the subdomain until one selectable
//! solution survives.

use super::{selectable, strongly_selectable, SetSystemInstance, Subdomain};
use crate::allocation::Allocation;
use crate::domain::TypeProfile;
use crate::error::{Error, Result};
use crate::imptree::{ImplementationTree, TreeSpec};
use crate::mechanism::{Mechanism, MechanismTranscript};
use crate::rational::Rational;

#[derive(Clone, Debug, PartialEq, Eq)]
enum Question {
    /// "Is your cost the lowest of your current subdomain?"
    Low,
    /// "Is your cost the highest of your current subdomain?"
    High,
}

/// Builds the full implementation tree of the adaptive optimal protocol.
/// Requires the instance to pass the feasibility characterization; when a step
/// finds no safe agent to query, construction fails, which on a feasible
/// instance indicates an internal inconsistency.
pub fn build_mechanism(instance: &SetSystemInstance) -> Result<Mechanism> {
    let spec = expand(instance, Subdomain::full(instance))?;
    let tree = ImplementationTree::from_spec(instance.domains().clone(), spec)?;
    let rule = tree.allocation_rule()?;
    Ok(Mechanism { tree, rule, payments: None })
}

fn live_sets(instance: &SetSystemInstance, sub: &Subdomain) -> Vec<usize> {
    (0..instance.feasible().len())
        .filter(|&p| selectable(p, sub, instance))
        .collect()
}

fn expand(instance: &SetSystemInstance, sub: Subdomain) -> Result<TreeSpec> {
    let live = live_sets(instance, &sub);
    assert!(!live.is_empty(), "every subdomain keeps at least one selectable solution");
    if live.len() == 1 {
        return Ok(TreeSpec::leaf(instance.allocation_of(live[0])));
    }
    let (agent, question) = choose_query(instance, &sub, &live).ok_or_else(|| {
        Error::InvariantViolation(
            "no safe query exists; the instance fails the feasibility characterization".into(),
        )
    })?;
    let asked = match question {
        Question::Low => sub.low(agent).clone(),
        Question::High => sub.high(agent).clone(),
    };
    debug_assert!(sub.size(agent) >= 2);
    let yes = expand(instance, sub.pinned(agent, asked.clone()))?;
    let no = expand(instance, sub.without(agent, &asked))?;
    let no_label: Vec<Rational> =
        sub.values(agent).iter().filter(|v| **v != asked).cloned().collect();
    Ok(TreeSpec::node(agent, vec![(vec![asked], yes), (no_label, no)]))
}

/// Picks the next agent and pin direction, re-evaluated from scratch after
/// every answer.
///
/// While some live solution is not strongly selectable, prefer an agent whose
/// low pin kills every live solution avoiding her (she is then always
/// selected after a low reveal); otherwise use an agent whose high pin kills
/// every live solution containing her (never selected after a high reveal).
/// Once all live solutions are strongly selectable, only the low-pin form is
/// safe. Candidates need at least two remaining values, and ties go to the
/// lowest element index.
fn choose_query(
    instance: &SetSystemInstance,
    sub: &Subdomain,
    live: &[usize],
) -> Option<(usize, Question)> {
    let members = |p: usize| instance.set(p);
    let union: Vec<usize> = {
        let mut seen = vec![false; instance.elements()];
        for &p in live {
            for &e in members(p) {
                seen[e] = true;
            }
        }
        (0..instance.elements()).filter(|&e| seen[e]).collect()
    };
    let some_weak = live.iter().any(|&p| !strongly_selectable(p, sub, instance));

    let low_safe = |f: usize| -> bool {
        let pinned = sub.pinned(f, sub.low(f).clone());
        live.iter()
            .all(|&p| members(p).contains(&f) || !selectable(p, &pinned, instance))
    };
    let high_safe = |f: usize| -> bool {
        let pinned = sub.pinned(f, sub.high(f).clone());
        live.iter()
            .all(|&p| !members(p).contains(&f) || !selectable(p, &pinned, instance))
    };

    for &f in &union {
        if sub.size(f) >= 2 && low_safe(f) {
            return Some((f, Question::Low));
        }
    }
    if some_weak {
        for &f in &union {
            if sub.size(f) >= 2 && high_safe(f) {
                return Some((f, Question::High));
            }
        }
    }
    None
}

/// One execution of the adaptive optimal protocol.
#[derive(Debug)]
pub struct SetSystemRun {
    pub mechanism: Mechanism,
    /// Index into the feasible family of the returned solution.
    pub chosen: usize,
    pub allocation: Allocation,
    pub transcript: MechanismTranscript,
}

/// Runs the protocol against a true profile.
pub fn run_mechanism(instance: &SetSystemInstance, profile: &TypeProfile) -> Result<SetSystemRun> {
    if !instance.domains().contains(profile) {
        return Err(Error::ProfileOutsideDomain);
    }
    let mechanism = build_mechanism(instance)?;
    let transcript = mechanism.run(profile)?;
    let allocation = transcript.allocation.clone();
    let chosen = instance
        .feasible()
        .iter()
        .position(|set| {
            let selected: Vec<usize> = allocation.selected().collect();
            selected == *set
        })
        .ok_or_else(|| Error::InvariantViolation("leaf allocation is not a feasible set".into()))?;
    Ok(SetSystemRun { mechanism, chosen, allocation, transcript })
}
