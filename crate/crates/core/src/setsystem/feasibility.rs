//! Deciding whether an exactly optimal OSP mechanism exists for a set system:
//! exhaustive subdomain analysis against the two misalignment patterns that
//! make optimality and obvious strategyproofness collide.

use super::{selectable, strongly_selectable, SetSystemInstance, Subdomain};
use crate::error::{Error, Result};
use crate::util::parallel_first;

/// Evidence that, on some subdomain where every live solution is strongly
/// selectable, each member agent with remaining slack can be bypassed when she
/// reveals her lowest cost: the agent would be selected on high and dropped on
/// low, an incentive reversal no tree can avoid.
#[derive(Clone, Debug)]
pub struct StrongMisalignment {
    /// A strongly selectable set and a slack member agent inside it.
    pub witness_set: usize,
    pub witness_agent: usize,
    /// For every (set, slack member): a strongly selectable alternative that
    /// avoids the member and survives the member's low pin.
    pub alternates: Vec<(usize, usize, usize)>,
}

/// Evidence that, on some subdomain with a selectable-but-not-strongly
/// selectable solution, every boundary agent stays two-sided: some live
/// alternative avoids her under her low pin and some live alternative keeps
/// her under her high pin.
#[derive(Clone, Debug)]
pub struct MixedMisalignment {
    /// A selectable set that is not strongly selectable.
    pub weak_set: usize,
    /// (agent, set avoiding it alive under low pin, set keeping it alive under high pin)
    pub boundary: Vec<(usize, usize, usize)>,
}

#[derive(Clone, Debug)]
pub enum Misalignment {
    Strong(StrongMisalignment),
    Mixed(MixedMisalignment),
}

/// Checks the all-strongly-selectable misalignment pattern on one subdomain.
pub fn misalignment_strong(
    sub: &Subdomain,
    instance: &SetSystemInstance,
) -> Option<StrongMisalignment> {
    let family = instance.feasible().len();
    let strong: Vec<usize> =
        (0..family).filter(|&p| strongly_selectable(p, sub, instance)).collect();
    let mut witness: Option<(usize, usize)> = None;
    let mut alternates = Vec::new();
    for &p in &strong {
        for &f in instance.set(p) {
            if sub.size(f) < 2 {
                continue;
            }
            witness.get_or_insert((p, f));
            let low_pinned = sub.pinned(f, sub.low(f).clone());
            let alternate = strong
                .iter()
                .copied()
                .find(|&q| !instance.set(q).contains(&f) && selectable(q, &low_pinned, instance));
            alternates.push((p, f, alternate?));
        }
    }
    let (witness_set, witness_agent) = witness?;
    Some(StrongMisalignment { witness_set, witness_agent, alternates })
}

/// Checks the weak-solution misalignment pattern on one subdomain.
pub fn misalignment_mixed(
    sub: &Subdomain,
    instance: &SetSystemInstance,
) -> Option<MixedMisalignment> {
    let family = instance.feasible().len();
    let live: Vec<usize> = (0..family).filter(|&p| selectable(p, sub, instance)).collect();
    if live.len() < 2 {
        return None;
    }
    let weak_set = live
        .iter()
        .copied()
        .find(|&p| !strongly_selectable(p, sub, instance))?;
    // boundary agents: in some live set and out of another
    let mut boundary = Vec::new();
    for f in 0..instance.elements() {
        let inside = live.iter().any(|&p| instance.set(p).contains(&f));
        let outside = live.iter().any(|&p| !instance.set(p).contains(&f));
        if !(inside && outside) {
            continue;
        }
        let low_pinned = sub.pinned(f, sub.low(f).clone());
        let avoids = live
            .iter()
            .copied()
            .find(|&q| !instance.set(q).contains(&f) && selectable(q, &low_pinned, instance));
        let high_pinned = sub.pinned(f, sub.high(f).clone());
        let keeps = live
            .iter()
            .copied()
            .find(|&q| instance.set(q).contains(&f) && selectable(q, &high_pinned, instance));
        match (avoids, keeps) {
            (Some(a), Some(k)) => boundary.push((f, a, k)),
            _ => return None,
        }
    }
    Some(MixedMisalignment { weak_set, boundary })
}

#[derive(Debug)]
pub enum FeasibilityVerdict {
    Feasible,
    Infeasible { subdomain: Subdomain, violation: Misalignment },
}

impl FeasibilityVerdict {
    pub fn is_feasible(&self) -> bool {
        matches!(self, FeasibilityVerdict::Feasible)
    }
}

/// Decides existence of an exactly optimal OSP mechanism by enumerating every
/// subdomain of the instance domains and testing both misalignment patterns.
/// The scan is split across workers; the lowest-indexed offending subdomain
/// wins, so the verdict is deterministic.
pub fn optimal_osp_feasible(
    instance: &SetSystemInstance,
    max_subdomains: usize,
) -> Result<FeasibilityVerdict> {
    let radices: Vec<u32> = instance
        .domains()
        .domains()
        .iter()
        .map(|d| (1u32 << d.len()) - 1)
        .collect();
    let mut total = 1usize;
    for &r in &radices {
        total = total
            .checked_mul(r as usize)
            .ok_or_else(|| Error::BudgetExceeded("subdomain space overflows".into()))?;
    }
    if total > max_subdomains {
        return Err(Error::BudgetExceeded(format!(
            "{total} subdomains exceed the budget of {max_subdomains}"
        )));
    }

    let subdomain_at = |mut index: usize| -> Subdomain {
        let masks: Vec<u32> = radices
            .iter()
            .rev()
            .map(|&r| {
                let digit = (index % r as usize) as u32 + 1;
                index /= r as usize;
                digit
            })
            .collect::<Vec<_>>()
            .into_iter()
            .rev()
            .collect();
        Subdomain::from_masks(instance, &masks).expect("masks are non-empty by construction")
    };

    let hit = parallel_first(total, &|index| {
        let sub = subdomain_at(index);
        if let Some(strong) = misalignment_strong(&sub, instance) {
            return Some((sub, Misalignment::Strong(strong)));
        }
        if let Some(mixed) = misalignment_mixed(&sub, instance) {
            return Some((sub, Misalignment::Mixed(mixed)));
        }
        None
    });

    Ok(match hit {
        Some((subdomain, violation)) => FeasibilityVerdict::Infeasible { subdomain, violation },
        None => FeasibilityVerdict::Feasible,
    })
}

#[cfg(test)]
mod tests {
    use super::super::paths::{parallel_paths_instance, triangle_instance};
    use super::*;
    use crate::rational::rat;

    #[test]
    fn triangle_is_feasible() {
        let inst = triangle_instance(&rat(1), &rat(3)).unwrap();
        assert!(optimal_osp_feasible(&inst, 100_000).unwrap().is_feasible());
    }

    #[test]
    fn equal_length_paths_are_infeasible() {
        let inst = parallel_paths_instance(2, 2, &rat(1), &rat(3)).unwrap();
        let verdict = optimal_osp_feasible(&inst, 100_000).unwrap();
        match verdict {
            FeasibilityVerdict::Infeasible { subdomain, .. } => {
                // the full domain already misaligns: both paths strongly
                // selectable, every agent escapable on a low reveal
                let full = Subdomain::full(&inst);
                assert!(misalignment_strong(&full, &inst).is_some());
                assert!(subdomain.refines(&full));
            }
            FeasibilityVerdict::Feasible => panic!("expected infeasible"),
        }
    }

    #[test]
    fn misalignment_never_triggers_on_trivial_shapes() {
        // one feasible set: no alternative exists, neither pattern can fire
        let domains = crate::domain::DomainProfile::new(vec![vec![rat(1), rat(2)]]).unwrap();
        let inst = SetSystemInstance::new(1, vec![vec![0]], None, domains).unwrap();
        let sub = Subdomain::full(&inst);
        assert!(misalignment_strong(&sub, &inst).is_none());
        assert!(misalignment_mixed(&sub, &inst).is_none());
        // all-singleton subdomain: no slack agent, mixed needs two live sets
        let inst = triangle_instance(&rat(1), &rat(3)).unwrap();
        let pinned =
            Subdomain::new(vec![vec![rat(1)], vec![rat(1)], vec![rat(1)]], &inst).unwrap();
        assert!(misalignment_strong(&pinned, &inst).is_none());
        assert!(misalignment_mixed(&pinned, &inst).is_none());
    }

    fn all_two_value_subdomains(inst: &SetSystemInstance) -> Vec<Subdomain> {
        let elements = inst.elements();
        let mut out = Vec::new();
        let mut counter = vec![1u32; elements];
        loop {
            out.push(Subdomain::from_masks(inst, &counter).unwrap());
            let mut pos = elements;
            loop {
                if pos == 0 {
                    return out;
                }
                pos -= 1;
                counter[pos] += 1;
                if counter[pos] <= 3 {
                    break;
                }
                counter[pos] = 1;
            }
        }
    }

    #[test]
    fn disjoint_paths_fail_through_the_strong_pattern_only() {
        // top=3, bottom=2, ratio 3 above threshold 2: infeasible. With only
        // two disjoint feasible sets, a weak solution's witness never belongs
        // to another live set, so the mixed pattern can never fire; the
        // certificate always comes from the strong pattern.
        let inst = parallel_paths_instance(3, 2, &rat(1), &rat(3)).unwrap();
        let subs = all_two_value_subdomains(&inst);
        assert!(subs.iter().all(|sub| misalignment_mixed(sub, &inst).is_none()));
        assert!(subs.iter().any(|sub| misalignment_strong(sub, &inst).is_some()));
        match optimal_osp_feasible(&inst, 100_000).unwrap() {
            FeasibilityVerdict::Infeasible { violation: Misalignment::Strong(_), .. } => {}
            other => panic!("expected a strong-pattern certificate, got {other:?}"),
        }
    }

    #[test]
    fn overlapping_sets_exhibit_the_mixed_pattern() {
        // three overlapping sets over four elements: {2,3} is selectable but
        // not strongly (pinning 2 high ties it against {1,3} and loses the
        // tie), while {0,2} keeps agent 2 alive under her high pin, so every
        // boundary agent stays two-sided
        let domains = crate::domain::DomainProfile::homogeneous(4, vec![rat(1), rat(3)]).unwrap();
        let inst = SetSystemInstance::new(
            4,
            vec![vec![0, 2], vec![1, 3], vec![2, 3]],
            Some(vec![0, 1, 2]),
            domains,
        )
        .unwrap();
        let full = Subdomain::full(&inst);
        let evidence = misalignment_mixed(&full, &inst).expect("mixed pattern fires");
        assert_eq!(evidence.weak_set, 2);
        assert_eq!(evidence.boundary.len(), 4);
        assert!(!optimal_osp_feasible(&inst, 100_000).unwrap().is_feasible());
    }

    #[test]
    fn four_by_four_paths_are_infeasible() {
        let inst = parallel_paths_instance(4, 4, &rat(1), &rat(3)).unwrap();
        assert!(!optimal_osp_feasible(&inst, 10_000).unwrap().is_feasible());
        assert!(!crate::setsystem::parallel_paths_feasible(4, 4, &rat(1), &rat(3)).unwrap());
    }

    #[test]
    fn feasibility_tracks_the_ratio_threshold() {
        // top=3, bottom=2: threshold (top-1)/(bottom-1) = 2
        let tight = parallel_paths_instance(3, 2, &rat(1), &rat(2)).unwrap();
        assert!(optimal_osp_feasible(&tight, 100_000).unwrap().is_feasible());
        let loose = parallel_paths_instance(3, 2, &rat(1), &rat(3)).unwrap();
        assert!(!optimal_osp_feasible(&loose, 100_000).unwrap().is_feasible());
    }
}
