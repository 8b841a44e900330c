//! Set-system procurement: selectability machinery, the optimal-OSP
//! feasibility decision, and the adaptive optimal mechanism.

mod feasibility;
mod mechanism;
pub mod paths;

pub use feasibility::{
    misalignment_mixed, misalignment_strong, optimal_osp_feasible, FeasibilityVerdict,
    Misalignment, MixedMisalignment, StrongMisalignment,
};
pub use mechanism::{build_mechanism, run_mechanism, SetSystemRun};
pub use paths::{
    parallel_paths_feasible, parallel_paths_instance, triangle_instance, triangle_mechanism,
};

use crate::domain::{DomainProfile, TypeProfile};
use crate::error::{Error, Result};
use crate::rational::Rational;
use serde::{Deserialize, Serialize};

/// Elements, a family of feasible subsets, a tie-breaking total order over the
/// family, and per-element domains of at most three values.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SetSystemInstance {
    elements: usize,
    feasible: Vec<Vec<usize>>,
    /// `tie_order[k]` is the feasible-set index ranked `k`-th (most preferred
    /// first); used to settle exact cost ties.
    tie_order: Vec<usize>,
    domains: DomainProfile,
    #[serde(skip)]
    rank: Vec<usize>,
}

impl SetSystemInstance {
    pub fn new(
        elements: usize,
        feasible: Vec<Vec<usize>>,
        tie_order: Option<Vec<usize>>,
        domains: DomainProfile,
    ) -> Result<Self> {
        if feasible.is_empty() {
            return Err(Error::InvalidInstance("feasible family is empty".into()));
        }
        let mut canonical: Vec<Vec<usize>> = Vec::with_capacity(feasible.len());
        for set in &feasible {
            let mut s = set.clone();
            s.sort_unstable();
            s.dedup();
            if s.len() != set.len() {
                return Err(Error::InvalidInstance("feasible set repeats an element".into()));
            }
            if s.iter().any(|&e| e >= elements) {
                return Err(Error::InvalidInstance("feasible set names a missing element".into()));
            }
            if canonical.contains(&s) {
                return Err(Error::InvalidInstance("feasible family repeats a set".into()));
            }
            canonical.push(s);
        }
        if domains.agents() != elements {
            return Err(Error::LengthMismatch { expected: elements, got: domains.agents() });
        }
        if domains.domains().iter().any(|d| d.len() > 3) {
            return Err(Error::InvalidDomain(
                "set-system domains may hold at most three values".into(),
            ));
        }
        let tie_order = match tie_order {
            Some(order) => {
                let mut sorted = order.clone();
                sorted.sort_unstable();
                if sorted != (0..canonical.len()).collect::<Vec<_>>() {
                    return Err(Error::InvalidInstance(
                        "tie order must be a permutation of the feasible indices".into(),
                    ));
                }
                order
            }
            None => default_tie_order(&canonical),
        };
        let mut rank = vec![0usize; canonical.len()];
        for (position, &set_index) in tie_order.iter().enumerate() {
            rank[set_index] = position;
        }
        Ok(SetSystemInstance { elements, feasible: canonical, tie_order, domains, rank })
    }

    pub fn elements(&self) -> usize {
        self.elements
    }

    pub fn feasible(&self) -> &[Vec<usize>] {
        &self.feasible
    }

    pub fn set(&self, index: usize) -> &[usize] {
        &self.feasible[index]
    }

    pub fn tie_order(&self) -> &[usize] {
        &self.tie_order
    }

    pub fn domains(&self) -> &DomainProfile {
        &self.domains
    }

    /// Strict preference `a` before `b` in the tie order.
    pub fn precedes(&self, a: usize, b: usize) -> bool {
        self.rank[a] < self.rank[b]
    }

    /// Elements of set `a` not in set `b`, both given by family index.
    pub fn difference(&self, a: usize, b: usize) -> Vec<usize> {
        self.feasible[a]
            .iter()
            .copied()
            .filter(|e| !self.feasible[b].contains(e))
            .collect()
    }

    /// 0/1 allocation vector selecting the `index`-th feasible set.
    pub fn allocation_of(&self, index: usize) -> crate::allocation::Allocation {
        crate::allocation::Allocation::from_selected(
            self.elements,
            self.feasible[index].iter().copied(),
        )
    }
}

/// Cardinality first, then lexicographic on sorted element indices.
pub fn default_tie_order(feasible: &[Vec<usize>]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..feasible.len()).collect();
    order.sort_by(|&a, &b| {
        feasible[a]
            .len()
            .cmp(&feasible[b].len())
            .then_with(|| feasible[a].cmp(&feasible[b]))
    });
    order
}

#[derive(Deserialize)]
struct SetSystemInstanceWire {
    elements: usize,
    feasible: Vec<Vec<usize>>,
    #[serde(default)]
    tie_order: Option<Vec<usize>>,
    domains: Vec<Vec<Rational>>,
}

impl<'de> Deserialize<'de> for SetSystemInstance {
    fn deserialize<D: serde::Deserializer<'de>>(
        deserializer: D,
    ) -> std::result::Result<Self, D::Error> {
        let wire = SetSystemInstanceWire::deserialize(deserializer)?;
        let domains = DomainProfile::new(wire.domains).map_err(serde::de::Error::custom)?;
        SetSystemInstance::new(wire.elements, wire.feasible, wire.tie_order, domains)
            .map_err(serde::de::Error::custom)
    }
}

/// Non-empty per-element subsets of the instance domains.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Subdomain {
    per_element: Vec<Vec<Rational>>,
}

impl Subdomain {
    pub fn full(instance: &SetSystemInstance) -> Self {
        Subdomain { per_element: instance.domains().domains().to_vec() }
    }

    pub fn new(per_element: Vec<Vec<Rational>>, instance: &SetSystemInstance) -> Result<Self> {
        if per_element.len() != instance.elements() {
            return Err(Error::LengthMismatch {
                expected: instance.elements(),
                got: per_element.len(),
            });
        }
        for (e, set) in per_element.iter().enumerate() {
            if set.is_empty() {
                return Err(Error::InvalidDomain(format!("element {e} subdomain is empty")));
            }
            let ambient = instance.domains().domain(e);
            for w in set.windows(2) {
                if w[0] >= w[1] {
                    return Err(Error::InvalidDomain("subdomain must be strictly sorted".into()));
                }
            }
            if set.iter().any(|v| ambient.binary_search(v).is_err()) {
                return Err(Error::InvalidDomain(format!(
                    "element {e} subdomain leaves the ambient domain"
                )));
            }
        }
        Ok(Subdomain { per_element })
    }

    /// Subdomain from per-element bitmasks over the sorted ambient values.
    /// Mask `k` must be in `1..2^|D_e|`.
    pub fn from_masks(instance: &SetSystemInstance, masks: &[u32]) -> Result<Self> {
        let mut per_element = Vec::with_capacity(masks.len());
        for (e, &mask) in masks.iter().enumerate() {
            let ambient = instance.domains().domain(e);
            let subset: Vec<Rational> = (0..ambient.len())
                .filter(|b| mask & (1 << b) != 0)
                .map(|b| ambient[b].clone())
                .collect();
            per_element.push(subset);
        }
        Subdomain::new(per_element, instance)
    }

    pub fn per_element(&self) -> &[Vec<Rational>] {
        &self.per_element
    }

    pub fn values(&self, element: usize) -> &[Rational] {
        &self.per_element[element]
    }

    pub fn low(&self, element: usize) -> &Rational {
        self.per_element[element].first().expect("subdomains are non-empty")
    }

    pub fn high(&self, element: usize) -> &Rational {
        self.per_element[element].last().expect("subdomains are non-empty")
    }

    pub fn size(&self, element: usize) -> usize {
        self.per_element[element].len()
    }

    /// Copy with one element pinned to a single value.
    pub fn pinned(&self, element: usize, value: Rational) -> Subdomain {
        let mut per_element = self.per_element.clone();
        per_element[element] = vec![value];
        Subdomain { per_element }
    }

    /// Copy with one value removed from an element's subdomain.
    pub fn without(&self, element: usize, value: &Rational) -> Subdomain {
        let mut per_element = self.per_element.clone();
        per_element[element].retain(|v| v != value);
        Subdomain { per_element }
    }

    pub fn contains(&self, profile: &TypeProfile) -> bool {
        profile.len() == self.per_element.len()
            && profile
                .iter()
                .zip(&self.per_element)
                .all(|(v, set)| set.binary_search(v).is_ok())
    }

    /// Is `other` a (weak) refinement of `self`?
    pub fn refines(&self, coarser: &Subdomain) -> bool {
        self.per_element
            .iter()
            .zip(&coarser.per_element)
            .all(|(fine, coarse)| fine.iter().all(|v| coarse.binary_search(v).is_ok()))
    }
}

/// Lowest and highest possible cost of the element set `set` under the
/// subdomain: `(sum of minima, sum of maxima)`.
pub fn lo_hi(set: &[usize], sub: &Subdomain) -> (Rational, Rational) {
    let mut lo = Rational::zero();
    let mut hi = Rational::zero();
    for &e in set {
        lo += sub.low(e);
        hi += sub.high(e);
    }
    (lo, hi)
}

/// Whether the feasible set `p` can still be the tie-broken optimum for some
/// profile of the subdomain: against every other feasible set `q`,
/// `L(P \ Q) < H(Q \ P)`, or equality with `P` preferred by the tie order.
pub fn selectable(p: usize, sub: &Subdomain, instance: &SetSystemInstance) -> bool {
    for q in 0..instance.feasible().len() {
        if q == p {
            continue;
        }
        let (lo_p, _) = lo_hi(&instance.difference(p, q), sub);
        let (_, hi_q) = lo_hi(&instance.difference(q, p), sub);
        let ok = lo_p < hi_q || (lo_p == hi_q && instance.precedes(p, q));
        if !ok {
            return false;
        }
    }
    true
}

/// Selectable, and still selectable when any one member element is pinned to
/// its highest current value.
pub fn strongly_selectable(p: usize, sub: &Subdomain, instance: &SetSystemInstance) -> bool {
    if !selectable(p, sub, instance) {
        return false;
    }
    instance.set(p).iter().all(|&e| {
        let pinned = sub.pinned(e, sub.high(e).clone());
        selectable(p, &pinned, instance)
    })
}

/// For a set that is selectable but not strongly so, the first member element
/// whose high-pinning destroys selectability.
pub fn witness(p: usize, sub: &Subdomain, instance: &SetSystemInstance) -> Result<usize> {
    if !selectable(p, sub, instance) {
        return Err(Error::Precondition("witness requires a selectable set".into()));
    }
    for &e in instance.set(p) {
        let pinned = sub.pinned(e, sub.high(e).clone());
        if !selectable(p, &pinned, instance) {
            debug_assert!(sub.size(e) >= 2, "pinning a singleton cannot change selectability");
            debug_assert!(witness_second_property_holds(p, e, sub, instance));
            return Ok(e);
        }
    }
    Err(Error::Precondition("set is strongly selectable; no witness exists".into()))
}

fn witness_second_property_holds(
    p: usize,
    w: usize,
    sub: &Subdomain,
    instance: &SetSystemInstance,
) -> bool {
    (0..instance.feasible().len()).any(|q| {
        if q == p || !instance.set(p).contains(&w) || instance.set(q).contains(&w) {
            return false;
        }
        let rest: Vec<usize> =
            instance.difference(p, q).into_iter().filter(|&e| e != w).collect();
        let (lo_rest, _) = lo_hi(&rest, sub);
        let lhs = sub.high(w).clone() + lo_rest;
        let (_, hi_q) = lo_hi(&instance.difference(q, p), sub);
        lhs > hi_q || (lhs == hi_q && instance.precedes(q, p))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;
    use paths::{parallel_paths_instance, triangle_instance};

    #[test]
    fn lo_hi_basics() {
        let inst = triangle_instance(&rat(1), &rat(3)).unwrap();
        let sub = Subdomain::full(&inst);
        assert_eq!(lo_hi(&[], &sub), (rat(0), rat(0)));
        // the two-hop path {su, ut} spans elements 1 and 2
        assert_eq!(lo_hi(&[1, 2], &sub), (rat(2), rat(6)));
        let pinned = Subdomain::new(vec![vec![rat(3)], vec![rat(1)], vec![rat(3)]], &inst).unwrap();
        assert_eq!(lo_hi(&[0, 1, 2], &pinned), (rat(7), rat(7)));
    }

    #[test]
    fn triangle_selectability_matches_hand_analysis() {
        // domains {1,3} with 2L < H: both paths selectable, only the direct
        // edge is strongly selectable
        let inst = triangle_instance(&rat(1), &rat(3)).unwrap();
        let sub = Subdomain::full(&inst);
        let direct = inst.feasible().iter().position(|s| s == &vec![0]).unwrap();
        let two_hop = inst.feasible().iter().position(|s| s == &vec![1, 2]).unwrap();
        assert!(selectable(direct, &sub, &inst));
        assert!(selectable(two_hop, &sub, &inst));
        assert!(strongly_selectable(direct, &sub, &inst));
        assert!(!strongly_selectable(two_hop, &sub, &inst));
        // high-pinning one hop makes the two-hop path lose: 3 + 1 = 4 > H({st}) = 3
        let pinned = sub.pinned(1, rat(3));
        assert!(!selectable(two_hop, &pinned, &inst));
        // witness scan returns the first hop
        assert_eq!(witness(two_hop, &sub, &inst).unwrap(), 1);
        assert!(witness(direct, &sub, &inst).is_err());
    }

    #[test]
    fn single_feasible_set_is_always_selectable() {
        let domains = DomainProfile::new(vec![vec![rat(1), rat(2)]]).unwrap();
        let inst = SetSystemInstance::new(1, vec![vec![0]], None, domains).unwrap();
        let sub = Subdomain::full(&inst);
        assert!(selectable(0, &sub, &inst));
        assert!(strongly_selectable(0, &sub, &inst));
    }

    #[test]
    fn two_plus_two_paths_are_both_strongly_selectable() {
        let inst = parallel_paths_instance(2, 2, &rat(1), &rat(3)).unwrap();
        let sub = Subdomain::full(&inst);
        for p in 0..2 {
            assert!(strongly_selectable(p, &sub, &inst));
        }
        // all-singleton domains: selectable implies strongly selectable
        let pinned = Subdomain::new(
            vec![vec![rat(1)], vec![rat(1)], vec![rat(3)], vec![rat(3)]],
            &inst,
        )
        .unwrap();
        for p in 0..2 {
            assert_eq!(
                selectable(p, &pinned, &inst),
                strongly_selectable(p, &pinned, &inst)
            );
        }
    }

    #[test]
    fn selectability_is_inherited_downward() {
        // once a set stops being selectable it stays out on every refinement
        let domains =
            DomainProfile::homogeneous(3, vec![rat(1), rat(2), rat(3)]).unwrap();
        let inst = SetSystemInstance::new(3, vec![vec![0], vec![1, 2]], None, domains).unwrap();
        let mut all_subs = Vec::new();
        for a in 1u32..8 {
            for b in 1u32..8 {
                for c in 1u32..8 {
                    all_subs.push(Subdomain::from_masks(&inst, &[a, b, c]).unwrap());
                }
            }
        }
        for coarse in &all_subs {
            for fine in &all_subs {
                if !fine.refines(coarse) {
                    continue;
                }
                for p in 0..inst.feasible().len() {
                    if !selectable(p, coarse, &inst) {
                        assert!(!selectable(p, fine, &inst));
                    }
                }
            }
        }
        // and at least one selectable set exists for every subdomain
        for sub in &all_subs {
            assert!((0..inst.feasible().len()).any(|p| selectable(p, sub, &inst)));
        }
    }
}
