//! Deliberately naive brute-force baselines: exhaustive optima, exhaustive
//! cycle enumeration, and exhaustive small-tree search. Everything here is an
//! independent cross-check for the fast paths, not a scalable solver.

use crate::allocation::{makespan, Allocation, AllocationRule, PaymentTable};
use crate::cmon::{check_osp, check_two_cycles, OspGraph, OspVerdict};
use crate::domain::{DomainProfile, TypeProfile};
use crate::error::{Error, Result};
use crate::imptree::{enumerate_trees, ImplementationTree, LeafOutcome, TreeSpec};
use crate::rational::Rational;

/// Resource caps for the exhaustive procedures.
#[derive(Clone, Debug)]
pub struct OracleBudget {
    pub max_profiles: usize,
    pub max_cycle_length: usize,
    pub max_trees: usize,
}

impl Default for OracleBudget {
    fn default() -> Self {
        OracleBudget { max_profiles: 1_000_000, max_cycle_length: 16, max_trees: 5_000_000 }
    }
}

/// All ways to split `m` identical jobs over `n` machines.
pub fn compositions(m: u64, n: usize) -> Vec<Allocation> {
    fn rec(remaining: u64, slots: usize, prefix: &mut Vec<u64>, out: &mut Vec<Allocation>) {
        if slots == 1 {
            prefix.push(remaining);
            out.push(Allocation(prefix.clone()));
            prefix.pop();
            return;
        }
        for take in 0..=remaining {
            prefix.push(take);
            rec(remaining - take, slots - 1, prefix, out);
            prefix.pop();
        }
    }
    if n == 0 {
        return if m == 0 { vec![Allocation(vec![])] } else { vec![] };
    }
    let mut out = Vec::new();
    rec(m, n, &mut Vec::new(), &mut out);
    out
}

/// Every minimum-makespan allocation of `m` jobs under costs `b`.
pub fn brute_makespan_optima(b: &TypeProfile, m: u64) -> Result<Vec<Allocation>> {
    let mut best: Option<Rational> = None;
    let mut winners = Vec::new();
    for candidate in compositions(m, b.len()) {
        let value = makespan(&candidate, b)?;
        match &best {
            Some(current) if value > *current => {}
            Some(current) if value == *current => winners.push(candidate),
            _ => {
                best = Some(value);
                winners = vec![candidate];
            }
        }
    }
    Ok(winners)
}

/// A minimum-makespan allocation with ties broken by the greedy balance rule:
/// among optima, exactly one allocation satisfies, for every machine pair with
/// `b_i < b_j` (or equal costs and `i < j`), both
/// `b_i (x_i + 1) > b_j x_j` and `b_j (x_j + 1) >= b_i x_i`.
pub fn brute_makespan_opt(
    b: &TypeProfile,
    m: u64,
    budget: &OracleBudget,
) -> Result<(Allocation, Rational)> {
    if b.iter().any(|c| !c.is_positive()) && m > 0 {
        return Err(Error::NonPositiveCost);
    }
    let space = compositions(m, b.len()).len();
    if space > budget.max_profiles {
        return Err(Error::BudgetExceeded(format!(
            "{space} load vectors exceed the oracle budget"
        )));
    }
    let optima = brute_makespan_optima(b, m)?;
    let value = makespan(&optima[0], b)?;
    if m == 0 {
        return Ok((Allocation::zeros(b.len()), Rational::zero()));
    }
    let balanced: Vec<&Allocation> =
        optima.iter().filter(|x| satisfies_balance_rule(x, b)).collect();
    match balanced.as_slice() {
        [unique] => Ok(((*unique).clone(), value)),
        _ => Err(Error::InvariantViolation(format!(
            "expected exactly one balanced optimum, found {}",
            balanced.len()
        ))),
    }
}

pub(crate) fn satisfies_balance_rule(x: &Allocation, b: &TypeProfile) -> bool {
    let n = b.len();
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let faster = b.get(i) < b.get(j) || (b.get(i) == b.get(j) && i < j);
            if faster {
                let lhs = b.get(i).scale(x.load(i) + 1);
                let rhs = b.get(j).scale(x.load(j));
                if lhs <= rhs {
                    return false;
                }
                let lhs2 = b.get(j).scale(x.load(j) + 1);
                let rhs2 = b.get(i).scale(x.load(i));
                if lhs2 < rhs2 {
                    return false;
                }
            }
        }
    }
    true
}

/// Minimum social-cost feasible set, ties broken by the instance's total
/// order. Returns the index into the feasible family and the optimal cost.
pub fn brute_social_cost_opt(
    instance: &crate::setsystem::SetSystemInstance,
    b: &TypeProfile,
) -> Result<(usize, Rational)> {
    let mut best: Option<(Rational, usize)> = None;
    for (index, set) in instance.feasible().iter().enumerate() {
        let cost: Rational = set.iter().map(|&e| b.get(e).clone()).sum();
        let better = match &best {
            None => true,
            Some((c, i)) => {
                cost < *c || (cost == *c && instance.precedes(index, *i))
            }
        };
        if better {
            best = Some((cost, index));
        }
    }
    let (cost, index) = best.expect("feasible family is non-empty");
    Ok((index, cost))
}

/// All simple cycles of the graph up to the budgeted length, with exact
/// weights. Cycles are anchored at their minimum vertex to avoid duplicates.
pub fn enumerate_cycles(
    graph: &OspGraph,
    budget: &OracleBudget,
) -> Result<Vec<(Vec<usize>, Rational)>> {
    let n = graph.node_count();
    let mut adjacency: Vec<Vec<(usize, Rational)>> = vec![Vec::new(); n];
    for edge in &graph.edges {
        adjacency[edge.from].push((edge.to, edge.weight.clone()));
    }
    struct Search<'a> {
        anchor: usize,
        adjacency: &'a [Vec<(usize, Rational)>],
        stack: Vec<usize>,
        on_stack: Vec<bool>,
        out: Vec<(Vec<usize>, Rational)>,
        budget: &'a OracleBudget,
    }

    impl Search<'_> {
        fn dfs(&mut self, node: usize, weight: Rational) -> Result<()> {
            self.stack.push(node);
            self.on_stack[node] = true;
            let adjacency = self.adjacency;
            for (next, w) in &adjacency[node] {
                if *next == self.anchor && self.stack.len() >= 2 {
                    if self.out.len() >= self.budget.max_profiles {
                        return Err(Error::BudgetExceeded("cycle enumeration".into()));
                    }
                    self.out.push((self.stack.clone(), &weight + w));
                } else if *next > self.anchor
                    && !self.on_stack[*next]
                    && self.stack.len() < self.budget.max_cycle_length
                {
                    self.dfs(*next, &weight + w)?;
                }
            }
            self.stack.pop();
            self.on_stack[node] = false;
            Ok(())
        }
    }

    let mut search = Search {
        anchor: 0,
        adjacency: &adjacency,
        stack: Vec::new(),
        on_stack: vec![false; n],
        out: Vec::new(),
        budget,
    };
    for anchor in 0..n {
        search.anchor = anchor;
        search.dfs(anchor, Rational::zero())?;
    }
    Ok(search.out)
}

/// Verdict of the exhaustive mechanism-existence search.
#[derive(Debug)]
pub enum ExhaustVerdict {
    Feasible { tree: ImplementationTree, rule: AllocationRule, payments: PaymentTable },
    InfeasibleExhausted { trees_examined: usize, assignments_examined: usize },
}

impl ExhaustVerdict {
    pub fn is_feasible(&self) -> bool {
        matches!(self, ExhaustVerdict::Feasible { .. })
    }
}

/// Searches every implementation tree over `domains`, pairing each with every
/// assignment of leaf outcomes drawn from `optimal_sets(profile)` (the
/// allocations optimal at that profile), for one that passes the OSP check.
///
/// A leaf may only be labeled with an allocation optimal for every profile
/// compatible with it, so the search is complete for exact-optimality claims:
/// if it exhausts, no exactly optimal OSP mechanism exists over these domains.
pub fn exhaust_trees_for_optimality(
    domains: &DomainProfile,
    optimal_sets: &dyn Fn(&TypeProfile) -> Vec<Allocation>,
    budget: &OracleBudget,
) -> Result<ExhaustVerdict> {
    let profile_count = domains.profile_count()?;
    if profile_count > budget.max_profiles {
        return Err(Error::BudgetExceeded("profile space too large to exhaust".into()));
    }
    let per_profile: Vec<Vec<Allocation>> =
        domains.profiles().map(|p| optimal_sets(&p)).collect();

    let trees = enumerate_trees(domains, budget.max_trees)?;
    let mut assignments_examined = 0usize;
    let trees_examined = trees.len();

    'tree: for tree in &trees {
        // per-leaf candidates: allocations optimal for every compatible profile
        let leaves = tree.leaves();
        let mut candidates: Vec<Vec<Allocation>> = Vec::with_capacity(leaves.len());
        let mut leaf_of_profile = vec![usize::MAX; profile_count];
        for (slot, &leaf) in leaves.iter().enumerate() {
            let compatible = tree.compatible_profiles(leaf)?;
            let mut common: Option<Vec<Allocation>> = None;
            for profile in &compatible {
                let index = domains.index_of(profile)?;
                leaf_of_profile[index] = slot;
                let here = &per_profile[index];
                common = Some(match common {
                    None => here.clone(),
                    Some(prev) => prev.into_iter().filter(|a| here.contains(a)).collect(),
                });
            }
            let common = common.unwrap_or_default();
            if common.is_empty() {
                continue 'tree; // this tree cannot realize an optimal rule
            }
            candidates.push(common);
        }

        // walk the product of per-leaf choices
        let mut choice = vec![0usize; leaves.len()];
        loop {
            assignments_examined += 1;
            if assignments_examined > budget.max_trees {
                return Err(Error::BudgetExceeded("leaf assignment search".into()));
            }
            let table: Vec<Allocation> = (0..profile_count)
                .map(|p| candidates[leaf_of_profile[p]][choice[leaf_of_profile[p]]].clone())
                .collect();
            let rule = AllocationRule::from_table(domains.clone(), table)?;
            // cheap necessary filter first, then the full decision
            if check_two_cycles(&rule, tree)?.holds {
                if let OspVerdict::Osp { payments } = check_osp(&rule, tree)? {
                    // rebuild the tree with concrete leaf outcomes
                    let concrete = bind_leaves(tree, &candidates, &choice)?;
                    return Ok(ExhaustVerdict::Feasible { tree: concrete, rule, payments });
                }
            }
            let mut pos = choice.len();
            let mut advanced = false;
            while pos > 0 {
                pos -= 1;
                choice[pos] += 1;
                if choice[pos] < candidates[pos].len() {
                    advanced = true;
                    break;
                }
                choice[pos] = 0;
            }
            if !advanced {
                break;
            }
        }
    }
    Ok(ExhaustVerdict::InfeasibleExhausted { trees_examined, assignments_examined })
}

fn bind_leaves(
    tree: &ImplementationTree,
    candidates: &[Vec<Allocation>],
    choice: &[usize],
) -> Result<ImplementationTree> {
    fn rebind(
        spec: &TreeSpec,
        leaves_in_order: &mut usize,
        pick: &dyn Fn(usize) -> Allocation,
    ) -> TreeSpec {
        match spec {
            TreeSpec::Leaf { leaf } => {
                let slot = *leaves_in_order;
                *leaves_in_order += 1;
                match leaf {
                    LeafOutcome::Deferred { .. } => TreeSpec::leaf(pick(slot)),
                    LeafOutcome::Loads(a) => TreeSpec::leaf(a.clone()),
                }
            }
            TreeSpec::Node { agent, children } => TreeSpec::Node {
                agent: *agent,
                children: children
                    .iter()
                    .map(|e| crate::imptree::TreeEdge {
                        types: e.types.clone(),
                        subtree: rebind(&e.subtree, leaves_in_order, pick),
                    })
                    .collect(),
            },
        }
    }
    let mut counter = 0usize;
    let spec = rebind(&tree.to_spec(), &mut counter, &|slot| {
        candidates[slot][choice[slot]].clone()
    });
    ImplementationTree::from_spec(tree.domains().clone(), spec)
}
