//! Implementation trees: the extensive-form querying protocols behind a
//! mechanism.
//!
//! Internal nodes name the queried (divergent) agent; the edges out of a node
//! partition that agent's current domain into at least two non-empty subsets.
//! Leaves either carry a concrete allocation or a deferred marker to be bound
//! by a search harness. Every full type profile is compatible with exactly one
//! root-to-leaf path.

use crate::allocation::{Allocation, AllocationRule};
use crate::domain::{DomainProfile, TypeProfile};
use crate::error::{Error, Result};
use crate::rational::Rational;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

pub type NodeId = usize;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LeafOutcome {
    Loads(Allocation),
    Deferred { deferred: usize },
}

impl LeafOutcome {
    pub fn allocation(&self) -> Result<&Allocation> {
        match self {
            LeafOutcome::Loads(a) => Ok(a),
            LeafOutcome::Deferred { .. } => Err(Error::DeferredOutcome),
        }
    }
}

/// Construction and wire shape of a tree, before validation.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TreeSpec {
    Node { agent: usize, children: Vec<TreeEdge> },
    Leaf { leaf: LeafOutcome },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeEdge {
    pub types: Vec<Rational>,
    pub subtree: TreeSpec,
}

impl TreeSpec {
    pub fn leaf(allocation: Allocation) -> TreeSpec {
        TreeSpec::Leaf { leaf: LeafOutcome::Loads(allocation) }
    }

    pub fn deferred(id: usize) -> TreeSpec {
        TreeSpec::Leaf { leaf: LeafOutcome::Deferred { deferred: id } }
    }

    pub fn node(agent: usize, children: Vec<(Vec<Rational>, TreeSpec)>) -> TreeSpec {
        TreeSpec::Node {
            agent,
            children: children
                .into_iter()
                .map(|(types, subtree)| TreeEdge { types, subtree })
                .collect(),
        }
    }
}

#[derive(Clone, Debug)]
enum NodeKind {
    Internal { agent: usize, children: Vec<(Vec<Rational>, NodeId)> },
    Leaf(LeafOutcome),
}

#[derive(Clone, Debug)]
struct Node {
    parent: Option<(NodeId, usize)>,
    kind: NodeKind,
}

/// A vertex of the tree where types `type_a < type_b` of `agent` are routed to
/// different children; `current_domains` snapshots every agent's current
/// domain at that vertex.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SeparatingEvent {
    pub node: NodeId,
    pub agent: usize,
    pub type_a: Rational,
    pub type_b: Rational,
    pub current_domains: Vec<Vec<Rational>>,
}

impl SeparatingEvent {
    /// Current domains of every agent other than the divergent one.
    pub fn others_domains(&self) -> Vec<(usize, &[Rational])> {
        self.current_domains
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != self.agent)
            .map(|(i, d)| (i, d.as_slice()))
            .collect()
    }
}

#[derive(Clone, Debug)]
pub struct ImplementationTree {
    domains: DomainProfile,
    nodes: Vec<Node>,
}

impl ImplementationTree {
    /// Validates and interns a tree description.
    pub fn from_spec(domains: DomainProfile, spec: TreeSpec) -> Result<Self> {
        let mut tree = ImplementationTree { domains, nodes: Vec::new() };
        let current: Vec<Vec<Rational>> = tree.domains.domains().to_vec();
        tree.intern(&spec, None, current)?;
        Ok(tree)
    }

    /// The tree with a single leaf: no agent is ever queried.
    pub fn trivial(domains: DomainProfile, outcome: Allocation) -> Result<Self> {
        ImplementationTree::from_spec(domains, TreeSpec::leaf(outcome))
    }

    fn intern(
        &mut self,
        spec: &TreeSpec,
        parent: Option<(NodeId, usize)>,
        current: Vec<Vec<Rational>>,
    ) -> Result<NodeId> {
        let id = self.nodes.len();
        match spec {
            TreeSpec::Leaf { leaf } => {
                if let LeafOutcome::Loads(a) = leaf {
                    if a.len() != self.domains.agents() {
                        return Err(Error::InvalidTree(format!(
                            "leaf allocation has {} entries for {} agents",
                            a.len(),
                            self.domains.agents()
                        )));
                    }
                }
                self.nodes.push(Node { parent, kind: NodeKind::Leaf(leaf.clone()) });
                Ok(id)
            }
            TreeSpec::Node { agent, children } => {
                let agent = *agent;
                if agent >= self.domains.agents() {
                    return Err(Error::InvalidTree(format!("unknown agent {agent}")));
                }
                if children.len() < 2 {
                    return Err(Error::InvalidTree(format!(
                        "node {id} must split into at least two children"
                    )));
                }
                let live = &current[agent];
                let mut covered: Vec<Rational> = Vec::new();
                for edge in children {
                    if edge.types.is_empty() {
                        return Err(Error::InvalidTree(format!("node {id} has an empty edge label")));
                    }
                    for w in edge.types.windows(2) {
                        if w[0] >= w[1] {
                            return Err(Error::InvalidTree(format!(
                                "node {id} edge label must be strictly sorted"
                            )));
                        }
                    }
                    for t in &edge.types {
                        if live.binary_search(t).is_err() {
                            return Err(Error::InvalidTree(format!(
                                "node {id} edge label {t} is outside agent {agent}'s current domain"
                            )));
                        }
                        if covered.binary_search(t).is_ok() {
                            return Err(Error::InvalidTree(format!(
                                "node {id} edge labels overlap on {t}"
                            )));
                        }
                        let pos = covered.binary_search(t).unwrap_err();
                        covered.insert(pos, t.clone());
                    }
                }
                if covered.len() != live.len() {
                    return Err(Error::InvalidTree(format!(
                        "node {id} edge labels do not cover agent {agent}'s current domain"
                    )));
                }
                self.nodes.push(Node {
                    parent,
                    kind: NodeKind::Internal { agent, children: Vec::new() },
                });
                let mut interned = Vec::with_capacity(children.len());
                for (edge_index, edge) in children.iter().enumerate() {
                    let mut child_current = current.clone();
                    child_current[agent] = edge.types.clone();
                    let child = self.intern(&edge.subtree, Some((id, edge_index)), child_current)?;
                    interned.push((edge.types.clone(), child));
                }
                match &mut self.nodes[id].kind {
                    NodeKind::Internal { children, .. } => *children = interned,
                    NodeKind::Leaf(_) => unreachable!(),
                }
                Ok(id)
            }
        }
    }

    pub fn domains(&self) -> &DomainProfile {
        &self.domains
    }

    pub fn root(&self) -> NodeId {
        0
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    fn node(&self, id: NodeId) -> Result<&Node> {
        self.nodes.get(id).ok_or(Error::UnknownNode(id))
    }

    pub fn is_leaf(&self, id: NodeId) -> Result<bool> {
        Ok(matches!(self.node(id)?.kind, NodeKind::Leaf(_)))
    }

    pub fn agent_at(&self, id: NodeId) -> Result<usize> {
        match &self.node(id)?.kind {
            NodeKind::Internal { agent, .. } => Ok(*agent),
            NodeKind::Leaf(_) => Err(Error::InvalidTree(format!("node {id} is a leaf"))),
        }
    }

    pub fn children(&self, id: NodeId) -> Result<&[(Vec<Rational>, NodeId)]> {
        match &self.node(id)?.kind {
            NodeKind::Internal { children, .. } => Ok(children),
            NodeKind::Leaf(_) => Err(Error::InvalidTree(format!("node {id} is a leaf"))),
        }
    }

    pub fn outcome(&self, id: NodeId) -> Result<&LeafOutcome> {
        match &self.node(id)?.kind {
            NodeKind::Leaf(outcome) => Ok(outcome),
            NodeKind::Internal { .. } => {
                Err(Error::InvalidTree(format!("node {id} is not a leaf")))
            }
        }
    }

    pub fn leaves(&self) -> Vec<NodeId> {
        (0..self.nodes.len())
            .filter(|&id| matches!(self.nodes[id].kind, NodeKind::Leaf(_)))
            .collect()
    }

    pub fn internal_nodes(&self) -> Vec<NodeId> {
        (0..self.nodes.len())
            .filter(|&id| matches!(self.nodes[id].kind, NodeKind::Internal { .. }))
            .collect()
    }

    /// Path of node ids from the root to `id`, inclusive.
    pub fn path_to(&self, id: NodeId) -> Result<Vec<NodeId>> {
        self.node(id)?;
        let mut path = vec![id];
        let mut cursor = id;
        while let Some((parent, _)) = self.nodes[cursor].parent {
            path.push(parent);
            cursor = parent;
        }
        path.reverse();
        Ok(path)
    }

    /// Types of `agent` compatible with the actions leading to `node`: the
    /// full domain intersected with the edge label of every ancestor at which
    /// `agent` diverged.
    pub fn current_domain(&self, node: NodeId, agent: usize) -> Result<Vec<Rational>> {
        if agent >= self.domains.agents() {
            return Err(Error::InvalidTree(format!("unknown agent {agent}")));
        }
        Ok(self.current_domains(node)?.swap_remove(agent))
    }

    /// Current domains of all agents at `node`.
    pub fn current_domains(&self, node: NodeId) -> Result<Vec<Vec<Rational>>> {
        let path = self.path_to(node)?;
        let mut current: Vec<Vec<Rational>> = self.domains.domains().to_vec();
        for window in path.windows(2) {
            let (parent, child) = (window[0], window[1]);
            if let NodeKind::Internal { agent, children } = &self.nodes[parent].kind {
                let (label, _) = children
                    .iter()
                    .find(|(_, c)| *c == child)
                    .expect("parent links are consistent");
                current[*agent] = label.clone();
            }
        }
        Ok(current)
    }

    /// The unique leaf compatible with `profile`.
    pub fn leaf_for(&self, profile: &TypeProfile) -> Result<NodeId> {
        Ok(*self.walk(profile)?.last().expect("walk returns at least the root"))
    }

    /// Root-to-leaf node path taken by `profile`.
    pub fn walk(&self, profile: &TypeProfile) -> Result<Vec<NodeId>> {
        if !self.domains.contains(profile) {
            return Err(Error::ProfileOutsideDomain);
        }
        let mut path = vec![self.root()];
        let mut cursor = self.root();
        loop {
            match &self.nodes[cursor].kind {
                NodeKind::Leaf(_) => return Ok(path),
                NodeKind::Internal { agent, children } => {
                    let value = profile.get(*agent);
                    let next = children
                        .iter()
                        .find(|(label, _)| label.binary_search(value).is_ok())
                        .map(|(_, child)| *child)
                        .ok_or_else(|| {
                            Error::InvariantViolation(format!(
                                "node {cursor} does not cover type {value}"
                            ))
                        })?;
                    path.push(next);
                    cursor = next;
                }
            }
        }
    }

    /// All full profiles compatible with `node` (the product of the current
    /// domains there).
    pub fn compatible_profiles(&self, node: NodeId) -> Result<Vec<TypeProfile>> {
        let current = self.current_domains(node)?;
        let mut out: Vec<Vec<Rational>> = vec![Vec::new()];
        for dom in &current {
            let mut next = Vec::with_capacity(out.len() * dom.len());
            for prefix in &out {
                for v in dom {
                    let mut p = prefix.clone();
                    p.push(v.clone());
                    next.push(p);
                }
            }
            out = next;
        }
        Ok(out.into_iter().map(TypeProfile).collect())
    }

    /// One event per (node, unordered pair of the divergent agent's types that
    /// land in different children at that node).
    pub fn separating_events(&self) -> Vec<SeparatingEvent> {
        let mut events = Vec::new();
        for id in 0..self.nodes.len() {
            if let NodeKind::Internal { agent, children } = &self.nodes[id].kind {
                let current = self.current_domains(id).expect("nodes are reachable");
                for (ca, child_a) in children.iter().enumerate() {
                    for child_b in &children[ca + 1..] {
                        for a in &child_a.0 {
                            for b in &child_b.0 {
                                let (lo, hi) =
                                    if a < b { (a.clone(), b.clone()) } else { (b.clone(), a.clone()) };
                                events.push(SeparatingEvent {
                                    node: id,
                                    agent: *agent,
                                    type_a: lo,
                                    type_b: hi,
                                    current_domains: current.clone(),
                                });
                            }
                        }
                    }
                }
            }
        }
        events
    }

    /// A tree is trivial when no profile pair ever diverges.
    pub fn is_trivial(&self) -> bool {
        self.internal_nodes().is_empty()
    }

    /// Materializes the social choice function induced by the leaf outcomes.
    pub fn allocation_rule(&self) -> Result<AllocationRule> {
        let mut table = Vec::with_capacity(self.domains.profile_count()?);
        for profile in self.domains.profiles() {
            let leaf = self.leaf_for(&profile)?;
            table.push(self.outcome(leaf)?.allocation()?.clone());
        }
        AllocationRule::from_table(self.domains.clone(), table)
    }

    pub fn to_spec(&self) -> TreeSpec {
        self.spec_of(self.root())
    }

    fn spec_of(&self, id: NodeId) -> TreeSpec {
        match &self.nodes[id].kind {
            NodeKind::Leaf(outcome) => TreeSpec::Leaf { leaf: outcome.clone() },
            NodeKind::Internal { agent, children } => TreeSpec::Node {
                agent: *agent,
                children: children
                    .iter()
                    .map(|(types, child)| TreeEdge {
                        types: types.clone(),
                        subtree: self.spec_of(*child),
                    })
                    .collect(),
            },
        }
    }
}

/// Enumerates every structurally distinct implementation tree over `domains`,
/// up to canonical child ordering (children sorted by the minimum element of
/// their edge label). Leaves carry deferred markers numbered in depth-first
/// order. `max_nodes` bounds the total number of nodes materialized across all
/// yielded trees.
pub fn enumerate_trees(domains: &DomainProfile, max_nodes: usize) -> Result<Vec<ImplementationTree>> {
    let masks: Vec<u32> = domains.domains().iter().map(|d| (1u32 << d.len()) - 1).collect();
    let mut memo: HashMap<Vec<u32>, Vec<TreeSpec>> = HashMap::new();
    let mut nodes_budget = max_nodes;
    let specs = enumerate_specs(domains, &masks, &mut memo, &mut nodes_budget)?;
    specs
        .into_iter()
        .map(|spec| {
            let mut counter = 0;
            let numbered = renumber_deferred(&spec, &mut counter);
            ImplementationTree::from_spec(domains.clone(), numbered)
        })
        .collect()
}

fn enumerate_specs(
    domains: &DomainProfile,
    masks: &[u32],
    memo: &mut HashMap<Vec<u32>, Vec<TreeSpec>>,
    nodes_budget: &mut usize,
) -> Result<Vec<TreeSpec>> {
    if let Some(cached) = memo.get(masks) {
        return Ok(cached.clone());
    }
    let mut out: Vec<TreeSpec> = vec![TreeSpec::deferred(0)];
    charge_nodes(nodes_budget, 1)?;
    for agent in 0..masks.len() {
        let bits: Vec<u32> = (0..32).filter(|b| masks[agent] & (1 << b) != 0).collect();
        if bits.len() < 2 {
            continue;
        }
        for blocks in set_partitions(&bits) {
            let mut child_specs: Vec<Vec<TreeSpec>> = Vec::with_capacity(blocks.len());
            for block in &blocks {
                let mut child_masks = masks.to_vec();
                child_masks[agent] = *block;
                child_specs.push(enumerate_specs(domains, &child_masks, memo, nodes_budget)?);
            }
            let labels: Vec<Vec<Rational>> = blocks
                .iter()
                .map(|block| {
                    (0..32)
                        .filter(|b| block & (1 << b) != 0)
                        .map(|b| domains.domain(agent)[b as usize].clone())
                        .collect()
                })
                .collect();
            let mut cursor = vec![0usize; blocks.len()];
            loop {
                let children: Vec<(Vec<Rational>, TreeSpec)> = labels
                    .iter()
                    .enumerate()
                    .map(|(i, label)| (label.clone(), child_specs[i][cursor[i]].clone()))
                    .collect();
                charge_nodes(nodes_budget, 1 + children.iter().map(|(_, s)| spec_nodes(s)).sum::<usize>())?;
                out.push(TreeSpec::node(agent, children));
                // odometer over child choices
                let mut pos = cursor.len();
                let mut advanced = false;
                while pos > 0 {
                    pos -= 1;
                    cursor[pos] += 1;
                    if cursor[pos] < child_specs[pos].len() {
                        advanced = true;
                        break;
                    }
                    cursor[pos] = 0;
                }
                if !advanced {
                    break;
                }
            }
        }
    }
    memo.insert(masks.to_vec(), out.clone());
    Ok(out)
}

fn charge_nodes(budget: &mut usize, cost: usize) -> Result<()> {
    if *budget < cost {
        return Err(Error::BudgetExceeded("tree enumeration exceeded the node budget".into()));
    }
    *budget -= cost;
    Ok(())
}

fn spec_nodes(spec: &TreeSpec) -> usize {
    match spec {
        TreeSpec::Leaf { .. } => 1,
        TreeSpec::Node { children, .. } => {
            1 + children.iter().map(|e| spec_nodes(&e.subtree)).sum::<usize>()
        }
    }
}

fn renumber_deferred(spec: &TreeSpec, counter: &mut usize) -> TreeSpec {
    match spec {
        TreeSpec::Leaf { leaf } => match leaf {
            LeafOutcome::Deferred { .. } => {
                let id = *counter;
                *counter += 1;
                TreeSpec::deferred(id)
            }
            LeafOutcome::Loads(a) => TreeSpec::leaf(a.clone()),
        },
        TreeSpec::Node { agent, children } => TreeSpec::Node {
            agent: *agent,
            children: children
                .iter()
                .map(|e| TreeEdge {
                    types: e.types.clone(),
                    subtree: renumber_deferred(&e.subtree, counter),
                })
                .collect(),
        },
    }
}

/// Partitions of the listed bit positions into at least two blocks, each block
/// encoded as a bitmask. Blocks are ordered by their minimum element.
fn set_partitions(bits: &[u32]) -> Vec<Vec<u32>> {
    let k = bits.len();
    let mut out = Vec::new();
    // restricted growth strings
    let mut rgs = vec![0usize; k];
    loop {
        let block_count = rgs.iter().copied().max().unwrap_or(0) + 1;
        if block_count >= 2 {
            let mut blocks = vec![0u32; block_count];
            for (i, &b) in rgs.iter().enumerate() {
                blocks[b] |= 1 << bits[i];
            }
            out.push(blocks);
        }
        // next RGS
        let mut pos = k;
        let mut advanced = false;
        while pos > 1 {
            pos -= 1;
            let cap = rgs[..pos].iter().copied().max().unwrap_or(0) + 1;
            if rgs[pos] < cap {
                rgs[pos] += 1;
                for r in rgs[pos + 1..].iter_mut() {
                    *r = 0;
                }
                advanced = true;
                break;
            }
        }
        if !advanced {
            return out;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;

    fn two_value(n: usize) -> DomainProfile {
        DomainProfile::homogeneous(n, vec![rat(1), rat(3)]).unwrap()
    }

    /// The triangle-network querying protocol: agent 0 owns the direct link,
    /// agents 1 and 2 the two-hop alternative.
    fn triangle_tree(low: i64, high: i64) -> ImplementationTree {
        let l = rat(low);
        let h = rat(high);
        let direct = Allocation(vec![1, 0, 0]);
        let two_hop = Allocation(vec![0, 1, 1]);
        let spec = TreeSpec::node(
            0,
            vec![
                (vec![l.clone()], TreeSpec::leaf(direct.clone())),
                (
                    vec![h.clone()],
                    TreeSpec::node(
                        1,
                        vec![
                            (
                                vec![l.clone()],
                                TreeSpec::node(
                                    2,
                                    vec![
                                        (vec![l.clone()], TreeSpec::leaf(two_hop)),
                                        (vec![h.clone()], TreeSpec::leaf(direct.clone())),
                                    ],
                                ),
                            ),
                            (vec![h.clone()], TreeSpec::leaf(direct)),
                        ],
                    ),
                ),
            ],
        );
        let domains = DomainProfile::homogeneous(3, vec![l, h]).unwrap();
        ImplementationTree::from_spec(domains, spec).unwrap()
    }

    #[test]
    fn validation_rejects_bad_edge_labels() {
        let domains = two_value(1);
        // overlapping labels
        let overlap = TreeSpec::node(
            0,
            vec![
                (vec![rat(1)], TreeSpec::deferred(0)),
                (vec![rat(1), rat(3)], TreeSpec::deferred(1)),
            ],
        );
        assert!(ImplementationTree::from_spec(domains.clone(), overlap).is_err());
        // incomplete cover
        let partial = TreeSpec::node(0, vec![(vec![rat(1)], TreeSpec::deferred(0))]);
        assert!(ImplementationTree::from_spec(domains.clone(), partial).is_err());
        // label outside the current domain deeper in the tree
        let stale = TreeSpec::node(
            0,
            vec![
                (
                    vec![rat(1)],
                    TreeSpec::node(
                        0,
                        vec![
                            (vec![rat(1)], TreeSpec::deferred(0)),
                            (vec![rat(3)], TreeSpec::deferred(1)),
                        ],
                    ),
                ),
                (vec![rat(3)], TreeSpec::deferred(2)),
            ],
        );
        assert!(ImplementationTree::from_spec(domains, stale).is_err());
    }

    #[test]
    fn current_domain_tracks_taken_edges() {
        let tree = triangle_tree(1, 3);
        // root: full domains for everyone
        for agent in 0..3 {
            assert_eq!(tree.current_domain(tree.root(), agent).unwrap(), vec![rat(1), rat(3)]);
        }
        // after the root's high edge, agent 0 is pinned to {high}
        let (_, high_child) = tree.children(tree.root()).unwrap()[1].clone();
        assert_eq!(tree.current_domain(high_child, 0).unwrap(), vec![rat(3)]);
        // an agent never queried on the path keeps her full domain
        assert_eq!(tree.current_domain(high_child, 2).unwrap(), vec![rat(1), rat(3)]);
    }

    #[test]
    fn leaf_for_matches_protocol() {
        let tree = triangle_tree(1, 3);
        let direct = Allocation(vec![1, 0, 0]);
        let two_hop = Allocation(vec![0, 1, 1]);
        let leaf = tree.leaf_for(&TypeProfile(vec![rat(1), rat(3), rat(1)])).unwrap();
        assert_eq!(tree.outcome(leaf).unwrap().allocation().unwrap(), &direct);
        let leaf = tree.leaf_for(&TypeProfile(vec![rat(3), rat(1), rat(1)])).unwrap();
        assert_eq!(tree.outcome(leaf).unwrap().allocation().unwrap(), &two_hop);
        // trivial tree sends every profile to its single leaf
        let trivial =
            ImplementationTree::trivial(two_value(2), Allocation(vec![0, 0])).unwrap();
        for p in trivial.domains().profiles() {
            assert_eq!(trivial.leaf_for(&p).unwrap(), trivial.root());
        }
    }

    #[test]
    fn separating_events_of_known_trees() {
        let trivial = ImplementationTree::trivial(two_value(2), Allocation(vec![0, 0])).unwrap();
        assert!(trivial.separating_events().is_empty());
        assert!(trivial.is_trivial());

        // one query per internal node, each separating low from high
        let tree = triangle_tree(1, 3);
        let events = tree.separating_events();
        assert_eq!(events.len(), 3);
        for e in &events {
            assert_eq!((e.type_a.clone(), e.type_b.clone()), (rat(1), rat(3)));
        }
        assert_eq!(
            events.iter().map(|e| e.agent).collect::<Vec<_>>(),
            vec![0, 1, 2]
        );

        // a three-way root split produces one event per pair landing apart
        let domains = DomainProfile::new(vec![vec![rat(1), rat(2), rat(3)]]).unwrap();
        let spec = TreeSpec::node(
            0,
            vec![
                (vec![rat(1)], TreeSpec::deferred(0)),
                (vec![rat(2), rat(3)], TreeSpec::deferred(1)),
            ],
        );
        let tree = ImplementationTree::from_spec(domains, spec).unwrap();
        let pairs: Vec<(Rational, Rational)> = tree
            .separating_events()
            .into_iter()
            .map(|e| (e.type_a, e.type_b))
            .collect();
        assert_eq!(pairs, vec![(rat(1), rat(2)), (rat(1), rat(3))]);
    }

    #[test]
    fn leaves_partition_the_domain() {
        let tree = triangle_tree(1, 3);
        let mut seen = std::collections::HashMap::new();
        for p in tree.domains().profiles() {
            let leaf = tree.leaf_for(&p).unwrap();
            *seen.entry(leaf).or_insert(0) += 1;
        }
        let total: usize = seen.values().sum();
        assert_eq!(total, 8);
        // every leaf's compatible set matches the walk-based census
        for leaf in tree.leaves() {
            let compat = tree.compatible_profiles(leaf).unwrap();
            assert_eq!(compat.len(), seen.get(&leaf).copied().unwrap_or(0));
            for p in compat {
                assert_eq!(tree.leaf_for(&p).unwrap(), leaf);
            }
        }
    }

    #[test]
    fn divergence_count_bounded_along_paths() {
        let domains = DomainProfile::new(vec![
            vec![rat(1), rat(2), rat(3)],
            vec![rat(1), rat(4)],
        ])
        .unwrap();
        let bound: usize = domains.domains().iter().map(|d| d.len() - 1).sum();
        for tree in enumerate_trees(&domains, 2_000_000).unwrap() {
            for leaf in tree.leaves() {
                let internal = tree.path_to(leaf).unwrap().len() - 1;
                assert!(internal <= bound, "path has {internal} divergences > {bound}");
            }
        }
    }

    #[test]
    fn enumeration_counts_match_independent_recurrence() {
        // Independent counting oracle over per-agent domain sizes (sizes <= 3):
        // 1 for the bare leaf, plus, for each agent and each partition of her
        // current domain, the product of the child counts. A 2-set has one
        // partition {a}{b}; a 3-set has three of shape {x}{yz} plus {a}{b}{c}.
        fn count3(sizes: &mut Vec<usize>) -> u64 {
            let mut total = 1u64;
            for agent in 0..sizes.len() {
                match sizes[agent] {
                    2 => {
                        sizes[agent] = 1;
                        let c = count3(sizes);
                        sizes[agent] = 2;
                        total += c * c;
                    }
                    3 => {
                        sizes[agent] = 1;
                        let c1 = count3(sizes);
                        sizes[agent] = 2;
                        let c2 = count3(sizes);
                        sizes[agent] = 1;
                        let c111 = count3(sizes);
                        sizes[agent] = 3;
                        total += 3 * c1 * c2 + c111 * c111 * c111;
                    }
                    _ => {}
                }
            }
            total
        }

        let one_singleton = DomainProfile::new(vec![vec![rat(5)]]).unwrap();
        assert_eq!(enumerate_trees(&one_singleton, 1000).unwrap().len(), 1);

        let one_pair = DomainProfile::new(vec![vec![rat(1), rat(2)]]).unwrap();
        assert_eq!(enumerate_trees(&one_pair, 1000).unwrap().len(), 2);

        let two_pairs = two_value(2);
        let trees = enumerate_trees(&two_pairs, 100_000).unwrap();
        assert_eq!(trees.len() as u64, count3(&mut vec![2, 2]));

        let mixed = DomainProfile::new(vec![
            vec![rat(1), rat(2), rat(3)],
            vec![rat(1), rat(4)],
        ])
        .unwrap();
        let trees = enumerate_trees(&mixed, 2_000_000).unwrap();
        assert_eq!(trees.len() as u64, count3(&mut vec![3, 2]));

        // trees are pairwise distinct
        let mut specs: Vec<String> = trees
            .iter()
            .map(|t| format!("{:?}", t.to_spec()))
            .collect();
        specs.sort();
        specs.dedup();
        assert_eq!(specs.len(), trees.len());
    }

    #[test]
    fn profiles_reaching_different_leaves_share_a_separating_event() {
        let domains = DomainProfile::new(vec![
            vec![rat(1), rat(2), rat(3)],
            vec![rat(1), rat(4)],
        ])
        .unwrap();
        for tree in enumerate_trees(&domains, 2_000_000).unwrap() {
            let events = tree.separating_events();
            let profiles: Vec<TypeProfile> = tree.domains().profiles().collect();
            for a in &profiles {
                for b in &profiles {
                    let (leaf_a, path_a) =
                        (tree.leaf_for(a).unwrap(), tree.walk(a).unwrap());
                    let leaf_b = tree.leaf_for(b).unwrap();
                    if leaf_a == leaf_b {
                        continue;
                    }
                    let path_b = tree.walk(b).unwrap();
                    // deepest shared node on both paths
                    let shared = path_a
                        .iter()
                        .zip(&path_b)
                        .take_while(|(x, y)| x == y)
                        .map(|(x, _)| *x)
                        .last()
                        .expect("paths share the root");
                    let agent = tree.agent_at(shared).unwrap();
                    let (va, vb) = (a.get(agent), b.get(agent));
                    let (lo, hi) = if va < vb { (va, vb) } else { (vb, va) };
                    assert!(
                        events.iter().any(|e| e.node == shared
                            && e.agent == agent
                            && &e.type_a == lo
                            && &e.type_b == hi),
                        "missing event at node {shared} separating {lo} from {hi}"
                    );
                }
            }
        }
    }

    #[test]
    fn enumeration_budget_is_enforced() {
        let domains = two_value(2);
        assert!(matches!(
            enumerate_trees(&domains, 3),
            Err(Error::BudgetExceeded(_))
        ));
    }

    #[test]
    fn spec_json_round_trip() {
        let tree = triangle_tree(1, 3);
        let spec = tree.to_spec();
        let json = serde_json::to_string(&spec).unwrap();
        let back: TreeSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(back, spec);
        let rebuilt = ImplementationTree::from_spec(tree.domains().clone(), back).unwrap();
        for p in tree.domains().profiles() {
            assert_eq!(
                tree.outcome(tree.leaf_for(&p).unwrap()).unwrap(),
                rebuilt.outcome(rebuilt.leaf_for(&p).unwrap()).unwrap()
            );
        }
        // deferred leaves survive the round trip too
        let spec = TreeSpec::node(
            0,
            vec![(vec![rat(1)], TreeSpec::deferred(0)), (vec![rat(3)], TreeSpec::deferred(1))],
        );
        let json = serde_json::to_string(&spec).unwrap();
        assert_eq!(serde_json::from_str::<TreeSpec>(&json).unwrap(), spec);
    }
}
