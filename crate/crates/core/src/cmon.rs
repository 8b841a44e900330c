//! Cycle monotonicity for obviously strategyproof mechanisms.
//!
//! For each agent the incentive constraints of a mechanism (an allocation rule
//! plus an implementation tree) form a weighted directed graph on type
//! profiles. The mechanism admits OSP payments exactly when no agent's graph
//! has a negative-weight cycle; payments are then shortest-path distances from
//! a virtual source.

use crate::allocation::{Allocation, AllocationRule, PaymentTable};
use crate::domain::{product_with_fixed, TypeProfile};
use crate::error::{Error, Result};
use crate::imptree::{ImplementationTree, SeparatingEvent};
use crate::rational::Rational;
use serde::Serialize;
use std::collections::HashSet;

/// A directed incentive edge between two full type profiles (indices into the
/// lexicographic profile order).
#[derive(Clone, Debug)]
pub struct OspEdge {
    pub from: usize,
    pub to: usize,
    pub weight: Rational,
    /// Index into [`OspGraph::events`] of one separating event inducing the edge.
    pub witness: usize,
}

/// The per-agent incentive graph of a mechanism.
#[derive(Debug)]
pub struct OspGraph {
    pub agent: usize,
    rule: AllocationRule,
    /// Sorted by `(from, to)`; at most one edge per ordered pair.
    pub edges: Vec<OspEdge>,
    pub events: Vec<SeparatingEvent>,
}

impl OspGraph {
    pub fn node_count(&self) -> usize {
        self.rule.domains().profile_count().expect("validated at construction")
    }

    pub fn profile(&self, index: usize) -> TypeProfile {
        self.rule.domains().profile_at(index)
    }

    pub fn rule(&self) -> &AllocationRule {
        &self.rule
    }

    pub fn edge_between(&self, from: usize, to: usize) -> Option<&OspEdge> {
        self.edges
            .binary_search_by(|e| (e.from, e.to).cmp(&(from, to)))
            .ok()
            .map(|i| &self.edges[i])
    }
}

/// Single-parameter cost: `type * load`.
fn single_parameter_cost(t: &Rational, outcome: &Allocation, agent: usize) -> Rational {
    t.scale(outcome.load(agent))
}

/// Builds agent `agent`'s incentive graph under the single-parameter cost
/// model `t_i * f_i`.
pub fn build_osp_graph(
    rule: &AllocationRule,
    tree: &ImplementationTree,
    agent: usize,
) -> Result<OspGraph> {
    build_osp_graph_with_cost(rule, tree, agent, &single_parameter_cost)
}

/// Generalized builder: `cost(type, outcome, agent)` may be any valuation, so
/// the machinery also covers settings where costs are not `t_i * f_i`.
///
/// For every separating event `(u, i, a, b)` and every pair of other-agent
/// subprofiles drawn from the current domains at `u`, the graph contains both
/// directed edges between `(a, x_-i)` and `(b, y_-i)`. The edge leaving
/// profile `A` toward profile `B` weighs `cost(A_i, f(B)) - cost(A_i, f(A))`.
pub fn build_osp_graph_with_cost(
    rule: &AllocationRule,
    tree: &ImplementationTree,
    agent: usize,
    cost: &dyn Fn(&Rational, &Allocation, usize) -> Rational,
) -> Result<OspGraph> {
    if rule.domains() != tree.domains() {
        return Err(Error::InvalidInstance(
            "allocation rule and tree are defined over different domains".into(),
        ));
    }
    let domains = rule.domains();
    let events: Vec<SeparatingEvent> =
        tree.separating_events().into_iter().filter(|e| e.agent == agent).collect();

    let mut seen: HashSet<(usize, usize)> = HashSet::new();
    let mut pairs: Vec<(usize, usize, usize)> = Vec::new();
    for (event_index, event) in events.iter().enumerate() {
        let froms = product_with_fixed(&event.current_domains, agent, &event.type_a);
        let tos = product_with_fixed(&event.current_domains, agent, &event.type_b);
        let from_ids: Vec<usize> =
            froms.iter().map(|p| domains.index_of(p)).collect::<Result<_>>()?;
        let to_ids: Vec<usize> = tos.iter().map(|p| domains.index_of(p)).collect::<Result<_>>()?;
        for &f in &from_ids {
            for &t in &to_ids {
                if seen.insert((f, t)) {
                    pairs.push((f, t, event_index));
                }
                if seen.insert((t, f)) {
                    pairs.push((t, f, event_index));
                }
            }
        }
    }
    pairs.sort_unstable_by_key(|&(f, t, _)| (f, t));

    let edges = pairs
        .into_iter()
        .map(|(from, to, witness)| {
            let from_type = domains.profile_at(from).get(agent).clone();
            let weight = cost(&from_type, rule.get_by_index(to), agent)
                - cost(&from_type, rule.get_by_index(from), agent);
            OspEdge { from, to, weight, witness }
        })
        .collect();

    Ok(OspGraph { agent, rule: rule.clone(), edges, events })
}

/// A strictly negative cycle, the certificate that no OSP payments exist.
#[derive(Clone, Debug, Serialize)]
pub struct NegativeCycle {
    pub agent: usize,
    /// Cycle vertices in order; the edge list closes back to the first.
    pub profiles: Vec<TypeProfile>,
    pub edge_weights: Vec<Rational>,
    pub total: Rational,
}

/// Looks for a negative-weight cycle via Bellman-Ford from a virtual source
/// with zero-weight edges into every profile. Negative two-cycles are reported
/// first; longer witnesses are shortened along chords until minimal, so the
/// certificate stays readable.
pub fn negative_cycle(graph: &OspGraph) -> Option<NegativeCycle> {
    let n = graph.node_count();
    if n == 0 || graph.edges.is_empty() {
        return None;
    }

    // two-cycle scan: deterministic minimum-weight witness
    let mut best_pair: Option<(Rational, usize, usize)> = None;
    for edge in &graph.edges {
        if edge.from < edge.to {
            if let Some(back) = graph.edge_between(edge.to, edge.from) {
                let total = &edge.weight + &back.weight;
                if total.is_negative() {
                    let candidate = (total, edge.from, edge.to);
                    if best_pair.as_ref().is_none_or(|b| candidate < *b) {
                        best_pair = Some(candidate);
                    }
                }
            }
        }
    }
    if let Some((_, from, to)) = best_pair {
        return Some(assemble_cycle(graph, &[from, to]));
    }

    // Bellman-Ford with implicit source: all distances start at zero.
    let mut dist = vec![Rational::zero(); n];
    let mut pred = vec![usize::MAX; n];
    let mut cycle_entry = None;
    for pass in 0..n {
        let mut updated = false;
        for edge in &graph.edges {
            let candidate = &dist[edge.from] + &edge.weight;
            if candidate < dist[edge.to] {
                dist[edge.to] = candidate;
                pred[edge.to] = edge.from;
                updated = true;
                if pass == n - 1 {
                    cycle_entry = Some(edge.to);
                }
            }
        }
        if !updated {
            return None;
        }
    }
    let mut cursor = cycle_entry?;
    for _ in 0..n {
        cursor = pred[cursor];
    }
    let mut nodes = vec![cursor];
    let mut walk = pred[cursor];
    while walk != cursor {
        nodes.push(walk);
        walk = pred[walk];
    }
    nodes.reverse();
    let nodes = shorten_cycle(graph, nodes);
    Some(assemble_cycle(graph, &nodes))
}

/// Repeatedly replaces an arc of the cycle by a single existing chord whenever
/// the shortcut cycle stays strictly negative.
fn shorten_cycle(graph: &OspGraph, mut nodes: Vec<usize>) -> Vec<usize> {
    'outer: loop {
        let k = nodes.len();
        if k <= 2 {
            return nodes;
        }
        let weight_of = |from: usize, to: usize| -> Rational {
            graph.edge_between(from, to).expect("cycle edges exist").weight.clone()
        };
        for start in 0..k {
            for span in 2..k {
                let end = (start + span) % k;
                let chord = match graph.edge_between(nodes[start], nodes[end]) {
                    Some(e) => e,
                    None => continue,
                };
                let mut total = chord.weight.clone();
                let mut cursor = end;
                while cursor != start {
                    let next = (cursor + 1) % k;
                    total += &weight_of(nodes[cursor], nodes[next]);
                    cursor = next;
                }
                if total.is_negative() {
                    // traversal order: start, then the chord target onward
                    let mut shorter = vec![nodes[start]];
                    let mut cursor = end;
                    while cursor != start {
                        shorter.push(nodes[cursor]);
                        cursor = (cursor + 1) % k;
                    }
                    nodes = shorter;
                    continue 'outer;
                }
            }
        }
        return nodes;
    }
}

fn assemble_cycle(graph: &OspGraph, nodes: &[usize]) -> NegativeCycle {
    // canonical rotation for reproducibility
    let min_pos = nodes
        .iter()
        .enumerate()
        .min_by_key(|(_, &v)| v)
        .map(|(i, _)| i)
        .unwrap_or(0);
    let rotated: Vec<usize> =
        (0..nodes.len()).map(|i| nodes[(min_pos + i) % nodes.len()]).collect();
    let mut weights = Vec::with_capacity(rotated.len());
    let mut total = Rational::zero();
    for i in 0..rotated.len() {
        let from = rotated[i];
        let to = rotated[(i + 1) % rotated.len()];
        let w = graph
            .edge_between(from, to)
            .expect("cycle must follow existing edges")
            .weight
            .clone();
        total += &w;
        weights.push(w);
    }
    NegativeCycle {
        agent: graph.agent,
        profiles: rotated.iter().map(|&i| graph.profile(i)).collect(),
        edge_weights: weights,
        total,
    }
}

/// Shortest-path distances from the virtual source; these are the canonical
/// OSP payments for the graph's agent.
pub fn synthesize_payments(graph: &OspGraph) -> Result<Vec<Rational>> {
    let n = graph.node_count();
    let mut dist = vec![Rational::zero(); n];
    for _ in 0..n.saturating_sub(1) {
        let mut updated = false;
        for edge in &graph.edges {
            let candidate = &dist[edge.from] + &edge.weight;
            if candidate < dist[edge.to] {
                dist[edge.to] = candidate;
                updated = true;
            }
        }
        if !updated {
            return Ok(dist);
        }
    }
    for edge in &graph.edges {
        if &dist[edge.from] + &edge.weight < dist[edge.to] {
            return Err(Error::NegativeCyclePresent);
        }
    }
    Ok(dist)
}

/// Checks the incentive constraint `p(to) - p(from) <= weight(from -> to)` on
/// every edge, exactly.
pub fn payments_satisfy_constraints(graph: &OspGraph, payments: &[Rational]) -> bool {
    graph
        .edges
        .iter()
        .all(|e| &payments[e.to] - &payments[e.from] <= e.weight)
}

/// Outcome of the full OSP decision.
#[derive(Debug)]
pub enum OspVerdict {
    Osp { payments: PaymentTable },
    NotOsp { cycle: NegativeCycle },
}

impl OspVerdict {
    pub fn is_osp(&self) -> bool {
        matches!(self, OspVerdict::Osp { .. })
    }

    pub fn payments(&self) -> Option<&PaymentTable> {
        match self {
            OspVerdict::Osp { payments } => Some(payments),
            OspVerdict::NotOsp { .. } => None,
        }
    }

    pub fn cycle(&self) -> Option<&NegativeCycle> {
        match self {
            OspVerdict::NotOsp { cycle } => Some(cycle),
            OspVerdict::Osp { .. } => None,
        }
    }
}

/// Full decision: builds every agent's graph and hunts for negative cycles.
/// Returns synthesized payments on success, or the first negative cycle found
/// (lowest agent index) as a certificate.
pub fn check_osp(rule: &AllocationRule, tree: &ImplementationTree) -> Result<OspVerdict> {
    let domains = rule.domains().clone();
    let mut payments = PaymentTable::zero(domains.clone())?;
    for agent in 0..domains.agents() {
        let graph = build_osp_graph(rule, tree, agent)?;
        if let Some(cycle) = negative_cycle(&graph) {
            return Ok(OspVerdict::NotOsp { cycle });
        }
        let column = synthesize_payments(&graph)?;
        debug_assert!(payments_satisfy_constraints(&graph, &column));
        payments.set_agent_column(agent, column);
    }
    Ok(OspVerdict::Osp { payments })
}

/// Result of the fast length-two check.
#[derive(Debug)]
pub struct TwoCycleReport {
    pub holds: bool,
    pub violation: Option<NegativeCycle>,
    /// Set when some agent's domain has four or more values: the two-cycle
    /// verdict is then only necessary for OSP, not sufficient.
    pub insufficient_domains: bool,
}

/// Checks `(from_i - to_i) * (f_i(to) - f_i(from)) >= 0` for every incentive
/// edge pair. Equivalent to the full check whenever every domain has at most
/// three values.
pub fn check_two_cycles(rule: &AllocationRule, tree: &ImplementationTree) -> Result<TwoCycleReport> {
    let domains = rule.domains();
    let insufficient = domains.domains().iter().any(|d| d.len() >= 4);
    for agent in 0..domains.agents() {
        let graph = build_osp_graph(rule, tree, agent)?;
        let mut worst: Option<(Rational, usize, usize)> = None;
        for edge in &graph.edges {
            if edge.from < edge.to {
                if let Some(back) = graph.edge_between(edge.to, edge.from) {
                    let total = &edge.weight + &back.weight;
                    if total.is_negative() {
                        let candidate = (total, edge.from, edge.to);
                        if worst.as_ref().is_none_or(|w| candidate < *w) {
                            worst = Some(candidate);
                        }
                    }
                }
            }
        }
        if let Some((_, from, to)) = worst {
            return Ok(TwoCycleReport {
                holds: false,
                violation: Some(assemble_cycle(&graph, &[from, to])),
                insufficient_domains: insufficient,
            });
        }
    }
    Ok(TwoCycleReport { holds: true, violation: None, insufficient_domains: insufficient })
}

/// Validates a negative-cycle certificate against a freshly built graph: every
/// edge must exist with the recorded weight and the total must be negative.
pub fn certificate_is_valid(
    rule: &AllocationRule,
    tree: &ImplementationTree,
    cycle: &NegativeCycle,
) -> Result<bool> {
    let graph = build_osp_graph(rule, tree, cycle.agent)?;
    let domains = rule.domains();
    let mut total = Rational::zero();
    for i in 0..cycle.profiles.len() {
        let from = domains.index_of(&cycle.profiles[i])?;
        let to = domains.index_of(&cycle.profiles[(i + 1) % cycle.profiles.len()])?;
        match graph.edge_between(from, to) {
            Some(edge) if edge.weight == cycle.edge_weights[i] => total += &edge.weight,
            _ => return Ok(false),
        }
    }
    Ok(total == cycle.total && total.is_negative())
}

/// Simulates the defining inequality of obvious strategyproofness directly:
/// at every separating event, the worst truthful utility must weakly beat the
/// best utility achievable by taking the other action. Independent of the
/// graph machinery; used to spot-check synthesized payments.
pub fn truthful_dominance_holds(
    tree: &ImplementationTree,
    rule: &AllocationRule,
    payments: &PaymentTable,
) -> Result<bool> {
    let domains = rule.domains();
    for event in tree.separating_events() {
        let agent = event.agent;
        let truthful = |own: &Rational| -> Result<Rational> {
            // worst utility over others' subprofiles when acting per own type
            let mut worst: Option<Rational> = None;
            for profile in product_with_fixed(&event.current_domains, agent, own) {
                let index = domains.index_of(&profile)?;
                let u = payments.payment(index, agent).clone()
                    - own.scale(rule.get_by_index(index).load(agent));
                if worst.as_ref().is_none_or(|w| u < *w) {
                    worst = Some(u);
                }
            }
            Ok(worst.expect("current domains are non-empty"))
        };
        let deviating = |true_type: &Rational, played: &Rational| -> Result<Rational> {
            // best utility over others' subprofiles when acting per played type
            let mut best: Option<Rational> = None;
            for profile in product_with_fixed(&event.current_domains, agent, played) {
                let index = domains.index_of(&profile)?;
                let u = payments.payment(index, agent).clone()
                    - true_type.scale(rule.get_by_index(index).load(agent));
                if best.as_ref().is_none_or(|b| u > *b) {
                    best = Some(u);
                }
            }
            Ok(best.expect("current domains are non-empty"))
        };
        let (a, b) = (&event.type_a, &event.type_b);
        if truthful(a)? < deviating(a, b)? || truthful(b)? < deviating(b, a)? {
            return Ok(false);
        }
    }
    Ok(true)
}
