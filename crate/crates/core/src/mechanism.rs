//! A mechanism bundles an implementation tree with its allocation rule and,
//! when the construction fixes them, explicit payments.

use crate::allocation::{Allocation, AllocationRule, PaymentTable};
use crate::domain::TypeProfile;
use crate::error::Result;
use crate::imptree::{ImplementationTree, NodeId};
use crate::rational::Rational;
use serde::Serialize;

#[derive(Debug)]
pub struct Mechanism {
    pub tree: ImplementationTree,
    pub rule: AllocationRule,
    pub payments: Option<PaymentTable>,
}

impl Mechanism {
    /// Bundles a tree whose leaves all carry concrete allocations.
    pub fn from_tree(tree: ImplementationTree) -> Result<Self> {
        let rule = tree.allocation_rule()?;
        Ok(Mechanism { tree, rule, payments: None })
    }

    pub fn with_payments(mut self, payments: PaymentTable) -> Self {
        self.payments = Some(payments);
        self
    }

    pub fn allocation_for(&self, profile: &TypeProfile) -> Result<&Allocation> {
        self.rule.get(profile)
    }

    /// Executes the protocol against a true profile, recording the audit trail.
    pub fn run(&self, profile: &TypeProfile) -> Result<MechanismTranscript> {
        let path = self.tree.walk(profile)?;
        let leaf = *path.last().expect("walk returns at least one node");
        let mut queries = Vec::new();
        for window in path.windows(2) {
            let (node, taken) = (window[0], window[1]);
            let agent = self.tree.agent_at(node)?;
            let children = self.tree.children(node)?;
            // yes/no phrasing exists whenever some edge is a singleton
            let singleton = children
                .iter()
                .find(|(label, _)| label.len() == 1)
                .map(|(label, _)| label[0].clone());
            if let Some(asked) = singleton {
                let yes = children
                    .iter()
                    .find(|(_, child)| *child == taken)
                    .map(|(label, _)| label.len() == 1 && label[0] == asked)
                    .unwrap_or(false);
                queries.push(QueryRecord { agent, asked, yes });
            }
        }
        let allocation = self.tree.outcome(leaf)?.allocation()?.clone();
        Ok(MechanismTranscript { queries, allocation, tree_trace: path })
    }
}

/// One yes/no price query.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct QueryRecord {
    pub agent: usize,
    pub asked: Rational,
    pub yes: bool,
}

/// Audit trail of one mechanism execution: replaying the trace against the
/// declared tree must reproduce the same leaf.
#[derive(Clone, Debug, Serialize)]
pub struct MechanismTranscript {
    pub queries: Vec<QueryRecord>,
    pub allocation: Allocation,
    pub tree_trace: Vec<NodeId>,
}

impl MechanismTranscript {
    pub fn leaf(&self) -> NodeId {
        *self.tree_trace.last().expect("trace is never empty")
    }

    /// Re-walks the declared tree with the profile and compares leaves.
    pub fn replays_on(&self, mechanism: &Mechanism, profile: &TypeProfile) -> Result<bool> {
        let path = mechanism.tree.walk(profile)?;
        Ok(path == self.tree_trace)
    }
}

/// Shared helper for adaptive auction builders: expands a stateful yes/no
/// protocol into a full implementation tree. `next` must either finish with an
/// allocation or ask one agent whether her type equals a value from her
/// current domain; forced questions (singleton current domain) are resolved
/// inline without creating a node.
pub(crate) trait AdaptiveProtocol: Sized {
    /// Current domain of an agent, maintained by the implementation.
    fn current_domain(&self, agent: usize) -> &[Rational];

    fn next(&self) -> Result<Step>;

    /// Applies an answer to the pending question.
    fn answer(&mut self, agent: usize, asked: &Rational, yes: bool) -> Result<()>;
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) enum Step {
    Ask { agent: usize, value: Rational },
    Done(Allocation),
}

pub(crate) fn expand_protocol<P: AdaptiveProtocol + Clone>(
    state: P,
) -> Result<crate::imptree::TreeSpec> {
    use crate::imptree::TreeSpec;
    let mut state = state;
    loop {
        match state.next()? {
            Step::Done(allocation) => return Ok(TreeSpec::leaf(allocation)),
            Step::Ask { agent, value } => {
                let current = state.current_domain(agent).to_vec();
                debug_assert!(current.binary_search(&value).is_ok());
                if current.len() == 1 {
                    // forced answer, no divergence: resolve without a node
                    state.answer(agent, &value, true)?;
                    continue;
                }
                let mut yes_state = state.clone();
                yes_state.answer(agent, &value, true)?;
                let yes_spec = expand_protocol(yes_state)?;
                let mut no_state = state;
                no_state.answer(agent, &value, false)?;
                let no_spec = expand_protocol(no_state)?;
                let no_label: Vec<Rational> =
                    current.iter().filter(|t| **t != value).cloned().collect();
                return Ok(TreeSpec::node(
                    agent,
                    vec![(vec![value], yes_spec), (no_label, no_spec)],
                ));
            }
        }
    }
}
