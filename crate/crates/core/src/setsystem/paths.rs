//! Shortest-path procurement on two parallel paths, and the closed-form
//! feasibility test for exact OSP implementation on such networks.

use super::SetSystemInstance;
use crate::allocation::{Allocation, PaymentTable};
use crate::domain::DomainProfile;
use crate::error::{Error, Result};
use crate::imptree::{ImplementationTree, TreeSpec};
use crate::mechanism::Mechanism;
use crate::rational::Rational;

/// Two node-disjoint source-sink paths with `top` and `bottom` edges
/// (`top >= bottom >= 1`) and a common two-value cost domain. Elements
/// `0..top` form the top path, `top..top+bottom` the bottom path; ties prefer
/// the bottom path.
pub fn parallel_paths_instance(
    top: usize,
    bottom: usize,
    low: &Rational,
    high: &Rational,
) -> Result<SetSystemInstance> {
    if bottom < 1 || top < bottom {
        return Err(Error::Precondition("need top >= bottom >= 1".into()));
    }
    if !(low.is_positive() && low < high) {
        return Err(Error::Precondition("need 0 < low < high".into()));
    }
    let elements = top + bottom;
    let top_set: Vec<usize> = (0..top).collect();
    let bottom_set: Vec<usize> = (top..elements).collect();
    let domains = DomainProfile::homogeneous(elements, vec![low.clone(), high.clone()])?;
    // feasible index 0 = top, 1 = bottom; the tie order prefers bottom
    SetSystemInstance::new(elements, vec![top_set, bottom_set], Some(vec![1, 0]), domains)
}

/// Closed-form test: an exactly optimal OSP mechanism exists for two parallel
/// paths with two-value domains iff the bottom path is a single edge, or
/// `top > bottom > 1` and `high/low <= (top-1)/(bottom-1)`.
pub fn parallel_paths_feasible(
    top: usize,
    bottom: usize,
    low: &Rational,
    high: &Rational,
) -> Result<bool> {
    if bottom < 1 || top < bottom {
        return Err(Error::Precondition("need top >= bottom >= 1".into()));
    }
    if !(low.is_positive() && low < high) {
        return Err(Error::Precondition("need 0 < low < high".into()));
    }
    if bottom == 1 {
        return Ok(true);
    }
    if top == bottom {
        return Ok(false);
    }
    let ratio = high / low;
    let threshold = Rational::from((top - 1) as u64) / Rational::from((bottom - 1) as u64);
    Ok(ratio <= threshold)
}

/// The triangle network: element 0 is the direct source-sink edge, elements 1
/// and 2 form the two-hop alternative.
pub fn triangle_instance(low: &Rational, high: &Rational) -> Result<SetSystemInstance> {
    if low >= high {
        return Err(Error::Precondition("need low < high".into()));
    }
    let domains = DomainProfile::homogeneous(3, vec![low.clone(), high.clone()])?;
    SetSystemInstance::new(3, vec![vec![0], vec![1, 2]], None, domains)
}

/// The hand-built optimal OSP protocol for the triangle network with two-value
/// domains satisfying `2*low < high`: query the direct edge first and fall
/// back to it as soon as any two-hop edge admits a high cost. Payments reward
/// selected edges `high` and everyone else nothing.
pub fn triangle_mechanism(low: &Rational, high: &Rational) -> Result<Mechanism> {
    if !(&(low + low) < high) {
        return Err(Error::Precondition("triangle protocol expects 2*low < high".into()));
    }
    let inst = triangle_instance(low, high)?;
    let direct = Allocation(vec![1, 0, 0]);
    let two_hop = Allocation(vec![0, 1, 1]);
    let l = low.clone();
    let h = high.clone();
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
    let tree = ImplementationTree::from_spec(inst.domains().clone(), spec)?;
    let rule = tree.allocation_rule()?;
    let payments = PaymentTable::tabulate(inst.domains().clone(), |profile| {
        let allocation = rule.get(profile).expect("rule is total");
        (0..3).map(|i| high.scale(allocation.load(i))).collect()
    })?;
    Ok(Mechanism { tree, rule, payments: Some(payments) })
}
