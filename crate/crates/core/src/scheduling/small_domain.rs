//! Exact OSP mechanism for two agents, two identical jobs, and a shared
//! three-value domain `{low, mid, high}`. Feasible exactly when `mid <= 2*low`
//! or `high <= 2*mid`; otherwise every OSP mechanism loses a factor two.

use crate::allocation::{Allocation, PaymentTable};
use crate::domain::DomainProfile;
use crate::error::{Error, Result};
use crate::imptree::{ImplementationTree, TreeSpec};
use crate::mechanism::Mechanism;
use crate::rational::Rational;

/// Payment constants satisfying `low < p_minus < mid < p_plus < high` and
/// `2*p_minus >= low + p_plus`: `p_plus` halfway between `mid` and the smaller
/// of `high` and `2*mid - low`, then `p_minus` halfway between its floor
/// `(low + p_plus) / 2` and `mid`.
pub fn default_payment_constants(
    low: &Rational,
    mid: &Rational,
    high: &Rational,
) -> (Rational, Rational) {
    let two = Rational::from_integer(2);
    let upper = {
        let alt = &(&two * mid) - low;
        if &alt < high {
            alt
        } else {
            high.clone()
        }
    };
    let p_plus = &(mid + &upper) / &two;
    let floor = &(low + &p_plus) / &two;
    let p_minus = &(&floor + mid) / &two;
    (p_minus, p_plus)
}

/// Builds the exact mechanism, or reports the regime infeasible.
///
/// Cases, writing `x ~ y` for `x < y <= 2x`:
/// - `low ~ mid`, `high > 2*mid`: split `{low, mid}` against `{high}`;
/// - `mid > 2*low`, `mid ~ high`: split `{low}` against `{mid, high}`;
/// - both adjacent pairs close and `high <= 2*low`: one job each, trivially;
/// - both adjacent pairs close and `high > 2*low`: a three-way root split.
pub fn two_job_three_value_mechanism(
    low: &Rational,
    mid: &Rational,
    high: &Rational,
    p_minus: &Rational,
    p_plus: &Rational,
) -> Result<Mechanism> {
    if !(low < mid && mid < high) {
        return Err(Error::Precondition("need low < mid < high".into()));
    }
    if !low.is_positive() {
        return Err(Error::NonPositiveCost);
    }
    let two = Rational::from_integer(2);
    let mid_close = mid <= &(&two * low);
    let high_close = high <= &(&two * mid);
    if !mid_close && !high_close {
        return Err(Error::InfeasibleRegime(
            "with mid > 2*low and high > 2*mid no OSP mechanism schedules two jobs exactly \
             optimally; a factor-two loss is unavoidable"
                .into(),
        ));
    }
    if !(low < p_minus && p_minus < mid && mid < p_plus && p_plus < high) {
        return Err(Error::Precondition(
            "payment constants must interleave the domain values".into(),
        ));
    }
    if (&two * p_minus) < (low + p_plus) {
        return Err(Error::Precondition(
            "payment constants must satisfy 2*p_minus >= low + p_plus".into(),
        ));
    }

    let domains =
        DomainProfile::homogeneous(2, vec![low.clone(), mid.clone(), high.clone()])?;
    let both_to_first = Allocation(vec![2, 0]);
    let both_to_second = Allocation(vec![0, 2]);
    let split = Allocation(vec![1, 1]);
    let zero = Rational::zero();

    // ([agent-0 loads], [payments]) per leaf, assembled per case
    let spec = if mid_close && !high_close {
        // share jobs unless exactly one agent admits the high cost
        let low_side = vec![low.clone(), mid.clone()];
        let high_side = vec![high.clone()];
        TreeSpec::node(
            0,
            vec![
                (
                    low_side.clone(),
                    TreeSpec::node(
                        1,
                        vec![
                            (low_side.clone(), TreeSpec::leaf(split.clone())),
                            (high_side.clone(), TreeSpec::leaf(both_to_first.clone())),
                        ],
                    ),
                ),
                (
                    high_side.clone(),
                    TreeSpec::node(
                        1,
                        vec![
                            (low_side, TreeSpec::leaf(both_to_second.clone())),
                            (high_side, TreeSpec::leaf(split.clone())),
                        ],
                    ),
                ),
            ],
        )
    } else if !mid_close && high_close {
        // share jobs unless exactly one agent reveals the low cost
        let low_side = vec![low.clone()];
        let high_side = vec![mid.clone(), high.clone()];
        TreeSpec::node(
            0,
            vec![
                (
                    low_side.clone(),
                    TreeSpec::node(
                        1,
                        vec![
                            (low_side.clone(), TreeSpec::leaf(split.clone())),
                            (high_side.clone(), TreeSpec::leaf(both_to_first.clone())),
                        ],
                    ),
                ),
                (
                    high_side.clone(),
                    TreeSpec::node(
                        1,
                        vec![
                            (low_side, TreeSpec::leaf(both_to_second.clone())),
                            (high_side, TreeSpec::leaf(split.clone())),
                        ],
                    ),
                ),
            ],
        )
    } else if high <= &(&two * low) {
        // every pair of values is within a factor two: one job each, no queries
        TreeSpec::leaf(split.clone())
    } else {
        // only the low/high contrast matters: three-way split for agent 0
        TreeSpec::node(
            0,
            vec![
                (
                    vec![low.clone()],
                    TreeSpec::node(
                        1,
                        vec![
                            (vec![low.clone(), mid.clone()], TreeSpec::leaf(split.clone())),
                            (vec![high.clone()], TreeSpec::leaf(both_to_first.clone())),
                        ],
                    ),
                ),
                (vec![mid.clone()], TreeSpec::leaf(split.clone())),
                (
                    vec![high.clone()],
                    TreeSpec::node(
                        1,
                        vec![
                            (vec![low.clone()], TreeSpec::leaf(both_to_second.clone())),
                            (vec![mid.clone(), high.clone()], TreeSpec::leaf(split.clone())),
                        ],
                    ),
                ),
            ],
        )
    };

    let tree = ImplementationTree::from_spec(domains.clone(), spec)?;
    let rule = tree.allocation_rule()?;

    // Single-split cases pay a uniform per-job rate: p_plus when the split
    // isolates the high value, p_minus when it isolates the low value. The
    // three-way case mixes them: agent 0 earns p_plus on shared leaves and
    // 2*p_minus when taking both jobs (feasible by 2*p_minus >= low + p_plus),
    // while agent 1's rate follows the subtree she was queried in.
    let three_way = mid_close && high_close && high > &(&two * low);
    let payments = PaymentTable::tabulate(domains, |profile| {
        let allocation = rule.get(profile).expect("rule is total");
        if !three_way {
            let rate = if high_close && !mid_close { p_minus } else { p_plus };
            return (0..2).map(|i| rate.scale(allocation.load(i))).collect();
        }
        let first = match allocation.load(0) {
            2 => &two * p_minus,
            1 => p_plus.clone(),
            _ => zero.clone(),
        };
        let second_rate = if profile.get(0) == low { p_plus } else { p_minus };
        vec![first, second_rate.scale(allocation.load(1))]
    })?;
    Ok(Mechanism { tree, rule, payments: Some(payments) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::allocation::makespan;
    use crate::cmon::{check_osp, truthful_dominance_holds};
    use crate::oracle::{brute_makespan_opt, OracleBudget};
    use crate::rational::rat;

    fn verify(low: i64, mid: i64, high: i64) {
        let (pm, pp) = default_payment_constants(&rat(low), &rat(mid), &rat(high));
        let mech =
            two_job_three_value_mechanism(&rat(low), &rat(mid), &rat(high), &pm, &pp).unwrap();
        let budget = OracleBudget::default();
        for profile in mech.rule.domains().profiles() {
            let chosen = makespan(mech.allocation_for(&profile).unwrap(), &profile).unwrap();
            let (_, best) = brute_makespan_opt(&profile, 2, &budget).unwrap();
            assert_eq!(chosen, best, "suboptimal at {profile:?}");
        }
        assert!(check_osp(&mech.rule, &mech.tree).unwrap().is_osp());
        assert!(truthful_dominance_holds(
            &mech.tree,
            &mech.rule,
            mech.payments.as_ref().unwrap()
        )
        .unwrap());
    }

    #[test]
    fn quoted_constant_check() {
        // 2*p_minus = 11/2 >= low + p_plus = 11/2 with the quoted constants
        let mech = two_job_three_value_mechanism(
            &rat(2),
            &rat(3),
            &rat(5),
            &Rational::new(11, 4),
            &Rational::new(7, 2),
        )
        .unwrap();
        assert!(check_osp(&mech.rule, &mech.tree).unwrap().is_osp());
    }

    #[test]
    fn feasible_cases_are_exact_and_osp() {
        verify(1, 2, 10); // adjacent low pair, distant high
        verify(1, 3, 5); // distant mid, adjacent high pair
        verify(2, 3, 5); // both adjacent, high > 2*low
        verify(3, 4, 5); // both adjacent, high <= 2*low
    }

    #[test]
    fn infeasible_regime_is_rejected() {
        let (pm, pp) = default_payment_constants(&rat(1), &rat(3), &rat(7));
        assert!(matches!(
            two_job_three_value_mechanism(&rat(1), &rat(3), &rat(7), &pm, &pp),
            Err(Error::InfeasibleRegime(_))
        ));
    }

    #[test]
    fn bad_payment_constants_are_rejected() {
        assert!(two_job_three_value_mechanism(&rat(2), &rat(3), &rat(5), &rat(1), &rat(4))
            .is_err());
        assert!(two_job_three_value_mechanism(&rat(2), &rat(3), &rat(5), &rat(52), &rat(4))
            .is_err());
        // violates 2*p_minus >= low + p_plus
        assert!(two_job_three_value_mechanism(
            &rat(2),
            &rat(3),
            &rat(5),
            &Rational::new(5, 2),
            &Rational::new(9, 2)
        )
        .is_err());
    }
}
