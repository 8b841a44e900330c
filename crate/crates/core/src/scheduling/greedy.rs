//! Greedy makespan-optimal assignment of identical jobs to related machines.

use crate::allocation::Allocation;
use crate::domain::TypeProfile;
use crate::error::{Error, Result};
use crate::rational::Rational;

/// Assigns `m` identical jobs one at a time, each to the machine with the
/// least resulting completion time; ties go to the faster machine, then to the
/// lower index. The result is the "most balanced" optimum: for machines
/// ordered by speed (index breaking equal costs), moving any single job
/// between a pair makes that pair worse.
pub fn greedy_optimal(b: &TypeProfile, m: u64) -> Result<Allocation> {
    if m > 0 && b.iter().any(|c| !c.is_positive()) {
        return Err(Error::NonPositiveCost);
    }
    if b.is_empty() {
        return if m == 0 {
            Ok(Allocation(vec![]))
        } else {
            Err(Error::Precondition("no machines to schedule on".into()))
        };
    }
    let n = b.len();
    let mut loads = vec![0u64; n];
    for _ in 0..m {
        let mut best: Option<(Rational, &Rational, usize)> = None;
        for (i, load) in loads.iter().enumerate() {
            let completion = b.get(i).scale(load + 1);
            let key = (completion, b.get(i), i);
            if best.as_ref().is_none_or(|current| key < *current) {
                best = Some(key);
            }
        }
        let (_, _, chosen) = best.expect("at least one machine");
        loads[chosen] += 1;
    }
    Ok(Allocation(loads))
}

/// Greedy assignment restricted to a subset of machines; the returned
/// allocation has full length with zeros elsewhere. Machine order (and the
/// index tie-break) follows ascending global index.
pub fn greedy_on_subset(b: &TypeProfile, machines: &[usize], m: u64) -> Result<Allocation> {
    if machines.iter().any(|&i| i >= b.len()) {
        return Err(Error::Precondition("machine index out of range".into()));
    }
    let sub = TypeProfile(machines.iter().map(|&i| b.get(i).clone()).collect());
    let packed = greedy_optimal(&sub, m)?;
    let mut loads = vec![0u64; b.len()];
    for (slot, &machine) in machines.iter().enumerate() {
        loads[machine] = packed.load(slot);
    }
    Ok(Allocation(loads))
}

/// Both balance inequalities that the greedy output satisfies for every
/// ordered machine pair `(i, j)` with `b_i < b_j`, or `b_i = b_j` and `i < j`:
/// `b_i (x_i + 1) > b_j x_j` and `b_j (x_j + 1) >= b_i x_i`.
pub fn balance_conditions_hold(x: &Allocation, b: &TypeProfile) -> bool {
    crate::oracle::satisfies_balance_rule(x, b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;

    fn profile(values: &[i64]) -> TypeProfile {
        TypeProfile(values.iter().map(|&v| rat(v)).collect())
    }

    #[test]
    fn greedy_examples() {
        assert_eq!(greedy_optimal(&profile(&[1, 2]), 3).unwrap(), Allocation(vec![2, 1]));
        assert_eq!(greedy_optimal(&profile(&[1, 1, 1]), 3).unwrap(), Allocation(vec![1, 1, 1]));
        assert_eq!(greedy_optimal(&profile(&[1, 1]), 3).unwrap(), Allocation(vec![2, 1]));
        assert!(greedy_optimal(&profile(&[0, 1]), 1).is_err());
        assert_eq!(greedy_optimal(&profile(&[5]), 0).unwrap(), Allocation(vec![0]));
    }

    #[test]
    fn greedy_satisfies_balance_conditions_exhaustively() {
        let values = [1i64, 2, 3, 5];
        for n in 1..=3usize {
            let mut combo = vec![0usize; n];
            loop {
                let b = TypeProfile(combo.iter().map(|&k| rat(values[k])).collect());
                for m in 0..=5u64 {
                    let x = greedy_optimal(&b, m).unwrap();
                    assert!(balance_conditions_hold(&x, &b), "b={b:?} m={m}");
                    assert_eq!(x.total(), m);
                }
                let mut pos = n;
                let mut advanced = false;
                while pos > 0 {
                    pos -= 1;
                    combo[pos] += 1;
                    if combo[pos] < values.len() {
                        advanced = true;
                        break;
                    }
                    combo[pos] = 0;
                }
                if !advanced {
                    break;
                }
            }
        }
    }

    #[test]
    fn greedy_matches_brute_force_makespan() {
        let budget = crate::oracle::OracleBudget::default();
        for b in [profile(&[1, 2, 4]), profile(&[2, 2, 3]), profile(&[1, 5, 100]), profile(&[3])] {
            for m in 0..=6u64 {
                let greedy = greedy_optimal(&b, m).unwrap();
                let (brute, best) = crate::oracle::brute_makespan_opt(&b, m, &budget).unwrap();
                assert_eq!(crate::allocation::makespan(&greedy, &b).unwrap(), best);
                assert_eq!(greedy, brute, "b={b:?} m={m}");
            }
        }
    }

    #[test]
    fn subset_greedy_maps_back_to_global_indices() {
        let b = profile(&[7, 1, 3, 2]);
        let x = greedy_on_subset(&b, &[1, 3], 3).unwrap();
        assert_eq!(x, Allocation(vec![0, 2, 0, 1]));
    }
}
