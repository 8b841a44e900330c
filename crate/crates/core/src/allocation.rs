//! Allocations, objectives, allocation rules, and payment tables.

use crate::domain::{DomainProfile, TypeProfile};
use crate::error::{Error, Result};
use crate::rational::Rational;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;

/// Per-agent job counts. Set systems restrict loads to {0,1}.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Allocation(pub Vec<u64>);

impl Allocation {
    pub fn zeros(agents: usize) -> Self {
        Allocation(vec![0; agents])
    }

    /// 0/1 selection vector from a set of selected agent indices.
    pub fn from_selected(agents: usize, selected: impl IntoIterator<Item = usize>) -> Self {
        let mut loads = vec![0; agents];
        for i in selected {
            loads[i] = 1;
        }
        Allocation(loads)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn load(&self, agent: usize) -> u64 {
        self.0[agent]
    }

    pub fn total(&self) -> u64 {
        self.0.iter().sum()
    }

    pub fn selected(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().enumerate().filter(|(_, &l)| l > 0).map(|(i, _)| i)
    }
}

impl fmt::Debug for Allocation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.0.iter()).finish()
    }
}

/// Maximum completion time `max_i b_i * x_i`.
pub fn makespan(x: &Allocation, b: &TypeProfile) -> Result<Rational> {
    if x.len() != b.len() {
        return Err(Error::LengthMismatch { expected: b.len(), got: x.len() });
    }
    let mut best = Rational::zero();
    for (load, cost) in x.0.iter().zip(b.iter()) {
        let completion = cost.scale(*load);
        if completion > best {
            best = completion;
        }
    }
    Ok(best)
}

/// Total cost of the selected elements `sum_i b_i * x_i`, loads restricted to {0,1}.
pub fn social_cost(x: &Allocation, b: &TypeProfile) -> Result<Rational> {
    if x.len() != b.len() {
        return Err(Error::LengthMismatch { expected: b.len(), got: x.len() });
    }
    let mut total = Rational::zero();
    for (load, cost) in x.0.iter().zip(b.iter()) {
        match load {
            0 => {}
            1 => total += cost,
            other => return Err(Error::NonBinaryLoad(*other)),
        }
    }
    Ok(total)
}

/// A social choice function materialized over a full finite domain.
#[derive(Clone, PartialEq, Eq)]
pub struct AllocationRule {
    domains: DomainProfile,
    table: Vec<Allocation>,
}

impl AllocationRule {
    /// Tabulates `f` over every profile of `domains`.
    pub fn tabulate(
        domains: DomainProfile,
        mut f: impl FnMut(&TypeProfile) -> Allocation,
    ) -> Result<Self> {
        let mut table = Vec::with_capacity(domains.profile_count()?);
        for profile in domains.profiles() {
            let allocation = f(&profile);
            if allocation.len() != domains.agents() {
                return Err(Error::LengthMismatch {
                    expected: domains.agents(),
                    got: allocation.len(),
                });
            }
            table.push(allocation);
        }
        Ok(AllocationRule { domains, table })
    }

    pub fn from_table(domains: DomainProfile, table: Vec<Allocation>) -> Result<Self> {
        if table.len() != domains.profile_count()? {
            return Err(Error::LengthMismatch {
                expected: domains.profile_count()?,
                got: table.len(),
            });
        }
        Ok(AllocationRule { domains, table })
    }

    pub fn domains(&self) -> &DomainProfile {
        &self.domains
    }

    pub fn get(&self, profile: &TypeProfile) -> Result<&Allocation> {
        Ok(&self.table[self.domains.index_of(profile)?])
    }

    pub fn get_by_index(&self, index: usize) -> &Allocation {
        &self.table[index]
    }

    pub fn load(&self, profile_index: usize, agent: usize) -> u64 {
        self.table[profile_index].load(agent)
    }
}

impl fmt::Debug for AllocationRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AllocationRule").field("profiles", &self.table.len()).finish()
    }
}

/// Per-profile payment vectors, one rational per agent, defined on the full domain.
#[derive(Clone, PartialEq, Eq)]
pub struct PaymentTable {
    domains: DomainProfile,
    table: Vec<Vec<Rational>>,
}

impl PaymentTable {
    pub fn zero(domains: DomainProfile) -> Result<Self> {
        let n = domains.agents();
        let count = domains.profile_count()?;
        Ok(PaymentTable { domains, table: vec![vec![Rational::zero(); n]; count] })
    }

    pub fn from_table(domains: DomainProfile, table: Vec<Vec<Rational>>) -> Result<Self> {
        if table.len() != domains.profile_count()? {
            return Err(Error::LengthMismatch {
                expected: domains.profile_count()?,
                got: table.len(),
            });
        }
        for row in &table {
            if row.len() != domains.agents() {
                return Err(Error::LengthMismatch { expected: domains.agents(), got: row.len() });
            }
        }
        Ok(PaymentTable { domains, table })
    }

    /// Tabulates payments from a per-profile function.
    pub fn tabulate(
        domains: DomainProfile,
        mut p: impl FnMut(&TypeProfile) -> Vec<Rational>,
    ) -> Result<Self> {
        let rows: Vec<Vec<Rational>> = domains.profiles().map(|profile| p(&profile)).collect();
        PaymentTable::from_table(domains, rows)
    }

    pub fn domains(&self) -> &DomainProfile {
        &self.domains
    }

    pub fn get(&self, profile: &TypeProfile) -> Result<&[Rational]> {
        Ok(&self.table[self.domains.index_of(profile)?])
    }

    pub fn get_by_index(&self, index: usize) -> &[Rational] {
        &self.table[index]
    }

    pub fn payment(&self, profile_index: usize, agent: usize) -> &Rational {
        &self.table[profile_index][agent]
    }

    /// Replaces one agent's column.
    pub fn set_agent_column(&mut self, agent: usize, column: Vec<Rational>) {
        for (row, value) in self.table.iter_mut().zip(column) {
            row[agent] = value;
        }
    }
}

impl fmt::Debug for PaymentTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PaymentTable").field("profiles", &self.table.len()).finish()
    }
}

impl Serialize for PaymentTable {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = BTreeMap::new();
        for (index, profile) in self.domains.profiles().enumerate() {
            map.insert(profile.key(), self.table[index].clone());
        }
        map.serialize(serializer)
    }
}

/// Deserializing a payment table needs the ambient domain, so it goes through
/// this helper rather than a `Deserialize` impl.
pub fn payment_table_from_map(
    domains: DomainProfile,
    map: &BTreeMap<String, Vec<Rational>>,
) -> Result<PaymentTable> {
    let mut table = vec![vec![Rational::zero(); domains.agents()]; domains.profile_count()?];
    let mut seen = 0usize;
    for (key, row) in map {
        let profile = TypeProfile::parse_key(key, domains.agents())?;
        let index = domains.index_of(&profile)?;
        if row.len() != domains.agents() {
            return Err(Error::LengthMismatch { expected: domains.agents(), got: row.len() });
        }
        table[index] = row.clone();
        seen += 1;
    }
    if seen != table.len() {
        return Err(Error::InvalidInstance(format!(
            "payment table covers {seen} of {} profiles",
            table.len()
        )));
    }
    PaymentTable::from_table(domains, table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;
    use proptest::prelude::*;

    #[test]
    fn makespan_examples() {
        let x = Allocation(vec![2, 1]);
        let b = TypeProfile(vec![rat(1), rat(2)]);
        assert_eq!(makespan(&x, &b).unwrap(), rat(2));
        assert_eq!(makespan(&Allocation(vec![0, 0]), &b).unwrap(), rat(0));
        assert_eq!(makespan(&Allocation(vec![3, 0]), &b).unwrap(), rat(3));
        assert!(makespan(&Allocation(vec![1]), &b).is_err());
    }

    #[test]
    fn social_cost_examples() {
        let b = TypeProfile(vec![rat(1), rat(1), rat(3)]);
        assert_eq!(social_cost(&Allocation(vec![1, 1, 0]), &b).unwrap(), rat(2));
        assert_eq!(social_cost(&Allocation(vec![0, 0, 0]), &b).unwrap(), rat(0));
        let b2 = TypeProfile(vec![Rational::new(5, 2), rat(7)]);
        assert_eq!(social_cost(&Allocation(vec![1, 0]), &b2).unwrap(), Rational::new(5, 2));
        assert!(matches!(
            social_cost(&Allocation(vec![2, 0, 0]), &b),
            Err(Error::NonBinaryLoad(2))
        ));
    }

    proptest! {
        // Raising any single cost never lowers either objective.
        #[test]
        fn objectives_are_monotone_in_costs(
            loads in proptest::collection::vec(0u64..3, 1..5),
            costs in proptest::collection::vec(0i64..20, 1..5),
            bump in 1i64..10,
        ) {
            let n = loads.len().min(costs.len());
            let x = Allocation(loads[..n].to_vec());
            let b = TypeProfile(costs[..n].iter().map(|&c| rat(c)).collect());
            for agent in 0..n {
                let raised = b.with(agent, b.get(agent) + &rat(bump));
                prop_assert!(makespan(&x, &raised).unwrap() >= makespan(&x, &b).unwrap());
                let sel = Allocation(x.0.iter().map(|&l| l.min(1)).collect());
                prop_assert!(social_cost(&sel, &raised).unwrap() >= social_cost(&sel, &b).unwrap());
            }
        }
    }
}
