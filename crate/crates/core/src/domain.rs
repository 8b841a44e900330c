//! Type profiles and per-agent finite domains.

use crate::error::{Error, Result};
use crate::rational::Rational;
use serde::{Deserialize, Serialize};
use std::fmt;

/// One type per agent.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TypeProfile(pub Vec<Rational>);

impl TypeProfile {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, agent: usize) -> &Rational {
        &self.0[agent]
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Rational> {
        self.0.iter()
    }

    /// Returns a copy with agent `agent`'s type replaced.
    pub fn with(&self, agent: usize, value: Rational) -> TypeProfile {
        let mut values = self.0.clone();
        values[agent] = value;
        TypeProfile(values)
    }

    /// Canonical comma-joined encoding, used as a JSON map key.
    pub fn key(&self) -> String {
        self.0.iter().map(|r| r.to_string()).collect::<Vec<_>>().join(",")
    }

    pub fn parse_key(s: &str, expected_len: usize) -> Result<TypeProfile> {
        let values: Result<Vec<Rational>> = s.split(',').map(|p| p.parse()).collect();
        let values = values?;
        if values.len() != expected_len {
            return Err(Error::LengthMismatch { expected: expected_len, got: values.len() });
        }
        Ok(TypeProfile(values))
    }
}

impl fmt::Debug for TypeProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({})", self.key())
    }
}

impl From<Vec<Rational>> for TypeProfile {
    fn from(values: Vec<Rational>) -> Self {
        TypeProfile(values)
    }
}

/// Finite, strictly sorted, non-empty type set per agent.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<Rational>>", into = "Vec<Vec<Rational>>")]
pub struct DomainProfile {
    per_agent: Vec<Vec<Rational>>,
}

impl DomainProfile {
    pub fn new(per_agent: Vec<Vec<Rational>>) -> Result<Self> {
        for (i, dom) in per_agent.iter().enumerate() {
            if dom.is_empty() {
                return Err(Error::InvalidDomain(format!("agent {i} has an empty domain")));
            }
            for w in dom.windows(2) {
                if w[0] >= w[1] {
                    return Err(Error::InvalidDomain(format!(
                        "agent {i} domain must be strictly increasing"
                    )));
                }
            }
            if dom[0].is_negative() {
                return Err(Error::InvalidDomain(format!(
                    "agent {i} domain contains a negative cost"
                )));
            }
        }
        Ok(DomainProfile { per_agent })
    }

    /// Homogeneous domain: every agent shares `values`.
    pub fn homogeneous(agents: usize, values: Vec<Rational>) -> Result<Self> {
        DomainProfile::new(vec![values; agents])
    }

    pub fn agents(&self) -> usize {
        self.per_agent.len()
    }

    pub fn domain(&self, agent: usize) -> &[Rational] {
        &self.per_agent[agent]
    }

    pub fn domains(&self) -> &[Vec<Rational>] {
        &self.per_agent
    }

    pub fn low(&self, agent: usize) -> &Rational {
        self.per_agent[agent].first().expect("domains are non-empty")
    }

    pub fn high(&self, agent: usize) -> &Rational {
        self.per_agent[agent].last().expect("domains are non-empty")
    }

    pub fn contains(&self, profile: &TypeProfile) -> bool {
        profile.len() == self.agents()
            && profile
                .iter()
                .zip(&self.per_agent)
                .all(|(v, dom)| dom.binary_search(v).is_ok())
    }

    /// Number of full profiles, erroring on overflow.
    pub fn profile_count(&self) -> Result<usize> {
        self.per_agent.iter().try_fold(1usize, |acc, dom| {
            acc.checked_mul(dom.len())
                .ok_or_else(|| Error::BudgetExceeded("profile space overflows usize".into()))
        })
    }

    /// Profiles in lexicographic order (agent 0 most significant).
    pub fn profiles(&self) -> ProfileIter<'_> {
        ProfileIter { domains: self, cursor: vec![0; self.agents()], done: false }
    }

    /// Lexicographic rank of a profile.
    pub fn index_of(&self, profile: &TypeProfile) -> Result<usize> {
        if profile.len() != self.agents() {
            return Err(Error::LengthMismatch { expected: self.agents(), got: profile.len() });
        }
        let mut index = 0usize;
        for (agent, value) in profile.iter().enumerate() {
            let pos = self.per_agent[agent]
                .binary_search(value)
                .map_err(|_| Error::ProfileOutsideDomain)?;
            index = index * self.per_agent[agent].len() + pos;
        }
        Ok(index)
    }

    pub fn profile_at(&self, mut index: usize) -> TypeProfile {
        let mut values = vec![Rational::zero(); self.agents()];
        for agent in (0..self.agents()).rev() {
            let len = self.per_agent[agent].len();
            values[agent] = self.per_agent[agent][index % len].clone();
            index /= len;
        }
        TypeProfile(values)
    }

    pub fn max_domain_size(&self) -> usize {
        self.per_agent.iter().map(Vec::len).max().unwrap_or(0)
    }
}

impl fmt::Debug for DomainProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.per_agent.iter()).finish()
    }
}

impl TryFrom<Vec<Vec<Rational>>> for DomainProfile {
    type Error = Error;
    fn try_from(v: Vec<Vec<Rational>>) -> Result<Self> {
        DomainProfile::new(v)
    }
}

impl From<DomainProfile> for Vec<Vec<Rational>> {
    fn from(d: DomainProfile) -> Self {
        d.per_agent
    }
}

pub struct ProfileIter<'a> {
    domains: &'a DomainProfile,
    cursor: Vec<usize>,
    done: bool,
}

impl Iterator for ProfileIter<'_> {
    type Item = TypeProfile;

    fn next(&mut self) -> Option<TypeProfile> {
        if self.done {
            return None;
        }
        let profile = TypeProfile(
            self.cursor
                .iter()
                .enumerate()
                .map(|(agent, &pos)| self.domains.per_agent[agent][pos].clone())
                .collect(),
        );
        // odometer increment, agent 0 most significant
        let mut agent = self.cursor.len();
        loop {
            if agent == 0 {
                self.done = true;
                break;
            }
            agent -= 1;
            self.cursor[agent] += 1;
            if self.cursor[agent] < self.domains.per_agent[agent].len() {
                break;
            }
            self.cursor[agent] = 0;
        }
        if self.cursor.is_empty() {
            self.done = true;
        }
        Some(profile)
    }
}

/// Enumerates the product of the given per-agent type sets, skipping `skip`.
/// Each yielded profile has full length with `skip`'s slot filled by `fill`.
pub(crate) fn product_with_fixed(
    sets: &[Vec<Rational>],
    skip: usize,
    fill: &Rational,
) -> Vec<TypeProfile> {
    let mut out = Vec::new();
    let mut current: Vec<Rational> = sets
        .iter()
        .enumerate()
        .map(|(i, s)| if i == skip { fill.clone() } else { s[0].clone() })
        .collect();
    let mut cursor = vec![0usize; sets.len()];
    loop {
        out.push(TypeProfile(current.clone()));
        let mut agent = sets.len();
        let mut advanced = false;
        while agent > 0 {
            agent -= 1;
            if agent == skip {
                continue;
            }
            cursor[agent] += 1;
            if cursor[agent] < sets[agent].len() {
                current[agent] = sets[agent][cursor[agent]].clone();
                advanced = true;
                break;
            }
            cursor[agent] = 0;
            current[agent] = sets[agent][0].clone();
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

    fn d(values: &[&[i64]]) -> DomainProfile {
        DomainProfile::new(values.iter().map(|v| v.iter().map(|&x| rat(x)).collect()).collect())
            .unwrap()
    }

    #[test]
    fn rejects_malformed_domains() {
        assert!(DomainProfile::new(vec![vec![]]).is_err());
        assert!(DomainProfile::new(vec![vec![rat(2), rat(1)]]).is_err());
        assert!(DomainProfile::new(vec![vec![rat(1), rat(1)]]).is_err());
        assert!(DomainProfile::new(vec![vec![rat(-1), rat(1)]]).is_err());
    }

    #[test]
    fn profile_enumeration_is_lexicographic_and_indexed() {
        let dom = d(&[&[1, 3], &[1, 2, 4]]);
        let profiles: Vec<_> = dom.profiles().collect();
        assert_eq!(profiles.len(), 6);
        assert_eq!(dom.profile_count().unwrap(), 6);
        assert_eq!(profiles[0], TypeProfile(vec![rat(1), rat(1)]));
        assert_eq!(profiles[5], TypeProfile(vec![rat(3), rat(4)]));
        for (i, p) in profiles.iter().enumerate() {
            assert_eq!(dom.index_of(p).unwrap(), i);
            assert_eq!(&dom.profile_at(i), p);
        }
        assert!(dom.index_of(&TypeProfile(vec![rat(2), rat(1)])).is_err());
    }

    #[test]
    fn product_with_fixed_covers_others() {
        let sets = vec![vec![rat(1), rat(3)], vec![rat(5)], vec![rat(2), rat(4)]];
        let profiles = product_with_fixed(&sets, 1, &rat(9));
        assert_eq!(profiles.len(), 4);
        assert!(profiles.iter().all(|p| p.get(1) == &rat(9)));
    }
}
