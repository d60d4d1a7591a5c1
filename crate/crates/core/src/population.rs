//! World state: agents, communities, the membership relation, and community ages.
//!
//! Membership is stored from both sides. Each community keeps a dense member
//! list so that sizes are O(1) and uniform member sampling is a single index
//! draw. Each agent keeps a list of `(community, slot)` pairs sorted by
//! community id, where `slot` is the agent's position in that community's
//! member list. Removal swaps the last member into the vacated slot and fixes
//! up the moved agent's back-pointer.

use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Random number generator used for every draw in a run.
pub type SimRng = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct AgentId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CommunityId(pub u32);

impl AgentId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl CommunityId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for AgentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for CommunityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PopulationError {
    #[error("a population needs at least one agent")]
    NoAgents,
    #[error("a population needs at least one community")]
    NoCommunities,
    #[error("unknown agent id {0}")]
    UnknownAgent(u32),
    #[error("unknown community id {0}")]
    UnknownCommunity(u32),
}

/// Community sizes at one measurement point, one entry per community.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SizeDistribution {
    sizes: Vec<u32>,
}

impl SizeDistribution {
    pub fn new(sizes: Vec<u32>) -> Self {
        Self { sizes }
    }

    pub fn sizes(&self) -> &[u32] {
        &self.sizes
    }

    pub fn len(&self) -> usize {
        self.sizes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sizes.is_empty()
    }

    /// Sum of all sizes, i.e. the number of membership edges.
    pub fn total(&self) -> u64 {
        self.sizes.iter().map(|&s| u64::from(s)).sum()
    }

    pub fn max(&self) -> u32 {
        self.sizes.iter().copied().max().unwrap_or(0)
    }

    pub fn nonzero(&self) -> usize {
        self.sizes.iter().filter(|&&s| s > 0).count()
    }

    pub fn into_inner(self) -> Vec<u32> {
        self.sizes
    }
}

impl From<Vec<u32>> for SizeDistribution {
    fn from(sizes: Vec<u32>) -> Self {
        Self::new(sizes)
    }
}

#[derive(Debug, Clone)]
pub struct Population {
    members: Vec<Vec<AgentId>>,
    joined: Vec<Vec<(CommunityId, u32)>>,
    ages: Vec<u32>,
    step: u32,
}

impl Population {
    /// Empty world: nobody belongs to anything, every community has age 1.
    pub fn new(n_agents: usize, n_communities: usize) -> Result<Self, PopulationError> {
        if n_agents == 0 {
            return Err(PopulationError::NoAgents);
        }
        if n_communities == 0 {
            return Err(PopulationError::NoCommunities);
        }
        Ok(Self {
            members: vec![Vec::new(); n_communities],
            joined: vec![Vec::new(); n_agents],
            ages: vec![1; n_communities],
            step: 0,
        })
    }

    pub fn n_agents(&self) -> usize {
        self.joined.len()
    }

    pub fn n_communities(&self) -> usize {
        self.members.len()
    }

    pub fn step(&self) -> u32 {
        self.step
    }

    pub fn agents(&self) -> impl ExactSizeIterator<Item = AgentId> {
        (0..self.n_agents() as u32).map(AgentId)
    }

    pub fn communities(&self) -> impl ExactSizeIterator<Item = CommunityId> {
        (0..self.n_communities() as u32).map(CommunityId)
    }

    fn check_agent(&self, a: AgentId) -> Result<(), PopulationError> {
        if a.index() < self.n_agents() {
            Ok(())
        } else {
            Err(PopulationError::UnknownAgent(a.0))
        }
    }

    fn check_community(&self, c: CommunityId) -> Result<(), PopulationError> {
        if c.index() < self.n_communities() {
            Ok(())
        } else {
            Err(PopulationError::UnknownCommunity(c.0))
        }
    }

    pub fn community_size(&self, c: CommunityId) -> Result<u32, PopulationError> {
        self.check_community(c)?;
        Ok(self.size(c))
    }

    /// Unchecked size lookup for hot loops; panics on an unknown id.
    #[inline]
    pub fn size(&self, c: CommunityId) -> u32 {
        self.members[c.index()].len() as u32
    }

    /// Steps since creation, starting at 1.
    #[inline]
    pub fn age(&self, c: CommunityId) -> u32 {
        self.ages[c.index()]
    }

    /// Members of `c` in storage order (not sorted).
    #[inline]
    pub fn members(&self, c: CommunityId) -> &[AgentId] {
        &self.members[c.index()]
    }

    /// Communities of `a`, ascending by id.
    #[inline]
    pub fn communities_of(&self, a: AgentId) -> impl ExactSizeIterator<Item = CommunityId> + '_ {
        self.joined[a.index()].iter().map(|&(c, _)| c)
    }

    #[inline]
    pub fn membership_count(&self, a: AgentId) -> usize {
        self.joined[a.index()].len()
    }

    /// Position of `a` inside `members(c)`, if it is a member.
    #[inline]
    pub fn member_slot(&self, a: AgentId, c: CommunityId) -> Option<usize> {
        let list = &self.joined[a.index()];
        list.binary_search_by_key(&c, |&(cc, _)| cc)
            .ok()
            .map(|i| list[i].1 as usize)
    }

    #[inline]
    pub fn is_member(&self, a: AgentId, c: CommunityId) -> bool {
        self.joined[a.index()]
            .binary_search_by_key(&c, |&(cc, _)| cc)
            .is_ok()
    }

    /// Adds `a` to `c`. Returns whether the relation changed.
    pub fn join(&mut self, a: AgentId, c: CommunityId) -> Result<bool, PopulationError> {
        self.check_agent(a)?;
        self.check_community(c)?;
        let list = &mut self.joined[a.index()];
        match list.binary_search_by_key(&c, |&(cc, _)| cc) {
            Ok(_) => Ok(false),
            Err(at) => {
                let members = &mut self.members[c.index()];
                list.insert(at, (c, members.len() as u32));
                members.push(a);
                Ok(true)
            }
        }
    }

    /// Removes `a` from `c`. Returns whether the relation changed.
    pub fn leave(&mut self, a: AgentId, c: CommunityId) -> Result<bool, PopulationError> {
        self.check_agent(a)?;
        self.check_community(c)?;
        let list = &mut self.joined[a.index()];
        let Ok(at) = list.binary_search_by_key(&c, |&(cc, _)| cc) else {
            return Ok(false);
        };
        let (_, slot) = list.remove(at);
        let members = &mut self.members[c.index()];
        members.swap_remove(slot as usize);
        if let Some(&moved) = members.get(slot as usize) {
            let moved_list = &mut self.joined[moved.index()];
            let i = moved_list
                .binary_search_by_key(&c, |&(cc, _)| cc)
                .expect("member list and agent list out of sync");
            moved_list[i].1 = slot;
        }
        Ok(true)
    }

    pub fn snapshot_sizes(&self) -> SizeDistribution {
        SizeDistribution::new(self.members.iter().map(|m| m.len() as u32).collect())
    }

    /// Number of (agent, community) membership pairs.
    pub fn membership_edges(&self) -> u64 {
        self.joined.iter().map(|l| l.len() as u64).sum()
    }

    /// Moves to the next step: every community ages by one.
    pub fn advance(&mut self) {
        for age in &mut self.ages {
            *age = age.saturating_add(1);
        }
        self.step += 1;
    }

    /// Rebuilds the relation from the community side and compares it with the
    /// agent side, including slot back-pointers.
    pub fn is_consistent(&self) -> bool {
        let mut rebuilt: Vec<Vec<(CommunityId, u32)>> = vec![Vec::new(); self.n_agents()];
        for (ci, members) in self.members.iter().enumerate() {
            for (slot, &a) in members.iter().enumerate() {
                if a.index() >= self.n_agents() {
                    return false;
                }
                rebuilt[a.index()].push((CommunityId(ci as u32), slot as u32));
            }
        }
        rebuilt == self.joined
    }
}

/// Population plus the run's random stream.
#[derive(Debug, Clone)]
pub struct PopulationState {
    pub population: Population,
    pub rng: SimRng,
}

pub fn new_population(
    n_agents: usize,
    n_communities: usize,
    seed: u64,
) -> Result<PopulationState, PopulationError> {
    Ok(PopulationState {
        population: Population::new(n_agents, n_communities)?,
        rng: SimRng::seed_from_u64(seed),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    #[test]
    fn fresh_population_is_empty() {
        let state = new_population(9000, 200, 7).unwrap();
        let sizes = state.population.snapshot_sizes();
        assert_eq!(sizes.len(), 200);
        assert!(sizes.sizes().iter().all(|&s| s == 0));
        assert_eq!(state.population.step(), 0);
        assert!(state.population.communities().all(|c| state.population.age(c) == 1));
    }

    #[test]
    fn minimal_world() {
        let state = new_population(1, 1, 0).unwrap();
        assert_eq!(state.population.n_agents(), 1);
        assert_eq!(state.population.community_size(CommunityId(0)), Ok(0));
    }

    #[test]
    fn rejects_empty_worlds() {
        assert_eq!(new_population(0, 5, 0).unwrap_err(), PopulationError::NoAgents);
        assert_eq!(
            new_population(5, 0, 0).unwrap_err(),
            PopulationError::NoCommunities
        );
    }

    #[test]
    fn same_seed_same_stream() {
        let mut a = new_population(10, 3, 99).unwrap();
        let mut b = new_population(10, 3, 99).unwrap();
        let xs: Vec<u64> = (0..16).map(|_| a.rng.random()).collect();
        let ys: Vec<u64> = (0..16).map(|_| b.rng.random()).collect();
        assert_eq!(xs, ys);
    }

    #[test]
    fn join_leave_counting() {
        let mut p = Population::new(3, 2).unwrap();
        let c = CommunityId(1);
        assert_eq!(p.community_size(c), Ok(0));
        assert!(p.join(AgentId(0), c).unwrap());
        assert!(!p.join(AgentId(0), c).unwrap());
        assert_eq!(p.community_size(c), Ok(1));
        p.join(AgentId(1), c).unwrap();
        assert_eq!(p.community_size(c), Ok(2));
        assert!(p.leave(AgentId(0), c).unwrap());
        assert_eq!(p.community_size(c), Ok(1));
        assert!(!p.leave(AgentId(0), c).unwrap());
        assert_eq!(p.community_size(c), Ok(1));
        assert!(!p.leave(AgentId(2), CommunityId(0)).unwrap());
        assert!(p.is_consistent());
    }

    #[test]
    fn join_then_leave_restores_relation() {
        let mut p = Population::new(4, 3).unwrap();
        p.join(AgentId(1), CommunityId(2)).unwrap();
        p.join(AgentId(3), CommunityId(2)).unwrap();
        let before = p.snapshot_sizes();
        p.join(AgentId(0), CommunityId(2)).unwrap();
        p.leave(AgentId(0), CommunityId(2)).unwrap();
        assert_eq!(p.snapshot_sizes(), before);
        assert!(p.is_member(AgentId(1), CommunityId(2)));
        assert!(p.is_member(AgentId(3), CommunityId(2)));
        assert!(p.is_consistent());
    }

    #[test]
    fn everyone_joins_one_community() {
        let mut p = Population::new(9000, 200).unwrap();
        for a in 0..9000 {
            p.join(AgentId(a), CommunityId(5)).unwrap();
        }
        assert_eq!(p.community_size(CommunityId(5)), Ok(9000));
        assert_eq!(p.membership_edges(), 9000);
    }

    #[test]
    fn unknown_ids_rejected() {
        let mut p = Population::new(2, 2).unwrap();
        assert_eq!(
            p.join(AgentId(2), CommunityId(0)),
            Err(PopulationError::UnknownAgent(2))
        );
        assert_eq!(
            p.leave(AgentId(0), CommunityId(9)),
            Err(PopulationError::UnknownCommunity(9))
        );
        assert_eq!(
            p.community_size(CommunityId(2)),
            Err(PopulationError::UnknownCommunity(2))
        );
    }

    #[test]
    fn snapshot_after_one_join() {
        let mut p = Population::new(5, 200).unwrap();
        p.join(AgentId(3), CommunityId(17)).unwrap();
        let s = p.snapshot_sizes();
        assert_eq!(s.sizes().iter().filter(|&&x| x == 1).count(), 1);
        assert_eq!(s.sizes()[17], 1);
        assert_eq!(s.total(), 1);
    }

    #[test]
    fn advance_ages_everything() {
        let mut p = Population::new(1, 3).unwrap();
        p.advance();
        p.advance();
        assert_eq!(p.step(), 2);
        assert!(p.communities().all(|c| p.age(c) == 3));
    }

    proptest! {
        #[test]
        fn relation_stays_consistent(ops in prop::collection::vec((any::<bool>(), 0u32..6, 0u32..4), 0..200)) {
            let mut p = Population::new(6, 4).unwrap();
            let mut reference = std::collections::BTreeSet::new();
            for (is_join, a, c) in ops {
                if is_join {
                    p.join(AgentId(a), CommunityId(c)).unwrap();
                    reference.insert((a, c));
                } else {
                    p.leave(AgentId(a), CommunityId(c)).unwrap();
                    reference.remove(&(a, c));
                }
                prop_assert!(p.is_consistent());
            }
            prop_assert_eq!(p.snapshot_sizes().total(), p.membership_edges());
            prop_assert_eq!(p.membership_edges(), reference.len() as u64);
            for (a, c) in &reference {
                prop_assert!(p.is_member(AgentId(*a), CommunityId(*c)));
                let slot = p.member_slot(AgentId(*a), CommunityId(*c)).unwrap();
                prop_assert_eq!(p.members(CommunityId(*c))[slot], AgentId(*a));
            }
        }
    }
}
