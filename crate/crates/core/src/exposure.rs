//! Per-step exposure sets: which communities an agent gets to consider.

use rand::seq::{index, SliceRandom};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::config::ConfigError;
use crate::population::{AgentId, CommunityId, Population};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExposureMode {
    /// Every community independently with probability `p_e`.
    NullRandom,
    /// Neighbors share a uniformly random subset of their other communities.
    SocialRandomShare,
    /// Neighbors share their largest other communities.
    SocialLargestShare,
}

impl ExposureMode {
    pub fn is_social(self) -> bool {
        !matches!(self, ExposureMode::NullRandom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExposureConfig {
    pub mode: ExposureMode,
    /// Inclusion probability for `NullRandom`.
    pub p_e: f64,
    /// Communities shared per sampled neighbor.
    pub m: u32,
    /// Inclusion probability used when a social-exposure agent has no communities.
    pub fallback_p_e: f64,
}

impl ExposureConfig {
    pub fn null(p_e: f64) -> Self {
        Self {
            mode: ExposureMode::NullRandom,
            p_e,
            m: 1,
            fallback_p_e: p_e,
        }
    }

    pub fn social(mode: ExposureMode, m: u32, fallback_p_e: f64) -> Self {
        Self {
            mode,
            p_e: fallback_p_e,
            m,
            fallback_p_e,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        check_probability("p_e", self.p_e)?;
        check_probability("fallback_p_e", self.fallback_p_e)?;
        if self.m == 0 {
            return Err(ConfigError::OutOfRange {
                name: "m",
                value: 0.0,
                expected: "an integer >= 1",
            });
        }
        Ok(())
    }
}

pub(crate) fn check_probability(name: &'static str, value: f64) -> Result<(), ConfigError> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(ConfigError::OutOfRange {
            name,
            value,
            expected: "a probability in [0, 1]",
        })
    }
}

/// Deduplicated communities an agent may consider this step, ascending by id.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ExposureSet {
    communities: Vec<CommunityId>,
}

impl ExposureSet {
    pub fn new(mut communities: Vec<CommunityId>) -> Self {
        communities.sort_unstable();
        communities.dedup();
        Self { communities }
    }

    pub fn as_slice(&self) -> &[CommunityId] {
        &self.communities
    }

    pub fn len(&self) -> usize {
        self.communities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.communities.is_empty()
    }

    pub fn contains(&self, c: CommunityId) -> bool {
        self.communities.binary_search(&c).is_ok()
    }
}

/// Includes each community independently with probability `p_e`, in
/// ascending id order (one draw per community).
pub fn null_exposure<R: Rng + ?Sized>(pop: &Population, p_e: f64, rng: &mut R) -> ExposureSet {
    let communities = pop
        .communities()
        .filter(|_| rng.random_bool(p_e))
        .collect();
    ExposureSet { communities }
}

/// Neighbors sampled from a community of `community_size` members:
/// `max(1, ceil(ln(size + 1)))`.
pub fn neighbor_count(community_size: u32) -> u32 {
    let k = (f64::from(community_size) + 1.0).ln().ceil() as u32;
    k.max(1)
}

/// Upper bound on a social exposure set: `m` times the total number of
/// neighbors the agent can sample across its communities.
pub fn exposure_bound(pop: &Population, agent: AgentId, m: u32) -> usize {
    let neighbors: usize = pop
        .communities_of(agent)
        .map(|c| neighbor_count(pop.size(c)) as usize)
        .sum();
    neighbors * m as usize
}

/// Social exposure for one agent.
///
/// For every community the agent belongs to (ascending id), up to
/// `neighbor_count(size)` other members are drawn without replacement. Each
/// neighbor shares up to `m` of its communities other than the one it was
/// sampled through. The result may include communities the agent already
/// belongs to. Agents with no communities fall back to
/// [`null_exposure`] with `fallback_p_e`.
pub fn social_exposure<R: Rng + ?Sized>(
    pop: &Population,
    agent: AgentId,
    cfg: &ExposureConfig,
    rng: &mut R,
) -> ExposureSet {
    if pop.membership_count(agent) == 0 {
        return null_exposure(pop, cfg.fallback_p_e, rng);
    }
    let m = cfg.m as usize;
    let mut seen = vec![false; pop.n_communities()];
    let mut out = Vec::new();
    let mut others: Vec<CommunityId> = Vec::new();

    for via in pop.communities_of(agent) {
        let members = pop.members(via);
        let own_slot = pop
            .member_slot(agent, via)
            .expect("agent listed in community it does not belong to");
        let pool = members.len() - 1;
        let k = (neighbor_count(members.len() as u32) as usize).min(pool);
        if k == 0 {
            continue;
        }
        for idx in index::sample(rng, pool, k) {
            // Skip over the focal agent's own slot.
            let slot = if idx >= own_slot { idx + 1 } else { idx };
            let neighbor = members[slot];
            others.clear();
            others.extend(pop.communities_of(neighbor).filter(|&c| c != via));
            let shared = share(pop, &mut others, cfg.mode, m, rng);
            for &c in shared {
                if !seen[c.index()] {
                    seen[c.index()] = true;
                    out.push(c);
                }
            }
        }
    }
    out.sort_unstable();
    ExposureSet { communities: out }
}

/// Picks which of a neighbor's communities get shared. Reorders `others` and
/// returns the chosen prefix.
fn share<'a, R: Rng + ?Sized>(
    pop: &Population,
    others: &'a mut [CommunityId],
    mode: ExposureMode,
    m: usize,
    rng: &mut R,
) -> &'a [CommunityId] {
    if others.len() <= m {
        return others;
    }
    match mode {
        ExposureMode::SocialLargestShare => {
            // Shuffle first so the stable sort breaks size ties at random.
            others.shuffle(rng);
            others.sort_by_key(|&c| std::cmp::Reverse(pop.size(c)));
            &others[..m]
        }
        _ => {
            let (chosen, _) = others.partial_shuffle(rng, m);
            chosen
        }
    }
}

/// Dispatches on the configured mode.
pub fn expose<R: Rng + ?Sized>(
    pop: &Population,
    agent: AgentId,
    cfg: &ExposureConfig,
    rng: &mut R,
) -> ExposureSet {
    match cfg.mode {
        ExposureMode::NullRandom => null_exposure(pop, cfg.p_e, rng),
        _ => social_exposure(pop, agent, cfg, rng),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::population::SimRng;
    use rand::SeedableRng;

    fn rng(seed: u64) -> SimRng {
        SimRng::seed_from_u64(seed)
    }

    #[test]
    fn null_exposure_extremes() {
        let pop = Population::new(10, 200).unwrap();
        assert!(null_exposure(&pop, 0.0, &mut rng(1)).is_empty());
        let all = null_exposure(&pop, 1.0, &mut rng(1));
        assert_eq!(all.len(), 200);
        assert_eq!(all.as_slice()[0], CommunityId(0));
        assert_eq!(all.as_slice()[199], CommunityId(199));
    }

    #[test]
    fn null_exposure_mean_matches_binomial() {
        // Binomial(200, 0.1): mean 20, variance 18. Standard error of the
        // mean over 1000 draws is sqrt(18 / 1000).
        let pop = Population::new(1, 200).unwrap();
        let mut r = rng(2024);
        let draws = 1000;
        let total: usize = (0..draws).map(|_| null_exposure(&pop, 0.1, &mut r).len()).sum();
        let mean = total as f64 / draws as f64;
        let se = (200.0 * 0.1 * 0.9 / draws as f64).sqrt();
        assert!((mean - 20.0).abs() < 3.0 * se, "mean {mean}");
    }

    #[test]
    fn neighbor_count_values() {
        // ln 2 = 0.693, ln 101 = 4.615, ln 8103 = 8.99999
        assert_eq!(neighbor_count(1), 1);
        assert_eq!(neighbor_count(100), 5);
        assert_eq!(neighbor_count(8102), 9);
        assert_eq!(neighbor_count(0), 1);
        assert_eq!(neighbor_count(2), 2);
    }

    #[test]
    fn neighbor_count_monotone() {
        let mut prev = neighbor_count(1);
        for s in 2..=20_000 {
            let k = neighbor_count(s);
            assert!(k >= prev && k >= 1);
            prev = k;
        }
    }

    #[test]
    fn fallback_matches_null_exposure() {
        let pop = Population::new(3, 200).unwrap();
        let cfg = ExposureConfig::social(ExposureMode::SocialRandomShare, 2, 0.1);
        let social = social_exposure(&pop, AgentId(0), &cfg, &mut rng(5));
        let null = null_exposure(&pop, 0.1, &mut rng(5));
        assert_eq!(social, null);
    }

    #[test]
    fn lone_member_sees_nothing() {
        let mut pop = Population::new(3, 4).unwrap();
        pop.join(AgentId(0), CommunityId(2)).unwrap();
        let cfg = ExposureConfig::social(ExposureMode::SocialLargestShare, 4, 0.5);
        for seed in 0..20 {
            assert!(social_exposure(&pop, AgentId(0), &cfg, &mut rng(seed)).is_empty());
        }
    }

    #[test]
    fn largest_share_picks_biggest_other_communities() {
        // Focal agent 0 and neighbor 1 share community 0. Neighbor also
        // belongs to communities 1, 2, 3 with sizes 3, 50, 7.
        let mut pop = Population::new(100, 4).unwrap();
        pop.join(AgentId(0), CommunityId(0)).unwrap();
        pop.join(AgentId(1), CommunityId(0)).unwrap();
        let sizes = [(CommunityId(1), 3u32), (CommunityId(2), 50), (CommunityId(3), 7)];
        for (c, size) in sizes {
            pop.join(AgentId(1), c).unwrap();
            let mut a = 2;
            while pop.size(c) < size {
                pop.join(AgentId(a), c).unwrap();
                a += 1;
            }
        }
        // Oracle: sort the neighbor's other communities by size, take two.
        let mut by_size: Vec<_> = sizes.to_vec();
        by_size.sort_by_key(|x| std::cmp::Reverse(x.1));
        let mut expected: Vec<_> = by_size[..2].iter().map(|x| x.0).collect();
        expected.sort();

        let cfg = ExposureConfig::social(ExposureMode::SocialLargestShare, 2, 0.1);
        for seed in 0..20 {
            let set = social_exposure(&pop, AgentId(0), &cfg, &mut rng(seed));
            assert_eq!(set.as_slice(), expected.as_slice());
        }
    }

    #[test]
    fn neighbor_excludes_focal_agent() {
        // Agent 0 and agent 1 in community 0; agent 1 also in community 1.
        // Agent 0 also in community 2 (shared by nobody else). The only
        // possible neighbor is agent 1, who can only share community 1.
        let mut pop = Population::new(2, 3).unwrap();
        pop.join(AgentId(0), CommunityId(0)).unwrap();
        pop.join(AgentId(0), CommunityId(2)).unwrap();
        pop.join(AgentId(1), CommunityId(0)).unwrap();
        pop.join(AgentId(1), CommunityId(1)).unwrap();
        let cfg = ExposureConfig::social(ExposureMode::SocialRandomShare, 3, 0.1);
        for seed in 0..20 {
            let set = social_exposure(&pop, AgentId(0), &cfg, &mut rng(seed));
            assert_eq!(set.as_slice(), &[CommunityId(1)]);
        }
    }

    #[test]
    fn exposure_may_include_own_communities() {
        // Agent 1 reaches agent 0 through community 0 and can share
        // community 1, which agent 1 itself also belongs to.
        let mut pop = Population::new(2, 2).unwrap();
        for a in 0..2 {
            pop.join(AgentId(a), CommunityId(0)).unwrap();
            pop.join(AgentId(a), CommunityId(1)).unwrap();
        }
        let cfg = ExposureConfig::social(ExposureMode::SocialRandomShare, 1, 0.1);
        let set = social_exposure(&pop, AgentId(1), &cfg, &mut rng(0));
        assert_eq!(set.as_slice(), &[CommunityId(0), CommunityId(1)]);
    }

    #[test]
    fn validate_rejects_bad_values() {
        assert!(ExposureConfig::null(1.5).validate().is_err());
        assert!(ExposureConfig::null(-0.1).validate().is_err());
        assert!(ExposureConfig::social(ExposureMode::SocialRandomShare, 0, 0.1)
            .validate()
            .is_err());
        assert!(ExposureConfig::social(ExposureMode::SocialRandomShare, 1, 0.1)
            .validate()
            .is_ok());
    }
}
