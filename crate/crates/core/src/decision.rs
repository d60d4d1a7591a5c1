//! Joining and exit decisions.
//!
//! Two rules are available. The random rule leaves each current community
//! with probability `p_l` and joins each newly exposed community with
//! probability `p_j`. The expected-benefit rule scores every candidate
//! community (current memberships plus the exposure set) and keeps the top
//! `ceil(p_k * |candidates|)` of them.
//!
//! Scores combine a participation benefit `ln(S_F + 1)` and an early-adopter
//! benefit `ln(S_F + 1) / ln(S_C + 2)`, minus a startup cost for communities
//! the agent does not already belong to. `S_C` is the observed size and
//! `S_F` is a projection of the size `horizon` steps ahead.

use std::io::Write;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::ConfigError;
use crate::exposure::ExposureSet;
use crate::population::{AgentId, CommunityId, Population};

/// Startup cost used when none is configured.
pub const DEFAULT_STARTUP_COST: f64 = 0.5;
/// Projection horizon in steps.
pub const DEFAULT_HORIZON: u32 = 6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DecisionError {
    #[error("community age must be at least 1")]
    ZeroAge,
    #[error("projected size must be non-negative, got {0}")]
    NegativeSize(f64),
    #[error("utility grid ranges must be non-empty")]
    EmptyGrid,
    #[error("failed to write utility grid: {0}")]
    Io(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Projection {
    /// `S_C + horizon * S_C / age`
    Linear,
    /// `S_C * ((age + horizon) / age)^2`
    Quadratic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BenefitParams {
    pub horizon: u32,
    pub startup_cost: f64,
    pub projection: Projection,
    pub p_k: f64,
}

impl BenefitParams {
    pub fn new(p_k: f64, projection: Projection) -> Self {
        Self {
            horizon: DEFAULT_HORIZON,
            startup_cost: DEFAULT_STARTUP_COST,
            projection,
            p_k,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.p_k > 0.0 && self.p_k <= 1.0) {
            return Err(ConfigError::OutOfRange {
                name: "p_k",
                value: self.p_k,
                expected: "a proportion in (0, 1]",
            });
        }
        if self.horizon == 0 {
            return Err(ConfigError::OutOfRange {
                name: "horizon",
                value: 0.0,
                expected: "an integer >= 1",
            });
        }
        if !(self.startup_cost >= 0.0 && self.startup_cost.is_finite()) {
            return Err(ConfigError::OutOfRange {
                name: "startup_cost",
                value: self.startup_cost,
                expected: "a finite non-negative number",
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenefitEstimate {
    pub community: CommunityId,
    pub s_c: u32,
    pub s_f: f64,
    pub b_p: f64,
    pub b_ea: f64,
    pub total: f64,
    pub is_member: bool,
}

/// Communities to join and to leave, each ascending by id and disjoint.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Decision {
    pub joins: Vec<CommunityId>,
    pub leaves: Vec<CommunityId>,
}

impl Decision {
    pub fn is_empty(&self) -> bool {
        self.joins.is_empty() && self.leaves.is_empty()
    }
}

/// One exit draw per current community, ascending by id.
pub fn draw_exits<R: Rng + ?Sized>(
    pop: &Population,
    agent: AgentId,
    p_l: f64,
    rng: &mut R,
) -> Vec<CommunityId> {
    pop.communities_of(agent)
        .filter(|_| rng.random_bool(p_l))
        .collect()
}

/// One join draw per exposed community the agent does not already belong to.
pub fn draw_joins<R: Rng + ?Sized>(
    pop: &Population,
    agent: AgentId,
    exposure: &ExposureSet,
    p_j: f64,
    rng: &mut R,
) -> Vec<CommunityId> {
    exposure
        .as_slice()
        .iter()
        .copied()
        .filter(|&c| !pop.is_member(agent, c))
        .filter(|_| rng.random_bool(p_j))
        .collect()
}

/// Random rule: exit draws first, then join draws.
pub fn random_decide<R: Rng + ?Sized>(
    pop: &Population,
    agent: AgentId,
    exposure: &ExposureSet,
    p_j: f64,
    p_l: f64,
    rng: &mut R,
) -> Decision {
    let leaves = draw_exits(pop, agent, p_l, rng);
    let joins = draw_joins(pop, agent, exposure, p_j, rng);
    Decision { joins, leaves }
}

pub fn project_size(
    s_c: u32,
    age: u32,
    horizon: u32,
    projection: Projection,
) -> Result<f64, DecisionError> {
    if age == 0 {
        return Err(DecisionError::ZeroAge);
    }
    let s_c = f64::from(s_c);
    let age = f64::from(age);
    let horizon = f64::from(horizon);
    Ok(match projection {
        Projection::Linear => s_c + horizon * (s_c / age),
        Projection::Quadratic => {
            let growth = (age + horizon) / age;
            s_c * growth * growth
        }
    })
}

/// `ln(S_F + 1)`
pub fn participation_benefit(s_f: f64) -> Result<f64, DecisionError> {
    if s_f.is_nan() || s_f < 0.0 {
        return Err(DecisionError::NegativeSize(s_f));
    }
    Ok(s_f.ln_1p())
}

/// `ln(S_F + 1) / ln(S_C + 2)`
pub fn early_adopter_benefit(s_f: f64, s_c: u32) -> f64 {
    s_f.ln_1p() / (f64::from(s_c) + 2.0).ln()
}

/// Scores a community from its observed size and age.
pub fn estimate(
    community: CommunityId,
    s_c: u32,
    age: u32,
    is_member: bool,
    params: &BenefitParams,
) -> Result<BenefitEstimate, DecisionError> {
    let s_f = project_size(s_c, age, params.horizon, params.projection)?;
    let b_p = participation_benefit(s_f)?;
    let b_ea = early_adopter_benefit(s_f, s_c);
    let cost = if is_member { 0.0 } else { params.startup_cost };
    Ok(BenefitEstimate {
        community,
        s_c,
        s_f,
        b_p,
        b_ea,
        total: b_p + b_ea - cost,
        is_member,
    })
}

/// Total expected benefit of `c` for `agent` given the current state.
pub fn total_benefit(
    pop: &Population,
    agent: AgentId,
    c: CommunityId,
    params: &BenefitParams,
) -> BenefitEstimate {
    estimate(c, pop.size(c), pop.age(c), pop.is_member(agent, c), params)
        .expect("population ages start at 1")
}

/// `ceil(p_k * n)`, ignoring floating-point noise just above an integer.
pub fn kept_count(p_k: f64, n: usize) -> usize {
    if n == 0 {
        return 0;
    }
    let raw = p_k * n as f64;
    let k = (raw - 1e-9 * raw.max(1.0)).ceil().max(0.0) as usize;
    k.clamp(1, n)
}

/// Orders candidates by descending score, breaking ties at random, and
/// returns the first `keep`.
pub fn top_ranked<R: Rng + ?Sized>(
    scored: &mut [(CommunityId, f64)],
    keep: usize,
    rng: &mut R,
) -> Vec<CommunityId> {
    scored.shuffle(rng);
    scored.sort_by(|a, b| b.1.total_cmp(&a.1));
    scored.iter().take(keep).map(|&(c, _)| c).collect()
}

/// Expected-benefit rule. Candidates are the agent's current communities
/// plus the exposure set; the agent keeps the best `ceil(p_k * |U|)`.
pub fn ieb_decide<R: Rng + ?Sized>(
    pop: &Population,
    agent: AgentId,
    exposure: &ExposureSet,
    params: &BenefitParams,
    rng: &mut R,
) -> Decision {
    let mut candidates: Vec<CommunityId> = pop.communities_of(agent).collect();
    candidates.extend_from_slice(exposure.as_slice());
    candidates.sort_unstable();
    candidates.dedup();
    if candidates.is_empty() {
        return Decision::default();
    }
    let mut scored: Vec<(CommunityId, f64)> = candidates
        .iter()
        .map(|&c| (c, total_benefit(pop, agent, c, params).total))
        .collect();
    let keep = kept_count(params.p_k, scored.len());
    let mut kept = top_ranked(&mut scored, keep, rng);
    kept.sort_unstable();

    let joins = kept
        .iter()
        .copied()
        .filter(|&c| !pop.is_member(agent, c))
        .collect();
    let leaves = pop
        .communities_of(agent)
        .filter(|c| kept.binary_search(c).is_err())
        .collect();
    Decision { joins, leaves }
}

/// Total benefit for a non-member over a grid of current and projected sizes.
#[derive(Debug, Clone, PartialEq)]
pub struct UtilityGrid {
    pub s_c: Vec<u32>,
    pub s_f: Vec<f64>,
    /// `totals[i][j]` is the value at `s_f[i]`, `s_c[j]`.
    pub totals: Vec<Vec<f64>>,
}

pub fn utility_grid(
    s_c_values: &[u32],
    s_f_values: &[f64],
    startup_cost: f64,
) -> Result<UtilityGrid, DecisionError> {
    if s_c_values.is_empty() || s_f_values.is_empty() {
        return Err(DecisionError::EmptyGrid);
    }
    let totals = s_f_values
        .iter()
        .map(|&s_f| {
            let b_p = participation_benefit(s_f)?;
            Ok(s_c_values
                .iter()
                .map(|&s_c| b_p + early_adopter_benefit(s_f, s_c) - startup_cost)
                .collect())
        })
        .collect::<Result<Vec<Vec<f64>>, DecisionError>>()?;
    Ok(UtilityGrid {
        s_c: s_c_values.to_vec(),
        s_f: s_f_values.to_vec(),
        totals,
    })
}

impl UtilityGrid {
    /// CSV with header `s_c,s_f,total`, one row per grid cell.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), DecisionError> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| DecisionError::Io(e.to_string());
        w.write_record(["s_c", "s_f", "total"]).map_err(io)?;
        for (i, &s_f) in self.s_f.iter().enumerate() {
            for (j, &s_c) in self.s_c.iter().enumerate() {
                w.write_record([
                    s_c.to_string(),
                    s_f.to_string(),
                    self.totals[i][j].to_string(),
                ])
                .map_err(io)?;
            }
        }
        w.flush().map_err(|e| DecisionError::Io(e.to_string()))
    }
}
