//! Time-stepped runs and parameter sweeps.

use std::io::Write;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::config::{derive_seed, ConfigError, DecisionRule, ModelConfig, ParamValue, SweepGrid, UpdateMode};
use crate::decision::{draw_exits, draw_joins, ieb_decide, Decision};
use crate::exposure::{expose, exposure_bound};
use crate::population::{new_population, AgentId, Population, PopulationState, SimRng, SizeDistribution};

#[derive(Debug, Error)]
pub enum EngineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("failed to build worker pool: {0}")]
    Pool(String),
    #[error("failed to write output: {0}")]
    Io(String),
}

impl From<csv::Error> for EngineError {
    fn from(e: csv::Error) -> Self {
        EngineError::Io(e.to_string())
    }
}

impl From<std::io::Error> for EngineError {
    fn from(e: std::io::Error) -> Self {
        EngineError::Io(e.to_string())
    }
}

/// Exposure-set size checks made during a run. Only agents that use social
/// exposure through at least one community are checked.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct ExposureAudit {
    pub checked: u64,
    pub violations: u64,
    pub largest_set: u64,
}

impl ExposureAudit {
    fn merge(&mut self, other: &ExposureAudit) {
        self.checked += other.checked;
        self.violations += other.violations;
        self.largest_set = self.largest_set.max(other.largest_set);
    }
}

fn decide(
    pop: &Population,
    agent: AgentId,
    config: &ModelConfig,
    rng: &mut SimRng,
    audit: &mut ExposureAudit,
) -> Decision {
    let mut exposure_for = |rng: &mut SimRng| {
        let set = expose(pop, agent, &config.exposure, rng);
        if config.exposure.mode.is_social() && pop.membership_count(agent) > 0 {
            let bound = exposure_bound(pop, agent, config.exposure.m);
            audit.checked += 1;
            audit.largest_set = audit.largest_set.max(set.len() as u64);
            if set.len() > bound {
                audit.violations += 1;
            }
            debug_assert!(set.len() <= bound, "exposure set exceeds n*k*m");
        }
        set
    };
    match &config.decision {
        DecisionRule::Random { p_j, p_l } => {
            let leaves = draw_exits(pop, agent, *p_l, rng);
            let exposure = exposure_for(rng);
            let joins = draw_joins(pop, agent, &exposure, *p_j, rng);
            Decision { joins, leaves }
        }
        DecisionRule::Ieb(params) => {
            let exposure = exposure_for(rng);
            ieb_decide(pop, agent, &exposure, params, rng)
        }
    }
}

fn apply(pop: &mut Population, agent: AgentId, decision: &Decision) {
    for &c in &decision.leaves {
        pop.leave(agent, c).expect("decision names a known community");
    }
    for &c in &decision.joins {
        pop.join(agent, c).expect("decision names a known community");
    }
}

/// Advances the state by one step: every agent (ascending id) gets an
/// exposure set and decides, then communities age by one.
pub fn step(state: &mut PopulationState, config: &ModelConfig) -> ExposureAudit {
    let mut audit = ExposureAudit::default();
    let PopulationState { population, rng } = state;
    match config.update {
        UpdateMode::Synchronous => {
            let decisions: Vec<Decision> = population
                .agents()
                .map(|a| decide(population, a, config, rng, &mut audit))
                .collect();
            for (i, d) in decisions.iter().enumerate() {
                apply(population, AgentId(i as u32), d);
            }
        }
        UpdateMode::Sequential => {
            for a in 0..population.n_agents() as u32 {
                let d = decide(population, AgentId(a), config, rng, &mut audit);
                apply(population, AgentId(a), &d);
            }
        }
    }
    population.advance();
    audit
}

#[derive(Debug, Clone, Serialize)]
pub struct RunResult {
    pub config: ModelConfig,
    pub final_sizes: SizeDistribution,
    /// Sizes before the first step and after each step, when recorded.
    pub per_step_sizes: Option<Vec<SizeDistribution>>,
    pub wall_time: Duration,
    pub audit: ExposureAudit,
}

/// Runs `config.steps` steps from an empty population seeded with `config.seed`.
pub fn run(config: &ModelConfig) -> Result<RunResult, EngineError> {
    config.validate()?;
    let started = Instant::now();
    let mut state = new_population(config.n_agents, config.n_communities, config.seed)
        .map_err(|e| ConfigError::Inconsistent(e.to_string()))?;
    let mut per_step = config
        .record_steps
        .then(|| vec![state.population.snapshot_sizes()]);
    let mut audit = ExposureAudit::default();
    for _ in 0..config.steps {
        audit.merge(&step(&mut state, config));
        if let Some(list) = per_step.as_mut() {
            list.push(state.population.snapshot_sizes());
        }
    }
    Ok(RunResult {
        config: config.clone(),
        final_sizes: state.population.snapshot_sizes(),
        per_step_sizes: per_step,
        wall_time: started.elapsed(),
        audit,
    })
}

/// One (cell, replicate) of a sweep.
#[derive(Debug)]
pub struct CellOutcome {
    pub cell: usize,
    pub replicate: u32,
    pub seed: u64,
    pub coords: Vec<(String, ParamValue)>,
    pub result: Result<RunResult, EngineError>,
}

#[derive(Debug)]
pub struct SweepReport {
    pub axis_names: Vec<String>,
    pub outcomes: Vec<CellOutcome>,
}

impl SweepReport {
    pub fn failures(&self) -> impl Iterator<Item = &CellOutcome> {
        self.outcomes.iter().filter(|o| o.result.is_err())
    }

    pub fn all_ok(&self) -> bool {
        self.failures().next().is_none()
    }

    pub fn results(&self) -> impl Iterator<Item = (&CellOutcome, &RunResult)> {
        self.outcomes
            .iter()
            .filter_map(|o| o.result.as_ref().ok().map(|r| (o, r)))
    }
}

/// Runs every (cell, replicate) of the grid on up to `parallelism` threads.
/// Seeds are derived from the base seed, cell index and replicate, so the
/// output does not depend on `parallelism`. Outcomes are ordered by cell,
/// then replicate.
pub fn sweep(grid: &SweepGrid, parallelism: usize) -> Result<SweepReport, EngineError> {
    grid.validate()?;
    let base_seed = grid.base.seed.unwrap_or(0);
    let mut jobs = Vec::new();
    for cell in grid.cells() {
        for replicate in 0..grid.replicates {
            jobs.push((cell.clone(), replicate));
        }
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism.max(1))
        .build()
        .map_err(|e| EngineError::Pool(e.to_string()))?;
    let outcomes = pool.install(|| {
        jobs.into_par_iter()
            .map(|(cell, replicate)| {
                let (index, coords, params) = match cell {
                    Ok(c) => (c.index, c.coords, Ok(c.params)),
                    Err((c, e)) => (c.index, c.coords, Err(e)),
                };
                let seed = derive_seed(base_seed, index as u64, u64::from(replicate));
                let result = params.and_then(|mut p| {
                    p.seed = Some(seed);
                    p.resolve()
                });
                let result = result.map_err(EngineError::from).and_then(|cfg| run(&cfg));
                CellOutcome {
                    cell: index,
                    replicate,
                    seed,
                    coords,
                    result,
                }
            })
            .collect()
    });
    Ok(SweepReport {
        axis_names: grid.axis_names(),
        outcomes,
    })
}

/// Long-format final sizes: `cell_id,replicate,seed,<axes...>,community_id,final_size`.
pub fn write_final_sizes<W: Write>(report: &SweepReport, out: W) -> Result<(), EngineError> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["cell_id".to_string(), "replicate".into(), "seed".into()];
    header.extend(report.axis_names.iter().cloned());
    header.extend(["community_id".to_string(), "final_size".into()]);
    w.write_record(&header)?;
    for (outcome, result) in report.results() {
        let prefix = row_prefix(outcome);
        for (c, size) in result.final_sizes.sizes().iter().enumerate() {
            let mut row = prefix.clone();
            row.push(c.to_string());
            row.push(size.to_string());
            w.write_record(&row)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Long-format per-step sizes: `cell_id,replicate,seed,<axes...>,step,community_id,size`.
pub fn write_per_step_sizes<W: Write>(report: &SweepReport, out: W) -> Result<(), EngineError> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["cell_id".to_string(), "replicate".into(), "seed".into()];
    header.extend(report.axis_names.iter().cloned());
    header.extend(["step".to_string(), "community_id".into(), "size".into()]);
    w.write_record(&header)?;
    for (outcome, result) in report.results() {
        let Some(steps) = &result.per_step_sizes else {
            continue;
        };
        let prefix = row_prefix(outcome);
        for (s, dist) in steps.iter().enumerate() {
            for (c, size) in dist.sizes().iter().enumerate() {
                let mut row = prefix.clone();
                row.extend([s.to_string(), c.to_string(), size.to_string()]);
                w.write_record(&row)?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

fn row_prefix(outcome: &CellOutcome) -> Vec<String> {
    let mut row = vec![
        outcome.cell.to_string(),
        outcome.replicate.to_string(),
        outcome.seed.to_string(),
    ];
    row.extend(outcome.coords.iter().map(|(_, v)| v.to_string()));
    row
}

/// Wraps a single run as a one-cell report so it shares the sweep writers.
pub fn single_run_report(result: RunResult) -> SweepReport {
    SweepReport {
        axis_names: Vec::new(),
        outcomes: vec![CellOutcome {
            cell: 0,
            replicate: 0,
            seed: result.config.seed,
            coords: Vec::new(),
            result: Ok(result),
        }],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{Axis, RunParams};
    use crate::population::CommunityId;

    fn config(text: &str) -> ModelConfig {
        RunParams::from_toml_str(text).unwrap().resolve().unwrap()
    }

    #[test]
    fn zero_probabilities_only_advance_time() {
        let cfg = config("model='null'\np_e=0\np_j=0\np_l=0\nagents=50\ncommunities=10");
        let mut state = new_population(50, 10, 1).unwrap();
        state.population.join(AgentId(3), CommunityId(4)).unwrap();
        let before = state.population.snapshot_sizes();
        step(&mut state, &cfg);
        assert_eq!(state.population.snapshot_sizes(), before);
        assert_eq!(state.population.step(), 1);
        assert_eq!(state.population.age(CommunityId(0)), 2);
    }

    #[test]
    fn certain_exit_clears_prior_memberships() {
        let cfg = config("model='null'\np_e=0.5\np_j=0.5\np_l=1\nagents=200\ncommunities=20");
        let mut state = new_population(200, 20, 4).unwrap();
        step(&mut state, &cfg);
        let before: Vec<(AgentId, CommunityId)> = state
            .population
            .agents()
            .flat_map(|a| {
                let p = &state.population;
                p.communities_of(a).map(move |c| (a, c)).collect::<Vec<_>>()
            })
            .collect();
        assert!(!before.is_empty());
        step(&mut state, &cfg);
        for (a, c) in before {
            assert!(!state.population.is_member(a, c));
        }
        assert!(state.population.is_consistent());
    }

    #[test]
    fn zero_steps_gives_empty_world() {
        let cfg = config("model='null'\np_e=0.2\np_j=0.2\nsteps=0\nagents=100\ncommunities=7\nrecord_steps=true");
        let r = run(&cfg).unwrap();
        assert_eq!(r.final_sizes.sizes(), &[0; 7]);
        assert_eq!(r.per_step_sizes.unwrap().len(), 1);
    }

    #[test]
    fn runs_are_deterministic() {
        let cfg = config(
            "model='combined'\nm=2\np_k=0.1\nagents=600\ncommunities=30\nsteps=8\nseed=11\nrecord_steps=true",
        );
        let a = run(&cfg).unwrap();
        let b = run(&cfg).unwrap();
        assert_eq!(a.per_step_sizes, b.per_step_sizes);
        assert_eq!(a.final_sizes, b.final_sizes);
        assert_eq!(
            a.per_step_sizes.as_ref().unwrap().last(),
            Some(&a.final_sizes)
        );
    }

    #[test]
    fn both_update_modes_keep_relation_consistent() {
        for update in ["synchronous", "sequential"] {
            let cfg = config(&format!(
                "model='social_exposure'\nshare='largest'\nm=2\nagents=300\ncommunities=15\nsteps=5\nupdate='{update}'"
            ));
            let mut state = new_population(cfg.n_agents, cfg.n_communities, 9).unwrap();
            for _ in 0..cfg.steps {
                step(&mut state, &cfg);
                assert!(state.population.is_consistent());
            }
        }
    }

    #[test]
    fn synchronous_decisions_use_frozen_sizes() {
        // Reference: compute every agent's decision against a frozen copy of
        // the start-of-step population, then apply them all.
        let cfg = config("model='ieb'\np_e=0.3\np_k=0.2\nagents=120\ncommunities=12\nsteps=1");
        let mut state = new_population(120, 12, 5).unwrap();
        for _ in 0..3 {
            step(&mut state, &cfg);
        }
        let frozen = state.population.clone();
        let mut rng = state.rng.clone();
        let mut audit = ExposureAudit::default();
        let decisions: Vec<Decision> = frozen
            .agents()
            .map(|a| decide(&frozen, a, &cfg, &mut rng, &mut audit))
            .collect();
        let mut expected = frozen.clone();
        for (i, d) in decisions.iter().enumerate() {
            apply(&mut expected, AgentId(i as u32), d);
        }
        step(&mut state, &cfg);
        assert_eq!(state.population.snapshot_sizes(), expected.snapshot_sizes());
    }

    #[test]
    fn sweep_independent_of_parallelism() {
        let base = RunParams::from_toml_str(
            "model='null'\np_l=0.56\nagents=300\ncommunities=10\nsteps=4\nseed=3",
        )
        .unwrap();
        let grid = SweepGrid::new(
            base,
            vec![Axis::new("p_e", [0.05, 0.2]), Axis::new("p_j", [0.1, 0.2])],
            2,
        )
        .unwrap();
        let one = sweep(&grid, 1).unwrap();
        let four = sweep(&grid, 4).unwrap();
        assert_eq!(one.outcomes.len(), 8);
        let mut a = Vec::new();
        let mut b = Vec::new();
        write_final_sizes(&one, &mut a).unwrap();
        write_final_sizes(&four, &mut b).unwrap();
        assert_eq!(a, b);
        let order: Vec<(usize, u32)> = one.outcomes.iter().map(|o| (o.cell, o.replicate)).collect();
        assert_eq!(order[..3], [(0, 0), (0, 1), (1, 0)]);
    }

    #[test]
    fn replay_reproduces_sweep_cell() {
        let base = RunParams::from_toml_str(
            "model='combined'\np_k=0.2\nagents=200\ncommunities=10\nsteps=5\nseed=8",
        )
        .unwrap();
        let grid = SweepGrid::new(base, vec![Axis::new("m", [1i64, 3])], 1).unwrap();
        let report = sweep(&grid, 2).unwrap();
        for (_, r) in report.results() {
            let replay = run(&r.config).unwrap();
            assert_eq!(replay.final_sizes, r.final_sizes);
        }
    }

    #[test]
    fn failing_cell_does_not_stop_others() {
        let base = RunParams::from_toml_str("model='null'\np_j=0.1\nagents=50\ncommunities=5\nsteps=2")
            .unwrap();
        let grid = SweepGrid::new(base, vec![Axis::new("p_e", [0.1, 1.5, 0.2])], 1).unwrap();
        let report = sweep(&grid, 2).unwrap();
        assert!(!report.all_ok());
        let failed: Vec<usize> = report.failures().map(|o| o.cell).collect();
        assert_eq!(failed, vec![1]);
        assert_eq!(report.results().count(), 2);
    }

    #[test]
    fn final_sizes_csv_layout() {
        let cfg = config("model='null'\np_e=0.1\np_j=0.1\nagents=20\ncommunities=3\nsteps=2\nseed=1");
        let report = single_run_report(run(&cfg).unwrap());
        let mut buf = Vec::new();
        write_final_sizes(&report, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "cell_id,replicate,seed,community_id,final_size");
        assert_eq!(lines.len(), 4);
        assert!(lines[1].starts_with("0,0,1,0,"));
    }
}
