//! Agent-based simulation of how individual join and leave decisions shape
//! the size distribution of online communities.

pub mod baseline;
pub mod cli;
pub mod config;
pub mod decision;
pub mod engine;
pub mod exposure;
pub mod figures;
pub mod metrics;
pub mod population;

pub use config::{ModelConfig, ModelFamily, RunParams, SweepGrid};
pub use engine::{run, sweep, RunResult, SweepReport};
pub use population::{new_population, AgentId, CommunityId, Population, PopulationState, SimRng, SizeDistribution};
