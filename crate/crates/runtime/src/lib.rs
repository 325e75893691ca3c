//! File formats, scenario synthesis, the `intent` command line and the
//! streaming server around `intent-core`.

pub mod builtins;
pub mod cli;
pub mod metrics;
pub mod protocol;
pub mod scenario;
pub mod server;
pub mod trace;

use intent_core::{GoalSet, IntentEstimate, Observation, Session, SessionConfig};

use crate::scenario::{Scenario, ScenarioError};

/// Prefix selecting a built-in scenario instead of a file path.
pub const BUILTIN_PREFIX: &str = "builtin:";

/// Loads `builtin:<name>` or a scenario file path.
pub fn resolve_scenario(source: &str) -> Result<Scenario, ScenarioError> {
    match source.strip_prefix(BUILTIN_PREFIX) {
        Some(name) => builtins::by_name(name).ok_or_else(|| {
            ScenarioError::Invalid(format!("unknown built-in scenario `{name}` (known: {})", builtins::NAMES.join(", ")))
        }),
        None => Scenario::load(std::path::Path::new(source)),
    }
}

/// Runs a fresh session over `observations`, returning one estimate each.
pub fn replay(goals: GoalSet, config: SessionConfig, observations: &[Observation]) -> intent_core::Result<Vec<IntentEstimate>> {
    let mut session = Session::new(SessionConfig { record_trace: false, ..config }, goals)?;
    observations.iter().map(|o| session.observe(o)).collect()
}
