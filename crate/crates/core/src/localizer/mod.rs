//! Projection of high-level plans onto edit surfaces and granular steps.

mod assemble;
mod cover;
mod types;

pub use assemble::{assemble_granular_plan, knob_param, DEFAULT_EPSILON};
pub use cover::{
    greedy_cover, localize, node_blast, normalized_degrees, target_candidates, CHANGE_WEIGHT, DEGREE_WEIGHT,
    MAX_TARGET_CANDIDATES,
};
pub use types::*;

#[derive(Debug, thiserror::Error)]
pub enum LocalizeError {
    #[error("target {0:?} does not resolve in the graph")]
    UnknownApi(String),
    #[error("target {target:?} matches {candidates} nodes")]
    AmbiguousTarget { target: String, candidates: usize },
    #[error("intervention {0} is not covered by the edit surface")]
    Uncovered(usize),
    #[error("interventions {first} and {second} rewrite {target:?} incompatibly")]
    ConflictingSteps { target: String, first: usize, second: usize },
}
