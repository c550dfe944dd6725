//! Repository graphing, documentation cards, literature-grounded planning and
//! QoR-gated execution for large EDA code bases.
//!
//! The crate is organised by pipeline stage:
//!
//! * [`codegraph`]: parse a multi-language repository into a property graph,
//!   link script commands to their C++ handlers, condense call cycles, prune.
//! * [`docmaker`]: bottom-up evidence extraction and validated doc cards.
//! * [`retrieval`]: hybrid BM25 + dense + structural search over cards,
//!   snippets and literature.
//! * [`planner`]: retrieve, synthesize and validate high-level plans.
//! * [`localizer`]: map plans onto edit surfaces and granular steps.
//! * [`executor`]: apply diffs, gate on QoR, hill-climb, roll back, bisect.
//! * [`flowsim`]: QoR report parsing, flow configuration, deterministic replay.

pub mod codegraph;
pub mod docmaker;
pub mod executor;
pub mod flowsim;
pub mod hash;
pub mod localizer;
pub mod planner;
pub mod process;
pub mod retrieval;
#[cfg(test)]
mod testutil;

pub use codegraph::{CodeGraph, EdgeKind, GraphEdge, GraphNode, Language, NodeId, NodeKind, Span};
pub use docmaker::{DocCard, EvidenceBundle};
pub use executor::{GateConfig, GateDecision, MetricModel};
pub use flowsim::{FlowRunConfig, QoRReport, Stage};
pub use localizer::{EditSurface, GranularPlan};
pub use planner::{HighLevelPlan, Objective};
