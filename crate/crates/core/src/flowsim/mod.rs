//! QoR reports, flow configuration, deltas and the flow-runner backends.

mod config;
mod design;
mod report;
mod runner;

pub use config::{parse_flow_config, FlowRunConfig, Pdk};
pub use design::{load_design_attributes, DesignAttributes};
pub use report::{delta_percent, parse_qor_json, parse_qor_log, render_qor_json, Metric, QoRReport, Stage};
pub use runner::{patch_fingerprint, replay_run, FlowFixture, FlowRunner, ProcessFlowRunner, BASELINE_PATCH};

#[derive(Debug, thiserror::Error)]
pub enum FlowError {
    #[error("invalid value {value:?} for {key}: must be {constraint}")]
    InvalidParameter { key: String, value: String, constraint: String },
    #[error("QoR schema error in {field}: {reason}")]
    SchemaError { field: String, reason: String },
    #[error("no QoR metrics found")]
    NoMetricsFound,
    #[error("delta base must be positive, got {0}")]
    NonpositiveBase(f64),
    #[error("no replay entry for {design}/{pdk} at {stage:?} with patch {patch}")]
    UnknownScenario { design: String, pdk: String, stage: Stage, patch: String },
    #[error("fixture line {line}: {reason}")]
    MalformedFixture { line: usize, reason: String },
    #[error("flow crashed: {log}")]
    FlowCrash { log: String },
    #[error("flow runner unavailable: {0}")]
    RunnerUnavailable(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}
