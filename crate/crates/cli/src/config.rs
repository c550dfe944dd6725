//! Tool configuration: defaults, then a TOML file, then `QORPILOT_*`
//! environment variables. Command-line flags are applied last by each
//! subcommand.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use qorpilot_core::retrieval::{Bm25Params, IndexConfig};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const CONFIG_ENV: &str = "QORPILOT_CONFIG";
pub const DEFAULT_CONFIG_FILE: &str = "qorpilot.toml";

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub graph: GraphSection,
    pub docmaker: DocmakerSection,
    pub index: IndexSection,
    pub planner: PlannerSection,
    pub localizer: LocalizerSection,
    pub executor: ExecutorSection,
    pub flow: FlowSection,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GraphSection {
    pub exclude: Vec<String>,
    /// Registration calls as `function:arg_index`.
    pub registration: Vec<String>,
}

impl Default for GraphSection {
    fn default() -> Self {
        GraphSection {
            exclude: Vec::new(),
            registration: vec!["register_cmd:0".into(), "Tcl_CreateCommand:1".into(), "Tcl_CreateObjCommand:1".into()],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DocmakerSection {
    pub synth_cmd: Option<String>,
    pub max_in_flight: usize,
}

impl Default for DocmakerSection {
    fn default() -> Self {
        DocmakerSection { synth_cmd: None, max_in_flight: 4 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IndexSection {
    pub embed_cmd: Option<String>,
    pub dim: usize,
    pub k1: f64,
    pub b: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub hop_cap: usize,
}

impl Default for IndexSection {
    fn default() -> Self {
        let d = IndexConfig::default();
        IndexSection {
            embed_cmd: None,
            dim: d.dim,
            k1: d.bm25.k1,
            b: d.bm25.b,
            alpha: d.alpha,
            beta: d.beta,
            gamma: d.gamma,
            hop_cap: d.hop_cap,
        }
    }
}

impl IndexSection {
    pub fn index_config(&self) -> IndexConfig {
        IndexConfig {
            dim: self.dim,
            bm25: Bm25Params { k1: self.k1, b: self.b },
            alpha: self.alpha,
            beta: self.beta,
            gamma: self.gamma,
            hop_cap: self.hop_cap,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlannerSection {
    pub synth_cmd: Option<String>,
    pub k: usize,
    pub lambda: f64,
    pub protected_terms: Vec<String>,
}

impl Default for PlannerSection {
    fn default() -> Self {
        PlannerSection {
            synth_cmd: None,
            k: 12,
            lambda: 0.7,
            protected_terms: qorpilot_core::planner::DEFAULT_PROTECTED_TERMS.iter().map(|s| s.to_string()).collect(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LocalizerSection {
    /// JSON object mapping file paths to historical change counts.
    pub change_freq: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExecutorSection {
    pub proposer_cmd: Option<String>,
    /// Scripted proposer file; takes precedence over `proposer_cmd`.
    pub proposer_script: Option<PathBuf>,
    pub max_candidates: usize,
    pub max_repairs: usize,
    /// Composite-score weights keyed by QoR field name.
    pub weights: BTreeMap<String, f64>,
    pub wns_threshold_ns: f64,
    /// Pre-check commands keyed by check kind (build, format, unit_tests,
    /// flow_smoke). Build falls back to a syntax check.
    pub checks: BTreeMap<String, String>,
    pub cache_dir: Option<PathBuf>,
}

impl Default for ExecutorSection {
    fn default() -> Self {
        ExecutorSection {
            proposer_cmd: None,
            proposer_script: None,
            max_candidates: 4,
            max_repairs: 2,
            weights: BTreeMap::new(),
            wns_threshold_ns: 0.01,
            checks: BTreeMap::new(),
            cache_dir: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FlowSection {
    /// `replay` or `process`.
    pub runner: String,
    pub cmd: Option<String>,
    pub fixtures: Vec<PathBuf>,
    pub design: Option<String>,
    pub platform: Option<String>,
    pub stage: Option<String>,
    /// Flow parameters (ORFS-style keys).
    pub params: BTreeMap<String, String>,
}

impl Default for FlowSection {
    fn default() -> Self {
        FlowSection {
            runner: "replay".into(),
            cmd: None,
            fixtures: Vec::new(),
            design: None,
            platform: None,
            stage: None,
            params: BTreeMap::new(),
        }
    }
}

fn split_list(v: &str) -> Vec<String> {
    v.split(',').map(str::trim).filter(|s| !s.is_empty()).map(str::to_string).collect()
}

fn parse_num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, CliError> {
    v.trim().parse().map_err(|_| CliError::Usage(format!("{key}={v:?} is not a valid number")))
}

impl Config {
    /// Reads `path`, or `$QORPILOT_CONFIG`, or `./qorpilot.toml` when it
    /// exists, then applies the environment.
    pub fn load(path: Option<&Path>, env: &BTreeMap<String, String>) -> Result<Config, CliError> {
        let file = path
            .map(Path::to_path_buf)
            .or_else(|| env.get(CONFIG_ENV).map(PathBuf::from))
            .or_else(|| Some(PathBuf::from(DEFAULT_CONFIG_FILE)).filter(|p| p.is_file()));
        let mut config = match file {
            Some(p) => {
                let text = std::fs::read_to_string(&p).map_err(|e| CliError::io(&p, e))?;
                Config::parse(&text).map_err(|e| CliError::Usage(format!("{}: {e}", p.display())))?
            }
            None => Config::default(),
        };
        config.apply_env(env)?;
        Ok(config)
    }

    pub fn parse(text: &str) -> Result<Config, toml::de::Error> {
        toml::from_str(text)
    }

    pub fn apply_env(&mut self, env: &BTreeMap<String, String>) -> Result<(), CliError> {
        for (key, v) in env.iter().filter(|(k, _)| k.starts_with("QORPILOT_")) {
            match key.as_str() {
                "QORPILOT_GRAPH_EXCLUDE" => self.graph.exclude = split_list(v),
                "QORPILOT_SYNTH_CMD" => self.docmaker.synth_cmd = Some(v.clone()),
                "QORPILOT_MAX_IN_FLIGHT" => self.docmaker.max_in_flight = parse_num(key, v)?,
                "QORPILOT_EMBED_CMD" => self.index.embed_cmd = Some(v.clone()),
                "QORPILOT_EMBED_DIM" => self.index.dim = parse_num(key, v)?,
                "QORPILOT_PLANNER_CMD" => self.planner.synth_cmd = Some(v.clone()),
                "QORPILOT_PLANNER_K" => self.planner.k = parse_num(key, v)?,
                "QORPILOT_PLANNER_LAMBDA" => self.planner.lambda = parse_num(key, v)?,
                "QORPILOT_CHANGE_FREQ" => self.localizer.change_freq = Some(PathBuf::from(v)),
                "QORPILOT_PROPOSER_CMD" => self.executor.proposer_cmd = Some(v.clone()),
                "QORPILOT_PROPOSER_SCRIPT" => self.executor.proposer_script = Some(PathBuf::from(v)),
                "QORPILOT_MAX_CANDIDATES" => self.executor.max_candidates = parse_num(key, v)?,
                "QORPILOT_MAX_REPAIRS" => self.executor.max_repairs = parse_num(key, v)?,
                "QORPILOT_CACHE_DIR" => self.executor.cache_dir = Some(PathBuf::from(v)),
                "QORPILOT_FLOW_RUNNER" => self.flow.runner = v.clone(),
                "QORPILOT_FLOW_CMD" => self.flow.cmd = Some(v.clone()),
                "QORPILOT_FIXTURE" => self.flow.fixtures = split_list(v).into_iter().map(PathBuf::from).collect(),
                _ => {}
            }
        }
        Ok(())
    }
}
