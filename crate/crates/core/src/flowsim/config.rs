use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use tracing::warn;

use super::{FlowError, Stage};

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Pdk {
    Asap7,
    Sky130hd,
    Nangate45,
    Other(String),
}

impl Pdk {
    pub fn parse(s: &str) -> Pdk {
        match s.trim().to_ascii_lowercase().as_str() {
            "asap7" => Pdk::Asap7,
            "sky130hd" => Pdk::Sky130hd,
            "nangate45" => Pdk::Nangate45,
            _ => Pdk::Other(s.trim().to_string()),
        }
    }

    pub fn as_str(&self) -> &str {
        match self {
            Pdk::Asap7 => "ASAP7",
            Pdk::Sky130hd => "SKY130HD",
            Pdk::Nangate45 => "Nangate45",
            Pdk::Other(s) => s,
        }
    }
}

impl fmt::Display for Pdk {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl Serialize for Pdk {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for Pdk {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        Ok(Pdk::parse(&String::deserialize(d)?))
    }
}

/// One flow invocation: design, platform, stop stage and ORFS-style
/// parameters.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlowRunConfig {
    pub design: String,
    pub pdk: Pdk,
    pub stage: Stage,
    #[serde(default)]
    pub parameters: BTreeMap<String, String>,
}

type Check = fn(f64) -> bool;

const CHECKED: [(&str, Check, &str); 7] = [
    ("CORE_UTIL", |v| v > 0.0 && v <= 100.0, "in (0, 100]"),
    ("PLACEMENT_LB_ADDON", |v| v >= 0.0, ">= 0"),
    ("CORE_ASPECT_RATIO", |v| v > 0.0, "> 0"),
    ("CORE_MARGIN", |v| v >= 0.0, ">= 0"),
    ("ENABLE_DPO", |v| v == 0.0 || v == 1.0, "0 or 1"),
    ("EQUIVALENCE_CHECK", |v| v == 0.0 || v == 1.0, "0 or 1"),
    ("TARGET_CLOCK_PERIOD_NS", |v| v > 0.0, "> 0"),
];

fn is_known(key: &str) -> bool {
    CHECKED.iter().any(|(k, _, _)| *k == key)
}

impl FlowRunConfig {
    pub fn new(design: &str, pdk: Pdk, stage: Stage) -> Self {
        FlowRunConfig { design: design.to_string(), pdk, stage, parameters: BTreeMap::new() }
    }

    pub fn with_param(mut self, key: &str, value: &str) -> Self {
        self.parameters.insert(key.to_string(), value.to_string());
        self
    }

    pub fn with_stage(&self, stage: Stage) -> Self {
        FlowRunConfig { stage, ..self.clone() }
    }

    /// Checks every recognised parameter. Unknown keys only warn.
    pub fn validate(&self) -> Result<(), FlowError> {
        for (key, value) in &self.parameters {
            let Some((_, check, constraint)) = CHECKED.iter().find(|(k, _, _)| k == key) else {
                warn!(key = %key, "unrecognised flow parameter passed through");
                continue;
            };
            let text = value.trim();
            let text = if key == "CORE_UTIL" { text.trim_end_matches('%') } else { text };
            let ok = text.parse::<f64>().map(|v| v.is_finite() && check(v)).unwrap_or(false);
            if !ok {
                return Err(FlowError::InvalidParameter {
                    key: key.clone(),
                    value: value.clone(),
                    constraint: constraint.to_string(),
                });
            }
        }
        Ok(())
    }

    /// Hash of the canonical JSON form; the replay lookup key.
    pub fn fingerprint(&self) -> String {
        crate::hash::digest_hex(crate::hash::canonical_json(self))
    }

    /// Builds a config from key/value pairs. `DESIGN_NAME` (or `DESIGN`),
    /// `PLATFORM` (or `PDK`) and `STAGE` fill the header; every other key is
    /// a flow parameter.
    pub fn from_pairs<'a>(pairs: impl IntoIterator<Item = (&'a str, &'a str)>) -> Result<Self, FlowError> {
        let mut design = None;
        let mut pdk = None;
        let mut stage = Stage::Full;
        let mut parameters = BTreeMap::new();
        for (key, value) in pairs {
            let key = key.trim();
            let value = value.trim();
            match key {
                "DESIGN_NAME" | "DESIGN" => design = Some(value.to_string()),
                "PLATFORM" | "PDK" => pdk = Some(Pdk::parse(value)),
                "STAGE" => {
                    stage = Stage::parse(value).ok_or_else(|| FlowError::InvalidParameter {
                        key: key.to_string(),
                        value: value.to_string(),
                        constraint: "a flow stage".into(),
                    })?
                }
                _ => {
                    let key =
                        if is_known(&key.to_ascii_uppercase()) { key.to_ascii_uppercase() } else { key.to_string() };
                    parameters.insert(key, value.to_string());
                }
            }
        }
        let required = |key: &str| FlowError::InvalidParameter {
            key: key.to_string(),
            value: String::new(),
            constraint: "present".into(),
        };
        let config = FlowRunConfig {
            design: design.filter(|d| !d.is_empty()).ok_or_else(|| required("DESIGN_NAME"))?,
            pdk: pdk.ok_or_else(|| required("PLATFORM"))?,
            stage,
            parameters,
        };
        config.validate()?;
        Ok(config)
    }
}

/// Parses `KEY=VALUE` lines (an optional `export ` prefix and `#` comments
/// are allowed) into a validated config.
pub fn parse_flow_config(text: &str) -> Result<FlowRunConfig, FlowError> {
    let mut pairs = Vec::new();
    for raw in text.lines() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let line = line.strip_prefix("export ").unwrap_or(line);
        let Some((k, v)) = line.split_once('=') else {
            return Err(FlowError::InvalidParameter {
                key: line.to_string(),
                value: String::new(),
                constraint: "a KEY=VALUE line".into(),
            });
        };
        let k = k.trim().trim_end_matches(['?', ':']).trim();
        pairs.push((k, v));
    }
    FlowRunConfig::from_pairs(pairs)
}
