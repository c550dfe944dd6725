use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use tracing::warn;

use super::FlowError;

/// Netlist size of a benchmark design.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DesignAttributes {
    pub cells: u64,
    pub macros: u64,
    pub nets: u64,
    pub pins: u64,
}

impl DesignAttributes {
    pub fn pins_cover_nets(&self) -> bool {
        self.pins >= self.nets
    }
}

/// Loads a `{design: attributes}` JSON map. Entries with fewer pins than nets
/// are kept but logged.
pub fn load_design_attributes(bytes: &[u8]) -> Result<BTreeMap<String, DesignAttributes>, FlowError> {
    let map: BTreeMap<String, DesignAttributes> = serde_json::from_slice(bytes)
        .map_err(|e| FlowError::MalformedFixture { line: e.line(), reason: e.to_string() })?;
    for (name, attrs) in &map {
        if !attrs.pins_cover_nets() {
            warn!(design = %name, pins = attrs.pins, nets = attrs.nets, "fewer pins than nets");
        }
    }
    Ok(map)
}
