use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::FlowError;

/// Flow stage a report was produced at. Ordered by flow progress.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Stage {
    Place,
    GlobalRoute,
    DetailedRoute,
    Sta,
    Full,
}

impl Stage {
    pub const ALL: [Stage; 5] = [Stage::Place, Stage::GlobalRoute, Stage::DetailedRoute, Stage::Sta, Stage::Full];

    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Place => "Place",
            Stage::GlobalRoute => "GlobalRoute",
            Stage::DetailedRoute => "DetailedRoute",
            Stage::Sta => "Sta",
            Stage::Full => "Full",
        }
    }

    pub fn parse(s: &str) -> Option<Stage> {
        let norm: String = s.chars().filter(|c| *c != '_' && *c != '-').collect::<String>().to_ascii_lowercase();
        match norm.as_str() {
            "place" => Some(Stage::Place),
            "globalroute" | "grt" => Some(Stage::GlobalRoute),
            "detailedroute" | "drt" => Some(Stage::DetailedRoute),
            "sta" => Some(Stage::Sta),
            "full" => Some(Stage::Full),
            _ => None,
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Metrics of one flow run. Metrics a stage does not produce are `None`,
/// never zero.
#[derive(Clone, Debug, PartialEq)]
pub struct QoRReport {
    pub design: String,
    pub pdk: String,
    pub stage: Stage,
    pub routed_wirelength_um: Option<f64>,
    pub ecp_ns: Option<f64>,
    pub wns_ns: Option<f64>,
    pub tns_ns: Option<f64>,
    pub drc_count: Option<u64>,
    pub via_count: Option<u64>,
    pub density: Option<f64>,
    pub power_w: Option<f64>,
    pub instance_count: Option<u64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    RoutedWirelengthUm,
    EcpNs,
    WnsNs,
    TnsNs,
    DrcCount,
    ViaCount,
    Density,
    PowerW,
    InstanceCount,
}

impl Metric {
    pub const ALL: [Metric; 9] = [
        Metric::RoutedWirelengthUm,
        Metric::EcpNs,
        Metric::WnsNs,
        Metric::TnsNs,
        Metric::DrcCount,
        Metric::ViaCount,
        Metric::Density,
        Metric::PowerW,
        Metric::InstanceCount,
    ];

    /// Report field name.
    pub fn name(self) -> &'static str {
        match self {
            Metric::RoutedWirelengthUm => "routed_wirelength_um",
            Metric::EcpNs => "ecp_ns",
            Metric::WnsNs => "wns_ns",
            Metric::TnsNs => "tns_ns",
            Metric::DrcCount => "drc_count",
            Metric::ViaCount => "via_count",
            Metric::Density => "density",
            Metric::PowerW => "power_w",
            Metric::InstanceCount => "instance_count",
        }
    }

    pub fn from_name(name: &str) -> Option<Metric> {
        Metric::ALL.into_iter().find(|m| m.name() == name)
    }

    /// Slack metrics improve upward; everything else improves downward.
    pub fn lower_is_better(self) -> bool {
        !matches!(self, Metric::WnsNs | Metric::TnsNs)
    }

    fn is_integer(self) -> bool {
        matches!(self, Metric::DrcCount | Metric::ViaCount | Metric::InstanceCount)
    }
}

impl QoRReport {
    pub fn new(design: &str, pdk: &str, stage: Stage) -> Self {
        QoRReport {
            design: design.to_string(),
            pdk: pdk.to_string(),
            stage,
            routed_wirelength_um: None,
            ecp_ns: None,
            wns_ns: None,
            tns_ns: None,
            drc_count: None,
            via_count: None,
            density: None,
            power_w: None,
            instance_count: None,
        }
    }

    pub fn get(&self, metric: Metric) -> Option<f64> {
        match metric {
            Metric::RoutedWirelengthUm => self.routed_wirelength_um,
            Metric::EcpNs => self.ecp_ns,
            Metric::WnsNs => self.wns_ns,
            Metric::TnsNs => self.tns_ns,
            Metric::DrcCount => self.drc_count.map(|v| v as f64),
            Metric::ViaCount => self.via_count.map(|v| v as f64),
            Metric::Density => self.density,
            Metric::PowerW => self.power_w,
            Metric::InstanceCount => self.instance_count.map(|v| v as f64),
        }
    }

    /// Sets a metric; integer metrics are truncated toward zero.
    pub fn set(&mut self, metric: Metric, value: Option<f64>) {
        let int = value.map(|v| v as u64);
        match metric {
            Metric::RoutedWirelengthUm => self.routed_wirelength_um = value,
            Metric::EcpNs => self.ecp_ns = value,
            Metric::WnsNs => self.wns_ns = value,
            Metric::TnsNs => self.tns_ns = value,
            Metric::DrcCount => self.drc_count = int,
            Metric::ViaCount => self.via_count = int,
            Metric::Density => self.density = value,
            Metric::PowerW => self.power_w = value,
            Metric::InstanceCount => self.instance_count = int,
        }
    }

    pub fn has_metrics(&self) -> bool {
        Metric::ALL.iter().any(|m| self.get(*m).is_some())
    }

    /// Checks value ranges and that at least one metric is present.
    pub fn validate(&self) -> Result<(), FlowError> {
        let bad = |field: &str, reason: &str| {
            Err(FlowError::SchemaError { field: field.to_string(), reason: reason.to_string() })
        };
        for m in Metric::ALL {
            if let Some(v) = self.get(m) {
                if !v.is_finite() {
                    return bad(m.name(), "must be finite");
                }
            }
        }
        if self.routed_wirelength_um.is_some_and(|v| v < 0.0) {
            return bad("routed_wirelength_um", "must be nonnegative");
        }
        if self.ecp_ns.is_some_and(|v| v <= 0.0) {
            return bad("ecp_ns", "must be positive");
        }
        if self.tns_ns.is_some_and(|v| v > 0.0) {
            return bad("tns_ns", "must be at most 0");
        }
        if self.density.is_some_and(|v| !(0.0..=1.0).contains(&v)) {
            return bad("density", "must lie in [0, 1]");
        }
        if self.power_w.is_some_and(|v| v < 0.0) {
            return bad("power_w", "must be nonnegative");
        }
        if !self.has_metrics() {
            return bad("metrics", "at least one metric is required");
        }
        Ok(())
    }

    pub fn to_json_value(&self) -> Value {
        let mut obj = Map::new();
        obj.insert("design".into(), Value::from(self.design.clone()));
        obj.insert("pdk".into(), Value::from(self.pdk.clone()));
        obj.insert("stage".into(), Value::from(self.stage.as_str()));
        for m in Metric::ALL {
            let v = match (m.is_integer(), self.get(m)) {
                (_, None) => Value::Null,
                (true, Some(v)) => Value::from(v as u64),
                (false, Some(v)) => Value::from(v),
            };
            obj.insert(m.name().into(), v);
        }
        Value::Object(obj)
    }

    pub fn from_json_value(value: &Value) -> Result<QoRReport, FlowError> {
        let err =
            |field: &str, reason: &str| FlowError::SchemaError { field: field.to_string(), reason: reason.to_string() };
        let obj = value.as_object().ok_or_else(|| err("$", "expected an object"))?;
        for key in obj.keys() {
            if !matches!(key.as_str(), "design" | "pdk" | "stage") && Metric::from_name(key).is_none() {
                return Err(err(key, "unknown field"));
            }
        }
        let text = |field: &str| -> Result<String, FlowError> {
            match obj.get(field) {
                Some(Value::String(s)) if !s.is_empty() => Ok(s.clone()),
                Some(Value::String(_)) | None | Some(Value::Null) => Err(err(field, "required")),
                Some(_) => Err(err(field, "expected a string")),
            }
        };
        let design = text("design")?;
        let pdk = text("pdk")?;
        let stage_text = text("stage")?;
        let stage = Stage::parse(&stage_text).ok_or_else(|| err("stage", "unknown stage"))?;
        let mut report = QoRReport::new(&design, &pdk, stage);
        for m in Metric::ALL {
            let v = match obj.get(m.name()) {
                None | Some(Value::Null) => None,
                Some(Value::String(s)) if s == "N/A" => None,
                Some(Value::Number(n)) => {
                    let v = n.as_f64().ok_or_else(|| err(m.name(), "not representable"))?;
                    if m.is_integer() && (v < 0.0 || v.fract() != 0.0) {
                        return Err(err(m.name(), "expected a nonnegative integer"));
                    }
                    Some(v)
                }
                Some(_) => return Err(err(m.name(), "expected a number or \"N/A\"")),
            };
            report.set(m, v);
        }
        report.validate()?;
        Ok(report)
    }
}

impl Serialize for QoRReport {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.to_json_value().serialize(s)
    }
}

impl<'de> Deserialize<'de> for QoRReport {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = Value::deserialize(d)?;
        QoRReport::from_json_value(&v).map_err(serde::de::Error::custom)
    }
}

pub fn parse_qor_json(bytes: &[u8]) -> Result<QoRReport, FlowError> {
    let value: Value = serde_json::from_slice(bytes)
        .map_err(|e| FlowError::SchemaError { field: "$".into(), reason: e.to_string() })?;
    QoRReport::from_json_value(&value)
}

/// Canonical JSON with every schema key present; absent metrics are `null`.
pub fn render_qor_json(report: &QoRReport) -> Vec<u8> {
    crate::hash::canonical_json(&report.to_json_value())
}

fn log_key(key: &str) -> Option<Metric> {
    let key = key.trim().to_ascii_lowercase();
    match key.as_str() {
        "wirelength" | "rwl" | "routed_wirelength" => Some(Metric::RoutedWirelengthUm),
        "wns" => Some(Metric::WnsNs),
        "tns" => Some(Metric::TnsNs),
        "ecp" => Some(Metric::EcpNs),
        "drc_violations" | "drcs" => Some(Metric::DrcCount),
        "vias" => Some(Metric::ViaCount),
        "power" => Some(Metric::PowerW),
        other => Metric::from_name(other),
    }
}

/// Reads `key = value` lines. Canonical field names and a few common
/// aliases are recognised; later lines override earlier ones and anything
/// else is ignored. `design`, `pdk` and `stage` lines fill the header;
/// otherwise it stays empty at stage `Full`.
pub fn parse_qor_log(text: &str) -> Result<QoRReport, FlowError> {
    let mut report = QoRReport::new("", "", Stage::Full);
    for line in text.lines() {
        let Some((key, value)) = line.split_once('=') else {
            continue;
        };
        let value = value.trim();
        match key.trim().to_ascii_lowercase().as_str() {
            "design" => report.design = value.to_string(),
            "pdk" | "platform" => report.pdk = value.to_string(),
            "stage" => {
                if let Some(s) = Stage::parse(value) {
                    report.stage = s;
                }
            }
            _ => {
                let Some(metric) = log_key(key) else { continue };
                if value == "N/A" {
                    report.set(metric, None);
                } else if let Ok(v) = value.parse::<f64>() {
                    if !accepts_value(metric, v) {
                        continue;
                    }
                    report.set(metric, Some(v));
                }
            }
        }
    }
    if !report.has_metrics() {
        return Err(FlowError::NoMetricsFound);
    }
    Ok(report)
}

fn accepts_value(metric: Metric, v: f64) -> bool {
    v.is_finite() && (!metric.is_integer() || (v >= 0.0 && v.fract() == 0.0))
}

/// Relative change in percent, rounded half away from zero to two decimals.
pub fn delta_percent(base: f64, new: f64) -> Result<f64, FlowError> {
    if base.is_nan() || base <= 0.0 {
        return Err(FlowError::NonpositiveBase(base));
    }
    let raw = 100.0 * (new - base) / base;
    Ok((raw * 100.0).round() / 100.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn json_with_wirelength() {
        let r = parse_qor_json(br#"{"design":"aes","pdk":"Nangate45","stage":"Full","routed_wirelength_um":230044}"#)
            .unwrap();
        assert_eq!(r.routed_wirelength_um, Some(230044.0));
        assert_eq!(r.design, "aes");
        assert_eq!(r.wns_ns, None);
    }

    #[test]
    fn not_available_means_absent() {
        let r = parse_qor_json(
            br#"{"design":"jpeg","pdk":"SKY130HD","stage":"Full","routed_wirelength_um":"N/A","instance_count":10}"#,
        )
        .unwrap();
        assert_eq!(r.routed_wirelength_um, None);
    }

    #[test]
    fn bare_stage_is_schema_error() {
        assert!(matches!(parse_qor_json(br#"{"stage":"Full"}"#), Err(FlowError::SchemaError { .. })));
        let only_na = br#"{"design":"jpeg","pdk":"SKY130HD","stage":"Full","routed_wirelength_um":"N/A"}"#;
        assert!(matches!(
            parse_qor_json(only_na),
            Err(FlowError::SchemaError { field, .. }) if field == "metrics"
        ));
    }

    #[test]
    fn schema_rejects_unknown_and_out_of_range() {
        let unknown = br#"{"design":"a","pdk":"p","stage":"Full","hpwl":1}"#;
        assert!(matches!(parse_qor_json(unknown), Err(FlowError::SchemaError { field, .. }) if field == "hpwl"));
        let tns = br#"{"design":"a","pdk":"p","stage":"Full","tns_ns":0.5}"#;
        assert!(matches!(parse_qor_json(tns), Err(FlowError::SchemaError { field, .. }) if field == "tns_ns"));
        let drc = br#"{"design":"a","pdk":"p","stage":"Full","drc_count":1.5}"#;
        assert!(matches!(parse_qor_json(drc), Err(FlowError::SchemaError { field, .. }) if field == "drc_count"));
    }

    #[test]
    fn rendered_key_set_is_fixed() {
        let r = QoRReport::new("aes", "ASAP7", Stage::GlobalRoute);
        let v = r.to_json_value();
        let keys: Vec<&String> = v.as_object().unwrap().keys().collect();
        let mut expected = vec![
            "design",
            "pdk",
            "stage",
            "routed_wirelength_um",
            "ecp_ns",
            "wns_ns",
            "tns_ns",
            "drc_count",
            "via_count",
            "density",
            "power_w",
            "instance_count",
        ];
        expected.sort();
        assert_eq!(keys, expected);
    }

    #[test]
    fn log_aliases_and_last_wins() {
        let r = parse_qor_log("wirelength = 62710\ndrc_violations = 0").unwrap();
        assert_eq!(r.routed_wirelength_um, Some(62710.0));
        assert_eq!(r.drc_count, Some(0));
        let r = parse_qor_log("wns = -0.1\nnoise line\nwns = -0.2\n").unwrap();
        assert_eq!(r.wns_ns, Some(-0.2));
        assert!(matches!(parse_qor_log(""), Err(FlowError::NoMetricsFound)));
    }

    #[test]
    fn delta_examples() {
        assert_eq!(delta_percent(230044.0, 217415.0).unwrap(), -5.49);
        assert_eq!(delta_percent(80402.0, 80823.0).unwrap(), 0.52);
        assert_eq!(delta_percent(7.0, 7.0).unwrap(), 0.0);
        assert!(matches!(delta_percent(0.0, 1.0), Err(FlowError::NonpositiveBase(_))));
    }

    #[test]
    fn delta_rounds_half_away_from_zero() {
        // 100 * 1/8 = 12.5 exactly at the third decimal: 0.125 -> 0.13
        assert_eq!(delta_percent(800.0, 801.0).unwrap(), 0.13);
        assert_eq!(delta_percent(800.0, 799.0).unwrap(), -0.13);
    }

    fn arb_report() -> impl Strategy<Value = QoRReport> {
        (
            prop::option::of(0.0f64..1e7),
            prop::option::of(0.01f64..10.0),
            prop::option::of(-5.0f64..5.0),
            prop::option::of(-500.0f64..=0.0),
            prop::option::of(0u64..1000),
            prop::option::of(0.0f64..=1.0),
            prop::sample::select(Stage::ALL.to_vec()),
        )
            .prop_filter("needs a metric", |t| t.0.is_some() || t.1.is_some() || t.2.is_some() || t.4.is_some())
            .prop_map(|(rwl, ecp, wns, tns, drc, density, stage)| {
                let mut r = QoRReport::new("d", "Nangate45", stage);
                r.routed_wirelength_um = rwl;
                r.ecp_ns = ecp;
                r.wns_ns = wns;
                r.tns_ns = tns;
                r.drc_count = drc;
                r.density = density;
                r
            })
    }

    proptest! {
        #[test]
        fn json_round_trip(r in arb_report()) {
            prop_assert_eq!(parse_qor_json(&render_qor_json(&r)).unwrap(), r);
        }

        #[test]
        fn delta_sign_follows_direction(base in 0.001f64..1e7, new in 0.0f64..1e7) {
            let d = delta_percent(base, new).unwrap();
            if new < base { prop_assert!(d <= 0.0); }
            if new > base { prop_assert!(d >= 0.0); }
            if new == base { prop_assert_eq!(d, 0.0); }
        }
    }
}
