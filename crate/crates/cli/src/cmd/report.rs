use std::collections::BTreeMap;
use std::fmt::Write as _;

use qorpilot_core::executor::StepOutcome;
use qorpilot_core::flowsim::{delta_percent, FlowFixture, Metric, Stage, BASELINE_PATCH};
use qorpilot_core::QoRReport;
use serde::{Deserialize, Serialize};

use crate::config::Config;
use crate::error::CliError;
use crate::io::{emit, file_sha256, read_json};
use crate::manifest::{RunManifest, MANIFEST_FILE};
use crate::ReportArgs;

pub const OUTCOMES_FILE: &str = "outcomes.json";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub platform: String,
    pub design: String,
    pub base: Option<f64>,
    pub new: Option<f64>,
    pub delta_pct: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub metric: String,
    pub rows: Vec<Row>,
}

impl Row {
    pub fn new(platform: &str, design: &str, base: Option<f64>, new: Option<f64>) -> Row {
        let delta_pct = match (base, new) {
            (Some(b), Some(n)) => delta_percent(b, n).ok(),
            _ => None,
        };
        Row { platform: platform.to_string(), design: design.to_string(), base, new, delta_pct }
    }
}

fn pdk_order(p: &str) -> (u8, String) {
    let rank = match p.to_ascii_lowercase().as_str() {
        "nangate45" => 0,
        "asap7" => 1,
        "sky130hd" => 2,
        _ => 3,
    };
    (rank, p.to_string())
}

impl Table {
    /// Rows sorted by platform, then design.
    pub fn new(metric: Metric, mut rows: Vec<Row>) -> Table {
        rows.sort_by(|a, b| (pdk_order(&a.platform), &a.design).cmp(&(pdk_order(&b.platform), &b.design)));
        Table { metric: metric.name().to_string(), rows }
    }

    /// Base is the first baseline seen per design; new is the last
    /// committed report, or the base when nothing was committed.
    pub fn from_outcomes(metric: Metric, outcomes: &[StepOutcome]) -> Table {
        let mut by_design: BTreeMap<(String, String), (Option<f64>, Option<f64>)> = BTreeMap::new();
        for o in outcomes {
            let key = (o.baseline.pdk.clone(), o.baseline.design.clone());
            let entry = by_design.entry(key).or_insert_with(|| {
                let b = o.baseline.get(metric);
                (b, b)
            });
            if let (Some(_), Some(r)) = (&o.committed, &o.report) {
                entry.1 = r.get(metric);
            }
        }
        let rows = by_design.into_iter().map(|((p, d), (b, n))| Row::new(&p, &d, b, n)).collect();
        Table::new(metric, rows)
    }

    /// Pairs each design's `baseline` entry at `stage` with its `patch`
    /// entry. A design with only one of the two gets an empty cell.
    pub fn from_fixture(metric: Metric, fixture: &FlowFixture, stage: Stage, patch: &str) -> Table {
        type Pair<'a> = (Option<&'a QoRReport>, Option<&'a QoRReport>);
        let mut by_design: BTreeMap<(String, String), Pair> = BTreeMap::new();
        for (config, label, report) in fixture.entries() {
            if config.stage != stage || (label != BASELINE_PATCH && label != patch) {
                continue;
            }
            let Some(report) = report else { continue };
            let slot = by_design.entry((config.pdk.to_string(), config.design.clone())).or_default();
            if label == BASELINE_PATCH {
                slot.0 = Some(report);
            } else {
                slot.1 = Some(report);
            }
        }
        let rows = by_design
            .into_iter()
            .map(|((p, d), (b, n))| Row::new(&p, &d, b.and_then(|r| r.get(metric)), n.and_then(|r| r.get(metric))))
            .collect();
        Table::new(metric, rows)
    }

    pub fn render_text(&self) -> String {
        let cell = |v: Option<f64>| v.map_or_else(|| "N/A".to_string(), |x| format!("{x}"));
        let delta = |v: Option<f64>| v.map_or_else(|| "N/A".to_string(), |x| format!("{x:+.2}"));
        let header = ["platform", "design", "base", "new", "delta_%"].map(str::to_string);
        let body: Vec<[String; 5]> = self
            .rows
            .iter()
            .map(|r| [r.platform.clone(), r.design.clone(), cell(r.base), cell(r.new), delta(r.delta_pct)])
            .collect();
        let mut width = header.clone().map(|h| h.len());
        for row in &body {
            for (w, c) in width.iter_mut().zip(row) {
                *w = (*w).max(c.len());
            }
        }
        let mut out = format!("# {}\n", self.metric);
        for row in std::iter::once(&header).chain(&body) {
            let mut line = String::new();
            for (i, c) in row.iter().enumerate() {
                if i < 2 {
                    let _ = write!(line, "{c:<w$}  ", w = width[i]);
                } else {
                    let _ = write!(line, "{c:>w$}  ", w = width[i]);
                }
            }
            out.push_str(line.trim_end());
            out.push('\n');
        }
        out
    }
}

pub fn run(args: &ReportArgs, config: &Config) -> Result<u8, CliError> {
    let metric =
        Metric::from_name(&args.metric).ok_or_else(|| CliError::Usage(format!("unknown metric {:?}", args.metric)))?;
    let table = if let Some(path) = &args.manifest {
        if !path.is_file() {
            return Err(CliError::MissingArtifact(path.display().to_string()));
        }
        let manifest: RunManifest = read_json(path)?;
        let dir = path.parent().unwrap_or(std::path::Path::new("."));
        let entry = manifest
            .artifact(OUTCOMES_FILE)
            .ok_or_else(|| CliError::MissingArtifact(format!("{OUTCOMES_FILE} (not listed in {MANIFEST_FILE})")))?;
        let outcomes_path = dir.join(&entry.path);
        if !outcomes_path.is_file() {
            return Err(CliError::MissingArtifact(outcomes_path.display().to_string()));
        }
        if file_sha256(&outcomes_path)? != entry.sha256 {
            return Err(CliError::Validation(format!("{} does not match its manifest hash", outcomes_path.display())));
        }
        let outcomes: Vec<StepOutcome> = read_json(&outcomes_path)?;
        Table::from_outcomes(metric, &outcomes)
    } else {
        let patch = args
            .patch
            .as_ref()
            .ok_or_else(|| CliError::Usage("report needs --manifest, or --fixture with --patch".into()))?;
        let stage =
            Stage::parse(&args.stage).ok_or_else(|| CliError::Usage(format!("unknown stage {:?}", args.stage)))?;
        let paths = if args.fixture.is_empty() { &config.flow.fixtures } else { &args.fixture };
        if paths.is_empty() {
            return Err(CliError::Usage("report needs at least one --fixture".into()));
        }
        let mut fixture = FlowFixture::new();
        for p in paths {
            if !p.is_file() {
                return Err(CliError::MissingArtifact(p.display().to_string()));
            }
            fixture.extend(FlowFixture::load(p)?)?;
        }
        Table::from_fixture(metric, &fixture, stage, patch)
    };
    if args.json {
        emit(&table);
    } else {
        print!("{}", table.render_text());
    }
    Ok(0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use qorpilot_core::flowsim::{FlowRunConfig, Pdk};

    fn report(design: &str, pdk: &str, rwl: f64) -> QoRReport {
        let mut r = QoRReport::new(design, pdk, Stage::Full);
        r.routed_wirelength_um = Some(rwl);
        r
    }

    #[test]
    fn two_fixture_reports_make_two_rows() {
        let mut f = FlowFixture::new();
        for (d, p, base, new) in [("ibex", Pdk::Asap7, 1000.0, 990.0), ("aes", Pdk::Nangate45, 200.0, 210.0)] {
            let c = FlowRunConfig::new(d, p.clone(), Stage::Full);
            f.insert_report(c.clone(), BASELINE_PATCH, report(d, p.as_str(), base)).unwrap();
            f.insert_report(c, "x", report(d, p.as_str(), new)).unwrap();
        }
        let t = Table::from_fixture(Metric::RoutedWirelengthUm, &f, Stage::Full, "x");
        assert_eq!(t.rows.len(), 2);
        assert_eq!((t.rows[0].design.as_str(), t.rows[0].delta_pct), ("aes", Some(5.0)));
        assert_eq!((t.rows[1].design.as_str(), t.rows[1].delta_pct), ("ibex", Some(-1.0)));
    }

    #[test]
    fn missing_base_renders_na() {
        let t = Table::new(Metric::RoutedWirelengthUm, vec![Row::new("SKY130HD", "jpeg", None, Some(5.0))]);
        let text = t.render_text();
        assert!(text.lines().nth(2).unwrap().contains("N/A"), "{text}");
        assert_eq!(t.rows[0].delta_pct, None);
    }

    #[test]
    fn json_field_order_is_fixed() {
        let t = Table::new(Metric::EcpNs, vec![Row::new("Nangate45", "aes", Some(2.0), Some(2.0))]);
        let s = serde_json::to_string(&t).unwrap();
        assert_eq!(
            s,
            r#"{"metric":"ecp_ns","rows":[{"platform":"Nangate45","design":"aes","base":2.0,"new":2.0,"delta_pct":0.0}]}"#
        );
    }

    #[test]
    fn text_columns_align() {
        let t = Table::new(
            Metric::RoutedWirelengthUm,
            vec![
                Row::new("Nangate45", "aes", Some(230044.0), Some(217415.0)),
                Row::new("ASAP7", "ibex", Some(1.0), Some(1.0)),
            ],
        );
        let text = t.render_text();
        let lines: Vec<&str> = text.lines().skip(1).collect();
        let ends: Vec<usize> = lines.iter().map(|l| l.len()).collect();
        assert!(ends.windows(2).all(|w| w[0] == w[1]), "{text}");
        assert!(lines[1].ends_with("-5.49"));
    }
}
