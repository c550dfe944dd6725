use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{parse_qor_json, FlowError, FlowRunConfig, QoRReport};
use crate::process::run_shell;

/// Patch fingerprint of an unmodified workspace.
pub const BASELINE_PATCH: &str = "baseline";

/// Identifies the cumulative patch set applied on top of the baseline tree.
/// Empty patches do not count.
pub fn patch_fingerprint<S: AsRef<str>>(patches: &[S]) -> String {
    let texts: Vec<&str> = patches.iter().map(|p| p.as_ref()).filter(|p| !p.trim().is_empty()).collect();
    if texts.is_empty() {
        return BASELINE_PATCH.to_string();
    }
    crate::hash::digest_hex(texts.join("\0"))
}

/// Backend that turns a flow configuration plus workspace state into a QoR
/// report.
pub trait FlowRunner: Send + Sync {
    fn run(&self, config: &FlowRunConfig, patch_fingerprint: &str, workdir: &Path) -> Result<QoRReport, FlowError>;
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum Outcome {
    Report(QoRReport),
    Crash(String),
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FixtureLine {
    config: FlowRunConfig,
    patch: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    report: Option<QoRReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    crash: Option<String>,
}

/// Recorded flow results keyed by (config fingerprint, patch fingerprint).
/// An entry may record a crash log instead of a report.
#[derive(Clone, Debug, Default)]
pub struct FlowFixture {
    entries: BTreeMap<(String, String), (FlowRunConfig, Outcome)>,
}

impl FlowFixture {
    pub fn new() -> Self {
        Self::default()
    }

    /// Reads `*.qor.jsonl`: one `{config, patch, report}` (or
    /// `{config, patch, crash}`) object per line. Blank lines are skipped.
    pub fn parse(text: &str) -> Result<Self, FlowError> {
        let mut fixture = FlowFixture::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let bad = |reason: String| FlowError::MalformedFixture { line: i + 1, reason };
            let entry: FixtureLine = serde_json::from_str(line).map_err(|e| bad(e.to_string()))?;
            let outcome = match (entry.report, entry.crash) {
                (Some(r), None) => Outcome::Report(r),
                (None, Some(log)) => Outcome::Crash(log),
                _ => return Err(bad("exactly one of report or crash is required".into())),
            };
            fixture.put(entry.config, &entry.patch, outcome).map_err(bad)?;
        }
        Ok(fixture)
    }

    pub fn load(path: &Path) -> Result<Self, FlowError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| FlowError::Io { path: path.display().to_string(), source })?;
        Self::parse(&text)
    }

    /// Merges every entry of `other`; conflicting entries are an error.
    pub fn extend(&mut self, other: FlowFixture) -> Result<(), FlowError> {
        for ((_, patch), (config, outcome)) in other.entries {
            self.put(config, &patch, outcome).map_err(|reason| FlowError::MalformedFixture { line: 0, reason })?;
        }
        Ok(())
    }

    pub fn insert_report(&mut self, config: FlowRunConfig, patch: &str, report: QoRReport) -> Result<(), FlowError> {
        self.put(config, patch, Outcome::Report(report))
            .map_err(|reason| FlowError::MalformedFixture { line: 0, reason })
    }

    pub fn insert_crash(&mut self, config: FlowRunConfig, patch: &str, log: &str) -> Result<(), FlowError> {
        self.put(config, patch, Outcome::Crash(log.to_string()))
            .map_err(|reason| FlowError::MalformedFixture { line: 0, reason })
    }

    fn put(&mut self, config: FlowRunConfig, patch: &str, outcome: Outcome) -> Result<(), String> {
        config.validate().map_err(|e| e.to_string())?;
        let key = (config.fingerprint(), patch.to_string());
        match self.entries.get(&key) {
            Some((_, existing)) if *existing != outcome => {
                Err(format!("conflicting entries for {}/{} patch {}", config.design, config.stage, patch))
            }
            _ => {
                self.entries.insert(key, (config, outcome));
                Ok(())
            }
        }
    }

    /// Entries in key order as (config, patch, report); crash entries have
    /// no report.
    pub fn entries(&self) -> impl Iterator<Item = (&FlowRunConfig, &str, Option<&QoRReport>)> {
        self.entries.iter().map(|((_, patch), (config, outcome))| {
            let report = match outcome {
                Outcome::Report(r) => Some(r),
                Outcome::Crash(_) => None,
            };
            (config, patch.as_str(), report)
        })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Entries as JSON lines, in key order.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for ((_, patch), (config, outcome)) in &self.entries {
            let (report, crash) = match outcome {
                Outcome::Report(r) => (Some(r.clone()), None),
                Outcome::Crash(l) => (None, Some(l.clone())),
            };
            let line = FixtureLine { config: config.clone(), patch: patch.clone(), report, crash };
            out.push_str(&serde_json::to_string(&line).expect("fixture line serializes"));
            out.push('\n');
        }
        out
    }
}

/// Exact-match lookup of a recorded run.
pub fn replay_run(
    fixture: &FlowFixture,
    config: &FlowRunConfig,
    patch_fingerprint: &str,
) -> Result<QoRReport, FlowError> {
    match fixture.entries.get(&(config.fingerprint(), patch_fingerprint.to_string())) {
        Some((_, Outcome::Report(r))) => Ok(r.clone()),
        Some((_, Outcome::Crash(log))) => Err(FlowError::FlowCrash { log: log.clone() }),
        None => Err(FlowError::UnknownScenario {
            design: config.design.clone(),
            pdk: config.pdk.to_string(),
            stage: config.stage,
            patch: patch_fingerprint.to_string(),
        }),
    }
}

impl FlowRunner for FlowFixture {
    fn run(&self, config: &FlowRunConfig, patch_fingerprint: &str, _workdir: &Path) -> Result<QoRReport, FlowError> {
        replay_run(self, config, patch_fingerprint)
    }
}

/// External flow command: config JSON on stdin, report JSON on stdout. Exit
/// status 2 means the flow itself crashed.
#[derive(Clone, Debug)]
pub struct ProcessFlowRunner {
    pub cmd: String,
}

impl ProcessFlowRunner {
    pub fn new(cmd: &str) -> Self {
        ProcessFlowRunner { cmd: cmd.to_string() }
    }
}

impl FlowRunner for ProcessFlowRunner {
    fn run(&self, config: &FlowRunConfig, patch_fingerprint: &str, workdir: &Path) -> Result<QoRReport, FlowError> {
        let input = serde_json::to_vec(config).expect("config serializes");
        let out = run_shell(&self.cmd, &input, Some(workdir), &[("QORPILOT_PATCH_FINGERPRINT", patch_fingerprint)])
            .map_err(|e| FlowError::RunnerUnavailable(e.to_string()))?;
        match out.code {
            Some(0) => parse_qor_json(out.stdout.as_bytes()),
            Some(2) => Err(FlowError::FlowCrash { log: out.stderr }),
            code => {
                Err(FlowError::RunnerUnavailable(format!("`{}` exited with {code:?}: {}", self.cmd, out.stderr.trim())))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flowsim::{Pdk, Stage};

    fn aes() -> FlowRunConfig {
        FlowRunConfig::new("aes", Pdk::Nangate45, Stage::Full)
            .with_param("CORE_UTIL", "85")
            .with_param("PLACEMENT_LB_ADDON", "0.2")
    }

    fn seeded() -> FlowFixture {
        let mut r = QoRReport::new("aes", "Nangate45", Stage::Full);
        r.routed_wirelength_um = Some(230044.0);
        let mut f = FlowFixture::new();
        f.insert_report(aes(), BASELINE_PATCH, r).unwrap();
        f.insert_crash(aes(), "deadbeef", "segfault in detailed_place").unwrap();
        f
    }

    #[test]
    fn baseline_lookup() {
        let f = seeded();
        let r = replay_run(&f, &aes(), BASELINE_PATCH).unwrap();
        assert_eq!(r.routed_wirelength_um, Some(230044.0));
        assert_eq!(replay_run(&f, &aes(), BASELINE_PATCH).unwrap(), r);
    }

    #[test]
    fn unknown_design_and_crash() {
        let f = seeded();
        let other = FlowRunConfig::new("nope", Pdk::Nangate45, Stage::Full);
        assert!(matches!(replay_run(&f, &other, BASELINE_PATCH), Err(FlowError::UnknownScenario { .. })));
        assert!(matches!(replay_run(&f, &aes(), "deadbeef"), Err(FlowError::FlowCrash { .. })));
    }

    #[test]
    fn jsonl_round_trip() {
        let f = seeded();
        let text = f.to_jsonl();
        let g = FlowFixture::parse(&text).unwrap();
        assert_eq!(g.len(), 2);
        assert_eq!(g.to_jsonl(), text);
    }

    #[test]
    fn conflicting_lines_rejected() {
        let f = seeded();
        let mut line = f.to_jsonl().lines().next().unwrap().to_string();
        let dup = line.clone();
        line = line.replace("230044.0", "1.0");
        let err = FlowFixture::parse(&format!("{dup}\n{line}\n")).unwrap_err();
        assert!(matches!(err, FlowError::MalformedFixture { line: 2, .. }));
    }

    #[test]
    fn patch_fingerprints() {
        assert_eq!(patch_fingerprint::<&str>(&[]), BASELINE_PATCH);
        assert_eq!(patch_fingerprint(&["", "  \n"]), BASELINE_PATCH);
        let a = patch_fingerprint(&["x"]);
        assert_eq!(a.len(), 32);
        assert_ne!(a, patch_fingerprint(&["x", "y"]));
    }

    #[test]
    fn process_runner_exit_codes() {
        let dir = tempfile::tempdir().unwrap();
        let ok = ProcessFlowRunner::new(
            r#"cat >/dev/null; echo '{"design":"aes","pdk":"Nangate45","stage":"Full","routed_wirelength_um":5}'"#,
        );
        assert_eq!(ok.run(&aes(), BASELINE_PATCH, dir.path()).unwrap().routed_wirelength_um, Some(5.0));
        let crash = ProcessFlowRunner::new("echo boom >&2; exit 2");
        assert!(
            matches!(crash.run(&aes(), BASELINE_PATCH, dir.path()), Err(FlowError::FlowCrash { log }) if log.contains("boom"))
        );
        let broken = ProcessFlowRunner::new("exit 7");
        assert!(matches!(broken.run(&aes(), BASELINE_PATCH, dir.path()), Err(FlowError::RunnerUnavailable(_))));
    }
}
