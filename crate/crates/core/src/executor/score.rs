//! Composite QoR score and the acceptance gate.

use serde::{Deserialize, Serialize};
use tracing::warn;

use super::ExecError;
use crate::flowsim::{Metric, QoRReport};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricTerm {
    pub metric: Metric,
    pub weight: f64,
    pub baseline: f64,
    pub lower_is_better: bool,
}

impl MetricTerm {
    /// Signed relative improvement of `value` over the baseline.
    pub fn normalized(&self, value: f64) -> f64 {
        let scale = if self.baseline == 0.0 { 1.0 } else { self.baseline.abs() };
        if self.lower_is_better {
            (self.baseline - value) / scale
        } else {
            (value - self.baseline) / scale
        }
    }
}

/// Weighted, baseline-normalized metric set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricModel {
    pub terms: Vec<MetricTerm>,
}

impl MetricModel {
    /// rWL 0.4, WNS 0.3, vias 0.15, density 0.15.
    pub fn default_weights() -> Vec<(Metric, f64)> {
        vec![(Metric::RoutedWirelengthUm, 0.4), (Metric::WnsNs, 0.3), (Metric::ViaCount, 0.15), (Metric::Density, 0.15)]
    }

    pub fn new(terms: Vec<MetricTerm>) -> Result<Self, ExecError> {
        if terms.iter().any(|t| t.weight.is_nan() || t.weight < 0.0 || !t.baseline.is_finite()) {
            return Err(ExecError::InvalidModel("weights must be nonnegative and baselines finite".into()));
        }
        if terms.iter().map(|t| t.weight).sum::<f64>().partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) {
            return Err(ExecError::InvalidModel("weights must sum to a positive value".into()));
        }
        Ok(MetricModel { terms })
    }

    /// Takes baselines from `baseline`, which must carry every weighted
    /// metric. Zero-weight metrics are dropped.
    pub fn from_baseline(weights: &[(Metric, f64)], baseline: &QoRReport) -> Result<Self, ExecError> {
        let mut terms = Vec::new();
        for &(metric, weight) in weights {
            if weight == 0.0 {
                continue;
            }
            let b = baseline.get(metric).ok_or_else(|| ExecError::MissingMetric(metric.name().to_string()))?;
            terms.push(MetricTerm { metric, weight, baseline: b, lower_is_better: metric.lower_is_better() });
        }
        MetricModel::new(terms)
    }

    /// Like [`from_baseline`](Self::from_baseline), but drops weighted
    /// metrics the baseline does not report.
    pub fn from_partial_baseline(weights: &[(Metric, f64)], baseline: &QoRReport) -> Result<Self, ExecError> {
        let kept: Vec<(Metric, f64)> = weights
            .iter()
            .copied()
            .filter(|&(m, w)| {
                let present = baseline.get(m).is_some();
                if !present && w != 0.0 {
                    warn!(metric = m.name(), "baseline lacks a weighted metric; dropped from the model");
                }
                present
            })
            .collect();
        MetricModel::from_baseline(&kept, baseline)
    }
}

/// `Σ w·n` over the model's metrics; positive means better than baseline.
pub fn composite_score(report: &QoRReport, model: &MetricModel) -> Result<f64, ExecError> {
    let mut s = 0.0;
    for t in &model.terms {
        let v = report.get(t.metric).ok_or_else(|| ExecError::MissingMetric(t.metric.name().to_string()))?;
        s += t.weight * t.normalized(v);
    }
    Ok(s)
}

/// `S(candidate) − S(baseline)` over the metrics both reports carry.
pub fn composite_delta(candidate: &QoRReport, baseline: &QoRReport, model: &MetricModel) -> f64 {
    let mut d = 0.0;
    for t in &model.terms {
        match (candidate.get(t.metric), baseline.get(t.metric)) {
            (Some(c), Some(b)) => d += t.weight * (t.normalized(c) - t.normalized(b)),
            _ => warn!(metric = t.metric.name(), "metric missing from a report; left out of the composite"),
        }
    }
    d
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GateConfig {
    pub wns_degradation_threshold_ns: f64,
    pub forbid_new_drcs: bool,
    pub require_build: bool,
    pub require_tests: bool,
}

impl Default for GateConfig {
    fn default() -> Self {
        GateConfig {
            wns_degradation_threshold_ns: 0.01,
            forbid_new_drcs: true,
            require_build: true,
            require_tests: true,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum GateReason {
    BuildFailed,
    TestsFailed,
    NewDrcs,
    WnsDegraded,
    NoImprovement,
}

impl GateReason {
    /// Gates that reject a candidate regardless of its score.
    pub const HARD: [GateReason; 4] =
        [GateReason::BuildFailed, GateReason::TestsFailed, GateReason::NewDrcs, GateReason::WnsDegraded];
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GateDecision {
    pub accepted: bool,
    pub composite_delta: f64,
    pub reasons: Vec<GateReason>,
}

impl GateDecision {
    fn from_reasons(composite_delta: f64, reasons: Vec<GateReason>) -> Self {
        GateDecision { accepted: reasons.is_empty(), composite_delta, reasons }
    }

    /// Keeps only reasons in `enforced` (plus `NoImprovement`, which always
    /// applies) and additionally requires the delta to exceed `min_delta`.
    pub fn enforce(&self, enforced: &[GateReason], min_delta: f64) -> GateDecision {
        let mut reasons: Vec<GateReason> =
            self.reasons.iter().copied().filter(|r| *r == GateReason::NoImprovement || enforced.contains(r)).collect();
        if self.composite_delta <= min_delta && !reasons.contains(&GateReason::NoImprovement) {
            reasons.push(GateReason::NoImprovement);
        }
        GateDecision::from_reasons(self.composite_delta, reasons)
    }
}

/// Evaluates every gate independently. A gate whose metric is missing from
/// either report passes.
pub fn gate(
    candidate: &QoRReport,
    baseline: &QoRReport,
    build_ok: bool,
    tests_ok: bool,
    model: &MetricModel,
    cfg: &GateConfig,
) -> GateDecision {
    let mut reasons = Vec::new();
    if cfg.require_build && !build_ok {
        reasons.push(GateReason::BuildFailed);
    }
    if cfg.require_tests && !tests_ok {
        reasons.push(GateReason::TestsFailed);
    }
    match (candidate.drc_count, baseline.drc_count) {
        (Some(c), Some(b)) => {
            if cfg.forbid_new_drcs && c > b {
                reasons.push(GateReason::NewDrcs);
            }
        }
        _ if cfg.forbid_new_drcs => warn!("DRC count missing; DRC gate skipped"),
        _ => {}
    }
    match (candidate.wns_ns, baseline.wns_ns) {
        (Some(c), Some(b)) => {
            if c < b - cfg.wns_degradation_threshold_ns {
                reasons.push(GateReason::WnsDegraded);
            }
        }
        _ => warn!("WNS missing; WNS gate skipped"),
    }
    let delta = composite_delta(candidate, baseline, model);
    if delta.is_nan() || delta <= 0.0 {
        reasons.push(GateReason::NoImprovement);
    }
    GateDecision::from_reasons(delta, reasons)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flowsim::Stage;

    fn report(rwl: f64) -> QoRReport {
        let mut r = QoRReport::new("aes", "Nangate45", Stage::Full);
        r.routed_wirelength_um = Some(rwl);
        r.drc_count = Some(0);
        r.wns_ns = Some(-0.1);
        r
    }

    fn rwl_model(base: f64) -> MetricModel {
        MetricModel::from_baseline(&[(Metric::RoutedWirelengthUm, 1.0)], &report(base)).unwrap()
    }

    #[test]
    fn baseline_scores_zero() {
        let m = rwl_model(230044.0);
        assert_eq!(composite_score(&report(230044.0), &m).unwrap(), 0.0);
    }

    #[test]
    fn single_metric_wirelength_gain() {
        let m = rwl_model(230044.0);
        let s = composite_score(&report(217415.0), &m).unwrap();
        assert!((s - 0.0549).abs() < 5e-5, "{s}");
        assert!((s - 12629.0 / 230044.0).abs() < 1e-15);
    }

    #[test]
    fn opposite_moves_cancel() {
        let mut base = report(100.0);
        base.via_count = Some(1000);
        let m =
            MetricModel::from_baseline(&[(Metric::RoutedWirelengthUm, 0.5), (Metric::ViaCount, 0.5)], &base).unwrap();
        let mut r = report(110.0);
        r.via_count = Some(900);
        assert!(composite_score(&r, &m).unwrap().abs() < 1e-12);
    }

    #[test]
    fn missing_metric_errors() {
        let m = rwl_model(1.0);
        let r = QoRReport::new("aes", "Nangate45", Stage::Full);
        assert!(matches!(composite_score(&r, &m), Err(ExecError::MissingMetric(n)) if n == "routed_wirelength_um"));
        assert!(MetricModel::from_baseline(&MetricModel::default_weights(), &report(1.0)).is_err());
        let m = MetricModel::from_partial_baseline(&MetricModel::default_weights(), &report(1.0)).unwrap();
        assert!(m.terms.len() < 4 && m.terms.iter().all(|t| report(1.0).get(t.metric).is_some()));
        assert!(MetricModel::from_partial_baseline(&[(Metric::PowerW, 1.0)], &report(1.0)).is_err());
    }

    #[test]
    fn slack_improves_upward_with_negative_baseline() {
        let mut base = report(1.0);
        base.wns_ns = Some(-0.2);
        let m = MetricModel::from_baseline(&[(Metric::WnsNs, 1.0)], &base).unwrap();
        let mut better = base.clone();
        better.wns_ns = Some(-0.1);
        assert!((composite_score(&better, &m).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn new_drc_rejected() {
        let base = report(100.0);
        let mut cand = report(90.0);
        cand.drc_count = Some(1);
        let d = gate(&cand, &base, true, true, &rwl_model(100.0), &GateConfig::default());
        assert!(!d.accepted);
        assert_eq!(d.reasons, vec![GateReason::NewDrcs]);
    }

    #[test]
    fn wns_degradation_rejected() {
        let base = report(100.0);
        let mut cand = report(90.0);
        cand.wns_ns = Some(-0.30);
        let cfg = GateConfig { wns_degradation_threshold_ns: 0.05, ..GateConfig::default() };
        let d = gate(&cand, &base, true, true, &rwl_model(100.0), &cfg);
        assert_eq!(d.reasons, vec![GateReason::WnsDegraded]);
    }

    #[test]
    fn clean_improvement_accepted() {
        let d = gate(&report(217415.0), &report(230044.0), true, true, &rwl_model(230044.0), &GateConfig::default());
        assert!(d.accepted);
        assert!(d.reasons.is_empty());
        assert!((d.composite_delta - 0.0549).abs() < 5e-5);
    }

    #[test]
    fn reasons_accumulate() {
        let mut cand = report(101.0);
        cand.drc_count = Some(3);
        let d = gate(&cand, &report(100.0), false, false, &rwl_model(100.0), &GateConfig::default());
        assert_eq!(
            d.reasons,
            vec![GateReason::BuildFailed, GateReason::TestsFailed, GateReason::NewDrcs, GateReason::NoImprovement]
        );
    }

    #[test]
    fn enforce_applies_margin_and_subset() {
        let mut cand = report(99.95);
        cand.drc_count = Some(1);
        let d = gate(&cand, &report(100.0), true, true, &rwl_model(100.0), &GateConfig::default());
        let relaxed = d.enforce(&[GateReason::BuildFailed], 0.0);
        assert!(relaxed.accepted);
        let strict = d.enforce(&GateReason::HARD, 0.001);
        assert_eq!(strict.reasons, vec![GateReason::NewDrcs, GateReason::NoImprovement]);
    }
}
