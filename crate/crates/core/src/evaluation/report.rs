//! Session reports: JSON document, RMSE series CSV and per-mode aggregation.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{EvalError, RmseSample, SessionMetrics};

/// Which feedback the trainee saw.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum GuidanceMode {
    Skeleton,
    #[default]
    Markers,
}

impl GuidanceMode {
    pub fn name(self) -> &'static str {
        match self {
            GuidanceMode::Skeleton => "skeleton",
            GuidanceMode::Markers => "markers",
        }
    }
}

impl FromStr for GuidanceMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "skeleton" => Ok(GuidanceMode::Skeleton),
            "markers" => Ok(GuidanceMode::Markers),
            other => Err(format!("unknown guidance mode {other:?}; expected skeleton or markers")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SessionReport {
    pub mode: GuidanceMode,
    pub rmse0: f64,
    pub rmse_min: f64,
    pub t_min: f64,
    pub accuracy_r: f64,
    pub n_rmse: usize,
    pub samples: Vec<RmseSample>,
    #[serde(default)]
    pub skipped_frames: usize,
    #[serde(default)]
    pub degenerate: bool,
    /// The frame source failed before its natural end.
    #[serde(default)]
    pub partial: bool,
}

impl SessionReport {
    pub fn new(mode: GuidanceMode, metrics: &SessionMetrics, samples: &[RmseSample]) -> Self {
        Self {
            mode,
            rmse0: metrics.rmse_0,
            rmse_min: metrics.rmse_min,
            t_min: metrics.t_min,
            accuracy_r: metrics.accuracy_r,
            n_rmse: metrics.n_rmse,
            samples: samples.to_vec(),
            skipped_frames: 0,
            degenerate: metrics.degenerate,
            partial: false,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports always serialize");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, EvalError> {
        serde_json::from_str(text).map_err(|e| EvalError::Report(e.to_string()))
    }

    /// RMSE series with header `t,rmse`.
    pub fn to_csv(&self) -> String {
        series_csv(&self.samples)
    }
}

pub fn series_csv(samples: &[RmseSample]) -> String {
    let mut out = String::from("t,rmse\n");
    for s in samples {
        writeln!(out, "{},{}", s.t, s.value).expect("writing to a String cannot fail");
    }
    out
}

/// Builds the report for a finalized session.
pub fn export_report(metrics: &SessionMetrics, samples: &[RmseSample], mode: GuidanceMode) -> SessionReport {
    SessionReport::new(mode, metrics, samples)
}

/// Mean outcomes of all sessions run under one guidance mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ModeSummary {
    pub sessions: usize,
    pub mean_accuracy_r: f64,
    pub mean_t_min: f64,
}

pub fn aggregate_by_mode<'a>(reports: impl IntoIterator<Item = &'a SessionReport>) -> BTreeMap<GuidanceMode, ModeSummary> {
    let mut acc: BTreeMap<GuidanceMode, (usize, f64, f64)> = BTreeMap::new();
    for r in reports {
        let e = acc.entry(r.mode).or_default();
        e.0 += 1;
        e.1 += r.accuracy_r;
        e.2 += r.t_min;
    }
    acc.into_iter()
        .map(|(mode, (n, a, t))| {
            (mode, ModeSummary { sessions: n, mean_accuracy_r: a / n as f64, mean_t_min: t / n as f64 })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evaluation::SessionState;

    fn report(mode: GuidanceMode, values: &[f64]) -> SessionReport {
        let mut s = SessionState::new(920);
        for (i, v) in values.iter().enumerate() {
            s.update(RmseSample { t: i as f64 * 0.5, value: *v }).unwrap();
        }
        export_report(&s.finalize().unwrap(), s.samples(), mode)
    }

    #[test]
    fn json_schema_and_round_trip() {
        let r = report(GuidanceMode::Markers, &[0.2, 0.1, 0.15]);
        let json = r.to_json();
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        for key in ["mode", "rmse0", "rmseMin", "tMin", "accuracyR", "nRmse", "samples"] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
        assert_eq!(v["mode"], "markers");
        assert_eq!(v["samples"][1]["t"], 0.5);
        assert_eq!(v["samples"][1]["value"], 0.1);
        assert_eq!(SessionReport::from_json(&json).unwrap(), r);
    }

    #[test]
    fn csv_has_header_plus_one_row_per_sample() {
        let r = report(GuidanceMode::Skeleton, &[0.3, 0.2, 0.1, 0.1]);
        let csv = r.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), r.samples.len() + 1);
        assert_eq!(lines[0], "t,rmse");
        assert_eq!(lines[2], "0.5,0.2");
    }

    #[test]
    fn aggregation_groups_by_mode() {
        let reports = [
            report(GuidanceMode::Skeleton, &[2.0, 1.0]),
            report(GuidanceMode::Markers, &[2.0, 0.5]),
            report(GuidanceMode::Skeleton, &[1.0, 1.0]),
        ];
        let agg = aggregate_by_mode(&reports);
        assert_eq!(agg.len(), 2);
        let sk = agg[&GuidanceMode::Skeleton];
        assert_eq!((sk.sessions, sk.mean_accuracy_r, sk.mean_t_min), (2, 25.0, 0.25));
        let mk = agg[&GuidanceMode::Markers];
        assert_eq!((mk.sessions, mk.mean_accuracy_r, mk.mean_t_min), (1, 75.0, 0.5));
    }

    #[test]
    fn mode_parsing() {
        assert_eq!("skeleton".parse::<GuidanceMode>().unwrap(), GuidanceMode::Skeleton);
        assert!("both".parse::<GuidanceMode>().is_err());
    }
}
