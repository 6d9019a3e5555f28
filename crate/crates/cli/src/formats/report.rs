//! Evaluation and training reports.

use std::fmt::Write as _;
use std::path::Path;

use icegraph_core::metrics::{EvalReport, OperatingPoint, RocPoint};
use icegraph_core::TrainReport;

use super::keyvalue::{KeyValueWriter, KeyValues};
use crate::error::{CliError, CliResult};

pub fn render_roc(roc: &[RocPoint]) -> String {
    let mut out = String::from("threshold,fpr,tpr\n");
    for p in roc {
        let _ = writeln!(out, "{},{},{}", p.threshold, p.fpr, p.tpr);
    }
    out
}

/// `epoch,train_loss,val_metric,seconds`. Without `timing` the seconds
/// column is written as 0, which makes the file reproducible byte for byte.
pub fn render_train_report(report: &TrainReport, timing: bool) -> String {
    let mut out = String::from("epoch,train_loss,val_metric,seconds\n");
    for e in &report.epochs {
        let seconds = if timing { e.seconds } else { 0.0 };
        let _ = writeln!(out, "{},{},{},{:.3}", e.epoch, e.train_loss, e.val_metric, seconds);
    }
    out
}

/// Operating point and AUC of one method on one event file.
#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub method: String,
    pub events_sha256: String,
    pub n_events: usize,
    pub target_snr: f64,
    pub threshold: f64,
    pub signal_per_year: f64,
    pub background_per_year: f64,
    pub snr: f64,
    pub feasible: bool,
    pub auc: f64,
}

const SUMMARY_KEYS: [&str; 10] = [
    "method",
    "events_sha256",
    "n_events",
    "target_snr",
    "threshold",
    "signal_per_year",
    "background_per_year",
    "snr",
    "feasible",
    "auc",
];

impl Summary {
    pub fn from_report(method: &str, events_sha256: &str, n_events: usize, target_snr: f64, report: &EvalReport) -> Self {
        Summary::from_point(method, events_sha256, n_events, target_snr, &report.operating, report.auc)
    }

    pub fn from_point(
        method: &str,
        events_sha256: &str,
        n_events: usize,
        target_snr: f64,
        op: &OperatingPoint,
        auc: f64,
    ) -> Self {
        Summary {
            method: method.to_string(),
            events_sha256: events_sha256.to_string(),
            n_events,
            target_snr,
            threshold: op.threshold,
            signal_per_year: op.signal_per_year,
            background_per_year: op.background_per_year,
            snr: op.snr,
            feasible: op.feasible,
            auc,
        }
    }

    pub fn render(&self) -> String {
        KeyValueWriter::new()
            .put("method", &self.method)
            .put("events_sha256", &self.events_sha256)
            .put("n_events", self.n_events)
            .put("target_snr", self.target_snr)
            .put("threshold", self.threshold)
            .put("signal_per_year", self.signal_per_year)
            .put("background_per_year", self.background_per_year)
            .put("snr", self.snr)
            .put("feasible", self.feasible)
            .put("auc", self.auc)
            .finish()
    }

    pub fn parse(path: &Path, text: &str) -> CliResult<Self> {
        let kv = KeyValues::parse(path, text)?;
        kv.reject_unknown(&SUMMARY_KEYS)?;
        Ok(Summary {
            method: kv.require("method")?,
            events_sha256: kv.require("events_sha256")?,
            n_events: kv.require("n_events")?,
            target_snr: kv.require("target_snr")?,
            threshold: kv.require("threshold")?,
            signal_per_year: kv.require("signal_per_year")?,
            background_per_year: kv.require("background_per_year")?,
            snr: kv.require("snr")?,
            feasible: kv.require("feasible")?,
            auc: kv.require("auc")?,
        })
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        Summary::parse(path, &super::read_text(path)?)
    }
}

/// Baseline and GNN side by side.
#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub baseline: Summary,
    pub gnn: Summary,
}

fn snr_of(s: &Summary) -> f64 {
    if s.background_per_year > 0.0 {
        s.signal_per_year / s.background_per_year
    } else if s.signal_per_year > 0.0 {
        f64::INFINITY
    } else {
        0.0
    }
}

impl Comparison {
    pub fn new(baseline: Summary, gnn: Summary) -> CliResult<Self> {
        if baseline.events_sha256 != gnn.events_sha256 {
            return Err(CliError::Data(format!(
                "reports come from different event files ({} vs {})",
                baseline.events_sha256, gnn.events_sha256
            )));
        }
        Ok(Comparison { baseline, gnn })
    }

    /// GNN signal per year over baseline signal per year.
    pub fn signal_ratio(&self) -> f64 {
        self.gnn.signal_per_year / self.baseline.signal_per_year
    }

    fn rows(&self) -> [(&'static str, &Summary); 2] {
        [("Baseline", &self.baseline), ("GNN", &self.gnn)]
    }

    pub fn render_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{:<10} {:>14} {:>14} {:>14} {:>8}", "Method", "Signal", "Background", "Signal:Noise", "AUC");
        for (name, s) in self.rows() {
            let _ = writeln!(
                out,
                "{:<10} {:>14.6} {:>14.6} {:>14.4} {:>8.4}",
                name,
                s.signal_per_year,
                s.background_per_year,
                snr_of(s),
                s.auc
            );
        }
        let _ = writeln!(out, "events per year at signal:noise >= {}", self.gnn.target_snr);
        let _ = writeln!(out, "GNN/Baseline signal ratio: {:.4}", self.signal_ratio());
        out
    }

    pub fn render_csv(&self) -> String {
        let mut out = String::from("method,signal_per_year,background_per_year,signal_to_noise,auc\n");
        for (name, s) in self.rows() {
            let _ = writeln!(out, "{},{},{},{},{}", name, s.signal_per_year, s.background_per_year, snr_of(s), s.auc);
        }
        let _ = writeln!(out, "gnn_over_baseline,{},,,", self.signal_ratio());
        out
    }
}
