//! Tuned baseline files: the cuts, the peak statistic, the quantile
//! references behind the baseline score and the digest of the geometry the
//! statistics were computed with. Flat key=value text.

use std::path::Path;

use icegraph_core::baseline::{BaselineCuts, BaselineModel, PeakStatistic, QuantileReference};

use super::keyvalue::{KeyValueWriter, KeyValues};
use super::read_text;
use crate::error::{CliError, CliResult};

pub const FORMAT: &str = "icegraph-cuts 1";

#[derive(Debug, Clone, PartialEq)]
pub struct CutsFile {
    pub model: BaselineModel,
    pub target_snr: f64,
    pub geometry_sha256: String,
}

pub fn statistic_name(s: PeakStatistic) -> &'static str {
    match s {
        PeakStatistic::Mean => "mean",
        PeakStatistic::Median => "median",
    }
}

pub fn parse_statistic(text: &str) -> Option<PeakStatistic> {
    match text {
        "mean" => Some(PeakStatistic::Mean),
        "median" => Some(PeakStatistic::Median),
        _ => None,
    }
}

impl CutsFile {
    pub fn render(&self) -> String {
        let c = &self.model.cuts;
        let mut w = KeyValueWriter::new();
        w.put("format", FORMAT)
            .put("chi2_min", c.chi2_min)
            .put("pm_min", c.pm_min);
        if let Some(v) = c.cos_zenith_min {
            w.put("cos_zenith_min", v);
        }
        if let Some(v) = c.total_charge_min {
            w.put("total_charge_min", v);
        }
        w.put("peak_statistic", statistic_name(self.model.statistic))
            .put("target_snr", self.target_snr)
            .put("geometry_sha256", &self.geometry_sha256)
            .list("chi2_reference", &self.model.chi2_reference.quantiles)
            .list("peak_reference", &self.model.peak_reference.quantiles);
        w.finish()
    }

    pub fn parse(path: &Path, text: &str) -> CliResult<Self> {
        let kv = KeyValues::parse(path, text)?;
        kv.reject_unknown(&[
            "format",
            "chi2_min",
            "pm_min",
            "cos_zenith_min",
            "total_charge_min",
            "peak_statistic",
            "target_snr",
            "geometry_sha256",
            "chi2_reference",
            "peak_reference",
        ])?;
        let format: String = kv.require("format")?;
        if format != FORMAT {
            return Err(CliError::parse(path, 1, format!("unsupported cuts format `{format}`")));
        }
        let statistic: String = kv.require("peak_statistic")?;
        let statistic = parse_statistic(&statistic)
            .ok_or_else(|| CliError::parse(path, 0, format!("unknown peak_statistic `{statistic}`")))?;
        let reference = |key: &str| -> CliResult<QuantileReference> {
            let quantiles: Vec<f64> = kv.get_list(key)?.unwrap_or_default();
            if quantiles.len() < 2 || quantiles.windows(2).any(|w| !(w[0] <= w[1])) {
                return Err(CliError::parse(path, 0, format!("{key} must be a sorted list of at least 2 values")));
            }
            Ok(QuantileReference { quantiles })
        };
        let cuts = BaselineCuts {
            chi2_min: kv.require("chi2_min")?,
            pm_min: kv.require("pm_min")?,
            cos_zenith_min: kv.get("cos_zenith_min")?,
            total_charge_min: kv.get("total_charge_min")?,
        };
        cuts.validate()?;
        Ok(CutsFile {
            model: BaselineModel {
                cuts,
                statistic,
                chi2_reference: reference("chi2_reference")?,
                peak_reference: reference("peak_reference")?,
            },
            target_snr: kv.require("target_snr")?,
            geometry_sha256: kv.require("geometry_sha256")?,
        })
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        CutsFile::parse(path, &read_text(path)?)
    }
}
