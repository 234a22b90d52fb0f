//! Run configuration shared by the command-line tools.

use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::metric::MetricModel;
use crate::systolic::AuditOptions;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    /// Inline JSON (starting with `{`) or a path to a JSON file.
    pub metric: Option<String>,
    pub nx: usize,
    pub ny: usize,
    pub tol_int: f64,
    pub tol_id: f64,
    pub tol_verdict: f64,
    pub out: Option<PathBuf>,
    pub format: OutputFormat,
    pub seed: u64,
    pub strict: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            metric: None,
            nx: 96,
            ny: 96,
            tol_int: 1e-12,
            tol_id: 1e-5,
            tol_verdict: 1e-4,
            out: None,
            format: OutputFormat::Json,
            seed: 0,
            strict: false,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.nx < 16 || self.ny < 16 {
            return Err(Error::Parse(format!(
                "grid sizes must be at least 16, got {}×{}",
                self.nx, self.ny
            )));
        }
        let tols = [self.tol_int, self.tol_id, self.tol_verdict];
        if tols.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
            return Err(Error::Parse(
                "tolerances must be positive and finite".into(),
            ));
        }
        if !(self.tol_int < self.tol_id && self.tol_id < self.tol_verdict) {
            return Err(Error::Parse(format!(
                "tolerances must satisfy tol-int < tol-id < tol-verdict, got {:e}, {:e}, {:e}",
                self.tol_int, self.tol_id, self.tol_verdict
            )));
        }
        if !(1e-12..=1e-6).contains(&self.tol_int) {
            return Err(Error::Parse(format!(
                "tol-int must lie in [1e-12, 1e-6], got {:e}",
                self.tol_int
            )));
        }
        Ok(())
    }

    /// Parses the metric argument; a missing argument means `round(1)`.
    pub fn load_metric(&self) -> Result<MetricModel> {
        match self.metric.as_deref() {
            None => MetricModel::round(1.0),
            Some(s) if s.trim_start().starts_with('{') => MetricModel::from_json(s),
            Some(path) => {
                let text = std::fs::read_to_string(Path::new(path))
                    .map_err(|e| Error::Parse(format!("cannot read metric file {path}: {e}")))?;
                MetricModel::from_json(&text)
            }
        }
    }

    pub fn audit_options(&self) -> AuditOptions {
        AuditOptions {
            nx: self.nx,
            ny: self.ny,
            tol_integration: self.tol_int,
            tol_identity: self.tol_id,
            tol_verdict: self.tol_verdict,
            strict: self.strict,
            ..AuditOptions::default()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        RunConfig::default().validate().unwrap();
    }

    #[test]
    fn small_grids_and_misordered_tolerances_are_rejected() {
        let c = RunConfig {
            nx: 8,
            ..RunConfig::default()
        };
        assert!(matches!(c.validate(), Err(Error::Parse(_))));
        let c = RunConfig {
            tol_id: 1e-3,
            ..RunConfig::default()
        };
        assert!(matches!(c.validate(), Err(Error::Parse(_))));
    }

    #[test]
    fn inline_metric() {
        let c = RunConfig {
            metric: Some(r#"{"kind":"spheroid","c":1.03}"#.into()),
            ..RunConfig::default()
        };
        let m = c.load_metric().unwrap();
        assert!((m.extremes().pinching() - 1.03f64.powi(-4)).abs() < 1e-9);
        let bad = RunConfig {
            metric: Some("{\"kind\":".into()),
            ..RunConfig::default()
        };
        assert!(matches!(bad.load_metric(), Err(Error::Parse(_))));
    }
}
