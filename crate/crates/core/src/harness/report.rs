//! Output files: `samples.csv` (one `Z` per line) and `report.json`.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{moments, CltReport, DecompositionTrace, KsSummary, Prediction};
use crate::error::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;
/// Tolerance for stored versus recomputed sample moments.
const MOMENT_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalSummary {
    pub mean: f64,
    pub variance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportDoc {
    pub schema: u32,
    pub family: String,
    pub functional: String,
    pub n: usize,
    pub m: usize,
    pub master_seed: u64,
    pub ell: f64,
    pub u_limit: f64,
    pub predicted: Prediction,
    pub empirical: EmpiricalSummary,
    pub degenerate: bool,
    pub ks: Option<KsSummary>,
    pub decomposition: Option<DecompositionTrace>,
}

impl ReportDoc {
    pub fn from_report(r: &CltReport) -> Self {
        ReportDoc {
            schema: SCHEMA_VERSION,
            family: r.family.clone(),
            functional: r.functional.clone(),
            n: r.n,
            m: r.m,
            master_seed: r.master_seed,
            ell: r.ell,
            u_limit: r.u_limit,
            predicted: r.predicted.clone(),
            empirical: EmpiricalSummary { mean: r.empirical_mean, variance: r.empirical_variance },
            degenerate: r.degenerate,
            ks: r.ks.clone(),
            decomposition: r.decomposition.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: ReportDoc = serde_json::from_str(text)?;
        if doc.schema != SCHEMA_VERSION {
            return Err(Error::InvalidArgument(format!("unsupported report schema {}", doc.schema)));
        }
        Ok(doc)
    }

    /// Check the stored moments against `samples`.
    pub fn check_samples(&self, samples: &[f64]) -> Result<()> {
        if samples.len() != self.m {
            return Err(Error::InvalidArgument(format!("expected {} samples, found {}", self.m, samples.len())));
        }
        let (mean, var) = moments(samples);
        let close = |a: f64, b: f64| (a - b).abs() <= MOMENT_TOL * (1.0 + a.abs().max(b.abs()));
        if !close(mean, self.empirical.mean) || !close(var, self.empirical.variance) {
            return Err(Error::InvalidArgument("stored moments do not match the samples".into()));
        }
        Ok(())
    }
}

/// Shortest round-trip decimal per line.
pub fn samples_csv(samples: &[f64]) -> String {
    let mut out = String::with_capacity(samples.len() * 24);
    for x in samples {
        writeln!(out, "{x}").unwrap();
    }
    out
}

pub fn parse_samples_csv(text: &str) -> Result<Vec<f64>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            l.trim().parse::<f64>().map_err(|_| Error::Parse { line: i + 1, message: format!("invalid sample `{l}`") })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::PredictionSource;

    fn doc() -> ReportDoc {
        ReportDoc {
            schema: 1,
            family: "iid".into(),
            functional: "linear:x1".into(),
            n: 100,
            m: 3,
            master_seed: 1,
            ell: 2.0,
            u_limit: 0.1,
            predicted: Prediction { mean: 0.0, variance: 0.21, iid_variance: 0.21, source: PredictionSource::IndependentTheorem },
            empirical: EmpiricalSummary { mean: 0.0, variance: 1.0 },
            degenerate: false,
            ks: Some(KsSummary { statistic: 0.1, pvalue: 0.3 }),
            decomposition: None,
        }
    }

    #[test]
    fn json_round_trip_is_byte_identical() {
        let text = doc().to_json();
        let again = ReportDoc::from_json(&text).unwrap().to_json();
        assert_eq!(text, again);
        assert!(text.contains("\"schema\": 1"));
    }

    #[test]
    fn samples_round_trip_exactly() {
        let xs = [0.1, -1.0 / 3.0, 1e-300, 12345.678];
        let back = parse_samples_csv(&samples_csv(&xs)).unwrap();
        assert_eq!(back, xs);
        assert!(matches!(parse_samples_csv("1\nx\n"), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn moment_check() {
        let d = doc();
        assert!(d.check_samples(&[-1.0, 0.0, 1.0]).is_ok());
        assert!(d.check_samples(&[-1.0, 0.0, 1.1]).is_err());
        let mut wrong_schema = serde_json::to_value(&d).unwrap();
        wrong_schema["schema"] = 2.into();
        assert!(ReportDoc::from_json(&wrong_schema.to_string()).is_err());
    }
}
