//! Report assembly and emission: CSV (RFC-4180 with a fixed header), JSON,
//! and a plot-friendly column format. Every output embeds the hash of the
//! resolved configuration that produced it.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::OutputFormat;
use crate::error::Result;

pub const CSV_HEADER: &str = "model,theorem,order,t,bound,applicable,estimate,se,verdict,seconds";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub model: String,
    pub theorem: String,
    pub order: Option<u32>,
    pub t: Option<f64>,
    pub bound: Option<f64>,
    pub applicable: bool,
    pub estimate: Option<f64>,
    pub se: Option<f64>,
    pub verdict: String,
    pub seconds: f64,
}

impl ReportRow {
    pub fn new(model: impl Into<String>, theorem: impl Into<String>) -> Self {
        ReportRow {
            model: model.into(),
            theorem: theorem.into(),
            order: None,
            t: None,
            bound: None,
            applicable: true,
            estimate: None,
            se: None,
            verdict: String::new(),
            seconds: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub config_hash: String,
    pub rows: Vec<ReportRow>,
}

impl BoundReport {
    pub fn new(canonical_config: &str) -> Self {
        let digest = Sha256::digest(canonical_config.as_bytes());
        let config_hash: String = digest.iter().map(|b| format!("{b:02x}")).collect();
        BoundReport {
            config_hash,
            rows: Vec::new(),
        }
    }

    pub fn any_violated(&self) -> bool {
        self.rows.iter().any(|r| r.verdict == "violated")
    }
}

/// Fixed 9-significant-digit formatting: deterministic bytes over shortest
/// round-trip.
fn fmt_f64(v: f64) -> String {
    format!("{v:.8e}")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

fn fmt_opt_u32(v: Option<u32>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Serialises a report. All formats are deterministic byte-for-byte given
/// the same report.
pub fn emit_report(report: &BoundReport, format: OutputFormat) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    match format {
        OutputFormat::Csv => {
            // fields are comma- and quote-free by construction, so plain
            // joining is RFC-4180 compliant
            out.extend_from_slice(format!("# config_hash={}\n", report.config_hash).as_bytes());
            out.extend_from_slice(CSV_HEADER.as_bytes());
            out.push(b'\n');
            for r in &report.rows {
                debug_assert!(!r.model.contains([',', '"']) && !r.theorem.contains([',', '"']));
                let line = format!(
                    "{},{},{},{},{},{},{},{},{},{}\n",
                    r.model,
                    r.theorem,
                    fmt_opt_u32(r.order),
                    fmt_opt(r.t),
                    fmt_opt(r.bound),
                    r.applicable,
                    fmt_opt(r.estimate),
                    fmt_opt(r.se),
                    r.verdict,
                    fmt_f64(r.seconds),
                );
                out.extend_from_slice(line.as_bytes());
            }
        }
        OutputFormat::Json => {
            out = serde_json::to_vec_pretty(report)?;
            out.push(b'\n');
        }
        OutputFormat::Plotdata => {
            out.extend_from_slice(format!("# config_hash={}\n", report.config_hash).as_bytes());
            out.extend_from_slice(b"x,bound,estimate,lo,hi\n");
            for r in &report.rows {
                let x = r
                    .t
                    .or(r.order.map(f64::from))
                    .unwrap_or(f64::NAN);
                let (lo, hi) = match (r.estimate, r.se) {
                    (Some(e), Some(se)) => (Some(e - 3.0 * se), Some(e + 3.0 * se)),
                    (Some(e), None) => (Some(e), Some(e)),
                    _ => (None, None),
                };
                let line = format!(
                    "{},{},{},{},{}\n",
                    fmt_f64(x),
                    fmt_opt(r.bound),
                    fmt_opt(r.estimate),
                    fmt_opt(lo),
                    fmt_opt(hi),
                );
                out.extend_from_slice(line.as_bytes());
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_report() -> BoundReport {
        let mut report = BoundReport::new("{}");
        let mut row = ReportRow::new("independent_sum", "thm1");
        row.order = Some(4);
        row.bound = Some(37.0 / 9.0);
        row.estimate = Some(2.14);
        row.se = Some(0.01);
        row.verdict = "holds".into();
        report.rows.push(row);
        report
    }

    #[test]
    fn empty_report_is_header_only() {
        let report = BoundReport::new("{}");
        let bytes = emit_report(&report, OutputFormat::Csv).unwrap();
        let text = String::from_utf8(bytes).unwrap();
        let mut lines = text.lines();
        assert!(lines.next().unwrap().starts_with("# config_hash="));
        assert_eq!(lines.next().unwrap(), CSV_HEADER);
        assert_eq!(lines.next(), None);
    }

    #[test]
    fn csv_formatting_is_fixed_width() {
        let bytes = emit_report(&sample_report(), OutputFormat::Csv).unwrap();
        let text = String::from_utf8(bytes).unwrap();
        assert!(text.contains("4.11111111e0"), "fixed 9-digit formatting: {text}");
        assert!(text.contains(",holds,"));
    }

    #[test]
    fn json_round_trip_is_byte_identical() {
        let report = sample_report();
        let bytes = emit_report(&report, OutputFormat::Json).unwrap();
        let parsed: BoundReport = serde_json::from_slice(&bytes).unwrap();
        let again = emit_report(&parsed, OutputFormat::Json).unwrap();
        assert_eq!(bytes, again);
    }

    #[test]
    fn plotdata_columns() {
        let bytes = emit_report(&sample_report(), OutputFormat::Plotdata).unwrap();
        let text = String::from_utf8(bytes).unwrap();
        let data_line = text.lines().nth(2).unwrap();
        let fields: Vec<&str> = data_line.split(',').collect();
        assert_eq!(fields.len(), 5);
        assert_eq!(fields[0], "4.00000000e0");
    }
}
