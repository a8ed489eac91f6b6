//! Serializable run reports emitted by the CLI.

use serde::{Deserialize, Serialize};

use crate::averaged::ModulusReport;
use crate::subspace::AngleReport;
use crate::tolerance::ToleranceConfig;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// One row of a sweep or compare table.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepRow {
    pub beta: f64,
    pub c_f: f64,
    pub kappa_closed_form: f64,
    pub oy_bound: f64,
    pub gap: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CompareRow {
    pub trial: usize,
    pub c_f: f64,
    pub beta: f64,
    pub kappa_exact: f64,
    pub kappa_closed_form: f64,
    pub abs_diff: f64,
    pub oy_bound: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerifyCheck {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

/// The payload of a run, one variant per subcommand family.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RunResult {
    Modulus(ModulusReport),
    Angles(AngleReport),
    ClosedForm { kappa: f64 },
    Compare { rows: Vec<CompareRow>, max_abs_diff: f64 },
    Sweep { rows: Vec<SweepRow>, monotone: bool },
    Verify { checks: Vec<VerifyCheck>, all_passed: bool },
    Instance(serde_json::Value),
}

/// Full record of one CLI invocation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunReport {
    /// The command line that produced this report.
    pub request: Vec<String>,
    pub result: RunResult,
    pub tool_version: String,
    pub tolerances: ToleranceConfig,
    pub wall_time_secs: f64,
}

/// Format with 12 significant digits (text and CSV output).
pub fn sig12(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let exp = x.abs().log10().floor() as i32;
    let decimals = (11 - exp).clamp(0, 17) as usize;
    let s = format!("{x:.decimals$}");
    // Trim trailing zeros but keep at least one digit after the point.
    if s.contains('.') {
        let t = s.trim_end_matches('0');
        let t = t.strip_suffix('.').unwrap_or(t);
        t.to_string()
    } else {
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sig12_examples() {
        assert_eq!(sig12(0.5), "0.5");
        assert_eq!(sig12((3.0 + 2.0_f64.sqrt()) / 7.0), "0.630601937482");
        assert_eq!(sig12(0.0), "0");
        assert_eq!(sig12(2.0 / 3.0), "0.666666666667");
    }

    #[test]
    fn run_report_round_trips() {
        let rep = RunReport {
            request: vec!["avgkit".into(), "kappa".into()],
            result: RunResult::ClosedForm { kappa: 0.5 },
            tool_version: TOOL_VERSION.into(),
            tolerances: ToleranceConfig::default(),
            wall_time_secs: 0.001,
        };
        let json = serde_json::to_string(&rep).unwrap();
        let back: RunReport = serde_json::from_str(&json).unwrap();
        let json2 = serde_json::to_string(&back).unwrap();
        assert_eq!(json, json2);
    }
}
