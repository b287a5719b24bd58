//! Versioned JSON and CSV renderings of command results.

use dpv_core::budget::LedgerEntry;
use dpv_core::mechanisms::Database;
use dpv_core::verifier::{DpReport, SuiteSummary};
use serde::Serialize;
use serde_json::Value;

pub const SCHEMA: u32 = 1;

#[derive(Debug, Serialize)]
pub struct Verdict<'a> {
    pub pair: (&'a Database, &'a Database),
    pub divergence: f64,
    pub divergence_xy: f64,
    pub divergence_yx: f64,
    pub tail: f64,
    pub pass: bool,
}

#[derive(Debug, Serialize)]
pub struct VerifyReport<'a> {
    pub schema: u32,
    pub command: &'static str,
    pub params: Value,
    pub verdicts: Vec<Verdict<'a>>,
    /// The most expensive ledger seen on any enumerated run.
    pub ledger: &'a [LedgerEntry],
    pub max_spent: dpv_core::budget::Credits,
    pub ledger_exceeded: bool,
    pub passed: bool,
}

impl<'a> VerifyReport<'a> {
    pub fn new(params: Value, report: &'a DpReport) -> Self {
        Self {
            schema: SCHEMA,
            command: "verify",
            params,
            verdicts: report
                .pairs
                .iter()
                .map(|p| Verdict {
                    pair: (&p.x, &p.y),
                    divergence: p.divergence,
                    divergence_xy: p.divergence_xy,
                    divergence_yx: p.divergence_yx,
                    tail: p.tail,
                    pass: p.pass,
                })
                .collect(),
            ledger: &report.worst_ledger,
            max_spent: report.max_spent,
            ledger_exceeded: report.ledger_exceeded,
            passed: report.passed(),
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,y,divergence,tail,pass\n");
        for v in &self.verdicts {
            out.push_str(&format!("\"{}\",\"{}\",{},{},{}\n", v.pair.0, v.pair.1, v.divergence, v.tail, v.pass));
        }
        out
    }
}

#[derive(Debug, Serialize)]
pub struct SuiteReport<'a> {
    pub schema: u32,
    pub command: &'static str,
    pub params: Value,
    pub verdicts: Vec<SuiteVerdict<'a>>,
    pub ledger: [LedgerEntry; 0],
    pub passed: bool,
}

#[derive(Debug, Serialize)]
pub struct SuiteVerdict<'a> {
    pub suite: &'static str,
    pub pass: bool,
    #[serde(flatten)]
    pub summary: &'a SuiteSummary,
}

#[derive(Debug, Serialize)]
pub struct RunReport<'a> {
    pub schema: u32,
    pub command: &'static str,
    pub mechanism: &'static str,
    pub params: Value,
    pub seed: u64,
    pub result: Option<Value>,
    pub error: Option<String>,
    pub ledger: &'a [LedgerEntry],
    pub budget: dpv_core::budget::Credits,
    pub spent: dpv_core::budget::Credits,
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("reports serialize");
    s.push('\n');
    s
}
