//! Byte-stable JSON and CSV output.

use std::fmt::Write as _;

use serde::Serialize;
use serde_json::Value;

use crate::error::{Error, Result};
use crate::field::PlanarField;
use crate::geometry::Point2;
use crate::planner::{compare_strategies, PlanOptions, StrategyComparison};
use crate::verify::TheoremReport;

/// Significant digits kept in every emitted number.
pub const SIG_DIGITS: usize = 12;

/// `x` rounded to [`SIG_DIGITS`] significant digits.
pub fn round_sig(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{:.*e}", SIG_DIGITS - 1, x).parse().unwrap_or(x)
}

/// CSV/text form of a number: shortest representation of the rounded value.
pub fn fmt_num(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        let r = round_sig(x);
        if r == 0.0 {
            "0".to_string()
        } else {
            format!("{r}")
        }
    }
}

fn canonicalize(v: &mut Value) {
    match v {
        Value::Number(n) => {
            if let Some(x) = n.as_f64().filter(|_| !n.is_i64() && !n.is_u64()) {
                *v = serde_json::Number::from_f64(round_sig(x)).map_or(Value::Null, Value::Number);
            }
        }
        Value::Array(items) => items.iter_mut().for_each(canonicalize),
        Value::Object(map) => map.values_mut().for_each(canonicalize),
        _ => {}
    }
}

/// Serializes `value` with sorted keys, rounded numbers and `null` for
/// non-finite values. Ends with a newline.
pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut v = serde_json::to_value(value).map_err(|e| Error::invalid(format!("serialization failed: {e}")))?;
    canonicalize(&mut v);
    let mut s = serde_json::to_string_pretty(&v).map_err(|e| Error::invalid(format!("serialization failed: {e}")))?;
    s.push('\n');
    Ok(s)
}

/// `k=v` pairs joined by `;`, in key order.
fn fmt_map<'a>(entries: impl Iterator<Item = (&'a String, &'a f64)>) -> String {
    entries.map(|(k, v)| format!("{k}={}", fmt_num(*v))).collect::<Vec<_>>().join(";")
}

pub const REPORT_CSV_HEADER: &str = "theorem,field,params,primary,value,bound,margin,tolerance,verdict,measured";

impl TheoremReport {
    pub fn csv_row(&self) -> String {
        let verdict = match self.verdict {
            crate::verify::Verdict::Pass => "pass",
            crate::verify::Verdict::Fail => "fail",
            crate::verify::Verdict::Inconclusive => "inconclusive",
        };
        format!(
            "{},{},{},{},{},{},{},{},{},{}",
            self.theorem.as_str(),
            self.field,
            fmt_map(self.params.iter()),
            self.primary,
            fmt_num(self.value()),
            fmt_num(self.bound),
            fmt_num(self.margin),
            fmt_num(self.tolerance),
            verdict,
            fmt_map(self.measured.iter()),
        )
    }
}

/// Header plus one row per report.
pub fn reports_csv(reports: &[TheoremReport]) -> String {
    let mut out = String::from(REPORT_CSV_HEADER);
    out.push('\n');
    for r in reports {
        out.push_str(&r.csv_row());
        out.push('\n');
    }
    out
}

/// One line of a parameter sweep.
#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub n: f64,
    pub comparison: StrategyComparison,
}

pub const SWEEP_CSV_HEADER: &str = "N,c2,ell_direct,ell_perp,plan_length,thm1_bound";

impl SweepRow {
    pub fn csv_row(&self) -> String {
        let c = &self.comparison;
        format!(
            "{},{},{},{},{},{}",
            fmt_num(self.n),
            fmt_num(c.c2),
            fmt_num(c.direct.length),
            fmt_num(c.perpendicular.length),
            fmt_num(c.plan_length),
            fmt_num(c.thm1_bound)
        )
    }
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(SWEEP_CSV_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(out, "{}", r.csv_row());
    }
    out
}

/// Compares escape strategies for the field built from each `N`, in parallel.
/// Rows come back in input order.
pub fn sweep<F>(ns: &[f64], build: F, start: Point2, opts: &PlanOptions) -> Result<Vec<SweepRow>>
where
    F: Fn(f64) -> Result<PlanarField> + Sync,
{
    if ns.is_empty() {
        return Err(Error::invalid("sweep needs at least one N"));
    }
    let results: Vec<Result<SweepRow>> = std::thread::scope(|scope| {
        let handles: Vec<_> = ns
            .iter()
            .map(|&n| {
                let build = &build;
                scope.spawn(move || {
                    let f = build(n)?;
                    Ok(SweepRow { n, comparison: compare_strategies(&f, start, opts)? })
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap_or_else(|_| Err(Error::invalid("sweep worker panicked")))).collect()
    });
    results.into_iter().collect()
}
