//! JSON and plain-text rendering of harness results.

use std::fmt::Write;
use std::path::Path;

use serde::Serialize;

use super::matrix::OutcomeMatrix;
use super::overhead::OverheadReport;
use super::seeding::SeedingReport;
use super::session::Session;
use super::{io_err, HarnessError};
use crate::runtime::log_to_json_lines;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Json,
    Text,
}

pub enum Report<'a> {
    Matrix(&'a OutcomeMatrix),
    Overhead(&'a OverheadReport),
    Seeding(&'a SeedingReport),
    Session(&'a Session),
}

fn json(v: &impl Serialize) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("reports serialize");
    s.push('\n');
    s
}

pub fn render(report: &Report, format: Format) -> String {
    match (report, format) {
        (Report::Matrix(m), Format::Json) => json(m),
        (Report::Matrix(m), Format::Text) => matrix_text(m),
        (Report::Overhead(o), Format::Json) => json(o),
        (Report::Overhead(o), Format::Text) => overhead_text(o),
        (Report::Seeding(s), Format::Json) => json(s),
        (Report::Seeding(s), Format::Text) => seeding_text(s),
        (Report::Session(s), Format::Json) => log_to_json_lines(&s.log),
        (Report::Session(s), Format::Text) => session_text(s),
    }
}

/// Renders and writes to `path`, or returns the text when `path` is `None`.
pub fn emit_report(report: &Report, format: Format, path: Option<&Path>) -> Result<String, HarnessError> {
    let text = render(report, format);
    if let Some(p) = path {
        std::fs::write(p, &text).map_err(io_err(p))?;
    }
    Ok(text)
}

pub fn matrix_text(m: &OutcomeMatrix) -> String {
    let width = m.cases.iter().map(|r| r.name.len()).chain(["Total".len(), "Case".len()]).max().unwrap_or(4);
    let mut out = String::new();
    write!(out, "{:<width$}", "Case").unwrap();
    for id in &m.strategies {
        write!(out, " {:>4}", id.as_str()).unwrap();
    }
    writeln!(out, " {:>5}", "#OK").unwrap();
    for r in &m.cases {
        write!(out, "{:<width$}", r.name).unwrap();
        for id in &m.strategies {
            write!(out, " {:>4}", r.cells.get(id).map(|o| o.as_str()).unwrap_or("-")).unwrap();
        }
        writeln!(out, " {:>5}", r.success_count).unwrap();
    }
    write!(out, "{:<width$}", "Total").unwrap();
    for id in &m.strategies {
        write!(out, " {:>4}", m.totals.get(id).copied().unwrap_or(0)).unwrap();
    }
    writeln!(out, " {:>5}", m.union).unwrap();
    writeln!(out, "Union: {} of {} cases repaired by at least one strategy", m.union, m.cases.len()).unwrap();
    out
}

fn ms(v: f64) -> String {
    if v >= 100.0 {
        format!("{v:.0}")
    } else {
        format!("{v:.1}")
    }
}

pub fn overhead_text(o: &OverheadReport) -> String {
    let width = o.cases.iter().map(|c| c.name.len()).chain([7]).max().unwrap();
    let mut out = String::new();
    writeln!(out, "{:<width$} {:>14} {:>14} {:>9}", "Case", "original (ms)", "after (ms)", "Overhead").unwrap();
    for c in &o.cases {
        let pct = format!("{}%", c.overhead_pct);
        writeln!(out, "{:<width$} {:>14} {:>14} {:>9}", c.name, ms(c.original_ms), ms(c.transformed_ms), pct).unwrap();
    }
    if let Some(reps) = o.cases.first().map(|c| c.reps) {
        writeln!(out, "means over {reps} repetitions").unwrap();
    }
    out
}

pub fn seeding_text(s: &SeedingReport) -> String {
    let mut out = String::new();
    writeln!(out, "Project: {}", s.project).unwrap();
    writeln!(out, "Removed null checks: {}", s.removed_checks).unwrap();
    writeln!(out, "Tests: {}", s.tests.len()).unwrap();
    writeln!(out, "Failing (NPE): {}", s.failing_npe).unwrap();
    writeln!(out, "Failing (assertion): {}", s.failing_assertion).unwrap();
    writeln!(out, "Failing (other): {}", s.failing_other).unwrap();
    writeln!(out).unwrap();
    out.push_str(&matrix_text(&s.matrix));
    writeln!(out, "Union repair rate: {:.1}%", s.union_rate_pct).unwrap();
    out
}

pub fn session_text(s: &Session) -> String {
    let mut out = String::new();
    writeln!(out, "Entry: {}  seed: {}", s.entry, s.seed).unwrap();
    for r in &s.runs {
        let applied: Vec<String> = r.applied.iter().map(|(k, st)| format!("{st} at {k}")).collect();
        writeln!(out, "run {:>3}: {:<4} {} [{}]", r.run, r.outcome.as_str(), r.exit, applied.join(", ")).unwrap();
    }
    writeln!(out, "End: {:?} after {} runs", s.end, s.runs.len()).unwrap();
    for (k, d) in &s.deployments {
        let param = d.parameter.as_deref().map(|p| format!("({p})")).unwrap_or_default();
        writeln!(out, "Deployed {}{} at {k}", d.strategy.as_str(), param).unwrap();
    }
    for p in &s.patches {
        writeln!(out, "Suggested patch for {} ({}):", p.crash_point, p.strategy).unwrap();
        for line in p.snippet.lines() {
            writeln!(out, "    {line}").unwrap();
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::super::overhead::OverheadCase;
    use super::*;
    use crate::runtime::{Outcome, StrategyId};

    #[test]
    fn overhead_row_format() {
        let o = OverheadReport {
            cases: vec![OverheadCase {
                name: "spojo".into(),
                original_ms: 336.0,
                transformed_ms: 381.0,
                overhead_pct: 13,
                reps: 10,
            }],
        };
        let text = overhead_text(&o);
        let row: Vec<&str> = text.lines().nth(1).unwrap().split_whitespace().collect();
        assert_eq!(row, ["spojo", "336", "381", "13%"]);
    }

    #[test]
    fn total_row_sums_columns() {
        use super::super::matrix::MatrixRow;
        let mk = |n: &str, a: Outcome, b: Outcome| MatrixRow {
            name: n.into(),
            cells: [(StrategyId::S3, a), (StrategyId::S4d, b)].into_iter().collect(),
            success_count: [a, b].iter().filter(|o| **o == Outcome::OK).count(),
        };
        let m = OutcomeMatrix::build(
            "t",
            &[StrategyId::S3, StrategyId::S4d],
            vec![mk("x", Outcome::OK, Outcome::OK), mk("y", Outcome::US, Outcome::OK)],
        );
        let text = matrix_text(&m);
        let total: Vec<&str> = text.lines().find(|l| l.starts_with("Total")).unwrap().split_whitespace().collect();
        assert_eq!(total, ["Total", "1", "2", "2"]);
    }
}
