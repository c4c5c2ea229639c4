//! The machine-readable report (schema `report-v1.schema.json`).

use dockmend::ast::SourceSpan;
use dockmend::enrich::EnrichmentStats;
use dockmend::parser::{ParseDiagnostic, Severity};
use dockmend::pipeline::StageTimings;
use dockmend::repair::{ActionKind, RepairOutcome, SkipReason};
use dockmend::rules::SmellReport;
use serde::Serialize;

pub const SCHEMA_VERSION: &str = "1";

#[derive(Debug, Serialize)]
pub struct Report {
    pub schema_version: &'static str,
    pub tool: &'static str,
    pub version: &'static str,
    pub mode: &'static str,
    pub files: Vec<FileReport>,
    pub summary: Summary,
    pub exit_code: u8,
}

#[derive(Debug, Default, Serialize)]
pub struct Summary {
    pub files: usize,
    pub smells: usize,
    pub applied: usize,
    pub skipped: usize,
    pub residual: usize,
    pub parse_errors: usize,
    pub errors: usize,
}

#[derive(Debug, Default, Serialize)]
pub struct FileReport {
    pub path: String,
    pub parse_diagnostics: Vec<Diagnostic>,
    pub smells: Vec<Smell>,
    /// Repair mode only.
    pub repairs: Option<Repairs>,
    /// Smells left after repair (repair mode only).
    pub residual: Option<Vec<Smell>>,
    pub enrichment: Option<EnrichmentStats>,
    pub timing_ms: Option<StageTimings>,
    pub diff: Option<String>,
    /// File written by `--in-place` or `--patch-dir`.
    pub written: Option<String>,
    pub error: Option<String>,
}

#[derive(Debug, Serialize)]
pub struct Diagnostic {
    pub severity: Severity,
    pub message: String,
    pub line: usize,
    pub column: usize,
}

#[derive(Debug, Serialize)]
pub struct Smell {
    pub rule_id: &'static str,
    pub line: usize,
    pub column: usize,
    pub end_line: usize,
    pub end_column: usize,
    pub message: String,
}

#[derive(Debug, Serialize)]
pub struct Repairs {
    pub applied: Vec<Applied>,
    pub skipped: Vec<Skipped>,
    pub passes: usize,
}

#[derive(Debug, Serialize)]
pub struct Applied {
    pub rule_id: &'static str,
    pub action: ActionKind,
    pub line: usize,
    pub column: usize,
}

#[derive(Debug, Serialize)]
pub struct Skipped {
    pub rule_id: &'static str,
    pub reason: SkipReason,
    pub detail: String,
    pub line: usize,
    pub column: usize,
}

fn position(span: &SourceSpan) -> (usize, usize) {
    (span.start_line, span.start_col)
}

impl From<&ParseDiagnostic> for Diagnostic {
    fn from(d: &ParseDiagnostic) -> Self {
        let (line, column) = position(&d.span);
        Diagnostic {
            severity: d.severity,
            message: d.message.clone(),
            line,
            column,
        }
    }
}

impl From<&SmellReport> for Smell {
    fn from(r: &SmellReport) -> Self {
        Smell {
            rule_id: r.rule_id,
            line: r.span.start_line,
            column: r.span.start_col,
            end_line: r.span.end_line,
            end_column: r.span.end_col,
            message: r.message.clone(),
        }
    }
}

impl From<&RepairOutcome> for Repairs {
    fn from(o: &RepairOutcome) -> Self {
        Repairs {
            applied: o
                .applied
                .iter()
                .map(|a| {
                    let (line, column) = position(&a.span);
                    Applied {
                        rule_id: a.rule_id,
                        action: a.action,
                        line,
                        column,
                    }
                })
                .collect(),
            skipped: o
                .skipped
                .iter()
                .map(|s| {
                    let (line, column) = position(&s.span);
                    Skipped {
                        rule_id: s.rule_id,
                        reason: s.reason,
                        detail: s.detail.clone(),
                        line,
                        column,
                    }
                })
                .collect(),
            passes: o.passes,
        }
    }
}

pub fn smells(reports: &[SmellReport]) -> Vec<Smell> {
    reports.iter().map(Smell::from).collect()
}

pub fn diagnostics(diags: &[ParseDiagnostic]) -> Vec<Diagnostic> {
    diags.iter().map(Diagnostic::from).collect()
}

impl FileReport {
    pub fn failed(path: String, error: String) -> Self {
        FileReport {
            path,
            error: Some(error),
            ..Default::default()
        }
    }

    pub fn has_parse_errors(&self) -> bool {
        self.parse_diagnostics
            .iter()
            .any(|d| d.severity == Severity::Error)
    }
}

impl Summary {
    pub fn of(files: &[FileReport]) -> Summary {
        let mut s = Summary {
            files: files.len(),
            ..Default::default()
        };
        for f in files {
            s.smells += f.smells.len();
            if let Some(r) = &f.repairs {
                s.applied += r.applied.len();
                s.skipped += r.skipped.len();
            }
            s.residual += f.residual.as_ref().map_or(0, Vec::len);
            s.parse_errors += usize::from(f.has_parse_errors());
            s.errors += usize::from(f.error.is_some());
        }
        s
    }
}
