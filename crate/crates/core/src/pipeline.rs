//! The per-file pipeline: parse, enrich, analyze, repair, print, reparse,
//! re-analyze and diff, with wall-clock timings per stage.

use std::time::Instant;

use serde::Serialize;

use crate::ast::Ast;
use crate::enrich::{enrich, EnrichmentStats, SchemaSet};
use crate::parser::{parse_dockerfile, ParseDiagnostic};
use crate::printer::{diff_named, print, print_descending, PrintError, PrintMode};
use crate::repair::{repair_all, RepairOutcome};
use crate::rules::{analyze, RuleConfig, RuleSet, SmellReport};

/// Milliseconds spent per stage. Stages that did not run stay at zero.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct StageTimings {
    pub parse_ms: f64,
    pub round_trip_ms: f64,
    pub enrich_ms: f64,
    pub analyze_ms: f64,
    pub repair_ms: f64,
    pub print_ms: f64,
    pub reparse_ms: f64,
    pub reanalyze_ms: f64,
    pub diff_ms: f64,
    pub total_ms: f64,
}

fn timed<T>(slot: &mut f64, f: impl FnOnce() -> T) -> T {
    let start = Instant::now();
    let out = f();
    *slot += start.elapsed().as_secs_f64() * 1000.0;
    out
}

#[derive(Debug, Clone)]
pub struct Analysis {
    pub ast: Ast,
    pub diagnostics: Vec<ParseDiagnostic>,
    pub smells: Vec<SmellReport>,
    pub enrichment: EnrichmentStats,
    pub timings: StageTimings,
}

impl Analysis {
    pub fn has_parse_errors(&self) -> bool {
        self.diagnostics
            .iter()
            .any(|d| d.severity == crate::parser::Severity::Error)
    }
}

#[derive(Debug, Clone)]
pub struct Repair {
    pub diagnostics: Vec<ParseDiagnostic>,
    /// Smells of the original text.
    pub smells: Vec<SmellReport>,
    pub outcome: RepairOutcome,
    /// Smells of the repaired text, found by parsing it again.
    pub residual: Vec<SmellReport>,
    pub original: String,
    pub repaired: String,
    pub diff: String,
    /// Whether the unmodified parse reprinted byte for byte. Repair is not
    /// attempted when it did not.
    pub round_trip: bool,
    pub enrichment: EnrichmentStats,
    pub timings: StageTimings,
}

impl Repair {
    pub fn has_parse_errors(&self) -> bool {
        self.diagnostics
            .iter()
            .any(|d| d.severity == crate::parser::Severity::Error)
    }

    pub fn changed(&self) -> bool {
        self.original != self.repaired
    }
}

/// Rules, schemas and rule configuration shared by every file of a run.
#[derive(Debug, Clone)]
pub struct Engine {
    pub rules: RuleSet,
    pub schemas: SchemaSet,
    pub config: RuleConfig,
}

impl Default for Engine {
    /// All rules, built-in schemas, default configuration.
    fn default() -> Self {
        Engine::new(RuleSet::all(), SchemaSet::builtin(), RuleConfig::default())
    }
}

impl Engine {
    pub fn new(rules: RuleSet, schemas: SchemaSet, config: RuleConfig) -> Self {
        Engine {
            rules,
            schemas,
            config,
        }
    }

    pub fn analyze(&self, source: &str) -> Analysis {
        let mut t = StageTimings::default();
        let start = Instant::now();
        let parsed = timed(&mut t.parse_ms, || parse_dockerfile(source));
        let mut ast = parsed.ast;
        let enrichment = timed(&mut t.enrich_ms, || enrich(&mut ast, &self.schemas));
        let smells = timed(&mut t.analyze_ms, || analyze(&ast, &self.rules, &self.config));
        t.total_ms = start.elapsed().as_secs_f64() * 1000.0;
        Analysis {
            ast,
            diagnostics: parsed.diagnostics,
            smells,
            enrichment,
            timings: t,
        }
    }

    /// Full pipeline. Files with parse errors or without a byte-exact
    /// round trip come back unrepaired. `name` labels the diff header.
    pub fn repair(&self, source: &str, name: &str, context_lines: usize) -> Result<Repair, PrintError> {
        let mut t = StageTimings::default();
        let start = Instant::now();
        let parsed = timed(&mut t.parse_ms, || parse_dockerfile(source));
        let has_errors = parsed.has_errors();
        let mut ast = parsed.ast;
        let round_trip = timed(&mut t.round_trip_ms, || {
            print_descending(&ast).is_ok_and(|out| out == source)
        });
        let enrichment = timed(&mut t.enrich_ms, || enrich(&mut ast, &self.schemas));
        let smells = timed(&mut t.analyze_ms, || analyze(&ast, &self.rules, &self.config));

        let mut outcome = RepairOutcome::default();
        let mut repaired = source.to_string();
        let mut residual = smells.clone();
        if round_trip && !has_errors && !smells.is_empty() {
            outcome = timed(&mut t.repair_ms, || {
                repair_all(&mut ast, &self.rules, &self.schemas, &self.config)
            });
            repaired = timed(&mut t.print_ms, || print(&ast, PrintMode::PRESERVE))?;
            let mut again = timed(&mut t.reparse_ms, || parse_dockerfile(&repaired)).ast;
            residual = timed(&mut t.reanalyze_ms, || {
                enrich(&mut again, &self.schemas);
                analyze(&again, &self.rules, &self.config)
            });
        }
        let diff = timed(&mut t.diff_ms, || {
            diff_named(
                source,
                &repaired,
                context_lines,
                &format!("a/{name}"),
                &format!("b/{name}"),
            )
        });
        t.total_ms = start.elapsed().as_secs_f64() * 1000.0;
        Ok(Repair {
            diagnostics: parsed.diagnostics,
            smells,
            outcome,
            residual,
            original: source.to_string(),
            repaired,
            diff,
            round_trip,
            enrichment,
            timings: t,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn analyze_and_repair() {
        let engine = Engine::default();
        let a = engine.analyze("FROM node\nRUN npm cache clean\n");
        assert_eq!(a.smells.len(), 1);
        assert!(!a.has_parse_errors());
        let r = engine
            .repair("FROM node\nRUN npm cache clean\n", "Dockerfile", 3)
            .unwrap();
        assert!(r.round_trip && r.changed());
        assert!(r.residual.is_empty());
        assert_eq!(r.repaired, "FROM node\nRUN npm cache clean --force\n");
        assert!(r.diff.starts_with("--- a/Dockerfile\n+++ b/Dockerfile\n"));
        assert!(r.timings.total_ms >= r.timings.parse_ms);
    }

    #[test]
    fn clean_input_is_untouched() {
        let r = Engine::default()
            .repair("FROM scratch\nCOPY a /a\n", "Dockerfile", 3)
            .unwrap();
        assert!(!r.changed());
        assert_eq!(r.diff, "");
        assert_eq!(r.outcome, RepairOutcome::default());
    }
}
