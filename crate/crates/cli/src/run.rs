//! The `analyze`, `repair` and `rules` commands.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use dockmend::parser::Severity;
use dockmend::pipeline::Engine;
use dockmend::repair::template;
use dockmend::rules::RuleSet;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{settings, Settings};
use crate::inputs::resolve;
use crate::report::{self, FileReport, Report, Repairs, Summary, SCHEMA_VERSION};
use crate::{CommonArgs, Format, RepairArgs};

enum WriteMode {
    InPlace,
    Diff,
    PatchDir(PathBuf),
}

fn read(path: &Path) -> Result<String, String> {
    let bytes = fs::read(path).map_err(|e| e.to_string())?;
    String::from_utf8(bytes).map_err(|e| {
        format!(
            "not valid UTF-8 (first bad byte at offset {})",
            e.utf8_error().valid_up_to()
        )
    })
}

fn analyze_file(engine: &Engine, path: &Path) -> FileReport {
    let shown = path.display().to_string();
    let source = match read(path) {
        Ok(s) => s,
        Err(e) => return FileReport::failed(shown, e),
    };
    let a = engine.analyze(&source);
    FileReport {
        path: shown,
        parse_diagnostics: report::diagnostics(&a.diagnostics),
        smells: report::smells(&a.smells),
        enrichment: Some(a.enrichment),
        timing_ms: Some(a.timings),
        ..Default::default()
    }
}

/// File name for the patch of `path`: its components joined with `__`.
fn patch_name(path: &Path) -> String {
    let parts: Vec<String> = path
        .components()
        .filter_map(|c| match c {
            std::path::Component::Normal(s) => Some(s.to_string_lossy().into_owned()),
            _ => None,
        })
        .collect();
    format!("{}.patch", parts.join("__"))
}

fn repair_file(engine: &Engine, path: &Path, write: &WriteMode, context: usize) -> FileReport {
    let shown = path.display().to_string();
    let source = match read(path) {
        Ok(s) => s,
        Err(e) => return FileReport::failed(shown, e),
    };
    let r = match engine.repair(&source, &shown, context) {
        Ok(r) => r,
        Err(e) => return FileReport::failed(shown, e.to_string()),
    };
    let mut report = FileReport {
        path: shown,
        parse_diagnostics: report::diagnostics(&r.diagnostics),
        smells: report::smells(&r.smells),
        repairs: Some(Repairs::from(&r.outcome)),
        residual: Some(report::smells(&r.residual)),
        enrichment: Some(r.enrichment),
        timing_ms: Some(r.timings.clone()),
        diff: Some(r.diff.clone()),
        ..Default::default()
    };
    if !r.round_trip {
        // the tree does not reproduce the file; never write from it
        report.error = Some("reprinting the unmodified file is not byte-exact; not repaired".into());
        return report;
    }
    if !r.changed() {
        return report;
    }
    let written = match write {
        WriteMode::Diff => return report,
        WriteMode::InPlace => fs::write(path, &r.repaired).map(|()| path.to_path_buf()),
        WriteMode::PatchDir(dir) => {
            let target = dir.join(patch_name(path));
            fs::create_dir_all(dir)
                .and_then(|()| fs::write(&target, &r.diff))
                .map(|()| target)
        }
    };
    match written {
        Ok(p) => report.written = Some(p.display().to_string()),
        Err(e) => report.error = Some(format!("write failed: {e}")),
    }
    report
}

fn process<F>(settings: &Settings, paths: &[String], f: F) -> Result<Vec<FileReport>>
where
    F: Fn(&Path) -> FileReport + Sync,
{
    let (files, errors) = resolve(paths);
    let mut reports: Vec<FileReport> = errors
        .into_iter()
        .map(|(input, e)| FileReport::failed(input, e))
        .collect();
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = settings.jobs {
        pool = pool.num_threads(n);
    }
    let pool = pool.build().context("starting worker threads")?;
    reports.extend(pool.install(|| files.par_iter().map(|p| f(p)).collect::<Vec<_>>()));
    if reports.is_empty() {
        anyhow::bail!("no input files");
    }
    reports.sort_by(|a, b| a.path.cmp(&b.path));
    Ok(reports)
}

fn exit_code(files: &[FileReport], failing: usize, threshold: u64) -> u8 {
    if files.iter().any(|f| f.error.is_some() || f.has_parse_errors()) {
        2
    } else if failing > 0 && failing as u64 >= threshold {
        1
    } else {
        0
    }
}

fn emit_json(mode: &'static str, files: Vec<FileReport>, exit_code: u8) -> Result<()> {
    let report = Report {
        schema_version: SCHEMA_VERSION,
        tool: "dockmend",
        version: env!("CARGO_PKG_VERSION"),
        mode,
        summary: Summary::of(&files),
        files,
        exit_code,
    };
    let mut out = std::io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, &report)?;
    writeln!(out)?;
    Ok(())
}

fn print_problems(f: &FileReport) {
    if let Some(e) = &f.error {
        eprintln!("{}: error: {e}", f.path);
    }
    for d in &f.parse_diagnostics {
        let level = match d.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        eprintln!("{}:{}:{}: {level}: {}", f.path, d.line, d.column, d.message);
    }
}

pub fn analyze(args: &CommonArgs) -> Result<u8> {
    let settings = settings(args)?;
    let files = process(&settings, &args.paths, |p| analyze_file(&settings.engine, p))?;
    let total: usize = files.iter().map(|f| f.smells.len()).sum();
    let code = exit_code(&files, total, settings.fail_threshold);
    match settings.format {
        Format::Json => emit_json("analyze", files, code)?,
        Format::Text => {
            let mut out = std::io::stdout().lock();
            for f in &files {
                print_problems(f);
                for s in &f.smells {
                    writeln!(out, "{}:{}:{}: {}: {}", f.path, s.line, s.column, s.rule_id, s.message)?;
                }
            }
            eprintln!("{total} smell(s) in {} file(s)", files.len());
        }
    }
    Ok(code)
}

pub fn repair(args: &RepairArgs) -> Result<u8> {
    let settings = settings(&args.common)?;
    let write = match (&args.patch_dir, args.in_place) {
        (Some(dir), _) => WriteMode::PatchDir(dir.clone()),
        (None, true) => WriteMode::InPlace,
        (None, false) => WriteMode::Diff,
    };
    let files = process(&settings, &args.common.paths, |p| {
        repair_file(&settings.engine, p, &write, args.context)
    })?;
    let residual: usize = files
        .iter()
        .map(|f| f.residual.as_ref().map_or(0, Vec::len))
        .sum();
    let code = exit_code(&files, residual, settings.fail_threshold);
    match settings.format {
        Format::Json => emit_json("repair", files, code)?,
        Format::Text => {
            let mut out = std::io::stdout().lock();
            for f in &files {
                print_problems(f);
                if let (WriteMode::Diff, Some(d)) = (&write, &f.diff) {
                    out.write_all(d.as_bytes())?;
                }
                if let Some(r) = &f.repairs {
                    for s in &r.skipped {
                        eprintln!(
                            "{}:{}:{}: {}: not repaired ({:?}: {})",
                            f.path, s.line, s.column, s.rule_id, s.reason, s.detail
                        );
                    }
                }
                if let Some(w) = &f.written {
                    eprintln!("{}: wrote {w}", f.path);
                }
            }
            let s = Summary::of(&files);
            eprintln!(
                "{} smell(s) in {} file(s): {} repaired, {} remaining",
                s.smells, s.files, s.applied, s.residual
            );
        }
    }
    Ok(code)
}

#[derive(Serialize)]
struct RuleInfo {
    id: &'static str,
    message: &'static str,
    repairable: bool,
    action: Option<dockmend::repair::ActionKind>,
}

pub fn list_rules(format: Format) -> Result<u8> {
    let rules: Vec<RuleInfo> = RuleSet::all()
        .rules()
        .iter()
        .map(|r| RuleInfo {
            id: r.id,
            message: r.message,
            repairable: r.repairable,
            action: template(r.id).map(|t| t.action.kind()),
        })
        .collect();
    let mut out = std::io::stdout().lock();
    match format {
        Format::Json => {
            serde_json::to_writer_pretty(&mut out, &rules)?;
            writeln!(out)?;
        }
        Format::Text => {
            for r in rules {
                writeln!(out, "{:<30} {}", r.id, r.message)?;
            }
        }
    }
    Ok(0)
}
