//! Run settings from the command line and the optional configuration file.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use dockmend::enrich::SchemaSet;
use dockmend::pipeline::Engine;
use dockmend::rules::{RuleConfig, RuleSet};
use serde::Deserialize;

use crate::{CommonArgs, Format};

/// Contents of the configuration file. Command-line flags win.
#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub rules: Vec<String>,
    pub exclude: Vec<String>,
    pub format: Option<Format>,
    pub fail_threshold: Option<u64>,
    /// Relative paths are resolved against the configuration file.
    pub schemas: Option<PathBuf>,
    pub keyserver: Option<String>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<FileConfig> {
        let text = fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let mut config: FileConfig =
            toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        if let (Some(s), Some(dir)) = (&config.schemas, path.parent()) {
            if s.is_relative() {
                config.schemas = Some(dir.join(s));
            }
        }
        Ok(config)
    }
}

pub struct Settings {
    pub engine: Engine,
    pub format: Format,
    pub fail_threshold: u64,
    pub jobs: Option<usize>,
}

pub fn settings(args: &CommonArgs) -> Result<Settings> {
    let file = match &args.config {
        Some(p) => FileConfig::load(p)?,
        None => FileConfig::default(),
    };
    let include = if args.rules.is_empty() {
        &file.rules
    } else {
        &args.rules
    };
    let mut rules = if include.is_empty() {
        RuleSet::all()
    } else {
        RuleSet::select(include)?
    };
    rules = rules.without(&file.exclude)?.without(&args.exclude)?;

    let mut schemas = SchemaSet::builtin();
    for path in [&file.schemas, &args.schemas].into_iter().flatten() {
        let text = fs::read_to_string(path)
            .with_context(|| format!("reading schemas {}", path.display()))?;
        let extra = SchemaSet::from_toml(&text)
            .with_context(|| format!("loading schemas {}", path.display()))?;
        schemas
            .merge(extra)
            .with_context(|| format!("merging schemas {}", path.display()))?;
    }
    rules.validate(&schemas)?;

    Ok(Settings {
        engine: Engine::new(
            rules,
            schemas,
            RuleConfig {
                keyserver: file.keyserver,
            },
        ),
        format: args.format.or(file.format).unwrap_or(Format::Text),
        fail_threshold: args.fail_threshold.or(file.fail_threshold).unwrap_or(1).max(1),
        jobs: args.jobs,
    })
}
