//! Fixture loading shared by the integration tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use dockmend::ast::NodeKind;
use dockmend::parser::parse_dockerfile;
use serde::Deserialize;

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

pub fn read(rel: &str) -> String {
    let path = fixtures().join(rel);
    fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn dockerfiles(dir: &Path) -> Vec<(String, String)> {
    let mut out: Vec<(String, String)> = fs::read_dir(dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "Dockerfile"))
        .map(|p| {
            let name = p.file_name().unwrap().to_string_lossy().into_owned();
            (name, fs::read_to_string(&p).unwrap())
        })
        .collect();
    out.sort();
    out
}

/// Every real-world style file: the corpus, the annotated set and the
/// scenario files at the top level.
pub fn corpus() -> Vec<(String, String)> {
    let root = fixtures();
    let mut out = Vec::new();
    for (dir, prefix) in [(root.join("corpus"), "corpus/"), (root.join("ground_truth"), "ground_truth/"), (root.clone(), "")] {
        for (name, text) in dockerfiles(&dir) {
            out.push((format!("{prefix}{name}"), text));
        }
    }
    out
}

#[derive(Debug, Deserialize)]
pub struct RuleFixtures {
    pub positive: Vec<String>,
    pub negative: Vec<String>,
}

pub fn rule_fixtures() -> BTreeMap<String, RuleFixtures> {
    toml::from_str(&read("rules.toml")).expect("rules.toml")
}

/// A snippet from `rules.toml` as a whole file.
pub fn with_from(snippet: &str) -> String {
    format!("FROM debian:bookworm\n{snippet}\n")
}

/// The annotated files with their expected `(rule, line)` pairs, sorted.
/// `(file name, text, expected (rule, line) pairs)`.
pub type Annotated = (String, String, Vec<(String, usize)>);

pub fn ground_truth() -> Vec<Annotated> {
    let annotations: BTreeMap<String, Vec<String>> =
        toml::from_str(&read("ground_truth/annotations.toml")).expect("annotations.toml");
    let files = dockerfiles(&fixtures().join("ground_truth"));
    assert_eq!(files.len(), annotations.len(), "every annotated file exists");
    files
        .into_iter()
        .map(|(name, text)| {
            let mut expected: Vec<(String, usize)> = annotations[&name]
                .iter()
                .map(|a| {
                    let (rule, line) = a.split_once('@').expect("rule@line");
                    (rule.to_string(), line.parse().expect("line number"))
                })
                .collect();
            expected.sort();
            (name, text, expected)
        })
        .collect()
}

/// Per-file precision and recall of `found` against `expected`, both as
/// multisets. With nothing found precision is 1, with nothing expected
/// recall is 1.
pub fn precision_recall(found: &[(String, usize)], expected: &[(String, usize)]) -> (f64, f64) {
    let mut remaining = expected.to_vec();
    let mut hits = 0usize;
    for f in found {
        if let Some(i) = remaining.iter().position(|e| e == f) {
            remaining.swap_remove(i);
            hits += 1;
        }
    }
    let ratio = |n: usize| if n == 0 { 1.0 } else { hits as f64 / n as f64 };
    (ratio(found.len()), ratio(expected.len()))
}

/// Dry run of the few commands the tar-then-cd scenario uses, tracking the
/// working directory and the files and directories that exist. Returns an
/// error for any operation on a missing path.
pub fn simulate(script: &str, archives: &[(&str, &str)]) -> Result<BTreeSet<String>, String> {
    let mut cwd = "/".to_string();
    let mut files: BTreeSet<String> = BTreeSet::new();
    let mut dirs: BTreeSet<String> = BTreeSet::from(["/".to_string()]);
    let at = |cwd: &str, p: &str| {
        if p.starts_with('/') {
            p.to_string()
        } else {
            format!("{}/{p}", cwd.trim_end_matches('/'))
        }
    };
    for part in script.split("&&") {
        let words = shlex::split(part.trim()).ok_or_else(|| format!("cannot split {part:?}"))?;
        let Some((cmd, args)) = words.split_first() else { continue };
        match (cmd.as_str(), args) {
            ("wget", [flag, out, _url]) if flag == "-O" => {
                files.insert(at(&cwd, out));
            }
            ("tar", [flags, archive]) if flags.contains('x') => {
                let path = at(&cwd, archive);
                if !files.contains(&path) {
                    return Err(format!("tar: {path} missing"));
                }
                let top = archives.iter().find(|(a, _)| a == archive).ok_or("unknown archive")?.1;
                dirs.insert(at(&cwd, top));
            }
            ("mkdir", [d]) => {
                dirs.insert(at(&cwd, d));
            }
            ("cd", [d]) => {
                let path = at(&cwd, d);
                if !dirs.contains(&path) {
                    return Err(format!("cd: {path} missing"));
                }
                cwd = path;
            }
            ("rm", [f]) => {
                let path = at(&cwd, f);
                if !files.remove(&path) {
                    return Err(format!("rm: {path} missing"));
                }
            }
            ("./configure", _) | ("make", _) => {}
            _ => return Err(format!("unexpected command {words:?}")),
        }
    }
    Ok(files)
}

/// Text after `RUN` of the first RUN instruction whose payload starts with
/// `starting`, with continuations joined.
pub fn run_payload(file: &str, starting: &str) -> String {
    let ast = parse_dockerfile(file).ast;
    let run = ast
        .get_elements(ast.root(), NodeKind::Run)
        .into_iter()
        .find(|r| ast.text(*r)["RUN".len()..].trim_start().starts_with(starting))
        .expect("RUN");
    let text = ast.text(run);
    text["RUN".len()..].replace("\\\n", " ")
}
