//! Turning command-line paths into the list of files to process.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use walkdir::WalkDir;

/// True for names the directory search picks up.
pub fn is_candidate(path: &Path) -> bool {
    path.file_name()
        .and_then(|n| n.to_str())
        .is_some_and(|n| n.contains("Dockerfile"))
}

fn walk(dir: &Path, out: &mut BTreeSet<PathBuf>, errors: &mut Vec<(String, String)>) {
    for entry in WalkDir::new(dir).follow_links(false) {
        match entry {
            Ok(e) if e.file_type().is_file() && is_candidate(e.path()) => {
                out.insert(e.into_path());
            }
            Ok(_) => {}
            Err(e) => errors.push((dir.display().to_string(), e.to_string())),
        }
    }
}

/// Files named explicitly are taken as they are; directories (also those
/// matched by a glob) are searched for candidates. Returns the sorted files
/// and the inputs that could not be resolved.
pub fn resolve(inputs: &[String]) -> (Vec<PathBuf>, Vec<(String, String)>) {
    let mut files = BTreeSet::new();
    let mut errors = Vec::new();
    for input in inputs {
        let path = Path::new(input);
        if path.is_file() {
            files.insert(path.to_path_buf());
        } else if path.is_dir() {
            walk(path, &mut files, &mut errors);
        } else if input.contains(['*', '?', '[']) {
            let matches = match glob::glob(input) {
                Ok(m) => m,
                Err(e) => {
                    errors.push((input.clone(), e.to_string()));
                    continue;
                }
            };
            let mut any = false;
            for m in matches {
                match m {
                    Ok(p) if p.is_file() => {
                        any = true;
                        files.insert(p);
                    }
                    Ok(p) if p.is_dir() => {
                        any = true;
                        walk(&p, &mut files, &mut errors);
                    }
                    Ok(_) => {}
                    Err(e) => errors.push((input.clone(), e.to_string())),
                }
            }
            if !any {
                errors.push((input.clone(), "pattern matched nothing".into()));
            }
        } else {
            errors.push((input.clone(), "no such file or directory".into()));
        }
    }
    (files.into_iter().collect(), errors)
}
