//! Schema-driven annotation of shell commands.
//!
//! Every `BashCommand` whose name has a schema gets the command tag, the
//! tags of the subcommands it names, and tags on its arguments: flag tags
//! on recognised flags, role tags (`PACKAGE`, `URL`, `PATH` ...) on
//! positional arguments and flag values. Words that cannot be classified
//! stay untagged.

mod schema;

use serde::Serialize;

pub use schema::{
    CommandSchema, FlagSchema, Level, SchemaError, SchemaSet, SubcommandSchema, FLAG_VALUE_ROLE,
    SUBCOMMAND_ROLE,
};

use crate::ast::words::{literal_prefix, literal_text};
use crate::ast::{Annotation, Ast, NodeId, NodeKind};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnrichmentStats {
    pub total_commands: usize,
    pub annotated_commands: usize,
    /// `annotated / total`, 0 for a file without commands.
    pub coverage_ratio: f64,
}

/// Literal command name of a `BashCommand`, if it has one.
pub fn command_name(ast: &Ast, cmd: NodeId) -> Option<String> {
    let name = ast.get_child(cmd, NodeKind::BashCommandName)?;
    literal_text(ast, name)
}

/// Clears all annotations, then tags every command in the tree.
pub fn enrich(ast: &mut Ast, schemas: &SchemaSet) -> EnrichmentStats {
    let root = ast.root();
    let nodes = ast.preorder(root);
    for n in &nodes {
        ast.clear_annotations(*n);
    }
    let mut total = 0;
    let mut annotated = 0;
    for n in nodes {
        if ast.kind(n) != NodeKind::BashCommand {
            continue;
        }
        total += 1;
        if annotate_command(ast, schemas, n) {
            annotated += 1;
        }
    }
    EnrichmentStats {
        total_commands: total,
        annotated_commands: annotated,
        coverage_ratio: if total == 0 {
            0.0
        } else {
            annotated as f64 / total as f64
        },
    }
}

/// For a wrapper command (`sudo ...`, `sh -c '...'`), annotates and returns
/// the first command it runs.
pub fn enrich_embedded(ast: &mut Ast, schemas: &SchemaSet, cmd: NodeId) -> Option<NodeId> {
    let schema = schemas.get(&command_name(ast, cmd)?)?;
    if !schema.wrapper {
        return None;
    }
    let inner = embedded_command(ast, cmd)?;
    annotate_command(ast, schemas, inner);
    Some(inner)
}

/// The command run by a wrapper: a nested `BashCommand` child, or the
/// first command of a script passed as an argument.
pub fn embedded_command(ast: &Ast, cmd: NodeId) -> Option<NodeId> {
    if let Some(inner) = ast.get_child(cmd, NodeKind::BashCommand) {
        return Some(inner);
    }
    ast.get_children(cmd, NodeKind::BashCommandArgs)
        .into_iter()
        .find_map(|arg| {
            let script = ast.get_element(arg, NodeKind::BashScript)?;
            ast.get_element(script, NodeKind::BashCommand)
        })
}

fn tag(ast: &mut Ast, id: NodeId, tag: &str) {
    if let Ok(a) = Annotation::new(tag) {
        ast.annotate(id, a);
    }
}

fn find_flag<'a>(levels: &[Level<'a>], name: &str) -> Option<&'a FlagSchema> {
    levels
        .iter()
        .rev()
        .find_map(|l| l.flags.iter().find(|f| f.names.iter().any(|n| n == name)))
}

fn is_cluster(word: &str) -> bool {
    word.len() > 2
        && word.starts_with('-')
        && !word.starts_with("--")
        && word[1..].chars().all(|c| c.is_ascii_alphanumeric())
}

/// Tags one command. Returns false when the name has no schema.
fn annotate_command(ast: &mut Ast, schemas: &SchemaSet, cmd: NodeId) -> bool {
    let Some(schema) = command_name(ast, cmd).and_then(|n| schemas.get(&n)) else {
        return false;
    };
    tag(ast, cmd, &schema.tag);
    let args = ast.get_children(cmd, NodeKind::BashCommandArgs);
    let words: Vec<(String, bool)> = args.iter().map(|a| literal_prefix(ast, *a)).collect();

    // pass 1: find the subcommand chain
    let mut levels = vec![schema.level()];
    let mut sub_words = Vec::new();
    let mut i = 0;
    while i < words.len() {
        let (text, complete) = &words[i];
        if text == "--" && *complete {
            break;
        }
        if text.starts_with('-') && text.len() > 1 {
            let name = text.split('=').next().unwrap_or(text);
            if find_flag(&levels, name).is_some_and(|f| f.takes_value && !text.contains('=')) {
                i += 1;
            }
            i += 1;
            continue;
        }
        let current = levels[levels.len() - 1];
        let sub = complete
            .then(|| {
                current
                    .subcommands
                    .iter()
                    .find(|s| s.names.iter().any(|n| n == text))
            })
            .flatten();
        match sub {
            Some(sub) => {
                levels.push(sub.level());
                sub_words.push(i);
                i += 1;
            }
            None => break,
        }
    }
    for level in &levels[1..] {
        tag(ast, cmd, level.tag);
    }
    let positional = levels[levels.len() - 1].positional;

    // pass 2: flags, flag values and positionals
    let mut end_of_options = false;
    let mut i = 0;
    while i < args.len() {
        let arg = args[i];
        let (text, complete) = &words[i];
        if sub_words.contains(&i) {
            tag(ast, arg, SUBCOMMAND_ROLE);
            i += 1;
            continue;
        }
        if !end_of_options && text == "--" && *complete {
            end_of_options = true;
            i += 1;
            continue;
        }
        if !end_of_options && text.starts_with('-') && text.len() > 1 {
            let name = text.split('=').next().unwrap_or(text);
            if let Some(flag) = find_flag(&levels, name) {
                tag(ast, arg, &flag.tag);
                if flag.takes_value && !text.contains('=') {
                    if let Some(value) = args.get(i + 1) {
                        tag(ast, *value, flag.value_role.as_deref().unwrap_or(FLAG_VALUE_ROLE));
                        i += 1;
                    }
                }
            } else if schema.bundling && *complete && is_cluster(text) {
                i += annotate_cluster(ast, &levels, &args, i, &text[1..]);
            }
            i += 1;
            continue;
        }
        if i == 0
            && schema.old_style_bundles
            && *complete
            && !text.is_empty()
            && text
                .chars()
                .all(|c| c.is_ascii_alphabetic() && find_flag(&levels, &format!("-{c}")).is_some())
        {
            i += annotate_cluster(ast, &levels, &args, i, text) + 1;
            continue;
        }
        if let Some(role) = positional {
            tag(ast, arg, role);
        }
        i += 1;
    }
    true
}

/// Tags the flags of a cluster such as `fsSL` on `args[i]`. Returns the
/// number of following arguments consumed as flag values.
fn annotate_cluster(
    ast: &mut Ast,
    levels: &[Level<'_>],
    args: &[NodeId],
    i: usize,
    letters: &str,
) -> usize {
    let chars: Vec<char> = letters.chars().collect();
    for (k, c) in chars.iter().enumerate() {
        let Some(flag) = find_flag(levels, &format!("-{c}")) else {
            continue;
        };
        tag(ast, args[i], &flag.tag);
        if flag.takes_value {
            // the rest of the cluster is the value (`-qO-`), else the next word
            if k + 1 == chars.len() {
                if let Some(value) = args.get(i + 1) {
                    tag(ast, *value, flag.value_role.as_deref().unwrap_or(FLAG_VALUE_ROLE));
                    return 1;
                }
            }
            return 0;
        }
    }
    0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_dockerfile;

    fn tags_of(ast: &Ast, id: NodeId) -> Vec<String> {
        ast.annotations(id).iter().map(|a| a.to_string()).collect()
    }

    fn enriched(src: &str) -> (Ast, Vec<NodeId>) {
        let mut ast = parse_dockerfile(src).ast;
        enrich(&mut ast, &SchemaSet::builtin());
        let root = ast.root();
        let cmds = ast.get_elements(root, NodeKind::BashCommand);
        (ast, cmds)
    }

    fn arg_tags(ast: &Ast, cmd: NodeId) -> Vec<(String, Vec<String>)> {
        ast.get_children(cmd, NodeKind::BashCommandArgs)
            .into_iter()
            .map(|a| (ast.text(a).to_string(), tags_of(ast, a)))
            .collect()
    }

    #[test]
    fn apt_get_install() {
        let (ast, cmds) = enriched("RUN apt-get -q install -y --no-install-recommends curl wget\n");
        let cmd = cmds[0];
        assert!(ast.has_annotation(cmd, "APT-GET"));
        assert!(ast.has_annotation(cmd, "APT-GET-INSTALL"));
        let args = arg_tags(&ast, cmd);
        assert_eq!(args[0].1, vec!["APT-GET-Q-FLAG"]);
        assert_eq!(args[1].1, vec![SUBCOMMAND_ROLE]);
        assert_eq!(args[2].1, vec!["APT-GET-INSTALL-Y-FLAG"]);
        assert_eq!(args[3].1, vec!["APT-GET-INSTALL-NO-RECOMMENDS-FLAG"]);
        assert_eq!(args[4].1, vec!["PACKAGE"]);
        assert_eq!(args[5].1, vec!["PACKAGE"]);
    }

    #[test]
    fn flag_before_subcommand_uses_subcommand_flags() {
        let (ast, cmds) = enriched("RUN apt-get -y install curl\n");
        assert_eq!(arg_tags(&ast, cmds[0])[0].1, vec!["APT-GET-INSTALL-Y-FLAG"]);
    }

    #[test]
    fn clusters_are_split() {
        let (ast, cmds) = enriched("RUN curl -fsSLo /tmp/x https://example.org/x\n");
        let args = arg_tags(&ast, cmds[0]);
        let mut first = args[0].1.clone();
        first.sort();
        assert_eq!(
            first,
            vec![
                "CURL-FAIL-FLAG",
                "CURL-LOCATION-FLAG",
                "CURL-OUTPUT-FLAG",
                "CURL-SHOW-ERROR-FLAG",
                "CURL-SILENT-FLAG"
            ]
        );
        assert_eq!(args[1].1, vec!["PATH"]);
        assert_eq!(args[2].1, vec!["URL"]);
    }

    #[test]
    fn tar_archive_roles() {
        for src in ["RUN tar -xzf gsl.tgz -C /opt\n", "RUN tar xzf gsl.tgz -C /opt\n"] {
            let (ast, cmds) = enriched(src);
            let args = arg_tags(&ast, cmds[0]);
            assert!(args[0].1.contains(&"TAR-EXTRACT-FLAG".to_string()), "{src}");
            assert_eq!(args[1].1, vec!["ARCHIVE"], "{src}");
            assert_eq!(args[3].1, vec!["PATH"], "{src}");
        }
    }

    #[test]
    fn nested_subcommands() {
        let (ast, cmds) = enriched("RUN npm cache clean --force\n");
        let cmd = cmds[0];
        for t in ["NPM", "NPM-CACHE", "NPM-CACHE-CLEAN"] {
            assert!(ast.has_annotation(cmd, t), "{t}");
        }
        assert_eq!(arg_tags(&ast, cmd)[2].1, vec!["NPM-F-FORCE"]);
    }

    #[test]
    fn sudo_and_sh_payloads_are_enriched() {
        let (mut ast, cmds) = enriched("RUN sudo apt-get install curl && sh -c 'rm -rf /tmp/x'\n");
        let schemas = SchemaSet::builtin();
        let sudo = cmds[0];
        assert!(ast.has_annotation(sudo, "SUDO"));
        let inner = enrich_embedded(&mut ast, &schemas, sudo).unwrap();
        assert!(ast.has_annotation(inner, "APT-GET-INSTALL"));
        let sh = cmds
            .iter()
            .copied()
            .find(|c| ast.has_annotation(*c, "SH"))
            .unwrap();
        let inner = enrich_embedded(&mut ast, &schemas, sh).unwrap();
        assert!(ast.has_annotation(inner, "RM"));
        assert!(enrich_embedded(&mut ast, &schemas, inner).is_none());
    }

    #[test]
    fn unknown_and_variable_commands_stay_untagged() {
        let (ast, cmds) = enriched("RUN make -j4 && $CC main.c && curl --frobnicate $URL\n");
        assert!(ast.annotations(cmds[0]).is_empty());
        assert!(ast.annotations(cmds[1]).is_empty());
        let args = arg_tags(&ast, cmds[2]);
        assert!(args[0].1.is_empty());
        assert_eq!(args[1].1, vec!["URL"]);
    }

    #[test]
    fn end_of_options_marker() {
        let (ast, cmds) = enriched("RUN rm -f -- -r\n");
        let args = arg_tags(&ast, cmds[0]);
        assert_eq!(args[0].1, vec!["RM-FORCE-FLAG"]);
        assert!(args[1].1.is_empty());
        assert_eq!(args[2].1, vec!["PATH"]);
    }

    #[test]
    fn stats_and_idempotence() {
        let src = "RUN apt-get update && make && cd /x\n";
        let mut ast = parse_dockerfile(src).ast;
        let schemas = SchemaSet::builtin();
        let stats = enrich(&mut ast, &schemas);
        assert_eq!(stats.total_commands, 3);
        assert_eq!(stats.annotated_commands, 2);
        assert!((stats.coverage_ratio - 2.0 / 3.0).abs() < 1e-9);
        let snapshot = ast.clone();
        enrich(&mut ast, &schemas);
        assert!(crate::ast::annotated_equal(
            &snapshot,
            snapshot.root(),
            &ast,
            ast.root()
        ));
        let empty = enrich(&mut parse_dockerfile("FROM x\n").ast, &schemas);
        assert_eq!(empty.coverage_ratio, 0.0);
    }

    #[test]
    fn every_tag_is_in_the_vocabulary() {
        let src = "RUN apt-get install -qy curl && curl -fsSL http://x | tar -xz -C / \
                   && gpg --batch --keyserver ha.pool.sks-keyservers.net --recv-keys 1\n";
        let (ast, _) = enriched(src);
        let vocab = SchemaSet::builtin().vocabulary();
        for n in ast.preorder(ast.root()) {
            for t in ast.annotations(n) {
                assert!(vocab.contains(t.as_str()), "{t}");
            }
        }
    }
}
