//! Enrichment checked against a hand-written token table: every generated
//! command is built from tokens whose expected tags are listed below, so
//! the expectation never goes through the schema file.

use dockmend::ast::{annotated_equal, Ast, NodeId, NodeKind};
use dockmend::enrich::{enrich, SchemaSet};
use dockmend::parser::parse_dockerfile;
use proptest::prelude::*;

type Tok = (&'static str, &'static [&'static str]);

/// A command shape: the words up to and including the subcommand chain with
/// the tags the command node gets, then option tokens and operand tokens
/// with the tags each argument word gets.
struct Shape {
    head: &'static [&'static str],
    command_tags: &'static [&'static str],
    options: &'static [Tok],
    operands: &'static [Tok],
}

const SHAPES: &[Shape] = &[
    Shape {
        head: &["apt-get", "install"],
        command_tags: &["APT-GET", "APT-GET-INSTALL"],
        options: &[
            ("-y", &["APT-GET-INSTALL-Y-FLAG"]),
            ("--yes", &["APT-GET-INSTALL-Y-FLAG"]),
            ("--no-install-recommends", &["APT-GET-INSTALL-NO-RECOMMENDS-FLAG"]),
            ("-qq", &["APT-GET-Q-FLAG"]),
        ],
        operands: &[("curl", &["PACKAGE"]), ("ca-certificates", &["PACKAGE"]), ("git", &["PACKAGE"])],
    },
    Shape {
        head: &["apk", "add"],
        command_tags: &["APK", "APK-ADD"],
        options: &[("--no-cache", &["APK-ADD-NO-CACHE-FLAG"]), ("-U", &["APK-ADD-UPDATE-CACHE-FLAG"])],
        operands: &[("bash", &["PACKAGE"]), ("tini", &["PACKAGE"])],
    },
    Shape {
        head: &["pip", "install"],
        command_tags: &["PIP", "PIP-INSTALL"],
        options: &[
            ("--no-cache-dir", &["PIP-INSTALL-NO-CACHE-DIR-FLAG"]),
            ("-U", &["PIP-INSTALL-UPGRADE-FLAG"]),
            ("--user", &["PIP-INSTALL-USER-FLAG"]),
        ],
        operands: &[("flask", &["PACKAGE"]), ("requests==2.31.0", &["PACKAGE"])],
    },
    Shape {
        head: &["pip3", "uninstall"],
        command_tags: &["PIP", "PIP-UNINSTALL"],
        options: &[],
        operands: &[("six", &["PACKAGE"])],
    },
    Shape {
        head: &["npm", "install"],
        command_tags: &["NPM", "NPM-INSTALL"],
        options: &[("-g", &["NPM-INSTALL-G-FLAG"]), ("--production", &["NPM-INSTALL-PRODUCTION-FLAG"])],
        operands: &[("express", &["PACKAGE"]), ("left-pad@1.3.0", &["PACKAGE"])],
    },
    Shape {
        head: &["npm", "cache", "clean"],
        command_tags: &["NPM", "NPM-CACHE", "NPM-CACHE-CLEAN"],
        options: &[("--force", &["NPM-F-FORCE"]), ("-f", &["NPM-F-FORCE"])],
        operands: &[],
    },
    Shape {
        head: &["yum", "install"],
        command_tags: &["YUM", "YUM-INSTALL"],
        options: &[("-y", &["YUM-INSTALL-Y-FLAG"]), ("--assumeyes", &["YUM-INSTALL-Y-FLAG"])],
        operands: &[("httpd", &["PACKAGE"]), ("which", &["PACKAGE"])],
    },
    Shape {
        head: &["dnf", "clean"],
        command_tags: &["YUM", "YUM-CLEAN"],
        options: &[],
        operands: &[],
    },
    Shape {
        head: &["gem", "update"],
        command_tags: &["GEM", "GEM-UPDATE"],
        options: &[
            ("--system", &["GEM-UPDATE-SYSTEM-FLAG"]),
            ("--no-document", &["GEM-UPDATE-NO-DOCUMENT-FLAG"]),
            ("-N", &["GEM-UPDATE-NO-DOCUMENT-FLAG"]),
        ],
        operands: &[("bundler", &["PACKAGE"])],
    },
    Shape {
        head: &["yarn", "install"],
        command_tags: &["YARN", "YARN-INSTALL"],
        options: &[("--frozen-lockfile", &["YARN-INSTALL-FROZEN-LOCKFILE-FLAG"])],
        operands: &[],
    },
];

/// Commands with no schema keep every node untagged.
const UNKNOWN: &[&str] = &["make -j4", "echo-like x y", "./build.sh --fast", "cmake ."];

#[derive(Debug, Clone)]
struct Expected {
    text: String,
    command_tags: Vec<String>,
    arg_tags: Vec<Vec<String>>,
}

fn sorted(tags: &[&str]) -> Vec<String> {
    let mut v: Vec<String> = tags.iter().map(|s| s.to_string()).collect();
    v.sort();
    v.dedup();
    v
}

fn command() -> impl Strategy<Value = Expected> {
    let known = (0..SHAPES.len(), any::<u64>()).prop_map(|(i, seed)| {
        let s = &SHAPES[i];
        let mut words: Vec<String> = s.head.iter().map(|w| w.to_string()).collect();
        let mut arg_tags: Vec<Vec<String>> = (1..s.head.len()).map(|_| vec!["SUBCOMMAND".to_string()]).collect();
        let mut bits = seed;
        let mut take = |pool: &[Tok], words: &mut Vec<String>, arg_tags: &mut Vec<Vec<String>>| {
            for (w, t) in pool {
                if bits & 1 == 1 {
                    words.push(w.to_string());
                    arg_tags.push(sorted(t));
                }
                bits >>= 1;
            }
        };
        take(s.options, &mut words, &mut arg_tags);
        take(s.operands, &mut words, &mut arg_tags);
        Expected { text: words.join(" "), command_tags: sorted(s.command_tags), arg_tags }
    });
    let unknown = proptest::sample::select(UNKNOWN).prop_map(|c| Expected {
        text: c.to_string(),
        command_tags: Vec::new(),
        arg_tags: vec![Vec::new(); c.split_whitespace().count() - 1],
    });
    prop_oneof![4 => known, 1 => unknown]
}

fn tags(ast: &Ast, id: NodeId) -> Vec<String> {
    ast.annotations(id).iter().map(|a| a.to_string()).collect()
}

fn enriched(src: &str) -> Ast {
    let mut ast = parse_dockerfile(src).ast;
    enrich(&mut ast, &SchemaSet::builtin());
    ast
}

fn observed(ast: &Ast, cmd: NodeId) -> (Vec<String>, Vec<Vec<String>>) {
    let args = ast.get_children(cmd, NodeKind::BashCommandArgs).into_iter().map(|a| tags(ast, a)).collect();
    (tags(ast, cmd), args)
}

fn all_tags(ast: &Ast) -> Vec<(String, Vec<String>)> {
    ast.preorder(ast.root())
        .into_iter()
        .map(|n| (ast.text(n).to_string(), tags(ast, n)))
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(60))]

    #[test]
    fn single_commands_match_the_token_table(e in command()) {
        let ast = enriched(&format!("FROM debian\nRUN {}\n", e.text));
        let cmds = ast.get_elements(ast.root(), NodeKind::BashCommand);
        prop_assert_eq!(cmds.len(), 1);
        let (cmd_tags, arg_tags) = observed(&ast, cmds[0]);
        prop_assert_eq!(cmd_tags, e.command_tags.clone());
        prop_assert_eq!(arg_tags, e.arg_tags.clone());
    }

    #[test]
    fn sudo_adds_nothing_to_the_inner_command(e in command()) {
        let plain = enriched(&format!("FROM debian\nRUN {}\n", e.text));
        let wrapped = enriched(&format!("FROM debian\nRUN sudo {}\n", e.text));
        let outer = wrapped.get_elements(wrapped.root(), NodeKind::BashCommand)[0];
        let inner = wrapped.get_child(outer, NodeKind::BashCommand).expect("inner command");
        let bare = plain.get_elements(plain.root(), NodeKind::BashCommand)[0];
        prop_assert_eq!(observed(&wrapped, inner), observed(&plain, bare));
        prop_assert!(wrapped.has_annotation(outer, "SUDO"));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn run_lines_match_the_token_table(
        parts in proptest::collection::vec((command(), proptest::sample::select(vec![" && ", " ; ", " || "])), 1..4),
        continued in any::<bool>(),
    ) {
        let mut body = String::new();
        for (k, (e, sep)) in parts.iter().enumerate() {
            if k > 0 {
                body.push_str(if continued { " \\\n   " } else { "" });
                body.push_str(sep);
            }
            body.push_str(&e.text);
        }
        let ast = enriched(&format!("FROM debian\nRUN {body}\n"));
        let cmds = ast.get_elements(ast.root(), NodeKind::BashCommand);
        prop_assert_eq!(cmds.len(), parts.len());
        for (cmd, (e, _)) in cmds.iter().zip(&parts) {
            let (cmd_tags, arg_tags) = observed(&ast, *cmd);
            prop_assert_eq!(cmd_tags, e.command_tags.clone(), "{}", body);
            prop_assert_eq!(arg_tags, e.arg_tags.clone(), "{}", body);
        }
    }

    #[test]
    fn enrichment_is_idempotent_and_local(
        a in command(),
        b in command(),
        c in command(),
    ) {
        let src = format!("FROM debian\nRUN {} && {}\n", a.text, b.text);
        let mut once = parse_dockerfile(&src).ast;
        let s1 = enrich(&mut once, &SchemaSet::builtin());
        let mut twice = once.clone();
        let s2 = enrich(&mut twice, &SchemaSet::builtin());
        prop_assert_eq!(s1, s2);
        prop_assert!(annotated_equal(&once, once.root(), &twice, twice.root()));

        // another instruction leaves the existing tags alone
        let more = enriched(&format!("{src}RUN {}\n", c.text));
        let before = all_tags(&once);
        let after = all_tags(&more);
        prop_assert_eq!(&after[1..before.len()], &before[1..]);
    }

    #[test]
    fn coverage_is_monotone_in_the_schema_set(parts in proptest::collection::vec(command(), 1..5)) {
        let body: Vec<&str> = parts.iter().map(|e| e.text.as_str()).collect();
        let src = format!("FROM debian\nRUN {}\n", body.join(" && "));
        let small = SchemaSet::from_toml(SMALL).expect("schema");
        let mut full_ast = parse_dockerfile(&src).ast;
        let mut small_ast = full_ast.clone();
        let full = enrich(&mut full_ast, &SchemaSet::builtin());
        let part = enrich(&mut small_ast, &small);
        prop_assert_eq!(full.total_commands, part.total_commands);
        prop_assert!(part.annotated_commands <= full.annotated_commands);
        prop_assert!(part.coverage_ratio <= full.coverage_ratio);
        let known = parts.iter().filter(|e| !e.command_tags.is_empty()).count();
        prop_assert_eq!(full.annotated_commands, known);
    }
}

const SMALL: &str = r#"
[[command]]
name = "apk"
tag = "APK"
"#;

#[test]
fn corpus_coverage_is_reported() {
    let mut total = 0;
    let mut annotated = 0;
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/corpus");
    for entry in std::fs::read_dir(dir).unwrap() {
        let text = std::fs::read_to_string(entry.unwrap().path()).unwrap();
        let mut ast = parse_dockerfile(&text).ast;
        let s = enrich(&mut ast, &SchemaSet::builtin());
        assert!(s.annotated_commands <= s.total_commands);
        total += s.total_commands;
        annotated += s.annotated_commands;
    }
    assert!(total > 0);
    let ratio = annotated as f64 / total as f64;
    assert!(ratio > 0.0 && ratio <= 1.0);
}
