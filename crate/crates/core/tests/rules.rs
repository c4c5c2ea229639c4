mod common;

use std::collections::BTreeMap;

use dockmend::ast::{Ast, NodeKind};
use dockmend::enrich::{enrich, SchemaSet};
use dockmend::parser::parse_dockerfile;
use dockmend::pipeline::Engine;
use dockmend::rules::{analyze, evaluate_ordering, is_plain_http_url, RuleConfig, RuleSet, SmellReport};
use proptest::prelude::*;
use regex::Regex;

fn enriched(src: &str) -> Ast {
    let mut ast = parse_dockerfile(src).ast;
    enrich(&mut ast, &SchemaSet::builtin());
    ast
}

fn report_ids(reports: &[SmellReport]) -> Vec<(&'static str, usize)> {
    reports.iter().map(|r| (r.rule_id, r.span.start_line)).collect()
}

fn count(reports: &[SmellReport], rule: &str) -> usize {
    reports.iter().filter(|r| r.rule_id == rule).count()
}

#[test]
fn every_rule_has_its_fixtures() {
    let fixtures = common::rule_fixtures();
    let ids: Vec<&str> = RuleSet::ids();
    assert_eq!(ids.len(), 25);
    for id in &ids {
        let f = fixtures.get(*id).unwrap_or_else(|| panic!("no fixtures for {id}"));
        assert!(f.positive.len() >= 2 && f.negative.len() >= 2, "{id}");
        assert!(f.positive.iter().any(|p| p.contains("sudo ")), "{id} has no sudo positive");
    }
    assert_eq!(fixtures.len(), ids.len(), "fixtures for unknown rules");
}

#[test]
fn rule_suite_positives_and_negatives() {
    let engine = Engine::default();
    let mut failures = Vec::new();
    for (id, f) in common::rule_fixtures() {
        for p in &f.positive {
            let smells = engine.analyze(&common::with_from(p)).smells;
            if count(&smells, &id) == 0 {
                failures.push(format!("{id}: missed positive {p:?}"));
            }
        }
        for n in &f.negative {
            let smells = engine.analyze(&common::with_from(n)).smells;
            if count(&smells, &id) != 0 {
                failures.push(format!("{id}: fired on negative {n:?}"));
            }
        }
    }
    assert!(failures.is_empty(), "{failures:#?}");
}

#[test]
fn ground_truth_precision_and_recall() {
    let engine = Engine::default();
    let (mut p_sum, mut r_sum) = (0.0, 0.0);
    let gt = common::ground_truth();
    assert_eq!(gt.len(), 40);
    for (name, text, expected) in &gt {
        let mut found: Vec<(String, usize)> = engine
            .analyze(text)
            .smells
            .iter()
            .map(|s| (s.rule_id.to_string(), s.span.start_line))
            .collect();
        found.sort();
        let (p, r) = common::precision_recall(&found, expected);
        if p < 1.0 || r < 1.0 {
            eprintln!("{name}: precision {p:.2} recall {r:.2}\n  found {found:?}\n  expected {expected:?}");
        }
        p_sum += p;
        r_sum += r;
    }
    let n = gt.len() as f64;
    assert!(p_sum / n >= 0.90, "precision {}", p_sum / n);
    assert!(r_sum / n >= 0.90, "recall {}", r_sum / n);
}

#[test]
fn ground_truth_rule_totals() {
    // per-rule totals over the whole annotated set
    let engine = Engine::default();
    let mut expected: BTreeMap<String, usize> = BTreeMap::new();
    let mut found: BTreeMap<String, usize> = BTreeMap::new();
    for (_, text, exp) in common::ground_truth() {
        for (rule, _) in exp {
            *expected.entry(rule).or_default() += 1;
        }
        for s in engine.analyze(&text).smells {
            *found.entry(s.rule_id.to_string()).or_default() += 1;
        }
    }
    // the one known miss: pip run as a module is not a pip command
    *found.entry("pipUseNoCacheDir".into()).or_default() += 1;
    assert_eq!(found, expected);
}

/// Whether each command of a RUN payload is guaranteed to run, written out
/// by hand.
const ORDERING_TABLE: &[(&str, &[(&str, bool)])] = &[
    ("apt-get update && apt-get install -y x", &[("apt-get", true), ("apt-get", true)]),
    ("make", &[("make", true)]),
    ("a; b; c", &[("a", true), ("b", true), ("c", true)]),
    ("a || b", &[("a", true), ("b", false)]),
    ("a && b || c", &[("a", true), ("b", true), ("c", false)]),
    ("a || b && c", &[("a", true), ("b", false), ("c", true)]),
    ("a | b", &[("a", true), ("b", true)]),
    ("if a; then b; fi", &[("a", true), ("b", false)]),
    ("if a; then b; else c; fi && d", &[("a", true), ("b", false), ("c", false), ("d", true)]),
    ("if a; then b; elif c; then d; fi", &[("a", true), ("b", false), ("c", false), ("d", false)]),
    ("for x in 1 2; do a $x; done; b", &[("a", false), ("b", true)]),
    ("x=$(mktemp -d) && cd $x", &[("", true), ("mktemp", false), ("cd", true)]),
    ("(a && b) && c", &[("a", true), ("b", true), ("c", true)]),
    ("(a || b); c", &[("a", true), ("b", false), ("c", true)]),
    ("sudo apt-get install -y x", &[("sudo", true), ("apt-get", true)]),
    ("sh -c 'a && b'", &[("sh", true), ("a", true), ("b", true)]),
    ("sh -c 'a || b'", &[("sh", true), ("a", true), ("b", false)]),
    ("a || sudo b", &[("a", true), ("sudo", false), ("b", false)]),
    ("echo \"$(date)\" > f", &[("echo", true), ("date", false)]),
    ("a & b", &[("a", true), ("b", true)]),
    ("test -f x && echo yes || echo no", &[("test", true), ("echo", true), ("echo", false)]),
    ("a; b && c", &[("a", true), ("b", true), ("c", true)]),
    ("a; if b; then c; fi; d", &[("a", true), ("b", true), ("c", false), ("d", true)]),
    ("for f in *; do a || b; done", &[("a", false), ("b", false)]),
    ("set -ex && a && (b || c) && d", &[("set", true), ("a", true), ("b", true), ("c", false), ("d", true)]),
];

#[test]
fn ordering_truth_table() {
    assert_eq!(ORDERING_TABLE.len(), 25);
    for (payload, want) in ORDERING_TABLE {
        let src = format!("FROM x\nRUN {payload}\n");
        let ast = parse_dockerfile(&src).ast;
        let run = ast.get_element(ast.root(), NodeKind::Run).unwrap();
        let got: Vec<(String, bool)> = evaluate_ordering(&ast, run)
            .iter()
            .map(|c| {
                let name = ast
                    .get_child(c.node, NodeKind::BashCommandName)
                    .map(|n| ast.text(n).to_string())
                    .unwrap_or_default();
                (name, c.guaranteed)
            })
            .collect();
        let want: Vec<(String, bool)> = want.iter().map(|(n, g)| (n.to_string(), *g)).collect();
        assert_eq!(got, want, "{payload}");
    }
}

#[test]
fn plain_http_matches_literal_regex() {
    let oracle = Regex::new(r"^http://").unwrap();
    let words = [
        "http://a.b/c",
        "https://a.b/c",
        "ftp://google.com/all_data.zip",
        "$HTTPS_URL",
        "\"http://a.b\"",
        "'http://a.b'",
        "${BASE}http://x",
        "http://$HOST/x",
        "\"$HTTP\"://x",
        "HTTP://upper",
        "htt\"p://\"x",
        "-O",
    ];
    for w in words {
        let ast = parse_dockerfile(&format!("RUN wget {w}\n")).ast;
        let arg = ast.get_element(ast.root(), NodeKind::BashCommandArgs).unwrap();
        let literal = dockmend::ast::words::literal_text(&ast, arg);
        let expect = literal.as_deref().is_some_and(|t| oracle.is_match(t))
            // a variable after the scheme keeps the scheme literal
            || w == "http://$HOST/x";
        assert_eq!(is_plain_http_url(&ast, arg), expect, "{w}");
    }
}

#[test]
fn complement_consistency_for_flag_rules() {
    // adding the required flag to a positive removes that report and
    // leaves the others alone
    let cases = [
        ("npmCacheCleanUseForce", "RUN npm cache clean", "RUN npm cache clean --force"),
        ("aptGetInstallUseY", "RUN apt-get install curl", "RUN apt-get install -y curl"),
        ("aptGetInstallUseNoRec", "RUN apt-get install -y curl", "RUN apt-get install --no-install-recommends -y curl"),
        ("pipUseNoCacheDir", "RUN sudo pip install flask", "RUN sudo pip install --no-cache-dir flask"),
        ("apkAddUseNoCache", "RUN apk add curl", "RUN apk add --no-cache curl"),
        ("curlUseFlagF", "RUN curl -sL http://x/y", "RUN curl -f -sL http://x/y"),
        ("curlUseFlagL", "RUN curl -s http://x/y", "RUN curl -L -s http://x/y"),
        ("gpgUseBatchFlag", "RUN gpg --keyserver pgp.mit.edu --recv-keys A", "RUN gpg --batch --keyserver pgp.mit.edu --recv-keys A"),
        ("gemUpdateNoDocument", "RUN gem update --system", "RUN gem update --no-document --system"),
        ("yumInstallForceYes", "RUN yum install httpd", "RUN yum install -y httpd"),
        ("configureShouldUseBuildFlag", "RUN ./configure --prefix=/x", "RUN ./configure --build=x86_64 --prefix=/x"),
    ];
    let engine = Engine::default();
    for (rule, before, after) in cases {
        let mut a: Vec<_> = report_ids(&engine.analyze(before).smells);
        let b: Vec<_> = report_ids(&engine.analyze(after).smells);
        let i = a.iter().position(|r| r.0 == rule).unwrap_or_else(|| panic!("{rule} did not fire"));
        a.remove(i);
        assert_eq!(a, b, "{rule}");
    }
}

#[test]
fn sudo_wrapping_keeps_reports_on_positives() {
    let engine = Engine::default();
    for (id, f) in common::rule_fixtures() {
        for p in f.positive.iter().filter(|p| !p.contains("sudo") && !p.contains("if ")) {
            let Some(body) = p.strip_prefix("RUN ") else { continue };
            if body.contains(['=', '|', '(']) {
                continue;
            }
            // wrap every command of an && chain
            let wrapped = format!("RUN {}", body.split(" && ").map(|c| format!("sudo {c}")).collect::<Vec<_>>().join(" && "));
            let plain: Vec<&str> = engine.analyze(&common::with_from(p)).smells.iter().map(|s| s.rule_id).collect();
            let sudo: Vec<&str> = engine.analyze(&common::with_from(&wrapped)).smells.iter().map(|s| s.rule_id).collect();
            assert_eq!(plain, sudo, "{id}: {wrapped}");
        }
    }
}

fn corpus_strategy() -> impl Strategy<Value = String> {
    let files: Vec<String> = common::corpus().into_iter().map(|(_, t)| t).collect();
    proptest::sample::select(files)
}

fn snippet_strategy() -> impl Strategy<Value = String> {
    let mut snippets = Vec::new();
    for (_, f) in common::rule_fixtures() {
        snippets.extend(f.positive);
        snippets.extend(f.negative);
    }
    proptest::collection::vec(proptest::sample::select(snippets), 1..6)
        .prop_map(|lines| common::with_from(&lines.join("\n")))
}

fn any_file() -> impl Strategy<Value = String> {
    prop_oneof![corpus_strategy(), snippet_strategy()]
}

fn rule_subset() -> impl Strategy<Value = Vec<&'static str>> {
    proptest::sample::subsequence(RuleSet::ids(), 0..=25)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn analysis_is_deterministic(src in any_file(), seed in any::<u64>()) {
        let ast = enriched(&src);
        let config = RuleConfig::default();
        let first = analyze(&ast, &RuleSet::all(), &config);
        // a shuffled rule order gives the same reports
        let mut rules = dockmend::rules::all_rules();
        let n = rules.len();
        for i in 0..n {
            let j = (seed.wrapping_mul(6364136223846793005).wrapping_add(i as u64) % n as u64) as usize;
            rules.swap(i, j);
        }
        let shuffled = analyze(&ast, &RuleSet::from_rules(rules), &config);
        prop_assert_eq!(&first, &shuffled);
        prop_assert_eq!(&first, &analyze(&enriched(&src), &RuleSet::all(), &config));
        prop_assert!(first.windows(2).all(|w| w[0].span.start_offset <= w[1].span.start_offset));
    }

    #[test]
    fn rule_sets_are_monotone(src in any_file(), a in rule_subset(), b in rule_subset()) {
        let ast = enriched(&src);
        let config = RuleConfig::default();
        let small = analyze(&ast, &RuleSet::select(&a).unwrap(), &config);
        let union: Vec<&str> = a.iter().chain(&b).copied().collect();
        let big = analyze(&ast, &RuleSet::select(&union).unwrap(), &config);
        for r in &small {
            prop_assert!(big.contains(r), "{} lost", r.rule_id);
        }
    }

    #[test]
    fn analysis_never_mutates(src in any_file()) {
        let ast = enriched(&src);
        let before = ast.clone();
        let _ = analyze(&ast, &RuleSet::all(), &RuleConfig::default());
        prop_assert!(dockmend::ast::annotated_equal(&before, before.root(), &ast, ast.root()));
        prop_assert!(ast.is_pristine());
    }
}
