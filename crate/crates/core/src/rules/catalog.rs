//! The rule catalog and the helpers its checks (and the repair templates)
//! share.

use crate::ast::words::{literal_prefix, literal_text, word_segments};
use crate::ast::{Ast, NodeId, NodeKind, ValueMatcher};
use crate::q;

use super::{Check, CheckContext, Consequent, SmellRule};

fn rule(id: &'static str, trigger: crate::ast::QueryPattern, check: Check, message: &'static str) -> SmellRule {
    SmellRule {
        id,
        trigger,
        check,
        message,
        repairable: true,
    }
}

fn needs_flag(id: &'static str, trigger: &str, flag: &str, message: &'static str) -> SmellRule {
    rule(
        id,
        q!(trigger),
        Check::Consequent(Consequent::in_node(q!(flag))),
        message,
    )
}

fn removes(path: &str) -> Consequent {
    Consequent::after(q!("RM", ValueMatcher::Covers(path.to_string())))
}

/// All 25 rules, in a fixed order.
pub fn all_rules() -> Vec<SmellRule> {
    vec![
        needs_flag(
            "aptGetInstallUseNoRec",
            "APT-GET-INSTALL",
            "APT-GET-INSTALL-NO-RECOMMENDS-FLAG",
            "apt-get install should use --no-install-recommends",
        ),
        rule(
            "aptGetInstallThenRmAptLists",
            q!("APT-GET-INSTALL"),
            Check::Consequent(removes("/var/lib/apt/lists")),
            "apt-get install should be followed by rm -rf /var/lib/apt/lists/*",
        ),
        needs_flag(
            "curlUseFlagF",
            "CURL",
            "CURL-FAIL-FLAG",
            "curl should use -f to fail on HTTP errors",
        ),
        needs_flag(
            "curlUseFlagL",
            "CURL",
            "CURL-LOCATION-FLAG",
            "curl should use -L to follow redirects",
        ),
        needs_flag(
            "pipUseNoCacheDir",
            "PIP-INSTALL",
            "PIP-INSTALL-NO-CACHE-DIR-FLAG",
            "pip install should use --no-cache-dir",
        ),
        needs_flag(
            "gpgUseBatchFlag",
            "GPG",
            "GPG-BATCH-FLAG",
            "gpg should use --batch",
        ),
        rule(
            "aptGetUpdatePrecedesInstall",
            q!("APT-GET-INSTALL"),
            Check::Consequent(Consequent::before(q!("APT-GET-UPDATE"))),
            "apt-get update should run before apt-get install in the same RUN",
        ),
        rule(
            "npmCacheCleanAfterInstall",
            q!("NPM-INSTALL"),
            Check::Consequent(Consequent::after(q!("NPM-CACHE-CLEAN"))),
            "npm install should be followed by npm cache clean --force",
        ),
        rule(
            "yarnCacheCleanAfterInstall",
            q!("YARN-INSTALL"),
            Check::Consequent(Consequent::after(q!("YARN-CACHE-CLEAN"))),
            "yarn install should be followed by yarn cache clean",
        ),
        rule(
            "yumInstallRmVarCacheYum",
            q!("YUM-INSTALL"),
            Check::Consequent(removes("/var/cache/yum")),
            "yum install should be followed by rm -rf /var/cache/yum",
        ),
        rule(
            "curlUseHttpsUrl",
            q!("CURL"),
            Check::Predicate(plain_http_args),
            "curl should download over https",
        ),
        rule(
            "wgetUseHttpsUrl",
            q!("WGET"),
            Check::Predicate(plain_http_args),
            "wget should download over https",
        ),
        needs_flag(
            "apkAddUseNoCache",
            "APK-ADD",
            "APK-ADD-NO-CACHE-FLAG",
            "apk add should use --no-cache",
        ),
        needs_flag(
            "configureShouldUseBuildFlag",
            "CONFIGURE",
            "CONFIGURE-BUILD-FLAG",
            "./configure should be given --build",
        ),
        rule(
            "tarSomethingRmTheSomething",
            q!("TAR", "TAR-EXTRACT-FLAG"),
            Check::Derived(|ast, cmd| {
                tar_archive(ast, cmd)
                    .map(|(archive, _)| vec![removes(&archive)])
                    .unwrap_or_default()
            }),
            "an extracted archive should be removed afterwards",
        ),
        rule(
            "gpgUseHaPools",
            q!("GPG", "GPG-KEYSERVER-FLAG"),
            Check::Predicate(|ctx, cmd| {
                keyserver_values(ctx.ast, cmd)
                    .into_iter()
                    .filter(|(_, value, _)| keyserver_host(value) != ctx.config.keyserver())
                    .map(|(node, _, _)| node)
                    .collect()
            }),
            "gpg should use the high-availability keyserver pool",
        ),
        rule(
            "mkdirUsrSrcThenRemove",
            q!("MKDIR"),
            Check::Derived(|ast, cmd| {
                mkdir_usr_src_paths(ast, cmd)
                    .iter()
                    .map(|p| removes(p))
                    .collect()
            }),
            "directories created under /usr/src should be removed afterwards",
        ),
        needs_flag(
            "aptGetInstallUseY",
            "APT-GET-INSTALL",
            "APT-GET-INSTALL-Y-FLAG",
            "apt-get install should use -y",
        ),
        needs_flag(
            "npmCacheCleanUseForce",
            "NPM-CACHE-CLEAN",
            "NPM-F-FORCE",
            "npm cache clean should use --force",
        ),
        rule(
            "rmRecursiveAfterMktempD",
            q!("MKTEMP", "MKTEMP-DIRECTORY-FLAG"),
            Check::Derived(|ast, cmd| {
                mktemp_variable(ast, cmd)
                    .map(|var| {
                        vec![Consequent::after(q!(
                            "RM",
                            "RM-RECURSIVE-FLAG",
                            ValueMatcher::Variable(var)
                        ))]
                    })
                    .unwrap_or_default()
            }),
            "a directory created with mktemp -d should be removed with rm -r",
        ),
        rule(
            "sha256sumEchoOneSpaces",
            q!("SHA256SUM", "SHA256SUM-CHECK-FLAG"),
            Check::Predicate(|ctx, cmd| {
                sha256_single_space(ctx.ast, cmd)
                    .map(|(arg, _, _)| vec![arg])
                    .unwrap_or_default()
            }),
            "sha256sum -c expects two spaces between hash and file name",
        ),
        rule(
            "gemUpdateSystemRmRootGem",
            q!("GEM-UPDATE", "GEM-UPDATE-SYSTEM-FLAG"),
            Check::Consequent(removes("/root/.gem")),
            "gem update --system should be followed by rm -rf /root/.gem",
        ),
        needs_flag(
            "gemUpdateNoDocument",
            "GEM-UPDATE",
            "GEM-UPDATE-NO-DOCUMENT-FLAG",
            "gem update should use --no-document",
        ),
        rule(
            "gpgVerifyAscRmAsc",
            q!("GPG", "GPG-VERIFY-FLAG"),
            Check::Derived(|ast, cmd| asc_files(ast, cmd).iter().map(|p| removes(p)).collect()),
            "a verified .asc signature should be removed afterwards",
        ),
        needs_flag(
            "yumInstallForceYes",
            "YUM-INSTALL",
            "YUM-INSTALL-Y-FLAG",
            "yum install should use -y",
        ),
    ]
}

fn args(ast: &Ast, cmd: NodeId) -> Vec<NodeId> {
    ast.get_children(cmd, NodeKind::BashCommandArgs)
}

/// True iff the word's literal text starts with `http://` before any
/// variable or substitution.
pub fn is_plain_http_url(ast: &Ast, arg: NodeId) -> bool {
    literal_prefix(ast, arg).0.starts_with("http://")
}

/// URL arguments of `cmd` that use plain http.
pub(crate) fn plain_http_args(ctx: &CheckContext<'_>, cmd: NodeId) -> Vec<NodeId> {
    args(ctx.ast, cmd)
        .into_iter()
        .filter(|a| ctx.ast.has_annotation(*a, "URL") && is_plain_http_url(ctx.ast, *a))
        .collect()
}

/// Literal archive operand of an extracting `tar`, with the word holding
/// it. `None` for stdin (`-`) and non-literal operands.
pub(crate) fn tar_archive(ast: &Ast, cmd: NodeId) -> Option<(String, NodeId)> {
    for a in args(ast, cmd) {
        let found = if ast.has_annotation(a, "ARCHIVE") {
            literal_text(ast, a)
        } else if ast.has_annotation(a, "TAR-FILE-FLAG") {
            match literal_text(ast, a)
                .filter(|t| t.starts_with("--"))
                .and_then(|t| t.split_once('=').map(|(_, v)| v.to_string()))
            {
                Some(v) => Some(v),
                None => continue,
            }
        } else {
            continue;
        };
        return found.filter(|f| !f.is_empty() && f != "-").map(|f| (f, a));
    }
    None
}

/// Host part of a keyserver address (`hkp://host:80/` gives `host`).
pub fn keyserver_host(value: &str) -> &str {
    let rest = value.split_once("://").map_or(value, |(_, r)| r);
    let rest = rest.split('/').next().unwrap_or(rest);
    rest.split(':').next().unwrap_or(rest)
}

/// Literal keyserver values of a `gpg` command: (word, value, offset of the
/// value inside the word's text).
pub(crate) fn keyserver_values(ast: &Ast, cmd: NodeId) -> Vec<(NodeId, String, usize)> {
    let mut out = Vec::new();
    for a in args(ast, cmd) {
        let Some(text) = literal_text(ast, a) else {
            continue;
        };
        if ast.has_annotation(a, "KEYSERVER") {
            out.push((a, text, 0));
        } else if let Some(v) = text.strip_prefix("--keyserver=") {
            out.push((a, v.to_string(), "--keyserver=".len()));
        }
    }
    out
}

/// Literal directories below `/usr/src` that `mkdir` creates.
pub(crate) fn mkdir_usr_src_paths(ast: &Ast, cmd: NodeId) -> Vec<String> {
    args(ast, cmd)
        .into_iter()
        .filter(|a| ast.has_annotation(*a, "PATH"))
        .filter_map(|a| literal_text(ast, a))
        .filter(|p| {
            p.strip_prefix("/usr/src/")
                .is_some_and(|rest| !rest.trim_matches('/').is_empty())
        })
        .collect()
}

/// Literal `.asc` files that `gpg --verify` checks.
pub(crate) fn asc_files(ast: &Ast, cmd: NodeId) -> Vec<String> {
    args(ast, cmd)
        .into_iter()
        .filter(|a| ast.has_annotation(*a, "ARGUMENT"))
        .filter_map(|a| literal_text(ast, a))
        .filter(|p| p.ends_with(".asc") && p.len() > 4)
        .collect()
}

/// Variable that receives the directory of `X=$(mktemp -d)`.
pub(crate) fn mktemp_variable(ast: &Ast, cmd: NodeId) -> Option<String> {
    let subst = ast.get_parent(cmd, NodeKind::BashCommandSubstitution)?;
    // the substitution must be (part of) the value of an assignment
    let mut n = ast.parent(subst)?;
    while ast.kind(n) == NodeKind::BashQuotedString {
        n = ast.parent(n)?;
    }
    if ast.kind(n) == NodeKind::BashCommandArgs {
        return declared_variable(ast, n);
    }
    if ast.kind(n) != NodeKind::BashVariable {
        return None;
    }
    let name = ast.value(n)?;
    if name.starts_with('$') || name.ends_with('+') {
        return None;
    }
    Some(name.to_string())
}

/// `NAME` of an `export NAME=...` (or `local`, `declare`, `readonly`)
/// argument.
fn declared_variable(ast: &Ast, arg: NodeId) -> Option<String> {
    let cmd = ast.parent(arg)?;
    let name = ast.get_child(cmd, NodeKind::BashCommandName)?;
    if !matches!(ast.text(name), "export" | "local" | "declare" | "readonly") {
        return None;
    }
    let (prefix, _) = literal_prefix(ast, arg);
    let (var, _) = prefix.split_once('=')?;
    let mut chars = var.chars();
    let first = chars.next()?;
    if !(first.is_ascii_alphabetic() || first == '_') || !chars.all(|c| c.is_ascii_alphanumeric() || c == '_') {
        return None;
    }
    Some(var.to_string())
}

/// For `echo "<hash> <file>" | sha256sum -c`: the echo argument, the
/// literal leaf holding the single space and the byte offset of that space
/// in the leaf's value.
pub(crate) fn sha256_single_space(ast: &Ast, cmd: NodeId) -> Option<(NodeId, NodeId, usize)> {
    // `echo ... | sudo sha256sum -c`: the pipe sits next to the wrapper
    let mut outer = cmd;
    while let Some(p) = ast.parent(outer).filter(|p| ast.kind(*p) == NodeKind::BashCommand) {
        outer = p;
    }
    let pipe = ast.prev_sibling(outer)?;
    if ast.kind(pipe) != NodeKind::BashPipe {
        return None;
    }
    let echo = ast.prev_sibling(pipe)?;
    if !ast.has_annotation(echo, "ECHO") {
        return None;
    }
    let words: Vec<NodeId> = args(ast, echo)
        .into_iter()
        .filter(|a| ast.has_annotation(*a, "ARGUMENT"))
        .collect();
    let [arg] = words[..] else { return None };
    let segments = word_segments(ast, arg);
    let mut hash_seen = false;
    for (i, seg) in segments.iter().enumerate() {
        let Some((_, leaf)) = seg else {
            hash_seen = true;
            continue;
        };
        let raw = ast.value(*leaf).unwrap_or("");
        let Some(space) = raw.find(' ') else {
            if !raw.bytes().all(|b| b.is_ascii_hexdigit()) {
                return None;
            }
            hash_seen |= !raw.is_empty();
            continue;
        };
        if !raw[..space].bytes().all(|b| b.is_ascii_hexdigit()) || !(hash_seen || space > 0) {
            return None;
        }
        let after = &raw[space + 1..];
        let next = match after.chars().next() {
            Some(c) => Some(c),
            // the file name may start in the next segment
            None => match segments.get(i + 1) {
                Some(None) => Some('$'),
                Some(Some((text, _))) => text.chars().next(),
                None => None,
            },
        };
        return match next {
            Some(c) if c != ' ' && c != '*' => Some((arg, *leaf, space)),
            _ => None,
        };
    }
    None
}
