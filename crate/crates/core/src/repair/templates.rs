//! Per-rule repair templates.

use serde::Serialize;

use crate::ast::{Ast, NodeId};
use crate::rules::{asc_files, mkdir_usr_src_paths, mktemp_variable, tar_archive};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "camelCase")]
pub enum ActionKind {
    InsertFlag,
    AppendCleanupCommand,
    InsertCommandAfter,
    RewriteLiteral,
    MergeIntoSequence,
}

/// Shell text computed from the trigger command; `None` when it cannot be
/// built from literal operands.
pub type CommandFn = fn(&Ast, NodeId) -> Option<String>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rewrite {
    /// `http://` becomes `https://` in every offending URL.
    HttpsScheme,
    /// One space between hash and file name becomes two.
    DoubleSpace,
    /// The keyserver host is swapped for the configured one.
    KeyserverHost,
}

#[derive(Clone, Copy)]
pub enum Action {
    InsertFlag(&'static str),
    AppendCleanupCommand(CommandFn),
    InsertCommandAfter(CommandFn),
    RewriteLiteral(Rewrite),
    /// Prepends the given command, joined with `&&`.
    MergeIntoSequence(&'static str),
}

impl Action {
    pub fn kind(&self) -> ActionKind {
        match self {
            Action::InsertFlag(_) => ActionKind::InsertFlag,
            Action::AppendCleanupCommand(_) => ActionKind::AppendCleanupCommand,
            Action::InsertCommandAfter(_) => ActionKind::InsertCommandAfter,
            Action::RewriteLiteral(_) => ActionKind::RewriteLiteral,
            Action::MergeIntoSequence(_) => ActionKind::MergeIntoSequence,
        }
    }
}

impl std::fmt::Debug for Action {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Action::InsertFlag(flag) => f.debug_tuple("InsertFlag").field(flag).finish(),
            Action::RewriteLiteral(r) => f.debug_tuple("RewriteLiteral").field(r).finish(),
            Action::MergeIntoSequence(c) => f.debug_tuple("MergeIntoSequence").field(c).finish(),
            other => write!(f, "{:?}", other.kind()),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct RepairTemplate {
    pub rule_id: &'static str,
    pub action: Action,
}

/// Flag added by `configureShouldUseBuildFlag`.
pub const CONFIGURE_BUILD_FLAG: &str =
    "--build=\"$(dpkg-architecture --query DEB_BUILD_GNU_TYPE)\"";

fn t(rule_id: &'static str, action: Action) -> RepairTemplate {
    RepairTemplate { rule_id, action }
}

/// One template per catalog rule.
pub fn templates() -> Vec<RepairTemplate> {
    use Action::*;
    vec![
        t("aptGetInstallUseNoRec", InsertFlag("--no-install-recommends")),
        t(
            "aptGetInstallThenRmAptLists",
            AppendCleanupCommand(|_, _| Some("rm -rf /var/lib/apt/lists/*".into())),
        ),
        t("curlUseFlagF", InsertFlag("-f")),
        t("curlUseFlagL", InsertFlag("-L")),
        t("pipUseNoCacheDir", InsertFlag("--no-cache-dir")),
        t("gpgUseBatchFlag", InsertFlag("--batch")),
        t("aptGetUpdatePrecedesInstall", MergeIntoSequence("apt-get update")),
        t(
            "npmCacheCleanAfterInstall",
            AppendCleanupCommand(|_, _| Some("npm cache clean --force".into())),
        ),
        t(
            "yarnCacheCleanAfterInstall",
            AppendCleanupCommand(|_, _| Some("yarn cache clean".into())),
        ),
        t(
            "yumInstallRmVarCacheYum",
            AppendCleanupCommand(|_, _| Some("rm -rf /var/cache/yum".into())),
        ),
        t("curlUseHttpsUrl", RewriteLiteral(Rewrite::HttpsScheme)),
        t("wgetUseHttpsUrl", RewriteLiteral(Rewrite::HttpsScheme)),
        t("apkAddUseNoCache", InsertFlag("--no-cache")),
        t("configureShouldUseBuildFlag", InsertFlag(CONFIGURE_BUILD_FLAG)),
        t(
            "tarSomethingRmTheSomething",
            InsertCommandAfter(|ast, cmd| {
                let (archive, _) = tar_archive(ast, cmd)?;
                Some(format!("rm {}", quote(&archive)?))
            }),
        ),
        t("gpgUseHaPools", RewriteLiteral(Rewrite::KeyserverHost)),
        t(
            "mkdirUsrSrcThenRemove",
            AppendCleanupCommand(|ast, cmd| rm_paths("rm -rf", &mkdir_usr_src_paths(ast, cmd))),
        ),
        t("aptGetInstallUseY", InsertFlag("-y")),
        t("npmCacheCleanUseForce", InsertFlag("--force")),
        t(
            "rmRecursiveAfterMktempD",
            AppendCleanupCommand(|ast, cmd| {
                mktemp_variable(ast, cmd).map(|var| format!("rm -rf \"${var}\""))
            }),
        ),
        t("sha256sumEchoOneSpaces", RewriteLiteral(Rewrite::DoubleSpace)),
        t(
            "gemUpdateSystemRmRootGem",
            AppendCleanupCommand(|_, _| Some("rm -rf /root/.gem".into())),
        ),
        t("gemUpdateNoDocument", InsertFlag("--no-document")),
        t(
            "gpgVerifyAscRmAsc",
            AppendCleanupCommand(|ast, cmd| rm_paths("rm", &asc_files(ast, cmd))),
        ),
        t("yumInstallForceYes", InsertFlag("-y")),
    ]
}

pub fn template(rule_id: &str) -> Option<RepairTemplate> {
    templates().into_iter().find(|t| t.rule_id == rule_id)
}

/// `word` as a single shell word; plain words stay unquoted.
pub(crate) fn quote(word: &str) -> Option<String> {
    let plain = !word.is_empty()
        && word
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || "_@%+=:,./-".contains(c));
    if plain {
        return Some(word.to_string());
    }
    shlex::try_quote(word).ok().map(|q| q.into_owned())
}

fn rm_paths(rm: &str, paths: &[String]) -> Option<String> {
    if paths.is_empty() {
        return None;
    }
    let mut out = rm.to_string();
    for p in paths {
        out.push(' ');
        out.push_str(&quote(p)?);
    }
    Some(out)
}

/// `value` with its host replaced by `host`, keeping scheme, port and path.
pub fn swap_host(value: &str, host: &str) -> String {
    let start = value.find("://").map_or(0, |i| i + 3);
    let rest = &value[start..];
    let end = rest.find([':', '/']).unwrap_or(rest.len());
    format!("{}{}{}", &value[..start], host, &rest[end..])
}
