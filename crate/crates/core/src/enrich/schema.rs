//! Command schemas: which flags, subcommands and argument roles a command
//! has, and the tags they map to.

use std::collections::{BTreeSet, HashMap, HashSet};

use serde::Deserialize;

use crate::ast::Annotation;

/// Role given to subcommand words such as `install` in `apt-get install`.
pub const SUBCOMMAND_ROLE: &str = "SUBCOMMAND";
/// Role given to the argument of a value-taking flag without a `value_role`.
pub const FLAG_VALUE_ROLE: &str = "FLAG-VALUE";

const BUILTIN: &str = include_str!("schemas.toml");

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlagSchema {
    /// Spellings, e.g. `["-y", "--yes", "--assume-yes"]`.
    pub names: Vec<String>,
    pub tag: String,
    #[serde(default)]
    pub takes_value: bool,
    pub value_role: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubcommandSchema {
    pub names: Vec<String>,
    pub tag: String,
    #[serde(default, rename = "flag")]
    pub flags: Vec<FlagSchema>,
    pub positional: Option<String>,
    #[serde(default, rename = "subcommand")]
    pub subcommands: Vec<SubcommandSchema>,
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CommandSchema {
    pub name: String,
    #[serde(default)]
    pub aliases: Vec<String>,
    pub tag: String,
    /// The command runs another command (`sudo`, `sh -c`).
    #[serde(default)]
    pub wrapper: bool,
    /// Single-dash flag clusters such as `-fsSL` are split into flags.
    #[serde(default)]
    pub bundling: bool,
    /// A first argument without a dash may be a flag cluster (`tar xzf`).
    #[serde(default)]
    pub old_style_bundles: bool,
    #[serde(default, rename = "flag")]
    pub flags: Vec<FlagSchema>,
    pub positional: Option<String>,
    #[serde(default, rename = "subcommand")]
    pub subcommands: Vec<SubcommandSchema>,
}

/// One level of a command line: the command itself or a subcommand.
#[derive(Debug, Clone, Copy)]
pub struct Level<'a> {
    pub tag: &'a str,
    pub flags: &'a [FlagSchema],
    pub positional: Option<&'a str>,
    pub subcommands: &'a [SubcommandSchema],
}

impl CommandSchema {
    pub fn level(&self) -> Level<'_> {
        Level {
            tag: &self.tag,
            flags: &self.flags,
            positional: self.positional.as_deref(),
            subcommands: &self.subcommands,
        }
    }

    fn visit_levels<'a>(&'a self, mut f: impl FnMut(Level<'a>)) {
        fn walk<'a>(subs: &'a [SubcommandSchema], f: &mut impl FnMut(Level<'a>)) {
            for s in subs {
                f(s.level());
                walk(&s.subcommands, f);
            }
        }
        f(self.level());
        walk(&self.subcommands, &mut f);
    }

    /// Every tag this schema can produce, roles included.
    pub fn tags(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.visit_levels(|level| {
            out.insert(level.tag.to_string());
            out.extend(level.positional.map(str::to_string));
            for flag in level.flags {
                out.insert(flag.tag.clone());
                out.extend(flag.value_role.clone());
            }
        });
        out
    }

    fn validate(&self) -> Result<(), SchemaError> {
        let mut errors = Vec::new();
        let mut flag_tags = HashSet::new();
        let invalid = |tag: &str| SchemaError::InvalidTag {
            command: self.name.clone(),
            tag: tag.to_string(),
        };
        self.visit_levels(|level| {
            let roles = level.positional.into_iter();
            for t in std::iter::once(level.tag).chain(roles) {
                if !Annotation::is_valid(t) {
                    errors.push(invalid(t));
                }
            }
            for flag in level.flags {
                for t in std::iter::once(&flag.tag).chain(&flag.value_role) {
                    if !Annotation::is_valid(t) {
                        errors.push(invalid(t));
                    }
                }
                if flag.names.iter().any(|n| !n.starts_with('-') || n.len() < 2) {
                    errors.push(SchemaError::InvalidFlagName {
                        command: self.name.clone(),
                        tag: flag.tag.clone(),
                    });
                }
                if !flag_tags.insert(flag.tag.clone()) {
                    errors.push(SchemaError::DuplicateFlagTag {
                        command: self.name.clone(),
                        tag: flag.tag.clone(),
                    });
                }
            }
        });
        errors.into_iter().next().map_or(Ok(()), Err)
    }
}

impl SubcommandSchema {
    pub fn level(&self) -> Level<'_> {
        Level {
            tag: &self.tag,
            flags: &self.flags,
            positional: self.positional.as_deref(),
            subcommands: &self.subcommands,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SchemaError {
    #[error("schema file is malformed: {0}")]
    Parse(String),
    #[error("command `{0}` is defined twice")]
    DuplicateCommand(String),
    #[error("command `{command}`: flag tag `{tag}` is used twice")]
    DuplicateFlagTag { command: String, tag: String },
    #[error("command `{command}`: `{tag}` is not a valid tag")]
    InvalidTag { command: String, tag: String },
    #[error("command `{command}`: flag `{tag}` has a name that does not start with a dash")]
    InvalidFlagName { command: String, tag: String },
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SchemaFile {
    #[serde(default, rename = "command")]
    commands: Vec<CommandSchema>,
}

/// A validated collection of schemas indexed by command name and alias.
#[derive(Debug, Clone, Default)]
pub struct SchemaSet {
    commands: Vec<CommandSchema>,
    by_name: HashMap<String, usize>,
}

impl SchemaSet {
    /// The schemas shipped with the library.
    pub fn builtin() -> SchemaSet {
        SchemaSet::from_toml(BUILTIN).expect("built-in schemas are valid")
    }

    /// Parses and validates a schema file. Names must be unique within it.
    pub fn from_toml(text: &str) -> Result<SchemaSet, SchemaError> {
        let file: SchemaFile =
            toml::from_str(text).map_err(|e| SchemaError::Parse(e.to_string()))?;
        let mut set = SchemaSet::default();
        for schema in file.commands {
            set.insert(schema, false)?;
        }
        Ok(set)
    }

    /// Adds `other`'s schemas; a schema for a name already present replaces
    /// the existing one.
    pub fn merge(&mut self, other: SchemaSet) -> Result<(), SchemaError> {
        for schema in other.commands {
            self.insert(schema, true)?;
        }
        Ok(())
    }

    fn insert(&mut self, schema: CommandSchema, replace: bool) -> Result<(), SchemaError> {
        schema.validate()?;
        let names: Vec<String> = std::iter::once(schema.name.clone())
            .chain(schema.aliases.iter().cloned())
            .collect();
        let mut seen = HashSet::new();
        for name in &names {
            if !seen.insert(name) || (!replace && self.by_name.contains_key(name)) {
                return Err(SchemaError::DuplicateCommand(name.clone()));
            }
        }
        let idx = self.commands.len();
        self.commands.push(schema);
        for name in names {
            self.by_name.insert(name, idx);
        }
        // drop schemas that lost all their names to the replacement
        if replace {
            self.compact();
        }
        Ok(())
    }

    fn compact(&mut self) {
        let live: BTreeSet<usize> = self.by_name.values().copied().collect();
        if live.len() == self.commands.len() {
            return;
        }
        let remap: HashMap<usize, usize> = live.iter().enumerate().map(|(n, o)| (*o, n)).collect();
        let mut idx = 0;
        self.commands.retain(|_| {
            let keep = live.contains(&idx);
            idx += 1;
            keep
        });
        for v in self.by_name.values_mut() {
            *v = remap[v];
        }
    }

    /// Schema for a command name; paths are reduced to their last
    /// component (`/usr/bin/apt-get`, `./configure`).
    pub fn get(&self, name: &str) -> Option<&CommandSchema> {
        let base = name.rsplit('/').next().unwrap_or(name);
        self.by_name.get(base).map(|i| &self.commands[*i])
    }

    pub fn commands(&self) -> &[CommandSchema] {
        &self.commands
    }

    pub fn len(&self) -> usize {
        self.commands.len()
    }

    pub fn is_empty(&self) -> bool {
        self.commands.is_empty()
    }

    /// The closed set of tags enrichment can produce.
    pub fn vocabulary(&self) -> BTreeSet<String> {
        let mut out: BTreeSet<String> = self.commands.iter().flat_map(|c| c.tags()).collect();
        out.insert(SUBCOMMAND_ROLE.to_string());
        out.insert(FLAG_VALUE_ROLE.to_string());
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_schemas_load() {
        let set = SchemaSet::builtin();
        for name in [
            "apt-get", "apk", "yum", "pip", "pip3", "npm", "yarn", "gem", "curl", "wget", "tar",
            "gpg", "mkdir", "rm", "cd", "mktemp", "sha256sum", "echo", "configure", "sudo", "sh",
            "bash",
        ] {
            assert!(set.get(name).is_some(), "{name}");
        }
        assert_eq!(set.get("/usr/bin/apt-get").unwrap().tag, "APT-GET");
        assert_eq!(set.get("./configure").unwrap().tag, "CONFIGURE");
        assert!(set.get("make").is_none());
    }

    #[test]
    fn vocabulary_contains_roles_and_flags() {
        let vocab = SchemaSet::builtin().vocabulary();
        for tag in [
            "APT-GET-INSTALL",
            "APT-GET-INSTALL-Y-FLAG",
            "PACKAGE",
            "URL",
            "ARCHIVE",
            "KEYSERVER",
            "NPM-CACHE-CLEAN",
            "NPM-F-FORCE",
            SUBCOMMAND_ROLE,
        ] {
            assert!(vocab.contains(tag), "{tag}");
        }
    }

    #[test]
    fn rejects_bad_schemas() {
        let dup = "[[command]]\nname='x'\ntag='X'\n[[command]]\nname='x'\ntag='Y'\n";
        assert_eq!(
            SchemaSet::from_toml(dup).unwrap_err(),
            SchemaError::DuplicateCommand("x".into())
        );
        let bad_tag = "[[command]]\nname='x'\ntag='lower'\n";
        assert!(matches!(
            SchemaSet::from_toml(bad_tag),
            Err(SchemaError::InvalidTag { .. })
        ));
        let dup_flag = "[[command]]\nname='x'\ntag='X'\n[[command.flag]]\nnames=['-a']\ntag='F'\n[[command.flag]]\nnames=['-b']\ntag='F'\n";
        assert!(matches!(
            SchemaSet::from_toml(dup_flag),
            Err(SchemaError::DuplicateFlagTag { .. })
        ));
        assert!(matches!(
            SchemaSet::from_toml("[[command]]\nname='x'\n"),
            Err(SchemaError::Parse(_))
        ));
        let typo = "[[command]]\nname='x'\ntag='X'\nflgs=[]\n";
        assert!(SchemaSet::from_toml(typo).is_err());
    }

    #[test]
    fn merge_overrides_and_extends() {
        let mut set = SchemaSet::builtin();
        let before = set.len();
        let user = SchemaSet::from_toml(
            "[[command]]\nname='make'\ntag='MAKE'\n[[command]]\nname='curl'\ntag='MY-CURL'\n",
        )
        .unwrap();
        set.merge(user).unwrap();
        assert_eq!(set.len(), before + 1);
        assert_eq!(set.get("curl").unwrap().tag, "MY-CURL");
        assert_eq!(set.get("make").unwrap().tag, "MAKE");
    }
}
