use std::fmt;

use serde::Serialize;

/// Every node of the unified Dockerfile + shell tree carries exactly one kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum NodeKind {
    DockerFile,
    From,
    Run,
    Copy,
    Add,
    Env,
    Arg,
    Workdir,
    Expose,
    Entrypoint,
    Cmd,
    Label,
    User,
    Volume,
    Shell,
    Healthcheck,
    Onbuild,
    Stopsignal,
    Comment,
    ParserDirective,
    BashScript,
    BashStatementList,
    BashCommand,
    BashCommandName,
    BashCommandArgs,
    BashLiteral,
    BashVariable,
    BashCommandSubstitution,
    BashQuotedString,
    BashOperatorAnd,
    BashOperatorOr,
    BashOperatorSemicolon,
    BashPipe,
    BashRedirect,
    BashSubshell,
    BashIf,
    BashIfCondition,
    BashIfBody,
    BashElseBody,
    BashFor,
    BashOpaque,
}

impl NodeKind {
    pub const ALL: [NodeKind; 41] = [
        NodeKind::DockerFile,
        NodeKind::From,
        NodeKind::Run,
        NodeKind::Copy,
        NodeKind::Add,
        NodeKind::Env,
        NodeKind::Arg,
        NodeKind::Workdir,
        NodeKind::Expose,
        NodeKind::Entrypoint,
        NodeKind::Cmd,
        NodeKind::Label,
        NodeKind::User,
        NodeKind::Volume,
        NodeKind::Shell,
        NodeKind::Healthcheck,
        NodeKind::Onbuild,
        NodeKind::Stopsignal,
        NodeKind::Comment,
        NodeKind::ParserDirective,
        NodeKind::BashScript,
        NodeKind::BashStatementList,
        NodeKind::BashCommand,
        NodeKind::BashCommandName,
        NodeKind::BashCommandArgs,
        NodeKind::BashLiteral,
        NodeKind::BashVariable,
        NodeKind::BashCommandSubstitution,
        NodeKind::BashQuotedString,
        NodeKind::BashOperatorAnd,
        NodeKind::BashOperatorOr,
        NodeKind::BashOperatorSemicolon,
        NodeKind::BashPipe,
        NodeKind::BashRedirect,
        NodeKind::BashSubshell,
        NodeKind::BashIf,
        NodeKind::BashIfCondition,
        NodeKind::BashIfBody,
        NodeKind::BashElseBody,
        NodeKind::BashFor,
        NodeKind::BashOpaque,
    ];

    /// Instruction kind for a Dockerfile keyword (case-insensitive).
    pub fn from_keyword(keyword: &str) -> Option<NodeKind> {
        let kind = match keyword.to_ascii_uppercase().as_str() {
            "FROM" => NodeKind::From,
            "RUN" => NodeKind::Run,
            "COPY" => NodeKind::Copy,
            "ADD" => NodeKind::Add,
            "ENV" => NodeKind::Env,
            "ARG" => NodeKind::Arg,
            "WORKDIR" => NodeKind::Workdir,
            "EXPOSE" => NodeKind::Expose,
            "ENTRYPOINT" => NodeKind::Entrypoint,
            "CMD" => NodeKind::Cmd,
            "LABEL" => NodeKind::Label,
            "USER" => NodeKind::User,
            "VOLUME" => NodeKind::Volume,
            "SHELL" => NodeKind::Shell,
            "HEALTHCHECK" => NodeKind::Healthcheck,
            "ONBUILD" => NodeKind::Onbuild,
            "STOPSIGNAL" => NodeKind::Stopsignal,
            _ => return None,
        };
        Some(kind)
    }

    pub fn keyword(self) -> Option<&'static str> {
        let kw = match self {
            NodeKind::From => "FROM",
            NodeKind::Run => "RUN",
            NodeKind::Copy => "COPY",
            NodeKind::Add => "ADD",
            NodeKind::Env => "ENV",
            NodeKind::Arg => "ARG",
            NodeKind::Workdir => "WORKDIR",
            NodeKind::Expose => "EXPOSE",
            NodeKind::Entrypoint => "ENTRYPOINT",
            NodeKind::Cmd => "CMD",
            NodeKind::Label => "LABEL",
            NodeKind::User => "USER",
            NodeKind::Volume => "VOLUME",
            NodeKind::Shell => "SHELL",
            NodeKind::Healthcheck => "HEALTHCHECK",
            NodeKind::Onbuild => "ONBUILD",
            NodeKind::Stopsignal => "STOPSIGNAL",
            _ => return None,
        };
        Some(kw)
    }

    pub fn is_instruction(self) -> bool {
        self.keyword().is_some()
    }

    pub fn is_shell(self) -> bool {
        matches!(
            self,
            NodeKind::BashScript
                | NodeKind::BashStatementList
                | NodeKind::BashCommand
                | NodeKind::BashCommandName
                | NodeKind::BashCommandArgs
                | NodeKind::BashLiteral
                | NodeKind::BashVariable
                | NodeKind::BashCommandSubstitution
                | NodeKind::BashQuotedString
                | NodeKind::BashOperatorAnd
                | NodeKind::BashOperatorOr
                | NodeKind::BashOperatorSemicolon
                | NodeKind::BashPipe
                | NodeKind::BashRedirect
                | NodeKind::BashSubshell
                | NodeKind::BashIf
                | NodeKind::BashIfCondition
                | NodeKind::BashIfBody
                | NodeKind::BashElseBody
                | NodeKind::BashFor
                | NodeKind::BashOpaque
        )
    }

    pub fn is_operator(self) -> bool {
        matches!(
            self,
            NodeKind::BashOperatorAnd
                | NodeKind::BashOperatorOr
                | NodeKind::BashOperatorSemicolon
                | NodeKind::BashPipe
        )
    }

    /// Kinds whose children are the parts of one shell word.
    pub fn is_word(self) -> bool {
        matches!(
            self,
            NodeKind::BashCommandName | NodeKind::BashCommandArgs | NodeKind::BashRedirect
        )
    }
}

impl fmt::Display for NodeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}
