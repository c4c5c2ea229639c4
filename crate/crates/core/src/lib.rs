//! Dockerfile smell detection and format-preserving repair.

pub mod ast;
pub mod enrich;
pub mod parser;
pub mod pipeline;
pub mod printer;
pub mod repair;
pub mod rules;
