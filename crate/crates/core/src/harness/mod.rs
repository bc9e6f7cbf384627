//! File formats, instance generators, a brute-force oracle and the
//! experiment driver behind the `lll` command line tool.

pub mod brute;
pub mod dimacs;
pub mod edgelist;
pub mod experiment;
pub mod gen;
pub mod records;

use thiserror::Error;

use crate::apps::AppError;
use crate::csp::CspError;
use crate::lca::LcaError;
use crate::lll::LllError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HarnessError {
    #[error(transparent)]
    App(#[from] AppError),
    #[error(transparent)]
    Csp(#[from] CspError),
    #[error(transparent)]
    Lll(#[from] LllError),
    #[error(transparent)]
    Lca(#[from] LcaError),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("i/o: {0}")]
    Io(String),
    #[error("invalid configuration: {0}")]
    Config(String),
}

impl From<std::io::Error> for HarnessError {
    fn from(e: std::io::Error) -> Self {
        HarnessError::Io(e.to_string())
    }
}

pub(crate) fn parse_error(line: usize, msg: impl Into<String>) -> HarnessError {
    HarnessError::Parse { line, msg: msg.into() }
}
