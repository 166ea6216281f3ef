//! Line-oriented text formats: model library, scenario, trace, heat-map
//! report and context lists. `#` starts a comment; blank lines are ignored.

mod contexts;
mod library;
mod scenario;
mod trace;

use thiserror::Error;

pub use contexts::{parse_contexts, write_contexts};
pub use library::{parse_library, write_library, Library};
pub use scenario::{parse_scenario, write_scenario};
pub use trace::{heatmap_from_rows, read_heatmap_report, read_trace, write_heatmap_report, write_trace, TraceRow, TRACE_COLUMNS};

#[derive(Debug, Error, Clone, PartialEq)]
#[error("line {line}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub message: String,
}

impl ParseError {
    pub fn new(line: usize, message: impl Into<String>) -> Self {
        ParseError {
            line,
            message: message.into(),
        }
    }
}

/// Non-empty lines with comments stripped, numbered from 1.
pub(crate) fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(i, raw)| {
        let line = raw.split('#').next().unwrap_or("").trim();
        (!line.is_empty()).then_some((i + 1, line))
    })
}

/// `key=value` arguments of one line.
pub(crate) struct Args<'a> {
    line: usize,
    pairs: Vec<(&'a str, &'a str)>,
}

impl<'a> Args<'a> {
    pub(crate) fn parse(line: usize, tokens: impl Iterator<Item = &'a str>) -> Result<Self, ParseError> {
        let mut pairs = Vec::new();
        for tok in tokens {
            let (k, v) = tok
                .split_once('=')
                .ok_or_else(|| ParseError::new(line, format!("expected key=value, got `{tok}`")))?;
            if pairs.iter().any(|(pk, _)| *pk == k) {
                return Err(ParseError::new(line, format!("`{k}` given twice")));
            }
            pairs.push((k, v));
        }
        Ok(Args { line, pairs })
    }

    pub(crate) fn pairs(&self) -> &[(&'a str, &'a str)] {
        &self.pairs
    }

    pub(crate) fn opt<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>, ParseError> {
        match self.pairs.iter().find(|(k, _)| *k == key) {
            None => Ok(None),
            Some((_, v)) => v
                .parse()
                .map(Some)
                .map_err(|_| ParseError::new(self.line, format!("bad value `{v}` for `{key}`"))),
        }
    }

    pub(crate) fn req<T: std::str::FromStr>(&self, key: &str) -> Result<T, ParseError> {
        self.opt(key)?
            .ok_or_else(|| ParseError::new(self.line, format!("missing `{key}=`")))
    }

    /// Rejects keys outside `allowed`.
    pub(crate) fn only(&self, allowed: &[&str]) -> Result<(), ParseError> {
        match self.pairs.iter().find(|(k, _)| !allowed.contains(k)) {
            Some((k, _)) => Err(ParseError::new(self.line, format!("unknown key `{k}`"))),
            None => Ok(()),
        }
    }
}
