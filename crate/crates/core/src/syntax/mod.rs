//! Text formats: synthesis problems (`.inv`) and concrete loops (`.loop`).

mod loopfile;
mod spec;

pub use loopfile::ParsedLoop;
pub use spec::SpecFile;

/// A syntax error; line and column are 1-based, `0` when unknown.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub struct SyntaxError {
    pub line: usize,
    pub col: usize,
    pub msg: String,
}

impl SyntaxError {
    pub fn new(line: usize, col: usize, msg: impl Into<String>) -> Self {
        SyntaxError {
            line,
            col,
            msg: msg.into(),
        }
    }
}

impl std::fmt::Display for SyntaxError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match (self.line, self.col) {
            (0, _) => f.write_str(&self.msg),
            (l, 0) => write!(f, "line {l}: {}", self.msg),
            (l, c) => write!(f, "line {l}, column {c}: {}", self.msg),
        }
    }
}

/// Collapses whitespace runs to single spaces.
pub fn normalize_ws(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}
