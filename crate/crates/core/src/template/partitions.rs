use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use super::TemplateError;

/// Nonincreasing positive parts; interpreted as root multiplicities.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(transparent)]
pub struct IntegerPartition(Vec<u32>);

impl IntegerPartition {
    pub fn new(mut parts: Vec<u32>) -> Result<Self, TemplateError> {
        if parts.is_empty() || parts.contains(&0) {
            return Err(TemplateError::BadPartition(format!("{parts:?}")));
        }
        parts.sort_unstable_by(|a, b| b.cmp(a));
        Ok(IntegerPartition(parts))
    }

    pub fn parts(&self) -> &[u32] {
        &self.0
    }

    pub fn total(&self) -> u32 {
        self.0.iter().sum()
    }

    /// Number of distinct roots.
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Display for IntegerPartition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(u32::to_string).collect();
        write!(f, "[{}]", parts.join(","))
    }
}

/// Accepts `[2,1]`, `2,1`, `2+1` or `2 1`.
impl FromStr for IntegerPartition {
    type Err = TemplateError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let inner = s.trim().trim_start_matches('[').trim_end_matches(']');
        let parts = inner
            .split(|c: char| c == ',' || c == '+' || c.is_whitespace())
            .filter(|t| !t.is_empty())
            .map(|t| t.parse::<u32>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|_| TemplateError::BadPartition(s.to_string()))?;
        IntegerPartition::new(parts)
    }
}

/// All partitions of `s`, starting with `[s]` and continuing in descending
/// lexicographic order.
pub fn int_partitions(s: u32) -> Result<Vec<IntegerPartition>, TemplateError> {
    if s == 0 {
        return Err(TemplateError::BadSize(0));
    }
    let mut out = Vec::new();
    let mut prefix = Vec::new();
    descend(s, s, &mut prefix, &mut out);
    Ok(out)
}

fn descend(rest: u32, max: u32, prefix: &mut Vec<u32>, out: &mut Vec<IntegerPartition>) {
    if rest == 0 {
        out.push(IntegerPartition(prefix.clone()));
        return;
    }
    for first in (1..=rest.min(max)).rev() {
        prefix.push(first);
        descend(rest - first, first, prefix, out);
        prefix.pop();
    }
}
