use std::fmt;

use serde::{Deserialize, Serialize};

/// Outcome of a check. Samplers can only falsify, so their negative outcome
/// is `NoViolationFound` rather than `Pass`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Pass,
    Fail,
    NoViolationFound,
    Inconclusive,
}

impl Verdict {
    /// `Fail` is the only outcome that refutes the property.
    pub fn is_failure(self) -> bool {
        self == Verdict::Fail
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::NoViolationFound => "no-violation-found",
            Verdict::Inconclusive => "inconclusive",
        })
    }
}
