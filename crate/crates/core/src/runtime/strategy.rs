use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// The nine alternative-execution strategies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum StrategyId {
    S1a,
    S1b,
    S2a,
    S2b,
    S3,
    S4a,
    S4b,
    S4c,
    S4d,
}

impl StrategyId {
    pub const ALL: [StrategyId; 9] = [
        StrategyId::S1a,
        StrategyId::S1b,
        StrategyId::S2a,
        StrategyId::S2b,
        StrategyId::S3,
        StrategyId::S4a,
        StrategyId::S4b,
        StrategyId::S4c,
        StrategyId::S4d,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            StrategyId::S1a => "S1a",
            StrategyId::S1b => "S1b",
            StrategyId::S2a => "S2a",
            StrategyId::S2b => "S2b",
            StrategyId::S3 => "S3",
            StrategyId::S4a => "S4a",
            StrategyId::S4b => "S4b",
            StrategyId::S4c => "S4c",
            StrategyId::S4d => "S4d",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            StrategyId::S1a => "local injection of an existing value",
            StrategyId::S1b => "global injection of an existing value",
            StrategyId::S2a => "local injection of a new value",
            StrategyId::S2b => "global injection of a new value",
            StrategyId::S3 => "skip statement",
            StrategyId::S4a => "return null to caller",
            StrategyId::S4b => "return an existing value to caller",
            StrategyId::S4c => "return a new value to caller",
            StrategyId::S4d => "return to caller (void method)",
        }
    }

    /// Takes a pool-entry name parameter.
    pub fn reuses_value(self) -> bool {
        matches!(self, StrategyId::S1a | StrategyId::S1b | StrategyId::S4b)
    }

    /// Takes a constructible type parameter.
    pub fn creates_value(self) -> bool {
        matches!(self, StrategyId::S2a | StrategyId::S2b | StrategyId::S4c)
    }

    pub fn is_method_skip(self) -> bool {
        matches!(self, StrategyId::S4a | StrategyId::S4b | StrategyId::S4c | StrategyId::S4d)
    }

    /// Rebinds the null variable to the replacement.
    pub fn is_global(self) -> bool {
        matches!(self, StrategyId::S1b | StrategyId::S2b)
    }
}

impl fmt::Display for StrategyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown strategy `{0}` (expected one of S1a S1b S2a S2b S3 S4a S4b S4c S4d)")]
pub struct UnknownStrategy(pub String);

impl FromStr for StrategyId {
    type Err = UnknownStrategy;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        StrategyId::ALL.into_iter().find(|id| id.as_str() == s).ok_or_else(|| UnknownStrategy(s.to_string()))
    }
}

/// A strategy with its parameter: a pool entry name for S1a/S1b/S4b or a
/// type name for S2a/S2b/S4c.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Strategy {
    pub id: StrategyId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parameter: Option<String>,
}

impl Strategy {
    pub fn new(id: StrategyId, parameter: Option<String>) -> Self {
        Strategy { id, parameter }
    }

    pub fn bare(id: StrategyId) -> Self {
        Strategy { id, parameter: None }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.parameter {
            Some(p) => write!(f, "{}({p})", self.id),
            None => write!(f, "{}", self.id),
        }
    }
}

/// Classification of one fixed-strategy run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Outcome {
    /// Repaired: normal exit, assertions pass.
    OK,
    /// No compatible value in the pool.
    NoV,
    /// No instantiable type.
    NoI,
    /// Incompatible with the method's return type.
    RI,
    /// The statement cannot be skipped.
    US,
    /// A later NullPointerException.
    NPE,
    /// Another exception later.
    Ex,
}

impl Outcome {
    pub const ALL: [Outcome; 7] =
        [Outcome::OK, Outcome::NoV, Outcome::NoI, Outcome::RI, Outcome::US, Outcome::NPE, Outcome::Ex];

    pub fn as_str(self) -> &'static str {
        match self {
            Outcome::OK => "OK",
            Outcome::NoV => "NoV",
            Outcome::NoI => "NoI",
            Outcome::RI => "RI",
            Outcome::US => "US",
            Outcome::NPE => "NPE",
            Outcome::Ex => "Ex",
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Outcome {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Outcome::ALL.into_iter().find(|o| o.as_str() == s).ok_or_else(|| format!("unknown outcome `{s}`"))
    }
}
