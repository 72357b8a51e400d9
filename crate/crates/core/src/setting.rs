use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error};

/// Information model an algorithm runs under.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Setting {
    #[serde(rename = "det")]
    Deterministic,
    #[serde(rename = "rand")]
    Randomized,
    #[serde(rename = "quant")]
    Quantum,
}

impl Setting {
    pub const ALL: [Setting; 3] = [
        Setting::Deterministic,
        Setting::Randomized,
        Setting::Quantum,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Setting::Deterministic => "det",
            Setting::Randomized => "rand",
            Setting::Quantum => "quant",
        }
    }
}

impl fmt::Display for Setting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Setting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "det" | "deterministic" => Ok(Setting::Deterministic),
            "rand" | "randomized" => Ok(Setting::Randomized),
            "quant" | "quantum" => Ok(Setting::Quantum),
            other => Err(domain(format!("unknown setting `{other}`"))),
        }
    }
}

/// Error criterion.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Criterion {
    /// `|ξ̂ − ξ|`
    #[serde(rename = "abs")]
    Absolute,
    /// `|F(ξ̂) − 1/2|`
    #[serde(rename = "res")]
    Residual,
}

impl Criterion {
    pub fn as_str(self) -> &'static str {
        match self {
            Criterion::Absolute => "abs",
            Criterion::Residual => "res",
        }
    }
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Criterion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "abs" | "absolute" => Ok(Criterion::Absolute),
            "res" | "residual" => Ok(Criterion::Residual),
            other => Err(domain(format!("unknown criterion `{other}`"))),
        }
    }
}
