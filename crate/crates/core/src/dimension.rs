use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

/// One of the four perceptual axes every video is judged on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dimension {
    Static,
    Temporal,
    Dynamic,
    Tv,
}

impl Dimension {
    pub const ALL: [Dimension; 4] = [
        Dimension::Static,
        Dimension::Temporal,
        Dimension::Dynamic,
        Dimension::Tv,
    ];

    /// Position in [`Dimension::ALL`]; used to index per-dimension arrays.
    pub fn index(self) -> usize {
        match self {
            Dimension::Static => 0,
            Dimension::Temporal => 1,
            Dimension::Dynamic => 2,
            Dimension::Tv => 3,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Dimension::Static => "static",
            Dimension::Temporal => "temporal",
            Dimension::Dynamic => "dynamic",
            Dimension::Tv => "tv",
        }
    }
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown dimension token {0:?} (expected static|temporal|dynamic|tv)")]
pub struct ParseDimensionError(pub alloc::string::String);

impl FromStr for Dimension {
    type Err = ParseDimensionError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "static" => Ok(Dimension::Static),
            "temporal" => Ok(Dimension::Temporal),
            "dynamic" => Ok(Dimension::Dynamic),
            "tv" => Ok(Dimension::Tv),
            other => Err(ParseDimensionError(other.into())),
        }
    }
}
