use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

/// Five ordered text levels a quality score is described with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QualityLevel {
    Bad,
    Poor,
    Fair,
    Good,
    Excellent,
}

impl QualityLevel {
    pub const ALL: [QualityLevel; 5] = [
        QualityLevel::Bad,
        QualityLevel::Poor,
        QualityLevel::Fair,
        QualityLevel::Good,
        QualityLevel::Excellent,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            QualityLevel::Bad => "bad",
            QualityLevel::Poor => "poor",
            QualityLevel::Fair => "fair",
            QualityLevel::Good => "good",
            QualityLevel::Excellent => "excellent",
        }
    }
}

impl fmt::Display for QualityLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for QualityLevel {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        Self::ALL.into_iter().find(|l| l.as_str() == s).ok_or(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
#[error("score {0} is outside [0, 100]")]
pub struct OutOfRange(pub f64);

/// Equal-width, left-closed bins on [0, 100]; 100 itself is excellent.
pub fn mos_to_level(mos: f64) -> Result<QualityLevel, OutOfRange> {
    if !(0.0..=100.0).contains(&mos) {
        return Err(OutOfRange(mos));
    }
    let bin = ((mos / 20.0) as usize).min(4);
    Ok(QualityLevel::ALL[bin])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bin_edges() {
        assert_eq!(mos_to_level(0.0), Ok(QualityLevel::Bad));
        assert_eq!(mos_to_level(19.999), Ok(QualityLevel::Bad));
        assert_eq!(mos_to_level(20.0), Ok(QualityLevel::Poor));
        assert_eq!(mos_to_level(40.0), Ok(QualityLevel::Fair));
        assert_eq!(mos_to_level(60.0), Ok(QualityLevel::Good));
        assert_eq!(mos_to_level(80.0), Ok(QualityLevel::Excellent));
        assert_eq!(mos_to_level(100.0), Ok(QualityLevel::Excellent));
        assert!(mos_to_level(-0.1).is_err());
        assert!(mos_to_level(100.5).is_err());
        assert!(mos_to_level(f64::NAN).is_err());
    }

    #[test]
    fn names() {
        for l in QualityLevel::ALL {
            assert_eq!(l.as_str().parse::<QualityLevel>(), Ok(l));
            assert_eq!(QualityLevel::from_index(l.index()), Some(l));
        }
    }
}
