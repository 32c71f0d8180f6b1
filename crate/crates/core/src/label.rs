use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Shunt fault classes on a three-phase line, plus `Unknown` for flag
/// patterns that do not map to any class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FaultLabel {
    Ag,
    Bg,
    Cg,
    Ab,
    Ac,
    Bc,
    Abg,
    Acg,
    Bcg,
    Abc,
    Unknown,
}

impl FaultLabel {
    /// The ten real fault classes in a fixed order (confusion-matrix order).
    pub const CLASSES: [FaultLabel; 10] = [
        FaultLabel::Ag,
        FaultLabel::Bg,
        FaultLabel::Cg,
        FaultLabel::Ab,
        FaultLabel::Ac,
        FaultLabel::Bc,
        FaultLabel::Abg,
        FaultLabel::Acg,
        FaultLabel::Bcg,
        FaultLabel::Abc,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FaultLabel::Ag => "ag",
            FaultLabel::Bg => "bg",
            FaultLabel::Cg => "cg",
            FaultLabel::Ab => "ab",
            FaultLabel::Ac => "ac",
            FaultLabel::Bc => "bc",
            FaultLabel::Abg => "abg",
            FaultLabel::Acg => "acg",
            FaultLabel::Bcg => "bcg",
            FaultLabel::Abc => "abc",
            FaultLabel::Unknown => "unknown",
        }
    }

    /// Involved phases as `[a, b, c]`.
    pub fn phases(self) -> [bool; 3] {
        match self {
            FaultLabel::Ag => [true, false, false],
            FaultLabel::Bg => [false, true, false],
            FaultLabel::Cg => [false, false, true],
            FaultLabel::Ab | FaultLabel::Abg => [true, true, false],
            FaultLabel::Ac | FaultLabel::Acg => [true, false, true],
            FaultLabel::Bc | FaultLabel::Bcg => [false, true, true],
            FaultLabel::Abc => [true, true, true],
            FaultLabel::Unknown => [false; 3],
        }
    }

    pub fn is_grounded(self) -> bool {
        matches!(
            self,
            FaultLabel::Ag
                | FaultLabel::Bg
                | FaultLabel::Cg
                | FaultLabel::Abg
                | FaultLabel::Acg
                | FaultLabel::Bcg
        )
    }

    /// Index into [`FaultLabel::CLASSES`], `None` for `Unknown`.
    pub fn class_index(self) -> Option<usize> {
        Self::CLASSES.iter().position(|&c| c == self)
    }

    /// Deterministic map from persistent phase/ground flags to a class.
    ///
    /// One phase needs ground to be a fault; three phases map to `abc`
    /// regardless of the ground flag.
    pub fn from_flags(a: bool, b: bool, c: bool, ground: bool) -> FaultLabel {
        match (a, b, c, ground) {
            (true, true, true, _) => FaultLabel::Abc,
            (true, false, false, true) => FaultLabel::Ag,
            (false, true, false, true) => FaultLabel::Bg,
            (false, false, true, true) => FaultLabel::Cg,
            (true, true, false, true) => FaultLabel::Abg,
            (true, false, true, true) => FaultLabel::Acg,
            (false, true, true, true) => FaultLabel::Bcg,
            (true, true, false, false) => FaultLabel::Ab,
            (true, false, true, false) => FaultLabel::Ac,
            (false, true, true, false) => FaultLabel::Bc,
            _ => FaultLabel::Unknown,
        }
    }

    /// Same phases, opposite ground involvement (ab ↔ abg); `None` for
    /// single-phase, three-phase and unknown labels.
    pub fn ground_sibling(self) -> Option<FaultLabel> {
        match self {
            FaultLabel::Ab => Some(FaultLabel::Abg),
            FaultLabel::Ac => Some(FaultLabel::Acg),
            FaultLabel::Bc => Some(FaultLabel::Bcg),
            FaultLabel::Abg => Some(FaultLabel::Ab),
            FaultLabel::Acg => Some(FaultLabel::Ac),
            FaultLabel::Bcg => Some(FaultLabel::Bc),
            _ => None,
        }
    }
}

impl fmt::Display for FaultLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FaultLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let label = match s.trim().to_ascii_lowercase().as_str() {
            "ag" => FaultLabel::Ag,
            "bg" => FaultLabel::Bg,
            "cg" => FaultLabel::Cg,
            "ab" => FaultLabel::Ab,
            "ac" => FaultLabel::Ac,
            "bc" => FaultLabel::Bc,
            "abg" => FaultLabel::Abg,
            "acg" => FaultLabel::Acg,
            "bcg" => FaultLabel::Bcg,
            "abc" => FaultLabel::Abc,
            "unknown" => FaultLabel::Unknown,
            other => return Err(Error::Parse(format!("unknown fault label '{other}'"))),
        };
        Ok(label)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_round_trip_through_phases() {
        for label in FaultLabel::CLASSES {
            let [a, b, c] = label.phases();
            assert_eq!(FaultLabel::from_flags(a, b, c, label.is_grounded()), label);
        }
    }

    #[test]
    fn non_mapping_patterns() {
        assert_eq!(
            FaultLabel::from_flags(false, false, false, true),
            FaultLabel::Unknown
        );
        assert_eq!(
            FaultLabel::from_flags(true, false, false, false),
            FaultLabel::Unknown
        );
        assert_eq!(
            FaultLabel::from_flags(false, false, false, false),
            FaultLabel::Unknown
        );
        assert_eq!(
            FaultLabel::from_flags(true, true, true, true),
            FaultLabel::Abc
        );
    }

    #[test]
    fn parse_and_display() {
        for label in FaultLabel::CLASSES {
            assert_eq!(label.as_str().parse::<FaultLabel>().unwrap(), label);
        }
        assert!("xyz".parse::<FaultLabel>().is_err());
    }
}
