//! The six canonical expression classes.
//!
//! The declaration order below is the canonical ordering used for every
//! tie-break in the library (prediction ties, argmax label ties, report
//! columns).

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(rename_all = "lowercase")]
pub enum ClassLabel {
    Neutral,
    Happy,
    Surprise,
    Anger,
    Fear,
    Sadness,
}

impl ClassLabel {
    pub const ALL: [ClassLabel; 6] = [
        ClassLabel::Neutral,
        ClassLabel::Happy,
        ClassLabel::Surprise,
        ClassLabel::Anger,
        ClassLabel::Fear,
        ClassLabel::Sadness,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ClassLabel::Neutral => "neutral",
            ClassLabel::Happy => "happy",
            ClassLabel::Surprise => "surprise",
            ClassLabel::Anger => "anger",
            ClassLabel::Fear => "fear",
            ClassLabel::Sadness => "sadness",
        }
    }

    /// Position in the canonical ordering (0..6).
    pub fn index(&self) -> usize {
        *self as usize
    }

    pub fn from_index(i: usize) -> Option<ClassLabel> {
        Self::ALL.get(i).copied()
    }
}

impl fmt::Display for ClassLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ClassLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "neutral" => Ok(ClassLabel::Neutral),
            "happy" => Ok(ClassLabel::Happy),
            "surprise" => Ok(ClassLabel::Surprise),
            "anger" => Ok(ClassLabel::Anger),
            "fear" => Ok(ClassLabel::Fear),
            "sadness" => Ok(ClassLabel::Sadness),
            other => Err(Error::Label(other.to_string())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_order_is_declaration_order() {
        assert!(ClassLabel::Neutral < ClassLabel::Happy);
        assert!(ClassLabel::Happy < ClassLabel::Sadness);
        assert_eq!(ClassLabel::ALL[0], ClassLabel::Neutral);
        assert_eq!(ClassLabel::ALL[5], ClassLabel::Sadness);
    }

    #[test]
    fn parse_rejects_unknown_label() {
        assert!(matches!("disgust".parse::<ClassLabel>(), Err(Error::Label(l)) if l == "disgust"));
        assert_eq!("fear".parse::<ClassLabel>().unwrap(), ClassLabel::Fear);
    }

    #[test]
    fn serde_uses_lowercase_names() {
        let s = serde_json::to_string(&ClassLabel::Sadness).unwrap();
        assert_eq!(s, "\"sadness\"");
        let back: ClassLabel = serde_json::from_str(&s).unwrap();
        assert_eq!(back, ClassLabel::Sadness);
    }
}
