//! The four model variants compared by the experiments.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::HarnessError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// Dual memory without replay or imagination.
    Gdm,
    /// Dual memory with trajectory replay.
    GdmReplay,
    /// Dual memory with replay and imagination.
    Clifer,
    /// Sequentially trained feed-forward classifier.
    Baseline,
}

impl Variant {
    pub const ALL: [Variant; 4] = [
        Variant::Gdm,
        Variant::GdmReplay,
        Variant::Clifer,
        Variant::Baseline,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Variant::Gdm => "gdm",
            Variant::GdmReplay => "gdm_replay",
            Variant::Clifer => "clifer",
            Variant::Baseline => "baseline",
        }
    }

    pub fn replay_enabled(&self) -> bool {
        matches!(self, Variant::GdmReplay | Variant::Clifer)
    }

    pub fn imagination_enabled(&self) -> bool {
        matches!(self, Variant::Clifer)
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Variant {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, HarnessError> {
        match s {
            "gdm" => Ok(Variant::Gdm),
            "gdm_replay" => Ok(Variant::GdmReplay),
            "clifer" => Ok(Variant::Clifer),
            "baseline" => Ok(Variant::Baseline),
            other => Err(HarnessError::Usage(format!(
                "unknown variant `{other}` (expected gdm, gdm_replay, clifer or baseline)"
            ))),
        }
    }
}
