use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// One of the three binary classification targets, in task order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SubtaskId {
    Toxic,
    Engaging,
    FactClaiming,
}

impl SubtaskId {
    pub const ALL: [SubtaskId; 3] = [SubtaskId::Toxic, SubtaskId::Engaging, SubtaskId::FactClaiming];

    /// 1-based task number.
    pub fn ordinal(self) -> u8 {
        match self {
            SubtaskId::Toxic => 1,
            SubtaskId::Engaging => 2,
            SubtaskId::FactClaiming => 3,
        }
    }

    pub fn from_ordinal(n: u8) -> Option<Self> {
        match n {
            1 => Some(SubtaskId::Toxic),
            2 => Some(SubtaskId::Engaging),
            3 => Some(SubtaskId::FactClaiming),
            _ => None,
        }
    }

    pub fn index(self) -> usize {
        self.ordinal() as usize - 1
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SubtaskId::Toxic => "toxic",
            SubtaskId::Engaging => "engaging",
            SubtaskId::FactClaiming => "fact_claiming",
        }
    }
}

impl fmt::Display for SubtaskId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Error)]
#[error("unknown subtask `{0}` (expected toxic, engaging, fact_claiming or 1-3)")]
pub struct UnknownSubtask(pub String);

impl FromStr for SubtaskId {
    type Err = UnknownSubtask;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "toxic" | "1" => Ok(SubtaskId::Toxic),
            "engaging" | "2" => Ok(SubtaskId::Engaging),
            "fact_claiming" | "factclaiming" | "fact-claiming" | "3" => Ok(SubtaskId::FactClaiming),
            _ => Err(UnknownSubtask(s.to_string())),
        }
    }
}

/// Binary label; `Positive` is the flagged class (1).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    Negative,
    Positive,
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("label `{0}` is not 0 or 1")]
pub struct LabelError(pub String);

impl Label {
    pub fn as_u8(self) -> u8 {
        match self {
            Label::Negative => 0,
            Label::Positive => 1,
        }
    }

    pub fn from_u8(v: u8) -> Result<Self, LabelError> {
        match v {
            0 => Ok(Label::Negative),
            1 => Ok(Label::Positive),
            other => Err(LabelError(other.to_string())),
        }
    }

    pub fn is_positive(self) -> bool {
        self == Label::Positive
    }

    pub fn flip(self) -> Self {
        match self {
            Label::Negative => Label::Positive,
            Label::Positive => Label::Negative,
        }
    }
}

impl From<bool> for Label {
    fn from(b: bool) -> Self {
        if b {
            Label::Positive
        } else {
            Label::Negative
        }
    }
}

impl FromStr for Label {
    type Err = LabelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "0" => Ok(Label::Negative),
            "1" => Ok(Label::Positive),
            other => Err(LabelError(other.to_string())),
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_u8())
    }
}

impl Serialize for Label {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u8(self.as_u8())
    }
}

impl<'de> Deserialize<'de> for Label {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = u8::deserialize(d)?;
        Label::from_u8(v).map_err(serde::de::Error::custom)
    }
}
