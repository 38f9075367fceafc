use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Relevance label attached to an element: part of the main article (`R`)
/// or boilerplate (`NR`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Label {
    #[serde(rename = "R")]
    Relevant,
    #[serde(rename = "NR")]
    NotRelevant,
}

impl Label {
    pub fn as_str(self) -> &'static str {
        match self {
            Label::Relevant => "R",
            Label::NotRelevant => "NR",
        }
    }

    pub fn is_relevant(self) -> bool {
        matches!(self, Label::Relevant)
    }

    pub fn from_bool(relevant: bool) -> Self {
        if relevant {
            Label::Relevant
        } else {
            Label::NotRelevant
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "R" => Ok(Label::Relevant),
            "NR" => Ok(Label::NotRelevant),
            other => Err(format!("unknown label {other:?}, expected \"R\" or \"NR\"")),
        }
    }
}
