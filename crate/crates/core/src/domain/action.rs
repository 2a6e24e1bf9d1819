use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::taxonomy::{ActionKind, AgentActionKind, UserActionKind};
use crate::error::{Error, Result};

/// Slot vocabulary shared by NLG templates and recognised actions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum SlotName {
    Item,
    Attribute,
    Sentiment,
}

impl SlotName {
    pub const ALL: [SlotName; 3] = [SlotName::Item, SlotName::Attribute, SlotName::Sentiment];

    pub fn as_str(self) -> &'static str {
        match self {
            SlotName::Item => "ITEM",
            SlotName::Attribute => "ATTRIBUTE",
            SlotName::Sentiment => "SENTIMENT",
        }
    }
}

impl fmt::Display for SlotName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SlotName {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        SlotName::ALL
            .into_iter()
            .find(|n| n.as_str() == s)
            .ok_or_else(|| Error::Argument(format!("unknown slot `{s}`")))
    }
}

/// A labelled dialogue act with its slot values.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DialogueAction {
    pub kind: ActionKind,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub slots: Vec<(SlotName, String)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raw_utterance: Option<String>,
}

impl DialogueAction {
    pub fn new(kind: ActionKind) -> Self {
        DialogueAction {
            kind,
            slots: Vec::new(),
            raw_utterance: None,
        }
    }

    pub fn user(kind: UserActionKind) -> Self {
        Self::new(ActionKind::User(kind))
    }

    pub fn agent(kind: AgentActionKind) -> Self {
        Self::new(ActionKind::Agent(kind))
    }

    pub fn with_slot(mut self, name: SlotName, value: impl Into<String>) -> Self {
        self.slots.push((name, value.into()));
        self
    }

    /// First value for `name`, if any.
    pub fn slot(&self, name: SlotName) -> Option<&str> {
        self.slots
            .iter()
            .find(|(n, _)| *n == name)
            .map(|(_, v)| v.as_str())
    }
}
