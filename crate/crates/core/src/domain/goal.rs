use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::taxonomy::AgentActionKind;

/// Kinds of information the user wants from the agent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum RequestType {
    Recommendation,
    ItemInfo,
}

/// Information-seeking goal: attribute constraints plus outstanding requests.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Goal {
    /// Attribute values the user is after (e.g. liked genres).
    pub constraints: BTreeSet<String>,
    /// Requests not yet answered.
    pub requests: BTreeSet<RequestType>,
}

impl Goal {
    pub fn new(constraints: impl IntoIterator<Item = String>) -> Self {
        Goal {
            constraints: constraints.into_iter().collect(),
            requests: [RequestType::Recommendation, RequestType::ItemInfo]
                .into_iter()
                .collect(),
        }
    }

    /// Hand-crafted goal update: an appropriate agent response answers the
    /// request it addresses; an inappropriate one leaves the goal untouched.
    pub fn update(&mut self, accomplished: bool, agent: Option<AgentActionKind>) {
        if !accomplished {
            return;
        }
        match agent {
            Some(a) if a.is_recommendation() => {
                self.requests.remove(&RequestType::Recommendation);
            }
            Some(AgentActionKind::Repeat | AgentActionKind::More | AgentActionKind::Back) => {
                self.requests.remove(&RequestType::ItemInfo);
            }
            _ => {}
        }
    }

    pub fn is_fulfilled(&self) -> bool {
        self.requests.is_empty()
    }
}
