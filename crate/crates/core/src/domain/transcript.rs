use serde::{Deserialize, Serialize};

use super::action::DialogueAction;
use super::taxonomy::{AgentActionKind, Speaker, UserActionKind};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum TerminalStatus {
    Completed,
    TurnCapReached,
    AgentError,
}

/// How the agenda changed after an agent turn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum AgendaUpdate {
    Pull,
    Replace,
    EarlyStop,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Turn {
    pub index: usize,
    pub speaker: Speaker,
    pub utterance: String,
    #[serde(default)]
    pub actions: Vec<DialogueAction>,
    /// δ for the exchange this agent turn closes. `None` only for an opening
    /// agent turn that answers no user action.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub goal_satisfied: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub agenda_update: Option<AgendaUpdate>,
    /// Agenda depth after this turn's update.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub agenda_len: Option<usize>,
}

impl Turn {
    pub fn user_action(&self) -> Option<UserActionKind> {
        self.actions.iter().find_map(|a| a.kind.as_user())
    }

    pub fn agent_action(&self) -> Option<AgentActionKind> {
        self.actions.iter().find_map(|a| a.kind.as_agent())
    }
}

/// Full record of one simulated dialogue.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DialogueTranscript {
    pub conversation_id: String,
    pub agent: String,
    pub simulator: String,
    pub seed: u64,
    pub status: TerminalStatus,
    /// Initial agenda in execution order.
    pub initial_agenda: Vec<UserActionKind>,
    pub turns: Vec<Turn>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl DialogueTranscript {
    pub fn user_turns(&self) -> impl Iterator<Item = &Turn> {
        self.turns.iter().filter(|t| t.speaker == Speaker::User)
    }

    pub fn agent_turns(&self) -> impl Iterator<Item = &Turn> {
        self.turns.iter().filter(|t| t.speaker == Speaker::Agent)
    }

    pub fn user_turn_count(&self) -> usize {
        self.user_turns().count()
    }

    /// Checks index monotonicity, speaker alternation and δ presence.
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::parse(format!("transcript {}", self.conversation_id), msg));
        for pair in self.turns.windows(2) {
            if pair[1].index <= pair[0].index {
                return fail(format!("turn index {} not increasing", pair[1].index));
            }
            if pair[1].speaker == pair[0].speaker {
                return fail(format!("turn {} repeats speaker {}", pair[1].index, pair[1].speaker));
            }
        }
        for (pos, t) in self.turns.iter().enumerate() {
            let opening = pos == 0;
            if t.speaker == Speaker::Agent && t.goal_satisfied.is_none() && !opening {
                return fail(format!("agent turn {} carries no goal flag", t.index));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::DialogueAction;

    fn turn(index: usize, speaker: Speaker, delta: Option<bool>) -> Turn {
        Turn {
            index,
            speaker,
            utterance: String::new(),
            actions: vec![],
            goal_satisfied: delta,
            agenda_update: None,
            agenda_len: None,
        }
    }

    fn transcript(turns: Vec<Turn>) -> DialogueTranscript {
        DialogueTranscript {
            conversation_id: "c".into(),
            agent: "a".into(),
            simulator: "s".into(),
            seed: 0,
            status: TerminalStatus::Completed,
            initial_agenda: vec![],
            turns,
            error: None,
        }
    }

    #[test]
    fn validate_catches_broken_alternation_and_missing_flags() {
        let ok = transcript(vec![
            turn(0, Speaker::User, None),
            turn(1, Speaker::Agent, Some(true)),
        ]);
        ok.validate().unwrap();

        let twice = transcript(vec![turn(0, Speaker::User, None), turn(1, Speaker::User, None)]);
        assert!(twice.validate().is_err());

        let unflagged = transcript(vec![turn(0, Speaker::User, None), turn(1, Speaker::Agent, None)]);
        assert!(unflagged.validate().is_err());

        let opening = transcript(vec![turn(0, Speaker::Agent, None), turn(1, Speaker::User, None)]);
        opening.validate().unwrap();

        let backwards = transcript(vec![turn(3, Speaker::User, None), turn(2, Speaker::Agent, Some(true))]);
        assert!(backwards.validate().is_err());
    }

    #[test]
    fn serde_shape() {
        let mut t = turn(0, Speaker::User, None);
        t.actions.push(DialogueAction::user(UserActionKind::Disclose));
        let json = serde_json::to_string(&t).unwrap();
        assert_eq!(
            json,
            r#"{"index":0,"speaker":"USER","utterance":"","actions":[{"kind":"Reveal.Disclose"}]}"#
        );
    }
}
