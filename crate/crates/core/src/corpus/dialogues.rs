//! Annotated dialogue corpora, one JSON record per line.
//!
//! ```json
//! {"dialogue_id": "d1", "agent": "A", "turns": [
//!   {"speaker": "USER", "utterance": "I want a comedy", "actions": ["Reveal.Disclose"],
//!    "entities": [{"mention": "comedy", "id": "Comedy"}]}
//! ]}
//! ```

use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::domain::{ActionKind, AgentActionKind, Speaker, UserActionKind};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntityMention {
    pub mention: String,
    pub id: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotatedTurn {
    pub speaker: Speaker,
    pub utterance: String,
    pub actions: Vec<ActionKind>,
    #[serde(default)]
    pub entities: Vec<EntityMention>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotatedDialogue {
    pub dialogue_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub agent: Option<String>,
    pub turns: Vec<AnnotatedTurn>,
}

impl AnnotatedDialogue {
    /// User acts in order, agent turns skipped.
    pub fn user_actions(&self) -> impl Iterator<Item = UserActionKind> + '_ {
        self.turns
            .iter()
            .flat_map(|t| t.actions.iter().filter_map(|a| a.as_user()))
    }

    pub fn agent_actions(&self) -> impl Iterator<Item = AgentActionKind> + '_ {
        self.turns
            .iter()
            .flat_map(|t| t.actions.iter().filter_map(|a| a.as_agent()))
    }
}

/// Raw line shape; labels are resolved against the speaker afterwards.
#[derive(Deserialize)]
struct RawDialogue {
    dialogue_id: String,
    #[serde(default)]
    agent: Option<String>,
    turns: Vec<RawTurn>,
}

#[derive(Deserialize)]
struct RawTurn {
    speaker: Speaker,
    utterance: String,
    #[serde(default)]
    actions: Vec<String>,
    #[serde(default)]
    entities: Vec<EntityMention>,
}

/// A non-empty collection of annotated dialogues.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotatedDialogueCorpus {
    pub dialogues: Vec<AnnotatedDialogue>,
}

impl AnnotatedDialogueCorpus {
    pub fn new(dialogues: Vec<AnnotatedDialogue>) -> Result<Self> {
        if dialogues.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        Ok(AnnotatedDialogueCorpus { dialogues })
    }

    pub fn len(&self) -> usize {
        self.dialogues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dialogues.is_empty()
    }

    /// Dialogues recorded with one agent. Fails if none match.
    pub fn for_agent(&self, agent: &str) -> Result<Self> {
        Self::new(
            self.dialogues
                .iter()
                .filter(|d| d.agent.as_deref() == Some(agent))
                .cloned()
                .collect(),
        )
    }

    pub fn from_reader(reader: impl Read, source: &str) -> Result<Self> {
        let mut dialogues = Vec::new();
        for (lineno, line) in BufReader::new(reader).lines().enumerate() {
            let line = line.map_err(|e| Error::io(source, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let raw: RawDialogue = serde_json::from_str(&line).map_err(|e| {
                Error::parse(format!("{source}:{}", lineno + 1), e.to_string())
            })?;
            dialogues.push(resolve(raw)?);
        }
        Self::new(dialogues)
    }

    pub fn from_jsonl_str(text: &str) -> Result<Self> {
        Self::from_reader(text.as_bytes(), "<memory>")
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for d in &self.dialogues {
            out.push_str(&serde_json::to_string(d).expect("dialogue serializes"));
            out.push('\n');
        }
        out
    }
}

fn resolve(raw: RawDialogue) -> Result<AnnotatedDialogue> {
    let mut turns = Vec::with_capacity(raw.turns.len());
    for (index, t) in raw.turns.into_iter().enumerate() {
        let actions = t
            .actions
            .iter()
            .map(|label| ActionKind::parse_for(t.speaker, label))
            .collect::<Result<Vec<_>>>()
            .map_err(|e| e.at(format!("dialogue {}, turn {index}", raw.dialogue_id)))?;
        turns.push(AnnotatedTurn {
            speaker: t.speaker,
            utterance: t.utterance,
            actions,
            entities: t.entities,
        });
    }
    Ok(AnnotatedDialogue {
        dialogue_id: raw.dialogue_id,
        agent: raw.agent,
        turns,
    })
}

pub fn load_dialogues(path: &Path) -> Result<AnnotatedDialogueCorpus> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    AnnotatedDialogueCorpus::from_reader(file, &path.display().to_string())
}
