//! Dialogue-act taxonomy, agenda, goal and transcript types.

mod action;
mod agenda;
mod compat;
mod goal;
mod taxonomy;
mod transcript;

pub use action::{DialogueAction, SlotName};
pub use agenda::Agenda;
pub use compat::CompatibilityTable;
pub use goal::{Goal, RequestType};
pub use taxonomy::{ActionKind, AgentActionKind, Category, MainAction, Speaker, UserActionKind};
pub use transcript::{AgendaUpdate, DialogueTranscript, TerminalStatus, Turn};

/// Whether `agent` is an appropriate response to `user` under `table`.
pub fn compatible(table: &CompatibilityTable, user: UserActionKind, agent: AgentActionKind) -> bool {
    table.compatible(user, agent)
}
