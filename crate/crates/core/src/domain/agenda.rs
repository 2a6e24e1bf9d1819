use serde::{Deserialize, Serialize};

use super::taxonomy::UserActionKind;

/// Stack of pending user actions. The last element is the top, i.e. the next
/// action the user will take; the first element is executed last.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Agenda {
    stack: Vec<UserActionKind>,
}

impl Agenda {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds an agenda from actions listed in execution order (first to run
    /// first).
    pub fn from_execution_order(actions: impl IntoIterator<Item = UserActionKind>) -> Self {
        let mut stack: Vec<_> = actions.into_iter().collect();
        stack.reverse();
        Agenda { stack }
    }

    pub fn top(&self) -> Option<UserActionKind> {
        self.stack.last().copied()
    }

    pub fn push(&mut self, action: UserActionKind) {
        self.stack.push(action);
    }

    pub fn pull(&mut self) -> Option<UserActionKind> {
        self.stack.pop()
    }

    /// Swaps the top for `action`, returning the old top. No-op on an empty
    /// agenda.
    pub fn replace_top(&mut self, action: UserActionKind) -> Option<UserActionKind> {
        self.stack
            .last_mut()
            .map(|top| std::mem::replace(top, action))
    }

    pub fn clear(&mut self) {
        self.stack.clear();
    }

    pub fn len(&self) -> usize {
        self.stack.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stack.is_empty()
    }

    /// Bottom-to-top view.
    pub fn as_slice(&self) -> &[UserActionKind] {
        &self.stack
    }

    /// Actions in the order they would be executed if every turn pulls.
    pub fn execution_order(&self) -> impl Iterator<Item = UserActionKind> + '_ {
        self.stack.iter().rev().copied()
    }
}
