use std::fmt;

use serde::{Deserialize, Serialize};

use crate::domain::{ActionKind, AgentActionKind, UserActionKind};

/// Coarse QRFA classes: Query and Feedback for users, Request and Answer for
/// agents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum QrfaClass {
    Query,
    Request,
    Feedback,
    Answer,
}

impl fmt::Display for QrfaClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// The two user-side classes, in table order.
pub const USER_CLASSES: [QrfaClass; 2] = [QrfaClass::Query, QrfaClass::Feedback];

pub fn user_class_index(class: QrfaClass) -> usize {
    match class {
        QrfaClass::Query => 0,
        QrfaClass::Feedback => 1,
        other => panic!("{other} is not a user class"),
    }
}

pub fn user_class(kind: UserActionKind) -> QrfaClass {
    use UserActionKind::*;
    match kind {
        Back | More | Note | Complete => QrfaClass::Feedback,
        Disclose | NonDisclose | Revise | Refine | Expand | List | Compare | Subset | Similar
        | Repeat | Interrupt | Interrogate => QrfaClass::Query,
    }
}

pub fn agent_class(kind: AgentActionKind) -> QrfaClass {
    use AgentActionKind::*;
    match kind {
        Elicit | Clarify | Suggest => QrfaClass::Request,
        Show | List | Similar | Subset | Repeat | Back | More | Record | End => QrfaClass::Answer,
    }
}

/// Maps any act onto its QRFA class.
pub fn coarse_map(kind: ActionKind) -> QrfaClass {
    match kind {
        ActionKind::User(u) => user_class(u),
        ActionKind::Agent(a) => agent_class(a),
    }
}

/// User acts belonging to a user-side class.
pub fn members(class: QrfaClass) -> impl Iterator<Item = UserActionKind> {
    UserActionKind::ALL
        .iter()
        .copied()
        .filter(move |&k| user_class(k) == class)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn documented_mappings() {
        assert_eq!(coarse_map(ActionKind::User(UserActionKind::Disclose)), QrfaClass::Query);
        assert_eq!(coarse_map(ActionKind::User(UserActionKind::Note)), QrfaClass::Feedback);
        assert_eq!(coarse_map(ActionKind::Agent(AgentActionKind::Elicit)), QrfaClass::Request);
        assert_eq!(coarse_map(ActionKind::Agent(AgentActionKind::Record)), QrfaClass::Answer);
    }

    #[test]
    fn sides_map_to_their_own_classes() {
        for &u in UserActionKind::ALL {
            assert!(matches!(user_class(u), QrfaClass::Query | QrfaClass::Feedback));
        }
        for &a in AgentActionKind::ALL {
            assert!(matches!(agent_class(a), QrfaClass::Request | QrfaClass::Answer));
        }
    }

    #[test]
    fn feedback_members() {
        use UserActionKind::*;
        assert_eq!(members(QrfaClass::Feedback).collect::<Vec<_>>(), vec![Back, More, Note, Complete]);
        let total = members(QrfaClass::Query).count() + members(QrfaClass::Feedback).count();
        assert_eq!(total, UserActionKind::ALL.len());
    }
}
