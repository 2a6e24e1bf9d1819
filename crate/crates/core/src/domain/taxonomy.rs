//! Dialogue-act taxonomy for conversational item recommendation.
//!
//! User and agent acts are grouped into main actions. Canonical labels are
//! group-qualified (`Inquire.List` is the user asking for a list, `Reveal.List`
//! is the agent showing one), which makes every canonical label unique across
//! both sides. Bare names (`List`, `Elicit`, `Non-disclose`) are accepted when
//! parsing as long as the speaker is known.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Top-level category an act belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Category {
    QueryFormulation,
    SetRetrieval,
    MixedInitiative,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Speaker {
    User,
    Agent,
}

impl fmt::Display for Speaker {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Speaker::User => "USER",
            Speaker::Agent => "AGENT",
        })
    }
}

/// Compares labels ignoring case, `-`, `_` and spaces.
fn label_eq(a: &str, b: &str) -> bool {
    let squash = |s: &str| {
        s.chars()
            .filter(|c| !matches!(c, '-' | '_' | ' '))
            .flat_map(char::to_lowercase)
            .collect::<String>()
    };
    squash(a) == squash(b)
}

macro_rules! action_enum {
    (
        $(#[$meta:meta])*
        $name:ident, $side:literal {
            $($variant:ident => ($group:literal, $bare:literal, $cat:ident)),+ $(,)?
        }
    ) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
        pub enum $name {
            $($variant),+
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            /// Group (main action) name, e.g. `Reveal`.
            pub fn group(self) -> &'static str {
                match self { $($name::$variant => $group),+ }
            }

            /// Bare act name, e.g. `Disclose`.
            pub fn name(self) -> &'static str {
                match self { $($name::$variant => $bare),+ }
            }

            pub fn category(self) -> Category {
                match self { $($name::$variant => Category::$cat),+ }
            }

            /// Canonical, group-qualified label.
            pub fn label(self) -> String {
                if self.group() == self.name() {
                    self.name().to_string()
                } else {
                    format!("{}.{}", self.group(), self.name())
                }
            }

            pub fn index(self) -> usize {
                self as usize
            }

            fn parse_label(s: &str) -> Result<Self> {
                let s = s.trim();
                let (group, bare) = match s.split_once('.') {
                    Some((g, b)) => (Some(g), b),
                    None => (None, s),
                };
                Self::ALL
                    .iter()
                    .copied()
                    .find(|k| label_eq(k.name(), bare) && group.map_or(true, |g| label_eq(k.group(), g)))
                    .ok_or_else(|| Error::Taxonomy { side: $side, label: s.to_string() })
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.label())
            }
        }

        impl FromStr for $name {
            type Err = Error;
            fn from_str(s: &str) -> Result<Self> {
                Self::parse_label(s)
            }
        }

        impl Serialize for $name {
            fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
                s.serialize_str(&self.label())
            }
        }

        impl<'de> Deserialize<'de> for $name {
            fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
                let s = String::deserialize(d)?;
                s.parse().map_err(serde::de::Error::custom)
            }
        }
    };
}

action_enum! {
    /// Acts available to the simulated user.
    UserActionKind, "user" {
        Disclose => ("Reveal", "Disclose", QueryFormulation),
        NonDisclose => ("Reveal", "Non-disclose", QueryFormulation),
        Revise => ("Reveal", "Revise", QueryFormulation),
        Refine => ("Reveal", "Refine", QueryFormulation),
        Expand => ("Reveal", "Expand", QueryFormulation),
        List => ("Inquire", "List", SetRetrieval),
        Compare => ("Inquire", "Compare", SetRetrieval),
        Subset => ("Inquire", "Subset", SetRetrieval),
        Similar => ("Inquire", "Similar", SetRetrieval),
        Repeat => ("Navigate", "Repeat", SetRetrieval),
        Back => ("Navigate", "Back", SetRetrieval),
        More => ("Navigate", "More", SetRetrieval),
        Note => ("Navigate", "Note", SetRetrieval),
        Complete => ("Navigate", "Complete", SetRetrieval),
        Interrupt => ("Interrupt", "Interrupt", MixedInitiative),
        Interrogate => ("Interrogate", "Interrogate", MixedInitiative),
    }
}

action_enum! {
    /// Acts the simulator can recognise in agent responses.
    AgentActionKind, "agent" {
        Elicit => ("Inquire", "Elicit", QueryFormulation),
        Clarify => ("Inquire", "Clarify", QueryFormulation),
        Show => ("Reveal", "Show", SetRetrieval),
        List => ("Reveal", "List", SetRetrieval),
        Similar => ("Reveal", "Similar", SetRetrieval),
        Subset => ("Reveal", "Subset", SetRetrieval),
        Repeat => ("Traverse", "Repeat", SetRetrieval),
        Back => ("Traverse", "Back", SetRetrieval),
        More => ("Traverse", "More", SetRetrieval),
        Record => ("Traverse", "Record", SetRetrieval),
        End => ("Traverse", "End", SetRetrieval),
        Suggest => ("Suggest", "Suggest", MixedInitiative),
    }
}

impl AgentActionKind {
    /// Acts that put an item in front of the user.
    pub fn is_recommendation(self) -> bool {
        matches!(
            self,
            AgentActionKind::Show
                | AgentActionKind::List
                | AgentActionKind::Similar
                | AgentActionKind::Subset
                | AgentActionKind::Suggest
        )
    }
}

/// The six main user actions of the CIR6 interaction model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum MainAction {
    Disclose,
    Reveal,
    Inquire,
    Navigate,
    Note,
    Complete,
}

impl MainAction {
    pub const ALL: [MainAction; 6] = [
        MainAction::Disclose,
        MainAction::Reveal,
        MainAction::Inquire,
        MainAction::Navigate,
        MainAction::Note,
        MainAction::Complete,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    /// Fine-grained user acts grouped under this main action.
    pub fn members(self) -> impl Iterator<Item = UserActionKind> {
        UserActionKind::ALL
            .iter()
            .copied()
            .filter(move |k| k.main_action() == self)
    }
}

impl fmt::Display for MainAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl FromStr for MainAction {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        MainAction::ALL
            .into_iter()
            .find(|m| label_eq(&m.to_string(), s))
            .ok_or_else(|| Error::Taxonomy {
                side: "main",
                label: s.to_string(),
            })
    }
}

impl UserActionKind {
    /// Main CIR6 action this act falls under. Mixed-initiative acts are
    /// user-initiated questions and count as `Inquire`.
    pub fn main_action(self) -> MainAction {
        use UserActionKind::*;
        match self {
            Disclose | NonDisclose => MainAction::Disclose,
            Revise | Refine | Expand => MainAction::Reveal,
            List | Compare | Subset | Similar | Interrupt | Interrogate => MainAction::Inquire,
            Repeat | Back | More => MainAction::Navigate,
            Note => MainAction::Note,
            Complete => MainAction::Complete,
        }
    }
}

/// Either side's act.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ActionKind {
    User(UserActionKind),
    Agent(AgentActionKind),
}

impl ActionKind {
    pub fn speaker(self) -> Speaker {
        match self {
            ActionKind::User(_) => Speaker::User,
            ActionKind::Agent(_) => Speaker::Agent,
        }
    }

    pub fn label(self) -> String {
        match self {
            ActionKind::User(k) => k.label(),
            ActionKind::Agent(k) => k.label(),
        }
    }

    /// Parses a label in the context of a known speaker.
    pub fn parse_for(speaker: Speaker, label: &str) -> Result<Self> {
        Ok(match speaker {
            Speaker::User => ActionKind::User(label.parse()?),
            Speaker::Agent => ActionKind::Agent(label.parse()?),
        })
    }

    pub fn as_user(self) -> Option<UserActionKind> {
        match self {
            ActionKind::User(k) => Some(k),
            ActionKind::Agent(_) => None,
        }
    }

    pub fn as_agent(self) -> Option<AgentActionKind> {
        match self {
            ActionKind::Agent(k) => Some(k),
            ActionKind::User(_) => None,
        }
    }
}

impl fmt::Display for ActionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl FromStr for ActionKind {
    type Err = Error;

    /// Canonical labels are unique across sides; bare names that exist on
    /// both sides (`List`, `More`, ...) are rejected here.
    fn from_str(s: &str) -> Result<Self> {
        let user = s.parse::<UserActionKind>().ok();
        let agent = s.parse::<AgentActionKind>().ok();
        match (user, agent) {
            (Some(u), None) => Ok(ActionKind::User(u)),
            (None, Some(a)) => Ok(ActionKind::Agent(a)),
            (Some(_), Some(_)) => Err(Error::Taxonomy {
                side: "ambiguous",
                label: s.to_string(),
            }),
            (None, None) => Err(Error::Taxonomy {
                side: "any",
                label: s.to_string(),
            }),
        }
    }
}

impl Serialize for ActionKind {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.label())
    }
}

impl<'de> Deserialize<'de> for ActionKind {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    #[test]
    fn canonical_labels_are_unique_across_sides() {
        let mut seen = BTreeSet::new();
        for k in UserActionKind::ALL {
            assert!(seen.insert(k.label()));
        }
        for k in AgentActionKind::ALL {
            assert!(seen.insert(k.label()));
        }
    }

    #[test]
    fn labels_round_trip() {
        for &k in UserActionKind::ALL {
            assert_eq!(k.label().parse::<UserActionKind>().unwrap(), k);
            assert_eq!(k.label().parse::<ActionKind>().unwrap(), ActionKind::User(k));
        }
        for &k in AgentActionKind::ALL {
            assert_eq!(k.label().parse::<AgentActionKind>().unwrap(), k);
            assert_eq!(k.label().parse::<ActionKind>().unwrap(), ActionKind::Agent(k));
        }
    }

    #[test]
    fn bare_names_resolve_with_speaker() {
        assert_eq!(
            ActionKind::parse_for(Speaker::User, "List").unwrap(),
            ActionKind::User(UserActionKind::List)
        );
        assert_eq!(
            ActionKind::parse_for(Speaker::Agent, "List").unwrap(),
            ActionKind::Agent(AgentActionKind::List)
        );
        assert_eq!(
            "Non-disclose".parse::<UserActionKind>().unwrap(),
            UserActionKind::NonDisclose
        );
        assert!("List".parse::<ActionKind>().is_err());
    }

    #[test]
    fn unknown_labels_are_errors() {
        assert!(matches!(
            "Elict".parse::<AgentActionKind>(),
            Err(Error::Taxonomy { .. })
        ));
        assert!("Inquire.Elicit".parse::<UserActionKind>().is_err());
        assert!("Reveal.Elicit".parse::<AgentActionKind>().is_err());
        assert!("".parse::<UserActionKind>().is_err());
    }

    #[test]
    fn every_kind_has_one_category_and_main_action() {
        for &k in UserActionKind::ALL {
            let main = k.main_action();
            assert!(main.members().any(|m| m == k));
            let _ = k.category();
        }
        let total: usize = MainAction::ALL.iter().map(|m| m.members().count()).sum();
        assert_eq!(total, UserActionKind::ALL.len());
    }
}
