use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::Deserialize;

use super::taxonomy::{AgentActionKind, UserActionKind};
use crate::error::{Error, Result};

const DEFAULT_TABLE: &str = include_str!("../../data/compatibility.toml");

/// Which agent acts are an appropriate response to each user act.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompatibilityTable {
    accepts: BTreeMap<UserActionKind, BTreeSet<AgentActionKind>>,
}

#[derive(Deserialize)]
struct TableFile {
    compatible: BTreeMap<String, Vec<String>>,
}

impl Default for CompatibilityTable {
    fn default() -> Self {
        Self::from_toml_str(DEFAULT_TABLE).expect("shipped compatibility table is valid")
    }
}

impl CompatibilityTable {
    pub fn new(accepts: BTreeMap<UserActionKind, BTreeSet<AgentActionKind>>) -> Self {
        CompatibilityTable { accepts }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let file: TableFile =
            toml::from_str(text).map_err(|e| Error::parse("compatibility table", e.to_string()))?;
        let mut accepts = BTreeMap::new();
        for (user, agents) in file.compatible {
            let user: UserActionKind = user.parse()?;
            let agents = agents
                .iter()
                .map(|a| a.parse::<AgentActionKind>())
                .collect::<Result<BTreeSet<_>>>()?;
            accepts.insert(user, agents);
        }
        Ok(CompatibilityTable { accepts })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn compatible(&self, user: UserActionKind, agent: AgentActionKind) -> bool {
        self.accepts.get(&user).is_some_and(|s| s.contains(&agent))
    }

    /// Acceptable agent responses for `user`, in canonical order.
    pub fn responses(&self, user: UserActionKind) -> Vec<AgentActionKind> {
        self.accepts
            .get(&user)
            .map(|s| s.iter().copied().collect())
            .unwrap_or_default()
    }

    /// User acts with no acceptable response.
    pub fn dead_ends(&self) -> Vec<UserActionKind> {
        UserActionKind::ALL
            .iter()
            .copied()
            .filter(|&u| self.accepts.get(&u).is_none_or(BTreeSet::is_empty))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use AgentActionKind as B;
    use UserActionKind as A;

    #[test]
    fn documented_inquire_cases() {
        let t = CompatibilityTable::default();
        assert!(t.compatible(A::List, B::List));
        assert!(t.compatible(A::List, B::Elicit));
        assert!(!t.compatible(A::List, B::End));
        assert!(!t.compatible(A::Complete, B::Record));
    }

    #[test]
    fn default_table_has_no_dead_ends() {
        assert!(CompatibilityTable::default().dead_ends().is_empty());
    }

    #[test]
    fn compatible_is_pure_and_total() {
        let t = CompatibilityTable::default();
        for &u in A::ALL {
            for &b in B::ALL {
                assert_eq!(t.compatible(u, b), t.compatible(u, b));
            }
        }
    }

    #[test]
    fn unknown_labels_rejected_at_load() {
        let bad = "[compatible]\n\"Inquire.List\" = [\"Elict\"]\n";
        assert!(matches!(
            CompatibilityTable::from_toml_str(bad),
            Err(Error::Taxonomy { .. })
        ));
        let bad_user = "[compatible]\n\"Wander\" = [\"Reveal.List\"]\n";
        assert!(CompatibilityTable::from_toml_str(bad_user).is_err());
    }

    #[test]
    fn override_replaces_default() {
        let t = CompatibilityTable::from_toml_str(
            "[compatible]\n\"Navigate.Complete\" = [\"Traverse.Record\"]\n",
        )
        .unwrap();
        assert!(t.compatible(A::Complete, B::Record));
        assert!(!t.compatible(A::Complete, B::End));
        assert_eq!(t.dead_ends().len(), A::ALL.len() - 1);
    }
}
