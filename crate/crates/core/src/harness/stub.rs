//! Stub agents of known quality that speak the wire protocol.
//!
//! A stub recognises the user's act with a retrieval index built from the
//! user template bank, chooses its own act by policy, and renders it with
//! the agent template bank. Each conversation gets its own random stream
//! derived from the stub seed and the conversation id.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;
use std::sync::Mutex;

use rand::Rng;

use crate::corpus::Catalog;
use crate::domain::{AgentActionKind, CompatibilityTable, MainAction, SlotName, UserActionKind};
use crate::engine::{AgentRequest, AgentResponse, AgentService, Capability};
use crate::error::{Error, Result};
use crate::nlg::{required_slots, TemplateBank};
use crate::nlu::LabeledUtteranceIndex;
use crate::sampling::{choose, seeded, SimRng};

#[derive(Debug, Clone, PartialEq)]
pub enum StubPolicy {
    /// Always answers with a compatible act.
    Perfect,
    /// Compatible with probability p, otherwise a uniformly drawn
    /// incompatible act.
    Flaky(f64),
    /// Fixed act per recognised user act; `None` sends an empty reply.
    Scripted(BTreeMap<UserActionKind, Option<AgentActionKind>>),
}

impl StubPolicy {
    pub fn validate(&self) -> Result<()> {
        match self {
            StubPolicy::Flaky(p) if !(0.0..=1.0).contains(p) => {
                Err(Error::Config(format!("FLAKY probability {p} outside [0, 1]")))
            }
            StubPolicy::Scripted(table) => match UserActionKind::ALL.iter().find(|k| !table.contains_key(k)) {
                Some(k) => Err(Error::Config(format!("script has no entry for {k}"))),
                None => Ok(()),
            },
            _ => Ok(()),
        }
    }

    /// Builds a script from label keys. A key may name a user act or a
    /// CIR6 main action (covering all its members); an empty value means
    /// no reply. More specific keys win over main-action keys.
    pub fn script_from_labels(entries: &BTreeMap<String, String>) -> Result<Self> {
        let mut by_main = BTreeMap::new();
        let mut by_kind = BTreeMap::new();
        for (key, value) in entries {
            let reply = if value.trim().is_empty() {
                None
            } else {
                Some(value.parse::<AgentActionKind>()?)
            };
            match key.parse::<MainAction>() {
                Ok(main) => {
                    by_main.insert(main, reply);
                }
                Err(_) => {
                    by_kind.insert(key.parse::<UserActionKind>()?, reply);
                }
            }
        }
        let mut table = BTreeMap::new();
        for &kind in UserActionKind::ALL {
            if let Some(reply) = by_kind.get(&kind).or_else(|| by_main.get(&kind.main_action())) {
                table.insert(kind, *reply);
            }
        }
        let policy = StubPolicy::Scripted(table);
        policy.validate()?;
        Ok(policy)
    }
}

impl fmt::Display for StubPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StubPolicy::Perfect => f.write_str("PERFECT"),
            StubPolicy::Flaky(p) => write!(f, "FLAKY({p})"),
            StubPolicy::Scripted(_) => f.write_str("SCRIPTED"),
        }
    }
}

/// Parses `PERFECT` or `FLAKY:<p>`; scripts come from configuration files.
impl FromStr for StubPolicy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let upper = s.trim().to_ascii_uppercase();
        if upper == "PERFECT" {
            return Ok(StubPolicy::Perfect);
        }
        let p = upper
            .strip_prefix("FLAKY:")
            .or_else(|| upper.strip_prefix("FLAKY(").and_then(|r| r.strip_suffix(')')))
            .ok_or_else(|| Error::Config(format!("unknown stub policy `{s}`")))?;
        let p: f64 = p.parse().map_err(|_| Error::Config(format!("bad FLAKY probability in `{s}`")))?;
        let policy = StubPolicy::Flaky(p);
        policy.validate()?;
        Ok(policy)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StubAgentSpec {
    pub name: String,
    pub policy: StubPolicy,
    pub capabilities: BTreeSet<Capability>,
    /// Item ids the stub recommends from.
    pub pool: Vec<String>,
    pub seed: u64,
}

impl StubAgentSpec {
    pub fn new(name: impl Into<String>, policy: StubPolicy, pool: Vec<String>, seed: u64) -> Self {
        StubAgentSpec {
            name: name.into(),
            policy,
            capabilities: Capability::ALL.into_iter().collect(),
            pool,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.policy.validate()?;
        if self.capabilities.is_empty() {
            return Err(Error::Config(format!("stub `{}` declares no capability", self.name)));
        }
        if self.pool.is_empty() {
            return Err(Error::Config(format!("stub `{}` has no items to recommend", self.name)));
        }
        Ok(())
    }
}

/// Items whose attribute list contains `attribute`; all items when `None`.
pub fn pool_with_attribute(catalog: &Catalog, attribute: Option<&str>, exclude: &BTreeSet<String>) -> Vec<String> {
    catalog
        .items
        .iter()
        .filter(|(id, item)| {
            !exclude.contains(*id) && attribute.is_none_or(|a| item.attributes.iter().any(|x| x == a))
        })
        .map(|(id, _)| id.clone())
        .collect()
}

pub struct StubAgent {
    spec: StubAgentSpec,
    compatibility: CompatibilityTable,
    user_index: LabeledUtteranceIndex<UserActionKind>,
    bank: TemplateBank<AgentActionKind>,
    catalog: Catalog,
    sessions: Mutex<HashMap<String, SimRng>>,
}

impl fmt::Debug for StubAgent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("StubAgent").field("spec", &self.spec).finish_non_exhaustive()
    }
}

/// FNV-1a, used to derive a stable per-conversation seed.
fn fnv1a(text: &str) -> u64 {
    text.bytes()
        .fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ u64::from(b)).wrapping_mul(0x0100_0000_01b3))
}

impl StubAgent {
    /// Stub with the shipped compatibility table and template banks.
    pub fn new(spec: StubAgentSpec, catalog: Catalog) -> Result<Self> {
        Self::with_resources(
            spec,
            catalog,
            CompatibilityTable::default(),
            &TemplateBank::default_user(),
            TemplateBank::default_agent(),
        )
    }

    pub fn with_resources(
        spec: StubAgentSpec,
        catalog: Catalog,
        compatibility: CompatibilityTable,
        user_bank: &TemplateBank<UserActionKind>,
        agent_bank: TemplateBank<AgentActionKind>,
    ) -> Result<Self> {
        spec.validate()?;
        agent_bank.check_coverage(AgentActionKind::ALL.iter().copied())?;
        if let Some(id) = spec.pool.iter().find(|id| catalog.get(id).is_none()) {
            return Err(Error::Referential { item: id.clone() });
        }
        Ok(StubAgent {
            user_index: user_bank.to_index()?,
            spec,
            compatibility,
            bank: agent_bank,
            catalog,
            sessions: Mutex::new(HashMap::new()),
        })
    }

    pub fn spec(&self) -> &StubAgentSpec {
        &self.spec
    }

    fn choose_act(&self, user: Option<UserActionKind>, opening: bool, rng: &mut SimRng) -> Option<AgentActionKind> {
        if opening {
            return Some(AgentActionKind::Elicit);
        }
        let compatible = |u: UserActionKind| self.compatibility.responses(u);
        match &self.spec.policy {
            StubPolicy::Perfect => Some(match user {
                Some(u) => *choose(&compatible(u), rng).unwrap_or(&AgentActionKind::Clarify),
                None => AgentActionKind::Clarify,
            }),
            StubPolicy::Flaky(p) => {
                let ok = rng.gen_bool(*p);
                let Some(u) = user else {
                    return Some(AgentActionKind::Clarify);
                };
                let good = compatible(u);
                let pool: Vec<AgentActionKind> = if ok {
                    good
                } else {
                    AgentActionKind::ALL.iter().copied().filter(|b| !good.contains(b)).collect()
                };
                choose(&pool, rng).copied().or(Some(AgentActionKind::Clarify))
            }
            StubPolicy::Scripted(table) => user.and_then(|u| table.get(&u).copied().flatten()),
        }
    }

    pub fn respond(&self, request: &AgentRequest) -> AgentResponse {
        let opening = request.utterance.trim().is_empty() && request.turn == 0;
        let user = self.user_index.classify(&request.utterance).label();
        let mut sessions = self.sessions.lock().unwrap_or_else(|e| e.into_inner());
        let fresh = || seeded(self.spec.seed ^ fnv1a(&request.conversation_id));
        if request.turn == 0 {
            sessions.insert(request.conversation_id.clone(), fresh());
        }
        let rng = sessions.entry(request.conversation_id.clone()).or_insert_with(fresh);
        let Some(act) = self.choose_act(user, opening, rng) else {
            return AgentResponse {
                utterance: String::new(),
                actions: Some(Vec::new()),
                error: None,
            };
        };
        let mut slots = Vec::new();
        for slot in required_slots(&self.bank, act) {
            let value = match slot {
                SlotName::Item => choose(&self.spec.pool, rng).cloned().unwrap_or_default(),
                SlotName::Attribute => "popular".to_string(),
                SlotName::Sentiment => "like".to_string(),
            };
            slots.push((slot, value));
        }
        match self.bank.render_indexed(act, &slots, Some(&self.catalog), rng) {
            Ok((_, utterance)) => AgentResponse {
                utterance,
                actions: Some(vec![act.label()]),
                error: None,
            },
            Err(e) => AgentResponse::protocol_error(e.to_string()),
        }
    }
}

impl AgentService for StubAgent {
    fn handle_line(&self, line: &str) -> String {
        let response = match serde_json::from_str::<AgentRequest>(line) {
            Ok(request) => self.respond(&request),
            Err(e) => AgentResponse::protocol_error(format!("malformed request: {e}")),
        };
        serde_json::to_string(&response).expect("response serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::CatalogItem;
    use crate::domain::{DialogueAction, UserActionKind as U};

    fn catalog() -> Catalog {
        let mut c = Catalog::default();
        c.items.insert("1".into(), CatalogItem { title: "Quiet Harbor (1990)".into(), attributes: vec!["Drama".into()] });
        c.items.insert("2".into(), CatalogItem { title: "Laughing Fox (2001)".into(), attributes: vec!["Comedy".into()] });
        c
    }

    fn stub(policy: StubPolicy) -> StubAgent {
        StubAgent::new(StubAgentSpec::new("s", policy, vec!["1".into(), "2".into()], 9), catalog()).unwrap()
    }

    fn say(kind: U, seed: u64) -> String {
        let bank = TemplateBank::default_user();
        let mut a = DialogueAction::user(kind);
        for s in required_slots(&bank, kind) {
            a = a.with_slot(s, "Comedy");
        }
        bank.render(&a, None, &mut seeded(seed)).unwrap()
    }

    fn ask(agent: &StubAgent, conv: &str, utterance: &str) -> AgentResponse {
        agent.respond(&AgentRequest { conversation_id: conv.into(), turn: 1, utterance: utterance.into() })
    }

    #[test]
    fn perfect_is_always_compatible() {
        let agent = stub(StubPolicy::Perfect);
        let table = CompatibilityTable::default();
        for (i, &k) in U::ALL.iter().enumerate() {
            for s in 0..5 {
                let r = ask(&agent, &format!("c{i}"), &say(k, s));
                let b: AgentActionKind = r.actions.unwrap()[0].parse().unwrap();
                assert!(table.compatible(k, b), "{k} -> {b}");
            }
        }
    }

    #[test]
    fn flaky_rate_concentrates() {
        let agent = stub(StubPolicy::Flaky(0.8));
        let table = CompatibilityTable::default();
        let mut ok = 0;
        for i in 0..2000 {
            let r = ask(&agent, &format!("c{i}"), &say(U::Disclose, i));
            let b: AgentActionKind = r.actions.unwrap()[0].parse().unwrap();
            ok += usize::from(table.compatible(U::Disclose, b));
        }
        let rate = ok as f64 / 2000.0;
        assert!((0.76..=0.84).contains(&rate), "{rate}");
    }

    #[test]
    fn scripted_empty_reply() {
        let script: BTreeMap<String, String> = [
            ("Inquire".to_string(), String::new()),
            ("Disclose".to_string(), "Reveal.Show".to_string()),
            ("Reveal".to_string(), "Reveal.Show".to_string()),
            ("Navigate".to_string(), "Reveal.Show".to_string()),
            ("Note".to_string(), "Traverse.Record".to_string()),
            ("Complete".to_string(), "Traverse.End".to_string()),
        ]
        .into();
        let agent = stub(StubPolicy::script_from_labels(&script).unwrap());
        let r = ask(&agent, "c", &say(U::List, 0));
        assert_eq!(r.utterance, "");
        let r = ask(&agent, "c", &say(U::Disclose, 0));
        assert_eq!(r.actions.unwrap(), vec!["Reveal.Show"]);
        let partial: BTreeMap<String, String> = [("Inquire".to_string(), String::new())].into();
        assert!(StubPolicy::script_from_labels(&partial).is_err());
    }

    #[test]
    fn per_conversation_streams_are_isolated() {
        let a = stub(StubPolicy::Flaky(0.5));
        let b = stub(StubPolicy::Flaky(0.5));
        let u = say(U::Disclose, 0);
        // Interleaving another conversation on `a` must not change c1's replies.
        let mut x = Vec::new();
        for _ in 0..10 {
            x.push(ask(&a, "c1", &u));
            ask(&a, "c2", &u);
        }
        let y: Vec<_> = (0..10).map(|_| ask(&b, "c1", &u)).collect();
        assert_eq!(x, y);
    }

    #[test]
    fn malformed_request_gets_error_line() {
        let agent = stub(StubPolicy::Perfect);
        let line = agent.handle_line("{oops");
        let r: AgentResponse = serde_json::from_str(&line).unwrap();
        assert!(r.error.is_some());
        let ok = agent.handle_line(r#"{"conversation_id":"c","turn":0,"utterance":""}"#);
        assert!(ok.contains("Inquire.Elicit"));
    }

    #[test]
    fn policy_parsing() {
        assert_eq!("perfect".parse::<StubPolicy>().unwrap(), StubPolicy::Perfect);
        assert_eq!("FLAKY:0.8".parse::<StubPolicy>().unwrap(), StubPolicy::Flaky(0.8));
        assert_eq!("FLAKY(0.6)".parse::<StubPolicy>().unwrap(), StubPolicy::Flaky(0.6));
        assert!("FLAKY:1.5".parse::<StubPolicy>().is_err());
        assert!("LAZY".parse::<StubPolicy>().is_err());
    }

    #[test]
    fn pool_filter() {
        let pool = pool_with_attribute(&catalog(), Some("Comedy"), &BTreeSet::new());
        assert_eq!(pool, vec!["2"]);
        assert_eq!(pool_with_attribute(&catalog(), None, &["1".to_string()].into()), vec!["2"]);
    }
}
