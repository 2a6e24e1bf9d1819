//! Conversation manager: runs simulated users against an agent endpoint.
//!
//! Each dialogue renders the agenda's top act, sends it, recognises the
//! reply, computes δ, updates goal and agenda, and repeats until the agenda
//! is empty or the turn cap is hit. Every step is written to the transcript.

mod transport;

use std::str::FromStr;
use std::sync::Arc;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use transport::{
    serve_lines, serve_tcp, AgentEndpoint, AgentRequest, AgentResponse, AgentService, Capability, Connection,
    Transport, DEFAULT_TIMEOUT,
};

use crate::corpus::{Catalog, ModelKind, RatingsCorpus, TransitionModel};
use crate::domain::{
    AgendaUpdate, AgentActionKind, CompatibilityTable, DialogueAction, DialogueTranscript, Goal, SlotName, Speaker,
    TerminalStatus, Turn, UserActionKind,
};
use crate::error::{Error, Result};
use crate::interaction::{
    apply_pkg_early_stop, goal_accomplished, initial_agenda, update_agenda, Cir6StateDiagram, EarlyStop,
    SimulationState,
};
use crate::nlg::{required_slots, TemplateBank};
use crate::nlu::{EntityCatalog, LabeledUtteranceIndex, DEFAULT_FLOOR};
use crate::preference::{
    answer_preference_single, build_pkg, PersonalKnowledgeGraph, ProfileSampler, Sentiment, UserProfile,
};
use crate::sampling::{choose, seeded, SimRng};

pub const DEFAULT_TURN_CAP: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum PreferenceKind {
    Single,
    Pkg,
}

/// Who speaks first.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Opening {
    #[default]
    UserFirst,
    AgentFirst,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulatorConfig {
    pub interaction: ModelKind,
    pub preference: PreferenceKind,
    pub turn_cap: usize,
    pub similarity_floor: f64,
    pub opening: Opening,
    /// Trust the agent's declared actions instead of classifying its text.
    pub oracle_nlu: bool,
}

impl SimulatorConfig {
    pub fn new(interaction: ModelKind, preference: PreferenceKind) -> Result<Self> {
        let config = SimulatorConfig {
            interaction,
            preference,
            turn_cap: DEFAULT_TURN_CAP,
            similarity_floor: DEFAULT_FLOOR,
            opening: Opening::UserFirst,
            oracle_nlu: false,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn qrfa_single() -> Self {
        Self::new(ModelKind::Qrfa, PreferenceKind::Single).expect("valid preset")
    }

    pub fn cir6_single() -> Self {
        Self::new(ModelKind::Cir6, PreferenceKind::Single).expect("valid preset")
    }

    pub fn cir6_pkg() -> Self {
        Self::new(ModelKind::Cir6, PreferenceKind::Pkg).expect("valid preset")
    }

    pub fn presets() -> [SimulatorConfig; 3] {
        [Self::qrfa_single(), Self::cir6_single(), Self::cir6_pkg()]
    }

    pub fn name(&self) -> String {
        let i = match self.interaction {
            ModelKind::Qrfa => "QRFA",
            ModelKind::Cir6 => "CIR6",
        };
        let p = match self.preference {
            PreferenceKind::Single => "Single",
            PreferenceKind::Pkg => "PKG",
        };
        format!("{i}-{p}")
    }

    pub fn validate(&self) -> Result<()> {
        if self.interaction == ModelKind::Qrfa && self.preference == PreferenceKind::Pkg {
            return Err(Error::Config("QRFA-PKG is not a supported simulator".into()));
        }
        if self.turn_cap == 0 {
            return Err(Error::Config("turn cap must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.similarity_floor) {
            return Err(Error::Config(format!("similarity floor {} outside [0, 1]", self.similarity_floor)));
        }
        Ok(())
    }
}

impl FromStr for SimulatorConfig {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "QRFA-SINGLE" => Ok(Self::qrfa_single()),
            "CIR6-SINGLE" => Ok(Self::cir6_single()),
            "CIR6-PKG" => Ok(Self::cir6_pkg()),
            "QRFA-PKG" => Err(Error::Config("QRFA-PKG is not a supported simulator".into())),
            _ => Err(Error::Config(format!("unknown simulator `{s}`"))),
        }
    }
}

/// Trained models and lookup tables shared read-only by all dialogues.
#[derive(Debug, Clone)]
pub struct Resources {
    pub cir6: Option<TransitionModel>,
    pub qrfa: Option<TransitionModel>,
    pub diagram: Cir6StateDiagram,
    pub compatibility: CompatibilityTable,
    pub user_bank: TemplateBank<UserActionKind>,
    pub agent_index: LabeledUtteranceIndex<AgentActionKind>,
    pub entities: EntityCatalog,
    pub ratings: RatingsCorpus,
    pub profiles: ProfileSampler,
}

impl Resources {
    /// Default diagram, compatibility table and template banks; the NLU
    /// index is built from the shipped agent templates.
    pub fn new(ratings: RatingsCorpus, cir6: Option<TransitionModel>, qrfa: Option<TransitionModel>) -> Result<Self> {
        let profiles = ProfileSampler::new(&ratings)?;
        let entities = EntityCatalog::from_catalog(ratings.catalog())?;
        Ok(Resources {
            cir6,
            qrfa,
            diagram: Cir6StateDiagram::default(),
            compatibility: CompatibilityTable::default(),
            user_bank: TemplateBank::default_user(),
            agent_index: TemplateBank::default_agent().to_index()?,
            entities,
            ratings,
            profiles,
        })
    }

    pub fn model(&self, kind: ModelKind) -> Option<&TransitionModel> {
        match kind {
            ModelKind::Cir6 => self.cir6.as_ref(),
            ModelKind::Qrfa => self.qrfa.as_ref(),
        }
    }

    pub fn catalog(&self) -> &Catalog {
        self.ratings.catalog()
    }
}

/// A configured simulator bound to its resources.
#[derive(Debug, Clone)]
pub struct Simulator {
    config: SimulatorConfig,
    resources: Arc<Resources>,
    index: LabeledUtteranceIndex<AgentActionKind>,
}

impl Simulator {
    pub fn new(config: SimulatorConfig, resources: Arc<Resources>) -> Result<Self> {
        config.validate()?;
        let model = resources
            .model(config.interaction)
            .ok_or_else(|| Error::Config(format!("{} needs a trained {:?} model", config.name(), config.interaction)))?;
        model.validate()?;
        resources.user_bank.check_coverage(UserActionKind::ALL.iter().copied())?;
        let index = resources.agent_index.clone().with_floor(config.similarity_floor);
        Ok(Simulator {
            config,
            resources,
            index,
        })
    }

    pub fn config(&self) -> &SimulatorConfig {
        &self.config
    }

    pub fn name(&self) -> String {
        self.config.name()
    }

    pub fn resources(&self) -> &Resources {
        &self.resources
    }

    fn model(&self) -> &TransitionModel {
        self.resources.model(self.config.interaction).expect("checked in new")
    }

    /// Runs one dialogue. Transport failures end the dialogue with
    /// `AGENT_ERROR`; they are never returned as errors.
    pub fn run_dialogue(&self, endpoint: &AgentEndpoint, seed: u64) -> DialogueTranscript {
        let mut rng = seeded(seed);
        let res = &*self.resources;
        let profile = res.profiles.sample(&mut rng);
        let pkg = match self.config.preference {
            PreferenceKind::Pkg => Some(build_pkg(&profile, res.catalog()).expect("profile items come from the catalog")),
            PreferenceKind::Single => None,
        };
        let agenda = initial_agenda(self.model(), &res.diagram, &mut rng);
        let mut user = UserContext {
            profile,
            pkg,
            last_item: None,
            catalog: res.catalog(),
        };
        let goal = Goal::new(user.preferred_attributes());
        let mut transcript = DialogueTranscript {
            conversation_id: format!("{}-{seed}", self.name()),
            agent: endpoint.name.clone(),
            simulator: self.name(),
            seed,
            status: TerminalStatus::Completed,
            initial_agenda: agenda.execution_order().collect(),
            turns: Vec::new(),
            error: None,
        };
        let mut state = SimulationState::new(agenda, goal);

        let mut conn = match endpoint.connect() {
            Ok(c) => c,
            Err(e) => return fail(transcript, e),
        };

        if self.config.opening == Opening::AgentFirst {
            let response = match self.exchange(conn.as_mut(), &transcript, String::new()) {
                Ok(r) => r,
                Err(e) => return fail(transcript, e),
            };
            let (agent, action) = self.recognise(&response);
            state.last_agent = agent;
            transcript.turns.push(Turn {
                index: 0,
                speaker: Speaker::Agent,
                utterance: response.utterance,
                actions: action.into_iter().collect(),
                goal_satisfied: None,
                agenda_update: None,
                agenda_len: Some(state.agenda.len()),
            });
        }

        loop {
            let Some(top) = state.agenda.top() else {
                transcript.status = TerminalStatus::Completed;
                break;
            };
            if state.turn >= self.config.turn_cap {
                transcript.status = TerminalStatus::TurnCapReached;
                break;
            }
            let mut act = DialogueAction::user(top);
            for slot in required_slots(&res.user_bank, top) {
                act = act.with_slot(slot, user.slot_value(slot, &mut rng));
            }
            let utterance = match res.user_bank.render(&act, Some(res.catalog()), &mut rng) {
                Ok(u) => u,
                Err(e) => return fail(transcript, e),
            };
            transcript.turns.push(Turn {
                index: transcript.turns.len(),
                speaker: Speaker::User,
                utterance: utterance.clone(),
                actions: vec![act],
                goal_satisfied: None,
                agenda_update: None,
                agenda_len: None,
            });
            state.turn += 1;
            state.last_user = Some(top);

            let response = match self.exchange(conn.as_mut(), &transcript, utterance) {
                Ok(r) => r,
                Err(e) => return fail(transcript, e),
            };
            let (agent, action) = self.recognise(&response);
            let delta = agent.is_some_and(|b| goal_accomplished(&res.compatibility, top, b));
            state.goal.update(delta, agent);
            state.last_agent = agent;
            let mut update = update_agenda(&mut state, self.model(), delta, &mut rng);

            let item = action.as_ref().and_then(|a| a.slot(SlotName::Item)).map(str::to_string);
            if let Some(item) = &item {
                user.last_item = Some(item.clone());
                if let (Some(pkg), Some(b)) = (&user.pkg, agent) {
                    if delta && b.is_recommendation() && !state.agenda.is_empty() {
                        let attrs = res.catalog().attributes(item).unwrap_or(&[]);
                        if apply_pkg_early_stop(&mut state.agenda, pkg, item, attrs) == EarlyStop::Cleared {
                            update = Some(AgendaUpdate::EarlyStop);
                        }
                    }
                }
            }
            transcript.turns.push(Turn {
                index: transcript.turns.len(),
                speaker: Speaker::Agent,
                utterance: response.utterance,
                actions: action.into_iter().collect(),
                goal_satisfied: Some(delta),
                agenda_update: update,
                agenda_len: Some(state.agenda.len()),
            });
        }
        transcript
    }

    fn exchange(&self, conn: &mut dyn Connection, t: &DialogueTranscript, utterance: String) -> Result<AgentResponse> {
        conn.exchange(&AgentRequest {
            conversation_id: t.conversation_id.clone(),
            turn: t.turns.len().saturating_sub(1),
            utterance,
        })
    }

    /// The agent act behind a response plus the first linked item.
    fn recognise(&self, response: &AgentResponse) -> (Option<AgentActionKind>, Option<DialogueAction>) {
        let analysis = self.index.analyze(&response.utterance, &self.resources.entities);
        let agent = if self.config.oracle_nlu {
            match response.actions.as_deref() {
                Some([first, ..]) => first.parse::<AgentActionKind>().ok(),
                _ => analysis.classification.label(),
            }
        } else {
            analysis.classification.label()
        };
        let action = agent.map(|b| {
            let mut a = DialogueAction::agent(b);
            if let Some(link) = analysis.links.first() {
                a = a.with_slot(SlotName::Item, link.entity.clone());
            }
            a
        });
        (agent, action)
    }

    /// `n` dialogues with seeds `base_seed + i`, run in parallel and
    /// returned in index order.
    pub fn run_campaign(&self, endpoint: &AgentEndpoint, n: usize, base_seed: u64) -> Result<Vec<DialogueTranscript>> {
        if n == 0 {
            return Err(Error::Argument("a campaign needs at least one dialogue".into()));
        }
        endpoint.validate()?;
        Ok((0..n as u64)
            .into_par_iter()
            .map(|i| self.run_dialogue(endpoint, base_seed.wrapping_add(i)))
            .collect())
    }
}

fn fail(mut transcript: DialogueTranscript, error: Error) -> DialogueTranscript {
    transcript.status = TerminalStatus::AgentError;
    transcript.error = Some(error.to_string());
    transcript
}

pub fn run_dialogue(simulator: &Simulator, endpoint: &AgentEndpoint, seed: u64) -> DialogueTranscript {
    simulator.run_dialogue(endpoint, seed)
}

pub fn run_campaign(
    simulator: &Simulator,
    endpoint: &AgentEndpoint,
    n: usize,
    base_seed: u64,
) -> Result<Vec<DialogueTranscript>> {
    simulator.run_campaign(endpoint, n, base_seed)
}

/// Per-dialogue preference state used to fill user slots.
struct UserContext<'a> {
    profile: UserProfile,
    pkg: Option<PersonalKnowledgeGraph>,
    last_item: Option<String>,
    catalog: &'a Catalog,
}

pub const SENTIMENT_WORDS: [(Sentiment, &str); 3] = [
    (Sentiment::Positive, "like"),
    (Sentiment::Negative, "dislike"),
    (Sentiment::Neutral, "do not mind"),
];
pub const SEEN_WORDS: &str = "have already seen";

impl UserContext<'_> {
    /// PKG users name attributes with positive r_j; single-item users name
    /// the attributes of their liked items.
    fn preferred_attributes(&self) -> Vec<String> {
        match &self.pkg {
            Some(pkg) => pkg.liked_attributes().map(str::to_string).collect(),
            None => {
                let mut attrs: Vec<String> = self
                    .profile
                    .liked()
                    .filter_map(|i| self.catalog.attributes(i))
                    .flatten()
                    .cloned()
                    .collect();
                attrs.sort();
                attrs.dedup();
                attrs
            }
        }
    }

    fn slot_value(&self, slot: SlotName, rng: &mut SimRng) -> String {
        match slot {
            SlotName::Attribute => {
                let attrs = self.preferred_attributes();
                choose(&attrs, rng).cloned().unwrap_or_else(|| "popular".to_string())
            }
            SlotName::Item => match &self.last_item {
                Some(item) => item.clone(),
                None => {
                    let liked: Vec<&str> = self.profile.liked().collect();
                    choose(&liked, rng).map_or_else(|| "something".to_string(), |s| s.to_string())
                }
            },
            SlotName::Sentiment => self.sentiment_about_last(rng),
        }
    }

    fn sentiment_about_last<R: Rng + ?Sized>(&self, rng: &mut R) -> String {
        let sentiment = match (&self.last_item, &self.pkg) {
            (Some(item), _) if self.profile.consumed(item) => return SEEN_WORDS.to_string(),
            (Some(item), Some(pkg)) => pkg.predict(self.catalog.attributes(item).unwrap_or(&[])),
            (None, Some(_)) => Sentiment::Positive,
            (_, None) => answer_preference_single(rng),
        };
        SENTIMENT_WORDS
            .iter()
            .find(|(s, _)| *s == sentiment)
            .map(|(_, w)| w.to_string())
            .expect("every sentiment has words")
    }
}
