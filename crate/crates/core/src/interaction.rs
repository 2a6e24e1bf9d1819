//! Agenda dynamics of the simulated user.
//!
//! After each agent turn the user either pulls the accomplished action off
//! the agenda (δ = 1) or replaces it with ã ~ P(ã | b) (δ = 0). Replacement
//! keeps the agenda depth, so a failing agent cannot grow it; the engine's
//! turn cap bounds such dialogues. `Complete` is never drawn as a
//! replacement and, once on top, is always pulled: the user leaves whatever
//! the agent answers.

use std::collections::{BTreeSet, VecDeque};
use std::path::Path;

use rand::Rng;
use serde::Deserialize;

use crate::corpus::{build_agenda, ModelKind, TransitionModel};
use crate::domain::{
    Agenda, AgendaUpdate, AgentActionKind, CompatibilityTable, Goal, MainAction, UserActionKind,
};
use crate::error::{Error, Result};
use crate::preference::{PersonalKnowledgeGraph, Sentiment};

const DEFAULT_DIAGRAM: &str = include_str!("../data/cir6_diagram.toml");

/// Connectivity between CIR6 main actions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cir6StateDiagram {
    edges: BTreeSet<(MainAction, MainAction)>,
}

#[derive(Deserialize)]
struct DiagramFile {
    edges: Vec<(String, String)>,
}

impl Default for Cir6StateDiagram {
    fn default() -> Self {
        Self::from_toml_str(DEFAULT_DIAGRAM).expect("shipped diagram is valid")
    }
}

impl Cir6StateDiagram {
    /// Builds a diagram, rejecting edges out of `Complete` and nodes that
    /// cannot reach `Complete`.
    pub fn new(edges: impl IntoIterator<Item = (MainAction, MainAction)>) -> Result<Self> {
        let diagram = Cir6StateDiagram {
            edges: edges.into_iter().collect(),
        };
        if diagram.edges.iter().any(|(from, _)| *from == MainAction::Complete) {
            return Err(Error::Config("Complete must have no outgoing edges".into()));
        }
        for node in MainAction::ALL {
            if node != MainAction::Complete && !diagram.reaches_complete(node) {
                return Err(Error::Config(format!("{node} has no path to Complete")));
            }
        }
        Ok(diagram)
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let file: DiagramFile =
            toml::from_str(text).map_err(|e| Error::parse("CIR6 diagram", e.to_string()))?;
        let edges = file
            .edges
            .iter()
            .map(|(a, b)| Ok((a.parse()?, b.parse()?)))
            .collect::<Result<Vec<_>>>()?;
        Self::new(edges)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn allows(&self, from: MainAction, to: MainAction) -> bool {
        self.edges.contains(&(from, to))
    }

    pub fn edges(&self) -> impl Iterator<Item = (MainAction, MainAction)> + '_ {
        self.edges.iter().copied()
    }

    fn reaches_complete(&self, start: MainAction) -> bool {
        let mut seen = BTreeSet::from([start]);
        let mut queue = VecDeque::from([start]);
        while let Some(node) = queue.pop_front() {
            if node == MainAction::Complete {
                return true;
            }
            for (_, next) in self.edges.iter().filter(|(f, _)| *f == node) {
                if seen.insert(*next) {
                    queue.push_back(*next);
                }
            }
        }
        false
    }
}

fn main_of(label: &str) -> Result<MainAction> {
    label
        .parse::<MainAction>()
        .or_else(|_| label.parse::<UserActionKind>().map(UserActionKind::main_action))
}

/// Whether two consecutive acts are connected in the diagram. Accepts main
/// action names or fine user act labels (mapped to their main action).
pub fn cir6_transition_allowed(diagram: &Cir6StateDiagram, from: &str, to: &str) -> Result<bool> {
    Ok(diagram.allows(main_of(from)?, main_of(to)?))
}

/// Per-dialogue user state.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationState {
    pub agenda: Agenda,
    pub goal: Goal,
    pub last_user: Option<UserActionKind>,
    pub last_agent: Option<AgentActionKind>,
    /// User turns taken so far.
    pub turn: usize,
}

impl SimulationState {
    pub fn new(agenda: Agenda, goal: Goal) -> Self {
        SimulationState {
            agenda,
            goal,
            last_user: None,
            last_agent: None,
            turn: 0,
        }
    }
}

/// δ: the agent understood the user act and answered appropriately.
pub fn goal_accomplished(table: &CompatibilityTable, user: UserActionKind, agent: AgentActionKind) -> bool {
    table.compatible(user, agent)
}

/// Pull on success, replace-top on failure. QRFA additionally redraws the
/// newly exposed top from P(class | b) and the class's fine-act frequencies,
/// except for the final `Complete`. Returns `None` on an empty agenda.
pub fn update_agenda<R: Rng + ?Sized>(
    state: &mut SimulationState,
    model: &TransitionModel,
    delta: bool,
    rng: &mut R,
) -> Option<AgendaUpdate> {
    let top = state.agenda.top()?;
    if delta || top == UserActionKind::Complete {
        state.agenda.pull();
        if model.kind() == ModelKind::Qrfa && state.agenda.len() > 1 {
            if let Some(b) = state.last_agent {
                state.agenda.replace_top(next_user_action_qrfa(b, model, false, rng));
            }
        }
        return Some(AgendaUpdate::Pull);
    }
    // Unrecognised replies give no b; draw one uniformly.
    let b = state
        .last_agent
        .unwrap_or_else(|| AgentActionKind::ALL[rng.gen_range(0..AgentActionKind::ALL.len())]);
    let replacement = model.sample_replacement(b, false, rng);
    state.agenda.replace_top(replacement);
    Some(AgendaUpdate::Replace)
}

/// CIR6 step: trained P(next | current) masked by the diagram and
/// renormalized, falling back to uniform over allowed successors. `None`
/// from `Complete` or when nothing is allowed.
pub fn next_user_action_cir6<R: Rng + ?Sized>(
    current: UserActionKind,
    model: &TransitionModel,
    diagram: &Cir6StateDiagram,
    allow_complete: bool,
    rng: &mut R,
) -> Option<UserActionKind> {
    let from = current.main_action();
    if from == MainAction::Complete {
        return None;
    }
    model.cir6_successor(
        current,
        |to| diagram.allows(from, to) && (allow_complete || to != MainAction::Complete),
        rng,
    )
}

/// QRFA step conditioned on the observed agent act.
pub fn next_user_action_qrfa<R: Rng + ?Sized>(
    agent: AgentActionKind,
    model: &TransitionModel,
    allow_complete: bool,
    rng: &mut R,
) -> UserActionKind {
    model.qrfa_after_agent(agent, allow_complete, rng)
}

/// Initial agenda for either model; CIR6 walks are masked by `diagram`.
pub fn initial_agenda<R: Rng + ?Sized>(
    model: &TransitionModel,
    diagram: &Cir6StateDiagram,
    rng: &mut R,
) -> Agenda {
    match model.kind() {
        ModelKind::Cir6 => build_agenda(model, rng, |cur, rng| {
            next_user_action_cir6(cur, model, diagram, false, rng)
        }),
        ModelKind::Qrfa => crate::corpus::sample_initial_agenda(model, rng),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EarlyStop {
    /// Agenda emptied down to a final `Complete`.
    Cleared,
    /// The user has already seen the item; they say so and carry on.
    AlreadyConsumed,
    NotLiked,
}

/// Once the PKG user is offered an unseen item they would like, the rest of
/// the agenda is dropped and only `Complete` remains.
pub fn apply_pkg_early_stop(
    agenda: &mut Agenda,
    pkg: &PersonalKnowledgeGraph,
    item: &str,
    item_attributes: &[String],
) -> EarlyStop {
    if pkg.consumed(item) {
        return EarlyStop::AlreadyConsumed;
    }
    if pkg.predict(item_attributes) != Sentiment::Positive {
        return EarlyStop::NotLiked;
    }
    agenda.clear();
    agenda.push(UserActionKind::Complete);
    EarlyStop::Cleared
}
