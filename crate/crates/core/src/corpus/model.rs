//! Empirical transition models estimated from annotated dialogues.
//!
//! Every conditional distribution keeps its raw counts next to the smoothed
//! probabilities, so unsmoothed estimates can be audited against a direct
//! count of the corpus.

use std::collections::BTreeMap;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::dialogues::AnnotatedDialogueCorpus;
use super::qrfa::{self, QrfaClass, USER_CLASSES};
use crate::domain::{Agenda, AgentActionKind, MainAction, Speaker, UserActionKind};
use crate::error::{Error, Result};
use crate::sampling::sample_weighted;

/// Default add-α pseudo-count.
pub const DEFAULT_SMOOTHING: f64 = 0.1;

/// Tolerance for row normalization.
pub const ROW_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub counts: Vec<u64>,
    pub probs: Vec<f64>,
}

impl Row {
    /// Add-α estimate over the outcomes flagged in `support`. A row without
    /// observations is uniform over its support.
    fn estimate(counts: Vec<u64>, support: &[bool], alpha: f64) -> Row {
        debug_assert_eq!(counts.len(), support.len());
        let k = support.iter().filter(|s| **s).count() as f64;
        let total: u64 = counts
            .iter()
            .zip(support)
            .filter(|(_, s)| **s)
            .map(|(c, _)| *c)
            .sum();
        let probs = counts
            .iter()
            .zip(support)
            .map(|(&c, &s)| {
                if !s {
                    0.0
                } else if total == 0 {
                    1.0 / k
                } else {
                    (c as f64 + alpha) / (total as f64 + alpha * k)
                }
            })
            .collect();
        Row { counts, probs }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    fn check(&self, what: &str) -> Result<()> {
        let sum: f64 = self.probs.iter().sum();
        if (sum - 1.0).abs() > ROW_TOLERANCE || self.probs.iter().any(|p| *p < 0.0 || p.is_nan()) {
            return Err(Error::Estimation(format!("{what}: row sums to {sum}")));
        }
        if self.counts.len() != self.probs.len() {
            return Err(Error::Estimation(format!("{what}: count/probability length mismatch")));
        }
        Ok(())
    }
}

/// P(outcome | condition), one row per condition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionalTable {
    pub conditions: Vec<String>,
    pub outcomes: Vec<String>,
    pub rows: Vec<Row>,
}

impl ConditionalTable {
    fn estimate(
        conditions: Vec<String>,
        outcomes: Vec<String>,
        counts: Vec<Vec<u64>>,
        support: impl Fn(usize, usize) -> bool,
        alpha: f64,
    ) -> Self {
        let rows = counts
            .into_iter()
            .enumerate()
            .map(|(c, row)| {
                let mask: Vec<bool> = (0..row.len()).map(|o| support(c, o)).collect();
                Row::estimate(row, &mask, alpha)
            })
            .collect();
        ConditionalTable {
            conditions,
            outcomes,
            rows,
        }
    }

    pub fn prob(&self, condition: usize, outcome: usize) -> f64 {
        self.rows[condition].probs[outcome]
    }

    pub fn count(&self, condition: usize, outcome: usize) -> u64 {
        self.rows[condition].counts[outcome]
    }

    fn check(&self, what: &str) -> Result<()> {
        if self.rows.len() != self.conditions.len() {
            return Err(Error::Estimation(format!("{what}: row count mismatch")));
        }
        for (row, cond) in self.rows.iter().zip(&self.conditions) {
            if row.probs.len() != self.outcomes.len() {
                return Err(Error::Estimation(format!("{what}[{cond}]: width mismatch")));
            }
            row.check(&format!("{what}[{cond}]"))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum ModelKind {
    Cir6,
    Qrfa,
}

/// Model-specific transition tables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "UPPERCASE")]
pub enum Dynamics {
    Cir6 {
        /// P(next main action | current main action).
        main_transitions: ConditionalTable,
        /// P(fine act | main action).
        fine_within_main: ConditionalTable,
    },
    Qrfa {
        /// P(b | coarse user class).
        agent_given_class: ConditionalTable,
        /// P(coarse user class | b).
        class_given_agent: ConditionalTable,
        /// P(fine act | coarse user class).
        fine_within_class: ConditionalTable,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionModel {
    pub smoothing: f64,
    /// Histogram of user actions per dialogue.
    pub lengths: BTreeMap<usize, u64>,
    /// First user act of each dialogue.
    pub start: Row,
    /// P(ã | b): user act following each agent act.
    pub replacement: ConditionalTable,
    pub dynamics: Dynamics,
}

fn user_labels() -> Vec<String> {
    UserActionKind::ALL.iter().map(|k| k.label()).collect()
}

fn agent_labels() -> Vec<String> {
    AgentActionKind::ALL.iter().map(|k| k.label()).collect()
}

fn main_labels() -> Vec<String> {
    MainAction::ALL.iter().map(|m| m.to_string()).collect()
}

fn class_labels() -> Vec<String> {
    USER_CLASSES.iter().map(|c| c.to_string()).collect()
}

const N_USER: usize = 16;
const N_AGENT: usize = 12;
const N_MAIN: usize = 6;

/// Counts shared by both estimators.
struct CommonCounts {
    lengths: BTreeMap<usize, u64>,
    start: Vec<u64>,
    replacement: Vec<Vec<u64>>,
}

fn common_counts(corpus: &AnnotatedDialogueCorpus) -> Result<CommonCounts> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let mut lengths = BTreeMap::new();
    let mut start = vec![0u64; N_USER];
    let mut replacement = vec![vec![0u64; N_USER]; N_AGENT];
    for d in &corpus.dialogues {
        let n = d.user_actions().count();
        if n == 0 {
            continue;
        }
        *lengths.entry(n).or_insert(0) += 1;
        start[d.user_actions().next().expect("non-empty").index()] += 1;
        for (b, a) in agent_user_pairs(d) {
            replacement[b.index()][a.index()] += 1;
        }
    }
    if lengths.is_empty() {
        return Err(Error::Estimation("corpus contains no user actions".into()));
    }
    Ok(CommonCounts {
        lengths,
        start,
        replacement,
    })
}

/// (last agent act, next user act) pairs: each user turn's first act paired
/// with the most recent agent act since the previous user act.
fn agent_user_pairs(
    d: &super::dialogues::AnnotatedDialogue,
) -> Vec<(AgentActionKind, UserActionKind)> {
    triples(d).into_iter().filter_map(|(_, b, a)| b.map(|b| (b, a))).collect()
}

/// (previous user act, agent act in between, user act). The first element is
/// `None` for a dialogue's first user act.
#[allow(clippy::type_complexity)]
fn triples(
    d: &super::dialogues::AnnotatedDialogue,
) -> Vec<(Option<UserActionKind>, Option<AgentActionKind>, UserActionKind)> {
    let mut out = Vec::new();
    let mut prev_user = None;
    let mut pending_agent = None;
    for turn in &d.turns {
        match turn.speaker {
            Speaker::Agent => {
                if let Some(b) = turn.actions.iter().filter_map(|a| a.as_agent()).next_back() {
                    pending_agent = Some(b);
                }
            }
            Speaker::User => {
                for a in turn.actions.iter().filter_map(|a| a.as_user()) {
                    out.push((prev_user, pending_agent.take(), a));
                    prev_user = Some(a);
                }
            }
        }
    }
    out
}

fn all_user_support(_: usize, _: usize) -> bool {
    true
}

impl TransitionModel {
    pub fn kind(&self) -> ModelKind {
        match self.dynamics {
            Dynamics::Cir6 { .. } => ModelKind::Cir6,
            Dynamics::Qrfa { .. } => ModelKind::Qrfa,
        }
    }

    fn from_common(common: CommonCounts, alpha: f64, dynamics: Dynamics) -> Self {
        let replacement = ConditionalTable::estimate(
            agent_labels(),
            user_labels(),
            common.replacement,
            all_user_support,
            alpha,
        );
        TransitionModel {
            smoothing: alpha,
            lengths: common.lengths,
            start: Row::estimate(common.start, &[true; N_USER], alpha),
            replacement,
            dynamics,
        }
    }

    /// Checks dimensions and row normalization; used after loading from disk.
    pub fn validate(&self) -> Result<()> {
        self.start.check("start")?;
        if self.start.probs.len() != N_USER {
            return Err(Error::Estimation("start: wrong width".into()));
        }
        if self.lengths.is_empty() || self.lengths.contains_key(&0) {
            return Err(Error::Estimation("length histogram is empty or has zero-length entries".into()));
        }
        self.replacement.check("replacement")?;
        match &self.dynamics {
            Dynamics::Cir6 {
                main_transitions,
                fine_within_main,
            } => {
                main_transitions.check("main_transitions")?;
                fine_within_main.check("fine_within_main")?;
            }
            Dynamics::Qrfa {
                agent_given_class,
                class_given_agent,
                fine_within_class,
            } => {
                agent_given_class.check("agent_given_class")?;
                class_given_agent.check("class_given_agent")?;
                fine_within_class.check("fine_within_class")?;
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let model: TransitionModel =
            serde_json::from_str(text).map_err(|e| Error::parse("transition model", e.to_string()))?;
        model.validate()?;
        Ok(model)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text).map_err(|e| e.at(path.display().to_string()))
    }

    // --- sampling primitives -------------------------------------------

    pub fn sample_length<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let lengths: Vec<usize> = self.lengths.keys().copied().collect();
        let weights: Vec<f64> = self.lengths.values().map(|&c| c as f64).collect();
        lengths[sample_weighted(&weights, rng).expect("validated non-empty histogram")]
    }

    pub fn sample_start<R: Rng + ?Sized>(&self, allow_complete: bool, rng: &mut R) -> UserActionKind {
        let allowed = |k: UserActionKind| allow_complete || k != UserActionKind::Complete;
        sample_user(&self.start.probs, allowed, rng)
    }

    /// Fine act within a CIR6 main action, by corpus frequency.
    pub fn sample_fine_within_main<R: Rng + ?Sized>(
        &self,
        main: MainAction,
        rng: &mut R,
    ) -> UserActionKind {
        match &self.dynamics {
            Dynamics::Cir6 {
                fine_within_main, ..
            } => sample_user(&fine_within_main.rows[main.index()].probs, |k| k.main_action() == main, rng),
            Dynamics::Qrfa { .. } => {
                let members: Vec<_> = main.members().collect();
                members[rng.gen_range(0..members.len())]
            }
        }
    }

    /// Masked CIR6 step: next main action drawn from the trained row
    /// restricted to `allowed`, uniform over `allowed` when the trained mass
    /// there is zero, `None` when nothing is allowed.
    pub fn cir6_successor<R: Rng + ?Sized>(
        &self,
        current: UserActionKind,
        allowed: impl Fn(MainAction) -> bool,
        rng: &mut R,
    ) -> Option<UserActionKind> {
        let Dynamics::Cir6 {
            main_transitions, ..
        } = &self.dynamics
        else {
            return None;
        };
        let row = &main_transitions.rows[current.main_action().index()];
        let mut weights: Vec<f64> = MainAction::ALL
            .iter()
            .map(|&m| if allowed(m) { row.probs[m.index()] } else { 0.0 })
            .collect();
        if weights.iter().all(|w| *w <= 0.0) {
            weights = MainAction::ALL
                .iter()
                .map(|&m| if allowed(m) { 1.0 } else { 0.0 })
                .collect();
        }
        let main = MainAction::ALL[sample_weighted(&weights, rng)?];
        Some(self.sample_fine_within_main(main, rng))
    }

    /// Fine act within a QRFA user class. Falls back to uniform over the
    /// allowed members when the trained row has no allowed mass.
    pub fn sample_fine_within_class<R: Rng + ?Sized>(
        &self,
        class: QrfaClass,
        allow_complete: bool,
        rng: &mut R,
    ) -> UserActionKind {
        let allowed = |k: UserActionKind| {
            qrfa::user_class(k) == class && (allow_complete || k != UserActionKind::Complete)
        };
        match &self.dynamics {
            Dynamics::Qrfa {
                fine_within_class, ..
            } => sample_user(
                &fine_within_class.rows[qrfa::user_class_index(class)].probs,
                allowed,
                rng,
            ),
            Dynamics::Cir6 { .. } => sample_user(&[1.0; N_USER], allowed, rng),
        }
    }

    /// QRFA step given an observed agent act: class from P(class | b), then a
    /// fine act within the class.
    pub fn qrfa_after_agent<R: Rng + ?Sized>(
        &self,
        agent: AgentActionKind,
        allow_complete: bool,
        rng: &mut R,
    ) -> UserActionKind {
        let class = match &self.dynamics {
            Dynamics::Qrfa {
                class_given_agent, ..
            } => {
                let row = &class_given_agent.rows[agent.index()].probs;
                USER_CLASSES[sample_weighted(row, rng).unwrap_or(0)]
            }
            Dynamics::Cir6 { .. } => USER_CLASSES[rng.gen_range(0..2)],
        };
        self.sample_fine_within_class(class, allow_complete, rng)
    }

    /// QRFA step with the agent act unobserved: b ~ P(b | class(current)),
    /// then the next act as in [`Self::qrfa_after_agent`].
    pub fn qrfa_successor<R: Rng + ?Sized>(
        &self,
        current: UserActionKind,
        allow_complete: bool,
        rng: &mut R,
    ) -> UserActionKind {
        let agent = match &self.dynamics {
            Dynamics::Qrfa {
                agent_given_class, ..
            } => {
                let row = &agent_given_class.rows[qrfa::user_class_index(qrfa::user_class(current))].probs;
                AgentActionKind::ALL[sample_weighted(row, rng).unwrap_or(0)]
            }
            Dynamics::Cir6 { .. } => AgentActionKind::ALL[rng.gen_range(0..N_AGENT)],
        };
        self.qrfa_after_agent(agent, allow_complete, rng)
    }

    /// Replacement act ã ~ P(ã | b).
    pub fn sample_replacement<R: Rng + ?Sized>(
        &self,
        agent: AgentActionKind,
        allow_complete: bool,
        rng: &mut R,
    ) -> UserActionKind {
        let allowed = |k: UserActionKind| allow_complete || k != UserActionKind::Complete;
        sample_user(&self.replacement.rows[agent.index()].probs, allowed, rng)
    }
}

/// Draws a user act from `probs` restricted to `allowed`, uniform over
/// `allowed` when the restricted mass is zero.
fn sample_user<R: Rng + ?Sized>(
    probs: &[f64],
    allowed: impl Fn(UserActionKind) -> bool,
    rng: &mut R,
) -> UserActionKind {
    let mut weights: Vec<f64> = UserActionKind::ALL
        .iter()
        .map(|&k| if allowed(k) { probs[k.index()] } else { 0.0 })
        .collect();
    if weights.iter().all(|w| *w <= 0.0) {
        weights = UserActionKind::ALL
            .iter()
            .map(|&k| if allowed(k) { 1.0 } else { 0.0 })
            .collect();
    }
    UserActionKind::ALL[sample_weighted(&weights, rng).expect("some user act is allowed")]
}

/// Estimates the CIR6 model with the default smoothing.
pub fn estimate_cir6(corpus: &AnnotatedDialogueCorpus) -> Result<TransitionModel> {
    estimate_cir6_with(corpus, DEFAULT_SMOOTHING)
}

/// CIR6: bigrams of consecutive user acts (agent turns skipped), counted at
/// the main-action level, plus fine-act frequencies within each main action.
pub fn estimate_cir6_with(corpus: &AnnotatedDialogueCorpus, alpha: f64) -> Result<TransitionModel> {
    let common = common_counts(corpus)?;
    let mut bigrams = vec![vec![0u64; N_MAIN]; N_MAIN];
    let mut fine = vec![vec![0u64; N_USER]; N_MAIN];
    for d in &corpus.dialogues {
        let acts: Vec<UserActionKind> = d.user_actions().collect();
        for a in &acts {
            fine[a.main_action().index()][a.index()] += 1;
        }
        for w in acts.windows(2) {
            bigrams[w[0].main_action().index()][w[1].main_action().index()] += 1;
        }
    }
    let main_transitions =
        ConditionalTable::estimate(main_labels(), main_labels(), bigrams, |_, _| true, alpha);
    let fine_within_main = ConditionalTable::estimate(
        main_labels(),
        user_labels(),
        fine,
        |m, u| UserActionKind::ALL[u].main_action() == MainAction::ALL[m],
        alpha,
    );
    Ok(TransitionModel::from_common(
        common,
        alpha,
        Dynamics::Cir6 {
            main_transitions,
            fine_within_main,
        },
    ))
}

pub fn estimate_qrfa(corpus: &AnnotatedDialogueCorpus) -> Result<TransitionModel> {
    estimate_qrfa_with(corpus, DEFAULT_SMOOTHING)
}

/// QRFA: two-step transitions through the agent act between consecutive
/// user acts, counted on coarse user classes.
pub fn estimate_qrfa_with(corpus: &AnnotatedDialogueCorpus, alpha: f64) -> Result<TransitionModel> {
    let common = common_counts(corpus)?;
    let mut agent_given_class = vec![vec![0u64; N_AGENT]; 2];
    let mut class_given_agent = vec![vec![0u64; 2]; N_AGENT];
    let mut fine = vec![vec![0u64; N_USER]; 2];
    for d in &corpus.dialogues {
        for (prev, b, a) in triples(d) {
            fine[qrfa::user_class_index(qrfa::user_class(a))][a.index()] += 1;
            if let (Some(prev), Some(b)) = (prev, b) {
                agent_given_class[qrfa::user_class_index(qrfa::user_class(prev))][b.index()] += 1;
                class_given_agent[b.index()][qrfa::user_class_index(qrfa::user_class(a))] += 1;
            }
        }
    }
    let agent_given_class = ConditionalTable::estimate(
        class_labels(),
        agent_labels(),
        agent_given_class,
        |_, _| true,
        alpha,
    );
    let class_given_agent = ConditionalTable::estimate(
        agent_labels(),
        class_labels(),
        class_given_agent,
        |_, _| true,
        alpha,
    );
    let fine_within_class = ConditionalTable::estimate(
        class_labels(),
        user_labels(),
        fine,
        |c, u| qrfa::user_class(UserActionKind::ALL[u]) == USER_CLASSES[c],
        alpha,
    );
    Ok(TransitionModel::from_common(
        common,
        alpha,
        Dynamics::Qrfa {
            agent_given_class,
            class_given_agent,
            fine_within_class,
        },
    ))
}

/// Builds an agenda of sampled length: a start act, then `step` applied to
/// the previous act, with `Complete` forced as the final (bottom) entry. A
/// step returning `None` ends the walk early.
pub fn build_agenda<R: Rng + ?Sized>(
    model: &TransitionModel,
    rng: &mut R,
    mut step: impl FnMut(UserActionKind, &mut R) -> Option<UserActionKind>,
) -> Agenda {
    let length = model.sample_length(rng);
    let mut acts = Vec::with_capacity(length);
    if length > 1 {
        let mut current = model.sample_start(false, rng);
        acts.push(current);
        while acts.len() < length - 1 {
            match step(current, rng) {
                Some(next) => {
                    acts.push(next);
                    current = next;
                }
                None => break,
            }
        }
    }
    acts.push(UserActionKind::Complete);
    Agenda::from_execution_order(acts)
}

/// Samples an initial agenda by walking the model's own transitions.
/// `Complete` appears exactly once, as the last act executed.
pub fn sample_initial_agenda<R: Rng + ?Sized>(model: &TransitionModel, rng: &mut R) -> Agenda {
    match model.kind() {
        ModelKind::Cir6 => build_agenda(model, rng, |cur, rng| {
            model.cir6_successor(cur, |m| m != MainAction::Complete, rng)
        }),
        ModelKind::Qrfa => build_agenda(model, rng, |cur, rng| Some(model.qrfa_successor(cur, false, rng))),
    }
}
