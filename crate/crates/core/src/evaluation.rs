//! Metrics over transcript sets and agent rankings.
//!
//! AvgTurns and UserActRatio describe dialogue shape, DS-KL compares the
//! simulated user-act distribution with a real one, Reward and Success Rate
//! score the agent.

use std::collections::BTreeSet;
use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};

use crate::corpus::AnnotatedDialogueCorpus;
use crate::domain::{CompatibilityTable, DialogueTranscript, Speaker, TerminalStatus, UserActionKind};
use crate::engine::Capability;
use crate::error::{Error, Result};

pub const TIE_TOLERANCE: f64 = 1e-6;
pub const DISTRIBUTION_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Provenance {
    Real,
    Simulated,
}

/// A distribution over labeled outcomes, usually user act kinds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionDistribution {
    pub provenance: Provenance,
    pub labels: Vec<String>,
    pub probs: Vec<f64>,
}

impl ActionDistribution {
    pub fn new(provenance: Provenance, labels: Vec<String>, probs: Vec<f64>) -> Result<Self> {
        if labels.len() != probs.len() || labels.is_empty() {
            return Err(Error::Argument("labels and probabilities must pair up".into()));
        }
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::Argument("probabilities must be finite and non-negative".into()));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > DISTRIBUTION_TOLERANCE {
            return Err(Error::Argument(format!("probabilities sum to {total}")));
        }
        Ok(ActionDistribution {
            provenance,
            labels,
            probs,
        })
    }

    /// Add-α estimate over all user act kinds.
    pub fn from_user_counts(provenance: Provenance, counts: &[u64], alpha: f64) -> Result<Self> {
        if counts.len() != UserActionKind::ALL.len() {
            return Err(Error::Argument("one count per user act kind expected".into()));
        }
        if alpha < 0.0 {
            return Err(Error::Argument("smoothing must be non-negative".into()));
        }
        let total = counts.iter().sum::<u64>() as f64 + alpha * counts.len() as f64;
        if total <= 0.0 {
            return Err(Error::Argument("no user actions to estimate from".into()));
        }
        let probs = counts.iter().map(|&c| (c as f64 + alpha) / total).collect();
        let labels = UserActionKind::ALL.iter().map(|k| k.label()).collect();
        Self::new(provenance, labels, probs)
    }

    pub fn from_corpus(corpus: &AnnotatedDialogueCorpus, alpha: f64) -> Result<Self> {
        let mut counts = vec![0u64; UserActionKind::ALL.len()];
        for d in &corpus.dialogues {
            for a in d.user_actions() {
                counts[a.index()] += 1;
            }
        }
        Self::from_user_counts(Provenance::Real, &counts, alpha)
    }

    pub fn from_transcripts(transcripts: &[DialogueTranscript], alpha: f64) -> Result<Self> {
        let mut counts = vec![0u64; UserActionKind::ALL.len()];
        for t in transcripts {
            for turn in t.user_turns() {
                for a in turn.actions.iter().filter_map(|a| a.kind.as_user()) {
                    counts[a.index()] += 1;
                }
            }
        }
        Self::from_user_counts(Provenance::Simulated, &counts, alpha)
    }

    fn support(&self) -> BTreeSet<&str> {
        self.labels
            .iter()
            .zip(&self.probs)
            .filter(|(_, p)| **p > 0.0)
            .map(|(l, _)| l.as_str())
            .collect()
    }
}

/// Σ P(x) ln(P(x)/Q(x)) over a shared support.
pub fn kl(p: &ActionDistribution, q: &ActionDistribution) -> Result<f64> {
    if p.labels != q.labels || p.support() != q.support() {
        return Err(Error::Argument("distributions have different supports".into()));
    }
    Ok(p.probs
        .iter()
        .zip(&q.probs)
        .filter(|(a, _)| **a > 0.0)
        .map(|(a, b)| a * (a / b).ln())
        .sum::<f64>()
        .max(0.0))
}

/// Mean of the two directed divergences.
pub fn ds_kl(p: &ActionDistribution, q: &ActionDistribution) -> Result<f64> {
    Ok((kl(p, q)? + kl(q, p)?) / 2.0)
}

pub fn avg_turns(transcripts: &[DialogueTranscript]) -> Result<f64> {
    if transcripts.is_empty() {
        return Err(Error::Argument("no transcripts".into()));
    }
    let total: usize = transcripts.iter().map(DialogueTranscript::user_turn_count).sum();
    Ok(total as f64 / transcripts.len() as f64)
}

/// User acts over all acts, counting annotated acts rather than turns.
pub fn user_act_ratio(transcripts: &[DialogueTranscript]) -> Result<f64> {
    let (mut user, mut agent) = (0usize, 0usize);
    for t in transcripts {
        for turn in &t.turns {
            match turn.speaker {
                Speaker::User => user += turn.actions.len(),
                Speaker::Agent => agent += turn.actions.len(),
            }
        }
    }
    if user + agent == 0 {
        return Err(Error::Argument("no actions recorded".into()));
    }
    Ok(user as f64 / (user + agent) as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardParams {
    /// Points per declared capability.
    pub points_per_capability: f64,
    /// Points deducted per user turn.
    pub cost: f64,
}

impl Default for RewardParams {
    fn default() -> Self {
        RewardParams {
            points_per_capability: 4.0,
            cost: 1.0,
        }
    }
}

impl RewardParams {
    pub fn full(&self, capabilities: &BTreeSet<Capability>) -> f64 {
        self.points_per_capability * capabilities.len() as f64
    }
}

/// Turn count with each pair of consecutive `Repeat` acts counted once,
/// pairing left to right.
pub fn collapsed_turns(acts: &[Option<UserActionKind>]) -> usize {
    let mut turns = 0;
    let mut i = 0;
    while i < acts.len() {
        let pair = acts[i] == Some(UserActionKind::Repeat) && acts.get(i + 1) == Some(&Some(UserActionKind::Repeat));
        i += if pair { 2 } else { 1 };
        turns += 1;
    }
    turns
}

pub fn reward(transcript: &DialogueTranscript, capabilities: &BTreeSet<Capability>) -> f64 {
    reward_with(transcript, capabilities, &RewardParams::default())
}

/// max{0, Full − Cost·T}; dialogues that did not complete earn nothing.
pub fn reward_with(transcript: &DialogueTranscript, capabilities: &BTreeSet<Capability>, params: &RewardParams) -> f64 {
    if transcript.status != TerminalStatus::Completed {
        return 0.0;
    }
    let acts: Vec<_> = transcript.user_turns().map(|t| t.user_action()).collect();
    let t = collapsed_turns(&acts) as f64;
    (params.full(capabilities) - params.cost * t).max(0.0)
}

/// Fraction of agent turns flagged δ = true.
pub fn success_rate(transcripts: &[DialogueTranscript]) -> Result<f64> {
    let flags: Vec<bool> = transcripts
        .iter()
        .flat_map(|t| t.agent_turns().filter_map(|turn| turn.goal_satisfied))
        .collect();
    if flags.is_empty() {
        return Err(Error::Argument("no agent turns".into()));
    }
    Ok(flags.iter().filter(|f| **f).count() as f64 / flags.len() as f64)
}

/// Recomputes every agent turn's δ from the recorded acts and checks it
/// against the stored flag.
pub fn audit_transcript(transcript: &DialogueTranscript, table: &CompatibilityTable) -> Result<()> {
    transcript.validate()?;
    let mut last_user = None;
    for turn in &transcript.turns {
        match turn.speaker {
            Speaker::User => last_user = turn.user_action(),
            Speaker::Agent => {
                let Some(flag) = turn.goal_satisfied else { continue };
                let expected = match (last_user, turn.agent_action()) {
                    (Some(u), Some(b)) => table.compatible(u, b),
                    _ => false,
                };
                if expected != flag {
                    return Err(Error::parse(
                        format!("transcript {}", transcript.conversation_id),
                        format!("turn {} records δ={flag}, actions imply {expected}", turn.index),
                    ));
                }
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Metric {
    AvgTurns,
    UserActRatio,
    DsKl,
    Reward,
    SuccessRate,
}

impl Metric {
    pub const ALL: [Metric; 5] = [
        Metric::AvgTurns,
        Metric::UserActRatio,
        Metric::DsKl,
        Metric::Reward,
        Metric::SuccessRate,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Metric::AvgTurns => "AvgTurns",
            Metric::UserActRatio => "UserActRatio",
            Metric::DsKl => "DS-KL",
            Metric::Reward => "Reward",
            Metric::SuccessRate => "SuccessRate",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Agents in descending order of value, grouped into ties. A tie group
/// holds every agent within [`TIE_TOLERANCE`] of the group's best value.
pub fn rank_agents(values: &[(String, f64)]) -> Result<Vec<Vec<String>>> {
    if values.len() < 2 {
        return Err(Error::Argument("ranking needs at least two agents".into()));
    }
    if values.iter().any(|(_, v)| v.is_nan()) {
        return Err(Error::Argument("metric value is NaN".into()));
    }
    let mut sorted: Vec<&(String, f64)> = values.iter().collect();
    sorted.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    let mut groups: Vec<(f64, Vec<String>)> = Vec::new();
    for (name, v) in sorted {
        match groups.last_mut() {
            Some((head, members)) if *head - v <= TIE_TOLERANCE => members.push(name.clone()),
            _ => groups.push((*v, vec![name.clone()])),
        }
    }
    Ok(groups.into_iter().map(|(_, m)| m).collect())
}

/// Metrics of one agent under one simulator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentMetrics {
    pub simulator: String,
    pub agent: String,
    pub dialogues: usize,
    pub agent_errors: usize,
    pub avg_turns: Option<f64>,
    pub user_act_ratio: Option<f64>,
    pub ds_kl: Option<f64>,
    pub reward: Option<f64>,
    pub success_rate: Option<f64>,
}

impl AgentMetrics {
    pub fn value(&self, metric: Metric) -> Option<f64> {
        match metric {
            Metric::AvgTurns => self.avg_turns,
            Metric::UserActRatio => self.user_act_ratio,
            Metric::DsKl => self.ds_kl,
            Metric::Reward => self.reward,
            Metric::SuccessRate => self.success_rate,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ranking {
    pub simulator: String,
    pub metric: Metric,
    /// Tie groups, best first.
    pub order: Vec<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub rows: Vec<AgentMetrics>,
    pub rankings: Vec<Ranking>,
}

/// Transcripts of one agent under one simulator.
#[derive(Debug, Clone, Copy)]
pub struct Campaign<'a> {
    pub simulator: &'a str,
    pub agent: &'a str,
    pub capabilities: &'a BTreeSet<Capability>,
    pub transcripts: &'a [DialogueTranscript],
}

pub const DEFAULT_SMOOTHING: f64 = crate::corpus::DEFAULT_SMOOTHING;

pub fn agent_metrics(
    campaign: &Campaign<'_>,
    reference: Option<&ActionDistribution>,
    params: &RewardParams,
) -> AgentMetrics {
    let ts = campaign.transcripts;
    let ds = reference.and_then(|r| {
        let sim = ActionDistribution::from_transcripts(ts, DEFAULT_SMOOTHING).ok()?;
        ds_kl(&sim, r).ok()
    });
    AgentMetrics {
        simulator: campaign.simulator.to_string(),
        agent: campaign.agent.to_string(),
        dialogues: ts.len(),
        agent_errors: ts.iter().filter(|t| t.status == TerminalStatus::AgentError).count(),
        avg_turns: avg_turns(ts).ok(),
        user_act_ratio: user_act_ratio(ts).ok(),
        ds_kl: ds,
        reward: (!ts.is_empty())
            .then(|| ts.iter().map(|t| reward_with(t, campaign.capabilities, params)).sum::<f64>() / ts.len() as f64),
        success_rate: success_rate(ts).ok(),
    }
}

impl MetricsReport {
    pub fn build(campaigns: &[Campaign<'_>], reference: Option<&ActionDistribution>, params: &RewardParams) -> Self {
        let rows: Vec<AgentMetrics> = campaigns.iter().map(|c| agent_metrics(c, reference, params)).collect();
        let simulators: Vec<&str> = {
            let mut seen = Vec::new();
            for r in &rows {
                if !seen.contains(&r.simulator.as_str()) {
                    seen.push(r.simulator.as_str());
                }
            }
            seen
        };
        let mut rankings = Vec::new();
        for sim in simulators {
            for metric in Metric::ALL {
                let values: Vec<(String, f64)> = rows
                    .iter()
                    .filter(|r| r.simulator == sim)
                    .filter_map(|r| r.value(metric).map(|v| (r.agent.clone(), v)))
                    .collect();
                if let Ok(order) = rank_agents(&values) {
                    rankings.push(Ranking {
                        simulator: sim.to_string(),
                        metric,
                        order,
                    });
                }
            }
        }
        MetricsReport { rows, rankings }
    }

    pub fn ranking(&self, simulator: &str, metric: Metric) -> Result<&[Vec<String>]> {
        self.rankings
            .iter()
            .find(|r| r.simulator == simulator && r.metric == metric)
            .map(|r| r.order.as_slice())
            .ok_or_else(|| Error::Argument(format!("no {metric} ranking for {simulator}")))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// One row per (simulator, agent), then orderings per metric.
    pub fn to_table(&self) -> String {
        let cell = |v: Option<f64>, digits: usize| v.map_or("-".to_string(), |v| format!("{v:.digits$}"));
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<12} {:<16} {:>5} {:>6} {:>9} {:>12} {:>7} {:>7} {:>11}",
            "Simulator", "Agent", "N", "Errors", "AvgTurns", "UserActRatio", "DS-KL", "Reward", "SuccessRate"
        );
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{:<12} {:<16} {:>5} {:>6} {:>9} {:>12} {:>7} {:>7} {:>11}",
                r.simulator,
                r.agent,
                r.dialogues,
                r.agent_errors,
                cell(r.avg_turns, 2),
                cell(r.user_act_ratio, 3),
                cell(r.ds_kl, 3),
                cell(r.reward, 2),
                cell(r.success_rate, 3),
            );
        }
        if !self.rankings.is_empty() {
            out.push('\n');
        }
        for rank in &self.rankings {
            let order: Vec<String> = rank.order.iter().map(|g| g.join(" = ")).collect();
            let _ = writeln!(out, "{} {}: {}", rank.simulator, rank.metric, order.join(" > "));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{AgentActionKind, DialogueAction, Turn};
    use proptest::prelude::*;

    fn dist(probs: &[f64]) -> ActionDistribution {
        let labels = (0..probs.len()).map(|i| i.to_string()).collect();
        ActionDistribution::new(Provenance::Simulated, labels, probs.to_vec()).unwrap()
    }

    fn transcript(user: &[UserActionKind], deltas: &[bool], status: TerminalStatus) -> DialogueTranscript {
        let mut turns = Vec::new();
        for (i, (u, d)) in user.iter().zip(deltas).enumerate() {
            turns.push(Turn {
                index: 2 * i,
                speaker: Speaker::User,
                utterance: String::new(),
                actions: vec![DialogueAction::user(*u)],
                goal_satisfied: None,
                agenda_update: None,
                agenda_len: None,
            });
            turns.push(Turn {
                index: 2 * i + 1,
                speaker: Speaker::Agent,
                utterance: String::new(),
                actions: vec![DialogueAction::agent(AgentActionKind::Show)],
                goal_satisfied: Some(*d),
                agenda_update: None,
                agenda_len: None,
            });
        }
        DialogueTranscript {
            conversation_id: "t".into(),
            agent: "a".into(),
            simulator: "s".into(),
            seed: 0,
            status,
            initial_agenda: user.to_vec(),
            turns,
            error: None,
        }
    }

    fn all_caps() -> BTreeSet<Capability> {
        Capability::ALL.into_iter().collect()
    }

    #[test]
    fn kl_two_term_hand_value() {
        // 0.5 ln 2 + 0.5 ln(2/3)
        let expected = 0.5 * (0.5f64 / 0.25).ln() + 0.5 * (0.5f64 / 0.75).ln();
        let v = kl(&dist(&[0.5, 0.5]), &dist(&[0.25, 0.75])).unwrap();
        assert!((v - expected).abs() < 1e-15);
        assert!((v - 0.143_841_036_225_890_2).abs() < 1e-12);
        assert_eq!(kl(&dist(&[0.3, 0.7]), &dist(&[0.3, 0.7])).unwrap(), 0.0);
    }

    #[test]
    fn kl_rejects_mismatched_support() {
        assert!(kl(&dist(&[1.0, 0.0]), &dist(&[0.5, 0.5])).is_err());
        assert!(kl(&dist(&[0.5, 0.5]), &dist(&[0.2, 0.3, 0.5])).is_err());
        assert!(ActionDistribution::new(Provenance::Real, vec!["a".into()], vec![0.9]).is_err());
    }

    #[test]
    fn turns_and_ratio() {
        use UserActionKind as U;
        let a = transcript(&[U::Disclose; 9], &[true; 9], TerminalStatus::Completed);
        let b = transcript(&[U::Disclose; 11], &[true; 11], TerminalStatus::Completed);
        assert_eq!(avg_turns(&[a.clone(), b]).unwrap(), 10.0);
        assert_eq!(avg_turns(std::slice::from_ref(&a)).unwrap(), 9.0);
        assert!(avg_turns(&[]).is_err());
        assert_eq!(user_act_ratio(&[a]).unwrap(), 0.5);
        assert!(user_act_ratio(&[]).is_err());
    }

    #[test]
    fn ratio_three_to_five() {
        use UserActionKind as U;
        let mut t = transcript(&[U::Disclose, U::List, U::Complete], &[true; 3], TerminalStatus::Completed);
        t.turns[1].actions.push(DialogueAction::agent(AgentActionKind::List));
        t.turns[3].actions.push(DialogueAction::agent(AgentActionKind::List));
        assert_eq!(user_act_ratio(&[t]).unwrap(), 0.375);
    }

    #[test]
    fn reward_cases() {
        use UserActionKind as U;
        let eight = transcript(&[U::Disclose; 8], &[true; 8], TerminalStatus::Completed);
        assert_eq!(reward(&eight, &all_caps()), 12.0);
        let mut no_nav = all_caps();
        no_nav.remove(&Capability::Navigate);
        let twenty = transcript(&[U::Disclose; 20], &[true; 20], TerminalStatus::Completed);
        assert_eq!(reward(&twenty, &no_nav), 0.0);
        let mut seq = vec![U::Disclose; 10];
        seq[4] = U::Repeat;
        seq[5] = U::Repeat;
        let rep = transcript(&seq, &[true; 10], TerminalStatus::Completed);
        assert_eq!(reward(&rep, &all_caps()), 11.0);
        let capped = transcript(&[U::Disclose; 8], &[false; 8], TerminalStatus::TurnCapReached);
        assert_eq!(reward(&capped, &all_caps()), 0.0);
    }

    #[test]
    fn repeat_collapsing() {
        use UserActionKind as U;
        let r = Some(U::Repeat);
        let d = Some(U::Disclose);
        assert_eq!(collapsed_turns(&[r, r, r]), 2);
        assert_eq!(collapsed_turns(&[r, r, r, r]), 2);
        assert_eq!(collapsed_turns(&[r, d, r]), 3);
        assert_eq!(collapsed_turns(&[]), 0);
    }

    #[test]
    fn success_cases() {
        use UserActionKind as U;
        let t = transcript(&[U::Disclose; 4], &[true, true, false, true], TerminalStatus::Completed);
        assert_eq!(success_rate(&[t]).unwrap(), 0.75);
        assert!(success_rate(&[]).is_err());
    }

    #[test]
    fn ranking_and_ties() {
        let vals = vec![("B".to_string(), 7.56), ("A".to_string(), 8.88), ("C".to_string(), 6.04)];
        assert_eq!(rank_agents(&vals).unwrap(), vec![vec!["A"], vec!["B"], vec!["C"]]);
        let mut rev = vals.clone();
        rev.reverse();
        assert_eq!(rank_agents(&rev).unwrap(), rank_agents(&vals).unwrap());
        let tie = vec![("x".to_string(), 1.0), ("y".to_string(), 1.0 + 5e-7)];
        assert_eq!(rank_agents(&tie).unwrap(), vec![vec!["y", "x"]]);
        assert!(rank_agents(&vals[..1]).is_err());
    }

    #[test]
    fn audit_detects_wrong_flag() {
        use UserActionKind as U;
        let table = CompatibilityTable::default();
        let good = transcript(&[U::Disclose], &[true], TerminalStatus::Completed);
        audit_transcript(&good, &table).unwrap();
        let bad = transcript(&[U::Back], &[false], TerminalStatus::Completed);
        assert!(audit_transcript(&bad, &table).is_err());
    }

    #[test]
    fn report_shapes() {
        use UserActionKind as U;
        let caps = all_caps();
        let a = vec![transcript(&[U::Disclose; 4], &[true; 4], TerminalStatus::Completed)];
        let b = vec![transcript(&[U::Disclose; 6], &[true, false, true, false, true, true], TerminalStatus::Completed)];
        let report = MetricsReport::build(
            &[
                Campaign { simulator: "S", agent: "a", capabilities: &caps, transcripts: &a },
                Campaign { simulator: "S", agent: "b", capabilities: &caps, transcripts: &b },
            ],
            None,
            &RewardParams::default(),
        );
        assert_eq!(report.ranking("S", Metric::Reward).unwrap(), &[vec!["a".to_string()], vec!["b".to_string()]]);
        assert!(report.ranking("S", Metric::DsKl).is_err());
        assert!(report.to_table().contains("S Reward: a > b"));
        let back: MetricsReport = serde_json::from_str(&report.to_json()).unwrap();
        assert_eq!(back, report);
    }

    fn probs(n: usize) -> impl Strategy<Value = Vec<f64>> {
        proptest::collection::vec(0.01f64..1.0, n).prop_map(|v| {
            let s: f64 = v.iter().sum();
            let mut p: Vec<f64> = v.iter().map(|x| x / s).collect();
            let rest: f64 = p[1..].iter().sum();
            p[0] = 1.0 - rest;
            p
        })
    }

    proptest! {
        #[test]
        fn ds_kl_symmetric_non_negative((p, q) in (2usize..8).prop_flat_map(|n| (probs(n), probs(n)))) {
            let (p, q) = (dist(&p), dist(&q));
            let a = ds_kl(&p, &q).unwrap();
            prop_assert!(a >= 0.0);
            prop_assert!((a - ds_kl(&q, &p).unwrap()).abs() < 1e-12);
            prop_assert!(ds_kl(&p, &p).unwrap().abs() < 1e-12);
        }
    }
}
