//! Declarative experiments: which simulators run against which agents, on
//! which data, and where the results go.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::stub::{pool_with_attribute, StubAgent, StubAgentSpec, StubPolicy};
use super::write_atomic;
use crate::corpus::{
    estimate_cir6, estimate_qrfa, load_dialogues, load_ratings, AnnotatedDialogueCorpus, RatingsCorpus,
    TransitionModel,
};
use crate::domain::{AgentActionKind, DialogueTranscript, Speaker, TerminalStatus};
use crate::engine::{AgentEndpoint, Capability, Opening, Resources, Simulator, SimulatorConfig, Transport};
use crate::error::{Error, Result};
use crate::evaluation::{ActionDistribution, Campaign, MetricsReport, RewardParams, DEFAULT_SMOOTHING};
use crate::nlg::TemplateBank;
use crate::nlu::{IndexEntry, LabeledUtteranceIndex, Template};

pub const CIR6_ARTIFACT: &str = "cir6.json";
pub const QRFA_ARTIFACT: &str = "qrfa.json";
pub const INDEX_ARTIFACT: &str = "agent_index.csv";

fn default_seed() -> u64 {
    1
}

fn default_simulators() -> Vec<String> {
    SimulatorConfig::presets().iter().map(SimulatorConfig::name).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    pub ratings: PathBuf,
    pub catalog: PathBuf,
    /// Annotated dialogues used for training.
    pub dialogues: PathBuf,
    /// Real dialogues for DS-KL; defaults to the training dialogues.
    #[serde(default)]
    pub reference: Option<PathBuf>,
    /// Train only on dialogues with this agent.
    #[serde(default)]
    pub training_agent: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StubConfig {
    /// `PERFECT`, `FLAKY` or `SCRIPTED`.
    pub policy: String,
    #[serde(default)]
    pub p: Option<f64>,
    /// User act label or main action → agent act label; empty for no reply.
    #[serde(default)]
    pub script: BTreeMap<String, String>,
    /// Recommend only items carrying this attribute.
    #[serde(default)]
    pub pool_attribute: Option<String>,
    /// Recommend only items absent from the ratings.
    #[serde(default)]
    pub unrated_only: bool,
    #[serde(default)]
    pub seed: u64,
}

impl StubConfig {
    pub fn to_policy(&self) -> Result<StubPolicy> {
        match self.policy.to_ascii_uppercase().as_str() {
            "PERFECT" => Ok(StubPolicy::Perfect),
            "FLAKY" => {
                let p = self.p.ok_or_else(|| Error::Config("FLAKY needs `p`".into()))?;
                let policy = StubPolicy::Flaky(p);
                policy.validate()?;
                Ok(policy)
            }
            "SCRIPTED" => StubPolicy::script_from_labels(&self.script),
            other => other.parse(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentConfig {
    pub name: String,
    /// Declared functions; all five when omitted.
    #[serde(default)]
    pub capabilities: Option<Vec<String>>,
    #[serde(default)]
    pub timeout_secs: Option<f64>,
    /// In-process stub agent.
    #[serde(default)]
    pub stub: Option<StubConfig>,
    /// Program and arguments of an agent speaking the protocol on stdio.
    #[serde(default)]
    pub command: Option<Vec<String>>,
    /// `HOST:PORT` of an agent speaking the protocol over TCP.
    #[serde(default)]
    pub address: Option<String>,
}

/// How an agent is reached.
#[derive(Debug, Clone, PartialEq)]
pub enum AgentKind<'a> {
    Stub(&'a StubConfig),
    Command(&'a [String]),
    Address(&'a str),
}

impl AgentConfig {
    pub fn kind(&self) -> Result<AgentKind<'_>> {
        match (&self.stub, &self.command, &self.address) {
            (Some(s), None, None) => Ok(AgentKind::Stub(s)),
            (None, Some(c), None) if !c.is_empty() => Ok(AgentKind::Command(c)),
            (None, None, Some(a)) => Ok(AgentKind::Address(a)),
            _ => Err(Error::Config(format!(
                "agent `{}` needs exactly one of `stub`, `command` or `address`",
                self.name
            ))),
        }
    }

    pub fn capability_set(&self) -> Result<BTreeSet<Capability>> {
        let caps: BTreeSet<Capability> = match &self.capabilities {
            None => Capability::ALL.into_iter().collect(),
            Some(list) => list.iter().map(|c| c.parse()).collect::<Result<_>>()?,
        };
        if caps.is_empty() {
            return Err(Error::Config(format!("agent `{}` declares no capability", self.name)));
        }
        Ok(caps)
    }

    /// Stub spec with its recommendation pool drawn from `ratings`.
    pub fn stub_spec(&self, ratings: &RatingsCorpus) -> Result<StubAgentSpec> {
        let AgentKind::Stub(stub) = self.kind()? else {
            return Err(Error::Config(format!("agent `{}` is not a stub", self.name)));
        };
        let exclude: BTreeSet<String> = if stub.unrated_only {
            ratings.ratings().iter().map(|r| r.item_id.clone()).collect()
        } else {
            BTreeSet::new()
        };
        let pool = pool_with_attribute(ratings.catalog(), stub.pool_attribute.as_deref(), &exclude);
        let mut spec = StubAgentSpec::new(self.name.clone(), stub.to_policy()?, pool, stub.seed);
        spec.capabilities = self.capability_set()?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn endpoint(&self, ratings: &RatingsCorpus) -> Result<AgentEndpoint> {
        let transport = match self.kind()? {
            AgentKind::Stub(_) => {
                let agent = StubAgent::new(self.stub_spec(ratings)?, ratings.catalog().clone())?;
                Transport::Loopback(Arc::new(agent))
            }
            AgentKind::Command(c) => Transport::Stdio {
                program: c[0].clone(),
                args: c[1..].to_vec(),
            },
            AgentKind::Address(a) => Transport::Tcp { address: a.to_string() },
        };
        let mut endpoint = AgentEndpoint::new(self.name.clone(), transport).with_capabilities(self.capability_set()?)?;
        if let Some(secs) = self.timeout_secs {
            if !(secs > 0.0 && secs.is_finite()) {
                return Err(Error::Config(format!("agent `{}` has a non-positive timeout", self.name)));
            }
            endpoint = endpoint.with_timeout(Duration::from_secs_f64(secs));
        }
        Ok(endpoint)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_seed")]
    pub base_seed: u64,
    pub n_dialogues: usize,
    #[serde(default = "default_simulators")]
    pub simulators: Vec<String>,
    #[serde(default)]
    pub turn_cap: Option<usize>,
    #[serde(default)]
    pub similarity_floor: Option<f64>,
    #[serde(default)]
    pub oracle_nlu: bool,
    #[serde(default)]
    pub opening: Opening,
    pub output: PathBuf,
    pub artifacts: PathBuf,
    pub data: DataConfig,
    #[serde(rename = "agent", default)]
    pub agents: Vec<AgentConfig>,
    /// Directory relative paths resolve against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

/// Command-line overrides applied on top of a configuration file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub n: Option<usize>,
    pub out: Option<PathBuf>,
    pub oracle_nlu: bool,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str, base_dir: &Path) -> Result<Self> {
        let mut config: ExperimentConfig =
            toml::from_str(text).map_err(|e| Error::Config(format!("experiment file: {e}")))?;
        config.base_dir = base_dir.to_path_buf();
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_toml_str(&text, base).map_err(|e| e.at(path.display().to_string()))
    }

    pub fn resolve(&self, path: &Path) -> PathBuf {
        if path.is_absolute() {
            path.to_path_buf()
        } else {
            self.base_dir.join(path)
        }
    }

    pub fn apply(&mut self, overrides: &Overrides) {
        if let Some(seed) = overrides.seed {
            self.base_seed = seed;
        }
        if let Some(n) = overrides.n {
            self.n_dialogues = n;
        }
        if let Some(out) = &overrides.out {
            self.output = std::env::current_dir().map(|d| d.join(out)).unwrap_or_else(|_| out.clone());
        }
        self.oracle_nlu |= overrides.oracle_nlu;
    }

    pub fn simulator_configs(&self) -> Result<Vec<SimulatorConfig>> {
        self.simulators
            .iter()
            .map(|name| {
                let mut c: SimulatorConfig = name.parse()?;
                if let Some(cap) = self.turn_cap {
                    c.turn_cap = cap;
                }
                if let Some(floor) = self.similarity_floor {
                    c.similarity_floor = floor;
                }
                c.oracle_nlu = self.oracle_nlu;
                c.opening = self.opening;
                c.validate()?;
                Ok(c)
            })
            .collect()
    }

    /// Checks counts, names and that every input file exists.
    pub fn validate(&self) -> Result<()> {
        if self.n_dialogues == 0 {
            return Err(Error::Config("n_dialogues must be at least 1".into()));
        }
        if self.simulators.is_empty() {
            return Err(Error::Config("no simulators listed".into()));
        }
        self.simulator_configs()?;
        if self.agents.is_empty() {
            return Err(Error::Config("no agents listed".into()));
        }
        let mut names = BTreeSet::new();
        for a in &self.agents {
            if a.name.is_empty() || !a.name.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_') {
                return Err(Error::Config(format!("agent name `{}` must be alphanumeric, `-` or `_`", a.name)));
            }
            if !names.insert(&a.name) {
                return Err(Error::Config(format!("agent `{}` listed twice", a.name)));
            }
            a.kind()?;
            a.capability_set()?;
        }
        let data = &self.data;
        for p in [&data.ratings, &data.catalog, &data.dialogues]
            .into_iter()
            .chain(data.reference.as_ref())
        {
            let full = self.resolve(p);
            if !full.is_file() {
                return Err(Error::Config(format!("missing input file {}", full.display())));
            }
        }
        Ok(())
    }

    pub fn agent(&self, name: &str) -> Result<&AgentConfig> {
        self.agents
            .iter()
            .find(|a| a.name == name)
            .ok_or_else(|| Error::Config(format!("no agent named `{name}`")))
    }

    pub fn load_ratings(&self) -> Result<RatingsCorpus> {
        load_ratings(&self.resolve(&self.data.ratings), &self.resolve(&self.data.catalog))
    }

    fn reference(&self) -> Result<ActionDistribution> {
        let path = self.data.reference.as_ref().unwrap_or(&self.data.dialogues);
        ActionDistribution::from_corpus(&load_dialogues(&self.resolve(path))?, DEFAULT_SMOOTHING)
    }

    fn transcript_path(&self, simulator: &str, agent: &str) -> PathBuf {
        self.resolve(&self.output)
            .join("transcripts")
            .join(format!("{simulator}__{agent}.jsonl"))
    }
}

/// What training produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainSummary {
    pub dialogues: usize,
    pub user_turns: usize,
    pub agent_turns: usize,
    pub user_act_kinds: usize,
    pub agent_act_kinds: usize,
    pub length_histogram_bins: usize,
    pub index_entries: usize,
}

impl fmt::Display for TrainSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "dialogues          {}", self.dialogues)?;
        writeln!(f, "user turns         {}", self.user_turns)?;
        writeln!(f, "agent turns        {}", self.agent_turns)?;
        writeln!(f, "user act kinds     {}", self.user_act_kinds)?;
        writeln!(f, "agent act kinds    {}", self.agent_act_kinds)?;
        writeln!(f, "length bins        {}", self.length_histogram_bins)?;
        write!(f, "NLU index entries  {}", self.index_entries)
    }
}

/// NLU index from the shipped agent templates plus every labeled agent
/// turn of the corpus; entity mentions become `<ITEM>` placeholders.
/// Duplicate entries are kept once.
pub fn build_agent_index(corpus: &AnnotatedDialogueCorpus) -> Result<LabeledUtteranceIndex<AgentActionKind>> {
    let mut entries = TemplateBank::default_agent().to_index()?.entries().to_vec();
    for d in &corpus.dialogues {
        for t in d.turns.iter().filter(|t| t.speaker == Speaker::Agent) {
            let Some(label) = t.actions.iter().find_map(|a| a.as_agent()) else {
                continue;
            };
            let mut pattern = t.utterance.replace(['<', '>'], " ");
            let mut replaced = false;
            for e in &t.entities {
                if !e.mention.is_empty() && pattern.contains(&e.mention) {
                    pattern = pattern.replacen(&e.mention, "<ITEM>", 1);
                    replaced = true;
                }
            }
            let template = if replaced { Some(Template::parse(&pattern)?) } else { None };
            entries.push(IndexEntry::new(&t.utterance, label, template));
        }
    }
    let mut seen = BTreeSet::new();
    entries.retain(|e| seen.insert((e.label, e.text.clone(), e.template.as_ref().map(|t| t.source().to_string()))));
    LabeledUtteranceIndex::new(entries)
}

/// Estimates both interaction models and the NLU index, then writes them
/// to `out`. Nothing is written unless every step succeeds.
pub fn train(dialogues: &Path, out: &Path, training_agent: Option<&str>) -> Result<TrainSummary> {
    let mut corpus = load_dialogues(dialogues)?;
    if let Some(agent) = training_agent {
        corpus = corpus.for_agent(agent)?;
    }
    let cir6 = estimate_cir6(&corpus)?;
    let qrfa = estimate_qrfa(&corpus)?;
    let index = build_agent_index(&corpus)?;
    let user_kinds: BTreeSet<_> = corpus.dialogues.iter().flat_map(|d| d.user_actions()).collect();
    let agent_kinds: BTreeSet<_> = corpus.dialogues.iter().flat_map(|d| d.agent_actions()).collect();
    let summary = TrainSummary {
        dialogues: corpus.len(),
        user_turns: corpus.dialogues.iter().map(|d| d.turns.iter().filter(|t| t.speaker == Speaker::User).count()).sum(),
        agent_turns: corpus.dialogues.iter().map(|d| d.turns.iter().filter(|t| t.speaker == Speaker::Agent).count()).sum(),
        user_act_kinds: user_kinds.len(),
        agent_act_kinds: agent_kinds.len(),
        length_histogram_bins: cir6.lengths.len(),
        index_entries: index.len(),
    };
    let files = [
        (CIR6_ARTIFACT, cir6.to_json()),
        (QRFA_ARTIFACT, qrfa.to_json()),
        (INDEX_ARTIFACT, index.to_csv()),
    ];
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    for (name, body) in files {
        write_atomic(&out.join(name), body.as_bytes())?;
    }
    Ok(summary)
}

#[derive(Debug, Clone)]
pub struct Artifacts {
    pub cir6: TransitionModel,
    pub qrfa: TransitionModel,
    pub index: LabeledUtteranceIndex<AgentActionKind>,
}

pub fn load_artifacts(dir: &Path) -> Result<Artifacts> {
    Ok(Artifacts {
        cir6: TransitionModel::load(&dir.join(CIR6_ARTIFACT))?,
        qrfa: TransitionModel::load(&dir.join(QRFA_ARTIFACT))?,
        index: LabeledUtteranceIndex::load(&dir.join(INDEX_ARTIFACT))?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum RunStatus {
    Success,
    /// Some dialogues ended in agent errors.
    Partial,
    /// Every dialogue ended in an agent error.
    TotalFailure,
}

#[derive(Debug, Clone)]
pub struct CampaignRecord {
    pub simulator: String,
    pub agent: String,
    pub capabilities: BTreeSet<Capability>,
    pub transcripts: Vec<DialogueTranscript>,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub report: MetricsReport,
    pub campaigns: Vec<CampaignRecord>,
    pub status: RunStatus,
}

fn status_of(campaigns: &[CampaignRecord]) -> RunStatus {
    let all: Vec<&DialogueTranscript> = campaigns.iter().flat_map(|c| &c.transcripts).collect();
    let errors = all.iter().filter(|t| t.status == TerminalStatus::AgentError).count();
    match errors {
        0 => RunStatus::Success,
        n if n == all.len() => RunStatus::TotalFailure,
        _ => RunStatus::Partial,
    }
}

fn build_report(config: &ExperimentConfig, campaigns: &[CampaignRecord]) -> Result<MetricsReport> {
    let reference = config.reference()?;
    let views: Vec<Campaign<'_>> = campaigns
        .iter()
        .map(|c| Campaign {
            simulator: &c.simulator,
            agent: &c.agent,
            capabilities: &c.capabilities,
            transcripts: &c.transcripts,
        })
        .collect();
    Ok(MetricsReport::build(&views, Some(&reference), &RewardParams::default()))
}

fn write_report(config: &ExperimentConfig, report: &MetricsReport) -> Result<()> {
    let out = config.resolve(&config.output);
    std::fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
    write_atomic(&out.join("report.json"), report.to_json().as_bytes())?;
    write_atomic(&out.join("report.txt"), report.to_table().as_bytes())
}

fn to_jsonl(transcripts: &[DialogueTranscript]) -> String {
    transcripts
        .iter()
        .map(|t| serde_json::to_string(t).expect("transcript serializes") + "\n")
        .collect()
}

/// Runs every (simulator, agent) campaign, writes transcripts and the
/// report under the output directory.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunOutcome> {
    config.validate()?;
    let sims = config.simulator_configs()?;
    let artifacts = load_artifacts(&config.resolve(&config.artifacts))?;
    let ratings = config.load_ratings()?;
    let endpoints: Vec<AgentEndpoint> =
        config.agents.iter().map(|a| a.endpoint(&ratings)).collect::<Result<_>>()?;
    let mut resources = Resources::new(ratings, Some(artifacts.cir6), Some(artifacts.qrfa))?;
    resources.agent_index = artifacts.index;
    let resources = Arc::new(resources);

    let mut campaigns = Vec::new();
    for sim_config in sims {
        let sim = Simulator::new(sim_config, Arc::clone(&resources))?;
        for ep in &endpoints {
            let transcripts = sim.run_campaign(ep, config.n_dialogues, config.base_seed)?;
            campaigns.push(CampaignRecord {
                simulator: sim.name(),
                agent: ep.name.clone(),
                capabilities: ep.capabilities.clone(),
                transcripts,
            });
        }
    }
    let dir = config.resolve(&config.output).join("transcripts");
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    for c in &campaigns {
        write_atomic(&config.transcript_path(&c.simulator, &c.agent), to_jsonl(&c.transcripts).as_bytes())?;
    }
    let report = build_report(config, &campaigns)?;
    write_report(config, &report)?;
    Ok(RunOutcome {
        status: status_of(&campaigns),
        report,
        campaigns,
    })
}

/// Recomputes the report from transcripts saved by an earlier run.
pub fn metrics_from_saved(config: &ExperimentConfig) -> Result<RunOutcome> {
    let mut campaigns = Vec::new();
    for sim in config.simulator_configs()? {
        for agent in &config.agents {
            let path = config.transcript_path(&sim.name(), &agent.name);
            let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
            let transcripts = text
                .lines()
                .enumerate()
                .filter(|(_, l)| !l.trim().is_empty())
                .map(|(i, l)| {
                    let t: DialogueTranscript = serde_json::from_str(l)
                        .map_err(|e| Error::parse(format!("{}: line {}", path.display(), i + 1), e.to_string()))?;
                    t.validate()?;
                    Ok(t)
                })
                .collect::<Result<Vec<_>>>()?;
            campaigns.push(CampaignRecord {
                simulator: sim.name(),
                agent: agent.name.clone(),
                capabilities: agent.capability_set()?,
                transcripts,
            });
        }
    }
    let report = build_report(config, &campaigns)?;
    write_report(config, &report)?;
    Ok(RunOutcome {
        status: status_of(&campaigns),
        report,
        campaigns,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
n_dialogues = 5
output = "out"
artifacts = "art"

[data]
ratings = "r.csv"
catalog = "m.csv"
dialogues = "d.jsonl"

[[agent]]
name = "perfect"
stub = { policy = "PERFECT" }

[[agent]]
name = "remote"
address = "127.0.0.1:9"
capabilities = ["Disclose", "Inquire"]
"#;

    #[test]
    fn parses_and_defaults() {
        let c = ExperimentConfig::from_toml_str(MINIMAL, Path::new("/base")).unwrap();
        assert_eq!(c.base_seed, 1);
        assert_eq!(c.simulators, ["QRFA-Single", "CIR6-Single", "CIR6-PKG"]);
        assert_eq!(c.resolve(Path::new("r.csv")), PathBuf::from("/base/r.csv"));
        assert_eq!(c.agents[1].capability_set().unwrap().len(), 2);
        assert!(matches!(c.agents[0].kind().unwrap(), AgentKind::Stub(_)));
        // Files do not exist.
        assert!(matches!(c.validate(), Err(Error::Config(_))));
    }

    #[test]
    fn rejects_bad_configs() {
        let base = Path::new(".");
        assert!(ExperimentConfig::from_toml_str("n_dialogues = 1\nbogus = 2", base).is_err());
        let mut c = ExperimentConfig::from_toml_str(MINIMAL, base).unwrap();
        c.n_dialogues = 0;
        assert!(c.validate().is_err());
        let mut c = ExperimentConfig::from_toml_str(MINIMAL, base).unwrap();
        c.simulators = vec!["QRFA-PKG".into()];
        assert!(c.validate().is_err());
        let mut c = ExperimentConfig::from_toml_str(MINIMAL, base).unwrap();
        c.agents[1].stub = c.agents[0].stub.clone();
        assert!(c.agents[1].kind().is_err());
    }

    #[test]
    fn overrides_apply() {
        let mut c = ExperimentConfig::from_toml_str(MINIMAL, Path::new(".")).unwrap();
        c.apply(&Overrides { seed: Some(9), n: Some(3), out: None, oracle_nlu: true });
        assert_eq!((c.base_seed, c.n_dialogues, c.oracle_nlu), (9, 3, true));
        assert!(c.simulator_configs().unwrap().iter().all(|s| s.oracle_nlu));
    }
}
