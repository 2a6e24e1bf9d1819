//! Shared setup for integration tests: a synthetic world and stub agents.

#![allow(dead_code)]

use std::collections::BTreeSet;
use std::sync::Arc;

use crsim_core::corpus::{estimate_cir6, estimate_qrfa};
use crsim_core::domain::{AgentActionKind, DialogueTranscript, UserActionKind};
use crsim_core::engine::{AgentEndpoint, Resources, Simulator, SimulatorConfig, Transport};
use crsim_core::harness::fixtures::{self, FixtureParams, Fixtures, GroundTruth};
use crsim_core::harness::{StubAgent, StubAgentSpec, StubPolicy};

pub struct World {
    pub fixtures: Fixtures,
    pub resources: Arc<Resources>,
}

impl World {
    pub fn new(seed: u64) -> Self {
        Self::with_params(&FixtureParams::default(), seed)
    }

    pub fn with_params(params: &FixtureParams, seed: u64) -> Self {
        let fixtures = fixtures::generate(params, &GroundTruth::default(), seed).expect("fixtures");
        let cir6 = estimate_cir6(&fixtures.corpus).expect("cir6");
        let qrfa = estimate_qrfa(&fixtures.corpus).expect("qrfa");
        let resources = Resources::new(fixtures.ratings.clone(), Some(cir6), Some(qrfa)).expect("resources");
        World {
            fixtures,
            resources: Arc::new(resources),
        }
    }

    pub fn simulator(&self, config: SimulatorConfig) -> Simulator {
        Simulator::new(config, Arc::clone(&self.resources)).expect("simulator")
    }

    pub fn all_items(&self) -> Vec<String> {
        self.fixtures.ratings.catalog().items.keys().cloned().collect()
    }

    pub fn stub(&self, name: &str, policy: StubPolicy, pool: Vec<String>, seed: u64) -> AgentEndpoint {
        let spec = StubAgentSpec::new(name, policy, pool, seed);
        let agent = StubAgent::new(spec, self.fixtures.ratings.catalog().clone()).expect("stub");
        AgentEndpoint::new(name, Transport::Loopback(Arc::new(agent)))
    }

    /// A script answering every user act with an act the compatibility
    /// table rejects.
    pub fn always_incompatible(&self) -> StubPolicy {
        let table = &self.resources.compatibility;
        StubPolicy::Scripted(
            UserActionKind::ALL
                .iter()
                .map(|&u| {
                    let b = AgentActionKind::ALL
                        .iter()
                        .copied()
                        .find(|&b| !table.compatible(u, b))
                        .expect("some act is incompatible");
                    (u, Some(b))
                })
                .collect(),
        )
    }
}

pub fn user_acts(t: &DialogueTranscript) -> Vec<UserActionKind> {
    t.user_turns().filter_map(|turn| turn.user_action()).collect()
}

pub fn capabilities_all() -> BTreeSet<crsim_core::engine::Capability> {
    crsim_core::engine::Capability::ALL.into_iter().collect()
}
