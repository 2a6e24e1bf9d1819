use std::sync::Arc;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use crsim_core::corpus::{estimate_cir6, estimate_qrfa};
use crsim_core::domain::Speaker;
use crsim_core::engine::{AgentEndpoint, Resources, Simulator, SimulatorConfig, Transport};
use crsim_core::harness::build_agent_index;
use crsim_core::harness::fixtures::{self, FixtureParams, Fixtures, GroundTruth};
use crsim_core::harness::{StubAgent, StubAgentSpec, StubPolicy};
use crsim_core::preference::{build_pkg, sample_profile};
use crsim_core::sampling::seeded;

fn world() -> Fixtures {
    fixtures::generate(&FixtureParams::default(), &GroundTruth::default(), 7).expect("fixtures")
}

fn estimation(c: &mut Criterion) {
    let f = world();
    let mut group = c.benchmark_group("estimation");
    group.bench_function("cir6", |b| b.iter(|| estimate_cir6(&f.corpus).unwrap()));
    group.bench_function("qrfa", |b| b.iter(|| estimate_qrfa(&f.corpus).unwrap()));
    group.bench_function("agent_index", |b| b.iter(|| build_agent_index(&f.corpus).unwrap()));
    group.finish();
}

fn classification(c: &mut Criterion) {
    let f = world();
    let index = build_agent_index(&f.corpus).unwrap();
    let utterances: Vec<&str> = f
        .corpus
        .dialogues
        .iter()
        .flat_map(|d| d.turns.iter())
        .filter(|t| t.speaker == Speaker::Agent)
        .map(|t| t.utterance.as_str())
        .take(200)
        .collect();
    c.bench_function("classify_agent_utterances", |b| {
        b.iter(|| {
            for u in &utterances {
                std::hint::black_box(index.classify(u));
            }
        })
    });
}

fn preference(c: &mut Criterion) {
    let f = world();
    let mut rng = seeded(3);
    c.bench_function("sample_profile_and_pkg", |b| {
        b.iter(|| {
            let profile = sample_profile(&f.ratings, &mut rng).unwrap();
            build_pkg(&profile, f.ratings.catalog()).unwrap()
        })
    });
}

fn dialogues(c: &mut Criterion) {
    let f = world();
    let cir6 = estimate_cir6(&f.corpus).unwrap();
    let qrfa = estimate_qrfa(&f.corpus).unwrap();
    let resources = Arc::new(Resources::new(f.ratings.clone(), Some(cir6), Some(qrfa)).unwrap());
    let pool = f.ratings.catalog().items.keys().cloned().collect();
    let spec = StubAgentSpec::new("flaky", StubPolicy::Flaky(0.8), pool, 1);
    let agent = StubAgent::new(spec, f.ratings.catalog().clone()).unwrap();
    let endpoint = AgentEndpoint::new("flaky", Transport::Loopback(Arc::new(agent)));
    let mut group = c.benchmark_group("dialogue");
    for config in SimulatorConfig::presets() {
        let name = config.name();
        let sim = Simulator::new(config, Arc::clone(&resources)).unwrap();
        let mut seed = 0u64;
        group.bench_with_input(BenchmarkId::from_parameter(name), &sim, |b, sim| {
            b.iter(|| {
                seed += 1;
                sim.run_dialogue(&endpoint, seed)
            })
        });
    }
    group.finish();
}

criterion_group!(benches, estimation, classification, preference, dialogues);
criterion_main!(benches);
