use std::sync::OnceLock;

use proptest::prelude::*;

use crsim_core::corpus::{estimate_cir6, estimate_qrfa, TransitionModel};
use crsim_core::domain::{AgendaUpdate, AgentActionKind, Goal, UserActionKind};
use crsim_core::evaluation::{collapsed_turns, ds_kl, kl, ActionDistribution, Provenance};
use crsim_core::harness::fixtures::{self, FixtureParams, GroundTruth};
use crsim_core::interaction::{initial_agenda, update_agenda, Cir6StateDiagram, SimulationState};
use crsim_core::nlu::{normalize, tokenize};
use crsim_core::sampling::seeded;

fn models() -> &'static (TransitionModel, TransitionModel) {
    static MODELS: OnceLock<(TransitionModel, TransitionModel)> = OnceLock::new();
    MODELS.get_or_init(|| {
        let params = FixtureParams {
            users: 20,
            rated_items: 30,
            fresh_items: 5,
            ratings_per_user: (10, 12),
            dialogues: 80,
        };
        let f = fixtures::generate(&params, &GroundTruth::default(), 1).unwrap();
        (estimate_cir6(&f.corpus).unwrap(), estimate_qrfa(&f.corpus).unwrap())
    })
}

fn distribution(weights: &[u32]) -> ActionDistribution {
    let counts: Vec<u64> = weights.iter().map(|&w| u64::from(w)).collect();
    ActionDistribution::from_user_counts(Provenance::Simulated, &counts, 0.1).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn agenda_keeps_complete_at_the_bottom(
        seed in any::<u64>(),
        qrfa in any::<bool>(),
        steps in prop::collection::vec((any::<bool>(), prop::option::of(0usize..12)), 1..80),
    ) {
        let (cir6, qrfa_model) = models();
        let model = if qrfa { qrfa_model } else { cir6 };
        let mut rng = seeded(seed);
        let agenda = initial_agenda(model, &Cir6StateDiagram::default(), &mut rng);
        let mut state = SimulationState::new(agenda, Goal::new(Vec::<String>::new()));
        for (delta, b) in steps {
            let before = state.agenda.len();
            let top = state.agenda.top();
            state.last_agent = b.map(|i| AgentActionKind::ALL[i]);
            let update = update_agenda(&mut state, model, delta, &mut rng);
            match update {
                None => {
                    prop_assert_eq!(before, 0);
                    break;
                }
                Some(AgendaUpdate::Pull) => {
                    prop_assert!(delta || top == Some(UserActionKind::Complete));
                    prop_assert_eq!(state.agenda.len(), before - 1);
                }
                Some(AgendaUpdate::Replace) => {
                    prop_assert!(!delta);
                    prop_assert_eq!(state.agenda.len(), before);
                }
                Some(AgendaUpdate::EarlyStop) => prop_assert!(false, "update_agenda never stops early"),
            }
            let acts = state.agenda.as_slice();
            if let Some((bottom, rest)) = acts.split_first() {
                prop_assert_eq!(*bottom, UserActionKind::Complete);
                prop_assert!(!rest.contains(&UserActionKind::Complete));
            }
        }
    }

    #[test]
    fn ds_kl_is_symmetric_and_non_negative(
        a in prop::collection::vec(0u32..50, 16),
        b in prop::collection::vec(0u32..50, 16),
    ) {
        let (p, q) = (distribution(&a), distribution(&b));
        let pq = ds_kl(&p, &q).unwrap();
        prop_assert!(pq >= 0.0);
        prop_assert!((pq - ds_kl(&q, &p).unwrap()).abs() <= 1e-12);
        prop_assert!(kl(&p, &p).unwrap().abs() <= 1e-12);
    }

    #[test]
    fn collapsing_repeats_is_bounded(acts in prop::collection::vec(prop::option::of(0usize..16), 0..60)) {
        let acts: Vec<Option<UserActionKind>> = acts.into_iter().map(|a| a.map(|i| UserActionKind::ALL[i])).collect();
        let t = collapsed_turns(&acts);
        prop_assert!(t <= acts.len());
        prop_assert!(2 * t >= acts.len());
        if !acts.contains(&Some(UserActionKind::Repeat)) {
            prop_assert_eq!(t, acts.len());
        }
    }

    #[test]
    fn normalization_is_idempotent(text in "\\PC{0,60}") {
        let once = normalize(&text);
        prop_assert_eq!(normalize(&once), once.clone());
        prop_assert_eq!(tokenize(&once).join(" "), once);
    }
}
