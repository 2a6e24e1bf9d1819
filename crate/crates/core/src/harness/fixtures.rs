//! Synthetic ratings, catalog and annotated dialogues for offline runs.
//!
//! Dialogues are drawn from a known ground-truth process: a first act from
//! a start distribution, then a Markov chain over CIR6 main actions with a
//! fine act drawn within each main action, and a final `Complete`. Agent
//! turns are compatible replies rendered from the agent template bank, so
//! the corpus looks like conversations with a well-behaved agent.

use std::collections::BTreeSet;
use std::path::Path;

use rand::Rng;

use crate::corpus::{
    AnnotatedDialogue, AnnotatedDialogueCorpus, AnnotatedTurn, Catalog, CatalogItem, EntityMention, Rating,
    RatingsCorpus,
};
use crate::domain::{
    ActionKind, AgentActionKind, CompatibilityTable, DialogueAction, MainAction, SlotName, Speaker, UserActionKind,
};
use crate::error::{Error, Result};
use crate::nlg::{required_slots, TemplateBank};
use crate::sampling::{choose, sample_weighted, seeded};

const ADJECTIVES: [&str; 24] = [
    "Silent", "Crimson", "Golden", "Hidden", "Broken", "Wandering", "Frozen", "Electric", "Distant", "Velvet",
    "Burning", "Hollow", "Midnight", "Paper", "Iron", "Painted", "Restless", "Lonely", "Savage", "Gentle", "Scarlet",
    "Quiet", "Endless", "Northern",
];
const NOUNS: [&str; 24] = [
    "River", "Harbor", "Garden", "Kingdom", "Mirror", "Station", "Orchard", "Lantern", "Canyon", "Voyage", "Circus",
    "Island", "Compass", "Meadow", "Tower", "Horizon", "Engine", "Carnival", "Forest", "Signal", "Valley", "Empire",
    "Frontier", "Lighthouse",
];

pub const GENRES: [&str; 6] = ["Comedy", "Drama", "Horror", "Action", "Romance", "Sci-Fi"];

/// The genre every fixture user rates highly.
pub const FAVOURITE_GENRE: &str = "Comedy";

#[derive(Debug, Clone, PartialEq)]
pub struct FixtureParams {
    pub users: usize,
    /// Items users rate.
    pub rated_items: usize,
    /// Items nobody has rated, available for recommendation.
    pub fresh_items: usize,
    pub ratings_per_user: (usize, usize),
    pub dialogues: usize,
}

impl Default for FixtureParams {
    fn default() -> Self {
        FixtureParams {
            users: 200,
            rated_items: 150,
            fresh_items: 40,
            ratings_per_user: (12, 24),
            dialogues: 200,
        }
    }
}

/// The process behind the fixture dialogues. Probabilities are indexed by
/// [`UserActionKind::index`] and [`MainAction::index`].
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub start: Vec<f64>,
    /// Rows over next main actions; `Complete` always has probability 0.
    pub main: Vec<Vec<f64>>,
    pub fine: Vec<Vec<f64>>,
    /// Inclusive range of user acts per dialogue, `Complete` included.
    pub lengths: (usize, usize),
}

impl Default for GroundTruth {
    fn default() -> Self {
        use UserActionKind as U;
        let n = UserActionKind::ALL.len();
        let mut start = vec![0.0; n];
        start[U::Disclose.index()] = 0.7;
        start[U::NonDisclose.index()] = 0.1;
        start[U::List.index()] = 0.2;
        // Disclose, Reveal, Inquire, Navigate, Note, Complete
        let main = vec![
            vec![0.1, 0.3, 0.4, 0.2, 0.0, 0.0],
            vec![0.0, 0.2, 0.4, 0.2, 0.2, 0.0],
            vec![0.0, 0.2, 0.3, 0.3, 0.2, 0.0],
            vec![0.0, 0.2, 0.3, 0.3, 0.2, 0.0],
            vec![0.0, 0.3, 0.4, 0.3, 0.0, 0.0],
            vec![0.0; 6],
        ];
        let weights: [(MainAction, &[(U, f64)]); 6] = [
            (MainAction::Disclose, &[(U::Disclose, 0.8), (U::NonDisclose, 0.2)]),
            (MainAction::Reveal, &[(U::Revise, 0.3), (U::Refine, 0.5), (U::Expand, 0.2)]),
            (
                MainAction::Inquire,
                &[
                    (U::List, 0.4),
                    (U::Compare, 0.1),
                    (U::Subset, 0.2),
                    (U::Similar, 0.2),
                    (U::Interrupt, 0.05),
                    (U::Interrogate, 0.05),
                ],
            ),
            (MainAction::Navigate, &[(U::Repeat, 0.2), (U::Back, 0.3), (U::More, 0.5)]),
            (MainAction::Note, &[(U::Note, 1.0)]),
            (MainAction::Complete, &[(U::Complete, 1.0)]),
        ];
        let mut fine = vec![vec![0.0; n]; MainAction::ALL.len()];
        for (m, ws) in weights {
            for (k, w) in ws {
                fine[m.index()][k.index()] = *w;
            }
        }
        GroundTruth {
            start,
            main,
            fine,
            lengths: (4, 10),
        }
    }
}

impl GroundTruth {
    /// User act sequence of one dialogue, `Complete` last.
    pub fn sample_acts<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<UserActionKind> {
        let length = rng.gen_range(self.lengths.0..=self.lengths.1);
        let mut acts = Vec::with_capacity(length);
        let first = sample_weighted(&self.start, rng).expect("start distribution has mass");
        acts.push(UserActionKind::ALL[first]);
        while acts.len() < length - 1 {
            let cur = acts.last().expect("non-empty").main_action();
            let next_main = MainAction::ALL[sample_weighted(&self.main[cur.index()], rng).expect("row has mass")];
            let fine = sample_weighted(&self.fine[next_main.index()], rng).expect("row has mass");
            acts.push(UserActionKind::ALL[fine]);
        }
        acts.push(UserActionKind::Complete);
        acts
    }
}

#[derive(Debug, Clone)]
pub struct Fixtures {
    pub ratings: RatingsCorpus,
    pub corpus: AnnotatedDialogueCorpus,
    /// Items no user has rated.
    pub fresh_items: BTreeSet<String>,
    pub truth: GroundTruth,
}

fn build_catalog<R: Rng + ?Sized>(count: usize, rng: &mut R) -> Result<Catalog> {
    let names = ADJECTIVES.len() * NOUNS.len();
    if count > names {
        return Err(Error::Argument(format!("at most {names} fixture items")));
    }
    let picked = rand::seq::index::sample(rng, names, count);
    let mut catalog = Catalog::default();
    for (i, name) in picked.iter().enumerate() {
        let title = format!(
            "The {} {} ({})",
            ADJECTIVES[name / NOUNS.len()],
            NOUNS[name % NOUNS.len()],
            1970 + rng.gen_range(0..50)
        );
        let first = *choose(&GENRES, rng).expect("genres");
        let mut attributes = vec![first.to_string()];
        if rng.gen_bool(0.3) {
            let second = *choose(&GENRES, rng).expect("genres");
            if second != first {
                attributes.push(second.to_string());
            }
        }
        catalog.items.insert(format!("m{:04}", i + 1), CatalogItem { title, attributes });
    }
    Ok(catalog)
}

/// Generates the full fixture set from one seed.
pub fn generate(params: &FixtureParams, truth: &GroundTruth, seed: u64) -> Result<Fixtures> {
    let mut rng = seeded(seed);
    let catalog = build_catalog(params.rated_items + params.fresh_items, &mut rng)?;
    let ids: Vec<String> = catalog.items.keys().cloned().collect();
    let (rated, fresh) = ids.split_at(params.rated_items);

    let mut ratings = Vec::new();
    for u in 0..params.users {
        let (lo, hi) = params.ratings_per_user;
        let n = rng.gen_range(lo..=hi).min(rated.len());
        for i in rand::seq::index::sample(&mut rng, rated.len(), n) {
            let item = &rated[i];
            let favourite = catalog.attributes(item).is_some_and(|a| a.iter().any(|g| g == FAVOURITE_GENRE));
            let half_stars = if favourite { rng.gen_range(8..=10) } else { rng.gen_range(1..=8) };
            ratings.push(Rating {
                user_id: format!("u{:04}", u + 1),
                item_id: item.clone(),
                rating: f64::from(half_stars) / 2.0,
            });
        }
    }
    let ratings = RatingsCorpus::new(ratings, catalog)?;

    let user_bank = TemplateBank::default_user();
    let agent_bank = TemplateBank::default_agent();
    let table = CompatibilityTable::default();
    let mut dialogues = Vec::with_capacity(params.dialogues);
    for d in 0..params.dialogues {
        let mut turns = Vec::new();
        for act in truth.sample_acts(&mut rng) {
            turns.push(user_turn(act, &user_bank, ratings.catalog(), &mut rng)?);
            let reply = *choose(&table.responses(act), &mut rng).expect("every user act has a reply");
            turns.push(agent_turn(reply, &agent_bank, ratings.catalog(), fresh, &mut rng)?);
        }
        dialogues.push(AnnotatedDialogue {
            dialogue_id: format!("d{:04}", d + 1),
            agent: Some("fixture".into()),
            turns,
        });
    }
    Ok(Fixtures {
        ratings,
        corpus: AnnotatedDialogueCorpus::new(dialogues)?,
        fresh_items: fresh.iter().cloned().collect(),
        truth: truth.clone(),
    })
}

fn user_turn<R: Rng + ?Sized>(
    act: UserActionKind,
    bank: &TemplateBank<UserActionKind>,
    catalog: &Catalog,
    rng: &mut R,
) -> Result<AnnotatedTurn> {
    let mut action = DialogueAction::user(act);
    let mut entities = Vec::new();
    for slot in required_slots(bank, act) {
        let value = match slot {
            SlotName::Attribute => choose(&GENRES, rng).expect("genres").to_string(),
            SlotName::Sentiment => choose(&["like", "dislike"], rng).expect("words").to_string(),
            SlotName::Item => {
                let ids: Vec<&String> = catalog.items.keys().collect();
                let id = (*choose(&ids, rng).expect("catalog is non-empty")).clone();
                entities.push(EntityMention {
                    mention: catalog.title(&id).unwrap_or_default().to_string(),
                    id: id.clone(),
                });
                id
            }
        };
        action = action.with_slot(slot, value);
    }
    Ok(AnnotatedTurn {
        speaker: Speaker::User,
        utterance: bank.render(&action, Some(catalog), rng)?,
        actions: vec![ActionKind::User(act)],
        entities,
    })
}

fn agent_turn<R: Rng + ?Sized>(
    act: AgentActionKind,
    bank: &TemplateBank<AgentActionKind>,
    catalog: &Catalog,
    pool: &[String],
    rng: &mut R,
) -> Result<AnnotatedTurn> {
    let mut action = DialogueAction::agent(act);
    let mut entities = Vec::new();
    for slot in required_slots(bank, act) {
        let value = match slot {
            SlotName::Item => {
                let id = choose(pool, rng).ok_or_else(|| Error::Argument("no fresh items".into()))?.clone();
                entities.push(EntityMention {
                    mention: catalog.title(&id).unwrap_or_default().to_string(),
                    id: id.clone(),
                });
                id
            }
            SlotName::Attribute => "popular".to_string(),
            SlotName::Sentiment => "like".to_string(),
        };
        action = action.with_slot(slot, value);
    }
    Ok(AnnotatedTurn {
        speaker: Speaker::Agent,
        utterance: bank.render(&action, Some(catalog), rng)?,
        actions: vec![ActionKind::Agent(act)],
        entities,
    })
}

pub const RATINGS_FILE: &str = "ratings.csv";
pub const CATALOG_FILE: &str = "movies.csv";
pub const DIALOGUES_FILE: &str = "dialogues.jsonl";

impl Fixtures {
    /// Writes ratings, catalog and dialogues into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for (name, body) in [
            (RATINGS_FILE, self.ratings.ratings_csv()),
            (CATALOG_FILE, self.ratings.catalog().to_csv()),
            (DIALOGUES_FILE, self.corpus.to_jsonl()),
        ] {
            super::write_atomic(&dir.join(name), body.as_bytes())?;
        }
        Ok(())
    }

    /// Fresh items carrying the favourite genre: every fixture user with a
    /// rated item of that genre would like them.
    pub fn liked_pool(&self) -> Vec<String> {
        let catalog = self.ratings.catalog();
        self.fresh_items
            .iter()
            .filter(|id| catalog.attributes(id).is_some_and(|a| a.iter().all(|g| g == FAVOURITE_GENRE)))
            .cloned()
            .collect()
    }
}
