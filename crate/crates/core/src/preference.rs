//! Preference models built from historical ratings.
//!
//! Raw ratings map onto a three-level sentiment (liked ≥ 4, disliked ≤ 2,
//! neutral otherwise). The single-item model answers "have you seen it" from
//! the sampled history and "did you like it" with a coin flip. The personal
//! knowledge graph (PKG) also rates attributes as the mean sentiment of the
//! profile items carrying them, so every preference answer is consistent.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{Catalog, RatingsCorpus, MAX_RATING, MIN_RATING};
use crate::error::{Error, Result};

/// Items sampled per simulated user.
pub const PROFILE_SIZE: usize = 8;

pub const LIKED_THRESHOLD: f64 = 4.0;
pub const DISLIKED_THRESHOLD: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(into = "i8", try_from = "i8")]
pub enum Sentiment {
    Negative,
    Neutral,
    Positive,
}

impl Sentiment {
    pub fn value(self) -> i8 {
        match self {
            Sentiment::Negative => -1,
            Sentiment::Neutral => 0,
            Sentiment::Positive => 1,
        }
    }

    pub fn from_sign(x: f64) -> Self {
        if x > 0.0 {
            Sentiment::Positive
        } else if x < 0.0 {
            Sentiment::Negative
        } else {
            Sentiment::Neutral
        }
    }
}

impl From<Sentiment> for i8 {
    fn from(s: Sentiment) -> i8 {
        s.value()
    }
}

impl TryFrom<i8> for Sentiment {
    type Error = String;
    fn try_from(v: i8) -> std::result::Result<Self, String> {
        match v {
            -1 => Ok(Sentiment::Negative),
            0 => Ok(Sentiment::Neutral),
            1 => Ok(Sentiment::Positive),
            other => Err(format!("sentiment must be -1, 0 or 1, got {other}")),
        }
    }
}

pub fn rating_to_sentiment(raw: f64) -> Result<Sentiment> {
    if !(MIN_RATING..=MAX_RATING).contains(&raw) {
        return Err(Error::RatingRange {
            user: String::new(),
            item: String::new(),
            rating: raw,
        });
    }
    Ok(if raw >= LIKED_THRESHOLD {
        Sentiment::Positive
    } else if raw <= DISLIKED_THRESHOLD {
        Sentiment::Negative
    } else {
        Sentiment::Neutral
    })
}

/// The simulated user's consumed items with their sentiments.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UserProfile {
    pub user_id: String,
    pub items: BTreeMap<String, Sentiment>,
}

impl UserProfile {
    fn with(&self, s: Sentiment) -> impl Iterator<Item = &str> {
        self.items
            .iter()
            .filter(move |(_, v)| **v == s)
            .map(|(k, _)| k.as_str())
    }

    pub fn liked(&self) -> impl Iterator<Item = &str> {
        self.with(Sentiment::Positive)
    }

    pub fn disliked(&self) -> impl Iterator<Item = &str> {
        self.with(Sentiment::Negative)
    }

    pub fn neutral(&self) -> impl Iterator<Item = &str> {
        self.with(Sentiment::Neutral)
    }

    pub fn consumed(&self, item: &str) -> bool {
        self.items.contains_key(item)
    }
}

pub fn answer_consumed(profile: &UserProfile, item: &str) -> bool {
    profile.consumed(item)
}

/// Single-item model preference answer: a fair coin, whatever the item.
pub fn answer_preference_single<R: Rng + ?Sized>(rng: &mut R) -> Sentiment {
    if rng.gen_bool(0.5) {
        Sentiment::Positive
    } else {
        Sentiment::Negative
    }
}

/// Draws profiles from users owning at least [`PROFILE_SIZE`] rated items,
/// one of them liked.
#[derive(Debug, Clone)]
pub struct ProfileSampler {
    size: usize,
    eligible: Vec<(String, Vec<(String, Sentiment)>)>,
}

impl ProfileSampler {
    pub fn new(ratings: &RatingsCorpus) -> Result<Self> {
        Self::with_size(ratings, PROFILE_SIZE)
    }

    pub fn with_size(ratings: &RatingsCorpus, size: usize) -> Result<Self> {
        if size == 0 {
            return Err(Error::Argument("profile size must be positive".into()));
        }
        let mut eligible = Vec::new();
        for user in ratings.users() {
            // Later ratings of the same item win.
            let mut items = BTreeMap::new();
            for r in ratings.user_ratings(user) {
                items.insert(r.item_id.clone(), rating_to_sentiment(r.rating)?);
            }
            let has_liked = items.values().any(|s| *s == Sentiment::Positive);
            if items.len() >= size && has_liked {
                eligible.push((user.to_string(), items.into_iter().collect()));
            }
        }
        if eligible.is_empty() {
            return Err(Error::Sampling(format!(
                "no user has {size} rated items including a liked one"
            )));
        }
        Ok(ProfileSampler { size, eligible })
    }

    pub fn eligible_users(&self) -> usize {
        self.eligible.len()
    }

    /// Uniform eligible user, then `size` items without replacement,
    /// redrawn until at least one is liked.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> UserProfile {
        let (user, items) = &self.eligible[rng.gen_range(0..self.eligible.len())];
        loop {
            let picked = rand::seq::index::sample(rng, items.len(), self.size);
            let chosen: BTreeMap<String, Sentiment> =
                picked.iter().map(|i| items[i].clone()).collect();
            if chosen.values().any(|s| *s == Sentiment::Positive) {
                return UserProfile {
                    user_id: user.clone(),
                    items: chosen,
                };
            }
        }
    }
}

pub fn sample_profile<R: Rng + ?Sized>(ratings: &RatingsCorpus, rng: &mut R) -> Result<UserProfile> {
    Ok(ProfileSampler::new(ratings)?.sample(rng))
}

/// Item and attribute nodes with inferred attribute ratings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PersonalKnowledgeGraph {
    pub items: BTreeMap<String, Sentiment>,
    /// Item → attribute edges.
    pub edges: BTreeMap<String, Vec<String>>,
    /// r_j per attribute.
    pub attributes: BTreeMap<String, f64>,
}

/// A node a preference question can be about.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PkgNode<'a> {
    Item(&'a str),
    Attribute(&'a str),
}

/// r_j is the mean item sentiment over profile items carrying j; neutral
/// items contribute 0.
pub fn build_pkg(profile: &UserProfile, catalog: &Catalog) -> Result<PersonalKnowledgeGraph> {
    let mut edges = BTreeMap::new();
    let mut sums: BTreeMap<String, (f64, usize)> = BTreeMap::new();
    for (item, sentiment) in &profile.items {
        let attrs = catalog
            .attributes(item)
            .ok_or_else(|| Error::Referential { item: item.clone() })?;
        let distinct: BTreeSet<&String> = attrs.iter().collect();
        for attr in &distinct {
            let e = sums.entry((*attr).clone()).or_insert((0.0, 0));
            e.0 += f64::from(sentiment.value());
            e.1 += 1;
        }
        edges.insert(item.clone(), distinct.into_iter().cloned().collect());
    }
    let attributes = sums
        .into_iter()
        .map(|(attr, (sum, n))| (attr, sum / n as f64))
        .collect();
    Ok(PersonalKnowledgeGraph {
        items: profile.items.clone(),
        edges,
        attributes,
    })
}

impl PersonalKnowledgeGraph {
    pub fn liked_attributes(&self) -> impl Iterator<Item = &str> {
        self.attributes
            .iter()
            .filter(|(_, r)| **r > 0.0)
            .map(|(a, _)| a.as_str())
    }

    pub fn disliked_attributes(&self) -> impl Iterator<Item = &str> {
        self.attributes
            .iter()
            .filter(|(_, r)| **r < 0.0)
            .map(|(a, _)| a.as_str())
    }

    pub fn consumed(&self, item: &str) -> bool {
        self.items.contains_key(item)
    }

    /// Would-be sentiment for an item not in the profile: sign of the mean
    /// r_j over its attributes known to the graph.
    pub fn predict(&self, attributes: &[String]) -> Sentiment {
        let known: Vec<f64> = attributes
            .iter()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .filter_map(|a| self.attributes.get(a).copied())
            .collect();
        if known.is_empty() {
            return Sentiment::Neutral;
        }
        Sentiment::from_sign(known.iter().sum::<f64>() / known.len() as f64)
    }
}

/// Deterministic PKG answer. Items outside the profile answer neutral (use
/// [`PersonalKnowledgeGraph::consumed`] to tell them apart); attributes
/// answer with the sign of r_j, neutral when unknown.
pub fn answer_preference_pkg(pkg: &PersonalKnowledgeGraph, node: PkgNode<'_>) -> Sentiment {
    match node {
        PkgNode::Item(item) => pkg.items.get(item).copied().unwrap_or(Sentiment::Neutral),
        PkgNode::Attribute(attr) => pkg
            .attributes
            .get(attr)
            .map_or(Sentiment::Neutral, |&r| Sentiment::from_sign(r)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{CatalogItem, Rating};
    use crate::sampling::seeded;

    fn catalog(items: &[(&str, &[&str])]) -> Catalog {
        Catalog {
            items: items
                .iter()
                .map(|(id, attrs)| {
                    (
                        id.to_string(),
                        CatalogItem {
                            title: format!("Title {id}"),
                            attributes: attrs.iter().map(|a| a.to_string()).collect(),
                        },
                    )
                })
                .collect(),
        }
    }

    fn profile(items: &[(&str, Sentiment)]) -> UserProfile {
        UserProfile {
            user_id: "u".into(),
            items: items.iter().map(|(i, s)| (i.to_string(), *s)).collect(),
        }
    }

    #[test]
    fn thresholds() {
        assert_eq!(rating_to_sentiment(4.0).unwrap(), Sentiment::Positive);
        assert_eq!(rating_to_sentiment(2.0).unwrap(), Sentiment::Negative);
        assert_eq!(rating_to_sentiment(3.5).unwrap(), Sentiment::Neutral);
        assert_eq!(rating_to_sentiment(0.5).unwrap(), Sentiment::Negative);
        assert_eq!(rating_to_sentiment(5.0).unwrap(), Sentiment::Positive);
        assert!(rating_to_sentiment(5.5).is_err());
        assert!(rating_to_sentiment(0.0).is_err());
    }

    #[test]
    fn sentiment_monotone_in_rating() {
        let mut prev = Sentiment::Negative;
        for step in 1..=10 {
            let s = rating_to_sentiment(step as f64 * 0.5).unwrap();
            assert!(s >= prev);
            prev = s;
        }
    }

    #[test]
    fn pkg_mean_formula() {
        use Sentiment::*;
        let cat = catalog(&[("a", &["drama"]), ("b", &["drama"]), ("c", &["drama", "war"]), ("d", &["war", "comedy"])]);
        let p = profile(&[("a", Positive), ("b", Positive), ("c", Negative), ("d", Positive)]);
        let pkg = build_pkg(&p, &cat).unwrap();
        assert!((pkg.attributes["drama"] - 1.0 / 3.0).abs() < 1e-12);
        assert!(pkg.liked_attributes().any(|a| a == "drama"));
        assert_eq!(pkg.attributes["comedy"], 1.0);
        assert_eq!(pkg.attributes["war"], 0.0);
        assert!(!pkg.liked_attributes().any(|a| a == "war"));
        assert!(!pkg.disliked_attributes().any(|a| a == "war"));
        assert_eq!(answer_preference_pkg(&pkg, PkgNode::Attribute("drama")), Positive);
        assert_eq!(answer_preference_pkg(&pkg, PkgNode::Attribute("horror")), Neutral);
        assert_eq!(answer_preference_pkg(&pkg, PkgNode::Item("a")), Positive);
        assert_eq!(answer_preference_pkg(&pkg, PkgNode::Item("zzz")), Neutral);
    }

    #[test]
    fn neutral_items_pull_attribute_towards_zero() {
        use Sentiment::*;
        let cat = catalog(&[("a", &["x"]), ("b", &["x"])]);
        let pkg = build_pkg(&profile(&[("a", Positive), ("b", Neutral)]), &cat).unwrap();
        assert_eq!(pkg.attributes["x"], 0.5);
    }

    #[test]
    fn pkg_needs_catalog_entries() {
        let cat = catalog(&[("a", &["x"])]);
        let err = build_pkg(&profile(&[("a", Sentiment::Positive), ("ghost", Sentiment::Neutral)]), &cat).unwrap_err();
        assert!(matches!(err, Error::Referential { .. }));
    }

    #[test]
    fn consumed_answers() {
        let p = profile(&[("a", Sentiment::Positive)]);
        assert!(answer_consumed(&p, "a"));
        assert!(!answer_consumed(&p, "b"));
        assert!(!answer_consumed(&p, ""));
    }

    fn ratings(rows: &[(&str, &str, f64)], cat: Catalog) -> RatingsCorpus {
        RatingsCorpus::new(
            rows.iter()
                .map(|(u, i, r)| Rating {
                    user_id: u.to_string(),
                    item_id: i.to_string(),
                    rating: *r,
                })
                .collect(),
            cat,
        )
        .unwrap()
    }

    #[test]
    fn forced_single_eligible_user() {
        let ids: Vec<String> = (0..10).map(|i| format!("m{i}")).collect();
        let cat = catalog(&ids.iter().map(|i| (i.as_str(), &["g"][..])).collect::<Vec<_>>());
        let mut rows: Vec<(&str, &str, f64)> = ids[..8]
            .iter()
            .enumerate()
            .map(|(k, i)| ("u1", i.as_str(), if k == 0 { 4.5 } else { 3.0 }))
            .collect();
        // u2 has too few items.
        rows.push(("u2", "m8", 5.0));
        rows.push(("u2", "m9", 5.0));
        let corpus = ratings(&rows, cat);
        let sampler = ProfileSampler::new(&corpus).unwrap();
        assert_eq!(sampler.eligible_users(), 1);
        let mut rng = seeded(0);
        let p = sampler.sample(&mut rng);
        assert_eq!(p.user_id, "u1");
        assert_eq!(p.items.len(), 8);
        assert!(p.liked().count() >= 1);
        let again = sample_profile(&corpus, &mut seeded(0)).unwrap();
        assert_eq!(sample_profile(&corpus, &mut seeded(0)).unwrap(), again);
    }

    #[test]
    fn no_liked_items_anywhere() {
        let ids: Vec<String> = (0..8).map(|i| format!("m{i}")).collect();
        let cat = catalog(&ids.iter().map(|i| (i.as_str(), &["g"][..])).collect::<Vec<_>>());
        let rows: Vec<(&str, &str, f64)> = ids.iter().map(|i| ("u1", i.as_str(), 3.0)).collect();
        let err = sample_profile(&ratings(&rows, cat), &mut seeded(1)).unwrap_err();
        assert!(matches!(err, Error::Sampling(_)));
    }

    #[test]
    fn coin_is_fair() {
        let mut rng = seeded(11);
        let pos = (0..10_000)
            .filter(|_| answer_preference_single(&mut rng) == Sentiment::Positive)
            .count() as f64
            / 10_000.0;
        assert!((0.48..=0.52).contains(&pos), "{pos}");
    }

    #[test]
    fn coin_reproducible_but_not_consistent() {
        let a: Vec<_> = {
            let mut rng = seeded(5);
            (0..64).map(|_| answer_preference_single(&mut rng)).collect()
        };
        let b: Vec<_> = {
            let mut rng = seeded(5);
            (0..64).map(|_| answer_preference_single(&mut rng)).collect()
        };
        assert_eq!(a, b);
        assert!(a.iter().any(|s| *s != a[0]));
    }

    #[test]
    fn predict_uses_attribute_means() {
        use Sentiment::*;
        let cat = catalog(&[("a", &["comedy"]), ("b", &["comedy"]), ("c", &["horror"])]);
        let pkg = build_pkg(&profile(&[("a", Positive), ("b", Positive), ("c", Negative)]), &cat).unwrap();
        assert_eq!(pkg.predict(&["comedy".into()]), Positive);
        assert_eq!(pkg.predict(&["horror".into()]), Negative);
        assert_eq!(pkg.predict(&["comedy".into(), "horror".into()]), Neutral);
        assert_eq!(pkg.predict(&["western".into()]), Neutral);
    }
}
