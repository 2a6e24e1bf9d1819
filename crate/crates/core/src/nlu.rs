//! Retrieval-based understanding of utterances.
//!
//! An utterance is labeled with the action of the most similar entry in a
//! labeled utterance index. Similarity is the Jaccard ratio of normalized
//! token sets; an entry whose template matches the utterance outright (its
//! placeholders absorbing the entity mentions) scores 1. Mentions captured
//! by `<ITEM>` placeholders are linked to catalog entities by the same
//! similarity over surface forms.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::io::Read;
use std::ops::Range;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::Catalog;
use crate::domain::SlotName;
use crate::error::{Error, Result};

pub const DEFAULT_FLOOR: f64 = 0.2;

/// Lowercases, turns punctuation into whitespace and collapses runs of
/// whitespace.
pub fn normalize(text: &str) -> String {
    tokenize(text).join(" ")
}

pub fn tokenize(text: &str) -> Vec<String> {
    text.chars()
        .map(|c| if c.is_alphanumeric() { c } else { ' ' })
        .collect::<String>()
        .to_lowercase()
        .split_whitespace()
        .map(str::to_string)
        .collect()
}

/// |A ∩ B| / |A ∪ B|; two empty sets score 0.
pub fn jaccard(a: &BTreeSet<String>, b: &BTreeSet<String>) -> f64 {
    let inter = a.intersection(b).count();
    let union = a.len() + b.len() - inter;
    if union == 0 {
        0.0
    } else {
        inter as f64 / union as f64
    }
}

fn common_prefix(a: &[String], b: &[String]) -> usize {
    a.iter().zip(b).take_while(|(x, y)| x == y).count()
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Piece {
    Literal(String),
    Slot(SlotName),
}

/// An utterance pattern with `<SLOT>` placeholders.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Template {
    source: String,
    pieces: Vec<Piece>,
}

impl Template {
    pub fn parse(source: &str) -> Result<Self> {
        let mut pieces = Vec::new();
        let mut rest = source;
        while let Some(open) = rest.find('<') {
            pieces.extend(tokenize(&rest[..open]).into_iter().map(Piece::Literal));
            let close = rest[open..]
                .find('>')
                .ok_or_else(|| Error::parse(format!("template `{source}`"), "unclosed placeholder"))?;
            let name = &rest[open + 1..open + close];
            let slot = name
                .parse::<SlotName>()
                .map_err(|_| Error::parse(format!("template `{source}`"), format!("unknown slot `{name}`")))?;
            pieces.push(Piece::Slot(slot));
            rest = &rest[open + close + 1..];
        }
        pieces.extend(tokenize(rest).into_iter().map(Piece::Literal));
        Ok(Template {
            source: source.to_string(),
            pieces,
        })
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn slots(&self) -> impl Iterator<Item = SlotName> + '_ {
        self.pieces.iter().filter_map(|p| match p {
            Piece::Slot(s) => Some(*s),
            Piece::Literal(_) => None,
        })
    }

    /// Number of literal tokens; higher means more specific.
    pub fn specificity(&self) -> usize {
        self.pieces.len() - self.slots().count()
    }

    /// The template with placeholders removed, normalized.
    pub fn literal_text(&self) -> String {
        self.pieces
            .iter()
            .filter_map(|p| match p {
                Piece::Literal(t) => Some(t.as_str()),
                Piece::Slot(_) => None,
            })
            .collect::<Vec<_>>()
            .join(" ")
    }

    /// Matches the whole token sequence; each placeholder absorbs at least
    /// one token, shortest first. Returns the token range of every slot.
    pub fn match_tokens(&self, tokens: &[String]) -> Option<Vec<(SlotName, Range<usize>)>> {
        let mut captures = Vec::new();
        self.match_from(0, tokens, 0, &mut captures).then_some(captures)
    }

    fn match_from(
        &self,
        piece: usize,
        tokens: &[String],
        at: usize,
        captures: &mut Vec<(SlotName, Range<usize>)>,
    ) -> bool {
        match self.pieces.get(piece) {
            None => at == tokens.len(),
            Some(Piece::Literal(lit)) => {
                tokens.get(at) == Some(lit) && self.match_from(piece + 1, tokens, at + 1, captures)
            }
            Some(Piece::Slot(slot)) => {
                for end in at + 1..=tokens.len() {
                    captures.push((*slot, at..end));
                    if self.match_from(piece + 1, tokens, end, captures) {
                        return true;
                    }
                    captures.pop();
                }
                false
            }
        }
    }
}

impl fmt::Display for Template {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.source)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IndexEntry<L> {
    pub text: String,
    pub label: L,
    pub template: Option<Template>,
    tokens: Vec<String>,
}

impl<L> IndexEntry<L> {
    pub fn new(utterance: &str, label: L, template: Option<Template>) -> Self {
        let tokens = tokenize(utterance);
        IndexEntry {
            text: tokens.join(" "),
            tokens,
            label,
            template,
        }
    }

    fn specificity(&self) -> usize {
        self.template.as_ref().map_or(self.tokens.len(), Template::specificity)
    }
}

/// Outcome of classifying one utterance.
#[derive(Debug, Clone, PartialEq)]
pub enum Classification<L> {
    Action {
        label: L,
        score: f64,
        /// Position of the winning entry in the index.
        entry: usize,
    },
    /// Best score fell below the floor.
    Unknown { best_score: f64 },
}

impl<L: Copy> Classification<L> {
    pub fn label(&self) -> Option<L> {
        match self {
            Classification::Action { label, .. } => Some(*label),
            Classification::Unknown { .. } => None,
        }
    }

    pub fn score(&self) -> f64 {
        match self {
            Classification::Action { score, .. } => *score,
            Classification::Unknown { best_score } => *best_score,
        }
    }
}

/// Labeled utterances for retrieval classification.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledUtteranceIndex<L> {
    entries: Vec<IndexEntry<L>>,
    floor: f64,
    vocab: HashMap<String, u32>,
    /// Sorted distinct token ids per entry.
    ids: Vec<Vec<u32>>,
    /// Sorted distinct literal token ids per template entry.
    literal_ids: Vec<Option<Vec<u32>>>,
}

fn sorted_ids<'a>(tokens: impl Iterator<Item = &'a String>, vocab: &HashMap<String, u32>) -> Vec<u32> {
    let mut unknown = u32::MAX;
    let mut ids: Vec<u32> = tokens
        .map(|t| {
            vocab.get(t).copied().unwrap_or_else(|| {
                unknown -= 1;
                unknown
            })
        })
        .collect();
    ids.sort_unstable();
    ids.dedup();
    ids
}

fn intersection_len(a: &[u32], b: &[u32]) -> usize {
    let (mut i, mut j, mut n) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            Ordering::Less => i += 1,
            Ordering::Greater => j += 1,
            Ordering::Equal => {
                n += 1;
                i += 1;
                j += 1;
            }
        }
    }
    n
}

struct Candidate {
    score: f64,
    exact: bool,
    specificity: usize,
    prefix: usize,
}

#[derive(Serialize, Deserialize)]
struct IndexRow {
    utterance: String,
    label: String,
    #[serde(default)]
    template: String,
}

impl<L> LabeledUtteranceIndex<L>
where
    L: Copy + Ord + fmt::Display,
{
    pub fn new(entries: Vec<IndexEntry<L>>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::Argument("utterance index is empty".into()));
        }
        let mut vocab = HashMap::new();
        for e in &entries {
            for t in &e.tokens {
                let next = vocab.len() as u32;
                vocab.entry(t.clone()).or_insert(next);
            }
        }
        let ids = entries.iter().map(|e| sorted_ids(e.tokens.iter(), &vocab)).collect();
        let literal_ids = entries
            .iter()
            .map(|e| {
                e.template.as_ref().map(|t| {
                    let literals: Vec<String> = t
                        .pieces
                        .iter()
                        .filter_map(|p| match p {
                            Piece::Literal(l) => Some(l.clone()),
                            Piece::Slot(_) => None,
                        })
                        .collect();
                    sorted_ids(literals.iter(), &vocab)
                })
            })
            .collect();
        Ok(LabeledUtteranceIndex {
            entries,
            floor: DEFAULT_FLOOR,
            vocab,
            ids,
            literal_ids,
        })
    }

    pub fn with_floor(mut self, floor: f64) -> Self {
        self.floor = floor;
        self
    }

    pub fn floor(&self) -> f64 {
        self.floor
    }

    pub fn entries(&self) -> &[IndexEntry<L>] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Highest similarity wins. Ties go to an entry with identical
    /// normalized text, then the more specific entry (literal token count),
    /// then the longer common token prefix, then the smaller label, then
    /// the smaller entry text. The order is total, so entry order in the
    /// index never matters.
    pub fn classify(&self, utterance: &str) -> Classification<L> {
        let tokens = tokenize(utterance);
        let query = sorted_ids(tokens.iter(), &self.vocab);
        let text = tokens.join(" ");
        let mut best: Option<(usize, Candidate)> = None;
        for (i, e) in self.entries.iter().enumerate() {
            let templated = match (&e.template, &self.literal_ids[i]) {
                (Some(t), Some(lits)) => {
                    t.pieces.len() <= tokens.len()
                        && intersection_len(lits, &query) == lits.len()
                        && t.match_tokens(&tokens).is_some()
                }
                _ => false,
            };
            let score = if templated {
                1.0
            } else {
                let inter = intersection_len(&query, &self.ids[i]);
                let union = query.len() + self.ids[i].len() - inter;
                if union == 0 {
                    0.0
                } else {
                    inter as f64 / union as f64
                }
            };
            if best.as_ref().is_some_and(|(_, b)| score < b.score) {
                continue;
            }
            let cand = Candidate {
                score,
                exact: e.text == text,
                specificity: e.specificity(),
                prefix: common_prefix(&tokens, &e.tokens),
            };
            let better = match &best {
                None => true,
                Some((j, b)) => self.prefer(&cand, i, b, *j) == Ordering::Greater,
            };
            if better {
                best = Some((i, cand));
            }
        }
        let (entry, cand) = best.expect("index is non-empty");
        if cand.score < self.floor || cand.score == 0.0 {
            return Classification::Unknown { best_score: cand.score };
        }
        Classification::Action {
            label: self.entries[entry].label,
            score: cand.score,
            entry,
        }
    }

    fn prefer(&self, a: &Candidate, ia: usize, b: &Candidate, ib: usize) -> Ordering {
        let (ea, eb) = (&self.entries[ia], &self.entries[ib]);
        a.score
            .total_cmp(&b.score)
            .then(a.exact.cmp(&b.exact))
            .then(a.specificity.cmp(&b.specificity))
            .then(a.prefix.cmp(&b.prefix))
            .then(eb.label.cmp(&ea.label))
            .then(eb.text.cmp(&ea.text))
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        for e in &self.entries {
            w.serialize(IndexRow {
                utterance: e.text.clone(),
                label: e.label.to_string(),
                template: e.template.as_ref().map(|t| t.source.clone()).unwrap_or_default(),
            })
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
    }
}

impl<L> LabeledUtteranceIndex<L>
where
    L: Copy + Ord + fmt::Display + FromStr<Err = Error>,
{
    /// Reads `utterance,label,template` rows; the template column may be
    /// empty.
    pub fn from_reader(reader: impl Read, source: &str) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(reader);
        let mut entries = Vec::new();
        for (i, row) in rdr.deserialize::<IndexRow>().enumerate() {
            let loc = || format!("{source}: record {}", i + 1);
            let row = row.map_err(|e| Error::parse(loc(), e.to_string()))?;
            let label = row.label.parse::<L>().map_err(|e| e.at(loc()))?;
            let template = if row.template.trim().is_empty() {
                None
            } else {
                Some(Template::parse(&row.template).map_err(|e| e.at(loc()))?)
            };
            entries.push(IndexEntry::new(&row.utterance, label, template));
        }
        Self::new(entries)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::from_reader(file, &path.display().to_string())
    }
}

/// Entity ids with their normalized surface forms.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EntityCatalog {
    forms: Vec<(String, BTreeSet<String>)>,
    postings: BTreeMap<String, Vec<usize>>,
}

#[derive(Deserialize)]
struct EntityRow {
    entity_id: String,
    surface_forms: String,
}

fn strip_year(title: &str) -> Option<&str> {
    let t = title.trim_end();
    let open = t.rfind('(')?;
    let inner = t[open + 1..].strip_suffix(')')?;
    (inner.len() == 4 && inner.chars().all(|c| c.is_ascii_digit())).then(|| t[..open].trim_end())
}

impl EntityCatalog {
    pub fn new(entities: impl IntoIterator<Item = (String, Vec<String>)>) -> Result<Self> {
        let mut catalog = EntityCatalog::default();
        for (id, forms) in entities {
            let mut any = false;
            for form in forms {
                let set: BTreeSet<String> = tokenize(&form).into_iter().collect();
                if set.is_empty() {
                    continue;
                }
                any = true;
                let pos = catalog.forms.len();
                for token in &set {
                    catalog.postings.entry(token.clone()).or_default().push(pos);
                }
                catalog.forms.push((id.clone(), set));
            }
            if !any {
                return Err(Error::Argument(format!("entity `{id}` has no surface form")));
            }
        }
        Ok(catalog)
    }

    /// Titles become surface forms, with and without a trailing `(year)`.
    pub fn from_catalog(catalog: &Catalog) -> Result<Self> {
        Self::new(catalog.items.iter().map(|(id, item)| {
            let mut forms = vec![item.title.clone()];
            forms.extend(strip_year(&item.title).map(str::to_string));
            (id.clone(), forms)
        }))
    }

    /// Reads `entity_id,surface_forms` rows with `|`-separated forms.
    pub fn from_reader(reader: impl Read, source: &str) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(reader);
        let mut entities = Vec::new();
        for (i, row) in rdr.deserialize::<EntityRow>().enumerate() {
            let row = row.map_err(|e| Error::parse(format!("{source}: record {}", i + 1), e.to_string()))?;
            entities.push((row.entity_id, row.surface_forms.split('|').map(str::to_string).collect()));
        }
        Self::new(entities)
    }

    pub fn len(&self) -> usize {
        self.forms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forms.is_empty()
    }

    /// Best-scoring entity for a mention at or above `floor`; equal scores
    /// resolve to the smallest id.
    pub fn resolve(&self, mention: &str, floor: f64) -> Option<(String, f64)> {
        let set: BTreeSet<String> = tokenize(mention).into_iter().collect();
        let mut shared: BTreeMap<usize, usize> = BTreeMap::new();
        for pos in set.iter().filter_map(|t| self.postings.get(t)).flatten() {
            *shared.entry(*pos).or_default() += 1;
        }
        let mut best: Option<(&str, f64)> = None;
        for (pos, inter) in shared {
            let (id, form) = &self.forms[pos];
            let score = inter as f64 / (set.len() + form.len() - inter) as f64;
            let better = match best {
                None => true,
                Some((bid, bs)) => score > bs || (score == bs && id.as_str() < bid),
            };
            if better {
                best = Some((id, score));
            }
        }
        best.filter(|(_, s)| *s >= floor && *s > 0.0).map(|(id, s)| (id.to_string(), s))
    }
}

/// A mention captured by an `<ITEM>` placeholder and resolved to an entity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntityLink {
    pub mention: String,
    /// Token range in the normalized utterance.
    pub span: Range<usize>,
    pub entity: String,
    pub score: f64,
}

/// Classification together with linked entities.
#[derive(Debug, Clone, PartialEq)]
pub struct Analysis<L> {
    pub classification: Classification<L>,
    pub links: Vec<EntityLink>,
}

impl<L> LabeledUtteranceIndex<L>
where
    L: Copy + Ord + fmt::Display,
{
    /// Classifies and links in one pass.
    pub fn analyze(&self, utterance: &str, catalog: &EntityCatalog) -> Analysis<L> {
        let classification = self.classify(utterance);
        let links = match &classification {
            Classification::Action { entry, .. } => self.links_for(*entry, utterance, catalog),
            Classification::Unknown { .. } => Vec::new(),
        };
        Analysis { classification, links }
    }

    fn links_for(&self, entry: usize, utterance: &str, catalog: &EntityCatalog) -> Vec<EntityLink> {
        let Some(template) = &self.entries[entry].template else {
            return Vec::new();
        };
        let tokens = tokenize(utterance);
        let Some(captures) = template.match_tokens(&tokens) else {
            return Vec::new();
        };
        captures
            .into_iter()
            .filter(|(slot, _)| *slot == SlotName::Item)
            .filter_map(|(_, span)| {
                let mention = tokens[span.clone()].join(" ");
                catalog.resolve(&mention, self.floor).map(|(entity, score)| EntityLink {
                    mention,
                    span,
                    entity,
                    score,
                })
            })
            .collect()
    }
}

/// Entity mentions in `utterance`, aligned to the placeholders of the best
/// matching template. Empty when no template matches.
pub fn link_entities<L>(utterance: &str, index: &LabeledUtteranceIndex<L>, catalog: &EntityCatalog) -> Vec<EntityLink>
where
    L: Copy + Ord + fmt::Display,
{
    index.analyze(utterance, catalog).links
}

pub fn classify<L>(utterance: &str, index: &LabeledUtteranceIndex<L>) -> Classification<L>
where
    L: Copy + Ord + fmt::Display,
{
    index.classify(utterance)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::AgentActionKind as B;
    use proptest::prelude::*;

    fn index(rows: &[(&str, B, Option<&str>)]) -> LabeledUtteranceIndex<B> {
        LabeledUtteranceIndex::new(
            rows.iter()
                .map(|(u, l, t)| IndexEntry::new(u, *l, t.map(|t| Template::parse(t).unwrap())))
                .collect(),
        )
        .unwrap()
    }

    fn sample_index() -> LabeledUtteranceIndex<B> {
        index(&[
            ("Could you give me one movie you like?", B::Elicit, None),
            ("Have you seen Titanic?", B::Show, Some("Have you seen <ITEM>?")),
            ("Here are some more options", B::More, None),
            ("Goodbye and enjoy your movie", B::End, None),
        ])
    }

    #[test]
    fn normalization() {
        assert_eq!(normalize("  Hello,   WORLD!! It's  "), "hello world it s");
        assert_eq!(normalize("?!"), "");
    }

    #[test]
    fn exact_match_scores_one() {
        let c = sample_index().classify("Here are some more options");
        assert_eq!(c.label(), Some(B::More));
        assert_eq!(c.score(), 1.0);
    }

    #[test]
    fn elicit_example() {
        let idx = sample_index();
        assert_eq!(idx.classify("Could you give me one movie you like?").label(), Some(B::Elicit));
        assert_eq!(idx.classify("could you give me a movie that you like").label(), Some(B::Elicit));
    }

    #[test]
    fn disjoint_is_unknown() {
        let c = sample_index().classify("zebra xylophone");
        assert_eq!(c, Classification::Unknown { best_score: 0.0 });
        assert_eq!(sample_index().classify("").label(), None);
    }

    #[test]
    fn floor_applies() {
        // "enjoy" is 1 of the End entry's 5 tokens: exactly at the floor.
        let c = sample_index().classify("enjoy");
        assert_eq!(c.label(), Some(B::End));
        assert_eq!(c.score(), 0.2);
        assert_eq!(sample_index().classify("enjoy zebra").label(), None);
        let strict = sample_index().with_floor(0.9);
        assert_eq!(strict.classify("goodbye and enjoy").label(), None);
    }

    #[test]
    fn jaccard_by_hand() {
        let a: BTreeSet<String> = ["a", "b", "c"].iter().map(|s| s.to_string()).collect();
        let b: BTreeSet<String> = ["b", "c", "d"].iter().map(|s| s.to_string()).collect();
        assert_eq!(jaccard(&a, &b), 0.5);
    }

    #[test]
    fn template_matching_and_linking() {
        let idx = sample_index();
        let cat = EntityCatalog::new([
            ("1".to_string(), vec!["Titanic (1997)".to_string(), "Titanic".to_string()]),
            ("2".to_string(), vec!["Heat (1995)".to_string()]),
        ])
        .unwrap();
        let a = idx.analyze("Have you seen Heat?", &cat);
        assert_eq!(a.classification.label(), Some(B::Show));
        assert_eq!(a.classification.score(), 1.0);
        assert_eq!(a.links.len(), 1);
        assert_eq!(a.links[0].entity, "2");
        assert_eq!(a.links[0].span, 3..4);
        assert_eq!(link_entities("Have you seen Titanic?", &idx, &cat)[0].entity, "1");
        assert!(link_entities("Here are some more options", &idx, &cat).is_empty());
    }

    #[test]
    fn ambiguous_surface_form_picks_smallest_id() {
        let cat = EntityCatalog::new([
            ("b7".to_string(), vec!["Solaris".to_string()]),
            ("a3".to_string(), vec!["Solaris".to_string()]),
        ])
        .unwrap();
        assert_eq!(cat.resolve("solaris", 0.2).unwrap().0, "a3");
    }

    #[test]
    fn year_stripped_form() {
        assert_eq!(strip_year("Heat (1995)"), Some("Heat"));
        assert_eq!(strip_year("Heat (Director's Cut)"), None);
        let mut catalog = Catalog::default();
        catalog.items.insert(
            "9".into(),
            crate::corpus::CatalogItem { title: "Heat (1995)".into(), attributes: vec![] },
        );
        let ec = EntityCatalog::from_catalog(&catalog).unwrap();
        assert_eq!(ec.resolve("heat", 0.2), Some(("9".to_string(), 1.0)));
    }

    #[test]
    fn template_parse_errors() {
        assert!(Template::parse("see <ITEM").is_err());
        assert!(Template::parse("see <COLOR>").is_err());
        let t = Template::parse("I like <ATTRIBUTE> and <ITEM>!").unwrap();
        assert_eq!(t.specificity(), 3);
        assert_eq!(t.literal_text(), "i like and");
        assert_eq!(t.slots().collect::<Vec<_>>(), vec![SlotName::Attribute, SlotName::Item]);
    }

    #[test]
    fn specific_template_wins_tie() {
        let idx = index(&[
            ("", B::Show, Some("I recommend <ITEM>")),
            ("", B::Similar, Some("I recommend <ITEM> it is similar")),
        ]);
        assert_eq!(idx.classify("I recommend Heat it is similar").label(), Some(B::Similar));
        assert_eq!(idx.classify("I recommend Heat").label(), Some(B::Show));
    }

    #[test]
    fn csv_round_trip() {
        let idx = sample_index();
        let back = LabeledUtteranceIndex::<B>::from_reader(idx.to_csv().as_bytes(), "mem").unwrap();
        assert_eq!(back.len(), idx.len());
        for e in idx.entries() {
            assert_eq!(back.classify(&e.text).label(), Some(e.label));
        }
        assert!(LabeledUtteranceIndex::<B>::from_reader("utterance,label,template\nhi,Dance,\n".as_bytes(), "mem").is_err());
    }

    proptest! {
        #[test]
        fn entry_order_is_irrelevant(seed in 0u64..1000, query in "[a-z ]{0,30}") {
            use rand::seq::SliceRandom;
            let base = sample_index();
            let mut shuffled: Vec<_> = base.entries().to_vec();
            shuffled.shuffle(&mut crate::sampling::seeded(seed));
            let other = LabeledUtteranceIndex::new(shuffled).unwrap();
            prop_assert_eq!(base.classify(&query).label(), other.classify(&query).label());
            prop_assert_eq!(base.classify(&query).score(), other.classify(&query).score());
        }

        #[test]
        fn captures_partition_tokens(words in proptest::collection::vec("[a-z]{1,5}", 1..6)) {
            let t = Template::parse("see <ITEM> now").unwrap();
            let mut tokens = vec!["see".to_string()];
            tokens.extend(words.iter().cloned());
            tokens.push("now".into());
            let caps = t.match_tokens(&tokens).unwrap();
            prop_assert_eq!(caps.len(), 1);
            prop_assert_eq!(caps[0].1.clone(), 1..tokens.len() - 1);
        }
    }
}
