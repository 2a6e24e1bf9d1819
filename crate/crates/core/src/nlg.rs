//! Template-based rendering of dialogue acts.
//!
//! A bank maps each act kind to hand-written templates with `<SLOT>`
//! placeholders; rendering picks one uniformly and fills the slots. Some
//! user templates carry deliberate typos and are flagged as such.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::Rng;
use serde::Deserialize;

use crate::corpus::Catalog;
use crate::domain::{ActionKind, AgentActionKind, DialogueAction, SlotName, UserActionKind};
use crate::error::{Error, Result};
use crate::nlu::{IndexEntry, LabeledUtteranceIndex, Template};

const DEFAULT_USER_TEMPLATES: &str = include_str!("../data/user_templates.toml");
const DEFAULT_AGENT_TEMPLATES: &str = include_str!("../data/agent_templates.toml");

/// Act kinds a bank can be keyed by.
pub trait BankKey: Copy + Ord + fmt::Display + FromStr<Err = Error> {
    fn from_action(kind: ActionKind) -> Option<Self>;
}

impl BankKey for UserActionKind {
    fn from_action(kind: ActionKind) -> Option<Self> {
        kind.as_user()
    }
}

impl BankKey for AgentActionKind {
    fn from_action(kind: ActionKind) -> Option<Self> {
        kind.as_agent()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BankTemplate {
    pub template: Template,
    pub typo: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TemplateBank<K> {
    templates: BTreeMap<K, Vec<BankTemplate>>,
}

#[derive(Deserialize)]
struct BankFile {
    #[serde(default)]
    template: Vec<TemplateRecord>,
}

#[derive(Deserialize)]
struct TemplateRecord {
    action: String,
    text: String,
    #[serde(default)]
    typo: bool,
}

impl TemplateBank<UserActionKind> {
    pub fn default_user() -> Self {
        Self::from_toml_str(DEFAULT_USER_TEMPLATES).expect("shipped user templates are valid")
    }
}

impl TemplateBank<AgentActionKind> {
    pub fn default_agent() -> Self {
        Self::from_toml_str(DEFAULT_AGENT_TEMPLATES).expect("shipped agent templates are valid")
    }
}

impl<K: BankKey> TemplateBank<K> {
    pub fn new(records: impl IntoIterator<Item = (K, Template, bool)>) -> Self {
        let mut templates: BTreeMap<K, Vec<BankTemplate>> = BTreeMap::new();
        for (kind, template, typo) in records {
            templates.entry(kind).or_default().push(BankTemplate { template, typo });
        }
        TemplateBank { templates }
    }

    /// Parses `[[template]]` tables with `action`, `text` and optional
    /// `typo` keys.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let file: BankFile = toml::from_str(text).map_err(|e| Error::parse("template bank", e.to_string()))?;
        let mut records = Vec::with_capacity(file.template.len());
        for (i, r) in file.template.into_iter().enumerate() {
            let loc = format!("template bank: template {}", i + 1);
            let kind = r.action.parse::<K>().map_err(|e| e.at(loc.clone()))?;
            let template = Template::parse(&r.text).map_err(|e| e.at(loc))?;
            records.push((kind, template, r.typo));
        }
        Ok(Self::new(records))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text).map_err(|e| e.at(path.display().to_string()))
    }

    pub fn templates(&self, kind: K) -> &[BankTemplate] {
        self.templates.get(&kind).map_or(&[], Vec::as_slice)
    }

    pub fn kinds(&self) -> impl Iterator<Item = K> + '_ {
        self.templates.keys().copied()
    }

    pub fn covers(&self, kind: K) -> bool {
        !self.templates(kind).is_empty()
    }

    /// Fails with a coverage error naming the first uncovered kind.
    pub fn check_coverage(&self, kinds: impl IntoIterator<Item = K>) -> Result<()> {
        match kinds.into_iter().find(|k| !self.covers(*k)) {
            Some(k) => Err(Error::Coverage(k.to_string())),
            None => Ok(()),
        }
    }

    /// Picks a template uniformly and fills its slots. `ITEM` values that
    /// are catalog ids are replaced by the item title. Returns the chosen
    /// template's position alongside the text.
    pub fn render_indexed<R: Rng + ?Sized>(
        &self,
        kind: K,
        slots: &[(SlotName, String)],
        catalog: Option<&Catalog>,
        rng: &mut R,
    ) -> Result<(usize, String)> {
        let options = self.templates(kind);
        if options.is_empty() {
            return Err(Error::Coverage(kind.to_string()));
        }
        let pick = rng.gen_range(0..options.len());
        let text = fill(&options[pick].template, &kind.to_string(), slots, catalog)?;
        Ok((pick, text))
    }

    pub fn render<R: Rng + ?Sized>(
        &self,
        action: &DialogueAction,
        catalog: Option<&Catalog>,
        rng: &mut R,
    ) -> Result<String> {
        let kind = K::from_action(action.kind).ok_or_else(|| {
            Error::Argument(format!("action {} does not belong to this bank's speaker", action.kind.label()))
        })?;
        self.render_indexed(kind, &action.slots, catalog, rng).map(|(_, text)| text)
    }

    /// Retrieval index whose entries are this bank's templates, typo
    /// variants included.
    pub fn to_index(&self) -> Result<LabeledUtteranceIndex<K>> {
        let entries = self
            .templates
            .iter()
            .flat_map(|(kind, ts)| {
                ts.iter()
                    .map(|t| IndexEntry::new(&t.template.literal_text(), *kind, Some(t.template.clone())))
            })
            .collect();
        LabeledUtteranceIndex::new(entries)
    }
}

fn fill(template: &Template, action: &str, slots: &[(SlotName, String)], catalog: Option<&Catalog>) -> Result<String> {
    let mut out = String::new();
    let mut rest = template.source();
    while let Some(open) = rest.find('<') {
        out.push_str(&rest[..open]);
        let close = open + rest[open..].find('>').expect("template was parsed");
        let slot: SlotName = rest[open + 1..close].parse()?;
        let value = slots
            .iter()
            .find(|(n, _)| *n == slot)
            .map(|(_, v)| v.as_str())
            .ok_or_else(|| Error::Slot {
                action: action.to_string(),
                slot: slot.to_string(),
            })?;
        let value = match (slot, catalog) {
            (SlotName::Item, Some(c)) => c.title(value).unwrap_or(value),
            _ => value,
        };
        out.push_str(value);
        rest = &rest[close + 1..];
    }
    out.push_str(rest);
    Ok(out)
}

/// Renders a user act with the given bank.
pub fn render<R: Rng + ?Sized>(
    action: &DialogueAction,
    bank: &TemplateBank<UserActionKind>,
    catalog: Option<&Catalog>,
    rng: &mut R,
) -> Result<String> {
    bank.render(action, catalog, rng)
}

/// Slots a kind's templates may ask for.
pub fn required_slots<K: BankKey>(bank: &TemplateBank<K>, kind: K) -> Vec<SlotName> {
    let mut slots: Vec<SlotName> = bank
        .templates(kind)
        .iter()
        .flat_map(|t| t.template.slots())
        .collect();
    slots.sort();
    slots.dedup();
    slots
}
