//! Historical ratings and the item catalog.
//!
//! Ratings: `user_id,item_id,rating` with a header row. Catalog:
//! `item_id,title,attributes` where attributes are `|`-separated. A MovieLens
//! `movies.csv` becomes a catalog by renaming its header to
//! `item_id,title,attributes`; `ratings.csv` needs its extra `timestamp`
//! column dropped (extra columns are ignored here anyway).

use std::collections::BTreeMap;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MIN_RATING: f64 = 0.5;
pub const MAX_RATING: f64 = 5.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rating {
    pub user_id: String,
    pub item_id: String,
    pub rating: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CatalogItem {
    pub title: String,
    pub attributes: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Catalog {
    pub items: BTreeMap<String, CatalogItem>,
}

#[derive(Deserialize)]
struct CatalogRow {
    item_id: String,
    title: String,
    #[serde(default)]
    attributes: String,
}

impl Catalog {
    pub fn from_reader(reader: impl Read, source: &str) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(reader);
        let mut items = BTreeMap::new();
        for (i, row) in rdr.deserialize::<CatalogRow>().enumerate() {
            let row = row.map_err(|e| Error::parse(format!("{source}: record {}", i + 1), e.to_string()))?;
            let attributes = row
                .attributes
                .split('|')
                .map(str::trim)
                .filter(|a| !a.is_empty() && *a != "(no genres listed)")
                .map(str::to_string)
                .collect();
            items.insert(
                row.item_id,
                CatalogItem {
                    title: row.title,
                    attributes,
                },
            );
        }
        Ok(Catalog { items })
    }

    pub fn get(&self, item: &str) -> Option<&CatalogItem> {
        self.items.get(item)
    }

    pub fn title(&self, item: &str) -> Option<&str> {
        self.items.get(item).map(|i| i.title.as_str())
    }

    pub fn attributes(&self, item: &str) -> Option<&[String]> {
        self.items.get(item).map(|i| i.attributes.as_slice())
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["item_id", "title", "attributes"]).expect("in-memory write");
        for (id, item) in &self.items {
            w.write_record([id.as_str(), &item.title, &item.attributes.join("|")])
                .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
    }
}

/// Ratings joined against a catalog, indexed by user.
#[derive(Debug, Clone, PartialEq)]
pub struct RatingsCorpus {
    ratings: Vec<Rating>,
    catalog: Catalog,
    by_user: BTreeMap<String, Vec<usize>>,
}

impl RatingsCorpus {
    /// Validates every rating's range and catalog reference.
    pub fn new(ratings: Vec<Rating>, catalog: Catalog) -> Result<Self> {
        let mut by_user: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        for (i, r) in ratings.iter().enumerate() {
            if !(MIN_RATING..=MAX_RATING).contains(&r.rating) || r.rating.is_nan() {
                return Err(Error::RatingRange {
                    user: r.user_id.clone(),
                    item: r.item_id.clone(),
                    rating: r.rating,
                });
            }
            if !catalog.items.contains_key(&r.item_id) {
                return Err(Error::Referential {
                    item: r.item_id.clone(),
                });
            }
            by_user.entry(r.user_id.clone()).or_default().push(i);
        }
        Ok(RatingsCorpus {
            ratings,
            catalog,
            by_user,
        })
    }

    pub fn from_readers(ratings: impl Read, catalog: impl Read) -> Result<Self> {
        let catalog = Catalog::from_reader(catalog, "catalog")?;
        let mut rdr = csv::Reader::from_reader(ratings);
        let records = rdr
            .deserialize::<Rating>()
            .enumerate()
            .map(|(i, r)| r.map_err(|e| Error::parse(format!("ratings: record {}", i + 1), e.to_string())))
            .collect::<Result<Vec<_>>>()?;
        Self::new(records, catalog)
    }

    pub fn ratings(&self) -> &[Rating] {
        &self.ratings
    }

    pub fn catalog(&self) -> &Catalog {
        &self.catalog
    }

    pub fn users(&self) -> impl Iterator<Item = &str> {
        self.by_user.keys().map(String::as_str)
    }

    /// Ratings by one user in file order.
    pub fn user_ratings<'a>(&'a self, user: &str) -> impl Iterator<Item = &'a Rating> + 'a {
        self.by_user
            .get(user)
            .into_iter()
            .flatten()
            .map(move |&i| &self.ratings[i])
    }

    pub fn ratings_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in &self.ratings {
            w.serialize(r).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
    }
}

pub fn load_ratings(ratings: &Path, catalog: &Path) -> Result<RatingsCorpus> {
    let c = std::fs::File::open(catalog).map_err(|e| Error::io(catalog, e))?;
    let r = std::fs::File::open(ratings).map_err(|e| Error::io(ratings, e))?;
    RatingsCorpus::from_readers(r, c)
}
