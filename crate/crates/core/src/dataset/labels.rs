use std::collections::HashMap;
use std::io::Read;
use std::path::Path;

use crate::error::{HdcError, Result};

const NSL_KDD_CATEGORIES: &str = include_str!("../../data/nslkdd_categories.csv");

/// Raw label to category mapping, read from a two-column CSV
/// (`raw_label,category`).
///
/// Category order is the order of first appearance in the mapping, and that
/// order becomes the class index order of any dataset loaded through it.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelMap {
    map: HashMap<String, String>,
    categories: Vec<String>,
    fallback: Option<String>,
}

impl LabelMap {
    pub fn from_reader<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let mut map = HashMap::new();
        let mut categories: Vec<String> = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            let line = rec.position().map(|p| p.line() as usize).unwrap_or(0);
            if rec.len() != 2 {
                return Err(HdcError::RaggedRow {
                    row: line,
                    expected: 2,
                    found: rec.len(),
                });
            }
            let raw = normalize_label(&rec[0]);
            let cat = rec[1].to_string();
            if !categories.contains(&cat) {
                categories.push(cat.clone());
            }
            map.insert(raw, cat);
        }
        if categories.is_empty() {
            return Err(HdcError::Empty("label mapping"));
        }
        Ok(Self {
            map,
            categories,
            fallback: None,
        })
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_reader(std::fs::File::open(path)?)
    }

    /// The bundled NSL-KDD mapping onto normal, dos, probe, r2l and u2r.
    pub fn nsl_kdd_five() -> Self {
        Self::from_reader(NSL_KDD_CATEGORIES.as_bytes()).expect("bundled mapping parses")
    }

    /// Binary mode: `normal_label` stays `normal`, every other label is `attack`.
    pub fn binary(normal_label: &str) -> Self {
        let mut map = HashMap::new();
        map.insert(normalize_label(normal_label), "normal".to_string());
        Self {
            map,
            categories: vec!["normal".into(), "attack".into()],
            fallback: Some("attack".into()),
        }
    }

    pub fn categories(&self) -> &[String] {
        &self.categories
    }

    pub fn map_label(&self, raw: &str) -> Result<String> {
        let key = normalize_label(raw);
        match self.map.get(&key) {
            Some(cat) => Ok(cat.clone()),
            None => self
                .fallback
                .clone()
                .ok_or_else(|| HdcError::UnknownLabel(raw.to_string())),
        }
    }
}

// KDD'99 style files terminate labels with a period.
fn normalize_label(raw: &str) -> String {
    raw.trim().trim_end_matches('.').to_string()
}
