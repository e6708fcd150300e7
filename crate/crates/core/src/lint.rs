//! Completeness metrics for transcribed protocols.
//!
//! A protocol rewritten as a UWL document usually contains more than the
//! original prose: items the author never mentioned, parameters left as
//! `####`. An [`Annotations`] sidecar records which items and parameters
//! were added during transcription, together with the curated ambiguity list
//! and the word count of the original prose.

use std::collections::{BTreeMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Document, ItemSubtype, Object, ObjectId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Original,
    Added,
    /// Present in the document but left out of the counts.
    Excluded,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParamAnnotation {
    pub id: ObjectId,
    pub parameter: String,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ambiguity {
    pub label: String,
    pub question: String,
}

/// Sidecar file contents.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Annotations {
    pub original_word_count: u64,
    #[serde(default)]
    pub items: BTreeMap<ObjectId, Provenance>,
    #[serde(default)]
    pub parameters: Vec<ParamAnnotation>,
    #[serde(default)]
    pub ambiguities: Vec<Ambiguity>,
}

impl Annotations {
    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LintError {
    #[error("BAD_ANNOTATION: {0}")]
    BadAnnotation(String),
    #[error("EMPTY_INPUT: no reports to aggregate")]
    EmptyInput,
}

impl LintError {
    pub fn code(&self) -> &'static str {
        match self {
            LintError::BadAnnotation(_) => "BAD_ANNOTATION",
            LintError::EmptyInput => "EMPTY_INPUT",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Counts {
    pub included: u64,
    pub missing: u64,
}

impl Counts {
    pub fn total(&self) -> u64 {
        self.included + self.missing
    }

    /// Share of included entries; `None` when there are none at all.
    pub fn fraction(&self) -> Option<f64> {
        (self.total() > 0).then(|| self.included as f64 / self.total() as f64)
    }

    fn add(&mut self, missing: bool) {
        if missing {
            self.missing += 1;
        } else {
            self.included += 1;
        }
    }
}

impl std::ops::Add for Counts {
    type Output = Counts;
    fn add(self, o: Counts) -> Counts {
        Counts { included: self.included + o.included, missing: self.missing + o.missing }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    Materials,
    Equipment,
    ItemParams,
    ActionParams,
}

impl Category {
    pub const ALL: [Category; 4] =
        [Category::Materials, Category::Equipment, Category::ItemParams, Category::ActionParams];

    pub fn label(self) -> &'static str {
        match self {
            Category::Materials => "Materials",
            Category::Equipment => "Equipment",
            Category::ItemParams => "Item Params",
            Category::ActionParams => "Action Params",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct LintReport {
    pub materials: Counts,
    pub equipment: Counts,
    pub item_params: Counts,
    pub action_params: Counts,
    pub ambiguity_count: u64,
    pub word_count: u64,
}

impl LintReport {
    pub fn counts(&self, category: Category) -> Counts {
        match category {
            Category::Materials => self.materials,
            Category::Equipment => self.equipment,
            Category::ItemParams => self.item_params,
            Category::ActionParams => self.action_params,
        }
    }

    fn counts_mut(&mut self, category: Category) -> &mut Counts {
        match category {
            Category::Materials => &mut self.materials,
            Category::Equipment => &mut self.equipment,
            Category::ItemParams => &mut self.item_params,
            Category::ActionParams => &mut self.action_params,
        }
    }

    /// Item and action parameters together.
    pub fn all_params(&self) -> Counts {
        self.item_params + self.action_params
    }

    pub fn missing_params_per_100_words(&self) -> f64 {
        per_100(self.all_params().missing, self.word_count)
    }

    pub fn ambiguities_per_100_words(&self) -> f64 {
        per_100(self.ambiguity_count, self.word_count)
    }
}

fn per_100(n: u64, words: u64) -> f64 {
    100.0 * n as f64 / words as f64
}

/// Number of separate runs of three or more '#'.
pub fn sentinel_runs(text: &str) -> usize {
    let mut runs = 0;
    let mut len = 0;
    for c in text.chars().chain(std::iter::once('\0')) {
        if c == '#' {
            len += 1;
        } else {
            if len >= 3 {
                runs += 1;
            }
            len = 0;
        }
    }
    runs
}

pub fn is_sentinel(value: &str) -> bool {
    sentinel_runs(value) > 0
}

/// Counts included and missing entries per category.
///
/// Only listed items are counted. Sources are materials; tools and
/// containers are equipment. Parameters of every listed item (abstract ones
/// included) are item parameters. Each sentinel run inside a node's notes
/// counts as one more missing parameter of that node.
pub fn completeness_report(doc: &Document, ann: &Annotations) -> Result<LintReport, LintError> {
    check_annotations(doc, ann)?;
    if ann.original_word_count == 0 {
        return Err(LintError::BadAnnotation("original_word_count must be positive".into()));
    }
    let params: BTreeMap<(ObjectId, &str), Provenance> =
        ann.parameters.iter().map(|p| ((p.id, p.parameter.as_str()), p.provenance)).collect();

    let mut report = LintReport {
        ambiguity_count: ann.ambiguities.len() as u64,
        word_count: ann.original_word_count,
        ..LintReport::default()
    };
    for entry in doc.walk() {
        let object = entry.object;
        let (category, notes) = match object {
            Object::Section(_) => continue,
            Object::Item(item) if !item.listed => continue,
            Object::Item(item) => {
                let group = match item.subtype {
                    ItemSubtype::Source => Some(Category::Materials),
                    ItemSubtype::Tool | ItemSubtype::Container => Some(Category::Equipment),
                    _ => None,
                };
                if let Some(group) = group {
                    let missing = ann.items.get(&item.id) == Some(&Provenance::Added);
                    if ann.items.get(&item.id) != Some(&Provenance::Excluded) {
                        report.counts_mut(group).add(missing);
                    }
                }
                (Category::ItemParams, &item.notes)
            }
            Object::Action(action) => (Category::ActionParams, &action.notes),
        };
        let counts = report.counts_mut(category);
        for p in object.params().into_iter().flatten() {
            let missing = match params.get(&(object.id(), p.name.as_str())) {
                Some(Provenance::Excluded) => continue,
                Some(Provenance::Added) => true,
                Some(Provenance::Original) => false,
                None => is_sentinel(&p.value),
            };
            counts.add(missing);
        }
        counts.missing += sentinel_runs(notes) as u64;
    }
    Ok(report)
}

fn check_annotations(doc: &Document, ann: &Annotations) -> Result<(), LintError> {
    for id in ann.items.keys() {
        if !matches!(doc.find(*id), Some(Object::Item(_))) {
            return Err(LintError::BadAnnotation(format!("items: {} is not an item of the document", id.0)));
        }
    }
    let mut seen = HashSet::new();
    for p in &ann.parameters {
        let has = doc.find(p.id).and_then(Object::params).is_some_and(|ps| ps.get(&p.parameter).is_some());
        if !has {
            return Err(LintError::BadAnnotation(format!("parameters: object {} has no parameter {:?}", p.id.0, p.parameter)));
        }
        if !seen.insert((p.id, p.parameter.as_str())) {
            return Err(LintError::BadAnnotation(format!("parameters: {} {:?} annotated twice", p.id.0, p.parameter)));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategorySummary {
    pub category: Category,
    /// Mean of per-report included fractions; reports with no entries in
    /// this category are skipped. `None` if every report was skipped.
    pub fraction: Option<f64>,
    pub mean_included: f64,
    pub mean_missing: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub reports: usize,
    pub categories: Vec<CategorySummary>,
    /// Included fraction over item and action parameters together.
    pub all_params_fraction: Option<f64>,
    pub ambiguities_per_100_words: f64,
    pub missing_params_per_100_words: f64,
    pub mean_ambiguities: f64,
    pub mean_word_count: f64,
}

impl Summary {
    pub fn category(&self, category: Category) -> &CategorySummary {
        self.categories.iter().find(|c| c.category == category).expect("all categories present")
    }
}

fn mean(values: impl IntoIterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.into_iter().fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

/// Averages per-report ratios (not pooled totals).
pub fn aggregate(reports: &[LintReport]) -> Result<Summary, LintError> {
    if reports.is_empty() {
        return Err(LintError::EmptyInput);
    }
    let categories = Category::ALL
        .iter()
        .map(|&category| CategorySummary {
            category,
            fraction: mean(reports.iter().filter_map(|r| r.counts(category).fraction())),
            mean_included: mean(reports.iter().map(|r| r.counts(category).included as f64)).unwrap(),
            mean_missing: mean(reports.iter().map(|r| r.counts(category).missing as f64)).unwrap(),
        })
        .collect();
    Ok(Summary {
        reports: reports.len(),
        categories,
        all_params_fraction: mean(reports.iter().filter_map(|r| r.all_params().fraction())),
        ambiguities_per_100_words: mean(reports.iter().map(LintReport::ambiguities_per_100_words)).unwrap(),
        missing_params_per_100_words: mean(reports.iter().map(LintReport::missing_params_per_100_words)).unwrap(),
        mean_ambiguities: mean(reports.iter().map(|r| r.ambiguity_count as f64)).unwrap(),
        mean_word_count: mean(reports.iter().map(|r| r.word_count as f64)).unwrap(),
    })
}

impl fmt::Display for LintReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in Category::ALL {
            let counts = self.counts(c);
            writeln!(f, "{:<14} included {:>4}  missing {:>4}", c.label(), counts.included, counts.missing)?;
        }
        writeln!(f, "{:<14} {}", "Ambiguities", self.ambiguity_count)?;
        writeln!(f, "{:<14} {}", "Words", self.word_count)?;
        writeln!(f, "Ambiguities per 100 words: {:.2}", self.ambiguities_per_100_words())?;
        write!(f, "Missing parameters per 100 words: {:.2}", self.missing_params_per_100_words())
    }
}

impl fmt::Display for Summary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let pct = |v: Option<f64>| v.map_or("n/a".to_string(), |v| format!("{:.1}%", 100.0 * v));
        writeln!(f, "Protocols: {}", self.reports)?;
        writeln!(f, "Mean words: {:.2}", self.mean_word_count)?;
        for c in &self.categories {
            writeln!(
                f,
                "{:<14} included {:>6}  (mean {:.2} included, {:.2} missing)",
                c.category.label(),
                pct(c.fraction),
                c.mean_included,
                c.mean_missing
            )?;
        }
        writeln!(f, "{:<14} included {:>6}", "All Params", pct(self.all_params_fraction))?;
        writeln!(f, "Ambiguities per 100 words: {:.2}", self.ambiguities_per_100_words)?;
        write!(f, "Missing parameters per 100 words: {:.2}", self.missing_params_per_100_words)
    }
}
