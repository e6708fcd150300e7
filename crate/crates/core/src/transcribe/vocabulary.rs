use std::collections::BTreeMap;
use std::path::Path;

use serde::Deserialize;
use thiserror::Error;

use super::template::{Template, TemplateError};
use crate::model::{EdgeType, ParentClass};

const DEFAULT_VOCABULARY: &str = include_str!("../../data/vocabulary.toml");

#[derive(Debug, Error)]
pub enum VocabularyError {
    #[error("cannot read vocabulary {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("vocabulary is not valid TOML: {0}")]
    Toml(#[from] toml::de::Error),
    #[error(transparent)]
    Template(#[from] TemplateError),
    #[error("term {term:?}: {message}")]
    Entry { term: String, message: String },
}

/// One action term: its parent class, phrase template and expected slots.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VocabularyEntry {
    pub term: String,
    pub parent: ParentClass,
    pub template: Template,
    pub required: Vec<EdgeType>,
}

/// Map from action term to phrasing, plus default templates for each parent
/// class so custom terms still render.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    parents: BTreeMap<String, Template>,
    terms: BTreeMap<String, VocabularyEntry>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawVocabulary {
    #[serde(default)]
    parents: BTreeMap<String, RawParent>,
    #[serde(default)]
    terms: BTreeMap<String, RawEntry>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawParent {
    template: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEntry {
    parent: String,
    template: Option<String>,
    #[serde(default)]
    required: Vec<String>,
}

pub(crate) fn known_parent(raw: &str, context: &str) -> Result<ParentClass, VocabularyError> {
    match ParentClass::parse(raw) {
        Some(p) if p.is_known() => Ok(p),
        _ => Err(VocabularyError::Entry {
            term: context.to_string(),
            message: format!("parent must be Add, Remove or Modify, found {raw:?}"),
        }),
    }
}

impl Vocabulary {
    /// The embedded English vocabulary.
    pub fn builtin() -> Self {
        Self::from_toml(DEFAULT_VOCABULARY).expect("embedded vocabulary is valid")
    }

    pub fn load(path: &Path) -> Result<Self, VocabularyError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| VocabularyError::Io { path: path.display().to_string(), source })?;
        Self::from_toml(&text)
    }

    pub fn from_toml(text: &str) -> Result<Self, VocabularyError> {
        let raw: RawVocabulary = toml::from_str(text)?;
        let mut parents = BTreeMap::new();
        for (name, p) in raw.parents {
            let parent = known_parent(&name, &name)?;
            parents.insert(parent.as_str().to_string(), Template::parse(&p.template)?);
        }
        let mut terms = BTreeMap::new();
        for (term, entry) in raw.terms {
            let parent = known_parent(&entry.parent, &term)?;
            let template = match entry.template {
                Some(t) => Template::parse(&t)?,
                None => parents.get(parent.as_str()).cloned().ok_or_else(|| VocabularyError::Entry {
                    term: term.clone(),
                    message: format!("no template and no default for parent {parent}"),
                })?,
            };
            let mut required = Vec::new();
            for slot in &entry.required {
                let edge = match slot.as_str() {
                    "A" => EdgeType::A,
                    "B" => EdgeType::B,
                    "C" => EdgeType::C,
                    other => {
                        return Err(VocabularyError::Entry { term, message: format!("unknown slot {other:?}") })
                    }
                };
                if parent == ParentClass::Modify && edge != EdgeType::A {
                    return Err(VocabularyError::Entry {
                        term,
                        message: "Modify terms may only require the A slot".into(),
                    });
                }
                if !template.edge_slots().any(|e| e == edge) {
                    return Err(VocabularyError::Entry {
                        term,
                        message: format!("required slot {slot} is not in the template"),
                    });
                }
                required.push(edge);
            }
            terms.insert(term.clone(), VocabularyEntry { term, parent, template, required });
        }
        Ok(Vocabulary { parents, terms })
    }

    pub fn entry(&self, term: &str) -> Option<&VocabularyEntry> {
        self.terms.get(term)
    }

    pub fn terms(&self) -> impl Iterator<Item = &VocabularyEntry> {
        self.terms.values()
    }

    /// Default template for actions whose term is not in the vocabulary.
    pub fn parent_template(&self, parent: &ParentClass) -> Option<&Template> {
        self.parents.get(parent.as_str())
    }
}

impl Default for Vocabulary {
    fn default() -> Self {
        Self::builtin()
    }
}
