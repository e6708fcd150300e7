use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::template::{Template, TemplateError};
use super::vocabulary::known_parent;
use crate::model::{Document, Object, Objects, ParentClass};

#[derive(Debug, Error)]
pub enum TableError {
    #[error("cannot read translation table {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("translation table is not valid TOML: {0}")]
    Toml(#[from] toml::de::Error),
    #[error(transparent)]
    Template(#[from] TemplateError),
    #[error("[{map}] maps both {first:?} and {second:?} to {target:?}")]
    NotInjective { map: &'static str, first: String, second: String, target: String },
    #[error("{0}")]
    Invalid(String),
}

/// Words the protocol layout needs in each language.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Headings {
    pub experiment_name: String,
    pub experiment_description: String,
    pub additional_information: String,
    pub materials: String,
    pub equipment: String,
    pub procedure: String,
    pub note: String,
}

impl Default for Headings {
    fn default() -> Self {
        Headings {
            experiment_name: "Experiment Name".into(),
            experiment_description: "Experiment Description".into(),
            additional_information: "Additional Information".into(),
            materials: "Materials".into(),
            equipment: "Equipment".into(),
            procedure: "Procedure".into(),
            note: "Note".into(),
        }
    }
}

/// How item lists inside a step are joined.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ListStyle {
    pub conjunction: String,
    /// Comma before the conjunction in lists of three or more.
    pub serial_comma: bool,
}

impl Default for ListStyle {
    fn default() -> Self {
        ListStyle { conjunction: "and".into(), serial_comma: true }
    }
}

impl ListStyle {
    /// "X", "X and Y", "X, Y, and Z".
    pub fn join(&self, names: &[&str]) -> String {
        match names {
            [] => String::new(),
            [one] => one.to_string(),
            [a, b] => format!("{a} {} {b}", self.conjunction),
            [init @ .., last] => {
                let comma = if self.serial_comma { "," } else { "" };
                format!("{}{comma} {} {last}", init.join(", "), self.conjunction)
            }
        }
    }
}

/// Which of the three term maps a name belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TermKind {
    Action,
    Item,
    Parameter,
}

impl fmt::Display for TermKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TermKind::Action => "action",
            TermKind::Item => "item",
            TermKind::Parameter => "parameter",
        })
    }
}

/// English-keyed, reversible map for one kind of term.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TermMap {
    forward: BTreeMap<String, String>,
    backward: BTreeMap<String, String>,
}

impl TermMap {
    fn build(map: &'static str, pairs: BTreeMap<String, String>) -> Result<Self, TableError> {
        let mut backward: BTreeMap<String, String> = BTreeMap::new();
        for (english, target) in &pairs {
            if let Some(first) = backward.insert(target.clone(), english.clone()) {
                return Err(TableError::NotInjective {
                    map,
                    first,
                    second: english.clone(),
                    target: target.clone(),
                });
            }
        }
        Ok(TermMap { forward: pairs, backward })
    }

    pub fn to_target(&self, english: &str) -> Option<&str> {
        self.forward.get(english).map(String::as_str)
    }

    pub fn to_english(&self, target: &str) -> Option<&str> {
        self.backward.get(target).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.forward.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forward.is_empty()
    }

    pub fn english_terms(&self) -> impl Iterator<Item = &str> {
        self.forward.keys().map(String::as_str)
    }
}

/// Translation table for one language. Every map is keyed by English terms,
/// so adding a language never touches another language's table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TranslationTable {
    pub language: String,
    pub headings: Headings,
    pub list: ListStyle,
    pub actions: TermMap,
    pub items: TermMap,
    pub parameters: TermMap,
    /// Localized templates keyed by English action term.
    pub templates: BTreeMap<String, Template>,
    /// Localized defaults for custom terms, keyed by parent class.
    pub parents: BTreeMap<String, Template>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTable {
    language: String,
    #[serde(default)]
    headings: Headings,
    #[serde(default)]
    list: ListStyle,
    #[serde(default)]
    actions: BTreeMap<String, String>,
    #[serde(default)]
    items: BTreeMap<String, String>,
    #[serde(default)]
    parameters: BTreeMap<String, String>,
    #[serde(default)]
    templates: BTreeMap<String, String>,
    #[serde(default)]
    parents: BTreeMap<String, String>,
}

impl TranslationTable {
    /// The identity table used for English output.
    pub fn english() -> Self {
        TranslationTable {
            language: "en".into(),
            headings: Headings::default(),
            list: ListStyle::default(),
            actions: TermMap::default(),
            items: TermMap::default(),
            parameters: TermMap::default(),
            templates: BTreeMap::new(),
            parents: BTreeMap::new(),
        }
    }

    pub fn load(path: &Path) -> Result<Self, TableError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| TableError::Io { path: path.display().to_string(), source })?;
        Self::from_toml(&text)
    }

    /// Loads `<dir>/<language>.toml`.
    pub fn load_language(dir: &Path, language: &str) -> Result<Self, TableError> {
        if language.is_empty() || !language.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_') {
            return Err(TableError::Invalid(format!("bad language code {language:?}")));
        }
        let table = Self::load(&dir.join(format!("{language}.toml")))?;
        if table.language != language {
            return Err(TableError::Invalid(format!(
                "{language}.toml declares language {:?}",
                table.language
            )));
        }
        Ok(table)
    }

    /// "en" gives the identity table; other codes load from `dir`.
    pub fn for_language(dir: &Path, language: &str) -> Result<Self, TableError> {
        if language.eq_ignore_ascii_case("en") {
            Ok(Self::english())
        } else {
            Self::load_language(dir, language)
        }
    }

    pub fn from_toml(text: &str) -> Result<Self, TableError> {
        let raw: RawTable = toml::from_str(text)?;
        let mut templates = BTreeMap::new();
        for (term, t) in raw.templates {
            if !raw.actions.contains_key(&term) {
                return Err(TableError::Invalid(format!("template for {term:?}, which has no action translation")));
            }
            templates.insert(term, Template::parse(&t)?);
        }
        let mut parents = BTreeMap::new();
        for (name, t) in raw.parents {
            let parent = known_parent(&name, &name).map_err(|e| TableError::Invalid(e.to_string()))?;
            parents.insert(parent.as_str().to_string(), Template::parse(&t)?);
        }
        Ok(TranslationTable {
            language: raw.language,
            headings: raw.headings,
            list: raw.list,
            actions: TermMap::build("actions", raw.actions)?,
            items: TermMap::build("items", raw.items)?,
            parameters: TermMap::build("parameters", raw.parameters)?,
            templates,
            parents,
        })
    }

    pub fn map(&self, kind: TermKind) -> &TermMap {
        match kind {
            TermKind::Action => &self.actions,
            TermKind::Item => &self.items,
            TermKind::Parameter => &self.parameters,
        }
    }

    /// Target-language form of an English term; unmapped terms pass through.
    pub fn term<'a>(&'a self, kind: TermKind, english: &'a str) -> &'a str {
        self.map(kind).to_target(english).unwrap_or(english)
    }

    pub fn template_for(&self, term: &str) -> Option<&Template> {
        self.templates.get(term)
    }

    pub fn parent_template(&self, parent: &ParentClass) -> Option<&Template> {
        self.parents.get(parent.as_str())
    }
}

impl Default for TranslationTable {
    fn default() -> Self {
        Self::english()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    ToTarget,
    ToEnglish,
}

impl std::str::FromStr for Direction {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "to_target" | "target" => Ok(Direction::ToTarget),
            "to_english" | "english" => Ok(Direction::ToEnglish),
            other => Err(format!("unknown direction {other:?} (expected to_target or to_english)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct UntranslatedTerm {
    pub kind: TermKind,
    pub term: String,
}

impl fmt::Display for UntranslatedTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {:?}", self.kind, self.term)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TranslateError {
    #[error("UNTRANSLATED_TERMS: {}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join(", "))]
    UntranslatedTerms(Vec<UntranslatedTerm>),
}

/// Translates action, item and parameter names. Values, notes and section
/// text are left alone. Returns the translated document and the distinct
/// terms the table did not cover, in walk order.
///
/// In strict mode any uncovered term is an error.
pub fn translate_document(
    doc: &Document,
    table: &TranslationTable,
    direction: Direction,
    strict: bool,
) -> Result<(Document, Vec<UntranslatedTerm>), TranslateError> {
    let mut missing = Vec::new();
    let mut seen = HashSet::new();
    for entry in doc.walk() {
        let mut check = |kind: TermKind, term: &str| {
            let map = table.map(kind);
            let known = match direction {
                Direction::ToTarget => map.to_target(term).is_some(),
                Direction::ToEnglish => map.to_english(term).is_some(),
            };
            if !known && seen.insert((kind, term.to_string())) {
                missing.push(UntranslatedTerm { kind, term: term.to_string() });
            }
        };
        match entry.object {
            Object::Item(i) => check(TermKind::Item, &i.name),
            Object::Action(a) => check(TermKind::Action, &a.name),
            Object::Section(_) => continue,
        }
        for name in entry.object.params().into_iter().flat_map(|p| p.names()) {
            check(TermKind::Parameter, name);
        }
    }
    if strict && !missing.is_empty() {
        return Err(TranslateError::UntranslatedTerms(missing));
    }

    let convert = |kind: TermKind, term: &mut String| {
        let map = table.map(kind);
        let mapped = match direction {
            Direction::ToTarget => map.to_target(term),
            Direction::ToEnglish => map.to_english(term),
        };
        if let Some(m) = mapped {
            *term = m.to_string();
        }
    };
    fn visit(objects: &mut Objects, convert: &dyn Fn(TermKind, &mut String)) {
        for object in objects.values_mut() {
            match object {
                Object::Section(s) => visit(&mut s.objects, convert),
                Object::Item(i) => convert(TermKind::Item, &mut i.name),
                Object::Action(a) => convert(TermKind::Action, &mut a.name),
            }
            if let Some(params) = object.params_mut() {
                for p in params.iter_mut() {
                    convert(TermKind::Parameter, &mut p.name);
                }
            }
        }
    }
    let mut out = doc.clone();
    visit(&mut out.objects, &convert);
    Ok((out, missing))
}
