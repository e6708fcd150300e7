//! Protocol text from UWL documents.
//!
//! Each action becomes one sentence built from its term's phrase
//! [`Template`]: the A, B and C item lists fill the template's slots, then
//! the parameters, then any note. [`render_protocol`] adds the header, the
//! item listings and the numbered procedure.
//!
//! Output language is chosen by a [`TranslationTable`]; the English table is
//! the identity. Tables only ever translate action, item and parameter
//! names, so the same tables drive [`translate_document`].

mod locale;
mod template;
mod vocabulary;

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt::Write as _;

use serde::Serialize;
use thiserror::Error;

pub use locale::{
    translate_document, Direction, Headings, ListStyle, TableError, TermKind, TermMap, TranslateError,
    TranslationTable, UntranslatedTerm,
};
pub use template::{Template, TemplateError};
pub use vocabulary::{Vocabulary, VocabularyEntry, VocabularyError};

use crate::model::{ActionNode, Document, EdgeType, ItemNode, ItemSubtype, Object, ObjectId, ParentClass};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TranscribeError {
    #[error("UNKNOWN_TERM_NO_PARENT: action {action} uses term {term:?}, which is not in the vocabulary, and has no parent class")]
    UnknownTermNoParent { action: ObjectId, term: String },
    #[error("action {action} has unknown parent class {parent:?}")]
    BadParent { action: ObjectId, parent: String },
    #[error("action {action} references {item}, which is not an item")]
    MissingItem { action: ObjectId, item: ObjectId },
}

impl TranscribeError {
    pub fn code(&self) -> &'static str {
        match self {
            TranscribeError::UnknownTermNoParent { .. } => "UNKNOWN_TERM_NO_PARENT",
            TranscribeError::BadParent { .. } => "BAD_PARENT",
            TranscribeError::MissingItem { .. } => "MISSING_ITEM",
        }
    }
}

/// Display names with duplicates numbered by first appearance: the first
/// "Beaker" in walk order keeps its name, later ones become "Beaker (1)",
/// "Beaker (2)". Items and actions are numbered independently. Names are
/// translated through `table` before numbering.
pub fn display_names(doc: &Document, table: &TranslationTable) -> HashMap<ObjectId, String> {
    let walk = doc.walk();
    let taken: HashSet<&str> = walk
        .iter()
        .filter(|e| !matches!(e.object, Object::Section(_)))
        .map(|e| e.object.name())
        .collect();
    let mut out = HashMap::new();
    let mut counters: [HashMap<String, usize>; 2] = Default::default();
    for entry in &walk {
        let (slot, name) = match entry.object {
            Object::Item(i) => (0, table.term(TermKind::Item, &i.name)),
            Object::Action(a) => (1, table.term(TermKind::Action, &a.name)),
            Object::Section(_) => continue,
        };
        let count = counters[slot].entry(name.to_string()).or_insert(0);
        let display = loop {
            let candidate = if *count == 0 { name.to_string() } else { format!("{name} ({count})") };
            *count += 1;
            // never collide with a name some node already carries verbatim
            if *count == 1 || !taken.contains(candidate.as_str()) {
                break candidate;
            }
        };
        out.insert(entry.object.id(), display);
    }
    out
}

fn resolve_template<'a>(
    action: &ActionNode,
    vocab: &'a Vocabulary,
    table: &'a TranslationTable,
) -> Result<&'a Template, TranscribeError> {
    if let Some(t) = table.template_for(&action.name) {
        return Ok(t);
    }
    if let Some(entry) = vocab.entry(&action.name) {
        return Ok(table.parent_template(&entry.parent).unwrap_or(&entry.template));
    }
    let parent = match &action.parent_class {
        None => {
            return Err(TranscribeError::UnknownTermNoParent { action: action.id, term: action.name.clone() })
        }
        Some(ParentClass::Other(raw)) => {
            return Err(TranscribeError::BadParent { action: action.id, parent: raw.clone() })
        }
        Some(p) => p,
    };
    table
        .parent_template(parent)
        .or_else(|| vocab.parent_template(parent))
        .ok_or_else(|| TranscribeError::UnknownTermNoParent { action: action.id, term: action.name.clone() })
}

fn params_text(node_params: &crate::model::Parameters, table: &TranslationTable) -> String {
    let parts: Vec<String> = node_params
        .iter()
        .map(|p| format!("{} - {}", table.term(TermKind::Parameter, &p.name), p.value))
        .collect();
    format!("[{}]", parts.join("; "))
}

/// One procedure sentence, without its number.
pub fn render_step(
    action: &ActionNode,
    doc: &Document,
    vocab: &Vocabulary,
    table: &TranslationTable,
) -> Result<String, TranscribeError> {
    let template = resolve_template(action, vocab, table)?;
    let mut slots: [String; 3] = Default::default();
    for edge in EdgeType::ALL {
        let mut items: Vec<&ItemNode> = action
            .edges(edge)
            .iter()
            .map(|&id| doc.item(id).ok_or(TranscribeError::MissingItem { action: action.id, item: id }))
            .collect::<Result<_, _>>()?;
        items.sort_by(|a, b| {
            a.position
                .x
                .total_cmp(&b.position.x)
                .then_with(|| a.position.y.total_cmp(&b.position.y))
                .then_with(|| a.id.cmp(&b.id))
        });
        let names: Vec<&str> = items.iter().map(|i| table.term(TermKind::Item, &i.name)).collect();
        slots[edge as usize] = table.list.join(&names);
    }
    let (mut text, any_slot) = template.render(table.term(TermKind::Action, &action.name), &slots);
    if !action.params.is_empty() {
        text.push_str(if any_slot { ": " } else { " : " });
        text.push_str(&params_text(&action.params, table));
    }
    if !action.notes.is_empty() {
        let _ = write!(text, " ({}: {})", table.headings.note, action.notes);
    }
    text.push('.');
    Ok(text)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ListingGroup {
    AdditionalInformation,
    Materials,
    Equipment,
}

impl ListingGroup {
    fn of(subtype: &ItemSubtype) -> Option<Self> {
        match subtype {
            ItemSubtype::Abstract => Some(ListingGroup::AdditionalInformation),
            ItemSubtype::Source => Some(ListingGroup::Materials),
            ItemSubtype::Tool | ItemSubtype::Container => Some(ListingGroup::Equipment),
            ItemSubtype::Other(_) => None,
        }
    }

    fn heading(self, h: &Headings) -> &str {
        match self {
            ListingGroup::AdditionalInformation => &h.additional_information,
            ListingGroup::Materials => &h.materials,
            ListingGroup::Equipment => &h.equipment,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ListingEntry {
    pub item: ObjectId,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Listing {
    pub group: ListingGroup,
    pub heading: String,
    pub entries: Vec<ListingEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProcedureLine {
    Section { depth: usize, name: String },
    Step { depth: usize, number: usize, action: ObjectId, text: String },
}

/// Structured protocol: header, item listings and numbered steps.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ProtocolDocument {
    pub name: String,
    pub description: String,
    pub headings: Headings,
    /// Only groups with at least one listed item, in fixed group order.
    pub listings: Vec<Listing>,
    pub procedure: Vec<ProcedureLine>,
}

impl ProtocolDocument {
    pub fn step_count(&self) -> usize {
        self.procedure.iter().filter(|l| matches!(l, ProcedureLine::Step { .. })).count()
    }

    /// Plain-text form with LF line endings.
    pub fn text(&self) -> String {
        let h = &self.headings;
        let mut out = String::new();
        let _ = writeln!(out, "{}: {}", h.experiment_name, self.name);
        if self.description.is_empty() {
            let _ = writeln!(out, "{}:", h.experiment_description);
        } else {
            let _ = writeln!(out, "{}: {}", h.experiment_description, self.description);
        }
        for listing in &self.listings {
            let _ = writeln!(out, "\n{}", listing.heading);
            for entry in &listing.entries {
                let _ = writeln!(out, "{}", entry.text);
            }
        }
        if !self.procedure.is_empty() {
            let _ = writeln!(out, "\n{}", h.procedure);
            for line in &self.procedure {
                match line {
                    ProcedureLine::Section { depth, name } => {
                        let _ = writeln!(out, "{}{name}", "    ".repeat(*depth));
                    }
                    ProcedureLine::Step { depth, number, text, .. } => {
                        let _ = writeln!(out, "{}{number}. {text}", "    ".repeat(*depth));
                    }
                }
            }
        }
        out
    }
}

/// Renders a whole document. Listed items are grouped by subtype in
/// evaluation order; actions become steps numbered across sections.
pub fn render_protocol(
    doc: &Document,
    vocab: &Vocabulary,
    table: &TranslationTable,
) -> Result<ProtocolDocument, TranscribeError> {
    let names = display_names(doc, table);
    let mut groups: BTreeMap<u8, Listing> = BTreeMap::new();
    let mut procedure = Vec::new();
    let mut number = 0;
    for entry in doc.walk() {
        match entry.object {
            Object::Section(s) => {
                procedure.push(ProcedureLine::Section { depth: entry.depth(), name: s.name.clone() })
            }
            Object::Action(a) => {
                number += 1;
                procedure.push(ProcedureLine::Step {
                    depth: entry.depth(),
                    number,
                    action: a.id,
                    text: render_step(a, doc, vocab, table)?,
                });
            }
            Object::Item(i) if i.listed => {
                let Some(group) = ListingGroup::of(&i.subtype) else { continue };
                let mut text = names[&i.id].clone();
                if !i.params.is_empty() {
                    text.push_str(": ");
                    text.push_str(&params_text(&i.params, table));
                }
                if !i.notes.is_empty() {
                    let _ = write!(text, " ({}: {})", table.headings.note, i.notes);
                }
                groups
                    .entry(group as u8)
                    .or_insert_with(|| Listing {
                        group,
                        heading: group.heading(&table.headings).to_string(),
                        entries: Vec::new(),
                    })
                    .entries
                    .push(ListingEntry { item: i.id, text });
            }
            Object::Item(_) => {}
        }
    }
    Ok(ProtocolDocument {
        name: doc.name.clone(),
        description: doc.description.clone(),
        headings: table.headings.clone(),
        listings: groups.into_values().collect(),
        procedure,
    })
}

/// Plain text of [`render_protocol`].
pub fn transcribe(doc: &Document, vocab: &Vocabulary, table: &TranslationTable) -> Result<String, TranscribeError> {
    render_protocol(doc, vocab, table).map(|p| p.text())
}

/// Comparison form for protocol texts: whitespace runs collapse to one
/// space, any run of three or more '#' becomes "####", and the tool-clause
/// markers " with " and " using " become one token.
pub fn normalize_for_comparison(text: &str) -> String {
    let collapsed = text.split_whitespace().collect::<Vec<_>>().join(" ");
    let mut out = String::with_capacity(collapsed.len());
    let mut hashes = 0;
    for c in collapsed.chars() {
        if c == '#' {
            hashes += 1;
            continue;
        }
        flush_hashes(&mut out, hashes);
        hashes = 0;
        out.push(c);
    }
    flush_hashes(&mut out, hashes);
    out.replace(" using ", " with|using ").replace(" with ", " with|using ")
}

fn flush_hashes(out: &mut String, n: usize) {
    if n >= 3 {
        out.push_str("####");
    } else {
        out.extend(std::iter::repeat_n('#', n));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Section;

    fn en() -> (Vocabulary, TranslationTable) {
        (Vocabulary::builtin(), TranslationTable::english())
    }

    fn step(doc: &Document, id: u64) -> String {
        let (v, t) = en();
        render_step(doc.action(ObjectId(id)).unwrap(), doc, &v, &t).unwrap()
    }

    #[test]
    fn add_with_three_tools() {
        let doc = Document::new("d")
            .with(ItemNode::new(1, ItemSubtype::Container, "Beaker").at(0.0, 0.0))
            .with(ItemNode::new(2, ItemSubtype::Source, "Potassium dihydrogen phosphate").at(0.0, 1.0))
            .with(ItemNode::new(3, ItemSubtype::Tool, "Scale").at(1.0, 0.0))
            .with(ItemNode::new(4, ItemSubtype::Tool, "Weigh boat").at(2.0, 0.0))
            .with(ItemNode::new(5, ItemSubtype::Tool, "Spatula").at(3.0, 0.0))
            .with(
                ActionNode::new(6, "Add")
                    .with_parent(ParentClass::Add)
                    .with_edges(EdgeType::A, [1])
                    .with_edges(EdgeType::B, [2])
                    .with_edges(EdgeType::C, [5, 3, 4])
                    .with_param("Mass", "6.8 g")
                    .with_param("Moles", "50.0 mmol"),
            );
        assert_eq!(
            step(&doc, 6),
            "Add Potassium dihydrogen phosphate to Beaker using Scale, Weigh boat, and Spatula: [Mass - 6.8 g; Moles - 50.0 mmol]."
        );
    }

    #[test]
    fn verb_only_step_with_params() {
        let doc = Document::new("d").with(ActionNode::new(1, "Wait").with_param("Time", "####"));
        assert_eq!(step(&doc, 1), "Wait : [Time - ####].");
    }

    #[test]
    fn remove_and_stir() {
        let doc = Document::new("d")
            .with(ItemNode::new(1, ItemSubtype::Tool, "Cooling apparatus"))
            .with(ItemNode::new(2, ItemSubtype::Container, "Beaker"))
            .with(ItemNode::new(3, ItemSubtype::Source, "Solution").unlisted())
            .with(ItemNode::new(4, ItemSubtype::Tool, "Stir plate"))
            .with(ActionNode::new(5, "Remove").with_edges(EdgeType::A, [1]).with_edges(EdgeType::B, [2]))
            .with(
                ActionNode::new(6, "Stir")
                    .with_edges(EdgeType::A, [3])
                    .with_edges(EdgeType::C, [4])
                    .with_param("Stir rate", "####")
                    .with_param("Time", "####"),
            );
        assert_eq!(step(&doc, 5), "Remove Beaker from Cooling apparatus.");
        assert_eq!(step(&doc, 6), "Stir Solution with Stir plate: [Stir rate - ####; Time - ####].");
    }

    #[test]
    fn notes_and_custom_terms() {
        let doc = Document::new("d")
            .with(ItemNode::new(1, ItemSubtype::Container, "Vial"))
            .with(ItemNode::new(2, ItemSubtype::Tool, "Cap"))
            .with(
                ActionNode::new(3, "Cover")
                    .with_edges(EdgeType::A, [1])
                    .with_edges(EdgeType::B, [2])
                    .with_notes("Loosely cover vial with cap"),
            )
            .with(ActionNode::new(4, "Sonicate").with_parent(ParentClass::Modify).with_edges(EdgeType::A, [1]))
            .with(ActionNode::new(5, "Decant").with_edges(EdgeType::A, [1]));
        assert_eq!(step(&doc, 3), "Cover Vial with Cap (Note: Loosely cover vial with cap).");
        assert_eq!(step(&doc, 4), "Sonicate Vial.");
        let (v, t) = en();
        assert_eq!(
            render_step(doc.action(ObjectId(5)).unwrap(), &doc, &v, &t),
            Err(TranscribeError::UnknownTermNoParent { action: ObjectId(5), term: "Decant".into() })
        );
    }

    #[test]
    fn duplicate_names_numbered_in_listing() {
        let doc = Document::new("d")
            .with(ItemNode::new(1, ItemSubtype::Tool, "Burette").at(0.0, 0.0))
            .with(ItemNode::new(2, ItemSubtype::Tool, "Burette").at(1.0, 0.0));
        let (v, t) = en();
        let p = render_protocol(&doc, &v, &t).unwrap();
        let entries: Vec<&str> = p.listings[0].entries.iter().map(|e| e.text.as_str()).collect();
        assert_eq!(entries, vec!["Burette", "Burette (1)"]);
    }

    #[test]
    fn numbering_skips_taken_names() {
        let doc = Document::new("d")
            .with(ItemNode::new(1, ItemSubtype::Tool, "Beaker").at(0.0, 0.0))
            .with(ItemNode::new(2, ItemSubtype::Tool, "Beaker (1)").at(1.0, 0.0))
            .with(ItemNode::new(3, ItemSubtype::Tool, "Beaker").at(2.0, 0.0));
        let names = display_names(&doc, &TranslationTable::english());
        assert_eq!(names[&ObjectId(3)], "Beaker (2)");
    }

    #[test]
    fn empty_document_is_header_only() {
        let (v, t) = en();
        let p = render_protocol(&Document::new("X"), &v, &t).unwrap();
        assert!(p.listings.is_empty());
        assert_eq!(p.step_count(), 0);
        assert_eq!(p.text(), "Experiment Name: X\nExperiment Description:\n");
    }

    #[test]
    fn sections_indent_and_continue_numbering() {
        let doc = Document::new("X")
            .with(ActionNode::new(1, "Wait").at(0.0, 0.0))
            .with(Section::new(2, "Workup").at(1.0, 0.0).with(ActionNode::new(3, "Wait")))
            .with(ActionNode::new(4, "Wait").at(2.0, 0.0));
        let (v, t) = en();
        let text = transcribe(&doc, &v, &t).unwrap();
        assert!(text.ends_with("Procedure\n1. Wait.\nWorkup\n    2. Wait.\n3. Wait.\n"), "{text}");
    }

    #[test]
    fn listing_notes_and_bare_names() {
        let doc = Document::new("X")
            .with(ItemNode::new(1, ItemSubtype::Source, "Ice"))
            .with(ItemNode::new(2, ItemSubtype::Source, "TFPE").with_notes("Made in house.").at(1.0, 0.0))
            .with(ItemNode::new(3, ItemSubtype::Abstract, "User").with_param("Form Filled by", "####"));
        let (v, t) = en();
        let text = transcribe(&doc, &v, &t).unwrap();
        assert_eq!(
            text,
            "Experiment Name: X\nExperiment Description:\n\nAdditional Information\nUser: [Form Filled by - ####]\n\nMaterials\nIce\nTFPE (Note: Made in house.)\n"
        );
    }

    #[test]
    fn normalizer() {
        assert_eq!(
            normalize_for_comparison("Heat  Beaker\nusing Oven: [Time - ###]"),
            normalize_for_comparison("Heat Beaker with Oven: [Time - #####]")
        );
        assert_eq!(normalize_for_comparison("a ## b"), "a ## b");
    }
}
