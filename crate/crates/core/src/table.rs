//! Two-way tabular view of document parameters.
//!
//! Every parameter of every item and action becomes a row keyed by
//! (section path, block display name, parameter name). Several documents can
//! share one table; rows with the same key line up, one column per document.
//! Cell edits flow back into the document through [`apply_edit`].

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Document, LinkError, Object, ObjectId};
use crate::transcribe::{display_names, TranslationTable};

/// Identifies one cell within a document column.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RowKey {
    pub section_path: Vec<String>,
    /// Display name after duplicate numbering, e.g. "Beaker (1)".
    pub block: String,
    pub parameter: String,
}

impl RowKey {
    pub fn new(section_path: &[&str], block: &str, parameter: &str) -> Self {
        RowKey {
            section_path: section_path.iter().map(|s| s.to_string()).collect(),
            block: block.to_string(),
            parameter: parameter.to_string(),
        }
    }

    fn section_text(&self) -> String {
        self.section_path.join(SECTION_SEPARATOR)
    }
}

impl fmt::Display for RowKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.section_path.is_empty() {
            write!(f, "{} / {}", self.block, self.parameter)
        } else {
            write!(f, "{} / {} / {}", self.section_text(), self.block, self.parameter)
        }
    }
}

const SECTION_SEPARATOR: &str = " / ";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Row {
    pub key: RowKey,
    /// One cell per column; `None` when that document lacks the key.
    pub cells: Vec<Option<String>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TableView {
    /// Column titles (document names).
    pub columns: Vec<String>,
    pub rows: Vec<Row>,
}

impl TableView {
    pub fn cell(&self, key: &RowKey, column: usize) -> Option<&str> {
        self.rows.iter().find(|r| &r.key == key)?.cells.get(column)?.as_deref()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EditError {
    #[error("KEY_NOT_FOUND: {0}")]
    KeyNotFound(RowKey),
    #[error("KEY_AMBIGUOUS: {0}")]
    KeyAmbiguous(RowKey),
    #[error(transparent)]
    Link(#[from] LinkError),
}

impl EditError {
    pub fn code(&self) -> &'static str {
        match self {
            EditError::KeyNotFound(_) => "KEY_NOT_FOUND",
            EditError::KeyAmbiguous(_) => "KEY_AMBIGUOUS",
            EditError::Link(LinkError::UnknownLink(_)) => "UNKNOWN_LINK",
            EditError::Link(LinkError::NotInLink { .. }) => "NOT_IN_LINK",
        }
    }
}

/// One parameter cell of one document, in walk order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cell {
    pub key: RowKey,
    pub object: ObjectId,
    pub value: String,
}

/// All parameter cells of a document in evaluation order.
pub fn cells(doc: &Document) -> Vec<Cell> {
    let names = display_names(doc, &TranslationTable::english());
    let mut out = Vec::new();
    for entry in doc.walk() {
        let Some(params) = entry.object.params() else { continue };
        let block = &names[&entry.object.id()];
        for p in params {
            out.push(Cell {
                key: RowKey {
                    section_path: entry.section_names(),
                    block: block.clone(),
                    parameter: p.name.clone(),
                },
                object: entry.object.id(),
                value: p.value.clone(),
            });
        }
    }
    out
}

/// Rows follow the first document's order; keys first seen in later
/// documents are appended. A key repeated inside one document (a repeated
/// parameter name) keeps its first value.
pub fn flatten(docs: &[&Document]) -> TableView {
    let mut view = TableView { columns: docs.iter().map(|d| d.name.clone()).collect(), rows: Vec::new() };
    let mut index: HashMap<RowKey, usize> = HashMap::new();
    for (column, doc) in docs.iter().enumerate() {
        for cell in cells(doc) {
            let row = *index.entry(cell.key.clone()).or_insert_with(|| {
                view.rows.push(Row { key: cell.key.clone(), cells: vec![None; docs.len()] });
                view.rows.len() - 1
            });
            view.rows[row].cells[column].get_or_insert(cell.value);
        }
    }
    view
}

/// Sets one parameter value. Linked items pass the change to every member
/// of their link group.
pub fn apply_edit(doc: &mut Document, key: &RowKey, value: &str) -> Result<(), EditError> {
    let matches: Vec<ObjectId> = cells(doc).into_iter().filter(|c| &c.key == key).map(|c| c.object).collect();
    let id = match matches.as_slice() {
        [] => return Err(EditError::KeyNotFound(key.clone())),
        [one] => *one,
        _ => return Err(EditError::KeyAmbiguous(key.clone())),
    };
    let object = doc.find_mut(id).expect("cell object exists");
    object.params_mut().expect("cell object has parameters").set(&key.parameter, value);
    if let Object::Item(item) = object {
        if let Some(link) = item.link {
            doc.propagate_link(link, id)?;
        }
    }
    Ok(())
}

#[derive(Debug, Error)]
pub enum CsvError {
    #[error("CSV: {0}")]
    Csv(#[from] csv::Error),
    #[error("CSV header must start with Section,Block,Parameter")]
    BadHeader,
    #[error("CSV has no column named {0:?}")]
    NoColumn(String),
    #[error("CSV has {0} document columns; name the one to apply")]
    AmbiguousColumn(usize),
    #[error(transparent)]
    Edit(#[from] EditError),
}

/// RFC 4180 text: Section, Block, Parameter, then one column per document.
/// Nested section names are joined with " / ".
pub fn to_csv(view: &TableView) -> String {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(Vec::new());
    let mut header = vec!["Section".to_string(), "Block".to_string(), "Parameter".to_string()];
    header.extend(view.columns.iter().cloned());
    w.write_record(&header).expect("write to memory");
    for row in &view.rows {
        let mut record = vec![row.key.section_text(), row.key.block.clone(), row.key.parameter.clone()];
        record.extend(row.cells.iter().map(|c| c.clone().unwrap_or_default()));
        w.write_record(&record).expect("write to memory");
    }
    String::from_utf8(w.into_inner().expect("flush to memory")).expect("CSV of UTF-8 strings")
}

/// Parses CSV written by [`to_csv`] (or edited by hand) back into a view.
pub fn from_csv(text: &str) -> Result<TableView, CsvError> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
    let header = r.headers()?.clone();
    if header.len() < 3 || &header[0] != "Section" || &header[1] != "Block" || &header[2] != "Parameter" {
        return Err(CsvError::BadHeader);
    }
    let columns: Vec<String> = header.iter().skip(3).map(str::to_string).collect();
    let mut rows = Vec::new();
    for record in r.records() {
        let record = record?;
        let section = record.get(0).unwrap_or("");
        let key = RowKey {
            section_path: if section.is_empty() {
                Vec::new()
            } else {
                section.split(SECTION_SEPARATOR).map(str::to_string).collect()
            },
            block: record.get(1).unwrap_or("").to_string(),
            parameter: record.get(2).unwrap_or("").to_string(),
        };
        let cells = (0..columns.len())
            .map(|i| record.get(i + 3).filter(|v| !v.is_empty()).map(str::to_string))
            .collect();
        rows.push(Row { key, cells });
    }
    Ok(TableView { columns, rows })
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct ImportReport {
    /// Cells whose value changed.
    pub applied: usize,
    pub unchanged: usize,
    /// Rows with a value whose key does not exist in the document.
    pub unmatched: Vec<RowKey>,
}

/// Applies one CSV column to a document. The column is the one titled with
/// the document's name, or `column` when given, or the only data column.
/// Empty cells are skipped.
pub fn import_csv(doc: &mut Document, text: &str, column: Option<&str>) -> Result<ImportReport, CsvError> {
    let view = from_csv(text)?;
    let wanted = column.unwrap_or(&doc.name);
    let index = match view.columns.iter().position(|c| c == wanted) {
        Some(i) => i,
        None if column.is_some() => return Err(CsvError::NoColumn(wanted.to_string())),
        None if view.columns.len() == 1 => 0,
        None => return Err(CsvError::AmbiguousColumn(view.columns.len())),
    };
    let current: HashMap<RowKey, String> = cells(doc).into_iter().map(|c| (c.key, c.value)).collect();
    let mut report = ImportReport::default();
    for row in &view.rows {
        let Some(value) = &row.cells[index] else { continue };
        match current.get(&row.key) {
            None => report.unmatched.push(row.key.clone()),
            Some(v) if v == value => report.unchanged += 1,
            Some(_) => {
                apply_edit(doc, &row.key, value)?;
                report.applied += 1;
            }
        }
    }
    Ok(report)
}
