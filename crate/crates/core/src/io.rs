//! Reading and canonical writing of UWL files.
//!
//! The interchange format is JSON. A root workflow holds an `"Objects"` map
//! keyed by object id; sections nest the same map. Parsing is strict about
//! the documented keys and keeps anything else in each object's `extras`.
//!
//! [`serialize`] produces the canonical form: keys in schema order, object
//! maps sorted by id, two-space indentation, scalar arrays on one line and a
//! trailing newline. It is deterministic, and `parse(serialize(d)) == d`.

use std::fmt::Write as _;

use serde_json::{Map, Value};
use thiserror::Error;

use crate::model::{
    ActionNode, Document, Extras, ItemNode, ItemSubtype, Object, ObjectId, Objects, Parameter,
    Parameters, ParentClass, Position, RuleCode, Section,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("SYNTAX at line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("SCHEMA at {path}: {message}")]
    Schema { path: String, code: Option<RuleCode>, message: String },
}

impl ParseError {
    fn schema(path: &str, message: impl Into<String>) -> Self {
        ParseError::Schema { path: path.to_string(), code: None, message: message.into() }
    }

    /// Rule code of a schema error, when one applies.
    pub fn code(&self) -> Option<RuleCode> {
        match self {
            ParseError::Schema { code, .. } => *code,
            ParseError::Syntax { .. } => None,
        }
    }

    /// "SYNTAX", "SCHEMA", or the rule code a schema error carries.
    pub fn code_str(&self) -> &'static str {
        match self {
            ParseError::Syntax { .. } => "SYNTAX",
            ParseError::Schema { code: Some(c), .. } => c.as_str(),
            ParseError::Schema { code: None, .. } => "SCHEMA",
        }
    }
}

const ROOT_KEYS: &[&str] = &["Name", "Type", "File", "Description", "Objects"];
const SECTION_KEYS: &[&str] = &["ID", "Type", "Name", "Description", "Objects", "Position"];
const ITEM_KEYS: &[&str] = &[
    "ID", "Type", "Subtype", "Name", "Notes", "Parameters", "Values", "Link", "Link ID", "Listed",
    "Position",
];
const ACTION_KEYS: &[&str] = &[
    "ID", "Type", "Subtype", "Name", "Notes", "A In", "B In", "C In", "Parameters", "Values",
    "Position",
];

/// Parses UWL text into a document.
///
/// Structural rules that need the whole document (dangling edges, link
/// agreement, duplicate ids across sections) are left to
/// [`crate::model::validate`].
pub fn parse(text: &str) -> Result<Document, ParseError> {
    let value: Value = serde_json::from_str(text).map_err(|e| ParseError::Syntax {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let map = value.as_object().ok_or_else(|| ParseError::schema("$", "root must be an object"))?;
    let ty = get_str(map, "Type", "$")?;
    if ty != "Root" {
        return Err(ParseError::schema("$.Type", format!("expected \"Root\", found {ty:?}")));
    }
    Ok(Document {
        name: get_str(map, "Name", "$")?.to_string(),
        file: get_str(map, "File", "$")?.to_string(),
        description: get_str(map, "Description", "$")?.to_string(),
        objects: parse_objects(require(map, "Objects", "$")?, "$.Objects")?,
        extras: extras(map, ROOT_KEYS),
    })
}

fn parse_objects(value: &Value, path: &str) -> Result<Objects, ParseError> {
    let map = value.as_object().ok_or_else(|| ParseError::schema(path, "expected an object map"))?;
    let mut objects = Objects::new();
    for (key, entry) in map {
        let entry_path = format!("{path}.{key}");
        let object = parse_object(entry, &entry_path)?;
        let key_id = key
            .trim()
            .parse::<u64>()
            .map_err(|_| ParseError::schema(&entry_path, format!("map key {key:?} is not an object id")))?;
        if key_id != object.id().0 {
            return Err(ParseError::schema(
                &entry_path,
                format!("map key {key} does not match ID {}", object.id()),
            ));
        }
        objects.insert(object.id(), object);
    }
    Ok(objects)
}

fn parse_object(value: &Value, path: &str) -> Result<Object, ParseError> {
    let map = value.as_object().ok_or_else(|| ParseError::schema(path, "expected an object"))?;
    let id = get_id(require(map, "ID", path)?, &format!("{path}.ID"))?;
    let position = get_position(map, path)?;
    match get_str(map, "Type", path)? {
        "Section" => Ok(Object::Section(Section {
            id,
            name: get_str(map, "Name", path)?.to_string(),
            description: get_str(map, "Description", path)?.to_string(),
            objects: parse_objects(require(map, "Objects", path)?, &format!("{path}.Objects"))?,
            position,
            extras: extras(map, SECTION_KEYS),
        })),
        "Item" => {
            let link = match require(map, "Link", path)? {
                Value::Bool(flag) => *flag,
                _ => return Err(ParseError::schema(&format!("{path}.Link"), "expected true or false")),
            };
            let link_id = match map.get("Link ID") {
                None | Some(Value::Null) => None,
                Some(v) => Some(get_id(v, &format!("{path}.Link ID"))?.0),
            };
            if link && link_id.is_none() {
                return Err(ParseError::schema(path, "\"Link\" is true but \"Link ID\" is missing"));
            }
            let listed = match map.get("Listed") {
                None => true,
                Some(Value::Bool(flag)) => *flag,
                Some(_) => return Err(ParseError::schema(&format!("{path}.Listed"), "expected true or false")),
            };
            Ok(Object::Item(ItemNode {
                id,
                subtype: ItemSubtype::parse(get_str(map, "Subtype", path)?),
                name: get_str(map, "Name", path)?.to_string(),
                notes: get_str(map, "Notes", path)?.to_string(),
                params: get_params(map, path)?,
                link: if link { link_id } else { None },
                listed,
                position,
                extras: extras(map, ITEM_KEYS),
            }))
        }
        "Action" => Ok(Object::Action(ActionNode {
            id,
            parent_class: ParentClass::parse(get_str(map, "Subtype", path)?),
            name: get_str(map, "Name", path)?.to_string(),
            notes: get_str(map, "Notes", path)?.to_string(),
            a_in: get_ids(map, "A In", path)?,
            b_in: get_ids(map, "B In", path)?,
            c_in: get_ids(map, "C In", path)?,
            params: get_params(map, path)?,
            position,
            extras: extras(map, ACTION_KEYS),
        })),
        other => Err(ParseError::schema(
            &format!("{path}.Type"),
            format!("expected \"Section\", \"Item\" or \"Action\", found {other:?}"),
        )),
    }
}

fn require<'a>(map: &'a Map<String, Value>, key: &str, path: &str) -> Result<&'a Value, ParseError> {
    map.get(key).ok_or_else(|| ParseError::schema(path, format!("missing required key {key:?}")))
}

fn get_str<'a>(map: &'a Map<String, Value>, key: &str, path: &str) -> Result<&'a str, ParseError> {
    require(map, key, path)?
        .as_str()
        .ok_or_else(|| ParseError::schema(&format!("{path}.{key}"), "expected a string"))
}

/// Ids are non-negative integers; numeric strings are accepted too.
fn get_id(value: &Value, path: &str) -> Result<ObjectId, ParseError> {
    let id = match value {
        Value::Number(n) => n.as_u64(),
        Value::String(s) => s.trim().parse::<u64>().ok(),
        _ => None,
    };
    id.map(ObjectId).ok_or_else(|| ParseError::schema(path, format!("{value} is not a non-negative integer id")))
}

fn get_ids(map: &Map<String, Value>, key: &str, path: &str) -> Result<Vec<ObjectId>, ParseError> {
    let key_path = format!("{path}.{key}");
    let array = require(map, key, path)?
        .as_array()
        .ok_or_else(|| ParseError::schema(&key_path, "expected an array of ids"))?;
    array.iter().enumerate().map(|(i, v)| get_id(v, &format!("{key_path}[{i}]"))).collect()
}

fn get_strings<'a>(map: &'a Map<String, Value>, key: &str, path: &str) -> Result<Vec<&'a str>, ParseError> {
    let key_path = format!("{path}.{key}");
    let array = require(map, key, path)?
        .as_array()
        .ok_or_else(|| ParseError::schema(&key_path, "expected an array of strings"))?;
    array
        .iter()
        .enumerate()
        .map(|(i, v)| v.as_str().ok_or_else(|| ParseError::schema(&format!("{key_path}[{i}]"), "expected a string")))
        .collect()
}

fn get_params(map: &Map<String, Value>, path: &str) -> Result<Parameters, ParseError> {
    let names = get_strings(map, "Parameters", path)?;
    let values = get_strings(map, "Values", path)?;
    if names.len() != values.len() {
        return Err(ParseError::Schema {
            path: path.to_string(),
            code: Some(RuleCode::ParamLenMismatch),
            message: format!("{} parameters but {} values", names.len(), values.len()),
        });
    }
    Ok(names.into_iter().zip(values).map(|(n, v)| Parameter::new(n, v)).collect())
}

fn get_position(map: &Map<String, Value>, path: &str) -> Result<Position, ParseError> {
    let key_path = format!("{path}.Position");
    let coords = require(map, "Position", path)?
        .as_array()
        .filter(|a| a.len() == 2)
        .and_then(|a| Some((a[0].as_f64()?, a[1].as_f64()?)))
        .ok_or_else(|| ParseError::schema(&key_path, "expected [x, y]"))?;
    Ok(Position::new(coords.0, coords.1))
}

fn extras(map: &Map<String, Value>, known: &[&str]) -> Extras {
    map.iter()
        .filter(|(k, _)| !known.contains(&k.as_str()))
        .map(|(k, v)| (k.clone(), v.clone()))
        .collect()
}

/// Canonical text of a document.
pub fn serialize(doc: &Document) -> String {
    let mut w = Writer::default();
    w.open('{');
    w.key("Name").string(&doc.name);
    w.key("Type").string("Root");
    w.key("File").string(&doc.file);
    w.key("Description").string(&doc.description);
    w.key("Objects");
    w.objects(&doc.objects);
    w.extras(&doc.extras);
    w.close('}');
    w.out.push('\n');
    w.out
}

#[derive(Default)]
struct Writer {
    out: String,
    depth: usize,
    /// Whether the current container already has an entry.
    has_entry: Vec<bool>,
}

impl Writer {
    fn newline(&mut self) {
        self.out.push('\n');
        for _ in 0..self.depth {
            self.out.push_str("  ");
        }
    }

    fn open(&mut self, bracket: char) {
        self.out.push(bracket);
        self.depth += 1;
        self.has_entry.push(false);
    }

    fn close(&mut self, bracket: char) {
        self.depth -= 1;
        if self.has_entry.pop() == Some(true) {
            self.newline();
        }
        self.out.push(bracket);
    }

    fn key(&mut self, key: &str) -> &mut Self {
        if let Some(flag) = self.has_entry.last_mut() {
            if *flag {
                self.out.push(',');
            }
            *flag = true;
        }
        self.newline();
        push_json_string(&mut self.out, key);
        self.out.push_str(": ");
        self
    }

    fn string(&mut self, s: &str) {
        push_json_string(&mut self.out, s);
    }

    fn raw(&mut self, s: &str) {
        self.out.push_str(s);
    }

    fn strings<'a>(&mut self, items: impl Iterator<Item = &'a str>) {
        self.out.push('[');
        for (i, s) in items.enumerate() {
            if i > 0 {
                self.out.push_str(", ");
            }
            push_json_string(&mut self.out, s);
        }
        self.out.push(']');
    }

    fn ids(&mut self, ids: &[ObjectId]) {
        let joined: Vec<String> = ids.iter().map(|id| id.to_string()).collect();
        let _ = write!(self.out, "[{}]", joined.join(", "));
    }

    fn position(&mut self, p: Position) {
        let _ = write!(self.out, "[{}, {}]", format_coord(p.x), format_coord(p.y));
    }

    fn objects(&mut self, objects: &Objects) {
        if objects.is_empty() {
            self.raw("{}");
            return;
        }
        self.open('{');
        for (id, object) in objects {
            self.key(&id.to_string());
            self.object(object);
        }
        self.close('}');
    }

    fn object(&mut self, object: &Object) {
        self.open('{');
        match object {
            Object::Section(s) => {
                self.key("ID").raw(&s.id.to_string());
                self.key("Type").string("Section");
                self.key("Name").string(&s.name);
                self.key("Description").string(&s.description);
                self.key("Objects");
                self.objects(&s.objects);
                self.key("Position").position(s.position);
                self.extras(&s.extras);
            }
            Object::Item(i) => {
                self.key("ID").raw(&i.id.to_string());
                self.key("Type").string("Item");
                self.key("Subtype").string(i.subtype.as_str());
                self.key("Name").string(&i.name);
                self.key("Notes").string(&i.notes);
                self.key("Parameters").strings(i.params.names());
                self.key("Values").strings(i.params.values());
                match i.link {
                    Some(link) => {
                        self.key("Link").raw("true");
                        self.key("Link ID").raw(&link.to_string());
                    }
                    None => self.key("Link").raw("false"),
                }
                if !i.listed {
                    self.key("Listed").raw("false");
                }
                self.key("Position").position(i.position);
                self.extras(&i.extras);
            }
            Object::Action(a) => {
                self.key("ID").raw(&a.id.to_string());
                self.key("Type").string("Action");
                self.key("Subtype").string(a.parent_class.as_ref().map_or("", |p| p.as_str()));
                self.key("Name").string(&a.name);
                self.key("Notes").string(&a.notes);
                self.key("A In").ids(&a.a_in);
                self.key("B In").ids(&a.b_in);
                self.key("C In").ids(&a.c_in);
                self.key("Parameters").strings(a.params.names());
                self.key("Values").strings(a.params.values());
                self.key("Position").position(a.position);
                self.extras(&a.extras);
            }
        }
        self.close('}');
    }

    fn extras(&mut self, extras: &Extras) {
        for (key, value) in extras {
            self.key(key);
            self.value(value);
        }
    }

    fn value(&mut self, value: &Value) {
        match value {
            Value::Object(map) if !map.is_empty() => {
                self.open('{');
                for (k, v) in map {
                    self.key(k);
                    self.value(v);
                }
                self.close('}');
            }
            Value::Array(items) if items.iter().any(|v| v.is_object() || v.is_array()) => {
                self.open('[');
                for (i, v) in items.iter().enumerate() {
                    if i > 0 {
                        self.out.push(',');
                    }
                    if let Some(f) = self.has_entry.last_mut() {
                        *f = true;
                    }
                    self.newline();
                    self.value(v);
                }
                self.close(']');
            }
            Value::Array(items) => {
                let parts: Vec<String> = items.iter().map(Value::to_string).collect();
                let _ = write!(self.out, "[{}]", parts.join(", "));
            }
            other => self.raw(&other.to_string()),
        }
    }
}

fn push_json_string(out: &mut String, s: &str) {
    // serde_json never fails on a &str
    out.push_str(&serde_json::to_string(s).expect("string serialization"));
}

/// Integral coordinates print without a decimal point; everything else uses
/// the shortest representation that reads back to the same value.
fn format_coord(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 1e16 {
        format!("{}", v as i64)
    } else {
        format!("{v}")
    }
}
