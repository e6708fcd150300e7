//! In-memory UWL document model.
//!
//! A [`Document`] is the root workflow. It owns a map of objects keyed by
//! [`ObjectId`]; each object is a nested [`Section`], an [`ItemNode`] or an
//! [`ActionNode`]. Actions reference items by id through their A, B and C
//! edge lists. Ids are unique across the whole document, including nested
//! sections.

mod link;
mod order;
mod validate;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::Value;

pub use link::LinkError;
pub use order::{evaluation_order, sort_in_evaluation_order, WalkEntry};
pub use validate::{validate, RuleCode, ValidationReport, Violation};

/// Unknown keys carried through a parse/serialize round trip.
pub type Extras = BTreeMap<String, Value>;

/// Children of a root workflow or section, keyed by their id.
pub type Objects = BTreeMap<ObjectId, Object>;

/// Integer identifier of a section or node, unique per document.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ObjectId(pub u64);

impl fmt::Display for ObjectId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl From<u64> for ObjectId {
    fn from(value: u64) -> Self {
        ObjectId(value)
    }
}

/// Canvas coordinates. Objects are read left to right, then top to bottom.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Position {
    pub x: f64,
    pub y: f64,
}

impl Position {
    pub const fn new(x: f64, y: f64) -> Self {
        Position { x, y }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Parameter {
    pub name: String,
    pub value: String,
}

impl Parameter {
    pub fn new(name: impl Into<String>, value: impl Into<String>) -> Self {
        Parameter { name: name.into(), value: value.into() }
    }
}

/// Ordered parameter/value pairs of a node.
///
/// The file format stores names and values as two parallel arrays; here they
/// are kept paired so the lengths can never disagree.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Parameters(Vec<Parameter>);

impl Parameters {
    pub fn new() -> Self {
        Parameters(Vec::new())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Parameter> {
        self.0.iter()
    }

    pub fn iter_mut(&mut self) -> std::slice::IterMut<'_, Parameter> {
        self.0.iter_mut()
    }

    pub fn push(&mut self, name: impl Into<String>, value: impl Into<String>) {
        self.0.push(Parameter::new(name, value));
    }

    /// Value of the first parameter called `name`.
    pub fn get(&self, name: &str) -> Option<&str> {
        self.0.iter().find(|p| p.name == name).map(|p| p.value.as_str())
    }

    /// Replaces the value of an existing parameter. Returns false when the
    /// node has no parameter with that name.
    pub fn set(&mut self, name: &str, value: impl Into<String>) -> bool {
        match self.0.iter_mut().find(|p| p.name == name) {
            Some(p) => {
                p.value = value.into();
                true
            }
            None => false,
        }
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.0.iter().map(|p| p.name.as_str())
    }

    pub fn values(&self) -> impl Iterator<Item = &str> {
        self.0.iter().map(|p| p.value.as_str())
    }
}

impl FromIterator<Parameter> for Parameters {
    fn from_iter<T: IntoIterator<Item = Parameter>>(iter: T) -> Self {
        Parameters(iter.into_iter().collect())
    }
}

impl<'a> IntoIterator for &'a Parameters {
    type Item = &'a Parameter;
    type IntoIter = std::slice::Iter<'a, Parameter>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

impl<N: Into<String>, V: Into<String>> FromIterator<(N, V)> for Parameters {
    fn from_iter<T: IntoIterator<Item = (N, V)>>(iter: T) -> Self {
        iter.into_iter().map(|(n, v)| Parameter::new(n, v)).collect()
    }
}

/// Role of an item in the procedure.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum ItemSubtype {
    Container,
    Tool,
    Source,
    Abstract,
    /// A subtype string this implementation does not know. Kept verbatim and
    /// reported by validation as `BAD_SUBTYPE`.
    Other(String),
}

impl ItemSubtype {
    /// Case-insensitive; "Material" is accepted as a synonym of Source.
    pub fn parse(raw: &str) -> Self {
        match raw.trim().to_ascii_lowercase().as_str() {
            "container" => ItemSubtype::Container,
            "tool" => ItemSubtype::Tool,
            "source" | "material" => ItemSubtype::Source,
            "abstract" => ItemSubtype::Abstract,
            _ => ItemSubtype::Other(raw.to_string()),
        }
    }

    pub fn as_str(&self) -> &str {
        match self {
            ItemSubtype::Container => "Container",
            ItemSubtype::Tool => "Tool",
            ItemSubtype::Source => "Source",
            ItemSubtype::Abstract => "Abstract",
            ItemSubtype::Other(raw) => raw,
        }
    }
}

impl fmt::Display for ItemSubtype {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Edge-interpretation rule set an action term inherits.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum ParentClass {
    Add,
    Remove,
    Modify,
    /// Unrecognised value found in a file; reported as `BAD_SUBTYPE`.
    Other(String),
}

impl ParentClass {
    /// Case-insensitive. Returns `None` for an empty string.
    pub fn parse(raw: &str) -> Option<Self> {
        match raw.trim().to_ascii_lowercase().as_str() {
            "" => None,
            "add" => Some(ParentClass::Add),
            "remove" => Some(ParentClass::Remove),
            "modify" => Some(ParentClass::Modify),
            _ => Some(ParentClass::Other(raw.to_string())),
        }
    }

    pub fn as_str(&self) -> &str {
        match self {
            ParentClass::Add => "Add",
            ParentClass::Remove => "Remove",
            ParentClass::Modify => "Modify",
            ParentClass::Other(raw) => raw,
        }
    }

    pub fn is_known(&self) -> bool {
        !matches!(self, ParentClass::Other(_))
    }
}

impl fmt::Display for ParentClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Edge type connecting an item into an action.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EdgeType {
    A,
    B,
    C,
}

impl EdgeType {
    pub const ALL: [EdgeType; 3] = [EdgeType::A, EdgeType::B, EdgeType::C];

    pub fn as_str(self) -> &'static str {
        match self {
            EdgeType::A => "A",
            EdgeType::B => "B",
            EdgeType::C => "C",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ItemNode {
    pub id: ObjectId,
    pub subtype: ItemSubtype,
    pub name: String,
    pub notes: String,
    pub params: Parameters,
    /// Link group; items sharing a link id share name, subtype and params.
    pub link: Option<u64>,
    /// Whether the item appears in the Materials/Equipment listings.
    /// Intermediate products ("Solution", "Supernatant") are unlisted.
    pub listed: bool,
    pub position: Position,
    pub extras: Extras,
}

impl ItemNode {
    pub fn new(id: impl Into<ObjectId>, subtype: ItemSubtype, name: impl Into<String>) -> Self {
        ItemNode {
            id: id.into(),
            subtype,
            name: name.into(),
            notes: String::new(),
            params: Parameters::new(),
            link: None,
            listed: true,
            position: Position::default(),
            extras: Extras::new(),
        }
    }

    pub fn at(mut self, x: f64, y: f64) -> Self {
        self.position = Position::new(x, y);
        self
    }

    pub fn with_param(mut self, name: impl Into<String>, value: impl Into<String>) -> Self {
        self.params.push(name, value);
        self
    }

    pub fn with_notes(mut self, notes: impl Into<String>) -> Self {
        self.notes = notes.into();
        self
    }

    pub fn linked(mut self, link: u64) -> Self {
        self.link = Some(link);
        self
    }

    pub fn unlisted(mut self) -> Self {
        self.listed = false;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActionNode {
    pub id: ObjectId,
    /// Stored in the file's "Subtype" slot.
    pub parent_class: Option<ParentClass>,
    /// Action term, e.g. "Add" or "Stir".
    pub name: String,
    pub notes: String,
    pub a_in: Vec<ObjectId>,
    pub b_in: Vec<ObjectId>,
    pub c_in: Vec<ObjectId>,
    pub params: Parameters,
    pub position: Position,
    pub extras: Extras,
}

impl ActionNode {
    pub fn new(id: impl Into<ObjectId>, name: impl Into<String>) -> Self {
        ActionNode {
            id: id.into(),
            parent_class: None,
            name: name.into(),
            notes: String::new(),
            a_in: Vec::new(),
            b_in: Vec::new(),
            c_in: Vec::new(),
            params: Parameters::new(),
            position: Position::default(),
            extras: Extras::new(),
        }
    }

    pub fn at(mut self, x: f64, y: f64) -> Self {
        self.position = Position::new(x, y);
        self
    }

    pub fn with_parent(mut self, parent: ParentClass) -> Self {
        self.parent_class = Some(parent);
        self
    }

    pub fn with_param(mut self, name: impl Into<String>, value: impl Into<String>) -> Self {
        self.params.push(name, value);
        self
    }

    pub fn with_notes(mut self, notes: impl Into<String>) -> Self {
        self.notes = notes.into();
        self
    }

    pub fn with_edges(mut self, edge: EdgeType, ids: impl IntoIterator<Item = u64>) -> Self {
        self.edges_mut(edge).extend(ids.into_iter().map(ObjectId));
        self
    }

    pub fn edges(&self, edge: EdgeType) -> &[ObjectId] {
        match edge {
            EdgeType::A => &self.a_in,
            EdgeType::B => &self.b_in,
            EdgeType::C => &self.c_in,
        }
    }

    pub fn edges_mut(&mut self, edge: EdgeType) -> &mut Vec<ObjectId> {
        match edge {
            EdgeType::A => &mut self.a_in,
            EdgeType::B => &mut self.b_in,
            EdgeType::C => &mut self.c_in,
        }
    }

    /// All (edge type, item id) pairs in A, B, C order.
    pub fn all_edges(&self) -> impl Iterator<Item = (EdgeType, ObjectId)> + '_ {
        EdgeType::ALL
            .into_iter()
            .flat_map(move |e| self.edges(e).iter().map(move |id| (e, *id)))
    }
}

/// Nested sub-workflow used to group phases of a procedure.
#[derive(Debug, Clone, PartialEq)]
pub struct Section {
    pub id: ObjectId,
    pub name: String,
    pub description: String,
    pub objects: Objects,
    pub position: Position,
    pub extras: Extras,
}

impl Section {
    pub fn new(id: impl Into<ObjectId>, name: impl Into<String>) -> Self {
        Section {
            id: id.into(),
            name: name.into(),
            description: String::new(),
            objects: Objects::new(),
            position: Position::default(),
            extras: Extras::new(),
        }
    }

    pub fn at(mut self, x: f64, y: f64) -> Self {
        self.position = Position::new(x, y);
        self
    }

    pub fn with(mut self, object: impl Into<Object>) -> Self {
        let object = object.into();
        self.objects.insert(object.id(), object);
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Object {
    Section(Section),
    Item(ItemNode),
    Action(ActionNode),
}

impl Object {
    pub fn id(&self) -> ObjectId {
        match self {
            Object::Section(s) => s.id,
            Object::Item(i) => i.id,
            Object::Action(a) => a.id,
        }
    }

    pub fn position(&self) -> Position {
        match self {
            Object::Section(s) => s.position,
            Object::Item(i) => i.position,
            Object::Action(a) => a.position,
        }
    }

    pub fn name(&self) -> &str {
        match self {
            Object::Section(s) => &s.name,
            Object::Item(i) => &i.name,
            Object::Action(a) => &a.name,
        }
    }

    pub fn params(&self) -> Option<&Parameters> {
        match self {
            Object::Section(_) => None,
            Object::Item(i) => Some(&i.params),
            Object::Action(a) => Some(&a.params),
        }
    }

    pub fn params_mut(&mut self) -> Option<&mut Parameters> {
        match self {
            Object::Section(_) => None,
            Object::Item(i) => Some(&mut i.params),
            Object::Action(a) => Some(&mut a.params),
        }
    }

    pub fn as_item(&self) -> Option<&ItemNode> {
        match self {
            Object::Item(i) => Some(i),
            _ => None,
        }
    }

    pub fn as_action(&self) -> Option<&ActionNode> {
        match self {
            Object::Action(a) => Some(a),
            _ => None,
        }
    }

    pub fn as_section(&self) -> Option<&Section> {
        match self {
            Object::Section(s) => Some(s),
            _ => None,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Object::Section(_) => "Section",
            Object::Item(_) => "Item",
            Object::Action(_) => "Action",
        }
    }
}

impl From<Section> for Object {
    fn from(value: Section) -> Self {
        Object::Section(value)
    }
}

impl From<ItemNode> for Object {
    fn from(value: ItemNode) -> Self {
        Object::Item(value)
    }
}

impl From<ActionNode> for Object {
    fn from(value: ActionNode) -> Self {
        Object::Action(value)
    }
}

/// Root workflow of a UWL file.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Document {
    pub name: String,
    /// Origin path recorded in the file ("File" key).
    pub file: String,
    pub description: String,
    pub objects: Objects,
    pub extras: Extras,
}

impl Document {
    pub fn new(name: impl Into<String>) -> Self {
        Document { name: name.into(), ..Default::default() }
    }

    /// Inserts a top-level object under its own id, returning any object it
    /// replaced.
    pub fn insert(&mut self, object: impl Into<Object>) -> Option<Object> {
        let object = object.into();
        self.objects.insert(object.id(), object)
    }

    pub fn with(mut self, object: impl Into<Object>) -> Self {
        self.insert(object);
        self
    }

    /// Every object in the document, depth first, in storage (id) order.
    pub fn all_objects(&self) -> Vec<&Object> {
        fn collect<'a>(objects: &'a Objects, out: &mut Vec<&'a Object>) {
            for object in objects.values() {
                out.push(object);
                if let Object::Section(s) = object {
                    collect(&s.objects, out);
                }
            }
        }
        let mut out = Vec::new();
        collect(&self.objects, &mut out);
        out
    }

    pub fn items(&self) -> impl Iterator<Item = &ItemNode> {
        self.all_objects().into_iter().filter_map(Object::as_item)
    }

    pub fn actions(&self) -> impl Iterator<Item = &ActionNode> {
        self.all_objects().into_iter().filter_map(Object::as_action)
    }

    pub fn find(&self, id: ObjectId) -> Option<&Object> {
        fn find_in(objects: &Objects, id: ObjectId) -> Option<&Object> {
            if let Some(o) = objects.get(&id) {
                return Some(o);
            }
            objects.values().find_map(|o| match o {
                Object::Section(s) => find_in(&s.objects, id),
                _ => None,
            })
        }
        find_in(&self.objects, id)
    }

    pub fn find_mut(&mut self, id: ObjectId) -> Option<&mut Object> {
        fn find_in(objects: &mut Objects, id: ObjectId) -> Option<&mut Object> {
            if objects.contains_key(&id) {
                return objects.get_mut(&id);
            }
            objects.values_mut().find_map(|o| match o {
                Object::Section(s) => find_in(&mut s.objects, id),
                _ => None,
            })
        }
        find_in(&mut self.objects, id)
    }

    pub fn item(&self, id: ObjectId) -> Option<&ItemNode> {
        self.find(id).and_then(Object::as_item)
    }

    pub fn item_mut(&mut self, id: ObjectId) -> Option<&mut ItemNode> {
        match self.find_mut(id) {
            Some(Object::Item(item)) => Some(item),
            _ => None,
        }
    }

    pub fn action(&self, id: ObjectId) -> Option<&ActionNode> {
        self.find(id).and_then(Object::as_action)
    }

    /// Smallest id greater than every id in use.
    pub fn next_id(&self) -> ObjectId {
        ObjectId(self.all_objects().iter().map(|o| o.id().0 + 1).max().unwrap_or(0))
    }

    /// Items reachable through mutable references, depth first.
    pub fn for_each_item_mut(&mut self, mut f: impl FnMut(&mut ItemNode)) {
        fn visit(objects: &mut Objects, f: &mut dyn FnMut(&mut ItemNode)) {
            for object in objects.values_mut() {
                match object {
                    Object::Item(item) => f(item),
                    Object::Section(s) => visit(&mut s.objects, f),
                    Object::Action(_) => {}
                }
            }
        }
        visit(&mut self.objects, &mut f);
    }

    /// Actions reachable through mutable references, depth first.
    pub fn for_each_action_mut(&mut self, mut f: impl FnMut(&mut ActionNode)) {
        fn visit(objects: &mut Objects, f: &mut dyn FnMut(&mut ActionNode)) {
            for object in objects.values_mut() {
                match object {
                    Object::Action(action) => f(action),
                    Object::Section(s) => visit(&mut s.objects, f),
                    Object::Item(_) => {}
                }
            }
        }
        visit(&mut self.objects, &mut f);
    }

    pub fn validate(&self) -> ValidationReport {
        validate(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn subtype_parsing_accepts_material_synonym() {
        assert_eq!(ItemSubtype::parse("material"), ItemSubtype::Source);
        assert_eq!(ItemSubtype::parse("Tool"), ItemSubtype::Tool);
        assert_eq!(ItemSubtype::parse("Gizmo"), ItemSubtype::Other("Gizmo".into()));
        assert_eq!(ItemSubtype::parse("Gizmo").as_str(), "Gizmo");
    }

    #[test]
    fn parent_class_empty_is_none() {
        assert_eq!(ParentClass::parse(""), None);
        assert_eq!(ParentClass::parse("modify"), Some(ParentClass::Modify));
    }

    #[test]
    fn find_descends_into_sections() {
        let doc = Document::new("x").with(
            Section::new(1, "outer").with(Section::new(2, "inner").with(ItemNode::new(
                3,
                ItemSubtype::Tool,
                "Scale",
            ))),
        );
        assert_eq!(doc.item(ObjectId(3)).map(|i| i.name.as_str()), Some("Scale"));
        assert_eq!(doc.next_id(), ObjectId(4));
        assert!(doc.action(ObjectId(3)).is_none());
    }

    #[test]
    fn parameters_set_only_existing() {
        let mut params: Parameters = [("Mass", "####")].into_iter().collect();
        assert!(params.set("Mass", "6.8 g"));
        assert!(!params.set("Volume", "1 mL"));
        assert_eq!(params.get("Mass"), Some("6.8 g"));
    }
}
