use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{Document, ItemNode, ItemSubtype, Object, ObjectId, Objects, ParentClass};

/// Stable identifier of a structural rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum RuleCode {
    /// Two objects share an id.
    DupId,
    /// An edge references an id that is not an item of the document.
    DanglingEdge,
    /// "Parameters" and "Values" arrays differ in length (file input only).
    ParamLenMismatch,
    /// Items in one link group disagree on name, subtype or parameters.
    LinkMismatch,
    /// Unknown item subtype or action parent class.
    BadSubtype,
    /// A section contains an object carrying the section's own id (or an
    /// ancestor's).
    SectionCycle,
    /// One action references the same item more than once.
    DupEdge,
    /// Parameter names repeat within one node.
    DupParam,
    /// Non-finite coordinates.
    BadPosition,
}

impl RuleCode {
    pub fn as_str(self) -> &'static str {
        match self {
            RuleCode::DupId => "DUP_ID",
            RuleCode::DanglingEdge => "DANGLING_EDGE",
            RuleCode::ParamLenMismatch => "PARAM_LEN_MISMATCH",
            RuleCode::LinkMismatch => "LINK_MISMATCH",
            RuleCode::BadSubtype => "BAD_SUBTYPE",
            RuleCode::SectionCycle => "SECTION_CYCLE",
            RuleCode::DupEdge => "DUP_EDGE",
            RuleCode::DupParam => "DUP_PARAM",
            RuleCode::BadPosition => "BAD_POSITION",
        }
    }
}

impl fmt::Display for RuleCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub object: Option<ObjectId>,
    pub code: RuleCode,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.object {
            Some(id) => write!(f, "{}@{}: {}", self.code, id, self.message),
            None => write!(f, "{}: {}", self.code, self.message),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn codes(&self) -> Vec<RuleCode> {
        self.violations.iter().map(|v| v.code).collect()
    }

    fn push(&mut self, object: Option<ObjectId>, code: RuleCode, message: impl Into<String>) {
        self.violations.push(Violation { object, code, message: message.into() });
    }
}

/// Checks every structural invariant of a document. Violations are returned
/// as data; an empty report means the document is well formed.
pub fn validate(doc: &Document) -> ValidationReport {
    let mut report = ValidationReport::default();
    let mut kinds: HashMap<ObjectId, &Object> = HashMap::new();
    check_ids(&doc.objects, &mut Vec::new(), &mut kinds, &mut report);

    let objects = doc.all_objects();
    for object in &objects {
        let id = object.id();
        if !object.position().is_finite() {
            report.push(Some(id), RuleCode::BadPosition, "position is not finite");
        }
        if let Some(params) = object.params() {
            let mut seen = HashSet::new();
            for name in params.names() {
                if !seen.insert(name) {
                    report.push(Some(id), RuleCode::DupParam, format!("parameter {name:?} repeats"));
                }
            }
        }
        match object {
            Object::Item(item) => {
                if let ItemSubtype::Other(raw) = &item.subtype {
                    report.push(Some(id), RuleCode::BadSubtype, format!("unknown item subtype {raw:?}"));
                }
            }
            Object::Action(action) => {
                if let Some(ParentClass::Other(raw)) = &action.parent_class {
                    report.push(Some(id), RuleCode::BadSubtype, format!("unknown parent class {raw:?}"));
                }
                let mut seen = HashSet::new();
                for (edge, target) in action.all_edges() {
                    if !matches!(kinds.get(&target), Some(Object::Item(_))) {
                        report.push(
                            Some(id),
                            RuleCode::DanglingEdge,
                            format!("{} edge to {target} does not resolve to an item", edge.as_str()),
                        );
                    }
                    if !seen.insert(target) {
                        report.push(Some(id), RuleCode::DupEdge, format!("item {target} connected more than once"));
                    }
                }
            }
            Object::Section(_) => {}
        }
    }

    let mut groups: BTreeMap<u64, Vec<&ItemNode>> = BTreeMap::new();
    for item in objects.iter().filter_map(|o| o.as_item()) {
        if let Some(link) = item.link {
            groups.entry(link).or_default().push(item);
        }
    }
    for (link, mut members) in groups {
        members.sort_by_key(|i| i.id);
        let first = members[0];
        for other in &members[1..] {
            let mut diffs = Vec::new();
            if other.name != first.name {
                diffs.push("name");
            }
            if other.subtype != first.subtype {
                diffs.push("subtype");
            }
            if other.params != first.params {
                diffs.push("parameters");
            }
            if !diffs.is_empty() {
                report.push(
                    Some(other.id),
                    RuleCode::LinkMismatch,
                    format!("link {link}: {} differ from item {}", diffs.join(", "), first.id),
                );
            }
        }
    }
    report
}

fn check_ids<'a>(
    objects: &'a Objects,
    ancestors: &mut Vec<ObjectId>,
    seen: &mut HashMap<ObjectId, &'a Object>,
    report: &mut ValidationReport,
) {
    for (key, object) in objects {
        let id = object.id();
        if *key != id {
            report.push(Some(id), RuleCode::DupId, format!("stored under key {key} but carries id {id}"));
        }
        if ancestors.contains(&id) {
            report.push(Some(id), RuleCode::SectionCycle, format!("section {id} contains itself"));
        } else if let std::collections::hash_map::Entry::Vacant(slot) = seen.entry(id) {
            slot.insert(object);
        } else {
            report.push(Some(id), RuleCode::DupId, format!("id {id} used more than once"));
        }
        if let Object::Section(section) = object {
            ancestors.push(id);
            check_ids(&section.objects, ancestors, seen, report);
            ancestors.pop();
        }
    }
}
