use std::fmt;

use thiserror::Error;

use crate::model::EdgeType;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("bad template {template:?}: {message}")]
pub struct TemplateError {
    pub template: String,
    pub message: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Slot {
    Verb,
    Edge(EdgeType),
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Piece {
    Text(String),
    Slot(Slot),
    /// Text around exactly one slot, emitted only when the slot is non-empty.
    Group { before: String, slot: Slot, after: String },
}

/// Step phrase pattern, e.g. `{VERB}[ {B}][ to {A}][ using {C}]`.
///
/// `{VERB}` must appear exactly once. `{A}`, `{B}` and `{C}` are replaced by
/// the joined item names of that edge type. A bracketed group holds exactly
/// one slot and disappears when that slot renders empty.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Template {
    source: String,
    pieces: Vec<Piece>,
}

impl Template {
    pub fn parse(source: &str) -> Result<Self, TemplateError> {
        let fail = |message: &str| TemplateError { template: source.to_string(), message: message.to_string() };
        let mut pieces = Vec::new();
        let mut text = String::new();
        // (before, slot, after) while inside a group
        let mut group: Option<(String, Option<Slot>, String)> = None;
        let mut chars = source.chars();
        while let Some(c) = chars.next() {
            match c {
                '[' => {
                    if group.is_some() {
                        return Err(fail("groups cannot nest"));
                    }
                    if !text.is_empty() {
                        pieces.push(Piece::Text(std::mem::take(&mut text)));
                    }
                    group = Some((String::new(), None, String::new()));
                }
                ']' => {
                    let (before, slot, after) = group.take().ok_or_else(|| fail("unmatched ']'"))?;
                    let slot = slot.ok_or_else(|| fail("a group needs one slot"))?;
                    pieces.push(Piece::Group { before, slot, after });
                }
                '{' => {
                    let name: String = chars.by_ref().take_while(|&c| c != '}').collect();
                    let slot = match name.as_str() {
                        "VERB" => Slot::Verb,
                        "A" => Slot::Edge(EdgeType::A),
                        "B" => Slot::Edge(EdgeType::B),
                        "C" => Slot::Edge(EdgeType::C),
                        _ => return Err(fail(&format!("unknown slot {{{name}}}"))),
                    };
                    match group.as_mut() {
                        Some((_, Some(_), _)) => return Err(fail("a group holds exactly one slot")),
                        Some((_, current, _)) => *current = Some(slot),
                        None => {
                            if !text.is_empty() {
                                pieces.push(Piece::Text(std::mem::take(&mut text)));
                            }
                            pieces.push(Piece::Slot(slot));
                        }
                    }
                }
                '}' => return Err(fail("unmatched '}'")),
                c => match group.as_mut() {
                    Some((before, None, _)) => before.push(c),
                    Some((_, Some(_), after)) => after.push(c),
                    None => text.push(c),
                },
            }
        }
        if group.is_some() {
            return Err(fail("unterminated group"));
        }
        if !text.is_empty() {
            pieces.push(Piece::Text(text));
        }
        let template = Template { source: source.to_string(), pieces };
        let verbs = template.slots().filter(|s| *s == Slot::Verb).count();
        if verbs != 1 {
            return Err(fail("{VERB} must appear exactly once"));
        }
        let mut edges: Vec<EdgeType> = template.edge_slots().collect();
        edges.sort();
        if edges.windows(2).any(|w| w[0] == w[1]) {
            return Err(fail("an edge slot appears twice"));
        }
        Ok(template)
    }

    pub fn as_str(&self) -> &str {
        &self.source
    }

    fn slots(&self) -> impl Iterator<Item = Slot> + '_ {
        self.pieces.iter().filter_map(|p| match p {
            Piece::Slot(s) | Piece::Group { slot: s, .. } => Some(*s),
            Piece::Text(_) => None,
        })
    }

    /// Edge slots referenced by the template.
    pub fn edge_slots(&self) -> impl Iterator<Item = EdgeType> + '_ {
        self.slots().filter_map(|s| match s {
            Slot::Edge(e) => Some(e),
            Slot::Verb => None,
        })
    }

    /// Fills the template. `slots` holds already-joined item lists for A, B
    /// and C; empty strings mean no items. The flag reports whether any edge
    /// slot produced text.
    pub fn render(&self, verb: &str, slots: &[String; 3]) -> (String, bool) {
        let value = |slot: Slot| match slot {
            Slot::Verb => verb,
            Slot::Edge(e) => slots[e as usize].as_str(),
        };
        let mut out = String::new();
        let mut any_edge = false;
        for piece in &self.pieces {
            match piece {
                Piece::Text(t) => out.push_str(t),
                Piece::Slot(s) => {
                    let v = value(*s);
                    any_edge |= matches!(s, Slot::Edge(_)) && !v.is_empty();
                    out.push_str(v);
                }
                Piece::Group { before, slot, after } => {
                    let v = value(*slot);
                    if !v.is_empty() {
                        any_edge |= matches!(slot, Slot::Edge(_));
                        out.push_str(before);
                        out.push_str(v);
                        out.push_str(after);
                    }
                }
            }
        }
        (out, any_edge)
    }
}

impl fmt::Display for Template {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.source)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn slots(a: &str, b: &str, c: &str) -> [String; 3] {
        [a.into(), b.into(), c.into()]
    }

    #[test]
    fn groups_drop_when_empty() {
        let t = Template::parse("{VERB}[ {B}][ to {A}][ using {C}]").unwrap();
        assert_eq!(t.render("Add", &slots("Beaker", "Stir bar", "")), ("Add Stir bar to Beaker".into(), true));
        assert_eq!(t.render("Add", &slots("", "", "")), ("Add".into(), false));
    }

    #[test]
    fn bare_slots_and_trailing_text() {
        let t = Template::parse("{VERB} {A}!").unwrap();
        assert_eq!(t.render("Heat", &slots("Oven", "", "")).0, "Heat Oven!");
        assert_eq!(t.edge_slots().collect::<Vec<_>>(), vec![EdgeType::A]);
    }

    #[test]
    fn rejects_malformed() {
        for bad in [
            "[ {A}]",
            "{VERB}{VERB}",
            "{VERB}[ {A} {B}]",
            "{VERB}[ to]",
            "{VERB}[ [ {A}]]",
            "{VERB}[ {A}",
            "{VERB} {D}",
            "{VERB}]",
            "{VERB} {A} {A}",
        ] {
            assert!(Template::parse(bad).is_err(), "{bad}");
        }
    }
}
