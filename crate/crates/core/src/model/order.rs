use std::cmp::Ordering;

use super::{Document, Object, Objects, Section};

fn compare(a: &Object, b: &Object) -> Ordering {
    let (pa, pb) = (a.position(), b.position());
    pa.x.total_cmp(&pb.x)
        .then_with(|| pa.y.total_cmp(&pb.y))
        .then_with(|| a.id().cmp(&b.id()))
}

/// Sorts objects by x, then y, then id. Ids break ties so the order is total.
pub fn sort_in_evaluation_order(objects: &mut [&Object]) {
    objects.sort_by(|a, b| compare(a, b));
}

/// Direct children of a workflow scope in evaluation order.
pub fn evaluation_order(objects: &Objects) -> Vec<&Object> {
    let mut children: Vec<&Object> = objects.values().collect();
    sort_in_evaluation_order(&mut children);
    children
}

/// One object reached while walking a document in evaluation order.
#[derive(Debug, Clone)]
pub struct WalkEntry<'a> {
    pub object: &'a Object,
    /// Enclosing sections, outermost first.
    pub sections: Vec<&'a Section>,
}

impl WalkEntry<'_> {
    pub fn depth(&self) -> usize {
        self.sections.len()
    }

    pub fn section_names(&self) -> Vec<String> {
        self.sections.iter().map(|s| s.name.clone()).collect()
    }
}

impl Document {
    /// Top-level children in evaluation order.
    pub fn evaluation_order(&self) -> Vec<&Object> {
        evaluation_order(&self.objects)
    }

    /// Pre-order walk: each section is yielded, then its children in their
    /// own evaluation order, before the walk continues with the section's
    /// next sibling.
    pub fn walk(&self) -> Vec<WalkEntry<'_>> {
        fn visit<'a>(objects: &'a Objects, path: &mut Vec<&'a Section>, out: &mut Vec<WalkEntry<'a>>) {
            for object in evaluation_order(objects) {
                out.push(WalkEntry { object, sections: path.clone() });
                if let Object::Section(section) = object {
                    path.push(section);
                    visit(&section.objects, path, out);
                    path.pop();
                }
            }
        }
        let mut out = Vec::new();
        visit(&self.objects, &mut Vec::new(), &mut out);
        out
    }
}
