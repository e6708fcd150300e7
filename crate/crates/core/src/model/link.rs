use thiserror::Error;

use super::{Document, ObjectId};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LinkError {
    #[error("UNKNOWN_LINK: no item carries link id {0}")]
    UnknownLink(u64),
    #[error("item {item} is not a member of link {link}")]
    NotInLink { item: ObjectId, link: u64 },
}

impl Document {
    /// Copies name, subtype and parameters of `edited_item` onto every other
    /// item sharing `link`. Returns how many items were overwritten.
    pub fn propagate_link(&mut self, link: u64, edited_item: ObjectId) -> Result<usize, LinkError> {
        if !self.items().any(|i| i.link == Some(link)) {
            return Err(LinkError::UnknownLink(link));
        }
        let source = match self.item(edited_item) {
            Some(item) if item.link == Some(link) => item.clone(),
            _ => return Err(LinkError::NotInLink { item: edited_item, link }),
        };
        let mut updated = 0;
        self.for_each_item_mut(|item| {
            if item.link == Some(link) && item.id != source.id {
                item.name.clone_from(&source.name);
                item.subtype = source.subtype.clone();
                item.params = source.params.clone();
                updated += 1;
            }
        });
        Ok(updated)
    }
}
