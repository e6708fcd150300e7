use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::{Arc, RwLock};

use serde::Serialize;
use thiserror::Error;
use tokio::sync::Mutex;
use uwl_core::{parse, serialize, Document, ParseError, ValidationReport};

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("no workflow {0:?}")]
    NotFound(String),
    #[error("workflow id {0:?} must be letters, digits, '-', '_' or '.' and not start with '.'")]
    BadId(String),
    #[error("revision {expected} requested but the workflow is at revision {actual}")]
    Stale { expected: u64, actual: u64 },
    #[error("If-Match revision required to replace workflow {0:?}")]
    RevisionRequired(String),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("document has validation errors")]
    Invalid(ValidationReport),
    #[error("cannot write {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

#[derive(Debug, Clone, Serialize)]
pub struct WorkflowSummary {
    pub id: String,
    pub name: String,
    pub revision: u64,
}

#[derive(Debug, Default)]
struct Entry {
    /// 0 until the workflow exists.
    revision: u64,
    text: String,
    name: String,
}

/// A folder of canonical UWL files, `<id>.json`, with in-memory revision
/// counters. Revisions start at 1 when the store opens and grow by one per
/// successful write. Writes to one workflow are serialized.
#[derive(Debug)]
pub struct DocumentStore {
    root: PathBuf,
    entries: RwLock<BTreeMap<String, Arc<Mutex<Entry>>>>,
}

pub fn valid_id(id: &str) -> bool {
    !id.is_empty()
        && !id.starts_with('.')
        && id.len() <= 200
        && id.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'))
}

impl DocumentStore {
    /// Loads every `*.json` file in `root`, creating the folder if needed.
    /// Files that do not parse are skipped and returned with the reason.
    pub fn open(root: impl Into<PathBuf>) -> std::io::Result<(Self, Vec<(PathBuf, String)>)> {
        let root = root.into();
        std::fs::create_dir_all(&root)?;
        let mut entries = BTreeMap::new();
        let mut skipped = Vec::new();
        for dirent in std::fs::read_dir(&root)? {
            let path = dirent?.path();
            let Some(id) = path.file_name().and_then(|n| n.to_str()).and_then(|n| n.strip_suffix(".json")) else {
                continue;
            };
            if !valid_id(id) {
                continue;
            }
            let text = std::fs::read_to_string(&path)?;
            match parse(&text) {
                Ok(doc) => {
                    let entry = Entry { revision: 1, text: serialize(&doc), name: doc.name };
                    entries.insert(id.to_string(), Arc::new(Mutex::new(entry)));
                }
                Err(e) => skipped.push((path, e.to_string())),
            }
        }
        Ok((DocumentStore { root, entries: RwLock::new(entries) }, skipped))
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn existing(&self, id: &str) -> Result<Arc<Mutex<Entry>>, StoreError> {
        if !valid_id(id) {
            return Err(StoreError::BadId(id.to_string()));
        }
        let index = self.entries.read().expect("store index lock");
        index.get(id).cloned().ok_or_else(|| StoreError::NotFound(id.to_string()))
    }

    fn entry(&self, id: &str) -> Result<Arc<Mutex<Entry>>, StoreError> {
        match self.existing(id) {
            Err(StoreError::NotFound(_)) => {}
            other => return other,
        }
        let mut index = self.entries.write().expect("store index lock");
        Ok(index.entry(id.to_string()).or_default().clone())
    }

    pub async fn list(&self) -> Vec<WorkflowSummary> {
        let entries: Vec<(String, Arc<Mutex<Entry>>)> =
            self.entries.read().expect("store index lock").iter().map(|(k, v)| (k.clone(), v.clone())).collect();
        let mut out = Vec::new();
        for (id, entry) in entries {
            let e = entry.lock().await;
            if e.revision > 0 {
                out.push(WorkflowSummary { id, name: e.name.clone(), revision: e.revision });
            }
        }
        out
    }

    /// Canonical text and revision.
    pub async fn get(&self, id: &str) -> Result<(String, u64), StoreError> {
        let entry = self.existing(id)?;
        let e = entry.lock().await;
        if e.revision == 0 {
            return Err(StoreError::NotFound(id.to_string()));
        }
        Ok((e.text.clone(), e.revision))
    }

    pub async fn document(&self, id: &str) -> Result<(Document, u64), StoreError> {
        let (text, revision) = self.get(id).await?;
        Ok((parse(&text)?, revision))
    }

    /// Creates or replaces a workflow. Replacing needs the current revision.
    pub async fn put(&self, id: &str, text: &str, if_match: Option<u64>) -> Result<u64, StoreError> {
        let doc = parse(text)?;
        let entry = self.entry(id)?;
        let mut e = entry.lock().await;
        if e.revision > 0 {
            match if_match {
                None => return Err(StoreError::RevisionRequired(id.to_string())),
                Some(r) if r != e.revision => return Err(StoreError::Stale { expected: r, actual: e.revision }),
                Some(_) => {}
            }
        } else if let Some(r) = if_match {
            return Err(StoreError::Stale { expected: r, actual: 0 });
        }
        self.commit(id, &mut e, doc)
    }

    /// Applies `edit` to the stored document under the workflow's lock.
    pub async fn update<E>(
        &self,
        id: &str,
        if_match: Option<u64>,
        edit: impl FnOnce(&mut Document) -> Result<(), E>,
    ) -> Result<Result<u64, E>, StoreError> {
        let entry = self.existing(id)?;
        let mut e = entry.lock().await;
        if e.revision == 0 {
            return Err(StoreError::NotFound(id.to_string()));
        }
        if let Some(r) = if_match.filter(|r| *r != e.revision) {
            return Err(StoreError::Stale { expected: r, actual: e.revision });
        }
        let mut doc = parse(&e.text)?;
        if let Err(err) = edit(&mut doc) {
            return Ok(Err(err));
        }
        self.commit(id, &mut e, doc).map(Ok)
    }

    fn commit(&self, id: &str, e: &mut Entry, doc: Document) -> Result<u64, StoreError> {
        let report = doc.validate();
        if !report.is_clean() {
            return Err(StoreError::Invalid(report));
        }
        let text = serialize(&doc);
        let path = self.root.join(format!("{id}.json"));
        write_atomic(&path, &text).map_err(|source| StoreError::Io { path: path.display().to_string(), source })?;
        e.revision += 1;
        e.text = text;
        e.name = doc.name;
        Ok(e.revision)
    }
}

fn write_atomic(path: &Path, text: &str) -> std::io::Result<()> {
    let dir = path.parent().unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(text.as_bytes())?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}
