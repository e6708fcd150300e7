//! Universal Workflow Language (UWL).
//!
//! A UWL file records a laboratory procedure as a graph: item nodes
//! (containers, tools, sources, abstract records) are wired into action nodes
//! through three edge types, and the position of each node on a 2-D canvas
//! fixes the order in which steps are carried out.
//!
//! The crate is organised around that document:
//!
//! - [`model`]: the in-memory document, evaluation order, link propagation
//!   and structural validation.
//! - [`io`]: reading and canonical writing of the JSON interchange format.
//! - [`transcribe`]: step sentences, full protocol text and translation tables.
//! - [`table`]: the two-way parameter table and its CSV form.
//! - [`lint`]: completeness metrics over transcribed protocols.
//! - [`bench`]: synthetic workflow generator, surrogate response and ML exports.

pub mod bench;
pub mod io;
pub mod lint;
pub mod model;
pub mod table;
pub mod transcribe;

pub use io::{parse, serialize, ParseError};
pub use model::{
    ActionNode, Document, ItemNode, ItemSubtype, Object, ObjectId, Parameter, Parameters,
    ParentClass, Position, RuleCode, Section, ValidationReport, Violation,
};
