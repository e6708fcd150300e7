//! Synthetic workflow benchmark.
//!
//! Random action sequences are scored by a surrogate response function that
//! mimics how step order, step type, item choice and parameter settings
//! interact in a real procedure. Samples can be exported as UWL documents,
//! as graphs, or as fixed-length padded vectors for learning experiments.

use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;

use num_bigint::BigUint;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize, Serializer};
use thiserror::Error;

use crate::model::{ActionNode, Document, EdgeType, ItemNode, ItemSubtype, Object, ParentClass};

/// Names are single digits so the surrogate's divisions by ten stay below one.
pub const MAX_TYPES: u32 = 9;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BenchError {
    #[error("CONFIG_INVALID: {0}")]
    ConfigInvalid(String),
    #[error("BOUNDS: {0}")]
    Bounds(String),
    #[error("cannot decode sample: {0}")]
    Decode(String),
}

impl BenchError {
    pub fn code(&self) -> &'static str {
        match self {
            BenchError::ConfigInvalid(_) => "CONFIG_INVALID",
            BenchError::Bounds(_) => "BOUNDS",
            BenchError::Decode(_) => "DECODE",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorConfig {
    pub max_actions: u32,
    pub items_per_action: u32,
    pub scalar_params_per_action: u32,
    pub action_types: u32,
    pub item_types: u32,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    Low,
    Mid,
    High,
}

impl Preset {
    pub const ALL: [Preset; 3] = [Preset::Low, Preset::Mid, Preset::High];

    pub fn config(self, seed: u64, count: usize) -> GeneratorConfig {
        let (max_actions, items_per_action, scalar_params_per_action, action_types, item_types) = match self {
            Preset::Low => (3, 1, 1, 5, 3),
            Preset::Mid => (5, 3, 1, 7, 5),
            Preset::High => (7, 5, 1, 9, 7),
        };
        GeneratorConfig { max_actions, items_per_action, scalar_params_per_action, action_types, item_types, seed, count }
    }
}

impl FromStr for Preset {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "low" => Ok(Preset::Low),
            "mid" | "medium" => Ok(Preset::Mid),
            "high" => Ok(Preset::High),
            other => Err(format!("unknown preset {other:?} (expected low, mid or high)")),
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Preset::Low => "low",
            Preset::Mid => "mid",
            Preset::High => "high",
        })
    }
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<(), BenchError> {
        for (name, v) in [
            ("max_actions", self.max_actions),
            ("items_per_action", self.items_per_action),
            ("scalar_params_per_action", self.scalar_params_per_action),
            ("action_types", self.action_types),
            ("item_types", self.item_types),
        ] {
            if v < 1 {
                return Err(BenchError::ConfigInvalid(format!("{name} must be at least 1")));
            }
        }
        if self.action_types > MAX_TYPES || self.item_types > MAX_TYPES {
            return Err(BenchError::ConfigInvalid(format!("action_types and item_types must be at most {MAX_TYPES}")));
        }
        Ok(())
    }

    /// Length of the padded vector produced by [`to_flat`].
    pub fn flat_len(&self) -> usize {
        self.max_actions as usize * self.slot_len()
    }

    fn slot_len(&self) -> usize {
        (self.action_types as usize + 1)
            + self.scalar_params_per_action as usize
            + self.items_per_action as usize * (self.item_types as usize + 1)
    }
}

/// One step: action name, scalar parameters and item names.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchAction {
    pub name: u32,
    pub params: Vec<f64>,
    pub items: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchSample {
    pub actions: Vec<BenchAction>,
    pub response: f64,
}

/// Surrogate response of an action sequence. An empty sequence scores 1.
pub fn surrogate(actions: &[BenchAction]) -> Result<f64, BenchError> {
    check_bounds(actions)?;
    Ok(surrogate_unchecked(actions))
}

fn check_bounds(actions: &[BenchAction]) -> Result<(), BenchError> {
    for (i, a) in actions.iter().enumerate() {
        let step = i + 1;
        if !(1..=MAX_TYPES).contains(&a.name) {
            return Err(BenchError::Bounds(format!("step {step}: action name {} outside 1..={MAX_TYPES}", a.name)));
        }
        if let Some(p) = a.params.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(BenchError::Bounds(format!("step {step}: parameter {p} outside [0, 1]")));
        }
        if let Some(n) = a.items.iter().find(|n| !(1..=MAX_TYPES).contains(*n)) {
            return Err(BenchError::Bounds(format!("step {step}: item name {n} outside 1..={MAX_TYPES}")));
        }
    }
    Ok(())
}

fn surrogate_unchecked(actions: &[BenchAction]) -> f64 {
    let mut r = 1.0;
    for (i, a) in actions.iter().enumerate() {
        let apf: f64 = a.params.iter().map(|p| 1.0 - (0.75 - p).abs()).product();
        if (1..=3).contains(&a.name) {
            let bonus = sequence_bonus(actions, i);
            let anf = a.name as f64 / 10.0;
            let inf: f64 = a.items.iter().map(|&n| n as f64 / 10.0).product();
            r = bonus + (apf * (anf + inf)).powf(r);
        } else {
            r += apf / 50.0;
        }
    }
    r
}

/// Bonus for step `i` (from 0) of a name-1/2/3 step, earned by the preceding
/// names reading 1, 2, 3 backwards. Steps before the first never match.
pub fn sequence_bonus(actions: &[BenchAction], i: usize) -> f64 {
    let back = |n: usize| i.checked_sub(n).map(|j| actions[j].name);
    if back(1) != Some(1) {
        0.0
    } else if back(2) != Some(2) {
        0.05
    } else if back(3) != Some(3) {
        0.10
    } else {
        0.15
    }
}

fn sample_at(config: &GeneratorConfig, index: u64) -> BenchSample {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(index);
    let n = rng.random_range(1..=config.max_actions);
    let actions: Vec<BenchAction> = (0..n)
        .map(|_| BenchAction {
            name: rng.random_range(1..=config.action_types),
            params: (0..config.scalar_params_per_action).map(|_| rng.random::<f64>()).collect(),
            items: (0..config.items_per_action).map(|_| rng.random_range(1..=config.item_types)).collect(),
        })
        .collect();
    let response = surrogate_unchecked(&actions);
    BenchSample { actions, response }
}

/// Draws `config.count` samples. Sample `i` uses ChaCha8 seeded with
/// `config.seed` on stream `i`, so any sample can be regenerated alone and
/// results do not depend on thread count.
pub fn generate_samples(config: &GeneratorConfig) -> Result<Vec<BenchSample>, BenchError> {
    config.validate()?;
    Ok((0..config.count as u64).into_par_iter().map(|i| sample_at(config, i)).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Generated {
    pub sample: BenchSample,
    pub document: Document,
}

/// Samples together with their UWL documents.
pub fn generate(config: &GeneratorConfig) -> Result<Vec<Generated>, BenchError> {
    config.validate()?;
    Ok((0..config.count as u64)
        .into_par_iter()
        .map(|i| {
            let sample = sample_at(config, i);
            let mut document = to_document(&sample.actions);
            document.name = format!("Sample {i}");
            document.extras.insert(
                "Generator".into(),
                serde_json::json!({ "Seed": config.seed, "Index": i }),
            );
            Generated { sample, document }
        })
        .collect())
}

/// Action `i` (from 1) is "A<name>" at (i, 0) with parameters P1, P2, ...;
/// its items are "I<name>" sources at (i, k) for k from 1, wired as B edges.
pub fn to_document(actions: &[BenchAction]) -> Document {
    let mut doc = Document::new("Generated workflow");
    let mut next = 1u64;
    for (i, a) in actions.iter().enumerate() {
        let x = (i + 1) as f64;
        let action_id = next;
        next += 1;
        let mut item_ids = Vec::new();
        for (k, n) in a.items.iter().enumerate() {
            doc.insert(ItemNode::new(next, ItemSubtype::Source, format!("I{n}")).at(x, (k + 1) as f64));
            item_ids.push(next);
            next += 1;
        }
        let mut node =
            ActionNode::new(action_id, format!("A{}", a.name)).with_parent(ParentClass::Add).at(x, 0.0).with_edges(EdgeType::B, item_ids);
        for (j, p) in a.params.iter().enumerate() {
            node = node.with_param(format!("P{}", j + 1), p.to_string());
        }
        doc.insert(node);
    }
    doc
}

fn suffix(name: &str, prefix: char) -> Result<u32, BenchError> {
    name.strip_prefix(prefix)
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| BenchError::Decode(format!("{name:?} is not {prefix}<number>")))
}

/// Recovers the action sequence from a generated document: actions in
/// evaluation order, items of each action in evaluation order.
pub fn from_document(doc: &Document) -> Result<Vec<BenchAction>, BenchError> {
    let order: Vec<&Object> = doc.evaluation_order();
    let rank = |id| order.iter().position(|o| o.id() == id);
    let mut actions = Vec::new();
    for object in &order {
        let Object::Action(a) = object else { continue };
        let mut items: Vec<_> = a.all_edges().map(|(_, id)| id).collect();
        items.sort_by_key(|&id| rank(id));
        let items = items
            .into_iter()
            .map(|id| {
                let item = doc.item(id).ok_or_else(|| BenchError::Decode(format!("edge to missing item {}", id.0)))?;
                suffix(&item.name, 'I')
            })
            .collect::<Result<_, _>>()?;
        let params = a
            .params
            .values()
            .map(|v| v.parse::<f64>().map_err(|_| BenchError::Decode(format!("parameter value {v:?} is not a number"))))
            .collect::<Result<_, _>>()?;
        actions.push(BenchAction { name: suffix(&a.name, 'A')?, params, items });
    }
    Ok(actions)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeKind {
    Action,
    Item,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum GraphEdgeKind {
    A,
    B,
    C,
    #[serde(rename = "NEXT")]
    Next,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphNode {
    pub kind: NodeKind,
    pub category: u32,
    pub scalars: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GraphEdge {
    pub source: usize,
    pub target: usize,
    pub kind: GraphEdgeKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphRecord {
    pub nodes: Vec<GraphNode>,
    pub edges: Vec<GraphEdge>,
    pub target: f64,
}

/// Each action node is followed by its item nodes. Items point at their
/// action with B edges; consecutive actions are joined by NEXT edges.
pub fn to_graph(sample: &BenchSample) -> GraphRecord {
    let mut nodes = Vec::new();
    let mut edges = Vec::new();
    let mut previous = None;
    for a in &sample.actions {
        let action = nodes.len();
        nodes.push(GraphNode { kind: NodeKind::Action, category: a.name, scalars: a.params.clone() });
        if let Some(p) = previous {
            edges.push(GraphEdge { source: p, target: action, kind: GraphEdgeKind::Next });
        }
        previous = Some(action);
        for &n in &a.items {
            edges.push(GraphEdge { source: nodes.len(), target: action, kind: GraphEdgeKind::B });
            nodes.push(GraphNode { kind: NodeKind::Item, category: n, scalars: Vec::new() });
        }
    }
    GraphRecord { nodes, edges, target: sample.response }
}

/// Inverse of [`to_graph`]. Actions follow the NEXT chain; items of an
/// action keep node order.
pub fn from_graph(graph: &GraphRecord) -> Result<Vec<BenchAction>, BenchError> {
    let node = |i: usize| graph.nodes.get(i).ok_or_else(|| BenchError::Decode(format!("edge to missing node {i}")));
    let actions: Vec<usize> = (0..graph.nodes.len()).filter(|&i| graph.nodes[i].kind == NodeKind::Action).collect();
    let mut next = vec![None; graph.nodes.len()];
    let mut has_prev = vec![false; graph.nodes.len()];
    let mut items: Vec<Vec<usize>> = vec![Vec::new(); graph.nodes.len()];
    for e in &graph.edges {
        let (s, t) = (node(e.source)?, node(e.target)?);
        match e.kind {
            GraphEdgeKind::Next => {
                if s.kind != NodeKind::Action || t.kind != NodeKind::Action || next[e.source].is_some() {
                    return Err(BenchError::Decode("NEXT edges must form a chain of actions".into()));
                }
                next[e.source] = Some(e.target);
                has_prev[e.target] = true;
            }
            _ => {
                if s.kind != NodeKind::Item || t.kind != NodeKind::Action {
                    return Err(BenchError::Decode("item edges run from an item to an action".into()));
                }
                items[e.target].push(e.source);
            }
        }
    }
    let mut out = Vec::new();
    let mut current = actions.iter().copied().find(|&a| !has_prev[a]);
    while let Some(a) = current {
        if out.len() == actions.len() {
            return Err(BenchError::Decode("NEXT edges form a cycle".into()));
        }
        let mut its = items[a].clone();
        its.sort_unstable();
        out.push(BenchAction {
            name: graph.nodes[a].category,
            params: graph.nodes[a].scalars.clone(),
            items: its.iter().map(|&i| graph.nodes[i].category).collect(),
        });
        current = next[a];
    }
    if out.len() != actions.len() {
        return Err(BenchError::Decode("actions are not joined into one NEXT chain".into()));
    }
    Ok(out)
}

/// Fixed-length encoding. Each of `max_actions` slots holds a one-hot action
/// name (index 0 = absent), the scalar parameters, then a one-hot item name
/// (index 0 = absent) per item position. Unused slots are absent with zero
/// scalars.
pub fn to_flat(actions: &[BenchAction], config: &GeneratorConfig) -> Result<Vec<f64>, BenchError> {
    config.validate()?;
    if actions.len() > config.max_actions as usize {
        return Err(BenchError::Bounds(format!("{} actions, at most {} allowed", actions.len(), config.max_actions)));
    }
    let mut out = Vec::with_capacity(config.flat_len());
    for slot in 0..config.max_actions as usize {
        let a = actions.get(slot);
        let mut one_hot = |value: Option<u32>, types: u32, what: &str| -> Result<(), BenchError> {
            let v = value.unwrap_or(0);
            if v > types || (value.is_some() && v == 0) {
                return Err(BenchError::Bounds(format!("step {}: {what} {v} outside 1..={types}", slot + 1)));
            }
            out.extend((0..=types).map(|i| if i == v { 1.0 } else { 0.0 }));
            Ok(())
        };
        one_hot(a.map(|a| a.name), config.action_types, "action name")?;
        if let Some(a) = a {
            if a.items.len() > config.items_per_action as usize || a.params.len() != config.scalar_params_per_action as usize {
                return Err(BenchError::Bounds(format!("step {}: wrong number of items or parameters", slot + 1)));
            }
        }
        for k in 0..config.items_per_action as usize {
            one_hot(a.and_then(|a| a.items.get(k).copied()), config.item_types, "item name")?;
        }
        let params = a.map(|a| a.params.as_slice()).unwrap_or(&[]);
        if let Some(p) = params.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(BenchError::Bounds(format!("step {}: parameter {p} outside [0, 1]", slot + 1)));
        }
        let at = out.len() - config.items_per_action as usize * (config.item_types as usize + 1);
        let scalars: Vec<f64> =
            (0..config.scalar_params_per_action as usize).map(|j| params.get(j).copied().unwrap_or(0.0)).collect();
        out.splice(at..at, scalars);
    }
    Ok(out)
}

/// Inverse of [`to_flat`].
pub fn from_flat(flat: &[f64], config: &GeneratorConfig) -> Result<Vec<BenchAction>, BenchError> {
    config.validate()?;
    if flat.len() != config.flat_len() {
        return Err(BenchError::Decode(format!("vector length {}, expected {}", flat.len(), config.flat_len())));
    }
    let hot = |chunk: &[f64]| -> Result<u32, BenchError> {
        let ones: Vec<usize> = chunk.iter().enumerate().filter(|(_, v)| **v == 1.0).map(|(i, _)| i).collect();
        match (ones.as_slice(), chunk.iter().all(|v| *v == 0.0 || *v == 1.0)) {
            ([i], true) => Ok(*i as u32),
            _ => Err(BenchError::Decode("one-hot block is not one-hot".into())),
        }
    };
    let mut out = Vec::new();
    for slot in flat.chunks(config.slot_len()) {
        let (name, rest) = slot.split_at(config.action_types as usize + 1);
        let (params, items) = rest.split_at(config.scalar_params_per_action as usize);
        let name = hot(name)?;
        let items: Vec<u32> = items.chunks(config.item_types as usize + 1).map(hot).collect::<Result<_, _>>()?;
        if name == 0 {
            continue;
        }
        out.push(BenchAction { name, params: params.to_vec(), items: items.into_iter().filter(|&i| i != 0).collect() });
    }
    Ok(out)
}

fn as_decimal<S: Serializer>(v: &BigUint, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&v.to_string())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ComplexityMetrics {
    pub max_categorical: u64,
    pub max_scalar: u64,
    pub max_total: u64,
    #[serde(serialize_with = "as_decimal")]
    pub categorical_combinations: BigUint,
}

/// Binomial coefficient C(n, k).
fn choose(n: u64, k: u64) -> BigUint {
    let k = k.min(n - k);
    (0..k).fold(BigUint::from(1u32), |acc, i| acc * (n - i) / (i + 1))
}

/// Item sets are counted as multisets: the order of items on one action does
/// not matter.
pub fn complexity_metrics(config: &GeneratorConfig) -> Result<ComplexityMetrics, BenchError> {
    config.validate()?;
    let actions = config.max_actions as u64;
    let items = config.items_per_action as u64;
    let max_categorical = actions * (1 + items);
    let max_scalar = actions * config.scalar_params_per_action as u64;
    let per_action = BigUint::from(config.action_types) * choose(config.item_types as u64 + items - 1, items);
    Ok(ComplexityMetrics {
        max_categorical,
        max_scalar,
        max_total: max_categorical + max_scalar,
        categorical_combinations: per_action.pow(config.max_actions),
    })
}

/// One line of a dataset file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetRecord {
    pub actions: Vec<BenchAction>,
    pub response: f64,
    pub graph: GraphRecord,
    pub flat: Vec<f64>,
}

impl DatasetRecord {
    pub fn new(sample: &BenchSample, config: &GeneratorConfig) -> Result<Self, BenchError> {
        Ok(DatasetRecord {
            actions: sample.actions.clone(),
            response: sample.response,
            graph: to_graph(sample),
            flat: to_flat(&sample.actions, config)?,
        })
    }
}

/// Writes one JSON record per line. Floats keep full binary precision.
pub fn write_dataset<W: Write>(out: &mut W, samples: &[BenchSample], config: &GeneratorConfig) -> io::Result<()> {
    let lines: Vec<String> = samples
        .par_iter()
        .map(|s| {
            let record = DatasetRecord::new(s, config).map_err(|e| io::Error::new(io::ErrorKind::InvalidInput, e))?;
            serde_json::to_string(&record).map_err(io::Error::from)
        })
        .collect::<io::Result<_>>()?;
    for line in lines {
        out.write_all(line.as_bytes())?;
        out.write_all(b"\n")?;
    }
    Ok(())
}
