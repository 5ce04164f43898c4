//! Weighted directed graphs with group labels, text I/O and the
//! stochastic-block-model generator.
//!
//! Adjacency is stored in compressed sparse row form with every row sorted
//! by target id. Undirected inputs become symmetric arc pairs; everything
//! downstream (reweighting, walks, cascades) operates on arcs.

use std::collections::HashMap;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Where a graph's weights came from. Evaluation stages only accept
/// [`Provenance::Original`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Original,
    Reweighted(&'static str),
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Provenance::Original => f.write_str("original"),
            Provenance::Reweighted(method) => write!(f, "{method}-reweighted"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    offsets: Vec<usize>,
    targets: Vec<usize>,
    weights: Vec<f64>,
    directed: bool,
    provenance: Provenance,
}

/// Bookkeeping from graph construction.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BuildStats {
    pub self_loops_dropped: usize,
    pub duplicates_merged: usize,
}

impl Graph {
    /// Builds a graph from `(source, target, weight)` triples. Self-loops are
    /// dropped and repeated arcs merged by summing their weights. When
    /// `directed` is false each triple contributes both arcs.
    pub fn from_arcs<I>(node_count: usize, arcs: I, directed: bool) -> Result<(Graph, BuildStats)>
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        let mut stats = BuildStats::default();
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); node_count];
        for (u, v, w) in arcs {
            for id in [u, v] {
                if id >= node_count {
                    return Err(Error::IdOutOfRange {
                        id,
                        count: node_count,
                    });
                }
            }
            if !w.is_finite() || w < 0.0 {
                return Err(Error::Validation(format!(
                    "arc {u}->{v} has invalid weight {w}"
                )));
            }
            if u == v {
                stats.self_loops_dropped += 1;
                continue;
            }
            rows[u].push((v, w));
            if !directed {
                rows[v].push((u, w));
            }
        }

        let mut offsets = Vec::with_capacity(node_count + 1);
        let mut targets = Vec::new();
        let mut weights = Vec::new();
        offsets.push(0);
        for row in &mut rows {
            row.sort_by_key(|&(t, _)| t);
            let mut last: Option<usize> = None;
            for &(t, w) in row.iter() {
                if last == Some(t) {
                    *weights.last_mut().unwrap() += w;
                    stats.duplicates_merged += 1;
                } else {
                    targets.push(t);
                    weights.push(w);
                    last = Some(t);
                }
            }
            offsets.push(targets.len());
        }
        if !directed {
            // each undirected duplicate was counted once per direction
            stats.duplicates_merged /= 2;
        }

        Ok((
            Graph {
                offsets,
                targets,
                weights,
                directed,
                provenance: Provenance::Original,
            },
            stats,
        ))
    }

    /// Same arc structure with a new weight vector aligned to [`Graph::arcs`].
    pub fn with_weights(&self, weights: Vec<f64>, provenance: Provenance) -> Graph {
        assert_eq!(weights.len(), self.weights.len(), "weight vector length");
        Graph {
            offsets: self.offsets.clone(),
            targets: self.targets.clone(),
            weights,
            // reweighting is per out-arc, so symmetry is not preserved
            directed: self.directed || provenance != Provenance::Original,
            provenance,
        }
    }

    pub fn node_count(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn arc_count(&self) -> usize {
        self.targets.len()
    }

    pub fn is_directed(&self) -> bool {
        self.directed
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    /// Index range of `v`'s out-arcs in the flat arc arrays.
    pub fn arc_range(&self, v: usize) -> std::ops::Range<usize> {
        self.offsets[v]..self.offsets[v + 1]
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.targets[self.arc_range(v)]
    }

    pub fn out_weights(&self, v: usize) -> &[f64] {
        &self.weights[self.arc_range(v)]
    }

    pub fn out_degree(&self, v: usize) -> usize {
        self.offsets[v + 1] - self.offsets[v]
    }

    pub fn targets(&self) -> &[usize] {
        &self.targets
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Position of arc `u -> v` in the flat arc arrays.
    pub fn arc_index(&self, u: usize, v: usize) -> Option<usize> {
        let range = self.arc_range(u);
        self.targets[range.clone()]
            .binary_search(&v)
            .ok()
            .map(|i| range.start + i)
    }

    pub fn has_arc(&self, u: usize, v: usize) -> bool {
        self.arc_index(u, v).is_some()
    }

    pub fn weight(&self, u: usize, v: usize) -> Option<f64> {
        self.arc_index(u, v).map(|i| self.weights[i])
    }

    /// All arcs as `(source, target, weight)` in CSR order.
    pub fn arcs(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.node_count()).flat_map(move |u| {
            self.arc_range(u)
                .map(move |i| (u, self.targets[i], self.weights[i]))
        })
    }
}

/// Bidirectional mapping between external node names and dense ids.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IdMap {
    names: Vec<String>,
    index: HashMap<String, usize>,
}

impl IdMap {
    /// Names `0..n` for generated graphs.
    pub fn numeric(n: usize) -> Self {
        Self::from_names((0..n).map(|i| i.to_string()).collect())
    }

    fn from_names(names: Vec<String>) -> Self {
        let index = names
            .iter()
            .enumerate()
            .map(|(i, n)| (n.clone(), i))
            .collect();
        IdMap { names, index }
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn name(&self, id: usize) -> &str {
        &self.names[id]
    }

    pub fn id(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }
}

/// Orders raw ids numerically when all of them are non-negative integers,
/// otherwise keeps first-appearance order.
fn dense_order(seen: Vec<String>) -> Vec<String> {
    let mut numeric: Vec<(u64, String)> = Vec::with_capacity(seen.len());
    for name in &seen {
        match name.parse::<u64>() {
            Ok(n) => numeric.push((n, name.clone())),
            Err(_) => return seen,
        }
    }
    numeric.sort();
    numeric.into_iter().map(|(_, s)| s).collect()
}

#[derive(Debug, Clone)]
pub struct LoadedGraph {
    pub graph: Graph,
    pub ids: IdMap,
    pub stats: BuildStats,
}

const ISOLATED_PRAGMA: &str = "# isolated ";
const NODE_PRAGMA: &str = "# node ";
const DIRECTED_PRAGMA: &str = "# directed";
const UNDIRECTED_PRAGMA: &str = "# undirected";

pub fn load_edge_list(path: &Path, undirected: bool) -> Result<LoadedGraph> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_edge_list(BufReader::new(file), path, undirected)
}

/// Loads an edge list whose node names must all appear in `ids`, e.g. a
/// reweighted copy of an already loaded graph.
pub fn load_edge_list_with_ids(path: &Path, ids: &IdMap, undirected: bool) -> Result<Graph> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let raw = read_edge_lines(BufReader::new(file), path)?;
    let undirected = raw.undirected.unwrap_or(undirected);
    let lookup = |name: &str| {
        ids.id(name)
            .ok_or_else(|| Error::Validation(format!("{}: unknown node '{name}'", path.display())))
    };
    for name in &raw.seen {
        lookup(name)?;
    }
    let mut arcs = Vec::with_capacity(raw.arcs.len());
    for (u, v, w) in &raw.arcs {
        arcs.push((lookup(u)?, lookup(v)?, *w));
    }
    Graph::from_arcs(ids.len(), arcs, !undirected).map(|(g, _)| g)
}

struct RawEdges {
    seen: Vec<String>,
    arcs: Vec<(String, String, f64)>,
    /// Set by a `# directed` or `# undirected` line.
    undirected: Option<bool>,
}

fn read_edge_lines<R: BufRead>(reader: R, path: &Path) -> Result<RawEdges> {
    let mut seen: Vec<String> = Vec::new();
    let mut seen_index: HashMap<String, ()> = HashMap::new();
    let mut arcs: Vec<(String, String, f64)> = Vec::new();
    let mut undirected = None;
    let mut note = |name: &str, seen: &mut Vec<String>| {
        if seen_index.insert(name.to_owned(), ()).is_none() {
            seen.push(name.to_owned());
        }
    };

    for (lineno, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let line_no = lineno + 1;
        if let Some(rest) = line
            .strip_prefix(ISOLATED_PRAGMA)
            .or_else(|| line.strip_prefix(NODE_PRAGMA))
        {
            note(rest.trim(), &mut seen);
            continue;
        }
        match line.trim_end() {
            DIRECTED_PRAGMA => undirected = Some(false),
            UNDIRECTED_PRAGMA => undirected = Some(true),
            _ => {}
        }
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let fields: Vec<&str> = content.split_whitespace().collect();
        let parse_err = |message: String| Error::Parse {
            path: path.to_path_buf(),
            line: line_no,
            message,
        };
        let weight = match fields.len() {
            2 => 1.0,
            3 => fields[2]
                .parse::<f64>()
                .map_err(|_| parse_err(format!("bad weight '{}'", fields[2])))?,
            n => return Err(parse_err(format!("expected 2 or 3 fields, found {n}"))),
        };
        if !weight.is_finite() || weight < 0.0 {
            return Err(Error::Validation(format!(
                "{}:{line_no}: negative or non-finite weight {weight}",
                path.display()
            )));
        }
        note(fields[0], &mut seen);
        note(fields[1], &mut seen);
        arcs.push((fields[0].to_owned(), fields[1].to_owned(), weight));
    }
    Ok(RawEdges {
        seen,
        arcs,
        undirected,
    })
}

/// Parses `u v [w]` lines. `#` starts a comment. A `# isolated <id>` or
/// `# node <id>` line declares a node, and a `# directed` or `# undirected`
/// line overrides `undirected` (all are written by [`write_edge_list`]).
pub fn parse_edge_list<R: BufRead>(
    reader: R,
    path: &Path,
    undirected: bool,
) -> Result<LoadedGraph> {
    let raw = read_edge_lines(reader, path)?;
    let undirected = raw.undirected.unwrap_or(undirected);
    let ids = IdMap::from_names(dense_order(raw.seen));
    let arcs = raw
        .arcs
        .into_iter()
        .map(|(u, v, w)| (ids.index[&u], ids.index[&v], w));
    let (graph, stats) = Graph::from_arcs(ids.len(), arcs, !undirected)?;
    Ok(LoadedGraph { graph, ids, stats })
}

pub fn save_edge_list(graph: &Graph, ids: &IdMap, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    write_edge_list(graph, ids, &mut out).map_err(|e| Error::io(path, e))?;
    out.flush().map_err(|e| Error::io(path, e))
}

/// Writes `u v w` lines with shortest round-trip float formatting. An
/// undirected graph writes each edge once. Non-numeric ids are declared
/// up front so that reloading keeps the id order.
pub fn write_edge_list<W: Write>(graph: &Graph, ids: &IdMap, out: &mut W) -> std::io::Result<()> {
    let directed = graph.is_directed();
    writeln!(
        out,
        "{}",
        if directed {
            DIRECTED_PRAGMA
        } else {
            UNDIRECTED_PRAGMA
        }
    )?;
    writeln!(
        out,
        "# {} nodes, {} arcs, {} weights",
        graph.node_count(),
        graph.arc_count(),
        graph.provenance()
    )?;
    let numeric = ids.names().iter().all(|n| n.parse::<u64>().is_ok());
    if numeric {
        let mut touched = vec![false; graph.node_count()];
        for (u, v, _) in graph.arcs() {
            touched[u] = true;
            touched[v] = true;
        }
        for v in (0..graph.node_count()).filter(|&v| !touched[v]) {
            writeln!(out, "{ISOLATED_PRAGMA}{}", ids.name(v))?;
        }
    } else {
        for name in ids.names() {
            writeln!(out, "{NODE_PRAGMA}{name}")?;
        }
    }
    for (u, v, w) in graph.arcs() {
        if directed || u < v {
            writeln!(out, "{} {} {}", ids.name(u), ids.name(v), w)?;
        }
    }
    Ok(())
}

/// One group label per node, densely numbered `0..group_count`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupAssignment {
    labels: Vec<usize>,
    group_count: usize,
    names: Vec<String>,
}

impl GroupAssignment {
    /// Every id in `0..=max(labels)` must be used by some node.
    pub fn new(labels: Vec<usize>) -> Result<Self> {
        let group_count = labels.iter().max().map_or(0, |&m| m + 1);
        let names = (0..group_count).map(|g| g.to_string()).collect();
        Self::with_names(labels, names)
    }

    fn with_names(labels: Vec<usize>, names: Vec<String>) -> Result<Self> {
        let group_count = names.len();
        let mut sizes = vec![0usize; group_count];
        for &l in &labels {
            if l >= group_count {
                return Err(Error::Validation(format!("group id {l} out of range")));
            }
            sizes[l] += 1;
        }
        if let Some(empty) = sizes.iter().position(|&s| s == 0) {
            return Err(Error::Validation(format!("group {empty} has no members")));
        }
        Ok(GroupAssignment {
            labels,
            group_count,
            names,
        })
    }

    pub fn group_of(&self, v: usize) -> usize {
        self.labels[v]
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn group_count(&self) -> usize {
        self.group_count
    }

    pub fn node_count(&self) -> usize {
        self.labels.len()
    }

    /// External name of group `g` as it appeared in the group file.
    pub fn group_name(&self, g: usize) -> &str {
        &self.names[g]
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.group_count];
        for &l in &self.labels {
            sizes[l] += 1;
        }
        sizes
    }

    pub fn members(&self, g: usize) -> Vec<usize> {
        (0..self.labels.len())
            .filter(|&v| self.labels[v] == g)
            .collect()
    }
}

pub fn load_groups(path: &Path, ids: &IdMap) -> Result<GroupAssignment> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_groups(BufReader::new(file), path, ids)
}

/// Parses `node_id group_id` lines. Ids of nodes not in the graph are
/// ignored; graph nodes without a group are an error.
pub fn parse_groups<R: BufRead>(reader: R, path: &Path, ids: &IdMap) -> Result<GroupAssignment> {
    let mut raw: Vec<Option<String>> = vec![None; ids.len()];
    for (lineno, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let fields: Vec<&str> = content.split_whitespace().collect();
        if fields.len() != 2 {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: lineno + 1,
                message: format!("expected 'node_id group_id', found {} fields", fields.len()),
            });
        }
        if let Some(v) = ids.id(fields[0]) {
            raw[v] = Some(fields[1].to_owned());
        }
    }

    let missing: Vec<&str> = raw
        .iter()
        .enumerate()
        .filter(|(_, g)| g.is_none())
        .map(|(v, _)| ids.name(v))
        .collect();
    if !missing.is_empty() {
        let shown: Vec<&str> = missing.iter().take(20).copied().collect();
        return Err(Error::Validation(format!(
            "{} node(s) without a group: {}{}",
            missing.len(),
            shown.join(", "),
            if missing.len() > shown.len() {
                ", ..."
            } else {
                ""
            }
        )));
    }

    let mut distinct: Vec<String> = Vec::new();
    let mut known: HashMap<&str, ()> = HashMap::new();
    for g in raw.iter().flatten() {
        if known.insert(g.as_str(), ()).is_none() {
            distinct.push(g.clone());
        }
    }
    let names = dense_order(distinct);
    let index: HashMap<&str, usize> = names
        .iter()
        .enumerate()
        .map(|(i, n)| (n.as_str(), i))
        .collect();
    let labels = raw.iter().map(|g| index[g.as_deref().unwrap()]).collect();
    GroupAssignment::with_names(labels, names)
}

pub fn save_groups(groups: &GroupAssignment, ids: &IdMap, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    let write = |out: &mut BufWriter<File>| -> std::io::Result<()> {
        for v in 0..groups.node_count() {
            writeln!(
                out,
                "{} {}",
                ids.name(v),
                groups.group_name(groups.group_of(v))
            )?;
        }
        out.flush()
    };
    write(&mut out).map_err(|e| Error::io(path, e))
}

/// Stochastic block model parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SbmSpec {
    pub group_sizes: Vec<usize>,
    /// Edge probability inside each group.
    pub intra_probs: Vec<f64>,
    /// Edge probability for each unordered group pair, in the order
    /// (0,1), (0,2), ..., (0,C-1), (1,2), ...
    pub inter_probs: Vec<f64>,
    pub rng_seed: u64,
}

impl Default for SbmSpec {
    fn default() -> Self {
        SbmSpec::two_group(0.05, 0)
    }
}

impl SbmSpec {
    /// Two groups of 350 and 150 nodes, inter-group probability 0.001,
    /// with group A's intra probability 0.025 below group B's.
    pub fn two_group(intra_b: f64, seed: u64) -> Self {
        SbmSpec {
            group_sizes: vec![350, 150],
            intra_probs: vec![intra_b - 0.025, intra_b],
            inter_probs: vec![0.001],
            rng_seed: seed,
        }
    }

    /// Three groups of 300, 125 and 75 nodes.
    pub fn three_group(seed: u64) -> Self {
        SbmSpec {
            group_sizes: vec![300, 125, 75],
            intra_probs: vec![0.025; 3],
            inter_probs: vec![0.001, 0.0005, 0.0005],
            rng_seed: seed,
        }
    }

    pub fn group_count(&self) -> usize {
        self.group_sizes.len()
    }

    pub fn validate(&self) -> Result<()> {
        let c = self.group_count();
        if c == 0 {
            return Err(Error::InvalidParam("SBM needs at least one group".into()));
        }
        if self.group_sizes.contains(&0) {
            return Err(Error::InvalidParam(
                "SBM group sizes must be positive".into(),
            ));
        }
        if self.intra_probs.len() != c {
            return Err(Error::InvalidParam(format!(
                "expected {c} intra-group probabilities, got {}",
                self.intra_probs.len()
            )));
        }
        let pairs = c * (c - 1) / 2;
        if self.inter_probs.len() != pairs {
            return Err(Error::InvalidParam(format!(
                "expected {pairs} inter-group probabilities, got {}",
                self.inter_probs.len()
            )));
        }
        for &p in self.intra_probs.iter().chain(&self.inter_probs) {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidParam(format!(
                    "probability {p} outside [0,1]"
                )));
            }
        }
        Ok(())
    }

    /// Edge probability between a node of group `a` and one of group `b`.
    pub fn prob(&self, a: usize, b: usize) -> f64 {
        if a == b {
            return self.intra_probs[a];
        }
        let (a, b) = if a < b { (a, b) } else { (b, a) };
        let c = self.group_count();
        // rows of the strict upper triangle before row a, then offset in row
        let index = a * (2 * c - a - 1) / 2 + (b - a - 1);
        self.inter_probs[index]
    }
}

/// Samples an undirected SBM graph. Nodes are numbered group by group.
pub fn sbm_generate(spec: &SbmSpec) -> Result<(Graph, GroupAssignment)> {
    spec.validate()?;
    let labels: Vec<usize> = spec
        .group_sizes
        .iter()
        .enumerate()
        .flat_map(|(g, &n)| std::iter::repeat_n(g, n))
        .collect();
    let n = labels.len();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.rng_seed);
    let mut edges = Vec::new();
    for u in 0..n {
        for v in (u + 1)..n {
            let p = spec.prob(labels[u], labels[v]);
            if rng.gen::<f64>() < p {
                edges.push((u, v, 1.0));
            }
        }
    }
    let (graph, _) = Graph::from_arcs(n, edges, false)?;
    Ok((graph, GroupAssignment::new(labels)?))
}

/// Row-normalized transition probabilities aligned with the graph's arcs.
#[derive(Debug, Clone, PartialEq)]
pub struct Transitions {
    pub probs: Vec<f64>,
    /// Nodes without out-arcs; walks stop there.
    pub sinks: Vec<bool>,
}

pub fn transition_probabilities(graph: &Graph) -> Result<Transitions> {
    let mut probs = vec![0.0; graph.arc_count()];
    let mut sinks = vec![false; graph.node_count()];
    for v in 0..graph.node_count() {
        let range = graph.arc_range(v);
        if range.is_empty() {
            sinks[v] = true;
            continue;
        }
        let total: f64 = graph.out_weights(v).iter().sum();
        if total <= 0.0 {
            return Err(Error::Normalization { node: v });
        }
        for i in range {
            probs[i] = graph.weights()[i] / total;
        }
    }
    Ok(Transitions { probs, sinks })
}
