//! First-order (DeepWalk) and second-order (Node2Vec) random walks.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Graph, IdMap};
use crate::rng;

/// Walker's alias method for O(1) categorical sampling.
#[derive(Debug, Clone)]
pub struct AliasTable {
    prob: Vec<f64>,
    alias: Vec<usize>,
}

impl AliasTable {
    /// `None` when there is nothing to sample (empty or all-zero weights).
    pub fn new(weights: &[f64]) -> Option<Self> {
        let n = weights.len();
        let total: f64 = weights.iter().sum();
        if n == 0 || total <= 0.0 {
            return None;
        }
        let mut prob: Vec<f64> = weights.iter().map(|w| w * n as f64 / total).collect();
        let mut alias = vec![0; n];
        let mut small = Vec::new();
        let mut large = Vec::new();
        for (i, &p) in prob.iter().enumerate() {
            if p < 1.0 {
                small.push(i);
            } else {
                large.push(i);
            }
        }
        while let (Some(&s), Some(&l)) = (small.last(), large.last()) {
            small.pop();
            alias[s] = l;
            prob[l] -= 1.0 - prob[s];
            if prob[l] < 1.0 {
                large.pop();
                small.push(l);
            }
        }
        // leftovers are 1 up to rounding; zero-weight entries must stay unreachable
        for i in large.into_iter().chain(small) {
            prob[i] = if weights[i] > 0.0 { 1.0 } else { 0.0 };
            if weights[i] <= 0.0 {
                alias[i] = weights.iter().position(|&w| w > 0.0).unwrap();
            }
        }
        Some(AliasTable { prob, alias })
    }

    pub fn len(&self) -> usize {
        self.prob.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prob.is_empty()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let i = rng.gen_range(0..self.prob.len());
        if rng.gen::<f64>() < self.prob[i] {
            i
        } else {
            self.alias[i]
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WalkMode {
    FirstOrder,
    SecondOrder,
}

impl WalkMode {
    pub fn as_str(self) -> &'static str {
        match self {
            WalkMode::FirstOrder => "first_order",
            WalkMode::SecondOrder => "second_order",
        }
    }
}

impl std::str::FromStr for WalkMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "first_order" => Ok(WalkMode::FirstOrder),
            "second_order" => Ok(WalkMode::SecondOrder),
            other => Err(Error::InvalidParam(format!("unknown walk mode '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WalkParams {
    pub walks_per_node: usize,
    /// Number of nodes in a full walk, root included.
    pub walk_length: usize,
    /// Node2Vec return bias; ignored by first-order walks.
    pub return_param: f64,
    /// Node2Vec in-out bias; ignored by first-order walks.
    pub inout_param: f64,
    pub mode: WalkMode,
    pub rng_seed: u64,
}

impl Default for WalkParams {
    fn default() -> Self {
        WalkParams {
            walks_per_node: 20,
            walk_length: 40,
            return_param: 1.0,
            inout_param: 1.0,
            mode: WalkMode::FirstOrder,
            rng_seed: 0,
        }
    }
}

impl WalkParams {
    pub fn validate(&self) -> Result<()> {
        if self.walks_per_node == 0 {
            return Err(Error::InvalidParam("walks_per_node must be >= 1".into()));
        }
        if self.walk_length < 2 {
            return Err(Error::InvalidParam("walk_length must be >= 2".into()));
        }
        if !(self.return_param > 0.0) || !(self.inout_param > 0.0) {
            return Err(Error::InvalidParam(
                "return_param and inout_param must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Per-node samplers over a fixed weighted graph.
pub struct Walker<'g> {
    graph: &'g Graph,
    tables: Vec<Option<AliasTable>>,
}

impl<'g> Walker<'g> {
    pub fn new(graph: &'g Graph) -> Self {
        let tables = (0..graph.node_count())
            .into_par_iter()
            .map(|v| AliasTable::new(graph.out_weights(v)))
            .collect();
        Walker { graph, tables }
    }

    pub fn graph(&self) -> &'g Graph {
        self.graph
    }

    /// One first-order step from `v`, or `None` at a sink.
    #[inline]
    pub fn step<R: Rng + ?Sized>(&self, v: usize, rng: &mut R) -> Option<usize> {
        self.tables[v]
            .as_ref()
            .map(|t| self.graph.neighbors(v)[t.sample(rng)])
    }

    /// One second-order step into `v`'s neighborhood having arrived from
    /// `prev`. Biases are evaluated on the fly.
    pub fn step_biased<R: Rng + ?Sized>(
        &self,
        prev: usize,
        v: usize,
        return_param: f64,
        inout_param: f64,
        rng: &mut R,
    ) -> Option<usize> {
        let g = self.graph;
        let bias = |x: usize| {
            if x == prev {
                1.0 / return_param
            } else if g.has_arc(prev, x) {
                1.0
            } else {
                1.0 / inout_param
            }
        };
        let targets = g.neighbors(v);
        let weights = g.out_weights(v);
        let total: f64 = targets
            .iter()
            .zip(weights)
            .map(|(&x, &w)| w * bias(x))
            .sum();
        if !(total > 0.0) {
            return None;
        }
        let mut r = rng.gen::<f64>() * total;
        let mut last = None;
        for (&x, &w) in targets.iter().zip(weights) {
            let mass = w * bias(x);
            if mass > 0.0 {
                if r < mass {
                    return Some(x);
                }
                r -= mass;
                last = Some(x);
            }
        }
        last
    }

    /// A walk of at most `length` nodes starting at `root`.
    pub fn walk<R: Rng + ?Sized>(
        &self,
        root: usize,
        params: &WalkParams,
        rng: &mut R,
    ) -> Vec<usize> {
        let mut walk = Vec::with_capacity(params.walk_length);
        walk.push(root);
        while walk.len() < params.walk_length {
            let cur = walk[walk.len() - 1];
            let next = match (params.mode, walk.len()) {
                (WalkMode::SecondOrder, n) if n >= 2 => self.step_biased(
                    walk[n - 2],
                    cur,
                    params.return_param,
                    params.inout_param,
                    rng,
                ),
                _ => self.step(cur, rng),
            };
            match next {
                Some(x) => walk.push(x),
                None => break,
            }
        }
        walk
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct WalkCorpus {
    pub walks: Vec<Vec<usize>>,
}

impl WalkCorpus {
    pub fn len(&self) -> usize {
        self.walks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.walks.is_empty()
    }

    pub fn token_count(&self) -> usize {
        self.walks.iter().map(Vec::len).sum()
    }
}

/// `walks_per_node` walks from every node. Walk `(pass, root)` uses its own
/// random stream and the corpus is ordered by pass, then root.
pub fn generate_walks(graph: &Graph, params: &WalkParams) -> Result<WalkCorpus> {
    params.validate()?;
    let walker = Walker::new(graph);
    let n = graph.node_count();
    let walks = (0..params.walks_per_node * n)
        .into_par_iter()
        .map(|key| {
            let root = key % n;
            let mut rng = rng::stream(params.rng_seed, key as u64);
            walker.walk(root, params, &mut rng)
        })
        .collect();
    Ok(WalkCorpus { walks })
}

pub fn save_corpus(corpus: &WalkCorpus, ids: &IdMap, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    let write = |out: &mut BufWriter<File>| -> std::io::Result<()> {
        for walk in &corpus.walks {
            let line: Vec<&str> = walk.iter().map(|&v| ids.name(v)).collect();
            writeln!(out, "{}", line.join(" "))?;
        }
        out.flush()
    };
    write(&mut out).map_err(|e| Error::io(path, e))
}

pub fn load_corpus(path: &Path, ids: &IdMap) -> Result<WalkCorpus> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut walks = Vec::new();
    for (lineno, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let walk = line
            .split_whitespace()
            .map(|name| {
                ids.id(name).ok_or_else(|| Error::Parse {
                    path: path.to_path_buf(),
                    line: lineno + 1,
                    message: format!("unknown node '{name}'"),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        walks.push(walk);
    }
    Ok(WalkCorpus { walks })
}
