//! Boundary-proximity estimation and edge reweighting.
//!
//! CrossWalk splits every node's out-mass into `1 - alpha` for same-group
//! neighbors and `alpha / |R_v|` for each foreign group `R_v` present in the
//! neighborhood. Within a bucket, arc `v -> u` receives mass proportional to
//! `w_vu * m(u)^p`, where `m(u)` is the expected fraction of foreign-group
//! visits in short walks from `u`.

use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{transition_probabilities, Graph, GroupAssignment, IdMap, Provenance};
use crate::rng;
use crate::walker::Walker;

/// Node count above which [`exact_proximity`] refuses to run.
pub const EXACT_PROXIMITY_MAX_NODES: usize = 200;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReweightParams {
    pub alpha: f64,
    pub p_exponent: f64,
    /// Proximity walks per node.
    pub walk_count_r: usize,
    /// Steps per proximity walk.
    pub walk_length_d: usize,
    pub rng_seed: u64,
}

impl Default for ReweightParams {
    fn default() -> Self {
        ReweightParams {
            alpha: 0.5,
            p_exponent: 2.0,
            walk_count_r: 1000,
            walk_length_d: 5,
            rng_seed: 0,
        }
    }
}

impl ReweightParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidParam(format!(
                "alpha must lie in (0,1), got {}",
                self.alpha
            )));
        }
        if !(self.p_exponent > 0.0) || !self.p_exponent.is_finite() {
            return Err(Error::InvalidParam(format!(
                "p must be positive, got {}",
                self.p_exponent
            )));
        }
        if self.walk_count_r == 0 || self.walk_length_d == 0 {
            return Err(Error::InvalidParam("r and d must be >= 1".into()));
        }
        Ok(())
    }
}

/// Per-node closeness to group boundaries, each in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProximityScores {
    pub m: Vec<f64>,
}

fn check_groups(graph: &Graph, groups: &GroupAssignment) -> Result<()> {
    if groups.node_count() != graph.node_count() {
        return Err(Error::Validation(format!(
            "group labels cover {} nodes, graph has {}",
            groups.node_count(),
            graph.node_count()
        )));
    }
    Ok(())
}

/// Monte-Carlo proximity: `r` walks of `d` steps from every node on the
/// original weights, counting foreign-group visits (the root is not a
/// visit). Walks cut short by a sink still divide by `r * d`.
pub fn estimate_proximity(
    graph: &Graph,
    groups: &GroupAssignment,
    params: &ReweightParams,
) -> Result<ProximityScores> {
    params.validate()?;
    check_groups(graph, groups)?;
    if graph.provenance() != Provenance::Original {
        return Err(Error::ReweightedEvaluation(graph.provenance().to_string()));
    }
    let walker = Walker::new(graph);
    let (r, d) = (params.walk_count_r, params.walk_length_d);
    let m = (0..graph.node_count())
        .into_par_iter()
        .map(|root| {
            let home = groups.group_of(root);
            let mut rng = rng::stream(params.rng_seed, root as u64);
            let mut foreign = 0u64;
            for _ in 0..r {
                let mut cur = root;
                for _ in 0..d {
                    match walker.step(cur, &mut rng) {
                        Some(next) => {
                            foreign += u64::from(groups.group_of(next) != home);
                            cur = next;
                        }
                        None => break,
                    }
                }
            }
            foreign as f64 / (r * d) as f64
        })
        .collect();
    Ok(ProximityScores { m })
}

/// Exact expectation of the proximity estimator, by pushing each root's
/// occupancy distribution forward `d` steps.
pub fn exact_proximity(
    graph: &Graph,
    groups: &GroupAssignment,
    walk_length_d: usize,
) -> Result<ProximityScores> {
    check_groups(graph, groups)?;
    let n = graph.node_count();
    if n > EXACT_PROXIMITY_MAX_NODES {
        return Err(Error::GuardExceeded {
            what: "exact proximity node count",
            limit: EXACT_PROXIMITY_MAX_NODES,
            actual: n,
        });
    }
    if walk_length_d == 0 {
        return Err(Error::InvalidParam("d must be >= 1".into()));
    }
    let trans = transition_probabilities(graph)?;
    let mut m = vec![0.0; n];
    for (root, m_root) in m.iter_mut().enumerate() {
        let home = groups.group_of(root);
        let mut dist = vec![0.0; n];
        dist[root] = 1.0;
        let mut acc = 0.0;
        for _ in 0..walk_length_d {
            let mut next = vec![0.0; n];
            for (v, &mass) in dist.iter().enumerate() {
                if mass == 0.0 {
                    continue;
                }
                for i in graph.arc_range(v) {
                    next[graph.targets()[i]] += mass * trans.probs[i];
                }
            }
            acc += next
                .iter()
                .enumerate()
                .filter(|&(u, _)| groups.group_of(u) != home)
                .map(|(_, &p)| p)
                .sum::<f64>();
            dist = next;
        }
        *m_root = acc / walk_length_d as f64;
    }
    Ok(ProximityScores { m })
}

/// Splits `mass` over one bucket of arcs in proportion to `score`, falling
/// back to the original weights when every score is zero.
fn distribute(bucket: &[usize], weights: &[f64], scores: &[f64], mass: f64, out: &mut [f64]) {
    let z: f64 = bucket.iter().map(|&i| scores[i]).sum();
    if z > 0.0 {
        for &i in bucket {
            out[i] = mass * scores[i] / z;
        }
        return;
    }
    let total: f64 = bucket.iter().map(|&i| weights[i]).sum();
    for &i in bucket {
        out[i] = if total > 0.0 {
            mass * weights[i] / total
        } else {
            0.0
        };
    }
}

/// CrossWalk edge weights for every out-arc.
pub fn crosswalk_reweight(
    graph: &Graph,
    groups: &GroupAssignment,
    prox: &ProximityScores,
    params: &ReweightParams,
) -> Result<Graph> {
    params.validate()?;
    check_groups(graph, groups)?;
    if prox.m.len() != graph.node_count() {
        return Err(Error::Validation(format!(
            "{} proximity scores for {} nodes",
            prox.m.len(),
            graph.node_count()
        )));
    }
    let alpha = params.alpha;
    let p = params.p_exponent;
    let c = groups.group_count();

    let rows: Vec<Vec<f64>> = (0..graph.node_count())
        .into_par_iter()
        .map(|v| {
            let targets = graph.neighbors(v);
            let weights = graph.out_weights(v);
            let scores: Vec<f64> = targets
                .iter()
                .zip(weights)
                .map(|(&u, &w)| w * prox.m[u].powf(p))
                .collect();

            let mut buckets: Vec<Vec<usize>> = vec![Vec::new(); c];
            for (i, &u) in targets.iter().enumerate() {
                buckets[groups.group_of(u)].push(i);
            }
            let home = groups.group_of(v);
            let foreign_groups = (0..c)
                .filter(|&g| g != home && !buckets[g].is_empty())
                .count();

            let mut out = vec![0.0; targets.len()];
            if !buckets[home].is_empty() {
                distribute(&buckets[home], weights, &scores, 1.0 - alpha, &mut out);
            }
            if foreign_groups > 0 {
                let share = if buckets[home].is_empty() { 1.0 } else { alpha };
                let mass = share / foreign_groups as f64;
                for (g, bucket) in buckets.iter().enumerate() {
                    if g != home && !bucket.is_empty() {
                        distribute(bucket, weights, &scores, mass, &mut out);
                    }
                }
            }
            out
        })
        .collect();

    Ok(graph.with_weights(rows.concat(), Provenance::Reweighted("crosswalk")))
}

/// FairWalk baseline: each neighbor group present gets equal out-mass,
/// split inside the group by original weight.
pub fn fairwalk_reweight(graph: &Graph, groups: &GroupAssignment) -> Result<Graph> {
    check_groups(graph, groups)?;
    let c = groups.group_count();
    let rows: Vec<Vec<f64>> = (0..graph.node_count())
        .into_par_iter()
        .map(|v| {
            let targets = graph.neighbors(v);
            let weights = graph.out_weights(v);
            let mut totals = vec![0.0; c];
            for (&u, &w) in targets.iter().zip(weights) {
                totals[groups.group_of(u)] += w;
            }
            let present = totals.iter().filter(|&&t| t > 0.0).count();
            targets
                .iter()
                .zip(weights)
                .map(|(&u, &w)| {
                    let t = totals[groups.group_of(u)];
                    if t > 0.0 {
                        w / t / present as f64
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect();
    Ok(graph.with_weights(rows.concat(), Provenance::Reweighted("fairwalk")))
}

/// The DeepWalk baseline walks the original weights unchanged.
pub fn identity_reweight(graph: &Graph) -> Graph {
    graph.with_weights(graph.weights().to_vec(), Provenance::Reweighted("identity"))
}

/// Embedding methods compared in experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    DeepWalk,
    FairWalk,
    CrossWalk,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::DeepWalk => "deepwalk",
            Method::FairWalk => "fairwalk",
            Method::CrossWalk => "crosswalk",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "deepwalk" | "identity" => Ok(Method::DeepWalk),
            "fairwalk" => Ok(Method::FairWalk),
            "crosswalk" => Ok(Method::CrossWalk),
            other => Err(Error::InvalidParam(format!("unknown method '{other}'"))),
        }
    }
}

/// Walk graph for `method`. CrossWalk also returns the proximity scores
/// it used.
pub fn reweight(
    method: Method,
    graph: &Graph,
    groups: &GroupAssignment,
    params: &ReweightParams,
) -> Result<(Graph, Option<ProximityScores>)> {
    match method {
        Method::DeepWalk => Ok((identity_reweight(graph), None)),
        Method::FairWalk => Ok((fairwalk_reweight(graph, groups)?, None)),
        Method::CrossWalk => {
            let prox = estimate_proximity(graph, groups, params)?;
            let g = crosswalk_reweight(graph, groups, &prox, params)?;
            Ok((g, Some(prox)))
        }
    }
}

pub fn save_proximity(prox: &ProximityScores, ids: &IdMap, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    let write = |out: &mut BufWriter<File>| -> std::io::Result<()> {
        for (v, m) in prox.m.iter().enumerate() {
            writeln!(out, "{} {}", ids.name(v), m)?;
        }
        out.flush()
    };
    write(&mut out).map_err(|e| Error::io(path, e))
}
