//! Downstream tasks on embeddings: label propagation over a k-NN graph and
//! link prediction with logistic regression on Hadamard-square features.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embedding::{euclidean, EmbeddingMatrix};
use crate::error::{Error, Result};
use crate::graph::{Graph, GroupAssignment};
use crate::metrics::GroupPerformance;
use crate::rng;

/// Smallest link type [`link_split`] accepts.
pub const MIN_EDGES_PER_LINK_TYPE: usize = 10;

/// Directed graph linking every node to its `knn_k` nearest embeddings,
/// ties broken by lower id.
pub fn knn_graph(emb: &EmbeddingMatrix, knn_k: usize) -> Result<Graph> {
    let n = emb.node_count();
    if knn_k == 0 || knn_k >= n {
        return Err(Error::InvalidParam(format!(
            "knn_k must lie in 1..{n}, got {knn_k}"
        )));
    }
    let rows: Vec<Vec<usize>> = (0..n)
        .into_par_iter()
        .map(|v| {
            let mut others: Vec<(f64, usize)> = (0..n)
                .filter(|&u| u != v)
                .map(|u| (euclidean(emb.row(v), emb.row(u)), u))
                .collect();
            others.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            others.into_iter().take(knn_k).map(|(_, u)| u).collect()
        })
        .collect();
    let arcs = rows
        .iter()
        .enumerate()
        .flat_map(|(v, row)| row.iter().map(move |&u| (v, u, 1.0)));
    Ok(Graph::from_arcs(n, arcs, true)?.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LabelPropParams {
    pub knn_k: usize,
    pub max_iters: usize,
    /// Fraction of each group whose labels are revealed.
    pub train_fraction: f64,
    pub rng_seed: u64,
}

impl Default for LabelPropParams {
    fn default() -> Self {
        LabelPropParams {
            knn_k: 7,
            max_iters: 100,
            train_fraction: 0.5,
            rng_seed: 0,
        }
    }
}

/// Training mask with `round(fraction * |group|)` nodes (at least one)
/// drawn from every group.
pub fn stratified_train_mask(
    groups: &GroupAssignment,
    fraction: f64,
    rng_seed: u64,
) -> Result<Vec<bool>> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::InvalidParam(format!(
            "train fraction must lie in (0,1), got {fraction}"
        )));
    }
    let mut mask = vec![false; groups.node_count()];
    for g in 0..groups.group_count() {
        let mut members = groups.members(g);
        members.shuffle(&mut rng::stream(rng_seed, g as u64));
        let take = ((fraction * members.len() as f64).round() as usize).clamp(1, members.len());
        for &v in &members[..take] {
            mask[v] = true;
        }
    }
    Ok(mask)
}

/// Majority label among labeled neighbors, ties to the lower class id.
fn majority(neighbors: &[usize], labels: &[Option<usize>], counts: &mut [usize]) -> Option<usize> {
    counts.iter_mut().for_each(|c| *c = 0);
    let mut any = false;
    for &u in neighbors {
        if let Some(l) = labels[u] {
            counts[l] += 1;
            any = true;
        }
    }
    if !any {
        return None;
    }
    let best = *counts.iter().max().unwrap();
    counts.iter().position(|&c| c == best)
}

/// Result of [`propagate`].
#[derive(Debug, Clone, PartialEq)]
pub struct Propagation {
    pub labels: Vec<Option<usize>>,
    pub iterations: usize,
    pub converged: bool,
}

/// Clamped label propagation from an arbitrary starting state. Unclamped
/// nodes are visited in id order and take the majority label of their
/// symmetrized k-NN neighbors; stops at a fixpoint or after `max_iters`
/// sweeps.
pub fn propagate(
    knn: &Graph,
    initial: &[Option<usize>],
    clamped: &[bool],
    max_iters: usize,
) -> Propagation {
    let n = knn.node_count();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (u, v, _) in knn.arcs() {
        adj[u].push(v);
        adj[v].push(u);
    }
    for row in &mut adj {
        row.sort_unstable();
        row.dedup();
    }
    let classes = initial.iter().flatten().max().map_or(0, |&m| m + 1);
    let mut counts = vec![0usize; classes];
    let mut labels = initial.to_vec();
    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iters {
        iterations += 1;
        let mut changed = false;
        for v in 0..n {
            if clamped[v] {
                continue;
            }
            if let Some(l) = majority(&adj[v], &labels, &mut counts) {
                if labels[v] != Some(l) {
                    labels[v] = Some(l);
                    changed = true;
                }
            }
        }
        if !changed {
            converged = true;
            break;
        }
    }
    Propagation {
        labels,
        iterations,
        converged,
    }
}

/// Semi-supervised label propagation: `train_labels` are clamped, every
/// other node ends with the majority of its neighbors; nodes the labels
/// never reach take the most common training label.
pub fn label_propagation(
    knn: &Graph,
    train_labels: &[Option<usize>],
    params: &LabelPropParams,
) -> Result<Vec<usize>> {
    if train_labels.len() != knn.node_count() {
        return Err(Error::Validation(
            "label vector does not match graph".into(),
        ));
    }
    let classes = train_labels.iter().flatten().max().map_or(0, |&m| m + 1);
    if classes == 0 {
        return Err(Error::Validation("no labeled nodes".into()));
    }
    let clamped: Vec<bool> = train_labels.iter().map(Option::is_some).collect();
    let result = propagate(knn, train_labels, &clamped, params.max_iters);
    let mut freq = vec![0usize; classes];
    for &l in train_labels.iter().flatten() {
        freq[l] += 1;
    }
    let best = *freq.iter().max().unwrap();
    let fallback = freq.iter().position(|&c| c == best).unwrap();
    Ok(result
        .labels
        .into_iter()
        .map(|l| l.unwrap_or(fallback))
        .collect())
}

/// Index of the unordered group pair `{a, b}` among the `C(C+1)/2` link
/// types, ordered (0,0), (0,1), ..., (0,C-1), (1,1), ...
pub fn link_type(groups: &GroupAssignment, u: usize, v: usize) -> usize {
    let (a, b) = {
        let (x, y) = (groups.group_of(u), groups.group_of(v));
        if x <= y {
            (x, y)
        } else {
            (y, x)
        }
    };
    let c = groups.group_count();
    a * (2 * c - a + 1) / 2 + (b - a)
}

pub fn link_type_count(groups: &GroupAssignment) -> usize {
    let c = groups.group_count();
    c * (c + 1) / 2
}

/// Human-readable name such as `A-B` for link type `t`.
pub fn link_type_name(groups: &GroupAssignment, t: usize) -> String {
    let c = groups.group_count();
    let mut idx = 0;
    for a in 0..c {
        for b in a..c {
            if idx == t {
                return format!("{}-{}", groups.group_name(a), groups.group_name(b));
            }
            idx += 1;
        }
    }
    format!("type{t}")
}

#[derive(Debug, Clone)]
pub struct LinkSplit {
    pub test_pos: Vec<(usize, usize)>,
    pub test_neg: Vec<(usize, usize)>,
    pub train_pos: Vec<(usize, usize)>,
    pub train_neg: Vec<(usize, usize)>,
    /// The input graph without the test positives; embeddings are trained
    /// on this.
    pub train_graph: Graph,
}

/// Stratified positive/negative split per link type. Edges are unordered
/// pairs `(u, v)` with `u < v`.
pub fn link_split(
    graph: &Graph,
    groups: &GroupAssignment,
    test_fraction: f64,
    rng_seed: u64,
) -> Result<LinkSplit> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::InvalidParam(format!(
            "test fraction must lie in (0,1), got {test_fraction}"
        )));
    }
    let types = link_type_count(groups);
    let mut edges: HashSet<(usize, usize)> = HashSet::new();
    for (u, v, _) in graph.arcs() {
        edges.insert((u.min(v), u.max(v)));
    }
    let mut by_type: Vec<Vec<(usize, usize)>> = vec![Vec::new(); types];
    let mut sorted: Vec<(usize, usize)> = edges.iter().copied().collect();
    sorted.sort_unstable();
    for (u, v) in sorted {
        by_type[link_type(groups, u, v)].push((u, v));
    }

    let sizes = groups.sizes();
    let mut split = LinkSplit {
        test_pos: Vec::new(),
        test_neg: Vec::new(),
        train_pos: Vec::new(),
        train_neg: Vec::new(),
        train_graph: graph.clone(),
    };
    let mut used_neg: HashSet<(usize, usize)> = HashSet::new();
    let mut type_index = 0;
    for a in 0..groups.group_count() {
        for b in a..groups.group_count() {
            let t = type_index;
            type_index += 1;
            let positives = &mut by_type[t];
            if positives.len() < MIN_EDGES_PER_LINK_TYPE {
                return Err(Error::Validation(format!(
                    "link type {} has {} edges, need at least {MIN_EDGES_PER_LINK_TYPE}",
                    link_type_name(groups, t),
                    positives.len()
                )));
            }
            let mut rng = rng::stream(rng_seed, t as u64);
            positives.shuffle(&mut rng);
            let n_test = ((test_fraction * positives.len() as f64).round() as usize).max(1);
            let n_train = positives.len() - n_test;

            let pairs_available = if a == b {
                sizes[a] * (sizes[a] - 1) / 2
            } else {
                sizes[a] * sizes[b]
            };
            if pairs_available - positives.len() < n_test + n_train {
                return Err(Error::Validation(format!(
                    "link type {} has too few non-edges for negative sampling",
                    link_type_name(groups, t)
                )));
            }
            let members_a = groups.members(a);
            let members_b = groups.members(b);
            let mut negatives = Vec::with_capacity(n_test + n_train);
            while negatives.len() < n_test + n_train {
                let u = members_a[rng.gen_range(0..members_a.len())];
                let v = members_b[rng.gen_range(0..members_b.len())];
                let pair = (u.min(v), u.max(v));
                if u == v || edges.contains(&pair) || !used_neg.insert(pair) {
                    continue;
                }
                negatives.push(pair);
            }
            split.test_pos.extend_from_slice(&positives[..n_test]);
            split.train_pos.extend_from_slice(&positives[n_test..]);
            split.test_neg.extend_from_slice(&negatives[..n_test]);
            split.train_neg.extend_from_slice(&negatives[n_test..]);
        }
    }

    let removed: HashSet<(usize, usize)> = split.test_pos.iter().copied().collect();
    let keep: Vec<(usize, usize, f64)> = graph
        .arcs()
        .filter(|&(u, v, _)| !removed.contains(&(u.min(v), u.max(v))))
        .collect();
    split.train_graph = if graph.is_directed() {
        Graph::from_arcs(graph.node_count(), keep, true)?.0
    } else {
        let pairs = keep.into_iter().filter(|&(u, v, _)| u < v);
        Graph::from_arcs(graph.node_count(), pairs, false)?.0
    };
    Ok(split)
}

/// `(phi_u - phi_v)` squared elementwise.
pub fn edge_feature(emb: &EmbeddingMatrix, u: usize, v: usize) -> Result<Vec<f64>> {
    emb.check_id(u)?;
    emb.check_id(v)?;
    Ok(emb
        .row(u)
        .iter()
        .zip(emb.row(v))
        .map(|(a, b)| (a - b) * (a - b))
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LogRegParams {
    pub epochs: usize,
    pub learning_rate: f64,
    pub l2: f64,
}

impl Default for LogRegParams {
    fn default() -> Self {
        LogRegParams {
            epochs: 500,
            learning_rate: 0.1,
            l2: 1e-4,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogRegModel {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl LogRegModel {
    pub fn zeros(dim: usize) -> Self {
        LogRegModel {
            weights: vec![0.0; dim],
            bias: 0.0,
        }
    }

    fn logit(&self, x: &[f64]) -> f64 {
        self.bias + self.weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>()
    }

    pub fn predict_proba(&self, x: &[f64]) -> f64 {
        1.0 / (1.0 + (-self.logit(x)).exp())
    }

    pub fn predict(&self, x: &[f64]) -> bool {
        self.logit(x) > 0.0
    }
}

fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

/// Mean logistic loss plus `l2 / 2 * |w|^2` (bias unregularized).
pub fn logreg_loss(model: &LogRegModel, features: &[Vec<f64>], labels: &[bool], l2: f64) -> f64 {
    let data: f64 = features
        .iter()
        .zip(labels)
        .map(|(x, &y)| {
            let z = model.logit(x);
            if y {
                softplus(-z)
            } else {
                softplus(z)
            }
        })
        .sum::<f64>()
        / features.len() as f64;
    data + 0.5 * l2 * model.weights.iter().map(|w| w * w).sum::<f64>()
}

/// Gradient of [`logreg_loss`] as `(d weights, d bias)`.
pub fn logreg_gradient(
    model: &LogRegModel,
    features: &[Vec<f64>],
    labels: &[bool],
    l2: f64,
) -> (Vec<f64>, f64) {
    let n = features.len() as f64;
    let mut gw: Vec<f64> = model.weights.iter().map(|w| l2 * w).collect();
    let mut gb = 0.0;
    for (x, &y) in features.iter().zip(labels) {
        let r = (model.predict_proba(x) - if y { 1.0 } else { 0.0 }) / n;
        for (g, v) in gw.iter_mut().zip(x) {
            *g += r * v;
        }
        gb += r;
    }
    (gw, gb)
}

/// Full-batch gradient descent from zero; returns the model and the loss
/// before each epoch.
pub fn logreg_train_traced(
    features: &[Vec<f64>],
    labels: &[bool],
    params: &LogRegParams,
) -> Result<(LogRegModel, Vec<f64>)> {
    if features.len() != labels.len() || features.is_empty() {
        return Err(Error::Validation(
            "features and labels must be non-empty and aligned".into(),
        ));
    }
    if labels.iter().all(|&y| y) || labels.iter().all(|&y| !y) {
        return Err(Error::Validation(
            "logistic regression needs both classes".into(),
        ));
    }
    let dim = features[0].len();
    if features.iter().any(|x| x.len() != dim) {
        return Err(Error::Validation("feature rows differ in length".into()));
    }
    let mut model = LogRegModel::zeros(dim);
    let mut losses = Vec::with_capacity(params.epochs);
    for _ in 0..params.epochs {
        losses.push(logreg_loss(&model, features, labels, params.l2));
        let (gw, gb) = logreg_gradient(&model, features, labels, params.l2);
        for (w, g) in model.weights.iter_mut().zip(&gw) {
            *w -= params.learning_rate * g;
        }
        model.bias -= params.learning_rate * gb;
    }
    if !model.bias.is_finite() || model.weights.iter().any(|w| !w.is_finite()) {
        return Err(Error::Validation("logistic regression diverged".into()));
    }
    Ok((model, losses))
}

pub fn logreg_train(
    features: &[Vec<f64>],
    labels: &[bool],
    params: &LogRegParams,
) -> Result<LogRegModel> {
    logreg_train_traced(features, labels, params).map(|(m, _)| m)
}

/// Per-group accuracy; groups without examples are left out and listed in
/// `omitted`.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupEvaluation {
    pub performance: GroupPerformance,
    /// Group ids reported in `performance`, in order.
    pub groups: Vec<usize>,
    pub omitted: Vec<usize>,
}

pub fn evaluate_by_group<T: PartialEq>(
    predictions: &[T],
    truth: &[T],
    group_of_example: &[usize],
    group_count: usize,
) -> Result<GroupEvaluation> {
    if predictions.len() != truth.len() || truth.len() != group_of_example.len() {
        return Err(Error::Validation(
            "prediction, truth and group vectors differ in length".into(),
        ));
    }
    let mut correct = vec![0usize; group_count];
    let mut total = vec![0usize; group_count];
    for ((p, t), &g) in predictions.iter().zip(truth).zip(group_of_example) {
        if g >= group_count {
            return Err(Error::IdOutOfRange {
                id: g,
                count: group_count,
            });
        }
        total[g] += 1;
        correct[g] += usize::from(p == t);
    }
    let mut groups = Vec::new();
    let mut omitted = Vec::new();
    let mut q_by_group = Vec::new();
    let mut group_sizes = Vec::new();
    for g in 0..group_count {
        if total[g] == 0 {
            omitted.push(g);
        } else {
            groups.push(g);
            q_by_group.push(correct[g] as f64 / total[g] as f64);
            group_sizes.push(total[g]);
        }
    }
    let all: usize = total.iter().sum();
    let q_total = if all == 0 {
        0.0
    } else {
        correct.iter().sum::<usize>() as f64 / all as f64
    };
    Ok(GroupEvaluation {
        performance: GroupPerformance {
            q_total,
            q_by_group,
            group_sizes,
        },
        groups,
        omitted,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn knn_collinear_points() {
        let emb = EmbeddingMatrix::from_rows(&[vec![0.0], vec![1.0], vec![3.0]]).unwrap();
        let g = knn_graph(&emb, 1).unwrap();
        assert_eq!(g.neighbors(0), &[1]);
        assert_eq!(g.neighbors(1), &[0]);
        assert_eq!(g.neighbors(2), &[1]);
        let full = knn_graph(&emb, 2).unwrap();
        assert_eq!(full.arc_count(), 6);
        assert!(knn_graph(&emb, 3).is_err());
    }

    #[test]
    fn knn_out_degree_is_k() {
        let rows: Vec<Vec<f64>> = (0..10)
            .map(|i| vec![i as f64, (i * i) as f64 % 7.0])
            .collect();
        let emb = EmbeddingMatrix::from_rows(&rows).unwrap();
        let g = knn_graph(&emb, 3).unwrap();
        assert!((0..10).all(|v| g.out_degree(v) == 3));
    }

    #[test]
    fn propagation_fills_separated_clusters() {
        let mut rows = Vec::new();
        for i in 0..6 {
            rows.push(vec![i as f64 * 0.1, 0.0]);
        }
        for i in 0..6 {
            rows.push(vec![100.0 + i as f64 * 0.1, 0.0]);
        }
        let emb = EmbeddingMatrix::from_rows(&rows).unwrap();
        let knn = knn_graph(&emb, 2).unwrap();
        let mut train = vec![None; 12];
        train[0] = Some(1);
        train[11] = Some(0);
        let out = label_propagation(&knn, &train, &LabelPropParams::default()).unwrap();
        assert_eq!(&out[..6], &[1; 6]);
        assert_eq!(&out[6..], &[0; 6]);
    }

    #[test]
    fn propagation_uniform_labels_and_fixpoint() {
        let rows: Vec<Vec<f64>> = (0..8)
            .map(|i| vec![(i as f64).sin(), (i as f64).cos()])
            .collect();
        let emb = EmbeddingMatrix::from_rows(&rows).unwrap();
        let knn = knn_graph(&emb, 2).unwrap();
        let mut train = vec![None; 8];
        train[2] = Some(3);
        train[5] = Some(3);
        let out = label_propagation(&knn, &train, &LabelPropParams::default()).unwrap();
        assert!(out.iter().all(|&l| l == 3));

        train[0] = Some(0);
        let clamped: Vec<bool> = train.iter().map(Option::is_some).collect();
        let first = propagate(&knn, &train, &clamped, 100);
        assert!(first.converged);
        let again = propagate(&knn, &first.labels, &clamped, 100);
        assert_eq!(again.labels, first.labels);
        assert_eq!(again.iterations, 1);
        assert!(first
            .labels
            .iter()
            .zip(&train)
            .all(|(l, t)| t.is_none() || l == t));
    }

    #[test]
    fn propagation_needs_labels() {
        let emb = EmbeddingMatrix::from_rows(&[vec![0.0], vec![1.0]]).unwrap();
        let knn = knn_graph(&emb, 1).unwrap();
        assert!(label_propagation(&knn, &[None, None], &LabelPropParams::default()).is_err());
    }

    #[test]
    fn link_type_indexing() {
        let two = GroupAssignment::new(vec![0, 1]).unwrap();
        assert_eq!(link_type_count(&two), 3);
        assert_eq!(link_type(&two, 0, 0), 0);
        assert_eq!(link_type(&two, 1, 0), 1);
        assert_eq!(link_type(&two, 1, 1), 2);
        let three = GroupAssignment::new(vec![0, 1, 2]).unwrap();
        assert_eq!(link_type_count(&three), 6);
        let mut seen: Vec<usize> = (0..3)
            .flat_map(|u| (u..3).map(move |v| (u, v)))
            .map(|(u, v)| link_type(&three, u, v))
            .collect();
        seen.sort();
        assert_eq!(seen, vec![0, 1, 2, 3, 4, 5]);
        assert_eq!(link_type_name(&three, 4), "1-2");
    }

    #[test]
    fn edge_features() {
        let emb = EmbeddingMatrix::from_rows(&[vec![1.0, -1.0], vec![0.0, 1.0]]).unwrap();
        assert_eq!(edge_feature(&emb, 0, 1).unwrap(), vec![1.0, 4.0]);
        assert_eq!(edge_feature(&emb, 1, 0).unwrap(), vec![1.0, 4.0]);
        assert_eq!(edge_feature(&emb, 0, 0).unwrap(), vec![0.0, 0.0]);
        assert!(edge_feature(&emb, 0, 2).is_err());
    }

    #[test]
    fn logreg_separable_and_single_class() {
        let x: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64 / 10.0 - 1.0]).collect();
        let y: Vec<bool> = (0..20).map(|i| i >= 10).collect();
        let model = logreg_train(&x, &y, &LogRegParams::default()).unwrap();
        let acc = x
            .iter()
            .zip(&y)
            .filter(|(xi, &yi)| model.predict(xi) == yi)
            .count();
        assert_eq!(acc, 20);
        assert!(logreg_train(&x, &vec![true; 20], &LogRegParams::default()).is_err());
    }

    #[test]
    fn grouped_accuracy() {
        let pred = [1, 1, 0, 0];
        let truth = [1, 0, 0, 0];
        let groups = [0, 0, 1, 1];
        let e = evaluate_by_group(&pred, &truth, &groups, 3).unwrap();
        assert_eq!(e.performance.q_by_group, vec![0.5, 1.0]);
        assert_eq!(e.performance.q_total, 0.75);
        assert_eq!(e.omitted, vec![2]);
        let all_right = evaluate_by_group(&truth, &truth, &groups, 2).unwrap();
        assert_eq!(all_right.performance.q_by_group, vec![1.0, 1.0]);
        let wrong = [0, 1, 1, 1];
        let all_wrong = evaluate_by_group(&wrong, &truth, &groups, 2).unwrap();
        assert_eq!(all_wrong.performance.q_by_group, vec![0.0, 0.0]);
    }
}
