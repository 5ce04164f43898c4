//! Independent-Cascade diffusion, influence estimation and seed selection.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rand::seq::index;
use rand::Rng;
use rayon::prelude::*;

use crate::embedding::{euclidean, EmbeddingMatrix};
use crate::error::{Error, Result};
use crate::graph::{Graph, GroupAssignment, Provenance};
use crate::rng;

/// Upper bound on uncertain arcs (0 < p < 1) for [`exact_influence`].
pub const EXACT_INFLUENCE_MAX_ARCS: usize = 20;

const KMEDOIDS_MAX_ITERS: usize = 100;

/// Per-arc activation probabilities.
#[derive(Debug, Clone, PartialEq)]
pub enum ActivationProbs {
    /// The same probability on every arc.
    Constant(f64),
    /// One probability per arc, aligned with [`Graph::arcs`].
    PerArc(Vec<f64>),
}

impl ActivationProbs {
    #[inline]
    pub fn get(&self, arc: usize) -> f64 {
        match self {
            ActivationProbs::Constant(p) => *p,
            ActivationProbs::PerArc(ps) => ps[arc],
        }
    }

    pub fn validate(&self, graph: &Graph) -> Result<()> {
        let in_range = |p: f64| (0.0..=1.0).contains(&p);
        match self {
            ActivationProbs::Constant(p) if !in_range(*p) => Err(Error::InvalidParam(format!(
                "activation probability {p} outside [0,1]"
            ))),
            ActivationProbs::PerArc(ps) if ps.len() != graph.arc_count() => {
                Err(Error::Validation(format!(
                    "{} arc probabilities for {} arcs",
                    ps.len(),
                    graph.arc_count()
                )))
            }
            ActivationProbs::PerArc(ps) => match ps.iter().find(|&&p| !in_range(p)) {
                Some(p) => Err(Error::InvalidParam(format!(
                    "activation probability {p} outside [0,1]"
                ))),
                None => Ok(()),
            },
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IcParams {
    pub probs: ActivationProbs,
    /// Monte-Carlo repetitions.
    pub samples: usize,
    pub rng_seed: u64,
}

/// Distinct seed nodes in ascending order, at most `k` of them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeedSet {
    seeds: Vec<usize>,
    k: usize,
}

impl SeedSet {
    pub fn new(mut seeds: Vec<usize>, k: usize) -> Result<Self> {
        seeds.sort_unstable();
        if seeds.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Validation("duplicate seed node".into()));
        }
        if seeds.len() > k {
            return Err(Error::Validation(format!(
                "{} seeds exceed k = {k}",
                seeds.len()
            )));
        }
        Ok(SeedSet { seeds, k })
    }

    pub fn from_nodes(seeds: Vec<usize>) -> Result<Self> {
        let k = seeds.len();
        Self::new(seeds, k)
    }

    pub fn seeds(&self) -> &[usize] {
        &self.seeds
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.seeds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.seeds.is_empty()
    }

    fn check(&self, n: usize) -> Result<()> {
        match self.seeds.iter().find(|&&s| s >= n) {
            Some(&id) => Err(Error::IdOutOfRange { id, count: n }),
            None => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InfluenceEstimate {
    /// Expected fraction of all nodes activated.
    pub total_fraction: f64,
    /// Expected fraction activated within each group.
    pub per_group_fraction: Vec<f64>,
    pub group_sizes: Vec<usize>,
    /// Expected number of activated nodes.
    pub expected_count: f64,
    /// Standard error of `total_fraction`; zero for exact results.
    pub std_error: f64,
}

fn require_original(graph: &Graph) -> Result<()> {
    match graph.provenance() {
        Provenance::Original => Ok(()),
        p => Err(Error::ReweightedEvaluation(p.to_string())),
    }
}

/// Reusable buffers for cascade simulation.
struct CascadeBuffers {
    active: Vec<bool>,
    frontier: Vec<usize>,
    next: Vec<usize>,
    activated: Vec<usize>,
}

impl CascadeBuffers {
    fn new(n: usize) -> Self {
        CascadeBuffers {
            active: vec![false; n],
            frontier: Vec::new(),
            next: Vec::new(),
            activated: Vec::new(),
        }
    }

    /// Runs one cascade, leaving the activated nodes in `self.activated`.
    fn run<R: Rng + ?Sized>(
        &mut self,
        graph: &Graph,
        seeds: &[usize],
        probs: &ActivationProbs,
        rng: &mut R,
    ) {
        for &v in &self.activated {
            self.active[v] = false;
        }
        self.activated.clear();
        self.frontier.clear();
        for &s in seeds {
            if !self.active[s] {
                self.active[s] = true;
                self.activated.push(s);
                self.frontier.push(s);
            }
        }
        while !self.frontier.is_empty() {
            self.next.clear();
            for &u in &self.frontier {
                for arc in graph.arc_range(u) {
                    let v = graph.targets()[arc];
                    if self.active[v] {
                        continue;
                    }
                    let p = probs.get(arc);
                    if p > 0.0 && (p >= 1.0 || rng.gen::<f64>() < p) {
                        self.active[v] = true;
                        self.activated.push(v);
                        self.next.push(v);
                    }
                }
            }
            std::mem::swap(&mut self.frontier, &mut self.next);
        }
    }
}

/// One discrete-time cascade; returns the activated nodes in ascending order.
pub fn ic_simulate_once<R: Rng + ?Sized>(
    graph: &Graph,
    seeds: &SeedSet,
    probs: &ActivationProbs,
    rng: &mut R,
) -> Result<Vec<usize>> {
    seeds.check(graph.node_count())?;
    probs.validate(graph)?;
    let mut buf = CascadeBuffers::new(graph.node_count());
    buf.run(graph, seeds.seeds(), probs, rng);
    let mut out = buf.activated;
    out.sort_unstable();
    Ok(out)
}

fn check_inputs(
    graph: &Graph,
    groups: &GroupAssignment,
    seeds: &SeedSet,
    probs: &ActivationProbs,
) -> Result<()> {
    require_original(graph)?;
    if groups.node_count() != graph.node_count() {
        return Err(Error::Validation("group labels do not match graph".into()));
    }
    seeds.check(graph.node_count())?;
    probs.validate(graph)
}

/// Monte-Carlo influence over `params.samples` cascades on original weights.
/// Sample `i` uses stream `i`; counts are summed as integers so the result
/// does not depend on scheduling.
pub fn estimate_influence(
    graph: &Graph,
    groups: &GroupAssignment,
    seeds: &SeedSet,
    params: &IcParams,
) -> Result<InfluenceEstimate> {
    check_inputs(graph, groups, seeds, &params.probs)?;
    if params.samples == 0 {
        return Err(Error::InvalidParam("samples must be >= 1".into()));
    }
    let n = graph.node_count();
    let c = groups.group_count();
    let (per_group, sum_sq) = (0..params.samples)
        .into_par_iter()
        .map_init(
            || CascadeBuffers::new(n),
            |buf, i| {
                let mut rng = rng::stream(params.rng_seed, i as u64);
                buf.run(graph, seeds.seeds(), &params.probs, &mut rng);
                let mut counts = vec![0u64; c];
                for &v in &buf.activated {
                    counts[groups.group_of(v)] += 1;
                }
                let total = buf.activated.len() as u64;
                (counts, total * total)
            },
        )
        .reduce(
            || (vec![0u64; c], 0u64),
            |mut a, b| {
                for (x, y) in a.0.iter_mut().zip(&b.0) {
                    *x += y;
                }
                (a.0, a.1 + b.1)
            },
        );

    let samples = params.samples as f64;
    let sizes = groups.sizes();
    let total: u64 = per_group.iter().sum();
    let mean_count = total as f64 / samples;
    let std_error = if params.samples > 1 {
        let var = (sum_sq as f64 - samples * mean_count * mean_count) / (samples - 1.0);
        (var.max(0.0) / samples).sqrt() / n as f64
    } else {
        0.0
    };
    Ok(InfluenceEstimate {
        total_fraction: mean_count / n as f64,
        per_group_fraction: per_group
            .iter()
            .zip(&sizes)
            .map(|(&cnt, &size)| cnt as f64 / samples / size as f64)
            .collect(),
        group_sizes: sizes,
        expected_count: mean_count,
        std_error,
    })
}

/// Expected activations per group by enumerating every live/blocked
/// realization of the uncertain arcs.
fn exact_group_counts(
    graph: &Graph,
    groups: &GroupAssignment,
    seeds: &[usize],
    probs: &ActivationProbs,
) -> Result<Vec<f64>> {
    let uncertain: Vec<usize> = (0..graph.arc_count())
        .filter(|&a| {
            let p = probs.get(a);
            p > 0.0 && p < 1.0
        })
        .collect();
    if uncertain.len() > EXACT_INFLUENCE_MAX_ARCS {
        return Err(Error::GuardExceeded {
            what: "exact influence uncertain arcs",
            limit: EXACT_INFLUENCE_MAX_ARCS,
            actual: uncertain.len(),
        });
    }
    let n = graph.node_count();
    // per-node reach probability, Neumaier-compensated: up to 2^20 terms
    let mut reach = vec![0.0f64; n];
    let mut carry = vec![0.0f64; n];
    let mut live = vec![false; graph.arc_count()];
    let mut reached = vec![false; n];
    let mut stack = Vec::new();
    for mask in 0u64..(1u64 << uncertain.len()) {
        let mut weight = 1.0;
        for a in 0..graph.arc_count() {
            live[a] = probs.get(a) >= 1.0;
        }
        for (bit, &a) in uncertain.iter().enumerate() {
            let p = probs.get(a);
            if mask >> bit & 1 == 1 {
                live[a] = true;
                weight *= p;
            } else {
                weight *= 1.0 - p;
            }
        }
        reached.iter_mut().for_each(|r| *r = false);
        stack.clear();
        for &s in seeds {
            if !reached[s] {
                reached[s] = true;
                stack.push(s);
            }
        }
        while let Some(u) = stack.pop() {
            for a in graph.arc_range(u) {
                let v = graph.targets()[a];
                if live[a] && !reached[v] {
                    reached[v] = true;
                    stack.push(v);
                }
            }
        }
        for v in (0..n).filter(|&v| reached[v]) {
            let t = reach[v] + weight;
            carry[v] += if reach[v].abs() >= weight {
                (reach[v] - t) + weight
            } else {
                (weight - t) + reach[v]
            };
            reach[v] = t;
        }
    }
    let mut expected = vec![0.0; groups.group_count()];
    for v in 0..n {
        expected[groups.group_of(v)] += reach[v] + carry[v];
    }
    Ok(expected)
}

/// Exact expected influence by live-edge enumeration. Refuses graphs with
/// more than [`EXACT_INFLUENCE_MAX_ARCS`] uncertain arcs.
pub fn exact_influence(
    graph: &Graph,
    groups: &GroupAssignment,
    seeds: &SeedSet,
    probs: &ActivationProbs,
) -> Result<InfluenceEstimate> {
    check_inputs(graph, groups, seeds, probs)?;
    let expected = exact_group_counts(graph, groups, seeds.seeds(), probs)?;
    let sizes = groups.sizes();
    let count: f64 = expected.iter().sum();
    Ok(InfluenceEstimate {
        total_fraction: count / graph.node_count() as f64,
        per_group_fraction: expected
            .iter()
            .zip(&sizes)
            .map(|(&e, &s)| e / s as f64)
            .collect(),
        group_sizes: sizes,
        expected_count: count,
        std_error: 0.0,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMedoidsResult {
    pub medoids: Vec<usize>,
    /// Sum over nodes of the distance to the nearest medoid.
    pub objective: f64,
    /// Objective after each assignment step of the winning restart.
    pub trace: Vec<f64>,
}

/// Nearest medoid for every node (ties to the lower medoid id) and the
/// resulting objective.
fn assign(emb: &EmbeddingMatrix, medoids: &[usize]) -> (Vec<usize>, f64) {
    let (assignment, dists): (Vec<usize>, Vec<f64>) = (0..emb.node_count())
        .into_par_iter()
        .map(|v| {
            let mut best = (f64::INFINITY, usize::MAX, 0);
            for (slot, &m) in medoids.iter().enumerate() {
                let d = euclidean(emb.row(v), emb.row(m));
                if d < best.0 || (d == best.0 && m < best.1) {
                    best = (d, m, slot);
                }
            }
            (best.2, best.0)
        })
        .unzip();
    (assignment, dists.iter().sum())
}

/// Member minimizing summed in-cluster distance, ties to the lower id.
fn cluster_medoid(emb: &EmbeddingMatrix, members: &[usize]) -> usize {
    members
        .par_iter()
        .map(|&cand| {
            let cost: f64 = members
                .iter()
                .map(|&o| euclidean(emb.row(cand), emb.row(o)))
                .sum();
            (cost, cand)
        })
        .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
        .map(|(_, c)| c)
        .expect("non-empty cluster")
}

fn kmedoids_run(emb: &EmbeddingMatrix, mut medoids: Vec<usize>) -> KMedoidsResult {
    let k = medoids.len();
    let mut trace = Vec::new();
    let (mut assignment, mut objective) = assign(emb, &medoids);
    trace.push(objective);
    for _ in 0..KMEDOIDS_MAX_ITERS {
        let mut clusters: Vec<Vec<usize>> = vec![Vec::new(); k];
        for (v, &slot) in assignment.iter().enumerate() {
            clusters[slot].push(v);
        }
        let updated: Vec<usize> = clusters
            .iter()
            .zip(&medoids)
            .map(|(members, &m)| {
                if members.is_empty() {
                    m
                } else {
                    cluster_medoid(emb, members)
                }
            })
            .collect();
        let (next_assignment, next_objective) = assign(emb, &updated);
        if next_objective >= objective {
            break;
        }
        trace.push(next_objective);
        medoids = updated;
        assignment = next_assignment;
        objective = next_objective;
    }
    medoids.sort_unstable();
    KMedoidsResult {
        medoids,
        objective,
        trace,
    }
}

/// Alternating k-medoids from `restarts` uniformly random initial medoid
/// sets; the lowest objective wins.
pub fn kmedoids(
    emb: &EmbeddingMatrix,
    k: usize,
    restarts: usize,
    rng_seed: u64,
) -> Result<KMedoidsResult> {
    let n = emb.node_count();
    if k > n {
        return Err(Error::InvalidParam(format!("k = {k} exceeds {n} nodes")));
    }
    if k == 0 {
        return Ok(KMedoidsResult {
            medoids: Vec::new(),
            objective: f64::INFINITY,
            trace: Vec::new(),
        });
    }
    let mut best: Option<KMedoidsResult> = None;
    for restart in 0..restarts.max(1) {
        let mut rng = rng::stream(rng_seed, restart as u64);
        let init = index::sample(&mut rng, n, k).into_vec();
        let run = kmedoids_run(emb, init);
        if best.as_ref().is_none_or(|b| run.objective < b.objective) {
            best = Some(run);
        }
    }
    Ok(best.unwrap())
}

pub fn kmedoids_seeds(
    emb: &EmbeddingMatrix,
    k: usize,
    restarts: usize,
    rng_seed: u64,
) -> Result<SeedSet> {
    let result = kmedoids(emb, k, restarts, rng_seed)?;
    SeedSet::new(result.medoids, k)
}

/// Transmission probabilities scaled by reweighted arc weights:
/// `tau'_vu = tau * w'_vu / max_z w'_vz`. Nodes whose reweighted out-arcs
/// are all zero keep `tau`.
pub fn scale_transmission(
    original: &Graph,
    reweighted: &Graph,
    base_prob: f64,
) -> Result<Vec<f64>> {
    if !(0.0..=1.0).contains(&base_prob) {
        return Err(Error::InvalidParam(format!(
            "base probability {base_prob} outside [0,1]"
        )));
    }
    let same_support = original.node_count() == reweighted.node_count()
        && original.targets() == reweighted.targets()
        && (0..original.node_count()).all(|v| original.arc_range(v) == reweighted.arc_range(v));
    if !same_support {
        return Err(Error::Validation(
            "original and reweighted graphs have different arcs".into(),
        ));
    }
    let mut out = vec![base_prob; reweighted.arc_count()];
    for v in 0..reweighted.node_count() {
        let max = reweighted
            .out_weights(v)
            .iter()
            .copied()
            .fold(0.0, f64::max);
        if max > 0.0 {
            for a in reweighted.arc_range(v) {
                out[a] = base_prob * reweighted.weights()[a] / max;
            }
        }
    }
    Ok(out)
}

struct HeapEntry<G> {
    gain: G,
    node: usize,
    round: usize,
}

impl<G: PartialOrd> PartialEq for HeapEntry<G> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl<G: PartialOrd> Eq for HeapEntry<G> {}

impl<G: PartialOrd> PartialOrd for HeapEntry<G> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<G: PartialOrd> Ord for HeapEntry<G> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.gain
            .partial_cmp(&other.gain)
            .unwrap_or(Ordering::Equal)
            .then_with(|| other.node.cmp(&self.node))
    }
}

/// Lazy greedy (CELF). `initial` holds every node's gain on the empty set,
/// `marginal` the current gain of a node, `commit` records a selection.
/// Ties go to the lower node id, so the result equals plain greedy for a
/// submodular objective.
fn lazy_greedy<G, M, C>(initial: Vec<G>, k: usize, mut marginal: M, mut commit: C) -> Vec<usize>
where
    G: PartialOrd + Copy,
    M: FnMut(usize) -> G,
    C: FnMut(usize),
{
    let mut heap: BinaryHeap<HeapEntry<G>> = initial
        .into_iter()
        .enumerate()
        .map(|(node, gain)| HeapEntry {
            gain,
            node,
            round: 0,
        })
        .collect();
    let mut chosen = Vec::with_capacity(k);
    while chosen.len() < k {
        let Some(top) = heap.pop() else { break };
        if top.round == chosen.len() {
            commit(top.node);
            chosen.push(top.node);
        } else {
            heap.push(HeapEntry {
                gain: marginal(top.node),
                node: top.node,
                round: chosen.len(),
            });
        }
    }
    chosen
}

/// Greedy seed selection for an arbitrary monotone submodular set function
/// `f` over `0..node_count`.
pub fn greedy_with_oracle<F>(node_count: usize, k: usize, mut f: F) -> Result<SeedSet>
where
    F: FnMut(&[usize]) -> f64,
{
    if k > node_count {
        return Err(Error::InvalidParam(format!(
            "k = {k} exceeds {node_count} nodes"
        )));
    }
    use std::cell::{Cell, RefCell};

    let base = f(&[]);
    let initial: Vec<f64> = (0..node_count).map(|v| f(&[v]) - base).collect();
    let f = RefCell::new(f);
    let chosen = RefCell::new(Vec::<usize>::new());
    let current = Cell::new(base);
    let seeds = lazy_greedy(
        initial,
        k,
        |v| {
            let mut with = chosen.borrow().clone();
            with.push(v);
            (f.borrow_mut())(&with) - current.get()
        },
        |v| {
            chosen.borrow_mut().push(v);
            current.set((f.borrow_mut())(&chosen.borrow()));
        },
    );
    SeedSet::new(seeds, k)
}

/// Live-edge realization: the arcs that transmit in one cascade, in CSR
/// form.
struct LiveGraph {
    offsets: Vec<u32>,
    targets: Vec<u32>,
}

impl LiveGraph {
    fn sample<R: Rng + ?Sized>(graph: &Graph, probs: &ActivationProbs, rng: &mut R) -> Self {
        let mut offsets = Vec::with_capacity(graph.node_count() + 1);
        let mut targets = Vec::new();
        offsets.push(0);
        for v in 0..graph.node_count() {
            for a in graph.arc_range(v) {
                let p = probs.get(a);
                if p > 0.0 && (p >= 1.0 || rng.gen::<f64>() < p) {
                    targets.push(graph.targets()[a] as u32);
                }
            }
            offsets.push(targets.len() as u32);
        }
        LiveGraph { offsets, targets }
    }

    fn out(&self, v: usize) -> &[u32] {
        &self.targets[self.offsets[v] as usize..self.offsets[v + 1] as usize]
    }

    /// Counts nodes reachable from `start` that are not yet covered;
    /// marks them covered when `mark` is set.
    fn spread(
        &self,
        start: usize,
        covered: &mut [bool],
        mark: bool,
        stack: &mut Vec<usize>,
        seen: &mut Vec<usize>,
    ) -> u64 {
        if covered[start] {
            return 0;
        }
        stack.clear();
        seen.clear();
        covered[start] = true;
        seen.push(start);
        stack.push(start);
        while let Some(u) = stack.pop() {
            for &t in self.out(u) {
                let t = t as usize;
                if !covered[t] {
                    covered[t] = true;
                    seen.push(t);
                    stack.push(t);
                }
            }
        }
        if !mark {
            for &v in seen.iter() {
                covered[v] = false;
            }
        }
        seen.len() as u64
    }
}

/// Greedy influence maximization with Monte-Carlo gains. The same
/// `mc_samples` live-edge realizations are reused for every gain
/// evaluation, which makes the estimated objective itself monotone and
/// submodular, so lazy evaluation selects exactly what plain greedy would.
pub fn greedy_seeds(
    graph: &Graph,
    probs: &ActivationProbs,
    k: usize,
    mc_samples: usize,
    rng_seed: u64,
) -> Result<SeedSet> {
    SeedSet::new(greedy_order(graph, probs, k, mc_samples, rng_seed)?, k)
}

/// The nodes [`greedy_seeds`] picks, in selection order. Every prefix of
/// length `j` is the greedy solution for `k = j`.
pub fn greedy_order(
    graph: &Graph,
    probs: &ActivationProbs,
    k: usize,
    mc_samples: usize,
    rng_seed: u64,
) -> Result<Vec<usize>> {
    probs.validate(graph)?;
    let n = graph.node_count();
    if k > n {
        return Err(Error::InvalidParam(format!("k = {k} exceeds {n} nodes")));
    }
    if mc_samples == 0 {
        return Err(Error::InvalidParam("mc_samples must be >= 1".into()));
    }
    let realizations: Vec<LiveGraph> = (0..mc_samples)
        .into_par_iter()
        .map(|s| LiveGraph::sample(graph, probs, &mut rng::stream(rng_seed, s as u64)))
        .collect();
    let covered: std::cell::RefCell<Vec<Vec<bool>>> =
        std::cell::RefCell::new(vec![vec![false; n]; mc_samples]);

    let initial: Vec<u64> = (0..n)
        .into_par_iter()
        .map_init(
            || (vec![false; n], Vec::new(), Vec::new()),
            |(mask, stack, seen), v| {
                realizations
                    .iter()
                    .map(|live| live.spread(v, mask, false, stack, seen))
                    .sum()
            },
        )
        .collect();

    let seeds = lazy_greedy(
        initial,
        k,
        |v| {
            let mut cov = covered.borrow_mut();
            let (mut stack, mut seen) = (Vec::new(), Vec::new());
            realizations
                .iter()
                .zip(cov.iter_mut())
                .map(|(live, mask)| live.spread(v, mask, false, &mut stack, &mut seen))
                .sum::<u64>()
        },
        |v| {
            let mut cov = covered.borrow_mut();
            let (mut stack, mut seen) = (Vec::new(), Vec::new());
            for (live, mask) in realizations.iter().zip(cov.iter_mut()) {
                live.spread(v, mask, true, &mut stack, &mut seen);
            }
        },
    );
    Ok(seeds)
}
