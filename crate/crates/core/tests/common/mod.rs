#![allow(dead_code)]

use crosswalk::graph::{Graph, GroupAssignment};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Erdos-Renyi graph with unit weights.
pub fn random_graph(rng: &mut impl Rng, n: usize, p: f64, directed: bool) -> Graph {
    let mut arcs = Vec::new();
    for u in 0..n {
        for v in 0..n {
            if u == v || (!directed && v < u) {
                continue;
            }
            if rng.gen::<f64>() < p {
                arcs.push((u, v, 1.0));
            }
        }
    }
    Graph::from_arcs(n, arcs, directed).unwrap().0
}

/// Random labels with every one of the `c` groups non-empty.
pub fn random_groups(rng: &mut impl Rng, n: usize, c: usize) -> GroupAssignment {
    assert!(n >= c);
    let mut labels: Vec<usize> = (0..n).map(|_| rng.gen_range(0..c)).collect();
    for g in 0..c {
        labels[g] = g;
    }
    GroupAssignment::new(labels).unwrap()
}

/// Expected number of activated nodes under IC with a constant
/// probability, by enumerating every live/blocked pattern over the arcs.
/// Independent of the library's enumeration.
pub fn brute_force_spread(graph: &Graph, seeds: &[usize], p: f64) -> f64 {
    let arcs: Vec<(usize, usize)> = graph.arcs().map(|(u, v, _)| (u, v)).collect();
    let m = arcs.len();
    assert!(m <= 22, "too many arcs for brute force");
    let n = graph.node_count();
    let mut total = 0.0;
    for mask in 0u64..(1u64 << m) {
        let live = mask.count_ones() as i32;
        let weight = p.powi(live) * (1.0 - p).powi(m as i32 - live);
        if weight == 0.0 {
            continue;
        }
        let mut reached = vec![false; n];
        let mut stack: Vec<usize> = Vec::new();
        for &s in seeds {
            if !reached[s] {
                reached[s] = true;
                stack.push(s);
            }
        }
        while let Some(u) = stack.pop() {
            for (i, &(a, b)) in arcs.iter().enumerate() {
                if a == u && mask >> i & 1 == 1 && !reached[b] {
                    reached[b] = true;
                    stack.push(b);
                }
            }
        }
        total += weight * reached.iter().filter(|&&r| r).count() as f64;
    }
    total
}

/// All `k`-subsets of `0..n` in lexicographic order.
pub fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for v in start..n {
            cur.push(v);
            go(v + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, n, k, &mut Vec::new(), &mut out);
    out
}
