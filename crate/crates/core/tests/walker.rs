mod common;

use crosswalk::graph::{Graph, IdMap};
use crosswalk::walker::{generate_walks, load_corpus, save_corpus, WalkMode, WalkParams, Walker};
use rand::Rng;

/// Pearson statistic of `counts` against probabilities `probs`.
fn chi_square(counts: &[f64], probs: &[f64]) -> f64 {
    let n: f64 = counts.iter().sum();
    counts
        .iter()
        .zip(probs)
        .map(|(&o, &p)| (o - n * p).powi(2) / (n * p))
        .sum()
}

#[test]
fn first_order_steps_follow_weights() {
    let (g, _) = Graph::from_arcs(
        5,
        [(0, 1, 1.0), (0, 2, 2.0), (0, 3, 3.0), (0, 4, 4.0)],
        true,
    )
    .unwrap();
    let w = Walker::new(&g);
    let mut rng = common::rng(1);
    let mut counts = [0.0; 4];
    for _ in 0..40_000 {
        counts[w.step(0, &mut rng).unwrap() - 1] += 1.0;
    }
    // chi-square, 3 degrees of freedom, 0.1% critical value
    assert!(
        chi_square(&counts, &[0.1, 0.2, 0.3, 0.4]) < 16.27,
        "{counts:?}"
    );
}

#[test]
fn second_order_steps_follow_node2vec_bias() {
    // prev = 0, cur = 1; neighbours of 1: 0 (return), 2 (adjacent to 0),
    // 3 (distance 2 from 0), each with weight w
    let arcs = [(0, 1, 1.0), (0, 2, 1.0), (1, 2, 2.0), (1, 3, 3.0)];
    let (g, _) = Graph::from_arcs(4, arcs, false).unwrap();
    let w = Walker::new(&g);
    let (p, q) = (0.5, 2.0);
    let unnorm = [1.0 / p, 2.0, 3.0 / q];
    let total: f64 = unnorm.iter().sum();
    let probs: Vec<f64> = unnorm.iter().map(|x| x / total).collect();
    let mut rng = common::rng(2);
    let mut counts = [0.0; 3];
    for _ in 0..40_000 {
        let x = w.step_biased(0, 1, p, q, &mut rng).unwrap();
        counts[[0, 99, 1, 2][x]] += 1.0;
    }
    // 2 degrees of freedom, 0.1% critical value
    assert!(chi_square(&counts, &probs) < 13.82, "{counts:?}");
}

/// Empirical distribution of (node, next, next-next) triples.
fn triple_distribution(
    g: &Graph,
    mode: WalkMode,
    seed: u64,
) -> std::collections::HashMap<(usize, usize, usize), f64> {
    let params = WalkParams {
        walks_per_node: 5000,
        walk_length: 3,
        mode,
        rng_seed: seed,
        ..Default::default()
    };
    let corpus = generate_walks(g, &params).unwrap();
    let mut dist = std::collections::HashMap::new();
    let total = corpus.walks.iter().filter(|w| w.len() == 3).count() as f64;
    for walk in corpus.walks.iter().filter(|w| w.len() == 3) {
        *dist.entry((walk[0], walk[1], walk[2])).or_insert(0.0) += 1.0 / total;
    }
    dist
}

fn total_variation(
    a: &std::collections::HashMap<(usize, usize, usize), f64>,
    b: &std::collections::HashMap<(usize, usize, usize), f64>,
) -> f64 {
    let keys: std::collections::HashSet<_> = a.keys().chain(b.keys()).collect();
    keys.into_iter()
        .map(|k| (a.get(k).unwrap_or(&0.0) - b.get(k).unwrap_or(&0.0)).abs())
        .sum::<f64>()
        / 2.0
}

#[test]
fn unbiased_second_order_matches_first_order() {
    let mut rng = common::rng(3);
    let g = common::random_graph(&mut rng, 12, 0.35, false);
    // exact law of a 3-node walk from a uniform root, conditioned on no truncation
    let mut exact = std::collections::HashMap::new();
    for a in 0..12 {
        for (&b, _) in g.neighbors(a).iter().zip(g.out_weights(a)) {
            for (&c, _) in g.neighbors(b).iter().zip(g.out_weights(b)) {
                let pr = 1.0 / (g.out_degree(a) * g.out_degree(b)) as f64;
                *exact.entry((a, b, c)).or_insert(0.0) += pr;
            }
        }
    }
    let mass: f64 = exact.values().sum();
    exact.values_mut().for_each(|v| *v /= mass);
    let first = triple_distribution(&g, WalkMode::FirstOrder, 10);
    let second = triple_distribution(&g, WalkMode::SecondOrder, 11);
    for (name, dist) in [("first", &first), ("second", &second)] {
        let tv = total_variation(dist, &exact);
        assert!(tv < 0.05, "{name}-order total variation {tv}");
    }
    assert!(total_variation(&first, &second) < 0.06);
}

#[test]
fn walks_are_valid_paths_of_full_length() {
    let mut rng = common::rng(4);
    let g = common::random_graph(&mut rng, 30, 0.2, false);
    let params = WalkParams {
        walks_per_node: 3,
        walk_length: 15,
        mode: WalkMode::SecondOrder,
        return_param: 0.5,
        inout_param: 2.0,
        rng_seed: 9,
    };
    let corpus = generate_walks(&g, &params).unwrap();
    assert_eq!(corpus.len(), 90);
    for (i, walk) in corpus.walks.iter().enumerate() {
        assert_eq!(walk[0], i % 30);
        if g.out_degree(walk[0]) > 0 {
            assert_eq!(walk.len(), 15);
        } else {
            assert_eq!(walk.len(), 1);
        }
        for pair in walk.windows(2) {
            assert!(g.has_arc(pair[0], pair[1]));
        }
    }
}

#[test]
fn corpus_does_not_depend_on_thread_count() {
    let mut rng = common::rng(5);
    let g = common::random_graph(&mut rng, 40, 0.15, false);
    let params = WalkParams {
        walks_per_node: 5,
        walk_length: 20,
        rng_seed: rng.gen(),
        ..Default::default()
    };
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| generate_walks(&g, &params).unwrap())
    };
    assert_eq!(run(1), run(4));
    let other = generate_walks(
        &g,
        &WalkParams {
            rng_seed: params.rng_seed + 1,
            ..params.clone()
        },
    )
    .unwrap();
    assert_ne!(run(1), other);
}

#[test]
fn corpus_file_round_trip() {
    let mut rng = common::rng(6);
    let g = common::random_graph(&mut rng, 10, 0.4, false);
    let corpus = generate_walks(
        &g,
        &WalkParams {
            walks_per_node: 2,
            walk_length: 6,
            ..Default::default()
        },
    )
    .unwrap();
    let ids = IdMap::numeric(10);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("walks.txt");
    save_corpus(&corpus, &ids, &path).unwrap();
    assert_eq!(load_corpus(&path, &ids).unwrap(), corpus);
}
