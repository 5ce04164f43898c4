mod common;

use crosswalk::graph::{Graph, GroupAssignment, Provenance};
use crosswalk::reweight::{
    crosswalk_reweight, estimate_proximity, exact_proximity, fairwalk_reweight, reweight, Method,
    ProximityScores, ReweightParams,
};
use proptest::prelude::*;
use rand::Rng;

fn undirected(n: usize, edges: &[(usize, usize)]) -> Graph {
    Graph::from_arcs(n, edges.iter().map(|&(u, v)| (u, v, 1.0)), false)
        .unwrap()
        .0
}

fn params(alpha: f64, p: f64) -> ReweightParams {
    ReweightParams {
        alpha,
        p_exponent: p,
        ..Default::default()
    }
}

#[test]
fn path_a_a_b_proximity_by_hand() {
    // 0(A) - 1(A) - 2(B), d = 2
    // root 0: step 1 at node 1, step 2 at 0 or 2 -> (0 + 1/2) / 2
    // root 1: step 1 at 0 or 2 -> 1/2; step 2 back at 1 -> 0; (1/2) / 2
    // root 2: step 1 at 1 -> 1; step 2 at 0 or 2 -> 1/2; (3/2) / 2
    let g = undirected(3, &[(0, 1), (1, 2)]);
    let groups = GroupAssignment::new(vec![0, 0, 1]).unwrap();
    let m = exact_proximity(&g, &groups, 2).unwrap().m;
    let want = [0.25, 0.25, 0.75];
    for (a, b) in m.iter().zip(want) {
        assert!((a - b).abs() < 1e-15, "{m:?}");
    }
    // d = 3 from root 0: visits 1, {0,2}, 1 -> (0 + 1/2 + 0) / 3
    let m3 = exact_proximity(&g, &groups, 3).unwrap().m;
    assert!((m3[0] - 1.0 / 6.0).abs() < 1e-15);
}

#[test]
fn four_node_golden_table() {
    // edges 0-1, 0-2, 0-3, 2-3; groups A A A B; d = 1 gives the share of
    // foreign neighbours: m = (1/3, 0, 1/2, 1)
    let g = undirected(4, &[(0, 1), (0, 2), (0, 3), (2, 3)]);
    let groups = GroupAssignment::new(vec![0, 0, 0, 1]).unwrap();
    let prox = exact_proximity(&g, &groups, 1).unwrap();
    let m_want = [1.0 / 3.0, 0.0, 0.5, 1.0];
    for (a, b) in prox.m.iter().zip(m_want) {
        assert!((a - b).abs() < 1e-15);
    }

    let rw = crosswalk_reweight(&g, &groups, &prox, &params(0.5, 2.0)).unwrap();
    // node 3 has no same-group neighbour: all mass split by m^2 = 1/9 : 1/4
    let table = [
        (0, 1, 0.0),
        (0, 2, 0.5),
        (0, 3, 0.5),
        (1, 0, 0.5),
        (2, 0, 0.5),
        (2, 3, 0.5),
        (3, 0, 4.0 / 13.0),
        (3, 2, 9.0 / 13.0),
    ];
    assert_eq!(rw.arc_count(), table.len());
    for (u, v, w) in table {
        let got = rw.weight(u, v).unwrap();
        assert!((got - w).abs() < 1e-12, "w'({u},{v}) = {got}, want {w}");
    }
}

#[test]
fn estimate_converges_to_exact() {
    let mut rng = common::rng(7);
    for case in 0..5 {
        let n = rng.gen_range(5..15);
        let g = common::random_graph(&mut rng, n, 0.4, false);
        let groups = common::random_groups(&mut rng, n, 2);
        let d = 1 + case % 3;
        let exact = exact_proximity(&g, &groups, d).unwrap();
        let est = estimate_proximity(
            &g,
            &groups,
            &ReweightParams {
                walk_count_r: 20_000,
                walk_length_d: d,
                rng_seed: case as u64,
                ..Default::default()
            },
        )
        .unwrap();
        for (a, b) in est.m.iter().zip(&exact.m) {
            assert!((a - b).abs() < 0.02, "case {case}: {a} vs {b}");
        }
    }
}

#[test]
fn proximity_refuses_reweighted_input() {
    let g = undirected(3, &[(0, 1), (1, 2)]);
    let groups = GroupAssignment::new(vec![0, 0, 1]).unwrap();
    let (rw, _) = reweight(Method::FairWalk, &g, &groups, &params(0.5, 2.0)).unwrap();
    assert!(estimate_proximity(&rw, &groups, &params(0.5, 2.0)).is_err());
}

#[test]
fn every_method_tags_its_output() {
    let g = undirected(3, &[(0, 1), (1, 2)]);
    let groups = GroupAssignment::new(vec![0, 0, 1]).unwrap();
    for (m, tag) in [
        (Method::DeepWalk, "identity"),
        (Method::FairWalk, "fairwalk"),
        (Method::CrossWalk, "crosswalk"),
    ] {
        let (rw, prox) = reweight(m, &g, &groups, &params(0.5, 2.0)).unwrap();
        assert_eq!(rw.provenance(), Provenance::Reweighted(tag));
        assert_eq!(prox.is_some(), m == Method::CrossWalk);
    }
}

/// Checks every bucket's mass and the within-bucket ratios against the
/// defining formula.
fn check_crosswalk(
    g: &Graph,
    groups: &GroupAssignment,
    m: &[f64],
    alpha: f64,
    p: f64,
) -> Result<(), TestCaseError> {
    let prox = ProximityScores { m: m.to_vec() };
    let rw = crosswalk_reweight(g, groups, &prox, &params(alpha, p)).unwrap();
    for v in 0..g.node_count() {
        let home = groups.group_of(v);
        let mut mass = vec![0.0; groups.group_count()];
        let mut score = vec![0.0; groups.group_count()];
        for (&u, (&w, &w2)) in g
            .neighbors(v)
            .iter()
            .zip(g.out_weights(v).iter().zip(rw.out_weights(v)))
        {
            mass[groups.group_of(u)] += w2;
            score[groups.group_of(u)] += w * m[u].powf(p);
        }
        let present: Vec<usize> = g.neighbors(v).iter().map(|&u| groups.group_of(u)).collect();
        let has_home = present.contains(&home);
        let foreign: Vec<usize> = (0..groups.group_count())
            .filter(|&c| c != home && present.contains(&c))
            .collect();
        if has_home {
            prop_assert!((mass[home] - (1.0 - alpha)).abs() < 1e-9);
        }
        for &c in &foreign {
            let want = if has_home { alpha } else { 1.0 } / foreign.len() as f64;
            prop_assert!(
                (mass[c] - want).abs() < 1e-9,
                "node {} group {}: {} vs {}",
                v,
                c,
                mass[c],
                want
            );
        }
        for (&u, (&w, &w2)) in g
            .neighbors(v)
            .iter()
            .zip(g.out_weights(v).iter().zip(rw.out_weights(v)))
        {
            let c = groups.group_of(u);
            if score[c] > 0.0 {
                let want = mass[c] * w * m[u].powf(p) / score[c];
                prop_assert!((w2 - want).abs() < 1e-9);
            }
        }
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn bucket_masses_follow_the_formula(
        seed in any::<u64>(),
        n in 4usize..30,
        c in 1usize..4,
        alpha in 0.01f64..0.99,
        p in prop::sample::select(vec![1.0, 2.0, 4.0, 8.0]),
    ) {
        let mut rng = common::rng(seed);
        let g = common::random_graph(&mut rng, n, 0.3, seed % 2 == 0);
        let groups = common::random_groups(&mut rng, n, c.min(n));
        // some exact zeros exercise the proportional fallback
        let m: Vec<f64> = (0..n).map(|_| if rng.gen_bool(0.2) { 0.0 } else { rng.gen() }).collect();
        check_crosswalk(&g, &groups, &m, alpha, p)?;
    }

    #[test]
    fn fairwalk_gives_each_present_group_equal_mass(seed in any::<u64>(), n in 3usize..30, c in 1usize..4) {
        let mut rng = common::rng(seed);
        let g = common::random_graph(&mut rng, n, 0.3, false);
        let groups = common::random_groups(&mut rng, n, c.min(n));
        let rw = fairwalk_reweight(&g, &groups).unwrap();
        for v in 0..n {
            let mut mass = vec![0.0; groups.group_count()];
            for (&u, &w) in g.neighbors(v).iter().zip(rw.out_weights(v)) {
                mass[groups.group_of(u)] += w;
            }
            let present = mass.iter().filter(|&&x| x > 0.0).count();
            for &x in mass.iter().filter(|&&x| x > 0.0) {
                prop_assert!((x - 1.0 / present as f64).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn exact_proximity_lies_in_unit_interval(seed in any::<u64>(), n in 2usize..20, d in 1usize..6) {
        let mut rng = common::rng(seed);
        let g = common::random_graph(&mut rng, n, 0.3, false);
        let groups = common::random_groups(&mut rng, n, 2.min(n));
        for x in exact_proximity(&g, &groups, d).unwrap().m {
            prop_assert!((0.0..=1.0 + 1e-12).contains(&x));
        }
    }
}

#[test]
fn larger_alpha_moves_mass_across_groups() {
    // a walk step from a boundary node crosses with probability alpha
    let g = undirected(4, &[(0, 1), (1, 2), (2, 3)]);
    let groups = GroupAssignment::new(vec![0, 0, 1, 1]).unwrap();
    let prox = exact_proximity(&g, &groups, 2).unwrap();
    let mut last = 0.0;
    for alpha in [0.1, 0.3, 0.5, 0.7, 0.9] {
        let rw = crosswalk_reweight(&g, &groups, &prox, &params(alpha, 2.0)).unwrap();
        let cross = rw.weight(1, 2).unwrap() / rw.out_weights(1).iter().sum::<f64>();
        assert!(cross > last);
        assert!((cross - alpha).abs() < 1e-12);
        last = cross;
    }
}
