use proptest::prelude::*;

use topolayer_core::baseline::vectorize_diagram;
use topolayer_core::io::{from_json_str, to_canonical_json};
use topolayer_core::layer::{LayerParams, StructureElement};
use topolayer_core::metrics::{bottleneck, bottleneck_points, wasserstein, wasserstein_points};
use topolayer_core::persistence::{
    brute_force_betti, component_count, diagram_from_betti, diagrams,
};
use topolayer_core::{FilteredComplex, Norm, PersistenceDiagram};

/// Vertex values on a small grid (to force ties) plus a simple edge set.
fn graph() -> impl Strategy<Value = (Vec<f64>, Vec<(usize, usize)>)> {
    (1usize..=8).prop_flat_map(|n| {
        let pairs: Vec<(usize, usize)> = (0..n)
            .flat_map(|u| (u + 1..n).map(move |v| (u, v)))
            .collect();
        let max = pairs.len().min(14);
        (
            prop::collection::vec((0u8..=4).prop_map(|k| f64::from(k) / 4.0), n),
            prop::sample::subsequence(pairs, 0..=max),
        )
    })
}

fn points(max: usize) -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec(
        (0.0f64..1.0, 0.0f64..1.0).prop_map(|(b, p)| (b, b + p)),
        0..=max,
    )
}

fn diagram(points: &[(f64, f64)]) -> PersistenceDiagram {
    PersistenceDiagram::new(0, points.to_vec(), vec![]).unwrap()
}

fn norm() -> impl Strategy<Value = Norm> {
    prop_oneof![Just(Norm::L(1)), Just(Norm::L(2)), Just(Norm::Infinity)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn union_find_matches_oracle((values, edges) in graph()) {
        let c = FilteredComplex::from_graph(values.len(), &edges, &values).unwrap();
        let table = brute_force_betti(&c).unwrap();
        let fast = diagrams(&c);
        prop_assert_eq!(&fast[0], &diagram_from_betti(&table, 0).unwrap());
        prop_assert_eq!(&fast[1], &diagram_from_betti(&table, 1).unwrap());
        prop_assert_eq!(fast[0].essential().len(), component_count(&c));
        prop_assert_eq!(fast[1].essential().len(), edges.len() + component_count(&c) - values.len());
    }

    #[test]
    fn diagrams_ignore_vertex_labels_and_edge_order(
        (values, edges) in graph(),
        seed in any::<u64>(),
    ) {
        use rand::seq::SliceRandom;
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let n = values.len();
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut rng);
        let mut relabeled_values = vec![0.0; n];
        for (v, &p) in perm.iter().enumerate() {
            relabeled_values[p] = values[v];
        }
        let mut relabeled_edges: Vec<(usize, usize)> =
            edges.iter().map(|&(u, v)| if rng.gen_bool(0.5) { (perm[u], perm[v]) } else { (perm[v], perm[u]) }).collect();
        relabeled_edges.shuffle(&mut rng);

        let a = FilteredComplex::from_graph(n, &edges, &values).unwrap();
        let b = FilteredComplex::from_graph(n, &relabeled_edges, &relabeled_values).unwrap();
        prop_assert_eq!(diagrams(&a), diagrams(&b));
    }

    #[test]
    fn metric_axioms(d in points(6), e in points(6), f in points(6), q in norm(), p in 1u32..=3) {
        let (d, e, f) = (diagram(&d), diagram(&e), diagram(&f));
        let w = |x: &PersistenceDiagram, y: &PersistenceDiagram| wasserstein(x, y, p, q).unwrap();
        prop_assert!(w(&d, &d).abs() <= 1e-12);
        prop_assert!((w(&d, &e) - w(&e, &d)).abs() <= 1e-9);
        prop_assert!(w(&d, &f) <= w(&d, &e) + w(&e, &f) + 1e-9);
        let b = |x: &PersistenceDiagram, y: &PersistenceDiagram| bottleneck(x, y, q);
        prop_assert!((b(&d, &e) - b(&e, &d)).abs() <= 1e-12);
        prop_assert!(b(&d, &f) <= b(&d, &e) + b(&e, &f) + 1e-9);
        // w_∞ never exceeds w_p
        prop_assert!(b(&d, &e) <= w(&d, &e) + 1e-9);
    }

    #[test]
    fn distances_ignore_diagonal_points(d in points(5), e in points(5), x in 0.0f64..1.0, q in norm()) {
        let mut padded = d.clone();
        padded.push((x, x));
        // raw point lists, so the solver itself sees the diagonal point
        prop_assert!((wasserstein_points(&d, &e, 1, q) - wasserstein_points(&padded, &e, 1, q)).abs() <= 1e-12);
        prop_assert_eq!(bottleneck_points(&d, &e, q), bottleneck_points(&padded, &e, q));
    }

    #[test]
    fn vectorization_invariants(mut pts in points(10), n in 1usize..12, extra in 1usize..6, x in 0.0f64..1.0) {
        let v = vectorize_diagram(&diagram(&pts), n, None).unwrap().into_values();
        prop_assert_eq!(v.len(), n);
        prop_assert!(v.windows(2).all(|w| w[0] >= w[1]));
        prop_assert!(v.iter().all(|&x| x >= 0.0));

        let longer = vectorize_diagram(&diagram(&pts), n + extra, None).unwrap().into_values();
        prop_assert_eq!(&longer[..n], &v[..]);

        pts.reverse();
        pts.push((x, x));
        prop_assert_eq!(vectorize_diagram(&diagram(&pts), n, None).unwrap().into_values(), v);
    }

    #[test]
    fn layer_ignores_point_order_and_diagonal(
        mut pts in points(8),
        mu in (0.0f64..1.5, 0.0f64..1.0),
        sigma in (0.5f64..5.0, 0.5f64..5.0),
        nu in 0.01f64..0.5,
        x in -1.0f64..2.0,
    ) {
        let params = LayerParams::new(vec![StructureElement::new([mu.0, mu.1], [sigma.0, sigma.1])], nu, 0.0).unwrap();
        let before = params.forward_points(&pts).unwrap();
        pts.reverse();
        pts.insert(pts.len() / 2, (x, x));
        prop_assert_eq!(params.forward_points(&pts).unwrap(), before);
    }

    #[test]
    fn diagram_json_round_trips(pts in points(8), ess in prop::collection::vec(-1.0f64..1.0, 0..4), dim in 0usize..2) {
        let d = PersistenceDiagram::new(dim, pts, ess).unwrap();
        let text = to_canonical_json(&d).unwrap();
        prop_assert_eq!(from_json_str::<PersistenceDiagram>(&text).unwrap(), d);
    }
}
