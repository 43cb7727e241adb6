//! Synthetic two-class graph benchmark: random trees versus trees with chords.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::filtrations::{degree_filtration, Graph};
use crate::nn::Sample;
use crate::persistence::diagrams;
use crate::Result;

pub const TREE_SIZES: std::ops::RangeInclusive<usize> = 20..=30;
pub const CHORD_COUNTS: std::ops::RangeInclusive<usize> = 3..=6;

/// Random recursive tree: vertex `i` attaches to a uniform earlier vertex.
pub fn random_tree<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Graph {
    let edges = (1..n).map(|i| (rng.gen_range(0..i), i)).collect();
    Graph {
        vertex_count: n,
        edges,
    }
}

/// Adds `count` distinct edges between non-adjacent vertex pairs.
pub fn add_chords<R: Rng + ?Sized>(graph: &mut Graph, count: usize, rng: &mut R) {
    let n = graph.vertex_count;
    let target = graph.edges.len() + count.min(n * (n - 1) / 2 - graph.edges.len());
    while graph.edges.len() < target {
        let (u, v) = (rng.gen_range(0..n), rng.gen_range(0..n));
        let key = (u.min(v), u.max(v));
        if u != v
            && !graph
                .edges
                .iter()
                .any(|&(a, b)| (a.min(b), a.max(b)) == key)
        {
            graph.edges.push(key);
        }
    }
}

/// `count` labeled graphs alternating class 0 (tree) and class 1 (tree plus
/// chords).
pub fn synthetic_graphs(count: usize, seed: u64) -> Vec<(Graph, usize)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| {
            let label = i % 2;
            let n = rng.gen_range(TREE_SIZES);
            let mut g = random_tree(n, &mut rng);
            if label == 1 {
                let chords = rng.gen_range(CHORD_COUNTS);
                add_chords(&mut g, chords, &mut rng);
            }
            (g, label)
        })
        .collect()
}

/// Degree-filtration diagrams `[dim 0, dim 1]` of a graph.
pub fn graph_sample(graph: &Graph, label: usize) -> Result<Sample> {
    let complex = degree_filtration(graph.vertex_count, &graph.edges)?;
    Ok(Sample {
        diagrams: diagrams(&complex).to_vec(),
        label,
    })
}

pub fn synthetic_samples(count: usize, seed: u64) -> Result<Vec<Sample>> {
    synthetic_graphs(count, seed)
        .iter()
        .map(|(g, label)| graph_sample(g, *label))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::persistence::component_count;

    #[test]
    fn classes_differ_by_cycle_count() {
        let graphs = synthetic_graphs(40, 9);
        for (g, label) in &graphs {
            assert!(TREE_SIZES.contains(&g.vertex_count));
            let cycles = g.edges.len() + 1 - g.vertex_count;
            if *label == 0 {
                assert_eq!(cycles, 0);
            } else {
                assert!(CHORD_COUNTS.contains(&cycles));
            }
            let complex = degree_filtration(g.vertex_count, &g.edges).unwrap();
            assert_eq!(component_count(&complex), 1);
            let s = graph_sample(g, *label).unwrap();
            assert_eq!(s.diagrams[1].essential().len(), cycles);
        }
    }

    #[test]
    fn seeded() {
        assert_eq!(synthetic_graphs(10, 1), synthetic_graphs(10, 1));
        assert_ne!(synthetic_graphs(10, 1), synthetic_graphs(10, 2));
    }
}
