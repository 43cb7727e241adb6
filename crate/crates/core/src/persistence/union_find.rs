use super::{FilteredComplex, PersistenceDiagram};

/// Disjoint sets that remember, per root, the eldest vertex of the set.
struct Components {
    parent: Vec<usize>,
    size: Vec<usize>,
    // (value, vertex id) of the minimum vertex, compared lexicographically
    eldest: Vec<(f64, usize)>,
}

impl Components {
    fn new(values: &[f64]) -> Self {
        let n = values.len();
        Self {
            parent: (0..n).collect(),
            size: vec![1; n],
            eldest: values.iter().copied().zip(0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn is_older(a: (f64, usize), b: (f64, usize)) -> bool {
        a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).is_lt()
    }

    /// Merges the sets of two distinct roots and returns the eldest vertex
    /// of the set that dies.
    fn merge(&mut self, a: usize, b: usize) -> (f64, usize) {
        let (ea, eb) = (self.eldest[a], self.eldest[b]);
        let (survivor_eldest, dying_eldest) = if Self::is_older(ea, eb) {
            (ea, eb)
        } else {
            (eb, ea)
        };
        let (big, small) = if self.size[a] >= self.size[b] {
            (a, b)
        } else {
            (b, a)
        };
        self.parent[small] = big;
        self.size[big] += self.size[small];
        self.eldest[big] = survivor_eldest;
        dying_eldest
    }
}

/// Dimension-0 persistence by union-find over edges in increasing value
/// order. On every merge the younger component dies at the merging edge
/// value; ties in birth go to the smaller eldest vertex id.
pub fn compute_persistence_dim0(complex: &FilteredComplex) -> PersistenceDiagram {
    let values = complex.vertex_values();
    let mut sets = Components::new(values);
    let mut points = Vec::new();

    for e in complex.edge_order() {
        let (u, v) = complex.edges()[e];
        let (ru, rv) = (sets.find(u), sets.find(v));
        if ru == rv {
            continue;
        }
        let (birth, _) = sets.merge(ru, rv);
        let death = complex.edge_values()[e];
        if death > birth {
            points.push((birth, death));
        }
    }

    let roots: Vec<usize> = (0..values.len()).filter(|&x| sets.find(x) == x).collect();
    let essential = roots.into_iter().map(|root| sets.eldest[root].0).collect();

    PersistenceDiagram::new(0, points, essential).expect("union-find output is a valid diagram")
}

/// Dimension-1 features of a graph. Without 2-simplices every cycle is
/// essential; each one is born at the value of the edge that closes it.
pub fn compute_essential_dim1(complex: &FilteredComplex) -> PersistenceDiagram {
    let mut sets = Components::new(complex.vertex_values());
    let mut essential = Vec::new();
    for e in complex.edge_order() {
        let (u, v) = complex.edges()[e];
        let (ru, rv) = (sets.find(u), sets.find(v));
        if ru == rv {
            essential.push(complex.edge_values()[e]);
        } else {
            sets.merge(ru, rv);
        }
    }
    PersistenceDiagram::new(1, Vec::new(), essential).expect("cycle births are finite")
}

/// Number of connected components of the underlying graph.
pub fn component_count(complex: &FilteredComplex) -> usize {
    let mut sets = Components::new(complex.vertex_values());
    let mut count = complex.vertex_count();
    for &(u, v) in complex.edges() {
        let (ru, rv) = (sets.find(u), sets.find(v));
        if ru != rv {
            sets.merge(ru, rv);
            count -= 1;
        }
    }
    count
}

#[cfg(test)]
mod tests {
    use super::*;

    fn complex(n: usize, edges: &[(usize, usize)], values: &[f64]) -> FilteredComplex {
        FilteredComplex::from_graph(n, edges, values).unwrap()
    }

    #[test]
    fn star_with_degree_values() {
        let c = complex(
            4,
            &[(0, 1), (0, 2), (0, 3)],
            &[1.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0],
        );
        let d = compute_persistence_dim0(&c);
        assert_eq!(d.points(), &[(1.0 / 3.0, 1.0), (1.0 / 3.0, 1.0)]);
        assert_eq!(d.essential(), &[1.0 / 3.0]);
        assert!(compute_essential_dim1(&c).essential().is_empty());
    }

    #[test]
    fn single_vertex() {
        let d = compute_persistence_dim0(&complex(1, &[], &[0.0]));
        assert!(d.points().is_empty());
        assert_eq!(d.essential(), &[0.0]);
    }

    #[test]
    fn flat_triangle() {
        let c = complex(3, &[(0, 1), (1, 2), (0, 2)], &[1.0; 3]);
        let d0 = compute_persistence_dim0(&c);
        assert!(d0.points().is_empty());
        assert_eq!(d0.essential(), &[1.0]);
        assert_eq!(compute_essential_dim1(&c).essential(), &[1.0]);
    }

    #[test]
    fn two_triangles() {
        let edges = [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)];
        let c = complex(6, &edges, &[1.0, 1.0, 1.0, 2.0, 2.0, 2.0]);
        assert_eq!(compute_essential_dim1(&c).essential(), &[1.0, 2.0]);
        assert_eq!(compute_persistence_dim0(&c).essential(), &[1.0, 2.0]);
        assert_eq!(component_count(&c), 2);
    }

    #[test]
    fn path_is_a_tree() {
        let c = complex(4, &[(0, 1), (1, 2), (2, 3)], &[0.0, 3.0, 1.0, 2.0]);
        assert!(compute_essential_dim1(&c).essential().is_empty());
        let d = compute_persistence_dim0(&c);
        // 2 is born at 1 and merges with 0 at 3; 3 joins 2 at value 2 (zero persistence).
        assert_eq!(d.points(), &[(1.0, 3.0)]);
        assert_eq!(d.essential(), &[0.0]);
    }
}
