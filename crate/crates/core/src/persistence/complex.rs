use crate::{Error, Result};

/// A 1-dimensional simplicial complex whose vertices carry filtration values.
///
/// Vertex ids are `0..vertex_count()`. Edges are stored with the smaller
/// endpoint first, and each edge value is the maximum of its endpoint values.
#[derive(Clone, Debug, PartialEq)]
pub struct FilteredComplex {
    vertex_values: Vec<f64>,
    edges: Vec<(usize, usize)>,
    edge_values: Vec<f64>,
}

impl FilteredComplex {
    /// Builds the complex of a graph, lifting vertex values to edges by max.
    pub fn from_graph(
        vertex_count: usize,
        edges: &[(usize, usize)],
        vertex_values: &[f64],
    ) -> Result<Self> {
        if vertex_values.len() != vertex_count {
            return Err(Error::validation(format!(
                "expected {vertex_count} vertex values, got {}",
                vertex_values.len()
            )));
        }
        if let Some(i) = vertex_values.iter().position(|v| !v.is_finite()) {
            return Err(Error::validation(format!(
                "vertex {i} has non-finite value {}",
                vertex_values[i]
            )));
        }

        let mut seen = std::collections::HashSet::with_capacity(edges.len());
        let mut normalized = Vec::with_capacity(edges.len());
        for (index, &(u, v)) in edges.iter().enumerate() {
            let bad = |reason| Error::InvalidEdge {
                index,
                u,
                v,
                reason,
            };
            if u >= vertex_count || v >= vertex_count {
                return Err(bad("endpoint out of range"));
            }
            if u == v {
                return Err(bad("self-loop"));
            }
            let e = (u.min(v), u.max(v));
            if !seen.insert(e) {
                return Err(bad("duplicate edge"));
            }
            normalized.push(e);
        }

        let edge_values = normalized
            .iter()
            .map(|&(u, v)| vertex_values[u].max(vertex_values[v]))
            .collect();
        Ok(Self {
            vertex_values: vertex_values.to_vec(),
            edges: normalized,
            edge_values,
        })
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_values.len()
    }

    pub fn vertex_values(&self) -> &[f64] {
        &self.vertex_values
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edge_values(&self) -> &[f64] {
        &self.edge_values
    }

    /// The sorted distinct vertex values `a_1 < ... < a_m`.
    pub fn filtration_values(&self) -> Vec<f64> {
        let mut values = self.vertex_values.clone();
        values.sort_by(f64::total_cmp);
        values.dedup();
        values
    }

    /// Edge indices in processing order: by value, then by endpoints.
    pub(crate) fn edge_order(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.edges.len()).collect();
        order.sort_by(|&a, &b| {
            self.edge_values[a]
                .total_cmp(&self.edge_values[b])
                .then(self.edges[a].cmp(&self.edges[b]))
        });
        order
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_edge_lifts_by_max() {
        let c = FilteredComplex::from_graph(2, &[(0, 1)], &[0.2, 0.9]).unwrap();
        assert_eq!(c.edge_values(), &[0.9]);
    }

    #[test]
    fn lone_vertex_has_no_edges() {
        let c = FilteredComplex::from_graph(1, &[], &[0.0]).unwrap();
        assert!(c.edges().is_empty());
        assert_eq!(c.filtration_values(), vec![0.0]);
    }

    #[test]
    fn equal_values_on_triangle() {
        let c = FilteredComplex::from_graph(3, &[(0, 1), (1, 2), (2, 0)], &[1.0; 3]).unwrap();
        assert_eq!(c.edge_values(), &[1.0, 1.0, 1.0]);
        assert_eq!(c.edges()[2], (0, 2));
    }

    #[test]
    fn rejects_bad_edges_by_index() {
        let err = FilteredComplex::from_graph(3, &[(0, 1), (1, 0)], &[0.0; 3]).unwrap_err();
        assert!(matches!(
            err,
            Error::InvalidEdge {
                index: 1,
                reason: "duplicate edge",
                ..
            }
        ));

        let err = FilteredComplex::from_graph(3, &[(2, 2)], &[0.0; 3]).unwrap_err();
        assert!(matches!(
            err,
            Error::InvalidEdge {
                index: 0,
                reason: "self-loop",
                ..
            }
        ));

        let err = FilteredComplex::from_graph(3, &[(0, 1), (0, 3)], &[0.0; 3]).unwrap_err();
        assert!(err.to_string().contains("edge 1 (0, 3)"));
    }

    #[test]
    fn rejects_non_finite_values() {
        assert!(FilteredComplex::from_graph(2, &[], &[0.0, f64::NAN]).is_err());
        assert!(FilteredComplex::from_graph(2, &[], &[0.0]).is_err());
    }
}
