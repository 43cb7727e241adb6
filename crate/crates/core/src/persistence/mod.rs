//! Filtered 1-dimensional complexes and their persistence diagrams.

mod complex;
mod diagram;
mod oracle;
mod union_find;

pub use complex::FilteredComplex;
pub use diagram::PersistenceDiagram;
pub use oracle::{
    brute_force_betti, brute_force_betti_with_limit, diagram_from_betti, BettiTable,
    DEFAULT_ORACLE_MAX_VERTICES,
};
pub use union_find::{component_count, compute_essential_dim1, compute_persistence_dim0};

/// Builds the filtered complex of a graph with the given vertex values.
pub fn build_complex_from_graph(
    vertex_count: usize,
    edges: &[(usize, usize)],
    vertex_values: &[f64],
) -> crate::Result<FilteredComplex> {
    FilteredComplex::from_graph(vertex_count, edges, vertex_values)
}

/// Dimension-0 and dimension-1 diagrams of a complex, in that order.
pub fn diagrams(complex: &FilteredComplex) -> [PersistenceDiagram; 2] {
    [
        compute_persistence_dim0(complex),
        compute_essential_dim1(complex),
    ]
}
