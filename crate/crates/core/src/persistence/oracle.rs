//! Persistent Betti numbers by direct rank computation, and the diagram they
//! determine. This path shares nothing with union-find and serves as its
//! reference.

use crate::gf2::{self, BitVector};
use crate::{Error, Result};

use super::{FilteredComplex, PersistenceDiagram};

/// Vertex bound used by [`brute_force_betti`].
pub const DEFAULT_ORACLE_MAX_VERTICES: usize = 32;

/// `β_n^{i,j}` for `n ∈ {0, 1}` and `0 ≤ i ≤ j ≤ m`, where index 0 is the
/// empty complex and index `i ≥ 1` is the sublevel set at `a_i`.
#[derive(Clone, Debug, PartialEq)]
pub struct BettiTable {
    filtration_values: Vec<f64>,
    // betti[n][i][j], only i <= j is meaningful
    betti: [Vec<Vec<usize>>; 2],
}

impl BettiTable {
    pub fn filtration_values(&self) -> &[f64] {
        &self.filtration_values
    }

    /// Number of filtration steps `m`.
    pub fn steps(&self) -> usize {
        self.filtration_values.len()
    }

    /// `β_dim^{i,j}`. Panics unless `dim ≤ 1` and `i ≤ j ≤ m`.
    pub fn get(&self, dim: usize, i: usize, j: usize) -> usize {
        assert!(i <= j, "persistent Betti numbers need i <= j");
        self.betti[dim][i][j]
    }
}

pub fn brute_force_betti(complex: &FilteredComplex) -> Result<BettiTable> {
    brute_force_betti_with_limit(complex, DEFAULT_ORACLE_MAX_VERTICES)
}

pub fn brute_force_betti_with_limit(
    complex: &FilteredComplex,
    max_vertices: usize,
) -> Result<BettiTable> {
    let n = complex.vertex_count();
    if n > max_vertices {
        return Err(Error::ComplexityGuard {
            size: n,
            limit: max_vertices,
        });
    }
    let a = complex.filtration_values();
    let m = a.len();

    // Sublevel membership at step i (1-based); step 0 is empty.
    let vertices_at = |i: usize| -> Vec<usize> {
        if i == 0 {
            return Vec::new();
        }
        (0..n)
            .filter(|&v| complex.vertex_values()[v] <= a[i - 1])
            .collect()
    };
    let boundary_at = |i: usize| -> Vec<BitVector> {
        if i == 0 {
            return Vec::new();
        }
        complex
            .edges()
            .iter()
            .zip(complex.edge_values())
            .filter(|(_, &value)| value <= a[i - 1])
            .map(|(&(u, v), _)| {
                let mut col = BitVector::zeros(n);
                col.flip(u);
                col.flip(v);
                col
            })
            .collect()
    };

    let boundaries: Vec<Vec<BitVector>> = (0..=m).map(boundary_at).collect();
    let ranks: Vec<usize> = boundaries.iter().map(gf2::rank).collect();

    let mut b0 = vec![vec![0; m + 1]; m + 1];
    let mut b1 = vec![vec![0; m + 1]; m + 1];
    for i in 0..=m {
        let units: Vec<BitVector> = vertices_at(i)
            .into_iter()
            .map(|v| BitVector::unit(n, v))
            .collect();
        // H_1^{i,j} = ker ∂_1^i since there are no 2-simplices.
        let cycles = boundaries[i].len() - ranks[i];
        for j in i..=m {
            // H_0^{i,j} = C_0^i / (im ∂_1^j ∩ C_0^i), so
            // β_0 = |V_i| - dim(im ∩ C_0^i) = rank[∂^j | I_{V_i}] - rank ∂^j.
            let joint = gf2::rank(boundaries[j].iter().chain(&units));
            b0[i][j] = joint - ranks[j];
            b1[i][j] = cycles;
        }
    }

    Ok(BettiTable {
        filtration_values: a,
        betti: [b0, b1],
    })
}

/// Recovers the diagram of one dimension from persistent Betti numbers.
///
/// The point `(a_i, a_j)` gets multiplicity
/// `(β^{i,j-1} - β^{i,j}) - (β^{i-1,j-1} - β^{i-1,j})` and the essential
/// birth `a_i` gets `β^{i,m} - β^{i-1,m}`.
pub fn diagram_from_betti(table: &BettiTable, dim: usize) -> Result<PersistenceDiagram> {
    if dim > 1 {
        return Err(Error::validation(format!(
            "no Betti numbers for dimension {dim}"
        )));
    }
    let m = table.steps();
    let a = table.filtration_values();
    let beta = |i: usize, j: usize| table.get(dim, i, j) as i64;

    let negative = |what: String, mult: i64| {
        Error::OracleInconsistency(format!("{what} has multiplicity {mult} in dimension {dim}"))
    };

    let mut points = Vec::new();
    let mut essential = Vec::new();
    for i in 1..=m {
        for j in (i + 1)..=m {
            let mult = (beta(i, j - 1) - beta(i, j)) - (beta(i - 1, j - 1) - beta(i - 1, j));
            if mult < 0 {
                return Err(negative(
                    format!("point ({}, {})", a[i - 1], a[j - 1]),
                    mult,
                ));
            }
            points.extend(std::iter::repeat_n((a[i - 1], a[j - 1]), mult as usize));
        }
        let mult = beta(i, m) - beta(i - 1, m);
        if mult < 0 {
            return Err(negative(format!("essential birth {}", a[i - 1]), mult));
        }
        essential.extend(std::iter::repeat_n(a[i - 1], mult as usize));
    }
    PersistenceDiagram::new(dim, points, essential)
}
