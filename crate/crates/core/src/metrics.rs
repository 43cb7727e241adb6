//! Wasserstein and bottleneck distances between persistence diagrams.
//!
//! Distances use finite points only; essential births are ignored. Every
//! point may be matched either to a point of the other diagram or to the
//! diagonal, where it costs the distance to its nearest diagonal point.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::persistence::PersistenceDiagram;
use crate::{Error, Result};

/// Largest `|D| + |E|` accepted by the brute-force matchers.
pub const BRUTE_FORCE_MAX_POINTS: usize = 12;

/// The ground norm `‖·‖_q` on the plane.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Norm {
    /// `q`-norm for a finite `q ≥ 1`.
    L(u32),
    Infinity,
}

impl Norm {
    pub fn distance(self, a: (f64, f64), b: (f64, f64)) -> f64 {
        self.length(a.0 - b.0, a.1 - b.1)
    }

    pub fn length(self, dx: f64, dy: f64) -> f64 {
        let (dx, dy) = (dx.abs(), dy.abs());
        match self {
            Norm::Infinity => dx.max(dy),
            Norm::L(1) => dx + dy,
            Norm::L(2) => dx.hypot(dy),
            Norm::L(q) => {
                let q = f64::from(q);
                (dx.powf(q) + dy.powf(q)).powf(1.0 / q)
            }
        }
    }

    /// Distance from `(b, d)` to its nearest diagonal point `(m, m)`,
    /// `m = (b + d) / 2`.
    pub fn to_diagonal(self, point: (f64, f64)) -> f64 {
        let half = (point.1 - point.0) / 2.0;
        self.length(half, half)
    }

    /// `‖(dx, dy)‖` in the dual norm, with exponent `q* = q / (q - 1)`.
    pub fn dual_length(self, dx: f64, dy: f64) -> f64 {
        let (dx, dy) = (dx.abs(), dy.abs());
        match self {
            Norm::Infinity => dx + dy,
            Norm::L(1) => dx.max(dy),
            Norm::L(2) => dx.hypot(dy),
            Norm::L(q) => {
                let dual = f64::from(q) / (f64::from(q) - 1.0);
                (dx.powf(dual) + dy.powf(dual)).powf(1.0 / dual)
            }
        }
    }
}

impl FromStr for Norm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "inf" | "infinity" | "∞" => Ok(Norm::Infinity),
            other => match other.parse::<u32>() {
                Ok(q) if q >= 1 => Ok(Norm::L(q)),
                _ => Err(Error::validation(format!(
                    "norm must be an integer >= 1 or 'inf', got '{s}'"
                ))),
            },
        }
    }
}

impl fmt::Display for Norm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Norm::L(q) => write!(f, "{q}"),
            Norm::Infinity => f.write_str("inf"),
        }
    }
}

/// Square cost matrix over the two diagrams augmented with diagonal slots.
///
/// Rows are the points of `D` followed by `|E|` diagonal slots; columns are
/// the points of `E` followed by `|D|` diagonal slots. Diagonal slots are
/// interchangeable, so a point may use any of them.
#[derive(Clone, Debug)]
pub struct MatchingProblem {
    size: usize,
    costs: Vec<f64>,
}

impl MatchingProblem {
    /// Entries are `‖x - y‖_q^p`; pass `p = 1` for plain distances.
    pub fn new(d: &[(f64, f64)], e: &[(f64, f64)], p: u32, q: Norm) -> Self {
        let (n, m) = (d.len(), e.len());
        let size = n + m;
        let pow = |x: f64| x.powi(p as i32);
        let mut costs = vec![0.0; size * size];
        for r in 0..size {
            for c in 0..size {
                costs[r * size + c] = match (r < n, c < m) {
                    (true, true) => pow(q.distance(d[r], e[c])),
                    (true, false) => pow(q.to_diagonal(d[r])),
                    (false, true) => pow(q.to_diagonal(e[c])),
                    (false, false) => 0.0,
                };
            }
        }
        Self { size, costs }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn cost(&self, row: usize, col: usize) -> f64 {
        self.costs[row * self.size + col]
    }
}

/// Minimum-cost perfect assignment (shortest augmenting paths with
/// potentials). Returns the column matched to each row.
pub fn solve_assignment(problem: &MatchingProblem) -> Vec<usize> {
    let n = problem.size;
    if n == 0 {
        return Vec::new();
    }
    // 1-based with a virtual column 0
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut row_of = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];

    for row in 1..=n {
        row_of[0] = row;
        let mut col = 0;
        let mut min_slack = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[col] = true;
            let r = row_of[col];
            let mut delta = f64::INFINITY;
            let mut next = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let slack = problem.cost(r - 1, j - 1) - u[r] - v[j];
                if slack < min_slack[j] {
                    min_slack[j] = slack;
                    way[j] = col;
                }
                if min_slack[j] < delta {
                    delta = min_slack[j];
                    next = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[row_of[j]] += delta;
                    v[j] -= delta;
                } else {
                    min_slack[j] -= delta;
                }
            }
            col = next;
            if row_of[col] == 0 {
                break;
            }
        }
        while col != 0 {
            let prev = way[col];
            row_of[col] = row_of[prev];
            col = prev;
        }
    }

    let mut assignment = vec![0; n];
    for j in 1..=n {
        assignment[row_of[j] - 1] = j - 1;
    }
    assignment
}

/// `w_p^q(D, E)` over the finite points of both diagrams.
pub fn wasserstein(d: &PersistenceDiagram, e: &PersistenceDiagram, p: u32, q: Norm) -> Result<f64> {
    check_power(p)?;
    Ok(wasserstein_points(d.points(), e.points(), p, q))
}

pub fn wasserstein_points(d: &[(f64, f64)], e: &[(f64, f64)], p: u32, q: Norm) -> f64 {
    let problem = MatchingProblem::new(d, e, p, q);
    let total: f64 = solve_assignment(&problem)
        .iter()
        .enumerate()
        .map(|(r, &c)| problem.cost(r, c))
        .sum();
    root(total, p)
}

/// `w_∞` with ground norm `q`: the smallest achievable largest matching cost.
pub fn bottleneck(d: &PersistenceDiagram, e: &PersistenceDiagram, q: Norm) -> f64 {
    bottleneck_points(d.points(), e.points(), q)
}

pub fn bottleneck_points(d: &[(f64, f64)], e: &[(f64, f64)], q: Norm) -> f64 {
    let problem = MatchingProblem::new(d, e, 1, q);
    let n = problem.size;
    if n == 0 {
        return 0.0;
    }
    let mut candidates = problem.costs.clone();
    candidates.sort_by(f64::total_cmp);
    candidates.dedup();

    // the largest candidate always admits a perfect matching
    let (mut lo, mut hi) = (0, candidates.len() - 1);
    while lo < hi {
        let mid = (lo + hi) / 2;
        if has_perfect_matching(&problem, candidates[mid]) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    candidates[lo]
}

fn has_perfect_matching(problem: &MatchingProblem, threshold: f64) -> bool {
    fn augment(
        problem: &MatchingProblem,
        threshold: f64,
        row: usize,
        seen: &mut [bool],
        row_of: &mut [Option<usize>],
    ) -> bool {
        for col in 0..problem.size {
            if seen[col] || problem.cost(row, col) > threshold {
                continue;
            }
            seen[col] = true;
            let free = match row_of[col] {
                None => true,
                Some(other) => augment(problem, threshold, other, seen, row_of),
            };
            if free {
                row_of[col] = Some(row);
                return true;
            }
        }
        false
    }

    let mut row_of = vec![None; problem.size];
    (0..problem.size).all(|row| {
        let mut seen = vec![false; problem.size];
        augment(problem, threshold, row, &mut seen, &mut row_of)
    })
}

/// Exhaustive `w_p^q`: tries every way of pairing points of `D` with
/// distinct points of `E`, sending the rest to the diagonal.
pub fn brute_force_wasserstein(
    d: &PersistenceDiagram,
    e: &PersistenceDiagram,
    p: u32,
    q: Norm,
) -> Result<f64> {
    check_power(p)?;
    let total = enumerate_matchings(d.points(), e.points(), q, |acc, c| acc + c.powi(p as i32))?;
    Ok(root(total, p))
}

/// Exhaustive bottleneck distance, see [`brute_force_wasserstein`].
pub fn brute_force_bottleneck(
    d: &PersistenceDiagram,
    e: &PersistenceDiagram,
    q: Norm,
) -> Result<f64> {
    enumerate_matchings(d.points(), e.points(), q, f64::max)
}

fn enumerate_matchings(
    d: &[(f64, f64)],
    e: &[(f64, f64)],
    q: Norm,
    combine: impl Fn(f64, f64) -> f64 + Copy,
) -> Result<f64> {
    let size = d.len() + e.len();
    if size > BRUTE_FORCE_MAX_POINTS {
        return Err(Error::ComplexityGuard {
            size,
            limit: BRUTE_FORCE_MAX_POINTS,
        });
    }

    struct Search<'a, F> {
        d: &'a [(f64, f64)],
        e: &'a [(f64, f64)],
        q: Norm,
        combine: F,
        used: Vec<bool>,
        best: f64,
    }

    impl<F: Fn(f64, f64) -> f64 + Copy> Search<'_, F> {
        fn visit(&mut self, i: usize, acc: f64) {
            if i == self.d.len() {
                let total = self
                    .e
                    .iter()
                    .zip(&self.used)
                    .filter(|(_, &u)| !u)
                    .fold(acc, |acc, (&y, _)| {
                        (self.combine)(acc, self.q.to_diagonal(y))
                    });
                self.best = self.best.min(total);
                return;
            }
            let x = self.d[i];
            self.visit(i + 1, (self.combine)(acc, self.q.to_diagonal(x)));
            for j in 0..self.e.len() {
                if !self.used[j] {
                    self.used[j] = true;
                    self.visit(i + 1, (self.combine)(acc, self.q.distance(x, self.e[j])));
                    self.used[j] = false;
                }
            }
        }
    }

    let mut search = Search {
        d,
        e,
        q,
        combine,
        used: vec![false; e.len()],
        best: f64::INFINITY,
    };
    search.visit(0, 0.0);
    Ok(search.best)
}

fn check_power(p: u32) -> Result<()> {
    if p == 0 {
        return Err(Error::validation("Wasserstein exponent p must be >= 1"));
    }
    Ok(())
}

fn root(total: f64, p: u32) -> f64 {
    match p {
        1 => total,
        2 => total.sqrt(),
        _ => total.powf(1.0 / f64::from(p)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diagram(points: &[(f64, f64)]) -> PersistenceDiagram {
        PersistenceDiagram::new(0, points.to_vec(), vec![]).unwrap()
    }

    #[test]
    fn single_point_against_empty() {
        let (d, e) = (diagram(&[(0.0, 1.0)]), diagram(&[]));
        assert_eq!(wasserstein(&d, &e, 1, Norm::Infinity).unwrap(), 0.5);
        assert_eq!(bottleneck(&d, &e, Norm::Infinity), 0.5);
        assert_eq!(
            brute_force_wasserstein(&d, &e, 1, Norm::Infinity).unwrap(),
            0.5
        );
        // the 2-norm reaches the diagonal at (0.5, 0.5), sqrt(0.5) away
        let l2 = wasserstein(&d, &e, 1, Norm::L(2)).unwrap();
        assert!((l2 - 0.5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn extra_near_diagonal_point() {
        let d = diagram(&[(0.0, 1.0)]);
        let e = diagram(&[(0.0, 1.0), (2.0, 2.1)]);
        let w = wasserstein(&d, &e, 1, Norm::Infinity).unwrap();
        assert!((w - 0.05).abs() < 1e-12);
        let brute = brute_force_wasserstein(&d, &e, 1, Norm::Infinity).unwrap();
        assert!((w - brute).abs() < 1e-12);
    }

    #[test]
    fn direct_match_beats_diagonal() {
        let d = diagram(&[(0.0, 1.0)]);
        let e = diagram(&[(0.1, 0.9)]);
        let brute = brute_force_wasserstein(&d, &e, 1, Norm::Infinity).unwrap();
        assert!((brute - 0.1).abs() < 1e-15);
        assert!((wasserstein(&d, &e, 1, Norm::Infinity).unwrap() - 0.1).abs() < 1e-15);
    }

    #[test]
    fn bottleneck_examples() {
        let d = diagram(&[(0.0, 2.0)]);
        let e = diagram(&[(0.0, 1.0)]);
        assert_eq!(bottleneck(&d, &e, Norm::Infinity), 1.0);
        assert_eq!(brute_force_bottleneck(&d, &e, Norm::Infinity).unwrap(), 1.0);
        assert_eq!(bottleneck(&d, &d, Norm::Infinity), 0.0);
    }

    #[test]
    fn empty_and_identical() {
        let empty = diagram(&[]);
        assert_eq!(wasserstein(&empty, &empty, 2, Norm::L(2)).unwrap(), 0.0);
        assert_eq!(
            brute_force_wasserstein(&empty, &empty, 1, Norm::L(1)).unwrap(),
            0.0
        );
        let d = diagram(&[(0.0, 1.0), (0.3, 0.7), (0.2, 2.0)]);
        assert_eq!(wasserstein(&d, &d, 1, Norm::Infinity).unwrap(), 0.0);
    }

    #[test]
    fn brute_force_guard() {
        let many: Vec<_> = (0..7).map(|i| (i as f64, i as f64 + 1.0)).collect();
        let d = diagram(&many);
        assert!(matches!(
            brute_force_wasserstein(&d, &d, 1, Norm::L(2)),
            Err(Error::ComplexityGuard { size: 14, .. })
        ));
    }

    #[test]
    fn assignment_on_known_matrix() {
        // Rows D = {(0,4)}, E = {(0,3),(10,11)}: matching (0,4)->(0,3) is optimal.
        let d = [(0.0, 4.0)];
        let e = [(0.0, 3.0), (10.0, 11.0)];
        let w = wasserstein_points(&d, &e, 1, Norm::Infinity);
        assert!((w - (1.0 + 0.5)).abs() < 1e-15);
    }

    #[test]
    fn norm_parsing_and_duals() {
        assert_eq!("inf".parse::<Norm>().unwrap(), Norm::Infinity);
        assert_eq!("2".parse::<Norm>().unwrap(), Norm::L(2));
        assert!("0".parse::<Norm>().is_err());
        assert!("x".parse::<Norm>().is_err());
        assert_eq!(Norm::Infinity.dual_length(3.0, -4.0), 7.0);
        assert_eq!(Norm::L(2).dual_length(3.0, -4.0), 5.0);
        assert_eq!(Norm::L(1).dual_length(3.0, -4.0), 4.0);
        // q = 3 pairs with q* = 1.5
        let want = (3f64.powf(1.5) + 4f64.powf(1.5)).powf(1.0 / 1.5);
        assert!((Norm::L(3).dual_length(3.0, 4.0) - want).abs() < 1e-12);
    }

    #[test]
    fn zero_power_rejected() {
        let d = diagram(&[]);
        assert!(wasserstein(&d, &d, 0, Norm::L(1)).is_err());
    }
}
