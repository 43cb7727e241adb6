use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// A persistence diagram of one homology dimension.
///
/// Finite points satisfy `death > birth`; points on the diagonal are dropped
/// when the diagram is built. Features that never die are kept separately as
/// their birth values. Both lists are kept sorted so that two diagrams are
/// equal as multisets exactly when they compare equal.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DiagramRecord", into = "DiagramRecord")]
pub struct PersistenceDiagram {
    dim: usize,
    points: Vec<(f64, f64)>,
    essential: Vec<f64>,
}

/// On-disk shape: `{"dim": n, "points": [[b, d], ...], "essential": [b, ...]}`.
#[derive(Serialize, Deserialize)]
struct DiagramRecord {
    dim: usize,
    points: Vec<[f64; 2]>,
    essential: Vec<f64>,
}

impl PersistenceDiagram {
    pub fn new(dim: usize, points: Vec<(f64, f64)>, essential: Vec<f64>) -> Result<Self> {
        for &(b, d) in &points {
            if !b.is_finite() || !d.is_finite() {
                return Err(Error::validation(format!(
                    "diagram point ({b}, {d}) is not finite"
                )));
            }
            if d < b {
                return Err(Error::validation(format!(
                    "diagram point ({b}, {d}) dies before it is born"
                )));
            }
        }
        if let Some(b) = essential.iter().find(|b| !b.is_finite()) {
            return Err(Error::validation(format!(
                "essential birth {b} is not finite"
            )));
        }
        let mut points: Vec<_> = points.into_iter().filter(|(b, d)| d > b).collect();
        points.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.total_cmp(&y.1)));
        let mut essential = essential;
        essential.sort_by(f64::total_cmp);
        Ok(Self {
            dim,
            points,
            essential,
        })
    }

    pub fn empty(dim: usize) -> Self {
        Self {
            dim,
            points: Vec::new(),
            essential: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Finite `(birth, death)` points, sorted.
    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    /// Births of features with infinite death, sorted.
    pub fn essential(&self) -> &[f64] {
        &self.essential
    }

    /// Number of finite off-diagonal points.
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty() && self.essential.is_empty()
    }

    pub fn persistences(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().map(|(b, d)| d - b)
    }
}

impl TryFrom<DiagramRecord> for PersistenceDiagram {
    type Error = Error;

    fn try_from(r: DiagramRecord) -> Result<Self> {
        PersistenceDiagram::new(
            r.dim,
            r.points.into_iter().map(|[b, d]| (b, d)).collect(),
            r.essential,
        )
    }
}

impl From<PersistenceDiagram> for DiagramRecord {
    fn from(d: PersistenceDiagram) -> Self {
        DiagramRecord {
            dim: d.dim,
            points: d.points.into_iter().map(|(b, d)| [b, d]).collect(),
            essential: d.essential,
        }
    }
}
