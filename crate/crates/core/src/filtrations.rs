//! Sublevel-set filtrations of binary images and graphs.

use std::f64::consts::TAU;

use crate::persistence::FilteredComplex;
use crate::{Error, Result};

/// A binary image; `true` pixels belong to the object.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BinaryImage {
    width: usize,
    height: usize,
    pixels: Vec<bool>,
}

impl BinaryImage {
    /// Builds an image from foreground `(row, col)` coordinates.
    pub fn new(
        width: usize,
        height: usize,
        foreground: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self> {
        let mut pixels = vec![false; width * height];
        for (row, col) in foreground {
            if row >= height || col >= width {
                return Err(Error::validation(format!(
                    "pixel ({row}, {col}) outside {width}x{height} image"
                )));
            }
            pixels[row * width + col] = true;
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    /// Builds an image from equally long rows.
    pub fn from_rows(rows: &[Vec<bool>]) -> Result<Self> {
        let height = rows.len();
        let width = rows.first().map_or(0, Vec::len);
        if let Some(r) = rows.iter().position(|r| r.len() != width) {
            return Err(Error::validation(format!(
                "row {r} has {} pixels, expected {width}",
                rows[r].len()
            )));
        }
        Ok(Self {
            width,
            height,
            pixels: rows.concat(),
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn get(&self, row: usize, col: usize) -> bool {
        self.pixels[row * self.width + col]
    }

    /// Foreground pixels as `(row, col)`, in row-major order.
    pub fn foreground(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.pixels
            .iter()
            .enumerate()
            .filter(|(_, &on)| on)
            .map(|(i, _)| (i / self.width, i % self.width))
    }
}

/// A unit vector in the plane, in `(x, y)` image coordinates where
/// `x` is the column and `y` the row (growing downward).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Direction {
    x: f64,
    y: f64,
}

impl Direction {
    pub fn new(x: f64, y: f64) -> Result<Self> {
        let norm = x.hypot(y);
        if !((norm - 1.0).abs() <= 1e-12) {
            return Err(Error::validation(format!(
                "direction ({x}, {y}) has norm {norm}, expected 1"
            )));
        }
        Ok(Self { x, y })
    }

    pub fn x(&self) -> f64 {
        self.x
    }

    pub fn y(&self) -> f64 {
        self.y
    }
}

impl std::ops::Neg for Direction {
    type Output = Direction;

    fn neg(self) -> Direction {
        Direction {
            x: -self.x,
            y: -self.y,
        }
    }
}

/// `n` equally spaced directions on the circle, starting at `(1, 0)`.
pub fn directions(n: usize) -> Result<Vec<Direction>> {
    if n == 0 {
        return Err(Error::validation("need at least one direction"));
    }
    Ok((0..n)
        .map(|k| {
            let angle = TAU * k as f64 / n as f64;
            Direction {
                x: angle.cos(),
                y: angle.sin(),
            }
        })
        .collect())
}

/// Height-function filtration of an image along `direction`.
///
/// Vertices are foreground pixels and edges join 4-neighbors. A pixel `p`
/// gets `<p - b, d> / r`, where `b` is the barycenter of the foreground and
/// `r` the largest distance from `b` to a foreground pixel. A one-pixel
/// object has `r = 0` and gets the constant filtration 0.
pub fn height_filtration(image: &BinaryImage, direction: Direction) -> Result<FilteredComplex> {
    let pixels: Vec<(usize, usize)> = image.foreground().collect();
    if pixels.is_empty() {
        return Err(Error::validation("empty foreground"));
    }

    let count = pixels.len() as f64;
    let (sx, sy) = pixels.iter().fold((0.0, 0.0), |(sx, sy), &(row, col)| {
        (sx + col as f64, sy + row as f64)
    });
    let (bx, by) = (sx / count, sy / count);
    let radius = pixels
        .iter()
        .map(|&(row, col)| (col as f64 - bx).hypot(row as f64 - by))
        .fold(0.0, f64::max);

    let values: Vec<f64> = pixels
        .iter()
        .map(|&(row, col)| {
            if radius == 0.0 {
                0.0
            } else {
                ((col as f64 - bx) * direction.x + (row as f64 - by) * direction.y) / radius
            }
        })
        .collect();

    let mut index = vec![usize::MAX; image.width * image.height];
    for (i, &(row, col)) in pixels.iter().enumerate() {
        index[row * image.width + col] = i;
    }
    let mut edges = Vec::new();
    for (i, &(row, col)) in pixels.iter().enumerate() {
        if col + 1 < image.width && image.get(row, col + 1) {
            edges.push((i, index[row * image.width + col + 1]));
        }
        if row + 1 < image.height && image.get(row + 1, col) {
            edges.push((i, index[(row + 1) * image.width + col]));
        }
    }

    FilteredComplex::from_graph(pixels.len(), &edges, &values)
}

/// An undirected graph on vertices `0..vertex_count`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    pub vertex_count: usize,
    pub edges: Vec<(usize, usize)>,
}

/// Degree filtration: each vertex gets its degree divided by the maximum
/// degree; isolated vertices get 0.
pub fn degree_filtration(vertex_count: usize, edges: &[(usize, usize)]) -> Result<FilteredComplex> {
    // validates the edge list before degrees are counted
    let shape = FilteredComplex::from_graph(vertex_count, edges, &vec![0.0; vertex_count])?;
    let mut degree = vec![0usize; vertex_count];
    for &(u, v) in shape.edges() {
        degree[u] += 1;
        degree[v] += 1;
    }
    let max = degree.iter().copied().max().unwrap_or(0);
    if max == 0 {
        return Err(Error::validation(
            "degree filtration needs at least one edge",
        ));
    }
    let values: Vec<f64> = degree.iter().map(|&d| d as f64 / max as f64).collect();
    FilteredComplex::from_graph(vertex_count, edges, &values)
}
