//! Learnable projection of persistence diagrams onto structure elements.
//!
//! A diagram point `(b, d)` is first rotated into `(x0, x1)`, position along
//! the diagonal and persistence. Each structure element is a Gaussian bump in
//! the rotated plane whose persistence axis is log-compressed below a fixed
//! scale `ν`, so the bump decays continuously to 0 on the diagonal:
//!
//! ```text
//! t(x1) = x1                      x1 ≥ ν
//!       = ln(x1 / ν)·ν + ν        0 < x1 < ν
//! s(x0, x1) = exp(-σ0²(x0 - μ0)² - σ1²(t(x1) - μ1)²),   s(x0, 0) = 0
//! ```
//!
//! The layer output for element `i` is the sum of `s_i` over the diagram.
//! Because the sum over a multiset is permutation-invariant and `s` vanishes
//! on the diagonal, the output is 1-Wasserstein stable with constant equal to
//! the Lipschitz constant of `s` (see [`estimate_lipschitz_bounds`]).

use std::f64::consts::FRAC_1_SQRT_2;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::metrics::Norm;
use crate::persistence::PersistenceDiagram;
use crate::{Error, Result};

pub const DEFAULT_NU: f64 = 0.1;
pub const DEFAULT_PERSISTENCE_THRESHOLD: f64 = 0.01;

const MIN_INIT_SCALE: f64 = 0.1;
const MAX_INIT_SCALE: f64 = 20.0;

/// A diagram point in rotated coordinates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RotatedPoint {
    /// Coordinate along `(1, 1)/√2`.
    pub x0: f64,
    /// Coordinate along `(-1, 1)/√2`; zero exactly on the diagonal.
    pub x1: f64,
}

/// Rotates `(birth, death)` clockwise by a quarter of π.
pub fn rotate(birth: f64, death: f64) -> Result<RotatedPoint> {
    if !(death >= birth) {
        return Err(Error::validation(format!(
            "cannot rotate ({birth}, {death}): death precedes birth"
        )));
    }
    Ok(RotatedPoint {
        x0: (birth + death) * FRAC_1_SQRT_2,
        x1: (death - birth) * FRAC_1_SQRT_2,
    })
}

/// `t(x1)` above `ν`.
pub fn linear_branch(x1: f64) -> f64 {
    x1
}

/// `t(x1)` below `ν`.
pub fn log_branch(x1: f64, nu: f64) -> f64 {
    (x1 / nu).ln() * nu + nu
}

/// The transformed persistence `t(x1)`, or `None` on the diagonal.
pub fn transform_persistence(x1: f64, nu: f64) -> Option<f64> {
    if x1 <= 0.0 {
        None
    } else if x1 >= nu {
        Some(linear_branch(x1))
    } else {
        Some(log_branch(x1, nu))
    }
}

/// `dt/dx1`.
fn transform_slope(x1: f64, nu: f64) -> f64 {
    if x1 >= nu {
        1.0
    } else {
        nu / x1
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StructureElement {
    pub mu: [f64; 2],
    pub sigma: [f64; 2],
}

impl StructureElement {
    pub fn new(mu: [f64; 2], sigma: [f64; 2]) -> Self {
        Self { mu, sigma }
    }

    /// The bump at `x0` with an already transformed persistence `t`.
    pub fn eval_transformed(&self, x0: f64, t: f64) -> f64 {
        let [m0, m1] = self.mu;
        let [s0, s1] = self.sigma;
        (-(s0 * s0) * (x0 - m0).powi(2) - (s1 * s1) * (t - m1).powi(2)).exp()
    }

    pub fn forward(&self, nu: f64, pt: RotatedPoint) -> f64 {
        match transform_persistence(pt.x1, nu) {
            Some(t) => self.eval_transformed(pt.x0, t),
            None => 0.0,
        }
    }

    /// `(∂s/∂μ0, ∂s/∂μ1, ∂s/∂σ0, ∂s/∂σ1)` at `pt`.
    pub fn param_gradient(&self, nu: f64, pt: RotatedPoint) -> [f64; 4] {
        let Some(t) = transform_persistence(pt.x1, nu) else {
            return [0.0; 4];
        };
        let g = self.eval_transformed(pt.x0, t);
        let [m0, m1] = self.mu;
        let [s0, s1] = self.sigma;
        let (d0, d1) = (pt.x0 - m0, t - m1);
        [
            g * 2.0 * s0 * s0 * d0,
            g * 2.0 * s1 * s1 * d1,
            -g * 2.0 * s0 * d0 * d0,
            -g * 2.0 * s1 * d1 * d1,
        ]
    }

    /// `(∂s/∂x0, ∂s/∂x1)` at `pt`; below `ν` the `x1` derivative carries the
    /// `ν / x1` factor of the log branch. Zero on the diagonal.
    pub fn input_gradient(&self, nu: f64, pt: RotatedPoint) -> (f64, f64) {
        let Some(t) = transform_persistence(pt.x1, nu) else {
            return (0.0, 0.0);
        };
        let g = self.eval_transformed(pt.x0, t);
        let [m0, m1] = self.mu;
        let [s0, s1] = self.sigma;
        (
            -2.0 * s0 * s0 * (pt.x0 - m0) * g,
            -2.0 * s1 * s1 * (t - m1) * transform_slope(pt.x1, nu) * g,
        )
    }

    /// Dual `q`-norm of the gradient with respect to `(birth, death)`, the
    /// coordinates in which diagram distances are measured.
    pub fn input_gradient_norm(&self, nu: f64, pt: RotatedPoint, q: Norm) -> f64 {
        let (g0, g1) = self.input_gradient(nu, pt);
        // x0 = (b + d)/√2, x1 = (d - b)/√2
        let d_birth = (g0 - g1) * FRAC_1_SQRT_2;
        let d_death = (g0 + g1) * FRAC_1_SQRT_2;
        q.dual_length(d_birth, d_death)
    }
}

/// Parameters of one 2-D branch: `N` elements sharing a fixed `ν`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LayerParamsRecord")]
pub struct LayerParams {
    pub nu: f64,
    pub elements: Vec<StructureElement>,
    /// Points with `death - birth` below this are dropped before projection.
    #[serde(rename = "threshold")]
    pub persistence_threshold: f64,
    /// Use Neumaier summation over diagram points.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub compensated: bool,
}

#[derive(Deserialize)]
struct LayerParamsRecord {
    nu: f64,
    elements: Vec<StructureElement>,
    #[serde(default = "default_threshold")]
    threshold: f64,
    #[serde(default)]
    compensated: bool,
}

fn default_threshold() -> f64 {
    DEFAULT_PERSISTENCE_THRESHOLD
}

impl TryFrom<LayerParamsRecord> for LayerParams {
    type Error = Error;

    fn try_from(r: LayerParamsRecord) -> Result<Self> {
        let mut p = LayerParams::new(r.elements, r.nu, r.threshold)?;
        p.compensated = r.compensated;
        Ok(p)
    }
}

impl LayerParams {
    pub fn new(
        elements: Vec<StructureElement>,
        nu: f64,
        persistence_threshold: f64,
    ) -> Result<Self> {
        if elements.is_empty() {
            return Err(Error::validation(
                "a layer needs at least one structure element",
            ));
        }
        if !(nu > 0.0 && nu.is_finite()) {
            return Err(Error::validation(format!("nu must be positive, got {nu}")));
        }
        if !(persistence_threshold >= 0.0 && persistence_threshold.is_finite()) {
            return Err(Error::validation(format!(
                "persistence threshold must be >= 0, got {persistence_threshold}"
            )));
        }
        if elements
            .iter()
            .any(|e| !e.mu.iter().chain(&e.sigma).all(|v| v.is_finite()))
        {
            return Err(Error::validation(
                "structure element parameters must be finite",
            ));
        }
        Ok(Self {
            nu,
            elements,
            persistence_threshold,
            compensated: false,
        })
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// Data-driven initialization: centers drawn from the pooled rotated
    /// points (preferring those with `x1 ≥ ν`), and isotropic scales equal to
    /// the inverse mean nearest-neighbor distance between the centers,
    /// clamped to `[0.1, 20]`.
    pub fn init_from_points<R: Rng + ?Sized>(
        count: usize,
        pooled: &[(f64, f64)],
        nu: f64,
        persistence_threshold: f64,
        rng: &mut R,
    ) -> Result<Self> {
        let rotated: Vec<RotatedPoint> = pooled
            .iter()
            .filter(|(b, d)| d - b >= persistence_threshold)
            .filter_map(|&(b, d)| rotate(b, d).ok())
            .filter(|p| p.x1 > 0.0)
            .collect();
        let preferred: Vec<RotatedPoint> = rotated.iter().copied().filter(|p| p.x1 >= nu).collect();
        let pool = if preferred.is_empty() {
            &rotated
        } else {
            &preferred
        };

        let centers: Vec<[f64; 2]> = (0..count)
            .map(|_| match pool.choose(rng) {
                Some(p) => [p.x0, p.x1],
                None => [rng.gen_range(0.0..1.0), rng.gen_range(nu..1.0 + nu)],
            })
            .collect();
        let scale = init_scale(&centers, |a, b| (a[0] - b[0]).hypot(a[1] - b[1]));
        let elements = centers
            .into_iter()
            .map(|mu| StructureElement::new(mu, [scale, scale]))
            .collect();
        LayerParams::new(elements, nu, persistence_threshold)
    }

    /// Points that contribute to the projection, rotated and in a fixed
    /// order: thresholded by persistence, sorted by `(birth, death)`, with
    /// diagonal points removed.
    pub fn prepare(&self, points: &[(f64, f64)]) -> Result<Vec<RotatedPoint>> {
        let mut kept: Vec<(f64, f64)> = points
            .iter()
            .copied()
            .filter(|(b, d)| !(d - b < self.persistence_threshold))
            .collect();
        kept.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.total_cmp(&y.1)));
        kept.into_iter()
            .map(|(b, d)| rotate(b, d))
            .filter(|p| !matches!(p, Ok(p) if p.x1 == 0.0))
            .collect()
    }

    /// Layer output for raw points, which may include diagonal points.
    pub fn forward_points(&self, points: &[(f64, f64)]) -> Result<Vec<f64>> {
        let prepared = self.prepare(points)?;
        Ok(self.forward_prepared(&prepared))
    }

    pub fn forward_prepared(&self, points: &[RotatedPoint]) -> Vec<f64> {
        self.elements
            .iter()
            .map(|el| {
                sum(
                    points.iter().map(|&p| el.forward(self.nu, p)),
                    self.compensated,
                )
            })
            .collect()
    }

    /// Parameter gradients of `Σ_i upstream[i] · S_i(points)`.
    pub fn backward_prepared(
        &self,
        points: &[RotatedPoint],
        upstream: &[f64],
    ) -> Result<LayerGradients> {
        if upstream.len() != self.len() {
            return Err(Error::validation(format!(
                "upstream gradient has {} entries, layer has {} elements",
                upstream.len(),
                self.len()
            )));
        }
        let elements = self
            .elements
            .iter()
            .zip(upstream)
            .map(|(el, &w)| {
                let mut acc = [0.0; 4];
                for &p in points {
                    let g = el.param_gradient(self.nu, p);
                    for k in 0..4 {
                        acc[k] += g[k];
                    }
                }
                ElementGradient {
                    mu: [w * acc[0], w * acc[1]],
                    sigma: [w * acc[2], w * acc[3]],
                }
            })
            .collect();
        Ok(LayerGradients { elements })
    }
}

/// Per-element gradients of a 2-D branch.
#[derive(Clone, Debug, PartialEq)]
pub struct LayerGradients {
    pub elements: Vec<ElementGradient>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ElementGradient {
    pub mu: [f64; 2],
    pub sigma: [f64; 2],
}

/// `(S_i(D))_i` over the finite points of `diagram`.
pub fn layer_forward(params: &LayerParams, diagram: &PersistenceDiagram) -> Vec<f64> {
    params
        .forward_points(diagram.points())
        .expect("diagram points satisfy death > birth")
}

pub fn layer_backward(
    params: &LayerParams,
    diagram: &PersistenceDiagram,
    upstream: &[f64],
) -> Result<LayerGradients> {
    let prepared = params.prepare(diagram.points())?;
    params.backward_prepared(&prepared, upstream)
}

fn sum(values: impl Iterator<Item = f64>, compensated: bool) -> f64 {
    if !compensated {
        return values.sum();
    }
    let (mut total, mut carry) = (0.0f64, 0.0f64);
    for v in values {
        let next = total + v;
        carry += if total.abs() >= v.abs() {
            (total - next) + v
        } else {
            (v - next) + total
        };
        total = next;
    }
    total + carry
}

fn init_scale<T>(centers: &[T], dist: impl Fn(&T, &T) -> f64) -> f64 {
    if centers.len() < 2 {
        return MAX_INIT_SCALE;
    }
    let mean_nn = centers
        .iter()
        .enumerate()
        .map(|(i, a)| {
            centers
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, b)| dist(a, b))
                .fold(f64::INFINITY, f64::min)
        })
        .sum::<f64>()
        / centers.len() as f64;
    (1.0 / mean_nn).clamp(MIN_INIT_SCALE, MAX_INIT_SCALE)
}

/// A 1-D structure element for essential births.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Element1d {
    pub mu: f64,
    pub sigma: f64,
}

impl Element1d {
    pub fn forward(&self, x: f64) -> f64 {
        (-(self.sigma * self.sigma) * (x - self.mu).powi(2)).exp()
    }

    /// `(∂/∂μ, ∂/∂σ)`.
    pub fn param_gradient(&self, x: f64) -> [f64; 2] {
        let g = self.forward(x);
        let d = x - self.mu;
        [
            g * 2.0 * self.sigma * self.sigma * d,
            -g * 2.0 * self.sigma * d * d,
        ]
    }
}

/// Parameters of a branch over essential births.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "EssentialRecord")]
pub struct EssentialParams {
    pub elements: Vec<Element1d>,
}

#[derive(Deserialize)]
struct EssentialRecord {
    elements: Vec<Element1d>,
}

impl TryFrom<EssentialRecord> for EssentialParams {
    type Error = Error;

    fn try_from(r: EssentialRecord) -> Result<Self> {
        EssentialParams::new(r.elements)
    }
}

impl EssentialParams {
    pub fn new(elements: Vec<Element1d>) -> Result<Self> {
        if elements.is_empty() {
            return Err(Error::validation(
                "a layer needs at least one structure element",
            ));
        }
        if elements
            .iter()
            .any(|e| !e.mu.is_finite() || !e.sigma.is_finite())
        {
            return Err(Error::validation(
                "structure element parameters must be finite",
            ));
        }
        Ok(Self { elements })
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn init_from_births<R: Rng + ?Sized>(
        count: usize,
        pooled: &[f64],
        rng: &mut R,
    ) -> Result<Self> {
        let centers: Vec<f64> = (0..count)
            .map(|_| match pooled.choose(rng) {
                Some(&b) => b,
                None => rng.gen_range(0.0..1.0),
            })
            .collect();
        let scale = init_scale(&centers, |a, b| (a - b).abs());
        EssentialParams::new(
            centers
                .into_iter()
                .map(|mu| Element1d { mu, sigma: scale })
                .collect(),
        )
    }

    pub fn forward(&self, births: &[f64]) -> Vec<f64> {
        let mut sorted = births.to_vec();
        sorted.sort_by(f64::total_cmp);
        self.elements
            .iter()
            .map(|el| sorted.iter().map(|&b| el.forward(b)).sum())
            .collect()
    }

    /// `(∂/∂μ_i, ∂/∂σ_i)` of `Σ_i upstream[i] · S_i(births)`.
    pub fn backward(&self, births: &[f64], upstream: &[f64]) -> Result<Vec<[f64; 2]>> {
        if upstream.len() != self.len() {
            return Err(Error::validation(format!(
                "upstream gradient has {} entries, layer has {} elements",
                upstream.len(),
                self.len()
            )));
        }
        Ok(self
            .elements
            .iter()
            .zip(upstream)
            .map(|(el, &w)| {
                let (mut dm, mut ds) = (0.0, 0.0);
                for &b in births {
                    let [gm, gs] = el.param_gradient(b);
                    dm += gm;
                    ds += gs;
                }
                [w * dm, w * ds]
            })
            .collect())
    }
}

/// `Σ_b exp(-σ_i²(b - μ_i)²)` for each element.
pub fn essential_layer_forward(elements: &[Element1d], births: &[f64]) -> Vec<f64> {
    elements
        .iter()
        .map(|el| births.iter().map(|&b| el.forward(b)).sum())
        .collect()
}

/// Sampling region for [`estimate_lipschitz_bounds`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LipschitzGrid {
    /// Range of `x0` to cover; widened per element to include its bump.
    pub x0_range: (f64, f64),
    /// Largest `x1` to cover; widened per element to include its bump.
    pub x1_max: f64,
    /// Smallest `x1` sampled; the log branch is sampled log-uniformly from
    /// here up to `ν`.
    pub x1_floor: f64,
    /// Samples per axis and per branch.
    pub steps: usize,
    /// Local pattern-search refinement of the best grid cells.
    pub refine: bool,
    /// Ground norm of the diagram metric.
    pub q: Norm,
}

impl LipschitzGrid {
    pub fn new(x0_range: (f64, f64), x1_max: f64, q: Norm) -> Self {
        Self {
            x0_range,
            x1_max,
            x1_floor: 1e-8,
            steps: 64,
            refine: true,
            q,
        }
    }

    /// A grid covering the rotated images of `points` and of their diagonal
    /// projections.
    pub fn covering(points: &[(f64, f64)], q: Norm) -> Self {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        let mut top: f64 = 0.0;
        for &(b, d) in points {
            let x0 = (b + d) * FRAC_1_SQRT_2;
            lo = lo.min(x0);
            hi = hi.max(x0);
            top = top.max((d - b) * FRAC_1_SQRT_2);
        }
        if lo > hi {
            (lo, hi) = (0.0, 0.0);
        }
        Self::new((lo, hi), top, q)
    }
}

/// Estimated Lipschitz constant of each element's `s ∘ ρ` with respect to
/// `‖·‖_q` on the diagram plane: the maximal dual norm of its gradient over
/// the grid, optionally refined by local search.
pub fn estimate_lipschitz_bounds(params: &LayerParams, grid: &LipschitzGrid) -> Vec<f64> {
    params
        .elements
        .iter()
        .map(|el| element_lipschitz(el, params.nu, grid))
        .collect()
}

/// The largest of [`estimate_lipschitz_bounds`].
pub fn estimate_lipschitz_bound(params: &LayerParams, grid: &LipschitzGrid) -> f64 {
    estimate_lipschitz_bounds(params, grid)
        .into_iter()
        .fold(0.0, f64::max)
}

fn element_lipschitz(el: &StructureElement, nu: f64, grid: &LipschitzGrid) -> f64 {
    let spread0 = 5.0 / el.sigma[0].abs().max(1e-3);
    let spread1 = 5.0 / el.sigma[1].abs().max(1e-3);
    let x0_lo = grid.x0_range.0.min(el.mu[0] - spread0);
    let x0_hi = grid.x0_range.1.max(el.mu[0] + spread0);
    let x1_hi = grid.x1_max.max(el.mu[1] + spread1).max(2.0 * nu);
    let floor = grid.x1_floor.clamp(f64::MIN_POSITIVE, nu);
    let steps = grid.steps.max(2);

    // x1 samples: log-spaced in the log branch, linear above ν
    let mut x1s: Vec<f64> = (0..steps)
        .map(|k| floor * (nu / floor).powf(k as f64 / steps as f64))
        .collect();
    x1s.extend((0..=steps).map(|k| nu + (x1_hi - nu) * k as f64 / steps as f64));
    let x0s: Vec<f64> = (0..=steps)
        .map(|k| x0_lo + (x0_hi - x0_lo) * k as f64 / steps as f64)
        .collect();

    let norm_at = |x0: f64, x1: f64| el.input_gradient_norm(nu, RotatedPoint { x0, x1 }, grid.q);

    let mut samples: Vec<(f64, usize, usize)> = Vec::with_capacity(x0s.len() * x1s.len());
    for (i, &x0) in x0s.iter().enumerate() {
        for (j, &x1) in x1s.iter().enumerate() {
            samples.push((norm_at(x0, x1), i, j));
        }
    }
    samples.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut best = samples.first().map_or(0.0, |s| s.0);
    if !grid.refine {
        return best;
    }

    let dx0 = (x0_hi - x0_lo) / steps as f64;
    for &(value, i, j) in samples.iter().take(8) {
        // search in (x0, ln x1) so both branches are resolved evenly
        let (mut x0, mut lx1) = (x0s[i], x1s[j].ln());
        let mut current = value;
        let mut h0 = dx0;
        let mut h1 = if j + 1 < x1s.len() {
            (x1s[j + 1] / x1s[j]).ln()
        } else {
            (x1s[j] / x1s[j - 1]).ln()
        };
        while h0 > 1e-12 * (1.0 + x0.abs()) || h1 > 1e-12 {
            let mut moved = false;
            for (s0, s1) in [(h0, 0.0), (-h0, 0.0), (0.0, h1), (0.0, -h1)] {
                let (c0, c1) = (x0 + s0, (lx1 + s1).max(floor.ln()));
                let v = norm_at(c0, c1.exp());
                if v > current {
                    (x0, lx1, current) = (c0, c1, v);
                    moved = true;
                    break;
                }
            }
            if !moved {
                h0 /= 2.0;
                h1 /= 2.0;
            }
        }
        best = best.max(current);
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::SQRT_2;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-14 * (1.0 + a.abs().max(b.abs()))
    }

    #[test]
    fn rotation_examples() {
        let p = rotate(0.7, 0.7).unwrap();
        assert_eq!(p.x1, 0.0);
        assert!(close(p.x0, 0.7 * SQRT_2));

        let p = rotate(0.0, 2.0).unwrap();
        assert!(close(p.x0, SQRT_2) && close(p.x1, SQRT_2));

        let p = rotate(1.0, 3.0).unwrap();
        assert!(close(p.x0, 2.0 * SQRT_2) && close(p.x1, SQRT_2));

        assert!(rotate(1.0, 0.5).is_err());
    }

    #[test]
    fn peak_and_diagonal() {
        let el = StructureElement::new([0.3, 0.5], [2.0, 3.0]);
        assert_eq!(el.forward(0.1, RotatedPoint { x0: 0.3, x1: 0.5 }), 1.0);
        assert_eq!(el.forward(0.1, RotatedPoint { x0: 0.3, x1: 0.0 }), 0.0);
        assert_eq!(
            el.param_gradient(0.1, RotatedPoint { x0: 0.3, x1: 0.5 }),
            [0.0; 4]
        );
        assert_eq!(
            el.param_gradient(0.1, RotatedPoint { x0: 0.3, x1: 0.0 }),
            [0.0; 4]
        );
    }

    #[test]
    fn branches_meet_at_nu() {
        for nu in [0.1, 0.37, 1e-3, 2.5] {
            assert_eq!(log_branch(nu, nu), linear_branch(nu));
        }
        assert_eq!(transform_persistence(0.0, 0.1), None);
        assert!(transform_persistence(0.05, 0.1).unwrap() < 0.05);
    }

    #[test]
    fn empty_and_doubled_diagrams() {
        let params = LayerParams::new(
            vec![
                StructureElement::new([1.0, 0.4], [1.0, 2.0]),
                StructureElement::new([0.0, 0.05], [3.0, 1.0]),
            ],
            DEFAULT_NU,
            0.0,
        )
        .unwrap();
        assert_eq!(params.forward_points(&[]).unwrap(), vec![0.0, 0.0]);

        let pts = vec![(0.1, 0.9), (0.3, 0.35), (0.0, 1.5)];
        let single = params.forward_points(&pts).unwrap();
        let doubled: Vec<_> = pts.iter().chain(&pts).copied().collect();
        let twice = params.forward_points(&doubled).unwrap();
        for (a, b) in single.iter().zip(&twice) {
            assert!((2.0 * a - b).abs() <= 1e-15 * b.abs());
        }
    }

    #[test]
    fn center_point_gives_one() {
        let center = rotate(0.2, 0.8).unwrap();
        let params = LayerParams::new(
            vec![StructureElement::new([center.x0, center.x1], [1.5, 1.5])],
            DEFAULT_NU,
            DEFAULT_PERSISTENCE_THRESHOLD,
        )
        .unwrap();
        assert_eq!(params.forward_points(&[(0.2, 0.8)]).unwrap(), vec![1.0]);
    }

    #[test]
    fn threshold_drops_short_bars() {
        let params = LayerParams::new(
            vec![StructureElement::new([0.0, 0.0], [0.1, 0.1])],
            0.1,
            0.01,
        )
        .unwrap();
        assert_eq!(params.forward_points(&[(0.0, 0.005)]).unwrap(), vec![0.0]);
        assert!(params.forward_points(&[(0.0, 0.02)]).unwrap()[0] > 0.0);
    }

    #[test]
    fn compensated_sum_matches_plain_on_easy_input() {
        let mut params = LayerParams::new(
            vec![StructureElement::new([0.5, 0.5], [0.5, 0.5])],
            0.1,
            0.0,
        )
        .unwrap();
        let pts: Vec<_> = (0..50)
            .map(|i| (i as f64 * 0.01, i as f64 * 0.01 + 0.5))
            .collect();
        let plain = params.forward_points(&pts).unwrap()[0];
        params.compensated = true;
        let comp = params.forward_points(&pts).unwrap()[0];
        assert!((plain - comp).abs() < 1e-13);
    }

    #[test]
    fn essential_branch() {
        let els = [
            Element1d {
                mu: 0.4,
                sigma: 2.0,
            },
            Element1d {
                mu: -1.0,
                sigma: 1.0,
            },
        ];
        let out = essential_layer_forward(&els, &[0.4]);
        assert_eq!(out[0], 1.0);
        assert_eq!(essential_layer_forward(&els, &[]), vec![0.0, 0.0]);
        let params = EssentialParams::new(els.to_vec()).unwrap();
        assert!(params.forward(&[0.4, 0.4])[0] >= 1.0);
        assert_eq!(
            params.backward(&[0.4], &[1.0, 1.0]).unwrap()[0],
            [0.0, -0.0]
        );
    }

    #[test]
    fn params_json_shape() {
        let params = LayerParams::new(
            vec![StructureElement::new([0.5, 0.25], [2.0, 3.0])],
            0.1,
            0.01,
        )
        .unwrap();
        let v = serde_json::to_value(&params).unwrap();
        assert_eq!(v["nu"], 0.1);
        assert_eq!(v["elements"][0]["mu"], serde_json::json!([0.5, 0.25]));
        assert_eq!(v["elements"][0]["sigma"], serde_json::json!([2.0, 3.0]));
        let back: LayerParams = serde_json::from_value(v).unwrap();
        assert_eq!(back, params);

        let bad =
            serde_json::json!({"nu": -1.0, "elements": [{"mu": [0.0, 0.0], "sigma": [1.0, 1.0]}]});
        assert!(serde_json::from_value::<LayerParams>(bad).is_err());
        let empty = serde_json::json!({"nu": 0.1, "elements": []});
        assert!(serde_json::from_value::<LayerParams>(empty).is_err());
    }

    #[test]
    fn x0_derivative_vanishes_far_away() {
        let el = StructureElement::new([0.0, 0.5], [1.0, 1.0]);
        let near = el
            .input_gradient(0.1, RotatedPoint { x0: 0.7, x1: 0.5 })
            .0
            .abs();
        let far = el
            .input_gradient(0.1, RotatedPoint { x0: 40.0, x1: 0.5 })
            .0
            .abs();
        assert!(near > 0.1);
        assert_eq!(far, 0.0);
    }

    #[test]
    fn log_branch_derivative_vanishes_eventually() {
        // For small σ1·ν the decay sets in far below 1e-8, but it does set in.
        let el = StructureElement::new([0.0, 0.3], [1.0, 1.0]);
        let at = |x1: f64| el.input_gradient(0.1, RotatedPoint { x0: 0.0, x1 }).1.abs();
        assert!(at(1e-8) > at(1e-4));
        assert!(at(1e-200) < 1e-100);
        assert!(at(1e-300).is_finite());
    }

    #[test]
    fn lipschitz_bound_on_gaussian_peak() {
        // Bump far above ν: for q = 2 the steepest slope of exp(-σ²|x - μ|²)
        // is σ·√2·e^{-1/2}.
        let sigma = 2.0;
        let params = LayerParams::new(
            vec![StructureElement::new([0.0, 5.0], [sigma, sigma])],
            0.1,
            0.0,
        )
        .unwrap();
        let grid = LipschitzGrid::new((-3.0, 3.0), 8.0, Norm::L(2));
        let k = estimate_lipschitz_bound(&params, &grid);
        let exact = sigma * SQRT_2 * (-0.5f64).exp();
        assert!((k - exact).abs() < 1e-9 * exact, "{k} vs {exact}");
    }

    #[test]
    fn init_places_centers_on_data() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let pts = [(0.0, 1.0), (0.5, 2.0), (0.2, 0.205)];
        let p = LayerParams::init_from_points(6, &pts, 0.1, 0.01, &mut rng).unwrap();
        for el in &p.elements {
            let hit = pts[..2].iter().any(|&(b, d)| {
                let r = rotate(b, d).unwrap();
                r.x0 == el.mu[0] && r.x1 == el.mu[1]
            });
            assert!(hit);
            assert!(el.sigma[0] >= 0.1 && el.sigma[0] <= 20.0);
        }
        let e = EssentialParams::init_from_births(3, &[], &mut rng).unwrap();
        assert_eq!(e.len(), 3);
    }
}
