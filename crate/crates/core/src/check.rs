//! Randomized self-verification suites.
//!
//! Each trial draws its instance from `ChaCha8Rng::seed_from_u64(seed + trial)`,
//! so a failure can be replayed from its trial index alone; failing instances
//! are also returned as JSON.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::filtrations::degree_filtration;
use crate::layer::{
    estimate_lipschitz_bounds, Element1d, EssentialParams, LayerParams, LipschitzGrid,
    StructureElement,
};
use crate::metrics::{brute_force_wasserstein, Norm};
use crate::persistence::{
    brute_force_betti, diagram_from_betti, diagrams, FilteredComplex, PersistenceDiagram,
};
use crate::Result;

/// Finite-difference step for gradient checks.
pub const FD_STEP: f64 = 1e-6;
/// Gradient entries below this magnitude are compared absolutely.
pub const GRADIENT_FLOOR: f64 = 1e-4;
/// Largest accepted gradient relative error.
pub const GRADIENT_TOLERANCE: f64 = 1e-5;
/// Slack factor on the stability inequality.
pub const STABILITY_SLACK: f64 = 1.01;

#[derive(Clone, Debug, Serialize)]
pub struct CheckReport {
    pub suite: String,
    pub trials: usize,
    pub passed: usize,
    /// Suite-specific worst case: largest relative gradient error, or largest
    /// ratio of observed change to the stability bound.
    pub worst: f64,
    pub failures: Vec<Value>,
}

impl CheckReport {
    pub fn ok(&self) -> bool {
        self.passed == self.trials
    }

    fn collect(suite: &str, outcomes: Vec<(f64, Option<Value>)>) -> Self {
        let trials = outcomes.len();
        let worst = outcomes.iter().map(|o| o.0).fold(0.0, f64::max);
        let failures: Vec<Value> = outcomes.into_iter().filter_map(|o| o.1).collect();
        Self {
            suite: suite.into(),
            trials,
            passed: trials - failures.len(),
            worst,
            failures,
        }
    }
}

fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed.wrapping_add(trial as u64))
}

/// A random graph on at most `max_vertices` vertices and `max_edges` edges.
/// Half the instances use the degree filtration, the rest values from a
/// five-level grid, so ties are frequent either way.
pub fn random_complex<R: Rng + ?Sized>(
    rng: &mut R,
    max_vertices: usize,
    max_edges: usize,
) -> FilteredComplex {
    let n = rng.gen_range(1..=max_vertices);
    let mut pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|u| (u + 1..n).map(move |v| (u, v)))
        .collect();
    let m = rng.gen_range(0..=max_edges.min(pairs.len()));
    let mut edges = Vec::with_capacity(m);
    for _ in 0..m {
        let k = rng.gen_range(0..pairs.len());
        edges.push(pairs.swap_remove(k));
    }
    if m > 0 && rng.gen_bool(0.5) {
        return degree_filtration(n, &edges).expect("generated edges are valid");
    }
    let values: Vec<f64> = (0..n).map(|_| rng.gen_range(0..=4) as f64 / 4.0).collect();
    FilteredComplex::from_graph(n, &edges, &values).expect("generated edges are valid")
}

fn complex_json(c: &FilteredComplex) -> Value {
    json!({
        "vertex_values": c.vertex_values(),
        "edges": c.edges(),
    })
}

/// Union-find diagrams against the persistent-Betti oracle on random graphs
/// with at most 8 vertices and 14 edges.
pub fn check_oracle(trials: usize, seed: u64) -> Result<CheckReport> {
    let outcomes: Result<Vec<(f64, Option<Value>)>> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let complex = random_complex(&mut trial_rng(seed, t), 8, 14);
            let fast = diagrams(&complex);
            let table = brute_force_betti(&complex)?;
            let slow = [
                diagram_from_betti(&table, 0)?,
                diagram_from_betti(&table, 1)?,
            ];
            if fast == slow {
                Ok((0.0, None))
            } else {
                Ok((
                    1.0,
                    Some(json!({
                        "trial": t,
                        "complex": complex_json(&complex),
                        "union_find": fast,
                        "oracle": slow,
                    })),
                ))
            }
        })
        .collect();
    Ok(CheckReport::collect("oracle", outcomes?))
}

/// Relative error with an absolute floor for near-zero entries.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(GRADIENT_FLOOR)
}

fn central_difference(f: impl Fn(f64) -> f64, x: f64) -> f64 {
    (f(x + FD_STEP) - f(x - FD_STEP)) / (2.0 * FD_STEP)
}

/// A random diagram of `1..=max_points` points with coordinates in
/// `[0, 1]`; when `log_branch` is set the first point lies in the log branch
/// `0 < x1 < ν`.
pub fn random_diagram_points<R: Rng + ?Sized>(
    rng: &mut R,
    max_points: usize,
    nu: f64,
    log_branch: bool,
) -> Vec<(f64, f64)> {
    let count = rng.gen_range(1..=max_points);
    (0..count)
        .map(|k| {
            let b = rng.gen_range(0.0..1.0);
            let pers = if k == 0 && log_branch {
                rng.gen_range(0.01..0.99) * nu * std::f64::consts::SQRT_2
            } else {
                rng.gen_range(0.0..1.0)
            };
            (b, b + pers)
        })
        .collect()
}

pub fn random_layer<R: Rng + ?Sized>(rng: &mut R, elements: usize, nu: f64) -> LayerParams {
    let els = (0..elements)
        .map(|_| {
            StructureElement::new(
                [rng.gen_range(0.0..1.5), rng.gen_range(0.0..1.0)],
                [rng.gen_range(0.5..5.0), rng.gen_range(0.5..5.0)],
            )
        })
        .collect();
    LayerParams::new(els, nu, 0.0).expect("finite parameters")
}

fn gradient_trial(seed: u64, t: usize) -> (f64, Option<Value>) {
    let mut rng = trial_rng(seed, t);
    let nu = rng.gen_range(0.05..0.3);
    let count = rng.gen_range(1..=3);
    let params = random_layer(&mut rng, count, nu);
    let points = random_diagram_points(&mut rng, 6, nu, true);
    let prepared = params.prepare(&points).expect("valid points");
    let upstream: Vec<f64> = (0..params.len())
        .map(|_| rng.gen_range(-1.0..1.0))
        .collect();
    let grads = params
        .backward_prepared(&prepared, &upstream)
        .expect("matching widths");

    let objective = |p: &LayerParams| -> f64 {
        p.forward_prepared(&prepared)
            .iter()
            .zip(&upstream)
            .map(|(s, w)| s * w)
            .sum()
    };
    let mut worst: f64 = 0.0;
    for (i, g) in grads.elements.iter().enumerate() {
        let analytic = [g.mu[0], g.mu[1], g.sigma[0], g.sigma[1]];
        for (k, &a) in analytic.iter().enumerate() {
            let base = if k < 2 {
                params.elements[i].mu[k]
            } else {
                params.elements[i].sigma[k - 2]
            };
            let numeric = central_difference(
                |x| {
                    let mut p = params.clone();
                    let el = &mut p.elements[i];
                    if k < 2 {
                        el.mu[k] = x;
                    } else {
                        el.sigma[k - 2] = x;
                    }
                    objective(&p)
                },
                base,
            );
            worst = worst.max(relative_error(a, numeric));
        }
    }

    let births: Vec<f64> = (0..rng.gen_range(0..=4))
        .map(|_| rng.gen_range(0.0..1.0))
        .collect();
    let essential = EssentialParams::new(
        (0..rng.gen_range(1..=3))
            .map(|_| Element1d {
                mu: rng.gen_range(0.0..1.0),
                sigma: rng.gen_range(0.5..5.0),
            })
            .collect(),
    )
    .expect("finite parameters");
    let up1: Vec<f64> = (0..essential.len())
        .map(|_| rng.gen_range(-1.0..1.0))
        .collect();
    let g1 = essential.backward(&births, &up1).expect("matching widths");
    let objective1 = |p: &EssentialParams| -> f64 {
        p.forward(&births)
            .iter()
            .zip(&up1)
            .map(|(s, w)| s * w)
            .sum()
    };
    for (i, g) in g1.iter().enumerate() {
        for (k, &a) in g.iter().enumerate() {
            let el = essential.elements[i];
            let base = if k == 0 { el.mu } else { el.sigma };
            let numeric = central_difference(
                |x| {
                    let mut p = essential.clone();
                    if k == 0 {
                        p.elements[i].mu = x;
                    } else {
                        p.elements[i].sigma = x;
                    }
                    objective1(&p)
                },
                base,
            );
            worst = worst.max(relative_error(a, numeric));
        }
    }

    let failure = (worst >= GRADIENT_TOLERANCE).then(|| {
        json!({
            "trial": t,
            "max_relative_error": worst,
            "points": points,
            "layer": params,
            "upstream": upstream,
            "essential_births": births,
            "essential_layer": essential,
            "essential_upstream": up1,
        })
    });
    (worst, failure)
}

/// Analytic parameter gradients of both branch kinds against central
/// differences; each instance includes a log-branch point.
pub fn check_gradients(trials: usize, seed: u64) -> CheckReport {
    let outcomes = (0..trials)
        .into_par_iter()
        .map(|t| gradient_trial(seed, t))
        .collect();
    CheckReport::collect("gradients", outcomes)
}

fn perturb<R: Rng + ?Sized>(rng: &mut R, points: &[(f64, f64)], scale: f64) -> Vec<(f64, f64)> {
    points
        .iter()
        .map(|&(b, d)| {
            let nb = b + rng.gen_range(-scale..scale);
            let nd = (d + rng.gen_range(-scale..scale)).max(nb);
            (nb, nd)
        })
        .collect()
}

fn stability_trial(seed: u64, t: usize, q: Norm) -> (f64, Option<Value>) {
    let mut rng = trial_rng(seed, t);
    let nu = rng.gen_range(0.05..0.3);
    let count = rng.gen_range(1..=3);
    let params = random_layer(&mut rng, count, nu);
    let log_d = rng.gen_bool(0.5);
    let d = random_diagram_points(&mut rng, 6, nu, log_d);
    let e = match rng.gen_range(0..3) {
        0 => {
            let log_e = rng.gen_bool(0.5);
            random_diagram_points(&mut rng, 6, nu, log_e)
        }
        1 => perturb(&mut rng, &d, 0.05),
        _ => {
            let mut e = perturb(&mut rng, &d, 0.005);
            e.truncate(rng.gen_range(0..=e.len()));
            e
        }
    };
    let dd = PersistenceDiagram::new(0, d.clone(), vec![]).expect("valid points");
    let ed = PersistenceDiagram::new(0, e.clone(), vec![]).expect("valid points");
    let w = brute_force_wasserstein(&dd, &ed, 1, q).expect("at most 12 points");

    let mut covered = d.clone();
    covered.extend(&e);
    let bounds = estimate_lipschitz_bounds(&params, &LipschitzGrid::covering(&covered, q));
    let sd = params.forward_points(dd.points()).expect("valid points");
    let se = params.forward_points(ed.points()).expect("valid points");

    let mut worst: f64 = 0.0;
    let mut violated = false;
    for i in 0..params.len() {
        let change = (sd[i] - se[i]).abs();
        let bound = bounds[i] * w;
        if change > STABILITY_SLACK * bound {
            violated = true;
        }
        if bound > 0.0 {
            worst = worst.max(change / bound);
        } else if change > 0.0 {
            worst = f64::INFINITY;
        }
    }
    let failure = violated.then(|| {
        json!({
            "trial": t,
            "q": q.to_string(),
            "d": d,
            "e": e,
            "layer": params,
            "wasserstein": w,
            "lipschitz": bounds,
            "s_d": sd,
            "s_e": se,
        })
    });
    (worst, failure)
}

/// `|S_i(D) - S_i(E)| <= 1.01 · K_i · w_1^q(D, E)` on random pairs of
/// diagrams with at most 6 points each.
pub fn check_stability(trials: usize, seed: u64, q: Norm) -> CheckReport {
    let outcomes = (0..trials)
        .into_par_iter()
        .map(|t| stability_trial(seed, t, q))
        .collect();
    CheckReport::collect(&format!("stability (q = {q})"), outcomes)
}
