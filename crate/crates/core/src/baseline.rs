//! Sorted-persistence vectorization and a one-vs-rest linear SVM.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::persistence::PersistenceDiagram;
use crate::{Error, Result};

/// The `N` largest persistences of a diagram, non-increasing, zero-padded.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorizedDiagram {
    values: Vec<f64>,
}

impl VectorizedDiagram {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

/// Vectorizes the finite points of `diagram`. With `essential_cap`, each
/// essential birth `b` also contributes `cap - b`.
pub fn vectorize_diagram(
    diagram: &PersistenceDiagram,
    n: usize,
    essential_cap: Option<f64>,
) -> Result<VectorizedDiagram> {
    if n == 0 {
        return Err(Error::validation("vector length must be >= 1"));
    }
    let mut pers: Vec<f64> = diagram.persistences().collect();
    if let Some(cap) = essential_cap {
        pers.extend(diagram.essential().iter().map(|b| (cap - b).max(0.0)));
    }
    pers.retain(|&p| p > 0.0);
    pers.sort_by(|a, b| b.total_cmp(a));
    pers.resize(n, 0.0);
    Ok(VectorizedDiagram { values: pers })
}

/// Concatenates the vectorizations of every diagram of a sample.
pub fn vectorize_sample(
    diagrams: &[PersistenceDiagram],
    n: usize,
    essential_cap: Option<f64>,
) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(n * diagrams.len());
    for d in diagrams {
        out.extend(vectorize_diagram(d, n, essential_cap)?.into_values());
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SvmConfig {
    pub lambda: f64,
    pub epochs: usize,
    /// Initial step; step `t` is `eta0 / (1 + lambda · eta0 · t)`.
    pub eta0: f64,
    pub seed: u64,
}

impl Default for SvmConfig {
    fn default() -> Self {
        Self {
            lambda: 1e-4,
            epochs: 100,
            eta0: 0.1,
            seed: 0,
        }
    }
}

/// One-vs-rest linear classifier on standardized features.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
    /// One `(weights, bias)` per class.
    pub classifiers: Vec<(Vec<f64>, f64)>,
}

impl LinearModel {
    fn standardize(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(&self.mean)
            .zip(&self.scale)
            .map(|((v, m), s)| (v - m) / s)
            .collect()
    }

    pub fn scores(&self, x: &[f64]) -> Vec<f64> {
        let z = self.standardize(x);
        self.classifiers
            .iter()
            .map(|(w, b)| dot(w, &z) + b)
            .collect()
    }

    pub fn predict(&self, x: &[f64]) -> usize {
        crate::nn::argmax(&self.scores(x))
    }

    pub fn accuracy(&self, vectors: &[Vec<f64>], labels: &[usize]) -> f64 {
        let correct = vectors
            .iter()
            .zip(labels)
            .filter(|(x, &y)| self.predict(x) == y)
            .count();
        correct as f64 / vectors.len().max(1) as f64
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn class_count(labels: &[usize]) -> Result<usize> {
    let classes = labels.iter().map(|&l| l + 1).max().unwrap_or(0);
    let mut seen = vec![false; classes];
    labels.iter().for_each(|&l| seen[l] = true);
    if seen.iter().filter(|&&s| s).count() < 2 {
        return Err(Error::validation(
            "linear classifier needs at least two classes",
        ));
    }
    Ok(classes)
}

/// Trains one hinge-loss SGD classifier per class.
pub fn train_linear(
    vectors: &[Vec<f64>],
    labels: &[usize],
    config: &SvmConfig,
) -> Result<LinearModel> {
    if vectors.len() != labels.len() {
        return Err(Error::validation(format!(
            "{} vectors but {} labels",
            vectors.len(),
            labels.len()
        )));
    }
    let classes = class_count(labels)?;
    let dim = vectors[0].len();
    if vectors.iter().any(|v| v.len() != dim) {
        return Err(Error::validation("vectors have differing lengths"));
    }

    let n = vectors.len() as f64;
    let mean: Vec<f64> = (0..dim)
        .map(|j| vectors.iter().map(|v| v[j]).sum::<f64>() / n)
        .collect();
    let scale: Vec<f64> = (0..dim)
        .map(|j| {
            let var = vectors
                .iter()
                .map(|v| (v[j] - mean[j]).powi(2))
                .sum::<f64>()
                / n;
            if var > 0.0 {
                var.sqrt()
            } else {
                1.0
            }
        })
        .collect();
    let mut model = LinearModel {
        mean,
        scale,
        classifiers: Vec::with_capacity(classes),
    };
    let z: Vec<Vec<f64>> = vectors.iter().map(|v| model.standardize(v)).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..z.len()).collect();
    for class in 0..classes {
        let (mut w, mut b) = (vec![0.0; dim], 0.0);
        let mut t = 0.0;
        for _ in 0..config.epochs {
            order.shuffle(&mut rng);
            for &i in &order {
                let y = if labels[i] == class { 1.0 } else { -1.0 };
                let eta = config.eta0 / (1.0 + config.lambda * config.eta0 * t);
                let margin = y * (dot(&w, &z[i]) + b);
                w.iter_mut().for_each(|wj| *wj *= 1.0 - eta * config.lambda);
                if margin < 1.0 {
                    w.iter_mut()
                        .zip(&z[i])
                        .for_each(|(wj, x)| *wj += eta * y * x);
                    b += eta * y;
                }
                t += 1.0;
            }
        }
        model.classifiers.push((w, b));
    }
    Ok(model)
}

/// Deterministic stratified assignment of samples to `k` folds.
pub fn stratified_folds(labels: &[usize], k: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let classes = labels.iter().map(|&l| l + 1).max().unwrap_or(0);
    let mut fold = vec![0; labels.len()];
    let mut next = 0;
    for class in 0..classes {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        idx.shuffle(&mut rng);
        for i in idx {
            fold[i] = next % k;
            next += 1;
        }
    }
    fold
}

/// Mean held-out accuracy over `k` stratified folds.
pub fn cross_validate(
    vectors: &[Vec<f64>],
    labels: &[usize],
    k: usize,
    config: &SvmConfig,
) -> Result<f64> {
    class_count(labels)?;
    if k < 2 || k > vectors.len() {
        return Err(Error::validation(format!(
            "cannot form {k} folds from {} samples",
            vectors.len()
        )));
    }
    let folds = stratified_folds(labels, k, config.seed);
    let mut total = 0.0;
    for f in 0..k {
        let pick = |test: bool| -> (Vec<Vec<f64>>, Vec<usize>) {
            (0..vectors.len())
                .filter(|&i| (folds[i] == f) == test)
                .map(|i| (vectors[i].clone(), labels[i]))
                .unzip()
        };
        let (tx, ty) = pick(false);
        let (vx, vy) = pick(true);
        let model = train_linear(&tx, &ty, config)?;
        total += model.accuracy(&vx, &vy);
    }
    Ok(total / k as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diagram(points: &[(f64, f64)]) -> PersistenceDiagram {
        PersistenceDiagram::new(0, points.to_vec(), vec![]).unwrap()
    }

    fn close(a: &[f64], b: &[f64]) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-12)
    }

    #[test]
    fn vectorize_examples() {
        let v = vectorize_diagram(&diagram(&[(0.2, 1.0), (0.5, 0.7)]), 3, None).unwrap();
        assert!(close(v.values(), &[0.8, 0.2, 0.0]));
        let v = vectorize_diagram(&diagram(&[]), 5, None).unwrap();
        assert_eq!(v.values(), &[0.0; 5]);
        let d = diagram(&[(0.0, 1.0), (0.0, 3.0), (1.0, 3.0), (0.0, 0.5)]);
        assert_eq!(
            vectorize_diagram(&d, 2, None).unwrap().values(),
            &[3.0, 2.0]
        );
        assert!(vectorize_diagram(&d, 0, None).is_err());
    }

    #[test]
    fn essential_cap_is_opt_in() {
        let d = PersistenceDiagram::new(0, vec![(0.2, 0.5)], vec![0.0]).unwrap();
        assert!(close(
            vectorize_diagram(&d, 2, None).unwrap().values(),
            &[0.3, 0.0]
        ));
        assert!(close(
            vectorize_diagram(&d, 2, Some(1.0)).unwrap().values(),
            &[1.0, 0.3]
        ));
    }

    fn blobs(n: usize, shift: f64, seed: u64) -> (Vec<Vec<f64>>, Vec<usize>) {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|i| {
                let y = i % 2;
                let c = if y == 1 { shift } else { -shift };
                (
                    vec![c + rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)],
                    y,
                )
            })
            .unzip()
    }

    #[test]
    fn separable_data_is_fit_exactly() {
        let (x, y) = blobs(100, 2.0, 3);
        let model = train_linear(&x, &y, &SvmConfig::default()).unwrap();
        assert_eq!(model.accuracy(&x, &y), 1.0);
        assert_eq!(
            cross_validate(&x, &y, 10, &SvmConfig::default()).unwrap(),
            1.0
        );
    }

    #[test]
    fn shuffled_labels_are_at_chance() {
        let (x, mut y) = blobs(200, 2.0, 4);
        y.shuffle(&mut ChaCha8Rng::seed_from_u64(5));
        let acc = cross_validate(&x, &y, 10, &SvmConfig::default()).unwrap();
        assert!((acc - 0.5).abs() <= 0.1, "accuracy {acc}");
    }

    #[test]
    fn single_class_is_rejected() {
        let x = vec![vec![1.0], vec![2.0]];
        assert!(train_linear(&x, &[0, 0], &SvmConfig::default()).is_err());
        assert!(train_linear(&x, &[1, 1], &SvmConfig::default()).is_err());
    }

    #[test]
    fn three_classes() {
        let x: Vec<Vec<f64>> = (0..90)
            .map(|i| vec![(i % 3) as f64 * 5.0 + (i as f64 * 0.01)])
            .collect();
        let y: Vec<usize> = (0..90).map(|i| i % 3).collect();
        // a 1-D one-vs-rest split cannot isolate the middle class perfectly,
        // but the outer two must be right
        let model = train_linear(&x, &y, &SvmConfig::default()).unwrap();
        assert_eq!(model.predict(&[-1.0]), 0);
        assert_eq!(model.predict(&[11.0]), 2);
    }
}
