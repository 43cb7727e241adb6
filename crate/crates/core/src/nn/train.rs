use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

use super::config::ModelConfig;
use super::model::{BranchInput, Model, Sample};

/// Labeled samples with classes `0..classes`.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub samples: Vec<Sample>,
    pub classes: usize,
}

impl Dataset {
    /// Infers the class count from the labels; every class in
    /// `0..=max_label` must occur and there must be at least two.
    pub fn new(samples: Vec<Sample>) -> Result<Self> {
        let classes = samples.iter().map(|s| s.label + 1).max().unwrap_or(0);
        if classes < 2 {
            return Err(Error::validation("training needs at least two classes"));
        }
        let mut counts = vec![0usize; classes];
        samples.iter().for_each(|s| counts[s.label] += 1);
        if let Some(empty) = counts.iter().position(|&c| c == 0) {
            return Err(Error::validation(format!("class {empty} has no samples")));
        }
        Ok(Self { samples, classes })
    }

    /// Per-class shuffled split: each class contributes
    /// `round(fraction · count)` samples (at least one) to the training side.
    pub fn stratified_split(&self, fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (mut train, mut test) = (Vec::new(), Vec::new());
        for class in 0..self.classes {
            let mut idx: Vec<usize> = (0..self.samples.len())
                .filter(|&i| self.samples[i].label == class)
                .collect();
            idx.shuffle(&mut rng);
            let n_train = ((idx.len() as f64 * fraction).round() as usize).clamp(1, idx.len());
            train.extend_from_slice(&idx[..n_train]);
            test.extend_from_slice(&idx[n_train..]);
        }
        train.sort_unstable();
        test.sort_unstable();
        (train, test)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub lr: f64,
    pub train_loss: f64,
    /// `None` when the test split is empty.
    pub test_acc: Option<f64>,
}

/// A trained model with the settings and split that produced it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub config: ModelConfig,
    pub model: Model,
    pub history: Vec<EpochMetrics>,
    pub train_indices: Vec<usize>,
    pub test_indices: Vec<usize>,
    pub test_accuracy: Option<f64>,
}

/// Trains with mini-batch SGD and a step-decay learning rate on a
/// stratified split of `dataset`.
///
/// Per-sample gradients within a batch are computed in parallel and summed
/// in sample order, so results do not depend on the thread count.
pub fn train(config: &ModelConfig, dataset: &Dataset) -> Result<Checkpoint> {
    config.validate()?;
    let (train_idx, test_idx) = dataset.stratified_split(config.train_fraction, config.seed);
    train_on_split(config, dataset, train_idx, test_idx)
}

pub fn train_on_split(
    config: &ModelConfig,
    dataset: &Dataset,
    train_idx: Vec<usize>,
    test_idx: Vec<usize>,
) -> Result<Checkpoint> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x9e37_79b9_7f4a_7c15);
    let train_refs: Vec<&Sample> = train_idx.iter().map(|&i| &dataset.samples[i]).collect();
    let mut model = Model::init(config, &train_refs, dataset.classes, &mut rng)?;

    // Thresholding and sorting depend only on the data, so do them once.
    let prepare = |idx: &[usize]| -> Result<Vec<(Vec<BranchInput>, usize)>> {
        idx.iter()
            .map(|&i| {
                let s = &dataset.samples[i];
                Ok((model.prepare(&s.diagrams)?, s.label))
            })
            .collect()
    };
    let train_set = prepare(&train_idx)?;
    let test_set = prepare(&test_idx)?;

    let mut history = Vec::with_capacity(config.epochs);
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut params = model.flat_params();
    for epoch in 0..config.epochs {
        let lr = config.learning_rate_at(epoch);
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(config.batch_size) {
            let seeds: Vec<u64> = batch.iter().map(|_| rng.gen()).collect();
            let results: Vec<(f64, Vec<f64>)> = batch
                .par_iter()
                .zip(&seeds)
                .map(|(&i, &seed)| {
                    let (inputs, label) = &train_set[i];
                    let mut dropout_rng = ChaCha8Rng::seed_from_u64(seed);
                    model.sample_gradient(inputs, *label, Some(&mut dropout_rng))
                })
                .collect();
            let mut grad = vec![0.0; params.len()];
            for (loss, g) in &results {
                epoch_loss += loss;
                grad.iter_mut().zip(g).for_each(|(a, b)| *a += b);
            }
            let scale = lr / batch.len() as f64;
            params
                .iter_mut()
                .zip(&grad)
                .for_each(|(p, g)| *p -= scale * g);
            model.set_flat_params(&params)?;
        }
        history.push(EpochMetrics {
            epoch,
            lr,
            train_loss: epoch_loss / train_set.len().max(1) as f64,
            test_acc: accuracy_prepared(&model, &test_set),
        });
    }

    let test_accuracy = accuracy_prepared(&model, &test_set);
    Ok(Checkpoint {
        config: config.clone(),
        model,
        history,
        train_indices: train_idx,
        test_indices: test_idx,
        test_accuracy,
    })
}

fn accuracy_prepared(model: &Model, set: &[(Vec<BranchInput>, usize)]) -> Option<f64> {
    if set.is_empty() {
        return None;
    }
    let correct = set
        .par_iter()
        .filter(|(inputs, label)| model.predict_prepared(inputs) == *label)
        .count();
    Some(correct as f64 / set.len() as f64)
}

/// Fraction of `samples` the checkpoint classifies correctly.
pub fn evaluate(checkpoint: &Checkpoint, samples: &[Sample]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::validation("cannot evaluate on an empty sample set"));
    }
    let model = &checkpoint.model;
    for s in samples {
        model.check_label(s.label)?;
    }
    let correct: Result<Vec<bool>> = samples
        .par_iter()
        .map(|s| Ok(model.predict(&s.diagrams)? == s.label))
        .collect();
    Ok(correct?.into_iter().filter(|&c| c).count() as f64 / samples.len() as f64)
}

/// Trains `runs` times with seeds `seed, seed + 1, ...` (each run draws its
/// own split) and returns the per-run test accuracies.
pub fn repeated_runs(config: &ModelConfig, dataset: &Dataset, runs: usize) -> Result<Vec<f64>> {
    (0..runs as u64)
        .map(|r| {
            let mut c = config.clone();
            c.seed = config.seed.wrapping_add(r);
            let ck = train(&c, dataset)?;
            ck.test_accuracy
                .ok_or_else(|| Error::validation("test split is empty"))
        })
        .collect()
}
