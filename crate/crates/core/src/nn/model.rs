use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::layer::{EssentialParams, LayerParams, RotatedPoint};
use crate::persistence::PersistenceDiagram;
use crate::{Error, Result};

use super::config::{Activation, BranchKind, ModelConfig};

/// One labeled example: a list of diagrams that branches index into.
#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub diagrams: Vec<PersistenceDiagram>,
    pub label: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Branch {
    Points {
        input: usize,
        params: LayerParams,
    },
    Essential {
        input: usize,
        params: EssentialParams,
    },
}

impl Branch {
    fn input(&self) -> usize {
        match self {
            Branch::Points { input, .. } | Branch::Essential { input, .. } => *input,
        }
    }

    fn width(&self) -> usize {
        match self {
            Branch::Points { params, .. } => params.len(),
            Branch::Essential { params, .. } => params.len(),
        }
    }

    fn param_count(&self) -> usize {
        match self {
            Branch::Points { params, .. } => 4 * params.len(),
            Branch::Essential { params, .. } => 2 * params.len(),
        }
    }
}

/// Fully connected layer, `weights` is `outputs × inputs` row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Dense {
    /// Uniform in `±√(6 / (fan_in + fan_out))`, zero bias.
    fn init<R: Rng + ?Sized>(inputs: usize, outputs: usize, rng: &mut R) -> Self {
        let limit = (6.0 / (inputs + outputs) as f64).sqrt();
        Self {
            inputs,
            outputs,
            weights: (0..inputs * outputs)
                .map(|_| rng.gen_range(-limit..=limit))
                .collect(),
            bias: vec![0.0; outputs],
        }
    }

    fn forward(&self, x: &[f64]) -> Vec<f64> {
        self.weights
            .chunks_exact(self.inputs)
            .zip(&self.bias)
            .map(|(row, b)| row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + b)
            .collect()
    }
}

/// A diagram reduced to what its branch consumes.
#[derive(Clone, Debug)]
pub(crate) enum BranchInput {
    Points(Vec<RotatedPoint>),
    Births(Vec<f64>),
}

/// Branch layers followed by an MLP classifier head.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Model {
    pub branches: Vec<Branch>,
    pub dense: Vec<Dense>,
    pub activation: Activation,
    pub dropout: f64,
    pub classes: usize,
}

struct Trace {
    // activations[0] is the concatenated branch output
    activations: Vec<Vec<f64>>,
    pre: Vec<Vec<f64>>,
    masks: Vec<Vec<f64>>,
    probs: Vec<f64>,
}

impl Model {
    /// Initializes branches from the pooled diagrams of `train`, hidden dense
    /// layers uniformly and the output layer to zero.
    pub fn init<R: Rng + ?Sized>(
        config: &ModelConfig,
        train: &[&Sample],
        classes: usize,
        rng: &mut R,
    ) -> Result<Self> {
        config.validate()?;
        let mut branches = Vec::with_capacity(config.branches.len());
        for b in &config.branches {
            let diagrams = train.iter().filter_map(|s| s.diagrams.get(b.input));
            branches.push(match b.kind {
                BranchKind::Points => {
                    let pooled: Vec<(f64, f64)> =
                        diagrams.flat_map(|d| d.points().iter().copied()).collect();
                    Branch::Points {
                        input: b.input,
                        params: LayerParams::init_from_points(
                            b.elements,
                            &pooled,
                            config.nu,
                            config.persistence_threshold,
                            rng,
                        )?,
                    }
                }
                BranchKind::Essential => {
                    let pooled: Vec<f64> = diagrams
                        .flat_map(|d| d.essential().iter().copied())
                        .collect();
                    Branch::Essential {
                        input: b.input,
                        params: EssentialParams::init_from_births(b.elements, &pooled, rng)?,
                    }
                }
            });
        }

        let mut widths = vec![branches.iter().map(Branch::width).sum::<usize>()];
        widths.extend(&config.hidden);
        widths.push(classes);
        let mut dense: Vec<Dense> = widths
            .windows(2)
            .map(|w| Dense::init(w[0], w[1], rng))
            .collect();
        // start from uniform class probabilities whatever the feature scale
        if let Some(out) = dense.last_mut() {
            out.weights.iter_mut().for_each(|w| *w = 0.0);
        }

        Ok(Self {
            branches,
            dense,
            activation: config.activation,
            dropout: config.dropout,
            classes,
        })
    }

    pub(crate) fn prepare(&self, diagrams: &[PersistenceDiagram]) -> Result<Vec<BranchInput>> {
        self.branches
            .iter()
            .enumerate()
            .map(|(i, b)| {
                let d = diagrams.get(b.input()).ok_or_else(|| {
                    Error::validation(format!(
                        "branch {i} reads diagram {} but the sample has {}",
                        b.input(),
                        diagrams.len()
                    ))
                })?;
                Ok(match b {
                    Branch::Points { params, .. } => {
                        BranchInput::Points(params.prepare(d.points())?)
                    }
                    Branch::Essential { .. } => BranchInput::Births(d.essential().to_vec()),
                })
            })
            .collect()
    }

    /// Concatenated branch outputs.
    pub fn features(&self, diagrams: &[PersistenceDiagram]) -> Result<Vec<f64>> {
        let inputs = self.prepare(diagrams)?;
        Ok(self.features_prepared(&inputs))
    }

    pub(crate) fn features_prepared(&self, inputs: &[BranchInput]) -> Vec<f64> {
        let mut out = Vec::new();
        for (b, x) in self.branches.iter().zip(inputs) {
            match (b, x) {
                (Branch::Points { params, .. }, BranchInput::Points(p)) => {
                    out.extend(params.forward_prepared(p))
                }
                (Branch::Essential { params, .. }, BranchInput::Births(v)) => {
                    out.extend(params.forward(v))
                }
                _ => unreachable!("inputs are prepared by the same model"),
            }
        }
        out
    }

    /// Class probabilities in evaluation mode.
    pub fn predict_proba(&self, diagrams: &[PersistenceDiagram]) -> Result<Vec<f64>> {
        let inputs = self.prepare(diagrams)?;
        Ok(self.trace(&inputs, None).probs)
    }

    pub fn logits(&self, diagrams: &[PersistenceDiagram]) -> Result<Vec<f64>> {
        let features = self.features(diagrams)?;
        Ok(self.head_logits(features))
    }

    pub fn predict(&self, diagrams: &[PersistenceDiagram]) -> Result<usize> {
        Ok(argmax(&self.predict_proba(diagrams)?))
    }

    pub(crate) fn predict_prepared(&self, inputs: &[BranchInput]) -> usize {
        argmax(&self.trace(inputs, None).probs)
    }

    fn head_logits(&self, features: Vec<f64>) -> Vec<f64> {
        let last = self.dense.len() - 1;
        let mut x = features;
        for (i, layer) in self.dense.iter().enumerate() {
            x = layer.forward(&x);
            if i < last {
                x.iter_mut().for_each(|v| *v = self.activation.apply(*v));
            }
        }
        x
    }

    /// Forward pass keeping everything backward needs. Dropout is active
    /// when an rng is given.
    fn trace(
        &self,
        inputs: &[BranchInput],
        mut dropout_rng: Option<&mut dyn rand::RngCore>,
    ) -> Trace {
        let features = self.features_prepared(inputs);
        let last = self.dense.len() - 1;
        let mut activations = vec![features];
        let mut pre = Vec::with_capacity(self.dense.len());
        let mut masks = Vec::with_capacity(last);
        for (i, layer) in self.dense.iter().enumerate() {
            let z = layer.forward(activations.last().expect("nonempty"));
            if i == last {
                pre.push(z);
                break;
            }
            let mut a: Vec<f64> = z.iter().map(|&v| self.activation.apply(v)).collect();
            let mask: Vec<f64> = match dropout_rng.as_deref_mut() {
                Some(rng) if self.dropout > 0.0 => {
                    let keep = 1.0 - self.dropout;
                    (0..a.len())
                        .map(|_| {
                            if rng.gen::<f64>() < keep {
                                1.0 / keep
                            } else {
                                0.0
                            }
                        })
                        .collect()
                }
                _ => vec![1.0; a.len()],
            };
            a.iter_mut().zip(&mask).for_each(|(v, m)| *v *= m);
            pre.push(z);
            masks.push(mask);
            activations.push(a);
        }
        let probs = softmax(pre.last().expect("at least one dense layer"));
        Trace {
            activations,
            pre,
            masks,
            probs,
        }
    }

    pub fn param_count(&self) -> usize {
        self.branches.iter().map(Branch::param_count).sum::<usize>()
            + self
                .dense
                .iter()
                .map(|d| d.weights.len() + d.bias.len())
                .sum::<usize>()
    }

    /// All parameters in a fixed order: branch elements (`μ0 μ1 σ0 σ1` or
    /// `μ σ`), then each dense layer's weights and bias.
    pub fn flat_params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for b in &self.branches {
            match b {
                Branch::Points { params, .. } => {
                    for e in &params.elements {
                        out.extend([e.mu[0], e.mu[1], e.sigma[0], e.sigma[1]]);
                    }
                }
                Branch::Essential { params, .. } => {
                    for e in &params.elements {
                        out.extend([e.mu, e.sigma]);
                    }
                }
            }
        }
        for d in &self.dense {
            out.extend(&d.weights);
            out.extend(&d.bias);
        }
        out
    }

    pub fn set_flat_params(&mut self, values: &[f64]) -> Result<()> {
        if values.len() != self.param_count() {
            return Err(Error::validation(format!(
                "expected {} parameters, got {}",
                self.param_count(),
                values.len()
            )));
        }
        let mut it = values.iter().copied();
        let mut next = || it.next().expect("length checked");
        for b in &mut self.branches {
            match b {
                Branch::Points { params, .. } => {
                    for e in &mut params.elements {
                        e.mu = [next(), next()];
                        e.sigma = [next(), next()];
                    }
                }
                Branch::Essential { params, .. } => {
                    for e in &mut params.elements {
                        e.mu = next();
                        e.sigma = next();
                    }
                }
            }
        }
        for d in &mut self.dense {
            d.weights.iter_mut().for_each(|w| *w = next());
            d.bias.iter_mut().for_each(|w| *w = next());
        }
        Ok(())
    }

    /// Cross-entropy loss of one prepared sample and its gradient in
    /// [`Model::flat_params`] order.
    pub(crate) fn sample_gradient(
        &self,
        inputs: &[BranchInput],
        label: usize,
        dropout_rng: Option<&mut dyn rand::RngCore>,
    ) -> (f64, Vec<f64>) {
        let trace = self.trace(inputs, dropout_rng);
        let loss = -trace.probs[label].max(f64::MIN_POSITIVE).ln();

        let mut dense_grads: Vec<(Vec<f64>, Vec<f64>)> = Vec::with_capacity(self.dense.len());
        let mut delta: Vec<f64> = trace.probs.clone();
        delta[label] -= 1.0;
        for (i, layer) in self.dense.iter().enumerate().rev() {
            let input = &trace.activations[i];
            let mut gw = vec![0.0; layer.weights.len()];
            for (o, &d) in delta.iter().enumerate() {
                let row = &mut gw[o * layer.inputs..(o + 1) * layer.inputs];
                row.iter_mut().zip(input).for_each(|(g, x)| *g = d * x);
            }
            let gb = delta.clone();
            let mut back = vec![0.0; layer.inputs];
            for (o, &d) in delta.iter().enumerate() {
                let row = &layer.weights[o * layer.inputs..(o + 1) * layer.inputs];
                back.iter_mut().zip(row).for_each(|(b, w)| *b += w * d);
            }
            if i > 0 {
                // through the dropout mask and activation of hidden layer i - 1
                let (z, a, m) = (
                    &trace.pre[i - 1],
                    &trace.activations[i],
                    &trace.masks[i - 1],
                );
                for k in 0..back.len() {
                    let y = if m[k] == 0.0 { 0.0 } else { a[k] / m[k] };
                    back[k] *= m[k] * self.activation.slope(z[k], y);
                }
            }
            dense_grads.push((gw, gb));
            delta = back;
        }
        dense_grads.reverse();

        let mut grad = Vec::with_capacity(self.param_count());
        let mut offset = 0;
        for (b, x) in self.branches.iter().zip(inputs) {
            let upstream = &delta[offset..offset + b.width()];
            offset += b.width();
            match (b, x) {
                (Branch::Points { params, .. }, BranchInput::Points(p)) => {
                    let g = params
                        .backward_prepared(p, upstream)
                        .expect("upstream width matches branch");
                    for e in g.elements {
                        grad.extend([e.mu[0], e.mu[1], e.sigma[0], e.sigma[1]]);
                    }
                }
                (Branch::Essential { params, .. }, BranchInput::Births(v)) => {
                    let g = params
                        .backward(v, upstream)
                        .expect("upstream width matches branch");
                    for [m, s] in g {
                        grad.extend([m, s]);
                    }
                }
                _ => unreachable!("inputs are prepared by the same model"),
            }
        }
        for (gw, gb) in dense_grads {
            grad.extend(gw);
            grad.extend(gb);
        }
        (loss, grad)
    }

    /// Mean cross-entropy over `samples` and its gradient, without dropout.
    pub fn loss_and_gradient(&self, samples: &[&Sample]) -> Result<(f64, Vec<f64>)> {
        let mut total = 0.0;
        let mut grad = vec![0.0; self.param_count()];
        for s in samples {
            self.check_label(s.label)?;
            let inputs = self.prepare(&s.diagrams)?;
            let (l, g) = self.sample_gradient(&inputs, s.label, None);
            total += l;
            grad.iter_mut().zip(g).for_each(|(a, b)| *a += b);
        }
        let n = samples.len().max(1) as f64;
        grad.iter_mut().for_each(|g| *g /= n);
        Ok((total / n, grad))
    }

    /// Mean cross-entropy over `samples`, without dropout.
    pub fn loss(&self, samples: &[&Sample]) -> Result<f64> {
        let mut total = 0.0;
        for s in samples {
            self.check_label(s.label)?;
            let p = self.predict_proba(&s.diagrams)?;
            total -= p[s.label].max(f64::MIN_POSITIVE).ln();
        }
        Ok(total / samples.len().max(1) as f64)
    }

    pub(crate) fn check_label(&self, label: usize) -> Result<()> {
        if label >= self.classes {
            return Err(Error::validation(format!(
                "label {label} outside the model's {} classes",
                self.classes
            )));
        }
        Ok(())
    }
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|z| (z - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

pub fn argmax(values: &[f64]) -> usize {
    values
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, &v)| {
            if v > best.1 {
                (i, v)
            } else {
                best
            }
        })
        .0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::config::BranchConfig;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sample(label: usize, points: Vec<(f64, f64)>, essential: Vec<f64>) -> Sample {
        Sample {
            diagrams: vec![
                PersistenceDiagram::new(0, points, essential.clone()).unwrap(),
                PersistenceDiagram::new(1, vec![], essential).unwrap(),
            ],
            label,
        }
    }

    fn tiny_config() -> ModelConfig {
        let mut c = ModelConfig::graph_default(3, 5);
        c.persistence_threshold = 0.0;
        c
    }

    #[test]
    fn zero_head_is_uniform() {
        let s = sample(0, vec![(0.1, 0.8)], vec![0.1]);
        let mut model =
            Model::init(&tiny_config(), &[&s], 3, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        for d in &mut model.dense {
            d.weights.iter_mut().for_each(|w| *w = 0.0);
        }
        let p = model.predict_proba(&s.diagrams).unwrap();
        assert!(p.iter().all(|&x| (x - 1.0 / 3.0).abs() < 1e-15));
    }

    #[test]
    fn probabilities_sum_to_one() {
        let s = sample(1, vec![(0.1, 0.8), (0.3, 0.31), (0.0, 2.0)], vec![0.0, 0.5]);
        let model =
            Model::init(&tiny_config(), &[&s], 4, &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
        let p = model.predict_proba(&s.diagrams).unwrap();
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn seeded_init_is_deterministic() {
        let s = sample(1, vec![(0.1, 0.8), (0.0, 2.0)], vec![0.0]);
        let a = Model::init(&tiny_config(), &[&s], 2, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let b = Model::init(&tiny_config(), &[&s], 2, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        assert_eq!(a.flat_params(), b.flat_params());
        assert_eq!(
            a.logits(&s.diagrams).unwrap(),
            b.logits(&s.diagrams).unwrap()
        );
    }

    #[test]
    fn missing_diagram_is_an_error() {
        let s = sample(0, vec![(0.1, 0.8)], vec![]);
        let model =
            Model::init(&tiny_config(), &[&s], 2, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert!(model.predict_proba(&s.diagrams[..1]).is_err());
    }

    #[test]
    fn flat_params_round_trip() {
        let s = sample(0, vec![(0.1, 0.8)], vec![0.2]);
        let mut model =
            Model::init(&tiny_config(), &[&s], 2, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        let mut p = model.flat_params();
        assert_eq!(p.len(), model.param_count());
        p[0] += 1.0;
        model.set_flat_params(&p).unwrap();
        assert_eq!(model.flat_params(), p);
        assert!(model.set_flat_params(&p[1..]).is_err());
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let config = ModelConfig {
            branches: vec![
                BranchConfig {
                    input: 0,
                    kind: BranchKind::Points,
                    elements: 2,
                },
                BranchConfig {
                    input: 0,
                    kind: BranchKind::Essential,
                    elements: 2,
                },
            ],
            hidden: vec![4],
            activation: Activation::Tanh,
            ..tiny_config()
        };
        let a = sample(0, vec![(0.1, 0.8), (0.2, 0.25), (0.0, 1.3)], vec![0.05]);
        let b = sample(1, vec![(0.4, 0.6)], vec![0.3, 0.6]);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut model = Model::init(&config, &[&a, &b], 2, &mut rng).unwrap();
        // a zero output layer would hide every upstream gradient
        let out = model.dense.last_mut().unwrap();
        out.weights
            .iter_mut()
            .for_each(|w| *w = rng.gen_range(-1.0..1.0));
        let (_, grad) = model.loss_and_gradient(&[&a, &b]).unwrap();
        let base = model.flat_params();
        let h = 1e-6;
        for k in 0..base.len() {
            let mut p = base.clone();
            p[k] += h;
            model.set_flat_params(&p).unwrap();
            let up = model.loss(&[&a, &b]).unwrap();
            p[k] -= 2.0 * h;
            model.set_flat_params(&p).unwrap();
            let down = model.loss(&[&a, &b]).unwrap();
            let numeric = (up - down) / (2.0 * h);
            let rel = (numeric - grad[k]).abs() / numeric.abs().max(grad[k].abs()).max(1e-4);
            assert!(
                rel < 1e-4,
                "param {k}: analytic {} numeric {numeric}",
                grad[k]
            );
        }
    }
}
