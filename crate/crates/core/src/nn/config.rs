use serde::{Deserialize, Serialize};

use crate::layer::{DEFAULT_NU, DEFAULT_PERSISTENCE_THRESHOLD};
use crate::{Error, Result};

/// What a branch reads from a sample's diagram list.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BranchKind {
    /// Finite points through 2-D structure elements.
    Points,
    /// Essential births through 1-D structure elements.
    Essential,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BranchConfig {
    /// Index into the sample's list of diagrams.
    pub input: usize,
    pub kind: BranchKind,
    /// Number of structure elements `N`.
    pub elements: usize,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    #[default]
    Relu,
    Tanh,
}

impl Activation {
    pub(crate) fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Relu => x.max(0.0),
            Activation::Tanh => x.tanh(),
        }
    }

    /// Derivative expressed through the activation output `y`.
    pub(crate) fn slope(self, pre: f64, y: f64) -> f64 {
        match self {
            Activation::Relu => {
                if pre > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - y * y,
        }
    }
}

/// Architecture and optimization settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub branches: Vec<BranchConfig>,
    /// Widths of the hidden dense layers.
    pub hidden: Vec<usize>,
    #[serde(default)]
    pub activation: Activation,
    /// Dropout probability after each hidden layer.
    #[serde(default)]
    pub dropout: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    /// The learning rate is multiplied by `lr_decay_factor` every this many
    /// epochs.
    pub lr_decay_interval: usize,
    #[serde(default = "default_decay")]
    pub lr_decay_factor: f64,
    #[serde(default = "default_nu")]
    pub nu: f64,
    #[serde(default = "default_threshold")]
    pub persistence_threshold: f64,
    #[serde(default = "default_train_fraction")]
    pub train_fraction: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_decay() -> f64 {
    0.5
}

fn default_nu() -> f64 {
    DEFAULT_NU
}

fn default_threshold() -> f64 {
    DEFAULT_PERSISTENCE_THRESHOLD
}

fn default_train_fraction() -> f64 {
    0.9
}

impl ModelConfig {
    /// Four branches over `[dim0, dim1]` graph diagrams: finite points and
    /// essential births of each dimension.
    pub fn graph_default(elements: usize, hidden: usize) -> Self {
        let branch = |input, kind| BranchConfig {
            input,
            kind,
            elements,
        };
        Self {
            branches: vec![
                branch(0, BranchKind::Points),
                branch(0, BranchKind::Essential),
                branch(1, BranchKind::Points),
                branch(1, BranchKind::Essential),
            ],
            hidden: vec![hidden],
            activation: Activation::Relu,
            dropout: 0.0,
            epochs: 60,
            batch_size: 32,
            learning_rate: 0.1,
            lr_decay_interval: 20,
            lr_decay_factor: 0.5,
            nu: DEFAULT_NU,
            persistence_threshold: DEFAULT_PERSISTENCE_THRESHOLD,
            train_fraction: 0.9,
            seed: 0,
        }
    }

    /// A points branch and an essential branch for each of `directions`
    /// dimension-0 image diagrams.
    pub fn image_default(directions: usize, elements: usize, hidden: usize) -> Self {
        let branches = (0..directions)
            .flat_map(|input| {
                [BranchKind::Points, BranchKind::Essential].map(|kind| BranchConfig {
                    input,
                    kind,
                    elements,
                })
            })
            .collect();
        Self {
            branches,
            ..Self::graph_default(elements, hidden)
        }
    }

    /// Learning rate for a 0-based epoch: `lr₀ · factor^⌊epoch / interval⌋`.
    pub fn learning_rate_at(&self, epoch: usize) -> f64 {
        let steps = (epoch / self.lr_decay_interval) as i32;
        self.learning_rate * self.lr_decay_factor.powi(steps)
    }

    /// Semantic checks; errors name the offending field as a JSON pointer.
    pub fn validate(&self) -> Result<()> {
        let fail = |pointer: String, message: &str| {
            Err(Error::Schema {
                pointer,
                message: message.to_string(),
            })
        };
        if self.branches.is_empty() {
            return fail("/branches".into(), "at least one branch is required");
        }
        for (i, b) in self.branches.iter().enumerate() {
            if b.elements == 0 {
                return fail(format!("/branches/{i}/elements"), "must be >= 1");
            }
        }
        for (i, &w) in self.hidden.iter().enumerate() {
            if w == 0 {
                return fail(format!("/hidden/{i}"), "must be >= 1");
            }
        }
        for (name, value) in [
            ("epochs", self.epochs),
            ("batch_size", self.batch_size),
            ("lr_decay_interval", self.lr_decay_interval),
        ] {
            if value == 0 {
                return fail(format!("/{name}"), "must be >= 1");
            }
        }
        let in_unit = |x: f64| x > 0.0 && x <= 1.0;
        for (name, value) in [
            ("learning_rate", self.learning_rate),
            ("lr_decay_factor", self.lr_decay_factor),
            ("train_fraction", self.train_fraction),
        ] {
            if !in_unit(value) {
                return fail(format!("/{name}"), "must lie in (0, 1]");
            }
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return fail("/dropout".into(), "must lie in [0, 1)");
        }
        if !(self.nu > 0.0 && self.nu.is_finite()) {
            return fail("/nu".into(), "must be positive");
        }
        if !(self.persistence_threshold >= 0.0 && self.persistence_threshold.is_finite()) {
            return fail("/persistence_threshold".into(), "must be >= 0");
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedule_halves_every_interval() {
        let mut c = ModelConfig::graph_default(4, 8);
        c.learning_rate = 0.1;
        c.lr_decay_interval = 25;
        assert_eq!(c.learning_rate_at(0), 0.1);
        assert_eq!(c.learning_rate_at(24), 0.1);
        assert_eq!(c.learning_rate_at(25), 0.05);
        assert_eq!(c.learning_rate_at(74), 0.025);
        assert_eq!(c.learning_rate_at(75), 0.0125);
    }

    #[test]
    fn validation_names_fields() {
        let mut c = ModelConfig::graph_default(4, 8);
        c.branches[2].elements = 0;
        let err = c.validate().unwrap_err();
        assert!(
            matches!(err, Error::Schema { ref pointer, .. } if pointer == "/branches/2/elements")
        );

        let mut c = ModelConfig::graph_default(4, 8);
        c.learning_rate = 0.0;
        assert!(c
            .validate()
            .unwrap_err()
            .to_string()
            .starts_with("/learning_rate"));

        let mut c = ModelConfig::graph_default(4, 8);
        c.dropout = 1.0;
        assert!(c.validate().is_err());
        assert!(ModelConfig::graph_default(4, 8).validate().is_ok());
    }

    #[test]
    fn json_defaults() {
        let text = r#"{"branches":[{"input":0,"kind":"essential","elements":2}],
            "hidden":[4],"epochs":3,"batch_size":2,"learning_rate":0.1,"lr_decay_interval":1}"#;
        let c: ModelConfig = serde_json::from_str(text).unwrap();
        assert_eq!(c.lr_decay_factor, 0.5);
        assert_eq!(c.nu, 0.1);
        assert_eq!(c.persistence_threshold, 0.01);
        assert_eq!(c.activation, Activation::Relu);
    }
}
