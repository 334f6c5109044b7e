//! Minibatch SGD with gradient clipping, weight decay and output dropout.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::domain::Vocabulary;
use crate::encode::{EncodedSequence, Threshold};
use crate::error::{Error, Result};
use crate::eval::letter_accuracy;
use crate::loss::{backward_bptt, batch_loss, Gradients};
use crate::net::{Model, ModelDims, ModelKind, DEFAULT_HIDDEN};

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    /// Multiplier applied to the learning rate after every epoch.
    pub lr_decay: f64,
    pub weight_decay: f64,
    pub clip_norm: f64,
    pub dropout_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    pub hidden_dim: usize,
    /// Model 3 side-branch width; defaults to `hidden_dim`.
    pub side_dim: Option<usize>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.1,
            lr_decay: 0.95,
            weight_decay: 1e-4,
            clip_norm: 5.0,
            dropout_rate: 0.5,
            batch_size: 32,
            epochs: 50,
            seed: 0,
            hidden_dim: DEFAULT_HIDDEN,
            side_dim: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidConfig(msg.to_string()));
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be a non-negative number");
        }
        if !(self.weight_decay >= 0.0) {
            return bad("weight_decay must be non-negative");
        }
        if !(self.clip_norm > 0.0) {
            return bad("clip_norm must be positive");
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return bad("dropout_rate must lie in [0, 1)");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be at least 1");
        }
        if self.hidden_dim == 0 {
            return bad("hidden_dim must be at least 1");
        }
        Ok(())
    }

    pub fn dims(&self, vocab: &Vocabulary) -> ModelDims {
        ModelDims {
            side: self.side_dim.unwrap_or(self.hidden_dim),
            ..ModelDims::for_vocab(vocab, self.hidden_dim)
        }
    }
}

/// Rescales `grads` in place so their global L2 norm is at most `clip_norm`.
/// Returns the norm before clipping.
pub fn clip_gradients(grads: &mut Gradients, clip_norm: f64) -> f64 {
    let norm = grads.squared_norm().sqrt();
    if norm > clip_norm {
        grads.scale(clip_norm / norm);
    }
    norm
}

/// Clips `grads`, then applies `θ ← θ − lr·(g + weight_decay·θ)`.
pub fn sgd_step(model: &mut Model, grads: &Gradients, learning_rate: f64, config: &TrainConfig) {
    let mut g = grads.clone();
    clip_gradients(&mut g, config.clip_norm);
    let wd = config.weight_decay;
    model.params.zip_mut(&g, |_, theta, grad| {
        for (p, d) in theta.iter_mut().zip(grad) {
            *p -= learning_rate * (d + wd * *p);
        }
    });
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    /// Training loss per labeled entry, measured with dropout active.
    pub train_loss: f64,
    /// Validation loss per labeled entry.
    pub val_loss: Option<f64>,
    /// Validation letter-grade accuracy in percent.
    pub val_letter_accuracy: Option<f64>,
}

/// Trains a fresh model and returns the epoch with the best validation letter
/// accuracy (or the last epoch when there is no validation data).
pub fn train(
    kind: ModelKind,
    vocab: &Vocabulary,
    threshold: Threshold,
    train_set: &[EncodedSequence],
    val_set: &[EncodedSequence],
    config: &TrainConfig,
) -> Result<(Model, Vec<EpochStats>)> {
    config.validate()?;
    if train_set.is_empty() {
        return Err(Error::EmptyTrainingSplit);
    }
    let mut model = Model::init(kind, config.dims(vocab), threshold, vocab.scheme(), config.seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(0x5eed));
    let (n, m) = (vocab.n(), vocab.m());

    let train_entries: usize = train_set.iter().map(EncodedSequence::labeled_entries).sum();
    let val_entries: usize = val_set.iter().map(EncodedSequence::labeled_entries).sum();

    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut history = Vec::with_capacity(config.epochs);
    let mut best: Option<(f64, Model)> = None;
    let mut lr = config.learning_rate;

    for epoch in 1..=config.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for chunk in order.chunks(config.batch_size) {
            let longest = chunk.iter().map(|&i| train_set[i].len()).max().unwrap_or(0);
            let batch: Vec<EncodedSequence> = chunk
                .iter()
                .map(|&i| {
                    let mut s = train_set[i].clone();
                    s.pad_to(longest, n, m);
                    s
                })
                .collect();
            let (loss, grads) = backward_bptt(&model, &batch, config.dropout_rate, &mut rng)?;
            epoch_loss += loss;
            sgd_step(&mut model, &grads, lr, config);
        }
        lr *= config.lr_decay;

        let (val_loss, val_acc) = if val_entries > 0 {
            let loss = batch_loss(&model, val_set)? / val_entries as f64;
            (Some(loss), letter_accuracy(&model, val_set)?)
        } else {
            (None, None)
        };
        history.push(EpochStats {
            epoch,
            train_loss: epoch_loss / train_entries.max(1) as f64,
            val_loss,
            val_letter_accuracy: val_acc,
        });
        if let Some(acc) = val_acc {
            if best.as_ref().map_or(true, |(b, _)| acc > *b) {
                best = Some((acc, model.clone()));
            }
        }
    }
    let model = best.map_or(model, |(_, m)| m);
    Ok((model, history))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::GradeScheme;

    fn model() -> Model {
        Model::init(
            ModelKind::Model1,
            ModelDims { n: 2, m: 2, k: 1, hidden: 3, side: 3 },
            Threshold::B,
            GradeScheme::Binary,
            1,
        )
        .unwrap()
    }

    #[test]
    fn zero_gradient_no_decay_is_identity() {
        let mut m = model();
        let before = m.clone();
        let zero = m.params.zeros_like();
        let cfg = TrainConfig {
            weight_decay: 0.0,
            ..TrainConfig::default()
        };
        sgd_step(&mut m, &zero, 0.1, &cfg);
        assert_eq!(m, before);
    }

    #[test]
    fn lr_zero_is_identity() {
        let mut m = model();
        let before = m.clone();
        let mut g = m.params.clone();
        g.scale(3.0);
        sgd_step(&mut m, &g, 0.0, &TrainConfig::default());
        assert_eq!(m, before);
    }

    #[test]
    fn pure_decay_step() {
        let mut m = model();
        let before = m.clone();
        let zero = m.params.zeros_like();
        let cfg = TrainConfig {
            weight_decay: 0.1,
            ..TrainConfig::default()
        };
        sgd_step(&mut m, &zero, 1.0, &cfg);
        for (a, b) in m.params.blocks().iter().zip(before.params.blocks().iter()) {
            for (x, y) in a.data.iter().zip(b.data) {
                assert!((x - 0.9 * y).abs() <= 1e-15);
            }
        }
    }

    #[test]
    fn clipping_scales_to_clip_norm() {
        let m = model();
        let mut g = m.params.zeros_like();
        g.output.bias[0] = 6.0;
        g.output.bias[1] = 8.0;
        let before = clip_gradients(&mut g, 5.0);
        assert!((before - 10.0).abs() < 1e-12);
        assert!((g.squared_norm().sqrt() - 5.0).abs() < 1e-12);

        let mut small = m.params.zeros_like();
        small.output.bias[0] = 1.0;
        clip_gradients(&mut small, 5.0);
        assert_eq!(small.output.bias[0], 1.0);
    }

    #[test]
    fn rejects_bad_config() {
        let cfg = TrainConfig {
            batch_size: 0,
            ..TrainConfig::default()
        };
        assert!(cfg.validate().is_err());
        let cfg = TrainConfig {
            dropout_rate: 1.0,
            ..TrainConfig::default()
        };
        assert!(cfg.validate().is_err());
    }
}
