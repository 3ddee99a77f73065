//! Mini-batch Adam training with a stepped learning-rate decay.

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::model::{backward, forward_loss, Dropout, ForwardCache};
use super::params::{ModelDims, ModelParams};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainingConfig {
    pub lr: f64,
    pub decay_factor: f64,
    /// First (0-based) epoch trained at the decayed rate.
    pub first_decay_epoch: usize,
    pub decay_every: usize,
    pub dropout: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    /// Half-width of the uniform parameter initialization.
    pub init_scale: f64,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        TrainingConfig {
            lr: 0.002,
            decay_factor: 0.8,
            first_decay_epoch: 10,
            decay_every: 8,
            dropout: 0.2,
            batch_size: 16,
            epochs: 30,
            seed: 0,
            init_scale: 0.1,
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Usage(m.to_string()));
        if !(self.lr > 0.0) {
            return bad("learning rate must be positive");
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return bad("dropout must lie in [0, 1)");
        }
        if self.batch_size == 0 || self.decay_every == 0 {
            return bad("batch_size and decay_every must be positive");
        }
        if !(self.decay_factor > 0.0) {
            return bad("decay_factor must be positive");
        }
        Ok(())
    }

    /// Learning rate for a 0-based epoch: one decay at `first_decay_epoch`,
    /// then one more every `decay_every` epochs.
    pub fn lr_at(&self, epoch: usize) -> f64 {
        let decays = if epoch < self.first_decay_epoch {
            0
        } else {
            1 + (epoch - self.first_decay_epoch) / self.decay_every
        };
        self.lr * self.decay_factor.powi(decays as i32)
    }
}

/// One teacher-forcing example: `<start> ... <end>` ids plus its inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSample {
    pub tokens: Vec<usize>,
    pub grid: Array2<f64>,
    pub article: Array2<f64>,
}

#[derive(Debug, Clone)]
pub struct Adam {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    m: ModelParams,
    v: ModelParams,
    t: i32,
}

impl Adam {
    pub fn new(dims: ModelDims) -> Self {
        Adam {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            m: ModelParams::zeros(dims),
            v: ModelParams::zeros(dims),
            t: 0,
        }
    }

    pub fn step(&mut self, params: &mut ModelParams, grads: &ModelParams, lr: f64) {
        self.t += 1;
        let (b1, b2, eps) = (self.beta1, self.beta2, self.eps);
        let c1 = 1.0 - b1.powi(self.t);
        let c2 = 1.0 - b2.powi(self.t);
        let tensors = params
            .tensors_mut()
            .into_iter()
            .zip(grads.tensors())
            .zip(self.m.tensors_mut().into_iter().zip(self.v.tensors_mut()));
        for (((_, p), (_, g)), ((_, m), (_, v))) in tensors {
            for i in 0..p.len() {
                m[i] = b1 * m[i] + (1.0 - b1) * g[i];
                v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
                p[i] -= lr * (m[i] / c1) / ((v[i] / c2).sqrt() + eps);
            }
        }
    }
}

/// Worst attention normalization seen during an epoch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttentionCheck {
    /// Largest `|Σ weights − 1|` over all α and β vectors.
    pub max_sum_error: f64,
    pub min_weight: f64,
    pub vectors: usize,
}

impl Default for AttentionCheck {
    fn default() -> Self {
        AttentionCheck {
            max_sum_error: 0.0,
            min_weight: f64::INFINITY,
            vectors: 0,
        }
    }
}

impl AttentionCheck {
    pub fn observe<'a>(&mut self, weights: impl IntoIterator<Item = &'a ndarray::Array1<f64>>) {
        for w in weights {
            self.max_sum_error = self.max_sum_error.max((w.sum() - 1.0).abs());
            self.min_weight = w.iter().copied().fold(self.min_weight, f64::min);
            self.vectors += 1;
        }
    }

    fn merge(&mut self, other: &AttentionCheck) {
        self.max_sum_error = self.max_sum_error.max(other.max_sum_error);
        self.min_weight = self.min_weight.min(other.min_weight);
        self.vectors += other.vectors;
    }

    pub fn of_cache(cache: &ForwardCache<'_>) -> Self {
        let mut check = AttentionCheck::default();
        check.observe(cache.alphas());
        check.observe(cache.betas());
        check
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub lr: f64,
    pub mean_loss: f64,
    pub attention: AttentionCheck,
}

struct SampleResult {
    loss: f64,
    grads: ModelParams,
    attention: AttentionCheck,
}

/// Owns the parameters and optimizer state across epochs.
#[derive(Debug, Clone)]
pub struct Trainer {
    pub params: ModelParams,
    pub config: TrainingConfig,
    adam: Adam,
    epoch: usize,
}

impl Trainer {
    pub fn new(dims: ModelDims, config: TrainingConfig) -> Result<Self> {
        dims.validate()?;
        config.validate()?;
        Ok(Trainer {
            params: ModelParams::init_uniform(dims, config.init_scale, config.seed),
            config,
            adam: Adam::new(dims),
            epoch: 0,
        })
    }

    pub fn epoch(&self) -> usize {
        self.epoch
    }

    fn sample_seed(&self, index: usize) -> u64 {
        self.config
            .seed
            .wrapping_mul(0x9E37_79B9_7F4A_7C15)
            .wrapping_add((self.epoch as u64) << 32)
            .wrapping_add(index as u64)
    }

    /// One pass over `samples` in a seeded shuffled order. Per-sample
    /// gradients of a batch are computed in parallel and summed in batch
    /// order, so results do not depend on the thread count.
    pub fn run_epoch(&mut self, samples: &[TrainingSample]) -> Result<EpochStats> {
        if samples.is_empty() {
            return Err(Error::Data("training set is empty".into()));
        }
        let lr = self.config.lr_at(self.epoch);
        let mut order: Vec<usize> = (0..samples.len()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(self.sample_seed(usize::MAX >> 1));
        order.shuffle(&mut rng);

        let mut total = 0.0;
        let mut attention = AttentionCheck::default();
        for batch in order.chunks(self.config.batch_size) {
            let results: Vec<Result<SampleResult>> = batch
                .par_iter()
                .map(|&i| {
                    let s = &samples[i];
                    let mut dropout = (self.config.dropout > 0.0)
                        .then(|| Dropout::new(self.config.dropout, self.sample_seed(i)));
                    let (loss, cache) =
                        forward_loss(&self.params, &s.tokens, &s.grid, &s.article, dropout.as_mut())?;
                    Ok(SampleResult {
                        loss,
                        grads: backward(&self.params, &cache),
                        attention: AttentionCheck::of_cache(&cache),
                    })
                })
                .collect();
            let mut sum = ModelParams::zeros(self.params.dims);
            for r in results {
                let r = r?;
                if !r.loss.is_finite() {
                    return Err(Error::Diverged { epoch: self.epoch });
                }
                total += r.loss;
                attention.merge(&r.attention);
                sum.scaled_add(1.0, &r.grads);
            }
            sum.scale(1.0 / batch.len() as f64);
            self.adam.step(&mut self.params, &sum, lr);
            if !self.params.is_finite() {
                return Err(Error::Diverged { epoch: self.epoch });
            }
        }
        let stats = EpochStats {
            epoch: self.epoch,
            lr,
            mean_loss: total / samples.len() as f64,
            attention,
        };
        log::debug!("epoch {} lr {:.6} loss {:.6}", stats.epoch, lr, stats.mean_loss);
        self.epoch += 1;
        Ok(stats)
    }
}

/// Trains from a seeded initialization for `config.epochs` epochs and
/// returns the parameters with the per-epoch mean losses.
pub fn train(
    samples: &[TrainingSample],
    dims: ModelDims,
    config: TrainingConfig,
) -> Result<(ModelParams, Vec<f64>)> {
    let mut trainer = Trainer::new(dims, config)?;
    let mut losses = Vec::with_capacity(config.epochs);
    for _ in 0..config.epochs {
        losses.push(trainer.run_epoch(samples)?.mean_loss);
    }
    Ok((trainer.params, losses))
}

/// Fraction of teacher-forced positions whose argmax equals the gold token.
pub fn teacher_forced_accuracy(params: &ModelParams, samples: &[TrainingSample]) -> Result<f64> {
    let counts: Vec<(usize, usize)> = samples
        .par_iter()
        .map(|s| {
            let (_, cache) = forward_loss(params, &s.tokens, &s.grid, &s.article, None)?;
            Ok((cache.correct_predictions(), cache.len()))
        })
        .collect::<Result<_>>()?;
    let (hit, n) = counts
        .iter()
        .fold((0, 0), |(a, b), (h, l)| (a + h, b + l));
    Ok(if n == 0 { 0.0 } else { hit as f64 / n as f64 })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedule_steps() {
        let c = TrainingConfig::default();
        assert_eq!(c.lr_at(0), 0.002);
        assert_eq!(c.lr_at(9), 0.002);
        assert!((c.lr_at(10) - 0.0016).abs() < 1e-15);
        assert!((c.lr_at(17) - 0.0016).abs() < 1e-15);
        assert!((c.lr_at(18) - 0.00128).abs() < 1e-15);
        assert!((c.lr_at(26) - 0.001024).abs() < 1e-15);
    }

    #[test]
    fn adam_first_step_moves_by_lr() {
        let dims = ModelDims {
            vocab: 2,
            embed: 1,
            image_dim: 1,
            regions: 1,
            article_dim: 1,
            slots: 1,
            hidden: 1,
            image_att: 1,
            article_att: 1,
        };
        let mut p = ModelParams::zeros(dims);
        let mut g = ModelParams::zeros(dims);
        g.output_bias[0] = 3.0;
        g.output_bias[1] = -0.5;
        let mut adam = Adam::new(dims);
        adam.step(&mut p, &g, 0.01);
        assert!((p.output_bias[0] + 0.01).abs() < 1e-9);
        assert!((p.output_bias[1] - 0.01).abs() < 1e-9);
        assert_eq!(p.output[[0, 0]], 0.0);
    }

    #[test]
    fn config_validation() {
        let mut c = TrainingConfig::default();
        assert!(c.validate().is_ok());
        c.dropout = 1.0;
        assert!(c.validate().is_err());
        c.dropout = 0.0;
        c.lr = 0.0;
        assert!(c.validate().is_err());
    }
}
