use std::io::Write;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::augment::{augment, AugmentConfig};
use super::dataset::LabeledFrame;
use super::grid::decode_onehot;
use super::net::ImitationNet;
use crate::armsim::Frame;
use crate::diffcore::{optimizer_step, softmax_cross_entropy, OptimizerState};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    /// Learning rate reached on the last epoch along a cosine schedule.
    pub final_learning_rate: f64,
    /// Augment each training sample with a fresh random subset of operations.
    pub augment: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 30,
            batch_size: 32,
            learning_rate: 1e-3,
            final_learning_rate: 2e-5,
            augment: true,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    /// Mean pre-update minibatch loss.
    pub loss: f64,
    pub train_acc: f64,
    /// `NaN` when no validation set was supplied.
    pub val_acc: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrainLog {
    pub epochs: Vec<EpochStats>,
}

impl TrainLog {
    pub fn last(&self) -> Option<&EpochStats> {
        self.epochs.last()
    }

    /// `epoch,loss,train_acc,val_acc` with a header row.
    pub fn write_csv(&self, w: &mut impl Write) -> Result<()> {
        writeln!(w, "epoch,loss,train_acc,val_acc")?;
        for e in &self.epochs {
            writeln!(w, "{},{},{},{}", e.epoch, e.loss, e.train_acc, e.val_acc)?;
        }
        Ok(())
    }
}

/// Mean loss and accuracy over `data` without augmentation.
pub fn evaluate(net: &ImitationNet, data: &[LabeledFrame]) -> Result<(f64, f64)> {
    if data.is_empty() {
        return Err(Error::Config("cannot evaluate on an empty set".into()));
    }
    let (mut loss, mut correct) = (0.0, 0usize);
    for chunk in data.chunks(64) {
        let frames: Vec<&Frame> = chunk.iter().map(|d| &d.frame).collect();
        let targets: Vec<usize> = chunk.iter().map(|d| d.label.index()).collect();
        let (logits, _) = net.forward(&net.frames_to_input(&frames)?)?;
        let (l, _) = softmax_cross_entropy(&logits, &targets)?;
        loss += l * chunk.len() as f64;
        for (b, &t) in targets.iter().enumerate() {
            if decode_onehot(logits.row(b))?.index() == t {
                correct += 1;
            }
        }
    }
    Ok((loss / data.len() as f64, correct as f64 / data.len() as f64))
}

fn cosine_rate(cfg: &TrainConfig, epoch: usize) -> f64 {
    if cfg.epochs <= 1 {
        return cfg.learning_rate;
    }
    let progress = epoch as f64 / (cfg.epochs - 1) as f64;
    let w = 0.5 * (1.0 + (std::f64::consts::PI * progress).cos());
    cfg.final_learning_rate + (cfg.learning_rate - cfg.final_learning_rate) * w
}

/// Minibatch cross-entropy training with Adam. The log has one row per epoch.
pub fn train_imitation(
    net: &mut ImitationNet,
    train: &[LabeledFrame],
    val: &[LabeledFrame],
    cfg: &TrainConfig,
    seed: u64,
) -> Result<TrainLog> {
    if train.is_empty() {
        return Err(Error::Config("training set is empty".into()));
    }
    if !(cfg.final_learning_rate > 0.0 && cfg.final_learning_rate <= cfg.learning_rate) {
        return Err(Error::Config(format!(
            "final learning rate {} must lie in (0, {}]",
            cfg.final_learning_rate, cfg.learning_rate
        )));
    }
    if cfg.batch_size == 0 {
        return Err(Error::Config("batch size must be positive".into()));
    }
    let mut opt = OptimizerState::adam(cfg.learning_rate, &net.params)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut log = TrainLog::default();
    for epoch in 0..cfg.epochs {
        opt.learning_rate = cosine_rate(cfg, epoch);
        order.shuffle(&mut rng);
        let (mut loss_sum, mut correct) = (0.0, 0usize);
        for batch in order.chunks(cfg.batch_size) {
            let frames: Vec<Frame> = batch
                .iter()
                .map(|&i| {
                    if cfg.augment {
                        let ops = AugmentConfig::random_subset(&mut rng);
                        augment(&train[i].frame, &ops, rng.random())
                    } else {
                        Ok(train[i].frame.clone())
                    }
                })
                .collect::<Result<_>>()?;
            let refs: Vec<&Frame> = frames.iter().collect();
            let targets: Vec<usize> = batch.iter().map(|&i| train[i].label.index()).collect();
            let (logits, cache) = net.forward(&net.frames_to_input(&refs)?)?;
            let (loss, grad) = softmax_cross_entropy(&logits, &targets)?;
            for (b, &t) in targets.iter().enumerate() {
                if decode_onehot(logits.row(b))?.index() == t {
                    correct += 1;
                }
            }
            loss_sum += loss * batch.len() as f64;
            net.params.zero_grads();
            net.backward(&cache, &grad)?;
            optimizer_step(&mut net.params, &mut opt)?;
        }
        let val_acc = if val.is_empty() {
            f64::NAN
        } else {
            evaluate(net, val)?.1
        };
        log.epochs.push(EpochStats {
            epoch,
            loss: loss_sum / train.len() as f64,
            train_acc: correct as f64 / train.len() as f64,
            val_acc,
        });
    }
    Ok(log)
}
