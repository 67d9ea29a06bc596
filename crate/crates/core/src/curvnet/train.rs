use alloc::vec;
use alloc::vec::Vec;
#[cfg(not(feature = "std"))]
use num_traits::Float;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{huber_loss, mse_loss, CurvNet, CurvNetError, Tensor};

/// Delta of the Huber loss reported in the history, whatever the training loss.
pub const REPORT_HUBER_DELTA: f64 = 0.4;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub max_epochs: usize,
    pub patience: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            max_epochs: 50,
            patience: 4,
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            batch_size: 32,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), CurvNetError> {
        if self.max_epochs == 0 || self.patience == 0 || self.batch_size == 0 {
            return Err(CurvNetError::Config("epochs, patience and batch size must be at least 1"));
        }
        if !(self.learning_rate > 0.0) || !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return Err(CurvNetError::Config("invalid optimizer parameters"));
        }
        Ok(())
    }
}

/// One network input and its regression target (diameter in HoI).
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub input: Tensor,
    pub target: f64,
}

/// Adaptive-moment gradient descent over a flat parameter vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    pub fn new(n: usize, learning_rate: f64, beta1: f64, beta2: f64, epsilon: f64) -> Self {
        Adam { learning_rate, beta1, beta2, epsilon, m: vec![0.0; n], v: vec![0.0; n], t: 0 }
    }

    pub fn from_config(n: usize, cfg: &TrainConfig) -> Self {
        Self::new(n, cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.epsilon)
    }

    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) {
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t);
        let c2 = 1.0 - self.beta2.powi(self.t);
        for ((p, g), (m, v)) in params.iter_mut().zip(grads).zip(self.m.iter_mut().zip(self.v.iter_mut())) {
            *m = self.beta1 * *m + (1.0 - self.beta1) * g;
            *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
            *p -= self.learning_rate * (*m / c1) / ((*v / c2).sqrt() + self.epsilon);
        }
    }
}

/// Patience rule on the validation loss: an epoch counts as progress only
/// when it sets a strictly new minimum.
#[derive(Debug, Clone, PartialEq)]
pub struct EarlyStopping {
    pub patience: usize,
    best: f64,
    best_epoch: usize,
    epoch: usize,
}

impl EarlyStopping {
    pub fn new(patience: usize) -> Self {
        EarlyStopping { patience, best: f64::INFINITY, best_epoch: 0, epoch: 0 }
    }

    /// Record the next epoch's validation loss; returns `true` when training
    /// should stop after this epoch.
    pub fn update(&mut self, val_loss: f64) -> bool {
        self.epoch += 1;
        if val_loss < self.best {
            self.best = val_loss;
            self.best_epoch = self.epoch;
        }
        self.epoch - self.best_epoch >= self.patience
    }

    /// 1-based epoch of the best loss so far (0 before any update).
    pub fn best_epoch(&self) -> usize {
        self.best_epoch
    }

    pub fn improved_last(&self) -> bool {
        self.epoch > 0 && self.best_epoch == self.epoch
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochStats {
    /// 1-based.
    pub epoch: usize,
    pub train_huber: f64,
    pub val_huber: f64,
    pub train_mse: f64,
    pub val_mse: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainHistory {
    pub epochs: Vec<EpochStats>,
    pub best_epoch: usize,
    pub stopped_early: bool,
}

impl TrainHistory {
    pub fn best(&self) -> Option<&EpochStats> {
        self.epochs.get(self.best_epoch.checked_sub(1)?)
    }
}

/// Mean Huber(0.4) and MSE of the network over a set.
pub fn evaluate_losses(net: &CurvNet, set: &[Sample]) -> Result<(f64, f64), CurvNetError> {
    if set.is_empty() {
        return Err(CurvNetError::EmptySet);
    }
    let mut ws = net.workspace();
    let (mut h, mut m) = (0.0, 0.0);
    for s in set {
        if s.input.shape[..] != [super::INPUT_CHANNELS, net.config().input_size.0, net.config().input_size.1] {
            return Err(CurvNetError::Shape("sample does not match the network input size"));
        }
        let pred = net.forward_ws(&s.input.data, &mut ws);
        h += huber_loss(pred, s.target, REPORT_HUBER_DELTA).0;
        m += mse_loss(pred, s.target).0;
    }
    let n = set.len() as f64;
    Ok((h / n, m / n))
}

/// Mini-batch training with early stopping on the validation loss (the
/// network's configured loss). Returns the parameters of the best epoch.
/// Samples are visited in a seeded shuffled order and batch gradients are
/// accumulated in that order, so a run is reproducible bit for bit.
pub fn train(
    net: &CurvNet,
    train_set: &[Sample],
    val_set: &[Sample],
    cfg: &TrainConfig,
    on_epoch: &mut dyn FnMut(&EpochStats),
) -> Result<(CurvNet, TrainHistory), CurvNetError> {
    cfg.validate()?;
    if train_set.is_empty() || val_set.is_empty() {
        return Err(CurvNetError::EmptySet);
    }
    let (h, w) = net.config().input_size;
    let shape = [super::INPUT_CHANNELS, h, w];
    if train_set.iter().chain(val_set).any(|s| s.input.shape[..] != shape || !s.target.is_finite()) {
        return Err(CurvNetError::Shape("sample does not match the network input size"));
    }

    let loss = net.config().loss;
    let mut current = net.clone();
    let mut best = net.clone();
    let mut adam = Adam::from_config(current.parameter_count(), cfg);
    let mut stopper = EarlyStopping::new(cfg.patience);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut grads = vec![0.0; current.parameter_count()];
    let mut ws = current.workspace();
    let mut history = TrainHistory { epochs: Vec::new(), best_epoch: 0, stopped_early: false };

    for epoch in 1..=cfg.max_epochs {
        order.shuffle(&mut rng);
        let (mut train_h, mut train_m) = (0.0, 0.0);
        for batch in order.chunks(cfg.batch_size) {
            grads.iter_mut().for_each(|g| *g = 0.0);
            let scale = 1.0 / batch.len() as f64;
            for &i in batch {
                let s = &train_set[i];
                let pred = current.forward_ws(&s.input.data, &mut ws);
                let (_, dpred) = loss.eval(pred, s.target);
                train_h += huber_loss(pred, s.target, REPORT_HUBER_DELTA).0;
                train_m += mse_loss(pred, s.target).0;
                current.backward_ws(&s.input.data, &mut ws, dpred * scale, &mut grads);
            }
            if grads.iter().any(|g| !g.is_finite()) {
                return Err(CurvNetError::Diverged { epoch });
            }
            adam.step(current.parameters_mut(), &grads);
        }
        let n = train_set.len() as f64;
        let (val_h, val_m) = evaluate_losses(&current, val_set)?;
        let stats =
            EpochStats { epoch, train_huber: train_h / n, val_huber: val_h, train_mse: train_m / n, val_mse: val_m };
        if ![stats.train_huber, stats.val_huber, stats.train_mse, stats.val_mse].iter().all(|v| v.is_finite()) {
            return Err(CurvNetError::Diverged { epoch });
        }
        history.epochs.push(stats);
        on_epoch(&stats);

        let monitored = match loss {
            super::Loss::Huber { delta } if delta == REPORT_HUBER_DELTA => val_h,
            _ => {
                let mut ws_val = current.workspace();
                val_set
                    .iter()
                    .map(|s| loss.eval(current.forward_ws(&s.input.data, &mut ws_val), s.target).0)
                    .sum::<f64>()
                    / val_set.len() as f64
            }
        };
        let stop = stopper.update(monitored);
        if stopper.improved_last() {
            best = current.clone();
        }
        if stop {
            history.stopped_early = epoch < cfg.max_epochs;
            break;
        }
    }
    history.best_epoch = stopper.best_epoch();
    Ok((best, history))
}
