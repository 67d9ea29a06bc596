use curvepose_core::curvnet::{
    build_net, prepare_input, train, CurvNet, CurvNetError, EpochStats, NetConfig, Sample, TrainConfig, TrainHistory,
};
use curvepose_core::derive_seed;
use curvepose_core::synth::{split_dataset, SynthError};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::dataset::Dataset;
use crate::FileError;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error(transparent)]
    File(#[from] FileError),
    #[error(transparent)]
    Net(#[from] CurvNetError),
    #[error(transparent)]
    Split(#[from] SynthError),
}

/// Ground-truth box crops paired with the true diameter, in manifest order.
pub fn load_samples(ds: &Dataset, input_size: (usize, usize)) -> Result<Vec<Sample>, TrainError> {
    (0..ds.len())
        .map(|i| {
            let s = ds.sample(i)?;
            let input = prepare_input(&s.image, &s.truth.bbox, input_size)?;
            Ok(Sample { input, target: s.truth.diameter })
        })
        .collect()
}

/// Fresh network for `cfg`, initialized from the training seed.
pub fn initial_net(net: &NetConfig, cfg: &TrainConfig) -> Result<CurvNet, CurvNetError> {
    build_net(net, &mut ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, 0x1417)))
}

/// Train on the first 90% of the samples, validate on the rest, and return the
/// best-epoch network.
pub fn train_samples(
    samples: Vec<Sample>,
    net: &NetConfig,
    cfg: &TrainConfig,
    on_epoch: &mut dyn FnMut(&EpochStats),
) -> Result<(CurvNet, TrainHistory), TrainError> {
    let (train_set, val_set) = split_dataset(samples)?;
    let init = initial_net(net, cfg)?;
    Ok(train(&init, &train_set, &val_set, cfg, on_epoch)?)
}

pub fn train_on_dataset(
    ds: &Dataset,
    net: &NetConfig,
    cfg: &TrainConfig,
    on_epoch: &mut dyn FnMut(&EpochStats),
) -> Result<(CurvNet, TrainHistory), TrainError> {
    train_samples(load_samples(ds, net.input_size)?, net, cfg, on_epoch)
}
