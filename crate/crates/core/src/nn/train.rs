use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::adam::AdamState;
use super::model::{MlpConfig, MlpModel};
use crate::domain::Dataset;
use crate::{Error, Result};

/// Stream of the config seed used for per-epoch shuffling (initialisation uses stream 0).
const SHUFFLE_STREAM: u64 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    /// Mean per-row loss of each epoch, as seen by the optimiser.
    pub epoch_losses: Vec<f64>,
    pub optimizer_steps: u64,
    pub wall_time_secs: f64,
}

/// Mini-batch Adam training with per-epoch shuffling; a pure function of
/// `(cfg, train_ds)` apart from the reported wall time.
pub fn train(cfg: &MlpConfig, train_ds: &Dataset) -> Result<(MlpModel, TrainReport)> {
    cfg.validate()?;
    if train_ds.is_empty() {
        return Err(Error::param("train_ds", "training set is empty"));
    }
    if train_ds.dim() != cfg.input_dim {
        return Err(Error::DimensionMismatch {
            expected: cfg.input_dim,
            actual: train_ds.dim(),
        });
    }
    let started = Instant::now();
    let mut model = MlpModel::init(cfg)?;
    let mut adam = AdamState::new(model.n_params());
    let mut scratch = model.scratch();
    let mut grads = vec![0.0; model.n_params()];

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(SHUFFLE_STREAM);
    let mut order: Vec<usize> = (0..train_ds.n_rows()).collect();
    let labels = train_ds.labels();
    let mut epoch_losses = Vec::with_capacity(cfg.epochs);

    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            grads.fill(0.0);
            let mut batch_loss = 0.0;
            for &i in batch {
                batch_loss += model.accumulate_row(
                    train_ds.row_slice(i),
                    labels[i],
                    &mut scratch,
                    &mut grads,
                );
            }
            let scale = 1.0 / batch.len() as f64;
            for g in &mut grads {
                *g *= scale;
            }
            if !batch_loss.is_finite() {
                return Err(Error::Diverged {
                    epoch,
                    what: "loss",
                });
            }
            epoch_loss += batch_loss;
            adam.step(model.params_mut(), &grads, cfg.learning_rate);
        }
        if !model.is_finite() {
            return Err(Error::Diverged {
                epoch,
                what: "parameters",
            });
        }
        epoch_losses.push(epoch_loss / train_ds.n_rows() as f64);
    }

    let report = TrainReport {
        epoch_losses,
        optimizer_steps: adam.steps(),
        wall_time_secs: started.elapsed().as_secs_f64(),
    };
    Ok((model, report))
}
