use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::Serialize;

use super::{AdamW, ArchitectureConfig, Example, LossOptions, ModelError, ModelParameters, StepLr, TrainConfig};
use crate::corpus::{Dataset, Split};
use crate::seed::{stage_rng, STAGE_DROPOUT, STAGE_SHUFFLE};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub learning_rate: f64,
    pub train_loss: f64,
    pub validation_loss: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct TrainedModel {
    pub model: ModelParameters,
    pub history: Vec<EpochRecord>,
}

fn examples(model: &ModelParameters, dataset: &Dataset, split: Split) -> (Vec<String>, Vec<Example>) {
    dataset.entries().par_iter().filter(|e| e.split == split).map(|e| (e.id.clone(), model.example(e))).unzip()
}

/// Inference-mode mean loss over `examples`, evaluated in batches.
pub(crate) fn mean_loss(model: &ModelParameters, examples: &[Example], opts: &LossOptions, batch: usize) -> f64 {
    let total: f64 = examples
        .par_chunks(batch)
        .map(|chunk| model.loss(chunk, opts, None) * chunk.len() as f64)
        .collect::<Vec<f64>>()
        .into_iter()
        .sum();
    total / examples.len() as f64
}

/// Trains from a fresh seeded initialization on the train split.
/// Initialization draws from `arch.seed`; shuffling and dropout draw from
/// `config.seed`. Results are bit-identical for the same inputs regardless
/// of thread count.
pub fn train(dataset: &Dataset, arch: &ArchitectureConfig, config: &TrainConfig) -> Result<TrainedModel, ModelError> {
    config.validate()?;
    let mut model = ModelParameters::init(arch, dataset.shared_taxonomy())?;
    let (train_ids, train_set) = examples(&model, dataset, Split::Train);
    if train_set.is_empty() {
        return Err(ModelError::EmptySplit("train"));
    }
    let (_, val_set) = examples(&model, dataset, Split::Validation);
    if val_set.is_empty() {
        return Err(ModelError::EmptySplit("validation"));
    }
    let opts = LossOptions::from_group_weights(model.taxonomy(), &config.group_weights);
    let ranges = model.trainable_ranges();
    let mut opt = AdamW::new(model.values().len(), config.beta1, config.beta2, config.eps, config.weight_decay);
    let schedule = StepLr { base: config.learning_rate, factor: config.lr_decay };
    let mut shuffle_rng = stage_rng(config.seed, STAGE_SHUFFLE);
    let mut dropout_rng = stage_rng(config.seed, STAGE_DROPOUT);
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut history = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        let lr = schedule.rate(epoch);
        order.shuffle(&mut shuffle_rng);
        let mut loss_sum = 0.0;
        for (step, idx) in order.chunks(config.batch_size_train).enumerate() {
            let batch: Vec<Example> = idx.iter().map(|&i| train_set[i].clone()).collect();
            let masks: Option<Vec<_>> = (model.arch().dropout_rate > 0.0)
                .then(|| batch.iter().map(|_| model.sample_masks(&mut dropout_rng)).collect());
            let (loss, grad) = model.loss_and_gradients(&batch, &opts, masks.as_deref());
            if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                let worst = idx
                    .iter()
                    .zip(&batch)
                    .find(|(_, ex)| !model.loss(std::slice::from_ref(ex), &opts, None).is_finite())
                    .map_or(idx[0], |(i, _)| *i);
                return Err(ModelError::Diverged { epoch, step, entry: train_ids[worst].clone() });
            }
            loss_sum += loss * batch.len() as f64;
            opt.step(model.values_mut(), &grad, lr, &ranges);
        }
        let validation_loss = Some(mean_loss(&model, &val_set, &opts, config.batch_size_eval));
        history.push(EpochRecord {
            epoch,
            learning_rate: lr,
            train_loss: loss_sum / train_set.len() as f64,
            validation_loss,
        });
    }
    Ok(TrainedModel { model, history })
}
