use std::time::Instant;

use super::loss::{argmax_rows, cross_entropy};
use super::optim::{lr_at_epoch, Sgd, TrainConfig};
use super::{Model, Scalar};
use crate::data::{batches, Dataset};
use crate::error::{Error, Result, RunLocation};

const EVAL_BATCH: usize = 256;

/// Per-epoch summary. `epoch` is 0-based and `lr` is the rate used in it.
#[derive(Debug, Clone, PartialEq)]
pub struct Metrics {
    pub epoch: usize,
    pub train_loss: f64,
    pub train_acc: f64,
    pub test_acc: f64,
    pub lr: f64,
    pub wall_seconds: f64,
}

impl Metrics {
    pub const CSV_HEADER: &'static str = "epoch,train_loss,train_acc,test_acc,lr,wall_seconds";
}

/// Mini-batch SGD over `train_ds` for `config.epochs` epochs, evaluating on
/// `test_ds` after each. Non-finite values abort with their epoch/batch.
pub fn train<T: Scalar>(
    model: &mut Model<T>,
    train_ds: &Dataset,
    test_ds: &Dataset,
    config: &TrainConfig,
) -> Result<Vec<Metrics>> {
    train_with(model, train_ds, test_ds, config, |_| {})
}

/// [`train`] with a callback invoked after every epoch.
pub fn train_with<T: Scalar>(
    model: &mut Model<T>,
    train_ds: &Dataset,
    test_ds: &Dataset,
    config: &TrainConfig,
    mut on_epoch: impl FnMut(&Metrics),
) -> Result<Vec<Metrics>> {
    config.validate()?;
    for ds in [train_ds, test_ds] {
        check_compatible(model, ds)?;
    }
    let start = Instant::now();
    let mut sgd = Sgd::new(model, config);
    let mut history = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        let lr = lr_at_epoch(config, epoch);
        let mut loss_sum = 0.0;
        let mut correct = 0usize;
        for (b, batch) in batches::<T>(train_ds, config.batch_size, config.seed, epoch)?.enumerate() {
            let at = RunLocation { epoch, batch: b };
            let mut step = || -> Result<(f64, usize)> {
                let (logits, cache) = model.forward(&batch.images)?;
                let (loss, dlogits) = cross_entropy(&logits, &batch.labels)?;
                let hits = argmax_rows(&logits)
                    .iter()
                    .zip(&batch.labels)
                    .filter(|(p, l)| p == l)
                    .count();
                let grads = model.backward(&cache, &dlogits)?;
                sgd.step(model, &grads, lr)?;
                Ok((loss, hits))
            };
            let (loss, hits) = step().map_err(|e| e.located(at))?;
            loss_sum += loss * batch.labels.len() as f64;
            correct += hits;
        }
        let n = train_ds.len() as f64;
        let metrics = Metrics {
            epoch,
            train_loss: loss_sum / n,
            train_acc: correct as f64 / n,
            test_acc: evaluate(model, test_ds)
                .map_err(|e| e.located(RunLocation { epoch, batch: 0 }))?,
            lr,
            wall_seconds: start.elapsed().as_secs_f64(),
        };
        on_epoch(&metrics);
        history.push(metrics);
    }
    Ok(history)
}

/// Top-1 accuracy; argmax ties go to the lowest class index.
pub fn evaluate<T: Scalar>(model: &Model<T>, ds: &Dataset) -> Result<f64> {
    check_compatible(model, ds)?;
    let order: Vec<usize> = (0..ds.len()).collect();
    let mut correct = 0usize;
    for chunk in order.chunks(EVAL_BATCH) {
        let (images, labels) = ds.gather::<T>(chunk);
        let logits = model.predict(&images)?;
        correct += argmax_rows(&logits)
            .iter()
            .zip(&labels)
            .filter(|(p, l)| p == l)
            .count();
    }
    Ok(correct as f64 / ds.len() as f64)
}

fn check_compatible<T: Scalar>(model: &Model<T>, ds: &Dataset) -> Result<()> {
    if ds.is_empty() {
        return Err(Error::InvalidParameter("dataset is empty".into()));
    }
    if ds.sample_shape() != model.input_shape() {
        return Err(Error::ShapeMismatch {
            expected: model.input_shape().to_vec(),
            actual: ds.sample_shape().to_vec(),
        });
    }
    if ds.num_classes() > model.num_classes() {
        return Err(Error::LabelOutOfRange {
            label: ds.num_classes() - 1,
            num_classes: model.num_classes(),
        });
    }
    Ok(())
}
