//! Mini-batch SGD over one client's local dataset.

use crate::data::LabeledDataset;
use crate::seed;

use super::arch::ModelArchitecture;
use super::backward::loss_and_grads;
use super::params::ParameterSet;
use super::NnError;

/// Local training settings. `seed` keys the per-epoch shuffle stream.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrainingHyperparams {
    pub learning_rate: f32,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
}

impl TrainingHyperparams {
    pub fn validate(&self) -> Result<(), NnError> {
        if !(self.learning_rate > 0.0) && self.learning_rate != 0.0 {
            return Err(NnError::InvalidHyperparams(
                "learning_rate must be finite and >= 0".into(),
            ));
        }
        if self.epochs < 1 {
            return Err(NnError::InvalidHyperparams("epochs must be >= 1".into()));
        }
        if self.batch_size < 1 {
            return Err(NnError::InvalidHyperparams("batch_size must be >= 1".into()));
        }
        Ok(())
    }
}

/// Trains a copy of `params` on `data` with plain mini-batch SGD.
///
/// Each epoch visits every example once in a Fisher-Yates order drawn from a
/// stream derived from `(hp.seed, epoch)`; the input parameters are left
/// untouched. Deterministic for fixed arguments.
pub fn train_local(
    arch: &ModelArchitecture,
    params: &ParameterSet<f32>,
    data: &LabeledDataset,
    hp: &TrainingHyperparams,
) -> Result<ParameterSet<f32>, NnError> {
    hp.validate()?;
    if data.is_empty() {
        return Err(NnError::EmptyDataset);
    }

    let mut model = params.clone();
    let mut order: Vec<usize> = (0..data.len()).collect();

    for epoch in 0..hp.epochs {
        let mut rng = seed::stream_rng(hp.seed, &[epoch as u64]);
        seed::fisher_yates(&mut order, &mut rng);

        for (batch_idx, batch) in order.chunks(hp.batch_size).enumerate() {
            let mut grad_sum = ParameterSet::zeros(arch);
            let mut loss_sum = 0.0f32;
            for &example in batch {
                let (loss, grads) =
                    loss_and_grads(arch, &model, &data.images[example], data.labels[example])?;
                loss_sum += loss;
                grad_sum.add_scaled(&grads, 1.0);
            }
            if !loss_sum.is_finite() {
                return Err(NnError::NonFiniteLoss {
                    epoch,
                    batch: batch_idx,
                });
            }
            let step = -hp.learning_rate / batch.len() as f32;
            model.add_scaled(&grad_sum, step);
        }
    }

    Ok(model)
}

/// Fraction of `data` the model classifies correctly, in [0,1].
pub fn training_accuracy(
    arch: &ModelArchitecture,
    params: &ParameterSet<f32>,
    data: &LabeledDataset,
) -> Result<f64, NnError> {
    if data.is_empty() {
        return Err(NnError::EmptyDataset);
    }
    let mut correct = 0usize;
    for (image, &label) in data.images.iter().zip(&data.labels) {
        if super::forward::predict(arch, params, image)? == label {
            correct += 1;
        }
    }
    Ok(correct as f64 / data.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::make_synthetic;
    use crate::nn::init_params;

    #[test]
    fn zero_learning_rate_is_identity() {
        let arch = ModelArchitecture::mlp((1, 4, 4), &[8], 3);
        let params = init_params(&arch, 2);
        let data = make_synthetic(12, (1, 4, 4), 3, 77);
        let hp = TrainingHyperparams {
            learning_rate: 0.0,
            epochs: 2,
            batch_size: 4,
            seed: 5,
        };
        let trained = train_local(&arch, &params, &data, &hp).unwrap();
        assert_eq!(trained, params);
    }

    #[test]
    fn empty_dataset_is_an_error() {
        let arch = ModelArchitecture::mlp((1, 2, 2), &[3], 2);
        let params = init_params(&arch, 0);
        let empty = LabeledDataset::new(vec![], vec![], 2).unwrap();
        let hp = TrainingHyperparams {
            learning_rate: 0.1,
            epochs: 1,
            batch_size: 4,
            seed: 0,
        };
        assert!(matches!(
            train_local(&arch, &params, &empty, &hp),
            Err(NnError::EmptyDataset)
        ));
    }

    #[test]
    fn training_is_deterministic() {
        let arch = ModelArchitecture::mlp((1, 4, 4), &[8], 3);
        let params = init_params(&arch, 2);
        let data = make_synthetic(30, (1, 4, 4), 3, 99);
        let hp = TrainingHyperparams {
            learning_rate: 0.1,
            epochs: 3,
            batch_size: 8,
            seed: 123,
        };
        let a = train_local(&arch, &params, &data, &hp).unwrap();
        let b = train_local(&arch, &params, &data, &hp).unwrap();
        assert_eq!(a, b);
        assert!(a.all_finite());
    }

    #[test]
    fn exploding_step_reports_epoch_and_batch() {
        let arch = ModelArchitecture::mlp((1, 4, 4), &[8], 3);
        let params = init_params(&arch, 2);
        let data = make_synthetic(16, (1, 4, 4), 3, 4);
        let hp = TrainingHyperparams {
            learning_rate: 1e30,
            epochs: 4,
            batch_size: 4,
            seed: 0,
        };
        match train_local(&arch, &params, &data, &hp) {
            Err(NnError::NonFiniteLoss { .. }) => {}
            other => panic!("expected NonFiniteLoss, got {other:?}"),
        }
    }

    #[test]
    fn separable_toy_set_reaches_full_accuracy() {
        // Two classes keyed to disjoint pixel regions; plainly separable.
        let arch = ModelArchitecture::mlp((1, 4, 4), &[8], 2);
        let params = init_params(&arch, 11);
        let data = make_synthetic(40, (1, 4, 4), 2, 123);
        let hp = TrainingHyperparams {
            learning_rate: 0.5,
            epochs: 60,
            batch_size: 8,
            seed: 3,
        };
        let trained = train_local(&arch, &params, &data, &hp).unwrap();
        let acc = training_accuracy(&arch, &trained, &data).unwrap();
        assert_eq!(acc, 1.0, "training accuracy {acc} below 100%");
    }
}
