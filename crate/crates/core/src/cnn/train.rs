use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::network::Model;
use crate::dsp::segment::Label;
use crate::error::{Error, Result};
use crate::seed;
use crate::tensor::Tensor;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Example {
    pub input: Tensor,
    pub label: Label,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub train_fraction: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig { learning_rate: 1e-4, epochs: 150, batch_size: 16, seed: 0, train_fraction: 0.8 }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidParameter(format!("learning rate {}", self.learning_rate)));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidParameter("batch size must be positive".into()));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::InvalidParameter(format!("train fraction {} outside (0, 1)", self.train_fraction)));
        }
        Ok(())
    }
}

/// Mini-batch SGD with a seeded reshuffle every epoch. Appends the mean
/// training loss of each epoch to `loss_history`.
pub fn train(mut model: Model, dataset: &[Example], cfg: &TrainConfig) -> Result<Model> {
    cfg.validate()?;
    for class in Label::ALL {
        if !dataset.iter().any(|e| e.label == class) {
            return Err(Error::Data(format!("training set has no class {} examples", class.index())));
        }
    }
    let mut rng = seed::rng(seed::sub_seed(cfg.seed, seed::SHUFFLE));
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for chunk in order.chunks(cfg.batch_size) {
            let batch: Vec<(&Tensor, Label)> = chunk.iter().map(|&i| (&dataset[i].input, dataset[i].label)).collect();
            let (loss, grad) = model.loss_and_grad(&batch)?;
            if !loss.is_finite() {
                return Err(Error::Numeric(format!("non-finite training loss in epoch {}", epoch + 1)));
            }
            total += loss * chunk.len() as f64;
            model.sgd_step(&grad, cfg.learning_rate);
        }
        let mean = total / dataset.len() as f64;
        log::debug!("epoch {}: loss {mean:.6}", epoch + 1);
        model.loss_history.push(mean);
    }
    Ok(model)
}

#[cfg(test)]
mod tests {
    use rand::Rng;
    use rand_distr::StandardNormal;

    use super::*;
    use crate::cnn::{ConvSpec, NetworkSpec};

    /// Three Gaussian blobs rendered at class-specific positions on an 8×8 canvas.
    fn blobs(per_class: usize, seed: u64) -> Vec<Example> {
        let mut rng = seed::rng(seed);
        let centres = [(2.0, 2.0), (5.0, 5.5), (2.0, 5.5)];
        let mut out = Vec::new();
        for (k, &(cy, cx)) in centres.iter().enumerate() {
            for _ in 0..per_class {
                let jy: f64 = 0.3 * rng.sample::<f64, _>(StandardNormal);
                let jx: f64 = 0.3 * rng.sample::<f64, _>(StandardNormal);
                let data = (0..64)
                    .map(|i| {
                        let (y, x) = ((i / 8) as f64, (i % 8) as f64);
                        (-((y - cy - jy).powi(2) + (x - cx - jx).powi(2)) / 2.0).exp()
                    })
                    .collect();
                out.push(Example { input: Tensor::new(vec![1, 8, 8], data).unwrap(), label: Label::from_ordinal(k).unwrap() });
            }
        }
        out
    }

    fn toy_spec() -> NetworkSpec {
        NetworkSpec { input_shape: (1, 8, 8), conv_layers: vec![ConvSpec::new(3, 3, 4)], dense_layers: vec![16, 3] }
    }

    fn accuracy(model: &Model, data: &[Example]) -> f64 {
        data.iter().filter(|e| model.predict(&e.input).unwrap() == e.label).count() as f64 / data.len() as f64
    }

    #[test]
    fn separable_blobs_are_learned() {
        let data = blobs(20, 1);
        let cfg = TrainConfig { learning_rate: 0.05, epochs: 200, batch_size: 8, seed: 2, ..Default::default() };
        let model = train(Model::init(toy_spec(), 3).unwrap(), &data, &cfg).unwrap();
        assert_eq!(model.loss_history.len(), 200);
        assert!(model.loss_history.last().unwrap() < model.loss_history.first().unwrap());
        assert_eq!(accuracy(&model, &data), 1.0);
        assert_eq!(accuracy(&model, &blobs(10, 99)), 1.0);
    }

    #[test]
    fn zero_learning_rate_leaves_weights_alone() {
        let data = blobs(3, 4);
        let init = Model::init(toy_spec(), 5).unwrap();
        let cfg = TrainConfig { learning_rate: 0.0, epochs: 3, ..Default::default() };
        let trained = train(init.clone(), &data, &cfg).unwrap();
        assert_eq!(trained.parameters(), init.parameters());
    }

    #[test]
    fn training_is_deterministic() {
        let data = blobs(5, 6);
        let cfg = TrainConfig { learning_rate: 0.01, epochs: 5, batch_size: 4, seed: 8, ..Default::default() };
        let a = train(Model::init(toy_spec(), 7).unwrap(), &data, &cfg).unwrap();
        let b = train(Model::init(toy_spec(), 7).unwrap(), &data, &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn missing_class_is_rejected() {
        let data: Vec<Example> = blobs(3, 1).into_iter().filter(|e| e.label != Label::Laugh).collect();
        let r = train(Model::init(toy_spec(), 0).unwrap(), &data, &TrainConfig::default());
        assert!(matches!(r, Err(Error::Data(_))));
    }

    #[test]
    fn exploding_loss_is_a_numeric_error() {
        let data = blobs(3, 1);
        let cfg = TrainConfig { learning_rate: 1e200, epochs: 5, ..Default::default() };
        let r = train(Model::init(toy_spec(), 0).unwrap(), &data, &cfg);
        assert!(matches!(r, Err(Error::Numeric(_))), "{r:?}");
    }
}
