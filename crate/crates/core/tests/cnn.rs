mod common;

use fetalkick_core::cnn::model_io::{from_bytes, to_bytes};
use fetalkick_core::cnn::{train, ConvSpec, Example, Model, NetworkSpec, TrainConfig};
use fetalkick_core::tensor::Tensor;
use fetalkick_core::{seed, Label};
use rand::Rng;
use rand_distr::StandardNormal;

fn tiny_spec() -> NetworkSpec {
    NetworkSpec {
        input_shape: (2, 4, 3),
        conv_layers: vec![ConvSpec::new(2, 2, 3), ConvSpec::new(2, 1, 2)],
        dense_layers: vec![4, 3],
    }
}

fn random_batch(n: usize, s: u64) -> Vec<(Tensor, Label)> {
    let mut rng = seed::rng(s);
    (0..n)
        .map(|_| {
            let data = (0..24).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
            (Tensor::new(vec![2, 4, 3], data).unwrap(), Label::ALL[rng.random_range(0..3)])
        })
        .collect()
}

#[test]
fn analytic_gradient_matches_central_differences() {
    for s in 0..5 {
        let model = common::with_random_biases(Model::init(tiny_spec(), s).unwrap(), s);
        let batch = random_batch(4, 50 + s);
        let refs: Vec<(&Tensor, Label)> = batch.iter().map(|(t, l)| (t, *l)).collect();
        let worst = common::gradient_check(&model, &refs, 1e-5, 1e-9);
        assert!(worst <= 1e-4, "seed {s}: max relative error {worst:e}");
    }
}

#[test]
fn single_conv_gradient() {
    let spec = NetworkSpec { input_shape: (1, 3, 2), conv_layers: vec![ConvSpec::new(2, 2, 2)], dense_layers: vec![3] };
    let model = common::with_random_biases(Model::init(spec, 3).unwrap(), 3);
    let x = Tensor::new(vec![1, 3, 2], vec![0.3, -1.2, 0.8, 0.5, -0.4, 1.1]).unwrap();
    let worst = common::gradient_check(&model, &[(&x, Label::Laugh)], 1e-5, 1e-9);
    assert!(worst <= 1e-4, "max relative error {worst:e}");
}

#[test]
fn trained_model_survives_serialization() {
    let data: Vec<Example> = random_batch(30, 8)
        .into_iter()
        .enumerate()
        .map(|(i, (input, _))| Example { input, label: Label::ALL[i % 3] })
        .collect();
    let cfg = TrainConfig { learning_rate: 0.01, epochs: 3, batch_size: 4, ..TrainConfig::default() };
    let mut model = train(Model::init(tiny_spec(), 1).unwrap(), &data, &cfg).unwrap();
    model.metadata.insert("note".into(), "x=1, y=2".into());
    let bytes = to_bytes(&model);
    assert_eq!(&bytes[..4], b"FKM1");
    let back = from_bytes(&bytes).unwrap();
    assert_eq!(back, model);
    assert_eq!(to_bytes(&back), bytes);
    for ex in &data {
        assert_eq!(back.forward(&ex.input).unwrap(), model.forward(&ex.input).unwrap());
    }
    assert!(from_bytes(&bytes[..bytes.len() - 3]).is_err());
}
