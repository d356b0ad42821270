mod common;

use common::toys::{blobs, gradient_check, pair_toy, ranking_toy, CheckedLoss};
use proptest::prelude::*;
use rmech_core::featurize::SparseVec;
use rmech_core::neural::*;

fn small(act: Activation, l2: f64, dropout: f64) -> NetworkSpec {
    NetworkSpec::new(5, &[4, 3, 1], act, dropout, l2)
}

#[test]
fn single_weight_squared_loss_hand_derivative() {
    let mut net = Mlp::zeros(NetworkSpec::new(1, &[1], Activation::Relu, 0.0, 0.0)).unwrap();
    let (w, x, y) = (0.7, 1.3, 0.4);
    net.layers[0].w[0] = w;
    let (_, g) = gradients(&net, PointLoss::Squared, &[(SparseVec::from_dense(&[x]), y)]).unwrap();
    let expected = 2.0 * w * x * x - 2.0 * x * y;
    assert!((g.layers[0].w[0] - expected).abs() < 1e-12);
}

#[test]
fn zero_gradient_at_convex_minimum() {
    let mut net = Mlp::zeros(NetworkSpec::new(1, &[1], Activation::Relu, 0.0, 0.0)).unwrap();
    net.layers[0].w[0] = 2.0;
    let batch = [(SparseVec::from_dense(&[1.0]), 2.0), (SparseVec::from_dense(&[-3.0]), -6.0)];
    let (loss, g) = gradients(&net, PointLoss::Squared, &batch).unwrap();
    assert_eq!(loss, 0.0);
    assert!(g.iter().all(|&v| v == 0.0));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn finite_difference_agreement(seed in 0u64..10_000, gelu in any::<bool>(), l2 in prop::sample::select(vec![0.0, 1e-3]), which in 0usize..4) {
        let act = if gelu { Activation::Gelu } else { Activation::Relu };
        let loss = [CheckedLoss::Squared, CheckedLoss::Logistic, CheckedLoss::Siamese, CheckedLoss::Contrastive]
            .into_iter().nth(which).unwrap();
        let err = gradient_check(&small(act, l2, 0.0), loss, seed).unwrap();
        prop_assert!(err <= 1e-4, "relative error {err}");
    }

    #[test]
    fn siamese_swap_flips_margin_exactly(seed in 0u64..1000) {
        let net = Mlp::new(small(Activation::Gelu, 0.0, 0.5), seed).unwrap();
        let (features, _) = ranking_toy(1, 5, seed);
        let fp = net.forward(&features[0]).unwrap();
        let fn_ = net.forward(&features[1]).unwrap();
        prop_assert_eq!(fp - fn_, -(fn_ - fp));
        let (a, _, _) = siamese_loss(fp, fn_);
        let (b, _, _) = siamese_loss(fn_, fp);
        prop_assert!((a + b - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pair_score_strictly_inside_unit_interval(f in -1e3f64..1e3, g in -1e3f64..1e3) {
        let s = pair_score(f, g);
        prop_assert!(s > 0.0 && s < 1.0);
    }
}

fn quick(seed: u64) -> TrainConfig {
    TrainConfig { max_epochs: 60, patience: 60, seed, ..TrainConfig::default() }
}

#[test]
fn classifier_separates_blobs() {
    let data = blobs(200, 10, 1);
    let spec = NetworkSpec::new(10, &[16, 1], Activation::Gelu, 0.0, 5e-5);
    let (net, curve) = train_classifier(&data, &spec, &quick(3)).unwrap();
    let correct = data.iter().filter(|(x, y)| (net.forward(x).unwrap() > 0.0) == *y).count();
    assert!(correct as f64 / data.len() as f64 >= 0.99, "{correct}/200");
    let first = curve.epochs.first().unwrap().train_loss;
    let last = curve.epochs.last().unwrap().train_loss;
    assert!(last < first, "loss {first} -> {last}");
}

#[test]
fn identical_inputs_mixed_labels_give_chance() {
    let data: Vec<(SparseVec, bool)> = (0..40).map(|i| (SparseVec::from_dense(&[1.0, 0.5]), i % 2 == 0)).collect();
    let spec = NetworkSpec::new(2, &[4, 1], Activation::Relu, 0.0, 0.0);
    let (net, _) = train_classifier(&data, &spec, &TrainConfig { max_epochs: 5, ..quick(0) }).unwrap();
    let out = net.forward(&data[0].0).unwrap();
    let correct = data.iter().filter(|(_, y)| (out > 0.0) == *y).count();
    assert_eq!(correct, 20);
}

#[test]
fn empty_data_is_an_error() {
    let spec = NetworkSpec::new(2, &[1], Activation::Relu, 0.0, 0.0);
    assert!(matches!(train_classifier(&[], &spec, &quick(0)), Err(NeuralError::EmptyData)));
}

#[test]
fn siamese_separates_toy_pairs() {
    let (features, pairs) = ranking_toy(120, 6, 2);
    let spec = NetworkSpec::new(6, &[16, 8, 1], Activation::Gelu, 0.5, 0.0);
    let (net, _) = train_siamese(&features, &pairs, &spec, &quick(4)).unwrap();
    for &(p, n) in &pairs {
        assert!(net.forward(&features[p]).unwrap() > net.forward(&features[n]).unwrap());
    }
}

#[test]
fn untrained_ranker_is_near_chance() {
    let (features, _) = ranking_toy(200, 6, 9);
    let mut wins = 0;
    let mut total = 0;
    for seed in 0..10 {
        let net = Mlp::new(NetworkSpec::new(6, &[16, 8, 1], Activation::Gelu, 0.5, 0.0), seed).unwrap();
        for k in (0..features.len()).step_by(2) {
            // Compare two rows drawn from the same distribution.
            let a = &features[k + 1];
            let b = &features[(k + 3) % features.len()];
            wins += (net.forward(a).unwrap() > net.forward(b).unwrap()) as usize;
            total += 1;
        }
    }
    let rate = wins as f64 / total as f64;
    assert!((0.3..0.7).contains(&rate), "{rate}");
}

#[test]
fn contrastive_ranks_true_pair_first() {
    let toy = pair_toy(80, 6, 8, 5);
    let spec = NetworkSpec::new(8, &[16, 8, 1], Activation::Gelu, 0.5, 0.0);
    let (f, g, _) = train_contrastive(&toy.descriptors, &toy.tuples, &spec, &spec, &quick(6)).unwrap();
    let mut top1 = 0;
    for (rows, (a, b)) in &toy.reactions {
        let score = |x: usize, y: usize| f.forward(&toy.descriptors[x]).unwrap() * g.forward(&toy.descriptors[y]).unwrap();
        let best = rows
            .iter()
            .flat_map(|&x| rows.iter().map(move |&y| (x, y)))
            .max_by(|p, q| score(p.0, p.1).total_cmp(&score(q.0, q.1)))
            .unwrap();
        top1 += (best == (*a, *b)) as usize;
    }
    assert!(top1 as f64 / toy.reactions.len() as f64 >= 0.95, "{top1}/80");
}

#[test]
fn same_seed_same_weights() {
    let data = blobs(60, 4, 8);
    let spec = NetworkSpec::new(4, &[6, 1], Activation::Gelu, 0.5, 1e-4);
    let cfg = TrainConfig { max_epochs: 5, ..quick(11) };
    let (a, ca) = train_classifier(&data, &spec, &cfg).unwrap();
    let (b, cb) = train_classifier(&data, &spec, &cfg).unwrap();
    assert_eq!(a, b);
    assert_eq!(ca, cb);
    let (c, _) = train_classifier(&data, &spec, &TrainConfig { seed: 12, ..cfg }).unwrap();
    assert_ne!(a, c);
}

#[test]
fn learning_curve_csv() {
    let data = blobs(40, 3, 1);
    let spec = NetworkSpec::new(3, &[4, 1], Activation::Relu, 0.0, 0.0);
    let (_, curve) = train_classifier(&data, &spec, &TrainConfig { max_epochs: 3, ..quick(0) }).unwrap();
    let mut buf = Vec::new();
    curve.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert!(text.starts_with("epoch,train_loss,holdout_loss,holdout_accuracy\n"));
    assert_eq!(text.lines().count(), 4);
}

#[test]
fn saved_model_reproduces_outputs() {
    let net = Mlp::new(NetworkSpec::site_classifier(), 17).unwrap();
    let meta = ModelMeta {
        kind: "site_classifier".into(),
        feature: "site".into(),
        seed: 17,
        dataset_hash: "d00d".into(),
        config: TrainConfig::default(),
        extra: Default::default(),
    };
    let model = TrainedModel { net, meta };
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.bin");
    save_model(&path, &model.to_file()).unwrap();
    let back = TrainedModel::from_file(load_model(&path).unwrap()).unwrap();
    let x = SparseVec::from_entries(800, vec![(3, 1.0), (400, 2.5), (799, -1.0)]);
    assert_eq!(back.score(&x).unwrap().to_bits(), model.score(&x).unwrap().to_bits());
}
