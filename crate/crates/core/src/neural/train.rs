//! Mini-batch training with early stopping for the three model families.

use std::io::Write;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::loss::{contrastive_loss, siamese_loss, PointLoss};
use super::mlp::{Grads, Mlp, NetworkSpec};
use super::optim::Adam;
use super::{derive_seed, NeuralError};
use crate::featurize::SparseVec;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub holdout_fraction: f64,
    pub clip_norm: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 1e-3,
            batch_size: 32,
            max_epochs: 100,
            patience: 5,
            holdout_fraction: 0.1,
            clip_norm: 5.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub holdout_loss: f64,
    pub holdout_accuracy: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LearningCurve {
    pub epochs: Vec<EpochRecord>,
    /// Epoch whose weights were kept.
    pub best_epoch: usize,
}

impl LearningCurve {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), NeuralError> {
        let mut w = csv::Writer::from_writer(out);
        for e in &self.epochs {
            w.serialize(e)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Loss and per-network gradients (batch means, without L2) of one batch.
type BatchFn<'a, E> = dyn Fn(&[Mlp], &[&E], bool, &mut ChaCha8Rng) -> Result<(f64, Vec<Grads>), NeuralError> + 'a;
/// Eval-mode loss and whether the example is ranked/classified correctly.
type EvalFn<'a, E> = dyn Fn(&[Mlp], &E) -> Result<(f64, bool), NeuralError> + 'a;

fn fit<E>(
    nets: &mut Vec<Mlp>,
    examples: &[E],
    cfg: &TrainConfig,
    batch_fn: &BatchFn<'_, E>,
    eval_fn: &EvalFn<'_, E>,
) -> Result<LearningCurve, NeuralError> {
    if examples.is_empty() {
        return Err(NeuralError::EmptyData);
    }
    let mut order: Vec<usize> = (0..examples.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, &[0x401d])));
    let n_hold = if examples.len() >= 10 { (examples.len() as f64 * cfg.holdout_fraction).ceil() as usize } else { 0 };
    let (hold, train) = order.split_at(n_hold);
    let mut train = train.to_vec();

    let mut adam = Adam::new(nets, cfg.learning_rate, cfg.clip_norm);
    let mut curve = LearningCurve::default();
    let mut best = (f64::INFINITY, nets.clone(), 0usize);
    let mut stale = 0;
    for epoch in 1..=cfg.max_epochs {
        train.shuffle(&mut ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, &[1, epoch as u64])));
        let mut total = 0.0;
        for (b, chunk) in train.chunks(cfg.batch_size.max(1)).enumerate() {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, &[2, epoch as u64, b as u64]));
            let batch: Vec<&E> = chunk.iter().map(|&i| &examples[i]).collect();
            let (loss, mut grads) = batch_fn(nets, &batch, true, &mut rng)?;
            for (g, net) in grads.iter_mut().zip(nets.iter()) {
                g.add_l2(net, net.spec.l2);
            }
            adam.step(nets, &mut grads);
            total += loss * chunk.len() as f64;
        }
        let train_loss = total / train.len().max(1) as f64;
        let (holdout_loss, holdout_accuracy) = if hold.is_empty() {
            (train_loss, f64::NAN)
        } else {
            let mut loss = 0.0;
            let mut correct = 0usize;
            for &i in hold {
                let (l, ok) = eval_fn(nets, &examples[i])?;
                loss += l;
                correct += ok as usize;
            }
            (loss / hold.len() as f64, correct as f64 / hold.len() as f64)
        };
        tracing::debug!(epoch, train_loss, holdout_loss, holdout_accuracy, "epoch done");
        curve.epochs.push(EpochRecord { epoch, train_loss, holdout_loss, holdout_accuracy });
        if holdout_loss < best.0 {
            best = (holdout_loss, nets.clone(), epoch);
            stale = 0;
        } else {
            stale += 1;
            if stale >= cfg.patience {
                tracing::info!(epoch, best_epoch = best.2, "early stop");
                break;
            }
        }
    }
    *nets = best.1;
    curve.best_epoch = best.2;
    Ok(curve)
}

fn point_batch(
    net: &Mlp,
    loss: PointLoss,
    batch: &[(&SparseVec, f64)],
    train: bool,
    rng: &mut ChaCha8Rng,
) -> Result<(f64, Grads), NeuralError> {
    let mut grads = Grads::zeros_like(net);
    let scale = 1.0 / batch.len() as f64;
    let mut total = 0.0;
    for &(x, y) in batch {
        let t = net.forward_trace(x, train, rng)?;
        let (l, d) = loss.value_and_grad(t.output, y);
        total += l;
        net.backward(&t, d * scale, &mut grads);
    }
    Ok((total * scale, grads))
}

fn siamese_batch(
    net: &Mlp,
    batch: &[(&SparseVec, &SparseVec)],
    train: bool,
    rng: &mut ChaCha8Rng,
) -> Result<(f64, Grads), NeuralError> {
    let mut grads = Grads::zeros_like(net);
    let scale = 1.0 / batch.len() as f64;
    let mut total = 0.0;
    for &(p, n) in batch {
        let tp = net.forward_trace(p, train, rng)?;
        let tn = net.forward_trace(n, train, rng)?;
        let (l, dp, dn) = siamese_loss(tp.output, tn.output);
        total += l;
        net.backward(&tp, dp * scale, &mut grads);
        net.backward(&tn, dn * scale, &mut grads);
    }
    Ok((total * scale, grads))
}

fn contrastive_batch(
    f: &Mlp,
    g: &Mlp,
    batch: &[[&SparseVec; 4]],
    train: bool,
    rng: &mut ChaCha8Rng,
) -> Result<(f64, Grads, Grads), NeuralError> {
    let mut gf = Grads::zeros_like(f);
    let mut gg = Grads::zeros_like(g);
    let scale = 1.0 / batch.len() as f64;
    let mut total = 0.0;
    for &[p1, p2, n1, n2] in batch {
        let tp1 = f.forward_trace(p1, train, rng)?;
        let tp2 = g.forward_trace(p2, train, rng)?;
        let tn1 = f.forward_trace(n1, train, rng)?;
        let tn2 = g.forward_trace(n2, train, rng)?;
        let (l, d) = contrastive_loss(tp1.output, tp2.output, tn1.output, tn2.output);
        total += l;
        f.backward(&tp1, d[0] * scale, &mut gf);
        g.backward(&tp2, d[1] * scale, &mut gg);
        f.backward(&tn1, d[2] * scale, &mut gf);
        g.backward(&tn2, d[3] * scale, &mut gg);
    }
    Ok((total * scale, gf, gg))
}

fn with_l2(net: &Mlp, loss: f64, mut grads: Grads) -> (f64, Grads) {
    grads.add_l2(net, net.spec.l2);
    (loss + net.l2_penalty(), grads)
}

/// Mean point loss plus L2 penalty over `batch`, and its gradient, without
/// dropout.
pub fn gradients(net: &Mlp, loss: PointLoss, batch: &[(SparseVec, f64)]) -> Result<(f64, Grads), NeuralError> {
    let refs: Vec<(&SparseVec, f64)> = batch.iter().map(|(x, y)| (x, *y)).collect();
    let (l, g) = point_batch(net, loss, &refs, false, &mut ChaCha8Rng::seed_from_u64(0))?;
    Ok(with_l2(net, l, g))
}

/// Mean ranking loss over `(plausible, implausible)` pairs, plus L2.
pub fn siamese_gradients(net: &Mlp, batch: &[(SparseVec, SparseVec)]) -> Result<(f64, Grads), NeuralError> {
    let refs: Vec<(&SparseVec, &SparseVec)> = batch.iter().map(|(p, n)| (p, n)).collect();
    let (l, g) = siamese_batch(net, &refs, false, &mut ChaCha8Rng::seed_from_u64(0))?;
    Ok(with_l2(net, l, g))
}

/// Mean pair loss over `[a1*, a2*, a1', a2']` tuples, plus L2 on both nets.
pub fn contrastive_gradients(
    f: &Mlp,
    g: &Mlp,
    batch: &[[SparseVec; 4]],
) -> Result<(f64, Grads, Grads), NeuralError> {
    let refs: Vec<[&SparseVec; 4]> = batch.iter().map(|[a, b, c, d]| [a, b, c, d]).collect();
    let (l, gf, gg) = contrastive_batch(f, g, &refs, false, &mut ChaCha8Rng::seed_from_u64(0))?;
    let (l, gf) = with_l2(f, l, gf);
    let (l, gg) = with_l2(g, l, gg);
    Ok((l, gf, gg))
}

/// Reactive-site classifier on labelled atom descriptors.
pub fn train_classifier(
    data: &[(SparseVec, bool)],
    spec: &NetworkSpec,
    cfg: &TrainConfig,
) -> Result<(Mlp, LearningCurve), NeuralError> {
    let positives = data.iter().filter(|(_, y)| *y).count();
    if positives == 0 || positives == data.len() {
        tracing::warn!(examples = data.len(), positives, "classifier data has a single class");
    }
    let mut nets = vec![Mlp::new(spec.clone(), derive_seed(cfg.seed, &[10]))?];
    let batch_fn = |nets: &[Mlp], batch: &[&(SparseVec, bool)], train: bool, rng: &mut ChaCha8Rng| {
        let refs: Vec<(&SparseVec, f64)> = batch.iter().map(|(x, y)| (x, *y as u8 as f64)).collect();
        point_batch(&nets[0], PointLoss::Logistic, &refs, train, rng).map(|(l, g)| (l, vec![g]))
    };
    let eval_fn = |nets: &[Mlp], (x, y): &(SparseVec, bool)| {
        let out = nets[0].forward(x)?;
        Ok((PointLoss::Logistic.value_and_grad(out, *y as u8 as f64).0, (out > 0.0) == *y))
    };
    let curve = fit(&mut nets, data, cfg, &batch_fn, &eval_fn)?;
    Ok((nets.pop().unwrap(), curve))
}

/// Siamese ranker; `pairs` index `(plausible, implausible)` rows of
/// `features`, which must share their reactants.
pub fn train_siamese(
    features: &[SparseVec],
    pairs: &[(usize, usize)],
    spec: &NetworkSpec,
    cfg: &TrainConfig,
) -> Result<(Mlp, LearningCurve), NeuralError> {
    let mut nets = vec![Mlp::new(spec.clone(), derive_seed(cfg.seed, &[20]))?];
    let batch_fn = |nets: &[Mlp], batch: &[&(usize, usize)], train: bool, rng: &mut ChaCha8Rng| {
        let refs: Vec<(&SparseVec, &SparseVec)> = batch.iter().map(|&&(p, n)| (&features[p], &features[n])).collect();
        siamese_batch(&nets[0], &refs, train, rng).map(|(l, g)| (l, vec![g]))
    };
    let eval_fn = |nets: &[Mlp], &(p, n): &(usize, usize)| {
        let fp = nets[0].forward(&features[p])?;
        let fn_ = nets[0].forward(&features[n])?;
        Ok((siamese_loss(fp, fn_).0, fp > fn_))
    };
    let curve = fit(&mut nets, pairs, cfg, &batch_fn, &eval_fn)?;
    Ok((nets.pop().unwrap(), curve))
}

/// Pair scorer with first atoms through `f` and second atoms through `g`.
/// Each tuple indexes `[a1*, a2*, a1', a2']` rows of `descriptors`.
pub fn train_contrastive(
    descriptors: &[SparseVec],
    tuples: &[[usize; 4]],
    f_spec: &NetworkSpec,
    g_spec: &NetworkSpec,
    cfg: &TrainConfig,
) -> Result<(Mlp, Mlp, LearningCurve), NeuralError> {
    let mut nets = vec![
        Mlp::new(f_spec.clone(), derive_seed(cfg.seed, &[30]))?,
        Mlp::new(g_spec.clone(), derive_seed(cfg.seed, &[31]))?,
    ];
    let rows = |t: &[usize; 4]| t.map(|i| &descriptors[i]);
    let batch_fn = |nets: &[Mlp], batch: &[&[usize; 4]], train: bool, rng: &mut ChaCha8Rng| {
        let refs: Vec<[&SparseVec; 4]> = batch.iter().map(|t| rows(t)).collect();
        contrastive_batch(&nets[0], &nets[1], &refs, train, rng).map(|(l, gf, gg)| (l, vec![gf, gg]))
    };
    let eval_fn = |nets: &[Mlp], t: &[usize; 4]| {
        let [p1, p2, n1, n2] = rows(t);
        let (fp, gp) = (nets[0].forward(p1)?, nets[1].forward(p2)?);
        let (fn_, gn) = (nets[0].forward(n1)?, nets[1].forward(n2)?);
        Ok((contrastive_loss(fp, gp, fn_, gn).0, fp * gp > fn_ * gn))
    };
    let curve = fit(&mut nets, tuples, cfg, &batch_fn, &eval_fn)?;
    let g = nets.pop().unwrap();
    let f = nets.pop().unwrap();
    Ok((f, g, curve))
}
