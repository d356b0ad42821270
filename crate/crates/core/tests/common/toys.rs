//! Separable toy problems and a finite-difference gradient oracle.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rmech_core::featurize::SparseVec;
use rmech_core::neural::{
    contrastive_gradients, gradients, siamese_gradients, Grads, Mlp, NetworkSpec, NeuralError, PointLoss,
};

/// Largest relative disagreement between analytic and central-difference
/// gradients, with the denominator floored at `floor`.
pub fn max_relative_error(analytic: &[f64], numeric: &[f64], floor: f64) -> f64 {
    analytic
        .iter()
        .zip(numeric)
        .map(|(a, n)| (a - n).abs() / a.abs().max(n.abs()).max(floor))
        .fold(0.0, f64::max)
}

/// Central differences of `loss` over every parameter of `nets[which]`.
pub fn numeric_gradient(
    nets: &mut [Mlp],
    which: usize,
    h: f64,
    loss: &dyn Fn(&[Mlp]) -> f64,
) -> Vec<f64> {
    let n = nets[which].param_count();
    let mut out = Vec::with_capacity(n);
    for j in 0..n {
        let orig = *nets[which].params_mut().nth(j).unwrap();
        *nets[which].params_mut().nth(j).unwrap() = orig + h;
        let up = loss(nets);
        *nets[which].params_mut().nth(j).unwrap() = orig - h;
        let down = loss(nets);
        *nets[which].params_mut().nth(j).unwrap() = orig;
        out.push((up - down) / (2.0 * h));
    }
    out
}

pub fn flat(g: &Grads) -> Vec<f64> {
    g.iter().copied().collect()
}

pub fn random_vec(rng: &mut ChaCha8Rng, dim: usize, density: f64) -> SparseVec {
    let v: Vec<f64> = (0..dim).map(|_| if rng.gen::<f64>() < density { rng.gen_range(-1.5..1.5) } else { 0.0 }).collect();
    SparseVec::from_dense(&v)
}

/// A network with every parameter (biases included) drawn at random, so no
/// ReLU sits exactly on its kink.
pub fn random_net(spec: &NetworkSpec, seed: u64) -> Result<Mlp, NeuralError> {
    let mut net = Mlp::new(spec.clone(), seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xb1a5);
    net.params_mut().for_each(|p| *p = rng.gen_range(-0.8..0.8));
    Ok(net)
}

pub enum CheckedLoss {
    Squared,
    Logistic,
    Siamese,
    Contrastive,
}

/// Worst relative gradient error for a random small network under `loss`.
pub fn gradient_check(spec: &NetworkSpec, loss: CheckedLoss, seed: u64) -> Result<f64, NeuralError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = spec.input_dim;
    let h = 1e-6;
    let floor = 1e-3;
    match loss {
        CheckedLoss::Squared | CheckedLoss::Logistic => {
            let pl = if matches!(loss, CheckedLoss::Squared) { PointLoss::Squared } else { PointLoss::Logistic };
            let batch: Vec<(SparseVec, f64)> =
                (0..4).map(|_| (random_vec(&mut rng, dim, 0.7), rng.gen_range(0..2) as f64)).collect();
            let mut nets = vec![random_net(spec, seed)?];
            let (_, g) = gradients(&nets[0], pl, &batch)?;
            let num = numeric_gradient(&mut nets, 0, h, &|n| gradients(&n[0], pl, &batch).unwrap().0);
            Ok(max_relative_error(&flat(&g), &num, floor))
        }
        CheckedLoss::Siamese => {
            let batch: Vec<(SparseVec, SparseVec)> =
                (0..4).map(|_| (random_vec(&mut rng, dim, 0.7), random_vec(&mut rng, dim, 0.7))).collect();
            let mut nets = vec![random_net(spec, seed)?];
            let (_, g) = siamese_gradients(&nets[0], &batch)?;
            let num = numeric_gradient(&mut nets, 0, h, &|n| siamese_gradients(&n[0], &batch).unwrap().0);
            Ok(max_relative_error(&flat(&g), &num, floor))
        }
        CheckedLoss::Contrastive => {
            let batch: Vec<[SparseVec; 4]> =
                (0..4).map(|_| std::array::from_fn(|_| random_vec(&mut rng, dim, 0.7))).collect();
            let mut nets = vec![random_net(spec, seed)?, random_net(spec, seed + 1)?];
            let (_, gf, gg) = contrastive_gradients(&nets[0], &nets[1], &batch)?;
            let lossf = |n: &[Mlp]| contrastive_gradients(&n[0], &n[1], &batch).unwrap().0;
            let nf = numeric_gradient(&mut nets, 0, h, &lossf);
            let ng = numeric_gradient(&mut nets, 1, h, &lossf);
            Ok(max_relative_error(&flat(&gf), &nf, floor).max(max_relative_error(&flat(&gg), &ng, floor)))
        }
    }
}

/// Two Gaussian blobs separated along every axis.
pub fn blobs(n: usize, dim: usize, seed: u64) -> Vec<(SparseVec, bool)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let label = i % 2 == 0;
            let centre = if label { 1.5 } else { -1.5 };
            let v: Vec<f64> = (0..dim).map(|_| centre + rng.gen_range(-1.0..1.0)).collect();
            (SparseVec::from_dense(&v), label)
        })
        .collect()
}

/// Ranking toy: plausible rows have feature 0 set, implausible rows do not.
pub fn ranking_toy(n: usize, dim: usize, seed: u64) -> (Vec<SparseVec>, Vec<(usize, usize)>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut features = Vec::new();
    let mut pairs = Vec::new();
    for _ in 0..n {
        let mut p: Vec<f64> = (0..dim).map(|_| rng.gen_range(0.0..0.5)).collect();
        let mut q: Vec<f64> = (0..dim).map(|_| rng.gen_range(0.0..0.5)).collect();
        p[0] = 1.0;
        q[0] = 0.0;
        features.push(SparseVec::from_dense(&p));
        features.push(SparseVec::from_dense(&q));
        pairs.push((features.len() - 2, features.len() - 1));
    }
    (features, pairs)
}

/// Pair-scoring toy: each reaction has `atoms` random descriptors; the
/// first reactive atom carries feature 0 and the second feature 1.
pub struct PairToy {
    pub descriptors: Vec<SparseVec>,
    /// Per reaction: descriptor rows of its atoms and the true ordered pair.
    pub reactions: Vec<(Vec<usize>, (usize, usize))>,
    pub tuples: Vec<[usize; 4]>,
}

pub fn pair_toy(n: usize, atoms: usize, dim: usize, seed: u64) -> PairToy {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut toy = PairToy { descriptors: Vec::new(), reactions: Vec::new(), tuples: Vec::new() };
    for _ in 0..n {
        let start = toy.descriptors.len();
        for _ in 0..atoms {
            let mut v: Vec<f64> = (0..dim).map(|_| rng.gen_range(0.0..0.3)).collect();
            v[0] = 0.0;
            v[1] = 0.0;
            toy.descriptors.push(SparseVec::from_dense(&v));
        }
        let rows: Vec<usize> = (start..start + atoms).collect();
        let (a, b) = (rows[0], rows[1]);
        let mut va = toy.descriptors[a].to_dense();
        va[0] = 1.0;
        toy.descriptors[a] = SparseVec::from_dense(&va);
        let mut vb = toy.descriptors[b].to_dense();
        vb[1] = 1.0;
        toy.descriptors[b] = SparseVec::from_dense(&vb);
        toy.tuples.push([a, b, b, a]);
        for &x in &rows[2..] {
            toy.tuples.push([a, b, x, b]);
            toy.tuples.push([a, b, a, x]);
            toy.tuples.push([a, b, x, rows[2 + (x - rows[2] + 1) % (atoms - 2)]]);
        }
        toy.reactions.push((rows, (a, b)));
    }
    toy
}
