//! Scalar losses and their derivatives with respect to network outputs.

use serde::{Deserialize, Serialize};

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^x)` without overflow.
fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PointLoss {
    /// `(y_hat - y)^2`
    Squared,
    /// Binary cross-entropy on a logit.
    Logistic,
}

impl PointLoss {
    /// Loss and its derivative with respect to the output.
    pub fn value_and_grad(self, out: f64, target: f64) -> (f64, f64) {
        match self {
            PointLoss::Squared => ((out - target).powi(2), 2.0 * (out - target)),
            PointLoss::Logistic => {
                let loss = softplus(out) - target * out;
                (loss, sigmoid(out) - target)
            }
        }
    }
}

/// Ranking loss `σ(f(implausible) − f(plausible))` and its derivatives with
/// respect to `f(plausible)` and `f(implausible)`.
pub fn siamese_loss(plausible: f64, implausible: f64) -> (f64, f64, f64) {
    let s = sigmoid(implausible - plausible);
    let d = s * (1.0 - s);
    (s, -d, d)
}

/// Pair loss `1 − σ(f(a1*)·g(a2*) − f(a1')·g(a2'))`. Returns the loss and its
/// derivatives with respect to `[f(a1*), g(a2*), f(a1'), g(a2')]`.
pub fn contrastive_loss(fp: f64, gp: f64, fn_: f64, gn: f64) -> (f64, [f64; 4]) {
    let s = sigmoid(fp * gp - fn_ * gn);
    let dd = -s * (1.0 - s);
    (1.0 - s, [dd * gp, dd * fp, -dd * gn, -dd * fn_])
}

/// Pair reactivity `σ(f(a1)·g(a2))`, kept strictly inside (0, 1).
pub fn pair_score(f: f64, g: f64) -> f64 {
    sigmoid(f * g).clamp(f64::EPSILON, 1.0 - f64::EPSILON)
}
