//! Value-robust (DRO) baseline under the same promptwise ℓ1 ambiguity, and the
//! comparison of its true value against the regret-robust policy when the true
//! reward is a rank-preserving transform of the proxy.

use serde::{Deserialize, Serialize};

use crate::error::{check_len, invalid, DrroError, Result};
use crate::numeric::{dot, max};
use crate::simplex::{descending_order, solve_water_filling, AmbiguityBudget, PolicyVector, RewardVector};

/// Prefix-uniform DRO optimizer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DroSolution {
    pub policy: PolicyVector,
    pub support_size: usize,
    pub objective: f64,
    /// `A_k − δ/k` for k = 1..=n, in sorted-reward order.
    pub prefix_values: Vec<f64>,
    pub sort_permutation: Vec<usize>,
}

/// `⟨π, r̂⟩ − δ ‖π‖∞`.
pub fn dro_worst_case_value(pi: &PolicyVector, r_hat: &RewardVector, delta: f64) -> Result<f64> {
    check_len(r_hat.len(), pi.len())?;
    AmbiguityBudget::new(delta)?;
    Ok(dot(pi.as_slice(), r_hat.as_slice()) - delta * max(pi.as_slice()))
}

/// Uniform over the top-m rewards, m the smallest maximizer of `A_k − δ/k`.
pub fn solve_dro(r_hat: &RewardVector, delta: f64) -> Result<DroSolution> {
    AmbiguityBudget::new(delta)?;
    let values = r_hat.as_slice();
    let n = values.len();
    let perm = descending_order(values);
    let mut prefix_values = Vec::with_capacity(n);
    let mut running = 0.0;
    for (k, &i) in perm.iter().enumerate() {
        running += values[i];
        let size = (k + 1) as f64;
        prefix_values.push(running / size - delta / size);
    }
    let mut m = 0;
    for k in 1..n {
        if prefix_values[k] > prefix_values[m] {
            m = k;
        }
    }
    let support_size = m + 1;
    let mut probs = vec![0.0; n];
    for &i in perm.iter().take(support_size) {
        probs[i] = 1.0 / support_size as f64;
    }
    Ok(DroSolution {
        policy: PolicyVector::new(probs)?,
        support_size,
        objective: prefix_values[m],
        prefix_values,
        sort_permutation: perm,
    })
}

/// Strictly increasing transform used as a rank-preserving "truth".
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MonotoneTransform {
    Identity,
    Affine {
        a: f64,
        b: f64,
    },
    /// `(x − shift)^exponent` on `x > shift`.
    Power {
        exponent: f64,
        shift: f64,
    },
    /// Piecewise-linear interpolation through strictly increasing knots,
    /// extended linearly past both ends.
    Tabulated {
        xs: Vec<f64>,
        ys: Vec<f64>,
    },
}

impl MonotoneTransform {
    pub fn validate(&self) -> Result<()> {
        match self {
            MonotoneTransform::Identity => Ok(()),
            MonotoneTransform::Affine { a, .. } if *a > 0.0 => Ok(()),
            MonotoneTransform::Affine { a, .. } => Err(invalid("a", format!("slope must be > 0, got {a}"))),
            MonotoneTransform::Power { exponent, .. } if *exponent > 0.0 => Ok(()),
            MonotoneTransform::Power { exponent, .. } => {
                Err(invalid("exponent", format!("must be > 0, got {exponent}")))
            }
            MonotoneTransform::Tabulated { xs, ys } => {
                if xs.len() != ys.len() || xs.len() < 2 {
                    return Err(invalid("table", "needs at least two (x, y) knots of equal length"));
                }
                let increasing = |v: &[f64]| v.windows(2).all(|w| w[1] > w[0]);
                if !increasing(xs) || !increasing(ys) {
                    return Err(invalid("table", "knots must be strictly increasing in x and y"));
                }
                Ok(())
            }
        }
    }

    pub fn apply(&self, x: f64) -> Result<f64> {
        match self {
            MonotoneTransform::Identity => Ok(x),
            MonotoneTransform::Affine { a, b } => Ok(a * x + b),
            MonotoneTransform::Power { exponent, shift } => {
                if x <= *shift {
                    return Err(invalid("x", format!("power transform needs x > {shift}, got {x}")));
                }
                Ok((x - shift).powf(*exponent))
            }
            MonotoneTransform::Tabulated { xs, ys } => {
                let n = xs.len();
                let seg = if x <= xs[0] {
                    0
                } else if x >= xs[n - 1] {
                    n - 2
                } else {
                    xs.windows(2).position(|w| x >= w[0] && x <= w[1]).unwrap_or(n - 2)
                };
                let (x0, x1, y0, y1) = (xs[seg], xs[seg + 1], ys[seg], ys[seg + 1]);
                Ok(y0 + (y1 - y0) * (x - x0) / (x1 - x0))
            }
        }
    }
}

/// True values of the two robust policies under `tᵢ = φ(r̂ᵢ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DominanceReport {
    pub drro_true_value: f64,
    pub dro_true_value: f64,
    pub prefix_dominance: bool,
    pub drro_support: usize,
    pub dro_support: usize,
    pub drro_policy: PolicyVector,
    pub dro_policy: PolicyVector,
}

/// Compares regret-robust and value-robust policies on a strictly ordered proxy.
pub fn dominance_check(r_hat: &RewardVector, delta: f64, phi: &MonotoneTransform) -> Result<DominanceReport> {
    let drro = solve_water_filling(r_hat, AmbiguityBudget::new(delta)?)?;
    dominance_check_with(r_hat, delta, phi, drro.policy)
}

/// [`dominance_check`] against a caller-supplied regret-robust policy.
pub fn dominance_check_with(
    r_hat: &RewardVector,
    delta: f64,
    phi: &MonotoneTransform,
    drro_policy: PolicyVector,
) -> Result<DominanceReport> {
    phi.validate()?;
    check_len(r_hat.len(), drro_policy.len())?;
    let values = r_hat.as_slice();
    let perm = descending_order(values);
    if perm.windows(2).any(|w| values[w[0]] <= values[w[1]]) {
        return Err(DrroError::HypothesisViolated("proxy rewards must be pairwise distinct".into()));
    }
    let dro = solve_dro(r_hat, delta)?;
    let truth: Vec<f64> = values.iter().map(|&x| phi.apply(x)).collect::<Result<_>>()?;

    let n = values.len();
    let (mut a, mut b) = (0.0, 0.0);
    let mut prefix_dominance = true;
    for &i in perm.iter().take(n.saturating_sub(1)) {
        a += drro_policy.as_slice()[i];
        b += dro.policy.as_slice()[i];
        if a < b - 1e-12 {
            prefix_dominance = false;
        }
    }
    Ok(DominanceReport {
        drro_true_value: dot(drro_policy.as_slice(), &truth),
        dro_true_value: dot(dro.policy.as_slice(), &truth),
        prefix_dominance,
        drro_support: drro_policy.support_size(),
        dro_support: dro.support_size,
        drro_policy,
        dro_policy: dro.policy,
    })
}
