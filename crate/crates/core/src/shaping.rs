//! Sampled estimation layer: self-normalized importance sampling for the soft
//! adversary, group normalization of rollout probabilities, scaled and
//! KL-driven ambiguity budgets, the k3 KL estimator, and the Donsker–Varadhan
//! inequality that motivates growing the budget with drift.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{check_len, invalid, DrroError, Result};
use crate::numeric::{dot, kl_divergence, log_sum_exp, softmax};
use crate::simplex::PolicyVector;

/// One sampled response for SNIS.
///
/// `policy_prob` is the rollout-time probability of the response. Soft
/// weights are always evaluated at the frozen rollout policy, never at the
/// live parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SnisSample {
    pub reward: f64,
    pub proposal_prob: f64,
    pub policy_prob: f64,
}

fn check_tau(tau: f64) -> Result<()> {
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(invalid("tau", format!("must be > 0, got {tau}")));
    }
    Ok(())
}

/// Log importance weights `(r − δ π)/τ − log q`.
fn log_importance(samples: &[SnisSample], delta: f64, tau: f64) -> Result<Vec<f64>> {
    if samples.is_empty() {
        return Err(DrroError::Empty("SNIS sample set"));
    }
    check_tau(tau)?;
    samples
        .iter()
        .map(|s| {
            if !(s.proposal_prob > 0.0) {
                return Err(invalid("proposal_prob", format!("must be > 0, got {}", s.proposal_prob)));
            }
            Ok((s.reward - delta * s.policy_prob) / tau - s.proposal_prob.ln())
        })
        .collect()
}

/// Self-normalized weights `w⁽ᵏ⁾ = u⁽ᵏ⁾ / Σ u`.
pub fn snis_weights(samples: &[SnisSample], delta: f64, tau: f64) -> Result<Vec<f64>> {
    Ok(softmax(&log_importance(samples, delta, tau)?))
}

/// SNIS estimate `Σ w⁽ᵏ⁾ h⁽ᵏ⁾` of the soft-adversary expectation of `h`.
pub fn snis_estimate(samples: &[SnisSample], h_values: &[f64], delta: f64, tau: f64) -> Result<f64> {
    check_len(samples.len(), h_values.len())?;
    let w = snis_weights(samples, delta, tau)?;
    Ok(dot(&w, h_values))
}

/// Exact soft-adversary distribution `σᵢ ∝ exp((r̂ᵢ − δ πᵢ)/τ)` over a full response set.
pub fn soft_adversary(rewards: &[f64], policy: &[f64], delta: f64, tau: f64) -> Result<Vec<f64>> {
    check_len(rewards.len(), policy.len())?;
    check_tau(tau)?;
    let scores: Vec<f64> = rewards.iter().zip(policy).map(|(r, p)| (r - delta * p) / tau).collect();
    Ok(softmax(&scores))
}

/// High-probability SNIS error radius and the sample size it requires.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SnisBound {
    pub bound: f64,
    pub k_min: u64,
}

/// Finite-sample SNIS error bound for weights in `[0, U]`, `|h| ≤ H` and mean weight `ν`.
pub fn snis_error_bound(u_max: f64, h_max: f64, nu: f64, k: u64, eta: f64) -> Result<SnisBound> {
    if !(eta > 0.0 && eta < 1.0) {
        return Err(invalid("eta", format!("must lie in (0, 1), got {eta}")));
    }
    if !(u_max > 0.0) || !(nu > 0.0) || !(h_max >= 0.0) || k == 0 {
        return Err(invalid("snis bound", "requires U > 0, nu > 0, H >= 0 and K >= 1"));
    }
    let log_term = (4.0 / eta).ln();
    let k_min = (2.0 * u_max * u_max / (nu * nu) * log_term).ceil() as u64;
    let bound = 4.0 * u_max * h_max / nu * (log_term / (2.0 * k as f64)).sqrt();
    Ok(SnisBound { bound, k_min })
}

/// Rescales nonnegative rollout probabilities to sum to one.
///
/// Inputs far below `f64::MIN_POSITIVE` are handled by normalizing through
/// the log domain.
pub fn group_normalize(probs: &[f64]) -> Result<Vec<f64>> {
    if probs.is_empty() {
        return Err(DrroError::Empty("group"));
    }
    if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
        return Err(invalid("probs", "must be finite and nonnegative"));
    }
    if probs.iter().all(|p| *p == 0.0) {
        return Err(invalid("probs", "all-zero group cannot be normalized"));
    }
    let logs: Vec<f64> = probs.iter().map(|p| p.ln()).collect();
    group_normalize_log(&logs)
}

/// Normalizes a group given log-probabilities.
pub fn group_normalize_log(log_probs: &[f64]) -> Result<Vec<f64>> {
    if log_probs.is_empty() {
        return Err(DrroError::Empty("group"));
    }
    if log_probs.iter().any(|l| l.is_nan() || *l == f64::INFINITY) {
        return Err(invalid("log_probs", "must be finite or -inf"));
    }
    if log_probs.iter().all(|l| *l == f64::NEG_INFINITY) {
        return Err(invalid("log_probs", "all-zero group cannot be normalized"));
    }
    Ok(softmax(log_probs))
}

/// Budget for a sampled group of size `G` out of a conceptual `n`: `(G/n) δ`.
pub fn scaled_budget(delta: f64, group_size: usize, n: usize) -> Result<f64> {
    if group_size == 0 || group_size > n {
        return Err(invalid("group_size", format!("need 1 <= G <= n, got G={group_size}, n={n}")));
    }
    if !(delta >= 0.0) {
        return Err(invalid("delta", format!("must be >= 0, got {delta}")));
    }
    Ok(group_size as f64 / n as f64 * delta)
}

/// k3 KL estimator: mean of `exp(z) − z − 1` with `z = log π_ref − log π_rollout`.
pub fn k3_kl(log_ref: &[f64], log_rollout: &[f64]) -> Result<f64> {
    check_len(log_ref.len(), log_rollout.len())?;
    if log_ref.is_empty() {
        return Err(DrroError::Empty("k3 sample"));
    }
    let total: f64 = log_ref.iter().zip(log_rollout).map(|(a, b)| k3_term(a - b)).sum();
    Ok(total / log_ref.len() as f64)
}

/// Single k3 summand, nonnegative for every `z`.
pub fn k3_term(z: f64) -> f64 {
    // exp_m1 keeps the summand accurate for |z| ≪ 1.
    (z.exp_m1() - z).max(0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BudgetMode {
    Fixed,
    Dynamic,
}

/// Sampled-budget configuration, expressed in group-scaled units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BudgetConfig {
    pub base: f64,
    #[serde(default)]
    pub alpha: f64,
    pub mode: BudgetMode,
    pub group_size: usize,
    pub conceptual_n: usize,
}

impl BudgetConfig {
    pub fn fixed(base: f64, group_size: usize, conceptual_n: usize) -> Self {
        Self { base, alpha: 0.0, mode: BudgetMode::Fixed, group_size, conceptual_n }
    }

    pub fn dynamic(base: f64, alpha: f64, group_size: usize, conceptual_n: usize) -> Self {
        Self { base, alpha, mode: BudgetMode::Dynamic, group_size, conceptual_n }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.base >= 0.0) || !self.base.is_finite() {
            return Err(invalid("budget.base", format!("must be finite and >= 0, got {}", self.base)));
        }
        if !(self.alpha >= 0.0) || !self.alpha.is_finite() {
            return Err(invalid("budget.alpha", format!("must be finite and >= 0, got {}", self.alpha)));
        }
        if self.group_size < 2 {
            return Err(invalid("budget.group_size", "must be >= 2"));
        }
        if self.group_size > self.conceptual_n {
            return Err(invalid("budget.group_size", "must not exceed conceptual_n"));
        }
        Ok(())
    }
}

/// `base` in fixed mode; `base + α·KL` in dynamic mode. Never clipped.
pub fn dynamic_budget(config: &BudgetConfig, kl_estimate: f64) -> Result<f64> {
    if !(kl_estimate >= 0.0) {
        return Err(invalid("kl_estimate", format!("must be >= 0, got {kl_estimate}")));
    }
    Ok(match config.mode {
        BudgetMode::Fixed => config.base,
        BudgetMode::Dynamic => config.base + config.alpha * kl_estimate,
    })
}

/// Default number of updates averaged by [`KlSmoother`].
pub const DEFAULT_KL_WINDOW: usize = 20;

/// Sliding-window mean of per-update KL estimates.
#[derive(Debug, Clone)]
pub struct KlSmoother {
    window: usize,
    values: VecDeque<f64>,
}

impl KlSmoother {
    pub fn new(window: usize) -> Self {
        Self { window: window.max(1), values: VecDeque::new() }
    }

    /// Adds an estimate and returns the smoothed value.
    pub fn push(&mut self, value: f64) -> f64 {
        self.values.push_back(value);
        if self.values.len() > self.window {
            self.values.pop_front();
        }
        self.current()
    }

    pub fn current(&self) -> f64 {
        if self.values.is_empty() {
            0.0
        } else {
            (self.values.iter().sum::<f64>() / self.values.len() as f64).max(0.0)
        }
    }
}

impl Default for KlSmoother {
    fn default() -> Self {
        Self::new(DEFAULT_KL_WINDOW)
    }
}

/// Both sides of the Donsker–Varadhan inequality `⟨π, h⟩ ≤ (KL(π‖π₀) + log E_π₀ e^{λh}) / λ`.
pub fn dv_bound(pi: &PolicyVector, pi0: &PolicyVector, h: &[f64], lambda: f64) -> Result<(f64, f64)> {
    check_len(pi.len(), pi0.len())?;
    check_len(pi.len(), h.len())?;
    if !(lambda > 0.0) {
        return Err(invalid("lambda", format!("must be > 0, got {lambda}")));
    }
    if h.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
        return Err(invalid("h", "must be finite and nonnegative"));
    }
    for (i, (p, q)) in pi.as_slice().iter().zip(pi0.as_slice()).enumerate() {
        if *p > 0.0 && *q <= 0.0 {
            return Err(DrroError::NotSimplex(format!(
                "reference policy has no mass on response {i} where the policy does"
            )));
        }
    }
    let lhs = dot(pi.as_slice(), h);
    let kl = kl_divergence(pi.as_slice(), pi0.as_slice());
    let log_moment: Vec<f64> =
        pi0.as_slice().iter().zip(h).filter(|(q, _)| **q > 0.0).map(|(q, hv)| q.ln() + lambda * hv).collect();
    let rhs = (kl + log_sum_exp(&log_moment)) / lambda;
    Ok((lhs, rhs))
}
