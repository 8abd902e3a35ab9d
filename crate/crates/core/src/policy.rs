//! Tabular softmax policies and full-enumeration policy gradients.
//!
//! Each prompt owns one logit row; a response is a single categorical draw.
//! All three exact gradients share the score-function form
//! `∂/∂θⱼ = πⱼ (cⱼ − ⟨π, c⟩)` for a shaped reward `c`:
//!
//! * nominal: `c = r̂`
//! * hard: `c = r̂ + δ·e_{i*}` with `i*` the unique maximizer of `r̂ᵢ − δπᵢ`
//! * soft: `c = r̂ + δ·σ` with `σ` the soft adversary at temperature `τ`

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, invalid, DrroError, Result};
use crate::numeric::{dot, log_sum_exp, softmax};
use crate::simplex::{uncovered_rewards, PolicyVector, RewardVector};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TabularSoftmaxPolicy {
    prompts: usize,
    responses: usize,
    logits: Vec<f64>,
}

impl TabularSoftmaxPolicy {
    pub fn new(logits: Vec<Vec<f64>>) -> Result<Self> {
        let prompts = logits.len();
        if prompts == 0 {
            return Err(DrroError::Empty("policy logits"));
        }
        let responses = logits[0].len();
        if responses == 0 {
            return Err(DrroError::Empty("policy logit row"));
        }
        let mut flat = Vec::with_capacity(prompts * responses);
        for row in &logits {
            check_len(responses, row.len())?;
            if row.iter().any(|v| !v.is_finite()) {
                return Err(DrroError::NonFinite("policy logits"));
            }
            flat.extend_from_slice(row);
        }
        Ok(Self { prompts, responses, logits: flat })
    }

    pub fn uniform(prompts: usize, responses: usize) -> Self {
        Self { prompts, responses, logits: vec![0.0; prompts * responses] }
    }

    pub fn num_prompts(&self) -> usize {
        self.prompts
    }

    pub fn num_responses(&self) -> usize {
        self.responses
    }

    pub fn logits(&self, prompt: usize) -> &[f64] {
        &self.logits[prompt * self.responses..(prompt + 1) * self.responses]
    }

    pub fn logits_mut(&mut self, prompt: usize) -> &mut [f64] {
        &mut self.logits[prompt * self.responses..(prompt + 1) * self.responses]
    }

    pub fn probs(&self, prompt: usize) -> Vec<f64> {
        softmax(self.logits(prompt))
    }

    pub fn log_probs(&self, prompt: usize) -> Vec<f64> {
        let row = self.logits(prompt);
        let z = log_sum_exp(row);
        row.iter().map(|l| l - z).collect()
    }

    pub fn policy_vector(&self, prompt: usize) -> PolicyVector {
        PolicyVector::normalized(self.probs(prompt)).expect("softmax rows are valid distributions")
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.prompts).map(|x| self.logits(x).to_vec()).collect()
    }

    /// Draws one response index for `prompt` by inverse-CDF sampling.
    pub fn sample<R: Rng + ?Sized>(&self, prompt: usize, rng: &mut R) -> usize {
        sample_categorical(&self.probs(prompt), rng)
    }

    /// `θ ← θ + step · grad` for a flat gradient laid out like the logits.
    pub fn apply_gradient(&mut self, grad: &[f64], step: f64) {
        for (l, g) in self.logits.iter_mut().zip(grad) {
            *l += step * g;
        }
    }

    pub(crate) fn check_prompt(&self, prompt: usize) -> Result<()> {
        if prompt >= self.prompts {
            return Err(invalid("prompt", format!("index {prompt} out of range ({} prompts)", self.prompts)));
        }
        Ok(())
    }
}

pub fn sample_categorical<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    // Rounding left a sliver of mass above the cumulative sum.
    probs.iter().rposition(|p| *p > 0.0).unwrap_or(probs.len() - 1)
}

/// Score-function gradient of `⟨π, c⟩` with respect to one softmax row, `c` held fixed.
pub fn softmax_score_gradient(probs: &[f64], shaped: &[f64]) -> Vec<f64> {
    let baseline = dot(probs, shaped);
    probs.iter().zip(shaped).map(|(p, c)| p * (c - baseline)).collect()
}

fn row_inputs(policy: &TabularSoftmaxPolicy, prompt: usize, r_hat: &RewardVector) -> Result<Vec<f64>> {
    policy.check_prompt(prompt)?;
    check_len(policy.num_responses(), r_hat.len())?;
    Ok(policy.probs(prompt))
}

/// Exact gradient of `⟨π_θ(x), r̂⟩` with respect to the prompt's logits.
pub fn exact_nominal_gradient(policy: &TabularSoftmaxPolicy, prompt: usize, r_hat: &RewardVector) -> Result<Vec<f64>> {
    let probs = row_inputs(policy, prompt, r_hat)?;
    Ok(softmax_score_gradient(&probs, r_hat.as_slice()))
}

/// Exact gradient of the hard robust utility; errors at a tied maximizer.
pub fn exact_hard_drro_gradient(
    policy: &TabularSoftmaxPolicy,
    prompt: usize,
    r_hat: &RewardVector,
    delta: f64,
) -> Result<Vec<f64>> {
    let probs = row_inputs(policy, prompt, r_hat)?;
    if !(delta >= 0.0) {
        return Err(invalid("delta", format!("must be >= 0, got {delta}")));
    }
    let pi = PolicyVector::normalized(probs.clone())?;
    let uncovered = uncovered_rewards(&pi, r_hat, delta);
    let mut first = 0;
    for i in 1..uncovered.len() {
        if uncovered[i] > uncovered[first] {
            first = i;
        }
    }
    if let Some(j) = (0..uncovered.len()).find(|&j| j != first && uncovered[j] == uncovered[first]) {
        return Err(DrroError::TiedMaximizer(first.min(j), first.max(j)));
    }
    let mut shaped = r_hat.as_slice().to_vec();
    shaped[first] += delta;
    Ok(softmax_score_gradient(&probs, &shaped))
}

/// Exact gradient of the log-sum-exp robust utility.
pub fn exact_soft_drro_gradient(
    policy: &TabularSoftmaxPolicy,
    prompt: usize,
    r_hat: &RewardVector,
    delta: f64,
    tau: f64,
) -> Result<Vec<f64>> {
    let probs = row_inputs(policy, prompt, r_hat)?;
    if !(tau > 0.0) {
        return Err(invalid("tau", format!("must be > 0, got {tau}")));
    }
    let sigma = crate::shaping::soft_adversary(r_hat.as_slice(), &probs, delta, tau)?;
    let shaped: Vec<f64> = r_hat.as_slice().iter().zip(&sigma).map(|(r, s)| r + delta * s).collect();
    Ok(softmax_score_gradient(&probs, &shaped))
}

/// Single-draw score-function estimate `r̂_y (e_y − π)` of the nominal gradient.
pub fn sampled_nominal_gradient<R: Rng + ?Sized>(
    policy: &TabularSoftmaxPolicy,
    prompt: usize,
    r_hat: &RewardVector,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let probs = row_inputs(policy, prompt, r_hat)?;
    let y = sample_categorical(&probs, rng);
    let reward = r_hat.as_slice()[y];
    Ok(probs.iter().enumerate().map(|(j, p)| reward * (if j == y { 1.0 } else { 0.0 } - p)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simplex::{hard_utility, soft_utility, AmbiguityBudget};

    fn one_row(logits: &[f64]) -> TabularSoftmaxPolicy {
        TabularSoftmaxPolicy::new(vec![logits.to_vec()]).unwrap()
    }

    fn central_difference(logits: &[f64], f: impl Fn(&PolicyVector) -> f64) -> Vec<f64> {
        let h = 1e-5;
        (0..logits.len())
            .map(|j| {
                let mut up = logits.to_vec();
                let mut down = logits.to_vec();
                up[j] += h;
                down[j] -= h;
                let pu = PolicyVector::normalized(softmax(&up)).unwrap();
                let pd = PolicyVector::normalized(softmax(&down)).unwrap();
                (f(&pu) - f(&pd)) / (2.0 * h)
            })
            .collect()
    }

    #[test]
    fn nominal_gradient_examples() {
        let flat = TabularSoftmaxPolicy::uniform(1, 3);
        let r = RewardVector::new(vec![2.0; 3]).unwrap();
        assert!(exact_nominal_gradient(&flat, 0, &r).unwrap().iter().all(|g| g.abs() < 1e-15));

        let two = one_row(&[0.0, 0.0]);
        let g = exact_nominal_gradient(&two, 0, &RewardVector::new(vec![1.0, 0.0]).unwrap()).unwrap();
        assert!((g[0] - 0.25).abs() < 1e-15 && (g[1] + 0.25).abs() < 1e-15);
    }

    #[test]
    fn hard_gradient_matches_finite_differences() {
        let logits = [0.0; 4];
        let pol = one_row(&logits);
        let r = RewardVector::new(vec![4.0, 3.0, 2.0, 1.0]).unwrap();
        let g = exact_hard_drro_gradient(&pol, 0, &r, 2.0).unwrap();
        let fd = central_difference(&logits, |p| hard_utility(p, &r, AmbiguityBudget::new(2.0).unwrap()).unwrap());
        for (a, b) in g.iter().zip(&fd) {
            assert!((a - b).abs() < 1e-5, "{a} vs {b}");
        }
        let zero = exact_hard_drro_gradient(&pol, 0, &r, 0.0).unwrap();
        assert_eq!(zero, exact_nominal_gradient(&pol, 0, &r).unwrap());
    }

    #[test]
    fn hard_gradient_rejects_exact_tie() {
        let pol = one_row(&[0.0, 0.0]);
        let r = RewardVector::new(vec![1.0, 1.0]).unwrap();
        assert!(matches!(exact_hard_drro_gradient(&pol, 0, &r, 0.5), Err(DrroError::TiedMaximizer(0, 1))));
    }

    #[test]
    fn soft_gradient_examples() {
        let logits = [0.0; 4];
        let pol = one_row(&logits);
        let r = RewardVector::new(vec![4.0, 3.0, 2.0, 1.0]).unwrap();
        let g = exact_soft_drro_gradient(&pol, 0, &r, 2.0, 2.0).unwrap();
        let fd = central_difference(&logits, |p| soft_utility(p, &r, AmbiguityBudget::new(2.0).unwrap(), 2.0).unwrap());
        for (a, b) in g.iter().zip(&fd) {
            assert!((a - b).abs() <= 1e-5 * b.abs().max(1e-3), "{a} vs {b}");
        }
        assert_eq!(
            exact_soft_drro_gradient(&pol, 0, &r, 0.0, 1.0).unwrap(),
            exact_nominal_gradient(&pol, 0, &r).unwrap()
        );
        let hard = exact_hard_drro_gradient(&pol, 0, &r, 2.0).unwrap();
        let cold = exact_soft_drro_gradient(&pol, 0, &r, 2.0, 1e-4).unwrap();
        for (a, b) in hard.iter().zip(&cold) {
            assert!((a - b).abs() < 1e-3);
        }
        assert!(exact_soft_drro_gradient(&pol, 0, &r, 2.0, 0.0).is_err());
    }

    #[test]
    fn rows_and_sampling() {
        let p = TabularSoftmaxPolicy::new(vec![vec![0.0, 1000.0], vec![-1.0, 1.0]]).unwrap();
        assert_eq!(p.probs(0), vec![0.0, 1.0]);
        let lp = p.log_probs(1);
        assert!((lp[0].exp() + lp[1].exp() - 1.0).abs() < 1e-15);
        let mut rng = crate::rng::stream(3, 0);
        assert!((0..100).all(|_| p.sample(0, &mut rng) == 1));
        assert!(TabularSoftmaxPolicy::new(vec![vec![0.0], vec![0.0, 1.0]]).is_err());
    }
}
