//! Grouped rollouts, within-group advantage normalization, the three sampled
//! reward shapers and the clipped completion-level surrogate.

use serde::{Deserialize, Serialize};

use crate::error::{check_len, invalid, DrroError, Result};
use crate::numeric::{argmax_lowest, mean, population_std, softmax};
use crate::policy::TabularSoftmaxPolicy;
use crate::shaping::group_normalize_log;

/// `G` responses sampled for one prompt from the frozen rollout policy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RolloutGroup {
    pub prompt_index: usize,
    pub response_indices: Vec<usize>,
    pub proxy_rewards: Vec<f64>,
    pub rollout_probs: Vec<f64>,
    pub rollout_log_probs: Vec<f64>,
    pub normalized_probs: Vec<f64>,
    pub shaped_rewards: Vec<f64>,
    pub advantages: Vec<f64>,
}

impl RolloutGroup {
    pub fn new(
        prompt_index: usize,
        response_indices: Vec<usize>,
        proxy_rewards: Vec<f64>,
        rollout_log_probs: Vec<f64>,
    ) -> Result<Self> {
        let g = response_indices.len();
        if g == 0 {
            return Err(DrroError::Empty("rollout group"));
        }
        check_len(g, proxy_rewards.len())?;
        check_len(g, rollout_log_probs.len())?;
        if proxy_rewards.iter().any(|r| !r.is_finite()) {
            return Err(DrroError::NonFinite("proxy rewards"));
        }
        let normalized_probs = group_normalize_log(&rollout_log_probs)?;
        Ok(Self {
            prompt_index,
            response_indices,
            rollout_probs: rollout_log_probs.iter().map(|l| l.exp()).collect(),
            shaped_rewards: proxy_rewards.clone(),
            advantages: vec![0.0; g],
            proxy_rewards,
            rollout_log_probs,
            normalized_probs,
        })
    }

    /// Samples `G` responses for `prompt` from `rollout` and scores them with `rewards`.
    pub fn sample<R: rand::Rng + ?Sized>(
        rollout: &TabularSoftmaxPolicy,
        prompt: usize,
        group_size: usize,
        rewards: &[f64],
        rng: &mut R,
    ) -> Result<Self> {
        rollout.check_prompt(prompt)?;
        check_len(rollout.num_responses(), rewards.len())?;
        let probs = rollout.probs(prompt);
        let log_probs = rollout.log_probs(prompt);
        let ids: Vec<usize> = (0..group_size).map(|_| crate::policy::sample_categorical(&probs, rng)).collect();
        Self::new(
            prompt,
            ids.clone(),
            ids.iter().map(|&y| rewards[y]).collect(),
            ids.iter().map(|&y| log_probs[y]).collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.response_indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.response_indices.is_empty()
    }

    /// Ratios `π_θ(y⁽ᵏ⁾|x) / π̄(y⁽ᵏ⁾|x)` at the current parameters.
    pub fn ratios(&self, policy: &TabularSoftmaxPolicy) -> Vec<f64> {
        let log_now = policy.log_probs(self.prompt_index);
        self.response_indices.iter().zip(&self.rollout_log_probs).map(|(&y, old)| (log_now[y] - old).exp()).collect()
    }
}

/// `(r⁽ᵏ⁾ − mean) / (std + ε_adv)` with the population standard deviation.
///
/// An exactly constant group returns exact zeros.
pub fn grpo_advantages(rewards: &[f64], eps_adv: f64) -> Result<Vec<f64>> {
    if rewards.len() < 2 {
        return Err(invalid("group_size", format!("advantages need G >= 2, got {}", rewards.len())));
    }
    if !(eps_adv >= 0.0) {
        return Err(invalid("eps_adv", format!("must be >= 0, got {eps_adv}")));
    }
    if rewards.iter().all(|r| *r == rewards[0]) {
        return Ok(vec![0.0; rewards.len()]);
    }
    let m = mean(rewards);
    let scale = population_std(rewards) + eps_adv;
    Ok(rewards.iter().map(|r| (r - m) / scale).collect())
}

fn check_delta(delta: f64) -> Result<()> {
    if !(delta >= 0.0) || !delta.is_finite() {
        return Err(invalid("delta_scaled", format!("must be finite and >= 0, got {delta}")));
    }
    Ok(())
}

/// Hard bonus: `+δ̃` on the lowest-index maximizer of `r̂⁽ᵏ⁾ − δ̃ π̃⁽ᵏ⁾`.
pub fn shape_hard(group: &RolloutGroup, delta_scaled: f64) -> Result<Vec<f64>> {
    check_delta(delta_scaled)?;
    let scores: Vec<f64> =
        group.proxy_rewards.iter().zip(&group.normalized_probs).map(|(r, p)| r - delta_scaled * p).collect();
    let winner = argmax_lowest(&scores);
    let mut shaped = group.proxy_rewards.clone();
    shaped[winner] += delta_scaled;
    Ok(shaped)
}

/// SNIS weights of the soft bonus, `w̃ ∝ exp((r̂ − δ̃π̃)/τ) / π̃`.
pub fn soft_bonus_weights(group: &RolloutGroup, delta_scaled: f64, tau: f64) -> Result<Vec<f64>> {
    check_delta(delta_scaled)?;
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(invalid("tau", format!("must be > 0, got {tau}")));
    }
    if group.normalized_probs.iter().any(|p| !(*p > 0.0)) {
        return Err(invalid("normalized_probs", "soft bonus needs every normalized probability > 0"));
    }
    let logs: Vec<f64> = group
        .proxy_rewards
        .iter()
        .zip(&group.normalized_probs)
        .map(|(r, p)| (r - delta_scaled * p) / tau - p.ln())
        .collect();
    Ok(softmax(&logs))
}

/// Soft bonus: `r̂⁽ᵏ⁾ + δ̃ G w̃⁽ᵏ⁾ π̃⁽ᵏ⁾`.
pub fn shape_soft(group: &RolloutGroup, delta_scaled: f64, tau: f64) -> Result<Vec<f64>> {
    let w = soft_bonus_weights(group, delta_scaled, tau)?;
    let g = group.len() as f64;
    Ok(group
        .proxy_rewards
        .iter()
        .zip(w.iter().zip(&group.normalized_probs))
        .map(|(r, (w, p))| r + delta_scaled * g * w * p)
        .collect())
}

/// Value-robust penalty: `−δ̃` on the group's most probable response.
pub fn shape_dro(group: &RolloutGroup, delta_scaled: f64) -> Result<Vec<f64>> {
    check_delta(delta_scaled)?;
    let top = argmax_lowest(&group.normalized_probs);
    let mut shaped = group.proxy_rewards.clone();
    shaped[top] -= delta_scaled;
    Ok(shaped)
}

/// Surrogate value and its ascent gradient, laid out like the policy logits.
#[derive(Debug, Clone, PartialEq)]
pub struct SurrogateOutput {
    pub loss: f64,
    pub gradient: Vec<f64>,
}

/// Mean over groups and completions of `min(ρA, clip(ρ, 1−ε, 1+ε)A)`.
///
/// Advantages are read from each group and treated as constants. A term whose
/// minimum is attained by the clipped product outside the clip band
/// contributes no gradient.
pub fn clipped_surrogate(
    groups: &[RolloutGroup],
    policy: &TabularSoftmaxPolicy,
    eps_clip: f64,
) -> Result<SurrogateOutput> {
    if !(eps_clip > 0.0 && eps_clip < 1.0) {
        return Err(invalid("eps_clip", format!("must lie in (0, 1), got {eps_clip}")));
    }
    let n = policy.num_responses();
    let mut gradient = vec![0.0; policy.num_prompts() * n];
    let total: usize = groups.iter().map(RolloutGroup::len).sum();
    if total == 0 {
        return Ok(SurrogateOutput { loss: 0.0, gradient });
    }
    let scale = 1.0 / total as f64;
    let mut loss = 0.0;
    for group in groups {
        policy.check_prompt(group.prompt_index)?;
        check_len(group.len(), group.advantages.len())?;
        let probs = policy.probs(group.prompt_index);
        let row = &mut gradient[group.prompt_index * n..(group.prompt_index + 1) * n];
        for ((&y, &rho), &adv) in group.response_indices.iter().zip(&group.ratios(policy)).zip(&group.advantages) {
            let unclipped = rho * adv;
            let clipped = rho.clamp(1.0 - eps_clip, 1.0 + eps_clip) * adv;
            loss += unclipped.min(clipped);
            let inside = (1.0 - eps_clip..=1.0 + eps_clip).contains(&rho);
            if unclipped <= clipped || inside {
                // ∇ρ = ρ (e_y − π) for a softmax row.
                let coeff = scale * adv * rho;
                for (j, (g, p)) in row.iter_mut().zip(&probs).enumerate() {
                    *g += coeff * (if j == y { 1.0 } else { 0.0 } - p);
                }
            }
        }
    }
    Ok(SurrogateOutput { loss: loss * scale, gradient })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn group(rewards: &[f64], probs: &[f64]) -> RolloutGroup {
        RolloutGroup::new(0, (0..rewards.len()).collect(), rewards.to_vec(), probs.iter().map(|p| p.ln()).collect())
            .unwrap()
    }

    #[test]
    fn advantage_examples() {
        let a = grpo_advantages(&[1.0, 2.0, 3.0], 0.0).unwrap();
        let s = (2.0f64 / 3.0).sqrt();
        assert!((a[0] + 1.0 / s).abs() < 1e-12 && a[1].abs() < 1e-15 && (a[2] - 1.0 / s).abs() < 1e-12);
        assert!((a[2] - 1.224744871391589).abs() < 1e-12);
        assert_eq!(grpo_advantages(&[0.3; 5], 1e-6).unwrap(), vec![0.0; 5]);
        let b = grpo_advantages(&[0.0, 1.0], 1e-6).unwrap();
        assert!((b[1] - 0.5 / 0.500001).abs() < 1e-15 && (b[0] + b[1]).abs() < 1e-15);
        assert!(grpo_advantages(&[1.0], 1e-6).is_err());
    }

    #[test]
    fn hard_shaping_examples() {
        let g = group(&[4.0, 3.0], &[0.9, 0.1]);
        assert_eq!(shape_hard(&g, 20.0).unwrap(), vec![4.0, 23.0]);
        assert_eq!(shape_hard(&g, 0.0).unwrap(), g.proxy_rewards);
        let sym = group(&[1.0, 1.0, 1.0], &[0.2, 0.2, 0.2]);
        assert_eq!(shape_hard(&sym, 3.0).unwrap(), vec![4.0, 1.0, 1.0]);
    }

    #[test]
    fn soft_shaping_examples() {
        let sym = group(&[1.0; 4], &[0.1; 4]);
        for v in shape_soft(&sym, 8.0, 2.0).unwrap() {
            assert!((v - (1.0 + 8.0 / 4.0)).abs() < 1e-12);
        }
        let g = group(&[1.0, 0.0], &[0.5, 0.5]);
        let w = soft_bonus_weights(&g, 0.0, 1.0).unwrap();
        assert!((w[0] - 0.7310585786300049).abs() < 1e-12);
        assert_eq!(shape_soft(&g, 0.0, 1.0).unwrap(), vec![1.0, 0.0]);

        let h = group(&[4.0, 3.0, 1.0], &[0.6, 0.3, 0.1]);
        let cold = shape_soft(&h, 2.0, 1e-4).unwrap();
        // Winner of 4−1.2, 3−0.6, 1−0.2 is index 0; bonus δ̃ G π̃ on it.
        assert!((cold[0] - (4.0 + 2.0 * 3.0 * 0.6)).abs() < 1e-9);
        assert!((cold[1] - 3.0).abs() < 1e-9 && (cold[2] - 1.0).abs() < 1e-9);
        assert!(shape_soft(&h, 2.0, 0.0).is_err());
    }

    #[test]
    fn dro_shaping_examples() {
        let g = group(&[4.0, 3.0], &[0.9, 0.1]);
        assert_eq!(shape_dro(&g, 2.0).unwrap(), vec![2.0, 3.0]);
        assert_eq!(shape_dro(&g, 0.0).unwrap(), g.proxy_rewards);
        let u = group(&[1.0, 2.0], &[0.5, 0.5]);
        assert_eq!(shape_dro(&u, 1.0).unwrap(), vec![0.0, 2.0]);
    }

    fn single_completion(ratio: f64, adv: f64) -> (TabularSoftmaxPolicy, RolloutGroup) {
        let policy = TabularSoftmaxPolicy::uniform(1, 2);
        let mut g = RolloutGroup::new(0, vec![0], vec![0.0], vec![(0.5f64 / ratio).ln()]).unwrap();
        g.advantages = vec![adv];
        (policy, g)
    }

    #[test]
    fn surrogate_clipping_examples() {
        let (p, g) = single_completion(1.5, 1.0);
        let out = clipped_surrogate(&[g], &p, 0.2).unwrap();
        assert!((out.loss - 1.2).abs() < 1e-12);
        assert!(out.gradient.iter().all(|v| *v == 0.0));

        let (p, g) = single_completion(0.5, -1.0);
        let out = clipped_surrogate(&[g], &p, 0.2).unwrap();
        assert!((out.loss + 0.8).abs() < 1e-12);
        assert!(out.gradient.iter().all(|v| *v == 0.0));

        // Unclipped branch active: A > 0 with ρ below the band.
        let (p, g) = single_completion(0.5, 1.0);
        let out = clipped_surrogate(&[g], &p, 0.2).unwrap();
        assert!((out.loss - 0.5).abs() < 1e-12);
        assert!((out.gradient[0] - 0.25).abs() < 1e-12 && (out.gradient[1] + 0.25).abs() < 1e-12);
    }

    #[test]
    fn surrogate_at_rollout_parameters() {
        let policy = TabularSoftmaxPolicy::new(vec![vec![0.3, -0.2, 0.1]]).unwrap();
        let lp = policy.log_probs(0);
        let ids = vec![0, 2, 2, 1];
        let mut g =
            RolloutGroup::new(0, ids.clone(), vec![1.0, 0.0, 0.5, 2.0], ids.iter().map(|&y| lp[y]).collect()).unwrap();
        assert!(g.ratios(&policy).iter().all(|r| (r - 1.0).abs() < 1e-15));
        g.advantages = grpo_advantages(&g.proxy_rewards, 1e-6).unwrap();
        let out = clipped_surrogate(std::slice::from_ref(&g), &policy, 0.2).unwrap();
        assert!(out.loss.abs() < 1e-12);
        let probs = policy.probs(0);
        let mut expect = vec![0.0; 3];
        for (&y, a) in ids.iter().zip(&g.advantages) {
            for j in 0..3 {
                expect[j] += a * (if j == y { 1.0 } else { 0.0 } - probs[j]) / 4.0;
            }
        }
        for (a, b) in out.gradient.iter().zip(&expect) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
