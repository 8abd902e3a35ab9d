//! Coverage-weighted norms, concentrability coefficients, and the value- and
//! regret-robust certificates over a mean weighted-ℓ1 confidence set.
//!
//! A policy profile is one [`PolicyVector`] per prompt. Prompt weights are a
//! distribution over prompts; the confidence set is
//! `{ r : Σₓ wₓ Σ_y μₓ(y) |r(x,y) − r̂(x,y)| ≤ ε }`.

use serde::{Deserialize, Serialize};

use crate::error::{check_len, invalid, DrroError, Result};
use crate::numeric::dot;
use crate::simplex::{PolicyVector, RewardVector};

fn check_coverage(mu: &PolicyVector) -> Result<()> {
    if mu.as_slice().iter().any(|m| !(*m > 0.0)) {
        return Err(invalid("coverage", "every coverage entry must be > 0"));
    }
    Ok(())
}

/// `Σᵢ μᵢ |eᵢ|`.
pub fn weighted_l1(e: &[f64], mu: &PolicyVector) -> Result<f64> {
    check_len(mu.len(), e.len())?;
    check_coverage(mu)?;
    Ok(e.iter().zip(mu.as_slice()).map(|(v, m)| m * v.abs()).sum())
}

/// `maxᵢ |vᵢ| / μᵢ`.
pub fn weighted_linf_dual(v: &[f64], mu: &PolicyVector) -> Result<f64> {
    check_len(mu.len(), v.len())?;
    check_coverage(mu)?;
    Ok(v.iter().zip(mu.as_slice()).map(|(x, m)| x.abs() / m).fold(0.0, f64::max))
}

fn check_profile(profile: &[PolicyVector], coverage: &[PolicyVector], weights: &[f64]) -> Result<()> {
    if profile.is_empty() {
        return Err(DrroError::Empty("policy profile"));
    }
    check_len(coverage.len(), profile.len())?;
    check_len(coverage.len(), weights.len())?;
    if weights.iter().any(|w| !(*w >= 0.0)) || !weights.iter().any(|w| *w > 0.0) {
        return Err(invalid("prompt_weights", "must be nonnegative with positive total"));
    }
    for (p, m) in profile.iter().zip(coverage) {
        check_len(m.len(), p.len())?;
    }
    Ok(())
}

/// Largest per-prompt exposure `‖π(x)‖_{∞,μₓ⁻¹}` over prompts with positive weight.
pub fn absolute_concentrability(profile: &[PolicyVector], coverage: &[PolicyVector], weights: &[f64]) -> Result<f64> {
    check_profile(profile, coverage, weights)?;
    let mut c: f64 = 0.0;
    for ((p, mu), w) in profile.iter().zip(coverage).zip(weights) {
        if *w > 0.0 {
            c = c.max(weighted_linf_dual(p.as_slice(), mu)?);
        }
    }
    Ok(c)
}

/// Largest per-prompt exposure of the difference `β(x) − π(x)`.
pub fn relative_concentrability(
    beta: &[PolicyVector],
    pi: &[PolicyVector],
    coverage: &[PolicyVector],
    weights: &[f64],
) -> Result<f64> {
    check_profile(pi, coverage, weights)?;
    check_profile(beta, coverage, weights)?;
    let mut c: f64 = 0.0;
    for (((b, p), mu), w) in beta.iter().zip(pi).zip(coverage).zip(weights) {
        if *w > 0.0 {
            let diff: Vec<f64> = b.as_slice().iter().zip(p.as_slice()).map(|(x, y)| x - y).collect();
            c = c.max(weighted_linf_dual(&diff, mu)?);
        }
    }
    Ok(c)
}

/// Mean weighted-ℓ1 ball around the proxy rewards.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceSet {
    pub epsilon: f64,
    pub center: Vec<RewardVector>,
    pub coverage: Vec<PolicyVector>,
}

impl ConfidenceSet {
    pub fn new(epsilon: f64, center: Vec<RewardVector>, coverage: Vec<PolicyVector>) -> Result<Self> {
        if !(epsilon >= 0.0) || !epsilon.is_finite() {
            return Err(invalid("epsilon", format!("must be finite and >= 0, got {epsilon}")));
        }
        if center.is_empty() {
            return Err(DrroError::Empty("confidence-set center"));
        }
        check_len(center.len(), coverage.len())?;
        for (r, mu) in center.iter().zip(&coverage) {
            check_len(mu.len(), r.len())?;
            check_coverage(mu)?;
        }
        Ok(Self { epsilon, center, coverage })
    }

    pub fn num_prompts(&self) -> usize {
        self.center.len()
    }

    /// `Σₓ wₓ ‖r(x) − r̂(x)‖_{1,μₓ}`.
    pub fn distance(&self, rewards: &[RewardVector], weights: &[f64]) -> Result<f64> {
        check_len(self.num_prompts(), rewards.len())?;
        check_len(self.num_prompts(), weights.len())?;
        let mut total = 0.0;
        for ((r, c), (mu, w)) in rewards.iter().zip(&self.center).zip(self.coverage.iter().zip(weights)) {
            check_len(c.len(), r.len())?;
            let e: Vec<f64> = r.as_slice().iter().zip(c.as_slice()).map(|(a, b)| a - b).collect();
            total += w * weighted_l1(&e, mu)?;
        }
        Ok(total)
    }

    pub fn contains(&self, rewards: &[RewardVector], weights: &[f64]) -> Result<bool> {
        Ok(self.distance(rewards, weights)? <= self.epsilon * (1.0 + 1e-12) + 1e-15)
    }

    /// Extreme rewards `r̂ ± (ε / (wₓ μₓ(y))) e_{x,y}` at every supported coordinate.
    pub fn single_coordinate_extremes(&self, weights: &[f64]) -> Result<Vec<Vec<RewardVector>>> {
        check_len(self.num_prompts(), weights.len())?;
        let mut out = Vec::new();
        for (x, w) in weights.iter().enumerate() {
            if *w <= 0.0 {
                continue;
            }
            for y in 0..self.center[x].len() {
                let step = self.epsilon / (w * self.coverage[x].as_slice()[y]);
                for sign in [1.0, -1.0] {
                    let mut r = self.center.clone();
                    r[x] = r[x].bumped(y, sign * step);
                    out.push(r);
                }
            }
        }
        Ok(out)
    }
}

/// `J_r(π) = Σₓ wₓ ⟨π(x), r(x)⟩`.
pub fn profile_value(profile: &[PolicyVector], rewards: &[RewardVector], weights: &[f64]) -> Result<f64> {
    check_len(profile.len(), rewards.len())?;
    check_len(profile.len(), weights.len())?;
    let mut v = 0.0;
    for ((p, r), w) in profile.iter().zip(rewards).zip(weights) {
        check_len(r.len(), p.len())?;
        v += w * dot(p.as_slice(), r.as_slice());
    }
    Ok(v)
}

fn check_confidence(profile: &[PolicyVector], confidence: &ConfidenceSet, weights: &[f64]) -> Result<()> {
    check_profile(profile, &confidence.coverage, weights)
}

/// Worst-case value over the confidence set: `J_r̂(π) − ε C∞(π)`.
pub fn dro_certificate(profile: &[PolicyVector], confidence: &ConfidenceSet, weights: &[f64]) -> Result<f64> {
    check_confidence(profile, confidence, weights)?;
    Ok(profile_value(profile, &confidence.center, weights)?
        - confidence.epsilon * absolute_concentrability(profile, &confidence.coverage, weights)?)
}

/// The reward attaining the DRO certificate: all error mass on the most
/// exposed (prompt, response), against the policy.
pub fn dro_adversarial_reward(
    profile: &[PolicyVector],
    confidence: &ConfidenceSet,
    weights: &[f64],
) -> Result<Vec<RewardVector>> {
    check_confidence(profile, confidence, weights)?;
    let (x, y) = most_exposed(profile.iter().map(|p| p.as_slice().to_vec()), confidence, weights)?;
    let mut r = confidence.center.clone();
    let step = confidence.epsilon / (weights[x] * confidence.coverage[x].as_slice()[y]);
    r[x] = r[x].bumped(y, -step);
    Ok(r)
}

/// (prompt, response) maximizing `|v(x,y)| / μₓ(y)` over supported prompts, lowest indices on ties.
fn most_exposed(
    rows: impl Iterator<Item = Vec<f64>>,
    confidence: &ConfidenceSet,
    weights: &[f64],
) -> Result<(usize, usize)> {
    let mut best: Option<(f64, usize, usize)> = None;
    for (x, v) in rows.enumerate() {
        if weights[x] <= 0.0 {
            continue;
        }
        for (y, (val, m)) in v.iter().zip(confidence.coverage[x].as_slice()).enumerate() {
            let score = val.abs() / m;
            if best.is_none_or(|(b, _, _)| score > b) {
                best = Some((score, x, y));
            }
        }
    }
    best.map(|(_, x, y)| (x, y)).ok_or(DrroError::Empty("supported prompts"))
}

/// Finite local policy class: candidate profiles with a label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalPolicySet {
    pub members: Vec<Vec<PolicyVector>>,
    pub label: String,
}

impl LocalPolicySet {
    pub fn new(members: Vec<Vec<PolicyVector>>, label: impl Into<String>) -> Result<Self> {
        let first = members.first().ok_or(DrroError::Empty("candidate set"))?;
        for m in &members {
            check_len(first.len(), m.len())?;
            for (a, b) in m.iter().zip(first) {
                check_len(b.len(), a.len())?;
            }
        }
        Ok(Self { members, label: label.into() })
    }

    /// Single-prompt candidate set of all vertices of the simplex.
    pub fn vertices(n: usize) -> Self {
        Self { members: (0..n).map(|i| vec![PolicyVector::vertex(n, i)]).collect(), label: "vertices".into() }
    }
}

/// Worst-case regret over the confidence set against the candidates:
/// `max_β { J_r̂(β) − J_r̂(π) + ε C_rel(β, π) }`.
pub fn drro_certificate(
    profile: &[PolicyVector],
    candidates: &LocalPolicySet,
    confidence: &ConfidenceSet,
    weights: &[f64],
) -> Result<f64> {
    Ok(drro_certificate_with_argmax(profile, candidates, confidence, weights)?.0)
}

fn drro_certificate_with_argmax(
    profile: &[PolicyVector],
    candidates: &LocalPolicySet,
    confidence: &ConfidenceSet,
    weights: &[f64],
) -> Result<(f64, usize)> {
    check_confidence(profile, confidence, weights)?;
    let base = profile_value(profile, &confidence.center, weights)?;
    let mut best = (f64::NEG_INFINITY, 0);
    for (k, beta) in candidates.members.iter().enumerate() {
        let v = profile_value(beta, &confidence.center, weights)? - base
            + confidence.epsilon * relative_concentrability(beta, profile, &confidence.coverage, weights)?;
        if v > best.0 {
            best = (v, k);
        }
    }
    Ok(best)
}

/// The reward attaining the DRRO certificate against the maximizing comparator.
pub fn drro_adversarial_reward(
    profile: &[PolicyVector],
    candidates: &LocalPolicySet,
    confidence: &ConfidenceSet,
    weights: &[f64],
) -> Result<Vec<RewardVector>> {
    let (_, k) = drro_certificate_with_argmax(profile, candidates, confidence, weights)?;
    let beta = &candidates.members[k];
    let diffs = beta
        .iter()
        .zip(profile)
        .map(|(b, p)| b.as_slice().iter().zip(p.as_slice()).map(|(u, v)| u - v).collect::<Vec<f64>>());
    let (x, y) = most_exposed(diffs, confidence, weights)?;
    let d = beta[x].as_slice()[y] - profile[x].as_slice()[y];
    let step = confidence.epsilon / (weights[x] * confidence.coverage[x].as_slice()[y]);
    let mut r = confidence.center.clone();
    r[x] = r[x].bumped(y, if d >= 0.0 { step } else { -step });
    Ok(r)
}

/// Outcome of checking both regret bounds on one finite instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegretBoundReport {
    pub hypothesis_holds: bool,
    pub true_distance: f64,
    pub optimum_index: usize,
    pub dro_index: usize,
    pub drro_index: usize,
    pub dro_true_regret: f64,
    pub drro_true_regret: f64,
    /// `2ε C∞(π*)`.
    pub dro_bound: f64,
    /// `2ε max_{β plausible} C_rel(β, π*)`.
    pub drro_bound: f64,
    pub plausible_optimal: Vec<usize>,
    pub dro_bound_holds: bool,
    pub drro_bound_holds: bool,
    /// How the plausible-optimal comparators were enumerated.
    pub plausible_set_method: String,
}

const TIE_TOL: f64 = 1e-12;

fn argmax_set(values: &[f64]) -> Vec<usize> {
    let best = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let tol = TIE_TOL * best.abs().max(1.0);
    (0..values.len()).filter(|&i| values[i] >= best - tol).collect()
}

/// Selects the DRO and DRRO candidates, computes their true regrets against
/// the candidate-set optimum under `true_reward`, and checks both bounds.
pub fn verify_regret_bounds(
    candidates: &LocalPolicySet,
    confidence: &ConfidenceSet,
    weights: &[f64],
    true_reward: &[RewardVector],
) -> Result<RegretBoundReport> {
    let true_distance = confidence.distance(true_reward, weights)?;
    let hypothesis_holds = confidence.contains(true_reward, weights)?;
    let members = &candidates.members;

    let true_values: Vec<f64> =
        members.iter().map(|m| profile_value(m, true_reward, weights)).collect::<Result<_>>()?;
    let dro_values: Vec<f64> =
        members.iter().map(|m| dro_certificate(m, confidence, weights)).collect::<Result<_>>()?;
    let drro_values: Vec<f64> =
        members.iter().map(|m| drro_certificate(m, candidates, confidence, weights)).collect::<Result<_>>()?;
    let optimum_index = argmax_set(&true_values)[0];
    let dro_index = argmax_set(&dro_values)[0];
    let neg: Vec<f64> = drro_values.iter().map(|v| -v).collect();
    let drro_index = argmax_set(&neg)[0];

    let mut plausible = Vec::new();
    for r in confidence.single_coordinate_extremes(weights)? {
        let values: Vec<f64> = members.iter().map(|m| profile_value(m, &r, weights)).collect::<Result<_>>()?;
        plausible.extend(argmax_set(&values));
    }
    plausible.extend(argmax_set(&true_values));
    plausible.sort_unstable();
    plausible.dedup();

    let star = &members[optimum_index];
    let eps = confidence.epsilon;
    let dro_bound = 2.0 * eps * absolute_concentrability(star, &confidence.coverage, weights)?;
    let mut radius: f64 = 0.0;
    for &k in &plausible {
        radius = radius.max(relative_concentrability(&members[k], star, &confidence.coverage, weights)?);
    }
    let drro_bound = 2.0 * eps * radius;
    let best = true_values[optimum_index];
    let dro_true_regret = best - true_values[dro_index];
    let drro_true_regret = best - true_values[drro_index];
    let slack = 1e-10 * (1.0 + best.abs());
    Ok(RegretBoundReport {
        hypothesis_holds,
        true_distance,
        optimum_index,
        dro_index,
        drro_index,
        dro_true_regret,
        drro_true_regret,
        dro_bound,
        drro_bound,
        plausible_optimal: plausible,
        dro_bound_holds: dro_true_regret <= dro_bound + slack,
        drro_bound_holds: drro_true_regret <= drro_bound + slack,
        plausible_set_method: "argmax sets at the nominal reward's single-coordinate extremes of the confidence set, plus the true optimum"
            .into(),
    })
}
