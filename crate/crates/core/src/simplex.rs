//! Exact promptwise regret-robust mathematics on the probability simplex.
//!
//! For a fixed prompt with proxy rewards `r̂ ∈ ℝⁿ` and an ℓ1 budget `δ`, the
//! adversary may move the reward vector anywhere in `{s : ‖s − r̂‖₁ ≤ δ}`. The
//! worst-case regret of a policy `π` then has the closed form
//!
//! ```text
//! δ + maxᵢ (r̂ᵢ − δ πᵢ) − ⟨π, r̂⟩
//! ```
//!
//! with the whole budget placed on one response. The quantity `r̂ᵢ − δ πᵢ` is
//! the *uncovered reward* of response `i`. Minimizing the worst case gives a
//! water-filling policy: every non-top response gets `(r̂ᵢ − t*)₊ / δ` and the
//! leftover mass goes to the top response.
//!
//! Every argmax in this module breaks ties toward the lowest index.

use serde::{Deserialize, Serialize};

use crate::error::{check_len, invalid, DrroError, Result};
use crate::numeric::{argmax_lowest, dot, log_sum_exp, max};

/// Absolute tolerance for simplex membership checks.
pub const SIMPLEX_TOL: f64 = 1e-10;

/// Finite promptwise reward values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct RewardVector(Vec<f64>);

impl RewardVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(DrroError::Empty("reward vector"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(DrroError::NonFinite("reward vector"));
        }
        Ok(Self(values))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `max − min` of the entries.
    pub fn spread(&self) -> f64 {
        let lo = self.0.iter().copied().fold(f64::INFINITY, f64::min);
        max(&self.0) - lo
    }

    /// Copy with `amount` added to coordinate `index`.
    pub fn bumped(&self, index: usize, amount: f64) -> Self {
        let mut v = self.0.clone();
        v[index] += amount;
        Self(v)
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl TryFrom<Vec<f64>> for RewardVector {
    type Error = DrroError;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<RewardVector> for Vec<f64> {
    fn from(r: RewardVector) -> Self {
        r.0
    }
}

/// A probability vector on the simplex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct PolicyVector(Vec<f64>);

impl PolicyVector {
    /// Validates nonnegativity and unit mass (within 1e-10).
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(DrroError::Empty("policy vector"));
        }
        if probs.iter().any(|p| !p.is_finite()) {
            return Err(DrroError::NonFinite("policy vector"));
        }
        if let Some(p) = probs.iter().find(|p| **p < -SIMPLEX_TOL) {
            return Err(DrroError::NotSimplex(format!("negative entry {p}")));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > SIMPLEX_TOL {
            return Err(DrroError::NotSimplex(format!("entries sum to {total}")));
        }
        Ok(Self(probs.into_iter().map(|p| p.max(0.0)).collect()))
    }

    /// Rescales a nonnegative vector with positive mass onto the simplex.
    pub fn normalized(weights: Vec<f64>) -> Result<Self> {
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(DrroError::NotSimplex("weights must be finite and nonnegative".into()));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(DrroError::NotSimplex("weights have zero mass".into()));
        }
        Ok(Self(weights.into_iter().map(|w| w / total).collect()))
    }

    pub fn uniform(n: usize) -> Self {
        Self(vec![1.0 / n as f64; n])
    }

    pub fn vertex(n: usize, index: usize) -> Self {
        let mut v = vec![0.0; n];
        v[index] = 1.0;
        Self(v)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn l1_distance(&self, other: &PolicyVector) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| (a - b).abs()).sum()
    }

    /// Number of strictly positive entries.
    pub fn support_size(&self) -> usize {
        self.0.iter().filter(|p| **p > 0.0).count()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl TryFrom<Vec<f64>> for PolicyVector {
    type Error = DrroError;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<PolicyVector> for Vec<f64> {
    fn from(p: PolicyVector) -> Self {
        p.0
    }
}

/// ℓ1 reward-mass budget `δ ≥ 0`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct AmbiguityBudget(f64);

impl AmbiguityBudget {
    pub fn new(delta: f64) -> Result<Self> {
        if !delta.is_finite() || delta < 0.0 {
            return Err(invalid("delta", format!("must be finite and >= 0, got {delta}")));
        }
        Ok(Self(delta))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Output of the water-filling solver.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustSolution {
    pub policy: PolicyVector,
    /// Root of `Σ (r̂ᵢ − t)₊ = δ`.
    pub t0: f64,
    /// Optimal water level.
    pub t_star: f64,
    pub worst_case_regret: f64,
    /// `maxᵢ (r̂ᵢ − δ πᵢ)` at the returned policy.
    pub uncovered_max: f64,
    /// Lowest-index maximizer of the uncovered rewards at the returned policy.
    pub adversary_index: usize,
    /// `sort_permutation[k]` is the input index of the k-th largest reward.
    pub sort_permutation: Vec<usize>,
}

fn same_len(pi: &PolicyVector, r_hat: &RewardVector) -> Result<()> {
    check_len(r_hat.len(), pi.len())
}

/// `maxᵢ sᵢ − ⟨π, s⟩`.
pub fn regret(pi: &PolicyVector, s: &RewardVector) -> Result<f64> {
    same_len(pi, s)?;
    Ok((max(s.as_slice()) - dot(pi.as_slice(), s.as_slice())).max(0.0))
}

/// Uncovered rewards `r̂ᵢ − δ πᵢ`.
pub fn uncovered_rewards(pi: &PolicyVector, r_hat: &RewardVector, delta: f64) -> Vec<f64> {
    r_hat.as_slice().iter().zip(pi.as_slice()).map(|(r, p)| r - delta * p).collect()
}

/// Worst-case regret over the ℓ1 ball of radius `δ` and the adversary's target coordinate.
pub fn worst_case_regret(pi: &PolicyVector, r_hat: &RewardVector, delta: AmbiguityBudget) -> Result<(f64, usize)> {
    same_len(pi, r_hat)?;
    let d = delta.value();
    let uncovered = uncovered_rewards(pi, r_hat, d);
    let k = argmax_lowest(&uncovered);
    Ok((d + uncovered[k] - dot(pi.as_slice(), r_hat.as_slice()), k))
}

/// Hard robust utility `⟨π, r̂⟩ − maxᵢ (r̂ᵢ − δ πᵢ)`.
pub fn hard_utility(pi: &PolicyVector, r_hat: &RewardVector, delta: AmbiguityBudget) -> Result<f64> {
    same_len(pi, r_hat)?;
    let uncovered = uncovered_rewards(pi, r_hat, delta.value());
    Ok(dot(pi.as_slice(), r_hat.as_slice()) - max(&uncovered))
}

/// Log-sum-exp relaxation of [`hard_utility`] at temperature `tau`.
pub fn soft_utility(pi: &PolicyVector, r_hat: &RewardVector, delta: AmbiguityBudget, tau: f64) -> Result<f64> {
    same_len(pi, r_hat)?;
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(invalid("tau", format!("must be > 0, got {tau}")));
    }
    let scaled: Vec<f64> = uncovered_rewards(pi, r_hat, delta.value()).into_iter().map(|u| u / tau).collect();
    Ok(dot(pi.as_slice(), r_hat.as_slice()) - tau * log_sum_exp(&scaled))
}

/// Vertex at the lowest-index maximizer of `r̂`.
pub fn greedy_policy(r_hat: &RewardVector) -> PolicyVector {
    PolicyVector::vertex(r_hat.len(), argmax_lowest(r_hat.as_slice()))
}

/// Indices sorted by descending reward; equal rewards keep input order.
pub fn descending_order(values: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
    idx
}

/// Root of the piecewise-linear equation `Σ (sᵢ − t)₊ = δ` for descending `sorted`.
fn base_level(sorted: &[f64], delta: f64) -> f64 {
    let n = sorted.len();
    let mut prefix = 0.0;
    for k in 1..=n {
        prefix += sorted[k - 1];
        // Mass above the next breakpoint with the top k responses active.
        let next_fits = k == n || {
            let below = sorted[k];
            prefix - k as f64 * below >= delta
        };
        if next_fits {
            return (prefix - delta) / k as f64;
        }
    }
    unreachable!("k == n always terminates the scan")
}

/// Slope mass `Σ_{sᵢ > t} (s₁ − sᵢ)`.
fn slope_mass(sorted: &[f64], t: f64) -> f64 {
    let top = sorted[0];
    sorted.iter().take_while(|s| **s > t).map(|s| top - s).sum()
}

/// Optimal water-filling policy for budget `δ > 0`.
///
/// Responses tied with the top reward form one block and share the leftover
/// mass equally; for a unique top response this is exactly the textbook
/// allocation `π₁ = 1 − Σ_{i≥2} (r̂ᵢ − t*)₊ / δ`.
pub fn solve_water_filling(r_hat: &RewardVector, delta: AmbiguityBudget) -> Result<RobustSolution> {
    let d = delta.value();
    if d <= 0.0 {
        return Err(DrroError::NonPositiveBudget(d));
    }
    let values = r_hat.as_slice();
    let n = values.len();
    let perm = descending_order(values);
    let sorted: Vec<f64> = perm.iter().map(|&i| values[i]).collect();

    let t0 = base_level(&sorted, d);

    // The slope condition is monotone in t and constant between breakpoints,
    // so the infimum is t0 or the smallest feasible breakpoint above it.
    let mut t_star = t0;
    if slope_mass(&sorted, t0) > d {
        let mut candidates: Vec<f64> = sorted.iter().copied().filter(|s| *s >= t0).collect();
        candidates.dedup();
        candidates.reverse();
        t_star = candidates.into_iter().find(|&t| slope_mass(&sorted, t) <= d).unwrap_or(sorted[0]);
    }

    let top = sorted[0];
    let top_block = sorted.iter().take_while(|s| **s == top).count();
    let mut sorted_policy: Vec<f64> = sorted.iter().map(|s| (s - t_star).max(0.0) / d).collect();
    let leftover = 1.0 - sorted_policy.iter().sum::<f64>();
    for p in sorted_policy.iter_mut().take(top_block) {
        *p += leftover.max(0.0) / top_block as f64;
    }

    let mut probs = vec![0.0; n];
    for (k, &i) in perm.iter().enumerate() {
        probs[i] = sorted_policy[k];
    }
    let policy = PolicyVector::normalized(probs)?;
    let uncovered = uncovered_rewards(&policy, r_hat, d);
    let adversary_index = argmax_lowest(&uncovered);
    let uncovered_max = uncovered[adversary_index];
    let worst_case_regret = d + uncovered_max - dot(policy.as_slice(), values);

    Ok(RobustSolution { policy, t0, t_star, worst_case_regret, uncovered_max, adversary_index, sort_permutation: perm })
}

/// Water-filling for `δ > 0`, greedy vertex for `δ = 0`.
pub fn solve_or_greedy(r_hat: &RewardVector, delta: AmbiguityBudget) -> Result<PolicyVector> {
    if delta.value() == 0.0 {
        Ok(greedy_policy(r_hat))
    } else {
        Ok(solve_water_filling(r_hat, delta)?.policy)
    }
}

/// Norm order of an ℓp ambiguity ball.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum NormOrder {
    One,
    Infinity,
    P(f64),
}

impl NormOrder {
    pub fn from_p(p: f64) -> Result<Self> {
        if p.is_infinite() && p > 0.0 {
            Ok(NormOrder::Infinity)
        } else if p == 1.0 {
            Ok(NormOrder::One)
        } else if p > 1.0 && p.is_finite() {
            Ok(NormOrder::P(p))
        } else {
            Err(invalid("p", format!("norm order must be >= 1, got {p}")))
        }
    }

    /// Dual exponent `q` with `1/p + 1/q = 1`.
    pub fn dual(self) -> f64 {
        match self {
            NormOrder::One => f64::INFINITY,
            NormOrder::Infinity => 1.0,
            NormOrder::P(p) => p / (p - 1.0),
        }
    }
}

fn q_norm(v: &[f64], q: f64) -> f64 {
    if q.is_infinite() {
        v.iter().fold(0.0, |m, x| m.max(x.abs()))
    } else if q == 1.0 {
        v.iter().map(|x| x.abs()).sum()
    } else {
        v.iter().map(|x| x.abs().powf(q)).sum::<f64>().powf(1.0 / q)
    }
}

/// Vertex bonus factor `‖eᵢ − π‖_q` of response `index` under an ℓp ball.
pub fn vertex_bonus(pi: &PolicyVector, index: usize, order: NormOrder) -> f64 {
    let diff: Vec<f64> = pi.as_slice().iter().enumerate().map(|(j, p)| if j == index { 1.0 - p } else { -p }).collect();
    q_norm(&diff, order.dual())
}

/// Worst-case regret over the ℓp ball `‖Δ‖_p ≤ δ`.
pub fn lp_robust_regret(pi: &PolicyVector, r_hat: &RewardVector, delta: f64, order: NormOrder) -> Result<f64> {
    same_len(pi, r_hat)?;
    if let NormOrder::P(p) = order {
        if !(p >= 1.0) {
            return Err(invalid("p", format!("norm order must be >= 1, got {p}")));
        }
    }
    let value = dot(pi.as_slice(), r_hat.as_slice());
    Ok((0..pi.len())
        .map(|i| r_hat.as_slice()[i] - value + delta * vertex_bonus(pi, i, order))
        .fold(f64::NEG_INFINITY, f64::max))
}

/// Largest dimension accepted by [`brute_force_drro`].
pub const BRUTE_FORCE_MAX_DIM: usize = 6;

/// Lattice search over `{k / resolution}` on the simplex minimizing the
/// closed-form worst-case regret. Independent of the water-filling solver.
pub fn brute_force_drro(r_hat: &RewardVector, delta: f64, resolution: usize) -> Result<(PolicyVector, f64)> {
    let n = r_hat.len();
    if n > BRUTE_FORCE_MAX_DIM {
        return Err(invalid("n", format!("lattice search supports n <= {BRUTE_FORCE_MAX_DIM}, got {n}")));
    }
    if resolution < 50 {
        return Err(invalid("resolution", format!("must be >= 50, got {resolution}")));
    }
    AmbiguityBudget::new(delta)?;
    let r = r_hat.as_slice();
    let step = 1.0 / resolution as f64;
    let mut counts = vec![0usize; n];
    let mut best = (f64::INFINITY, vec![0usize; n]);

    // Enumerate compositions of `resolution` into n nonnegative parts.
    fn recurse(
        pos: usize,
        remaining: usize,
        counts: &mut [usize],
        r: &[f64],
        delta: f64,
        step: f64,
        best: &mut (f64, Vec<usize>),
    ) {
        let n = counts.len();
        if pos == n - 1 {
            counts[pos] = remaining;
            let mut value = 0.0;
            let mut worst = f64::NEG_INFINITY;
            for i in 0..n {
                let p = counts[i] as f64 * step;
                value += p * r[i];
                worst = worst.max(r[i] - delta * p);
            }
            let wcr = delta + worst - value;
            if wcr < best.0 {
                best.0 = wcr;
                best.1.copy_from_slice(counts);
            }
            return;
        }
        for c in 0..=remaining {
            counts[pos] = c;
            recurse(pos + 1, remaining - c, counts, r, delta, step, best);
        }
    }
    recurse(0, resolution, &mut counts, r, delta, step, &mut best);

    let policy = PolicyVector::normalized(best.1.iter().map(|&c| c as f64).collect())?;
    Ok((policy, best.0))
}

/// Mean over prompts of promptwise worst-case regrets for a product policy.
pub fn product_worst_case_regret(
    policies: &[PolicyVector],
    rewards: &[RewardVector],
    delta: AmbiguityBudget,
) -> Result<f64> {
    check_len(rewards.len(), policies.len())?;
    if policies.is_empty() {
        return Err(DrroError::Empty("prompt set"));
    }
    let mut total = 0.0;
    for (pi, r) in policies.iter().zip(rewards) {
        total += worst_case_regret(pi, r, delta)?.0;
    }
    Ok(total / policies.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(v: &[f64]) -> RewardVector {
        RewardVector::new(v.to_vec()).unwrap()
    }
    fn p(v: &[f64]) -> PolicyVector {
        PolicyVector::new(v.to_vec()).unwrap()
    }
    fn b(d: f64) -> AmbiguityBudget {
        AmbiguityBudget::new(d).unwrap()
    }

    /// Worst case by enumerating vertex benchmarks and single-coordinate adversaries.
    fn enumerated_worst_case(pi: &PolicyVector, r_hat: &RewardVector, delta: f64) -> (f64, usize) {
        let mut best = (f64::NEG_INFINITY, 0);
        for k in 0..r_hat.len() {
            let v = regret(pi, &r_hat.bumped(k, delta)).unwrap();
            if v > best.0 {
                best = (v, k);
            }
        }
        best
    }

    #[test]
    fn regret_examples() {
        assert_eq!(regret(&p(&[1.0, 0.0, 0.0, 0.0]), &r(&[4.0, 3.0, 2.0, 1.0])).unwrap(), 0.0);
        assert_eq!(regret(&p(&[0.5, 0.5]), &r(&[1.0, 0.0])).unwrap(), 0.5);
        let v = regret(&p(&[0.75, 0.25, 0.0, 0.0]), &r(&[4.0, 3.0, 2.0, 1.0])).unwrap();
        assert!((v - 0.25).abs() < 1e-15);
        assert!(matches!(regret(&p(&[1.0]), &r(&[1.0, 2.0])), Err(DrroError::DimensionMismatch { .. })));
    }

    #[test]
    fn worst_case_examples() {
        let pi = p(&[0.75, 0.25, 0.0, 0.0]);
        let rh = r(&[4.0, 3.0, 2.0, 1.0]);
        let (v, k) = worst_case_regret(&pi, &rh, b(2.0)).unwrap();
        let oracle = enumerated_worst_case(&pi, &rh, 2.0);
        assert!((v - 0.75).abs() < 1e-12);
        assert!((oracle.0 - 0.75).abs() < 1e-12);
        // Coordinates 0 and 1 tie at 2.5; the lowest index wins.
        assert_eq!(k, 0);

        let (v0, _) = worst_case_regret(&pi, &rh, b(0.0)).unwrap();
        assert!((v0 - (4.0 - 3.75)).abs() < 1e-15);

        let (v, _) = worst_case_regret(&p(&[0.5, 0.5]), &r(&[1.0, 0.0]), b(1.0)).unwrap();
        assert!((v - 1.0).abs() < 1e-15);
    }

    #[test]
    fn worst_case_matches_grid_over_l1_ball() {
        // Grid over Δ with ‖Δ‖₁ ≤ 1 in two dimensions at spacing 1e-3.
        let pi = p(&[0.5, 0.5]);
        let rh = r(&[1.0, 0.0]);
        let mut best = f64::NEG_INFINITY;
        let steps = 1000;
        for a in -steps..=steps {
            let d1 = a as f64 / steps as f64;
            let rest = 1.0 - d1.abs();
            for sgn in [-1.0, 1.0] {
                let s = r(&[1.0 + d1, sgn * rest]);
                best = best.max(regret(&pi, &s).unwrap());
            }
        }
        let (v, _) = worst_case_regret(&pi, &rh, b(1.0)).unwrap();
        assert!((best - v).abs() < 1e-3);
        assert!(best <= v + 1e-12);
    }

    #[test]
    fn hard_utility_examples() {
        let pi = p(&[0.75, 0.25, 0.0, 0.0]);
        let rh = r(&[4.0, 3.0, 2.0, 1.0]);
        assert!((hard_utility(&pi, &rh, b(2.0)).unwrap() - 1.25).abs() < 1e-12);
        assert!((hard_utility(&pi, &rh, b(0.0)).unwrap() - (3.75 - 4.0)).abs() < 1e-12);
        let u = hard_utility(&p(&[0.5, 0.5]), &r(&[1.0, 1.0]), b(2.0)).unwrap();
        assert!((u - 1.0).abs() < 1e-15);
        let wcr = worst_case_regret(&pi, &rh, b(2.0)).unwrap().0;
        assert!((hard_utility(&pi, &rh, b(2.0)).unwrap() - (2.0 - wcr)).abs() < 1e-12);
    }

    #[test]
    fn soft_utility_examples() {
        let pi = p(&[0.75, 0.25, 0.0, 0.0]);
        let rh = r(&[4.0, 3.0, 2.0, 1.0]);
        let near_hard = soft_utility(&pi, &rh, b(2.0), 1e-6).unwrap();
        assert!((near_hard - 1.25).abs() < 1e-4);

        let single = soft_utility(&p(&[1.0]), &r(&[3.0]), b(0.5), 7.0).unwrap();
        assert!((single - (3.0 - 2.5)).abs() < 1e-12);

        assert!(soft_utility(&pi, &rh, b(2.0), 0.0).is_err());
        assert!(soft_utility(&pi, &rh, b(2.0), -1.0).is_err());
        // Overflow safety at small temperature.
        assert!(soft_utility(&pi, &r(&[4000.0, 3.0, 2.0, 1.0]), b(2.0), 1e-3).unwrap().is_finite());
    }

    #[test]
    fn water_filling_reference_instance() {
        let s = solve_water_filling(&r(&[4.0, 3.0, 2.0, 1.0]), b(2.0)).unwrap();
        assert!((s.t0 - 2.5).abs() < 1e-12);
        assert!((s.t_star - 2.5).abs() < 1e-12);
        let expect = [0.75, 0.25, 0.0, 0.0];
        for (a, e) in s.policy.as_slice().iter().zip(expect) {
            assert!((a - e).abs() < 1e-12);
        }
        assert!((s.worst_case_regret - 0.75).abs() < 1e-12);
        assert!((s.uncovered_max - s.t_star).abs() < 1e-9);
        assert_eq!(s.sort_permutation, vec![0, 1, 2, 3]);
    }

    #[test]
    fn water_filling_large_budget_closed_form() {
        let s = solve_water_filling(&r(&[4.0, 3.0, 2.0, 1.0]), b(8.0)).unwrap();
        let expect = [0.4375, 0.3125, 0.1875, 0.0625];
        for (a, e) in s.policy.as_slice().iter().zip(expect) {
            assert!((a - e).abs() < 1e-12);
        }
        assert!((s.t_star - 0.5).abs() < 1e-12);
    }

    #[test]
    fn large_budget_closed_form_needs_both_thresholds() {
        // δ exceeds Σ(r̂ᵢ − min r̂) = 2.33 but not Σ(max r̂ − r̂ᵢ) = 3.43, so the
        // lowest response stays inactive and the closed form is beaten.
        let rh = r(&[-1.2877176970171105, 0.22130907537093858, -1.6989843027250222]);
        let delta = 2.3906841521524598;
        let s = solve_water_filling(&rh, b(delta)).unwrap();
        assert_eq!(s.policy.as_slice()[2], 0.0);
        let mean = rh.as_slice().iter().sum::<f64>() / 3.0;
        let closed = PolicyVector::new(rh.as_slice().iter().map(|x| 1.0 / 3.0 + (x - mean) / delta).collect()).unwrap();
        let (closed_regret, _) = worst_case_regret(&closed, &rh, b(delta)).unwrap();
        assert!(s.worst_case_regret < closed_regret - 5e-3);
        let (_, lattice) = brute_force_drro(&rh, delta, 400).unwrap();
        assert!(s.worst_case_regret <= lattice + 1e-12);
    }

    #[test]
    fn water_filling_constant_rewards_is_uniform() {
        let s = solve_water_filling(&r(&[1.5; 5]), b(0.3)).unwrap();
        for a in s.policy.as_slice() {
            assert!((a - 0.2).abs() < 1e-12);
        }
    }

    #[test]
    fn water_filling_unsorted_input_is_unpermuted() {
        let s = solve_water_filling(&r(&[2.0, 4.0, 1.0, 3.0]), b(2.0)).unwrap();
        let expect = [0.0, 0.75, 0.0, 0.25];
        for (a, e) in s.policy.as_slice().iter().zip(expect) {
            assert!((a - e).abs() < 1e-12);
        }
        assert_eq!(s.sort_permutation, vec![1, 3, 0, 2]);
    }

    #[test]
    fn water_filling_tied_top_block_shares_leftover() {
        let s = solve_water_filling(&r(&[4.0, 4.0, 1.0]), b(0.5)).unwrap();
        assert!((s.policy.as_slice()[0] - 0.5).abs() < 1e-12);
        assert!((s.policy.as_slice()[1] - 0.5).abs() < 1e-12);
        assert!((s.uncovered_max - s.t_star).abs() < 1e-9);
    }

    #[test]
    fn water_filling_interior_breakpoint() {
        // t0 = 11/3 but the slope condition first holds at the breakpoint 5.
        let rh = r(&[10.0, 5.0, 5.0]);
        let s = solve_water_filling(&rh, b(9.0)).unwrap();
        assert!((s.t0 - 11.0 / 3.0).abs() < 1e-12);
        assert!((s.t_star - 5.0).abs() < 1e-12);
        assert_eq!(s.policy.as_slice(), &[1.0, 0.0, 0.0]);
        assert!((s.uncovered_max - s.t_star).abs() < 1e-9);
        let (_, oracle) = brute_force_drro(&rh, 9.0, 400).unwrap();
        assert!(s.worst_case_regret <= oracle + 1e-9);
    }

    #[test]
    fn water_filling_rejects_zero_budget() {
        assert!(matches!(solve_water_filling(&r(&[1.0, 0.0]), b(0.0)), Err(DrroError::NonPositiveBudget(_))));
        let g = solve_or_greedy(&r(&[1.0, 2.0]), b(0.0)).unwrap();
        assert_eq!(g.as_slice(), &[0.0, 1.0]);
    }

    #[test]
    fn greedy_examples() {
        assert_eq!(greedy_policy(&r(&[4.0, 3.0, 2.0, 1.0])).as_slice(), &[1.0, 0.0, 0.0, 0.0]);
        assert_eq!(greedy_policy(&r(&[1.0, 1.0])).as_slice(), &[1.0, 0.0]);
        let s = solve_water_filling(&r(&[4.0, 3.0, 2.0, 1.0]), b(1e-9)).unwrap();
        assert!(s.policy.l1_distance(&PolicyVector::vertex(4, 0)) < 1e-6);
    }

    #[test]
    fn lp_examples() {
        let pi = p(&[0.75, 0.25, 0.0, 0.0]);
        let rh = r(&[4.0, 3.0, 2.0, 1.0]);
        let l1 = lp_robust_regret(&pi, &rh, 2.0, NormOrder::One).unwrap();
        assert!((l1 - worst_case_regret(&pi, &rh, b(2.0)).unwrap().0).abs() < 1e-12);
        let linf = lp_robust_regret(&pi, &rh, 1.0, NormOrder::Infinity).unwrap();
        assert!((linf - 0.75).abs() < 1e-12);

        let a = p(&[0.5, 0.5, 0.0]);
        let a2 = p(&[0.5, 0.25, 0.25]);
        let p2 = NormOrder::from_p(2.0).unwrap();
        assert!((vertex_bonus(&a, 0, p2) - 0.5f64.sqrt()).abs() < 1e-12);
        assert!((vertex_bonus(&a2, 0, p2) - 0.375f64.sqrt()).abs() < 1e-12);
        assert!(NormOrder::from_p(0.5).is_err());
        assert_eq!(NormOrder::from_p(f64::INFINITY).unwrap(), NormOrder::Infinity);
    }

    #[test]
    fn brute_force_examples() {
        let (_, v) = brute_force_drro(&r(&[4.0, 3.0, 2.0, 1.0]), 2.0, 400).unwrap();
        assert!((v - 0.75).abs() < 0.02);

        let (pol, v) = brute_force_drro(&r(&[4.0, 3.0, 2.0, 1.0]), 0.0, 50).unwrap();
        assert!(v.abs() < 1e-12);
        assert_eq!(pol.as_slice(), &[1.0, 0.0, 0.0, 0.0]);

        let rh = r(&[1.0, 0.0]);
        let (_, v) = brute_force_drro(&rh, 0.5, 400).unwrap();
        let s = solve_water_filling(&rh, b(0.5)).unwrap();
        assert!((v - s.worst_case_regret).abs() < 1.5 / 400.0);

        assert!(brute_force_drro(&r(&[0.0; 7]), 1.0, 100).is_err());
        assert!(brute_force_drro(&r(&[0.0; 2]), 1.0, 10).is_err());
    }

    #[test]
    fn promptwise_decomposition_matches_joint_lattice() {
        let rewards = vec![r(&[1.0, 0.2, -0.5]), r(&[0.3, 0.9])];
        let delta = b(0.8);
        let solved: Vec<PolicyVector> = rewards.iter().map(|x| solve_water_filling(x, delta).unwrap().policy).collect();
        let separate = product_worst_case_regret(&solved, &rewards, delta).unwrap();

        // Joint search over the product lattice.
        let res = 60;
        let mut joint = f64::INFINITY;
        for a in 0..=res {
            for bb in 0..=(res - a) {
                let p1 = p(&[a as f64 / res as f64, bb as f64 / res as f64, (res - a - bb) as f64 / res as f64]);
                for c in 0..=res {
                    let p2 = p(&[c as f64 / res as f64, (res - c) as f64 / res as f64]);
                    let v = product_worst_case_regret(&[p1.clone(), p2], &rewards, delta).unwrap();
                    joint = joint.min(v);
                }
            }
        }
        assert!(separate <= joint + 1e-12);
        assert!(joint - separate < 2.0 * (0.8 + 1.5) / res as f64);
    }
}
