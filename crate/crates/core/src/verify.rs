//! Randomized oracle and invariant suites. Each suite draws its instances from
//! a seeded stream and reports trial counts, failures and the largest
//! violation of its tolerance.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::coverage::{
    absolute_concentrability, dro_adversarial_reward, dro_certificate, drro_adversarial_reward, drro_certificate,
    profile_value, relative_concentrability, verify_regret_bounds, ConfidenceSet, LocalPolicySet,
};
use crate::dro::{dominance_check_with, solve_dro, MonotoneTransform};
use crate::env::{build_environment, EnvConfig, MisspecConfig};
use crate::error::{DrroError, Result};
use crate::numeric::{kl_divergence, log_sum_exp, softmax};
use crate::policy::{
    exact_hard_drro_gradient, exact_nominal_gradient, exact_soft_drro_gradient, sample_categorical,
    TabularSoftmaxPolicy,
};
use crate::rng::{derive, stream, streams};
use crate::shaping::{k3_kl, k3_term, snis_error_bound, snis_estimate, soft_adversary, BudgetConfig, SnisSample};
use crate::simplex::{
    brute_force_drro, greedy_policy, hard_utility, lp_robust_regret, regret, soft_utility, solve_water_filling,
    uncovered_rewards, vertex_bonus, worst_case_regret, AmbiguityBudget, NormOrder, PolicyVector, RewardVector,
};
use crate::train::{train, Method, TrainConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    WaterFilling,
    Adversary,
    Limits,
    Sandwich,
    Gradients,
    Snis,
    Dominance,
    LpGeometry,
    Certificates,
    K3,
    ZeroBudget,
}

impl Suite {
    pub const ALL: [Suite; 11] = [
        Suite::WaterFilling,
        Suite::Adversary,
        Suite::Limits,
        Suite::Sandwich,
        Suite::Gradients,
        Suite::Snis,
        Suite::Dominance,
        Suite::LpGeometry,
        Suite::Certificates,
        Suite::K3,
        Suite::ZeroBudget,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::WaterFilling => "water-filling",
            Suite::Adversary => "adversary",
            Suite::Limits => "limits",
            Suite::Sandwich => "sandwich",
            Suite::Gradients => "gradients",
            Suite::Snis => "snis",
            Suite::Dominance => "dominance",
            Suite::LpGeometry => "lp-geometry",
            Suite::Certificates => "certificates",
            Suite::K3 => "k3",
            Suite::ZeroBudget => "zero-budget",
        }
    }

    pub fn run(self, seed: u64) -> Result<SuiteReport> {
        let mut rng = stream(derive(seed, self as u64), streams::VERIFY);
        match self {
            Suite::WaterFilling => water_filling(&mut rng),
            Suite::Adversary => adversary(&mut rng),
            Suite::Limits => limits(&mut rng),
            Suite::Sandwich => sandwich(&mut rng),
            Suite::Gradients => gradients(&mut rng),
            Suite::Snis => snis(&mut rng),
            Suite::Dominance => {
                dominance_with(&mut rng, &|r, d| Ok(solve_water_filling(r, AmbiguityBudget::new(d)?)?.policy))
            }
            Suite::LpGeometry => lp_geometry(&mut rng),
            Suite::Certificates => certificates(&mut rng),
            Suite::K3 => k3(&mut rng),
            Suite::ZeroBudget => zero_budget(seed),
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = DrroError;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL.into_iter().find(|x| x.name() == s).ok_or_else(|| {
            let names: Vec<&str> = Suite::ALL.iter().map(|x| x.name()).collect();
            DrroError::Config(format!("unknown suite `{s}`; expected one of: all, {}", names.join(", ")))
        })
    }
}

/// Outcome of one suite. `checks` holds named sub-results as
/// (worst observed value, bound, pass).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: String,
    pub trials: usize,
    pub failures: usize,
    pub max_violation: f64,
    pub passed: bool,
    pub checks: BTreeMap<String, Check>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub observed: f64,
    pub bound: f64,
    pub passed: bool,
}

/// Accumulates named checks. `upper` checks pass when the worst value is at
/// most the bound, `lower` checks when it is at least the bound.
struct Recorder {
    suite: Suite,
    trials: usize,
    failures: usize,
    max_violation: f64,
    checks: BTreeMap<String, Check>,
}

impl Recorder {
    fn new(suite: Suite) -> Self {
        Self { suite, trials: 0, failures: 0, max_violation: 0.0, checks: BTreeMap::new() }
    }

    fn upper(&mut self, name: &str, value: f64, bound: f64) {
        self.record(name, value, bound, value <= bound, value - bound, f64::max);
    }

    fn lower(&mut self, name: &str, value: f64, bound: f64) {
        self.record(name, value, bound, value >= bound, bound - value, f64::min);
    }

    fn flag(&mut self, name: &str, ok: bool) {
        self.lower(name, if ok { 1.0 } else { 0.0 }, 1.0);
    }

    fn record(&mut self, name: &str, value: f64, bound: f64, ok: bool, excess: f64, worst: fn(f64, f64) -> f64) {
        let c = self.checks.entry(name.to_string()).or_insert(Check { observed: value, bound, passed: true });
        c.observed = worst(c.observed, value);
        if !ok || value.is_nan() {
            c.passed = false;
            self.failures += 1;
            self.max_violation = self.max_violation.max(if excess.is_nan() { f64::INFINITY } else { excess });
        }
    }

    fn finish(self) -> SuiteReport {
        let passed = self.failures == 0 && self.checks.values().all(|c| c.passed);
        SuiteReport {
            suite: self.suite.name().to_string(),
            trials: self.trials,
            failures: self.failures,
            max_violation: self.max_violation,
            passed,
            checks: self.checks,
        }
    }
}

/// Runs every suite in order.
pub fn run_all(seed: u64) -> Result<Vec<SuiteReport>> {
    Suite::ALL.iter().map(|s| s.run(seed)).collect()
}

fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    rng.random_range(lo..hi)
}

fn rewards(rng: &mut ChaCha8Rng, n: usize) -> RewardVector {
    RewardVector::new((0..n).map(|_| uniform(rng, -2.0, 2.0)).collect()).expect("finite rewards")
}

/// Flat Dirichlet draw; with probability 0.1 a vertex, to exercise the boundary.
fn simplex_point(rng: &mut ChaCha8Rng, n: usize) -> PolicyVector {
    if rng.random_bool(0.1) {
        return PolicyVector::vertex(n, rng.random_range(0..n));
    }
    interior_point(rng, n)
}

fn interior_point(rng: &mut ChaCha8Rng, n: usize) -> PolicyVector {
    let w: Vec<f64> = (0..n).map(|_| Exp1.sample(rng)).map(|x: f64| x + 1e-12).collect();
    PolicyVector::normalized(w).expect("positive weights")
}

fn l1(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

fn water_filling(rng: &mut ChaCha8Rng) -> Result<SuiteReport> {
    let mut rec = Recorder::new(Suite::WaterFilling);
    for _ in 0..200 {
        let n = rng.random_range(2..=4);
        let r = rewards(rng, n);
        let delta = 2.0 * r.spread() * uniform(rng, 1e-3, 1.0);
        let sol = solve_water_filling(&r, AmbiguityBudget::new(delta)?)?;
        let (_, brute) = brute_force_drro(&r, delta, 400)?;
        rec.upper("solver_minus_lattice", sol.worst_case_regret - brute, 0.02);
        let level = crate::numeric::max(&uncovered_rewards(&sol.policy, &r, delta));
        rec.upper("threshold_identity", (level - sol.t_star).abs(), 1e-9);
        let (wcr, _) = worst_case_regret(&sol.policy, &r, AmbiguityBudget::new(delta)?)?;
        rec.upper("reported_regret", (wcr - sol.worst_case_regret).abs(), 1e-9);
        rec.trials += 1;
    }
    Ok(rec.finish())
}

fn adversary(rng: &mut ChaCha8Rng) -> Result<SuiteReport> {
    let mut rec = Recorder::new(Suite::Adversary);
    for _ in 0..1000 {
        let n = rng.random_range(2..=8);
        let r = rewards(rng, n);
        let pi = simplex_point(rng, n);
        let delta = uniform(rng, 0.0, 4.0);
        let (closed, _) = worst_case_regret(&pi, &r, AmbiguityBudget::new(delta)?)?;
        let mut best = f64::NEG_INFINITY;
        for j in 0..n {
            for sign in [1.0, -1.0] {
                best = best.max(regret(&pi, &r.bumped(j, sign * delta))?);
            }
        }
        rec.upper("closed_form_vs_enumeration", (closed - best).abs(), 1e-12);
        rec.trials += 1;
    }
    Ok(rec.finish())
}

fn limits(rng: &mut ChaCha8Rng) -> Result<SuiteReport> {
    let mut rec = Recorder::new(Suite::Limits);
    for _ in 0..200 {
        let n = rng.random_range(2..=8);
        let r = rewards(rng, n);
        let v = r.as_slice();
        let small = solve_water_filling(&r, AmbiguityBudget::new(1e-9)?)?;
        rec.upper("small_budget_greedy_l1", l1(small.policy.as_slice(), greedy_policy(&r).as_slice()), 1e-6);

        let (above_low, below_top) = large_budget_thresholds(v);
        let delta = above_low.max(below_top) * uniform(rng, 1.0, 3.0) + 1e-9;
        let big = solve_water_filling(&r, AmbiguityBudget::new(delta)?)?;
        rec.upper("large_budget_closed_form", l1(big.policy.as_slice(), &large_budget_policy(v, delta)), 1e-12);

        // Above only the first threshold the closed form can be strictly suboptimal.
        let delta = above_low * uniform(rng, 1.0, 3.0) + 1e-9;
        let budget = AmbiguityBudget::new(delta)?;
        let solver = solve_water_filling(&r, budget)?.worst_case_regret;
        let closed = PolicyVector::normalized(large_budget_policy(v, delta))?;
        rec.upper("solver_not_worse_than_closed_form", solver - worst_case_regret(&closed, &r, budget)?.0, 1e-12);

        let huge = solve_water_filling(&r, AmbiguityBudget::new(1e6 * r.spread())?)?;
        rec.upper("huge_budget_uniform_l1", l1(huge.policy.as_slice(), PolicyVector::uniform(n).as_slice()), 1e-3);
        rec.trials += 1;
    }
    Ok(rec.finish())
}

/// `(Σᵢ (r̂ᵢ − min r̂), Σᵢ (max r̂ − r̂ᵢ))`. The large-budget closed form is
/// the water-filling optimum once the budget exceeds both.
pub fn large_budget_thresholds(rewards: &[f64]) -> (f64, f64) {
    let low = rewards.iter().cloned().fold(f64::INFINITY, f64::min);
    let top = crate::numeric::max(rewards);
    (rewards.iter().map(|x| x - low).sum(), rewards.iter().map(|x| top - x).sum())
}

/// `πᵢ = 1/n + (r̂ᵢ − mean r̂)/δ`.
pub fn large_budget_policy(rewards: &[f64], delta: f64) -> Vec<f64> {
    let n = rewards.len() as f64;
    let mean = rewards.iter().sum::<f64>() / n;
    rewards.iter().map(|x| 1.0 / n + (x - mean) / delta).collect()
}

fn sandwich(rng: &mut ChaCha8Rng) -> Result<SuiteReport> {
    let mut rec = Recorder::new(Suite::Sandwich);
    for _ in 0..1000 {
        let n = rng.random_range(1..=10);
        let r = rewards(rng, n);
        let pi = simplex_point(rng, n);
        let delta = AmbiguityBudget::new(uniform(rng, 0.0, 5.0))?;
        let tau = uniform(rng, 1e-3, 5.0);
        let gap = hard_utility(&pi, &r, delta)? - soft_utility(&pi, &r, delta, tau)?;
        rec.lower("gap_nonnegative", gap, -1e-9);
        rec.upper("gap_minus_tau_log_n", gap - tau * (n as f64).ln(), 1e-9);
        rec.trials += 1;
    }
    Ok(rec.finish())
}

fn central_difference(logits: &[f64], f: &dyn Fn(&PolicyVector) -> Result<f64>) -> Result<Vec<f64>> {
    let h = 1e-5;
    let mut grad = Vec::with_capacity(logits.len());
    for j in 0..logits.len() {
        let mut up = logits.to_vec();
        let mut down = logits.to_vec();
        up[j] += h;
        down[j] -= h;
        let fu = f(&PolicyVector::normalized(softmax(&up))?)?;
        let fd = f(&PolicyVector::normalized(softmax(&down))?)?;
        grad.push((fu - fd) / (2.0 * h));
    }
    Ok(grad)
}

fn relative_error(exact: &[f64], approx: &[f64]) -> f64 {
    let diff = exact.iter().zip(approx).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let scale = exact.iter().map(|a| a.abs()).fold(0.0, f64::max).max(1e-6);
    diff / scale
}

fn gradients(rng: &mut ChaCha8Rng) -> Result<SuiteReport> {
    let mut rec = Recorder::new(Suite::Gradients);
    let mut done = 0;
    while done < 200 {
        let n = rng.random_range(2..=6);
        let logits: Vec<f64> = (0..n).map(|_| StandardNormal.sample(rng)).collect();
        let r = rewards(rng, n);
        let delta = uniform(rng, 0.1, 3.0);
        let tau = uniform(rng, 0.2, 3.0);
        let policy = TabularSoftmaxPolicy::new(vec![logits.clone()])?;
        let pi = policy.policy_vector(0);
        let mut u = uncovered_rewards(&pi, &r, delta);
        u.sort_by(|a, b| b.total_cmp(a));
        if u[0] - u[1] < 1e-2 {
            continue;
        }
        let budget = AmbiguityBudget::new(delta)?;
        let nominal = central_difference(&logits, &|p| Ok(crate::numeric::dot(p.as_slice(), r.as_slice())))?;
        let hard = central_difference(&logits, &|p| hard_utility(p, &r, budget))?;
        let soft = central_difference(&logits, &|p| soft_utility(p, &r, budget, tau))?;
        rec.upper("nominal", relative_error(&exact_nominal_gradient(&policy, 0, &r)?, &nominal), 1e-5);
        rec.upper("hard", relative_error(&exact_hard_drro_gradient(&policy, 0, &r, delta)?, &hard), 1e-5);
        rec.upper("soft", relative_error(&exact_soft_drro_gradient(&policy, 0, &r, delta, tau)?, &soft), 1e-5);
        rec.trials += 1;
        done += 1;
    }
    Ok(rec.finish())
}

/// Least-squares slope of `y` on `x`.
pub fn regression_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

struct SnisInstance {
    rewards: Vec<f64>,
    policy: Vec<f64>,
    proposal: Vec<f64>,
    h: Vec<f64>,
    delta: f64,
    tau: f64,
}

impl SnisInstance {
    fn random(rng: &mut ChaCha8Rng, n: usize) -> Self {
        let proposal: Vec<f64> = interior_point(rng, n).as_slice().iter().map(|p| 0.5 * p + 0.5 / n as f64).collect();
        Self {
            rewards: (0..n).map(|_| uniform(rng, -1.0, 1.0)).collect(),
            policy: interior_point(rng, n).into_inner(),
            proposal,
            h: (0..n).map(|_| uniform(rng, -1.0, 1.0)).collect(),
            delta: uniform(rng, 0.0, 2.0),
            tau: uniform(rng, 0.5, 2.0),
        }
    }

    fn truth(&self) -> Result<f64> {
        let sigma = soft_adversary(&self.rewards, &self.policy, self.delta, self.tau)?;
        Ok(crate::numeric::dot(&sigma, &self.h))
    }

    fn sample(&self, rng: &mut ChaCha8Rng, k: usize) -> Result<f64> {
        let mut samples = Vec::with_capacity(k);
        let mut h = Vec::with_capacity(k);
        for _ in 0..k {
            let y = sample_categorical(&self.proposal, rng);
            samples.push(SnisSample {
                reward: self.rewards[y],
                proposal_prob: self.proposal[y],
                policy_prob: self.policy[y],
            });
            h.push(self.h[y]);
        }
        snis_estimate(&samples, &h, self.delta, self.tau)
    }

    /// Weight ceiling `U`, bound `H` on `|h|` and mean weight `ν` under the proposal.
    fn bound_inputs(&self) -> (f64, f64, f64) {
        let scores: Vec<f64> =
            self.rewards.iter().zip(&self.policy).map(|(r, p)| (r - self.delta * p) / self.tau).collect();
        let shift = log_sum_exp(&scores);
        let u_max = scores.iter().zip(&self.proposal).map(|(s, q)| (s - shift).exp() / q).fold(0.0, f64::max);
        let h_max = self.h.iter().map(|v| v.abs()).fold(0.0, f64::max);
        (u_max, h_max, 1.0)
    }
}

fn snis(rng: &mut ChaCha8Rng) -> Result<SuiteReport> {
    let mut rec = Recorder::new(Suite::Snis);
    for _ in 0..200 {
        let n = rng.random_range(1..=12);
        let inst = SnisInstance::random(rng, n);
        let samples: Vec<SnisSample> = (0..n)
            .map(|i| SnisSample { reward: inst.rewards[i], proposal_prob: 1.0 / n as f64, policy_prob: inst.policy[i] })
            .collect();
        let est = snis_estimate(&samples, &inst.h, inst.delta, inst.tau)?;
        rec.upper("full_enumeration", (est - inst.truth()?).abs(), 1e-10);
        rec.trials += 1;
    }

    let inst = SnisInstance::random(rng, 16);
    let truth = inst.truth()?;
    let sizes = [100usize, 1_000, 10_000, 100_000];
    let reps = 100;
    let mut log_k = Vec::new();
    let mut log_err = Vec::new();
    for &k in &sizes {
        let mut total = 0.0;
        for _ in 0..reps {
            total += (inst.sample(rng, k)? - truth).abs();
        }
        log_k.push((k as f64).ln());
        log_err.push((total / reps as f64).ln());
        rec.trials += reps;
    }
    let slope = regression_slope(&log_k, &log_err);
    rec.lower("mc_slope_above", slope, -0.65);
    rec.upper("mc_slope_below", slope, -0.35);

    let eta = 0.1;
    let (u_max, h_max, nu) = inst.bound_inputs();
    let k_min = snis_error_bound(u_max, h_max, nu, 1, eta)?.k_min;
    let bound = snis_error_bound(u_max, h_max, nu, k_min, eta)?.bound;
    let trials = 1000;
    let mut covered = 0;
    for _ in 0..trials {
        if (inst.sample(rng, k_min as usize)? - truth).abs() <= bound {
            covered += 1;
        }
        rec.trials += 1;
    }
    rec.lower("bound_coverage", covered as f64 / trials as f64, 1.0 - eta);
    Ok(rec.finish())
}

fn random_transform(rng: &mut ChaCha8Rng, low: f64) -> MonotoneTransform {
    match rng.random_range(0..4) {
        0 => MonotoneTransform::Identity,
        1 => MonotoneTransform::Affine { a: uniform(rng, 0.1, 5.0), b: uniform(rng, -3.0, 3.0) },
        2 => MonotoneTransform::Power { exponent: uniform(rng, 0.3, 3.0), shift: low - uniform(rng, 0.01, 1.0) },
        _ => {
            let knots = rng.random_range(2..=6);
            let mut xs = vec![-2.5];
            let mut ys = vec![uniform(rng, -3.0, 3.0)];
            for _ in 1..knots {
                xs.push(xs.last().unwrap() + 5.0 / (knots - 1) as f64);
                ys.push(ys.last().unwrap() + uniform(rng, 0.01, 3.0));
            }
            MonotoneTransform::Tabulated { xs, ys }
        }
    }
}

type RobustSolver = dyn Fn(&RewardVector, f64) -> Result<PolicyVector>;

/// Dominance suite against an arbitrary regret-robust solver, so a defective
/// solver can be checked to fail it.
pub fn dominance_suite_with(seed: u64, solver: &RobustSolver) -> Result<SuiteReport> {
    let mut rng = stream(derive(seed, Suite::Dominance as u64), streams::VERIFY);
    dominance_with(&mut rng, solver)
}

fn dominance_with(rng: &mut ChaCha8Rng, solver: &RobustSolver) -> Result<SuiteReport> {
    let mut rec = Recorder::new(Suite::Dominance);
    while rec.trials < 500 {
        let n = rng.random_range(2..=8);
        let r = rewards(rng, n);
        let mut sorted = r.as_slice().to_vec();
        sorted.sort_by(f64::total_cmp);
        if sorted.windows(2).any(|w| w[1] - w[0] < 1e-9) {
            continue;
        }
        let delta = uniform(rng, 1e-3, 3.0) * r.spread();
        let phi = random_transform(rng, sorted[0]);
        let rep = dominance_check_with(&r, delta, &phi, solver(&r, delta)?)?;
        rec.lower("true_value_margin", rep.drro_true_value - rep.dro_true_value, -1e-12);
        rec.flag("prefix_dominance", rep.prefix_dominance);
        rec.lower("support_margin", rep.dro_support as f64 - rep.drro_support as f64, 0.0);
        rec.trials += 1;
    }
    Ok(rec.finish())
}

fn lp_geometry(rng: &mut ChaCha8Rng) -> Result<SuiteReport> {
    let mut rec = Recorder::new(Suite::LpGeometry);
    for _ in 0..500 {
        let n = rng.random_range(2..=8);
        let r = rewards(rng, n);
        let pi = simplex_point(rng, n);
        let delta = uniform(rng, 0.0, 3.0);
        let linf = lp_robust_regret(&pi, &r, delta, NormOrder::Infinity)?;
        let (l1_double, _) = worst_case_regret(&pi, &r, AmbiguityBudget::new(2.0 * delta)?)?;
        rec.upper("linf_equals_l1_double_budget", (linf - l1_double).abs(), 1e-12);
        let l1_direct = lp_robust_regret(&pi, &r, delta, NormOrder::One)?;
        let (l1_closed, _) = worst_case_regret(&pi, &r, AmbiguityBudget::new(delta)?)?;
        rec.upper("l1_dual_norm_matches_closed_form", (l1_direct - l1_closed).abs(), 1e-12);
        rec.trials += 1;
    }
    let a = PolicyVector::new(vec![0.5, 0.5, 0.0])?;
    let b = PolicyVector::new(vec![0.5, 0.25, 0.25])?;
    let ba = vertex_bonus(&a, 0, NormOrder::P(2.0));
    let bb = vertex_bonus(&b, 0, NormOrder::P(2.0));
    rec.upper("non_locality_first", (ba - 0.5 * 2f64.sqrt()).abs(), 1e-12);
    rec.upper("non_locality_second", (bb - 0.5 * 1.5f64.sqrt()).abs(), 1e-12);
    rec.lower("non_locality_gap", (ba - bb).abs(), 1e-3);
    rec.trials += 1;
    Ok(rec.finish())
}

/// Random finite coverage instance: profiles, confidence set and weights.
struct CoverageInstance {
    confidence: ConfidenceSet,
    weights: Vec<f64>,
    candidates: LocalPolicySet,
}

fn coverage_instance(rng: &mut ChaCha8Rng) -> Result<CoverageInstance> {
    let m = rng.random_range(1..=3);
    let n = rng.random_range(2..=4);
    let center: Vec<RewardVector> = (0..m).map(|_| rewards(rng, n)).collect();
    let coverage: Vec<PolicyVector> = (0..m)
        .map(|_| {
            let p = interior_point(rng, n);
            PolicyVector::normalized(p.as_slice().iter().map(|x| x + 0.02).collect())
        })
        .collect::<Result<_>>()?;
    let weights = interior_point(rng, m).into_inner();
    let epsilon = uniform(rng, 0.0, 0.5);
    let confidence = ConfidenceSet::new(epsilon, center, coverage)?;

    let mut members: Vec<Vec<PolicyVector>> = Vec::new();
    let total = n.pow(m as u32);
    for code in 0..total {
        let mut c = code;
        members.push(
            (0..m)
                .map(|_| {
                    let v = PolicyVector::vertex(n, c % n);
                    c /= n;
                    v
                })
                .collect(),
        );
    }
    let delta = uniform(rng, 0.1, 2.0);
    let wf: Vec<PolicyVector> = confidence
        .center
        .iter()
        .map(|r| Ok(solve_water_filling(r, AmbiguityBudget::new(delta)?)?.policy))
        .collect::<Result<_>>()?;
    let dro: Vec<PolicyVector> =
        confidence.center.iter().map(|r| Ok(solve_dro(r, delta)?.policy)).collect::<Result<_>>()?;
    members.push(wf);
    members.push(dro);
    members.push(vec![PolicyVector::uniform(n); m]);
    for _ in 0..4 {
        members.push((0..m).map(|_| simplex_point(rng, n)).collect());
    }
    let candidates = LocalPolicySet::new(members, "vertices, robust solutions and random points")?;
    Ok(CoverageInstance { confidence, weights, candidates })
}

fn certificates(rng: &mut ChaCha8Rng) -> Result<SuiteReport> {
    let mut rec = Recorder::new(Suite::Certificates);
    for _ in 0..200 {
        let inst = coverage_instance(rng)?;
        let (conf, w) = (&inst.confidence, &inst.weights);
        let pick = rng.random_range(0..inst.candidates.members.len());
        let pi = &inst.candidates.members[pick];

        let dro = dro_certificate(pi, conf, w)?;
        let adv = dro_adversarial_reward(pi, conf, w)?;
        rec.flag("dro_adversary_feasible", conf.contains(&adv, w)?);
        rec.upper("dro_certificate_vs_construction", (profile_value(pi, &adv, w)? - dro).abs(), 1e-10);

        let drro = drro_certificate(pi, &inst.candidates, conf, w)?;
        let adv = drro_adversarial_reward(pi, &inst.candidates, conf, w)?;
        rec.flag("drro_adversary_feasible", conf.contains(&adv, w)?);
        let mut attained = f64::NEG_INFINITY;
        for beta in &inst.candidates.members {
            attained = attained.max(profile_value(beta, &adv, w)? - profile_value(pi, &adv, w)?);
        }
        rec.upper("drro_certificate_vs_construction", (attained - drro).abs(), 1e-10);

        let truth = true_reward_inside(rng, conf, w)?;
        let rep = verify_regret_bounds(&inst.candidates, conf, w, &truth)?;
        rec.flag("hypothesis_holds", rep.hypothesis_holds);
        rec.upper("dro_regret_minus_bound", rep.dro_true_regret - rep.dro_bound, 1e-10);
        rec.upper("drro_regret_minus_bound", rep.drro_true_regret - rep.drro_bound, 1e-10);
        rec.trials += 1;
    }

    for _ in 0..1000 {
        let m = rng.random_range(1..=3);
        let n = rng.random_range(2..=6);
        let mu: Vec<PolicyVector> = (0..m).map(|_| interior_point(rng, n)).collect();
        let w = interior_point(rng, m).into_inner();
        let [a, b, c]: [Vec<PolicyVector>; 3] =
            std::array::from_fn(|_| (0..m).map(|_| simplex_point(rng, n)).collect());
        let ca = absolute_concentrability(&a, &mu, &w)?;
        let cb = absolute_concentrability(&b, &mu, &w)?;
        let rel = relative_concentrability(&b, &a, &mu, &w)?;
        let scale = 1e-12 * (ca + cb).max(1.0);
        rec.lower("envelope_lower", rel - (ca - cb), -scale);
        rec.upper("envelope_upper", rel - (ca + cb), scale);
        rec.upper("symmetry", (rel - relative_concentrability(&a, &b, &mu, &w)?).abs(), scale);
        let via = relative_concentrability(&b, &c, &mu, &w)? + relative_concentrability(&c, &a, &mu, &w)?;
        rec.upper("triangle", rel - via, scale);
        rec.trials += 1;
    }
    Ok(rec.finish())
}

/// True reward at a random point of the confidence set.
fn true_reward_inside(rng: &mut ChaCha8Rng, conf: &ConfidenceSet, w: &[f64]) -> Result<Vec<RewardVector>> {
    let direction: Vec<RewardVector> = conf
        .center
        .iter()
        .map(|r| RewardVector::new(r.as_slice().iter().map(|_| StandardNormal.sample(rng)).collect()))
        .collect::<Result<_>>()?;
    let zero: Vec<RewardVector> =
        conf.center.iter().map(|r| RewardVector::new(vec![0.0; r.len()])).collect::<Result<_>>()?;
    let shifted = ConfidenceSet::new(conf.epsilon, zero, conf.coverage.clone())?;
    let dist = shifted.distance(&direction, w)?;
    let scale = if dist > 0.0 { uniform(rng, 0.0, 1.0) * conf.epsilon / dist } else { 0.0 };
    conf.center
        .iter()
        .zip(&direction)
        .map(|(c, d)| RewardVector::new(c.as_slice().iter().zip(d.as_slice()).map(|(a, b)| a + scale * b).collect()))
        .collect()
}

fn k3(rng: &mut ChaCha8Rng) -> Result<SuiteReport> {
    let mut rec = Recorder::new(Suite::K3);
    let mut worst: f64 = 0.0;
    for i in 0..100_000 {
        let z = if i % 10 == 0 { uniform(rng, -700.0, 700.0) } else { uniform(rng, -1e-6, 1e-6) * 10f64.powi(i % 7) };
        worst = worst.min(k3_term(z));
    }
    rec.lower("samplewise_nonnegative", worst, 0.0);
    rec.trials += 100_000;

    for _ in 0..20 {
        let n = rng.random_range(2..=10);
        let pi: Vec<f64> = interior_point(rng, n).as_slice().iter().map(|p| 0.5 * p + 0.5 / n as f64).collect();
        let reference: Vec<f64> = interior_point(rng, n).as_slice().iter().map(|p| 0.5 * p + 0.5 / n as f64).collect();
        let exact = kl_divergence(&pi, &reference);
        let k = 100_000;
        let mut log_ref = Vec::with_capacity(k);
        let mut log_pi = Vec::with_capacity(k);
        for _ in 0..k {
            let y = sample_categorical(&pi, rng);
            log_ref.push(reference[y].ln());
            log_pi.push(pi[y].ln());
        }
        let est = k3_kl(&log_ref, &log_pi)?;
        rec.upper("relative_error", (est - exact).abs() / exact, 0.02);
        let logs: Vec<f64> = pi.iter().map(|p| p.ln()).collect();
        rec.upper("identical_policies", k3_kl(&logs, &logs)?, 0.0);
        rec.trials += 1;
    }
    Ok(rec.finish())
}

/// Small environment used by the training-equivalence checks.
pub fn small_environment_config(seed: u64) -> EnvConfig {
    let misspec = MisspecConfig { noise_sigma: 0.5, hack_fraction: 0.25, hack_bonus: 1.5, ..MisspecConfig::aligned() };
    let mut cfg = EnvConfig::new(8, 8, misspec, seed);
    cfg.agreement_pairs = 2_000;
    cfg
}

/// Bitwise comparison of every numeric column and the final logits.
pub fn trajectories_identical(
    a: &(Vec<crate::env::RunLog>, TabularSoftmaxPolicy),
    b: &(Vec<crate::env::RunLog>, TabularSoftmaxPolicy),
) -> bool {
    let row = |l: &crate::env::RunLog| {
        [l.kl_seq, l.proxy_raw, l.gold_raw, l.proxy_improvement, l.gold_improvement, l.budget].map(f64::to_bits)
    };
    a.0.len() == b.0.len()
        && a.0.iter().zip(&b.0).all(|(x, y)| x.step == y.step && x.seed == y.seed && row(x) == row(y))
        && a.1.rows().iter().flatten().map(|v| v.to_bits()).eq(b.1.rows().iter().flatten().map(|v| v.to_bits()))
}

fn zero_budget(seed: u64) -> Result<SuiteReport> {
    let mut rec = Recorder::new(Suite::ZeroBudget);
    for s in 0..3 {
        let env = build_environment(&small_environment_config(derive(seed, s)))?;
        let n = env.num_responses();
        let base = |method| {
            let mut c = TrainConfig::new(method, n);
            c.group_size = 4;
            c.prompt_batch = 4;
            c.outer_iterations = 30;
            c.learning_rate = 20.0;
            c.seed = derive(seed, 100 + s);
            c.budget = BudgetConfig::fixed(0.0, 4, n);
            c
        };
        let reference = train(&env, &base(Method::Grpo))?;
        for method in [Method::DrroHard, Method::DrroSoft, Method::DrroSoftDynamic, Method::Dro] {
            let mut c = base(method);
            if method == Method::DrroSoftDynamic {
                c.budget = BudgetConfig::dynamic(0.0, 0.0, 4, n);
            }
            let run = train(&env, &c)?;
            rec.flag(&format!("{}_matches_grpo", method.label()), trajectories_identical(&reference, &run));
        }
        rec.trials += 1;
    }
    Ok(rec.finish())
}
