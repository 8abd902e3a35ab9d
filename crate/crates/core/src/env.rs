//! Seeded proxy-vs-gold environments with controllable misspecification, and
//! the exact evaluation protocol used for training curves.
//!
//! Gold rewards are i.i.d. standard normal. The proxy adds Gaussian noise
//! everywhere and an extra `hack_bonus` on a subset of responses per prompt,
//! by default the ones the initial policy covers least. Optimizing the proxy
//! therefore eventually discovers responses whose proxy score is inflated
//! relative to their gold value.

use rand::seq::index::sample as sample_indices;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{check_len, invalid, DrroError, Result};
use crate::numeric::{dot, kl_divergence, mean};
use crate::policy::{sample_categorical, TabularSoftmaxPolicy};
use crate::rng::{stream, streams};
use crate::simplex::PolicyVector;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HackTargets {
    LowCoverage,
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MisspecConfig {
    pub noise_sigma: f64,
    pub hack_fraction: f64,
    pub hack_bonus: f64,
    pub hack_targets: HackTargets,
    /// If set, `hack_bonus` is recalibrated so gold/proxy pairwise agreement hits this value.
    #[serde(default)]
    pub target_agreement: Option<f64>,
    /// Extra proxy noise on hacked responses only.
    #[serde(default)]
    pub hack_noise_sigma: f64,
}

impl MisspecConfig {
    pub fn aligned() -> Self {
        Self {
            noise_sigma: 0.0,
            hack_fraction: 0.0,
            hack_bonus: 0.0,
            hack_targets: HackTargets::LowCoverage,
            target_agreement: None,
            hack_noise_sigma: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.noise_sigma >= 0.0) || !self.noise_sigma.is_finite() {
            return Err(invalid("noise_sigma", format!("must be finite and >= 0, got {}", self.noise_sigma)));
        }
        if !(self.hack_noise_sigma >= 0.0) || !self.hack_noise_sigma.is_finite() {
            return Err(invalid("hack_noise_sigma", "must be finite and >= 0"));
        }
        if !(0.0..1.0).contains(&self.hack_fraction) {
            return Err(invalid("hack_fraction", format!("must lie in [0, 1), got {}", self.hack_fraction)));
        }
        if !(self.hack_bonus >= 0.0) || !self.hack_bonus.is_finite() {
            return Err(invalid("hack_bonus", format!("must be finite and >= 0, got {}", self.hack_bonus)));
        }
        if let Some(a) = self.target_agreement {
            if !(a > 0.5 && a <= 1.0) {
                return Err(invalid("target_agreement", format!("must lie in (0.5, 1], got {a}")));
            }
        }
        Ok(())
    }
}

fn default_ensemble_size() -> usize {
    4
}
fn default_init_scale() -> f64 {
    0.1
}
fn default_agreement_pairs() -> usize {
    20_000
}

/// Everything needed to rebuild an environment bit-for-bit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvConfig {
    pub prompts: usize,
    pub responses: usize,
    pub misspec: MisspecConfig,
    pub seed: u64,
    #[serde(default = "default_ensemble_size")]
    pub ensemble_size: usize,
    /// Standard deviation of the i.i.d. normal initial logits.
    #[serde(default = "default_init_scale")]
    pub init_logit_scale: f64,
    /// Pairs drawn when measuring agreement during calibration.
    #[serde(default = "default_agreement_pairs")]
    pub agreement_pairs: usize,
}

impl EnvConfig {
    pub fn new(prompts: usize, responses: usize, misspec: MisspecConfig, seed: u64) -> Self {
        Self {
            prompts,
            responses,
            misspec,
            seed,
            ensemble_size: default_ensemble_size(),
            init_logit_scale: default_init_scale(),
            agreement_pairs: default_agreement_pairs(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.prompts == 0 || self.responses == 0 {
            return Err(invalid("dims", "prompts and responses must be >= 1"));
        }
        if self.ensemble_size < 2 {
            return Err(invalid("ensemble_size", "must be >= 2"));
        }
        if !(self.init_logit_scale >= 0.0) || !self.init_logit_scale.is_finite() {
            return Err(invalid("init_logit_scale", "must be finite and >= 0"));
        }
        if self.agreement_pairs == 0 {
            return Err(invalid("agreement_pairs", "must be >= 1"));
        }
        self.misspec.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticEnvironment {
    pub config: EnvConfig,
    /// Bonus actually used, after calibration if a target agreement was set.
    pub hack_bonus: f64,
    pub measured_agreement: f64,
    pub gold: Vec<Vec<f64>>,
    pub proxy: Vec<Vec<f64>>,
    pub ensemble: Vec<Vec<Vec<f64>>>,
    pub hacked: Vec<Vec<bool>>,
    pub initial_logits: Vec<Vec<f64>>,
    pub coverage: Vec<PolicyVector>,
}

fn normal_matrix<R: Rng>(rows: usize, cols: usize, rng: &mut R) -> Vec<Vec<f64>> {
    (0..rows).map(|_| (0..cols).map(|_| StandardNormal.sample(rng)).collect()).collect()
}

/// Noise shared by every bonus value tried during calibration.
struct ProxyParts {
    noise: Vec<Vec<f64>>,
    hack_noise: Vec<Vec<f64>>,
}

fn assemble_proxy(
    gold: &[Vec<f64>],
    hacked: &[Vec<bool>],
    parts: &ProxyParts,
    m: &MisspecConfig,
    bonus: f64,
) -> Vec<Vec<f64>> {
    gold.iter()
        .enumerate()
        .map(|(x, row)| {
            row.iter()
                .enumerate()
                .map(|(i, g)| {
                    let mut v = g + m.noise_sigma * parts.noise[x][i];
                    if hacked[x][i] {
                        v += bonus + m.hack_noise_sigma * parts.hack_noise[x][i];
                    }
                    v
                })
                .collect()
        })
        .collect()
}

const CALIBRATION_SEED_SALT: u64 = 0xA6EE;
const MAX_BISECTION_STEPS: usize = 50;
const AGREEMENT_TOL: f64 = 0.01;

pub fn build_environment(config: &EnvConfig) -> Result<SyntheticEnvironment> {
    config.validate()?;
    let (m_prompts, n) = (config.prompts, config.responses);
    let misspec = &config.misspec;

    let gold = normal_matrix(m_prompts, n, &mut stream(config.seed, streams::ENV_GOLD));
    let mut logit_rng = stream(config.seed, streams::ENV_LOGITS);
    let initial_logits: Vec<Vec<f64>> = normal_matrix(m_prompts, n, &mut logit_rng)
        .into_iter()
        .map(|row| row.into_iter().map(|z| z * config.init_logit_scale).collect())
        .collect();
    let initial = TabularSoftmaxPolicy::new(initial_logits.clone())?;

    let hack_count = (misspec.hack_fraction * n as f64).ceil() as usize;
    let mut hack_rng = stream(config.seed, streams::ENV_HACK);
    let hacked: Vec<Vec<bool>> = (0..m_prompts)
        .map(|x| {
            let mut mask = vec![false; n];
            let chosen: Vec<usize> = match misspec.hack_targets {
                HackTargets::LowCoverage => {
                    let mut order: Vec<usize> = (0..n).collect();
                    let logits = initial.logits(x);
                    order.sort_by(|&a, &b| logits[a].total_cmp(&logits[b]).then(a.cmp(&b)));
                    order.truncate(hack_count);
                    order
                }
                HackTargets::Random => sample_indices(&mut hack_rng, n, hack_count).into_vec(),
            };
            for i in chosen {
                mask[i] = true;
            }
            mask
        })
        .collect();

    let mut noise_rng = stream(config.seed, streams::ENV_NOISE);
    let parts = ProxyParts {
        noise: normal_matrix(m_prompts, n, &mut noise_rng),
        hack_noise: normal_matrix(m_prompts, n, &mut noise_rng),
    };

    let agreement_seed = config.seed ^ CALIBRATION_SEED_SALT;
    let measure = |bonus: f64| -> Result<f64> {
        pairwise_agreement(
            &gold,
            &assemble_proxy(&gold, &hacked, &parts, misspec, bonus),
            config.agreement_pairs,
            agreement_seed,
        )
    };

    let hack_bonus = match misspec.target_agreement {
        None => misspec.hack_bonus,
        Some(target) => calibrate_bonus(target, &measure, hack_count > 0)?,
    };
    let proxy = assemble_proxy(&gold, &hacked, &parts, misspec, hack_bonus);
    let measured_agreement = measure(hack_bonus)?;

    // Members share the hack inflation and draw their own noise.
    let mut ens_rng = stream(config.seed, streams::ENV_ENSEMBLE);
    let ensemble = (0..config.ensemble_size)
        .map(|_| {
            let member = ProxyParts {
                noise: normal_matrix(m_prompts, n, &mut ens_rng),
                hack_noise: normal_matrix(m_prompts, n, &mut ens_rng),
            };
            assemble_proxy(&gold, &hacked, &member, misspec, hack_bonus)
        })
        .collect();

    let coverage = (0..m_prompts).map(|x| initial.policy_vector(x)).collect();
    Ok(SyntheticEnvironment {
        config: config.clone(),
        hack_bonus,
        measured_agreement,
        gold,
        proxy,
        ensemble,
        hacked,
        initial_logits,
        coverage,
    })
}

/// Bisects the hack bonus until agreement is within tolerance of `target`.
fn calibrate_bonus(target: f64, measure: &dyn Fn(f64) -> Result<f64>, has_targets: bool) -> Result<f64> {
    let base = measure(0.0)?;
    if (base - target).abs() <= AGREEMENT_TOL {
        return Ok(0.0);
    }
    if base < target {
        return Err(DrroError::Calibration(format!(
            "noise alone gives agreement {base:.4}, below target {target}; lower noise_sigma"
        )));
    }
    if !has_targets {
        return Err(DrroError::Calibration("target agreement needs hack_fraction > 0".into()));
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    let mut steps = 0;
    while measure(hi)? > target {
        lo = hi;
        hi *= 2.0;
        steps += 1;
        if steps >= MAX_BISECTION_STEPS {
            return Err(DrroError::Calibration(format!("agreement never drops to {target}")));
        }
    }
    for _ in 0..MAX_BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        let a = measure(mid)?;
        if (a - target).abs() <= AGREEMENT_TOL {
            return Ok(mid);
        }
        if a > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(DrroError::Calibration(format!(
        "no bonus within {MAX_BISECTION_STEPS} bisection steps reaches agreement {target} ± {AGREEMENT_TOL}"
    )))
}

/// Fraction of sampled within-prompt pairs whose score differences share a strict sign.
///
/// A pair tied in both scorers counts as agreement; a tie in only one does not.
pub fn pairwise_agreement(a: &[Vec<f64>], b: &[Vec<f64>], pairs: usize, seed: u64) -> Result<f64> {
    check_len(a.len(), b.len())?;
    if pairs == 0 {
        return Err(invalid("pairs", "must be >= 1"));
    }
    if a.is_empty() {
        return Err(DrroError::Empty("reward matrix"));
    }
    for (ra, rb) in a.iter().zip(b) {
        check_len(ra.len(), rb.len())?;
    }
    let mut rng = stream(seed, streams::AGREEMENT);
    let mut agree = 0usize;
    let mut drawn = 0usize;
    for _ in 0..pairs {
        let x = rng.random_range(0..a.len());
        let n = a[x].len();
        if n < 2 {
            continue;
        }
        let i = rng.random_range(0..n);
        let mut j = rng.random_range(0..n - 1);
        if j >= i {
            j += 1;
        }
        drawn += 1;
        let sa = sign(a[x][i] - a[x][j]);
        let sb = sign(b[x][i] - b[x][j]);
        if sa == sb {
            agree += 1;
        }
    }
    Ok(if drawn == 0 { 1.0 } else { agree as f64 / drawn as f64 })
}

fn sign(v: f64) -> i8 {
    if v > 0.0 {
        1
    } else if v < 0.0 {
        -1
    } else {
        0
    }
}

impl SyntheticEnvironment {
    pub fn num_prompts(&self) -> usize {
        self.gold.len()
    }

    pub fn num_responses(&self) -> usize {
        self.gold.first().map_or(0, Vec::len)
    }

    pub fn initial_policy(&self) -> TabularSoftmaxPolicy {
        TabularSoftmaxPolicy::new(self.initial_logits.clone()).expect("validated at construction")
    }

    /// Builds an environment from explicit matrices; coverage is the initial policy.
    pub fn from_matrices(
        gold: Vec<Vec<f64>>,
        proxy: Vec<Vec<f64>>,
        ensemble: Vec<Vec<Vec<f64>>>,
        initial_logits: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let initial = TabularSoftmaxPolicy::new(initial_logits.clone())?;
        let (m, n) = (initial.num_prompts(), initial.num_responses());
        let check = |mat: &Vec<Vec<f64>>| -> Result<()> {
            check_len(m, mat.len())?;
            for row in mat {
                check_len(n, row.len())?;
                if row.iter().any(|v| !v.is_finite()) {
                    return Err(DrroError::NonFinite("reward matrix"));
                }
            }
            Ok(())
        };
        check(&gold)?;
        check(&proxy)?;
        for member in &ensemble {
            check(member)?;
        }
        let measured_agreement = pairwise_agreement(&gold, &proxy, default_agreement_pairs(), 0)?;
        let mut config = EnvConfig::new(m, n, MisspecConfig::aligned(), 0);
        config.ensemble_size = ensemble.len().max(2);
        Ok(Self {
            config,
            hack_bonus: 0.0,
            measured_agreement,
            hacked: vec![vec![false; n]; m],
            coverage: (0..m).map(|x| initial.policy_vector(x)).collect(),
            gold,
            proxy,
            ensemble,
            initial_logits,
        })
    }
}

/// Exact checkpoint statistics of a policy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub kl_seq: f64,
    pub proxy_raw: f64,
    pub gold_raw: f64,
}

pub fn evaluate(
    policy: &TabularSoftmaxPolicy,
    env: &SyntheticEnvironment,
    initial: &TabularSoftmaxPolicy,
) -> Result<Evaluation> {
    check_len(env.num_prompts(), policy.num_prompts())?;
    check_len(env.num_responses(), policy.num_responses())?;
    check_len(policy.num_prompts(), initial.num_prompts())?;
    check_len(policy.num_responses(), initial.num_responses())?;
    let m = env.num_prompts();
    let (mut kl, mut proxy, mut gold) = (0.0, 0.0, 0.0);
    for x in 0..m {
        let p = policy.probs(x);
        let q = initial.probs(x);
        if p.iter().zip(&q).any(|(a, b)| *a > 0.0 && *b == 0.0) {
            return Err(invalid("policy", "support not contained in the initial policy's support"));
        }
        kl += kl_divergence(&p, &q);
        proxy += dot(&p, &env.proxy[x]);
        gold += dot(&p, &env.gold[x]);
    }
    let scale = 1.0 / m as f64;
    Ok(Evaluation { kl_seq: (kl * scale).max(0.0), proxy_raw: proxy * scale, gold_raw: gold * scale })
}

/// One evaluation checkpoint of a training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunLog {
    pub step: usize,
    pub method: String,
    pub seed: u64,
    pub kl_seq: f64,
    pub proxy_raw: f64,
    pub gold_raw: f64,
    pub proxy_improvement: f64,
    pub gold_improvement: f64,
    pub budget: f64,
}

impl RunLog {
    pub fn from_evaluation(
        step: usize,
        method: &str,
        seed: u64,
        eval: Evaluation,
        baseline: Evaluation,
        budget: f64,
    ) -> Self {
        Self {
            step,
            method: method.to_string(),
            seed,
            kl_seq: eval.kl_seq,
            proxy_raw: eval.proxy_raw,
            gold_raw: eval.gold_raw,
            proxy_improvement: eval.proxy_raw - baseline.proxy_raw,
            gold_improvement: eval.gold_raw - baseline.gold_raw,
            budget,
        }
    }
}

/// Peak-gold summary of one run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrontierSummary {
    pub peak_gold: f64,
    pub proxy_at_peak: f64,
    pub gold_proxy_gap: f64,
    pub peak_kl: f64,
    pub peak_step: usize,
}

/// Selects the first checkpoint with maximal gold improvement.
pub fn frontier(logs: &[RunLog]) -> Result<FrontierSummary> {
    let first = logs.first().ok_or(DrroError::Empty("run log"))?;
    let peak = logs.iter().fold(first, |best, l| if l.gold_improvement > best.gold_improvement { l } else { best });
    Ok(FrontierSummary {
        peak_gold: peak.gold_improvement,
        proxy_at_peak: peak.proxy_improvement,
        gold_proxy_gap: peak.gold_improvement - peak.proxy_improvement,
        peak_kl: peak.kl_seq,
        peak_step: peak.step,
    })
}

/// Mean over sampled prompts of `Σ_{y ∈ S} |r̂(y) − r*(y)|`, `S` the distinct pilot responses.
pub fn pilot_budget_calibration(
    env: &SyntheticEnvironment,
    pilot_prompts: usize,
    pilot_samples: usize,
    seed: u64,
) -> Result<f64> {
    if pilot_prompts == 0 || pilot_samples == 0 {
        return Err(invalid("pilot", "pilot_prompts and pilot_samples must be >= 1"));
    }
    let initial = env.initial_policy();
    let mut rng = stream(seed, streams::PILOT);
    let m = env.num_prompts();
    let prompts: Vec<usize> = if pilot_prompts <= m {
        sample_indices(&mut rng, m, pilot_prompts).into_vec()
    } else {
        (0..pilot_prompts).map(|_| rng.random_range(0..m)).collect()
    };
    let mut totals = Vec::with_capacity(prompts.len());
    for x in prompts {
        let probs = initial.probs(x);
        let mut seen = vec![false; probs.len()];
        for _ in 0..pilot_samples {
            seen[sample_categorical(&probs, &mut rng)] = true;
        }
        let total: f64 =
            seen.iter().enumerate().filter(|(_, s)| **s).map(|(y, _)| (env.proxy[x][y] - env.gold[x][y]).abs()).sum();
        totals.push(total);
    }
    Ok(mean(&totals))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn misspec(sigma: f64, frac: f64, bonus: f64) -> MisspecConfig {
        MisspecConfig { noise_sigma: sigma, hack_fraction: frac, hack_bonus: bonus, ..MisspecConfig::aligned() }
    }

    #[test]
    fn aligned_proxy_equals_gold() {
        let env = build_environment(&EnvConfig::new(5, 7, MisspecConfig::aligned(), 3)).unwrap();
        assert_eq!(env.gold, env.proxy);
        assert_eq!(env.measured_agreement, 1.0);
        assert_eq!(pilot_budget_calibration(&env, 3, 10, 1).unwrap(), 0.0);
    }

    #[test]
    fn construction_is_deterministic() {
        let cfg = EnvConfig::new(6, 9, misspec(0.3, 0.25, 1.0), 11);
        assert_eq!(build_environment(&cfg).unwrap(), build_environment(&cfg).unwrap());
    }

    #[test]
    fn low_coverage_targets_are_least_likely() {
        let mut cfg = EnvConfig::new(4, 8, misspec(0.0, 0.25, 2.0), 5);
        cfg.init_logit_scale = 1.0;
        let env = build_environment(&cfg).unwrap();
        for x in 0..4 {
            let logits = &env.initial_logits[x];
            let hacked_max = (0..8).filter(|&i| env.hacked[x][i]).map(|i| logits[i]).fold(f64::MIN, f64::max);
            let clean_min = (0..8).filter(|&i| !env.hacked[x][i]).map(|i| logits[i]).fold(f64::MAX, f64::min);
            assert!(hacked_max <= clean_min);
            assert_eq!(env.hacked[x].iter().filter(|h| **h).count(), 2);
            for i in 0..8 {
                let extra = if env.hacked[x][i] { 2.0 } else { 0.0 };
                assert!((env.proxy[x][i] - env.gold[x][i] - extra).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn agreement_calibration_hits_target() {
        let mut m = misspec(0.2, 0.25, 0.0);
        m.target_agreement = Some(0.85);
        let env = build_environment(&EnvConfig::new(16, 32, m, 2)).unwrap();
        assert!((env.measured_agreement - 0.85).abs() <= 0.01, "{}", env.measured_agreement);
        let mut bad = misspec(5.0, 0.25, 0.0);
        bad.target_agreement = Some(0.95);
        assert!(matches!(build_environment(&EnvConfig::new(8, 8, bad, 2)), Err(DrroError::Calibration(_))));
    }

    #[test]
    fn agreement_examples() {
        let a = vec![vec![1.0, 2.0, 3.0], vec![0.5, -1.0, 2.0]];
        let neg: Vec<Vec<f64>> = a.iter().map(|r| r.iter().map(|v| -v).collect()).collect();
        assert_eq!(pairwise_agreement(&a, &a, 500, 1).unwrap(), 1.0);
        assert_eq!(pairwise_agreement(&a, &neg, 500, 1).unwrap(), 0.0);
        let tied = vec![vec![1.0, 1.0]];
        assert_eq!(pairwise_agreement(&tied, &tied, 10, 1).unwrap(), 1.0);
        assert_eq!(pairwise_agreement(&tied, &[vec![1.0, 2.0]], 10, 1).unwrap(), 0.0);
    }

    #[test]
    fn evaluation_examples() {
        let gold = vec![vec![1.0, 3.0], vec![2.0, 0.0]];
        let env = SyntheticEnvironment::from_matrices(gold.clone(), gold, vec![], vec![vec![0.0; 2]; 2]).unwrap();
        let init = env.initial_policy();
        let e = evaluate(&init, &env, &init).unwrap();
        assert_eq!(e.kl_seq, 0.0);
        assert!((e.gold_raw - 1.5).abs() < 1e-15);
        let sharp = TabularSoftmaxPolicy::new(vec![vec![-800.0, 0.0], vec![0.0, -800.0]]).unwrap();
        assert!((evaluate(&sharp, &env, &init).unwrap().gold_raw - 2.5).abs() < 1e-12);

        let one =
            SyntheticEnvironment::from_matrices(vec![vec![0.0; 2]], vec![vec![0.0; 2]], vec![], vec![vec![0.0; 2]])
                .unwrap();
        let p = TabularSoftmaxPolicy::new(vec![vec![4f64.ln(), 0.0]]).unwrap();
        let kl = evaluate(&p, &one, &one.initial_policy()).unwrap().kl_seq;
        assert!((kl - 0.192_745_2).abs() < 1e-6);
    }

    fn log(step: usize, gold: f64, proxy: f64) -> RunLog {
        RunLog {
            step,
            method: "GRPO".into(),
            seed: 0,
            kl_seq: step as f64,
            proxy_raw: proxy,
            gold_raw: gold,
            proxy_improvement: proxy,
            gold_improvement: gold,
            budget: 0.0,
        }
    }

    #[test]
    fn frontier_examples() {
        let f = frontier(&[log(0, 0.0, 0.0), log(1, 1.0, 1.5), log(2, 0.6, 2.5)]).unwrap();
        assert_eq!((f.peak_gold, f.proxy_at_peak, f.gold_proxy_gap, f.peak_kl), (1.0, 1.5, -0.5, 1.0));
        assert_eq!(frontier(&[log(0, 0.0, 0.0)]).unwrap().peak_step, 0);
        assert_eq!(frontier(&[log(0, 0.0, 0.0), log(1, 0.5, 0.0), log(2, 0.9, 0.0)]).unwrap().peak_step, 2);
        assert!(frontier(&[]).is_err());
    }

    #[test]
    fn pilot_counts_distinct_support() {
        let gold = vec![vec![0.0; 3]; 2];
        let proxy = vec![vec![1.0; 3]; 2];
        let env = SyntheticEnvironment::from_matrices(gold, proxy, vec![], vec![vec![0.0, -900.0, 0.0]; 2]).unwrap();
        // Response 1 is never drawn; with many samples both others appear.
        assert_eq!(pilot_budget_calibration(&env, 2, 200, 4).unwrap(), 2.0);
        assert_eq!(pilot_budget_calibration(&env, 2, 3, 9).unwrap(), pilot_budget_calibration(&env, 2, 3, 9).unwrap());
    }
}
