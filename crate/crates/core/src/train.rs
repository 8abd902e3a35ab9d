//! Outer rollout/update loop shared by every method.
//!
//! Each outer iteration freezes the rollout policy, samples `B` prompts and
//! `G` responses per prompt, shapes the proxy rewards according to the
//! method, normalizes them within each group and takes `S` ascent steps on the
//! clipped surrogate. No KL penalty enters the objective; KL only drives the
//! dynamic ambiguity budget.

use std::fmt;
use std::str::FromStr;

use rand::seq::index::sample as sample_indices;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::env::{evaluate, RunLog, SyntheticEnvironment};
use crate::error::{check_len, invalid, DrroError, Result};
use crate::grpo::{clipped_surrogate, grpo_advantages, shape_dro, shape_hard, shape_soft, RolloutGroup};
use crate::numeric::mean;
use crate::policy::TabularSoftmaxPolicy;
use crate::rng::{stream, streams};
use crate::shaping::{dynamic_budget, k3_kl, BudgetConfig, BudgetMode, KlSmoother, DEFAULT_KL_WINDOW};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "GRPO")]
    Grpo,
    #[serde(rename = "DRO")]
    Dro,
    #[serde(rename = "DRRO_hard")]
    DrroHard,
    #[serde(rename = "DRRO_soft")]
    DrroSoft,
    #[serde(rename = "DRRO_soft_dynamic")]
    DrroSoftDynamic,
    #[serde(rename = "EnsembleMean")]
    EnsembleMean,
    #[serde(rename = "EnsembleUWO")]
    EnsembleUwo,
}

impl Method {
    pub const ALL: [Method; 7] = [
        Method::Grpo,
        Method::Dro,
        Method::DrroHard,
        Method::DrroSoft,
        Method::DrroSoftDynamic,
        Method::EnsembleMean,
        Method::EnsembleUwo,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Method::Grpo => "GRPO",
            Method::Dro => "DRO",
            Method::DrroHard => "DRRO_hard",
            Method::DrroSoft => "DRRO_soft",
            Method::DrroSoftDynamic => "DRRO_soft_dynamic",
            Method::EnsembleMean => "EnsembleMean",
            Method::EnsembleUwo => "EnsembleUWO",
        }
    }

    pub fn uses_budget(self) -> bool {
        matches!(self, Method::Dro | Method::DrroHard | Method::DrroSoft | Method::DrroSoftDynamic)
    }

    fn uses_ensemble(self) -> bool {
        matches!(self, Method::EnsembleMean | Method::EnsembleUwo)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Method {
    type Err = DrroError;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL.into_iter().find(|m| m.label().eq_ignore_ascii_case(s)).ok_or_else(|| {
            let names: Vec<_> = Method::ALL.iter().map(|m| m.label()).collect();
            invalid("method", format!("unknown method {s:?}; expected one of {}", names.join(", ")))
        })
    }
}

/// Which KL estimate sets the dynamic budget.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KlScope {
    /// Sliding-window mean of the batch-level k3 estimate, shared by all groups.
    #[default]
    Run,
    /// Each group uses its own unsmoothed k3 estimate.
    Prompt,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub method: Method,
    pub outer_iterations: usize,
    pub prompt_batch: usize,
    pub group_size: usize,
    pub clip_radius: f64,
    pub pg_steps: usize,
    pub learning_rate: f64,
    pub tau: f64,
    pub budget: BudgetConfig,
    pub adv_epsilon: f64,
    pub uwo_lambda: f64,
    pub seed: u64,
    pub eval_interval: usize,
    #[serde(default)]
    pub kl_scope: KlScope,
    #[serde(default = "default_kl_window")]
    pub kl_window: usize,
}

fn default_kl_window() -> usize {
    DEFAULT_KL_WINDOW
}

impl TrainConfig {
    /// Defaults: ε_clip 0.2, S 1, G 16, τ 2, α 10, fixed δ̃ 2.5·G, lr 0.1, B 16, 300 updates.
    pub fn new(method: Method, conceptual_n: usize) -> Self {
        let group_size = 16;
        let budget = match method {
            Method::DrroSoftDynamic => BudgetConfig::dynamic(0.0, 10.0, group_size, conceptual_n),
            _ => BudgetConfig::fixed(2.5 * group_size as f64, group_size, conceptual_n),
        };
        Self {
            method,
            outer_iterations: 300,
            prompt_batch: 16,
            group_size,
            clip_radius: 0.2,
            pg_steps: 1,
            learning_rate: 0.1,
            tau: 2.0,
            budget,
            adv_epsilon: 1e-6,
            uwo_lambda: 1.0,
            seed: 0,
            eval_interval: 5,
            kl_scope: KlScope::Run,
            kl_window: DEFAULT_KL_WINDOW,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.clip_radius > 0.0 && self.clip_radius < 1.0) {
            return Err(invalid("clip_radius", format!("must lie in (0, 1), got {}", self.clip_radius)));
        }
        if self.group_size < 2 {
            return Err(invalid("group_size", "must be >= 2"));
        }
        if self.prompt_batch == 0 || self.pg_steps == 0 || self.eval_interval == 0 || self.kl_window == 0 {
            return Err(invalid("counts", "prompt_batch, pg_steps, eval_interval and kl_window must be >= 1"));
        }
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return Err(invalid("learning_rate", "must be finite and > 0"));
        }
        if !(self.tau > 0.0) || !self.tau.is_finite() {
            return Err(invalid("tau", "must be finite and > 0"));
        }
        if !(self.adv_epsilon >= 0.0) {
            return Err(invalid("adv_epsilon", "must be >= 0"));
        }
        if !(self.uwo_lambda >= 0.0) {
            return Err(invalid("uwo_lambda", "must be >= 0"));
        }
        self.budget.validate()?;
        if self.budget.group_size != self.group_size {
            return Err(invalid("budget.group_size", "must equal group_size"));
        }
        Ok(())
    }

    fn effective_budget(&self) -> BudgetConfig {
        let mut b = self.budget.clone();
        if self.method == Method::DrroSoftDynamic {
            b.mode = BudgetMode::Dynamic;
        }
        b
    }
}

/// Running mean and variance over every score a member has produced.
#[derive(Debug, Clone, Default)]
struct RunningMoments {
    count: f64,
    mean: f64,
    m2: f64,
}

impl RunningMoments {
    fn push(&mut self, x: f64) {
        self.count += 1.0;
        let d = x - self.mean;
        self.mean += d / self.count;
        self.m2 += d * (x - self.mean);
    }

    fn z(&self, x: f64) -> f64 {
        let var = if self.count > 1.0 { self.m2 / self.count } else { 0.0 };
        if var > 0.0 {
            (x - self.mean) / var.sqrt()
        } else {
            x - self.mean
        }
    }
}

/// Per-member z-scored ensemble aggregation, `mean − λ·var` across members.
struct EnsembleScorer {
    moments: Vec<RunningMoments>,
    lambda: f64,
}

impl EnsembleScorer {
    fn score(&mut self, env: &SyntheticEnvironment, prompt: usize, responses: &[usize]) -> Vec<f64> {
        for (member, moments) in env.ensemble.iter().zip(&mut self.moments) {
            for &y in responses {
                moments.push(member[prompt][y]);
            }
        }
        responses
            .iter()
            .map(|&y| {
                let z: Vec<f64> =
                    env.ensemble.iter().zip(&self.moments).map(|(member, m)| m.z(member[prompt][y])).collect();
                let mu = mean(&z);
                let var = z.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / z.len() as f64;
                mu - self.lambda * var
            })
            .collect()
    }
}

/// Trains one policy and returns the evaluation checkpoints, starting at step 0.
pub fn run_training(env: &SyntheticEnvironment, config: &TrainConfig) -> Result<Vec<RunLog>> {
    Ok(train(env, config)?.0)
}

/// Like [`run_training`], also returning the final policy.
pub fn train(env: &SyntheticEnvironment, config: &TrainConfig) -> Result<(Vec<RunLog>, TabularSoftmaxPolicy)> {
    config.validate()?;
    let n = env.num_responses();
    if config.budget.conceptual_n != n {
        return Err(invalid(
            "budget.conceptual_n",
            format!("must equal the environment's response count {n}, got {}", config.budget.conceptual_n),
        ));
    }
    if config.group_size > n {
        return Err(invalid("group_size", format!("exceeds response count {n}")));
    }
    if config.method.uses_ensemble() && env.ensemble.len() < 2 {
        return Err(invalid("ensemble", "ensemble methods need at least two members"));
    }
    check_len(env.num_prompts(), env.initial_logits.len())?;

    let method = config.method;
    let label = method.label();
    let budget_cfg = config.effective_budget();
    let mut rng = stream(config.seed, streams::TRAIN);
    let initial = env.initial_policy();
    let mut policy = initial.clone();
    let baseline = evaluate(&policy, env, &initial)?;
    let budget_of = |kl: f64| -> Result<f64> {
        if method.uses_budget() {
            dynamic_budget(&budget_cfg, kl)
        } else {
            Ok(0.0)
        }
    };
    let mut logs = vec![RunLog::from_evaluation(0, label, config.seed, baseline, baseline, budget_of(0.0)?)];

    let mut smoother = KlSmoother::new(config.kl_window);
    let mut ensemble = EnsembleScorer {
        moments: vec![RunningMoments::default(); env.ensemble.len()],
        lambda: if method == Method::EnsembleUwo { config.uwo_lambda } else { 0.0 },
    };
    let m_prompts = env.num_prompts();

    for step in 1..=config.outer_iterations {
        let rollout = policy.clone();
        let prompts = draw_prompts(&mut rng, m_prompts, config.prompt_batch);
        let mut groups = Vec::with_capacity(prompts.len());
        let mut group_kls = Vec::with_capacity(prompts.len());
        for &x in &prompts {
            let mut group = RolloutGroup::sample(&rollout, x, config.group_size, &env.proxy[x], &mut rng)?;
            if method.uses_ensemble() {
                group.proxy_rewards = ensemble.score(env, x, &group.response_indices);
            }
            let log_ref = initial.log_probs(x);
            let ref_at: Vec<f64> = group.response_indices.iter().map(|&y| log_ref[y]).collect();
            group_kls.push(k3_kl(&ref_at, &group.rollout_log_probs)?);
            groups.push(group);
        }
        let run_kl = smoother.push(mean(&group_kls));

        let mut used_budgets = Vec::with_capacity(groups.len());
        for (group, &group_kl) in groups.iter_mut().zip(&group_kls) {
            let kl = match config.kl_scope {
                KlScope::Run => run_kl,
                KlScope::Prompt => group_kl,
            };
            let delta = budget_of(kl)?;
            used_budgets.push(delta);
            group.shaped_rewards = match method {
                Method::Grpo | Method::EnsembleMean | Method::EnsembleUwo => group.proxy_rewards.clone(),
                Method::Dro => shape_dro(group, delta)?,
                Method::DrroHard => shape_hard(group, delta)?,
                Method::DrroSoft | Method::DrroSoftDynamic => shape_soft(group, delta, config.tau)?,
            };
            group.advantages = grpo_advantages(&group.shaped_rewards, config.adv_epsilon)?;
        }

        for _ in 0..config.pg_steps {
            let out = clipped_surrogate(&groups, &policy, config.clip_radius)?;
            policy.apply_gradient(&out.gradient, config.learning_rate);
        }

        if step % config.eval_interval == 0 || step == config.outer_iterations {
            let eval = evaluate(&policy, env, &initial)?;
            logs.push(RunLog::from_evaluation(step, label, config.seed, eval, baseline, mean(&used_budgets)));
        }
    }
    Ok((logs, policy))
}

/// `B` distinct prompts when `B ≤ M`, otherwise `B` draws with replacement.
fn draw_prompts<R: Rng>(rng: &mut R, m: usize, b: usize) -> Vec<usize> {
    if b <= m {
        sample_indices(rng, m, b).into_vec()
    } else {
        (0..b).map(|_| rng.random_range(0..m)).collect()
    }
}
