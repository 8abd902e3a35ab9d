//! Strict JSON experiment configuration.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::env::EnvConfig;
use crate::error::{DrroError, Result};
use crate::shaping::{scaled_budget, BudgetConfig};
use crate::train::{KlScope, Method, TrainConfig};

/// One training method. Omitted fields take the defaults of
/// [`TrainConfig::new`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MethodConfig {
    pub method: Method,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outer_iterations: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prompt_batch: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub group_size: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clip_radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pg_steps: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub learning_rate: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    /// Scaled budget δ̃, or δ̃₀ for the dynamic method.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    /// Take δ̃₀ from pilot calibration instead of `delta`.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub delta_from_pilot: bool,
    /// KL growth rate of the dynamic budget.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub adv_epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub uwo_lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kl_scope: Option<KlScope>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kl_window: Option<usize>,
}

impl MethodConfig {
    pub fn new(method: Method) -> Self {
        Self {
            method,
            outer_iterations: None,
            prompt_batch: None,
            group_size: None,
            clip_radius: None,
            pg_steps: None,
            learning_rate: None,
            tau: None,
            delta: None,
            delta_from_pilot: false,
            alpha: None,
            adv_epsilon: None,
            uwo_lambda: None,
            kl_scope: None,
            kl_window: None,
        }
    }

    /// Full training config for `n` responses. `pilot_delta` is the unscaled
    /// pilot estimate, required when `delta_from_pilot` is set.
    pub fn resolve(&self, n: usize, eval_interval: usize, seed: u64, pilot_delta: Option<f64>) -> Result<TrainConfig> {
        if self.alpha.is_some() && self.method != Method::DrroSoftDynamic {
            return Err(DrroError::Config(format!("`alpha` only applies to DRRO_soft_dynamic, not {}", self.method)));
        }
        if self.delta_from_pilot && self.delta.is_some() {
            return Err(DrroError::Config("set either `delta` or `delta_from_pilot`, not both".into()));
        }
        let mut c = TrainConfig::new(self.method, n);
        let g = self.group_size.unwrap_or(c.group_size);
        c.group_size = g;
        c.outer_iterations = self.outer_iterations.unwrap_or(c.outer_iterations);
        c.prompt_batch = self.prompt_batch.unwrap_or(c.prompt_batch);
        c.clip_radius = self.clip_radius.unwrap_or(c.clip_radius);
        c.pg_steps = self.pg_steps.unwrap_or(c.pg_steps);
        c.learning_rate = self.learning_rate.unwrap_or(c.learning_rate);
        c.tau = self.tau.unwrap_or(c.tau);
        c.adv_epsilon = self.adv_epsilon.unwrap_or(c.adv_epsilon);
        c.uwo_lambda = self.uwo_lambda.unwrap_or(c.uwo_lambda);
        c.kl_scope = self.kl_scope.unwrap_or(c.kl_scope);
        c.kl_window = self.kl_window.unwrap_or(c.kl_window);
        c.eval_interval = eval_interval;
        c.seed = seed;
        let delta = if self.delta_from_pilot {
            let d =
                pilot_delta.ok_or_else(|| DrroError::Config("`delta_from_pilot` needs a `pilot` section".into()))?;
            Some(scaled_budget(d, g, n)?)
        } else {
            self.delta
        };
        c.budget = if self.method == Method::DrroSoftDynamic {
            BudgetConfig::dynamic(delta.unwrap_or(0.0), self.alpha.unwrap_or(10.0), g, n)
        } else {
            BudgetConfig::fixed(delta.unwrap_or(2.5 * g as f64), g, n)
        };
        c.validate()?;
        Ok(c)
    }
}

/// Pilot calibration of δ̃₀ on the initial policy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PilotConfig {
    pub prompts: usize,
    pub samples: usize,
}

/// Grid over one base method. An empty axis keeps the base value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub base: MethodConfig,
    #[serde(default)]
    pub delta: Vec<f64>,
    #[serde(default)]
    pub alpha: Vec<f64>,
    #[serde(default)]
    pub tau: Vec<f64>,
    #[serde(default)]
    pub group_size: Vec<usize>,
}

impl SweepConfig {
    /// Cross product in the order delta, alpha, tau, group size.
    pub fn points(&self) -> Vec<MethodConfig> {
        fn axis<T: Copy>(v: &[T]) -> Vec<Option<T>> {
            if v.is_empty() {
                vec![None]
            } else {
                v.iter().map(|x| Some(*x)).collect()
            }
        }
        let mut out = Vec::new();
        for d in axis(&self.delta) {
            for a in axis(&self.alpha) {
                for t in axis(&self.tau) {
                    for g in axis(&self.group_size) {
                        let mut m = self.base.clone();
                        if d.is_some() {
                            m.delta = d;
                            m.delta_from_pilot = false;
                        }
                        m.alpha = a.or(m.alpha);
                        m.tau = t.or(m.tau);
                        m.group_size = g.or(m.group_size);
                        out.push(m);
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
    #[serde(default = "default_frontier_file")]
    pub frontier_file: String,
    #[serde(default = "default_sweep_file")]
    pub sweep_file: String,
}

fn default_frontier_file() -> String {
    "frontier.json".into()
}

fn default_sweep_file() -> String {
    "sweep.json".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub environment: EnvConfig,
    /// Rebuild the environment per seed from `derive(environment.seed, seed)`.
    #[serde(default = "default_true")]
    pub resample_environment: bool,
    pub training: Vec<MethodConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pilot: Option<PilotConfig>,
    pub output: OutputConfig,
    pub eval_interval: usize,
    pub seeds: Vec<u64>,
}

fn default_true() -> bool {
    true
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        self.environment.validate()?;
        if self.seeds.is_empty() {
            return Err(DrroError::Config("`seeds` must list at least one seed".into()));
        }
        if self.eval_interval == 0 {
            return Err(DrroError::Config("`eval_interval` must be >= 1".into()));
        }
        let mut methods: Vec<_> = self.training.iter().map(|m| m.method).collect();
        methods.sort_by_key(|m| m.label());
        methods.dedup();
        if methods.len() != self.training.len() {
            return Err(DrroError::Config("each method may appear at most once in `training`".into()));
        }
        let pilot = self.pilot.map(|_| 1.0);
        let n = self.environment.responses;
        let points = self.sweep.as_ref().map(SweepConfig::points).unwrap_or_default();
        for m in self.training.iter().chain(&points) {
            m.resolve(n, self.eval_interval, 0, pilot)?;
        }
        if let Some(s) = &self.sweep {
            if s.delta.iter().chain(&s.alpha).chain(&s.tau).any(|v| !v.is_finite()) {
                return Err(DrroError::Config("sweep values must be finite".into()));
            }
        }
        Ok(())
    }
}
