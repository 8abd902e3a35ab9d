//! Runs configured experiments: one training run per (method, seed), frontier
//! aggregation across seeds, and parameter sweeps. Runs are independent and
//! may execute on several threads; results are ordered by job, not by
//! completion.

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, MethodConfig};
use crate::env::{
    build_environment, frontier, pilot_budget_calibration, FrontierSummary, RunLog, SyntheticEnvironment,
};
use crate::error::{DrroError, Result};
use crate::io::{runlog_csv, write_atomic};
use crate::numeric::{mean, sample_std};
use crate::rng::derive;
use crate::shaping::BudgetMode;
use crate::train::{run_training, Method, TrainConfig};

/// Environment variable that replaces `output.dir`.
pub const OUTPUT_DIR_ENV: &str = "DRRO_OUTPUT_DIR";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunOutput {
    pub method: Method,
    pub seed: u64,
    pub config: TrainConfig,
    pub logs: Vec<RunLog>,
}

/// Mean and sample standard deviation (zero for a single seed).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

impl MeanStd {
    pub fn of(values: &[f64]) -> Self {
        Self { mean: mean(values), std: sample_std(values) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedFrontier {
    pub seed: u64,
    #[serde(flatten)]
    pub summary: FrontierSummary,
}

/// Frontier statistics of one method across seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodFrontier {
    pub method: Method,
    pub seeds: usize,
    pub peak_gold: MeanStd,
    pub proxy_at_peak: MeanStd,
    pub gold_proxy_gap: MeanStd,
    pub peak_kl: MeanStd,
    pub per_seed: Vec<SeedFrontier>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentOutput {
    pub runs: Vec<RunOutput>,
    pub frontier: Vec<MethodFrontier>,
}

/// One grid point of a sweep with its resolved parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub index: usize,
    pub method: Method,
    pub group_size: usize,
    pub tau: f64,
    pub budget_base: f64,
    pub alpha: f64,
    pub budget_mode: BudgetMode,
    pub frontier: MethodFrontier,
}

/// Environment used for `seed`.
pub fn environment_for(cfg: &ExperimentConfig, seed: u64) -> Result<SyntheticEnvironment> {
    let mut env = cfg.environment.clone();
    if cfg.resample_environment {
        env.seed = derive(cfg.environment.seed, seed);
    }
    build_environment(&env)
}

/// Unscaled pilot estimate for `seed`, if the config has a pilot section.
pub fn pilot_delta(cfg: &ExperimentConfig, env: &SyntheticEnvironment, seed: u64) -> Result<Option<f64>> {
    cfg.pilot.map(|p| pilot_budget_calibration(env, p.prompts, p.samples, seed)).transpose()
}

/// Runs `f` over `0..jobs` on up to `threads` workers, returning results in job order.
pub fn parallel_map<T: Send>(jobs: usize, threads: usize, f: impl Fn(usize) -> Result<T> + Sync) -> Result<Vec<T>> {
    let slots: Vec<Mutex<Option<Result<T>>>> = (0..jobs).map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    std::thread::scope(|s| {
        for _ in 0..threads.clamp(1, jobs.max(1)) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= jobs {
                    break;
                }
                let r = f(i);
                *slots[i].lock().expect("slot lock") = Some(r);
            });
        }
    });
    slots.into_iter().map(|m| m.into_inner().expect("slot lock").expect("every job ran")).collect()
}

fn default_threads() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

/// Trains every method in `methods` on every configured seed.
pub fn run_methods(cfg: &ExperimentConfig, methods: &[MethodConfig], threads: usize) -> Result<Vec<RunOutput>> {
    let jobs: Vec<(usize, u64)> = (0..methods.len()).flat_map(|m| cfg.seeds.iter().map(move |&s| (m, s))).collect();
    parallel_map(jobs.len(), threads, |i| {
        let (m, seed) = jobs[i];
        let env = environment_for(cfg, seed)?;
        let pilot = pilot_delta(cfg, &env, seed)?;
        let config = methods[m].resolve(env.num_responses(), cfg.eval_interval, seed, pilot)?;
        let logs = run_training(&env, &config)?;
        Ok(RunOutput { method: methods[m].method, seed, config, logs })
    })
}

/// Aggregates runs of one method.
pub fn aggregate(method: Method, runs: &[&RunOutput]) -> Result<MethodFrontier> {
    if runs.is_empty() {
        return Err(DrroError::Empty("runs to aggregate"));
    }
    let per_seed: Vec<SeedFrontier> =
        runs.iter().map(|r| Ok(SeedFrontier { seed: r.seed, summary: frontier(&r.logs)? })).collect::<Result<_>>()?;
    let col = |f: fn(&FrontierSummary) -> f64| MeanStd::of(&per_seed.iter().map(|p| f(&p.summary)).collect::<Vec<_>>());
    Ok(MethodFrontier {
        method,
        seeds: per_seed.len(),
        peak_gold: col(|s| s.peak_gold),
        proxy_at_peak: col(|s| s.proxy_at_peak),
        gold_proxy_gap: col(|s| s.gold_proxy_gap),
        peak_kl: col(|s| s.peak_kl),
        per_seed,
    })
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    run_experiment_with_threads(cfg, default_threads())
}

pub fn run_experiment_with_threads(cfg: &ExperimentConfig, threads: usize) -> Result<ExperimentOutput> {
    cfg.validate()?;
    if cfg.training.is_empty() {
        return Err(DrroError::Config("`training` lists no methods".into()));
    }
    let runs = run_methods(cfg, &cfg.training, threads)?;
    let frontier = cfg
        .training
        .iter()
        .map(|m| aggregate(m.method, &runs.iter().filter(|r| r.method == m.method).collect::<Vec<_>>()))
        .collect::<Result<_>>()?;
    Ok(ExperimentOutput { runs, frontier })
}

/// Number of grid points the sweep will train.
pub fn sweep_size(cfg: &ExperimentConfig) -> Result<usize> {
    Ok(cfg.sweep.as_ref().ok_or_else(|| DrroError::Config("config has no `sweep` section".into()))?.points().len())
}

pub fn run_sweep(cfg: &ExperimentConfig) -> Result<Vec<SweepPoint>> {
    cfg.validate()?;
    let points = cfg.sweep.as_ref().ok_or_else(|| DrroError::Config("config has no `sweep` section".into()))?.points();
    let runs = run_methods(cfg, &points, default_threads())?;
    let per_point = cfg.seeds.len();
    runs.chunks(per_point)
        .enumerate()
        .map(|(index, chunk)| {
            let c = &chunk[0].config;
            Ok(SweepPoint {
                index,
                method: c.method,
                group_size: c.group_size,
                tau: c.tau,
                budget_base: c.budget.base,
                alpha: c.budget.alpha,
                budget_mode: c.budget.mode,
                frontier: aggregate(c.method, &chunk.iter().collect::<Vec<_>>())?,
            })
        })
        .collect()
}

pub fn csv_file_name(method: Method, seed: u64) -> String {
    format!("{}_seed{}.csv", method.label(), seed)
}

/// Writes one CSV per run plus the frontier JSON; returns the written paths.
pub fn write_experiment(out: &ExperimentOutput, dir: &Path, frontier_file: &str) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    for run in &out.runs {
        let path = dir.join(csv_file_name(run.method, run.seed));
        write_atomic(&path, &runlog_csv(&run.logs)?)?;
        written.push(path);
    }
    let path = dir.join(frontier_file);
    write_atomic(&path, serde_json::to_string_pretty(&out.frontier)?.as_bytes())?;
    written.push(path);
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{OutputConfig, SweepConfig};
    use crate::env::{EnvConfig, MisspecConfig};

    fn small() -> ExperimentConfig {
        let mut methods = vec![MethodConfig::new(Method::Grpo), MethodConfig::new(Method::Dro)];
        for m in &mut methods {
            m.outer_iterations = Some(6);
            m.group_size = Some(4);
            m.prompt_batch = Some(2);
        }
        ExperimentConfig {
            environment: EnvConfig::new(4, 8, MisspecConfig { noise_sigma: 0.5, ..MisspecConfig::aligned() }, 5),
            resample_environment: true,
            training: methods,
            sweep: None,
            pilot: None,
            output: OutputConfig { dir: "unused".into(), frontier_file: "f.json".into(), sweep_file: "s.json".into() },
            eval_interval: 2,
            seeds: vec![1, 2, 3],
        }
    }

    #[test]
    fn thread_count_does_not_change_results() {
        let cfg = small();
        let a = run_experiment_with_threads(&cfg, 1).unwrap();
        let b = run_experiment_with_threads(&cfg, 4).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.runs.len(), 6);
        assert_eq!(a.frontier.len(), 2);
        assert_eq!(a.frontier[0].seeds, 3);
        let steps: Vec<usize> = a.runs[0].logs.iter().map(|l| l.step).collect();
        assert_eq!(steps, vec![0, 2, 4, 6]);
    }

    #[test]
    fn mean_std_of_values() {
        let m = MeanStd::of(&[1.0, 3.0]);
        assert_eq!(m.mean, 2.0);
        assert!((m.std - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(MeanStd::of(&[4.0]).std, 0.0);
    }

    #[test]
    fn single_point_sweep_matches_training() {
        let mut cfg = small();
        cfg.training.truncate(1);
        cfg.sweep = Some(SweepConfig {
            base: cfg.training[0].clone(),
            delta: vec![],
            alpha: vec![],
            tau: vec![],
            group_size: vec![],
        });
        let sweep = run_sweep(&cfg).unwrap();
        let train = run_experiment(&cfg).unwrap();
        assert_eq!(sweep.len(), 1);
        assert_eq!(sweep[0].frontier, train.frontier[0]);
    }

    #[test]
    fn writes_files() {
        let dir = tempfile::tempdir().unwrap();
        let out = run_experiment(&small()).unwrap();
        let paths = write_experiment(&out, dir.path(), "f.json").unwrap();
        assert_eq!(paths.len(), 7);
        assert!(dir.path().join("DRO_seed3.csv").exists());
        let json: Vec<MethodFrontier> =
            serde_json::from_slice(&std::fs::read(dir.path().join("f.json")).unwrap()).unwrap();
        assert_eq!(json, out.frontier);
    }
}
