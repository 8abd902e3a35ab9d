use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use drro::config::ExperimentConfig;
use drro::dro::solve_dro;
use drro::env::pilot_budget_calibration;
use drro::experiment::{environment_for, run_experiment, run_sweep, sweep_size, write_experiment, OUTPUT_DIR_ENV};
use drro::io::write_atomic;
use drro::shaping::scaled_budget;
use drro::simplex::{
    greedy_policy, lp_robust_regret, soft_utility, solve_water_filling, worst_case_regret, AmbiguityBudget, NormOrder,
    RewardVector,
};
use drro::verify::{run_all, Suite, SuiteReport};
use drro::DrroError;

/// Regret-robust reward shaping toolkit.
#[derive(Parser)]
#[command(name = "drro", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one promptwise problem and print the robust policy as JSON.
    Solve {
        /// Comma-separated proxy rewards, e.g. 4,3,2,1.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        rewards: Vec<f64>,
        /// ℓ1 ambiguity budget δ ≥ 0.
        #[arg(long)]
        delta: f64,
        /// Also report the soft (log-sum-exp) utility at this temperature.
        #[arg(long)]
        tau: Option<f64>,
        /// Also report the worst-case regret under an ℓp ball of this order (inf allowed).
        #[arg(long)]
        p: Option<f64>,
    },
    /// Train every configured method on every seed; write run-log CSVs and frontier JSON.
    Train {
        config: PathBuf,
        /// Output directory; overrides the DRRO_OUTPUT_DIR variable and the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train every point of the config's sweep grid and write the summaries.
    Sweep {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run oracle and invariant suites; exits nonzero if any check fails.
    Verify {
        /// Suite name or `all`.
        #[arg(default_value = "all")]
        suite: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Pilot-calibrate the initial scaled budget for a config's environment.
    Calibrate {
        config: PathBuf,
        #[arg(long, default_value_t = 64)]
        pilot_prompts: usize,
        #[arg(long, default_value_t = 16)]
        pilot_samples: usize,
        /// Group size used to scale the estimate.
        #[arg(long, default_value_t = 16)]
        group_size: usize,
        /// Seed; defaults to the config's first seed.
        #[arg(long)]
        seed: Option<u64>,
    },
}

/// Input problems exit with 2, failed checks and runtime errors with 1.
enum Failure {
    Input(String),
    Runtime(String),
    Checks,
}

impl From<DrroError> for Failure {
    fn from(e: DrroError) -> Self {
        match e {
            DrroError::Io(_) => Failure::Runtime(e.to_string()),
            _ => Failure::Input(e.to_string()),
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Checks) => ExitCode::from(1),
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn print_json(v: &Value) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(v).map_err(|e| Failure::Runtime(e.to_string()))?;
    match writeln!(std::io::stdout().lock(), "{text}") {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(Failure::Runtime(e.to_string())),
        _ => Ok(()),
    }
}

fn load_config(path: &Path) -> Result<ExperimentConfig, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    ExperimentConfig::from_json(&text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn output_dir(flag: Option<PathBuf>, cfg: &ExperimentConfig) -> PathBuf {
    flag.or_else(|| std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from)).unwrap_or_else(|| cfg.output.dir.clone())
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Solve { rewards, delta, tau, p } => print_json(&solve(rewards, delta, tau, p)?),
        Command::Train { config, out } => {
            let cfg = load_config(&config)?;
            let dir = output_dir(out, &cfg);
            let output = run_experiment(&cfg)?;
            for path in write_experiment(&output, &dir, &cfg.output.frontier_file)? {
                eprintln!("wrote {}", path.display());
            }
            print_json(&json!(output.frontier))
        }
        Command::Sweep { config, out } => {
            let cfg = load_config(&config)?;
            let dir = output_dir(out, &cfg);
            eprintln!("sweep: {} grid points x {} seeds", sweep_size(&cfg)?, cfg.seeds.len());
            let points = run_sweep(&cfg)?;
            let path = dir.join(&cfg.output.sweep_file);
            let text = serde_json::to_string_pretty(&points).map_err(|e| Failure::Runtime(e.to_string()))?;
            write_atomic(&path, text.as_bytes())?;
            eprintln!("wrote {}", path.display());
            print_json(&json!(points))
        }
        Command::Verify { suite, seed } => {
            let reports: Vec<SuiteReport> =
                if suite == "all" { run_all(seed)? } else { vec![suite.parse::<Suite>()?.run(seed)?] };
            let passed = reports.iter().all(|r| r.passed);
            print_json(&json!({ "seed": seed, "passed": passed, "suites": reports }))?;
            if passed {
                Ok(())
            } else {
                Err(Failure::Checks)
            }
        }
        Command::Calibrate { config, pilot_prompts, pilot_samples, group_size, seed } => {
            let cfg = load_config(&config)?;
            let seed = seed.unwrap_or(cfg.seeds[0]);
            let env = environment_for(&cfg, seed)?;
            let delta = pilot_budget_calibration(&env, pilot_prompts, pilot_samples, seed)?;
            print_json(&json!({
                "seed": seed,
                "pilot_delta": delta,
                "group_size": group_size,
                "scaled_delta": scaled_budget(delta, group_size, env.num_responses())?,
                "hack_bonus": env.hack_bonus,
                "measured_agreement": env.measured_agreement,
            }))
        }
    }
}

fn solve(rewards: Vec<f64>, delta: f64, tau: Option<f64>, p: Option<f64>) -> Result<Value, Failure> {
    let r = RewardVector::new(rewards)?;
    let budget = AmbiguityBudget::new(delta)?;
    let (policy, mut out) = if delta == 0.0 {
        let policy = greedy_policy(&r);
        let (regret, k) = worst_case_regret(&policy, &r, budget)?;
        let out = json!({ "greedy": true, "policy": policy, "worst_case_regret": regret, "adversary_index": k });
        (policy, out)
    } else {
        let s = solve_water_filling(&r, budget)?;
        let out = json!({
            "greedy": false,
            "t0": s.t0,
            "t_star": s.t_star,
            "policy": s.policy,
            "worst_case_regret": s.worst_case_regret,
            "adversary_index": s.adversary_index,
        });
        (s.policy, out)
    };
    let dro = solve_dro(&r, delta)?;
    out["dro"] = json!({ "policy": dro.policy, "worst_case_value": dro.objective, "support_size": dro.support_size });
    if let Some(tau) = tau {
        out["soft_utility"] = json!(soft_utility(&policy, &r, budget, tau)?);
    }
    if let Some(p) = p {
        out["lp_robust_regret"] = json!(lp_robust_regret(&policy, &r, delta, NormOrder::from_p(p)?)?);
    }
    Ok(out)
}
