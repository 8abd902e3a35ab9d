//! Browser bindings. Each export wraps a plain function returning JSON so the
//! logic is testable natively.

use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

use drro::dro::solve_dro;
use drro::env::{build_environment, EnvConfig, HackTargets, MisspecConfig};
use drro::shaping::BudgetConfig;
use drro::simplex::{
    greedy_policy, solve_water_filling, worst_case_regret, AmbiguityBudget, PolicyVector, RewardVector,
};
use drro::train::{run_training, Method, TrainConfig};

fn parse_rewards(text: &str) -> Result<RewardVector, String> {
    let values = text
        .split([',', ' ', '\t', '\n'])
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<f64>().map_err(|_| format!("not a number: {s:?}")))
        .collect::<Result<Vec<_>, _>>()?;
    RewardVector::new(values).map_err(|e| e.to_string())
}

fn robust_policy(r: &RewardVector, delta: f64) -> Result<PolicyVector, String> {
    if delta == 0.0 {
        return Ok(greedy_policy(r));
    }
    let budget = AmbiguityBudget::new(delta).map_err(|e| e.to_string())?;
    solve_water_filling(r, budget).map(|s| s.policy).map_err(|e| e.to_string())
}

fn regret_of(pi: &PolicyVector, r: &RewardVector, delta: f64) -> Result<f64, String> {
    let budget = AmbiguityBudget::new(delta).map_err(|e| e.to_string())?;
    worst_case_regret(pi, r, budget).map(|(v, _)| v).map_err(|e| e.to_string())
}

/// Regret-robust and DRO policies for one reward vector.
pub fn solve_json(rewards: &str, delta: f64) -> Result<String, String> {
    let r = parse_rewards(rewards)?;
    AmbiguityBudget::new(delta).map_err(|e| e.to_string())?;
    let mut out = json!({ "rewards": r.as_slice(), "delta": delta });
    if delta > 0.0 {
        let s = solve_water_filling(&r, AmbiguityBudget::new(delta).map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())?;
        out["t0"] = json!(s.t0);
        out["t_star"] = json!(s.t_star);
    }
    let pi = robust_policy(&r, delta)?;
    let dro = solve_dro(&r, delta).map_err(|e| e.to_string())?;
    out["drro"] = json!({ "policy": pi.as_slice(), "worst_case_regret": regret_of(&pi, &r, delta)? });
    out["dro"] = json!({
        "policy": dro.policy.as_slice(),
        "worst_case_regret": regret_of(&dro.policy, &r, delta)?,
        "support_size": dro.support_size,
    });
    Ok(out.to_string())
}

/// Both policies along a budget grid `0..=max_delta`.
pub fn budget_path_json(rewards: &str, max_delta: f64, points: usize) -> Result<String, String> {
    let r = parse_rewards(rewards)?;
    if !(max_delta.is_finite() && max_delta > 0.0) {
        return Err("max budget must be positive".into());
    }
    if !(2..=400).contains(&points) {
        return Err("points must lie in 2..=400".into());
    }
    let rows = (0..points)
        .map(|k| {
            let delta = max_delta * k as f64 / (points - 1) as f64;
            let pi = robust_policy(&r, delta)?;
            let dro = solve_dro(&r, delta).map_err(|e| e.to_string())?;
            let support = pi.as_slice().iter().filter(|p| **p > 0.0).count();
            Ok(json!({
                "delta": delta,
                "drro_regret": regret_of(&pi, &r, delta)?,
                "dro_regret": regret_of(&dro.policy, &r, delta)?,
                "drro_support": support,
                "dro_support": dro.support_size,
                "drro_policy": pi.as_slice(),
                "dro_policy": dro.policy.as_slice(),
            }))
        })
        .collect::<Result<Vec<Value>, String>>()?;
    Ok(Value::Array(rows).to_string())
}

/// Gold and proxy curves of GRPO, DRRO_soft_dynamic and DRO on a small
/// misspecified environment.
pub fn train_json(seed: u64, iterations: usize) -> Result<String, String> {
    if !(1..=500).contains(&iterations) {
        return Err("iterations must lie in 1..=500".into());
    }
    let misspec = MisspecConfig {
        noise_sigma: 0.3,
        hack_fraction: 0.125,
        hack_bonus: 1.5,
        hack_targets: HackTargets::LowCoverage,
        ..MisspecConfig::aligned()
    };
    let mut cfg = EnvConfig::new(16, 16, misspec, seed);
    cfg.agreement_pairs = 2_000;
    let env = build_environment(&cfg).map_err(|e| e.to_string())?;
    let n = env.num_responses();
    let curves = [Method::Grpo, Method::DrroSoftDynamic, Method::Dro]
        .into_iter()
        .map(|method| {
            let mut c = TrainConfig::new(method, n);
            c.group_size = 8;
            c.prompt_batch = 8;
            c.outer_iterations = iterations;
            c.learning_rate = 20.0;
            c.eval_interval = (iterations / 50).max(1);
            c.seed = seed;
            if method == Method::DrroSoftDynamic {
                c.budget = BudgetConfig::dynamic(0.0, 10.0, c.group_size, n);
            } else {
                c.budget = BudgetConfig::fixed(2.5 * c.group_size as f64, c.group_size, n);
            }
            let logs = run_training(&env, &c).map_err(|e| e.to_string())?;
            Ok(json!({
                "method": method.label(),
                "kl": logs.iter().map(|l| l.kl_seq).collect::<Vec<_>>(),
                "gold": logs.iter().map(|l| l.gold_improvement).collect::<Vec<_>>(),
                "proxy": logs.iter().map(|l| l.proxy_improvement).collect::<Vec<_>>(),
            }))
        })
        .collect::<Result<Vec<Value>, String>>()?;
    Ok(json!({ "measured_agreement": env.measured_agreement, "curves": curves }).to_string())
}

#[wasm_bindgen]
pub fn solve(rewards: &str, delta: f64) -> Result<String, JsValue> {
    solve_json(rewards, delta).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn budget_path(rewards: &str, max_delta: f64, points: usize) -> Result<String, JsValue> {
    budget_path_json(rewards, max_delta, points).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn train(seed: u32, iterations: usize) -> Result<String, JsValue> {
    train_json(u64::from(seed), iterations).map_err(|e| JsValue::from_str(&e))
}
