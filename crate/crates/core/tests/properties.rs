use drro::dro::solve_dro;
use drro::env::RunLog;
use drro::grpo::grpo_advantages;
use drro::io::{parse_runlog_csv, runlog_csv};
use drro::shaping::{k3_kl, k3_term, snis_weights, SnisSample};
use drro::simplex::{
    hard_utility, soft_utility, solve_water_filling, uncovered_rewards, worst_case_regret, AmbiguityBudget,
    PolicyVector, RewardVector,
};
use drro::verify::{dominance_suite_with, Suite};
use proptest::prelude::*;

fn rewards(max_n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-5.0f64..5.0, 1..=max_n)
}

fn rewards_and_weights(max_n: usize) -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (1..=max_n).prop_flat_map(|n| (prop::collection::vec(-5.0f64..5.0, n), prop::collection::vec(0.01f64..1.0, n)))
}

proptest! {
    #[test]
    fn water_filling_is_feasible_and_beats_candidates((r, w) in rewards_and_weights(8), delta in 1e-3f64..20.0) {
        let r = RewardVector::new(r).unwrap();
        let budget = AmbiguityBudget::new(delta).unwrap();
        let s = solve_water_filling(&r, budget).unwrap();
        let p = s.policy.as_slice();
        prop_assert!(p.iter().all(|x| *x >= 0.0));
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let u = uncovered_rewards(&s.policy, &r, delta);
        prop_assert!((u.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - s.t_star).abs() < 1e-9);
        let other = PolicyVector::normalized(w).unwrap();
        let dro = solve_dro(&r, delta).unwrap().policy;
        for candidate in [other, dro, PolicyVector::uniform(r.len())] {
            prop_assert!(s.worst_case_regret <= worst_case_regret(&candidate, &r, budget).unwrap().0 + 1e-9);
        }
    }

    #[test]
    fn soft_utility_is_sandwiched((r, w) in rewards_and_weights(10), delta in 0.0f64..10.0, tau in 1e-3f64..5.0) {
        let n = r.len();
        let r = RewardVector::new(r).unwrap();
        let pi = PolicyVector::normalized(w).unwrap();
        let budget = AmbiguityBudget::new(delta).unwrap();
        let gap = hard_utility(&pi, &r, budget).unwrap() - soft_utility(&pi, &r, budget, tau).unwrap();
        prop_assert!(gap >= -1e-9);
        prop_assert!(gap <= tau * (n as f64).ln() + 1e-9);
    }

    #[test]
    fn regret_is_shift_invariant(r in rewards(8), delta in 1e-3f64..10.0, shift in -100.0f64..100.0) {
        let budget = AmbiguityBudget::new(delta).unwrap();
        let a = solve_water_filling(&RewardVector::new(r.clone()).unwrap(), budget).unwrap();
        let shifted: Vec<f64> = r.iter().map(|x| x + shift).collect();
        let b = solve_water_filling(&RewardVector::new(shifted).unwrap(), budget).unwrap();
        prop_assert!((a.worst_case_regret - b.worst_case_regret).abs() < 1e-9);
        for (x, y) in a.policy.as_slice().iter().zip(b.policy.as_slice()) {
            prop_assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn snis_weights_ignore_reward_shift(
        (r, p) in (2usize..8).prop_flat_map(|n| (prop::collection::vec(-3.0f64..3.0, n), prop::collection::vec(0.05f64..1.0, n))),
        delta in 0.0f64..5.0,
        tau in 0.1f64..5.0,
        shift in -10.0f64..10.0,
    ) {
        let samples = |shift: f64| -> Vec<SnisSample> {
            r.iter().zip(&p).map(|(r, p)| SnisSample { reward: r + shift, proposal_prob: *p, policy_prob: *p }).collect()
        };
        let a = snis_weights(&samples(0.0), delta, tau).unwrap();
        let b = snis_weights(&samples(shift), delta, tau).unwrap();
        prop_assert!((a.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn advantages_are_centered_and_scale_free(r in prop::collection::vec(-5.0f64..5.0, 2..16), scale in 0.1f64..10.0) {
        let a = grpo_advantages(&r, 0.0).unwrap();
        prop_assert!(a.iter().sum::<f64>().abs() < 1e-9);
        let scaled: Vec<f64> = r.iter().map(|x| x * scale).collect();
        let b = grpo_advantages(&scaled, 0.0).unwrap();
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() < 1e-8);
        }
    }

    #[test]
    fn k3_is_nonnegative_and_zero_on_identical(a in prop::collection::vec(-20.0f64..0.0, 1..32), b in prop::collection::vec(-20.0f64..0.0, 32)) {
        let b = &b[..a.len()];
        prop_assert!(k3_kl(&a, b).unwrap() >= 0.0);
        prop_assert_eq!(k3_kl(&a, &a).unwrap(), 0.0);
        for (x, y) in a.iter().zip(b) {
            let z = x - y;
            prop_assert!((k3_term(z) - (z.exp() - z - 1.0)).abs() <= 1e-9 * z.exp().max(1.0));
        }
    }

    #[test]
    fn runlog_csv_round_trips(rows in prop::collection::vec((0usize..1000, any::<u64>(), prop::array::uniform6(-1e300f64..1e300)), 0..20)) {
        let logs: Vec<RunLog> = rows
            .iter()
            .map(|(step, seed, v)| RunLog {
                step: *step,
                method: "DRRO_soft_dynamic".into(),
                seed: *seed,
                kl_seq: v[0],
                proxy_raw: v[1],
                gold_raw: v[2],
                proxy_improvement: v[3],
                gold_improvement: v[4],
                budget: v[5],
            })
            .collect();
        let bytes = runlog_csv(&logs).unwrap();
        prop_assert_eq!(parse_runlog_csv(&bytes).unwrap(), logs);
    }
}

#[test]
fn dominance_suite_catches_a_sign_flipped_solver() {
    let flipped = |r: &RewardVector, delta: f64| {
        let negated = RewardVector::new(r.as_slice().iter().map(|x| -x).collect())?;
        Ok(solve_water_filling(&negated, AmbiguityBudget::new(delta)?)?.policy)
    };
    let report = dominance_suite_with(11, &flipped).unwrap();
    assert!(!report.passed);
    assert!(report.failures > 0);
    assert!(Suite::Dominance.run(11).unwrap().passed);
}
