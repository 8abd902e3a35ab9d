use drro_demo::{budget_path_json, solve_json, train_json};
use serde_json::Value;

fn parse(s: String) -> Value {
    serde_json::from_str(&s).unwrap()
}

#[test]
fn solve_matches_reference_instance() {
    let v = parse(solve_json("4, 3, 2, 1", 2.0).unwrap());
    assert_eq!(v["drro"]["policy"], serde_json::json!([0.75, 0.25, 0.0, 0.0]));
    assert_eq!(v["drro"]["worst_case_regret"], serde_json::json!(0.75));
    assert_eq!(v["dro"]["support_size"], serde_json::json!(2));
    assert_eq!(v["t_star"], serde_json::json!(2.5));
}

#[test]
fn solve_rejects_bad_input() {
    assert!(solve_json("4,x", 1.0).is_err());
    assert!(solve_json("", 1.0).is_err());
    assert!(solve_json("1,2", -1.0).is_err());
}

#[test]
fn budget_path_drro_regret_never_exceeds_dro() {
    let rows = parse(budget_path_json("1.5,0.9,0.2,-0.4,-1", 6.0, 25).unwrap());
    let rows = rows.as_array().unwrap();
    assert_eq!(rows.len(), 25);
    assert_eq!(rows[0]["delta"], 0.0);
    for row in rows {
        let (a, b) = (row["drro_regret"].as_f64().unwrap(), row["dro_regret"].as_f64().unwrap());
        assert!(a <= b + 1e-12);
    }
    assert!(budget_path_json("1,2", 1.0, 1).is_err());
}

#[test]
fn train_returns_three_curves() {
    let v = parse(train_json(3, 20).unwrap());
    let curves = v["curves"].as_array().unwrap();
    let labels: Vec<&str> = curves.iter().map(|c| c["method"].as_str().unwrap()).collect();
    assert_eq!(labels, ["GRPO", "DRRO_soft_dynamic", "DRO"]);
    assert!(curves.iter().all(|c| c["gold"].as_array().unwrap().len() == 21));
    assert_eq!(train_json(3, 20).unwrap(), train_json(3, 20).unwrap());
    assert!(train_json(3, 0).is_err());
}
