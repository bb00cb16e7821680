use qftgi_wasm::{compare_json, estimate_json, q_marginals_json};
use serde_json::Value;

fn parse(s: &str) -> Value {
    serde_json::from_str(s).unwrap()
}

fn floats(v: &Value) -> Vec<f64> {
    v.as_array()
        .unwrap()
        .iter()
        .map(|x| x.as_f64().unwrap())
        .collect()
}

#[test]
fn periodic_state_marginals() {
    let v = parse(&q_marginals_json("1,2,1,2").unwrap());
    assert_eq!(v["period"], 2);
    assert_eq!(v["prime"], false);
    let a = floats(&v["analytic"]);
    let b = floats(&v["bruteforce"]);
    for (x, y) in a.iter().zip(&b) {
        assert!((x - y).abs() < 1e-9);
    }
    assert!((a[0] - 0.5).abs() < 1e-12 && (a[2] - 0.5).abs() < 1e-12);
    let c = floats(&v["coefficients"]["coefficients"]);
    assert!((c[1] - 1.0).abs() < 1e-12);
}

#[test]
fn large_states_skip_bruteforce() {
    let v = parse(&q_marginals_json("1,1,1,1,1,1,1,1,1,2").unwrap());
    assert!(v["bruteforce"].is_null());
    assert!((v["p_nonzero"].as_f64().unwrap() - 0.9).abs() < 1e-12);
}

#[test]
fn bad_registers_are_errors() {
    assert!(q_marginals_json("1,a").is_err());
    assert!(q_marginals_json("").is_err());
}

#[test]
fn simulated_estimate() {
    let v = parse(&estimate_json(3, 0.815, 2697, 1).unwrap());
    assert_eq!(v["estimate"]["method"], "prime_closed_form");
    assert!((v["estimate"]["c1"].as_f64().unwrap() - 0.815).abs() < 0.05);
    assert!(estimate_json(3, 0.8, 10_000_000, 1).is_err());
    assert!(estimate_json(3, 1.5, 100, 1).is_err());
}

#[test]
fn comparison_rows() {
    let v = parse(&compare_json(20, 0.05, 0.005).unwrap());
    let rows = v.as_array().unwrap();
    assert_eq!(rows.len(), 19);
    assert_eq!(rows[1]["qft_shots"], 2697);
    assert_eq!(rows[1]["ci_shots"], "76736");
    assert!(compare_json(1, 0.05, 0.005).is_err());
}
