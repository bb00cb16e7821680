//! Browser bindings. Each export returns a JSON string; the `*_json`
//! functions hold the logic and are callable from native Rust too.

use serde_json::json;
use wasm_bindgen::prelude::*;

use qftgi::estimator::{estimate_c_vector, CoefficientVector};
use qftgi::format::to_json;
use qftgi::numtheory::is_prime;
use qftgi::optics::qft_matrix;
use qftgi::probability::{q_marginals_analytic, q_marginals_bruteforce};
use qftgi::sampler::{compare_protocols, run_qft_experiment};
use qftgi::states::{parse_list, PartitionMixture, PartitionState};

/// Largest photon number for which the page also runs the brute-force
/// permanent sum next to the closed form.
pub const MAX_BRUTEFORCE_PHOTONS: usize = 7;

/// Largest shot count accepted from the page.
pub const MAX_DEMO_SHOTS: u64 = 5_000_000;

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

/// Q-marginals of a one-photon-per-mode partition state through the QFT.
/// `registers` is a comma-separated label list such as `"1,2,1,2"`.
pub fn q_marginals_json(registers: &str) -> Result<String, String> {
    let regs = parse_list(registers).map_err(err)?;
    let state = PartitionState::one_per_mode(&regs).map_err(err)?;
    let n = state.photons();
    let analytic = q_marginals_analytic(&state).map_err(err)?;
    let bruteforce = if n <= MAX_BRUTEFORCE_PHOTONS {
        let u = qft_matrix(n).map_err(err)?;
        Some(q_marginals_bruteforce(&u, &state).map_err(err)?)
    } else {
        None
    };
    let coefficients: Option<CoefficientVector> = if n >= 2 {
        Some(estimate_c_vector(&analytic, n, None).map_err(err)?.0)
    } else {
        None
    };
    to_json(&json!({
        "n": n,
        "registers": state.registers(),
        "period": state.periodicity().map_err(err)?,
        "prime": is_prime(n as u64),
        "p_nonzero": analytic.p_nonzero(),
        "analytic": analytic,
        "bruteforce": bruteforce,
        "coefficients": coefficients,
    }))
    .map_err(err)
}

/// Simulated QFT experiment on `c1` indistinguishable plus `1 - c1` fully
/// distinguishable photons.
pub fn estimate_json(n: usize, c1: f64, shots: u64, seed: u64) -> Result<String, String> {
    if shots > MAX_DEMO_SHOTS {
        return Err(format!("at most {MAX_DEMO_SHOTS} shots in the demo"));
    }
    let mixture = PartitionMixture::indistinguishable_vs_distinguishable(n, c1).map_err(err)?;
    let result = run_qft_experiment(&mixture, shots, seed).map_err(err)?;
    to_json(&result).map_err(err)
}

/// Sample counts of both protocols for `n = 2..=n_max`.
pub fn compare_json(n_max: usize, epsilon: f64, delta: f64) -> Result<String, String> {
    if n_max < 2 {
        return Err("n_max must be at least 2".into());
    }
    let ns: Vec<usize> = (2..=n_max).collect();
    let rows = compare_protocols(&ns, epsilon, delta).map_err(err)?;
    // u128 counts do not fit a JS number exactly; send them as strings too.
    let rows: Vec<_> = rows
        .iter()
        .map(|r| {
            json!({
                "n": r.n,
                "prime": r.prime,
                "qft_shots": r.qft_shots,
                "ci_shots": r.ci_shots.to_string(),
                "ci_shots_f64": r.ci_shots as f64,
                "ratio": r.ratio,
            })
        })
        .collect();
    to_json(&rows).map_err(err)
}

#[wasm_bindgen]
pub fn q_marginals(registers: &str) -> Result<String, JsError> {
    q_marginals_json(registers).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn estimate(n: usize, c1: f64, shots: u64, seed: u64) -> Result<String, JsError> {
    estimate_json(n, c1, shots, seed).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn compare(n_max: usize, epsilon: f64, delta: f64) -> Result<String, JsError> {
    compare_json(n_max, epsilon, delta).map_err(|e| JsError::new(&e))
}
