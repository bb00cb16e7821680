//! Acceptance criteria. Each test prints one `PASS`/`FAIL` line with the
//! measured quantities and wall time (`cargo test --test acceptance -- --nocapture`).

use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use qftgi::estimator::{
    build_a_matrix, coefficient_variance_factor, estimate_c_vector, hoeffding_shots,
    ppnr_correction, pseudo_inverse_analytic, pseudo_inverse_numeric, shots_required_ci,
    shots_required_qft,
};
use qftgi::numtheory::{divisors, is_prime};
use qftgi::optics::{permanent, permanent_naive, qft_matrix, SquareMatrix};
use qftgi::probability::{
    output_distribution, p_partition, q_marginals_analytic, q_marginals_bruteforce,
    q_marginals_periodic, verify_pztl_uniformity, QMarginalDistribution,
};
use qftgi::sampler::run_qft_experiment;
use qftgi::states::{
    enumerate_outputs, enumerate_partition_states, obb_partition_states, periodic_partition_state,
    FockState, MixtureComponent, PartitionMixture, PartitionState,
};

fn report(id: u32, name: &str, pass: bool, elapsed: Duration, detail: String) {
    println!(
        "acceptance {id:02} {} {name}: {detail} [{:.3} s]",
        if pass { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64()
    );
    assert!(pass, "acceptance {id} failed: {detail}");
}

fn fock(v: &[usize]) -> FockState {
    FockState::new(v.to_vec()).unwrap()
}

#[test]
fn acceptance_01_hom_suppression() {
    let start = Instant::now();
    let u = qft_matrix(2).unwrap();
    let r = PartitionState::indistinguishable(fock(&[1, 1]));
    let p11 = p_partition(&u, &r, &fock(&[1, 1])).unwrap();
    let p20 = p_partition(&u, &r, &fock(&[2, 0])).unwrap();
    let p02 = p_partition(&u, &r, &fock(&[0, 2])).unwrap();
    let elapsed = start.elapsed();
    let pass = p11.abs() < 1e-12
        && (p20 - 0.5).abs() < 1e-12
        && (p02 - 0.5).abs() < 1e-12
        && elapsed < Duration::from_millis(1);
    report(
        1,
        "HOM suppression",
        pass,
        elapsed,
        format!("P(1,1)={p11:e} P(2,0)={p20} P(0,2)={p02}"),
    );
}

#[test]
fn acceptance_02_zero_transmission_law() {
    let mut worst = 0.0f64;
    let mut t7 = Duration::ZERO;
    for n in 2..=7 {
        let start = Instant::now();
        let u = qft_matrix(n).unwrap();
        let r = PartitionState::indistinguishable(FockState::one_per_mode(n).unwrap());
        let p = output_distribution(&u, &r)
            .unwrap()
            .q_marginals()
            .unwrap()
            .p_nonzero();
        worst = worst.max(p);
        if n == 7 {
            t7 = start.elapsed();
        }
    }
    let pass = worst < 1e-10 && t7 < Duration::from_secs(10);
    report(
        2,
        "zero-transmission law n=2..7",
        pass,
        t7,
        format!("max P(Q!=0)={worst:e}"),
    );
}

#[test]
fn acceptance_03_prime_homogeneity() {
    let mut worst = 0.0f64;
    let mut counts = Vec::new();
    let mut t7 = Duration::ZERO;
    for n in [3usize, 5, 7] {
        let start = Instant::now();
        let u = qft_matrix(n).unwrap();
        let target = 1.0 - 1.0 / n as f64;
        let parts: Vec<PartitionState> = enumerate_partition_states(n)
            .unwrap()
            .into_iter()
            .filter(|r| !r.is_fully_indistinguishable())
            .collect();
        counts.push(parts.len());
        for r in &parts {
            let p = q_marginals_bruteforce(&u, r).unwrap().p_nonzero();
            worst = worst.max((p - target).abs());
        }
        if n == 7 {
            t7 = start.elapsed();
        }
    }
    let pass = worst < 1e-9 && counts == [4, 51, 876] && t7 < Duration::from_secs(120);
    report(
        3,
        "prime homogeneity n=3,5,7",
        pass,
        t7,
        format!("{counts:?} partitions, max |P(Q!=0)-(1-1/n)|={worst:e}"),
    );
}

#[test]
fn acceptance_04_theorem1_equivalence() {
    let start = Instant::now();
    let mut worst = 0.0f64;
    let mut checked = 0;
    for n in 2..=6 {
        let u = qft_matrix(n).unwrap();
        for r in enumerate_partition_states(n).unwrap() {
            let a = q_marginals_analytic(&r).unwrap();
            let b = q_marginals_bruteforce(&u, &r).unwrap();
            worst = worst.max(a.max_abs_diff(&b));
            checked += 1;
        }
    }
    report(
        4,
        "analytic vs brute-force Q-marginals n=2..6",
        worst < 1e-9,
        start.elapsed(),
        format!("{checked} partitions, max diff={worst:e}"),
    );
}

#[test]
fn acceptance_05_periodicity_law() {
    let start = Instant::now();
    let mut worst = 0.0f64;
    let mut cases = 0;
    for n in [4usize, 6, 8, 9] {
        let u = qft_matrix(n).unwrap();
        for t in divisors(n as u64).unwrap().iter() {
            let t = t as usize;
            let r = periodic_partition_state(n, t).unwrap();
            let b = q_marginals_bruteforce(&u, &r).unwrap();
            let e = q_marginals_periodic(t, n).unwrap();
            worst = worst.max(b.max_abs_diff(&e));
            cases += 1;
        }
    }
    report(
        5,
        "periodicity law n=4,6,8,9",
        worst < 1e-9,
        start.elapsed(),
        format!("{cases} (n,t) cases, max diff={worst:e}"),
    );
}

#[test]
fn acceptance_06_obb_theorem() {
    let start = Instant::now();
    let mut worst = 0.0f64;
    let mut counts = Vec::new();
    for n in [4usize, 6] {
        let u = qft_matrix(n).unwrap();
        let target = 1.0 - 1.0 / n as f64;
        let states = obb_partition_states(n).unwrap();
        counts.push(states.len());
        for r in &states {
            let p = q_marginals_bruteforce(&u, r).unwrap().p_nonzero();
            worst = worst.max((p - target).abs());
        }
    }
    let pass = worst < 1e-9 && counts.iter().all(|&c| c > 0);
    report(
        6,
        "OBB theorem n=4,6",
        pass,
        start.elapsed(),
        format!("{counts:?} OBB states, max |P(Q!=0)-(1-1/n)|={worst:e}"),
    );
}

#[test]
fn acceptance_07_pseudo_inverse() {
    let start = Instant::now();
    let mut pinv_worst = 0.0f64;
    for n in 2..=24 {
        let a = pseudo_inverse_analytic(n).unwrap();
        let b = pseudo_inverse_numeric(&build_a_matrix(n).unwrap()).unwrap();
        pinv_worst = pinv_worst.max(a.max_abs_diff(&b));
    }

    // Component marginals: brute force where enumeration is cheap, the
    // closed-form marginals at n = 12.
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut rec_worst = 0.0f64;
    for n in [4usize, 6, 8, 9, 12] {
        let u = qft_matrix(n).unwrap();
        let ts: Vec<usize> = divisors(n as u64)
            .unwrap()
            .iter()
            .map(|t| t as usize)
            .collect();
        let marginals: Vec<QMarginalDistribution> = ts
            .iter()
            .map(|&t| {
                let r = periodic_partition_state(n, t).unwrap();
                if n <= 9 {
                    q_marginals_bruteforce(&u, &r).unwrap()
                } else {
                    q_marginals_analytic(&r).unwrap()
                }
            })
            .collect();
        for _ in 0..20 {
            let raw: Vec<f64> = ts.iter().map(|_| -rng.random::<f64>().ln()).collect();
            let total: f64 = raw.iter().sum();
            let w: Vec<f64> = raw.iter().map(|x| x / total).collect();
            let mut p = vec![0.0; n];
            for (wk, q) in w.iter().zip(&marginals) {
                for (a, b) in p.iter_mut().zip(q.probabilities()) {
                    *a += wk * b;
                }
            }
            let (c, _) =
                estimate_c_vector(&QMarginalDistribution::new(p).unwrap(), n, None).unwrap();
            for (a, b) in c.coefficients.iter().zip(&w) {
                rec_worst = rec_worst.max((a - b).abs());
            }
        }
    }
    report(
        7,
        "pseudo-inverse and coefficient recovery",
        pinv_worst < 1e-10 && rec_worst < 1e-9,
        start.elapsed(),
        format!("analytic-vs-numeric max={pinv_worst:e}, recovery max err={rec_worst:e}"),
    );
}

#[test]
fn acceptance_08_sample_complexity() {
    let start = Instant::now();
    let primes: Vec<usize> = (2..=20_000).filter(|&n| is_prime(n as u64)).collect();
    let shots: Vec<u64> = primes
        .iter()
        .map(|&n| shots_required_qft(0.05, 0.005, n).unwrap())
        .collect();
    let limit = hoeffding_shots(0.05, 0.005).unwrap();
    let monotone = shots.windows(2).all(|w| w[1] <= w[0]);
    let bounded = shots.iter().all(|&s| s >= limit);
    let saturates = *shots.last().unwrap() == limit;
    let limit_exact = (400f64.ln() / (2.0 * 0.0025)).ceil() as u64 == limit && limit == 1199;
    let quadruples = (1..48).all(|n| {
        shots_required_ci(0.05, 0.005, n + 1).unwrap()
            == 4 * shots_required_ci(0.05, 0.005, n).unwrap()
    });
    let ratio19 = shots_required_ci(0.05, 0.005, 19).unwrap() as f64
        / shots_required_qft(0.05, 0.005, 19).unwrap() as f64;
    let pass = monotone && bounded && saturates && limit_exact && quadruples && ratio19 > 1e8;
    report(
        8,
        "sample complexity",
        pass,
        start.elapsed(),
        format!(
            "n=3:{} n=19:{} n={}:{} limit={limit}, CI 4x={quadruples}, CI/QFT at n=19={ratio19:.3e}",
            shots[1],
            shots[7],
            primes.last().unwrap(),
            shots.last().unwrap()
        ),
    );
}

#[test]
fn acceptance_09_statistical_recovery() {
    let start = Instant::now();
    let mix = PartitionMixture::indistinguishable_vs_distinguishable(3, 0.815).unwrap();
    let shots = shots_required_qft(0.05, 0.005, 3).unwrap();
    let hits = (0..200u64)
        .filter(|&seed| {
            (run_qft_experiment(&mix, shots, seed).unwrap().estimate.c1 - 0.815).abs() <= 0.05
        })
        .count();
    let elapsed = start.elapsed();
    let pass = hits >= 198 && elapsed < Duration::from_secs(60);
    report(
        9,
        "end-to-end recovery n=3, c1=0.815",
        pass,
        elapsed,
        format!("{hits}/200 runs within 0.05 at {shots} shots"),
    );
}

#[test]
fn acceptance_10_nonprime_end_to_end() {
    let start = Instant::now();
    let n = 4;
    let mix = PartitionMixture::new(
        [(1, 0.6), (2, 0.1), (4, 0.3)]
            .into_iter()
            .map(|(t, w)| MixtureComponent {
                weight: w,
                state: periodic_partition_state(n, t).unwrap(),
            })
            .collect(),
    )
    .unwrap();
    let shots = 10_000u64;
    // Chebyshev at 99%: |c1_hat - c1| <= sqrt(Var / 0.01).
    let var = coefficient_variance_factor(n, 1).unwrap() / shots as f64;
    let bound = (var / 0.01).sqrt();
    let hits = (0..200u64)
        .filter(|&seed| {
            (run_qft_experiment(&mix, shots, seed).unwrap().estimate.c1 - 0.6).abs() <= bound
        })
        .count();
    report(
        10,
        "non-prime end-to-end n=4",
        hits >= 198,
        start.elapsed(),
        format!("{hits}/200 runs within Chebyshev bound {bound:.4} at {shots} shots"),
    );
}

#[test]
fn acceptance_11_shift_invariance() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let n = rng.random_range(2..=6usize);
        let parts = enumerate_partition_states(n).unwrap();
        let r = &parts[rng.random_range(0..parts.len())];
        let outs = enumerate_outputs(n, n).unwrap();
        let s = &outs[rng.random_range(0..outs.len())];
        let k = rng.random_range(1..n);
        let u = qft_matrix(n).unwrap();
        let a = p_partition(&u, r, s).unwrap();
        let b = p_partition(&u, r, &s.shifted(k)).unwrap();
        worst = worst.max((a - b).abs());
    }
    report(
        11,
        "QFT shift invariance",
        worst < 1e-10,
        start.elapsed(),
        format!("50 triples, max diff={worst:e}"),
    );
}

#[test]
fn acceptance_12_appendix_uniformity() {
    let start = Instant::now();
    let rep = verify_pztl_uniformity(6, &fock(&[1, 0, 0, 1, 0, 0])).unwrap();
    let p: Vec<f64> = rep.entries.iter().map(|e| e.probability).collect();
    let allowed = [0, 2, 4].iter().all(|&k| (p[k] - 1.0 / 3.0).abs() < 1e-12);
    let suppressed = [1, 3, 5].iter().all(|&k| p[k] < 1e-12);
    report(
        12,
        "appendix uniformity m=6",
        allowed && suppressed,
        start.elapsed(),
        format!("P(Q)={p:?}"),
    );
}

#[test]
fn acceptance_13_ppnr_factors() {
    let start = Instant::now();
    let got = [
        ppnr_correction(3, 2).unwrap(),
        ppnr_correction(3, 3).unwrap(),
        ppnr_correction(4, 2).unwrap(),
        ppnr_correction(4, 3).unwrap(),
        ppnr_correction(4, 4).unwrap(),
    ];
    let want = [3.0 / 2.0, 9.0 / 2.0, 4.0 / 3.0, 8.0 / 3.0, 32.0 / 3.0];
    report(
        13,
        "PPNR correction factors",
        got == want,
        start.elapsed(),
        format!("{got:?}"),
    );
}

#[test]
fn acceptance_14_permanent_oracle() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let mut worst = 0.0f64;
    for i in 0..200 {
        let n = 1 + i % 8;
        let a = SquareMatrix::from_fn(n, |_, _| {
            let r = rng.random::<f64>().sqrt();
            Complex64::from_polar(r, rng.random::<f64>() * std::f64::consts::TAU)
        });
        let fast = permanent(&a).unwrap();
        let slow = permanent_naive(&a).unwrap();
        worst = worst.max((fast - slow).norm() / slow.norm().max(1e-300));
    }
    report(
        14,
        "Ryser vs naive permanent",
        worst < 1e-10,
        start.elapsed(),
        format!("200 matrices n<=8, max rel err={worst:e}"),
    );
}
