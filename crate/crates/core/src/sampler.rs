//! Seeded Monte-Carlo simulation of the measurement pipeline.
//!
//! Shots are processed in fixed blocks of [`BLOCK_SHOTS`]. Block `b` draws
//! from ChaCha8 seeded with the master seed on stream `b`, so every shot's
//! randomness depends only on `(seed, shot index)` and the tally is the same
//! for any thread count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::{
    ci_fringe_probability_with, estimate_c1_prime, estimate_c_vector, fit_ci_fringe,
    ppnr_correction, shots_required_ci, shots_required_qft_with, CiScale, CoefficientVector,
    GIEstimate, NonPrimeBound, PhaseSample,
};
use crate::numtheory::is_prime;
use crate::optics::{qft_matrix, UnitaryMatrix};
use crate::probability::{output_distribution, QMarginalDistribution};
use crate::states::PartitionMixture;

pub const BLOCK_SHOTS: u64 = 8192;

/// Seed used when none is given.
pub const DEFAULT_SEED: u64 = 20_240_815;

fn block_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Pseudo-photon-number-resolving detection: each mode is split over
/// `fanout` threshold detectors, events where two photons hit the same
/// detector are lost, and kept events are re-weighted by [`ppnr_correction`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PpnrMode {
    pub fanout: usize,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SampleOptions {
    pub ppnr: Option<PpnrMode>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PpnrTally {
    pub fanout: usize,
    /// Events lost to unresolved bunching.
    pub discarded: u64,
    /// Kept events per Q, each weighted by its correction factor.
    pub weighted_q: Vec<f64>,
}

/// Counts per Q value. `total_shots` counts recorded events; with PPNR
/// detection, discarded events are reported separately.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShotTally {
    pub q_counts: Vec<u64>,
    pub total_shots: u64,
    pub seed: u64,
    pub ppnr: Option<PpnrTally>,
}

impl ShotTally {
    fn empty(n: usize, seed: u64, ppnr: Option<PpnrMode>) -> Self {
        ShotTally {
            q_counts: vec![0; n],
            total_shots: 0,
            seed,
            ppnr: ppnr.map(|p| PpnrTally {
                fanout: p.fanout,
                discarded: 0,
                weighted_q: vec![0.0; n],
            }),
        }
    }

    /// Associative merge of two tallies for the same seed.
    pub fn merge(mut self, other: ShotTally) -> ShotTally {
        for (a, b) in self.q_counts.iter_mut().zip(&other.q_counts) {
            *a += b;
        }
        self.total_shots += other.total_shots;
        if let (Some(a), Some(b)) = (self.ppnr.as_mut(), other.ppnr.as_ref()) {
            a.discarded += b.discarded;
            for (x, y) in a.weighted_q.iter_mut().zip(&b.weighted_q) {
                *x += y;
            }
        }
        self
    }

    /// Empirical Q-marginals; PPNR tallies use the corrected weights.
    pub fn q_marginals(&self) -> Result<QMarginalDistribution> {
        match &self.ppnr {
            None => QMarginalDistribution::from_counts(&self.q_counts),
            Some(p) => {
                let total: f64 = p.weighted_q.iter().sum();
                if total <= 0.0 {
                    return Err(Error::invalid("no events survived PPNR detection"));
                }
                QMarginalDistribution::new(p.weighted_q.iter().map(|w| w / total).collect())
            }
        }
    }
}

struct ComponentTable {
    cdf: Vec<f64>,
    q: Vec<usize>,
    /// Product of PPNR correction factors, or `None` if the output can never
    /// be resolved; empty unless PPNR is on.
    correction: Vec<Option<f64>>,
    /// Per-mode photon numbers, kept only for PPNR.
    occupations: Vec<Vec<usize>>,
}

/// Precomputed inverse-CDF tables for every mixture component.
struct Sampler {
    n_q: usize,
    weight_cdf: Vec<f64>,
    tables: Vec<ComponentTable>,
    ppnr: Option<PpnrMode>,
}

fn cumulative(values: impl Iterator<Item = f64>) -> Vec<f64> {
    values
        .scan(0.0, |acc, v| {
            *acc += v;
            Some(*acc)
        })
        .collect()
}

fn draw(cdf: &[f64], rng: &mut ChaCha8Rng) -> usize {
    let total = *cdf.last().expect("non-empty cdf");
    let u = rng.random::<f64>() * total;
    cdf.partition_point(|&c| c <= u).min(cdf.len() - 1)
}

impl Sampler {
    fn new(mixture: &PartitionMixture, u: &UnitaryMatrix, options: SampleOptions) -> Result<Self> {
        let m = mixture.occupations().modes();
        if u.modes() != m {
            return Err(Error::mismatch(format!(
                "mixture has {m} modes, unitary has {}",
                u.modes()
            )));
        }
        if let Some(p) = options.ppnr {
            if p.fanout == 0 {
                return Err(Error::invalid("PPNR fan-out must be positive"));
            }
        }
        let dists = mixture
            .components()
            .par_iter()
            .map(|c| output_distribution(u, &c.state))
            .collect::<Result<Vec<_>>>()?;
        let tables = dists
            .into_iter()
            .map(|d| {
                let entries = d.entries();
                let (correction, occupations) = match options.ppnr {
                    None => (Vec::new(), Vec::new()),
                    Some(p) => entries
                        .iter()
                        .map(|(s, _)| {
                            let corr = s.occupations().iter().try_fold(1.0, |acc, &k| {
                                (k <= p.fanout).then(|| {
                                    acc * ppnr_correction(p.fanout, k).unwrap_or(f64::INFINITY)
                                })
                            });
                            (corr, s.occupations().to_vec())
                        })
                        .unzip(),
                };
                ComponentTable {
                    cdf: cumulative(entries.iter().map(|(_, p)| *p)),
                    q: entries.iter().map(|(s, _)| s.q_value()).collect(),
                    correction,
                    occupations,
                }
            })
            .collect();
        Ok(Sampler {
            n_q: m,
            weight_cdf: cumulative(mixture.components().iter().map(|c| c.weight)),
            tables,
            ppnr: options.ppnr,
        })
    }

    fn run_block(&self, seed: u64, block: u64, shots: u64) -> ShotTally {
        let mut rng = block_rng(seed, block);
        let mut tally = ShotTally::empty(self.n_q, seed, self.ppnr);
        for _ in 0..shots {
            let c = if self.tables.len() == 1 {
                0
            } else {
                draw(&self.weight_cdf, &mut rng)
            };
            let table = &self.tables[c];
            let idx = draw(&table.cdf, &mut rng);
            let q = table.q[idx];
            if let (Some(mode), Some(pt)) = (self.ppnr, tally.ppnr.as_mut()) {
                // A mode holding k photons is resolved with probability 1/correction.
                let resolved = table.occupations[idx].iter().all(|&k| {
                    k < 2
                        || (k <= mode.fanout
                            && rng.random::<f64>()
                                * ppnr_correction(mode.fanout, k).unwrap_or(f64::INFINITY)
                                < 1.0)
                });
                match (resolved, table.correction[idx]) {
                    (true, Some(w)) => {
                        pt.weighted_q[q] += w;
                        tally.q_counts[q] += 1;
                        tally.total_shots += 1;
                    }
                    _ => pt.discarded += 1,
                }
            } else {
                tally.q_counts[q] += 1;
                tally.total_shots += 1;
            }
        }
        tally
    }

    fn run(&self, shots: u64, seed: u64) -> ShotTally {
        let blocks = shots.div_ceil(BLOCK_SHOTS);
        (0..blocks)
            .into_par_iter()
            .map(|b| {
                let len = BLOCK_SHOTS.min(shots - b * BLOCK_SHOTS);
                self.run_block(seed, b, len)
            })
            .reduce(
                || ShotTally::empty(self.n_q, seed, self.ppnr),
                ShotTally::merge,
            )
    }
}

/// Samples `shots` detection events and tallies their Q values.
pub fn sample_q_tally(
    mixture: &PartitionMixture,
    u: &UnitaryMatrix,
    shots: u64,
    seed: u64,
) -> Result<ShotTally> {
    sample_q_tally_with(mixture, u, shots, seed, SampleOptions::default())
}

pub fn sample_q_tally_with(
    mixture: &PartitionMixture,
    u: &UnitaryMatrix,
    shots: u64,
    seed: u64,
    options: SampleOptions,
) -> Result<ShotTally> {
    if shots == 0 {
        return Err(Error::invalid("shots must be positive"));
    }
    Ok(Sampler::new(mixture, u, options)?.run(shots, seed))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub estimate: GIEstimate,
    /// Q tally of a Fourier-interferometer run.
    pub tally: Option<ShotTally>,
    pub true_c1: Option<f64>,
    pub wall_time_ms: u64,
    /// Full periodicity coefficients for non-prime `n`.
    pub coefficients: Option<CoefficientVector>,
    /// Per-phase counts of a cyclic-interferometer run.
    pub fringe: Option<Vec<PhaseSample>>,
}

#[cfg(not(target_arch = "wasm32"))]
fn timed<T>(f: impl FnOnce() -> Result<T>) -> Result<(T, u64)> {
    let start = std::time::Instant::now();
    let out = f()?;
    Ok((out, start.elapsed().as_millis() as u64))
}

#[cfg(target_arch = "wasm32")]
fn timed<T>(f: impl FnOnce() -> Result<T>) -> Result<(T, u64)> {
    Ok((f()?, 0))
}

/// Samples the mixture through the `n`-mode QFT and estimates `c1`: the
/// closed form for prime `n`, the pseudo-inverse otherwise.
pub fn run_qft_experiment(
    mixture: &PartitionMixture,
    shots: u64,
    seed: u64,
) -> Result<ExperimentResult> {
    run_qft_experiment_with(mixture, shots, seed, SampleOptions::default())
}

pub fn run_qft_experiment_with(
    mixture: &PartitionMixture,
    shots: u64,
    seed: u64,
    options: SampleOptions,
) -> Result<ExperimentResult> {
    let occ = mixture.occupations();
    if !occ.is_one_per_mode() {
        return Err(Error::invalid(format!(
            "QFT protocol needs one photon per mode, got {occ}"
        )));
    }
    let n = occ.photons();
    if n < 2 {
        return Err(Error::invalid(format!(
            "QFT protocol needs n >= 2, got {n}"
        )));
    }
    let u = qft_matrix(n)?;
    let ((tally, estimate, coefficients), wall_time_ms) = timed(|| {
        let tally = sample_q_tally_with(mixture, &u, shots, seed, options)?;
        let marginals = tally.q_marginals()?;
        if is_prime(n as u64) {
            let e = estimate_c1_prime(
                marginals.p_nonzero().clamp(0.0, 1.0),
                n,
                Some(tally.total_shots.max(1)),
            )?;
            Ok((tally, e, None))
        } else {
            let (c, e) = estimate_c_vector(&marginals, n, Some(tally.total_shots.max(1)))?;
            Ok((tally, e, Some(c)))
        }
    })?;
    Ok(ExperimentResult {
        estimate,
        tally: Some(tally),
        true_c1: Some(mixture.genuine_indistinguishability()),
        wall_time_ms,
        coefficients,
        fringe: None,
    })
}

/// Draws binomial counts of the post-selected cyclic-interferometer output at
/// each phase and fits the fringe. Phase `k` uses stream `k` of the seed.
pub fn run_ci_experiment(
    n: usize,
    c1: f64,
    phases: &[f64],
    shots_per_phase: u64,
    seed: u64,
) -> Result<ExperimentResult> {
    run_ci_experiment_with(n, c1, phases, shots_per_phase, seed, CiScale::default())
}

pub fn run_ci_experiment_with(
    n: usize,
    c1: f64,
    phases: &[f64],
    shots_per_phase: u64,
    seed: u64,
    scale: CiScale,
) -> Result<ExperimentResult> {
    if shots_per_phase == 0 {
        return Err(Error::invalid("shots per phase must be positive"));
    }
    let (samples, wall_time_ms) = timed(|| {
        phases
            .par_iter()
            .enumerate()
            .map(|(k, &alpha)| {
                let p = ci_fringe_probability_with(n, c1, alpha, scale)?;
                let dist =
                    Binomial::new(shots_per_phase, p).map_err(|e| Error::invalid(e.to_string()))?;
                let hits = dist.sample(&mut block_rng(seed, k as u64));
                Ok(PhaseSample {
                    alpha,
                    hits,
                    shots: shots_per_phase,
                })
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let estimate = fit_ci_fringe(&samples)?;
    Ok(ExperimentResult {
        estimate,
        tally: None,
        true_c1: Some(c1),
        wall_time_ms,
        coefficients: None,
        fringe: Some(samples),
    })
}

/// `k` phases evenly spaced over `[0, 2 pi]`, both ends included.
pub fn phase_grid(k: usize) -> Vec<f64> {
    match k {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..k)
            .map(|i| 2.0 * std::f64::consts::PI * i as f64 / (k - 1) as f64)
            .collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub n: usize,
    pub prime: bool,
    pub qft_shots: u64,
    pub ci_shots: u128,
    pub ratio: f64,
}

/// Sample counts of both protocols for each photon number.
pub fn compare_protocols(
    n_range: &[usize],
    epsilon: f64,
    delta: f64,
) -> Result<Vec<ComparisonRow>> {
    compare_protocols_with(n_range, epsilon, delta, NonPrimeBound::default())
}

pub fn compare_protocols_with(
    n_range: &[usize],
    epsilon: f64,
    delta: f64,
    bound: NonPrimeBound,
) -> Result<Vec<ComparisonRow>> {
    if n_range.is_empty() {
        return Err(Error::invalid("photon-number range is empty"));
    }
    n_range
        .iter()
        .map(|&n| {
            let qft_shots = shots_required_qft_with(epsilon, delta, n, bound)?;
            let ci_shots = shots_required_ci(epsilon, delta, n)?;
            Ok(ComparisonRow {
                n,
                prime: is_prime(n as u64),
                qft_shots,
                ci_shots,
                ratio: ci_shots as f64 / qft_shots as f64,
            })
        })
        .collect()
}

pub fn comparison_csv(rows: &[ComparisonRow]) -> Result<String> {
    crate::format::csv_table(
        &["n", "prime", "qft_shots", "ci_shots", "ratio"],
        rows.iter().map(|r| {
            [
                r.n.to_string(),
                r.prime.to_string(),
                r.qft_shots.to_string(),
                r.ci_shots.to_string(),
                crate::format::fmt_f64(r.ratio),
            ]
        }),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimator::{shots_required_qft, Method};
    use crate::states::{periodic_partition_state, MixtureComponent, PartitionState};

    fn qft_tally(mixture: &PartitionMixture, shots: u64, seed: u64) -> ShotTally {
        let u = qft_matrix(mixture.photons()).unwrap();
        sample_q_tally(mixture, &u, shots, seed).unwrap()
    }

    #[test]
    fn pure_indistinguishable_hits_only_q0() {
        for n in 2..=5 {
            let mix = PartitionMixture::indistinguishable_vs_distinguishable(n, 1.0).unwrap();
            let t = qft_tally(&mix, 20_000, 7);
            assert_eq!(t.q_counts[0], 20_000);
            assert_eq!(t.total_shots, 20_000);
        }
    }

    #[test]
    fn mixture_nonzero_rate() {
        let mix = PartitionMixture::indistinguishable_vs_distinguishable(3, 0.8).unwrap();
        let t = qft_tally(&mix, 1_000_000, 11);
        let p = 1.0 - t.q_counts[0] as f64 / 1e6;
        let expect: f64 = 0.2 * 2.0 / 3.0;
        let se = (expect * (1.0 - expect) / 1e6).sqrt();
        assert!((p - expect).abs() < 3.0 * se, "p={p}");
    }

    #[test]
    fn deterministic_and_thread_independent() {
        let mix = PartitionMixture::from_inline("0.5:1,1,2,2;0.5:1,2,3,4").unwrap();
        let a = qft_tally(&mix, 50_000, 3);
        let b = qft_tally(&mix, 50_000, 3);
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        let c = pool.install(|| qft_tally(&mix, 50_000, 3));
        assert_eq!(a, b);
        assert_eq!(a, c);
        assert_ne!(a, qft_tally(&mix, 50_000, 4));
        assert_eq!(a.q_counts.iter().sum::<u64>(), a.total_shots);
    }

    #[test]
    fn rejects_zero_shots() {
        let mix = PartitionMixture::indistinguishable_vs_distinguishable(3, 0.5).unwrap();
        let u = qft_matrix(3).unwrap();
        assert!(sample_q_tally(&mix, &u, 0, 1).is_err());
        assert!(sample_q_tally(&mix, &qft_matrix(4).unwrap(), 10, 1).is_err());
    }

    #[test]
    fn exact_c1_one() {
        let mix = PartitionMixture::indistinguishable_vs_distinguishable(5, 1.0).unwrap();
        let r = run_qft_experiment(&mix, 500, 1).unwrap();
        assert_eq!(r.estimate.c1, 1.0);
        assert_eq!(r.estimate.method, Method::PrimeClosedForm);
        assert_eq!(r.true_c1, Some(1.0));
    }

    #[test]
    fn nonprime_recovers_coefficients() {
        let comps = [(1, 0.6), (2, 0.1), (4, 0.3)]
            .into_iter()
            .map(|(t, w)| MixtureComponent {
                weight: w,
                state: periodic_partition_state(4, t).unwrap(),
            })
            .collect();
        let mix = PartitionMixture::new(comps).unwrap();
        let r = run_qft_experiment(&mix, 200_000, 5).unwrap();
        assert_eq!(r.estimate.method, Method::NonprimePseudoinverse);
        let c = r.coefficients.unwrap();
        for (t, w) in [(1, 0.6), (2, 0.1), (4, 0.3)] {
            let got = c.get(t).unwrap();
            let se = c.stderr[c.divisors.iter().position(|&d| d == t).unwrap()];
            assert!((got - w).abs() < 5.0 * se, "t={t} got={got}");
        }
    }

    #[test]
    fn ppnr_mode_is_unbiased() {
        // Bunched outputs are frequent for distinguishable photons.
        let mix = PartitionMixture::indistinguishable_vs_distinguishable(3, 0.5).unwrap();
        let u = qft_matrix(3).unwrap();
        let opts = SampleOptions {
            ppnr: Some(PpnrMode { fanout: 3 }),
        };
        let t = sample_q_tally_with(&mix, &u, 400_000, 9, opts).unwrap();
        let p = t.ppnr.as_ref().unwrap();
        assert!(p.discarded > 0);
        assert_eq!(t.total_shots + p.discarded, 400_000);
        let q = t.q_marginals().unwrap();
        let expect = 0.5 * 2.0 / 3.0;
        assert!((q.p_nonzero() - expect).abs() < 0.01, "{}", q.p_nonzero());
    }

    #[test]
    fn ci_fit_recovers_c1() {
        let r = run_ci_experiment(3, 0.8, &phase_grid(21), 1_000_000, 2).unwrap();
        assert_eq!(r.estimate.method, Method::CiFringe);
        assert!((r.estimate.c1 - 0.8).abs() < 3.0 * r.estimate.stderr.max(1e-3));
        let again = run_ci_experiment(3, 0.8, &phase_grid(21), 1_000_000, 2).unwrap();
        assert_eq!(r.fringe, again.fringe);
        let zero = run_ci_experiment(3, 0.0, &phase_grid(21), 1_000_000, 2).unwrap();
        assert!(zero.estimate.c1 < 3.0 * zero.estimate.stderr + 1e-3);
    }

    #[test]
    fn comparison_table() {
        let ns: Vec<usize> = (2..=30).collect();
        let rows = compare_protocols(&ns, 0.05, 0.005).unwrap();
        assert_eq!(rows.len(), 29);
        let primes: Vec<&ComparisonRow> = rows.iter().filter(|r| r.prime).collect();
        assert!(primes.iter().skip(1).all(|r| r.qft_shots <= 2700));
        for w in primes.windows(2) {
            assert!(w[1].qft_shots <= w[0].qft_shots);
            assert!(w[1].qft_shots >= 1199);
        }
        for w in rows.windows(2) {
            assert_eq!(w[1].ci_shots, 4 * w[0].ci_shots);
        }
        assert_eq!(
            rows[1].qft_shots,
            shots_required_qft(0.05, 0.005, 3).unwrap()
        );
        let csv = comparison_csv(&rows).unwrap();
        assert!(csv.starts_with("n,prime,qft_shots,ci_shots,ratio\n"));
        assert_eq!(csv.lines().count(), 30);
        assert!(compare_protocols(&[], 0.05, 0.005).is_err());
        assert!(matches!(
            compare_protocols(&[49], 0.05, 0.005),
            Err(Error::Guard(_))
        ));
    }

    #[test]
    fn result_json_round_trip() {
        let mix = PartitionMixture::pure(PartitionState::one_per_mode(&[1, 1, 2]).unwrap());
        let r = run_qft_experiment(&mix, 1000, 1).unwrap();
        let s = crate::format::to_json(&r).unwrap();
        let back: ExperimentResult = serde_json::from_str(&s).unwrap();
        assert_eq!(back, r);
    }
}
