//! Estimators for the genuine n-photon indistinguishability `c1`.
//!
//! Q-indexed vectors use `Q = 0..n`. The closed-form pseudo-inverse is
//! usually written with a column index `j` in `1..=n`; `j = n` is the same
//! residue as `Q = 0`, and [`PseudoInverse::weight`] accepts that form.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numtheory::{divisors, gcd, is_prime, moebius, totient, DivisorList};
use crate::probability::QMarginalDistribution;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    PrimeClosedForm,
    NonprimePseudoinverse,
    CiFringe,
    /// Infinite-sample input; `stderr` is zero.
    Exact,
}

/// A `c1` estimate. `c1` is clipped to `[0, 1]`; `pre_clip` keeps the raw value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GIEstimate {
    pub c1: f64,
    pub stderr: f64,
    pub shots: u64,
    pub method: Method,
    pub pre_clip: f64,
}

impl GIEstimate {
    fn clipped(raw: f64, stderr: f64, shots: u64, method: Method) -> Self {
        GIEstimate {
            c1: raw.clamp(0.0, 1.0),
            stderr,
            shots,
            method,
            pre_clip: raw,
        }
    }
}

fn check_probability(p: f64, what: &str) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::invalid(format!("{what} = {p} outside [0, 1]")));
    }
    Ok(())
}

/// `c1 = ((1 - 1/n) - P(Q != 0)) / (1 - 1/n)`.
///
/// Valid for prime `n` and for mixtures whose distinguishable components are
/// all OBB states. With `shots`, the standard error is the binomial error of
/// `P(Q != 0)` scaled by `1 / (1 - 1/n)`; without, the input is treated as exact.
pub fn estimate_c1_prime(p_q_nonzero: f64, n: usize, shots: Option<u64>) -> Result<GIEstimate> {
    if n < 2 {
        return Err(Error::invalid(format!(
            "prime estimator needs n >= 2, got {n}"
        )));
    }
    check_probability(p_q_nonzero, "P(Q != 0)")?;
    let success = 1.0 - 1.0 / n as f64;
    let raw = (success - p_q_nonzero) / success;
    Ok(match shots {
        Some(0) => return Err(Error::invalid("shots must be positive")),
        Some(shots) => {
            let stderr = (p_q_nonzero * (1.0 - p_q_nonzero) / shots as f64).sqrt() / success;
            GIEstimate::clipped(raw, stderr, shots, Method::PrimeClosedForm)
        }
        None => GIEstimate::clipped(raw, 0.0, 0, Method::Exact),
    })
}

/// Coefficient matrix of `P = A c`: `entries[q][j] = P_{t_j}(Q = q)`, which is
/// `1/t_j` when `q` is a multiple of `n / t_j` and zero otherwise.
#[derive(Debug, Clone, PartialEq)]
pub struct AMatrix {
    n: usize,
    divisors: DivisorList,
    entries: Vec<Vec<f64>>,
}

impl AMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn divisors(&self) -> &DivisorList {
        &self.divisors
    }

    /// Rows indexed by `Q = 0..n`, columns by divisor position.
    pub fn entries(&self) -> &[Vec<f64>] {
        &self.entries
    }

    pub fn apply(&self, c: &[f64]) -> Vec<f64> {
        self.entries
            .iter()
            .map(|row| row.iter().zip(c).map(|(a, b)| a * b).sum())
            .collect()
    }
}

pub fn build_a_matrix(n: usize) -> Result<AMatrix> {
    if n < 2 {
        return Err(Error::invalid(format!("A matrix needs n >= 2, got {n}")));
    }
    let divisors = divisors(n as u64)?;
    let entries = (0..n)
        .map(|q| {
            divisors
                .iter()
                .map(|t| {
                    let t = t as usize;
                    if q % (n / t) == 0 {
                        1.0 / t as f64
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect();
    let a = AMatrix {
        n,
        divisors,
        entries,
    };
    // Full column rank is a theorem; a failure here is a construction bug.
    solve_normal_equations(&a)
        .map_err(|_| Error::Numerical(format!("A matrix for n={n} is rank deficient")))?;
    Ok(a)
}

/// `x(n) x n` left inverse of [`AMatrix`]. Rows follow the divisors of `n`,
/// columns `Q = 0..n`.
#[derive(Debug, Clone, PartialEq)]
pub struct PseudoInverse {
    n: usize,
    divisors: DivisorList,
    rows: Vec<Vec<f64>>,
}

impl PseudoInverse {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn divisors(&self) -> &DivisorList {
        &self.divisors
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    /// Entry for divisor `i` and column `j` in `1..=n` (`j = n` is `Q = 0`).
    pub fn weight(&self, i: u64, j: usize) -> Option<f64> {
        let row = self.divisors.index_of(i)?;
        (1..=self.n)
            .contains(&j)
            .then(|| self.rows[row][j % self.n])
    }

    pub fn apply(&self, p: &[f64]) -> Vec<f64> {
        self.rows
            .iter()
            .map(|row| row.iter().zip(p).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn max_abs_diff(&self, other: &PseudoInverse) -> f64 {
        self.rows
            .iter()
            .flatten()
            .zip(other.rows.iter().flatten())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Closed form: `A+[i][j] = (i / phi(g)) mu(g / i)` when `i | g`, else 0,
/// with `g = n / gcd(n, j)`.
pub fn pseudo_inverse_analytic(n: usize) -> Result<PseudoInverse> {
    if n < 2 {
        return Err(Error::invalid(format!(
            "pseudo-inverse needs n >= 2, got {n}"
        )));
    }
    let divisors = divisors(n as u64)?;
    let n64 = n as u64;
    let mut rows = Vec::with_capacity(divisors.len());
    for i in divisors.iter() {
        let mut row = Vec::with_capacity(n);
        for q in 0..n64 {
            let j = if q == 0 { n64 } else { q };
            let g = n64 / gcd(n64, j);
            let w = if g.is_multiple_of(i) {
                i as f64 / totient(g)? as f64 * f64::from(moebius(g / i)?)
            } else {
                0.0
            };
            row.push(w);
        }
        rows.push(row);
    }
    Ok(PseudoInverse { n, divisors, rows })
}

/// `(A^T A)^{-1} A^T` by Gaussian elimination on the small normal system.
pub fn pseudo_inverse_numeric(a: &AMatrix) -> Result<PseudoInverse> {
    Ok(PseudoInverse {
        n: a.n,
        divisors: a.divisors.clone(),
        rows: solve_normal_equations(a)?,
    })
}

fn solve_normal_equations(a: &AMatrix) -> Result<Vec<Vec<f64>>> {
    let x = a.divisors.len();
    let n = a.n;
    // Augmented [A^T A | A^T].
    let mut aug: Vec<Vec<f64>> = (0..x)
        .map(|r| {
            let mut row: Vec<f64> = (0..x)
                .map(|c| (0..n).map(|q| a.entries[q][r] * a.entries[q][c]).sum())
                .collect();
            row.extend((0..n).map(|q| a.entries[q][r]));
            row
        })
        .collect();
    for col in 0..x {
        let pivot = (col..x)
            .max_by(|&p, &q| aug[p][col].abs().total_cmp(&aug[q][col].abs()))
            .unwrap_or(col);
        if aug[pivot][col].abs() < 1e-12 {
            return Err(Error::Numerical("normal equations are singular".into()));
        }
        aug.swap(col, pivot);
        let d = aug[col][col];
        for v in &mut aug[col] {
            *v /= d;
        }
        for r in 0..x {
            if r != col {
                let f = aug[r][col];
                if f != 0.0 {
                    let (src, dst) = if r < col {
                        let (lo, hi) = aug.split_at_mut(col);
                        (&hi[0], &mut lo[r])
                    } else {
                        let (lo, hi) = aug.split_at_mut(r);
                        (&lo[col], &mut hi[0])
                    };
                    for (dv, sv) in dst.iter_mut().zip(src.iter()) {
                        *dv -= f * sv;
                    }
                }
            }
        }
    }
    Ok(aug.into_iter().map(|row| row[x..].to_vec()).collect())
}

/// Periodicity coefficients `c_t` for every divisor `t` of `n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientVector {
    pub n: usize,
    pub divisors: Vec<u64>,
    pub coefficients: Vec<f64>,
    /// Propagated standard error of each coefficient (zero for exact input).
    pub stderr: Vec<f64>,
}

impl CoefficientVector {
    pub fn get(&self, t: u64) -> Option<f64> {
        let i = self.divisors.iter().position(|&d| d == t)?;
        Some(self.coefficients[i])
    }
}

/// `sum_{g | n} (A+[i][g])^2`: the variance of `c_i` in units of the
/// per-entry variance of the gcd-grouped marginals `P(gcd(Q, n) = k)`.
pub fn coefficient_variance_factor(n: usize, i: u64) -> Result<f64> {
    let n64 = n as u64;
    let mut acc = 0.0;
    for g in divisors(n64)?.iter() {
        if g % i == 0 {
            let w = i as f64 / totient(g)? as f64 * f64::from(moebius(g / i)?);
            acc += w * w;
        }
    }
    Ok(acc)
}

/// Least-squares coefficients `c = A+ P` from Q-marginals. `c1` is the
/// coefficient of the period-1 (fully indistinguishable) component.
///
/// With `shots = Some(N)`, each gcd-grouped marginal is given variance `1/N`
/// and propagated through `A+`.
pub fn estimate_c_vector(
    q_marginals: &QMarginalDistribution,
    n: usize,
    shots: Option<u64>,
) -> Result<(CoefficientVector, GIEstimate)> {
    if q_marginals.len() != n {
        return Err(Error::mismatch(format!(
            "{} Q-marginals for n = {n}",
            q_marginals.len()
        )));
    }
    if shots == Some(0) {
        return Err(Error::invalid("shots must be positive"));
    }
    let pinv = pseudo_inverse_analytic(n)?;
    let coefficients = pinv.apply(q_marginals.probabilities());
    let stderr = pinv
        .divisors
        .iter()
        .map(|i| match shots {
            Some(s) => coefficient_variance_factor(n, i).map(|v| (v / s as f64).sqrt()),
            None => Ok(0.0),
        })
        .collect::<Result<Vec<f64>>>()?;
    let (shots, method) = match shots {
        Some(s) => (s, Method::NonprimePseudoinverse),
        None => (0, Method::Exact),
    };
    let estimate = GIEstimate::clipped(coefficients[0], stderr[0], shots, method);
    Ok((
        CoefficientVector {
            n,
            divisors: pinv.divisors.as_slice().to_vec(),
            coefficients,
            stderr,
        },
        estimate,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErrorAmplification {
    /// `n / phi(n)`: bound on the ratio between the error of `c1` and the
    /// error of the probability estimates.
    pub factor: f64,
    /// `x(n)`, the looser divisor-count bound on the same ratio.
    pub divisor_bound: usize,
    /// Exact variance factor `sum_g (mu(g)/phi(g))^2 <= factor^2`.
    pub variance_factor: f64,
}

pub fn error_amplification(n: usize) -> Result<ErrorAmplification> {
    if n < 2 {
        return Err(Error::invalid(format!(
            "error amplification needs n >= 2, got {n}"
        )));
    }
    let n64 = n as u64;
    Ok(ErrorAmplification {
        factor: n as f64 / totient(n64)? as f64,
        divisor_bound: divisors(n64)?.len(),
        variance_factor: coefficient_variance_factor(n, 1)?,
    })
}

fn check_eps_delta(epsilon: f64, delta: f64) -> Result<()> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::invalid(format!(
            "epsilon = {epsilon} outside (0, 1)"
        )));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::invalid(format!("delta = {delta} outside (0, 1)")));
    }
    Ok(())
}

/// Ceiling that ignores relative rounding noise below `1e-12`, so exact
/// products such as `9 / (0.05^2 * 0.005)` do not round up by one.
fn ceil_count(x: f64) -> u64 {
    (x * (1.0 - 1e-12)).ceil().max(1.0) as u64
}

/// Hoeffding sample count for estimating a probability to within `epsilon`
/// with confidence `1 - delta`: `ceil(ln(2/delta) / (2 epsilon^2))`. This is
/// also the large-`n` limit of [`shots_required_qft`] for prime `n`.
pub fn hoeffding_shots(epsilon: f64, delta: f64) -> Result<u64> {
    check_eps_delta(epsilon, delta)?;
    Ok(ceil_count((2.0 / delta).ln() / (2.0 * epsilon * epsilon)))
}

/// Bound used for non-prime photon numbers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NonPrimeBound {
    /// `x(n)^2 / (epsilon^2 delta)`.
    #[default]
    Chebyshev,
    /// `ln(2/delta) (n/phi(n))^2 / (2 epsilon^2)`.
    Hoeffding,
}

/// Shots needed so that `|c1_hat - c1| <= epsilon` with probability at least
/// `1 - delta` using the Fourier-interferometer protocol.
pub fn shots_required_qft(epsilon: f64, delta: f64, n: usize) -> Result<u64> {
    shots_required_qft_with(epsilon, delta, n, NonPrimeBound::default())
}

pub fn shots_required_qft_with(
    epsilon: f64,
    delta: f64,
    n: usize,
    bound: NonPrimeBound,
) -> Result<u64> {
    check_eps_delta(epsilon, delta)?;
    if n < 2 {
        return Err(Error::invalid(format!("need n >= 2 photons, got {n}")));
    }
    let n64 = n as u64;
    if is_prime(n64) {
        let eff = epsilon * (1.0 - 1.0 / n as f64);
        return Ok(ceil_count((2.0 / delta).ln() / (2.0 * eff * eff)));
    }
    Ok(match bound {
        NonPrimeBound::Chebyshev => {
            let x = divisors(n64)?.len() as f64;
            ceil_count(x * x / (epsilon * epsilon * delta))
        }
        NonPrimeBound::Hoeffding => {
            let amp = n as f64 / totient(n64)? as f64;
            ceil_count((2.0 / delta).ln() * amp * amp / (2.0 * epsilon * epsilon))
        }
    })
}

/// Largest photon number accepted by [`shots_required_ci`].
pub const MAX_CI_PHOTONS: usize = 48;

/// Post-selection scale of the cyclic-interferometer baseline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CiScale {
    /// One post-selected output: `1 / 2^(2n-1)`.
    #[default]
    SingleOutput,
    /// All `2^n` one-photon-per-two-modes outputs combined: `1 / 2^n`.
    CombinedOutputs,
}

impl CiScale {
    pub fn probability_scale(self, n: usize) -> f64 {
        match self {
            CiScale::SingleOutput => 0.5f64.powi(2 * n as i32 - 1),
            CiScale::CombinedOutputs => 0.5f64.powi(n as i32),
        }
    }
}

/// Cyclic-interferometer sample count with the combined-output scale:
/// `4^n * ceil(ln(2/delta) / (2 epsilon^2))`.
pub fn shots_required_ci(epsilon: f64, delta: f64, n: usize) -> Result<u128> {
    shots_required_ci_with(epsilon, delta, n, CiScale::CombinedOutputs)
}

/// As [`shots_required_ci`], with `4^(2n-1)` growth for a single output.
pub fn shots_required_ci_with(epsilon: f64, delta: f64, n: usize, scale: CiScale) -> Result<u128> {
    let base = hoeffding_shots(epsilon, delta)?;
    if n == 0 {
        return Err(Error::invalid("need n >= 1 photons"));
    }
    if n > MAX_CI_PHOTONS {
        return Err(Error::guard(format!(
            "CI sample count overflows for n > {MAX_CI_PHOTONS} (got n = {n})"
        )));
    }
    let exponent = match scale {
        CiScale::CombinedOutputs => 2 * n,
        CiScale::SingleOutput => 2 * (2 * n - 1),
    };
    1u128
        .checked_shl(exponent as u32)
        .filter(|_| exponent < 128)
        .and_then(|p| p.checked_mul(u128::from(base)))
        .ok_or_else(|| Error::guard(format!("CI sample count overflows at n = {n}")))
}

/// Post-selected single-output probability of the cyclic interferometer,
/// `(1 + (-1)^n c1 cos(alpha)) / 2^(2n-1)`.
pub fn ci_fringe_probability(n: usize, c1: f64, alpha: f64) -> Result<f64> {
    ci_fringe_probability_with(n, c1, alpha, CiScale::SingleOutput)
}

pub fn ci_fringe_probability_with(n: usize, c1: f64, alpha: f64, scale: CiScale) -> Result<f64> {
    if n == 0 {
        return Err(Error::invalid("need n >= 1 photons"));
    }
    check_probability(c1, "c1")?;
    let sign = if n.is_multiple_of(2) { 1.0 } else { -1.0 };
    Ok(scale.probability_scale(n) * (1.0 + sign * c1 * alpha.cos()))
}

/// Counts observed at one interferometer phase.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseSample {
    pub alpha: f64,
    pub hits: u64,
    pub shots: u64,
}

/// Linear least-squares fit of `p(alpha) = B + B V cos(alpha)` to the observed
/// frequencies; `c1 = |V|`, with the standard error taken from the residual
/// covariance of `(B, B V)` through the delta method.
pub fn fit_ci_fringe(samples: &[PhaseSample]) -> Result<GIEstimate> {
    let mut distinct: Vec<f64> = samples.iter().map(|s| s.alpha).collect();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() < 3 {
        return Err(Error::invalid(format!(
            "fringe fit needs at least 3 distinct phases, got {}",
            distinct.len()
        )));
    }
    if samples.iter().any(|s| s.shots == 0 || s.hits > s.shots) {
        return Err(Error::invalid(
            "every phase needs shots > 0 and hits <= shots",
        ));
    }
    let k = samples.len() as f64;
    let (mut sc, mut scc, mut sy, mut scy) = (0.0, 0.0, 0.0, 0.0);
    for s in samples {
        let c = s.alpha.cos();
        let y = s.hits as f64 / s.shots as f64;
        sc += c;
        scc += c * c;
        sy += y;
        scy += c * y;
    }
    let det = k * scc - sc * sc;
    if det.abs() < 1e-12 * k * k {
        return Err(Error::invalid("fringe design matrix is degenerate"));
    }
    let base = (scc * sy - sc * scy) / det;
    let slope = (k * scy - sc * sy) / det;
    if base <= 0.0 {
        return Err(Error::Numerical("fringe baseline is not positive".into()));
    }
    let visibility = slope / base;

    let rss: f64 = samples
        .iter()
        .map(|s| {
            let y = s.hits as f64 / s.shots as f64;
            let r = y - base - slope * s.alpha.cos();
            r * r
        })
        .sum();
    let dof = (samples.len() as f64 - 2.0).max(1.0);
    let sigma2 = rss / dof;
    let var_base = sigma2 * scc / det;
    let var_slope = sigma2 * k / det;
    let cov = -sigma2 * sc / det;
    let d_base = -slope / (base * base);
    let d_slope = 1.0 / base;
    let var_v =
        d_base * d_base * var_base + d_slope * d_slope * var_slope + 2.0 * d_base * d_slope * cov;
    let shots = samples.iter().map(|s| s.shots).sum();
    Ok(GIEstimate::clipped(
        visibility.abs(),
        var_v.max(0.0).sqrt(),
        shots,
        Method::CiFringe,
    ))
}

/// Probability that `k` photons entering one `m`-way fan-out of threshold
/// detectors all land on different detectors: `C(m, k) k! / m^k`.
pub fn ppnr_resolve_probability(m_detector: usize, k_photons: usize) -> Result<f64> {
    Ok(1.0 / ppnr_correction(m_detector, k_photons)?)
}

/// Inflation factor compensating bunching losses of pseudo-number-resolving
/// detection: `m^k / (C(m, k) k!)`.
pub fn ppnr_correction(m_detector: usize, k_photons: usize) -> Result<f64> {
    if m_detector == 0 {
        return Err(Error::invalid("detector fan-out must be positive"));
    }
    if k_photons > m_detector {
        return Err(Error::invalid(format!(
            "{k_photons} photons cannot be resolved by {m_detector} detectors"
        )));
    }
    // m^k over the falling factorial m (m-1) ... (m-k+1), exact while it fits.
    let m = m_detector as u128;
    let mut num: Option<u128> = Some(1);
    let mut den: Option<u128> = Some(1);
    for i in 0..k_photons as u128 {
        num = num.and_then(|v| v.checked_mul(m));
        den = den.and_then(|v| v.checked_mul(m - i));
    }
    match (num, den) {
        (Some(a), Some(b)) => {
            let g = gcd_u128(a, b);
            Ok((a / g) as f64 / (b / g) as f64)
        }
        _ => Ok((0..k_photons)
            .map(|i| m_detector as f64 / (m_detector - i) as f64)
            .product()),
    }
}

fn gcd_u128(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}
