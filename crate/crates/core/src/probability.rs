//! Transition probabilities, output distributions and Q-marginals.
//!
//! Three routes to the same numbers, used to check each other:
//!
//! - [`p_partition`]: sum over register-wise output decompositions of products
//!   of indistinguishable-photon probabilities;
//! - [`p_general_coincidence`]: the double permutation sum weighted by the
//!   distinguishability matrix (coincidence events only);
//! - [`q_marginals_analytic`]: the closed form of the Q-marginals as a
//!   discrete Fourier transform of the cyclic-shift overlaps.

use std::collections::HashMap;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numtheory::gcd;
use crate::optics::{
    check_dims, effective_scattering_matrix, for_each_permutation, permanent, UnitaryMatrix,
};
use crate::states::{enumerate_outputs, DistinguishabilityMatrix, FockState, PartitionState};

/// Accepted deviation of a distribution's total from 1.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-9;
/// Imaginary residue above which the double permutation sum is rejected.
pub const COINCIDENCE_IMAG_TOLERANCE: f64 = 1e-8;
/// Imaginary residue above which the analytic Q-marginals are rejected.
pub const ANALYTIC_IMAG_TOLERANCE: f64 = 1e-10;
/// Largest photon number for the `(n!)^2` coincidence sum.
pub const MAX_COINCIDENCE_PHOTONS: usize = 7;
/// Largest number of register decompositions visited by [`p_partition`].
pub const MAX_DECOMPOSITIONS: u64 = 10_000_000;

/// `|Per(M)|^2 / prod_i r_i! s_i!` for fully indistinguishable photons.
pub fn p_indistinguishable(
    u: &UnitaryMatrix,
    input: &FockState,
    output: &FockState,
) -> Result<f64> {
    let m = effective_scattering_matrix(u, input, output)?;
    let per = permanent(m.matrix())?;
    Ok(per.norm_sqr() / (input.factorial_product() * output.factorial_product()))
}

/// `Per(|M|^2) / prod_i s_i!` for fully distinguishable photons.
///
/// Photons sharing an input mode are still distinct particles, so only the
/// output occupation is divided out.
pub fn p_distinguishable(u: &UnitaryMatrix, input: &FockState, output: &FockState) -> Result<f64> {
    let m = effective_scattering_matrix(u, input, output)?;
    let per = permanent(&m.matrix().abs_squared())?;
    Ok(per.re / output.factorial_product())
}

/// Coincidence probability for an arbitrary 0/1 distinguishability matrix,
///
/// `sum_{sigma, rho} prod_j A[sigma(j)][j] conj(A[rho(j)][j]) S[rho(j)][sigma(j)]`
///
/// with `A[k][j]` the amplitude for input photon `k` to reach output photon
/// slot `j`. Both input and output must hold at most one photon per mode.
pub fn p_general_coincidence(
    u: &UnitaryMatrix,
    input: &FockState,
    output: &FockState,
    s: &DistinguishabilityMatrix,
) -> Result<f64> {
    if !input.is_coincidence() || !output.is_coincidence() {
        return Err(Error::invalid(
            "coincidence probability requires at most one photon per mode",
        ));
    }
    let scattering = effective_scattering_matrix(u, input, output)?;
    let n = input.photons();
    if s.dim() != n {
        return Err(Error::mismatch(format!(
            "distinguishability matrix is {}x{} for {n} photons",
            s.dim(),
            s.dim()
        )));
    }
    if n > MAX_COINCIDENCE_PHOTONS {
        return Err(Error::guard(format!(
            "coincidence sum limited to n <= {MAX_COINCIDENCE_PHOTONS}, got {n}"
        )));
    }
    // Scattering rows are output slots, columns input photons.
    let amp = |k: usize, j: usize| scattering.matrix()[(j, k)];
    let mut sigmas = Vec::new();
    let mut perm: Vec<usize> = (0..n).collect();
    for_each_permutation(&mut perm, 0, &mut |p| sigmas.push(p.to_vec()));
    let mut total = Complex64::new(0.0, 0.0);
    for sigma in &sigmas {
        let fwd: Vec<Complex64> = (0..n).map(|j| amp(sigma[j], j)).collect();
        for rho in &sigmas {
            let mut term = Complex64::new(1.0, 0.0);
            for j in 0..n {
                if !s.get(rho[j], sigma[j]) {
                    term = Complex64::new(0.0, 0.0);
                    break;
                }
                term *= fwd[j] * amp(rho[j], j).conj();
            }
            total += term;
        }
    }
    if total.im.abs() > COINCIDENCE_IMAG_TOLERANCE {
        return Err(Error::Numerical(format!(
            "coincidence probability has imaginary part {:e}",
            total.im
        )));
    }
    Ok(total.re)
}

/// Transition probability of a partition state: sum over every way of
/// splitting `output` among the registers (photon number conserved per
/// register) of `prod_j N_j |Per(M_j)|^2`.
pub fn p_partition(u: &UnitaryMatrix, input: &PartitionState, output: &FockState) -> Result<f64> {
    check_dims(u, input.occupations(), output)?;
    let regs = input.register_states();
    let sizes: Vec<usize> = regs.iter().map(FockState::photons).collect();
    let m = output.modes();
    let k = regs.len();

    let mut cache: HashMap<(usize, Vec<usize>), f64> = HashMap::new();
    let mut split = vec![vec![0usize; m]; k];
    let mut filled = vec![0usize; k];
    let mut visited = 0u64;
    let mut total = 0.0;
    let mut ctx = DecompositionCtx {
        u,
        regs: &regs,
        sizes: &sizes,
        output: output.occupations(),
        cache: &mut cache,
        visited: &mut visited,
        total: &mut total,
    };
    ctx.walk(
        0,
        0,
        output.occupations().first().copied().unwrap_or(0),
        &mut split,
        &mut filled,
    )?;
    Ok(total)
}

struct DecompositionCtx<'a> {
    u: &'a UnitaryMatrix,
    regs: &'a [FockState],
    sizes: &'a [usize],
    output: &'a [usize],
    cache: &'a mut HashMap<(usize, Vec<usize>), f64>,
    visited: &'a mut u64,
    total: &'a mut f64,
}

impl DecompositionCtx<'_> {
    /// Distribute the photons of `mode` over registers `reg..`, `left` of them
    /// still unassigned, then recurse into the next mode.
    fn walk(
        &mut self,
        mode: usize,
        reg: usize,
        left: usize,
        split: &mut [Vec<usize>],
        filled: &mut [usize],
    ) -> Result<()> {
        let k = self.regs.len();
        let m = self.output.len();
        if reg + 1 == k {
            // Last register takes the remainder of this mode.
            if filled[reg] + left > self.sizes[reg] {
                return Ok(());
            }
            split[reg][mode] = left;
            filled[reg] += left;
            if mode + 1 == m {
                if filled.iter().zip(self.sizes).all(|(f, s)| f == s) {
                    self.leaf(split)?;
                }
            } else {
                let next = self.output[mode + 1];
                self.walk(mode + 1, 0, next, split, filled)?;
            }
            filled[reg] -= left;
            split[reg][mode] = 0;
            return Ok(());
        }
        let room = self.sizes[reg] - filled[reg];
        for take in 0..=left.min(room) {
            split[reg][mode] = take;
            filled[reg] += take;
            self.walk(mode, reg + 1, left - take, split, filled)?;
            filled[reg] -= take;
        }
        split[reg][mode] = 0;
        Ok(())
    }

    fn leaf(&mut self, split: &[Vec<usize>]) -> Result<()> {
        *self.visited += 1;
        if *self.visited > MAX_DECOMPOSITIONS {
            return Err(Error::guard(format!(
                "more than {MAX_DECOMPOSITIONS} register decompositions"
            )));
        }
        let mut prod = 1.0;
        for (j, part) in split.iter().enumerate() {
            let key = (j, part.clone());
            let p = match self.cache.get(&key) {
                Some(&p) => p,
                None => {
                    let p =
                        p_indistinguishable(self.u, &self.regs[j], &FockState::new(part.clone())?)?;
                    self.cache.insert(key, p);
                    p
                }
            };
            prod *= p;
            if prod == 0.0 {
                break;
            }
        }
        *self.total += prod;
        Ok(())
    }
}

/// Probability of every output configuration, in [`enumerate_outputs`] order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputDistribution {
    entries: Vec<(FockState, f64)>,
}

impl OutputDistribution {
    pub fn entries(&self) -> &[(FockState, f64)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, s: &FockState) -> Option<f64> {
        self.entries.iter().find(|(o, _)| o == s).map(|&(_, p)| p)
    }

    pub fn total(&self) -> f64 {
        self.entries.iter().map(|&(_, p)| p).sum()
    }

    pub fn q_marginals(&self) -> Result<QMarginalDistribution> {
        let m = self.entries.first().map(|(s, _)| s.modes()).unwrap_or(1);
        let mut probs = vec![0.0; m];
        for (s, p) in &self.entries {
            probs[s.q_value()] += p;
        }
        QMarginalDistribution::new(probs)
    }
}

/// Full output distribution of a partition state.
///
/// Registers are independent groups of indistinguishable photons, so the
/// distribution is the convolution (over occupation vectors) of each
/// register's indistinguishable output distribution. This is the same sum as
/// [`p_partition`] taken over every output at once.
pub fn output_distribution(
    u: &UnitaryMatrix,
    input: &PartitionState,
) -> Result<OutputDistribution> {
    let m = u.modes();
    if input.modes() != m {
        return Err(Error::mismatch(format!(
            "unitary has {m} modes, input {}",
            input.modes()
        )));
    }
    let outputs = enumerate_outputs(input.photons(), m)?;

    let mut cache: HashMap<FockState, Vec<(Vec<usize>, f64)>> = HashMap::new();
    let mut acc: HashMap<Vec<usize>, f64> = HashMap::from([(vec![0usize; m], 1.0)]);
    for reg in input.register_states() {
        if !cache.contains_key(&reg) {
            let dist = register_distribution(u, &reg)?;
            cache.insert(reg.clone(), dist);
        }
        let dist = &cache[&reg];
        let mut next: HashMap<Vec<usize>, f64> = HashMap::with_capacity(acc.len() * 2);
        for (a, pa) in &acc {
            for (b, pb) in dist {
                let key: Vec<usize> = a.iter().zip(b).map(|(x, y)| x + y).collect();
                *next.entry(key).or_insert(0.0) += pa * pb;
            }
        }
        acc = next;
    }
    let entries = outputs
        .into_iter()
        .map(|s| {
            let p = acc.get(s.occupations()).copied().unwrap_or(0.0);
            (s, p)
        })
        .collect();
    Ok(OutputDistribution { entries })
}

/// Non-zero output probabilities of one register of indistinguishable photons.
fn register_distribution(u: &UnitaryMatrix, reg: &FockState) -> Result<Vec<(Vec<usize>, f64)>> {
    let outs = enumerate_outputs(reg.photons(), u.modes())?;
    let probs = outs
        .par_iter()
        .map(|s| p_indistinguishable(u, reg, s))
        .collect::<Result<Vec<f64>>>()?;
    Ok(outs
        .into_iter()
        .zip(probs)
        .filter(|&(_, p)| p != 0.0)
        .map(|(s, p)| (Vec::from(s), p))
        .collect())
}

/// `P(Q = k)` for `k = 0..m`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct QMarginalDistribution(Vec<f64>);

impl QMarginalDistribution {
    /// Validates non-negativity (up to `-1e-12` rounding, clamped to zero) and
    /// normalization within [`NORMALIZATION_TOLERANCE`].
    pub fn new(mut probabilities: Vec<f64>) -> Result<Self> {
        if probabilities.is_empty() {
            return Err(Error::invalid("empty Q distribution"));
        }
        for p in &mut probabilities {
            if !p.is_finite() || *p < -1e-12 {
                return Err(Error::Numerical(format!("invalid Q probability {p}")));
            }
            if *p < 0.0 {
                *p = 0.0;
            }
        }
        let total: f64 = probabilities.iter().sum();
        if (total - 1.0).abs() > NORMALIZATION_TOLERANCE {
            return Err(Error::Numerical(format!("Q distribution sums to {total}")));
        }
        Ok(QMarginalDistribution(probabilities))
    }

    /// Empirical frequencies from per-Q counts.
    pub fn from_counts(counts: &[u64]) -> Result<Self> {
        let total: u64 = counts.iter().sum();
        if total == 0 {
            return Err(Error::invalid("no counts"));
        }
        QMarginalDistribution::new(counts.iter().map(|&c| c as f64 / total as f64).collect())
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `P(Q != 0)`.
    pub fn p_nonzero(&self) -> f64 {
        self.0[1..].iter().sum()
    }

    pub fn max_abs_diff(&self, other: &QMarginalDistribution) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Q-marginals by summing the exact output distribution.
pub fn q_marginals_bruteforce(
    u: &UnitaryMatrix,
    input: &PartitionState,
) -> Result<QMarginalDistribution> {
    output_distribution(u, input)?.q_marginals()
}

/// Closed-form Q-marginals under the `n`-mode Fourier interferometer for one
/// photon per mode:
///
/// `P(Q = k) = (1/n) sum_j omega^(k j) prod_i S[i][(i + j) mod n]`.
pub fn q_marginals_analytic(input: &PartitionState) -> Result<QMarginalDistribution> {
    let n = input.photons();
    if n == 0 || n != input.modes() || !input.occupations().is_one_per_mode() {
        return Err(Error::invalid(
            "analytic Q-marginals require exactly one photon per mode",
        ));
    }
    let s = input.distinguishability_matrix();
    // Shifts j whose cyclic overlap product is 1.
    let shifts: Vec<usize> = (0..n)
        .filter(|&j| (0..n).all(|i| s.get(i, (i + j) % n)))
        .collect();
    let mut probs = Vec::with_capacity(n);
    for k in 0..n {
        let sum: Complex64 = shifts
            .iter()
            .map(|&j| {
                let e = (k * j) % n;
                Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * e as f64 / n as f64)
            })
            .sum();
        let p = sum / n as f64;
        if p.im.abs() > ANALYTIC_IMAG_TOLERANCE {
            return Err(Error::Numerical(format!(
                "analytic P(Q={k}) has imaginary part {:e}",
                p.im
            )));
        }
        probs.push(p.re);
    }
    QMarginalDistribution::new(probs)
}

/// Q-marginals of any `t`-periodic one-photon-per-mode state: `1/t` on every
/// multiple of `n/t`, zero elsewhere.
pub fn q_marginals_periodic(t: usize, n: usize) -> Result<QMarginalDistribution> {
    if t == 0 || n == 0 || !n.is_multiple_of(t) {
        return Err(Error::invalid(format!("period {t} does not divide {n}")));
    }
    let step = n / t;
    QMarginalDistribution::new(
        (0..n)
            .map(|k| if k % step == 0 { 1.0 / t as f64 } else { 0.0 })
            .collect(),
    )
}

/// Per-Q outcome of [`verify_pztl_uniformity`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UniformityEntry {
    pub q: usize,
    pub probability: f64,
    /// `Q != 0 mod (m/t)`: forbidden by the periodic suppression law.
    pub suppressed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UniformityReport {
    pub modes: usize,
    pub period: usize,
    pub photons_per_period: usize,
    pub entries: Vec<UniformityEntry>,
    /// Largest probability found on a suppressed Q value.
    pub max_suppressed: f64,
    /// Largest deviation from `1/t` among allowed Q values.
    pub max_uniform_deviation: f64,
    /// Whether every allowed Q value carries `1/t` within `1e-9`; only
    /// asserted when photons-per-period and `t` are coprime.
    pub uniform: Option<bool>,
}

/// Smallest `t | m` with `occ[i] == occ[(i + t) mod m]` for all `i`.
pub fn fock_period(state: &FockState) -> usize {
    let m = state.modes();
    let occ = state.occupations();
    (1..=m)
        .filter(|t| m.is_multiple_of(*t))
        .find(|&t| (0..m).all(|i| occ[i] == occ[(i + t) % m]))
        .unwrap_or(m)
}

/// Brute-force check of the periodic suppression law and the `1/t` spread of
/// allowed Q values for a periodic, fully indistinguishable Fock input
/// through the `m`-mode Fourier interferometer.
pub fn verify_pztl_uniformity(m: usize, periodic_input: &FockState) -> Result<UniformityReport> {
    if periodic_input.modes() != m {
        return Err(Error::mismatch(format!(
            "input has {} modes, expected {m}",
            periodic_input.modes()
        )));
    }
    let n = periodic_input.photons();
    if n == 0 {
        return Err(Error::invalid("input has no photons"));
    }
    let t = fock_period(periodic_input);
    if t == m && m > 1 {
        return Err(Error::invalid(format!(
            "input {periodic_input} is not periodic in {m} modes"
        )));
    }
    let n_t = n / (m / t);
    let u = crate::optics::qft_matrix(m)?;
    let dist = output_distribution(
        &u,
        &PartitionState::indistinguishable(periodic_input.clone()),
    )?;
    let q = dist.q_marginals()?;
    let step = m / t;
    let target = 1.0 / t as f64;
    let entries: Vec<UniformityEntry> = q
        .probabilities()
        .iter()
        .enumerate()
        .map(|(k, &p)| UniformityEntry {
            q: k,
            probability: p,
            suppressed: k % step != 0,
        })
        .collect();
    let max_suppressed = entries
        .iter()
        .filter(|e| e.suppressed)
        .map(|e| e.probability)
        .fold(0.0, f64::max);
    let max_uniform_deviation = entries
        .iter()
        .filter(|e| !e.suppressed)
        .map(|e| (e.probability - target).abs())
        .fold(0.0, f64::max);
    let uniform = (gcd(n_t as u64, t as u64) == 1).then_some(max_uniform_deviation <= 1e-9);
    Ok(UniformityReport {
        modes: m,
        period: t,
        photons_per_period: n_t,
        entries,
        max_suppressed,
        max_uniform_deviation,
        uniform,
    })
}
