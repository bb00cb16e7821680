//! Photon-state data model.
//!
//! Mode indices are 1-based wherever they are exposed (mode-assignment
//! vectors, Q-values), so that `Q(s) = sum(d(s)) mod m` matches the usual
//! convention. Q-values themselves live in `0..m`; the value `m` is the same
//! residue as `0`.
//!
//! Serialized forms:
//!
//! ```json
//! {"occupations":[1,1,1],"registers":[1,1,2]}
//! {"components":[{"weight":0.8,"state":{"occupations":[1,1,1],"registers":[1,1,1]}}]}
//! ```
//!
//! Occupations are per mode in mode order (mode 1 first); registers are one
//! label per photon in mode-assignment order.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numtheory::{binomial, divisors};

/// Largest photon number accepted by [`enumerate_partition_states`].
pub const MAX_PARTITION_PHOTONS: usize = 12;
/// Largest number of output configurations accepted by [`enumerate_outputs`].
pub const MAX_OUTPUT_STATES: u64 = 10_000_000;

/// Occupation numbers of `m` modes.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct FockState(Vec<usize>);

impl FockState {
    pub fn new(occupations: Vec<usize>) -> Result<Self> {
        if occupations.is_empty() {
            return Err(Error::invalid("a Fock state needs at least one mode"));
        }
        Ok(FockState(occupations))
    }

    /// `n` photons, one in each of `n` modes.
    pub fn one_per_mode(n: usize) -> Result<Self> {
        FockState::new(vec![1; n])
    }

    pub fn occupations(&self) -> &[usize] {
        &self.0
    }

    /// Number of modes `m`.
    pub fn modes(&self) -> usize {
        self.0.len()
    }

    /// Total photon number `n`.
    pub fn photons(&self) -> usize {
        self.0.iter().sum()
    }

    pub fn is_one_per_mode(&self) -> bool {
        self.0.iter().all(|&s| s == 1)
    }

    pub fn is_coincidence(&self) -> bool {
        self.0.iter().all(|&s| s <= 1)
    }

    pub fn mode_assignment(&self) -> ModeAssignment {
        mode_assignment(self)
    }

    pub fn q_value(&self) -> usize {
        q_value(self)
    }

    /// Cyclic shift: the returned state has `s'_j = s_{(j + k) mod m}`, so
    /// every photon moves `k` modes down (with wraparound).
    pub fn shifted(&self, k: usize) -> FockState {
        let m = self.modes();
        FockState((0..m).map(|j| self.0[(j + k) % m]).collect())
    }

    /// `prod_i s_i!`
    pub fn factorial_product(&self) -> f64 {
        self.0
            .iter()
            .map(|&s| crate::numtheory::factorial(s as u64))
            .product()
    }
}

impl TryFrom<Vec<usize>> for FockState {
    type Error = Error;

    fn try_from(v: Vec<usize>) -> Result<Self> {
        FockState::new(v)
    }
}

impl From<FockState> for Vec<usize> {
    fn from(s: FockState) -> Self {
        s.0
    }
}

impl std::fmt::Display for FockState {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "(")?;
        for (i, s) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{s}")?;
        }
        write!(f, ")")
    }
}

/// Sorted list of 1-based mode indices, one per photon.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ModeAssignment(Vec<usize>);

impl ModeAssignment {
    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

pub fn mode_assignment(state: &FockState) -> ModeAssignment {
    let modes = state
        .occupations()
        .iter()
        .enumerate()
        .flat_map(|(j, &s)| std::iter::repeat_n(j + 1, s))
        .collect();
    ModeAssignment(modes)
}

/// `(sum_i d_i(s)) mod m`.
pub fn q_value(state: &FockState) -> usize {
    let m = state.modes();
    let total: usize = state
        .occupations()
        .iter()
        .enumerate()
        .map(|(j, &s)| (j + 1) * s)
        .sum();
    total % m
}

/// Pairwise overlap matrix of a partition state: entry `(k, l)` is 1 when
/// photons `k` and `l` share a register.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DistinguishabilityMatrix {
    n: usize,
    entries: Vec<u8>,
}

impl DistinguishabilityMatrix {
    /// Build from explicit 0/1 entries. The entries must describe an
    /// equivalence relation (unit diagonal, symmetric, transitive).
    pub fn from_entries(rows: Vec<Vec<u8>>) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::invalid("distinguishability matrix must be square"));
        }
        let entries: Vec<u8> = rows.into_iter().flatten().collect();
        if entries.iter().any(|&e| e > 1) {
            return Err(Error::invalid("distinguishability entries must be 0 or 1"));
        }
        let s = DistinguishabilityMatrix { n, entries };
        if !s.is_equivalence_relation() {
            return Err(Error::invalid(
                "distinguishability matrix is not an equivalence relation",
            ));
        }
        Ok(s)
    }

    pub fn fully_indistinguishable(n: usize) -> Self {
        DistinguishabilityMatrix {
            n,
            entries: vec![1; n * n],
        }
    }

    pub fn fully_distinguishable(n: usize) -> Self {
        let mut entries = vec![0; n * n];
        for k in 0..n {
            entries[k * n + k] = 1;
        }
        DistinguishabilityMatrix { n, entries }
    }

    fn from_registers(registers: &[usize]) -> Self {
        let n = registers.len();
        let entries = registers
            .iter()
            .flat_map(|a| registers.iter().map(move |b| u8::from(a == b)))
            .collect();
        DistinguishabilityMatrix { n, entries }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Zero-based access.
    pub fn get(&self, k: usize, l: usize) -> bool {
        self.entries[k * self.n + l] == 1
    }

    pub fn value(&self, k: usize, l: usize) -> f64 {
        f64::from(self.entries[k * self.n + l])
    }

    pub fn rows(&self) -> Vec<Vec<u8>> {
        self.entries
            .chunks(self.n.max(1))
            .map(<[u8]>::to_vec)
            .collect()
    }

    pub fn is_equivalence_relation(&self) -> bool {
        let n = self.n;
        for k in 0..n {
            if !self.get(k, k) {
                return false;
            }
            for l in 0..n {
                if self.get(k, l) != self.get(l, k) {
                    return false;
                }
                for p in 0..n {
                    if self.get(k, l) && self.get(l, p) && !self.get(k, p) {
                        return false;
                    }
                }
            }
        }
        true
    }
}

/// Fock state whose photons are split into registers of mutually
/// indistinguishable photons; different registers are orthogonal.
///
/// Register labels are stored in restricted-growth form: the first photon is
/// in register 1 and every new register gets the next unused label. Any
/// labelling passed to [`PartitionState::new`] is relabelled to that form.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawPartitionState")]
pub struct PartitionState {
    occupations: FockState,
    registers: Vec<usize>,
}

#[derive(Deserialize)]
struct RawPartitionState {
    occupations: FockState,
    registers: Vec<usize>,
}

impl TryFrom<RawPartitionState> for PartitionState {
    type Error = Error;

    fn try_from(raw: RawPartitionState) -> Result<Self> {
        PartitionState::new(raw.occupations, raw.registers)
    }
}

fn canonical_labels(labels: &[usize]) -> Vec<usize> {
    let mut seen: Vec<usize> = Vec::new();
    labels
        .iter()
        .map(|l| match seen.iter().position(|s| s == l) {
            Some(i) => i + 1,
            None => {
                seen.push(*l);
                seen.len()
            }
        })
        .collect()
}

impl PartitionState {
    pub fn new(occupations: FockState, registers: Vec<usize>) -> Result<Self> {
        let n = occupations.photons();
        if registers.len() != n {
            return Err(Error::invalid(format!(
                "{} register labels for {} photons",
                registers.len(),
                n
            )));
        }
        if registers.contains(&0) {
            return Err(Error::invalid("register labels start at 1"));
        }
        Ok(PartitionState {
            occupations,
            registers: canonical_labels(&registers),
        })
    }

    /// One photon in each of `registers.len()` modes.
    pub fn one_per_mode(registers: &[usize]) -> Result<Self> {
        PartitionState::new(
            FockState::one_per_mode(registers.len())?,
            registers.to_vec(),
        )
    }

    /// All photons in one register.
    pub fn indistinguishable(occupations: FockState) -> Self {
        let n = occupations.photons();
        PartitionState {
            occupations,
            registers: vec![1; n],
        }
    }

    /// Every photon in its own register.
    pub fn distinguishable(occupations: FockState) -> Self {
        let n = occupations.photons();
        PartitionState {
            occupations,
            registers: (1..=n).collect(),
        }
    }

    pub fn occupations(&self) -> &FockState {
        &self.occupations
    }

    pub fn registers(&self) -> &[usize] {
        &self.registers
    }

    pub fn photons(&self) -> usize {
        self.registers.len()
    }

    pub fn modes(&self) -> usize {
        self.occupations.modes()
    }

    /// Number of registers `K`.
    pub fn register_count(&self) -> usize {
        self.registers.iter().copied().max().unwrap_or(0)
    }

    pub fn is_fully_indistinguishable(&self) -> bool {
        self.register_count() <= 1
    }

    /// One register of indistinguishable photons plus at least one singleton
    /// register, and no other multi-photon register.
    pub fn is_obb(&self) -> bool {
        let sizes = self.register_sizes();
        let big = sizes.iter().filter(|&&s| s > 1).count();
        let singles = sizes.iter().filter(|&&s| s == 1).count();
        big <= 1 && singles >= 1 && sizes.len() >= 2
    }

    pub fn register_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.register_count()];
        for &r in &self.registers {
            sizes[r - 1] += 1;
        }
        sizes
    }

    /// Per-register occupation vectors `r^(j)`, `j = 1..=K`.
    pub fn register_states(&self) -> Vec<FockState> {
        let m = self.modes();
        let mut out = vec![vec![0usize; m]; self.register_count()];
        for (photon, &mode) in self
            .occupations
            .mode_assignment()
            .as_slice()
            .iter()
            .enumerate()
        {
            out[self.registers[photon] - 1][mode - 1] += 1;
        }
        out.into_iter().map(FockState).collect()
    }

    pub fn distinguishability_matrix(&self) -> DistinguishabilityMatrix {
        distinguishability_matrix(self)
    }

    pub fn periodicity(&self) -> Result<usize> {
        periodicity(self)
    }
}

pub fn distinguishability_matrix(state: &PartitionState) -> DistinguishabilityMatrix {
    DistinguishabilityMatrix::from_registers(&state.registers)
}

/// Smallest `t | n` such that shifting every photon by `t` modes maps each
/// register onto itself. Non-periodic states get `t = n`.
///
/// Only defined for one photon per mode.
pub fn periodicity(state: &PartitionState) -> Result<usize> {
    let n = state.photons();
    if n != state.modes() || !state.occupations.is_one_per_mode() {
        return Err(Error::invalid(
            "periodicity requires exactly one photon per mode (n = m)",
        ));
    }
    let regs = &state.registers;
    let ds = divisors(n as u64)?;
    for t in ds.iter().map(|t| t as usize) {
        if (0..n).all(|i| regs[i] == regs[(i + t) % n]) {
            return Ok(t);
        }
    }
    Ok(n)
}

/// Canonical `t`-periodic state on `n` photons: register of photon `i` is
/// `i mod t`. Its period is exactly `t`.
pub fn periodic_partition_state(n: usize, t: usize) -> Result<PartitionState> {
    if t == 0 || n == 0 || !n.is_multiple_of(t) {
        return Err(Error::invalid(format!("period {t} does not divide {n}")));
    }
    let regs: Vec<usize> = (0..n).map(|i| i % t + 1).collect();
    PartitionState::one_per_mode(&regs)
}

/// All OBB partition states on `n` photons, one photon per mode.
pub fn obb_partition_states(n: usize) -> Result<Vec<PartitionState>> {
    Ok(enumerate_partition_states(n)?
        .into_iter()
        .filter(PartitionState::is_obb)
        .collect())
}

/// Weighted ensemble of partition states sharing one occupation vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMixture")]
pub struct PartitionMixture {
    components: Vec<MixtureComponent>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureComponent {
    pub weight: f64,
    pub state: PartitionState,
}

#[derive(Deserialize)]
struct RawMixture {
    components: Vec<MixtureComponent>,
}

impl TryFrom<RawMixture> for PartitionMixture {
    type Error = Error;

    fn try_from(raw: RawMixture) -> Result<Self> {
        PartitionMixture::new(raw.components)
    }
}

/// Tolerance on the total weight of a mixture.
pub const WEIGHT_SUM_TOLERANCE: f64 = 1e-12;

impl PartitionMixture {
    pub fn new(components: Vec<MixtureComponent>) -> Result<Self> {
        let Some(first) = components.first() else {
            return Err(Error::invalid("mixture has no components"));
        };
        let occ = first.state.occupations().clone();
        for c in &components {
            if !c.weight.is_finite() || c.weight < 0.0 {
                return Err(Error::invalid(format!(
                    "negative or non-finite weight {}",
                    c.weight
                )));
            }
            if c.state.occupations() != &occ {
                return Err(Error::invalid(
                    "mixture components must share the same occupations",
                ));
            }
        }
        let total: f64 = components.iter().map(|c| c.weight).sum();
        if (total - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
            return Err(Error::invalid(format!(
                "mixture weights sum to {total}, expected 1"
            )));
        }
        Ok(PartitionMixture { components })
    }

    pub fn pure(state: PartitionState) -> Self {
        PartitionMixture {
            components: vec![MixtureComponent { weight: 1.0, state }],
        }
    }

    /// `c1` of fully indistinguishable photons plus `1 - c1` fully
    /// distinguishable, one photon per mode.
    pub fn indistinguishable_vs_distinguishable(n: usize, c1: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&c1) {
            return Err(Error::invalid(format!("c1 = {c1} outside [0, 1]")));
        }
        let occ = FockState::one_per_mode(n)?;
        let mut components = vec![MixtureComponent {
            weight: c1,
            state: PartitionState::indistinguishable(occ.clone()),
        }];
        if n > 1 && c1 < 1.0 {
            components.push(MixtureComponent {
                weight: 1.0 - c1,
                state: PartitionState::distinguishable(occ),
            });
        } else if c1 < 1.0 {
            components[0].weight = 1.0;
        }
        PartitionMixture::new(components)
    }

    /// Parse `"0.8:1,1,1;0.2:1,2,3"`: semicolon-separated `weight:registers`
    /// items, each a one-photon-per-mode partition state.
    pub fn from_inline(spec: &str) -> Result<Self> {
        let mut components = Vec::new();
        for item in spec.split(';').map(str::trim).filter(|s| !s.is_empty()) {
            let (w, regs) = item
                .split_once(':')
                .ok_or_else(|| Error::invalid(format!("mixture item `{item}` lacks `weight:`")))?;
            let weight: f64 = w
                .trim()
                .parse()
                .map_err(|_| Error::invalid(format!("bad mixture weight `{w}`")))?;
            let registers = parse_list(regs)?;
            components.push(MixtureComponent {
                weight,
                state: PartitionState::one_per_mode(&registers)?,
            });
        }
        PartitionMixture::new(components)
    }

    pub fn components(&self) -> &[MixtureComponent] {
        &self.components
    }

    pub fn occupations(&self) -> &FockState {
        self.components[0].state.occupations()
    }

    pub fn photons(&self) -> usize {
        self.occupations().photons()
    }

    /// Total weight of fully indistinguishable components.
    pub fn genuine_indistinguishability(&self) -> f64 {
        self.components
            .iter()
            .filter(|c| c.state.is_fully_indistinguishable())
            .map(|c| c.weight)
            .sum()
    }
}

/// Parse a comma-separated list of non-negative integers.
pub fn parse_list(s: &str) -> Result<Vec<usize>> {
    let s = s.trim();
    if s.is_empty() {
        return Ok(Vec::new());
    }
    s.split(',')
        .map(|tok| {
            tok.trim()
                .parse::<usize>()
                .map_err(|_| Error::invalid(format!("`{tok}` is not a non-negative integer")))
        })
        .collect()
}

/// One canonical one-photon-per-mode state for every set partition of `n`
/// photons, generated as restricted-growth strings in lexicographic order.
pub fn enumerate_partition_states(n: usize) -> Result<Vec<PartitionState>> {
    if n == 0 {
        return Err(Error::invalid("need at least one photon"));
    }
    if n > MAX_PARTITION_PHOTONS {
        return Err(Error::guard(format!(
            "partition enumeration limited to n <= {MAX_PARTITION_PHOTONS}, got {n}"
        )));
    }
    let occ = FockState::one_per_mode(n)?;
    let mut out = Vec::new();
    let mut rgs = vec![1usize; n];
    loop {
        out.push(PartitionState {
            occupations: occ.clone(),
            registers: rgs.clone(),
        });
        // Advance to the next restricted-growth string.
        let mut i = n - 1;
        loop {
            if i == 0 {
                return Ok(out);
            }
            let prefix_max = rgs[..i].iter().copied().max().unwrap_or(0);
            if rgs[i] <= prefix_max {
                rgs[i] += 1;
                for r in rgs.iter_mut().skip(i + 1) {
                    *r = 1;
                }
                break;
            }
            i -= 1;
        }
    }
}

/// Number of output configurations of `n` photons in `m` modes.
pub fn output_count(n: usize, m: usize) -> u64 {
    if m == 0 {
        return 0;
    }
    binomial((n + m - 1) as u64, (m - 1) as u64)
}

/// Every occupation vector of `n` photons in `m` modes, largest first-mode
/// occupation first: `(2,0), (1,1), (0,2)`.
pub fn enumerate_outputs(n: usize, m: usize) -> Result<Vec<FockState>> {
    if m == 0 {
        return Err(Error::invalid("need at least one mode"));
    }
    let count = output_count(n, m);
    if count > MAX_OUTPUT_STATES {
        return Err(Error::guard(format!(
            "{count} output states for n={n}, m={m} exceeds limit {MAX_OUTPUT_STATES}"
        )));
    }
    let mut out = Vec::with_capacity(count as usize);
    let mut current = vec![0usize; m];
    fill_outputs(&mut current, 0, n, &mut out);
    Ok(out)
}

fn fill_outputs(current: &mut Vec<usize>, mode: usize, left: usize, out: &mut Vec<FockState>) {
    if mode + 1 == current.len() {
        current[mode] = left;
        out.push(FockState(current.clone()));
        return;
    }
    for k in (0..=left).rev() {
        current[mode] = k;
        fill_outputs(current, mode + 1, left - k, out);
    }
    current[mode] = 0;
}
