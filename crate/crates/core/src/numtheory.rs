//! Integer arithmetic used by the periodicity analysis and the non-prime
//! estimator: divisor lists, gcd/lcm, Euler's totient and the Möbius function.
//!
//! Everything is trial division; the photon numbers of interest are tiny.

use crate::error::{Error, Result};

/// All divisors of `n`, in increasing order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DivisorList {
    n: u64,
    divisors: Vec<u64>,
}

impl DivisorList {
    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn as_slice(&self) -> &[u64] {
        &self.divisors
    }

    /// Number of divisors, `x(n)`.
    pub fn len(&self) -> usize {
        self.divisors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.divisors.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = u64> + '_ {
        self.divisors.iter().copied()
    }

    /// Position of `d` in the list, if it divides `n`.
    pub fn index_of(&self, d: u64) -> Option<usize> {
        self.divisors.binary_search(&d).ok()
    }
}

fn require_positive(n: u64, what: &str) -> Result<()> {
    if n == 0 {
        Err(Error::invalid(format!("{what} requires n >= 1, got 0")))
    } else {
        Ok(())
    }
}

/// Divisors of `n` by trial division up to `sqrt(n)`.
pub fn divisors(n: u64) -> Result<DivisorList> {
    require_positive(n, "divisors")?;
    let mut low = Vec::new();
    let mut high = Vec::new();
    let mut d = 1u64;
    while d * d <= n {
        if n.is_multiple_of(d) {
            low.push(d);
            if d * d != n {
                high.push(n / d);
            }
        }
        d += 1;
    }
    low.extend(high.into_iter().rev());
    Ok(DivisorList { n, divisors: low })
}

/// Prime factorization as `(prime, exponent)` pairs in increasing prime order.
pub fn factorize(n: u64) -> Result<Vec<(u64, u32)>> {
    require_positive(n, "factorize")?;
    let mut rest = n;
    let mut factors = Vec::new();
    let mut p = 2u64;
    while p * p <= rest {
        if rest.is_multiple_of(p) {
            let mut e = 0;
            while rest.is_multiple_of(p) {
                rest /= p;
                e += 1;
            }
            factors.push((p, e));
        }
        p += 1;
    }
    if rest > 1 {
        factors.push((rest, 1));
    }
    Ok(factors)
}

pub fn is_prime(n: u64) -> bool {
    matches!(factorize(n).as_deref(), Ok([(_, 1)]))
}

/// Euler's totient.
pub fn totient(n: u64) -> Result<u64> {
    Ok(factorize(n)?
        .into_iter()
        .fold(n, |acc, (p, _)| acc / p * (p - 1)))
}

/// Möbius function: 0 if `n` has a squared prime factor, otherwise
/// `(-1)^k` with `k` the number of prime factors.
pub fn moebius(n: u64) -> Result<i8> {
    let factors = factorize(n)?;
    if factors.iter().any(|&(_, e)| e > 1) {
        return Ok(0);
    }
    Ok(if factors.len() % 2 == 0 { 1 } else { -1 })
}

pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

pub fn lcm(a: u64, b: u64) -> u64 {
    if a == 0 || b == 0 {
        0
    } else {
        a / gcd(a, b) * b
    }
}

/// Least common multiple of a non-empty list of positive integers.
pub fn lcm_list(values: &[u64]) -> Result<u64> {
    if values.is_empty() {
        return Err(Error::invalid("lcm_list requires a non-empty list"));
    }
    if values.contains(&0) {
        return Err(Error::invalid("lcm_list requires positive entries"));
    }
    Ok(values.iter().fold(1, |acc, &v| lcm(acc, v)))
}

/// Binomial coefficient with saturation on overflow.
pub fn binomial(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * u128::from(n - i) / u128::from(i + 1);
        if acc > u128::from(u64::MAX) {
            return u64::MAX;
        }
    }
    acc as u64
}

pub fn factorial(n: u64) -> f64 {
    (1..=n).map(|k| k as f64).product()
}
