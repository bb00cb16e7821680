//! Interferometer matrices and permanents.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::states::FockState;

/// Unitarity tolerance for [`UnitaryMatrix::new`].
pub const UNITARITY_TOLERANCE: f64 = 1e-10;
/// Largest order accepted by [`permanent`].
pub const MAX_PERMANENT_DIM: usize = 30;
/// Largest order accepted by [`permanent_naive`].
pub const MAX_NAIVE_PERMANENT_DIM: usize = 9;

/// Dense row-major complex square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SquareMatrix {
    dim: usize,
    data: Vec<Complex64>,
}

impl SquareMatrix {
    pub fn zeros(dim: usize) -> Self {
        SquareMatrix {
            dim,
            data: vec![Complex64::new(0.0, 0.0); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = SquareMatrix::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let data = (0..dim * dim).map(|k| f(k / dim, k % dim)).collect();
        SquareMatrix { dim, data }
    }

    pub fn from_rows(rows: Vec<Vec<Complex64>>) -> Result<Self> {
        let dim = rows.len();
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::invalid("matrix is not square"));
        }
        Ok(SquareMatrix {
            dim,
            data: rows.into_iter().flatten().collect(),
        })
    }

    pub fn from_real_rows(rows: &[Vec<f64>]) -> Result<Self> {
        SquareMatrix::from_rows(
            rows.iter()
                .map(|r| r.iter().map(|&x| Complex64::new(x, 0.0)).collect())
                .collect(),
        )
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &[Complex64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[Complex64]> {
        self.data.chunks(self.dim.max(1))
    }

    pub fn transpose(&self) -> SquareMatrix {
        SquareMatrix::from_fn(self.dim, |i, j| self[(j, i)])
    }

    pub fn adjoint(&self) -> SquareMatrix {
        SquareMatrix::from_fn(self.dim, |i, j| self[(j, i)].conj())
    }

    pub fn mul(&self, other: &SquareMatrix) -> SquareMatrix {
        assert_eq!(self.dim, other.dim);
        let n = self.dim;
        SquareMatrix::from_fn(n, |i, j| (0..n).map(|k| self[(i, k)] * other[(k, j)]).sum())
    }

    /// Element-wise `|a_ij|^2`.
    pub fn abs_squared(&self) -> SquareMatrix {
        SquareMatrix {
            dim: self.dim,
            data: self
                .data
                .iter()
                .map(|z| Complex64::new(z.norm_sqr(), 0.0))
                .collect(),
        }
    }

    /// Largest entry-wise distance from the identity of `A A^dagger`.
    pub fn unitarity_defect(&self) -> f64 {
        let prod = self.mul(&self.adjoint());
        let id = SquareMatrix::identity(self.dim);
        prod.data
            .iter()
            .zip(&id.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Permute rows by `rows` and columns by `cols`: result `(i, j)` is
    /// `self[(rows[i], cols[j])]`.
    pub fn permuted(&self, rows: &[usize], cols: &[usize]) -> SquareMatrix {
        SquareMatrix::from_fn(self.dim, |i, j| self[(rows[i], cols[j])])
    }
}

impl std::ops::Index<(usize, usize)> for SquareMatrix {
    type Output = Complex64;

    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.dim + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for SquareMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.dim + j]
    }
}

/// Serialized as nested rows of `[re, im]` pairs.
impl Serialize for SquareMatrix {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let rows: Vec<Vec<[f64; 2]>> = self
            .rows()
            .map(|r| r.iter().map(|z| [z.re, z.im]).collect())
            .collect();
        rows.serialize(serializer)
    }
}

/// An `m x m` unitary, checked on construction.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct UnitaryMatrix(SquareMatrix);

impl UnitaryMatrix {
    pub fn new(matrix: SquareMatrix) -> Result<Self> {
        if matrix.dim() == 0 {
            return Err(Error::invalid("unitary needs at least one mode"));
        }
        let defect = matrix.unitarity_defect();
        if defect.is_nan() || defect > UNITARITY_TOLERANCE {
            return Err(Error::invalid(format!(
                "matrix is not unitary: max |U U^dagger - I| = {defect:e}"
            )));
        }
        Ok(UnitaryMatrix(matrix))
    }

    pub fn identity(m: usize) -> Result<Self> {
        UnitaryMatrix::new(SquareMatrix::identity(m))
    }

    /// Haar-random unitary via Gram-Schmidt on a complex Ginibre matrix.
    pub fn haar_random<R: Rng + ?Sized>(m: usize, rng: &mut R) -> Result<Self> {
        if m == 0 {
            return Err(Error::invalid("unitary needs at least one mode"));
        }
        let mut cols: Vec<Vec<Complex64>> = (0..m)
            .map(|_| {
                (0..m)
                    .map(|_| {
                        let re: f64 = rng.sample(StandardNormal);
                        let im: f64 = rng.sample(StandardNormal);
                        Complex64::new(re, im)
                    })
                    .collect()
            })
            .collect();
        for k in 0..m {
            for j in 0..k {
                let (done, rest) = cols.split_at_mut(k);
                let q = &done[j];
                let v = &mut rest[0];
                let proj: Complex64 = q.iter().zip(v.iter()).map(|(a, b)| a.conj() * b).sum();
                for (vi, qi) in v.iter_mut().zip(q) {
                    *vi -= proj * qi;
                }
            }
            let norm = cols[k].iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            for z in &mut cols[k] {
                *z /= norm;
            }
        }
        UnitaryMatrix::new(SquareMatrix::from_fn(m, |i, j| cols[j][i]))
    }

    pub fn modes(&self) -> usize {
        self.0.dim()
    }

    pub fn matrix(&self) -> &SquareMatrix {
        &self.0
    }
}

impl std::ops::Index<(usize, usize)> for UnitaryMatrix {
    type Output = Complex64;

    fn index(&self, idx: (usize, usize)) -> &Complex64 {
        &self.0[idx]
    }
}

/// Discrete Fourier interferometer: entry `(j, k)` (zero-based) is
/// `omega^(j k) / sqrt(m)` with `omega = exp(2 pi i / m)`.
pub fn qft_matrix(m: usize) -> Result<UnitaryMatrix> {
    if m == 0 {
        return Err(Error::invalid("qft_matrix requires m >= 1"));
    }
    let scale = 1.0 / (m as f64).sqrt();
    let matrix = SquareMatrix::from_fn(m, |j, k| {
        // Reduce the exponent first so large m keeps full phase accuracy.
        let e = (j * k) % m;
        Complex64::from_polar(scale, 2.0 * std::f64::consts::PI * e as f64 / m as f64)
    });
    UnitaryMatrix::new(matrix)
}

/// `n x n` sub-matrix of a unitary governing one transition.
#[derive(Debug, Clone, PartialEq)]
pub struct ScatteringMatrix {
    matrix: SquareMatrix,
    input: FockState,
    output: FockState,
}

impl ScatteringMatrix {
    pub fn matrix(&self) -> &SquareMatrix {
        &self.matrix
    }

    pub fn input(&self) -> &FockState {
        &self.input
    }

    pub fn output(&self) -> &FockState {
        &self.output
    }
}

/// Take `input[i]` copies of column `i` of `u`, then `output[j]` copies of row
/// `j`. Rows are indexed by output photons, columns by input photons.
pub fn effective_scattering_matrix(
    u: &UnitaryMatrix,
    input: &FockState,
    output: &FockState,
) -> Result<ScatteringMatrix> {
    check_dims(u, input, output)?;
    let rows = output.mode_assignment();
    let cols = input.mode_assignment();
    let n = rows.len();
    let matrix = SquareMatrix::from_fn(n, |a, b| {
        u[(rows.as_slice()[a] - 1, cols.as_slice()[b] - 1)]
    });
    Ok(ScatteringMatrix {
        matrix,
        input: input.clone(),
        output: output.clone(),
    })
}

pub(crate) fn check_dims(u: &UnitaryMatrix, input: &FockState, output: &FockState) -> Result<()> {
    if input.modes() != u.modes() || output.modes() != u.modes() {
        return Err(Error::mismatch(format!(
            "unitary has {} modes, input {} and output {}",
            u.modes(),
            input.modes(),
            output.modes()
        )));
    }
    if input.photons() != output.photons() {
        return Err(Error::mismatch(format!(
            "input has {} photons, output {}",
            input.photons(),
            output.photons()
        )));
    }
    Ok(())
}

/// Permanent by Ryser's inclusion-exclusion formula, visiting column subsets
/// in Gray-code order so each step updates the row sums by one column.
/// `O(2^n n)`.
pub fn permanent(a: &SquareMatrix) -> Result<Complex64> {
    let n = a.dim();
    if n > MAX_PERMANENT_DIM {
        return Err(Error::guard(format!(
            "permanent limited to n <= {MAX_PERMANENT_DIM}, got {n}"
        )));
    }
    if n == 0 {
        return Ok(Complex64::new(1.0, 0.0));
    }
    let mut row_sums = vec![Complex64::new(0.0, 0.0); n];
    let mut total = Complex64::new(0.0, 0.0);
    let mut gray: u64 = 0;
    for k in 1u64..(1u64 << n) {
        let bit = k.trailing_zeros() as usize;
        let mask = 1u64 << bit;
        gray ^= mask;
        if gray & mask != 0 {
            for (i, s) in row_sums.iter_mut().enumerate() {
                *s += a[(i, bit)];
            }
        } else {
            for (i, s) in row_sums.iter_mut().enumerate() {
                *s -= a[(i, bit)];
            }
        }
        let prod: Complex64 = row_sums.iter().product();
        if gray.count_ones().is_multiple_of(2) {
            total += prod;
        } else {
            total -= prod;
        }
    }
    if n % 2 == 1 {
        total = -total;
    }
    Ok(total)
}

/// Permanent as the explicit sum over all `n!` permutations.
pub fn permanent_naive(a: &SquareMatrix) -> Result<Complex64> {
    let n = a.dim();
    if n > MAX_NAIVE_PERMANENT_DIM {
        return Err(Error::guard(format!(
            "naive permanent limited to n <= {MAX_NAIVE_PERMANENT_DIM}, got {n}"
        )));
    }
    let mut perm: Vec<usize> = (0..n).collect();
    let mut total = Complex64::new(0.0, 0.0);
    for_each_permutation(&mut perm, 0, &mut |p| {
        total += p
            .iter()
            .enumerate()
            .map(|(i, &j)| a[(i, j)])
            .product::<Complex64>();
    });
    Ok(total)
}

/// Visit every permutation of `items[start..]` (recursive swap scheme).
pub(crate) fn for_each_permutation(
    items: &mut [usize],
    start: usize,
    f: &mut impl FnMut(&[usize]),
) {
    if start + 1 >= items.len() {
        f(items);
        return;
    }
    for i in start..items.len() {
        items.swap(start, i);
        for_each_permutation(items, start + 1, f);
        items.swap(start, i);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    #[test]
    fn qft_examples() {
        let q1 = qft_matrix(1).unwrap();
        assert!(close(q1[(0, 0)], c(1.0), 1e-15));
        let q2 = qft_matrix(2).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        for (idx, v) in [((0, 0), h), ((0, 1), h), ((1, 0), h), ((1, 1), -h)] {
            assert!(close(q2[idx], c(v), 1e-15));
        }
        // 1-based (3,3) is omega^4 / 2 = 1/2 for m = 4.
        let q4 = qft_matrix(4).unwrap();
        assert!(close(q4[(2, 2)], c(0.5), 1e-15));
        assert!(qft_matrix(0).is_err());
    }

    #[test]
    fn qft_is_unitary() {
        for m in 1..=32 {
            assert!(
                qft_matrix(m).unwrap().matrix().unitarity_defect() < 1e-12,
                "m={m}"
            );
        }
    }

    #[test]
    fn rejects_non_unitary() {
        let m = SquareMatrix::from_real_rows(&[vec![1.0, 1.0], vec![0.0, 1.0]]).unwrap();
        assert!(UnitaryMatrix::new(m).is_err());
    }

    #[test]
    fn haar_unitaries_are_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for m in 1..8 {
            let u = UnitaryMatrix::haar_random(m, &mut rng).unwrap();
            assert!(u.matrix().unitarity_defect() < 1e-12);
        }
    }

    #[test]
    fn scattering_examples() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let q2 = qft_matrix(2).unwrap();
        let one_one = FockState::new(vec![1, 1]).unwrap();
        let m = effective_scattering_matrix(&q2, &one_one, &one_one).unwrap();
        assert_eq!(m.matrix(), q2.matrix());
        let two_zero = FockState::new(vec![2, 0]).unwrap();
        let m = effective_scattering_matrix(&q2, &one_one, &two_zero).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert!(close(m.matrix()[(i, j)], c(h), 1e-15));
            }
        }
        let q3 = qft_matrix(3).unwrap();
        let m = effective_scattering_matrix(
            &q3,
            &FockState::new(vec![1, 1, 1]).unwrap(),
            &FockState::new(vec![3, 0, 0]).unwrap(),
        )
        .unwrap();
        let v = 1.0 / 3f64.sqrt();
        assert!(m.matrix().rows().flatten().all(|z| close(*z, c(v), 1e-15)));
    }

    #[test]
    fn scattering_errors() {
        let q2 = qft_matrix(2).unwrap();
        let a = FockState::new(vec![1, 1]).unwrap();
        let b = FockState::new(vec![1, 0]).unwrap();
        assert!(matches!(
            effective_scattering_matrix(&q2, &a, &b),
            Err(Error::DimensionMismatch(_))
        ));
        let c3 = FockState::new(vec![1, 1, 0]).unwrap();
        assert!(matches!(
            effective_scattering_matrix(&q2, &c3, &c3),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn one_per_mode_scattering_is_the_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for m in 1..6 {
            let u = UnitaryMatrix::haar_random(m, &mut rng).unwrap();
            let s = FockState::one_per_mode(m).unwrap();
            assert_eq!(
                effective_scattering_matrix(&u, &s, &s).unwrap().matrix(),
                u.matrix()
            );
        }
    }

    #[test]
    fn permanent_examples() {
        let ones = SquareMatrix::from_real_rows(&vec![vec![1.0; 3]; 3]).unwrap();
        assert!(close(permanent(&ones).unwrap(), c(6.0), 1e-12));
        let q2 = qft_matrix(2).unwrap();
        assert!(close(permanent(q2.matrix()).unwrap(), c(0.0), 1e-15));
        let v = 1.0 / 3f64.sqrt();
        let third = SquareMatrix::from_real_rows(&vec![vec![v; 3]; 3]).unwrap();
        assert!(close(
            permanent(&third).unwrap(),
            c(1.154_700_538_379_251_5),
            1e-12
        ));
        assert!(close(
            permanent(&SquareMatrix::zeros(0)).unwrap(),
            c(1.0),
            0.0
        ));
    }

    #[test]
    fn naive_permanent_examples() {
        assert!(close(
            permanent_naive(&SquareMatrix::identity(4)).unwrap(),
            c(1.0),
            0.0
        ));
        let z = Complex64::new(0.3, -1.7);
        let a = SquareMatrix::from_rows(vec![vec![z]]).unwrap();
        assert_eq!(permanent_naive(&a).unwrap(), z);
        assert!(matches!(
            permanent_naive(&SquareMatrix::identity(10)),
            Err(Error::Guard(_))
        ));
        assert!(matches!(
            permanent(&SquareMatrix::identity(31)),
            Err(Error::Guard(_))
        ));
    }

    #[test]
    fn permanent_matches_naive_on_random_5x5() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = SquareMatrix::from_fn(5, |_, _| {
            Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        });
        let fast = permanent(&a).unwrap();
        let slow = permanent_naive(&a).unwrap();
        assert!((fast - slow).norm() <= 1e-10 * slow.norm());
    }

    #[test]
    fn matrix_json_is_re_im_pairs() {
        let q2 = qft_matrix(1).unwrap();
        assert_eq!(serde_json::to_string(&q2).unwrap(), "[[[1.0,0.0]]]");
    }
}
