//! Exact output statistics of partially distinguishable photons in Fourier
//! interferometers, and estimation of genuine n-photon indistinguishability.
//!
//! An n-photon state with one photon per mode is described as a mixture of
//! partition states: photons sharing a register are indistinguishable, photons
//! in different registers are orthogonal. Sent through the n-mode discrete
//! Fourier interferometer, every output carries a Q-value
//! (`sum of occupied mode indices mod n`), and the distribution of Q depends
//! only on the periodicity of each partition in the mixture. The weight of the
//! fully indistinguishable component, `c1`, is recovered from Q statistics:
//!
//! - prime `n`: `P(Q != 0) = (1 - c1)(1 - 1/n)`, see [`estimator::estimate_c1_prime`];
//! - any `n`: least-squares inversion of `P = A c` with a closed-form
//!   pseudo-inverse, see [`estimator::estimate_c_vector`].
//!
//! # Layout
//!
//! - [`numtheory`]: divisors, totient, Möbius, lcm.
//! - [`states`]: Fock states, partition states, mixtures, enumerations.
//! - [`optics`]: unitary matrices, effective scattering matrices, permanents.
//! - [`probability`]: transition probabilities and Q-marginals.
//! - [`estimator`]: GI estimators, sample-size calculators, cyclic-interferometer baseline.
//! - [`sampler`]: seeded Monte-Carlo runs of the measurement pipeline.
//! - [`format`]: 17-significant-digit JSON/CSV output.
//!
//! # Example
//!
//! ```
//! use qftgi::states::PartitionState;
//! use qftgi::optics::qft_matrix;
//! use qftgi::probability::q_marginals_bruteforce;
//!
//! let state = PartitionState::one_per_mode(&[1, 2, 1, 2]).unwrap();
//! let marginals = q_marginals_bruteforce(&qft_matrix(4).unwrap(), &state).unwrap();
//! let expected = [0.5, 0.0, 0.5, 0.0];
//! for (p, e) in marginals.probabilities().iter().zip(expected) {
//!     assert!((p - e).abs() < 1e-12);
//! }
//! ```

pub mod error;
pub mod estimator;
pub mod format;
pub mod numtheory;
pub mod optics;
pub mod probability;
pub mod sampler;
pub mod states;

pub use error::{Error, Result};
