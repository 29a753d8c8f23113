//! Measures on infinite-dimensional spaces, computed at desk scale.
//!
//! * [`measure_core`]: product measures on cylinder sets, countable products,
//!   increasing limits, consistency of marginals, push-forward integrals.
//! * [`gaussian`]: diagonal Gaussian measures on sequence space, characteristic
//!   functions, sampling, Wick moments and the positive-type Gram diagnostic.
//! * [`transform`]: Cameron–Martin shift densities, shift admissibility and
//!   the equivalent/singular dichotomy for pairs of Gaussian measures.
//! * [`support`]: Hilbert–Schmidt and weighted-ℓ² support decisions, with a
//!   Monte Carlo tail-growth oracle and the nuclear embedding identity.
//! * [`kernels`]: translation-invariant covariance kernels on the line and
//!   their Fourier quadrature.
//! * [`bohr`]: rational-independence certificates and Haar integrals on the
//!   tori approximating the Bohr compactification.
//!
//! Every stochastic routine takes an explicit 64-bit seed; see [`mc`].

pub mod bohr;
pub mod cli;
pub mod error;
pub mod gaussian;
pub mod kernels;
pub mod mc;
pub mod measure_core;
pub mod selftest;
pub mod seq;
pub mod series;
pub mod support;
pub mod transform;

pub use error::{Error, Result};
pub use mc::Estimate;
pub use seq::FiniteSequence;
pub use series::SeqClass;
