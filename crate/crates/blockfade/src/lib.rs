//! Numerical toolkit for block-stationary Gaussian fading channels with a
//! peak power constraint.
//!
//! A scalar channel whose fading process is stationary only across blocks of
//! `T` symbols is treated as a `T`-dimensional vector-stationary process.  The
//! quantities this crate computes all flow from the matrix spectral density
//! `S(e^{jw})` of that vector process:
//!
//! * prediction-error determinants `det Sigma(snr)` via Szego-type integrals
//!   and per-symbol innovation variances ([`prediction`]),
//! * the high-SNR capacity pre-log from the rank distribution of `S`
//!   ([`highsnr`]),
//! * the fading number (the constant following the `log log SNR` capacity
//!   term) for regular processes ([`highsnr`]),
//! * peak-limited capacity lower/upper bounds built from noisy prediction
//!   variances ([`bounds`]),
//! * capacity per unit energy and the optimal ON-symbol subset within a block
//!   ([`unit_energy`]),
//! * transfinite-diameter codeword-scaling bounds and random-coding error
//!   exponents ([`codelength`]),
//! * Monte-Carlo path generation and empirical prediction-error validation
//!   ([`simkit`]).
//!
//! The [`cli`] module exposes every capability as a subcommand of the
//! `blockfade` binary; the `examples/` directory holds one runnable example
//! per capability.

pub mod bounds;
pub mod cli;
pub mod codelength;
pub mod error;
pub mod highsnr;
pub mod linalg;
pub mod prediction;
pub mod quad;
pub mod simkit;
pub mod spectra;
pub mod unit_energy;

pub use error::{Error, Result};
