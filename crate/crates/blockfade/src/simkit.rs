//! Monte-Carlo validation of the prediction-error machinery.
//!
//! The analytic per-symbol innovation variances come out of a Cholesky
//! recursion on the noisy covariance; this module draws actual Gaussian
//! fading paths, runs the same linear predictor on noisy observations, and
//! compares the empirical innovation power against the analytic value with
//! a proper standard error.  For a complex Gaussian innovation `e` the
//! power `|e|^2` is exponential with variance `sigma^4`, so the standard
//! error of the empirical mean is close to `sigma^2 / sqrt(N)`.

use crate::error::{Error, Result};
use crate::linalg::C64;
use crate::spectra::SpectralModel;
use nalgebra::{Complex, DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

/// Monte-Carlo configuration.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SimConfig {
    /// Number of independent fading paths.
    pub num_paths: usize,
    /// Number of noisy past symbols the predictor sees.
    pub history: usize,
    /// Signal-to-noise ratio of the observations.
    pub snr: f64,
    /// Base seed; path `p` uses stream `p` of a counter-based generator,
    /// so results are reproducible and independent of thread scheduling.
    pub seed: u64,
}

/// Comparison of analytic and empirical innovation variance at one
/// within-block offset.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SymbolCheck {
    /// Within-block symbol offset, `0..T`.
    pub offset: usize,
    /// Analytic innovation variance from the Cholesky recursion.
    pub analytic: f64,
    /// Empirical mean of `|innovation|^2` over the paths.
    pub empirical: f64,
    /// Standard error of the empirical mean.
    pub stderr: f64,
    /// `|empirical - analytic| / stderr`.
    pub z_score: f64,
}

/// Full Monte-Carlo report.
#[derive(Debug, Clone, Serialize)]
pub struct SimReport {
    /// Configuration that produced the report.
    pub config: SimConfig,
    /// One check per within-block offset.
    pub symbols: Vec<SymbolCheck>,
}

/// A factor `F` with `F F^H = C` for a Hermitian PSD covariance, tolerant
/// of rank deficiency (constant-within-block models have singular fading
/// covariances, which is fine for sampling).
pub fn covariance_factor(model: &SpectralModel, len: usize) -> Result<DMatrix<C64>> {
    let cov = model.covariance_matrix(len)?;
    if let Some(chol) = cov.clone().cholesky() {
        return Ok(chol.unpack());
    }
    let eig = cov.symmetric_eigen();
    let mut factor = eig.eigenvectors;
    for (j, &lambda) in eig.eigenvalues.iter().enumerate() {
        let scale = Complex::new(lambda.max(0.0).sqrt(), 0.0);
        for i in 0..factor.nrows() {
            factor[(i, j)] *= scale;
        }
    }
    Ok(factor)
}

/// Draws `num_paths` independent fading paths of `len` symbols each.
pub fn generate_fading_paths(
    model: &SpectralModel,
    len: usize,
    num_paths: usize,
    seed: u64,
) -> Result<Vec<Vec<C64>>> {
    if len == 0 || num_paths == 0 {
        return Err(Error::validation(
            "path length and path count must be positive",
        ));
    }
    let factor = covariance_factor(model, len)?;
    Ok((0..num_paths)
        .into_par_iter()
        .map(|p| {
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            rng.set_stream(p as u64);
            let z = standard_complex_vector(len, &mut rng);
            (&factor * z).iter().copied().collect()
        })
        .collect())
}

fn standard_complex_vector(len: usize, rng: &mut ChaCha20Rng) -> DVector<C64> {
    DVector::from_fn(len, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        Complex::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
    })
}

/// Simulates noisy observations and compares the empirical innovation
/// power of the analytic linear predictor against the analytic variance,
/// offset by offset.
///
/// The conditioning window matches
/// [`crate::prediction::per_symbol_sigmas`] exactly: the target at
/// within-block offset `i` is predicted from the `history` immediately
/// preceding noisy symbols.
pub fn simulate_innovations(model: &SpectralModel, config: &SimConfig) -> Result<SimReport> {
    if config.num_paths < 2 {
        return Err(Error::validation(
            "at least two paths are needed for a standard error",
        ));
    }
    if !(config.snr > 0.0 && config.snr.is_finite()) {
        return Err(Error::validation(format!(
            "signal-to-noise ratio must be positive and finite, got {}",
            config.snr
        )));
    }
    let t = model.block_len();
    let noise = 1.0 / config.snr;
    let base = config.history.div_ceil(t) * t;
    let len = base + t;

    // Analytic covariance of the noisy observations over the whole window.
    let mut cov_y = model.covariance_matrix(len)?;
    for k in 0..len {
        cov_y[(k, k)] += Complex::new(noise, 0.0);
    }

    // Predictor coefficients and analytic innovation variance per offset:
    // solve Sigma_vv x = Sigma_vs, innovation e = y_pos - x^H y_past.
    let mut coefficients: Vec<(usize, Vec<usize>, DVector<C64>, f64)> = Vec::with_capacity(t);
    for i in 0..t {
        let pos = base + i;
        let window: Vec<usize> = (pos - config.history..pos).collect();
        if window.is_empty() {
            coefficients.push((pos, window, DVector::zeros(0), 1.0 + noise));
            continue;
        }
        let svv = crate::linalg::principal_minor(&cov_y, &window);
        let svs = DVector::from_iterator(
            window.len(),
            window.iter().map(|&k| cov_y[(k, pos)]),
        );
        let chol = svv.clone().cholesky().ok_or_else(|| {
            Error::numerical(format!(
                "noisy covariance failed to factor at history {} (offset {i})",
                config.history
            ))
        })?;
        let x = chol.solve(&svs);
        let reduction: f64 = svs
            .iter()
            .zip(x.iter())
            .map(|(s, xi)| (xi.conj() * s).re)
            .sum();
        let analytic = cov_y[(pos, pos)].re - reduction;
        coefficients.push((pos, window, x, analytic));
    }

    let factor = covariance_factor(model, len)?;
    let half_noise = (noise / 2.0).sqrt();

    // Per-path innovation powers, reduced to sums and sums of squares.
    let (sum, sum_sq) = (0..config.num_paths)
        .into_par_iter()
        .map(|p| {
            let mut rng = ChaCha20Rng::seed_from_u64(config.seed);
            rng.set_stream(p as u64);
            let z = standard_complex_vector(len, &mut rng);
            let h = &factor * z;
            let y = DVector::from_fn(len, |k, _| {
                let wr: f64 = StandardNormal.sample(&mut rng);
                let wi: f64 = StandardNormal.sample(&mut rng);
                h[k] + Complex::new(wr, wi) * half_noise
            });
            let powers: Vec<f64> = coefficients
                .iter()
                .map(|(pos, window, x, _)| {
                    let predicted: C64 = window
                        .iter()
                        .zip(x.iter())
                        .map(|(&k, xi)| xi.conj() * y[k])
                        .sum();
                    (y[*pos] - predicted).norm_sqr()
                })
                .collect();
            let squares: Vec<f64> = powers.iter().map(|v| v * v).collect();
            (powers, squares)
        })
        .reduce(
            || (vec![0.0; t], vec![0.0; t]),
            |(mut s, mut q), (ps, qs)| {
                for i in 0..t {
                    s[i] += ps[i];
                    q[i] += qs[i];
                }
                (s, q)
            },
        );

    let n = config.num_paths as f64;
    let symbols = coefficients
        .iter()
        .enumerate()
        .map(|(i, (_, _, _, analytic))| {
            let empirical = sum[i] / n;
            let variance = ((sum_sq[i] / n - empirical * empirical) * n / (n - 1.0)).max(0.0);
            let stderr = (variance / n).sqrt();
            SymbolCheck {
                offset: i,
                analytic: *analytic,
                empirical,
                stderr,
                z_score: if stderr > 0.0 {
                    (empirical - analytic).abs() / stderr
                } else {
                    f64::INFINITY
                },
            }
        })
        .collect();

    Ok(SimReport {
        config: *config,
        symbols,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prediction::per_symbol_sigmas;
    use crate::spectra::{scalar_gauss_markov, ScalarSpectrum, SpectralModel};
    use approx::assert_relative_eq;
    use nalgebra::Complex;

    #[test]
    fn generated_paths_have_the_model_covariance() {
        let model = scalar_gauss_markov(Complex::new(0.8, 0.0)).unwrap();
        let paths = generate_fading_paths(&model, 4, 4000, 1).unwrap();
        let mut r0 = 0.0;
        let mut r1 = Complex::new(0.0, 0.0);
        for p in &paths {
            r0 += p[1].norm_sqr();
            r1 += p[1] * p[0].conj();
        }
        r0 /= paths.len() as f64;
        r1 /= Complex::new(paths.len() as f64, 0.0);
        // 4000 samples: standard error about 1/sqrt(4000) ~ 0.016.
        assert_relative_eq!(r0, 1.0, epsilon = 0.08);
        assert_relative_eq!(r1.re, 0.8, epsilon = 0.08);
        assert!(r1.im.abs() < 0.08);
    }

    #[test]
    fn paths_are_reproducible_for_a_fixed_seed() {
        let model = scalar_gauss_markov(Complex::new(0.5, 0.0)).unwrap();
        let a = generate_fading_paths(&model, 6, 3, 42).unwrap();
        let b = generate_fading_paths(&model, 6, 3, 42).unwrap();
        assert_eq!(a, b, "same seed must reproduce the same paths");
        let c = generate_fading_paths(&model, 6, 3, 43).unwrap();
        assert_ne!(a, c, "different seeds must differ");
    }

    #[test]
    fn analytic_variance_in_the_report_matches_the_recursion() {
        let model = SpectralModel::block_gauss_markov(
            2,
            Complex::new(0.3, 0.0),
            Complex::new(0.8, 0.0),
        )
        .unwrap();
        let config = SimConfig {
            num_paths: 16,
            history: 32,
            snr: 10.0,
            seed: 5,
        };
        let report = simulate_innovations(&model, &config).unwrap();
        let sigmas = per_symbol_sigmas(&model, 10.0, 32).unwrap();
        for (check, sigma) in report.symbols.iter().zip(&sigmas) {
            assert_relative_eq!(check.analytic, *sigma, epsilon = 1e-10);
        }
    }

    #[test]
    fn empirical_innovations_agree_within_three_standard_errors() {
        let model = scalar_gauss_markov(Complex::new(0.9, 0.0)).unwrap();
        let config = SimConfig {
            num_paths: 4000,
            history: 48,
            snr: 20.0,
            seed: 20260823,
        };
        let report = simulate_innovations(&model, &config).unwrap();
        for check in &report.symbols {
            assert!(
                check.z_score < 3.0,
                "offset {}: empirical {} vs analytic {} is {:.2} standard \
                 errors off",
                check.offset,
                check.empirical,
                check.analytic,
                check.z_score
            );
        }
    }

    #[test]
    fn singular_covariances_are_sampled_through_the_eigen_factor() {
        // Constant-within-block fading: the symbol covariance is singular,
        // but sampling must still work and symbols within a block coincide.
        let model = SpectralModel::constant_within_block(
            3,
            ScalarSpectrum::GaussMarkov {
                rho: Complex::new(0.5, 0.0),
            },
        )
        .unwrap();
        let paths = generate_fading_paths(&model, 6, 5, 9).unwrap();
        for p in &paths {
            assert!((p[0] - p[1]).norm() < 1e-7, "block symbols must coincide");
            assert!((p[1] - p[2]).norm() < 1e-7);
        }
    }
}
