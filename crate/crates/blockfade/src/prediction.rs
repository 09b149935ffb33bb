//! Prediction-error functionals of the fading process.
//!
//! The central object is the Szego-type integral
//! `logdet_sigma(model, snr) = (1/2pi) int log det[S(w) + (1/snr) I_T] dw`,
//! the log-determinant of the one-block innovation covariance of the noisy
//! fading process `y = h + z/sqrt(snr)` given its infinite past.  Its LDL
//! factorization across the block splits it into per-symbol innovation
//! variances `sigma_i`, which [`per_symbol_sigmas`] approximates with a
//! finite history window; the two must agree, and the acceptance suite leans
//! on that identity.
//!
//! Scalar and constant-within-block models admit exact segment-sum/closed
//! forms (`det(s J + c I) = (T s + c) c^{T-1}` for the all-ones block
//! pattern); everything else integrates the spectral density numerically.

use crate::error::{Error, Result};
use crate::linalg::{hermitian_logdet_clamped, principal_minor, pseudo_solve_hermitian, C64};
use crate::quad::{integrate, integrate_periodic, QuadOptions, QuadResult};
use crate::spectra::{ScalarPiecewiseSpectrum, ScalarSpectrum, SpectralModel};
use nalgebra::{Complex, DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;

/// Signal-to-noise ratio argument: finite, or the noiseless limit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Snr {
    /// Observation noise variance `1/snr`.
    Finite(f64),
    /// No observation noise; the integrand becomes `log det S(w)`.
    Infinite,
}

impl Snr {
    fn noise_var(self) -> Result<f64> {
        match self {
            Snr::Finite(snr) if snr > 0.0 && snr.is_finite() => Ok(1.0 / snr),
            Snr::Finite(snr) => Err(Error::validation(format!(
                "signal-to-noise ratio must be positive and finite, got {snr}"
            ))),
            Snr::Infinite => Ok(0.0),
        }
    }
}

/// Eigenvalue floor used when the spectral density is numerically singular
/// (irregular process at infinite signal-to-noise ratio).
const EIG_FLOOR: f64 = 1e-300;

/// `(1/2pi) int log det[S(w) + (1/snr) I] dw`.
///
/// Exact for scalar and constant-within-block models; spectrally convergent
/// periodic quadrature for analytic matrix models; breakpoint-aware adaptive
/// quadrature for grid-sampled models.  At `Snr::Infinite` an irregular
/// process yields a very large negative value (eigenvalues floored at
/// `1e-300`) or `-inf` on the exact paths.
pub fn logdet_sigma(model: &SpectralModel, snr: Snr, rel_tol: f64) -> Result<QuadResult> {
    let c = snr.noise_var()?;
    if let Some((t, inner)) = model.constant_block_parts() {
        // det(s J + c I) = (T s + c) c^{T-1}; the first factor integrates to
        // log T + log-moment of (s + c/T).
        let tf = t as f64;
        let value = if c == 0.0 && t > 1 {
            f64::NEG_INFINITY
        } else {
            tf.ln() + inner.log_moment(c / tf) + (tf - 1.0) * if t > 1 { c.ln() } else { 0.0 }
        };
        return Ok(QuadResult {
            value,
            abs_error: 0.0,
            panels: 0,
        });
    }
    let integrand = |w: f64| {
        let mut s = model.eval(w);
        for i in 0..s.nrows() {
            s[(i, i)] += Complex::new(c, 0.0);
        }
        hermitian_logdet_clamped(&s, EIG_FLOOR)
    };
    let result = match model {
        SpectralModel::ExplicitGrid { points, .. } => {
            let breakpoints: Vec<f64> = points.iter().map(|(w, _)| *w).collect();
            let opts = QuadOptions {
                rel_tol,
                breakpoints,
                ..QuadOptions::default()
            };
            integrate(integrand, -PI, PI, &opts)?
        }
        _ => integrate_periodic(integrand, rel_tol, 1 << 18)?,
    };
    Ok(QuadResult {
        value: result.value / (2.0 * PI),
        abs_error: result.abs_error / (2.0 * PI),
        panels: result.panels,
    })
}

/// Per-symbol innovation variances `sigma_i` of the noisy process
/// `y = h + z/sqrt(snr)`: the variance of the block symbol at offset `i`
/// given the `history_len` preceding noisy symbols.
///
/// `history_len = 0` returns the unconditional variance `1 + 1/snr` for
/// every offset.  As the history grows the product of the `sigma_i`
/// converges to `exp(T * logdet_sigma)`... more precisely `sum_i log
/// sigma_i -> logdet_sigma(model, snr)` (the LDL identity), which is the
/// cross-check the acceptance suite runs at history 2048.
pub fn per_symbol_sigmas(
    model: &SpectralModel,
    snr: f64,
    history_len: usize,
) -> Result<Vec<f64>> {
    if !(snr > 0.0 && snr.is_finite()) {
        return Err(Error::validation(format!(
            "signal-to-noise ratio must be positive and finite, got {snr}"
        )));
    }
    let t = model.block_len();
    let noise = 1.0 / snr;
    // Anchor the window so the target symbol sits at within-block offset i.
    let base = history_len.div_ceil(t) * t;
    (0..t)
        .into_par_iter()
        .map(|i| {
            let pos = base + i;
            let start = pos - history_len;
            let n = history_len + 1;
            let mut cov = DMatrix::<C64>::zeros(n, n);
            for a in 0..n {
                for b in 0..=a {
                    let v = model.symbol_covariance(start + a, start + b)?;
                    cov[(a, b)] = v;
                    cov[(b, a)] = v.conj();
                }
                cov[(a, a)] += Complex::new(noise, 0.0);
            }
            let chol = cov.cholesky().ok_or_else(|| {
                Error::numerical(format!(
                    "noisy covariance failed to factor at history {history_len} \
                     (offset {i}); the model may be numerically degenerate"
                ))
            })?;
            let d = chol.l()[(n - 1, n - 1)].re;
            Ok(d * d)
        })
        .collect()
}

/// Linear-MMSE residual variance of `h_target` given noisy pilots
/// `y_p = h_p + z_p/sqrt(snr)` at the listed absolute symbol positions.
///
/// Degenerate pilot sets (perfectly correlated pilots) are handled through
/// the pseudoinverse, which is the correct conditional law for a singular
/// Gaussian covariance.
pub fn conditional_mmse_variance(
    model: &SpectralModel,
    target: usize,
    pilots: &[usize],
    snr: f64,
) -> Result<f64> {
    if !(snr > 0.0 && snr.is_finite()) {
        return Err(Error::validation(format!(
            "signal-to-noise ratio must be positive and finite, got {snr}"
        )));
    }
    if pilots.is_empty() {
        return Ok(1.0);
    }
    let mut positions: Vec<usize> = pilots.to_vec();
    positions.push(target);
    let max_pos = *positions.iter().max().unwrap();
    let cov = model.covariance_matrix(max_pos + 1)?;
    let pilot_idx: Vec<usize> = pilots.to_vec();
    let mut cpp = principal_minor(&cov, &pilot_idx);
    for k in 0..cpp.nrows() {
        cpp[(k, k)] += Complex::new(1.0 / snr, 0.0);
    }
    let cht = DVector::from_iterator(
        pilot_idx.len(),
        pilot_idx.iter().map(|&p| cov[(target, p)]),
    );
    let solved = pseudo_solve_hermitian(&cpp, &cht, 1e-12);
    let reduction: f64 = cht
        .iter()
        .zip(solved.iter())
        .map(|(c, s)| (c.conj() * s).re)
        .sum();
    Ok((1.0 - reduction).max(0.0))
}

/// One-step prediction error of the scalar fading value from its infinite
/// noisy past when pilots have amplitude `x` (noise variance `1/x^2`):
/// `exp{(1/2pi) int log(s + 1/x^2) dw} - 1/x^2`.
pub fn scalar_noisy_prediction_variance(spec: &ScalarSpectrum, x: f64) -> Result<f64> {
    if !(x > 0.0 && x.is_finite()) {
        return Err(Error::validation(format!(
            "pilot amplitude must be positive and finite, got {x}"
        )));
    }
    let noise = 1.0 / (x * x);
    Ok((spec.log_moment(noise)).exp() - noise)
}

/// Everything the prediction layer knows about a (model, snr) pair.
#[derive(Debug, Clone, Serialize)]
pub struct PredictionSummary {
    /// `(1/2pi) int log det[S + (1/snr) I]`.
    pub logdet_sigma_snr: f64,
    /// Same integral without the noise term; `-inf` or very large negative
    /// for irregular processes.
    pub logdet_sigma_inf: f64,
    /// Finite-history per-symbol innovation variances, one per block offset.
    pub sigmas: Vec<f64>,
    /// History window used for `sigmas`.
    pub history_len: usize,
    /// Quadrature tolerance actually achieved on the integrals.
    pub quadrature_tol: f64,
}

/// Computes [`PredictionSummary`] for a model at finite snr.
pub fn prediction_summary(
    model: &SpectralModel,
    snr: f64,
    history_len: usize,
    rel_tol: f64,
) -> Result<PredictionSummary> {
    let at_snr = logdet_sigma(model, Snr::Finite(snr), rel_tol)?;
    let at_inf = logdet_sigma(model, Snr::Infinite, rel_tol)?;
    let sigmas = per_symbol_sigmas(model, snr, history_len)?;
    Ok(PredictionSummary {
        logdet_sigma_snr: at_snr.value,
        logdet_sigma_inf: at_inf.value,
        sigmas,
        history_len,
        quadrature_tol: at_snr.abs_error.max(at_inf.abs_error),
    })
}

/// Prediction-variance ladder of the noiseless scalar process and the decay
/// rate fitted from it.
#[derive(Debug, Clone, Serialize)]
pub struct PredictionDecay {
    /// `variances[n]` = var(h_0 | h_{-1} .. h_{-n}); `variances[0] = 1`.
    pub variances: Vec<f64>,
    /// Fitted geometric decay rate: `var_n ~ C * tau^{2n}`.
    pub tau: f64,
    /// Ladder indices that entered the least-squares fit (later entries are
    /// dropped once finite precision degrades the factorization).
    pub fit_range: (usize, usize),
}

/// Computes the noiseless prediction-variance ladder of a band-limited
/// piecewise spectrum via a partial Cholesky of its Toeplitz correlation
/// matrix and fits `log var_n` against `n`.
///
/// For a spectrum supported on a circular arc the decay rate `tau` equals
/// the transfinite diameter of the arc, `sin(theta/4)` for central angle
/// `theta` — the cross-check the acceptance suite runs.
pub fn prediction_decay_rate(
    spec: &ScalarPiecewiseSpectrum,
    n_ladder: usize,
) -> Result<PredictionDecay> {
    if n_ladder < 8 {
        return Err(Error::validation(
            "decay-rate fit needs a ladder of at least 8 prediction variances",
        ));
    }
    let n = n_ladder + 1;
    let corr: Vec<f64> = (0..n as i64).map(|k| spec.correlation(k)).collect();
    // Partial Cholesky of the Toeplitz matrix [r_{|a-b|}]: diagonal entries
    // d_k^2 are the prediction variances var(h_k | h_0..h_{k-1}).  Stop at
    // numerical breakdown instead of failing outright — the tail of the
    // ladder is exactly where double precision gives out.
    let mut l = vec![vec![0.0f64; n]; n];
    let mut variances = Vec::with_capacity(n);
    'outer: for k in 0..n {
        for j in 0..=k {
            let mut acc = corr[k - j]; // r_{k-j} = cov(h_k, h_j)
            for m in 0..j {
                acc -= l[k][m] * l[j][m];
            }
            if j == k {
                if acc <= corr[0] * 1e-13 {
                    break 'outer;
                }
                l[k][k] = acc.sqrt();
                variances.push(acc);
            } else {
                l[k][j] = acc / l[j][j];
            }
        }
    }
    if variances.len() < 8 {
        return Err(Error::numerical(
            "prediction ladder collapsed before 8 reliable entries; the \
             spectrum decays too fast for a double-precision fit",
        ));
    }
    // Fit log var_n = a + 2 n log tau on the second half of the reliable
    // ladder (the first entries carry the transient constant).
    let hi = variances.len();
    let lo = (hi / 3).max(1);
    let xs: Vec<f64> = (lo..hi).map(|i| i as f64).collect();
    let ys: Vec<f64> = (lo..hi).map(|i| variances[i].ln()).collect();
    let slope = least_squares_slope(&xs, &ys);
    Ok(PredictionDecay {
        variances,
        tau: (slope / 2.0).exp(),
        fit_range: (lo, hi),
    })
}

/// Ordinary least-squares slope of `y` against `x`.
pub fn least_squares_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectra::{from_correlation, scalar_gauss_markov, SpectrumSegment};
    use approx::assert_relative_eq;

    fn c64(re: f64, im: f64) -> C64 {
        Complex::new(re, im)
    }

    #[test]
    fn logdet_matches_the_frozen_block_gauss_markov_value() {
        // Hand-computed via 2x2 spectral quadrature: T=2, rho1=0.3,
        // rho2=0.8, snr=10 -> -0.641228462389882.
        let model = SpectralModel::block_gauss_markov(2, c64(0.3, 0.0), c64(0.8, 0.0)).unwrap();
        let r = logdet_sigma(&model, Snr::Finite(10.0), 1e-11).unwrap();
        assert_relative_eq!(r.value, -0.641_228_462_389_882, epsilon = 1e-9);
    }

    #[test]
    fn noiseless_logdet_recovers_the_block_prediction_determinant() {
        // det Sigma(inf) = (1 - |rho1|^2)(1 - |rho2|^2)^{T-1} for the
        // symbolwise Gauss-Markov block model.
        for (t, r1, r2) in [(2usize, 0.3, 0.8), (3, 0.5, 0.6), (1, 0.9, 0.9)] {
            let model =
                SpectralModel::block_gauss_markov(t, c64(r1, 0.0), c64(r2, 0.0)).unwrap();
            let got = logdet_sigma(&model, Snr::Infinite, 1e-11).unwrap().value;
            let want = (1.0 - r1 * r1).ln() + (t as f64 - 1.0) * (1.0 - r2 * r2).ln();
            assert_relative_eq!(got, want, epsilon = 1e-8);
        }
    }

    #[test]
    fn scalar_exact_path_agrees_with_matrix_quadrature() {
        // Route A: closed-form scalar Gauss-Markov log-moment.  Route B:
        // the same process expressed as a lag-truncated correlation model
        // integrated numerically.
        let rho = 0.5;
        let snr = 4.0;
        let exact = logdet_sigma(
            &scalar_gauss_markov(c64(rho, 0.0)).unwrap(),
            Snr::Finite(snr),
            1e-11,
        )
        .unwrap()
        .value;
        let lags: Vec<DMatrix<C64>> = (0..=300)
            .map(|i| DMatrix::from_element(1, 1, c64(rho.powi(i), 0.0)))
            .collect();
        let truncated = from_correlation(
            crate::spectra::CorrelationSequence::new(1, lags).unwrap(),
        )
        .unwrap();
        let quad = logdet_sigma(&truncated, Snr::Finite(snr), 1e-11).unwrap().value;
        assert_relative_eq!(exact, quad, epsilon = 1e-9);
    }

    #[test]
    fn constant_within_block_logdet_uses_the_rank_one_determinant() {
        // det(s J + c I) = (T s + c) c^{T-1} with s the flat unit spectrum.
        let flat = ScalarSpectrum::Piecewise(
            ScalarPiecewiseSpectrum::new(vec![SpectrumSegment {
                lo: 0.0,
                hi: PI,
                level: 1.0,
            }])
            .unwrap(),
        );
        let t = 3usize;
        let snr = 5.0;
        let model = SpectralModel::constant_within_block(t, flat).unwrap();
        let got = logdet_sigma(&model, Snr::Finite(snr), 1e-11).unwrap().value;
        let cnoise: f64 = 1.0 / snr;
        let want = (t as f64 * 1.0 + cnoise).ln() + (t as f64 - 1.0) * cnoise.ln();
        assert_relative_eq!(got, want, epsilon = 1e-12);
        // Noiseless: the within-block covariance is singular -> -inf.
        let inf = logdet_sigma(&model, Snr::Infinite, 1e-11).unwrap().value;
        assert!(inf == f64::NEG_INFINITY, "irregular model must yield -inf");
    }

    #[test]
    fn zero_history_sigmas_are_the_unconditional_variance() {
        let model = SpectralModel::block_gauss_markov(2, c64(0.3, 0.0), c64(0.8, 0.0)).unwrap();
        let sigmas = per_symbol_sigmas(&model, 4.0, 0).unwrap();
        assert_eq!(sigmas.len(), 2);
        for s in sigmas {
            assert_relative_eq!(s, 1.25, epsilon = 1e-12);
        }
    }

    #[test]
    fn finite_history_sigmas_satisfy_the_ldl_identity() {
        // For a fast-mixing scalar model a short history already closes the
        // gap between sum(log sigma_i) and the Szego integral.
        let model = scalar_gauss_markov(c64(0.5, 0.0)).unwrap();
        let snr = 10.0;
        let sigmas = per_symbol_sigmas(&model, snr, 64).unwrap();
        let ldl: f64 = sigmas.iter().map(|s| s.ln()).sum();
        let szego = logdet_sigma(&model, Snr::Finite(snr), 1e-11).unwrap().value;
        assert!(
            (ldl - szego).abs() < 1e-8,
            "LDL identity violated: {ldl} vs {szego}"
        );
        // Innovation variance never drops below the noise floor.
        for s in sigmas {
            assert!(s >= 1.0 / snr, "sigma {s} fell below the noise floor");
        }
    }

    #[test]
    fn conditioning_on_the_symbol_itself_gives_the_textbook_variance() {
        let model = scalar_gauss_markov(c64(0.7, 0.0)).unwrap();
        for snr in [0.5, 2.0, 100.0] {
            let v = conditional_mmse_variance(&model, 5, &[5], snr).unwrap();
            assert_relative_eq!(v, 1.0 / (1.0 + snr), epsilon = 1e-10);
        }
        // A distant pilot is nearly useless.
        let far = conditional_mmse_variance(&model, 100, &[0], 100.0).unwrap();
        assert!(far > 0.99, "far pilot should barely reduce the variance");
        // More pilots can only help.
        let one = conditional_mmse_variance(&model, 10, &[9], 10.0).unwrap();
        let two = conditional_mmse_variance(&model, 10, &[8, 9], 10.0).unwrap();
        assert!(two <= one + 1e-12);
    }

    #[test]
    fn degenerate_pilots_decay_like_one_over_snr() {
        // Constant-within-block fading: a same-block pilot is perfectly
        // correlated with the target, so the residual is pure estimation
        // noise, var = 1/(1+snr) = O(1/snr) with log-log slope -1.
        let flat = ScalarSpectrum::Piecewise(
            ScalarPiecewiseSpectrum::new(vec![SpectrumSegment {
                lo: 0.0,
                hi: PI,
                level: 1.0,
            }])
            .unwrap(),
        );
        let model = SpectralModel::constant_within_block(2, flat).unwrap();
        let v_lo = conditional_mmse_variance(&model, 1, &[0], 1e3).unwrap();
        let v_hi = conditional_mmse_variance(&model, 1, &[0], 1e6).unwrap();
        let slope = (v_hi.ln() - v_lo.ln()) / (1e6f64.ln() - 1e3f64.ln());
        assert!(
            (slope + 1.0).abs() < 0.05,
            "rank-deficient pilot variance must decay like 1/snr, slope {slope}"
        );
    }

    #[test]
    fn noisy_prediction_variance_limits() {
        let gm = ScalarSpectrum::GaussMarkov { rho: c64(0.9, 0.0) };
        // Large pilot amplitude: the noiseless prediction error 1 - rho^2.
        let clean = scalar_noisy_prediction_variance(&gm, 1e6).unwrap();
        assert_relative_eq!(clean, 0.19, epsilon = 1e-6);
        // Small pilot amplitude: the channel is essentially unobserved.
        let blind = scalar_noisy_prediction_variance(&gm, 1e-4).unwrap();
        assert_relative_eq!(blind, 1.0, epsilon = 1e-4);
    }

    #[test]
    fn prediction_summary_reports_consistent_fields() {
        let model = SpectralModel::block_gauss_markov(2, c64(0.3, 0.0), c64(0.8, 0.0)).unwrap();
        let snr = 10.0;
        let summary = prediction_summary(&model, snr, 256, 1e-10).unwrap();
        let t = 2.0f64;
        // exp(logdet) lies in ((1/snr)^T, (1+1/snr)^T].
        assert!(summary.logdet_sigma_snr > -t * snr.ln());
        assert!(summary.logdet_sigma_snr <= t * (1.0 + 1.0 / snr).ln() + 1e-12);
        let ldl: f64 = summary.sigmas.iter().map(|s| s.ln()).sum();
        assert!(
            (ldl - summary.logdet_sigma_snr).abs() < 1e-6,
            "history-256 LDL identity: {ldl} vs {}",
            summary.logdet_sigma_snr
        );
    }

    #[test]
    fn band_limited_decay_rate_matches_the_arc_diameter() {
        // Spectrum supported on the arc |w| <= pi/2 (central angle pi);
        // prediction error decays like tau^{2n} with tau = sin(pi/4).
        let band = ScalarPiecewiseSpectrum::new(vec![
            SpectrumSegment { lo: 0.0, hi: PI / 2.0, level: 2.0 },
            SpectrumSegment { lo: PI / 2.0, hi: PI, level: 0.0 },
        ])
        .unwrap();
        let decay = prediction_decay_rate(&band, 64).unwrap();
        let want = (PI / 4.0).sin();
        assert!(
            (decay.tau - want).abs() / want < 0.05,
            "fitted decay {} vs arc diameter {want}",
            decay.tau
        );
        // The ladder itself must be nonincreasing.
        for pair in decay.variances.windows(2) {
            assert!(pair[1] <= pair[0] + 1e-12, "prediction ladder must decrease");
        }
    }

    #[test]
    fn block_gauss_markov_ldl_identity_with_matrix_history() {
        let model = SpectralModel::block_gauss_markov(2, c64(0.3, 0.0), c64(0.8, 0.0)).unwrap();
        let snr = 10.0;
        let sigmas = per_symbol_sigmas(&model, snr, 128).unwrap();
        let ldl: f64 = sigmas.iter().map(|s| s.ln()).sum();
        let szego = logdet_sigma(&model, Snr::Finite(snr), 1e-11).unwrap().value;
        assert!(
            (ldl - szego).abs() < 1e-6,
            "block LDL identity at history 128: {ldl} vs {szego}"
        );
    }

    #[test]
    fn invalid_snr_is_rejected() {
        let model = scalar_gauss_markov(c64(0.5, 0.0)).unwrap();
        assert!(logdet_sigma(&model, Snr::Finite(0.0), 1e-9).is_err());
        assert!(per_symbol_sigmas(&model, -3.0, 4).is_err());
        assert!(conditional_mmse_variance(&model, 0, &[0], f64::NAN).is_err());
    }
}
