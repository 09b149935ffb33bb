//! High-SNR capacity behavior: pre-logs, the fading number, and the
//! worst-case spectra that govern peak-limited capacity growth.
//!
//! The capacity pre-log of the block process is determined entirely by the
//! rank distribution of its spectral density: with `mu_i` the measure of
//! `{w : rank S(e^{jw}) = i}`,
//!
//! ```text
//! prelog = sum_i (T - i) mu_i / (2 pi T).
//! ```
//!
//! Two independent estimators are provided — direct eigenvalue counting
//! ([`rank_measure_functional`]) and the slope of the Szego integral against
//! `log snr` ([`prelog_slope`]) — and they must agree; their disagreement is
//! flagged rather than hidden.  For regular processes the next-order term is
//! the fading number `-1 - gamma - (1/T) log det Sigma(inf)`.

use crate::bounds::{peaky_lower, memoryless_coherent_capacity};
use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigenvalues, hermitian_logdet_clamped, C64};
use crate::prediction::{least_squares_slope, logdet_sigma, scalar_noisy_prediction_variance, Snr};
use crate::quad::EULER_MASCHERONI;
use crate::spectra::{ScalarPiecewiseSpectrum, ScalarSpectrum, SpectralModel, SpectrumSegment};
use nalgebra::DMatrix;
use serde::Serialize;
use std::f64::consts::PI;

/// Default relative eigenvalue threshold for rank decisions.
pub const DEFAULT_EIG_THRESHOLD: f64 = 1e-10;

/// Default frequency-grid size for rank measurement.
pub const DEFAULT_RANK_GRID: usize = 4096;

/// Measured rank distribution of a spectral density.
#[derive(Debug, Clone, Serialize)]
pub struct RankMeasures {
    /// `measures[i]` is the measure (radians) of `{w : rank S(w) = i}`,
    /// for `i = 0..=T`; the entries sum to `2 pi`.
    pub measures: Vec<f64>,
    /// Number of eigenvalues that fell within a factor 10 of the rank
    /// threshold — borderline calls the caller should know about.
    pub ambiguous: usize,
    /// Absolute eigenvalue threshold used (relative threshold times the
    /// largest eigenvalue seen anywhere on the grid).
    pub threshold: f64,
    /// Number of frequency samples.
    pub grid_size: usize,
}

impl RankMeasures {
    /// The pre-log implied by the rank distribution.
    pub fn prelog(&self) -> f64 {
        let t = self.measures.len() - 1;
        self.measures
            .iter()
            .enumerate()
            .map(|(i, m)| (t - i) as f64 * m)
            .sum::<f64>()
            / (2.0 * PI * t as f64)
    }
}

/// Measures the rank distribution of `S(e^{jw})` on a uniform grid.
///
/// An eigenvalue counts as zero when it is below `eig_threshold` times the
/// global maximum eigenvalue; eigenvalues within a factor of 10 of that
/// cutoff are reported as ambiguous.
pub fn rank_measure_functional(
    model: &SpectralModel,
    grid_size: usize,
    eig_threshold: f64,
) -> Result<RankMeasures> {
    if grid_size < 64 {
        return Err(Error::validation(format!(
            "rank measurement needs at least 64 grid points, got {grid_size}"
        )));
    }
    if !(eig_threshold > 0.0 && eig_threshold < 1.0) {
        return Err(Error::validation(format!(
            "relative eigenvalue threshold must lie in (0, 1), got {eig_threshold}"
        )));
    }
    let t = model.block_len();
    let spectra: Vec<Vec<f64>> = (0..grid_size)
        .map(|k| {
            let w = -PI + 2.0 * PI * k as f64 / grid_size as f64;
            hermitian_eigenvalues(&model.eval(w))
        })
        .collect();
    let global_max = spectra
        .iter()
        .flat_map(|eigs| eigs.iter().copied())
        .fold(0.0f64, f64::max);
    if global_max <= 0.0 {
        return Err(Error::validation(
            "spectral density vanishes identically; unit-variance fading \
             cannot have an all-zero spectrum",
        ));
    }
    let threshold = eig_threshold * global_max;
    let mut measures = vec![0.0; t + 1];
    let mut ambiguous = 0usize;
    let cell = 2.0 * PI / grid_size as f64;
    for eigs in &spectra {
        let mut rank = 0usize;
        for &lambda in eigs {
            if lambda >= threshold {
                rank += 1;
            }
            if lambda >= threshold / 10.0 && lambda < threshold * 10.0 {
                ambiguous += 1;
            }
        }
        measures[rank] += cell;
    }
    Ok(RankMeasures {
        measures,
        ambiguous,
        threshold,
        grid_size,
    })
}

/// Pre-log estimated from the growth of the Szego integral: least-squares
/// slope of `-logdet_sigma(snr)` against `T log snr` over the given grid.
pub fn prelog_slope(model: &SpectralModel, snr_grid: &[f64], rel_tol: f64) -> Result<f64> {
    if snr_grid.len() < 2 {
        return Err(Error::validation(
            "slope estimation needs at least two snr points",
        ));
    }
    let t = model.block_len() as f64;
    let mut xs = Vec::with_capacity(snr_grid.len());
    let mut ys = Vec::with_capacity(snr_grid.len());
    for &snr in snr_grid {
        let r = logdet_sigma(model, Snr::Finite(snr), rel_tol)?;
        xs.push(t * snr.ln());
        ys.push(-r.value);
    }
    Ok(least_squares_slope(&xs, &ys))
}

/// Both pre-log estimators side by side.
#[derive(Debug, Clone, Serialize)]
pub struct PrelogReport {
    /// Pre-log from the rank distribution.
    pub prelog_rank: f64,
    /// Pre-log from the Szego-integral slope.
    pub prelog_slope: f64,
    /// Rank measures (radians) underlying `prelog_rank`.
    pub rank_measures: Vec<f64>,
    /// Borderline eigenvalue count from the rank pass.
    pub ambiguous: usize,
    /// Snr grid used for the slope fit.
    pub snr_grid: Vec<f64>,
    /// Set when the two estimators disagree by more than 0.05 — either the
    /// grid missed structure or the snr range is pre-asymptotic.
    pub estimators_disagree: bool,
}

/// Runs both pre-log estimators and flags disagreement beyond 0.05.
pub fn prelog_report(
    model: &SpectralModel,
    grid_size: usize,
    eig_threshold: f64,
    snr_grid: &[f64],
    rel_tol: f64,
) -> Result<PrelogReport> {
    let ranks = rank_measure_functional(model, grid_size, eig_threshold)?;
    let slope = prelog_slope(model, snr_grid, rel_tol)?;
    let rank_prelog = ranks.prelog();
    Ok(PrelogReport {
        prelog_rank: rank_prelog,
        prelog_slope: slope,
        rank_measures: ranks.measures,
        ambiguous: ranks.ambiguous,
        snr_grid: snr_grid.to_vec(),
        estimators_disagree: (rank_prelog - slope).abs() > 0.05,
    })
}

/// Threshold below which `logdet_sigma(., inf)` is treated as a collapsed
/// (irregular) prediction error: legitimate regular models stay far above
/// it, while eigenvalue flooring at 1e-300 lands far below.
const REGULARITY_FLOOR: f64 = -300.0;

/// The fading number of a regular process:
/// `-1 - gamma - (1/T) log det Sigma(inf)`.
///
/// Fails with a validation error when the process is irregular (the
/// infinite-past prediction error of the fading block is singular), which is
/// exactly when the spectral density vanishes on a set of positive measure
/// or the block covariance is rank deficient.
pub fn fading_number(model: &SpectralModel, rel_tol: f64) -> Result<f64> {
    let regularity_error = || {
        Error::validation(
            "fading number requires a regular process: det Sigma(inf) > 0 \
             (the infinite-past prediction error of the fading block must be \
             nonsingular)"
                .to_string(),
        )
    };
    let logdet_inf = match logdet_sigma(model, Snr::Infinite, rel_tol) {
        Ok(r) => r.value,
        // A noiseless integrand that refuses to converge is itself the
        // signature of a spectral density collapsing somewhere.
        Err(Error::Numerical(_)) => return Err(regularity_error()),
        Err(e) => return Err(e),
    };
    if !logdet_inf.is_finite() || logdet_inf < REGULARITY_FLOOR {
        return Err(regularity_error());
    }
    let t = model.block_len() as f64;
    Ok(-1.0 - EULER_MASCHERONI - logdet_inf / t)
}

// ---------------------------------------------------------------------------
// Worst-case spectra and the peaky-signaling growth constants
// ---------------------------------------------------------------------------

/// The spectrum maximizing the noisy prediction error over all unit-variance
/// spectra whose zero set has measure `alpha`: zero on `|w| <= alpha/2` and
/// the constant `2 pi / (2 pi - alpha)` elsewhere.
pub fn worst_case_spectrum(alpha: f64) -> Result<ScalarPiecewiseSpectrum> {
    if !(0.0..2.0 * PI).contains(&alpha) {
        return Err(Error::validation(format!(
            "zero-set measure must lie in [0, 2pi), got {alpha}"
        )));
    }
    let level = 2.0 * PI / (2.0 * PI - alpha);
    let mut segments = Vec::new();
    if alpha > 0.0 {
        segments.push(SpectrumSegment {
            lo: 0.0,
            hi: alpha / 2.0,
            level: 0.0,
        });
    }
    segments.push(SpectrumSegment {
        lo: alpha / 2.0,
        hi: PI,
        level,
    });
    ScalarPiecewiseSpectrum::new(segments)
}

/// Noisy prediction error of the worst-case spectrum in class `alpha` at
/// pilot amplitude `x`:
///
/// `phi(alpha, x) = (2pi/(2pi-alpha) + 1/x^2)^{(2pi-alpha)/2pi} *
///                  (1/x^2)^{alpha/2pi} - 1/x^2`.
///
/// `phi(0, x) = 1` for every `x`; `phi` upper-bounds the noisy prediction
/// error of every spectrum in the class, which is what makes the universal
/// capacity lower bound universal.
pub fn phi(alpha: f64, x: f64) -> Result<f64> {
    if !(0.0..2.0 * PI).contains(&alpha) {
        return Err(Error::validation(format!(
            "zero-set measure must lie in [0, 2pi), got {alpha}"
        )));
    }
    if !(x > 0.0 && x.is_finite()) {
        return Err(Error::validation(format!(
            "pilot amplitude must be positive and finite, got {x}"
        )));
    }
    let noise = 1.0 / (x * x);
    let support_frac = (2.0 * PI - alpha) / (2.0 * PI);
    let level = 2.0 * PI / (2.0 * PI - alpha);
    Ok((level + noise).powf(support_frac) * noise.powf(1.0 - support_frac) - noise)
}

/// Growth constants of the peaky-signaling capacity lower bound when the
/// three-level spectrum parameter scales as `theta = snr^r`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct KappaC {
    /// Pre-log of the bound: `(alpha + min(r,1)(2pi - alpha)) / 2pi`.
    pub kappa: f64,
    /// Additive constant; `None` at `r = 0`, where the scaling argument
    /// degenerates and only `kappa = alpha/2pi` survives.
    pub c: Option<f64>,
}

/// Computes the `(kappa, c)` pair for zero-set measure `alpha` and scaling
/// exponent `r >= 0`.
pub fn kappa_c(alpha: f64, r: f64) -> Result<KappaC> {
    if !(0.0..2.0 * PI).contains(&alpha) {
        return Err(Error::validation(format!(
            "zero-set measure must lie in [0, 2pi), got {alpha}"
        )));
    }
    if !(r >= 0.0 && r.is_finite()) {
        return Err(Error::validation(format!(
            "scaling exponent must be nonnegative, got {r}"
        )));
    }
    let kappa = (alpha + r.min(1.0) * (2.0 * PI - alpha)) / (2.0 * PI);
    let c = if r == 0.0 {
        None
    } else if r < 1.0 {
        Some(alpha * 4.0f64.ln())
    } else if r == 1.0 {
        Some(alpha * 4.0f64.ln() + (2.0 * PI - alpha) * 5.0f64.ln())
    } else {
        Some(2.0 * PI * 4.0f64.ln())
    };
    Ok(KappaC { kappa, c })
}

// ---------------------------------------------------------------------------
// Two-level spectra and their capacity bounds
// ---------------------------------------------------------------------------

/// Three-segment spectrum with levels `eps1` on the fraction `alpha1` of the
/// band, `eps2` on the next `alpha2 - alpha1`, and whatever level on the
/// remaining `1 - alpha2` makes the unit-variance normalization exact.
pub fn two_level_spectrum(
    eps1: f64,
    eps2: f64,
    alpha1: f64,
    alpha2: f64,
) -> Result<ScalarPiecewiseSpectrum> {
    if !(0.0 < alpha1 && alpha1 < alpha2 && alpha2 < 1.0) {
        return Err(Error::validation(format!(
            "band fractions must satisfy 0 < alpha1 < alpha2 < 1, got \
             alpha1 = {alpha1}, alpha2 = {alpha2}"
        )));
    }
    if eps1 < 0.0 || eps2 < 0.0 {
        return Err(Error::validation(
            "spectral levels must be nonnegative".to_string(),
        ));
    }
    let third = (1.0 - alpha1 * eps1 - (alpha2 - alpha1) * eps2) / (1.0 - alpha2);
    if third < 0.0 {
        return Err(Error::validation(format!(
            "levels too large for unit variance: the top level would be \
             {third:.6}"
        )));
    }
    ScalarPiecewiseSpectrum::new(vec![
        SpectrumSegment {
            lo: 0.0,
            hi: alpha1 * PI,
            level: eps1,
        },
        SpectrumSegment {
            lo: alpha1 * PI,
            hi: alpha2 * PI,
            level: eps2,
        },
        SpectrumSegment {
            lo: alpha2 * PI,
            hi: PI,
            level: third,
        },
    ])
}

/// Capacity bounds for the two-level spectrum at one snr point.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct TwoLevelPoint {
    /// Signal-to-noise ratio.
    pub snr: f64,
    /// Peaky lower bound (pilot amplitude `sqrt(snr)/2`).
    pub lower: f64,
    /// Prediction-based upper bound.
    pub upper: f64,
    /// Noisy prediction error on the lower-bound route (noise `4/snr`).
    pub var_lower_route: f64,
    /// Noisy prediction error on the upper-bound route (noise `1/snr`).
    pub var_upper_route: f64,
}

/// Sweeps the capacity bounds of the two-level spectrum over an snr grid.
///
/// Lower route: pilots at amplitude `sqrt(snr)/2` give prediction noise
/// `4/snr`, then the single-letter peaky bound applies.  Upper route: the
/// innovation variance at noise `1/snr` enters the prediction-based upper
/// bound with the coherent memoryless term.
pub fn two_level_bounds(
    eps1: f64,
    eps2: f64,
    alpha1: f64,
    alpha2: f64,
    snr_grid: &[f64],
) -> Result<Vec<TwoLevelPoint>> {
    let spectrum = ScalarSpectrum::Piecewise(two_level_spectrum(eps1, eps2, alpha1, alpha2)?);
    snr_grid
        .iter()
        .map(|&snr| {
            if !(snr > 0.0 && snr.is_finite()) {
                return Err(Error::validation(format!(
                    "signal-to-noise ratio must be positive and finite, got {snr}"
                )));
            }
            let v_lower = scalar_noisy_prediction_variance(&spectrum, snr.sqrt() / 2.0)?;
            let v_upper = scalar_noisy_prediction_variance(&spectrum, snr.sqrt())?;
            let lower = peaky_lower(snr, v_lower)?.max(0.0);
            let sigma_y = v_upper + 1.0 / snr;
            let upper = memoryless_coherent_capacity(snr)
                + ((1.0 + snr) / (snr * sigma_y)).ln();
            Ok(TwoLevelPoint {
                snr,
                lower,
                upper,
                var_lower_route: v_lower,
                var_upper_route: v_upper,
            })
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Rank functional on explicit matrix families
// ---------------------------------------------------------------------------

/// `F(eps) = sum_j w_j log det(A_j + eps I)` for a piecewise-constant family
/// of PSD matrices given as `(measure, matrix)` pieces, evaluated at two
/// epsilon values and differenced:
/// `(F(eps_hi) - F(eps_lo)) / (log eps_hi - log eps_lo)`.
///
/// As the epsilons shrink this slope converges to the integrated rank
/// defect `sum_j w_j (M - rank A_j)` — the identity connecting the Szego
/// integral's growth to the rank distribution.
pub fn logdet_epsilon_slope(
    family: &[(f64, DMatrix<C64>)],
    eps_lo: f64,
    eps_hi: f64,
) -> Result<f64> {
    if family.is_empty() {
        return Err(Error::validation("matrix family must be nonempty"));
    }
    if !(0.0 < eps_lo && eps_lo < eps_hi) {
        return Err(Error::validation(format!(
            "need 0 < eps_lo < eps_hi, got {eps_lo}, {eps_hi}"
        )));
    }
    let f = |eps: f64| -> f64 {
        family
            .iter()
            .map(|(w, a)| {
                let mut shifted = a.clone();
                for i in 0..a.nrows() {
                    shifted[(i, i)] += C64::new(eps, 0.0);
                }
                w * hermitian_logdet_clamped(&shifted, 1e-300)
            })
            .sum()
    };
    Ok((f(eps_hi) - f(eps_lo)) / (eps_hi.ln() - eps_lo.ln()))
}

/// Integrated rank defect `sum_j w_j (M - rank A_j)` of a piecewise-constant
/// PSD family, with ranks decided by `rel_threshold` times the family's
/// largest eigenvalue.
pub fn rank_defect_integral(family: &[(f64, DMatrix<C64>)], rel_threshold: f64) -> Result<f64> {
    if family.is_empty() {
        return Err(Error::validation("matrix family must be nonempty"));
    }
    let eigs: Vec<(f64, Vec<f64>)> = family
        .iter()
        .map(|(w, a)| (*w, hermitian_eigenvalues(a)))
        .collect();
    let global_max = eigs
        .iter()
        .flat_map(|(_, e)| e.iter().copied())
        .fold(0.0f64, f64::max);
    if global_max <= 0.0 {
        return Err(Error::validation("family is identically zero"));
    }
    let thr = rel_threshold * global_max;
    Ok(eigs
        .iter()
        .map(|(w, e)| {
            let defect = e.iter().filter(|&&l| l < thr).count();
            w * defect as f64
        })
        .sum())
}
