//! Capacity per unit energy and the optimal allocation of ON symbols.
//!
//! With peaky signaling that concentrates energy on a subset `M` of the
//! block positions, the relevant functional is
//!
//! ```text
//! Psi(M, snr) = (1/|M|) \int_{-pi}^{pi} log det(I + snr S_M(w)) dw,
//! ```
//!
//! where `S_M` is the principal submatrix of the spectral density on the
//! rows and columns in `M`.  The capacity per unit energy is
//! `1 - min_M Psi(M, snr) / (2 pi snr)`, and the minimizing subset shifts
//! with snr: small snr rewards the subset with the largest normalized
//! second moment, large snr the one with the smallest normalized rank.
//!
//! Subsets are written with 1-based symbol positions throughout this
//! module, matching the way block symbols are usually numbered.

use crate::error::{Error, Result};
use crate::linalg::{cholesky_logdet, hermitian_eigenvalues, hermitian_logdet_clamped, principal_minor, C64};
use crate::quad::integrate_periodic;
use crate::spectra::SpectralModel;
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;

/// Largest block length for which an exhaustive subset scan is attempted.
pub const MAX_SCAN_BLOCK: usize = 20;

fn validate_subset(subset: &[usize], t: usize) -> Result<Vec<usize>> {
    if subset.is_empty() {
        return Err(Error::validation("ON-symbol subset must be nonempty"));
    }
    let mut sorted = subset.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != subset.len() {
        return Err(Error::validation(format!(
            "ON-symbol subset has repeated positions: {subset:?}"
        )));
    }
    for &i in &sorted {
        if i < 1 || i > t {
            return Err(Error::validation(format!(
                "ON-symbol position {i} is outside the block 1..={t}"
            )));
        }
    }
    Ok(sorted)
}

fn snr_check(snr: f64) -> Result<()> {
    if !(snr > 0.0 && snr.is_finite()) {
        return Err(Error::validation(format!(
            "signal-to-noise ratio must be positive and finite, got {snr}"
        )));
    }
    Ok(())
}

/// Renders a subset as `{1,2}` for display.
pub fn format_subset(subset: &[usize]) -> String {
    let inner: Vec<String> = subset.iter().map(|i| i.to_string()).collect();
    format!("{{{}}}", inner.join(","))
}

/// Evaluates `Psi(M, snr)` by periodic quadrature of the log-determinant.
pub fn psi(model: &SpectralModel, subset: &[usize], snr: f64, rel_tol: f64) -> Result<f64> {
    snr_check(snr)?;
    let sorted = validate_subset(subset, model.block_len())?;
    let rows: Vec<usize> = sorted.iter().map(|&i| i - 1).collect();
    let m = rows.len();
    let integrand = |w: f64| {
        let s = model.eval(w);
        let mut a = principal_minor(&s, &rows);
        for i in 0..m {
            a[(i, i)] = C64::new(1.0 + snr * a[(i, i)].re, 0.0);
        }
        for r in 0..m {
            for c in 0..m {
                if r != c {
                    a[(r, c)] *= snr;
                }
            }
        }
        cholesky_logdet(&a).unwrap_or_else(|| hermitian_logdet_clamped(&a, 1e-300))
    };
    let q = integrate_periodic(integrand, rel_tol, 1 << 22)?;
    Ok(q.value / m as f64)
}

/// One subset's `Psi` value inside a scan.
#[derive(Debug, Clone, Serialize)]
pub struct SubsetValue {
    /// ON-symbol positions, 1-based.
    pub subset: Vec<usize>,
    /// `Psi(M, snr)` (scans) or the selection functional (asymptotics).
    pub value: f64,
}

/// Result of an exhaustive scan over all nonempty subsets of the block.
#[derive(Debug, Clone, Serialize)]
pub struct SubsetScan {
    /// Signal-to-noise ratio of the scan.
    pub snr: f64,
    /// Every subset with its `Psi` value, in bitmask order.
    pub entries: Vec<SubsetValue>,
    /// All subsets attaining the minimum within relative tolerance 1e-9.
    pub argmin: Vec<Vec<usize>>,
    /// The minimal `Psi`.
    pub min_psi: f64,
    /// Capacity per unit energy, `1 - min_psi / (2 pi snr)`.
    pub cp: f64,
}

/// Scans every nonempty ON-symbol subset and reports the capacity per unit
/// energy attained by the best one.
pub fn cp_scan(model: &SpectralModel, snr: f64, rel_tol: f64) -> Result<SubsetScan> {
    snr_check(snr)?;
    let t = model.block_len();
    if t > MAX_SCAN_BLOCK {
        return Err(Error::validation(format!(
            "exhaustive subset scan over 2^{t} - 1 subsets is not feasible; \
             block length is capped at {MAX_SCAN_BLOCK}"
        )));
    }
    let masks: Vec<u32> = (1..(1u32 << t)).collect();
    let entries: Vec<SubsetValue> = masks
        .par_iter()
        .map(|&mask| {
            let subset: Vec<usize> = (0..t).filter(|i| mask >> i & 1 == 1).map(|i| i + 1).collect();
            let value = psi(model, &subset, snr, rel_tol)?;
            Ok(SubsetValue { subset, value })
        })
        .collect::<Result<_>>()?;
    let min_psi = entries
        .iter()
        .map(|e| e.value)
        .fold(f64::INFINITY, f64::min);
    let tie_tol = 1e-9 * min_psi.abs().max(1.0);
    let argmin: Vec<Vec<usize>> = entries
        .iter()
        .filter(|e| e.value - min_psi <= tie_tol)
        .map(|e| e.subset.clone())
        .collect();
    Ok(SubsetScan {
        snr,
        entries,
        argmin,
        min_psi,
        cp: 1.0 - min_psi / (2.0 * PI * snr),
    })
}

/// Capacity per unit energy of a block-independent channel whose block
/// covariance is the all-ones matrix (fully correlated within the block,
/// independent across blocks): `1 - log(1 + T snr) / (T snr)`.
pub fn cp_block_indep_constant(t: usize, snr: f64) -> Result<f64> {
    snr_check(snr)?;
    if t == 0 {
        return Err(Error::validation("block length must be positive"));
    }
    let ts = t as f64 * snr;
    Ok(1.0 - ts.ln_1p() / ts)
}

/// Capacity per unit energy of the constant-within-block channel whose
/// block gains follow a Gauss-Markov law with coefficient `rho`:
/// `1 - log(gamma0) / (T snr)` with
/// `gamma0 = (b + sqrt(b^2 - 4 rho^2)) / 2`,
/// `b = 1 + T snr + rho^2 (1 - T snr)`.
pub fn cp_block_gauss_markov(t: usize, snr: f64, rho: f64) -> Result<f64> {
    snr_check(snr)?;
    if t == 0 {
        return Err(Error::validation("block length must be positive"));
    }
    if !(rho.abs() < 1.0) {
        return Err(Error::validation(format!(
            "block correlation coefficient must satisfy |rho| < 1, got {rho}"
        )));
    }
    let ts = t as f64 * snr;
    let r2 = rho * rho;
    let b = 1.0 + ts + r2 * (1.0 - ts);
    let gamma0 = (b + (b * b - 4.0 * r2).sqrt()) / 2.0;
    Ok(1.0 - gamma0.ln() / ts)
}

/// Crossover of the optimal ON-symbol subset.
#[derive(Debug, Clone, Serialize)]
pub struct CrossoverResult {
    /// The snr at which `Psi` of the two competing subsets coincides.
    pub snr: f64,
    /// Minimizing subset just below the crossover.
    pub below: Vec<usize>,
    /// Minimizing subset just above the crossover.
    pub above: Vec<usize>,
    /// The common `Psi` value at the crossover.
    pub psi_at_crossover: f64,
}

/// Locates the snr in `[lo, hi]` where the optimal ON-symbol subset
/// switches, by bisecting the `Psi` difference of the endpoint minimizers.
pub fn cp_crossover(
    model: &SpectralModel,
    lo: f64,
    hi: f64,
    rel_tol: f64,
) -> Result<CrossoverResult> {
    snr_check(lo)?;
    snr_check(hi)?;
    if lo >= hi {
        return Err(Error::validation(format!(
            "search interval must satisfy lo < hi, got [{lo}, {hi}]"
        )));
    }
    let scan_lo = cp_scan(model, lo, rel_tol)?;
    let scan_hi = cp_scan(model, hi, rel_tol)?;
    let below = scan_lo.argmin[0].clone();
    let above = scan_hi.argmin[0].clone();
    if below == above {
        return Err(Error::validation(format!(
            "the minimizing subset {} does not change over [{lo}, {hi}]; \
             widen the interval to bracket a crossover",
            format_subset(&below)
        )));
    }
    // Psi(below) - Psi(above) is negative at lo and positive at hi;
    // bisect in log snr for scale invariance.
    let diff = |snr: f64| -> Result<f64> {
        Ok(psi(model, &below, snr, rel_tol)? - psi(model, &above, snr, rel_tol)?)
    };
    let (mut a, mut b) = (lo.ln(), hi.ln());
    let (fa, fb) = (diff(lo)?, diff(hi)?);
    if fa * fb > 0.0 {
        return Err(Error::numerical(format!(
            "Psi difference does not change sign over [{lo}, {hi}] \
             ({fa:.3e} vs {fb:.3e}); the endpoint minimizers may tie"
        )));
    }
    for _ in 0..80 {
        let mid = 0.5 * (a + b);
        let fm = diff(mid.exp())?;
        if fa * fm <= 0.0 {
            b = mid;
        } else {
            a = mid;
        }
        if b - a < 1e-12 {
            break;
        }
    }
    let snr = (0.5 * (a + b)).exp();
    let psi_at_crossover = psi(model, &above, snr, rel_tol)?;
    Ok(CrossoverResult {
        snr,
        below,
        above,
        psi_at_crossover,
    })
}

/// Low-snr selection rule: capacity per unit energy behaves like
/// `(snr/2) max_M q_M / |M|` with `q_M = (1/2pi) \int tr S_M(w)^2 dw`, so
/// the optimal subset maximizes the normalized second moment.
#[derive(Debug, Clone, Serialize)]
pub struct LowSnrSelection {
    /// `max_M q_M / |M|` — the low-snr slope of cp is `snr/2` times this.
    pub best_value: f64,
    /// Subsets attaining the maximum (relative ties at 1e-9).
    pub argmax: Vec<Vec<usize>>,
    /// Every subset's `q_M / |M|`.
    pub per_subset: Vec<SubsetValue>,
}

/// Evaluates the low-snr subset selection functional for every subset.
pub fn low_snr_selection(model: &SpectralModel, rel_tol: f64) -> Result<LowSnrSelection> {
    let t = model.block_len();
    if t > MAX_SCAN_BLOCK {
        return Err(Error::validation(format!(
            "exhaustive subset scan over 2^{t} - 1 subsets is not feasible; \
             block length is capped at {MAX_SCAN_BLOCK}"
        )));
    }
    let masks: Vec<u32> = (1..(1u32 << t)).collect();
    let per_subset: Vec<SubsetValue> = masks
        .par_iter()
        .map(|&mask| {
            let subset: Vec<usize> = (0..t).filter(|i| mask >> i & 1 == 1).map(|i| i + 1).collect();
            let rows: Vec<usize> = subset.iter().map(|&i| i - 1).collect();
            // tr S_M^2 = squared Frobenius norm of the Hermitian minor.
            let integrand = |w: f64| {
                let minor = principal_minor(&model.eval(w), &rows);
                minor.iter().map(|z| z.norm_sqr()).sum::<f64>()
            };
            let q = integrate_periodic(integrand, rel_tol, 1 << 20)?;
            Ok(SubsetValue {
                value: q.value / (2.0 * PI) / subset.len() as f64,
                subset,
            })
        })
        .collect::<Result<_>>()?;
    let best_value = per_subset
        .iter()
        .map(|e| e.value)
        .fold(f64::NEG_INFINITY, f64::max);
    let tie_tol = 1e-9 * best_value.abs().max(1.0);
    let argmax = per_subset
        .iter()
        .filter(|e| best_value - e.value <= tie_tol)
        .map(|e| e.subset.clone())
        .collect();
    Ok(LowSnrSelection {
        best_value,
        argmax,
        per_subset,
    })
}

/// Low-snr asymptote of the capacity per unit energy:
/// `(snr/2) max_M q_M / |M|`.
pub fn cp_low_asymptote(model: &SpectralModel, snr: f64, rel_tol: f64) -> Result<f64> {
    snr_check(snr)?;
    Ok(snr / 2.0 * low_snr_selection(model, rel_tol)?.best_value)
}

/// High-snr selection rule: the optimal subset minimizes the normalized
/// rank integral `(1/|M|)(1/2pi) \int rank S_M(w) dw`.
#[derive(Debug, Clone, Serialize)]
pub struct HighSnrSelection {
    /// `min_M` of the normalized rank integral.
    pub best_value: f64,
    /// Subsets attaining the minimum (absolute ties at 1e-9).
    pub argmin: Vec<Vec<usize>>,
    /// Every subset's normalized rank integral.
    pub per_subset: Vec<SubsetValue>,
}

/// Evaluates the high-snr subset selection functional on a frequency grid.
pub fn high_snr_selection(
    model: &SpectralModel,
    grid_size: usize,
    rel_threshold: f64,
) -> Result<HighSnrSelection> {
    let t = model.block_len();
    if t > 12 {
        return Err(Error::validation(format!(
            "rank scan over 2^{t} - 1 subsets with per-subset eigenvalue \
             decompositions is not feasible; block length is capped at 12"
        )));
    }
    if grid_size < 64 {
        return Err(Error::validation(format!(
            "rank measurement needs at least 64 grid points, got {grid_size}"
        )));
    }
    let masks: Vec<u32> = (1..(1u32 << t)).collect();
    let per_subset: Vec<SubsetValue> = masks
        .par_iter()
        .map(|&mask| {
            let subset: Vec<usize> = (0..t).filter(|i| mask >> i & 1 == 1).map(|i| i + 1).collect();
            let rows: Vec<usize> = subset.iter().map(|&i| i - 1).collect();
            let eigs: Vec<Vec<f64>> = (0..grid_size)
                .map(|k| {
                    let w = -PI + 2.0 * PI * k as f64 / grid_size as f64;
                    hermitian_eigenvalues(&principal_minor(&model.eval(w), &rows))
                })
                .collect();
            let max_eig = eigs
                .iter()
                .flat_map(|e| e.iter().copied())
                .fold(0.0f64, f64::max);
            let mean_rank = if max_eig <= 0.0 {
                0.0
            } else {
                let thr = rel_threshold * max_eig;
                eigs.iter()
                    .map(|e| e.iter().filter(|&&l| l >= thr).count() as f64)
                    .sum::<f64>()
                    / grid_size as f64
            };
            Ok(SubsetValue {
                value: mean_rank / subset.len() as f64,
                subset,
            })
        })
        .collect::<Result<_>>()?;
    let best_value = per_subset
        .iter()
        .map(|e| e.value)
        .fold(f64::INFINITY, f64::min);
    let argmin = per_subset
        .iter()
        .filter(|e| e.value - best_value <= 1e-9)
        .map(|e| e.subset.clone())
        .collect();
    Ok(HighSnrSelection {
        best_value,
        argmin,
        per_subset,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectra::{CorrelationSequence, ScalarSpectrum, SpectralModel};
    use approx::assert_relative_eq;
    use nalgebra::{Complex, DMatrix};

    fn c64(re: f64, im: f64) -> C64 {
        Complex::new(re, im)
    }

    /// Block-independent model with the rank-deficient covariance
    /// R0 = [[1,1,rho],[1,1,rho],[rho,rho,1]]: symbols 1 and 2 are copies,
    /// symbol 3 is correlated with them through rho.
    fn twin_symbol_model(rho: f64) -> SpectralModel {
        let r0 = DMatrix::from_row_slice(
            3,
            3,
            &[
                c64(1.0, 0.0),
                c64(1.0, 0.0),
                c64(rho, 0.0),
                c64(1.0, 0.0),
                c64(1.0, 0.0),
                c64(rho, 0.0),
                c64(rho, 0.0),
                c64(rho, 0.0),
                c64(1.0, 0.0),
            ],
        );
        SpectralModel::TruncatedFourier(CorrelationSequence::new(3, vec![r0]).unwrap())
    }

    #[test]
    fn psi_of_constant_rank_one_minors_is_closed_form() {
        // For the twin-symbol model, S_{1,2} is the all-ones 2x2 matrix:
        // Psi = (1/2) * 2pi * log(1 + 2 snr) = pi log(1 + 2 snr).
        let model = twin_symbol_model(0.8);
        let got = psi(&model, &[1, 2], 3.0, 1e-11).unwrap();
        assert_relative_eq!(got, PI * 7.0f64.ln(), epsilon = 1e-9);
        // Full block: det(I + snr S) = 1 + 3 snr + 2 snr^2 (1 - rho^2).
        let snr = 3.0;
        let det = 1.0 + 3.0 * snr + 2.0 * snr * snr * (1.0 - 0.64);
        let got = psi(&model, &[1, 2, 3], snr, 1e-11).unwrap();
        assert_relative_eq!(got, 2.0 * PI / 3.0 * det.ln(), epsilon = 1e-9);
    }

    #[test]
    fn psi_rejects_bad_subsets() {
        let model = twin_symbol_model(0.5);
        assert!(psi(&model, &[], 1.0, 1e-9).is_err());
        assert!(psi(&model, &[0], 1.0, 1e-9).is_err());
        assert!(psi(&model, &[4], 1.0, 1e-9).is_err());
        assert!(psi(&model, &[2, 2], 1.0, 1e-9).is_err());
    }

    #[test]
    fn fully_correlated_block_matches_the_closed_form_cp() {
        // All-ones 4x4 covariance: every subset minor is all-ones, and
        // Psi(M)/2pi = log(1 + m snr)/m is decreasing in m, so the full
        // block wins and cp = 1 - log(1 + 4 snr)/(4 snr).
        let r0 = DMatrix::from_element(4, 4, c64(1.0, 0.0));
        let model = SpectralModel::TruncatedFourier(CorrelationSequence::new(4, vec![r0]).unwrap());
        let scan = cp_scan(&model, 1.0, 1e-11).unwrap();
        assert_eq!(scan.argmin, vec![vec![1, 2, 3, 4]]);
        assert_relative_eq!(
            scan.cp,
            cp_block_indep_constant(4, 1.0).unwrap(),
            epsilon = 1e-9
        );
        assert_relative_eq!(
            cp_block_indep_constant(4, 1.0).unwrap(),
            1.0 - 5.0f64.ln() / 4.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn block_gauss_markov_cp_matches_quadrature() {
        // Constant-within-block fading with Gauss-Markov block gains: the
        // closed form through gamma0 must agree with the scanned value.
        let model = SpectralModel::constant_within_block(
            2,
            ScalarSpectrum::GaussMarkov {
                rho: c64(0.7, 0.0),
            },
        )
        .unwrap();
        let scan = cp_scan(&model, 1.5, 1e-11).unwrap();
        assert_eq!(scan.argmin, vec![vec![1, 2]]);
        let closed = cp_block_gauss_markov(2, 1.5, 0.7).unwrap();
        assert_relative_eq!(scan.cp, closed, epsilon = 1e-8);
        // Hand check of gamma0: b = 4 - 0.98 = 3.02, gamma0 = 2.8479466.
        assert_relative_eq!(closed, 1.0 - 2.847_946_6f64.ln() / 3.0, epsilon = 1e-7);
    }

    #[test]
    fn crossover_of_the_twin_symbol_model_is_analytic() {
        // Psi({1,2}) = pi log(1+2s), Psi({1,2,3}) = (2pi/3) log(1+3s+2s^2(1-rho^2)):
        // equality at s = (2 rho - 1) / (2 (1 - rho)^2).
        for &(rho, want) in &[(0.6, 0.625), (0.8, 7.5), (0.9, 40.0)] {
            let model = twin_symbol_model(rho);
            let lo = want / 50.0;
            let hi = want * 50.0;
            let cross = cp_crossover(&model, lo, hi, 1e-11).unwrap();
            assert_relative_eq!(cross.snr, want, max_relative = 1e-6);
            assert_eq!(cross.below, vec![1, 2, 3], "small snr favors the full block");
            assert_eq!(cross.above, vec![1, 2], "large snr favors the twin pair");
        }
    }

    #[test]
    fn crossover_reports_when_no_switch_occurs() {
        // rho <= 1/2: the twin pair is optimal at every snr.
        let model = twin_symbol_model(0.3);
        let err = cp_crossover(&model, 0.01, 100.0, 1e-10).unwrap_err();
        assert!(err.to_string().contains("does not change"));
    }

    #[test]
    fn low_snr_selection_normalized_second_moments() {
        // q/|M| is 2 for the twin pair and (5 + 4 rho^2)/3 for the full
        // block; the winner flips as rho crosses sqrt(1/4) = 1/2.
        let sel = low_snr_selection(&twin_symbol_model(0.3), 1e-11).unwrap();
        assert_eq!(sel.argmax, vec![vec![1, 2]]);
        assert_relative_eq!(sel.best_value, 2.0, epsilon = 1e-9);
        let sel = low_snr_selection(&twin_symbol_model(0.8), 1e-11).unwrap();
        assert_eq!(sel.argmax, vec![vec![1, 2, 3]]);
        assert_relative_eq!(sel.best_value, (5.0 + 4.0 * 0.64) / 3.0, epsilon = 1e-9);
    }

    #[test]
    fn high_snr_selection_normalized_ranks() {
        // Ranks: the twin pair has rank 1 (value 1/2); the full block has
        // rank 2 for rho < 1 (value 2/3) and rank 1 for rho = 1 (value 1/3).
        let sel = high_snr_selection(&twin_symbol_model(0.8), 256, 1e-10).unwrap();
        assert_eq!(sel.argmin, vec![vec![1, 2]]);
        assert_relative_eq!(sel.best_value, 0.5, epsilon = 1e-12);
        let sel = high_snr_selection(&twin_symbol_model(1.0), 256, 1e-10).unwrap();
        assert_eq!(sel.argmin, vec![vec![1, 2, 3]]);
        assert_relative_eq!(sel.best_value, 1.0 / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn scan_matches_low_snr_asymptote_at_small_snr() {
        let model = twin_symbol_model(0.8);
        let snr = 1e-3;
        let scan = cp_scan(&model, snr, 1e-11).unwrap();
        let asym = cp_low_asymptote(&model, snr, 1e-11).unwrap();
        assert!(
            (scan.cp - asym).abs() / asym < 0.05,
            "cp {} should be within 5% of its low-snr asymptote {}",
            scan.cp,
            asym
        );
    }
}
