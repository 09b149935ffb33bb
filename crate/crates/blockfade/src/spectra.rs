//! Fading-process models: correlation sequences, scalar spectra, and the
//! matrix spectral density of the block-stationary vector process.
//!
//! A length-`T` block of the scalar fading sequence is treated as one symbol
//! of a `T`-dimensional stationary process with correlation matrices
//! `R(i) = E[H_{m+i} H_m^H]` and matrix spectral density
//! `S(e^{jw}) = sum_i R(i) e^{-jwi}`, Hermitian and positive semidefinite at
//! every frequency.  Per-symbol fading is unit variance (`h_t ~ CN(0,1)`),
//! which pins `(1/2pi) int S_kk dw = 1` on every diagonal entry.
//!
//! Scalar spectra are stored on the half-axis `[0, pi]` and mirrored, so all
//! scalar models here have real correlations; complex one-step coefficients
//! enter through the Gauss-Markov models instead.

use crate::error::{Error, Result};
use crate::linalg::{check_hermitian, hermitian_eigenvalues, C64};
use nalgebra::{Complex, DMatrix};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::path::Path;

/// Eigenvalue tolerance used by positive-semidefiniteness checks; finite
/// Fourier truncation legitimately produces negative eigenvalues of this
/// size.
pub const PSD_TOLERANCE: f64 = 1e-8;

/// Grid size for construction-time positive-semidefiniteness validation.
pub const PSD_GRID: usize = 2048;

// ---------------------------------------------------------------------------
// Scalar piecewise-constant spectra
// ---------------------------------------------------------------------------

/// One constant piece of a scalar spectrum, on the half-axis `[0, pi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumSegment {
    /// Lower edge in radians, `0 <= lo < hi`.
    pub lo: f64,
    /// Upper edge in radians, `hi <= pi`.
    pub hi: f64,
    /// Spectrum value on `(lo, hi)`; nonnegative.
    pub level: f64,
}

/// Piecewise-constant spectrum of a scalar unit-variance process, symmetric
/// about 0: only `w >= 0` is stored and `s(-w) = s(w)`.
///
/// Invariants enforced at construction: the segments tile `[0, pi]` without
/// overlap, levels are nonnegative, and `(1/2pi) int_{-pi}^{pi} s dw = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarPiecewiseSpectrum {
    segments: Vec<SpectrumSegment>,
}

impl ScalarPiecewiseSpectrum {
    /// Builds a spectrum from half-axis segments, validating the tiling and
    /// the unit-variance normalization.  Levels whose mean is within `1e-6`
    /// of 1 are rescaled to make the normalization exact (low-precision
    /// hand-written input); larger deviations are rejected.
    pub fn new(mut segments: Vec<SpectrumSegment>) -> Result<Self> {
        if segments.is_empty() {
            return Err(Error::validation(
                "piecewise spectrum needs at least one segment",
            ));
        }
        segments.sort_by(|a, b| a.lo.total_cmp(&b.lo));
        for seg in &segments {
            if !(seg.lo.is_finite() && seg.hi.is_finite() && seg.level.is_finite()) {
                return Err(Error::validation("spectrum segments must be finite"));
            }
            if seg.lo >= seg.hi {
                return Err(Error::validation(format!(
                    "spectrum segment must have lo < hi, got [{}, {}]",
                    seg.lo, seg.hi
                )));
            }
            if seg.level < 0.0 {
                return Err(Error::validation(format!(
                    "spectral density must be nonnegative, got level {} on [{}, {}]",
                    seg.level, seg.lo, seg.hi
                )));
            }
        }
        let edge_tol = 1e-9;
        if segments[0].lo.abs() > edge_tol {
            return Err(Error::validation(format!(
                "segments must tile [0, pi]: first segment starts at {}, not 0",
                segments[0].lo
            )));
        }
        for pair in segments.windows(2) {
            if (pair[1].lo - pair[0].hi).abs() > edge_tol {
                return Err(Error::validation(format!(
                    "segments must tile [0, pi] without gaps or overlap: \
                     [{}, {}] is followed by [{}, {}]",
                    pair[0].lo, pair[0].hi, pair[1].lo, pair[1].hi
                )));
            }
        }
        let last = segments.last().unwrap();
        if (last.hi - PI).abs() > edge_tol {
            return Err(Error::validation(format!(
                "segments must tile [0, pi]: last segment ends at {}, not pi",
                last.hi
            )));
        }
        // Snap the edges so downstream arithmetic sees an exact tiling.
        segments[0].lo = 0.0;
        let n = segments.len();
        segments[n - 1].hi = PI;
        for i in 1..n {
            let shared = segments[i].lo;
            segments[i - 1].hi = shared;
        }

        let mut spectrum = ScalarPiecewiseSpectrum { segments };
        let mean = spectrum.mean();
        if (mean - 1.0).abs() > 1e-6 {
            return Err(Error::validation(format!(
                "unit-variance fading requires (1/2pi) int s dw = 1, got {mean:.9}"
            )));
        }
        if (mean - 1.0).abs() > 1e-12 {
            for seg in &mut spectrum.segments {
                seg.level /= mean;
            }
        }
        Ok(spectrum)
    }

    /// The half-axis segments, ordered by frequency.
    pub fn segments(&self) -> &[SpectrumSegment] {
        &self.segments
    }

    /// `(1/2pi) int_{-pi}^{pi} s dw`, i.e. the variance of the process.
    pub fn mean(&self) -> f64 {
        self.segments
            .iter()
            .map(|s| s.level * (s.hi - s.lo))
            .sum::<f64>()
            / PI
    }

    /// Spectrum value at `w` (any real argument; folded by symmetry and
    /// periodicity).
    pub fn value(&self, omega: f64) -> f64 {
        let x = fold_to_half_axis(omega);
        for seg in &self.segments {
            if x <= seg.hi + 1e-12 {
                return seg.level;
            }
        }
        self.segments.last().map(|s| s.level).unwrap_or(0.0)
    }

    /// `(1/2pi) int log(s(w) + c) dw`, evaluated exactly by segment sums.
    /// Returns `-inf` when `c = 0` and the spectrum has a zero level.
    pub fn log_moment(&self, c: f64) -> f64 {
        self.segments
            .iter()
            .map(|s| (s.hi - s.lo) * (s.level + c).ln())
            .sum::<f64>()
            / PI
    }

    /// Correlation `r_k = (1/2pi) int s(w) e^{jwk} dw`; real by symmetry.
    pub fn correlation(&self, k: i64) -> f64 {
        if k == 0 {
            return self.mean();
        }
        let kf = k.unsigned_abs() as f64;
        self.segments
            .iter()
            .map(|s| s.level * ((kf * s.hi).sin() - (kf * s.lo).sin()) / kf)
            .sum::<f64>()
            / PI
    }

    /// Total measure of `{w in [-pi, pi] : s(w) = 0}`.
    pub fn zero_measure(&self) -> f64 {
        2.0 * self
            .segments
            .iter()
            .filter(|s| s.level == 0.0)
            .map(|s| s.hi - s.lo)
            .sum::<f64>()
    }

    /// Maximal intervals of positive spectrum on the full axis `[-pi, pi]`,
    /// as `(lo, hi)` pairs; symmetric halves that meet at 0 are merged.
    pub fn support_arcs(&self) -> Vec<(f64, f64)> {
        // Merge adjacent positive half-axis segments first.
        let mut half: Vec<(f64, f64)> = Vec::new();
        for seg in &self.segments {
            if seg.level > 0.0 {
                match half.last_mut() {
                    Some(prev) if (prev.1 - seg.lo).abs() < 1e-12 => prev.1 = seg.hi,
                    _ => half.push((seg.lo, seg.hi)),
                }
            }
        }
        let mut arcs: Vec<(f64, f64)> = Vec::new();
        for &(lo, hi) in half.iter().rev() {
            if lo == 0.0 {
                // Touches the origin: merge with the mirror image.
                arcs.push((-hi, hi));
            } else {
                arcs.push((-hi, -lo));
            }
        }
        for &(lo, hi) in &half {
            if lo > 0.0 {
                arcs.push((lo, hi));
            }
        }
        arcs.sort_by(|a, b| a.0.total_cmp(&b.0));
        arcs
    }

    /// Largest level over all segments.
    pub fn max_level(&self) -> f64 {
        self.segments.iter().fold(0.0, |m, s| m.max(s.level))
    }
}

/// Folds any real frequency into `[0, pi]` using periodicity and symmetry.
fn fold_to_half_axis(omega: f64) -> f64 {
    let two_pi = 2.0 * PI;
    let mut w = omega.rem_euclid(two_pi);
    if w > PI {
        w = two_pi - w;
    }
    w
}

// ---------------------------------------------------------------------------
// Scalar spectra: piecewise or first-order Gauss-Markov
// ---------------------------------------------------------------------------

/// Spectral density of a scalar unit-variance process: either piecewise
/// constant or the first-order Gauss-Markov (autoregressive) family
/// `s(w) = (1-|rho|^2) / (1 - 2 Re(rho e^{-jw}) + |rho|^2)`.
#[derive(Debug, Clone)]
pub enum ScalarSpectrum {
    /// Piecewise-constant symmetric spectrum.
    Piecewise(ScalarPiecewiseSpectrum),
    /// Gauss-Markov with one-step correlation `rho`, `|rho| < 1`.
    GaussMarkov {
        /// One-step correlation coefficient.
        rho: C64,
    },
}

impl ScalarSpectrum {
    /// Spectrum value at `w`.
    pub fn value(&self, omega: f64) -> f64 {
        match self {
            ScalarSpectrum::Piecewise(p) => p.value(omega),
            ScalarSpectrum::GaussMarkov { rho } => {
                let r2 = rho.norm_sqr();
                let denom = 1.0 - 2.0 * (rho * Complex::new(0.0, -omega).exp()).re + r2;
                (1.0 - r2) / denom
            }
        }
    }

    /// `(1/2pi) int log(s(w) + c) dw`, exact for both families.
    ///
    /// For Gauss-Markov, `s + c = (A - 2 Re(c rho e^{-jw})) / |1 - rho
    /// e^{-jw}|^2` with `A = 1 - |rho|^2 + c (1 + |rho|^2)`, and the
    /// geometric mean of `A - 2B cos` is `(A + sqrt(A^2 - 4B^2)) / 2` while
    /// the denominator's geometric mean is 1.
    pub fn log_moment(&self, c: f64) -> f64 {
        match self {
            ScalarSpectrum::Piecewise(p) => p.log_moment(c),
            ScalarSpectrum::GaussMarkov { rho } => {
                let r2 = rho.norm_sqr();
                let a = 1.0 - r2 + c * (1.0 + r2);
                let b = c * rho.norm();
                ((a + (a * a - 4.0 * b * b).max(0.0).sqrt()) / 2.0).ln()
            }
        }
    }

    /// Correlation at lag `k` (complex for Gauss-Markov with complex `rho`).
    pub fn correlation(&self, k: i64) -> C64 {
        match self {
            ScalarSpectrum::Piecewise(p) => Complex::new(p.correlation(k), 0.0),
            ScalarSpectrum::GaussMarkov { rho } => {
                if k >= 0 {
                    rho.powu(k as u32)
                } else {
                    rho.conj().powu((-k) as u32)
                }
            }
        }
    }

    /// Measure of the zero set of the spectrum over `[-pi, pi]`.
    pub fn zero_measure(&self) -> f64 {
        match self {
            ScalarSpectrum::Piecewise(p) => p.zero_measure(),
            ScalarSpectrum::GaussMarkov { .. } => 0.0,
        }
    }
}

// ---------------------------------------------------------------------------
// Correlation sequences
// ---------------------------------------------------------------------------

/// Correlation sequence of the `T`-dimensional block process: `lags[i]` is
/// `R(i) = E[H_{m+i} H_m^H]` for `i = 0..=max_lag`; `R(-i) = R(i)^H` is
/// implied and never stored.
#[derive(Debug, Clone)]
pub struct CorrelationSequence {
    t: usize,
    lags: Vec<DMatrix<C64>>,
}

impl CorrelationSequence {
    /// Builds and validates a correlation sequence.
    ///
    /// Checks: `R(0)` Hermitian positive semidefinite with unit diagonal
    /// (unit-variance fading), and every entry of every lag has modulus at
    /// most 1 (correlations of unit-variance variables).
    pub fn new(t: usize, lags: Vec<DMatrix<C64>>) -> Result<Self> {
        if t == 0 {
            return Err(Error::validation("block length T must be positive"));
        }
        if lags.is_empty() {
            return Err(Error::validation(
                "correlation sequence needs at least R(0)",
            ));
        }
        for (i, lag) in lags.iter().enumerate() {
            if lag.nrows() != t || lag.ncols() != t {
                return Err(Error::validation(format!(
                    "R({i}) must be {t}x{t}, got {}x{}",
                    lag.nrows(),
                    lag.ncols()
                )));
            }
            for entry in lag.iter() {
                if entry.norm() > 1.0 + 1e-9 {
                    return Err(Error::validation(format!(
                        "correlations of unit-variance symbols must have \
                         modulus <= 1, got |R({i}) entry| = {:.6}",
                        entry.norm()
                    )));
                }
            }
        }
        check_hermitian(&lags[0], 1e-9)
            .map_err(|_| Error::validation("R(0) must be Hermitian"))?;
        for k in 0..t {
            if (lags[0][(k, k)].re - 1.0).abs() > 1e-9 || lags[0][(k, k)].im.abs() > 1e-9 {
                return Err(Error::validation(format!(
                    "unit-variance fading requires R(0) diagonal entries \
                     equal to 1, got {} at index {k}",
                    lags[0][(k, k)]
                )));
            }
        }
        let min_eig = hermitian_eigenvalues(&lags[0])
            .first()
            .copied()
            .unwrap_or(0.0);
        if min_eig < -PSD_TOLERANCE {
            return Err(Error::validation(format!(
                "R(0) must be positive semidefinite; minimum eigenvalue {min_eig:.3e}"
            )));
        }
        Ok(CorrelationSequence { t, lags })
    }

    /// Block length `T`.
    pub fn block_len(&self) -> usize {
        self.t
    }

    /// Largest stored lag index.
    pub fn max_lag(&self) -> usize {
        self.lags.len() - 1
    }

    /// `R(i)` for any integer lag, using `R(-i) = R(i)^H`; zero beyond the
    /// stored horizon.
    pub fn lag(&self, i: i64) -> DMatrix<C64> {
        let idx = i.unsigned_abs() as usize;
        if idx >= self.lags.len() {
            return DMatrix::zeros(self.t, self.t);
        }
        if i >= 0 {
            self.lags[idx].clone()
        } else {
            self.lags[idx].adjoint()
        }
    }

    /// Truncated Fourier sum `S(w) = R(0) + sum_{i=1} (R(i) e^{-jwi} +
    /// R(i)^H e^{jwi})`.
    pub fn eval(&self, omega: f64) -> DMatrix<C64> {
        let mut s = self.lags[0].clone();
        for (i, lag) in self.lags.iter().enumerate().skip(1) {
            let phase = Complex::new(0.0, -(i as f64) * omega).exp();
            let term = lag.map(|v| v * phase);
            s += term.adjoint();
            s += term;
        }
        s
    }
}

/// Correlation sequence of the symbolwise Gauss-Markov block process:
/// consecutive symbols have one-step correlation `rho2` inside a block and
/// `rho1` across block boundaries, so every correlation is the product of
/// one-step coefficients along the path between the two symbols.
///
/// Returns `R(i)` for `i = 0..=max_lag`.
pub fn block_gauss_markov(t: usize, rho1: C64, rho2: C64, max_lag: usize) -> Result<CorrelationSequence> {
    validate_block_gm_params(t, rho1, rho2)?;
    let lags: Vec<DMatrix<C64>> = (0..=max_lag as i64)
        .map(|i| {
            DMatrix::from_fn(t, t, |p, q| {
                block_gm_covariance(t, rho1, rho2, (i as usize) * t + p, q)
            })
        })
        .collect();
    CorrelationSequence::new(t, lags)
}

fn validate_block_gm_params(t: usize, rho1: C64, rho2: C64) -> Result<()> {
    if t == 0 {
        return Err(Error::validation("block length T must be positive"));
    }
    if rho1.norm() >= 1.0 || rho2.norm() >= 1.0 {
        return Err(Error::validation(format!(
            "Gauss-Markov one-step correlations must be contractive \
             (|rho| < 1), got |rho1| = {:.6}, |rho2| = {:.6}",
            rho1.norm(),
            rho2.norm()
        )));
    }
    Ok(())
}

/// Covariance `E[h_a conj(h_b)]` of the symbolwise Gauss-Markov process at
/// 0-based absolute symbol positions: the product of one-step coefficients
/// along the path, `rho1` per block boundary crossed and `rho2` per step
/// inside a block.
fn block_gm_covariance(t: usize, rho1: C64, rho2: C64, a: usize, b: usize) -> C64 {
    if a < b {
        return block_gm_covariance(t, rho1, rho2, b, a).conj();
    }
    let boundaries = (a / t - b / t) as u32;
    let inner = (a - b) as u32 - boundaries;
    rho1.powu(boundaries) * rho2.powu(inner)
}

// ---------------------------------------------------------------------------
// Spectral models
// ---------------------------------------------------------------------------

/// A fading-process model with a computable matrix spectral density.
///
/// Evaluation maps `w in [-pi, pi]` to the `T x T` Hermitian PSD matrix
/// `S(e^{jw})`; analytic kinds also expose exact symbol covariances for
/// prediction and simulation.
#[derive(Debug, Clone)]
pub enum SpectralModel {
    /// Scalar process (`T = 1`).
    Scalar(ScalarSpectrum),
    /// Symbolwise Gauss-Markov with boundary coefficient `rho1` and
    /// within-block coefficient `rho2`; evaluated in closed form.
    BlockGaussMarkov {
        /// Block length.
        t: usize,
        /// One-step correlation across block boundaries.
        rho1: C64,
        /// One-step correlation inside a block.
        rho2: C64,
    },
    /// Fading constant within each block; `inner` is the spectrum of the
    /// block-level scalar process, so every entry of `S(w)` equals
    /// `inner(w)`.
    ConstantWithinBlock {
        /// Block length.
        t: usize,
        /// Spectrum of the per-block fading value.
        inner: ScalarSpectrum,
    },
    /// Truncated Fourier sum over a stored correlation sequence.
    TruncatedFourier(CorrelationSequence),
    /// Spectral density known only through samples `(w, S(w))`; evaluation
    /// interpolates linearly in `w`, and covariances are unavailable.
    ExplicitGrid {
        /// Block length.
        t: usize,
        /// Samples sorted by frequency, covering `[-pi, pi]`.
        points: Vec<(f64, DMatrix<C64>)>,
    },
}

/// Scalar Gauss-Markov model `s(w) = (1-|rho|^2)/(1-2Re(rho e^{-jw})+|rho|^2)`.
pub fn scalar_gauss_markov(rho: C64) -> Result<SpectralModel> {
    if rho.norm() >= 1.0 {
        return Err(Error::validation(format!(
            "Gauss-Markov model requires |rho| < 1 for an integrable \
             spectrum, got |rho| = {:.6}",
            rho.norm()
        )));
    }
    Ok(SpectralModel::Scalar(ScalarSpectrum::GaussMarkov { rho }))
}

/// Wraps a validated correlation sequence as a spectral model, rejecting
/// sequences whose truncated Fourier sum leaves the PSD cone: the minimum
/// eigenvalue over a 2048-point frequency grid must be at least `-1e-8`.
pub fn from_correlation(corr: CorrelationSequence) -> Result<SpectralModel> {
    let model = SpectralModel::TruncatedFourier(corr);
    validate_psd_on_grid(&model, PSD_GRID, PSD_TOLERANCE)?;
    Ok(model)
}

/// Checks Hermitian-ness and positive semidefiniteness of `model` on a
/// uniform grid of `points` frequencies.
pub fn validate_psd_on_grid(model: &SpectralModel, points: usize, tol: f64) -> Result<()> {
    for k in 0..points {
        let omega = -PI + 2.0 * PI * k as f64 / points as f64;
        let s = model.eval(omega);
        check_hermitian(&s, 1e-8)?;
        let min_eig = hermitian_eigenvalues(&s).first().copied().unwrap_or(0.0);
        if min_eig < -tol {
            return Err(Error::validation(format!(
                "spectral density must be positive semidefinite: minimum \
                 eigenvalue {min_eig:.3e} at omega = {omega:.6} (truncation \
                 produced a non-PSD model)"
            )));
        }
    }
    Ok(())
}

impl SpectralModel {
    /// Block-Gauss-Markov model evaluated through its closed-form spectral
    /// density (see [`SpectralModel::eval`]).  `|rho1| < 1` keeps the
    /// block-to-block recursion contractive; `|rho2| = 1` is allowed and
    /// degenerates to constant-within-block fading.
    pub fn block_gauss_markov(t: usize, rho1: C64, rho2: C64) -> Result<SpectralModel> {
        if t == 0 {
            return Err(Error::validation("block length T must be positive"));
        }
        if rho1.norm() >= 1.0 || rho2.norm() > 1.0 {
            return Err(Error::validation(format!(
                "block Gauss-Markov requires |rho1| < 1 and |rho2| <= 1, \
                 got |rho1| = {:.6}, |rho2| = {:.6}",
                rho1.norm(),
                rho2.norm()
            )));
        }
        Ok(SpectralModel::BlockGaussMarkov { t, rho1, rho2 })
    }

    /// Constant-within-block model with the given block-level spectrum.
    pub fn constant_within_block(t: usize, inner: ScalarSpectrum) -> Result<SpectralModel> {
        if t == 0 {
            return Err(Error::validation("block length T must be positive"));
        }
        Ok(SpectralModel::ConstantWithinBlock { t, inner })
    }

    /// Grid-sampled model; `points` must be sorted, within `[-pi, pi]`, and
    /// contain at least two samples.
    pub fn explicit_grid(t: usize, points: Vec<(f64, DMatrix<C64>)>) -> Result<SpectralModel> {
        if t == 0 {
            return Err(Error::validation("block length T must be positive"));
        }
        if points.len() < 2 {
            return Err(Error::validation(
                "explicit grid needs at least two frequency samples",
            ));
        }
        for pair in points.windows(2) {
            if pair[1].0 <= pair[0].0 {
                return Err(Error::validation(
                    "explicit grid frequencies must be strictly increasing",
                ));
            }
        }
        for (omega, m) in &points {
            if !(-PI - 1e-9..=PI + 1e-9).contains(omega) {
                return Err(Error::validation(format!(
                    "explicit grid frequencies must lie in [-pi, pi], got {omega}"
                )));
            }
            if m.nrows() != t || m.ncols() != t {
                return Err(Error::validation(format!(
                    "explicit grid matrices must be {t}x{t}, got {}x{}",
                    m.nrows(),
                    m.ncols()
                )));
            }
            check_hermitian(m, 1e-8)?;
        }
        Ok(SpectralModel::ExplicitGrid { t, points })
    }

    /// Block length `T` of the vector process.
    pub fn block_len(&self) -> usize {
        match self {
            SpectralModel::Scalar(_) => 1,
            SpectralModel::BlockGaussMarkov { t, .. } => *t,
            SpectralModel::ConstantWithinBlock { t, .. } => *t,
            SpectralModel::TruncatedFourier(corr) => corr.block_len(),
            SpectralModel::ExplicitGrid { t, .. } => *t,
        }
    }

    /// The matrix spectral density `S(e^{jw})`.
    ///
    /// For the block-Gauss-Markov kind this uses the rank-one structure of
    /// the block recursion: with `v_p = rho1 rho2^p`, `lambda = rho1
    /// rho2^{T-1}` and `g(w) = e^{-jw}/(1 - lambda e^{-jw})`,
    /// `S(w) = R(0) + g(w) B R(0) + (g(w) B R(0))^H` where `(B R(0))[p, q] =
    /// v_p R(0)[T-1, q]`.
    pub fn eval(&self, omega: f64) -> DMatrix<C64> {
        match self {
            SpectralModel::Scalar(s) => {
                DMatrix::from_element(1, 1, Complex::new(s.value(omega), 0.0))
            }
            SpectralModel::BlockGaussMarkov { t, rho1, rho2 } => {
                let t = *t;
                let r0 = DMatrix::from_fn(t, t, |p, q| block_gm_covariance(t, *rho1, *rho2, p, q));
                let v: Vec<C64> = (0..t).map(|p| rho1 * rho2.powu(p as u32)).collect();
                let lambda = rho1 * rho2.powu((t - 1) as u32);
                let phase = Complex::new(0.0, -omega).exp();
                let g = phase / (Complex::new(1.0, 0.0) - lambda * phase);
                let br0 = DMatrix::from_fn(t, t, |p, q| v[p] * r0[(t - 1, q)]);
                let cross = br0.map(|x| x * g);
                &r0 + &cross + cross.adjoint()
            }
            SpectralModel::ConstantWithinBlock { t, inner } => {
                DMatrix::from_element(*t, *t, Complex::new(inner.value(omega), 0.0))
            }
            SpectralModel::TruncatedFourier(corr) => corr.eval(omega),
            SpectralModel::ExplicitGrid { points, .. } => {
                let w = omega.clamp(points[0].0, points[points.len() - 1].0);
                let idx = points.partition_point(|(x, _)| *x <= w).max(1) - 1;
                let idx = idx.min(points.len() - 2);
                let (w0, ref m0) = points[idx];
                let (w1, ref m1) = points[idx + 1];
                let frac = if w1 > w0 { (w - w0) / (w1 - w0) } else { 0.0 };
                m0.map(|x| x * Complex::new(1.0 - frac, 0.0))
                    + m1.map(|x| x * Complex::new(frac, 0.0))
            }
        }
    }

    /// Covariance `E[h_a conj(h_b)]` between absolute (0-based) symbol
    /// positions of the scalar fading sequence.
    ///
    /// Unavailable for grid-sampled models, whose correlations are not
    /// determined by finitely many frequency samples.
    pub fn symbol_covariance(&self, a: usize, b: usize) -> Result<C64> {
        match self {
            SpectralModel::Scalar(s) => Ok(s.correlation(a as i64 - b as i64)),
            SpectralModel::BlockGaussMarkov { t, rho1, rho2 } => {
                Ok(block_gm_covariance(*t, *rho1, *rho2, a, b))
            }
            SpectralModel::ConstantWithinBlock { t, inner } => {
                Ok(inner.correlation(a as i64 / *t as i64 - b as i64 / *t as i64))
            }
            SpectralModel::TruncatedFourier(corr) => {
                let t = corr.block_len() as i64;
                let (ba, pa) = (a as i64 / t, a as i64 % t);
                let (bb, pb) = (b as i64 / t, b as i64 % t);
                Ok(corr.lag(ba - bb)[(pa as usize, pb as usize)])
            }
            SpectralModel::ExplicitGrid { .. } => Err(Error::unsupported(
                "symbol covariances are not determined by a finite frequency \
                 grid; use an analytic or correlation-based model",
            )),
        }
    }

    /// Covariance matrix of the first `n` symbols `h_0 .. h_{n-1}`.
    pub fn covariance_matrix(&self, n: usize) -> Result<DMatrix<C64>> {
        let mut cov = DMatrix::zeros(n, n);
        for a in 0..n {
            for b in 0..=a {
                let v = self.symbol_covariance(a, b)?;
                cov[(a, b)] = v;
                cov[(b, a)] = v.conj();
            }
        }
        Ok(cov)
    }

    /// The scalar spectrum when this is a `T = 1` model.
    pub fn scalar_spectrum(&self) -> Option<&ScalarSpectrum> {
        match self {
            SpectralModel::Scalar(s) => Some(s),
            SpectralModel::ConstantWithinBlock { t: 1, inner } => Some(inner),
            _ => None,
        }
    }

    /// Block length and inner spectrum when the model is constant within
    /// blocks (including scalar models, with `T = 1`).
    pub fn constant_block_parts(&self) -> Option<(usize, &ScalarSpectrum)> {
        match self {
            SpectralModel::Scalar(s) => Some((1, s)),
            SpectralModel::ConstantWithinBlock { t, inner } => Some((*t, inner)),
            _ => None,
        }
    }

    /// Short human-readable description for output manifests.
    pub fn describe(&self) -> String {
        match self {
            SpectralModel::Scalar(ScalarSpectrum::GaussMarkov { rho }) => {
                format!("scalar_gauss_markov(rho={rho})")
            }
            SpectralModel::Scalar(ScalarSpectrum::Piecewise(p)) => {
                format!("piecewise({} segments)", p.segments().len())
            }
            SpectralModel::BlockGaussMarkov { t, rho1, rho2 } => {
                format!("block_gauss_markov(T={t}, rho1={rho1}, rho2={rho2})")
            }
            SpectralModel::ConstantWithinBlock { t, .. } => {
                format!("constant_within_block(T={t})")
            }
            SpectralModel::TruncatedFourier(corr) => format!(
                "correlation(T={}, max_lag={})",
                corr.block_len(),
                corr.max_lag()
            ),
            SpectralModel::ExplicitGrid { t, points } => {
                format!("explicit_grid(T={t}, {} points)", points.len())
            }
        }
    }
}

// ---------------------------------------------------------------------------
// The three-level spectrum family
// ---------------------------------------------------------------------------

/// Smallest admissible `theta` for [`s_theta_family`] at zero-set measure
/// `alpha`: below it the third level turns negative or the middle band
/// vanishes.
pub fn theta_min(alpha: f64) -> f64 {
    let width = 2.0 * PI - alpha;
    if width * width < 8.0 * PI {
        1.0 / width
    } else {
        (width + (width * width - 8.0 * PI).sqrt()) / (4.0 * PI)
    }
}

/// Three-level spectrum with zero-set measure `alpha`: zero on
/// `|w| <= alpha/2`, level `1/theta` on the middle band, and a tall segment
/// of width `1/(2 theta)` near `|w| = pi` absorbing the remaining mass so
/// the unit-variance normalization holds exactly.
///
/// Requires `theta >= theta_min(alpha)`.
pub fn s_theta_family(alpha: f64, theta: f64) -> Result<ScalarPiecewiseSpectrum> {
    if !(0.0..2.0 * PI).contains(&alpha) {
        return Err(Error::validation(format!(
            "zero-set measure must lie in [0, 2pi), got {alpha}"
        )));
    }
    let floor = theta_min(alpha);
    if theta < floor - 1e-12 {
        return Err(Error::validation(format!(
            "three-level family requires theta >= {floor:.6} at alpha = \
             {alpha:.6}; below it the top level turns negative or the middle \
             band vanishes (got theta = {theta})"
        )));
    }
    let split = PI - 1.0 / (2.0 * theta);
    let top = (2.0 * PI * theta * theta - 2.0 * PI * theta + alpha * theta + 1.0) / theta;
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
        hi: split,
        level: 1.0 / theta,
    });
    segments.push(SpectrumSegment {
        lo: split,
        hi: PI,
        level: top,
    });
    ScalarPiecewiseSpectrum::new(segments)
}

// ---------------------------------------------------------------------------
// JSON schema
// ---------------------------------------------------------------------------

/// Complex number in model files: either a bare real number or an
/// `{"re": ..., "im": ...}` pair.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct JsonComplex {
    /// Real part.
    pub re: f64,
    /// Imaginary part.
    pub im: f64,
}

impl<'de> Deserialize<'de> for JsonComplex {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Bare(f64),
            Pair {
                re: f64,
                #[serde(default)]
                im: f64,
            },
        }
        Ok(match Raw::deserialize(d)? {
            Raw::Bare(re) => JsonComplex { re, im: 0.0 },
            Raw::Pair { re, im } => JsonComplex { re, im },
        })
    }
}

impl From<JsonComplex> for C64 {
    fn from(j: JsonComplex) -> C64 {
        Complex::new(j.re, j.im)
    }
}

impl From<C64> for JsonComplex {
    fn from(c: C64) -> JsonComplex {
        JsonComplex { re: c.re, im: c.im }
    }
}

/// On-disk model description, tagged by `kind`.  Angles are radians, complex
/// numbers are `{re, im}` pairs (bare reals accepted on input).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelSpec {
    /// `{"kind":"scalar_gauss_markov","rho":{"re":0.9,"im":0.0}}`
    ScalarGaussMarkov {
        /// One-step correlation.
        rho: JsonComplex,
    },
    /// `{"kind":"block_gauss_markov","T":2,"rho1":0.3,"rho2":0.8}`
    BlockGaussMarkov {
        /// Block length.
        #[serde(rename = "T")]
        t: usize,
        /// Boundary one-step correlation.
        rho1: JsonComplex,
        /// Within-block one-step correlation.
        rho2: JsonComplex,
    },
    /// `{"kind":"piecewise","segments":[{"lo":0.0,"hi":1.57,"level":0.0},...]}`
    Piecewise {
        /// Half-axis segments tiling `[0, pi]`.
        segments: Vec<SpectrumSegment>,
    },
    /// `{"kind":"correlation","T":3,"lags":[{"i":0,"matrix":[[...]]}]}`
    Correlation {
        /// Block length.
        #[serde(rename = "T")]
        t: usize,
        /// Stored lags; each matrix is row-major `T x T`.
        lags: Vec<JsonLag>,
    },
    /// `{"kind":"constant_within_block","T":3,"inner":{...scalar model...}}`
    ConstantWithinBlock {
        /// Block length.
        #[serde(rename = "T")]
        t: usize,
        /// Scalar model for the per-block value (`scalar_gauss_markov` or
        /// `piecewise`).
        inner: Box<ModelSpec>,
    },
    /// `{"kind":"explicit_grid","T":2,"points":[{"omega":-3.14,"matrix":[[...]]}]}`
    ExplicitGrid {
        /// Block length.
        #[serde(rename = "T")]
        t: usize,
        /// Frequency samples.
        points: Vec<JsonGridPoint>,
    },
}

/// One stored lag in a `correlation` model file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct JsonLag {
    /// Lag index `i >= 0`.
    pub i: usize,
    /// Row-major `T x T` matrix `R(i)`.
    pub matrix: Vec<Vec<JsonComplex>>,
}

/// One frequency sample in an `explicit_grid` model file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct JsonGridPoint {
    /// Frequency in radians, in `[-pi, pi]`.
    pub omega: f64,
    /// Row-major `T x T` Hermitian matrix `S(omega)`.
    pub matrix: Vec<Vec<JsonComplex>>,
}

fn json_matrix(t: usize, rows: &[Vec<JsonComplex>], what: &str) -> Result<DMatrix<C64>> {
    if rows.len() != t || rows.iter().any(|r| r.len() != t) {
        return Err(Error::validation(format!(
            "{what} must be a {t}x{t} matrix (row-major rows of equal length)"
        )));
    }
    Ok(DMatrix::from_fn(t, t, |r, c| rows[r][c].into()))
}

impl ModelSpec {
    /// Validates the description and builds the corresponding model.
    pub fn build(&self) -> Result<SpectralModel> {
        match self {
            ModelSpec::ScalarGaussMarkov { rho } => scalar_gauss_markov((*rho).into()),
            ModelSpec::BlockGaussMarkov { t, rho1, rho2 } => {
                SpectralModel::block_gauss_markov(*t, (*rho1).into(), (*rho2).into())
            }
            ModelSpec::Piecewise { segments } => Ok(SpectralModel::Scalar(
                ScalarSpectrum::Piecewise(ScalarPiecewiseSpectrum::new(segments.clone())?),
            )),
            ModelSpec::Correlation { t, lags } => {
                let mut sorted = lags.clone();
                sorted.sort_by_key(|l| l.i);
                for (expect, lag) in sorted.iter().enumerate() {
                    if lag.i != expect {
                        return Err(Error::validation(format!(
                            "correlation lags must cover i = 0..max_lag \
                             without gaps; missing or duplicate i = {expect}"
                        )));
                    }
                }
                let matrices = sorted
                    .iter()
                    .map(|l| json_matrix(*t, &l.matrix, &format!("R({})", l.i)))
                    .collect::<Result<Vec<_>>>()?;
                from_correlation(CorrelationSequence::new(*t, matrices)?)
            }
            ModelSpec::ConstantWithinBlock { t, inner } => {
                let scalar = match inner.build()? {
                    SpectralModel::Scalar(s) => s,
                    _ => {
                        return Err(Error::validation(
                            "constant_within_block inner model must be scalar \
                             (scalar_gauss_markov or piecewise)",
                        ))
                    }
                };
                SpectralModel::constant_within_block(*t, scalar)
            }
            ModelSpec::ExplicitGrid { t, points } => {
                let mut parsed = Vec::with_capacity(points.len());
                for p in points {
                    parsed.push((p.omega, json_matrix(*t, &p.matrix, "grid sample")?));
                }
                parsed.sort_by(|a, b| a.0.total_cmp(&b.0));
                SpectralModel::explicit_grid(*t, parsed)
            }
        }
    }
}

/// Parses a JSON model description and builds the model.  Syntax errors are
/// reported with line/column positions; schema and validation problems name
/// the violated invariant.
pub fn parse_model(text: &str) -> Result<SpectralModel> {
    let spec: ModelSpec = serde_json::from_str(text)?;
    spec.build()
}

/// Reads and parses a model file.
pub fn load_model(path: &Path) -> Result<SpectralModel> {
    let text = std::fs::read_to_string(path)?;
    parse_model(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn c(re: f64, im: f64) -> C64 {
        Complex::new(re, im)
    }

    fn gm(rho: f64) -> ScalarSpectrum {
        ScalarSpectrum::GaussMarkov { rho: c(rho, 0.0) }
    }

    #[test]
    fn gauss_markov_spectrum_values_match_hand_computation() {
        // rho = 0.9: s(0) = 0.19/0.01 = 19, s(pi) = 0.19/3.61 = 0.0526315...
        let s = gm(0.9);
        assert_relative_eq!(s.value(0.0), 19.0, max_relative = 1e-12);
        assert_relative_eq!(s.value(PI), 0.19 / 3.61, max_relative = 1e-12);
        // rho = 0 is the flat spectrum.
        assert_relative_eq!(gm(0.0).value(1.234), 1.0, max_relative = 1e-15);
    }

    #[test]
    fn gauss_markov_log_moment_matches_quadrature() {
        // Closed form vs direct periodic integration for s + c.
        let rho = 0.5f64;
        let cadd = 0.1f64;
        let s = gm(rho);
        let quad = crate::quad::integrate_periodic(
            |w| (s.value(w) + cadd).ln(),
            1e-12,
            1 << 18,
        )
        .expect("analytic integrand");
        assert_relative_eq!(
            s.log_moment(cadd),
            quad.value / (2.0 * PI),
            epsilon = 1e-10
        );
        // c = 0 recovers the one-step prediction error log(1 - rho^2).
        assert_relative_eq!(s.log_moment(0.0), (1.0 - rho * rho).ln(), epsilon = 1e-14);
    }

    #[test]
    fn piecewise_spectrum_enforces_tiling_and_normalization() {
        // Valid: zero on [0, pi/2], level 2 on [pi/2, pi]; mean = 1.
        let ok = ScalarPiecewiseSpectrum::new(vec![
            SpectrumSegment { lo: 0.0, hi: PI / 2.0, level: 0.0 },
            SpectrumSegment { lo: PI / 2.0, hi: PI, level: 2.0 },
        ])
        .expect("normalized spectrum");
        assert_relative_eq!(ok.mean(), 1.0, epsilon = 1e-14);
        assert_eq!(ok.value(0.3), 0.0);
        assert_eq!(ok.value(-2.0), 2.0, "mirror symmetry");
        assert_relative_eq!(ok.zero_measure(), PI, epsilon = 1e-12);

        // Gap in the tiling is rejected.
        let gap = ScalarPiecewiseSpectrum::new(vec![
            SpectrumSegment { lo: 0.0, hi: 1.0, level: 1.0 },
            SpectrumSegment { lo: 1.5, hi: PI, level: 1.0 },
        ]);
        assert!(gap.is_err(), "gaps must be rejected");

        // Wrong normalization is rejected.
        let bad = ScalarPiecewiseSpectrum::new(vec![SpectrumSegment {
            lo: 0.0,
            hi: PI,
            level: 2.0,
        }]);
        assert!(bad.is_err(), "mean 2 must be rejected");
    }

    #[test]
    fn piecewise_correlations_are_exact_segment_sums() {
        // Flat spectrum: r_0 = 1, r_k = 0 for k != 0.
        let flat = ScalarPiecewiseSpectrum::new(vec![SpectrumSegment {
            lo: 0.0,
            hi: PI,
            level: 1.0,
        }])
        .unwrap();
        assert_relative_eq!(flat.correlation(0), 1.0, epsilon = 1e-15);
        assert!(flat.correlation(3).abs() < 1e-15);

        // Band-limited spectrum: level 2 on |w| <= pi/2 gives
        // r_k = (2/pi) sin(k pi/2)/k.
        let band = ScalarPiecewiseSpectrum::new(vec![
            SpectrumSegment { lo: 0.0, hi: PI / 2.0, level: 2.0 },
            SpectrumSegment { lo: PI / 2.0, hi: PI, level: 0.0 },
        ])
        .unwrap();
        assert_relative_eq!(band.correlation(1), 2.0 / PI, epsilon = 1e-14);
        assert!(band.correlation(2).abs() < 1e-15);
        assert_relative_eq!(band.correlation(3), -2.0 / (3.0 * PI), epsilon = 1e-14);
    }

    #[test]
    fn support_arcs_merge_across_the_origin() {
        let band = ScalarPiecewiseSpectrum::new(vec![
            SpectrumSegment { lo: 0.0, hi: PI / 2.0, level: 2.0 },
            SpectrumSegment { lo: PI / 2.0, hi: PI, level: 0.0 },
        ])
        .unwrap();
        let arcs = band.support_arcs();
        assert_eq!(arcs.len(), 1, "symmetric band around 0 is one arc");
        assert_relative_eq!(arcs[0].0, -PI / 2.0, epsilon = 1e-12);
        assert_relative_eq!(arcs[0].1, PI / 2.0, epsilon = 1e-12);

        let ring = ScalarPiecewiseSpectrum::new(vec![
            SpectrumSegment { lo: 0.0, hi: PI / 2.0, level: 0.0 },
            SpectrumSegment { lo: PI / 2.0, hi: PI, level: 2.0 },
        ])
        .unwrap();
        let arcs = ring.support_arcs();
        assert_eq!(arcs.len(), 2, "two mirrored arcs away from 0");
    }

    #[test]
    fn theta_family_levels_and_threshold() {
        // alpha = pi, theta = 2: top level (8pi - 4pi + 2pi + 1)/2.
        let s = s_theta_family(PI, 2.0).expect("valid parameters");
        assert_relative_eq!(s.mean(), 1.0, epsilon = 1e-13);
        assert_eq!(s.value(0.5), 0.0);
        assert_relative_eq!(s.value(2.0), 0.5, epsilon = 1e-13);
        assert_relative_eq!(s.value(PI - 0.1), (6.0 * PI + 1.0) / 2.0, epsilon = 1e-12);

        // Threshold: alpha = pi has (2pi - alpha)^2 = pi^2 < 8pi, so
        // theta_min = 1/pi.
        assert_relative_eq!(theta_min(PI), 1.0 / PI, epsilon = 1e-14);
        assert!(s_theta_family(PI, 1.0 / PI - 0.01).is_err());

        // alpha = 0 has (2pi)^2 > 8pi: quadratic-root branch.
        let t0 = theta_min(0.0);
        assert_relative_eq!(
            t0,
            (2.0 * PI + (4.0 * PI * PI - 8.0 * PI).sqrt()) / (4.0 * PI),
            epsilon = 1e-14
        );
        assert!(s_theta_family(0.0, t0 - 0.01).is_err());
        let ok = s_theta_family(0.0, t0 + 0.01).expect("just above threshold");
        assert_relative_eq!(ok.mean(), 1.0, epsilon = 1e-13);
        assert!(ok.max_level() >= 0.0);
    }

    #[test]
    fn block_gauss_markov_correlations_are_path_products() {
        // T = 2, rho1 = 0.3 (boundary), rho2 = 0.8 (within).
        let corr = block_gauss_markov(2, c(0.3, 0.0), c(0.8, 0.0), 4).unwrap();
        let r0 = corr.lag(0);
        assert_relative_eq!(r0[(0, 1)].re, 0.8, epsilon = 1e-15);
        assert_relative_eq!(r0[(1, 0)].re, 0.8, epsilon = 1e-15);
        let r1 = corr.lag(1);
        // Path from block-0 symbol q to block-1 symbol p crosses one
        // boundary and (T-1) + p - q inner steps.
        assert_relative_eq!(r1[(0, 1)].re, 0.3, epsilon = 1e-15);
        assert_relative_eq!(r1[(0, 0)].re, 0.3 * 0.8, epsilon = 1e-15);
        assert_relative_eq!(r1[(1, 1)].re, 0.3 * 0.8, epsilon = 1e-15);
        assert_relative_eq!(r1[(1, 0)].re, 0.3 * 0.8 * 0.8, epsilon = 1e-15);

        // Independent blocks when the boundary coefficient vanishes.
        let indep = block_gauss_markov(2, c(0.0, 0.0), c(0.5, 0.0), 3).unwrap();
        assert!(indep.lag(1).iter().all(|v| v.norm() == 0.0));

        // T = 1 degenerates to the scalar Gauss-Markov correlation rho^|i|.
        let scalar = block_gauss_markov(1, c(0.6, 0.0), c(0.6, 0.0), 5).unwrap();
        assert_relative_eq!(scalar.lag(3)[(0, 0)].re, 0.6f64.powi(3), epsilon = 1e-15);
    }

    #[test]
    fn block_gauss_markov_closed_form_matches_truncated_fourier() {
        // The rank-one closed form of S(w) must agree with the brute-force
        // truncated Fourier sum once the truncation tail is negligible.
        let (t, r1, r2) = (3, c(0.3, 0.1), c(0.8, 0.0));
        let analytic = SpectralModel::block_gauss_markov(t, r1, r2).unwrap();
        let truncated = SpectralModel::TruncatedFourier(block_gauss_markov(t, r1, r2, 400).unwrap());
        for &omega in &[-2.5, -1.0, 0.0, 0.7, 3.0] {
            let a = analytic.eval(omega);
            let b = truncated.eval(omega);
            let err = (&a - &b).iter().map(|v| v.norm()).fold(0.0, f64::max);
            assert!(
                err < 1e-10,
                "closed form and truncated sum differ by {err:.2e} at omega = {omega}"
            );
        }
    }

    #[test]
    fn symbol_covariances_follow_block_paths() {
        let model = SpectralModel::block_gauss_markov(2, c(0.3, 0.0), c(0.8, 0.0)).unwrap();
        // Positions 1 (block 0, last) and 2 (block 1, first): one boundary.
        assert_relative_eq!(model.symbol_covariance(2, 1).unwrap().re, 0.3, epsilon = 1e-15);
        // Positions 0 and 3: one boundary, two inner steps.
        assert_relative_eq!(
            model.symbol_covariance(3, 0).unwrap().re,
            0.3 * 0.64,
            epsilon = 1e-15
        );
        // Hermitian symmetry of the covariance.
        let fwd = model.symbol_covariance(5, 2).unwrap();
        let bwd = model.symbol_covariance(2, 5).unwrap();
        assert_relative_eq!(fwd.re, bwd.re, epsilon = 1e-15);
        assert_relative_eq!(fwd.im, -bwd.im, epsilon = 1e-15);
    }

    #[test]
    fn constant_within_block_replicates_the_inner_spectrum() {
        let model = SpectralModel::constant_within_block(3, gm(0.7)).unwrap();
        let s = model.eval(1.1);
        let want = gm(0.7).value(1.1);
        for v in s.iter() {
            assert_relative_eq!(v.re, want, epsilon = 1e-13);
            assert!(v.im.abs() < 1e-15);
        }
        // Covariance depends only on the block index.
        let within = model.symbol_covariance(1, 0).unwrap();
        assert_relative_eq!(within.re, 1.0, epsilon = 1e-15);
        let across = model.symbol_covariance(3, 2).unwrap();
        assert_relative_eq!(across.re, 0.7, epsilon = 1e-15);
    }

    #[test]
    fn from_correlation_validates_the_invariants() {
        // R(0) = I is the white vector process.
        let white = CorrelationSequence::new(2, vec![DMatrix::identity(2, 2)]).unwrap();
        let model = from_correlation(white).unwrap();
        let s = model.eval(0.4);
        assert_relative_eq!(s[(0, 0)].re, 1.0, epsilon = 1e-15);
        assert!(s[(0, 1)].norm() < 1e-15);

        // Diagonal entry != 1 violates unit variance.
        let mut bad = DMatrix::identity(2, 2);
        bad[(1, 1)] = c(0.9, 0.0);
        assert!(CorrelationSequence::new(2, vec![bad]).is_err());

        // Entry modulus > 1 cannot be a correlation.
        let mut toobig = DMatrix::identity(2, 2);
        toobig[(0, 1)] = c(1.5, 0.0);
        toobig[(1, 0)] = c(1.5, 0.0);
        assert!(CorrelationSequence::new(2, vec![toobig]).is_err());
    }

    #[test]
    fn truncated_scalar_gauss_markov_approaches_the_closed_form() {
        // T = 1, R(i) = rho^i with rho = 0.5 truncated at lag 200:
        // S(0) = 3.0 within 1e-6 (geometric series).
        let rho: f64 = 0.5;
        let lags: Vec<DMatrix<C64>> = (0..=200)
            .map(|i| DMatrix::from_element(1, 1, c(rho.powi(i), 0.0)))
            .collect();
        let corr = CorrelationSequence::new(1, lags).unwrap();
        let model = from_correlation(corr).unwrap();
        assert_relative_eq!(model.eval(0.0)[(0, 0)].re, 3.0, epsilon = 1e-6);

        // Max-norm error against the analytic spectrum decreases in the
        // truncation horizon (geometric decay).
        let exact = gm(rho);
        let mut prev = f64::INFINITY;
        for max_lag in [5usize, 10, 20, 40] {
            let lags: Vec<DMatrix<C64>> = (0..=max_lag)
                .map(|i| DMatrix::from_element(1, 1, c(rho.powi(i as i32), 0.0)))
                .collect();
            let m = SpectralModel::TruncatedFourier(CorrelationSequence::new(1, lags).unwrap());
            let err = (0..64)
                .map(|k| {
                    let w = -PI + 2.0 * PI * k as f64 / 64.0;
                    (m.eval(w)[(0, 0)].re - exact.value(w)).abs()
                })
                .fold(0.0, f64::max);
            assert!(
                err < prev,
                "truncation error must decrease monotonically: {err} !< {prev}"
            );
            prev = err;
        }
    }

    #[test]
    fn psd_grid_validation_rejects_indefinite_sums() {
        // R(0) = I with a huge R(1) pushes the Fourier sum out of the PSD
        // cone at some frequency.
        let r0 = DMatrix::identity(1, 1);
        let r1 = DMatrix::from_element(1, 1, c(0.9, 0.0));
        let corr = CorrelationSequence::new(1, vec![r0, r1]).unwrap();
        let err = from_correlation(corr).unwrap_err();
        assert!(
            err.to_string().contains("positive semidefinite"),
            "message must name the violated invariant, got: {err}"
        );
    }

    #[test]
    fn model_json_round_trip_and_schema() {
        let gm_model =
            parse_model(r#"{"kind":"scalar_gauss_markov","rho":{"re":0.9,"im":0.0}}"#).unwrap();
        assert_eq!(gm_model.block_len(), 1);
        assert_relative_eq!(gm_model.eval(0.0)[(0, 0)].re, 19.0, max_relative = 1e-12);

        // Bare reals are accepted for complex fields.
        let bgm =
            parse_model(r#"{"kind":"block_gauss_markov","T":2,"rho1":0.3,"rho2":0.8}"#).unwrap();
        assert_eq!(bgm.block_len(), 2);

        let pw = parse_model(
            r#"{"kind":"piecewise","segments":[
                {"lo":0.0,"hi":1.5707963267948966,"level":0.0},
                {"lo":1.5707963267948966,"hi":3.141592653589793,"level":2.0}]}"#,
        )
        .unwrap();
        assert_eq!(pw.block_len(), 1);
        assert_eq!(pw.eval(0.5)[(0, 0)].re, 0.0);

        let corr = parse_model(
            r#"{"kind":"correlation","T":2,"lags":[
                {"i":0,"matrix":[[{"re":1},{"re":0.5}],[{"re":0.5},{"re":1}]]}]}"#,
        )
        .unwrap();
        assert_eq!(corr.block_len(), 2);

        let cwb = parse_model(
            r#"{"kind":"constant_within_block","T":3,
                "inner":{"kind":"scalar_gauss_markov","rho":0.5}}"#,
        )
        .unwrap();
        assert_eq!(cwb.block_len(), 3);

        // Unknown kind is a schema (validation) problem, not a parse error.
        let err = parse_model(r#"{"kind":"mystery"}"#).unwrap_err();
        assert!(matches!(err, Error::Validation(_)));

        // Broken JSON reports a position.
        let err = parse_model(r#"{"kind": "#).unwrap_err();
        assert!(matches!(err, Error::MalformedInput { .. }));
    }

    #[test]
    fn invalid_parameters_are_rejected_with_named_hypotheses() {
        let err = scalar_gauss_markov(c(1.0, 0.0)).unwrap_err();
        assert!(err.to_string().contains("|rho| < 1"));
        assert!(SpectralModel::block_gauss_markov(0, c(0.1, 0.0), c(0.1, 0.0)).is_err());
        assert!(block_gauss_markov(2, c(0.5, 0.0), c(1.0, 0.0), 3).is_err());
        // The analytic block model tolerates |rho2| = 1 (degenerates to
        // constant-within-block fading).
        assert!(SpectralModel::block_gauss_markov(2, c(0.5, 0.0), c(1.0, 0.0)).is_ok());
    }

    #[test]
    fn explicit_grid_interpolates_between_samples() {
        let points = vec![
            (-PI, DMatrix::from_element(1, 1, c(1.0, 0.0))),
            (0.0, DMatrix::from_element(1, 1, c(3.0, 0.0))),
            (PI, DMatrix::from_element(1, 1, c(1.0, 0.0))),
        ];
        let model = SpectralModel::explicit_grid(1, points).unwrap();
        assert_relative_eq!(model.eval(-PI / 2.0)[(0, 0)].re, 2.0, epsilon = 1e-12);
        assert_relative_eq!(model.eval(0.0)[(0, 0)].re, 3.0, epsilon = 1e-12);
        assert!(model.symbol_covariance(1, 0).is_err(), "covariance undefined");
    }
}
