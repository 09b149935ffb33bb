//! Transfinite diameters of circular-arc sets, the codeword-scaling bound
//! they imply, and random-coding error exponents.
//!
//! When the achievable output phases of a channel are confined to a set `E`
//! of arcs on the unit circle, the number of reliably distinguishable
//! codewords is governed by the transfinite diameter `tau(E)`: `n`-point
//! Fekete configurations maximize the Vandermonde product
//! `V_n = prod_{i<k} |z_i - z_k|`, and `tau_n = V_n^{2/(n(n-1))}` decreases
//! to `tau(E)`.  For a single arc of length `theta` the limit is
//! `sin(theta/4)` in closed form; for arc unions the module computes Fekete
//! points by a projected Newton method and accelerates the slowly-converging
//! ladder `tau_n` with a least-squares fit of the known expansion of
//! `log V_n`.

use crate::error::{Error, Result};
use crate::quad::{gauss_laguerre_64, integrate, QuadOptions};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::f64::consts::PI;

const TWO_PI: f64 = 2.0 * PI;

/// One arc of the unit circle, parameterized by angle; `lo < hi` and the
/// length `hi - lo` is at most `2 pi`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Arc {
    /// Start angle, radians.
    pub lo: f64,
    /// End angle, radians.
    pub hi: f64,
}

impl Arc {
    /// Angular length of the arc.
    pub fn length(&self) -> f64 {
        self.hi - self.lo
    }
}

/// A disjoint union of arcs on the unit circle.
#[derive(Debug, Clone, Serialize)]
pub struct ArcSet {
    arcs: Vec<Arc>,
}

impl ArcSet {
    /// Builds an arc set from `(lo, hi)` pairs in radians, normalizing
    /// start angles into `[0, 2pi)` and rejecting overlapping arcs
    /// (touching endpoints are allowed).
    pub fn new(raw: Vec<(f64, f64)>) -> Result<Self> {
        if raw.is_empty() {
            return Err(Error::validation("arc set must contain at least one arc"));
        }
        let mut arcs = Vec::with_capacity(raw.len());
        for (lo, hi) in raw {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::validation(format!(
                    "arc endpoints must be finite with lo < hi, got {lo}:{hi}"
                )));
            }
            let len = hi - lo;
            if len > TWO_PI + 1e-12 {
                return Err(Error::validation(format!(
                    "arc {lo}:{hi} is longer than the full circle"
                )));
            }
            let start = lo.rem_euclid(TWO_PI);
            arcs.push(Arc {
                lo: start,
                hi: start + len.min(TWO_PI),
            });
        }
        arcs.sort_by(|a, b| a.lo.total_cmp(&b.lo));
        for pair in arcs.windows(2) {
            if pair[1].lo < pair[0].hi - 1e-12 {
                return Err(Error::validation(format!(
                    "arcs overlap between angles {:.6} and {:.6}; the set \
                     must be a disjoint union",
                    pair[1].lo, pair[0].hi
                )));
            }
        }
        if arcs.len() > 1 {
            let last = arcs.last().unwrap();
            if last.hi - TWO_PI > arcs[0].lo + 1e-12 {
                return Err(Error::validation(format!(
                    "arc ending at {:.6} wraps past the arc starting at {:.6}",
                    last.hi, arcs[0].lo
                )));
            }
        }
        Ok(ArcSet { arcs })
    }

    /// Parses `"lo:hi[,lo:hi]*"` with angles in radians.
    pub fn parse(text: &str) -> Result<Self> {
        let mut raw = Vec::new();
        for piece in text.split(',') {
            let piece = piece.trim();
            let (lo, hi) = piece.split_once(':').ok_or_else(|| {
                Error::validation(format!(
                    "arc '{piece}' is not of the form lo:hi (radians)"
                ))
            })?;
            let lo: f64 = lo.trim().parse().map_err(|_| {
                Error::validation(format!("arc start '{lo}' is not a number"))
            })?;
            let hi: f64 = hi.trim().parse().map_err(|_| {
                Error::validation(format!("arc end '{hi}' is not a number"))
            })?;
            raw.push((lo, hi));
        }
        ArcSet::new(raw)
    }

    /// The whole circle.
    pub fn full_circle() -> Self {
        ArcSet {
            arcs: vec![Arc { lo: 0.0, hi: TWO_PI }],
        }
    }

    /// The arcs, sorted by start angle.
    pub fn arcs(&self) -> &[Arc] {
        &self.arcs
    }

    /// Total angular length of the set.
    pub fn total_length(&self) -> f64 {
        self.arcs.iter().map(Arc::length).sum()
    }

    /// Closed-form transfinite diameter when the set is a single arc.
    pub fn single_arc_tau(&self) -> Option<f64> {
        if self.arcs.len() == 1 {
            Some(tau_arc(self.arcs[0].length()).expect("validated arc length"))
        } else {
            None
        }
    }
}

/// Transfinite diameter of a single arc of length `theta`: `sin(theta/4)`.
pub fn tau_arc(theta: f64) -> Result<f64> {
    if !(theta > 0.0 && theta <= TWO_PI + 1e-12) {
        return Err(Error::validation(format!(
            "arc length must lie in (0, 2pi], got {theta}"
        )));
    }
    Ok((theta.min(TWO_PI) / 4.0).sin())
}

/// `log V_n` of a point configuration on the circle:
/// `sum_{i<k} log(2 |sin((x_i - x_k)/2)|)`.
fn log_vandermonde(theta: &[f64]) -> f64 {
    let mut sum = 0.0;
    for i in 0..theta.len() {
        for k in 0..i {
            let half = 0.5 * (theta[i] - theta[k]);
            sum += (2.0 * half.sin().abs()).ln();
        }
    }
    sum
}

/// Distributes `n` points over the arcs proportionally to length, by the
/// largest-remainder rule.
fn allocate_counts(set: &ArcSet, n: usize) -> Vec<usize> {
    let total = set.total_length();
    let shares: Vec<f64> = set
        .arcs()
        .iter()
        .map(|a| n as f64 * a.length() / total)
        .collect();
    let mut counts: Vec<usize> = shares.iter().map(|s| s.floor() as usize).collect();
    let mut leftover = n - counts.iter().sum::<usize>();
    let mut order: Vec<usize> = (0..counts.len()).collect();
    order.sort_by(|&a, &b| {
        (shares[b] - shares[b].floor()).total_cmp(&(shares[a] - shares[a].floor()))
    });
    for &j in order.iter().cycle() {
        if leftover == 0 {
            break;
        }
        counts[j] += 1;
        leftover -= 1;
    }
    counts
}

/// Maximizes `log V_n` over the box `lo[i] <= theta[i] <= hi[i]` by a
/// projected Newton method with an active set at the arc endpoints.
///
/// The Hessian of `-log V_n` is a weighted graph Laplacian (weights
/// `1/(4 sin^2)`), so the reduced Newton system is solved with a small
/// ridge and a backtracking line search that clamps each point into its
/// arc; steps that fail to improve fall back to a damped gradient move.
fn maximize_in_box(theta: &mut [f64], lo: &[f64], hi: &[f64]) -> (f64, bool) {
    let n = theta.len();
    let mut f = log_vandermonde(theta);
    let mut converged = false;
    for _ in 0..300 {
        let mut g = vec![0.0; n];
        let mut lap = DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            for k in 0..n {
                if k == i {
                    continue;
                }
                let half = 0.5 * (theta[i] - theta[k]);
                g[i] += 0.5 / half.tan();
                let w = 0.25 / (half.sin() * half.sin());
                lap[(i, k)] = -w;
                lap[(i, i)] += w;
            }
        }
        let edge = 1e-12;
        let free: Vec<usize> = (0..n)
            .filter(|&i| {
                !((theta[i] <= lo[i] + edge && g[i] < 0.0)
                    || (theta[i] >= hi[i] - edge && g[i] > 0.0))
            })
            .collect();
        let gnorm = free.iter().map(|&i| g[i].abs()).fold(0.0, f64::max);
        if free.is_empty() || gnorm < 1e-9 * n as f64 {
            converged = true;
            break;
        }
        let m = free.len();
        let mut lff = DMatrix::<f64>::zeros(m, m);
        for (a, &i) in free.iter().enumerate() {
            for (b, &k) in free.iter().enumerate() {
                lff[(a, b)] = lap[(i, k)];
            }
        }
        let ridge = 1e-10 * (1.0 + lff.diagonal().amax());
        for a in 0..m {
            lff[(a, a)] += ridge;
        }
        let gf = DVector::from_iterator(m, free.iter().map(|&i| g[i]));
        let mut dir = vec![0.0; n];
        match lff.cholesky() {
            Some(ch) => {
                let d = ch.solve(&gf);
                for (a, &i) in free.iter().enumerate() {
                    dir[i] = d[a];
                }
            }
            None => {
                for &i in &free {
                    dir[i] = g[i] / (lap[(i, i)] + ridge);
                }
            }
        }
        let mut improved = false;
        let mut t = 1.0;
        for _ in 0..50 {
            let trial: Vec<f64> = (0..n)
                .map(|i| (theta[i] + t * dir[i]).clamp(lo[i], hi[i]))
                .collect();
            let ft = log_vandermonde(&trial);
            if ft.is_finite() && ft > f + 1e-14 {
                theta.copy_from_slice(&trial);
                f = ft;
                improved = true;
                break;
            }
            t *= 0.5;
        }
        if !improved {
            let scale = 1e-3 / (1.0 + gnorm);
            let mut t = 1.0;
            for _ in 0..40 {
                let trial: Vec<f64> = (0..n)
                    .map(|i| (theta[i] + t * scale * g[i]).clamp(lo[i], hi[i]))
                    .collect();
                let ft = log_vandermonde(&trial);
                if ft.is_finite() && ft > f + 1e-14 {
                    theta.copy_from_slice(&trial);
                    f = ft;
                    improved = true;
                    break;
                }
                t *= 0.5;
            }
        }
        if !improved {
            converged = true;
            break;
        }
    }
    (f, converged)
}

/// One multistart Fekete solve for a fixed point count.
fn fekete_points_once(
    set: &ArcSet,
    n: usize,
    restart: usize,
    rng: &mut ChaCha8Rng,
) -> (Vec<f64>, f64, bool) {
    let mut counts = allocate_counts(set, n);
    if restart > 0 && set.arcs().len() > 1 {
        // Explore neighboring allocations: move one point between arcs.
        let from = rng.gen_range(0..counts.len());
        let to = rng.gen_range(0..counts.len());
        if counts[from] > 0 && from != to {
            counts[from] -= 1;
            counts[to] += 1;
        }
    }
    let mut theta = Vec::with_capacity(n);
    let mut lo_bounds = Vec::with_capacity(n);
    let mut hi_bounds = Vec::with_capacity(n);
    for (arc, &c) in set.arcs().iter().zip(&counts) {
        for k in 0..c {
            let frac = (k as f64 + 0.5) / c as f64;
            let jitter = if restart == 0 {
                0.0
            } else {
                0.3 * (rng.gen::<f64>() - 0.5) / c as f64
            };
            theta.push(arc.lo + (frac + jitter).clamp(0.01 / c as f64, 1.0 - 0.01 / c as f64) * arc.length());
            lo_bounds.push(arc.lo);
            hi_bounds.push(arc.hi);
        }
    }
    let (f, converged) = maximize_in_box(&mut theta, &lo_bounds, &hi_bounds);
    (theta, f, converged)
}

/// One rung of the Fekete ladder.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct LadderEntry {
    /// Point count.
    pub n: usize,
    /// `tau_n = V_n^{2/(n(n-1))}` at the best configuration found.
    pub tau: f64,
}

/// Fekete computation across the ladder `m = 2..=n`.
#[derive(Debug, Clone, Serialize)]
pub struct FeketeResult {
    /// Largest point count solved.
    pub n: usize,
    /// Restarts per rung.
    pub restarts: usize,
    /// `tau_n` at the top of the ladder; an upper bound on the transfinite
    /// diameter, converging slowly from above.
    pub tau_n: f64,
    /// Ladder extrapolation of `tau` (needs `n >= 12`): least-squares fit
    /// of `log V_m = log(tau) m(m-1)/2 + (m/2) log m + a m + b log m + c`
    /// over the upper half of the ladder.
    pub tau_extrapolated: Option<f64>,
    /// Best configuration at the top rung, sorted by angle.
    pub points: Vec<f64>,
    /// Full ladder of `tau_m` values.
    pub ladder: Vec<LadderEntry>,
    /// Whether the top-rung Newton iteration reached its gradient
    /// tolerance in at least one restart.
    pub converged: bool,
}

/// Computes Fekete points and the transfinite-diameter ladder on an arc
/// set, with `restarts` randomized starts per rung seeded by `seed`.
pub fn tau_fekete(set: &ArcSet, n: usize, restarts: usize, seed: u64) -> Result<FeketeResult> {
    if n < 2 {
        return Err(Error::validation(format!(
            "the Vandermonde product needs at least two points, got n = {n}"
        )));
    }
    if restarts == 0 {
        return Err(Error::validation("at least one restart is required"));
    }
    let mut log_v = vec![f64::NEG_INFINITY; n + 1];
    let mut best_points = Vec::new();
    let mut top_converged = false;
    for m in 2..=n {
        let mut best = f64::NEG_INFINITY;
        let mut best_theta = Vec::new();
        let mut any_converged = false;
        for r in 0..restarts {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(((m as u64) << 32) | r as u64);
            let (theta, f, converged) = fekete_points_once(set, m, r, &mut rng);
            any_converged |= converged;
            if f > best {
                best = f;
                best_theta = theta;
            }
        }
        log_v[m] = best;
        if m == n {
            best_theta.sort_by(f64::total_cmp);
            best_points = best_theta;
            top_converged = any_converged;
        }
    }
    let ladder: Vec<LadderEntry> = (2..=n)
        .map(|m| LadderEntry {
            n: m,
            tau: (2.0 * log_v[m] / (m * (m - 1)) as f64).exp(),
        })
        .collect();
    let tau_n = ladder.last().unwrap().tau;
    let tau_extrapolated = if n >= 12 {
        Some(extrapolate_ladder(&log_v, n)?)
    } else {
        None
    };
    Ok(FeketeResult {
        n,
        restarts,
        tau_n,
        tau_extrapolated,
        points: best_points,
        ladder,
        converged: top_converged,
    })
}

/// Fits `log V_m - (m/2) log m` against `{m(m-1)/2, m, log m, 1}` over the
/// upper half of the ladder; the coefficient of `m(m-1)/2` is `log tau`.
fn extrapolate_ladder(log_v: &[f64], n: usize) -> Result<f64> {
    let m_lo = (n / 2).max(6);
    let rows: Vec<usize> = (m_lo..=n).collect();
    let k = rows.len();
    let mut a = DMatrix::<f64>::zeros(k, 4);
    let mut y = DVector::<f64>::zeros(k);
    for (r, &m) in rows.iter().enumerate() {
        let mf = m as f64;
        a[(r, 0)] = mf * (mf - 1.0) / 2.0;
        a[(r, 1)] = mf;
        a[(r, 2)] = mf.ln();
        a[(r, 3)] = 1.0;
        y[r] = log_v[m] - 0.5 * mf * mf.ln();
    }
    let coef = a
        .svd(true, true)
        .solve(&y, 1e-13)
        .map_err(|e| Error::numerical(format!("ladder extrapolation fit failed: {e}")))?;
    Ok(coef[0].exp())
}

/// Codeword-scaling lower bound: with rate `rate` (nats), error probability
/// at most `error_prob`, and output arcs of transfinite diameter `tau < 1`,
/// the blocklength must scale at least like
/// `rate (1 - error_prob) / (-log tau)`.
pub fn scaling_lower_bound(rate: f64, error_prob: f64, tau: f64) -> Result<f64> {
    if !(rate > 0.0 && rate.is_finite()) {
        return Err(Error::validation(format!(
            "rate must be positive and finite, got {rate}"
        )));
    }
    if !(0.0..1.0).contains(&error_prob) {
        return Err(Error::validation(format!(
            "error probability must lie in [0, 1), got {error_prob}"
        )));
    }
    if !(tau > 0.0 && tau < 1.0) {
        return Err(Error::validation(format!(
            "transfinite diameter must lie in (0, 1) for a nontrivial \
             scaling bound, got {tau}"
        )));
    }
    Ok(rate * (1.0 - error_prob) / -tau.ln())
}

/// A random-coding error exponent evaluation.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ErrorExponent {
    /// Signal-to-noise ratio.
    pub snr: f64,
    /// Rate in nats per symbol.
    pub rate: f64,
    /// The exponent; 0 when the rate is not below the ensemble threshold.
    pub value: f64,
    /// Set when the rate is at or above the zero-exponent threshold.
    pub above_capacity: bool,
    /// Optimizing Gallager parameter when it was computed explicitly.
    pub rho_star: Option<f64>,
}

/// Random-coding exponent of the peak-limited complex AWGN channel.
///
/// Both branches are algebraically rearranged so the near-capacity regime
/// suffers no cancellation: the exponent vanishes exactly at
/// `R = log(1 + snr)` and the two branches agree at the critical rate
/// `R_crit = log(1/2 + snr/4 + (1/2) sqrt(1 + snr^2/4))`.
pub fn awgn_exponent(snr: f64, rate: f64) -> Result<ErrorExponent> {
    if !(snr > 0.0 && snr.is_finite()) {
        return Err(Error::validation(format!(
            "signal-to-noise ratio must be positive and finite, got {snr}"
        )));
    }
    if !(rate >= 0.0 && rate.is_finite()) {
        return Err(Error::validation(format!(
            "rate must be nonnegative and finite, got {rate}"
        )));
    }
    let capacity = snr.ln_1p();
    if rate >= capacity {
        return Ok(ErrorExponent {
            snr,
            rate,
            value: 0.0,
            above_capacity: true,
            rho_star: None,
        });
    }
    let disc = (1.0 + snr * snr / 4.0).sqrt();
    let r_crit = (0.5 + snr / 4.0 + 0.5 * disc).ln();
    let value = if rate >= r_crit {
        let er = rate.exp();
        let x = 4.0 * er / (snr * (er - 1.0));
        let s = (1.0 + x).sqrt();
        snr / er - 2.0 / (1.0 + s) + rate + x.ln() - 2.0 * s.ln_1p()
    } else {
        let inv = 1.0 / (disc + snr / 2.0);
        (1.0 - inv) + (0.5 + 0.5 * inv).ln() + (0.5 + snr / 4.0 + 0.5 * disc).ln() - rate
    };
    Ok(ErrorExponent {
        snr,
        rate,
        value: value.max(0.0),
        above_capacity: false,
        rho_star: if rate < r_crit { Some(1.0) } else { None },
    })
}

/// `E[(1 + snr t / (1 + rho))^{-rho}]` for `t ~ Exp(1)`: the Gallager
/// integrand of coherent Rayleigh fading with a Gaussian ensemble.
///
/// Split at `t = 1`: adaptive quadrature with log-spaced breakpoints around
/// the knee `t ~ (1+rho)/snr`, then a shifted 64-point Gauss-Laguerre tail.
fn rayleigh_gallager_mean(snr: f64, rho: f64, rel_tol: f64) -> Result<f64> {
    if rho == 0.0 {
        return Ok(1.0);
    }
    let a = snr / (1.0 + rho);
    let f = |t: f64| (-t).exp() * (1.0 + a * t).powf(-rho);
    let mut breakpoints = Vec::new();
    if a > 10.0 {
        let mut b = 1.0 / a;
        while b < 1.0 {
            breakpoints.push(b);
            b *= 10.0;
        }
    }
    let opts = QuadOptions {
        rel_tol,
        breakpoints,
        ..QuadOptions::default()
    };
    let head = integrate(f, 0.0, 1.0, &opts)?.value;
    let (nodes, weights) = gauss_laguerre_64();
    let tail: f64 = nodes
        .iter()
        .zip(weights)
        .map(|(&u, &w)| w * (1.0 + a * (1.0 + u)).powf(-rho))
        .sum::<f64>()
        * (-1.0f64).exp();
    Ok(head + tail)
}

/// Random-coding exponent of coherent Rayleigh fading with a Gaussian
/// ensemble: `max_{rho in [0,1]} [-log E(1 + snr t/(1+rho))^{-rho} - rho R]`,
/// maximized by golden-section search (the objective is concave in `rho`).
pub fn rayleigh_exponent(snr: f64, rate: f64, rel_tol: f64) -> Result<ErrorExponent> {
    if !(snr > 0.0 && snr.is_finite()) {
        return Err(Error::validation(format!(
            "signal-to-noise ratio must be positive and finite, got {snr}"
        )));
    }
    if !(rate >= 0.0 && rate.is_finite()) {
        return Err(Error::validation(format!(
            "rate must be nonnegative and finite, got {rate}"
        )));
    }
    let objective = |rho: f64| -> Result<f64> {
        Ok(-rayleigh_gallager_mean(snr, rho, rel_tol)?.ln() - rho * rate)
    };
    let golden = (5.0f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (0.0f64, 1.0f64);
    let mut c = b - golden * (b - a);
    let mut d = a + golden * (b - a);
    let mut fc = objective(c)?;
    let mut fd = objective(d)?;
    for _ in 0..70 {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - golden * (b - a);
            fc = objective(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + golden * (b - a);
            fd = objective(d)?;
        }
    }
    let mut rho_star = 0.5 * (a + b);
    let mut value = objective(rho_star)?;
    // The maximizer can sit at the boundary rho = 1 (low rates).
    let at_one = objective(1.0)?;
    if at_one > value {
        value = at_one;
        rho_star = 1.0;
    }
    let above = value <= 1e-12;
    Ok(ErrorExponent {
        snr,
        rate,
        value: value.max(0.0),
        above_capacity: above,
        rho_star: Some(rho_star),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::exp_e1;
    use approx::assert_relative_eq;

    #[test]
    fn arc_sets_are_validated_and_normalized() {
        assert!(ArcSet::parse("0:1.0,0.5:2").is_err(), "overlap must be caught");
        assert!(ArcSet::parse("1:1").is_err(), "empty arc");
        assert!(ArcSet::parse("0:7").is_err(), "longer than the circle");
        assert!(ArcSet::parse("0:nope").is_err());
        // A wrapping arc collides with one near angle 0.
        assert!(ArcSet::new(vec![(6.0, 7.0), (0.5, 1.0)]).is_err());
        let ok = ArcSet::parse("0:1.5, 2.0:3.0").unwrap();
        assert_eq!(ok.arcs().len(), 2);
        assert_relative_eq!(ok.total_length(), 2.5, epsilon = 1e-12);
        assert!(ok.single_arc_tau().is_none());
    }

    #[test]
    fn single_arc_tau_is_sine_of_quarter_length() {
        assert_relative_eq!(tau_arc(TWO_PI).unwrap(), 1.0, epsilon = 1e-12);
        assert_relative_eq!(tau_arc(PI).unwrap(), 0.707_106_8, epsilon = 1e-7);
        let set = ArcSet::parse("0:3.14159265").unwrap();
        assert_relative_eq!(set.single_arc_tau().unwrap(), 0.707_106_8, epsilon = 1e-7);
    }

    #[test]
    fn full_circle_fekete_points_hit_the_known_vandermonde_value() {
        // Equally spaced points are optimal and V_n = n^{n/2}.
        let set = ArcSet::full_circle();
        let result = tau_fekete(&set, 8, 2, 7).unwrap();
        let log_v = 0.5 * 8.0 * 8.0f64.ln();
        let tau_expected = (2.0 * log_v / (8.0 * 7.0)).exp();
        assert_relative_eq!(result.tau_n, tau_expected, epsilon = 1e-6);
    }

    #[test]
    fn half_circle_ladder_extrapolates_to_the_closed_form() {
        let set = ArcSet::parse("0:3.141592653589793").unwrap();
        let result = tau_fekete(&set, 16, 3, 11).unwrap();
        let exact = tau_arc(PI).unwrap();
        // The raw ladder converges from above...
        assert!(result.tau_n > exact);
        for pair in result.ladder.windows(2) {
            assert!(
                pair[1].tau <= pair[0].tau + 1e-9,
                "tau ladder must be nonincreasing: {} then {}",
                pair[0].tau,
                pair[1].tau
            );
        }
        for entry in &result.ladder {
            assert!(entry.tau > 0.0);
        }
        // ...and the extrapolation strips the finite-n bias.
        let extrapolated = result.tau_extrapolated.unwrap();
        assert!(
            (extrapolated - exact).abs() / exact < 0.01,
            "extrapolated {extrapolated} vs exact {exact}"
        );
        assert!(result.points.len() == 16);
        assert!(result.converged);
    }

    #[test]
    fn antipodal_arc_pair_matches_the_squaring_argument() {
        // z -> z^2 maps the union of two antipodal quarter arcs onto a
        // single half arc, so tau = sin(pi/4)^{1/2}.
        let set = ArcSet::new(vec![(0.0, PI / 2.0), (PI, 1.5 * PI)]).unwrap();
        let result = tau_fekete(&set, 16, 3, 13).unwrap();
        let exact = (PI / 4.0).sin().sqrt();
        let extrapolated = result.tau_extrapolated.unwrap();
        assert!(
            (extrapolated - exact).abs() / exact < 0.015,
            "extrapolated {extrapolated} vs exact {exact}"
        );
    }

    #[test]
    fn scaling_bound_values_and_validation() {
        assert_relative_eq!(
            scaling_lower_bound(2.0, 0.1, 0.5).unwrap(),
            2.0 * 0.9 / 2.0f64.ln(),
            epsilon = 1e-12
        );
        assert!(scaling_lower_bound(2.0, 0.1, 1.0).is_err());
        assert!(scaling_lower_bound(2.0, 1.0, 0.5).is_err());
        assert!(scaling_lower_bound(0.0, 0.1, 0.5).is_err());
    }

    #[test]
    fn awgn_exponent_anchors() {
        // Low-rate branch spot value.
        assert_relative_eq!(
            awgn_exponent(1.0, 0.2).unwrap().value,
            0.239_307_125_3,
            max_relative = 1e-8
        );
        // Exact zero at capacity, flagged above it.
        let at_cap = awgn_exponent(1.0, 2.0f64.ln()).unwrap();
        assert_eq!(at_cap.value, 0.0);
        let above = awgn_exponent(1.0, 1.0).unwrap();
        assert_eq!(above.value, 0.0);
        assert!(above.above_capacity);
        // Branch continuity at the critical rate.
        let snr: f64 = 3.7;
        let disc = (1.0 + snr * snr / 4.0).sqrt();
        let r_crit = (0.5 + snr / 4.0 + 0.5 * disc).ln();
        let lo = awgn_exponent(snr, r_crit - 1e-9).unwrap().value;
        let hi = awgn_exponent(snr, r_crit + 1e-9).unwrap().value;
        assert!((lo - hi).abs() < 1e-7, "branches must agree at R_crit");
        // No cancellation near capacity at extreme snr.
        let snr = 1e8;
        let near = awgn_exponent(snr, snr.ln_1p() - 1e-6).unwrap().value;
        assert!(near > 0.0 && near < 1e-9);
    }

    #[test]
    fn rayleigh_inner_integral_matches_the_exponential_integral_form() {
        // At rho = 1: E[(1 + a t)^{-1}] = e^{1/a} E1(1/a) / a.
        for &a in &[0.5, 50.0, 5e7] {
            let snr = 2.0 * a;
            let got = rayleigh_gallager_mean(snr, 1.0, 1e-11).unwrap();
            let want = exp_e1(1.0 / a) / a;
            assert_relative_eq!(got, want, max_relative = 1e-6);
        }
    }

    #[test]
    fn rayleigh_exponent_behaves_like_an_exponent() {
        let spot = rayleigh_exponent(1.0, 0.2, 1e-10).unwrap();
        assert_relative_eq!(spot.value, 0.126_542_504, max_relative = 1e-4);
        // Decreasing in rate; zero above the ensemble threshold.
        let mut prev = f64::INFINITY;
        for &r in &[0.0, 0.1, 0.3, 0.5] {
            let e = rayleigh_exponent(1.0, r, 1e-10).unwrap().value;
            assert!(e <= prev);
            prev = e;
        }
        let coherent = crate::bounds::memoryless_coherent_capacity(1.0);
        let above = rayleigh_exponent(1.0, coherent + 0.1, 1e-10).unwrap();
        assert!(above.value < 1e-9);
        assert!(above.above_capacity);
        // High-snr spot: rate log snr - log log snr - 1 stays decodable
        // with a healthy exponent.
        let snr: f64 = 1e8;
        let rate = snr.ln() - snr.ln().ln() - 1.0;
        let e = rayleigh_exponent(snr, rate, 1e-9).unwrap();
        assert_relative_eq!(e.value, 1.286_177_841_3, max_relative = 1e-6);
        assert!(e.value >= 0.29);
        assert_relative_eq!(e.rho_star.unwrap(), 0.658_875, max_relative = 1e-3);
    }
}
