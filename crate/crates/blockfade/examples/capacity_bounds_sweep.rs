//! Capacity bounds across six decades of snr.
//!
//! Sweeps the peaky-signaling lower bound and the side-information upper
//! bound for a scalar Gauss-Markov channel.  The lower bound is the mean of
//! clamped per-symbol terms driven by the noisy prediction error at the
//! probe amplitude; the upper bound is the coherent memoryless capacity
//! plus the per-symbol prediction penalty.

use blockfade::bounds::{capacity_bounds_sweep, memoryless_coherent_capacity};
use blockfade::spectra::scalar_gauss_markov;
use nalgebra::Complex;

fn main() -> blockfade::Result<()> {
    let model = scalar_gauss_markov(Complex::new(0.9, 0.0))?;
    let grid: Vec<f64> = (0..7).map(|k| 10f64.powi(k + 1)).collect();
    let points = capacity_bounds_sweep(&model, &grid, None, 512)?;

    println!("scalar Gauss-Markov rho = 0.9, history 512, probe sqrt(snr)");
    println!("{:>12} {:>12} {:>12} {:>12} {:>8}",
        "snr", "lower", "upper", "coherent", "clamped");
    for pt in &points {
        println!(
            "{:>12.3e} {:>12.6} {:>12.6} {:>12.6} {:>8}",
            pt.snr,
            pt.lower,
            pt.upper,
            memoryless_coherent_capacity(pt.snr),
            pt.clamped_terms,
        );
    }
    println!();
    println!("the gap upper - lower stays O(log log snr): memory pays off");
    println!("only through the prediction-error term once snr is large.");
    Ok(())
}
