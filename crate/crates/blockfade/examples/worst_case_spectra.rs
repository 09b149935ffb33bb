//! Worst-case spectra and the universal lower bound.
//!
//! Among unit-power spectra whose zero set has measure alpha, the hardest
//! to predict is flat on its support.  Its noisy prediction error phi(alpha,
//! x) yields a capacity lower bound valid for the whole class, and the
//! kappa/c exponents describe how fast the prediction error of the scaled
//! family s_theta decays along theta = snr^r.

use blockfade::bounds::universal_lower;
use blockfade::highsnr::{kappa_c, phi, worst_case_spectrum};
use blockfade::prediction::scalar_noisy_prediction_variance;
use blockfade::spectra::ScalarSpectrum;
use std::f64::consts::PI;

fn main() -> blockfade::Result<()> {
    println!("worst-case noisy prediction error phi(alpha, x):");
    for alpha in [0.0, PI / 2.0, PI] {
        let spectrum = ScalarSpectrum::Piecewise(worst_case_spectrum(alpha)?);
        for x in [3.0, 10.0] {
            let closed = phi(alpha, x)?;
            let via_spectrum = scalar_noisy_prediction_variance(&spectrum, x)?;
            println!(
                "  alpha = {alpha:.4}, x = {x:>4}: phi = {closed:.10} \
                 (spectral route {via_spectrum:.10})"
            );
        }
    }

    println!("universal class lower bound at snr = 1e4:");
    for alpha in [PI / 2.0, PI] {
        let bound = universal_lower(alpha, 1e4, None)?;
        println!("  alpha = {alpha:.4}: C >= {bound:.6} nats for the whole class");
    }

    println!("prediction-error exponents along theta = snr^r (alpha = pi):");
    for r in [0.25, 0.5, 1.0, 2.0] {
        let kc = kappa_c(PI, r)?;
        match kc.c {
            Some(c) => println!(
                "  r = {r}: error ~ e^(c/2pi) snr^-kappa, kappa = {:.4}, c = {c:.4}",
                kc.kappa
            ),
            None => println!("  r = {r}: kappa = {:.4}, no finite c", kc.kappa),
        }
    }
    Ok(())
}
