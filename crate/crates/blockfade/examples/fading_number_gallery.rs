//! Fading numbers of regular processes.
//!
//! For a regular block-stationary process (nonsingular infinite-past
//! prediction error), capacity grows like log log snr plus the fading
//! number -1 - gamma - (1/T) log det Sigma(inf).  This example walks the
//! scalar Gauss-Markov family and a two-symbol block model, and shows the
//! validation error raised by a nonregular (banded) spectrum.

use blockfade::highsnr::fading_number;
use blockfade::spectra::{
    scalar_gauss_markov, ScalarPiecewiseSpectrum, ScalarSpectrum, SpectralModel, SpectrumSegment,
};
use nalgebra::Complex;
use std::f64::consts::PI;

fn main() -> blockfade::Result<()> {
    println!("scalar Gauss-Markov, det Sigma(inf) = 1 - |rho|^2:");
    for rho in [0.0, 0.5, 0.9, 0.99] {
        let model = scalar_gauss_markov(Complex::new(rho, 0.0))?;
        let value = fading_number(&model, 1e-10)?;
        println!("  rho = {rho:4}  fading number = {value:+.7}");
    }

    let block = SpectralModel::block_gauss_markov(
        2,
        Complex::new(0.3, 0.0),
        Complex::new(0.8, 0.0),
    )?;
    println!(
        "block Gauss-Markov T = 2, rho1 = 0.3, rho2 = 0.8: {:+.7}",
        fading_number(&block, 1e-10)?
    );

    // A spectrum that vanishes on part of the band is perfectly predictable
    // there; det Sigma(inf) = 0 and the fading number does not exist.
    let banded = SpectralModel::Scalar(ScalarSpectrum::Piecewise(ScalarPiecewiseSpectrum::new(
        vec![
            SpectrumSegment { lo: 0.0, hi: PI / 2.0, level: 2.0 },
            SpectrumSegment { lo: PI / 2.0, hi: PI, level: 0.0 },
        ],
    )?));
    match fading_number(&banded, 1e-10) {
        Ok(v) => println!("banded spectrum unexpectedly returned {v}"),
        Err(e) => println!("banded spectrum: {e}"),
    }
    Ok(())
}
