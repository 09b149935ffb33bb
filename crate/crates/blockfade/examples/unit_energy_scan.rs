//! Capacity per unit energy and the optimal ON-symbol subset.
//!
//! With peak power snr and flash signaling, the capacity per unit energy is
//! 1 - min_M Psi(M, snr)/(2 pi snr), minimized over the nonempty subsets M
//! of block positions that carry energy.  On a three-symbol model whose
//! first two symbols fade identically, the optimal subset switches from all
//! three symbols to the twin pair as snr crosses (2 rho - 1)/(2 (1-rho)^2).

use blockfade::spectra::{CorrelationSequence, SpectralModel};
use blockfade::unit_energy::{cp_crossover, cp_scan, format_subset};
use nalgebra::{Complex, DMatrix};

fn twin_symbol_model(rho: f64) -> blockfade::Result<SpectralModel> {
    let c = |re: f64| Complex::new(re, 0.0);
    let r0 = DMatrix::from_row_slice(
        3,
        3,
        &[c(1.0), c(1.0), c(rho), c(1.0), c(1.0), c(rho), c(rho), c(rho), c(1.0)],
    );
    Ok(SpectralModel::TruncatedFourier(CorrelationSequence::new(
        3,
        vec![r0],
    )?))
}

fn main() -> blockfade::Result<()> {
    let rho = 0.8;
    let model = twin_symbol_model(rho)?;

    println!("twin-symbol block model, rho = {rho}");
    for snr in [0.5, 2.0, 7.5, 30.0, 1e3] {
        let scan = cp_scan(&model, snr, 1e-10)?;
        let argmin: Vec<String> = scan.argmin.iter().map(|m| format_subset(m)).collect();
        println!(
            "  snr {snr:>8}: cp = {:.6}, argmin {}",
            scan.cp,
            argmin.join(" = ")
        );
    }

    let cross = cp_crossover(&model, 0.5, 100.0, 1e-10)?;
    println!(
        "subset switch at snr = {:.6} (closed form {:.6}): {} -> {}",
        cross.snr,
        (2.0 * rho - 1.0) / (2.0 * (1.0 - rho) * (1.0 - rho)),
        format_subset(&cross.below),
        format_subset(&cross.above),
    );
    Ok(())
}
