//! Random-coding error exponents: AWGN against coherent Rayleigh.
//!
//! Fixed-length codes are feasible whenever the random-coding exponent is
//! positive below capacity.  This example prints both exponents on a rate
//! grid at snr = 100, and the near-capacity behavior of the AWGN exponent
//! at extreme snr, where E_r(log snr - log eta) approaches
//! eta - 1 - log eta.

use blockfade::bounds::memoryless_coherent_capacity;
use blockfade::codelength::{awgn_exponent, rayleigh_exponent};

fn main() -> blockfade::Result<()> {
    let snr: f64 = 100.0;
    let awgn_cap = (1.0 + snr).ln();
    let rayleigh_cap = memoryless_coherent_capacity(snr);
    println!("snr = {snr}: AWGN capacity {awgn_cap:.4}, coherent Rayleigh {rayleigh_cap:.4}");
    println!("{:>8} {:>12} {:>10} {:>12} {:>10}",
        "rate", "E_awgn", "rho*", "E_rayleigh", "rho*");
    for frac in [0.2, 0.4, 0.6, 0.8, 0.95] {
        let a = awgn_exponent(snr, frac * awgn_cap)?;
        let r = rayleigh_exponent(snr, frac * rayleigh_cap, 1e-9)?;
        println!(
            "{:>7.0}% {:>12.6} {:>10.4} {:>12.6} {:>10.4}",
            frac * 100.0,
            a.value,
            a.rho_star.unwrap_or(f64::NAN),
            r.value,
            r.rho_star.unwrap_or(f64::NAN),
        );
    }

    println!();
    println!("AWGN near capacity at snr = 1e8 (limit eta - 1 - log eta):");
    for eta in [1.2f64, 1.5, 1.9] {
        let e = awgn_exponent(1e8, 1e8f64.ln() - eta.ln())?;
        let limit = eta - 1.0 - f64::ln(eta);
        println!("  eta {eta}: E_r = {:.7}, limit {limit:.7}", e.value);
    }
    Ok(())
}
