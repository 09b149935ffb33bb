//! Loads channel models from JSON and checks the determinant identity.
//!
//! Model files describe the spectral density by kind: closed-form families,
//! piecewise scalar spectra, truncated correlation sequences, or explicit
//! frequency grids.  For any loaded model the sum of per-symbol innovation
//! log-variances must reproduce the Szego integral of
//! log det[S(w) + I/snr].

use blockfade::prediction::{logdet_sigma, per_symbol_sigmas, Snr};
use blockfade::spectra::parse_model;

fn main() -> blockfade::Result<()> {
    let text = r#"{
        "kind": "block_gauss_markov",
        "T": 2,
        "rho1": {"re": 0.3, "im": 0.0},
        "rho2": 0.8
    }"#;
    let model = parse_model(text)?;
    println!("loaded: {}", model.describe());

    let snr = 10.0;
    let sigmas = per_symbol_sigmas(&model, snr, 512)?;
    let sum_logs: f64 = sigmas.iter().map(|s| s.ln()).sum();
    let integral = logdet_sigma(&model, Snr::Finite(snr), 1e-11)?;
    println!("per-symbol sigma_i at snr {snr}: {sigmas:?}");
    println!("sum of log sigma_i     {sum_logs:.12}");
    println!("Szego log-det integral {:.12}", integral.value);
    println!("difference             {:.3e}", (sum_logs - integral.value).abs());

    match parse_model(r#"{"kind": "piecewise", "segments": [}"#) {
        Ok(_) => println!("malformed input unexpectedly parsed"),
        Err(e) => println!("malformed input rejected: {e}"),
    }
    Ok(())
}
