//! Transfinite diameter of spectral supports and codeword scaling.
//!
//! For band-limited fading the prediction error decays geometrically at a
//! rate set by the transfinite diameter tau of the spectral support on the
//! unit circle.  Reliable communication then forces the codeword length to
//! grow at least like rate (1 - Pe) / (-log tau) times the message length.
//! Fekete-point ladders recover tau numerically; a single arc has the
//! closed form sin(theta / 4).

use blockfade::codelength::{scaling_lower_bound, tau_fekete, ArcSet};
use std::f64::consts::PI;

fn main() -> blockfade::Result<()> {
    // Single arc: ladder against the closed form.
    let set = ArcSet::parse("0:3.141592653589793")?;
    let fekete = tau_fekete(&set, 24, 4, 1)?;
    println!("single arc, central angle pi:");
    println!("  closed form sin(pi/4)     {:.7}", (PI / 4.0).sin());
    println!("  raw tau_24 (biased high)  {:.7}", fekete.tau_n);
    println!(
        "  ladder extrapolation      {:.7}",
        fekete.tau_extrapolated.unwrap()
    );

    // Two antipodal quarter arcs map onto a half circle under z -> z^2,
    // giving tau = sin(pi/4)^(1/2).
    let antipodal = ArcSet::parse("0:1.5707963267948966,3.141592653589793:4.71238898038469")?;
    let fekete = tau_fekete(&antipodal, 24, 4, 1)?;
    println!("two antipodal quarter arcs:");
    println!("  closed form sqrt(sin(pi/4)) {:.7}", (PI / 4.0).sin().sqrt());
    println!(
        "  ladder extrapolation        {:.7}",
        fekete.tau_extrapolated.unwrap()
    );

    // The scaling bound blows up as the support fills the circle (tau -> 1).
    println!("codeword-scaling lower bound at rate 1 nat, Pe = 1e-3:");
    for theta in [PI / 2.0, PI, 1.9 * PI] {
        let tau = (theta / 4.0).sin();
        let bound = scaling_lower_bound(1.0, 1e-3, tau)?;
        println!("  support angle {theta:.3}: tau = {tau:.4}, n/k >= {bound:.3}");
    }
    Ok(())
}
