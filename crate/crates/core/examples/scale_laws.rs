//! Compact scales as functions of time: θ, λ₁, λ₂ and the |μ'| bound in the
//! global and blow-up regimes for a fixed β, and `β_right`, `β_floor` along a
//! synthetic oscillating gradient history.
//!
//! ```text
//! cargo run --release --example scale_laws
//! ```

use gkdv::scales::{
    beta_floor, beta_left, beta_right, compact_scales_for, Regime, ScaleParams, ScaleRegime, ScaleState,
};

fn main() -> gkdv::Result<()> {
    println!("global regime, β = 1");
    println!("{:>10} {:>12} {:>12} {:>12} {:>12}", "t", "θ", "λ₁", "λ₂", "|μ'| bound");
    for t in [8.0, 10.0, 100.0, 1e4, 1e6] {
        let c = compact_scales_for(ScaleRegime::Global, t, 1.0)?;
        println!(
            "{t:10.0e} {:12.4e} {:12.4e} {:12.4e} {:12.4e}",
            c.theta, c.lambda1, c.lambda2, c.mu_prime_bound
        );
    }
    println!("blow-up regime, β = 1, s = T* - t");
    println!("{:>10} {:>12} {:>12} {:>12} {:>12}", "s", "θ", "λ₁", "λ₂", "|μ'| bound");
    for s in [1e-1, 1e-2, 1e-4, 1e-8] {
        let c = compact_scales_for(ScaleRegime::Blowup, s, 1.0)?;
        println!(
            "{s:10.0e} {:12.4e} {:12.4e} {:12.4e} {:12.4e}",
            c.theta, c.lambda1, c.lambda2, c.mu_prime_bound
        );
    }

    let history: Vec<(f64, f64)> = (1..=40)
        .map(|i| {
            let t = 0.25 * i as f64;
            (t, 1.5 + (2.0 * t).sin())
        })
        .collect();
    let state = ScaleState::from_history(Regime::Global, 6, ScaleParams::default(), &history)?;
    println!("oscillating gradient history, p = 6");
    println!(
        "{:>6} {:>8} {:>10} {:>10} {:>10}",
        "t", "grad", "β_right", "β_left", "β_floor"
    );
    for &(t, g) in history.iter().step_by(4) {
        println!(
            "{t:6.2} {g:8.4} {:10.4} {:10.4} {:10.4}",
            beta_right(&state, t)?,
            beta_left(&state, t)?,
            beta_floor(&state, t)?
        );
    }
    Ok(())
}
