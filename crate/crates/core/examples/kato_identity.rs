//! Kato smoothing identity along an exact p = 2 soliton: the quadratic
//! virial `½∫φu²` with a right tanh weight, its numerical time derivative and
//! the closed-form right-hand side.
//!
//! ```text
//! cargo run --release --example kato_identity
//! ```

use gkdv::config::preset;
use gkdv::diagnostics::run_experiment;

fn main() -> gkdv::Result<()> {
    let mut cfg = preset("kato_p2")?;
    cfg.solver.t_end = 4.0;
    let report = run_experiment(&cfg)?;

    println!("{:>8} {:>14} {:>12}", "t", "J_quad", "residual");
    let stride = (report.records.len() / 20).max(1);
    for r in report.records.iter().step_by(stride) {
        println!("{:8.3} {:14.8} {:12.3e}", r.t, r.j_quad, r.kato_residual);
    }
    let worst = report
        .records
        .iter()
        .map(|r| r.kato_residual)
        .filter(|v| v.is_finite())
        .fold(0.0, f64::max);
    println!("largest residual: {worst:.3e}");
    if let Some(v) = report.verdict("kato_identity") {
        println!(
            "normalized verdict: {} ({:.3e} against {})",
            v.passed, v.measured, v.threshold
        );
    }
    Ok(())
}
