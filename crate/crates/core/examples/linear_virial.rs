//! Linear virial identity with the compact tanh·sech² weight on a p = 6
//! soliton passing through the window, plus the sign of the coercive term.
//!
//! ```text
//! cargo run --release --example linear_virial
//! ```

use gkdv::config::preset;
use gkdv::diagnostics::run_experiment;

fn main() -> gkdv::Result<()> {
    let mut cfg = preset("linvirial_p6")?;
    cfg.solver.t_end = 2.0;
    let report = run_experiment(&cfg)?;

    println!("{:>8} {:>14} {:>12}", "t", "J_lin", "residual");
    let stride = (report.records.len() / 20).max(1);
    for r in report.records.iter().step_by(stride) {
        println!("{:8.3} {:14.8} {:12.3e}", r.t, r.j_lin, r.linvirial_residual);
    }
    for check in ["linear_virial_identity", "coercive_sign"] {
        if let Some(v) = report.verdict(check) {
            println!("{check}: {} ({:.3e})", v.passed, v.measured);
        }
    }
    Ok(())
}
