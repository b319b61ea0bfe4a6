//! Far-field decay for small p = 6 data: mass to the right of
//! `β_right(t)` and to the left of `-β_left(t)`, both relative to the
//! initial mass.
//!
//! ```text
//! cargo run --release --example far_field
//! ```

use gkdv::config::preset;
use gkdv::diagnostics::run_experiment;

fn main() -> gkdv::Result<()> {
    let cfg = preset("global_small_p6")?;
    let report = run_experiment(&cfg)?;
    let m0 = report.records.first().map_or(1.0, |r| r.mass);
    println!(
        "{:>8} {:>10} {:>10} {:>12} {:>12}",
        "t", "β_right", "β_left", "right/M0", "left/M0"
    );
    let stride = (report.records.len() / 20).max(1);
    for r in report.records.iter().step_by(stride) {
        println!(
            "{:8.3} {:10.3} {:10.3} {:12.3e} {:12.3e}",
            r.t,
            r.beta_right,
            r.beta_left,
            r.right_mass / m0,
            r.left_mass / m0
        );
    }
    for v in report.verdicts.iter().filter(|v| v.criterion == "C7") {
        println!(
            "{}: {} ({:.3e} against {:.1e})",
            v.check, v.passed, v.measured, v.threshold
        );
    }
    Ok(())
}
