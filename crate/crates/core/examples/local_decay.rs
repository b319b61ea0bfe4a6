//! Normalized local L^{2n} norm in a compact window trailing the bulk of
//! small p = 6 data, and its running minimum on the log-uniform cadence.
//!
//! ```text
//! cargo run --release --example local_decay -- [mu0]
//! ```

use gkdv::config::preset;
use gkdv::diagnostics::run_experiment;

fn main() -> gkdv::Result<()> {
    let mut cfg = preset("global_small_p6")?;
    if let Some(mu) = std::env::args().nth(1) {
        cfg = cfg.with_override("monitors.local.mu0", toml::Value::Float(mu.parse().expect("mu0")))?;
    }
    let report = run_experiment(&cfg)?;
    println!(
        "{:>8} {:>12} {:>12} {:>8} {:>8}",
        "t", "local", "running min", "λ₁", "μ"
    );
    let stride = (report.records.len() / 20).max(1);
    for r in report.records.iter().step_by(stride) {
        println!(
            "{:8.3} {:12.4e} {:12.4e} {:8.3} {:8.2}",
            r.t, r.local_lp_normalized, r.running_min_local, r.lambda1, r.mu
        );
    }
    for v in report.verdicts.iter().filter(|v| v.criterion == "C8") {
        println!("{}: {} ({:.3e})", v.check, v.passed, v.measured);
    }
    Ok(())
}
