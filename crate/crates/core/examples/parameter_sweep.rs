//! Amplitude sweep of scaled p = 6 solitons run in parallel, with the
//! aggregate blow-up table written next to the per-run directories.
//!
//! ```text
//! cargo run --release --example parameter_sweep -- [out_dir] [jobs]
//! ```

use std::path::PathBuf;

use gkdv::commands::{command_sweep, SWEEP_TABLE};
use gkdv::config::preset;

fn main() -> gkdv::Result<()> {
    let mut args = std::env::args().skip(1);
    let out = PathBuf::from(args.next().unwrap_or_else(|| "runs/parameter_sweep".into()));
    let jobs: usize = args.next().map_or(3, |a| a.parse().expect("jobs"));

    let cfg = preset("sweep_amplitude_p6")?;
    let rows = command_sweep(&cfg, &out, jobs)?;
    println!(
        "{:>6} {:>12} {:>10} {:>10} {:>12}",
        "A", "termination", "t_final", "growth", "fitted T*"
    );
    for r in &rows {
        println!(
            "{:>6} {:>12} {:10.5} {:10.2} {:>12}",
            r.value,
            r.termination,
            r.t_final,
            r.grad_growth,
            r.fitted_t_star.map_or("-".into(), |t| format!("{t:.6}"))
        );
    }
    println!("table: {}", out.join(SWEEP_TABLE).display());
    Ok(())
}
