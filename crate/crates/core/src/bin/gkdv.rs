use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use gkdv::commands::{command_plotdata, command_run, command_sweep, command_verify, output_dir, resolve_config};
use gkdv::config::preset_names;

/// Generalized KdV simulator and diagnostics.
///
/// Config keys can be overridden from the environment as
/// GKDV_<SECTION>__<KEY>, e.g. GKDV_SOLVER__T_END=2.5.
#[derive(Parser)]
#[command(name = "gkdv", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Source {
    /// TOML run configuration
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Named preset (see `gkdv presets`)
    #[arg(long)]
    preset: Option<String>,
    /// Output directory
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write its artifacts
    Run(Source),
    /// Run the [sweep] values of a config in parallel
    Sweep {
        #[command(flatten)]
        source: Source,
        /// Worker threads
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Run a verification suite: grid, initdata, identities, inequalities, scales or all
    Verify {
        #[arg(long, default_value = "all")]
        suite: String,
        /// Also write the results as JSON here
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write plot column files for a finished run directory
    Plotdata {
        run_dir: PathBuf,
        /// Directory for the .dat files (default <run_dir>/plots)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List the built-in presets
    Presets,
}

fn label(src: &Source) -> String {
    src.preset.clone().unwrap_or_else(|| {
        src.config
            .as_deref()
            .and_then(|p| p.file_stem())
            .map_or("run".into(), |s| s.to_string_lossy().into_owned())
    })
}

fn pass(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> gkdv::Result<bool> {
    match cli.command {
        Command::Run(src) => {
            let cfg = resolve_config(src.config.as_deref(), src.preset.as_deref())?;
            let dir = output_dir(&cfg, src.out.as_deref(), &label(&src));
            let outcome = command_run(&cfg, &dir)?;
            let r = &outcome.report;
            println!(
                "{}: {} after {} steps, t = {}",
                dir.display(),
                r.summary.termination,
                r.summary.steps,
                r.summary.t_final
            );
            if let Some(e) = &r.error {
                println!("error: {e}");
            }
            for v in &r.verdicts {
                println!(
                    "{} {} {}: {:.4e} (threshold {:.4e})",
                    pass(v.passed),
                    v.criterion,
                    v.check,
                    v.measured,
                    v.threshold
                );
            }
            for w in &r.warnings {
                println!("warning [{:?}] t = {}: {}", w.kind, w.t, w.message);
            }
            Ok(r.passed())
        }
        Command::Sweep { source, jobs } => {
            let cfg = resolve_config(source.config.as_deref(), source.preset.as_deref())?;
            let dir = output_dir(&cfg, source.out.as_deref(), &label(&source));
            let rows = command_sweep(&cfg, &dir, jobs)?;
            for r in &rows {
                println!(
                    "{} = {}: {} {} t = {:.6} growth = {:.2} blowup = {} {}",
                    r.key, r.value, r.status, r.termination, r.t_final, r.grad_growth, r.blowup, r.blowup_verdicts
                );
            }
            println!("aggregate table: {}", dir.join(gkdv::commands::SWEEP_TABLE).display());
            Ok(rows.iter().all(|r| r.status == "ok"))
        }
        Command::Verify { suite, out } => {
            let results = command_verify(&suite)?;
            for r in &results {
                println!(
                    "{} {}.{}: {:.4e} (threshold {:.4e}) {}",
                    pass(r.passed),
                    r.suite,
                    r.name,
                    r.measured,
                    r.threshold,
                    r.detail
                );
            }
            if let Some(path) = out {
                std::fs::create_dir_all(&path)?;
                std::fs::write(path.join("verify.json"), serde_json::to_string_pretty(&results)?)?;
            }
            Ok(results.iter().all(|r| r.passed))
        }
        Command::Plotdata { run_dir, out } => {
            let data = command_plotdata(&run_dir, out.as_deref())?;
            if let Some(reason) = &data.truncated {
                println!("truncated: {reason}");
            }
            for f in &data.files {
                println!("{}", f.display());
            }
            Ok(true)
        }
        Command::Presets => {
            for name in preset_names() {
                println!("{name}");
            }
            Ok(true)
        }
    }
}
