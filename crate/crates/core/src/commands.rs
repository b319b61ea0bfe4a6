//! The four verbs behind the `gkdv` binary, usable as library calls.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use crate::artifacts::{write_plotdata, write_run, PlotData, RunArtifacts};
use crate::config::{load_config, parse_config_with_env, preset_text, RunConfig};
use crate::diagnostics::{run_experiment, ExperimentReport};
use crate::error::{GkdvError, Result};
use crate::verify::{run_suite, PropertyResult, SUITES};

pub const SWEEP_TABLE: &str = "sweep.csv";

/// Loads `--config` or `--preset` (exactly one), applying `GKDV_*`
/// overrides from the environment.
pub fn resolve_config(config: Option<&Path>, preset: Option<&str>) -> Result<RunConfig> {
    match (config, preset) {
        (Some(path), None) => load_config(path),
        (None, Some(name)) => parse_config_with_env(preset_text(name)?, std::env::vars()),
        (Some(_), Some(_)) => Err(GkdvError::Configuration(
            "pass either a config file or a preset, not both".into(),
        )),
        (None, None) => Err(GkdvError::Configuration("a config file or a preset is required".into())),
    }
}

/// `--out`, else `output.directory`, else `runs/<label>`.
pub fn output_dir(cfg: &RunConfig, out: Option<&Path>, label: &str) -> PathBuf {
    out.map(Path::to_path_buf)
        .or_else(|| cfg.output.directory.clone())
        .unwrap_or_else(|| Path::new("runs").join(label))
}

#[derive(Debug)]
pub struct RunOutcome {
    pub report: ExperimentReport,
    pub artifacts: RunArtifacts,
}

pub fn command_run(cfg: &RunConfig, out: &Path) -> Result<RunOutcome> {
    let report = run_experiment(cfg)?;
    let artifacts = write_run(out, cfg, &report)?;
    Ok(RunOutcome { report, artifacts })
}

/// One line of the sweep aggregate table.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub index: usize,
    pub key: String,
    pub value: String,
    pub dir: String,
    pub status: String,
    pub termination: String,
    pub t_final: f64,
    pub grad_growth: f64,
    pub blowup: bool,
    pub fitted_t_star: Option<f64>,
    pub fitted_exponent: Option<f64>,
    pub blowup_verdicts: String,
    pub verdicts_passed: usize,
    pub verdicts_total: usize,
}

fn sweep_row(index: usize, key: &str, value: &toml::Value, dir: &Path, report: &ExperimentReport) -> SweepRow {
    let s = &report.summary;
    let blow = s.blowup.as_ref();
    let c6: Vec<String> = report
        .verdicts
        .iter()
        .filter(|v| v.criterion == "C6")
        .map(|v| format!("{}={}", v.check, if v.passed { "pass" } else { "fail" }))
        .collect();
    SweepRow {
        index,
        key: key.into(),
        value: value.to_string(),
        dir: dir.display().to_string(),
        status: report.status.clone(),
        termination: s.termination.clone(),
        t_final: s.t_final,
        grad_growth: if s.grad_initial > 0.0 {
            s.grad_max / s.grad_initial
        } else {
            0.0
        },
        blowup: blow.is_some(),
        fitted_t_star: blow.and_then(|b| b.fitted_t_star),
        fitted_exponent: blow.and_then(|b| b.fitted_exponent),
        blowup_verdicts: c6.join(";"),
        verdicts_passed: report.verdicts.iter().filter(|v| v.passed).count(),
        verdicts_total: report.verdicts.len(),
    }
}

/// Runs every value of the `[sweep]` section on `jobs` threads, one
/// directory per run, and writes the aggregate table.
pub fn command_sweep(cfg: &RunConfig, out: &Path, jobs: usize) -> Result<Vec<SweepRow>> {
    let sweep = cfg
        .sweep
        .as_ref()
        .ok_or_else(|| GkdvError::Configuration("sweep needs a [sweep] section with key and values".into()))?;
    let mut base = cfg.clone();
    base.sweep = None;
    let runs: Vec<(usize, &toml::Value, RunConfig)> = sweep
        .values
        .iter()
        .enumerate()
        .map(|(i, v)| Ok((i, v, base.with_override(&sweep.key, v.clone())?)))
        .collect::<Result<_>>()?;
    std::fs::create_dir_all(out)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| GkdvError::Configuration(e.to_string()))?;
    let rows: Vec<SweepRow> = pool.install(|| {
        runs.par_iter()
            .map(|(i, v, run_cfg)| {
                let dir = out.join(format!("run_{i:03}"));
                let outcome = command_run(run_cfg, &dir)?;
                Ok(sweep_row(*i, &sweep.key, v, &dir, &outcome.report))
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let mut w = csv::Writer::from_path(out.join(SWEEP_TABLE))?;
    for row in &rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(rows)
}

/// Runs one suite, or all of them for `all`.
pub fn command_verify(suite: &str) -> Result<Vec<PropertyResult>> {
    if suite == "all" {
        let mut out = Vec::new();
        for s in SUITES {
            out.extend(run_suite(s)?);
        }
        Ok(out)
    } else {
        run_suite(suite)
    }
}

pub fn command_plotdata(run_dir: &Path, out: Option<&Path>) -> Result<PlotData> {
    write_plotdata(run_dir, out)
}
