//! Run directories: config echo, time-series CSV, report, checkpoints and
//! plot-data column files.
//!
//! ```text
//! <run>/config.toml
//! <run>/timeseries.csv        fixed columns, see CSV_COLUMNS
//! <run>/report.json
//! <run>/final_field.csv
//! <run>/checkpoints/index.csv, checkpoint_0000.csv, ...
//! <run>/plots/*.dat           written by write_plotdata
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use crate::analysis::{minimal_blowup_rate, rate_exponent};
use crate::config::{parse_config, Format, RunConfig};
use crate::diagnostics::{ExperimentReport, MonitorRecord, CSV_COLUMNS};
use crate::error::{GkdvError, Result};
use crate::grid::{Field, Grid};

pub const CONFIG_FILE: &str = "config.toml";
pub const TIMESERIES_FILE: &str = "timeseries.csv";
pub const REPORT_FILE: &str = "report.json";
pub const FINAL_FIELD_FILE: &str = "final_field.csv";
pub const CHECKPOINT_DIR: &str = "checkpoints";
pub const PLOT_DIR: &str = "plots";

#[derive(Clone, Debug, PartialEq)]
pub struct RunArtifacts {
    pub dir: PathBuf,
    pub config: PathBuf,
    pub timeseries: Option<PathBuf>,
    pub report: Option<PathBuf>,
    pub final_field: Option<PathBuf>,
    pub checkpoints: Vec<PathBuf>,
}

/// Writes every artifact of a finished (or failed) run into `dir`.
pub fn write_run(dir: &Path, cfg: &RunConfig, report: &ExperimentReport) -> Result<RunArtifacts> {
    fs::create_dir_all(dir)?;
    let config = dir.join(CONFIG_FILE);
    fs::write(&config, cfg.to_toml_string()?)?;
    let mut out = RunArtifacts {
        dir: dir.to_path_buf(),
        config,
        timeseries: None,
        report: None,
        final_field: None,
        checkpoints: Vec::new(),
    };
    if cfg.output.formats.contains(&Format::Csv) {
        let path = dir.join(TIMESERIES_FILE);
        write_timeseries(&path, &report.records)?;
        out.timeseries = Some(path);
    }
    if cfg.output.formats.contains(&Format::Json) {
        let path = dir.join(REPORT_FILE);
        fs::write(&path, serde_json::to_string_pretty(report)?)?;
        out.report = Some(path);
    }
    if let Some(f) = &report.final_field {
        let path = dir.join(FINAL_FIELD_FILE);
        write_field(&path, f)?;
        out.final_field = Some(path);
    }
    if !report.checkpoints.is_empty() {
        let cdir = dir.join(CHECKPOINT_DIR);
        fs::create_dir_all(&cdir)?;
        let mut index = csv::Writer::from_path(cdir.join("index.csv"))?;
        index.write_record(["index", "t", "file"])?;
        for (i, f) in report.checkpoints.iter().enumerate() {
            let name = format!("checkpoint_{i:04}.csv");
            write_field(&cdir.join(&name), f)?;
            index.write_record([i.to_string(), f.time().to_string(), name.clone()])?;
            out.checkpoints.push(cdir.join(name));
        }
        index.flush()?;
    }
    Ok(out)
}

pub fn write_timeseries(path: &Path, records: &[MonitorRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(CSV_COLUMNS)?;
    for r in records {
        w.write_record(r.values().iter().map(f64::to_string))?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a time series back, rejecting files whose header differs from
/// [`CSV_COLUMNS`].
pub fn read_timeseries(path: &Path) -> Result<Vec<MonitorRecord>> {
    let mut r = csv::Reader::from_path(path)?;
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header != CSV_COLUMNS {
        return Err(GkdvError::Parse {
            path: path.display().to_string(),
            message: format!("unexpected CSV header {header:?}"),
        });
    }
    let mut out = Vec::new();
    for (i, row) in r.records().enumerate() {
        let row = row?;
        let values = row
            .iter()
            .map(|s| s.parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| GkdvError::Parse {
                path: format!("{}:{}", path.display(), i + 2),
                message: e.to_string(),
            })?;
        out.push(MonitorRecord::from_values(&values)?);
    }
    Ok(out)
}

/// Field samples as `x,u` rows after a `# t=…,n=…,length=…,center=…` line.
pub fn write_field(path: &Path, f: &Field) -> Result<()> {
    let g = f.grid();
    let mut text = format!(
        "# t={},n={},length={},center={}\nx,u\n",
        f.time(),
        g.n_points(),
        g.length(),
        g.center()
    );
    for (j, v) in f.values().iter().enumerate() {
        text.push_str(&format!("{},{}\n", g.x(j), v));
    }
    fs::write(path, text)?;
    Ok(())
}

pub fn read_field(path: &Path) -> Result<Field> {
    let text = fs::read_to_string(path)?;
    let bad = |m: &str| GkdvError::Parse {
        path: path.display().to_string(),
        message: m.to_string(),
    };
    let meta = text
        .lines()
        .next()
        .and_then(|l| l.strip_prefix("# "))
        .ok_or_else(|| bad("missing metadata line"))?;
    let get = |key: &str| -> Result<f64> {
        meta.split(',')
            .find_map(|kv| kv.strip_prefix(key).and_then(|v| v.strip_prefix('=')))
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| bad(&format!("missing `{key}` in metadata")))
    };
    let (t, n, length, center) = (get("t")?, get("n")?, get("length")?, get("center")?);
    let mut r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let mut values = Vec::new();
    for row in r.records() {
        let row = row?;
        let u = row
            .get(1)
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| bad("bad sample row"))?;
        values.push(u);
    }
    Field::new(Grid::shared(n as usize, length, center)?, values, t)
}

#[derive(Clone, Debug, PartialEq)]
pub struct PlotData {
    pub files: Vec<PathBuf>,
    /// Reason the run did not reach its end time, if it did not.
    pub truncated: Option<String>,
}

/// Writes one whitespace-separated column file per figure into
/// `<run>/plots` (or `out`). Rows with a non-finite plotted value are
/// skipped; partial runs carry a `# truncated:` line.
pub fn write_plotdata(run_dir: &Path, out: Option<&Path>) -> Result<PlotData> {
    if !run_dir.is_dir() {
        return Err(GkdvError::Configuration(format!(
            "run directory {} does not exist",
            run_dir.display()
        )));
    }
    let records = read_timeseries(&run_dir.join(TIMESERIES_FILE))?;
    let cfg = parse_config(&fs::read_to_string(run_dir.join(CONFIG_FILE))?)?;
    // read loosely: non-finite numbers are stored as null
    let report: Option<serde_json::Value> = fs::read_to_string(run_dir.join(REPORT_FILE))
        .ok()
        .map(|t| serde_json::from_str(&t))
        .transpose()?;
    let field = |path: &str| report.as_ref().and_then(|r| r.pointer(path)).cloned();
    let status = field("/status").and_then(|v| v.as_str().map(str::to_string));
    let termination = field("/summary/termination").and_then(|v| v.as_str().map(str::to_string));
    let t_final = field("/summary/t_final").and_then(|v| v.as_f64());

    let truncated = match (&report, status.as_deref(), termination.as_deref()) {
        (None, ..) => Some("no report: the run did not finish".to_string()),
        (_, Some("ok"), Some("completed")) => None,
        (_, Some("ok"), term) => Some(format!(
            "run stopped at t = {} ({})",
            t_final.unwrap_or(f64::NAN),
            term.unwrap_or("unknown")
        )),
        _ => Some(format!(
            "run failed: {}",
            field("/error")
                .and_then(|v| v.as_str().map(str::to_string))
                .unwrap_or_default()
        )),
    };
    let header = |columns: &str| {
        let mut h = format!("# columns: {columns}\n");
        if let Some(reason) = &truncated {
            h.push_str(&format!("# truncated: {reason}; {} samples available\n", records.len()));
        }
        h
    };
    let dir = out.map_or_else(|| run_dir.join(PLOT_DIR), Path::to_path_buf);
    fs::create_dir_all(&dir)?;
    let mut files = Vec::new();
    let mut emit = |name: &str, columns: &str, rows: Vec<Vec<f64>>| -> Result<()> {
        let mut text = header(columns);
        for row in rows.iter().filter(|r| r[1..].iter().any(|v| v.is_finite())) {
            let line: Vec<String> = row.iter().map(f64::to_string).collect();
            text.push_str(&line.join(" "));
            text.push('\n');
        }
        let path = dir.join(name);
        fs::write(&path, text)?;
        files.push(path);
        Ok(())
    };

    emit(
        "right_mass.dat",
        "t right_mass",
        records.iter().map(|r| vec![r.t, r.right_mass]).collect(),
    )?;
    emit(
        "left_mass.dat",
        "t left_mass",
        records.iter().map(|r| vec![r.t, r.left_mass]).collect(),
    )?;
    emit(
        "local_decay.dat",
        "t local_lp_normalized running_min_local",
        records
            .iter()
            .map(|r| vec![r.t, r.local_lp_normalized, r.running_min_local])
            .collect(),
    )?;

    // lower-bound curve C (T* - t)^{-(1 - s_p)/3}, matched at the first sample
    let p = cfg.model.p;
    let t_star = field("/summary/blowup/fitted_t_star").and_then(|v| v.as_f64());
    let curve: Vec<f64> = match (t_star, records.first()) {
        (Some(ts), Some(first)) if first.t < ts => {
            let c = first.grad_l2 * (ts - first.t).powf(rate_exponent(1.0, p));
            records
                .iter()
                .map(|r| minimal_blowup_rate(r.t, ts, 1.0, p, c).unwrap_or(f64::NAN))
                .collect()
        }
        _ => vec![f64::NAN; records.len()],
    };
    emit(
        "gradient_rate.dat",
        "t grad_l2 minimal_blowup_rate",
        records
            .iter()
            .zip(&curve)
            .map(|(r, c)| vec![r.t, r.grad_l2, *c])
            .collect(),
    )?;
    Ok(PlotData { files, truncated })
}
