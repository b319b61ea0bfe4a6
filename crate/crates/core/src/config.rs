//! Run configuration: TOML schema, validation, environment overrides and
//! named presets.
//!
//! Every key can be overridden from the environment as
//! `GKDV_<SECTION>__<KEY>[__<SUBKEY>]`, e.g. `GKDV_SOLVER__T_END=2.5` or
//! `GKDV_SOLVER__TIME_STEP__DT=5e-4`. Values are read as TOML literals and
//! fall back to strings.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::diagnostics::MonitorConfig;
use crate::error::{GkdvError, Result};
use crate::initdata::InitSpec;
use crate::scales::ScaleParams;
use crate::solver::{Dealias, Scheme, SolverConfig, TimeStep};

pub const ENV_PREFIX: &str = "GKDV_";

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSection {
    pub n: usize,
    pub length: f64,
    pub center: f64,
}

impl Default for GridSection {
    fn default() -> Self {
        Self {
            n: 2048,
            length: 100.0,
            center: 0.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub p: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSection {
    pub scheme: Scheme,
    pub time_step: TimeStep,
    /// Defaults to zero padding for `p ≥ 6` and the two-thirds rule otherwise.
    pub dealias: Option<Dealias>,
    pub t_end: f64,
    pub blowup_sup_threshold: f64,
    pub blowup_grad_factor: f64,
    pub sample_every: usize,
    pub boundary_fraction: f64,
    pub boundary_tolerance: f64,
}

impl Default for SolverSection {
    fn default() -> Self {
        Self {
            scheme: Scheme::EtdRk4,
            time_step: TimeStep::Fixed { dt: 1e-3 },
            dealias: None,
            t_end: 1.0,
            blowup_sup_threshold: 1e6,
            blowup_grad_factor: 1e4,
            sample_every: 10,
            boundary_fraction: 0.05,
            boundary_tolerance: 1e-6,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegimeChoice {
    /// Global bookkeeping while running; blow-up bookkeeping afterwards if
    /// the run ends in a detected blow-up.
    #[default]
    Auto,
    Global,
    Blowup,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScalesSection {
    pub c0: f64,
    pub c1: f64,
    pub eta: f64,
    pub floor_window: usize,
    pub regime: RegimeChoice,
}

impl Default for ScalesSection {
    fn default() -> Self {
        let p = ScaleParams::default();
        Self {
            c0: p.c0,
            c1: p.c1,
            eta: p.eta,
            floor_window: p.floor_window,
            regime: RegimeChoice::Auto,
        }
    }
}

impl ScalesSection {
    pub fn params(&self) -> ScaleParams {
        ScaleParams {
            c0: self.c0,
            c1: self.c1,
            eta: self.eta,
            floor_window: self.floor_window,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub directory: Option<PathBuf>,
    pub formats: Vec<Format>,
    /// Write a field checkpoint every this many samples (0 disables).
    pub checkpoint_every: usize,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            directory: None,
            formats: vec![Format::Csv, Format::Json],
            checkpoint_every: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    /// Dotted config path, e.g. `init.amplitude_factor`.
    pub key: String,
    pub values: Vec<toml::Value>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub grid: GridSection,
    pub model: ModelSection,
    pub init: InitSpec,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub scales: ScalesSection,
    #[serde(default)]
    pub monitors: MonitorConfig,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
}

impl RunConfig {
    pub fn solver_config(&self) -> SolverConfig {
        let s = &self.solver;
        SolverConfig {
            p: self.model.p,
            scheme: s.scheme,
            time_step: s.time_step,
            dealias: s.dealias.unwrap_or_else(|| Dealias::default_for(self.model.p)),
            t_end: s.t_end,
            blowup_sup_threshold: s.blowup_sup_threshold,
            blowup_grad_factor: s.blowup_grad_factor,
            sample_every: s.sample_every,
            boundary_fraction: s.boundary_fraction,
            boundary_tolerance: s.boundary_tolerance,
        }
    }

    /// Every violated constraint, each prefixed with its config path.
    pub fn validation_errors(&self) -> Vec<String> {
        let mut errors = Vec::new();
        let g = &self.grid;
        if g.n < 4 {
            errors.push(format!("grid.n: must be >= 4, got {}", g.n));
        }
        if !(g.length > 0.0 && g.length.is_finite()) {
            errors.push(format!("grid.length: must be finite and > 0, got {}", g.length));
        }
        if !g.center.is_finite() {
            errors.push("grid.center: must be finite".into());
        }
        self.init.validate(&mut errors);
        if let InitSpec::CustomSamples { values } = &self.init {
            if values.len() != g.n {
                errors.push(format!("init.values: expected {} samples, got {}", g.n, values.len()));
            }
        }
        self.solver_config().validate("solver.", &mut errors);
        self.scales.params().validate(&mut errors);
        self.monitors.validate(self.model.p, &mut errors);
        if let Some(sw) = &self.sweep {
            if sw.values.is_empty() {
                errors.push("sweep.values: must not be empty".into());
            }
        }
        errors
    }

    pub fn validate(&self) -> Result<()> {
        let errors = self.validation_errors();
        if errors.is_empty() {
            Ok(())
        } else {
            Err(GkdvError::Validation(errors))
        }
    }

    pub fn to_toml_value(&self) -> Result<toml::Value> {
        toml::Value::try_from(self).map_err(|e| GkdvError::Configuration(e.to_string()))
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| GkdvError::Configuration(e.to_string()))
    }

    /// Copy with the dotted `key` set to `value`, revalidated.
    pub fn with_override(&self, key: &str, value: toml::Value) -> Result<Self> {
        let mut doc = self.to_toml_value()?;
        let path: Vec<String> = key.split('.').map(str::to_string).collect();
        set_path(&mut doc, &path, value)?;
        from_value(doc)
    }
}

fn set_path(doc: &mut toml::Value, path: &[String], value: toml::Value) -> Result<()> {
    let (last, parents) = path
        .split_last()
        .ok_or_else(|| GkdvError::Configuration("empty override key".into()))?;
    let mut node = doc;
    for key in parents {
        let table = node
            .as_table_mut()
            .ok_or_else(|| GkdvError::Configuration(format!("`{key}` is not a table")))?;
        node = table
            .entry(key.clone())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
    }
    node.as_table_mut()
        .ok_or_else(|| GkdvError::Configuration(format!("cannot set `{last}` on a non-table")))?
        .insert(last.clone(), value);
    Ok(())
}

/// Reads an override value as a TOML literal, falling back to a string.
fn parse_literal(raw: &str) -> toml::Value {
    format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

fn from_value(doc: toml::Value) -> Result<RunConfig> {
    let cfg: RunConfig = serde_path_to_error::deserialize(doc).map_err(|e| GkdvError::Parse {
        path: e.path().to_string(),
        message: e.inner().to_string(),
    })?;
    cfg.validate()?;
    Ok(cfg)
}

/// Parses and validates `text`, then applies the `GKDV_*` overrides in `env`.
pub fn parse_config_with_env<I, K, V>(text: &str, env: I) -> Result<RunConfig>
where
    I: IntoIterator<Item = (K, V)>,
    K: AsRef<str>,
    V: AsRef<str>,
{
    let table: toml::Table = text.parse().map_err(|e: toml::de::Error| GkdvError::Parse {
        path: "<document>".into(),
        message: e.to_string(),
    })?;
    let mut doc = toml::Value::Table(table);
    let mut overrides: Vec<(Vec<String>, toml::Value)> = env
        .into_iter()
        .filter_map(|(k, v)| {
            let key = k.as_ref().strip_prefix(ENV_PREFIX)?;
            let path = key.split("__").map(|s| s.to_ascii_lowercase()).collect();
            Some((path, parse_literal(v.as_ref())))
        })
        .collect();
    overrides.sort_by(|a, b| a.0.cmp(&b.0));
    for (path, value) in overrides {
        set_path(&mut doc, &path, value)?;
    }
    from_value(doc)
}

/// Parses and validates `text` without environment overrides.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    parse_config_with_env(text, std::iter::empty::<(String, String)>())
}

/// Reads `path` and applies overrides from the process environment.
pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)?;
    parse_config_with_env(&text, std::env::vars())
}

const PRESETS: &[(&str, &str)] = &[
    ("zero", include_str!("../presets/zero.toml")),
    ("soliton_p2", include_str!("../presets/soliton_p2.toml")),
    ("soliton_p4", include_str!("../presets/soliton_p4.toml")),
    ("soliton_p6", include_str!("../presets/soliton_p6.toml")),
    ("kato_p2", include_str!("../presets/kato_p2.toml")),
    ("linvirial_p6", include_str!("../presets/linvirial_p6.toml")),
    ("blowup_p6", include_str!("../presets/blowup_p6.toml")),
    ("global_small_p6", include_str!("../presets/global_small_p6.toml")),
    ("mt01bis_p6", include_str!("../presets/mt01bis_p6.toml")),
    ("sweep_amplitude_p6", include_str!("../presets/sweep_amplitude_p6.toml")),
];

pub fn preset_names() -> impl Iterator<Item = &'static str> {
    PRESETS.iter().map(|(n, _)| *n)
}

pub fn preset_text(name: &str) -> Result<&'static str> {
    PRESETS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, t)| *t)
        .ok_or_else(|| {
            GkdvError::Configuration(format!(
                "unknown preset `{name}`; available: {}",
                preset_names().collect::<Vec<_>>().join(", ")
            ))
        })
}

pub fn preset(name: &str) -> Result<RunConfig> {
    parse_config(preset_text(name)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[model]
p = 2

[init]
kind = "soliton"
c = 1.0
"#;

    #[test]
    fn minimal_document_gets_defaults() {
        let cfg = parse_config(MINIMAL).unwrap();
        assert_eq!(cfg.grid, GridSection::default());
        assert_eq!(cfg.solver, SolverSection::default());
        assert_eq!(cfg.init, InitSpec::Soliton { c: 1.0, x0: 0.0 });
        assert_eq!(cfg.solver_config().dealias, Dealias::TwoThirds);
    }

    #[test]
    fn p_one_is_rejected_at_model_p() {
        let err = parse_config(&MINIMAL.replace("p = 2", "p = 1")).unwrap_err();
        match err {
            GkdvError::Validation(e) => assert!(e.iter().any(|m| m.starts_with("model.p")), "{e:?}"),
            other => panic!("{other}"),
        }
    }

    #[test]
    fn small_pad_factor_is_rejected() {
        let text = MINIMAL.replace("p = 2", "p = 6") + "\n[solver.dealias]\nkind = \"zero_pad\"\nfactor = 2\n";
        let err = parse_config(&text).unwrap_err().to_string();
        assert!(err.contains("solver.dealias.factor"), "{err}");
    }

    #[test]
    fn unknown_keys_and_type_errors_carry_paths() {
        let err = parse_config(&(MINIMAL.to_string() + "\n[solver]\nt_final = 3\n")).unwrap_err();
        assert!(
            matches!(&err, GkdvError::Parse { path, .. } if path.starts_with("solver")),
            "{err}"
        );
        let err = parse_config(&(MINIMAL.to_string() + "\n[grid]\nn = \"many\"\n")).unwrap_err();
        assert!(
            matches!(&err, GkdvError::Parse { path, .. } if path == "grid.n"),
            "{err}"
        );
    }

    #[test]
    fn all_errors_are_reported() {
        let text = r#"
[grid]
n = 2
length = -1.0
[model]
p = 1
[init]
kind = "gaussian"
amplitude = 1.0
width = 0.0
"#;
        match parse_config(text).unwrap_err() {
            GkdvError::Validation(e) => {
                for key in ["grid.n", "grid.length", "model.p", "init.width"] {
                    assert!(e.iter().any(|m| m.starts_with(key)), "missing {key}: {e:?}");
                }
            }
            other => panic!("{other}"),
        }
    }

    #[test]
    fn environment_overrides() {
        let env = [
            ("GKDV_SOLVER__T_END", "2.5"),
            ("GKDV_SOLVER__TIME_STEP__DT", "5e-4"),
            ("GKDV_INIT__C", "2"),
            ("UNRELATED", "x"),
        ];
        let env_2 = env.iter().map(|(k, v)| (k.to_string(), v.to_string()));
        let text = MINIMAL.to_string() + "\n[solver.time_step]\nkind = \"fixed\"\ndt = 1e-3\n";
        let cfg = parse_config_with_env(&text, env_2).unwrap();
        assert_eq!(cfg.solver.t_end, 2.5);
        assert_eq!(cfg.solver.time_step, TimeStep::Fixed { dt: 5e-4 });
        // integer literal into a real field is a type error
        assert!(matches!(cfg.init, InitSpec::Soliton { .. }));
    }

    #[test]
    fn overrides_and_round_trip() {
        let cfg = parse_config(MINIMAL).unwrap();
        let again = parse_config(&cfg.to_toml_string().unwrap()).unwrap();
        assert_eq!(cfg, again);
        let bumped = cfg.with_override("solver.t_end", toml::Value::Float(4.0)).unwrap();
        assert_eq!(bumped.solver.t_end, 4.0);
        assert!(cfg.with_override("model.p", toml::Value::Integer(1)).is_err());
    }

    #[test]
    fn presets_parse() {
        for name in preset_names() {
            preset(name).unwrap_or_else(|e| panic!("{name}: {e}"));
        }
        assert!(preset("nope").is_err());
    }
}
