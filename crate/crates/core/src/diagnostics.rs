//! Far-field and local-decay monitors and the experiment runner.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::analysis::{critical_exponent, ConservationRecord};
use crate::config::{RegimeChoice, RunConfig};
use crate::error::{GkdvError, Result};
use crate::grid::{integrate_cells, integrate_window, Field, Grid};
use crate::initdata::{make_initial, soliton_edge_ratio, soliton_profile, InitSpec, SOLITON_EDGE_TOLERANCE};
use crate::scales::{beta_left, beta_right, compact_scales_for, mu_track, MuMode, Regime, ScaleRegime, ScaleState};
use crate::solver::{evolve, BlowupReason, Observer, Sample, Termination, Trajectory, Warning, WarningKind};
use crate::virial::{
    centered_rate, eval_weight, identity_tolerance, kato_rhs, linear_virial, linear_virial_rhs, quadratic_virial,
    WeightRates, WeightSpec,
};

pub const REPORT_SCHEMA: &str = "gkdv-timeseries/1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Right,
    Left,
}

/// `∫_{x ≥ r} u²` (right) or `∫_{x ≤ -r} u²` (left). An empty window gives
/// zero together with a warning.
pub fn halfline_mass(f: &Field, side: Side, threshold: f64) -> (f64, Option<Warning>) {
    let g = f.grid();
    let (lo, hi, outside) = match side {
        Side::Right => (threshold, f64::INFINITY, threshold > g.x_max()),
        Side::Left => (f64::NEG_INFINITY, -threshold, -threshold < g.x_min()),
    };
    if outside {
        let w = Warning {
            t: f.time(),
            kind: WarningKind::EmptyWindow,
            message: format!("{side:?} half-line threshold {threshold} lies beyond the domain"),
        };
        return (0.0, Some(w));
    }
    (integrate_cells(f, lo, hi, |v| v * v), None)
}

/// `β⁻¹ ∫_{|x-μ|≤λ} u^{2n}`.
pub fn normalized_local_lp(f: &Field, beta: f64, mu: f64, lambda: f64, n: u32) -> Result<f64> {
    if !(beta > 0.0) || !(lambda > 0.0) {
        return Err(GkdvError::Domain(format!(
            "local Lp monitor needs beta > 0 and lambda > 0 (beta = {beta}, lambda = {lambda})"
        )));
    }
    let e = 2 * n as i32;
    Ok(integrate_cells(f, mu - lambda, mu + lambda, |v| v.powi(e)) / beta)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LocalMonitor {
    None,
    /// `β_floor⁻¹ ∫_{|x-μ|≤λ₁} u^{2n}` with the compact scales of the regime.
    Compact {
        #[serde(default)]
        mu0: f64,
        #[serde(default)]
        mu_mode: MuMode,
    },
    /// `∫_{|x + c tᵃ| ≤ t^b} u^{2n}`; `b` defaults to `0.9 · 2n/(4n-1)`.
    Window {
        #[serde(default)]
        shift: f64,
        #[serde(default)]
        a: f64,
        #[serde(default)]
        b: Option<f64>,
        #[serde(default = "one")]
        t_min: f64,
    },
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Cadence {
    Every,
    LogUniform { per_decade: u32 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KatoMonitor {
    pub l: f64,
    pub front: f64,
    #[serde(default)]
    pub velocity: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinearMonitor {
    pub theta: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    #[serde(default)]
    pub mu: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MonitorConfig {
    /// Emit the far-field verdicts. The mass columns are always filled.
    pub far_field: bool,
    pub local: LocalMonitor,
    pub kato: Option<KatoMonitor>,
    pub linear: Option<LinearMonitor>,
    /// Which samples feed the running minimum.
    pub cadence: Cadence,
    /// Required reduction of the running minimum.
    pub liminf_factor: f64,
}

impl Default for MonitorConfig {
    fn default() -> Self {
        Self {
            far_field: false,
            local: LocalMonitor::None,
            kato: None,
            linear: None,
            cadence: Cadence::LogUniform { per_decade: 50 },
            liminf_factor: 10.0,
        }
    }
}

impl MonitorConfig {
    pub fn validate(&self, p: u32, errors: &mut Vec<String>) {
        if !(self.liminf_factor > 1.0) {
            errors.push(format!(
                "monitors.liminf_factor: must be > 1, got {}",
                self.liminf_factor
            ));
        }
        if let Cadence::LogUniform { per_decade: 0 } = self.cadence {
            errors.push("monitors.cadence.per_decade: must be >= 1".into());
        }
        match self.local {
            LocalMonitor::None => {}
            LocalMonitor::Compact { .. } | LocalMonitor::Window { .. } if !p.is_multiple_of(2) => errors.push(format!(
                "monitors.local: local L^2n monitors need an even power, p = {p}"
            )),
            LocalMonitor::Window { b, t_min, .. } => {
                let n = (p / 2) as f64;
                let b_max = 2.0 * n / (4.0 * n - 1.0);
                if let Some(b) = b {
                    if !(b > 0.0 && b < b_max) {
                        errors.push(format!("monitors.local.b: must lie in (0, {b_max}), got {b}"));
                    }
                }
                if !(t_min > 0.0) {
                    errors.push("monitors.local.t_min: must be > 0".into());
                }
            }
            LocalMonitor::Compact { .. } => {}
        }
        if let Some(k) = self.kato {
            if !(k.l > 0.0) {
                errors.push(format!("monitors.kato.l: must be > 0, got {}", k.l));
            }
        }
        if let Some(l) = self.linear {
            for (name, v) in [("theta", l.theta), ("lambda1", l.lambda1), ("lambda2", l.lambda2)] {
                if !(v > 0.0) {
                    errors.push(format!("monitors.linear.{name}: must be > 0, got {v}"));
                }
            }
        }
    }
}

/// One row of the time series, in the fixed CSV column order.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonitorRecord {
    pub t: f64,
    pub mass: f64,
    pub energy: f64,
    pub grad_l2: f64,
    pub sup: f64,
    pub hs_crit: f64,
    pub right_mass: f64,
    pub left_mass: f64,
    pub local_lp_normalized: f64,
    pub running_min_local: f64,
    #[serde(rename = "J_quad")]
    pub j_quad: f64,
    #[serde(rename = "J_lin")]
    pub j_lin: f64,
    pub kato_residual: f64,
    pub linvirial_residual: f64,
    pub theta: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub mu: f64,
    pub beta_right: f64,
    pub beta_left: f64,
    pub beta_floor: f64,
}

pub const CSV_COLUMNS: [&str; 21] = [
    "t",
    "mass",
    "energy",
    "grad_l2",
    "sup",
    "hs_crit",
    "right_mass",
    "left_mass",
    "local_lp_normalized",
    "running_min_local",
    "J_quad",
    "J_lin",
    "kato_residual",
    "linvirial_residual",
    "theta",
    "lambda1",
    "lambda2",
    "mu",
    "beta_right",
    "beta_left",
    "beta_floor",
];

impl MonitorRecord {
    fn blank(rec: &ConservationRecord) -> Self {
        let nan = f64::NAN;
        Self {
            t: rec.t,
            mass: rec.mass,
            energy: rec.energy,
            grad_l2: rec.grad_l2,
            sup: rec.sup,
            hs_crit: rec.hs_crit,
            right_mass: nan,
            left_mass: nan,
            local_lp_normalized: nan,
            running_min_local: nan,
            j_quad: nan,
            j_lin: nan,
            kato_residual: nan,
            linvirial_residual: nan,
            theta: nan,
            lambda1: nan,
            lambda2: nan,
            mu: nan,
            beta_right: nan,
            beta_left: nan,
            beta_floor: nan,
        }
    }

    pub fn values(&self) -> [f64; 21] {
        [
            self.t,
            self.mass,
            self.energy,
            self.grad_l2,
            self.sup,
            self.hs_crit,
            self.right_mass,
            self.left_mass,
            self.local_lp_normalized,
            self.running_min_local,
            self.j_quad,
            self.j_lin,
            self.kato_residual,
            self.linvirial_residual,
            self.theta,
            self.lambda1,
            self.lambda2,
            self.mu,
            self.beta_right,
            self.beta_left,
            self.beta_floor,
        ]
    }

    pub fn from_values(v: &[f64]) -> Result<Self> {
        if v.len() != 21 {
            return Err(GkdvError::Shape {
                expected: 21,
                got: v.len(),
            });
        }
        Ok(Self {
            t: v[0],
            mass: v[1],
            energy: v[2],
            grad_l2: v[3],
            sup: v[4],
            hs_crit: v[5],
            right_mass: v[6],
            left_mass: v[7],
            local_lp_normalized: v[8],
            running_min_local: v[9],
            j_quad: v[10],
            j_lin: v[11],
            kato_residual: v[12],
            linvirial_residual: v[13],
            theta: v[14],
            lambda1: v[15],
            lambda2: v[16],
            mu: v[17],
            beta_right: v[18],
            beta_left: v[19],
            beta_floor: v[20],
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    /// Acceptance criterion id, e.g. `C7`.
    pub criterion: String,
    pub check: String,
    pub passed: bool,
    pub measured: f64,
    pub threshold: f64,
    pub detail: String,
}

impl Verdict {
    fn new(
        criterion: &str,
        check: &str,
        passed: bool,
        measured: f64,
        threshold: f64,
        detail: impl Into<String>,
    ) -> Self {
        Self {
            criterion: criterion.into(),
            check: check.into(),
            passed,
            measured,
            threshold,
            detail: detail.into(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BlowupSummary {
    pub t_detect: f64,
    pub reason: Option<BlowupReason>,
    pub fitted_t_star: Option<f64>,
    pub fitted_exponent: Option<f64>,
    pub fit_reliable: bool,
    pub fit_samples: usize,
    pub fit_residual_rms: Option<f64>,
    /// Fitted `C` in `-d/ds ∫φu - coercive ≥ -C/(s log² s)`.
    pub monotone_bound_constant: Option<f64>,
    pub regime_samples: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySummary {
    pub termination: String,
    pub steps: usize,
    pub samples: usize,
    pub t_final: f64,
    pub mass_drift: f64,
    pub energy_drift: f64,
    pub grad_initial: f64,
    pub grad_max: f64,
    pub max_boundary_ratio: f64,
    pub blowup: Option<BlowupSummary>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub schema: String,
    pub status: String,
    pub error: Option<String>,
    pub config: serde_json::Value,
    pub summary: TrajectorySummary,
    pub verdicts: Vec<Verdict>,
    pub warnings: Vec<Warning>,
    pub metadata: serde_json::Value,
    #[serde(skip)]
    pub records: Vec<MonitorRecord>,
    #[serde(skip)]
    pub final_field: Option<Field>,
    #[serde(skip)]
    pub checkpoints: Vec<Field>,
}

impl ExperimentReport {
    pub fn passed(&self) -> bool {
        self.status == "ok" && self.verdicts.iter().all(|v| v.passed)
    }

    pub fn verdict(&self, check: &str) -> Option<&Verdict> {
        self.verdicts.iter().find(|v| v.check == check)
    }
}

/// Running minimum restricted to a sampling cadence.
#[derive(Clone, Debug)]
pub struct RunningMin {
    cadence: Cadence,
    last_slot: Option<i64>,
    pub first: Option<f64>,
    pub current: Option<f64>,
}

impl RunningMin {
    pub fn new(cadence: Cadence) -> Self {
        Self {
            cadence,
            last_slot: None,
            first: None,
            current: None,
        }
    }

    /// Offers a value at time `t`; returns the running minimum.
    pub fn offer(&mut self, t: f64, value: f64) -> Option<f64> {
        if !value.is_finite() {
            return self.current;
        }
        let admit = match self.cadence {
            Cadence::Every => true,
            Cadence::LogUniform { per_decade } => {
                let slot = if t > 0.0 {
                    (per_decade as f64 * t.log10()).floor() as i64
                } else {
                    i64::MIN
                };
                let fresh = self.last_slot.is_none_or(|s| slot > s);
                if fresh {
                    self.last_slot = Some(slot);
                }
                fresh
            }
        };
        if admit {
            self.first.get_or_insert(value);
            self.current = Some(self.current.map_or(value, |c| c.min(value)));
        }
        self.current
    }
}

struct Monitors<'a> {
    cfg: &'a RunConfig,
    grid: Arc<Grid>,
    p: u32,
    scales: ScaleState,
    online_regime: Regime,
    running_min: RunningMin,
    local_mu: f64,
    last_t: Option<f64>,
    records: Vec<MonitorRecord>,
    kato_rhs: Vec<f64>,
    lin_rhs: Vec<f64>,
    coercive_ok: bool,
    coercive_min: f64,
    stored: Vec<Field>,
    store_fields: bool,
    checkpoints: Vec<Field>,
    warnings: Vec<Warning>,
    empty_flagged: [bool; 2],
    clip_flagged: bool,
    floor_raw_max: f64,
}

fn e_squared() -> f64 {
    std::f64::consts::E * std::f64::consts::E
}

impl Monitors<'_> {
    fn floor_now(&self, g: f64) -> f64 {
        let n = self.p / 2;
        self.floor_raw_max.max(g.powi(n as i32 - 1))
    }
}

impl Observer for Monitors<'_> {
    fn observe(&mut self, u: &Field, sample: &Sample) -> Result<()> {
        let t = u.time();
        let rec = &sample.record;
        let mut row = MonitorRecord::blank(rec);
        if self.last_t.is_some_and(|lt| t <= lt) {
            return Ok(());
        }
        self.scales.push(t, rec.grad_l2)?;
        let mon = &self.cfg.monitors;
        let p = self.p;

        row.beta_right = beta_right(&self.scales, t)?;
        if self.p.is_multiple_of(2) {
            self.floor_raw_max = self.floor_now(rec.grad_l2);
            row.beta_floor = self.floor_raw_max;
        }
        if let Regime::Global = self.online_regime {
            // t log^{1+η} t → 0 as t → 0
            row.beta_left = if t > 0.0 { beta_left(&self.scales, t)? } else { 0.0 };
        }
        let (r, w) = halfline_mass(u, Side::Right, row.beta_right);
        row.right_mass = r;
        if let (Some(w), false, true) = (w, self.empty_flagged[0], mon.far_field) {
            self.empty_flagged[0] = true;
            self.warnings.push(w);
        }
        if row.beta_left.is_finite() {
            let (l, w) = halfline_mass(u, Side::Left, row.beta_left);
            row.left_mass = l;
            if let (Some(w), false, true) = (w, self.empty_flagged[1], mon.far_field) {
                self.empty_flagged[1] = true;
                self.warnings.push(w);
            }
        }

        if let Some(k) = mon.kato {
            let spec = WeightSpec::RightTanh {
                l: k.l,
                front: k.front + k.velocity * t,
            };
            let w = eval_weight(
                &spec,
                Some(&WeightRates::RightTanh {
                    front_velocity: k.velocity,
                }),
                &self.grid,
            )?;
            row.j_quad = quadratic_virial(u, &w)?;
            self.kato_rhs.push(kato_rhs(u, &w, p)?.total);
        }
        if let Some(l) = mon.linear {
            let spec = WeightSpec::CompactTanhSech {
                theta: l.theta,
                lambda1: l.lambda1,
                lambda2: l.lambda2,
                mu: l.mu,
            };
            let w = eval_weight(&spec, Some(&WeightRates::zero_for(&spec)), &self.grid)?;
            row.j_lin = linear_virial(u, &w)?;
            let terms = linear_virial_rhs(u, &w, p)?;
            self.lin_rhs.push(terms.total);
            if let (Some(c), Some(inner)) = (terms.coercive, terms.nonlinear_inner) {
                self.coercive_ok &= c >= 0.0 && inner >= 0.0;
                self.coercive_min = self.coercive_min.min(c.min(inner));
            }
        }

        match mon.local {
            LocalMonitor::None => {}
            LocalMonitor::Compact { mu_mode, .. } => {
                if let Regime::Global = self.online_regime {
                    if t >= e_squared() * (1.0 - 1e-12) {
                        let beta = row.beta_floor.max(f64::MIN_POSITIVE);
                        let sc = compact_scales_for(ScaleRegime::Global, t.max(e_squared()), beta)?;
                        let dt = t - self.last_t.unwrap_or(t);
                        self.local_mu = mu_track(&sc, u, self.local_mu, dt, mu_mode);
                        row.theta = sc.theta;
                        row.lambda1 = sc.lambda1;
                        row.lambda2 = sc.lambda2;
                        row.mu = self.local_mu;
                        let v = normalized_local_lp(u, beta, self.local_mu, sc.lambda1, p / 2)?;
                        row.local_lp_normalized = v;
                        row.running_min_local = self.running_min.offer(t, v).unwrap_or(f64::NAN);
                    }
                }
            }
            LocalMonitor::Window { shift, a, b, t_min } => {
                if t >= t_min {
                    let n = p / 2;
                    let b = b.unwrap_or_else(|| default_window_exponent(n));
                    let centre = -shift * t.powf(a);
                    let half = t.powf(b);
                    let g = u.grid();
                    if (centre - half < g.x_min() || centre + half > g.x_max()) && !self.clip_flagged {
                        self.clip_flagged = true;
                        self.warnings.push(Warning {
                            t,
                            kind: WarningKind::WindowClipped,
                            message: format!(
                                "local window [{}, {}] clipped to the domain",
                                centre - half,
                                centre + half
                            ),
                        });
                    }
                    let v = normalized_local_lp(u, 1.0, centre, half, n)?;
                    row.mu = centre;
                    row.lambda1 = half;
                    row.local_lp_normalized = v;
                    row.running_min_local = self.running_min.offer(t, v).unwrap_or(f64::NAN);
                }
            }
        }

        if self.store_fields {
            self.stored.push(u.clone());
        }
        let every = self.cfg.output.checkpoint_every;
        if every > 0 && self.records.len().is_multiple_of(every) {
            self.checkpoints.push(u.clone());
        }
        self.records.push(row);
        self.last_t = Some(t);
        Ok(())
    }
}

/// `0.9 · 2n/(4n - 1)`.
pub fn default_window_exponent(n: u32) -> f64 {
    let n = n as f64;
    0.9 * 2.0 * n / (4.0 * n - 1.0)
}

/// Fills residual columns from centred differences of the functional and
/// returns the largest violation ratio `|residual| / tolerance`.
fn fill_residuals(
    records: &mut [MonitorRecord],
    rhs: &[f64],
    get: impl Fn(&MonitorRecord) -> f64,
    set: impl Fn(&mut MonitorRecord, f64),
) -> (f64, usize, f64) {
    let times: Vec<f64> = records.iter().map(|r| r.t).collect();
    let vals: Vec<f64> = records.iter().map(&get).collect();
    let rates = centered_rate(&times, &vals);
    let mut worst = 0.0f64;
    let mut t_worst = times.first().copied().unwrap_or(0.0);
    let mut count = 0;
    for (i, rate) in rates.iter().enumerate() {
        let k = i + 1;
        let residual = (rhs[k] - rate).abs();
        set(&mut records[k], residual);
        let ratio = residual / identity_tolerance(*rate);
        if ratio > worst {
            worst = ratio;
            t_worst = times[k];
        }
        count += 1;
    }
    (worst, count, t_worst)
}

fn non_decreasing(xs: impl Iterator<Item = f64>, jitter: f64) -> (bool, f64) {
    let mut prev = f64::NEG_INFINITY;
    let mut worst_drop = 0.0f64;
    for x in xs.filter(|x| x.is_finite()) {
        worst_drop = worst_drop.max(prev - x);
        prev = prev.max(x);
    }
    (worst_drop <= jitter, worst_drop)
}

/// Validates, runs and monitors one experiment. Solver failures become a
/// failed report rather than an error.
pub fn run_experiment(cfg: &RunConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let config_echo = serde_json::to_value(cfg)?;
    let p = cfg.model.p;
    let grid = Grid::shared(cfg.grid.n, cfg.grid.length, cfg.grid.center)?;
    let u0 = make_initial(&cfg.init, p, &grid)?;
    let solver_cfg = cfg.solver_config();

    let online_regime = Regime::Global;
    let store_fields =
        cfg.scales.regime != RegimeChoice::Global && matches!(cfg.monitors.local, LocalMonitor::Compact { .. });
    let local_mu = match cfg.monitors.local {
        LocalMonitor::Compact { mu0, .. } => mu0,
        _ => 0.0,
    };
    let mut monitors = Monitors {
        cfg,
        grid: grid.clone(),
        p,
        scales: ScaleState::new(online_regime, p, cfg.scales.params()),
        online_regime,
        running_min: RunningMin::new(cfg.monitors.cadence),
        local_mu,
        last_t: None,
        records: Vec::new(),
        kato_rhs: Vec::new(),
        lin_rhs: Vec::new(),
        coercive_ok: true,
        coercive_min: f64::INFINITY,
        stored: Vec::new(),
        store_fields,
        checkpoints: Vec::new(),
        warnings: Vec::new(),
        empty_flagged: [false; 2],
        clip_flagged: false,
        floor_raw_max: 0.0,
    };
    if let Some(r) = soliton_edge_ratio(&cfg.init, p, &grid) {
        if r > SOLITON_EDGE_TOLERANCE {
            monitors.warnings.push(Warning {
                t: 0.0,
                kind: WarningKind::TruncatedTails,
                message: format!("soliton edge/peak ratio {r:.3e} exceeds {SOLITON_EDGE_TOLERANCE:.0e}"),
            });
        }
    }

    let outcome = evolve(&u0, &solver_cfg, &mut [&mut monitors]);
    let traj = match outcome {
        Ok(t) => t,
        Err(e) => {
            let mut warnings = monitors.warnings;
            warnings.push(Warning {
                t: monitors.last_t.unwrap_or(0.0),
                kind: WarningKind::ResidualSpike,
                message: format!("run aborted: {e}"),
            });
            return Ok(ExperimentReport {
                schema: REPORT_SCHEMA.into(),
                status: "failed".into(),
                error: Some(e.to_string()),
                config: config_echo,
                summary: TrajectorySummary::default(),
                verdicts: Vec::new(),
                warnings,
                metadata: serde_json::json!({}),
                records: monitors.records,
                final_field: None,
                checkpoints: monitors.checkpoints,
            });
        }
    };
    finish(cfg, config_echo, monitors, traj, &grid)
}

fn finish(
    cfg: &RunConfig,
    config_echo: serde_json::Value,
    mut m: Monitors<'_>,
    traj: Trajectory,
    grid: &Arc<Grid>,
) -> Result<ExperimentReport> {
    let p = cfg.model.p;
    let mut verdicts = Vec::new();
    let mut warnings = std::mem::take(&mut m.warnings);
    warnings.extend(traj.warnings.iter().cloned());
    let mut records = std::mem::take(&mut m.records);
    let completed = matches!(traj.termination, Termination::Completed);

    let mass0 = records.first().map_or(0.0, |r| r.mass);
    let grad0 = records.first().map_or(0.0, |r| r.grad_l2);
    let grad_max = traj.grad_history.iter().map(|h| h.1).fold(0.0, f64::max);
    let mut summary = TrajectorySummary {
        termination: traj.termination.label().into(),
        steps: traj.steps,
        samples: records.len(),
        t_final: traj.final_field.time(),
        mass_drift: traj.relative_drift(|r| r.mass),
        energy_drift: traj.relative_drift(|r| r.energy),
        grad_initial: grad0,
        grad_max,
        max_boundary_ratio: traj.max_boundary_ratio,
        blowup: None,
    };

    // conservation and exact transport
    if completed {
        verdicts.push(Verdict::new(
            "C1",
            "mass_drift",
            summary.mass_drift < 1e-8,
            summary.mass_drift,
            1e-8,
            "relative drift of the mass over all samples",
        ));
        verdicts.push(Verdict::new(
            "C1",
            "energy_drift",
            summary.energy_drift < 1e-6,
            summary.energy_drift,
            1e-6,
            "relative drift of the energy over all samples",
        ));
        if let InitSpec::Soliton { c, x0 } = cfg.init {
            let exact = soliton_profile(p, c, x0 + c * summary.t_final, grid)?;
            let err = traj
                .final_field
                .values()
                .iter()
                .zip(exact.values())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            verdicts.push(Verdict::new(
                "C1",
                "soliton_transport",
                err < 1e-6,
                err,
                1e-6,
                "terminal sup error against the shifted exact profile",
            ));
        }
    }

    // identities
    if cfg.monitors.kato.is_some() {
        let (worst, count, t_worst) =
            fill_residuals(&mut records, &m.kato_rhs, |r| r.j_quad, |r, v| r.kato_residual = v);
        if worst > 1.0 {
            warnings.push(spike_warning("Kato", worst, t_worst));
        }
        verdicts.push(Verdict::new(
            "C2",
            "kato_identity",
            worst <= 1.0 && count > 0,
            worst,
            1.0,
            format!("largest residual / max(1e-6, 1e-3|dJ/dt|) over {count} interior samples"),
        ));
    }
    if cfg.monitors.linear.is_some() {
        let (worst, count, t_worst) =
            fill_residuals(&mut records, &m.lin_rhs, |r| r.j_lin, |r, v| r.linvirial_residual = v);
        if worst > 1.0 {
            warnings.push(spike_warning("linear virial", worst, t_worst));
        }
        verdicts.push(Verdict::new(
            "C3",
            "linear_virial_identity",
            worst <= 1.0 && count > 0,
            worst,
            1.0,
            format!("largest residual / max(1e-6, 1e-3|d/dt ∫φu|) over {count} interior samples"),
        ));
        if p.is_multiple_of(2) {
            verdicts.push(Verdict::new(
                "C3",
                "coercive_sign",
                m.coercive_ok,
                if m.coercive_min.is_finite() {
                    m.coercive_min
                } else {
                    0.0
                },
                0.0,
                "coercive term and inner flux contribution are non-negative at every sample",
            ));
        }
    }

    // blow-up bookkeeping
    let mut t_star_used = None;
    if let Some(ev) = traj.blowup() {
        let fit = ev.fit.as_ref();
        let mut bs = BlowupSummary {
            t_detect: ev.t_detect,
            reason: Some(ev.reason),
            fitted_t_star: ev.fitted_t_star,
            fitted_exponent: ev.fitted_exponent,
            fit_reliable: fit.is_some_and(|f| f.reliable),
            fit_samples: fit.map_or(0, |f| f.n_samples),
            fit_residual_rms: fit.map(|f| f.residual_rms),
            monotone_bound_constant: None,
            regime_samples: 0,
        };
        if cfg.scales.regime != RegimeChoice::Global {
            if let Some(t_star) = ev.fitted_t_star.filter(|_| bs.fit_reliable) {
                t_star_used = Some(t_star);
                let (count, c_fit) = blowup_regime_pass(cfg, &mut m, &mut records, t_star, &mut verdicts)?;
                bs.regime_samples = count;
                bs.monotone_bound_constant = c_fit;
            }
        }
        summary.blowup = Some(bs);
    }
    let growth = if grad0 > 0.0 { grad_max / grad0 } else { 0.0 };
    if summary.blowup.is_some() || matches!(traj.termination, Termination::ResolutionExhausted { .. }) {
        verdicts.push(Verdict::new(
            "C6",
            "gradient_growth",
            growth >= 10.0,
            growth,
            10.0,
            "max ‖∂ₓu‖ / ‖∂ₓu₀‖ before the run stopped",
        ));
        let target = (1.0 - critical_exponent(p)) / 3.0 - 0.05;
        match summary.blowup.as_ref() {
            Some(b) if b.fit_reliable => {
                let e = b.fitted_exponent.unwrap_or(f64::NAN);
                verdicts.push(Verdict::new(
                    "C6",
                    "fitted_exponent",
                    e >= target,
                    e,
                    target,
                    "least-squares exponent of ‖∂ₓu‖ against T̂* - t over the last decade of growth",
                ));
            }
            _ => warnings.push(Warning {
                t: summary.t_final,
                kind: WarningKind::UnreliableFit,
                message: "no reliable blow-up fit: the growth criterion reduces to the 10x check".into(),
            }),
        }
    }

    // far field
    if cfg.monitors.far_field && completed && cfg.scales.regime != RegimeChoice::Blowup {
        let (mono, drop) = non_decreasing(records.iter().map(|r| -r.right_mass), 1e-9);
        verdicts.push(Verdict::new(
            "C7",
            "right_mass_monotone",
            mono,
            drop,
            1e-9,
            "largest increase of the mass beyond beta_right between samples",
        ));
        let last = records.last().copied();
        let fr = last.map_or(0.0, |r| r.right_mass);
        let fl = last.map_or(0.0, |r| r.left_mass);
        let rel = |v: f64| if mass0 > 0.0 { v / mass0 } else { v };
        verdicts.push(Verdict::new(
            "C7",
            "right_mass_final",
            rel(fr) <= 1e-4,
            rel(fr),
            1e-4,
            "final mass beyond beta_right relative to the mass",
        ));
        verdicts.push(Verdict::new(
            "C7",
            "left_mass_final",
            rel(fl) <= 1e-3,
            rel(fl),
            1e-3,
            "final mass beyond -beta_left relative to the mass",
        ));
    }

    // local decay
    if !matches!(cfg.monitors.local, LocalMonitor::None) {
        let rm = &m.running_min;
        let (first, cur) = (rm.first.unwrap_or(f64::NAN), rm.current.unwrap_or(f64::NAN));
        let factor = cfg.monitors.liminf_factor;
        let reduction = if cur > 0.0 { first / cur } else { f64::INFINITY };
        let ok = first.is_finite() && cur <= first / factor;
        verdicts.push(Verdict::new(
            "C8",
            "running_min_reduction",
            ok,
            if first.is_finite() { reduction } else { f64::NAN },
            factor,
            "first monitored value over the final running minimum",
        ));
    }

    // scale laws
    let (br_mono, br_drop) = non_decreasing(records.iter().map(|r| r.beta_right), 0.0);
    verdicts.push(Verdict::new(
        "C9",
        "beta_right_non_decreasing",
        br_mono,
        br_drop,
        0.0,
        "largest decrease of beta_right between samples",
    ));
    if p.is_multiple_of(2) {
        let n = p / 2;
        let (f_mono, f_drop) = non_decreasing(records.iter().map(|r| r.beta_floor), 0.0);
        let dominated = records
            .iter()
            .all(|r| r.beta_floor >= r.grad_l2.powi(n as i32 - 1) * (1.0 - 1e-15));
        verdicts.push(Verdict::new(
            "C9",
            "beta_floor_monotone_majorant",
            f_mono && dominated,
            f_drop,
            0.0,
            "beta_floor is non-decreasing and dominates ‖∂ₓu‖^{n-1}",
        ));
    }

    let metadata = serde_json::json!({
        "csv_columns": CSV_COLUMNS,
        "beta_floor": {
            "online": "running maximum of ‖∂ₓu‖^(n-1)",
            "envelope_width_samples": cfg.scales.floor_window,
        },
        "t_star_used": t_star_used,
        "critical_exponent": critical_exponent(p),
        "cadence": cfg.monitors.cadence,
    });

    Ok(ExperimentReport {
        schema: REPORT_SCHEMA.into(),
        status: "ok".into(),
        error: None,
        config: config_echo,
        summary,
        verdicts,
        warnings,
        metadata,
        records,
        final_field: Some(traj.final_field),
        checkpoints: m.checkpoints,
    })
}

fn spike_warning(name: &str, worst: f64, t: f64) -> Warning {
    Warning {
        t,
        kind: WarningKind::ResidualSpike,
        message: format!("{name} identity residual reached {worst:.3} x tolerance"),
    }
}

/// Post-run pass over stored samples in `s = T̂* - t ∈ (0, ½)`: compact
/// scales, the blow-up local monitor, `beta_left`, and the one-sided
/// monotonicity regression.
fn blowup_regime_pass(
    cfg: &RunConfig,
    m: &mut Monitors<'_>,
    records: &mut [MonitorRecord],
    t_star: f64,
    verdicts: &mut Vec<Verdict>,
) -> Result<(usize, Option<f64>)> {
    let p = cfg.model.p;
    let params = cfg.scales.params();
    let history: Vec<(f64, f64)> = records.iter().map(|r| (r.t, r.grad_l2)).collect();
    let state = ScaleState::from_history(Regime::Blowup { t_star }, p, params, &history)?;
    for r in records.iter_mut() {
        r.beta_left = if r.t < t_star {
            beta_left(&state, r.t)?
        } else {
            f64::NAN
        };
        r.local_lp_normalized = f64::NAN;
        r.running_min_local = f64::NAN;
    }
    if !p.is_multiple_of(2) || m.stored.len() != records.len() {
        return Ok((0, None));
    }
    let n = p / 2;
    let (mu_mode, mut mu) = match cfg.monitors.local {
        LocalMonitor::Compact { mu_mode, mu0 } => (mu_mode, mu0),
        _ => (MuMode::Fixed, 0.0),
    };
    let mut rmin = RunningMin::new(cfg.monitors.cadence);
    let mut times = Vec::new();
    let mut j_vals = Vec::new();
    let mut coercive = Vec::new();
    let mut last_t = None;
    let mut identity_ok = true;
    let mut worst_identity = 0.0f64;
    for (k, r) in records.iter_mut().enumerate() {
        let s = t_star - r.t;
        if !(s > 0.0 && s < 0.5) {
            continue;
        }
        let beta = r.beta_floor.max(f64::MIN_POSITIVE);
        let sc = compact_scales_for(ScaleRegime::Blowup, s, beta)?;
        identity_ok &= ((sc.theta * sc.lambda1) / (s * beta) - 1.0).abs() < 1e-12
            && ((sc.lambda1 / sc.lambda2) * s.ln().powi(2) - 1.0).abs() < 1e-12;
        worst_identity = worst_identity.max(((sc.theta * sc.lambda1) / (s * beta) - 1.0).abs());
        let dt = r.t - last_t.unwrap_or(r.t);
        last_t = Some(r.t);
        let u = &m.stored[k];
        mu = mu_track(&sc, u, mu, dt, mu_mode);
        r.theta = sc.theta;
        r.lambda1 = sc.lambda1;
        r.lambda2 = sc.lambda2;
        r.mu = mu;
        let v = normalized_local_lp(u, beta, mu, sc.lambda1, n)?;
        r.local_lp_normalized = v;
        r.running_min_local = rmin.offer(s.recip(), v).unwrap_or(f64::NAN);
        let spec = WeightSpec::CompactTanhSech {
            theta: sc.theta,
            lambda1: sc.lambda1,
            lambda2: sc.lambda2,
            mu,
        };
        let w = eval_weight(&spec, None, &m.grid)?;
        times.push(r.t);
        j_vals.push(linear_virial(u, &w)?);
        let lo = mu - sc.lambda1;
        let hi = mu + sc.lambda1;
        coercive.push(integrate_window(u, lo, hi, |x| x.powi(p as i32)) / (sc.theta * sc.lambda1));
    }
    let count = times.len();
    verdicts.push(Verdict::new(
        "C9",
        "compact_scale_identities",
        identity_ok,
        worst_identity,
        1e-12,
        format!("θλ₁ = sβ and λ₁/λ₂ = 1/log²s on {count} blow-up-regime samples"),
    ));
    if count < 3 {
        return Ok((count, None));
    }
    // d/dt = -d/ds, so -d/ds ∫φu is the time derivative
    let rates = centered_rate(&times, &j_vals);
    let mut c_fit = 0.0f64;
    for (i, rate) in rates.iter().enumerate() {
        let s = t_star - times[i + 1];
        let slack = rate - coercive[i + 1];
        c_fit = c_fit.max(-slack * s * s.ln().powi(2));
    }
    m.running_min = rmin;
    Ok((count, Some(c_fit)))
}
