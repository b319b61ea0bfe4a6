//! Time evolution with the Airy part integrated exactly in Fourier space,
//! dealiased nonlinear products, adaptive steps and blow-up detection.

mod fit;
mod stepper;

use std::f64::consts::PI;

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub use fit::{fit_blowup, BlowupFit, MIN_FIT_SAMPLES};
pub use stepper::Stepper;

use crate::analysis::ConservationRecord;
use crate::error::{GkdvError, Result};
use crate::grid::{boundary_mass, Field};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    IfRk4,
    EtdRk4,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Dealias {
    TwoThirds,
    ZeroPad { factor: usize },
}

impl Dealias {
    /// Smallest padding factor that forms `uᵖ` without aliasing.
    pub fn min_pad_factor(p: u32) -> usize {
        (p as usize + 2) / 2
    }

    pub fn default_for(p: u32) -> Self {
        if p >= 6 {
            Dealias::ZeroPad {
                factor: Self::min_pad_factor(p),
            }
        } else {
            Dealias::TwoThirds
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TimeStep {
    Fixed { dt: f64 },
    Adaptive { cfl_safety: f64, dt_min: f64, dt_max: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub p: u32,
    pub scheme: Scheme,
    pub time_step: TimeStep,
    pub dealias: Dealias,
    pub t_end: f64,
    pub blowup_sup_threshold: f64,
    /// Relative to the initial gradient norm.
    pub blowup_grad_factor: f64,
    pub sample_every: usize,
    /// Fraction of the window (split between both edges) watched for
    /// wrap-around mass.
    pub boundary_fraction: f64,
    /// Tolerated boundary mass relative to the initial mass.
    pub boundary_tolerance: f64,
}

impl SolverConfig {
    pub fn new(p: u32, time_step: TimeStep, t_end: f64) -> Self {
        Self {
            p,
            scheme: Scheme::EtdRk4,
            time_step,
            dealias: Dealias::default_for(p),
            t_end,
            blowup_sup_threshold: 1e6,
            blowup_grad_factor: 1e4,
            sample_every: 1,
            boundary_fraction: 0.05,
            boundary_tolerance: 1e-6,
        }
    }

    pub fn fixed(p: u32, dt: f64, t_end: f64) -> Self {
        Self::new(p, TimeStep::Fixed { dt }, t_end)
    }

    /// Collects every violated constraint, prefixed with `prefix`.
    pub fn validate(&self, prefix: &str, errors: &mut Vec<String>) {
        if self.p < 2 {
            errors.push(format!("model.p: must be >= 2, got {}", self.p));
        }
        match self.time_step {
            TimeStep::Fixed { dt } => {
                if !(dt > 0.0 && dt.is_finite()) {
                    errors.push(format!("{prefix}time_step.dt: must be > 0, got {dt}"));
                }
            }
            TimeStep::Adaptive {
                cfl_safety,
                dt_min,
                dt_max,
            } => {
                if !(cfl_safety > 0.0 && cfl_safety <= 1.0) {
                    errors.push(format!(
                        "{prefix}time_step.cfl_safety: must lie in (0, 1], got {cfl_safety}"
                    ));
                }
                if !(dt_min > 0.0) {
                    errors.push(format!("{prefix}time_step.dt_min: must be > 0, got {dt_min}"));
                }
                if !(dt_max >= dt_min && dt_max.is_finite()) {
                    errors.push(format!(
                        "{prefix}time_step.dt_max: must be finite and >= dt_min, got {dt_max}"
                    ));
                }
            }
        }
        if let Dealias::ZeroPad { factor } = self.dealias {
            let need = Dealias::min_pad_factor(self.p);
            if factor < need {
                errors.push(format!(
                    "{prefix}dealias.factor: p = {} needs factor >= {need}, got {factor}",
                    self.p
                ));
            }
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            errors.push(format!("{prefix}t_end: must be finite and >= 0, got {}", self.t_end));
        }
        if !(self.blowup_sup_threshold > 0.0) {
            errors.push(format!("{prefix}blowup_sup_threshold: must be > 0"));
        }
        if !(self.blowup_grad_factor > 1.0) {
            errors.push(format!("{prefix}blowup_grad_factor: must be > 1"));
        }
        if self.sample_every == 0 {
            errors.push(format!("{prefix}sample_every: must be >= 1"));
        }
        if !(self.boundary_fraction > 0.0 && self.boundary_fraction < 1.0) {
            errors.push(format!("{prefix}boundary_fraction: must lie in (0, 1)"));
        }
        if !(self.boundary_tolerance > 0.0) {
            errors.push(format!("{prefix}boundary_tolerance: must be > 0"));
        }
    }

    fn checked(&self) -> Result<()> {
        let mut errors = Vec::new();
        self.validate("solver.", &mut errors);
        if errors.is_empty() {
            Ok(())
        } else {
            Err(GkdvError::Validation(errors))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlowupReason {
    SupThreshold,
    GradFactor,
    Nonfinite,
}

#[derive(Clone, Debug)]
pub struct BlowupEvent {
    pub t_detect: f64,
    pub reason: BlowupReason,
    pub last_good_field: Field,
    pub fitted_t_star: Option<f64>,
    pub fitted_exponent: Option<f64>,
    pub fit: Option<BlowupFit>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WarningKind {
    DomainAdequacy,
    UnreliableFit,
    WindowClipped,
    ResidualSpike,
    TruncatedTails,
    EmptyWindow,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Warning {
    pub t: f64,
    pub kind: WarningKind,
    pub message: String,
}

#[derive(Clone, Debug)]
pub enum Termination {
    Completed,
    Blowup(Box<BlowupEvent>),
    ResolutionExhausted { t: f64, dt_bound: f64, dt_min: f64 },
}

impl Termination {
    pub fn label(&self) -> &'static str {
        match self {
            Termination::Completed => "completed",
            Termination::Blowup(_) => "blowup",
            Termination::ResolutionExhausted { .. } => "resolution_exhausted",
        }
    }
}

/// One diagnostic sample.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub step: usize,
    pub dt: f64,
    pub record: ConservationRecord,
    /// `∫₀ᵗ ‖∂ₓu‖^{(p-1)/2}`, trapezoid over every step.
    pub grad_power_integral: f64,
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
    /// `(t, ‖∂ₓu(t)‖)` after every step.
    pub grad_history: Vec<(f64, f64)>,
    pub final_field: Field,
    pub steps: usize,
    pub warnings: Vec<Warning>,
    pub termination: Termination,
    /// Largest boundary mass seen, relative to the initial mass.
    pub max_boundary_ratio: f64,
}

impl Trajectory {
    pub fn blowup(&self) -> Option<&BlowupEvent> {
        match &self.termination {
            Termination::Blowup(b) => Some(b),
            _ => None,
        }
    }

    /// Largest `|q(t)/q(0) - 1|` over the samples for `q` = mass or energy.
    pub fn relative_drift(&self, pick: impl Fn(&ConservationRecord) -> f64) -> f64 {
        let Some(first) = self.samples.first() else {
            return 0.0;
        };
        let q0 = pick(&first.record);
        self.samples
            .iter()
            .map(|s| {
                let q = pick(&s.record);
                if q0 == 0.0 {
                    q.abs()
                } else {
                    (q / q0 - 1.0).abs()
                }
            })
            .fold(0.0, f64::max)
    }
}

/// Receives every sampled state.
pub trait Observer {
    fn observe(&mut self, u: &Field, sample: &Sample) -> Result<()>;
}

impl<F: FnMut(&Field, &Sample) -> Result<()>> Observer for F {
    fn observe(&mut self, u: &Field, sample: &Sample) -> Result<()> {
        self(u, sample)
    }
}

/// Raw advection bound `cfl · dx / (p sup|u|^{p-1})`, before clipping.
fn advection_bound(f: &Field, p: u32, cfl: f64) -> f64 {
    let sup = f.max_abs();
    let denom = p as f64 * sup.powi(p as i32 - 1);
    if denom == 0.0 {
        f64::INFINITY
    } else {
        cfl * f.grid().dx() / denom
    }
}

/// Adaptive step for state `f`: the nonlinear advection bound clipped to
/// `[dt_min, dt_max]`. A bound below `dt_min` means the grid can no longer
/// follow the solution.
pub fn estimate_dt(f: &Field, cfg: &SolverConfig) -> Result<f64> {
    match cfg.time_step {
        TimeStep::Fixed { dt } => Ok(dt),
        TimeStep::Adaptive {
            cfl_safety,
            dt_min,
            dt_max,
        } => {
            let bound = advection_bound(f, cfg.p, cfl_safety);
            if bound < dt_min {
                return Err(GkdvError::ResolutionExhausted {
                    t: f.time(),
                    dt: bound,
                    dt_min,
                });
            }
            Ok(bound.min(dt_max))
        }
    }
}

/// Rounds an admissible step down to `dt_max · 2^{-j/4}` so that adaptive
/// runs reuse a small set of propagator tables.
fn quantize_step(dt: f64, dt_max: f64) -> f64 {
    if dt >= dt_max {
        return dt_max;
    }
    let j = (4.0 * (dt_max / dt).log2()).ceil();
    dt_max * 2f64.powf(-j / 4.0)
}

/// One step of size `dt`.
pub fn step(f: &Field, dt: f64, cfg: &SolverConfig) -> Result<Field> {
    if !f.is_finite() {
        return Err(GkdvError::InvalidField("non-finite input to step".into()));
    }
    if !(dt > 0.0) {
        return Err(GkdvError::Domain(format!("step size must be > 0, got {dt}")));
    }
    cfg.checked()?;
    let grid = f.grid().clone();
    let mut st = Stepper::new(grid.clone(), cfg.p, cfg.scheme, cfg.dealias);
    let mut v = grid.forward(f.values());
    st.advance(&mut v, dt);
    let out = Field::new(grid.clone(), grid.inverse(&v), f.time() + dt)?;
    if !out.is_finite() {
        return Err(GkdvError::InvalidField(format!(
            "non-finite state after step at t = {}",
            out.time()
        )));
    }
    Ok(out)
}

/// `‖∂ₓu‖_{L²}` straight from the spectrum.
fn grad_norm_from_spectrum(v: &[Complex64], length: f64, nyquist: Option<usize>) -> f64 {
    let n = v.len();
    let mut sum = 0.0;
    for (j, c) in v.iter().enumerate() {
        if Some(j) == nyquist {
            continue;
        }
        let k = 2.0 * PI * crate::grid::signed_index(j, n) as f64 / length;
        sum += k * k * c.norm_sqr();
    }
    (length * sum / (n as f64 * n as f64)).sqrt()
}

/// Integrates `f0` to `cfg.t_end` or until blow-up is detected.
pub fn evolve(f0: &Field, cfg: &SolverConfig, observers: &mut [&mut dyn Observer]) -> Result<Trajectory> {
    cfg.checked()?;
    if !f0.is_finite() {
        return Err(GkdvError::InvalidField("non-finite initial data".into()));
    }
    let grid = f0.grid().clone();
    let p = cfg.p;
    let half_power = 0.5 * (p as f64 - 1.0);
    let mut stepper = Stepper::new(grid.clone(), p, cfg.scheme, cfg.dealias);
    let mut v = grid.forward(f0.values());
    let mut u = f0.clone();
    let t_start = f0.time();
    let t_end = t_start + cfg.t_end;

    let mass0 = crate::analysis::mass(f0);
    let g0 = grad_norm_from_spectrum(&v, grid.length(), grid.nyquist_index());
    let mut grad_history = vec![(t_start, g0)];
    let mut integral = 0.0;
    let mut samples = Vec::new();
    let mut warnings = Vec::new();
    let mut max_boundary_ratio = 0.0f64;
    let mut boundary_flagged = false;

    let mut take_sample = |u: &Field,
                           step: usize,
                           dt: f64,
                           integral: f64,
                           samples: &mut Vec<Sample>,
                           warnings: &mut Vec<Warning>,
                           observers: &mut [&mut dyn Observer]|
     -> Result<()> {
        let record = ConservationRecord::measure(u, p)?;
        let s = Sample {
            step,
            dt,
            record,
            grad_power_integral: integral,
        };
        if mass0 > 0.0 {
            let ratio = boundary_mass(u, cfg.boundary_fraction) / mass0;
            max_boundary_ratio = max_boundary_ratio.max(ratio);
            if ratio > cfg.boundary_tolerance && !boundary_flagged {
                boundary_flagged = true;
                warnings.push(Warning {
                    t: u.time(),
                    kind: WarningKind::DomainAdequacy,
                    message: format!(
                        "boundary mass {ratio:.3e} x initial mass exceeds tolerance {:.1e}",
                        cfg.boundary_tolerance
                    ),
                });
            }
        }
        for obs in observers.iter_mut() {
            obs.observe(u, &s)?;
        }
        samples.push(s);
        Ok(())
    };

    take_sample(&u, 0, 0.0, 0.0, &mut samples, &mut warnings, observers)?;

    let mut steps = 0usize;
    let mut t = t_start;
    let mut termination = Termination::Completed;
    // steps shorter than this fraction of the nominal step are absorbed
    let tiny = 1e-9;
    while t < t_end {
        let nominal = match cfg.time_step {
            TimeStep::Fixed { dt } => dt,
            TimeStep::Adaptive {
                cfl_safety,
                dt_min,
                dt_max,
            } => {
                let bound = advection_bound(&u, p, cfl_safety);
                if bound < dt_min {
                    termination = Termination::ResolutionExhausted {
                        t,
                        dt_bound: bound,
                        dt_min,
                    };
                    break;
                }
                quantize_step(bound.min(dt_max), dt_max)
            }
        };
        let remaining = t_end - t;
        let dt = if remaining <= nominal * (1.0 + tiny) {
            remaining
        } else {
            nominal
        };
        stepper.advance(&mut v, dt);
        steps += 1;
        t = if dt == remaining { t_end } else { t + dt };

        let values = grid.inverse(&v);
        let g = grad_norm_from_spectrum(&v, grid.length(), grid.nyquist_index());
        let finite = g.is_finite() && values.iter().all(|x| x.is_finite());
        if !finite {
            termination = blowup_termination(t, BlowupReason::Nonfinite, u.clone(), &grad_history, &mut warnings);
            break;
        }
        let g_prev = grad_history.last().map_or(g0, |h| h.1);
        integral += 0.5 * dt * (g_prev.powf(half_power) + g.powf(half_power));
        grad_history.push((t, g));
        u = Field::new(grid.clone(), values, t)?;

        let reason = if u.max_abs() > cfg.blowup_sup_threshold {
            Some(BlowupReason::SupThreshold)
        } else if g0 > 0.0 && g > cfg.blowup_grad_factor * g0 {
            Some(BlowupReason::GradFactor)
        } else {
            None
        };
        let last = t >= t_end || reason.is_some();
        if steps.is_multiple_of(cfg.sample_every) || last {
            take_sample(&u, steps, dt, integral, &mut samples, &mut warnings, observers)?;
        }
        if let Some(reason) = reason {
            termination = blowup_termination(t, reason, u.clone(), &grad_history, &mut warnings);
            break;
        }
    }
    if let Termination::ResolutionExhausted { t, dt_bound, dt_min } = termination {
        // make sure the final state is sampled
        if samples.last().map(|s| s.step) != Some(steps) {
            take_sample(&u, steps, 0.0, integral, &mut samples, &mut warnings, observers)?;
        }
        log::info!("resolution exhausted at t = {t}: bound {dt_bound:.3e} < dt_min {dt_min:.3e}");
    }

    Ok(Trajectory {
        samples,
        grad_history,
        final_field: u,
        steps,
        warnings,
        termination,
        max_boundary_ratio,
    })
}

fn blowup_termination(
    t: f64,
    reason: BlowupReason,
    last_good: Field,
    history: &[(f64, f64)],
    warnings: &mut Vec<Warning>,
) -> Termination {
    let fit = fit_blowup(history);
    match &fit {
        Some(f) if !f.reliable => warnings.push(Warning {
            t,
            kind: WarningKind::UnreliableFit,
            message: f.note.clone().unwrap_or_default(),
        }),
        None => warnings.push(Warning {
            t,
            kind: WarningKind::UnreliableFit,
            message: "too few gradient samples to fit a blow-up time".into(),
        }),
        _ => {}
    }
    Termination::Blowup(Box::new(BlowupEvent {
        t_detect: t,
        reason,
        last_good_field: last_good,
        fitted_t_star: fit.as_ref().map(|f| f.t_star),
        fitted_exponent: fit.as_ref().map(|f| f.exponent),
        fit,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use crate::initdata::soliton_profile;

    #[test]
    fn pad_factor_rule() {
        assert_eq!(Dealias::min_pad_factor(2), 2);
        assert_eq!(Dealias::min_pad_factor(6), 4);
        assert_eq!(Dealias::min_pad_factor(7), 4);
        assert_eq!(Dealias::default_for(5), Dealias::TwoThirds);
        let mut errs = Vec::new();
        let mut cfg = SolverConfig::fixed(6, 1e-3, 1.0);
        cfg.dealias = Dealias::ZeroPad { factor: 2 };
        cfg.validate("solver.", &mut errs);
        assert_eq!(errs.len(), 1);
        assert!(errs[0].starts_with("solver.dealias.factor"));
    }

    #[test]
    fn estimate_dt_examples() {
        let g = Grid::shared(2000, 100.0, 0.0).unwrap();
        let cfg = SolverConfig::new(
            2,
            TimeStep::Adaptive {
                cfl_safety: 0.5,
                dt_min: 1e-8,
                dt_max: 1.0,
            },
            1.0,
        );
        let q = soliton_profile(2, 1.0, 0.0, &g).unwrap();
        let dt = estimate_dt(&q, &cfg).unwrap();
        assert!((dt - 0.5 * 0.05 / 3.0).abs() < 1e-12);
        assert_eq!(estimate_dt(&Field::zeros(g.clone()), &cfg).unwrap(), 1.0);

        let cfg3 = SolverConfig { p: 3, ..cfg.clone() };
        let a = estimate_dt(&q.scaled(0.1), &cfg3).unwrap();
        let b = estimate_dt(&q.scaled(0.2), &cfg3).unwrap();
        assert!((a / b - 4.0).abs() < 1e-12);

        let tight = SolverConfig {
            time_step: TimeStep::Adaptive {
                cfl_safety: 0.5,
                dt_min: 0.1,
                dt_max: 1.0,
            },
            ..cfg
        };
        assert!(matches!(
            estimate_dt(&q, &tight),
            Err(GkdvError::ResolutionExhausted { .. })
        ));
    }

    #[test]
    fn quantized_step_never_exceeds_bound() {
        for dt in [1e-5, 3.3e-4, 0.0099, 0.01] {
            let q = quantize_step(dt, 0.01);
            assert!(q <= dt * (1.0 + 1e-15) && q > dt / 1.19);
        }
    }

    #[test]
    fn zero_field_stays_zero() {
        let g = Grid::shared(64, 20.0, 0.0).unwrap();
        let z = Field::zeros(g);
        let cfg = SolverConfig::fixed(3, 0.1, 1.0);
        let out = step(&z, 0.37, &cfg).unwrap();
        assert!(out.values().iter().all(|&v| v == 0.0));
        assert_eq!(out.time(), 0.37);
        let traj = evolve(&z, &cfg, &mut []).unwrap();
        assert!(matches!(traj.termination, Termination::Completed));
        assert!(traj.warnings.is_empty());
        assert_eq!(traj.samples.len(), 11);
        assert_eq!(traj.final_field.time(), 1.0);
    }
}
