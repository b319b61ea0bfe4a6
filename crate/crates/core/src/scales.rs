//! Time-dependent scale functions built from the gradient-norm history.
//!
//! - `beta_right(t) = C₀ (t + ∫₀ᵗ ‖∂ₓu‖^{(p-1)/2})`
//! - `beta_left(t)`: `C₁ g^{(p-1)/2} (T-t) |log(T-t)|^{1+η}` near a blow-up
//!   time `T`, or `C₁ (1 + g^{(p-1)/2}) t |log t|^{1+η}` for global solutions
//! - `beta_floor`: an increasing majorant of `‖∂ₓu‖^{n-1}` (`p = 2n`)
//! - compact scales `θ, λ₁, λ₂` and the admissible speed of the centre `μ`

use serde::{Deserialize, Serialize};

use crate::error::{GkdvError, Result};
use crate::grid::Field;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Regime {
    Global,
    Blowup { t_star: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScaleParams {
    pub c0: f64,
    pub c1: f64,
    pub eta: f64,
    /// Width, in samples, of the moving envelope smoothing `beta_floor`.
    pub floor_window: usize,
}

impl Default for ScaleParams {
    fn default() -> Self {
        Self {
            c0: 1.0,
            c1: 1.0,
            eta: 0.1,
            floor_window: 10,
        }
    }
}

impl ScaleParams {
    pub fn validate(&self, errors: &mut Vec<String>) {
        for (name, v) in [("c0", self.c0), ("c1", self.c1), ("eta", self.eta)] {
            if !(v > 0.0 && v.is_finite()) {
                errors.push(format!("scales.{name}: must be finite and > 0, got {v}"));
            }
        }
        if self.floor_window == 0 {
            errors.push("scales.floor_window: must be >= 1".into());
        }
    }
}

/// Gradient history of one run and the quantities accumulated from it.
#[derive(Clone, Debug)]
pub struct ScaleState {
    pub regime: Regime,
    pub p: u32,
    pub params: ScaleParams,
    times: Vec<f64>,
    grads: Vec<f64>,
    /// `∫_{t₀}^{t_i} g^{(p-1)/2}` by the trapezoid rule.
    cumulative: Vec<f64>,
    /// `max_{j ≤ i} g_j^{n-1}`.
    running_max: Vec<f64>,
}

impl ScaleState {
    pub fn new(regime: Regime, p: u32, params: ScaleParams) -> Self {
        Self {
            regime,
            p,
            params,
            times: Vec::new(),
            grads: Vec::new(),
            cumulative: Vec::new(),
            running_max: Vec::new(),
        }
    }

    /// `n` with `p = 2n`, if `p` is even.
    pub fn half_power(&self) -> Option<u32> {
        self.p.is_multiple_of(2).then_some(self.p / 2)
    }

    /// Appends the gradient norm `g` at time `t` (strictly after the last).
    pub fn push(&mut self, t: f64, g: f64) -> Result<()> {
        if !(g >= 0.0 && g.is_finite()) {
            return Err(GkdvError::InvalidField(format!("gradient norm {g} at t = {t}")));
        }
        if let Some(&last) = self.times.last() {
            if !(t > last) {
                return Err(GkdvError::Domain(format!(
                    "gradient samples must be pushed in increasing time ({t} after {last})"
                )));
            }
        }
        let e = 0.5 * (self.p as f64 - 1.0);
        let next = match (self.times.last(), self.grads.last(), self.cumulative.last()) {
            (Some(&t0), Some(&g0), Some(&c0)) => c0 + 0.5 * (t - t0) * (g0.powf(e) + g.powf(e)),
            _ => 0.0,
        };
        let power = self.half_power().map_or(0.0, |n| g.powi(n as i32 - 1));
        let rmax = self.running_max.last().map_or(power, |&m| m.max(power));
        self.times.push(t);
        self.grads.push(g);
        self.cumulative.push(next);
        self.running_max.push(rmax);
        Ok(())
    }

    pub fn from_history(regime: Regime, p: u32, params: ScaleParams, history: &[(f64, f64)]) -> Result<Self> {
        let mut s = Self::new(regime, p, params);
        for &(t, g) in history {
            s.push(t, g)?;
        }
        Ok(s)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn grads(&self) -> &[f64] {
        &self.grads
    }

    pub fn start_time(&self) -> f64 {
        self.times.first().copied().unwrap_or(0.0)
    }

    /// Index `i` and weight `w` with `t = (1-w) t_i + w t_{i+1}`.
    fn locate(&self, t: f64) -> Result<(usize, f64)> {
        let last = *self
            .times
            .last()
            .ok_or_else(|| GkdvError::Domain("empty gradient history".into()))?;
        let first = self.times[0];
        if t > last * (1.0 + 1e-14) + 1e-14 {
            return Err(GkdvError::Extrapolation { t, last });
        }
        if t < first {
            return Err(GkdvError::Domain(format!("t = {t} precedes the history start {first}")));
        }
        let i = self.times.partition_point(|&s| s <= t).saturating_sub(1);
        if i + 1 >= self.times.len() {
            return Ok((self.times.len() - 1, 0.0));
        }
        let w = (t - self.times[i]) / (self.times[i + 1] - self.times[i]);
        Ok((i, w))
    }

    fn interpolate(&self, series: &[f64], t: f64) -> Result<f64> {
        let (i, w) = self.locate(t)?;
        if w == 0.0 {
            return Ok(series[i]);
        }
        Ok((1.0 - w) * series[i] + w * series[i + 1])
    }

    /// Running value of `∫ g^{(p-1)/2}` from the start of the history to `t`.
    pub fn cumulative_integral(&self, t: f64) -> Result<f64> {
        self.interpolate(&self.cumulative, t)
    }

    pub fn grad_at(&self, t: f64) -> Result<f64> {
        self.interpolate(&self.grads, t)
    }

    /// Smoothed floor at every sample of the history.
    pub fn floor_series(&self) -> Result<Vec<f64>> {
        if self.half_power().is_none() {
            return Err(GkdvError::UnsupportedPower(self.p));
        }
        Ok(monotone_envelope(&self.running_max, self.params.floor_window))
    }
}

/// Forward moving average of a non-decreasing sequence, with the window
/// clipped at the end. The result is non-decreasing and dominates the input.
pub fn monotone_envelope(nondecreasing: &[f64], window: usize) -> Vec<f64> {
    let n = nondecreasing.len();
    let w = window.max(1);
    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(0.0);
    for v in nondecreasing {
        prefix.push(prefix.last().unwrap() + v);
    }
    let mut out: Vec<f64> = Vec::with_capacity(n);
    for i in 0..n {
        let end = (i + w).min(n);
        let avg = (prefix[end] - prefix[i]) / (end - i) as f64;
        // prefix-sum round-off can land either side of the exact average
        let prev = out.last().copied().unwrap_or(f64::NEG_INFINITY);
        out.push(avg.max(nondecreasing[i]).max(prev));
    }
    out
}

pub fn beta_right(state: &ScaleState, t: f64) -> Result<f64> {
    let elapsed = t - state.start_time();
    Ok(state.params.c0 * (elapsed + state.cumulative_integral(t)?))
}

fn beta_left_formula(regime: Regime, params: &ScaleParams, p: u32, t: f64, g: f64) -> Result<f64> {
    let e = 0.5 * (p as f64 - 1.0);
    let ge = g.powf(e);
    match regime {
        Regime::Blowup { t_star } => {
            if !(t < t_star) {
                return Err(GkdvError::Domain(format!(
                    "blow-up bookkeeping needs t < T* (t = {t}, T* = {t_star})"
                )));
            }
            let s = t_star - t;
            Ok(params.c1 * ge * s * s.ln().abs().powf(1.0 + params.eta))
        }
        Regime::Global => Ok(params.c1 * (1.0 + ge) * t * t.ln().abs().powf(1.0 + params.eta)),
    }
}

pub fn beta_left(state: &ScaleState, t: f64) -> Result<f64> {
    let g = state.grad_at(t)?;
    beta_left_formula(state.regime, &state.params, state.p, t, g)
}

/// Floor value at the latest sample not after `t`.
pub fn beta_floor(state: &ScaleState, t: f64) -> Result<f64> {
    let series = state.floor_series()?;
    let (i, w) = state.locate(t)?;
    // the floor is piecewise constant between samples, right-continuous
    let i = if w >= 1.0 { i + 1 } else { i };
    Ok(series[i])
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScaleRegime {
    Global,
    Blowup,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompactScales {
    /// `s = T - t` (blow-up) or `t` (global).
    pub tau: f64,
    pub beta: f64,
    pub theta: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub mu_prime_bound: f64,
    /// The window width used in the stated local-decay results:
    /// `(sβ)^{2/3}/|log s|` or `(tβ)^{2/3}/log t`.
    pub lambda_statement: f64,
}

/// Compact scales for a given `β`.
pub fn compact_scales_for(regime: ScaleRegime, tau: f64, beta: f64) -> Result<CompactScales> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(GkdvError::Domain(format!("beta must be finite and > 0, got {beta}")));
    }
    match regime {
        ScaleRegime::Blowup => {
            if !(tau > 0.0 && tau < 0.5) {
                return Err(GkdvError::Domain(format!(
                    "blow-up scales need 0 < s < 1/2, got s = {tau}"
                )));
            }
            let l = tau.ln().abs();
            let sb = tau * beta;
            let lambda2 = sb.powf(2.0 / 3.0);
            Ok(CompactScales {
                tau,
                beta,
                theta: sb.cbrt() * l * l,
                lambda1: lambda2 / (l * l),
                lambda2,
                mu_prime_bound: beta.powf(2.0 / 3.0) / (tau.cbrt() * l),
                lambda_statement: lambda2 / l,
            })
        }
        ScaleRegime::Global => {
            let e2 = std::f64::consts::E * std::f64::consts::E;
            if !(tau >= e2 * (1.0 - 1e-15) && tau.is_finite()) {
                return Err(GkdvError::Domain(format!("global scales need t >= e², got t = {tau}")));
            }
            let l = tau.ln();
            let tb = tau * beta;
            let lambda2 = tb.powf(2.0 / 3.0);
            Ok(CompactScales {
                tau,
                beta,
                theta: tb.cbrt() * l * l,
                lambda1: lambda2 / l,
                lambda2,
                mu_prime_bound: lambda2 / tau,
                lambda_statement: lambda2 / l,
            })
        }
    }
}

/// Compact scales at `tau` with `β` taken from the floor of `state`.
pub fn compact_scales(state: &ScaleState, tau: f64) -> Result<CompactScales> {
    let (regime, t) = match state.regime {
        Regime::Blowup { t_star } => (ScaleRegime::Blowup, t_star - tau),
        Regime::Global => (ScaleRegime::Global, tau),
    };
    let beta = beta_floor(state, t)?;
    compact_scales_for(regime, tau, beta.max(f64::MIN_POSITIVE))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MuMode {
    #[default]
    Fixed,
    Centroid,
}

/// Next centre: the `u²`-centroid over `|x - μ| ≤ λ₂`, approached no faster
/// than the admissible speed.
pub fn mu_track(scales: &CompactScales, f: &Field, prev_mu: f64, dt: f64, mode: MuMode) -> f64 {
    if mode == MuMode::Fixed {
        return prev_mu;
    }
    let grid = f.grid();
    let (mut m, mut mx) = (0.0, 0.0);
    for (j, v) in f.values().iter().enumerate() {
        let x = grid.x(j);
        if (x - prev_mu).abs() <= scales.lambda2 {
            m += v * v;
            mx += x * v * v;
        }
    }
    if m == 0.0 {
        return prev_mu;
    }
    let step = mx / m - prev_mu;
    let cap = scales.mu_prime_bound * dt.abs();
    prev_mu + step.clamp(-cap, cap)
}

/// `Σ Δs / (θ λ₂^{5/2})` over blow-up samples `(s, β)` sorted by decreasing `s`.
pub fn bookkeeping_sum(samples: &[(f64, f64)]) -> Result<f64> {
    let mut acc = 0.0;
    for w in samples.windows(2) {
        let c = compact_scales_for(ScaleRegime::Blowup, w[1].0, w[1].1)?;
        acc += (w[0].0 - w[1].0).abs() / (c.theta * c.lambda2.powf(2.5));
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use std::f64::consts::E;

    fn state(p: u32, regime: Regime, hist: &[(f64, f64)]) -> ScaleState {
        ScaleState::from_history(regime, p, ScaleParams::default(), hist).unwrap()
    }

    #[test]
    fn beta_right_examples() {
        let hist: Vec<(f64, f64)> = (0..=10).map(|i| (i as f64 * 0.3, 2.0)).collect();
        let s = state(5, Regime::Global, &hist);
        assert_eq!(beta_right(&s, 0.0).unwrap(), 0.0);
        assert_relative_eq!(beta_right(&s, 3.0).unwrap(), 3.0 * (1.0 + 4.0), max_relative = 1e-14);

        let lin: Vec<(f64, f64)> = (0..=1000).map(|i| (i as f64 / 1000.0, i as f64 / 1000.0)).collect();
        let s3 = state(3, Regime::Global, &lin);
        assert_abs_diff_eq!(beta_right(&s3, 1.0).unwrap(), 1.5, epsilon = 1e-12);
        assert!(matches!(beta_right(&s3, 1.5), Err(GkdvError::Extrapolation { .. })));
    }

    #[test]
    fn beta_left_examples() {
        let g: f64 = 1.7;
        let p = 6;
        let hist = [(0.0, g), (10.0, g)];
        let s = state(p, Regime::Global, &hist);
        let expect = (1.0 + g.powf(2.5)) * E * E * 2f64.powf(1.1);
        assert_relative_eq!(beta_left(&s, E * E).unwrap(), expect, max_relative = 1e-14);

        let t_star = 1.0;
        let t = t_star - (-1.0f64).exp();
        let b = state(p, Regime::Blowup { t_star }, &[(0.0, 1.0), (0.9, 1.0)]);
        assert_relative_eq!(beta_left(&b, t).unwrap(), (-1.0f64).exp(), max_relative = 1e-12);
        assert!(beta_left(
            &state(p, Regime::Blowup { t_star: 0.5 }, &[(0.0, 1.0), (0.9, 1.0)]),
            0.7
        )
        .is_err());

        // η → 0 is continuous
        let mut params = ScaleParams::default();
        let at = |eta: f64, params: &mut ScaleParams| {
            params.eta = eta;
            beta_left_formula(Regime::Global, params, p, 20.0, g).unwrap()
        };
        let lim = at(0.0 + f64::MIN_POSITIVE, &mut params);
        assert!((at(1e-9, &mut params) - lim).abs() < 1e-6 * lim);
    }

    #[test]
    fn beta_floor_examples() {
        let p = 6; // n = 3
        let peaks = [
            (0.0, 0.5),
            (1.0, 1.0),
            (2.0, 0.3),
            (3.0, 2.0),
            (4.0, 0.7),
            (5.0, 1.5),
            (6.0, 1.0),
        ];
        let s = state(p, Regime::Global, &peaks);
        assert_abs_diff_eq!(beta_floor(&s, 5.0).unwrap(), 4.0, epsilon = 1e-15);
        let flat: Vec<(f64, f64)> = (0..30).map(|i| (i as f64, 1.0)).collect();
        let sf = state(p, Regime::Global, &flat);
        assert!(sf.floor_series().unwrap().iter().all(|&v| v == 1.0));
        assert!(matches!(
            state(5, Regime::Global, &flat).floor_series(),
            Err(GkdvError::UnsupportedPower(5))
        ));
        let mono: Vec<(f64, f64)> = (0..30).map(|i| (i as f64, 1.0 + i as f64)).collect();
        let sm = state(4, Regime::Global, &mono);
        let fl = sm.floor_series().unwrap();
        for (i, v) in fl.iter().enumerate() {
            assert!(*v >= 1.0 + i as f64);
            assert!(*v <= 1.0 + i as f64 + 5.0);
        }
    }

    #[test]
    fn compact_scale_examples() {
        let g = compact_scales_for(ScaleRegime::Global, E * E, 1.0).unwrap();
        assert_relative_eq!(g.theta, E.powf(2.0 / 3.0) * 4.0, max_relative = 1e-14);
        assert_relative_eq!(g.lambda2, E.powf(4.0 / 3.0), max_relative = 1e-14);
        assert_relative_eq!(g.lambda1, E.powf(4.0 / 3.0) / 2.0, max_relative = 1e-14);

        let b = compact_scales_for(ScaleRegime::Blowup, (-2.0f64).exp(), E * E).unwrap();
        assert_relative_eq!(b.theta, 4.0, max_relative = 1e-14);
        assert_relative_eq!(b.lambda2, 1.0, max_relative = 1e-14);
        assert_relative_eq!(b.lambda1, 0.25, max_relative = 1e-14);

        let mut prev = f64::INFINITY;
        for s in [0.4, 0.1, 1e-2, 1e-4, 1e-8] {
            let c = compact_scales_for(ScaleRegime::Blowup, s, 3.0).unwrap();
            let ratio = c.lambda1 / c.lambda2;
            assert_relative_eq!(ratio, 1.0 / s.ln().powi(2), max_relative = 1e-14);
            assert_relative_eq!(c.theta * c.lambda1, s * 3.0, max_relative = 1e-14);
            assert!(ratio < prev);
            prev = ratio;
        }
        assert!(compact_scales_for(ScaleRegime::Blowup, 0.6, 1.0).is_err());
        assert!(compact_scales_for(ScaleRegime::Global, 2.0, 1.0).is_err());
    }

    #[test]
    fn mu_track_modes() {
        let grid = Grid::shared(512, 40.0, 0.0).unwrap();
        let f = Field::from_fn(grid, |x| (-(x - 3.0) * (x - 3.0)).exp());
        let sc = CompactScales {
            tau: 10.0,
            beta: 1.0,
            theta: 1.0,
            lambda1: 1.0,
            lambda2: 10.0,
            mu_prime_bound: 1.0,
            lambda_statement: 1.0,
        };
        assert_eq!(mu_track(&sc, &f, 0.5, 0.1, MuMode::Fixed), 0.5);
        let free = mu_track(&sc, &f, 0.5, 10.0, MuMode::Centroid);
        assert_abs_diff_eq!(free, 3.0, epsilon = 1e-10);
        let capped = mu_track(&sc, &f, 0.5, 0.1, MuMode::Centroid);
        assert_abs_diff_eq!(capped, 0.6, epsilon = 1e-15);
    }

    #[test]
    fn bookkeeping_sum_converges() {
        // β = s^{-1/2} gives θλ₂^{5/2} = s log² s, which is integrable at 0
        let partial = |s_min: f64| {
            let m = 4000;
            let samples: Vec<(f64, f64)> = (0..=m)
                .map(|i| {
                    let s = 0.25 * (s_min / 0.25f64).powf(i as f64 / m as f64);
                    (s, s.powf(-0.5))
                })
                .collect();
            bookkeeping_sum(&samples).unwrap()
        };
        let (a, b, c) = (partial(1e-4), partial(1e-8), partial(1e-16));
        // tails behave like 1/|log s_min|
        assert!(b > a && c > b);
        let exact = |s: f64| 1.0 / s.ln().abs();
        assert!(((c - b) - (exact(1e-8) - exact(1e-16))).abs() < 1e-2);
        assert!(c < exact(0.25) + 1e-2);
    }
}
