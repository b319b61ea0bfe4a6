//! Weight functions and virial functionals.
//!
//! Three weight families are provided, each with closed-form spatial
//! derivatives and, given the rates of its parameters, its time derivative:
//!
//! - `right_tanh`: `φ = ½(1 + tanh((x - x_f)/L))`
//! - `left_chi`: `φ = χ((x + ½(μ + μ₁))/μ)` with a fixed smooth cutoff `χ`
//! - `compact_tanh_sech`: `φ = θ⁻¹ tanh((x-μ)/λ₁) sech²((x-μ)/λ₂)`
//!
//! The quadratic functional `½∫φu²` obeys the Kato identity
//!
//! ```text
//! d/dt ½∫φu² = ½∫φ_t u² - 3/2 ∫φ_x u_x² + ½∫φ_xxx u² + p/(p+1) ∫φ_x u^{p+1}
//! ```
//!
//! and the linear functional `∫φu` obeys
//!
//! ```text
//! d/dt ∫φu = ∫φ_t u + ∫φ_xxx u + ∫φ_x uᵖ.
//! ```

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{GkdvError, Result};
use crate::grid::{integrate_window, spectral_derivative, Field, Grid};
use crate::initdata::sech;

/// Shape parameter of the bump `exp(-a/(t(1-t)))` behind `χ`.
pub const CHI_BUMP_A: f64 = 0.45;

const CHI_TABLE_CELLS: usize = 2048;

// 8-point Gauss–Legendre nodes and weights on [-1, 1]
const GL_X: [f64; 8] = [
    -0.960_289_856_497_536_3,
    -0.796_666_477_413_626_7,
    -0.525_532_409_916_329,
    -0.183_434_642_495_649_8,
    0.183_434_642_495_649_8,
    0.525_532_409_916_329,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_3,
];
const GL_W: [f64; 8] = [
    0.101_228_536_290_376_26,
    0.222_381_034_453_374_47,
    0.313_706_645_877_887_3,
    0.362_683_783_378_362,
    0.362_683_783_378_362,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_47,
    0.101_228_536_290_376_26,
];

fn bump(t: f64) -> f64 {
    if t <= 0.0 || t >= 1.0 {
        0.0
    } else {
        (-CHI_BUMP_A / (t * (1.0 - t))).exp()
    }
}

fn gauss(a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
    let (m, h) = (0.5 * (a + b), 0.5 * (b - a));
    GL_X.iter().zip(GL_W).map(|(x, w)| w * f(m + h * x)).sum::<f64>() * h
}

struct ChiTable {
    /// `∫₀^{t_i} b`, normalized so the last entry is 1.
    cumulative: Vec<f64>,
    norm: f64,
}

fn chi_table() -> &'static ChiTable {
    static TABLE: OnceLock<ChiTable> = OnceLock::new();
    TABLE.get_or_init(|| {
        let h = 1.0 / CHI_TABLE_CELLS as f64;
        let mut cumulative = Vec::with_capacity(CHI_TABLE_CELLS + 1);
        let mut acc = 0.0;
        cumulative.push(0.0);
        for i in 0..CHI_TABLE_CELLS {
            acc += gauss(i as f64 * h, (i + 1) as f64 * h, bump);
            cumulative.push(acc);
        }
        let norm = acc;
        cumulative.iter_mut().for_each(|c| *c /= norm);
        ChiTable { cumulative, norm }
    })
}

/// Derivatives of `h(t) = -a/(t(1-t))` up to order three.
fn h_derivatives(t: f64) -> [f64; 3] {
    let a = CHI_BUMP_A;
    let q = t * (1.0 - t);
    let dq = 1.0 - 2.0 * t;
    let (q2, q3) = (q * q, q * q * q);
    let q4 = q3 * q;
    let d2 = dq * dq;
    [
        a * dq / q2,
        a * (-2.0 * d2 / q3 - 2.0 / q2),
        a * (12.0 * dq / q3 + 6.0 * d2 * dq / q4),
    ]
}

/// `χ^{(k)}(s)` for `k = 0..=4`: `χ = 1` for `s ≤ -1`, `0` for `s ≥ 0`,
/// strictly decreasing in between.
pub fn chi_derivative(k: u32, s: f64) -> f64 {
    let t = s + 1.0;
    if t <= 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    if t >= 1.0 {
        return 0.0;
    }
    let table = chi_table();
    if k == 0 {
        // normalized ∫₀^u b; the bump is symmetric, so the upper half is
        // read from the lower tail without cancellation
        let lower = |u: f64| {
            let pos = u * CHI_TABLE_CELLS as f64;
            let i = (pos.floor() as usize).min(CHI_TABLE_CELLS - 1);
            let u_i = i as f64 / CHI_TABLE_CELLS as f64;
            table.cumulative[i] + gauss(u_i, u, bump) / table.norm
        };
        let v = if t <= 0.5 { 1.0 - lower(t) } else { lower(1.0 - t) };
        return v.clamp(0.0, 1.0);
    }
    let b = bump(t);
    if b == 0.0 {
        return 0.0;
    }
    let [h1, h2, h3] = h_derivatives(t);
    let poly = match k {
        1 => 1.0,
        2 => h1,
        3 => h2 + h1 * h1,
        4 => h3 + 3.0 * h1 * h2 + h1 * h1 * h1,
        _ => panic!("chi derivatives are provided up to order four"),
    };
    -b * poly / table.norm
}

pub fn chi(s: f64) -> f64 {
    chi_derivative(0, s)
}

/// Largest `|χ^{(k)}|`, `k = 1, 2, 3`, over `samples` equally spaced points
/// of `(-1, 0)`.
pub fn chi_derivative_maxima(samples: usize) -> [f64; 3] {
    let mut out = [0.0f64; 3];
    for i in 1..samples {
        let s = -1.0 + i as f64 / samples as f64;
        for (k, m) in out.iter_mut().enumerate() {
            *m = (*m).max(chi_derivative(k as u32 + 1, s).abs());
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum WeightSpec {
    RightTanh {
        l: f64,
        front: f64,
    },
    LeftChi {
        mu: f64,
        mu_t1: f64,
    },
    CompactTanhSech {
        theta: f64,
        lambda1: f64,
        lambda2: f64,
        mu: f64,
    },
}

impl WeightSpec {
    fn check(&self) -> Result<()> {
        let bad = |name: &str, v: f64| {
            Err(GkdvError::Domain(format!(
                "weight parameter {name} must be > 0, got {v}"
            )))
        };
        match *self {
            WeightSpec::RightTanh { l, .. } if !(l > 0.0) => bad("L", l),
            WeightSpec::LeftChi { mu, .. } if !(mu > 0.0) => bad("mu", mu),
            WeightSpec::LeftChi { mu_t1, .. } if !(mu_t1 > 0.0) => bad("mu_t1", mu_t1),
            WeightSpec::CompactTanhSech { theta, .. } if !(theta > 0.0) => bad("theta", theta),
            WeightSpec::CompactTanhSech { lambda1, .. } if !(lambda1 > 0.0) => bad("lambda1", lambda1),
            WeightSpec::CompactTanhSech { lambda2, .. } if !(lambda2 > 0.0) => bad("lambda2", lambda2),
            _ => Ok(()),
        }
    }
}

/// Time derivatives of the weight parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum WeightRates {
    RightTanh {
        front_velocity: f64,
    },
    LeftChi {
        mu_rate: f64,
    },
    CompactTanhSech {
        theta: f64,
        lambda1: f64,
        lambda2: f64,
        mu: f64,
    },
}

impl WeightRates {
    pub fn zero_for(spec: &WeightSpec) -> Self {
        match spec {
            WeightSpec::RightTanh { .. } => WeightRates::RightTanh { front_velocity: 0.0 },
            WeightSpec::LeftChi { .. } => WeightRates::LeftChi { mu_rate: 0.0 },
            WeightSpec::CompactTanhSech { .. } => WeightRates::CompactTanhSech {
                theta: 0.0,
                lambda1: 0.0,
                lambda2: 0.0,
                mu: 0.0,
            },
        }
    }
}

/// Sampled weight with its derivatives.
#[derive(Clone, Debug)]
pub struct WeightEval {
    pub spec: WeightSpec,
    pub phi: Field,
    pub phi_x: Field,
    pub phi_xxx: Field,
    pub phi_t: Option<Field>,
}

/// `sech²` and its first three derivatives at `z`.
fn sech2_derivatives(z: f64) -> [f64; 4] {
    let s = sech(z);
    let s2 = s * s;
    let t = z.tanh();
    [
        s2,
        -2.0 * s2 * t,
        4.0 * s2 - 6.0 * s2 * s2,
        -8.0 * s2 * t + 24.0 * s2 * s2 * t,
    ]
}

struct PointValue {
    phi: f64,
    phi_x: f64,
    phi_xxx: f64,
    phi_t: f64,
}

fn point(spec: &WeightSpec, rates: Option<&WeightRates>, x: f64) -> PointValue {
    match *spec {
        WeightSpec::RightTanh { l, front } => {
            let z = (x - front) / l;
            let [s, _, s_zz, _] = sech2_derivatives(z);
            let v = match rates {
                Some(WeightRates::RightTanh { front_velocity }) => *front_velocity,
                _ => 0.0,
            };
            PointValue {
                phi: 0.5 * (1.0 + z.tanh()),
                phi_x: s / (2.0 * l),
                phi_xxx: s_zz / (2.0 * l * l * l),
                phi_t: -v * s / (2.0 * l),
            }
        }
        WeightSpec::LeftChi { mu, mu_t1 } => {
            let y = (x + 0.5 * (mu + mu_t1)) / mu;
            let d1 = chi_derivative(1, y);
            let rate = match rates {
                Some(WeightRates::LeftChi { mu_rate }) => *mu_rate,
                _ => 0.0,
            };
            PointValue {
                phi: chi(y),
                phi_x: d1 / mu,
                phi_xxx: chi_derivative(3, y) / (mu * mu * mu),
                phi_t: -(rate / mu) * y * d1 + 0.5 * (rate / mu) * d1,
            }
        }
        WeightSpec::CompactTanhSech {
            theta,
            lambda1,
            lambda2,
            mu,
        } => {
            let z1 = (x - mu) / lambda1;
            let z2 = (x - mu) / lambda2;
            let t1 = z1.tanh();
            let [a0, a1, a2, _] = sech2_derivatives(z1);
            let [b0, b1, b2, b3] = sech2_derivatives(z2);
            let phi = t1 * b0 / theta;
            let phi_x = (a0 * b0 / lambda1 + t1 * b1 / lambda2) / theta;
            let phi_xxx = (a2 * b0 / lambda1.powi(3)
                + 3.0 * a1 * b1 / (lambda1 * lambda1 * lambda2)
                + 3.0 * a0 * b2 / (lambda1 * lambda2 * lambda2)
                + t1 * b3 / lambda2.powi(3))
                / theta;
            let phi_t = match rates {
                Some(&WeightRates::CompactTanhSech {
                    theta: dtheta,
                    lambda1: dl1,
                    lambda2: dl2,
                    mu: dmu,
                }) => {
                    -dtheta / theta * phi
                        - dl1 * z1 / (theta * lambda1) * a0 * b0
                        - dmu / (theta * lambda1) * a0 * b0
                        - dl2 * z2 / (theta * lambda2) * t1 * b1
                        - dmu / (theta * lambda2) * t1 * b1
                }
                _ => 0.0,
            };
            PointValue {
                phi,
                phi_x,
                phi_xxx,
                phi_t,
            }
        }
    }
}

/// Closed-form evaluation of `φ`, `φ_x`, `φ_xxx` and, when `rates` is given,
/// `φ_t` on `grid`.
pub fn eval_weight(spec: &WeightSpec, rates: Option<&WeightRates>, grid: &std::sync::Arc<Grid>) -> Result<WeightEval> {
    spec.check()?;
    if let Some(r) = rates {
        if std::mem::discriminant(&WeightRates::zero_for(spec)) != std::mem::discriminant(r) {
            return Err(GkdvError::Configuration(
                "weight rates belong to a different weight family".into(),
            ));
        }
    }
    let n = grid.n_points();
    let (mut phi, mut phi_x, mut phi_xxx, mut phi_t) = (
        Vec::with_capacity(n),
        Vec::with_capacity(n),
        Vec::with_capacity(n),
        Vec::with_capacity(n),
    );
    for j in 0..n {
        let v = point(spec, rates, grid.x(j));
        phi.push(v.phi);
        phi_x.push(v.phi_x);
        phi_xxx.push(v.phi_xxx);
        phi_t.push(v.phi_t);
    }
    Ok(WeightEval {
        spec: *spec,
        phi: Field::new(grid.clone(), phi, 0.0)?,
        phi_x: Field::new(grid.clone(), phi_x, 0.0)?,
        phi_xxx: Field::new(grid.clone(), phi_xxx, 0.0)?,
        phi_t: match rates {
            Some(_) => Some(Field::new(grid.clone(), phi_t, 0.0)?),
            None => None,
        },
    })
}

fn check_grid(f: &Field, w: &WeightEval) -> Result<()> {
    if f.grid().as_ref() != w.phi.grid().as_ref() {
        return Err(GkdvError::Domain("field and weight live on different grids".into()));
    }
    Ok(())
}

fn weighted_sum(weight: &Field, f: impl Fn(usize) -> f64) -> f64 {
    weight.grid().dx() * weight.values().iter().enumerate().map(|(j, w)| w * f(j)).sum::<f64>()
}

fn require_phi_t(w: &WeightEval) -> Result<&Field> {
    w.phi_t
        .as_ref()
        .ok_or_else(|| GkdvError::Configuration("time derivative of the weight requested but no rates given".into()))
}

/// `½∫φ u²`.
pub fn quadratic_virial(f: &Field, w: &WeightEval) -> Result<f64> {
    check_grid(f, w)?;
    let u = f.values();
    Ok(0.5 * weighted_sum(&w.phi, |j| u[j] * u[j]))
}

/// Terms of the Kato identity.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct KatoTerms {
    /// `½∫φ_t u²`
    pub time: f64,
    /// `-3/2 ∫φ_x u_x²`
    pub gradient: f64,
    /// `½∫φ_xxx u²`
    pub dispersive: f64,
    /// `p/(p+1) ∫φ_x u^{p+1}`
    pub nonlinear: f64,
    pub total: f64,
}

pub fn kato_rhs(f: &Field, w: &WeightEval, p: u32) -> Result<KatoTerms> {
    check_grid(f, w)?;
    let phi_t = require_phi_t(w)?;
    let ux = spectral_derivative(f, 1)?;
    let u = f.values();
    let ux = ux.values();
    let pp1 = p as i32 + 1;
    let time = 0.5 * weighted_sum(phi_t, |j| u[j] * u[j]);
    let gradient = -1.5 * weighted_sum(&w.phi_x, |j| ux[j] * ux[j]);
    let dispersive = 0.5 * weighted_sum(&w.phi_xxx, |j| u[j] * u[j]);
    let nonlinear = p as f64 / (p as f64 + 1.0) * weighted_sum(&w.phi_x, |j| u[j].powi(pp1));
    Ok(KatoTerms {
        time,
        gradient,
        dispersive,
        nonlinear,
        total: time + gradient + dispersive + nonlinear,
    })
}

/// `∫φ u`.
pub fn linear_virial(f: &Field, w: &WeightEval) -> Result<f64> {
    check_grid(f, w)?;
    let u = f.values();
    Ok(weighted_sum(&w.phi, |j| u[j]))
}

/// Terms of the linear virial identity.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LinearVirialTerms {
    /// `∫φ_t u`
    pub time: f64,
    /// `∫φ_xxx u`
    pub dispersive: f64,
    /// `∫φ_x uᵖ`
    pub nonlinear: f64,
    /// Part of `nonlinear` from `|x - μ| ≤ λ₁` (compact weight only).
    pub nonlinear_inner: Option<f64>,
    pub total: f64,
    /// `(θλ₁)⁻¹ ∫_{|x-μ|≤λ₁} u^{2n}` for `p = 2n` and the compact weight.
    pub coercive: Option<f64>,
}

pub fn linear_virial_rhs(f: &Field, w: &WeightEval, p: u32) -> Result<LinearVirialTerms> {
    check_grid(f, w)?;
    let phi_t = require_phi_t(w)?;
    let u = f.values();
    let pi = p as i32;
    let time = weighted_sum(phi_t, |j| u[j]);
    let dispersive = weighted_sum(&w.phi_xxx, |j| u[j]);
    let nonlinear = weighted_sum(&w.phi_x, |j| u[j].powi(pi));
    let (nonlinear_inner, coercive) = match w.spec {
        WeightSpec::CompactTanhSech { theta, lambda1, mu, .. } => {
            let lo = (mu - lambda1).max(f.grid().x_min());
            let hi = (mu + lambda1).min(f.grid().x_max());
            let grid = f.grid();
            let phi_x = w.phi_x.values();
            let dx = grid.dx();
            let inner: f64 = (0..u.len())
                .filter(|&j| {
                    let x = grid.x(j);
                    x >= lo && x <= hi
                })
                .map(|j| phi_x[j] * u[j].powi(pi))
                .sum::<f64>()
                * dx;
            let coercive = p
                .is_multiple_of(2)
                .then(|| integrate_window(f, lo, hi, |v| v.powi(pi)) / (theta * lambda1));
            (Some(inner), coercive)
        }
        _ => (None, None),
    };
    Ok(LinearVirialTerms {
        time,
        dispersive,
        nonlinear,
        nonlinear_inner,
        total: time + dispersive + nonlinear,
        coercive,
    })
}

/// `d/dt` of a sampled series at the interior samples by the second-order
/// three-point formula on a possibly non-uniform time grid. Entry `i` holds
/// the estimate at `times[i + 1]`.
pub fn centered_rate(times: &[f64], values: &[f64]) -> Vec<f64> {
    (1..times.len().saturating_sub(1))
        .map(|i| {
            let h1 = times[i] - times[i - 1];
            let h2 = times[i + 1] - times[i];
            (h1 * h1 * values[i + 1] - h2 * h2 * values[i - 1] + (h2 * h2 - h1 * h1) * values[i])
                / (h1 * h2 * (h1 + h2))
        })
        .collect()
}

/// Tolerance used for identity residuals: `max(1e-6, 1e-3 |value|)`.
pub fn identity_tolerance(value: f64) -> f64 {
    1e-6f64.max(1e-3 * value.abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::mass;
    use crate::grid::{norm, NormKind};
    use crate::initdata::soliton_profile;
    use approx::assert_abs_diff_eq;
    use std::sync::Arc;

    fn grid() -> Arc<Grid> {
        Grid::shared(4096, 100.0, 0.0).unwrap()
    }

    fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn chi_plateaus_and_monotonicity() {
        assert_eq!(chi(-1.5), 1.0);
        assert_eq!(chi(-1.0), 1.0);
        assert_eq!(chi(0.0), 0.0);
        assert_eq!(chi(0.7), 0.0);
        assert_abs_diff_eq!(chi(-0.5), 0.5, epsilon = 1e-14);
        let mut prev = 1.0;
        for i in 1..4000 {
            let s = -1.0 + i as f64 / 4000.0;
            let v = chi(s);
            assert!(v <= prev);
            if chi_derivative(1, s) < -1e-10 {
                assert!(v < prev);
            }
            prev = v;
        }
        for k in 1..=3 {
            assert_eq!(chi_derivative(k, -1.2), 0.0);
            assert_eq!(chi_derivative(k, 0.2), 0.0);
        }
    }

    #[test]
    fn chi_first_derivative_within_bound() {
        let [d1, d2, d3] = chi_derivative_maxima(20_000);
        assert!(d1 <= 2.0, "{d1}");
        assert!(d2 > 0.0 && d3 > 0.0);
    }

    #[test]
    fn chi_derivatives_are_consistent() {
        // each derivative integrates to the difference of the previous one
        for k in 0..3u32 {
            for &(a, b) in &[(-0.9, -0.6), (-0.55, -0.2), (-0.3, -0.05)] {
                let m = 400;
                let h = (b - a) / m as f64;
                let int: f64 = (0..m)
                    .map(|i| gauss(a + i as f64 * h, a + (i + 1) as f64 * h, |s| chi_derivative(k + 1, s)))
                    .sum();
                let diff = chi_derivative(k, b) - chi_derivative(k, a);
                assert!((int - diff).abs() < 1e-9 * (1.0 + diff.abs()), "k={k}: {int} vs {diff}");
            }
        }
    }

    #[test]
    fn compact_weight_examples() {
        let g = grid();
        let spec = WeightSpec::CompactTanhSech {
            theta: 2.0,
            lambda1: 1.5,
            lambda2: 4.0,
            mu: 0.0,
        };
        let w = eval_weight(&spec, None, &g).unwrap();
        let mid = 2048;
        assert_eq!(g.x(mid), 0.0);
        assert_eq!(w.phi.values()[mid], 0.0);
        assert_abs_diff_eq!(w.phi_x.values()[mid], 1.0 / 3.0, epsilon = 1e-15);
        assert!(w.phi.max_abs() <= 0.5);
        // odd about mu
        for j in 1..2048 {
            assert_abs_diff_eq!(w.phi.values()[mid + j], -w.phi.values()[mid - j], epsilon = 1e-15);
        }
    }

    #[test]
    fn right_tanh_examples() {
        let g = grid();
        let w = eval_weight(&WeightSpec::RightTanh { l: 2.0, front: 0.0 }, None, &g).unwrap();
        assert_abs_diff_eq!(w.phi_x.max_abs(), 0.25, epsilon = 1e-15);
        assert!(w.phi_x.values().iter().all(|&v| v > 0.0));
        assert!(w.phi.values().iter().all(|&v| (0.0..=1.0).contains(&v)));
    }

    fn spectral_check(spec: WeightSpec, shifted: WeightSpec, g: &Arc<Grid>) {
        // differences of two copies are localized, so spectral derivatives apply
        let a = eval_weight(&spec, None, g).unwrap();
        let b = eval_weight(&shifted, None, g).unwrap();
        let diff = |x: &Field, y: &Field| x.add(&y.scaled(-1.0)).unwrap();
        let phi = diff(&a.phi, &b.phi);
        let d1 = spectral_derivative(&phi, 1).unwrap();
        let d3 = spectral_derivative(&phi, 3).unwrap();
        let e1 = sup_diff(d1.values(), diff(&a.phi_x, &b.phi_x).values());
        let e3 = sup_diff(d3.values(), diff(&a.phi_xxx, &b.phi_xxx).values());
        assert!(e1 < 1e-8, "{spec:?}: φ_x error {e1}");
        assert!(e3 < 1e-8, "{spec:?}: φ_xxx error {e3}");
    }

    #[test]
    fn closed_forms_match_spectral_derivatives() {
        let g = grid();
        spectral_check(
            WeightSpec::CompactTanhSech {
                theta: 1.0,
                lambda1: 1.0,
                lambda2: 3.0,
                mu: 0.0,
            },
            WeightSpec::CompactTanhSech {
                theta: 1.0,
                lambda1: 1.0,
                lambda2: 3.0,
                mu: 1e6,
            },
            &g,
        );
        spectral_check(
            WeightSpec::RightTanh { l: 2.0, front: -20.0 },
            WeightSpec::RightTanh { l: 2.0, front: 20.0 },
            &g,
        );
        spectral_check(
            WeightSpec::LeftChi { mu: 10.0, mu_t1: 10.0 },
            WeightSpec::LeftChi { mu: 10.0, mu_t1: 50.0 },
            &g,
        );
    }

    #[test]
    fn phi_t_matches_parameter_finite_differences() {
        let g = Grid::shared(512, 60.0, 0.0).unwrap();
        let h = 1e-5;
        let (th, l1, l2, mu) = (1.3, 0.8, 2.5, 0.7);
        let (dth, dl1, dl2, dmu) = (0.3, -0.2, 0.5, 1.1);
        let at = |s: f64| WeightSpec::CompactTanhSech {
            theta: th + s * dth,
            lambda1: l1 + s * dl1,
            lambda2: l2 + s * dl2,
            mu: mu + s * dmu,
        };
        let rates = WeightRates::CompactTanhSech {
            theta: dth,
            lambda1: dl1,
            lambda2: dl2,
            mu: dmu,
        };
        let w = eval_weight(&at(0.0), Some(&rates), &g).unwrap();
        let plus = eval_weight(&at(h), None, &g).unwrap();
        let minus = eval_weight(&at(-h), None, &g).unwrap();
        for j in 0..512 {
            let fd = (plus.phi.values()[j] - minus.phi.values()[j]) / (2.0 * h);
            assert!((fd - w.phi_t.as_ref().unwrap().values()[j]).abs() < 1e-8);
        }

        let left = |s: f64| WeightSpec::LeftChi {
            mu: 5.0 + s * 0.7,
            mu_t1: 5.0,
        };
        let wl = eval_weight(&left(0.0), Some(&WeightRates::LeftChi { mu_rate: 0.7 }), &g).unwrap();
        let (lp, lm) = (
            eval_weight(&left(h), None, &g).unwrap(),
            eval_weight(&left(-h), None, &g).unwrap(),
        );
        for j in 0..512 {
            let fd = (lp.phi.values()[j] - lm.phi.values()[j]) / (2.0 * h);
            assert!((fd - wl.phi_t.as_ref().unwrap().values()[j]).abs() < 1e-7);
        }
    }

    #[test]
    fn missing_rates_is_a_configuration_error() {
        let g = grid();
        let w = eval_weight(&WeightSpec::RightTanh { l: 1.0, front: 0.0 }, None, &g).unwrap();
        let f = Field::zeros(g.clone());
        assert!(matches!(kato_rhs(&f, &w, 2), Err(GkdvError::Configuration(_))));
        let wrong = WeightRates::LeftChi { mu_rate: 1.0 };
        assert!(eval_weight(&WeightSpec::RightTanh { l: 1.0, front: 0.0 }, Some(&wrong), &g).is_err());
        assert!(eval_weight(&WeightSpec::RightTanh { l: 0.0, front: 0.0 }, None, &g).is_err());
    }

    #[test]
    fn functional_examples() {
        let g = grid();
        let q = soliton_profile(2, 1.0, 0.0, &g).unwrap();
        let one = WeightEval {
            spec: WeightSpec::RightTanh { l: 1.0, front: 0.0 },
            phi: Field::from_fn(g.clone(), |_| 1.0),
            phi_x: Field::zeros(g.clone()),
            phi_xxx: Field::zeros(g.clone()),
            phi_t: Some(Field::zeros(g.clone())),
        };
        assert_abs_diff_eq!(quadratic_virial(&q, &one).unwrap(), 0.5 * mass(&q), epsilon = 1e-14);
        assert_eq!(kato_rhs(&q, &one, 2).unwrap().total, 0.0);

        let z = Field::zeros(g.clone());
        let far = eval_weight(
            &WeightSpec::RightTanh { l: 1.0, front: 40.0 },
            Some(&WeightRates::RightTanh { front_velocity: 0.0 }),
            &g,
        )
        .unwrap();
        assert!(quadratic_virial(&q, &far).unwrap() < 1e-10);
        assert_eq!(kato_rhs(&z, &far, 2).unwrap().total, 0.0);
        assert_eq!(linear_virial_rhs(&z, &far, 2).unwrap().total, 0.0);
    }

    #[test]
    fn kato_gradient_term_is_non_positive() {
        let g = grid();
        let mut rng_state = 12345u64;
        for _ in 0..20 {
            rng_state = rng_state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            let shift = (rng_state >> 11) as f64 / (1u64 << 53) as f64 * 40.0 - 20.0;
            let f = Field::from_fn(g.clone(), |x| ((x - shift) / 3.0).sin() * (-(x * x) / 200.0).exp());
            let w = eval_weight(
                &WeightSpec::RightTanh { l: 2.0, front: shift },
                Some(&WeightRates::RightTanh { front_velocity: 0.0 }),
                &g,
            )
            .unwrap();
            assert!(kato_rhs(&f, &w, 3).unwrap().gradient <= 0.0);
        }
    }

    #[test]
    fn linear_virial_parity_and_cauchy_schwarz() {
        let g = grid();
        let lam = 2.0;
        let theta = 3.0;
        let spec = WeightSpec::CompactTanhSech {
            theta,
            lambda1: lam,
            lambda2: lam,
            mu: 0.0,
        };
        let w = eval_weight(&spec, Some(&WeightRates::zero_for(&spec)), &g).unwrap();
        let even = Field::from_fn(g.clone(), |x| (-(x * x) / 4.0).exp());
        assert!(linear_virial(&even, &w).unwrap().abs() < 1e-14);
        assert_eq!(linear_virial(&Field::zeros(g.clone()), &w).unwrap(), 0.0);

        // ∫tanh² sech⁴ = 4/15
        let bound_norm = lam.sqrt() / theta * 2f64.sqrt() * (4.0f64 / 15.0).sqrt();
        for shift in [-3.0, -1.0, 0.5, 2.0] {
            let f = Field::from_fn(g.clone(), |x| (-(x - shift) * (x - shift)).exp() * (1.0 + x));
            let lv = linear_virial(&f, &w).unwrap().abs();
            assert!(lv <= bound_norm * norm(&f, NormKind::L2).unwrap());
        }
    }

    #[test]
    fn static_linear_virial_has_no_time_term() {
        let g = grid();
        let spec = WeightSpec::CompactTanhSech {
            theta: 1.0,
            lambda1: 1.0,
            lambda2: 4.0,
            mu: 0.5,
        };
        let w = eval_weight(&spec, Some(&WeightRates::zero_for(&spec)), &g).unwrap();
        let f = Field::from_fn(g.clone(), |x| (-(x - 1.0) * (x - 1.0)).exp());
        let t = linear_virial_rhs(&f, &w, 6).unwrap();
        assert_eq!(t.time, 0.0);
        assert_abs_diff_eq!(t.total, t.dispersive + t.nonlinear, epsilon = 1e-15);
        assert!(t.coercive.unwrap() > 0.0);
        assert!(t.nonlinear_inner.unwrap() >= 0.0);
        assert!(linear_virial_rhs(&f, &w, 5).unwrap().coercive.is_none());
    }

    #[test]
    fn centered_rate_is_exact_for_quadratics() {
        let times = [0.0, 0.1, 0.25, 0.3, 0.5];
        let vals: Vec<f64> = times.iter().map(|t| 3.0 * t * t - t + 2.0).collect();
        let r = centered_rate(&times, &vals);
        assert_eq!(r.len(), 3);
        for (i, v) in r.iter().enumerate() {
            assert_abs_diff_eq!(*v, 6.0 * times[i + 1] - 1.0, epsilon = 1e-12);
        }
    }
}
