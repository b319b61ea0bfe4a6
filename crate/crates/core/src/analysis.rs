//! Conserved quantities, Gagliardo–Nirenberg ratios, the critical exponent
//! and the minimal blow-up rate.

use serde::{Deserialize, Serialize};

use crate::error::{GkdvError, Result};
use crate::grid::{fractional_derivative, integrate, norm, spectral_derivative, Field, NormKind};

/// `∫ u²`.
pub fn mass(f: &Field) -> f64 {
    f.grid().dx() * f.values().iter().map(|v| v * v).sum::<f64>()
}

/// `∫ ½(∂ₓu)² - u^{p+1}/(p+1)`.
pub fn energy(f: &Field, p: u32) -> Result<f64> {
    let fx = spectral_derivative(f, 1)?;
    let pp1 = (p + 1) as i32;
    let density = fx
        .values()
        .iter()
        .zip(f.values())
        .map(|(d, &v)| 0.5 * d * d - v.powi(pp1) / pp1 as f64)
        .collect();
    Ok(integrate(&f.with_values(density)?))
}

/// Scaling-critical regularity `s_p = 1/2 - 2/(p-1)`.
pub fn critical_exponent(p: u32) -> f64 {
    // (p - 5) / (2(p - 1)) is the same number with a single rounding
    (p as f64 - 5.0) / (2.0 * (p as f64 - 1.0))
}

/// Exponent `(s - s_p)/3` of the minimal blow-up rate for `‖u‖_{H^s}`.
pub fn rate_exponent(s: f64, p: u32) -> f64 {
    let pm1 = p as f64 - 1.0;
    (2.0 * pm1 * s - (p as f64 - 5.0)) / (6.0 * pm1)
}

/// Lower bound `C (T* - t)^{-(s - s_p)/3}` on `‖u(t)‖_{H^s}` near a blow-up
/// time `T*`.
pub fn minimal_blowup_rate(t: f64, t_star: f64, s: f64, p: u32, c: f64) -> Result<f64> {
    if !(t < t_star) {
        return Err(GkdvError::Domain(format!(
            "rate bound needs t < T* (t = {t}, T* = {t_star})"
        )));
    }
    if s < critical_exponent(p) {
        return Err(GkdvError::Domain(format!(
            "rate bound needs s >= s_p = {} (s = {s})",
            critical_exponent(p)
        )));
    }
    if !(c > 0.0) {
        return Err(GkdvError::Domain(format!("rate constant must be > 0, got {c}")));
    }
    Ok(c * (t_star - t).powf(-rate_exponent(s, p)))
}

/// Homogeneous seminorm `‖D^s f‖_{L²}`, also for negative `s` (the zero mode
/// is dropped).
pub fn homogeneous_seminorm(f: &Field, s: f64) -> Result<f64> {
    if s >= 0.0 {
        return norm(&fractional_derivative(f, s)?, NormKind::L2);
    }
    let grid = f.grid();
    let spec = grid.forward(f.values());
    let n = grid.n_points() as f64;
    // Parseval on the torus: ∫|g|² = (L / n²) Σ |ĝ_k|²
    let sum: f64 = spec
        .iter()
        .zip(grid.wavenumbers())
        .filter(|(_, k)| **k != 0.0)
        .map(|(c, k)| c.norm_sqr() * k.abs().powf(2.0 * s))
        .sum();
    Ok((grid.length() * sum / (n * n)).sqrt())
}

/// Per-sample conserved and monitored quantities.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConservationRecord {
    pub t: f64,
    pub mass: f64,
    pub energy: f64,
    pub grad_l2: f64,
    pub sup: f64,
    /// `‖u‖_{Ḣ^{s_p}}`.
    pub hs_crit: f64,
}

impl ConservationRecord {
    pub fn measure(f: &Field, p: u32) -> Result<Self> {
        Ok(Self {
            t: f.time(),
            mass: mass(f),
            energy: energy(f, p)?,
            grad_l2: norm(f, NormKind::GradL2)?,
            sup: f.max_abs(),
            hs_crit: homogeneous_seminorm(f, critical_exponent(p))?,
        })
    }
}

/// Left-hand side over right-hand side of the three Gagliardo–Nirenberg
/// inequalities, constants stripped.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GnRatios {
    /// `∫|f|^q / ((∫f²)^{(q+2)/4} (∫f_x²)^{(q-2)/4})`
    pub r1: f64,
    /// `‖f‖_q / (‖f‖₂^{1-α} ‖D^s f‖₂^α)` with `1/q = 1/2 - sα`
    pub r2: f64,
    /// `sup|f| / ((∫f²)^{1/4} (∫f_x²)^{1/4})`
    pub r3: f64,
    pub alpha: f64,
}

/// Interpolation exponent `α` solving `1/q = 1/2 - sα`, when it lies in `(0, 1]`.
pub fn gn_alpha(q: f64, s: f64) -> Result<f64> {
    let alpha = (0.5 - 1.0 / q) / s;
    if s > 0.0 && alpha > 0.0 && alpha <= 1.0 && alpha.is_finite() {
        Ok(alpha)
    } else {
        Err(GkdvError::ExponentIncompatible { q, s, alpha })
    }
}

pub fn gn_ratios(f: &Field, q: f64, s: f64) -> Result<GnRatios> {
    if !(q > 2.0) {
        return Err(GkdvError::Domain(format!("GN ratios need q > 2, got {q}")));
    }
    let alpha = gn_alpha(q, s)?;
    let m = mass(f);
    if m == 0.0 {
        return Err(GkdvError::UndefinedRatio);
    }
    let grad2 = norm(f, NormKind::GradL2)?.powi(2);
    let ds = norm(&fractional_derivative(f, s)?, NormKind::L2)?;
    if grad2 == 0.0 || ds == 0.0 {
        return Err(GkdvError::UndefinedRatio);
    }
    let lq_q = f.grid().dx() * f.values().iter().map(|v| v.abs().powf(q)).sum::<f64>();
    let r1 = lq_q / (m.powf((q + 2.0) / 4.0) * grad2.powf((q - 2.0) / 4.0));
    let r2 = lq_q.powf(1.0 / q) / (m.sqrt().powf(1.0 - alpha) * ds.powf(alpha));
    let r3 = f.max_abs() / (m.powf(0.25) * grad2.powf(0.25));
    Ok(GnRatios { r1, r2, r3, alpha })
}

/// Best constants observed over a corpus: the maximum of each ratio.
pub fn fitted_gn_constants<'a>(fields: impl IntoIterator<Item = &'a Field>, q: f64, s: f64) -> Result<GnRatios> {
    let mut best = GnRatios {
        r1: 0.0,
        r2: 0.0,
        r3: 0.0,
        alpha: gn_alpha(q, s)?,
    };
    for f in fields {
        let r = gn_ratios(f, q, s)?;
        best.r1 = best.r1.max(r.r1);
        best.r2 = best.r2.max(r.r2);
        best.r3 = best.r3.max(r.r3);
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use crate::initdata::soliton_profile;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use std::f64::consts::PI;

    #[test]
    fn mass_examples() {
        let g = Grid::shared(2048, 100.0, 0.0).unwrap();
        assert_eq!(mass(&Field::zeros(g.clone())), 0.0);
        let q = soliton_profile(2, 1.0, 0.0, &g).unwrap();
        assert_abs_diff_eq!(mass(&q), 6.0, epsilon = 1e-8);
        assert_relative_eq!(mass(&q.scaled(2.0)), 4.0 * mass(&q), max_relative = 1e-15);
    }

    #[test]
    fn soliton_energy_regression() {
        // ∫½Q'² = 6/5 and ∫Q³/3 = 12/5 for Q = (3/2) sech²(x/2)
        let g = Grid::shared(2048, 100.0, 0.0).unwrap();
        let q = soliton_profile(2, 1.0, 0.0, &g).unwrap();
        assert_abs_diff_eq!(energy(&q, 2).unwrap(), -1.8, epsilon = 1e-9);
        assert_eq!(energy(&Field::zeros(g), 2).unwrap(), 0.0);
    }

    #[test]
    fn small_gaussian_energy_is_kinetic() {
        let g = Grid::shared(1024, 40.0, 0.0).unwrap();
        let mut prev = f64::INFINITY;
        for eps in [1e-1, 1e-2, 1e-3] {
            let f = Field::from_fn(g.clone(), |x| eps * (-x * x).exp());
            let kinetic = 0.5 * norm(&f, NormKind::GradL2).unwrap().powi(2);
            let dev = (energy(&f, 3).unwrap() / kinetic - 1.0).abs();
            assert!(dev < prev);
            prev = dev;
        }
        assert!(prev < 1e-5);
    }

    #[test]
    fn critical_exponent_values() {
        assert_eq!(critical_exponent(5), 0.0);
        assert_eq!(critical_exponent(6), 0.1);
        assert_eq!(critical_exponent(9), 0.25);
        assert_abs_diff_eq!(critical_exponent(3), 0.5 - 1.0, epsilon = 1e-15);
    }

    #[test]
    fn blowup_rate_examples() {
        assert_eq!(rate_exponent(1.0, 6), 0.3);
        assert_eq!(rate_exponent(critical_exponent(6), 6), 0.0);
        let v = minimal_blowup_rate(0.0, 1e-3, 1.0, 6, 1.0).unwrap();
        assert_relative_eq!(v, 10f64.powf(0.9), max_relative = 1e-12);
        let c = minimal_blowup_rate(0.0, 0.5, critical_exponent(7), 7, 2.5).unwrap();
        assert_eq!(c, 2.5);
        assert!(minimal_blowup_rate(1.0, 1.0, 1.0, 6, 1.0).is_err());
        assert!(minimal_blowup_rate(0.0, 1.0, 0.0, 6, 1.0).is_err());
    }

    #[test]
    fn gaussian_gn3_ratio() {
        let g = Grid::shared(2048, 40.0, 0.0).unwrap();
        let f = Field::from_fn(g, |x| (-x * x).exp());
        let r = gn_ratios(&f, 4.0, 0.5).unwrap();
        assert_abs_diff_eq!(r.r3, (PI / 2.0).powf(-0.25), epsilon = 1e-10);
    }

    #[test]
    fn gn_errors() {
        let g = Grid::shared(64, 10.0, 0.0).unwrap();
        let z = Field::zeros(g.clone());
        assert!(matches!(gn_ratios(&z, 4.0, 0.5), Err(GkdvError::UndefinedRatio)));
        let f = Field::from_fn(g, |x| (-x * x).exp());
        // α = (1/2 - 1/4)/0.2 = 1.25
        assert!(matches!(
            gn_ratios(&f, 4.0, 0.2),
            Err(GkdvError::ExponentIncompatible { .. })
        ));
        assert!(gn_ratios(&f, 4.0, 0.0).is_err());
        assert_abs_diff_eq!(gn_alpha(4.0, 0.25).unwrap(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn negative_order_seminorm_single_mode() {
        let g = Grid::shared(64, 2.0 * PI, PI).unwrap();
        let f = Field::from_fn(g, |x| (3.0 * x).sin());
        // ‖D^s sin 3x‖² = 3^{2s} π
        let v = homogeneous_seminorm(&f, -0.5).unwrap();
        assert_relative_eq!(v, (PI / 3.0).sqrt(), max_relative = 1e-12);
        let w = homogeneous_seminorm(&f, 0.5).unwrap();
        assert_relative_eq!(w, (3.0 * PI).sqrt(), max_relative = 1e-12);
    }
}
