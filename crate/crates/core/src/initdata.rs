//! Initial data: exact solitons, amplified solitons, gaussians and
//! superpositions.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{GkdvError, Result};
use crate::grid::{spectral_derivative, Field, Grid};

/// Initial-condition families. The power `p` comes from the model section of
/// the run configuration and is passed alongside.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitSpec {
    Soliton {
        c: f64,
        #[serde(default)]
        x0: f64,
    },
    ScaledSoliton {
        amplitude_factor: f64,
        c: f64,
        #[serde(default)]
        x0: f64,
    },
    Gaussian {
        amplitude: f64,
        width: f64,
        #[serde(default)]
        x0: f64,
    },
    TwoSoliton {
        c1: f64,
        x1: f64,
        c2: f64,
        x2: f64,
    },
    CustomSamples {
        values: Vec<f64>,
    },
    Zero,
}

impl InitSpec {
    /// Parameter checks; each failure carries its config path.
    pub fn validate(&self, errors: &mut Vec<String>) {
        let mut positive = |name: &str, v: f64| {
            if !(v.is_finite() && v > 0.0) {
                errors.push(format!("init.{name}: must be finite and > 0, got {v}"));
            }
        };
        match *self {
            InitSpec::Soliton { c, .. } => positive("c", c),
            InitSpec::ScaledSoliton {
                amplitude_factor, c, ..
            } => {
                positive("c", c);
                positive("amplitude_factor", amplitude_factor);
            }
            InitSpec::Gaussian { width, .. } => positive("width", width),
            InitSpec::TwoSoliton { c1, c2, .. } => {
                positive("c1", c1);
                positive("c2", c2);
            }
            InitSpec::CustomSamples { .. } | InitSpec::Zero => {}
        }
    }
}

/// `sech` without overflow for large arguments.
pub(crate) fn sech(z: f64) -> f64 {
    let e = (-z.abs()).exp();
    2.0 * e / (1.0 + e * e)
}

/// Unit-speed profile `Q(σ) = ((p+1) / (2 cosh²((p-1)σ/2)))^{1/(p-1)}`.
pub fn unit_profile(p: u32, sigma: f64) -> f64 {
    let pm1 = (p - 1) as f64;
    let s = sech(0.5 * pm1 * sigma);
    (0.5 * (p as f64 + 1.0) * s * s).powf(1.0 / pm1)
}

/// `Q_c(y) = c^{1/(p-1)} Q(√c y)`.
pub fn soliton_value(p: u32, c: f64, y: f64) -> f64 {
    c.powf(1.0 / (p - 1) as f64) * unit_profile(p, c.sqrt() * y)
}

/// Samples of `Q_c(x - x0)`.
pub fn soliton_profile(p: u32, c: f64, x0: f64, grid: &Arc<Grid>) -> Result<Field> {
    check_power(p)?;
    if !(c > 0.0) {
        return Err(GkdvError::Domain(format!("soliton speed must be > 0, got {c}")));
    }
    Ok(Field::from_fn(grid.clone(), |x| soliton_value(p, c, x - x0)))
}

fn check_power(p: u32) -> Result<()> {
    if p < 2 {
        return Err(GkdvError::Domain(format!("power p must be >= 2, got {p}")));
    }
    Ok(())
}

/// `sup |∂ₓ²f + fᵖ - c f|`: vanishes on an exact soliton of speed `c`.
pub fn soliton_residual(p: u32, c: f64, f: &Field) -> Result<f64> {
    let fxx = spectral_derivative(f, 2)?;
    Ok(fxx
        .values()
        .iter()
        .zip(f.values())
        .map(|(d2, &v)| (d2 + v.powi(p as i32) - c * v).abs())
        .fold(0.0, f64::max))
}

pub fn make_initial(spec: &InitSpec, p: u32, grid: &Arc<Grid>) -> Result<Field> {
    check_power(p)?;
    let mut errors = Vec::new();
    spec.validate(&mut errors);
    if !errors.is_empty() {
        return Err(GkdvError::Validation(errors));
    }
    match spec {
        &InitSpec::Soliton { c, x0 } => soliton_profile(p, c, x0, grid),
        &InitSpec::ScaledSoliton {
            amplitude_factor,
            c,
            x0,
        } => Ok(soliton_profile(p, c, x0, grid)?.scaled(amplitude_factor)),
        &InitSpec::Gaussian { amplitude, width, x0 } => Ok(Field::from_fn(grid.clone(), |x| {
            let z = (x - x0) / width;
            amplitude * (-z * z).exp()
        })),
        &InitSpec::TwoSoliton { c1, x1, c2, x2 } => {
            soliton_profile(p, c1, x1, grid)?.add(&soliton_profile(p, c2, x2, grid)?)
        }
        InitSpec::CustomSamples { values } => Field::new(grid.clone(), values.clone(), 0.0),
        InitSpec::Zero => Ok(Field::zeros(grid.clone())),
    }
}

/// Largest ratio `|profile at window edge| / peak` over the soliton
/// components of `spec`, if any. Values above `1e-12` mean the periodic
/// window truncates the tails.
pub fn soliton_edge_ratio(spec: &InitSpec, p: u32, grid: &Grid) -> Option<f64> {
    let ratio = |c: f64, x0: f64| {
        let peak = soliton_value(p, c, 0.0);
        let edge = soliton_value(p, c, grid.x_min() - x0).max(soliton_value(p, c, grid.x_max() - x0));
        edge / peak
    };
    match *spec {
        InitSpec::Soliton { c, x0 } | InitSpec::ScaledSoliton { c, x0, .. } => Some(ratio(c, x0)),
        InitSpec::TwoSoliton { c1, x1, c2, x2 } => Some(ratio(c1, x1).max(ratio(c2, x2))),
        _ => None,
    }
}

pub const SOLITON_EDGE_TOLERANCE: f64 = 1e-12;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::mass;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn window() -> Arc<Grid> {
        Grid::shared(2048, 100.0, 0.0).unwrap()
    }

    #[test]
    fn peak_values() {
        assert_abs_diff_eq!(soliton_value(2, 1.0, 0.0), 1.5, epsilon = 1e-15);
        assert_abs_diff_eq!(soliton_value(5, 1.0, 0.0), 3f64.powf(0.25), epsilon = 1e-15);
        assert_abs_diff_eq!(soliton_value(5, 1.0, 0.0), 1.316_074_012_952_492, epsilon = 1e-12);
        assert_abs_diff_eq!(soliton_value(2, 4.0, 0.0), 6.0, epsilon = 1e-13);
    }

    #[test]
    fn sech_is_overflow_safe() {
        assert_eq!(sech(1e4), 0.0);
        assert_abs_diff_eq!(sech(0.3), 1.0 / 0.3f64.cosh(), epsilon = 1e-15);
        assert!(unit_profile(9, 1e3).is_finite());
    }

    #[test]
    fn residual_examples() {
        let g = window();
        let q = soliton_profile(2, 1.0, 0.0, &g).unwrap();
        assert!(soliton_residual(2, 1.0, &q).unwrap() < 1e-8);
        let bumped = q.scaled(1.1);
        assert!(soliton_residual(2, 1.0, &bumped).unwrap() > 1e-2);
        assert_eq!(soliton_residual(2, 1.0, &Field::zeros(g)).unwrap(), 0.0);
    }

    #[test]
    fn residual_converges_spectrally() {
        let mut prev = f64::INFINITY;
        for n in [64usize, 128, 256] {
            let g = Grid::shared(n, 60.0, 0.0).unwrap();
            let q = soliton_profile(2, 1.0, 0.0, &g).unwrap();
            let r = soliton_residual(2, 1.0, &q).unwrap();
            if prev > 1e-11 {
                assert!(prev / r >= 10.0, "n = {n}: {prev} -> {r}");
            }
            prev = r;
        }
    }

    #[test]
    fn make_initial_kinds() {
        let g = window();
        let gauss = make_initial(
            &InitSpec::Gaussian {
                amplitude: 1.0,
                width: 1.0,
                x0: 0.0,
            },
            3,
            &g,
        )
        .unwrap();
        assert_abs_diff_eq!(gauss.values()[1024], 1.0, epsilon = 1e-15);

        let base = make_initial(&InitSpec::Soliton { c: 1.0, x0: 0.0 }, 6, &g).unwrap();
        let amp = make_initial(
            &InitSpec::ScaledSoliton {
                amplitude_factor: 1.5,
                c: 1.0,
                x0: 0.0,
            },
            6,
            &g,
        )
        .unwrap();
        assert_relative_eq!(mass(&amp), 2.25 * mass(&base), max_relative = 1e-14);

        let two = make_initial(
            &InitSpec::TwoSoliton {
                c1: 1.0,
                x1: -20.0,
                c2: 2.0,
                x2: 20.0,
            },
            2,
            &g,
        )
        .unwrap();
        let m1 = mass(&soliton_profile(2, 1.0, -20.0, &g).unwrap());
        let m2 = mass(&soliton_profile(2, 2.0, 20.0, &g).unwrap());
        assert_abs_diff_eq!(mass(&two), m1 + m2, epsilon = 1e-8);
    }

    #[test]
    fn custom_samples_shape_checked() {
        let g = Grid::shared(16, 1.0, 0.0).unwrap();
        let err = make_initial(&InitSpec::CustomSamples { values: vec![0.0; 15] }, 2, &g);
        assert!(matches!(err, Err(GkdvError::Shape { expected: 16, got: 15 })));
        assert!(make_initial(&InitSpec::Soliton { c: -1.0, x0: 0.0 }, 2, &g).is_err());
        assert!(make_initial(&InitSpec::Zero, 1, &g).is_err());
    }

    #[test]
    fn edge_ratio_flags_narrow_windows() {
        let wide = Grid::new(1024, 100.0, 0.0).unwrap();
        let narrow = Grid::new(256, 10.0, 0.0).unwrap();
        let spec = InitSpec::Soliton { c: 1.0, x0: 0.0 };
        assert!(soliton_edge_ratio(&spec, 2, &wide).unwrap() < SOLITON_EDGE_TOLERANCE);
        assert!(soliton_edge_ratio(&spec, 2, &narrow).unwrap() > SOLITON_EDGE_TOLERANCE);
        assert!(soliton_edge_ratio(&InitSpec::Zero, 2, &wide).is_none());
    }
}
