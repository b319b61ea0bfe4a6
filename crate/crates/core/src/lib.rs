//! Pseudospectral simulation of the generalized Korteweg–de Vries equation
//!
//! ```text
//! ∂ₜu + ∂ₓ(∂ₓ²u + uᵖ) = 0,   p ≥ 2 integer,
//! ```
//!
//! together with the diagnostics used to study its non-solitonic region:
//! conserved quantities, Gagliardo–Nirenberg ratios, weighted virial
//! functionals with their exact time-derivative identities, the time-dependent
//! scale laws, and far-field / local-decay monitors.
//!
//! The crate is organized bottom-up:
//!
//! - [`grid`]: periodic grid, spectral derivatives, quadrature, norms
//! - [`initdata`]: solitons, scaled solitons, gaussians, superpositions
//! - [`solver`]: integrating-factor / ETD Runge–Kutta time stepping with
//!   dealiasing, adaptive steps and blow-up detection
//! - [`analysis`]: mass, energy, critical exponent, GN ratios, blow-up rate
//! - [`virial`]: weight families and virial identities
//! - [`scales`]: β-functions, compact scales and center tracking
//! - [`diagnostics`]: far-field, local-decay and identity monitors, and the
//!   experiment runner
//! - [`config`], [`artifacts`], [`verify`], [`commands`]: run harness
//!
//! Runnable walkthroughs live in `examples/`; the `gkdv` binary exposes the
//! `run`, `sweep`, `verify` and `plotdata` verbs.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod artifacts;
pub mod commands;
pub mod config;
pub mod diagnostics;
pub mod error;
pub mod grid;
pub mod initdata;
pub mod scales;
pub mod solver;
pub mod verify;
pub mod virial;

pub use error::{GkdvError, Result};
pub use grid::{Field, Grid, Interval, NormKind};
