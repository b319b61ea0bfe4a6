//! Transport of an exact soliton: compares the evolved state with the shifted
//! profile and reports mass and energy drift.
//!
//! ```text
//! cargo run --release --example soliton_transport -- [p] [dt] [t_end]
//! ```

use gkdv::initdata::soliton_profile;
use gkdv::solver::{evolve, SolverConfig};
use gkdv::Grid;

fn main() -> gkdv::Result<()> {
    let mut args = std::env::args().skip(1);
    let p: u32 = args.next().map_or(Ok(2), |a| a.parse()).expect("p");
    let dt: f64 = args.next().map_or(Ok(1e-3), |a| a.parse()).expect("dt");
    let t_end: f64 = args.next().map_or(Ok(5.0), |a| a.parse()).expect("t_end");
    let c = 1.0;

    let grid = Grid::shared(2048, 100.0, 0.0)?;
    let u0 = soliton_profile(p, c, -10.0, &grid)?;
    let mut cfg = SolverConfig::fixed(p, dt, t_end);
    cfg.sample_every = 100;

    let start = std::time::Instant::now();
    let traj = evolve(&u0, &cfg, &mut [])?;
    let exact = soliton_profile(p, c, -10.0 + c * t_end, &grid)?;
    let err = traj
        .final_field
        .values()
        .iter()
        .zip(exact.values())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);

    println!("p = {p}, dt = {dt}, t_end = {t_end}, steps = {}", traj.steps);
    println!("sup error vs shifted profile: {err:.3e}");
    println!("relative mass drift:          {:.3e}", traj.relative_drift(|r| r.mass));
    println!(
        "relative energy drift:        {:.3e}",
        traj.relative_drift(|r| r.energy)
    );
    println!("wall time:                    {:.2?}", start.elapsed());
    Ok(())
}
