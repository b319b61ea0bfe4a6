//! Gagliardo–Nirenberg ratios over random band-limited fields: the largest
//! observed ratio estimates each best constant.
//!
//! ```text
//! cargo run --release --example gn_inequalities -- [count] [seed]
//! ```

use gkdv::analysis::{fitted_gn_constants, gn_ratios};
use gkdv::verify::band_limited_corpus;
use gkdv::Grid;

fn main() -> gkdv::Result<()> {
    let mut args = std::env::args().skip(1);
    let count: usize = args.next().map_or(200, |a| a.parse().expect("count"));
    let seed: u64 = args.next().map_or(7, |a| a.parse().expect("seed"));

    let grid = Grid::shared(512, 40.0, 0.0)?;
    let corpus = band_limited_corpus(&grid, count, 24, seed);
    for (q, s) in [(6.0, 1.0), (4.0, 0.5), (10.0, 0.75)] {
        let best = fitted_gn_constants(&corpus, q, s)?;
        println!(
            "q = {q:>4}, s = {s:<4}  alpha = {:.4}  max r1 = {:.4}  max r2 = {:.4}  max r3 = {:.4}",
            best.alpha, best.r1, best.r2, best.r3
        );
    }
    let gaussian = gkdv::Field::from_fn(grid.clone(), |x| (-x * x).exp());
    let r = gn_ratios(&gaussian, 6.0, 1.0)?;
    println!("gaussian r3 = {:.6} (sharp constant 1)", r.r3);
    Ok(())
}
