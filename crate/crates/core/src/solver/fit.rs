//! Least-squares fit of a power-law singularity `g(t) ≈ A (T - t)^{-γ}`.

use serde::{Deserialize, Serialize};

/// Minimum samples in the fit window for the fit to count as reliable.
pub const MIN_FIT_SAMPLES: usize = 8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlowupFit {
    pub t_star: f64,
    pub exponent: f64,
    /// `log A`.
    pub log_prefactor: f64,
    /// RMS residual of `log g` over the window.
    pub residual_rms: f64,
    pub n_samples: usize,
    pub window_start: f64,
    pub reliable: bool,
    /// Why the fit is not reliable, when it is not.
    pub note: Option<String>,
}

fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let icpt = my - slope * mx;
    let ssr: f64 = xs.iter().zip(ys).map(|(x, y)| (y - icpt - slope * x).powi(2)).sum();
    (icpt, slope, ssr)
}

/// Fit over the last decade of growth (`g ≥ g_last / 10`) of the history
/// `(t, g)`. Returns `None` when fewer than three samples are available.
pub fn fit_blowup(history: &[(f64, f64)]) -> Option<BlowupFit> {
    let &(t_last, g_last) = history.last()?;
    if !(g_last > 0.0 && g_last.is_finite()) {
        return None;
    }
    // walk back while the sample stays within the last decade
    let mut start = history.len() - 1;
    while start > 0 && history[start - 1].1 >= g_last / 10.0 {
        start -= 1;
    }
    let window = &history[start..];
    if window.len() < 3 {
        return None;
    }
    let t0 = window[0].0;
    let width = (t_last - t0).max(f64::EPSILON);
    let ys: Vec<f64> = window.iter().map(|&(_, g)| g.ln()).collect();
    let ssr_at = |ln_delta: f64| {
        let t_star = t_last + ln_delta.exp();
        let xs: Vec<f64> = window.iter().map(|&(t, _)| (t_star - t).ln()).collect();
        linear_fit(&xs, &ys)
    };

    let (lo, hi) = ((1e-4 * width).ln(), (1e2 * width).ln());
    let grid_n = 200;
    let grid: Vec<f64> = (0..=grid_n)
        .map(|i| lo + (hi - lo) * i as f64 / grid_n as f64)
        .collect();
    let (best_i, _) = grid
        .iter()
        .map(|&ld| ssr_at(ld).2)
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, v)| if v < acc.1 { (i, v) } else { acc });
    let at_edge = best_i == 0 || best_i == grid_n;

    // golden-section refinement between the neighbours of the coarse optimum
    let mut a = grid[best_i.saturating_sub(1)];
    let mut b = grid[(best_i + 1).min(grid_n)];
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    for _ in 0..80 {
        if ssr_at(c).2 < ssr_at(d).2 {
            b = d;
        } else {
            a = c;
        }
        c = b - r * (b - a);
        d = a + r * (b - a);
    }
    let ld = 0.5 * (a + b);
    let (icpt, slope, ssr) = ssr_at(ld);
    let exponent = -slope;
    let n_samples = window.len();
    let note = if n_samples < MIN_FIT_SAMPLES {
        Some(format!("only {n_samples} samples in the last decade of growth"))
    } else if at_edge {
        Some("optimal blow-up time sits at the edge of the search bracket".to_string())
    } else if !(exponent > 0.0) {
        Some(format!("non-positive fitted exponent {exponent}"))
    } else {
        None
    };
    Some(BlowupFit {
        t_star: t_last + ld.exp(),
        exponent,
        log_prefactor: icpt,
        residual_rms: (ssr / n_samples as f64).sqrt(),
        n_samples,
        window_start: t0,
        reliable: note.is_none(),
        note,
    })
}
