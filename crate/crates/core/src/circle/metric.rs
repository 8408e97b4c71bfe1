use serde::{Deserialize, Serialize};

use super::{centered, Diffeo, Interval};
use crate::error::Result;

/// Weighted `C^r` distance on a uniform grid:
/// `d(f, g) = Σ_{r ≤ R} w_r · min(1, ‖f - g‖_{C^r, grid})`.
///
/// Orders 0 and 1 are exact pointwise quantities; orders 2 and 3 are centered
/// differences of the first-derivative samples with step `1/grid_size`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricConfig {
    pub max_order: usize,
    pub grid_size: usize,
    pub weights: Vec<f64>,
}

impl Default for MetricConfig {
    fn default() -> Self {
        MetricConfig::with_order(3, 4096)
    }
}

impl MetricConfig {
    pub fn with_order(max_order: usize, grid_size: usize) -> Self {
        let weights = (0..=max_order).map(|r| 0.5f64.powi(r as i32)).collect();
        MetricConfig { max_order, grid_size, weights }
    }

    fn weight(&self, r: usize) -> f64 {
        self.weights.get(r).copied().unwrap_or_else(|| 0.5f64.powi(r as i32))
    }
}

/// `(x, f(x), f'(x))`, with `f(x)` reduced to `[0, 1)` and the lift
/// displacement kept alongside.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub x: f64,
    pub value: f64,
    pub derivative: f64,
    #[serde(skip)]
    pub displacement: f64,
}

pub fn sample(f: &Diffeo, n: usize) -> Result<Vec<Sample>> {
    (0..n)
        .map(|i| {
            let x = i as f64 / n as f64;
            let (disp, d) = f.displacement_jet(x)?;
            Ok(Sample { x, value: super::frac(x + disp), derivative: d, displacement: disp })
        })
        .collect()
}

/// Per-order sup norms of `f - g` on the grid, orders `0..=max_order`.
pub fn order_norms(f: &Diffeo, g: &Diffeo, max_order: usize, n: usize) -> Result<Vec<f64>> {
    let a = sample(f, n)?;
    let b = sample(g, n)?;
    let h = 1.0 / n as f64;
    let dd: Vec<f64> = a.iter().zip(&b).map(|(p, q)| p.derivative - q.derivative).collect();
    let mut norms = vec![0.0; max_order + 1];
    norms[0] = a
        .iter()
        .zip(&b)
        .map(|(p, q)| centered(p.displacement - q.displacement).abs())
        .fold(0.0, f64::max);
    if max_order >= 1 {
        norms[1] = dd.iter().map(|d| d.abs()).fold(0.0, f64::max);
    }
    for (r, norm) in norms.iter_mut().enumerate().skip(2) {
        let mut m = 0.0f64;
        for i in 0..n {
            let prev = dd[(i + n - 1) % n];
            let next = dd[(i + 1) % n];
            let v = match r {
                2 => (next - prev) / (2.0 * h),
                _ => (next - 2.0 * dd[i] + prev) / (h * h),
            };
            m = m.max(v.abs());
        }
        *norm = m;
    }
    Ok(norms)
}

pub fn distance(f: &Diffeo, g: &Diffeo, cfg: &MetricConfig) -> Result<f64> {
    let norms = order_norms(f, g, cfg.max_order, cfg.grid_size)?;
    Ok(norms.iter().enumerate().map(|(r, v)| cfg.weight(r) * v.min(1.0)).sum())
}

/// Sup over the grid of the circle distance between `f(x)` and `g(x)`.
pub fn c0_distance(f: &Diffeo, g: &Diffeo, n: usize) -> Result<f64> {
    let mut m = 0.0f64;
    for i in 0..n {
        let x = i as f64 / n as f64;
        m = m.max(centered(f.displacement(x)? - g.displacement(x)?).abs());
    }
    Ok(m)
}

/// `max(C^0, C^1)` sup norm of `f - g` on the grid.
pub fn c1_distance(f: &Diffeo, g: &Diffeo, n: usize) -> Result<f64> {
    let norms = order_norms(f, g, 1, n)?;
    Ok(norms[0].max(norms[1]))
}

/// Grid-resolved support: the union of closed arcs outside which
/// `|f(x) - x| <= tol` at every grid point. Each run of flagged grid points
/// is widened by one grid step on both sides.
pub fn support(f: &Diffeo, tol: f64, n: usize) -> Result<Vec<Interval>> {
    let h = 1.0 / n as f64;
    let flagged: Vec<bool> = (0..n)
        .map(|i| Ok(centered(f.displacement(i as f64 * h)?).abs() > tol))
        .collect::<Result<_>>()?;
    if flagged.iter().all(|&b| b) {
        return Ok(vec![Interval::closed(0.0, 1.0)]);
    }
    // Runs on the cyclic grid, started just after an unflagged point.
    let start = flagged.iter().position(|&b| !b).unwrap_or(0);
    let mut runs: Vec<(usize, usize)> = Vec::new();
    let mut current: Option<usize> = None;
    for step in 1..=n {
        let i = (start + step) % n;
        match (flagged[i], current) {
            (true, None) => current = Some(start + step),
            (false, Some(first)) => {
                runs.push((first, start + step - 1));
                current = None;
            }
            _ => {}
        }
    }
    if let Some(first) = current {
        runs.push((first, start + n));
    }
    let mut out = Vec::new();
    for (a, b) in runs {
        out.extend(Interval::arc((a as f64 - 1.0) * h, (b as f64 + 1.0) * h));
    }
    out.sort_by(|p, q| p.left.total_cmp(&q.left));
    Ok(out)
}
