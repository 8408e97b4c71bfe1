use serde::{Deserialize, Serialize};

use crate::circle::{frac, Diffeo};
use crate::error::Result;

/// Rotation number estimate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RotationEstimate {
    /// Rotation number reduced to `[0, 1)`.
    pub value: f64,
    /// Unreduced translation number of the lift (average displacement).
    pub translation: f64,
    pub error_bound: f64,
    pub iterates_used: usize,
}

/// `exp(-1/(s(1-s)))` on `(0, 1)`.
fn bump_weight(s: f64) -> f64 {
    if s <= 0.0 || s >= 1.0 {
        0.0
    } else {
        (-1.0 / (s * (1.0 - s))).exp()
    }
}

/// Weighted Birkhoff average `Σ w(j/N) φ_j / Σ w(j/N)` of a sequence.
pub fn weighted_average(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mut num = 0.0;
    let mut den = 0.0;
    for (j, v) in values.iter().enumerate() {
        let w = bump_weight((j as f64 + 0.5) / n);
        num += w * v;
        den += w;
    }
    num / den
}

/// Lift displacements `F(x_j) - x_j` along the orbit of `x0`.
pub fn orbit_displacements(f: &Diffeo, x0: f64, count: usize) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(count);
    let mut x = x0;
    for _ in 0..count {
        let d = f.displacement(x)?;
        out.push(d);
        x = frac(x + d);
    }
    Ok(out)
}

/// Rotation number by weighted Birkhoff averaging of the lift displacement
/// along the orbit of 0. The error bound is the change against the average
/// over the first half of the orbit.
pub fn rotation_number(f: &Diffeo, budget: usize) -> Result<RotationEstimate> {
    let budget = budget.max(16);
    let disp = orbit_displacements(f, 0.0, budget)?;
    let full = weighted_average(&disp);
    let half = weighted_average(&disp[..budget / 2]);
    Ok(RotationEstimate {
        value: frac(full),
        translation: full,
        error_bound: (full - half).abs(),
        iterates_used: budget,
    })
}

/// Plain Birkhoff average `(F^N(x0) - x0) / N`; converges like `1/N`.
pub fn plain_rotation_number(f: &Diffeo, budget: usize) -> Result<f64> {
    let disp = orbit_displacements(f, 0.0, budget)?;
    Ok(disp.iter().sum::<f64>() / budget as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rigid_rotation() {
        let r = rotation_number(&Diffeo::rotation(0.25), 1000).unwrap();
        assert!((r.value - 0.25).abs() < 1e-12);
        let r = rotation_number(&Diffeo::rotation(-0.1), 1000).unwrap();
        assert!((r.value - 0.9).abs() < 1e-12);
        assert!((r.translation + 0.1).abs() < 1e-12);
    }

    #[test]
    fn weighted_average_of_constant() {
        assert!((weighted_average(&[3.0; 100]) - 3.0).abs() < 1e-14);
    }
}
