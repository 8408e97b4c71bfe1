//! Four-commutator factorization of maps near the identity.

use serde::{Deserialize, Serialize};

use crate::circle::{c0_distance, support, Diffeo, Interval};
use crate::error::{Error, Result};
use crate::flows::{f_flow, g_flow, half_turn};
use crate::rotation::{FamilySolution, FamilySolver};

/// Support of the flows (and of `x1, x2, x7, x8`).
pub const FLOW_SUPPORT: (f64, f64) = (0.2, 0.8);
/// Interval avoided by the supports of `x3, ..., x6`.
pub const AVOIDED: (f64, f64) = (0.3, 0.7);

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecomposeParams {
    /// Allowed enlargement `δ` of the prescribed supports.
    pub support_margin: f64,
    pub support_tol: f64,
    pub grid: usize,
}

impl Default for DecomposeParams {
    fn default() -> Self {
        DecomposeParams { support_margin: 0.01, support_tol: 1e-10, grid: 4096 }
    }
}

/// Support of one factor and how far it leaves its prescribed region.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SupportCheck {
    pub piece: String,
    pub support: Vec<Interval>,
    /// Distance by which the support exceeds the unenlarged region.
    pub overshoot: f64,
    /// C^0 distance to the identity.
    pub size: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CommutatorDecomposition {
    pub x: [Diffeo; 8],
    pub t: f64,
    pub b: Diffeo,
    /// C^0 distance of `[x1,x2][x3,x4][x5,x6][x7,x8]` to the input.
    pub residual: f64,
    pub supports: Vec<SupportCheck>,
    pub solution: FamilySolution,
}

impl CommutatorDecomposition {
    /// `[x1,x2][x3,x4][x5,x6][x7,x8]`.
    pub fn product(&self) -> Diffeo {
        product_of(&self.x)
    }
}

pub fn product_of(x: &[Diffeo; 8]) -> Diffeo {
    Diffeo::chain(&[
        x[0].commutator(&x[1]),
        x[2].commutator(&x[3]),
        x[4].commutator(&x[5]),
        x[6].commutator(&x[7]),
    ])
}

/// The eight factors for given `t0`, `t` and `b`.
pub fn factors(t0: f64, t: f64, b: &Diffeo) -> [Diffeo; 8] {
    let (f, g) = (f_flow(t0 + t), g_flow(t0 + t));
    let (f0, g0) = (f_flow(t0), g_flow(t0));
    [
        g.clone(),
        f.clone(),
        half_turn(&g),
        half_turn(&f),
        half_turn(&f0).conjugate_by(b),
        half_turn(&g0).conjugate_by(b),
        f0.conjugate_by(b),
        g0.conjugate_by(b),
    ]
}

/// Overshoot of `pieces` beyond `(lo - δ, hi + δ)`, measured from `(lo, hi)`.
fn inside_overshoot(pieces: &[Interval], lo: f64, hi: f64) -> f64 {
    pieces.iter().map(|p| (lo - p.left).max(p.right - hi).max(0.0)).fold(0.0, f64::max)
}

/// Depth by which `pieces` reach into `[lo, hi]`.
fn avoid_overshoot(pieces: &[Interval], lo: f64, hi: f64) -> f64 {
    pieces
        .iter()
        .map(|p| {
            if p.right <= lo || p.left >= hi {
                0.0
            } else {
                (p.right.min(hi) - lo).min(hi - p.left.max(lo)).max(0.0)
            }
        })
        .fold(0.0, f64::max)
}

pub fn check_supports(x: &[Diffeo; 8], p: &DecomposeParams) -> Result<Vec<SupportCheck>> {
    let id = Diffeo::identity();
    let mut out = Vec::with_capacity(8);
    for (i, f) in x.iter().enumerate() {
        let pieces = support(f, p.support_tol, p.grid)?;
        let overshoot = match i {
            0 | 1 | 6 | 7 => inside_overshoot(&pieces, FLOW_SUPPORT.0, FLOW_SUPPORT.1),
            _ => avoid_overshoot(&pieces, AVOIDED.0, AVOIDED.1),
        };
        out.push(SupportCheck {
            piece: format!("x{}", i + 1),
            support: pieces,
            overshoot,
            size: c0_distance(f, &id, p.grid)?,
        });
    }
    Ok(out)
}

/// Rotation parameter `θ` of `b_θ = c_target⁻¹ R_θ c_base` that maximizes
/// the smallest margin of the four endpoint conditions
/// `b(1/5) ≥ 1/5`, `b(4/5) ≤ 4/5`, `b(7/10) ≥ 7/10`, `b(13/10) ≤ 13/10`,
/// which place `b (1/5, 4/5)` and `b (7/10, 13/10)` in their regions.
/// Returns `θ` and the margin (negative when the regions are missed).
pub fn balance_conjugacy(solution: &FamilySolution) -> Result<(f64, f64)> {
    let half = 0.5;
    let margins = |theta: f64| -> Result<(f64, f64)> {
        let b = solution.conjugacy(theta)?;
        let d = |x: f64| b.lift(x).map(|y| y - x);
        let up = d(FLOW_SUPPORT.0)?.min(d(FLOW_SUPPORT.0 + half)?);
        let down = (-d(FLOW_SUPPORT.1)?).min(-d(FLOW_SUPPORT.1 + half)?);
        Ok((up, down))
    };
    // `up` increases and `down` decreases with θ; the balanced point is
    // where they meet. Shifting θ by 1 shifts every lift by 1.
    let (mut lo, mut hi) = (-2.0f64, 2.0f64);
    for _ in 0..64 {
        let mid = 0.5 * (lo + hi);
        let (up, down) = margins(mid)?;
        if up < down {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let theta = 0.5 * (lo + hi);
    let (up, down) = margins(theta)?;
    Ok((theta.rem_euclid(1.0), up.min(down)))
}

/// Factors `x` as `[x1,x2][x3,x4][x5,x6][x7,x8]` with the flow pieces of the
/// family and the conjugacy `b` returned by the family solver.
pub fn decompose(x: &Diffeo, solver: &FamilySolver, p: &DecomposeParams) -> Result<CommutatorDecomposition> {
    let mut solution = solver.solve(x)?;
    let (theta, _) = balance_conjugacy(&solution)?;
    solution.b = solution.conjugacy(theta)?;
    solution.theta = theta;
    let factors = factors(solver.family.t0, solution.t, &solution.b);
    let supports = check_supports(&factors, p)?;
    if let Some(bad) = supports.iter().find(|s| s.overshoot > p.support_margin) {
        return Err(Error::Margin { piece: bad.piece.clone(), overshoot: bad.overshoot - p.support_margin });
    }
    let product = product_of(&factors);
    let residual = c0_distance(&product, x, solver.params.residual_grid)?;
    Ok(CommutatorDecomposition { x: factors, t: solution.t, b: solution.b.clone(), residual, supports, solution })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flows::build_ht;

    #[test]
    fn regrouping_is_exact() {
        let (t0, t) = (0.3, 0.02);
        let b = Diffeo::rotation(0.003);
        let x = factors(t0, t, &b);
        let expected = build_ht(t0 + t).inverse().after(&build_ht(t0).conjugate_by(&b));
        let d = c0_distance(&product_of(&x), &expected, 256).unwrap();
        assert!(d < 1e-10, "{d}");
    }

    #[test]
    fn overshoot_measures() {
        let pieces = [Interval::closed(0.195, 0.5)];
        assert!((inside_overshoot(&pieces, 0.2, 0.8) - 0.005).abs() < 1e-15);
        let pieces = [Interval::closed(0.65, 0.72)];
        assert!((avoid_overshoot(&pieces, 0.3, 0.7) - 0.05).abs() < 1e-15);
        assert_eq!(avoid_overshoot(&[Interval::closed(0.71, 1.0)], 0.3, 0.7), 0.0);
    }
}
