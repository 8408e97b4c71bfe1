//! Compactly supported vector fields `v`, `w` on the circle, their flows, and
//! the commutator family `h_t` built from them.

use serde::{Deserialize, Serialize};

use crate::circle::{frac, Diffeo};
use crate::error::{Error, Result};
use crate::smooth::Smoothstep;

/// Which of the two fields a flow integrates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldId {
    V,
    W,
}

const RISE_START: f64 = 0.2;
const RISE_WIDTH: f64 = 0.01;
const FALL_START: f64 = 0.21;
const FALL_WIDTH: f64 = 0.575;

/// Non-negative field supported in `(1/5, 4/5)`.
///
/// `v` climbs to 1 on `[0.2, 0.21]` and decays to 0 on `[0.21, 0.785]`;
/// `w` is its mirror image `w(x) = v(1 - x)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VectorField {
    pub id: FieldId,
}

fn v_jet(x: f64) -> (f64, f64) {
    if x <= RISE_START || x >= FALL_START + FALL_WIDTH {
        return (0.0, 0.0);
    }
    let rise = Smoothstep::Standard.jet((x - RISE_START) / RISE_WIDTH);
    let fall = Smoothstep::Standard.jet((x - FALL_START) / FALL_WIDTH);
    let value = rise.value * (1.0 - fall.value);
    let d = rise.d1 / RISE_WIDTH * (1.0 - fall.value) - rise.value * fall.d1 / FALL_WIDTH;
    (value, d)
}

impl VectorField {
    pub fn v() -> Self {
        VectorField { id: FieldId::V }
    }

    pub fn w() -> Self {
        VectorField { id: FieldId::W }
    }

    /// Field value and derivative at `x` (any real; the field is 1-periodic).
    #[inline]
    pub fn jet(&self, x: f64) -> (f64, f64) {
        let x = frac(x);
        match self.id {
            FieldId::V => v_jet(x),
            FieldId::W => {
                let (val, d) = v_jet(1.0 - x);
                (val, -d)
            }
        }
    }

    pub fn value(&self, x: f64) -> f64 {
        self.jet(x).0
    }
}

/// Constraint check on a uniform grid of `n` points.
pub fn check_fields(v: &VectorField, w: &VectorField, n: usize) -> Result<()> {
    let fail = |what: &str, x: f64| Err(Error::Construction(format!("field constraint `{what}` fails at x = {x}")));
    for i in 0..n {
        let x = i as f64 / n as f64;
        let (vv, dv) = v.jet(x);
        let (wv, dw) = w.jet(x);
        if vv < 0.0 || wv < 0.0 {
            return fail("non-negative", x);
        }
        if !(x > 0.2 && x < 0.8) && (vv != 0.0 || wv != 0.0) {
            return fail("supported in (1/5, 4/5)", x);
        }
        if (0.22..=0.78).contains(&x) && !(dv < 0.0 && dw > 0.0) {
            return fail("v' < 0 and w' > 0 on [11/50, 39/50]", x);
        }
        if (0.21..=0.79).contains(&x) && !(dv <= 0.0 && dw >= 0.0) {
            return fail("v' <= 0 and w' >= 0 on [21/100, 79/100]", x);
        }
        if (0.785..0.8).contains(&x) && vv != 0.0 {
            return fail("v = 0 on [157/200, 4/5)", x);
        }
        if x > 0.2 && x <= 0.215 && wv != 0.0 {
            return fail("w = 0 on (1/5, 43/200]", x);
        }
    }
    Ok(())
}

/// Builds `(v, w)` and checks every sign and support constraint on a
/// 4096-point grid.
pub fn build_fields() -> Result<(VectorField, VectorField)> {
    let (v, w) = (VectorField::v(), VectorField::w());
    check_fields(&v, &w, 4096)?;
    Ok((v, w))
}

/// Integration tolerance for flow maps (per point).
pub const FLOW_TOL: f64 = 1e-12;
const MAX_TIME: f64 = 10.0;

// Dormand–Prince 5(4) tableau (autonomous system, so the nodes are unused).
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Time-`t` map of `x' = -X(x)` for the named field, with the flow derivative
/// from the variational equation `(log δ)' = -X'(x)`.
///
/// Returns the lift value (near `x`) and the derivative.
pub fn flow_step(field: FieldId, x: f64, t: f64) -> Result<(f64, f64)> {
    integrate(VectorField { id: field }, x, t, FLOW_TOL)
}

/// Adaptive Dormand–Prince integration with absolute/relative tolerance `tol`.
pub fn integrate(field: VectorField, x: f64, t: f64, tol: f64) -> Result<(f64, f64)> {
    if t.abs() > MAX_TIME {
        return Err(Error::Domain(format!("flow time {t} outside [-{MAX_TIME}, {MAX_TIME}]")));
    }
    let (x0, d0) = field.jet(x);
    if t == 0.0 || (x0 == 0.0 && d0 == 0.0) {
        return Ok((x, 1.0));
    }
    let rhs = |y: [f64; 2]| -> [f64; 2] {
        let (val, d) = field.jet(y[0]);
        [-val, -d]
    };
    let dir = t.signum();
    let mut y = [x, 0.0];
    let mut s = 0.0;
    let mut h = 0.01 * dir;
    let mut k = [[0.0; 2]; 7];
    k[0] = rhs(y);
    let mut steps = 0usize;
    while (t - s) * dir > 0.0 {
        if (s + h - t) * dir > 0.0 {
            h = t - s;
        }
        for stage in 1..6 {
            let mut yi = y;
            for (j, kj) in k.iter().enumerate().take(stage) {
                let a = A[stage][j];
                if a != 0.0 {
                    yi[0] += h * a * kj[0];
                    yi[1] += h * a * kj[1];
                }
            }
            k[stage] = rhs(yi);
        }
        let mut ynew = y;
        // FSAL: the last stage is evaluated at the 5th-order solution.
        for (j, kj) in k.iter().enumerate().take(6) {
            ynew[0] += h * A[6][j] * kj[0];
            ynew[1] += h * A[6][j] * kj[1];
        }
        let k7 = rhs(ynew);
        let mut err = 0.0f64;
        for comp in 0..2 {
            let mut e = 0.0;
            for (j, kj) in k.iter().enumerate().take(6) {
                e += E[j] * kj[comp];
            }
            e += E[6] * k7[comp];
            e *= h;
            let sc = tol + tol * y[comp].abs().max(ynew[comp].abs());
            err = err.max((e / sc).abs());
        }
        if err <= 1.0 {
            s += h;
            y = ynew;
            k[0] = k7;
        }
        let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
        h *= factor;
        steps += 1;
        // A clipped final step may be tiny; only a stalled step is fatal.
        if (h.abs() < 1e-14 && (t - s) * dir > 1e-14) || steps > 1_000_000 {
            return Err(Error::numerical("flow integrator step underflow", s, t));
        }
    }
    Ok((y[0], y[1].exp()))
}

/// Half-turn conjugate `R_{1/2} ∘ f ∘ R_{-1/2}` (the same circle map as
/// `R_{1/2} f R_{1/2}`, with a lift near `f`'s).
pub fn half_turn(f: &Diffeo) -> Diffeo {
    f.conjugate_by(&Diffeo::rotation(0.5))
}

/// `f_t`: flow of `-w`.
pub fn f_flow(t: f64) -> Diffeo {
    Diffeo::flow(FieldId::W, t)
}

/// `g_t`: flow of `-v`.
pub fn g_flow(t: f64) -> Diffeo {
    Diffeo::flow(FieldId::V, t)
}

/// `h_t = [R f_t R, R g_t R] ∘ [f_t, g_t]`.
pub fn build_ht(t: f64) -> Diffeo {
    if t == 0.0 {
        return Diffeo::identity();
    }
    let (f, g) = (f_flow(t), g_flow(t));
    let outer = half_turn(&f).commutator(&half_turn(&g));
    outer.after(&f.commutator(&g))
}

/// A one-parameter family of circle maps.
pub trait MapFamily {
    fn at(&self, t: f64) -> Diffeo;
}

impl<F: Fn(f64) -> Diffeo> MapFamily for F {
    fn at(&self, t: f64) -> Diffeo {
        self(t)
    }
}

/// The commutator family `h_t` with its base parameter `t0` and the
/// Diophantine rotation number `rho0 = ρ(h_{t0})`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowFamily {
    pub t0: f64,
    pub rho0: f64,
}

/// The bare family `t ↦ h_t` (before `t0` is fixed).
#[derive(Clone, Copy, Debug, Default)]
pub struct CommutatorFamily;

impl MapFamily for CommutatorFamily {
    fn at(&self, t: f64) -> Diffeo {
        build_ht(t)
    }
}

impl FlowFamily {
    pub fn h(&self, t: f64) -> Diffeo {
        build_ht(t)
    }

    pub fn base(&self) -> Diffeo {
        build_ht(self.t0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn field_samples() {
        let (v, w) = build_fields().unwrap();
        assert_eq!(v.value(0.79), 0.0);
        assert_eq!(w.value(0.21), 0.0);
        assert!(v.jet(0.5).1 < 0.0);
        assert!(w.jet(0.5).1 > 0.0);
        assert!((v.value(0.3) - w.value(0.7)).abs() < 1e-16);
    }

    #[test]
    fn field_derivative_matches_difference() {
        let v = VectorField::v();
        for i in 1..200 {
            let x = 0.2 + 0.6 * i as f64 / 200.0;
            let h = 1e-7;
            let fd = (v.value(x + h) - v.value(x - h)) / (2.0 * h);
            assert!((fd - v.jet(x).1).abs() < 1e-5 * (1.0 + fd.abs()), "x = {x}");
        }
    }

    #[test]
    fn flow_zero_time_and_outside_support() {
        assert_eq!(flow_step(FieldId::W, 0.5, 0.0).unwrap(), (0.5, 1.0));
        assert_eq!(flow_step(FieldId::W, 0.1, 0.3).unwrap(), (0.1, 1.0));
        assert!(flow_step(FieldId::W, 0.5, 11.0).is_err());
    }

    #[test]
    fn flow_moves_left_and_is_additive() {
        let (x1, _) = flow_step(FieldId::W, 0.5, 0.1).unwrap();
        assert!(x1 < 0.5);
        for &x in &[0.25, 0.4, 0.5, 0.61, 0.77] {
            let (a, da) = flow_step(FieldId::W, x, 0.2).unwrap();
            let (b, db) = flow_step(FieldId::W, a, 0.1).unwrap();
            let (c, dc) = flow_step(FieldId::W, x, 0.3).unwrap();
            assert!((b - c).abs() < 1e-10, "x = {x}: {b} vs {c}");
            assert!((da * db - dc).abs() < 1e-9);
        }
    }

    #[test]
    fn flow_derivative_matches_difference() {
        for &x in &[0.205, 0.3, 0.5, 0.7] {
            let h = 1e-6;
            let (_, d) = flow_step(FieldId::V, x, 0.25).unwrap();
            let p = flow_step(FieldId::V, x + h, 0.25).unwrap().0;
            let m = flow_step(FieldId::V, x - h, 0.25).unwrap().0;
            assert!((d - (p - m) / (2.0 * h)).abs() < 1e-5, "x = {x}");
        }
    }

    #[test]
    fn ht_at_zero_is_identity() {
        assert!(build_ht(0.0).is_identity());
    }
}
