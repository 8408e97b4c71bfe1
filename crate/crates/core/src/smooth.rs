//! Flat (C^∞) transition functions.
//!
//! Every cut-off in the crate is built from `Smoothstep`: a monotone map from
//! 0 on `(-∞, 0]` to 1 on `[1, ∞)` whose derivatives of all orders vanish at
//! both ends. The standard profile is `e^{-1/u} / (e^{-1/u} + e^{-1/(1-u)})`.

use serde::{Deserialize, Serialize};

/// Value and first two derivatives of a scalar function at a point.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Jet2 {
    pub value: f64,
    pub d1: f64,
    pub d2: f64,
}

/// `1 / (1 + exp(c (1/u - 1/(1-u))))` on `(0, 1)`.
///
/// `steepness = 1` gives the standard exponential smoothstep with maximal slope
/// 2 at `u = 1/2`.
pub fn logistic_step(u: f64, steepness: f64) -> Jet2 {
    if u <= 0.0 {
        return Jet2::default();
    }
    if u >= 1.0 {
        return Jet2 { value: 1.0, d1: 0.0, d2: 0.0 };
    }
    let v = 1.0 - u;
    let q = steepness * (1.0 / u - 1.0 / v);
    let dq = -steepness * (1.0 / (u * u) + 1.0 / (v * v));
    let ddq = steepness * (2.0 / (u * u * u) - 2.0 / (v * v * v));
    // theta and 1 - theta are computed separately to avoid cancellation.
    let (theta, comp) = if q > 0.0 {
        let e = (-q).exp();
        (e / (1.0 + e), 1.0 / (1.0 + e))
    } else {
        let e = q.exp();
        (1.0 / (1.0 + e), e / (1.0 + e))
    };
    let s = theta * comp;
    let d1 = -s * dq;
    // d/du [theta (1 - theta)] = theta' (1 - 2 theta)
    let d2 = -d1 * (comp - theta) * dq - s * ddq;
    if !d1.is_finite() || !d2.is_finite() {
        // q overflowed: we are inside the flat tail.
        return Jet2 { value: theta, d1: 0.0, d2: 0.0 };
    }
    Jet2 { value: theta, d1, d2 }
}

/// A flat monotone transition from 0 to 1 over `[0, 1]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "profile", rename_all = "snake_case")]
pub enum Smoothstep {
    /// The standard exponential smoothstep.
    Standard,
    /// Average of two offset copies of a softened step; its slope never exceeds
    /// 1.42, against 2 for [`Smoothstep::Standard`].
    Gentle,
}

const GENTLE_STEEPNESS: f64 = 0.7;
const GENTLE_OFFSET: f64 = 0.4;

impl Smoothstep {
    pub fn jet(self, u: f64) -> Jet2 {
        match self {
            Smoothstep::Standard => logistic_step(u, 1.0),
            Smoothstep::Gentle => {
                let w = 1.0 - GENTLE_OFFSET;
                let a = logistic_step(u / w, GENTLE_STEEPNESS);
                let b = logistic_step((u - GENTLE_OFFSET) / w, GENTLE_STEEPNESS);
                Jet2 {
                    value: 0.5 * (a.value + b.value),
                    d1: 0.5 * (a.d1 + b.d1) / w,
                    d2: 0.5 * (a.d2 + b.d2) / (w * w),
                }
            }
        }
    }

    pub fn value(self, u: f64) -> f64 {
        self.jet(u).value
    }

    /// Supremum of the slope over `[0, 1]`.
    pub fn max_slope(self) -> f64 {
        match self {
            Smoothstep::Standard => 2.0,
            Smoothstep::Gentle => 1.42,
        }
    }
}

/// Plateau bump: 0 outside `(left, right)`, 1 on `[plateau_left, plateau_right]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Plateau {
    pub left: f64,
    pub plateau_left: f64,
    pub plateau_right: f64,
    pub right: f64,
    pub profile: Smoothstep,
}

impl Plateau {
    pub fn new(left: f64, plateau_left: f64, plateau_right: f64, right: f64, profile: Smoothstep) -> Self {
        Plateau { left, plateau_left, plateau_right, right, profile }
    }

    pub fn is_ordered(&self) -> bool {
        self.left < self.plateau_left && self.plateau_left <= self.plateau_right && self.plateau_right < self.right
    }

    /// Jet of the bump at `x` (no periodization).
    pub fn jet(&self, x: f64) -> Jet2 {
        if x <= self.left || x >= self.right {
            return Jet2::default();
        }
        if x >= self.plateau_left && x <= self.plateau_right {
            return Jet2 { value: 1.0, d1: 0.0, d2: 0.0 };
        }
        if x < self.plateau_left {
            let w = self.plateau_left - self.left;
            let j = self.profile.jet((x - self.left) / w);
            Jet2 { value: j.value, d1: j.d1 / w, d2: j.d2 / (w * w) }
        } else {
            let w = self.right - self.plateau_right;
            let j = self.profile.jet((self.right - x) / w);
            Jet2 { value: j.value, d1: -j.d1 / w, d2: j.d2 / (w * w) }
        }
    }

    /// Upper bound on `|bump'|`.
    pub fn max_slope(&self) -> f64 {
        let m = self.profile.max_slope();
        (m / (self.plateau_left - self.left)).max(m / (self.right - self.plateau_right))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd(f: impl Fn(f64) -> f64, x: f64) -> f64 {
        let h = 1e-6;
        (f(x + h) - f(x - h)) / (2.0 * h)
    }

    #[test]
    fn standard_step_endpoints_and_symmetry() {
        assert_eq!(logistic_step(0.0, 1.0).value, 0.0);
        assert_eq!(logistic_step(1.0, 1.0).value, 1.0);
        assert!((logistic_step(0.5, 1.0).value - 0.5).abs() < 1e-15);
        assert!((logistic_step(0.5, 1.0).d1 - 2.0).abs() < 1e-12);
        for &u in &[0.1, 0.3, 0.77] {
            let a = logistic_step(u, 1.0).value;
            let b = logistic_step(1.0 - u, 1.0).value;
            assert!((a + b - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        for profile in [Smoothstep::Standard, Smoothstep::Gentle] {
            for i in 1..40 {
                let u = i as f64 / 40.0;
                let j = profile.jet(u);
                assert!((j.d1 - fd(|x| profile.value(x), u)).abs() < 1e-6, "{profile:?} d1 at {u}");
                assert!((j.d2 - fd(|x| profile.jet(x).d1, u)).abs() < 1e-5, "{profile:?} d2 at {u}");
            }
        }
    }

    #[test]
    fn slope_bounds_hold_on_fine_grid() {
        for profile in [Smoothstep::Standard, Smoothstep::Gentle] {
            let mut max = 0.0f64;
            for i in 0..=200_000 {
                let j = profile.jet(i as f64 / 200_000.0);
                assert!(j.d1 >= 0.0);
                max = max.max(j.d1);
            }
            assert!(max <= profile.max_slope(), "{profile:?}: {max}");
        }
    }

    #[test]
    fn plateau_is_flat_outside_support() {
        let p = Plateau::new(0.25, 0.4, 0.6, 0.75, Smoothstep::Gentle);
        assert_eq!(p.jet(0.1).value, 0.0);
        assert_eq!(p.jet(0.5).value, 1.0);
        assert!(p.jet(0.2505).value < 1e-10);
        assert!(p.jet(0.3).d1 > 0.0 && p.jet(0.7).d1 < 0.0);
    }
}
