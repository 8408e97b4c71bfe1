//! Orientation-preserving circle diffeomorphisms on `ℝ/ℤ`.
//!
//! Maps are stored as expression trees ([`Diffeo`]) over a small set of
//! primitives and evaluated pointwise on lifts, so that words with many
//! thousands of letters never pass through an interpolation table.

mod diffeo;
mod metric;
mod primitive;

pub use diffeo::{Diffeo, Expr};
pub use metric::{c0_distance, c1_distance, distance, order_norms, sample, support, MetricConfig, Sample};
pub use primitive::{BumpTranslation, EncodedSlot, EncodedSlots, FourierLift, KnotLift, MorseSmale, Primitive};

use serde::{Deserialize, Serialize};

/// Fractional part in `[0, 1)`.
#[inline]
pub fn frac(x: f64) -> f64 {
    let f = x - x.floor();
    if f >= 1.0 {
        0.0
    } else {
        f
    }
}

/// Signed representative of `x mod 1` in `[-1/2, 1/2)`.
#[inline]
pub fn centered(x: f64) -> f64 {
    let r = x - x.round();
    if r >= 0.5 {
        r - 1.0
    } else {
        r
    }
}

/// Distance on `ℝ/ℤ`.
#[inline]
pub fn circle_dist(a: f64, b: f64) -> f64 {
    centered(a - b).abs()
}

/// A point of `ℝ/ℤ`, canonically reduced to `[0, 1)`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CirclePoint(f64);

impl CirclePoint {
    pub fn new(x: f64) -> Self {
        CirclePoint(frac(x))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl From<f64> for CirclePoint {
    fn from(x: f64) -> Self {
        CirclePoint::new(x)
    }
}

/// An arc `[left, right]` of the circle with `0 <= left < right <= 1`.
///
/// Arcs that cross 0 are stored as two pieces by [`Interval::arc`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub left: f64,
    pub right: f64,
    #[serde(default)]
    pub open_left: bool,
    #[serde(default)]
    pub open_right: bool,
}

impl Interval {
    pub fn closed(left: f64, right: f64) -> Self {
        Interval { left, right, open_left: false, open_right: false }
    }

    pub fn open(left: f64, right: f64) -> Self {
        Interval { left, right, open_left: true, open_right: true }
    }

    /// The arc from `left` to `right` going counter-clockwise, split at 0 when
    /// needed. `right - left` may exceed the unit only up to a full turn.
    pub fn arc(left: f64, right: f64) -> Vec<Interval> {
        let len = right - left;
        if len >= 1.0 {
            return vec![Interval::closed(0.0, 1.0)];
        }
        let l = frac(left);
        let r = l + len;
        if r <= 1.0 {
            vec![Interval::closed(l, r)]
        } else {
            vec![Interval::closed(0.0, r - 1.0), Interval::closed(l, 1.0)]
        }
    }

    pub fn length(&self) -> f64 {
        self.right - self.left
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.left + self.right)
    }

    pub fn contains(&self, x: f64) -> bool {
        let above = if self.open_left { x > self.left } else { x >= self.left };
        let below = if self.open_right { x < self.right } else { x <= self.right };
        above && below
    }

    /// `self ⊆ other`, endpoints compared with slack `tol`.
    pub fn within(&self, other: &Interval, tol: f64) -> bool {
        self.left >= other.left - tol && self.right <= other.right + tol
    }

    pub fn intersects(&self, other: &Interval) -> bool {
        self.left < other.right && other.left < self.right
    }

    pub fn widen(&self, delta: f64) -> Interval {
        Interval { left: self.left - delta, right: self.right + delta, ..*self }
    }

    /// Evenly spaced probe points strictly inside the interval.
    pub fn probes(&self, count: usize) -> Vec<f64> {
        (0..count)
            .map(|i| self.left + (i as f64 + 0.5) / count as f64 * self.length())
            .collect()
    }
}

/// `true` when every arc in `arcs` lies inside the union `cover`, up to `tol`.
pub fn covered_by(arcs: &[Interval], cover: &[Interval], tol: f64) -> bool {
    arcs.iter().all(|a| cover.iter().any(|c| a.within(c, tol)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reduction_is_canonical() {
        assert_eq!(CirclePoint::new(1.25).value(), 0.25);
        assert_eq!(CirclePoint::new(-0.25).value(), 0.75);
        assert_eq!(frac(-1e-20), 0.0);
        assert!((centered(0.9) + 0.1).abs() < 1e-15);
        assert!((circle_dist(0.95, 0.05) - 0.1).abs() < 1e-15);
    }

    #[test]
    fn arcs_crossing_zero_split() {
        let pieces = Interval::arc(0.7, 1.3);
        assert_eq!(pieces.len(), 2);
        assert!((pieces[0].right - 0.3).abs() < 1e-15);
        assert!((pieces[1].left - 0.7).abs() < 1e-15);
        let one = Interval::arc(0.2, 0.8);
        assert_eq!(one, vec![Interval::closed(0.2, 0.8)]);
    }

    #[test]
    fn open_endpoints_respected() {
        let i = Interval::open(0.25, 0.75);
        assert!(!i.contains(0.25) && i.contains(0.5));
        assert!(Interval::closed(0.25, 0.75).contains(0.25));
    }
}
