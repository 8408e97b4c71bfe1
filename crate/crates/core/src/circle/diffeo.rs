use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::primitive::Primitive;
use super::CirclePoint;
use crate::error::{Error, Result};
use crate::flows::{flow_step, FieldId};
use crate::solve::monotone_newton;

/// A point on the universal cover, split into whole turns and a fractional
/// part, together with the accumulated derivative of the maps applied so far.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Lifted {
    pub turns: i64,
    pub frac: f64,
    pub deriv: f64,
}

impl Lifted {
    pub fn at(x: f64) -> Self {
        let k = x.floor();
        let mut p = Lifted { turns: k as i64, frac: 0.0, deriv: 1.0 };
        p.frac = x - k;
        if p.frac >= 1.0 {
            p.frac -= 1.0;
            p.turns += 1;
        }
        p
    }

    /// Replaces the fractional part by the lift value `y` of a map evaluated at
    /// it, with slope `dy`.
    #[inline]
    pub fn push(&mut self, y: f64, dy: f64) {
        let k = y.floor();
        let mut f = y - k;
        let mut k = k as i64;
        if f >= 1.0 {
            f -= 1.0;
            k += 1;
        }
        self.turns += k;
        self.frac = f;
        self.deriv *= dy;
    }

    pub fn value(&self) -> f64 {
        self.turns as f64 + self.frac
    }
}

/// Expression node. Serialized as a tagged JSON tree.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum Expr {
    Identity,
    Rotation { alpha: f64 },
    Primitive { map: Primitive },
    Flow { field: FieldId, time: f64 },
    /// `outer ∘ inner`
    Compose { outer: Diffeo, inner: Diffeo },
    Inverse { of: Diffeo },
    Power { base: Diffeo, exponent: i64 },
}

/// Orientation-preserving circle diffeomorphism given as an expression.
///
/// Cloning is cheap; subexpressions are shared.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Diffeo(Arc<Expr>);

impl fmt::Debug for Diffeo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.expr() {
            Expr::Identity => write!(f, "id"),
            Expr::Rotation { alpha } => write!(f, "R({alpha})"),
            Expr::Primitive { map } => match map {
                Primitive::MorseSmale(m) => write!(f, "MorseSmale({})", m.lambda),
                Primitive::BumpTranslation(b) => write!(f, "Bump({})", b.shift),
                Primitive::Fourier(c) => write!(f, "Fourier[{}]", c.modes()),
                Primitive::Knots(k) => write!(f, "Knots[{}]", k.len()),
                Primitive::Encoded(e) => write!(f, "Encoded[{}]", e.slots.len()),
            },
            Expr::Flow { field, time } => write!(f, "Flow({field:?}, {time})"),
            Expr::Compose { outer, inner } => write!(f, "({outer:?} ∘ {inner:?})"),
            Expr::Inverse { of } => write!(f, "{of:?}⁻¹"),
            Expr::Power { base, exponent } => write!(f, "{base:?}^{exponent}"),
        }
    }
}

impl Diffeo {
    pub fn new(expr: Expr) -> Self {
        Diffeo(Arc::new(expr))
    }

    pub fn expr(&self) -> &Expr {
        &self.0
    }

    pub fn identity() -> Self {
        Diffeo::new(Expr::Identity)
    }

    pub fn rotation(alpha: f64) -> Self {
        Diffeo::new(Expr::Rotation { alpha })
    }

    pub fn primitive(map: Primitive) -> Self {
        Diffeo::new(Expr::Primitive { map })
    }

    pub fn flow(field: FieldId, time: f64) -> Self {
        Diffeo::new(Expr::Flow { field, time })
    }

    /// `self ∘ inner`: apply `inner` first.
    pub fn after(&self, inner: &Diffeo) -> Self {
        Diffeo::new(Expr::Compose { outer: self.clone(), inner: inner.clone() })
    }

    /// Composition of `maps` in written order: `maps[0] ∘ maps[1] ∘ ...`.
    pub fn chain(maps: &[Diffeo]) -> Self {
        let mut iter = maps.iter().rev();
        let Some(first) = iter.next() else {
            return Diffeo::identity();
        };
        iter.fold(first.clone(), |acc, m| m.after(&acc))
    }

    pub fn inverse(&self) -> Self {
        match self.expr() {
            Expr::Inverse { of } => of.clone(),
            Expr::Identity => self.clone(),
            _ => Diffeo::new(Expr::Inverse { of: self.clone() }),
        }
    }

    pub fn pow(&self, exponent: i64) -> Self {
        match exponent {
            0 => Diffeo::identity(),
            1 => self.clone(),
            _ => Diffeo::new(Expr::Power { base: self.clone(), exponent }),
        }
    }

    /// `self ∘ other ∘ self⁻¹ ∘ other⁻¹`
    pub fn commutator(&self, other: &Diffeo) -> Self {
        Diffeo::chain(&[self.clone(), other.clone(), self.inverse(), other.inverse()])
    }

    /// `by ∘ self ∘ by⁻¹`
    pub fn conjugate_by(&self, by: &Diffeo) -> Self {
        Diffeo::chain(&[by.clone(), self.clone(), by.inverse()])
    }

    pub fn is_identity(&self) -> bool {
        matches!(self.expr(), Expr::Identity)
    }

    pub(crate) fn apply(&self, p: &mut Lifted, inverse: bool) -> Result<()> {
        match self.expr() {
            Expr::Identity => Ok(()),
            Expr::Rotation { alpha } => {
                let a = if inverse { -alpha } else { *alpha };
                let whole = a.floor();
                p.turns += whole as i64;
                p.push(p.frac + (a - whole), 1.0);
                Ok(())
            }
            Expr::Primitive { map } => {
                let (y, dy) = if inverse { map.backward(p.frac)? } else { map.forward(p.frac)? };
                p.push(y, dy);
                Ok(())
            }
            Expr::Flow { field, time } => {
                let t = if inverse { -time } else { *time };
                let (y, dy) = flow_step(*field, p.frac, t)?;
                p.push(y, dy);
                Ok(())
            }
            Expr::Compose { outer, inner } => {
                if inverse {
                    outer.apply(p, true)?;
                    inner.apply(p, true)
                } else {
                    inner.apply(p, false)?;
                    outer.apply(p, false)
                }
            }
            Expr::Inverse { of } => of.apply(p, !inverse),
            Expr::Power { base, exponent } => {
                let inv = inverse ^ (*exponent < 0);
                for _ in 0..exponent.unsigned_abs() {
                    base.apply(p, inv)?;
                }
                Ok(())
            }
        }
    }

    /// Lift value and derivative at `x`; `x` may be any real.
    pub fn lift_jet(&self, x: f64) -> Result<(f64, f64)> {
        let mut p = Lifted::at(x);
        self.apply(&mut p, false)?;
        Ok((p.value(), p.deriv))
    }

    /// Lift value at `x`.
    pub fn lift(&self, x: f64) -> Result<f64> {
        Ok(self.lift_jet(x)?.0)
    }

    /// Lift displacement `F(x) - x`, computed from turns and fractional part
    /// separately so no precision is lost to large intermediate lifts.
    pub fn displacement(&self, x: f64) -> Result<f64> {
        Ok(self.displacement_jet(x)?.0)
    }

    /// Displacement and derivative at `x`.
    pub fn displacement_jet(&self, x: f64) -> Result<(f64, f64)> {
        let mut p = Lifted::at(x);
        let start = p;
        self.apply(&mut p, false)?;
        Ok(((p.turns - start.turns) as f64 + (p.frac - start.frac), p.deriv))
    }

    /// Pointwise value on the circle.
    pub fn eval(&self, x: impl Into<CirclePoint>) -> Result<CirclePoint> {
        let mut p = Lifted::at(x.into().value());
        self.apply(&mut p, false)?;
        Ok(CirclePoint::new(p.frac))
    }

    /// Evaluates the structural inverse (inverse nodes all the way down).
    pub fn eval_structural_inverse(&self, y: impl Into<CirclePoint>) -> Result<CirclePoint> {
        let mut p = Lifted::at(y.into().value());
        self.apply(&mut p, true)?;
        Ok(CirclePoint::new(p.frac))
    }

    /// Preimage of `y` found by bracketing and safeguarded Newton on the lift.
    pub fn eval_inverse(&self, y: impl Into<CirclePoint>) -> Result<CirclePoint> {
        let y = y.into().value();
        // Start from the preimage guess y - d(y) and widen by whole turns.
        let d0 = self.displacement(y)?;
        let mut lo = y - d0 - 0.5;
        let mut hi = y - d0 + 0.5;
        let mut grow = 0;
        while self.lift(lo)? > y {
            lo -= 1.0;
            grow += 1;
            if grow > 8 {
                return Err(Error::numerical("could not bracket preimage", lo, hi));
            }
        }
        while self.lift(hi)? < y {
            hi += 1.0;
            grow += 1;
            if grow > 16 {
                return Err(Error::numerical("could not bracket preimage", lo, hi));
            }
        }
        let x = monotone_newton(|x| self.lift_jet(x), y, lo, hi, y - d0, 200)?;
        Ok(CirclePoint::new(x))
    }

    /// Exact chain-rule derivative; errors when it is not strictly positive.
    pub fn derivative(&self, x: impl Into<CirclePoint>) -> Result<f64> {
        let x = x.into().value();
        let (_, d) = self.lift_jet(x)?;
        if !(d > 0.0) || !d.is_finite() {
            return Err(Error::InvalidDiffeo(format!("derivative {d} at x = {x}")));
        }
        Ok(d)
    }

    /// Checks positivity of the derivative on `n` evenly spaced points.
    pub fn validate(&self, n: usize) -> Result<()> {
        for i in 0..n {
            self.derivative(i as f64 / n as f64)?;
        }
        Ok(())
    }

    /// Number of nodes in the expression tree (shared nodes counted each time).
    pub fn node_count(&self) -> usize {
        match self.expr() {
            Expr::Compose { outer, inner } => 1 + outer.node_count() + inner.node_count(),
            Expr::Inverse { of } => 1 + of.node_count(),
            Expr::Power { base, .. } => 1 + base.node_count(),
            _ => 1,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("line {} column {}: {e}", e.line(), e.column())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rotations_compose_exactly() {
        let r = Diffeo::rotation(0.5);
        assert_eq!(r.eval(0.25).unwrap().value(), 0.75);
        let q = Diffeo::rotation(0.25).after(&Diffeo::rotation(0.25));
        assert!((q.eval(0.9).unwrap().value() - 0.4).abs() < 1e-15);
        assert!((Diffeo::rotation(0.3).eval_inverse(0.0).unwrap().value() - 0.7).abs() < 1e-15);
    }

    #[test]
    fn powers_and_inverses() {
        let r = Diffeo::rotation(0.1);
        assert!(r.pow(0).is_identity());
        let p = r.pow(-3);
        assert!((p.eval(0.0).unwrap().value() - 0.7).abs() < 1e-15);
        assert!((p.inverse().eval(0.0).unwrap().value() - 0.3).abs() < 1e-15);
        assert!((r.displacement(0.95).unwrap() - 0.1).abs() < 1e-15);
    }

    #[test]
    fn json_round_trip() {
        let f = Diffeo::rotation(0.2).after(&Diffeo::rotation(0.1).pow(3).inverse());
        let back = Diffeo::from_json(&f.to_json().unwrap()).unwrap();
        assert_eq!(f, back);
        assert!(Diffeo::from_json("{\"node\": \"flow\", \"field\": \"x\", \"time\": 1}").is_err());
    }
}
