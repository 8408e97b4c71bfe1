//! Primitive lifts. Each primitive maps `x ∈ [0, 1)` to its lift value and
//! derivative, and inverts the same way.

use serde::{Deserialize, Serialize};

use super::diffeo::{Diffeo, Lifted};
use super::frac;
use crate::error::{Error, Result};
use crate::smooth::{Plateau, Smoothstep};
use crate::solve::monotone_newton;

const NEWTON_ITER: usize = 100;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Primitive {
    MorseSmale(MorseSmale),
    BumpTranslation(BumpTranslation),
    Fourier(FourierLift),
    Knots(KnotLift),
    Encoded(EncodedSlots),
}

impl Primitive {
    pub(crate) fn forward(&self, x: f64) -> Result<(f64, f64)> {
        match self {
            Primitive::MorseSmale(m) => Ok(m.forward(x)?),
            Primitive::BumpTranslation(b) => Ok(b.forward(x)),
            Primitive::Fourier(f) => Ok(f.forward(x)),
            Primitive::Knots(k) => Ok(k.forward(x)),
            Primitive::Encoded(e) => e.apply(x, false),
        }
    }

    pub(crate) fn backward(&self, y: f64) -> Result<(f64, f64)> {
        match self {
            Primitive::MorseSmale(m) => Ok(m.backward(y)),
            Primitive::BumpTranslation(b) => b.backward(y),
            Primitive::Fourier(f) => f.backward(y),
            Primitive::Knots(k) => k.backward(y),
            Primitive::Encoded(e) => e.apply(y, true),
        }
    }
}

/// Circle map with a repelling fixed point at 1/2 and an attracting one at 0.
///
/// The lift is `1/2 + λ(x - 1/2)` on `(1/10, 9/10)`, `μx` on `[0, 1/100]` and
/// `1 + μ(x - 1)` on `[99/100, 1)`, with `μ = 1/λ`. On the gluing band the
/// *inverse* is the smoothstep blend of the two affine inverses; both inverses
/// are increasing and their gap has a fixed sign, so the blend is monotone
/// whatever the step profile.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MorseSmale {
    pub lambda: f64,
}

pub(crate) const INNER_EDGE: f64 = 0.01;
pub(crate) const AFFINE_EDGE: f64 = 0.1;

impl MorseSmale {
    pub fn mu(&self) -> f64 {
        1.0 / self.lambda
    }

    /// Image band `[μ/100, 1/2 - 2λ/5]` of the left gluing band.
    fn band(&self) -> (f64, f64) {
        (self.mu() * INNER_EDGE, 0.5 + self.lambda * (AFFINE_EDGE - 0.5))
    }

    /// Blended inverse on the left band: `(x, dx/dy)`.
    fn band_inverse(&self, y: f64) -> (f64, f64) {
        let (ya, yb) = self.band();
        let w = yb - ya;
        let s = Smoothstep::Standard.jet((y - ya) / w);
        let near = y * self.lambda; // inverse of μx
        let far = 0.5 + (y - 0.5) * self.mu(); // inverse of the central affine piece
        let x = (1.0 - s.value) * near + s.value * far;
        let dx = (1.0 - s.value) * self.lambda + s.value * self.mu() + s.d1 / w * (far - near);
        (x, dx)
    }

    /// Lift on `[0, 1/2]`.
    fn left_forward(&self, x: f64) -> Result<(f64, f64)> {
        if x <= INNER_EDGE {
            return Ok((self.mu() * x, self.mu()));
        }
        if x >= AFFINE_EDGE {
            return Ok((0.5 + self.lambda * (x - 0.5), self.lambda));
        }
        let (ya, yb) = self.band();
        let guess = ya + (x - INNER_EDGE) / (AFFINE_EDGE - INNER_EDGE) * (yb - ya);
        let y = monotone_newton(|y| Ok(self.band_inverse(y)), x, ya, yb, guess, NEWTON_ITER)?;
        let (_, dx) = self.band_inverse(y);
        Ok((y, 1.0 / dx))
    }

    fn left_backward(&self, y: f64) -> (f64, f64) {
        let (ya, yb) = self.band();
        if y <= ya {
            (y * self.lambda, self.lambda)
        } else if y >= yb {
            (0.5 + (y - 0.5) * self.mu(), self.mu())
        } else {
            self.band_inverse(y)
        }
    }

    pub(crate) fn forward(&self, x: f64) -> Result<(f64, f64)> {
        if x <= 0.5 {
            self.left_forward(x)
        } else {
            let (y, d) = self.left_forward(1.0 - x)?;
            Ok((1.0 - y, d))
        }
    }

    pub(crate) fn backward(&self, y: f64) -> (f64, f64) {
        if y <= 0.5 {
            self.left_backward(y)
        } else {
            let (x, d) = self.left_backward(1.0 - y);
            (1.0 - x, d)
        }
    }

    /// Checks the gluing is feasible and the lift has positive slope on a probe
    /// grid of the band.
    pub fn validate(&self) -> Result<()> {
        let (ya, yb) = self.band();
        if !(self.lambda > 1.0) || ya >= yb {
            return Err(Error::Construction(format!("infeasible slope lambda = {}", self.lambda)));
        }
        for i in 0..=2000 {
            let y = ya + (yb - ya) * i as f64 / 2000.0;
            let (_, dx) = self.band_inverse(y);
            if !(dx > 0.0) || !dx.is_finite() {
                return Err(Error::Construction(format!(
                    "non-positive derivative in gluing band at y = {y} for lambda = {}",
                    self.lambda
                )));
            }
        }
        Ok(())
    }
}

/// `x ↦ x + shift · ψ(x)` with `ψ` a plateau bump.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BumpTranslation {
    pub bump: Plateau,
    pub shift: f64,
}

impl BumpTranslation {
    pub fn new(bump: Plateau, shift: f64) -> Result<Self> {
        if !bump.is_ordered() || bump.left < 0.0 || bump.right > 1.0 {
            return Err(Error::Construction(format!("malformed bump {bump:?}")));
        }
        if shift.abs() * bump.max_slope() >= 1.0 {
            return Err(Error::Construction(format!(
                "bump translation by {shift} with slope bound {} is not monotone",
                bump.max_slope()
            )));
        }
        Ok(BumpTranslation { bump, shift })
    }

    pub(crate) fn forward(&self, x: f64) -> (f64, f64) {
        let j = self.bump.jet(x);
        (x + self.shift * j.value, 1.0 + self.shift * j.d1)
    }

    pub(crate) fn backward(&self, y: f64) -> Result<(f64, f64)> {
        if y <= self.bump.left.min(self.bump.left + self.shift) || y >= self.bump.right.max(self.bump.right + self.shift) {
            return Ok((y, 1.0));
        }
        let s = self.shift.abs();
        let x = monotone_newton(|x| Ok(self.forward(x)), y, y - s - 1e-12, y + s + 1e-12, y - self.shift, NEWTON_ITER)?;
        Ok((x, 1.0 / self.forward(x).1))
    }
}

/// Lift `x + c0 + Σ_k (a_k cos 2πkx + b_k sin 2πkx)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FourierLift {
    pub constant: f64,
    pub cos: Vec<f64>,
    pub sin: Vec<f64>,
}

impl FourierLift {
    pub fn new(constant: f64, cos: Vec<f64>, sin: Vec<f64>) -> Self {
        let mut f = FourierLift { constant, cos, sin };
        let n = f.cos.len().max(f.sin.len());
        f.cos.resize(n, 0.0);
        f.sin.resize(n, 0.0);
        f
    }

    pub fn modes(&self) -> usize {
        self.cos.len()
    }

    /// Bound on `|lift(x) - x - c0|`.
    pub fn amplitude(&self) -> f64 {
        self.cos.iter().chain(self.sin.iter()).map(|c| c.abs()).sum()
    }

    /// Bound on `|lift'(x) - 1|`.
    pub fn slope_amplitude(&self) -> f64 {
        let tau = std::f64::consts::TAU;
        self.cos
            .iter()
            .zip(&self.sin)
            .enumerate()
            .map(|(k, (a, b))| tau * (k + 1) as f64 * (a.abs() + b.abs()))
            .sum()
    }

    pub(crate) fn forward(&self, x: f64) -> (f64, f64) {
        let tau = std::f64::consts::TAU;
        let (s1, c1) = (tau * x).sin_cos();
        // cos/sin of kθ by the angle-addition recurrence
        let (mut ck, mut sk) = (c1, s1);
        let mut y = x + self.constant;
        let mut dy = 1.0;
        for (k, (a, b)) in self.cos.iter().zip(&self.sin).enumerate() {
            let kk = tau * (k + 1) as f64;
            y += a * ck + b * sk;
            dy += kk * (b * ck - a * sk);
            let next_c = ck * c1 - sk * s1;
            sk = sk * c1 + ck * s1;
            ck = next_c;
        }
        (y, dy)
    }

    pub(crate) fn backward(&self, y: f64) -> Result<(f64, f64)> {
        let amp = self.amplitude() + 1e-12;
        let base = y - self.constant;
        let x = monotone_newton(|x| Ok(self.forward(x)), y, base - amp, base + amp, base, NEWTON_ITER)?;
        // x may lie outside [0, 1); the caller works with lift values.
        Ok((x, 1.0 / self.forward(x).1))
    }
}

/// Lift given by cubic Hermite interpolation of knots `(θ_i, h_i, h'_i)` with
/// `θ` increasing in `[0, 1)`, extended by `h(θ + 1) = h(θ) + 1` and evaluated
/// at `x + phase`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KnotLift {
    pub phase: f64,
    pub knots: Vec<f64>,
    pub values: Vec<f64>,
    pub slopes: Vec<f64>,
}

impl KnotLift {
    /// Builds the lift, limiting slopes where the cubic on a cell would not be
    /// monotone. Returns the lift and the number of limited cells.
    pub fn new(knots: Vec<f64>, values: Vec<f64>, mut slopes: Vec<f64>) -> Result<(Self, usize)> {
        let n = knots.len();
        if n < 2 || values.len() != n || slopes.len() != n {
            return Err(Error::Construction("knot lift needs at least two matching knots".into()));
        }
        let mut limited = 0;
        for i in 0..n {
            let (t0, y0) = (knots[i], values[i]);
            let (t1, y1) = if i + 1 < n { (knots[i + 1], values[i + 1]) } else { (knots[0] + 1.0, values[0] + 1.0) };
            if !(t1 > t0) || !(y1 > y0) || !(slopes[i] > 0.0) {
                return Err(Error::Construction(format!("knots not strictly increasing near θ = {t0}")));
            }
            let secant = (y1 - y0) / (t1 - t0);
            let j = (i + 1) % n;
            let (a, b) = (slopes[i] / secant, slopes[j] / secant);
            let r = (a * a + b * b).sqrt();
            if r > 3.0 {
                slopes[i] *= 3.0 / r;
                slopes[j] *= 3.0 / r;
                limited += 1;
            }
        }
        Ok((KnotLift { phase: 0.0, knots, values, slopes }, limited))
    }

    pub fn len(&self) -> usize {
        self.knots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.knots.is_empty()
    }

    /// Knot `i` of the periodic extension, `i` in `-1..=n`.
    fn knot(&self, i: isize) -> (f64, f64, f64) {
        let n = self.knots.len() as isize;
        let (j, shift) = if i < 0 { (i + n, -1.0) } else if i >= n { (i - n, 1.0) } else { (i, 0.0) };
        let j = j as usize;
        (self.knots[j] + shift, self.values[j] + shift, self.slopes[j])
    }

    fn cell(&self, i: isize, s: f64) -> (f64, f64) {
        let (t0, y0, m0) = self.knot(i);
        let (t1, y1, m1) = self.knot(i + 1);
        let h = t1 - t0;
        let u = (s - t0) / h;
        let (u2, u3) = (u * u, u * u * u);
        let value = (2.0 * u3 - 3.0 * u2 + 1.0) * y0
            + (u3 - 2.0 * u2 + u) * h * m0
            + (-2.0 * u3 + 3.0 * u2) * y1
            + (u3 - u2) * h * m1;
        let slope = (6.0 * u2 - 6.0 * u) * (y0 - y1) / h + (3.0 * u2 - 4.0 * u + 1.0) * m0 + (3.0 * u2 - 2.0 * u) * m1;
        (value, slope)
    }

    /// Value and slope of the interpolant at `s ∈ [0, 1)`.
    fn unit(&self, s: f64) -> (f64, f64) {
        let i = self.knots.partition_point(|&t| t <= s) as isize - 1;
        self.cell(i, s)
    }

    pub(crate) fn forward(&self, x: f64) -> (f64, f64) {
        let u = x + self.phase;
        let k = u.floor();
        let (y, dy) = self.unit(u - k);
        (y + k, dy)
    }

    pub(crate) fn backward(&self, y: f64) -> Result<(f64, f64)> {
        let base = self.unit(0.0).0;
        let k = (y - base).floor();
        let r = y - k;
        // Cell whose value range contains r, in the periodic extension.
        let i = self.values.partition_point(|&v| v <= r) as isize - 1;
        let (t0, _, _) = self.knot(i);
        let (t1, _, _) = self.knot(i + 1);
        let s = monotone_newton(|s| Ok(self.cell(i, s)), r, t0, t1, 0.5 * (t0 + t1), NEWTON_ITER)?;
        let dy = self.cell(i, s).1;
        Ok((s + k - self.phase, 1.0 / dy))
    }
}

/// One slot of an encoded generator: inside the window `center ± 3·scale/8`
/// the generator acts as the affine conjugate `y ↦ center + scale(f(u) - 1/2)`
/// with `u = 1/2 + (y - center)/scale`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EncodedSlot {
    pub index: usize,
    pub center: f64,
    pub scale: f64,
    pub map: Diffeo,
}

impl EncodedSlot {
    pub fn window(&self) -> (f64, f64) {
        (self.center - 0.375 * self.scale, self.center + 0.375 * self.scale)
    }
}

/// Identity outside the union of slot windows.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EncodedSlots {
    pub slots: Vec<EncodedSlot>,
}

impl EncodedSlots {
    fn find(&self, y: f64) -> Option<&EncodedSlot> {
        self.slots.iter().find(|s| {
            let (lo, hi) = s.window();
            y > lo && y < hi
        })
    }

    pub(crate) fn apply(&self, y: f64, inverse: bool) -> Result<(f64, f64)> {
        let Some(slot) = self.find(y) else {
            return Ok((y, 1.0));
        };
        let u = 0.5 + (y - slot.center) / slot.scale;
        let mut p = Lifted::at(frac(u));
        let turns = u.floor();
        slot.map.apply(&mut p, inverse)?;
        let fu = p.value() + turns;
        Ok((slot.center + slot.scale * (fu - 0.5), p.deriv))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f1() -> MorseSmale {
        MorseSmale { lambda: 9.0 / 8.0 }
    }

    #[test]
    fn morse_smale_affine_zones() {
        let m = f1();
        assert_eq!(m.forward(0.5).unwrap().0, 0.5);
        assert!((m.forward(0.6).unwrap().0 - 0.6125).abs() < 1e-15);
        let (y, d) = m.forward(0.005).unwrap();
        assert!((y - 0.005 * 8.0 / 9.0).abs() < 1e-16);
        assert!((d - 8.0 / 9.0).abs() < 1e-15);
        let (y, _) = m.forward(0.995).unwrap();
        assert!((y - (1.0 - 0.005 * 8.0 / 9.0)).abs() < 1e-15);
    }

    #[test]
    fn morse_smale_band_is_monotone_and_invertible() {
        let m = f1();
        m.validate().unwrap();
        let mut prev = -1.0;
        for i in 0..=4000 {
            let x = i as f64 / 4000.0;
            let (y, d) = m.forward(x).unwrap();
            assert!(d > 0.0 && y > prev);
            prev = y;
            let (back, db) = m.backward(y);
            assert!((back - x).abs() < 1e-14, "x = {x}");
            assert!((db * d - 1.0).abs() < 1e-10);
            if x > 0.0 && x < 0.5 {
                assert!(y < x);
            }
            if x > 0.5 && x < 1.0 {
                assert!(y > x);
            }
        }
    }

    #[test]
    fn morse_smale_rejects_steep_slope() {
        assert!(MorseSmale { lambda: 1.25 }.validate().is_err());
        assert!(MorseSmale { lambda: 1.2 }.validate().is_ok());
    }

    #[test]
    fn fourier_inverse_round_trip() {
        let f = FourierLift::new(0.1, vec![0.01, -0.002], vec![0.003, 0.001]);
        for i in 0..50 {
            let x = i as f64 / 50.0;
            let (y, _) = f.forward(x);
            let (xb, _) = f.backward(frac(y)).unwrap();
            assert!((xb + y.floor() - x).abs() < 1e-14);
        }
    }
}
