//! Numerical linearization of circle maps with Diophantine rotation number.
//!
//! The conjugacy is represented by its inverse `h(θ) = θ + η(θ)`, a
//! trigonometric polynomial satisfying `a(h(θ)) = h(θ + ρ)`. A first guess for
//! `η` comes from weighted Birkhoff sums along one orbit; Newton steps then
//! solve the linearized equation `W(θ+ρ) - W(θ) + δρ = e(θ)/h'(θ+ρ)` by
//! dividing Fourier coefficients and update `η ← η + h'W`.

use std::f64::consts::TAU;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use super::cf::continued_fraction;
use super::number::{orbit_displacements, rotation_number, weighted_average};
use crate::circle::{centered, frac, Diffeo, FourierLift, KnotLift, Primitive};
use crate::error::{Error, Result};
use crate::solve::monotone_newton;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearizeParams {
    /// Orbit length for the rotation number and the seed.
    pub budget: usize,
    /// Number of Fourier modes kept in `η`.
    pub modes: usize,
    /// Collocation grid size (a power of two, at least `4 * modes`).
    pub grid: usize,
    pub max_iter: usize,
    /// Newton stops once the functional residual drops below this.
    pub newton_tol: f64,
    /// Largest accepted partial quotient among the first 15.
    pub quality_cap: u64,
    /// Largest accepted C^0 distance between `a` and its mean rotation.
    pub max_offset: f64,
    /// Accepted final residual of `c a c⁻¹` against the rotation.
    pub residual_tol: f64,
    pub residual_grid: usize,
    /// Starting point of the seeding orbit.
    pub orbit_start: f64,
    pub method: Method,
    /// Orbit length for the knot representation.
    pub knots: usize,
}

/// Representation of the conjugacy.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Fourier–Newton when the map is within `max_offset` of its mean
    /// rotation, knots otherwise or when Newton fails.
    #[default]
    Auto,
    Fourier,
    /// Cubic Hermite knots along one orbit.
    Orbit,
}

impl Default for LinearizeParams {
    fn default() -> Self {
        LinearizeParams {
            budget: 8192,
            modes: 256,
            grid: 1024,
            max_iter: 30,
            newton_tol: 1e-13,
            quality_cap: 25,
            max_offset: 0.2,
            residual_tol: 1e-6,
            residual_grid: 1024,
            orbit_start: 0.0,
            method: Method::Auto,
            knots: 24576,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LinearizationResult {
    /// Conjugacy with `c(0) = 0` and `c a c⁻¹ ≈ Rotation(rho)`.
    pub c: Diffeo,
    pub rho: f64,
    pub residual: f64,
    pub iterations: usize,
    pub residual_history: Vec<f64>,
    pub cf_quality: u64,
    pub method: Method,
}

impl LinearizationResult {
    /// `c⁻¹` as a primitive lift.
    pub fn inverse_lift(&self) -> Option<&Primitive> {
        use crate::circle::Expr;
        let Expr::Inverse { of } = self.c.expr() else { return None };
        match of.expr() {
            Expr::Primitive { map } => Some(map),
            _ => None,
        }
    }
}

/// Real trigonometric polynomial stored by its non-negative complex
/// coefficients `c_0, ..., c_K` (`c_{-k} = conj c_k`).
struct Trig {
    coef: Vec<Complex64>,
}

struct Grid {
    m: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl Grid {
    fn new(m: usize) -> Self {
        let mut planner = FftPlanner::new();
        Grid { m, fwd: planner.plan_fft_forward(m), inv: planner.plan_fft_inverse(m) }
    }

    /// Values on `θ_i = i/m` of the polynomial with coefficients `coef`.
    fn synth(&self, coef: &[Complex64]) -> Vec<f64> {
        let mut buf = vec![Complex64::new(0.0, 0.0); self.m];
        buf[0] = Complex64::new(coef[0].re, 0.0);
        for (k, c) in coef.iter().enumerate().skip(1) {
            buf[k] = *c;
            buf[self.m - k] = c.conj();
        }
        self.inv.process(&mut buf);
        buf.into_iter().map(|z| z.re).collect()
    }

    /// Coefficients `0..=modes` of grid data.
    fn analyse(&self, values: &[f64], modes: usize) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.fwd.process(&mut buf);
        let scale = 1.0 / self.m as f64;
        buf.truncate(modes + 1);
        buf.iter_mut().for_each(|z| *z *= scale);
        buf
    }
}

impl Trig {
    fn derivative(&self) -> Vec<Complex64> {
        self.coef.iter().enumerate().map(|(k, c)| c * Complex64::new(0.0, TAU * k as f64)).collect()
    }

    fn shifted(coef: &[Complex64], by: f64) -> Vec<Complex64> {
        coef.iter().enumerate().map(|(k, c)| c * Complex64::from_polar(1.0, TAU * k as f64 * by)).collect()
    }

    fn to_lift(&self) -> FourierLift {
        let cos = self.coef.iter().skip(1).map(|c| 2.0 * c.re).collect();
        let sin = self.coef.iter().skip(1).map(|c| -2.0 * c.im).collect();
        FourierLift::new(self.coef[0].re, cos, sin)
    }
}

/// Weighted Birkhoff estimate of the Fourier coefficients of `η` from the
/// orbit `X_j` of `x0`, using `h(jρ) = X_j`.
fn seed(a: &Diffeo, rho: f64, x0: f64, n: usize, modes: usize) -> Result<Vec<Complex64>> {
    let disp = orbit_displacements(a, x0, n)?;
    let mut coef = vec![Complex64::new(0.0, 0.0); modes + 1];
    let mut eta = x0;
    let mut total = 0.0;
    for (j, d) in disp.iter().enumerate() {
        let s = (j as f64 + 0.5) / n as f64;
        let w = (-1.0 / (s * (1.0 - s))).exp();
        if w > 0.0 {
            let theta = frac(j as f64 * rho);
            let step = Complex64::from_polar(1.0, -TAU * theta);
            let mut z = Complex64::new(w * eta, 0.0);
            for c in coef.iter_mut() {
                *c += z;
                z *= step;
            }
            total += w;
        }
        eta += d - rho;
    }
    coef.iter_mut().for_each(|c| *c /= total);
    Ok(coef)
}

/// Functional residual `e(θ_i) = a(h(θ_i)) - h(θ_i + ρ)` on the grid.
fn defect(a: &Diffeo, grid: &Grid, eta: &Trig, rho: f64) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    let m = grid.m;
    let values = grid.synth(&eta.coef);
    let shifted = grid.synth(&Trig::shifted(&eta.coef, rho));
    let dcoef = eta.derivative();
    let slope = grid.synth(&dcoef);
    let slope_shifted = grid.synth(&Trig::shifted(&dcoef, rho));
    let mut e = Vec::with_capacity(m);
    for i in 0..m {
        let theta = i as f64 / m as f64;
        let hx = theta + values[i];
        e.push(values[i] + a.displacement(frac(hx))? - rho - shifted[i]);
    }
    let h1: Vec<f64> = slope.iter().map(|s| 1.0 + s).collect();
    let h1s: Vec<f64> = slope_shifted.iter().map(|s| 1.0 + s).collect();
    if h1.iter().any(|&d| d <= 0.0) {
        return Err(Error::InvalidDiffeo("conjugacy iterate lost monotonicity".into()));
    }
    Ok((e, h1, h1s))
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Finds a conjugacy `c` with `c(0) = 0` and `c a c⁻¹` a rotation.
pub fn linearize(a: &Diffeo, p: &LinearizeParams) -> Result<LinearizationResult> {
    // A short orbit decides between the two methods; each method then
    // settles the rotation number at its own accuracy.
    let rough = rotation_number(a, p.budget.min(ROUGH_BUDGET))?.translation;
    let offset = (0..p.residual_grid)
        .map(|i| a.displacement(i as f64 / p.residual_grid as f64).map(|d| (d - rough).abs()))
        .try_fold(0.0f64, |m, d| d.map(|d| m.max(d)))?;
    let near = offset <= p.max_offset;
    if p.method == Method::Fourier && !near {
        return Err(Error::Domain(format!("map is {offset:.3} from its mean rotation (limit {})", p.max_offset)));
    }
    let fourier = |a: &Diffeo| -> Result<(Stage, u64)> {
        let rho = rotation_number(a, p.budget)?.translation;
        let quality = diophantine_quality(rho, p.quality_cap)?;
        Ok((fourier_newton(a, rho, p)?, quality))
    };
    let orbit = |a: &Diffeo| -> Result<(Diffeo, f64, usize, Vec<f64>, Method, u64)> {
        let (c, rho, it, h, m) = orbit_conjugacy(a, p)?;
        let quality = diophantine_quality(rho, p.quality_cap)?;
        Ok((c, rho, it, h, m, quality))
    };
    let (c, rho, iterations, mut history, method, quality) = match p.method {
        Method::Fourier => {
            let ((c, r, it, h), q) = fourier(a)?;
            (c, r, it, h, Method::Fourier, q)
        }
        Method::Auto if near => match fourier(a) {
            Ok(((c, r, it, h), q)) => (c, r, it, h, Method::Fourier, q),
            Err(e @ Error::NotDiophantine { .. }) => return Err(e),
            Err(_) => orbit(a)?,
        },
        _ => orbit(a)?,
    };
    let residual = conjugation_residual(a, &c, rho, p.residual_grid)?;
    if !(residual < p.residual_tol) {
        history.push(residual);
        return Err(Error::NonConvergence { history });
    }
    Ok(LinearizationResult { c, rho, residual, iterations, residual_history: history, cf_quality: quality, method })
}

const ROUGH_BUDGET: usize = 512;

/// Largest of the first 15 partial quotients of `rho`, rejected above `cap`.
fn diophantine_quality(rho: f64, cap: u64) -> Result<u64> {
    let cf = continued_fraction(frac(rho), 15);
    let quality = if cf.terminated { u64::MAX } else { cf.quality };
    if quality > cap {
        return Err(Error::NotDiophantine { quality, cap });
    }
    Ok(quality)
}

type Stage = (Diffeo, f64, usize, Vec<f64>);

/// Orbit seed followed by Fourier–Newton steps.
fn fourier_newton(a: &Diffeo, mut rho: f64, p: &LinearizeParams) -> Result<Stage> {
    let m = p.grid.next_power_of_two().max(4 * p.modes);
    let grid = Grid::new(m);
    let mut eta = Trig { coef: seed(a, rho, p.orbit_start, p.budget, p.modes)? };

    let mut history = Vec::new();
    let mut iterations = 0;
    loop {
        let (e, h1, h1s) = defect(a, &grid, &eta, rho)?;
        let r = max_abs(&e);
        if let Some(&prev) = history.last() {
            if r > 0.5 * prev {
                // No halving: keep the previous iterate.
                break;
            }
        }
        history.push(r);
        if r < p.newton_tol || iterations >= p.max_iter {
            break;
        }
        let g: Vec<f64> = e.iter().zip(&h1s).map(|(e, d)| e / d).collect();
        let gh = grid.analyse(&g, p.modes);
        let mut wc = vec![Complex64::new(0.0, 0.0); p.modes + 1];
        for k in 1..=p.modes {
            let div = Complex64::from_polar(1.0, TAU * k as f64 * rho) - 1.0;
            wc[k] = gh[k] / div;
        }
        let w = grid.synth(&wc);
        let delta: Vec<f64> = w.iter().zip(&h1).map(|(w, d)| w * d).collect();
        let dc = grid.analyse(&delta, p.modes);
        let candidate = Trig { coef: eta.coef.iter().zip(&dc).map(|(a, b)| a + b).collect() };
        let next_rho = rho + gh[0].re;
        // Reject a step that breaks monotonicity instead of failing outright.
        match defect(a, &grid, &candidate, next_rho) {
            Ok(_) => {
                eta = candidate;
                rho = next_rho;
                iterations += 1;
            }
            Err(_) => break,
        }
    }
    let lift = normalized(&eta)?;
    let c = Diffeo::primitive(Primitive::Fourier(lift)).inverse();
    Ok((c, rho, iterations, history))
}

/// Conjugacy read off one long orbit: `h(jρ) = X_j` exactly, with slopes
/// `h'(θ_{j+1}) = a'(X_j) h'(θ_j)` scaled so that `h'` has mean 1, joined by
/// cubic Hermite cells.
fn orbit_conjugacy(a: &Diffeo, p: &LinearizeParams) -> Result<(Diffeo, f64, usize, Vec<f64>, Method)> {
    let n = p.knots.max(16);
    let x0 = p.orbit_start;
    let mut disp = Vec::with_capacity(n);
    let mut log_slope = Vec::with_capacity(n);
    let mut x = x0;
    let mut acc = 0.0;
    for _ in 0..n {
        let (d, dd) = a.displacement_jet(x)?;
        disp.push(d);
        log_slope.push(acc);
        acc += dd.ln();
        x = frac(x + d);
    }
    let rho = weighted_average(&disp);
    let shift = log_slope.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let rel: Vec<f64> = log_slope.iter().map(|l| (l - shift).exp()).collect();
    let scale = 1.0 / weighted_average(&rel);
    let mut pts: Vec<(f64, f64, f64)> = Vec::with_capacity(n);
    let mut eta = x0;
    for j in 0..n {
        let theta = frac(j as f64 * rho);
        pts.push((theta, theta + eta, rel[j] * scale));
        eta += disp[j] - rho;
    }
    pts.sort_by(|u, v| u.0.total_cmp(&v.0));
    pts.dedup_by(|u, v| u.0 == v.0);
    // Where the conjugacy is nearly flat, neighbouring orbit points can
    // coincide to rounding; such knots carry no information and are dropped.
    let before = pts.len();
    let mut kept: Vec<(f64, f64, f64)> = Vec::with_capacity(before);
    for q in pts {
        if q.2 > 0.0 && kept.last().map_or(true, |k| q.1 > k.1) {
            kept.push(q);
        }
    }
    while kept.len() > 1 && kept[kept.len() - 1].1 >= kept[0].1 + 1.0 {
        kept.pop();
    }
    if kept.len() < before - before / 100 {
        return Err(Error::Construction(format!(
            "orbit knots out of order: {} of {before} dropped",
            before - kept.len()
        )));
    }
    let pts = kept;
    let knots = pts.iter().map(|q| q.0).collect();
    let values = pts.iter().map(|q| q.1).collect();
    let slopes = pts.iter().map(|q| q.2).collect();
    let (mut lift, limited) = KnotLift::new(knots, values, slopes)?;
    if x0 != 0.0 {
        // Parameter shift so that h(0) = 0.
        let probe = lift.clone();
        let (star, _) = probe.backward(0.0)?;
        lift.phase = star;
    }
    let c = Diffeo::primitive(Primitive::Knots(lift)).inverse();
    Ok((c, rho, limited, Vec::new(), Method::Orbit))
}

/// Shifts the parameter so that `h(0) = 0`.
fn normalized(eta: &Trig) -> Result<FourierLift> {
    let lift = eta.to_lift();
    let amp = lift.amplitude() + 1e-12;
    let guess = -lift.constant;
    let star = monotone_newton(
        |x| Ok(lift.forward(x)),
        0.0,
        guess - amp,
        guess + amp,
        guess,
        200,
    )?;
    let shifted = Trig { coef: Trig::shifted(&eta.coef, star) };
    let mut out = shifted.to_lift();
    out.constant += star;
    // Absorb the rounding left in h(0).
    out.constant -= out.forward(0.0).0;
    Ok(out)
}

/// C^0 distance of `c a c⁻¹` to `Rotation(rho)` on `n` points.
pub(crate) fn conjugation_residual(a: &Diffeo, c: &Diffeo, rho: f64, n: usize) -> Result<f64> {
    let conj = a.conjugate_by(c);
    let mut worst = 0.0f64;
    for i in 0..n {
        let x = i as f64 / n as f64;
        let d = conj.displacement(x)?;
        worst = worst.max(centered(d - rho).abs());
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circle::BumpTranslation;
    use crate::smooth::{Plateau, Smoothstep};

    fn golden() -> f64 {
        0.5 * (5f64.sqrt() - 1.0)
    }

    #[test]
    fn rotation_linearizes_to_identity() {
        let r = linearize(&Diffeo::rotation(golden()), &LinearizeParams::default()).unwrap();
        assert!(r.residual < 1e-12);
        for i in 0..50 {
            let x = i as f64 / 50.0;
            assert!((r.c.eval(x).unwrap().value() - x).abs() < 1e-12);
        }
        assert!(r.c.eval(0.0).unwrap().value().abs() < 1e-15);
    }

    #[test]
    fn recovers_bump_conjugacy() {
        let bump = Plateau::new(0.2, 0.4, 0.5, 0.7, Smoothstep::Standard);
        let b = Diffeo::primitive(Primitive::BumpTranslation(BumpTranslation::new(bump, 1e-3).unwrap()));
        let a = Diffeo::rotation(golden()).conjugate_by(&b);
        let r = linearize(&a, &LinearizeParams::default()).unwrap();
        assert!(r.residual < 1e-9, "{}", r.residual);
        // c = b⁻¹ up to the rotation fixing c(0) = 0.
        let shift = b.eval_inverse(0.0).unwrap().value();
        for i in 0..64 {
            let x = i as f64 / 64.0;
            let expected = frac(b.eval_inverse(x).unwrap().value() - shift);
            let got = r.c.eval(x).unwrap().value();
            assert!(centered(got - expected).abs() < 1e-8, "x = {x}");
        }
    }

    #[test]
    fn rational_rotation_is_rejected() {
        let err = linearize(&Diffeo::rotation(0.5), &LinearizeParams::default()).unwrap_err();
        assert!(matches!(err, Error::NotDiophantine { .. }));
    }
}
