//! Choosing the base parameter `t0` of a monotone family and solving
//! `ρ(h_{t0+t} ∘ x) = ρ0` for the decomposition.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use super::cf::{continued_fraction, noble};
use super::linearize::{linearize, LinearizationResult, LinearizeParams, Method};
use super::number::rotation_number;
use crate::circle::{c0_distance, centered, Diffeo};
use crate::error::{Error, Result};
use crate::flows::{FlowFamily, MapFamily};
use crate::solve::{brent, brent_ftol};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanConfig {
    /// Scan grid is `t_max · i / points` for `i = 1..=points`.
    pub t_max: f64,
    pub points: usize,
    /// Orbit length for the scan.
    pub scan_budget: usize,
    /// Orbit length for root refinement.
    pub budget: usize,
    pub target_quality: u64,
    /// Required agreement `|ρ(h_{t0}) - ρ0|`.
    pub root_tol: f64,
    /// Allowed decrease between consecutive scan values.
    pub monotone_tol: f64,
}

impl Default for ScanConfig {
    fn default() -> Self {
        ScanConfig {
            t_max: 0.5,
            points: 200,
            scan_budget: 1000,
            budget: 8192,
            target_quality: 25,
            root_tol: 1e-10,
            monotone_tol: 1e-9,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ScanResult {
    pub ts: Vec<f64>,
    /// Translation numbers (unreduced).
    pub rhos: Vec<f64>,
    pub monotone: bool,
}

/// Outcome of [`pick_t0`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PickedT0 {
    pub t0: f64,
    pub rho0: f64,
    /// Partial quotients of the target beyond which the expansion is all 1s.
    pub prefix: Vec<u64>,
    pub quality: u64,
    /// `|ρ(h_{t0}) - ρ0|` at the refinement budget.
    pub mismatch: f64,
    pub scan: ScanResult,
}

pub fn scan(family: &impl MapFamily, cfg: &ScanConfig) -> Result<ScanResult> {
    let mut ts = Vec::with_capacity(cfg.points);
    let mut rhos = Vec::with_capacity(cfg.points);
    for i in 1..=cfg.points {
        let t = cfg.t_max * i as f64 / cfg.points as f64;
        ts.push(t);
        rhos.push(rotation_number(&family.at(t), cfg.scan_budget)?.translation);
    }
    let monotone = rhos.windows(2).all(|w| w[1] >= w[0] - cfg.monotone_tol);
    Ok(ScanResult { ts, rhos, monotone })
}

/// Noble numbers `[k; a1, (a2), 1, 1, ...]` with partial quotients at most
/// `quality`, lying strictly inside `(lo, hi)`.
fn noble_targets(lo: f64, hi: f64, quality: u64) -> Vec<(f64, Vec<u64>)> {
    let mut out: Vec<(f64, Vec<u64>)> = Vec::new();
    let mut prefixes = vec![vec![]];
    for a in 1..=quality {
        prefixes.push(vec![a]);
        for b in 1..=quality {
            prefixes.push(vec![a, b]);
        }
    }
    for whole in lo.floor() as i64..=hi.floor() as i64 {
        for pre in &prefixes {
            let v = whole as f64 + noble(pre);
            if v > lo && v < hi && !out.iter().any(|(u, _)| (u - v).abs() < 1e-15) {
                out.push((v, pre.clone()));
            }
        }
    }
    out
}

/// Scans the family, picks the admissible noble rotation number nearest the
/// value at the scan midpoint, and refines `t0` so that `ρ(h_{t0})` hits it.
pub fn pick_t0(family: &impl MapFamily, cfg: &ScanConfig) -> Result<PickedT0> {
    let scan = scan(family, cfg)?;
    let (lo, hi) = (scan.rhos[0], *scan.rhos.last().unwrap());
    if !(hi - lo > 1e-9) {
        return Err(Error::ScanRange(format!("rotation number constant ({lo}) on scan range")));
    }
    let mid = scan.rhos[(scan.rhos.len() - 1) / 2];
    let targets = noble_targets(lo, hi, cfg.target_quality);
    let Some((rho0, prefix)) = targets
        .into_iter()
        .min_by(|(a, pa), (b, pb)| {
            ((a - mid).abs(), pa.len(), *a).partial_cmp(&((b - mid).abs(), pb.len(), *b)).unwrap()
        })
    else {
        return Err(Error::ScanRange(format!(
            "no noble number with quality ≤ {} in [{lo}, {hi}]",
            cfg.target_quality
        )));
    };
    // Bracket from the scan grid.
    let i = scan.rhos.iter().position(|&r| r >= rho0).expect("target below scan maximum");
    let (a, b) = if i == 0 { (0.0, scan.ts[0]) } else { (scan.ts[i - 1], scan.ts[i]) };
    let f = |t: f64| -> Result<f64> { Ok(rotation_number(&family.at(t), cfg.budget)?.translation - rho0) };
    let (fa, fb) = (f(a)?, f(b)?);
    let (a, b) = widen_bracket(&f, a, b, fa, fb, &scan)?;
    let t0 = brent(f, a, b, 1e-15, 200)?;
    let mismatch = f(t0)?.abs();
    if mismatch > cfg.root_tol {
        return Err(Error::numerical(format!("ρ(h_t0) misses target by {mismatch:e}"), a, b));
    }
    let quality = continued_fraction(rho0 - rho0.floor(), 15).quality;
    Ok(PickedT0 { t0, rho0, prefix, quality, mismatch, scan })
}

/// The scan budget can misplace the crossing by a grid cell; step outwards
/// until the refined values change sign.
fn widen_bracket(
    f: &impl Fn(f64) -> Result<f64>,
    mut a: f64,
    mut b: f64,
    mut fa: f64,
    mut fb: f64,
    scan: &ScanResult,
) -> Result<(f64, f64)> {
    let step = scan.ts[0];
    let t_max = *scan.ts.last().unwrap();
    for _ in 0..4 {
        if fa <= 0.0 && fb >= 0.0 {
            return Ok((a, b));
        }
        if fa > 0.0 {
            a = (a - step).max(0.0);
            fa = f(a)?;
        }
        if fb < 0.0 {
            b = (b + step).min(t_max);
            fb = f(b)?;
        }
    }
    if fa <= 0.0 && fb >= 0.0 {
        Ok((a, b))
    } else {
        Err(Error::numerical("refined rotation numbers do not bracket the target", a, b))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveParams {
    /// Orbit length for rotation numbers in the root search.
    pub budget: usize,
    /// Cheaper orbit length used while `|ρ - ρ0|` exceeds `coarse_switch`.
    pub coarse_budget: usize,
    pub coarse_switch: f64,
    /// Initial half-width of the `t` bracket; doubled until a sign change.
    pub bracket_step: f64,
    /// Largest admissible `|t|`.
    pub bracket_max: f64,
    pub root_tol: f64,
    pub linearize: LinearizeParams,
    pub residual_grid: usize,
}

impl Default for SolveParams {
    fn default() -> Self {
        SolveParams {
            budget: 8192,
            coarse_budget: 2048,
            coarse_switch: 1e-8,
            bracket_step: 0.005,
            bracket_max: 0.2,
            root_tol: 1e-10,
            // The decomposition residual is gated downstream; this only rejects
            // conjugacies that are clearly wrong.
            linearize: LinearizeParams { max_offset: 0.5, residual_tol: 1e-4, ..LinearizeParams::default() },
            residual_grid: 1024,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FamilySolution {
    pub t: f64,
    /// `c_target⁻¹ ∘ R_θ ∘ c_base` at `θ = theta`.
    pub b: Diffeo,
    pub theta: f64,
    pub residual: f64,
    pub iterations: usize,
    pub rho0: f64,
    pub cf_quality: u64,
    /// Final bracket on `t` (the root function changes sign across it).
    pub bracket: (f64, f64),
    pub mismatch: f64,
    pub base_residual: f64,
    pub target_residual: f64,
    /// Linearizing conjugacy of `h_{t0}`.
    #[serde(skip)]
    pub c_base: Option<Diffeo>,
    /// Linearizing conjugacy of `h_{t0+t} ∘ x`.
    #[serde(skip)]
    pub c_target: Option<Diffeo>,
}

impl FamilySolution {
    /// Every `b_θ = c_target⁻¹ ∘ R_θ ∘ c_base` solves the equation, since
    /// rotations commute.
    pub fn conjugacy(&self, theta: f64) -> Result<Diffeo> {
        match (&self.c_base, &self.c_target) {
            (Some(c1), Some(c2)) => Ok(conjugacy(c1, c2, theta)),
            _ => Err(Error::Construction("solution carries no conjugacies".into())),
        }
    }
}

fn conjugacy(c1: &Diffeo, c2: &Diffeo, theta: f64) -> Diffeo {
    Diffeo::chain(&[c2.inverse(), Diffeo::rotation(theta), c1.clone()])
}

/// Solver for `x = h_{t0+t}⁻¹ b h_{t0} b⁻¹` with the base linearization cached.
pub struct FamilySolver {
    pub family: FlowFamily,
    pub params: SolveParams,
    base: OnceLock<LinearizationResult>,
    coarse_rho0: OnceLock<f64>,
}

impl FamilySolver {
    pub fn new(family: FlowFamily, params: SolveParams) -> Self {
        FamilySolver { family, params, base: OnceLock::new(), coarse_rho0: OnceLock::new() }
    }

    /// Linearization of `h_{t0}`.
    pub fn base(&self) -> Result<&LinearizationResult> {
        if let Some(b) = self.base.get() {
            return Ok(b);
        }
        let lin = linearize(&self.family.base(), &self.params.linearize)?;
        Ok(self.base.get_or_init(|| lin))
    }

    /// Root function `t ↦ ρ(h_{t0+t} ∘ x) - ρ0`, reduced to `[-1/2, 1/2)`.
    pub fn root_function(&self, x: &Diffeo, t: f64) -> Result<f64> {
        self.root_function_at(x, t, self.params.budget)
    }

    fn root_function_at(&self, x: &Diffeo, t: f64, budget: usize) -> Result<f64> {
        let a = self.family.h(self.family.t0 + t).after(x);
        Ok(centered(rotation_number(&a, budget)?.translation - self.family.rho0))
    }

    /// Short-orbit root function measured against `h_{t0}` at the same
    /// orbit length, which cancels most of the truncation bias.
    fn coarse_root_function(&self, x: &Diffeo, t: f64) -> Result<f64> {
        let n = self.params.coarse_budget;
        let reference = match self.coarse_rho0.get() {
            Some(r) => *r,
            None => {
                let r = rotation_number(&self.family.base(), n)?.translation;
                *self.coarse_rho0.get_or_init(|| r)
            }
        };
        let a = self.family.h(self.family.t0 + t).after(x);
        Ok(centered(rotation_number(&a, n)?.translation - reference))
    }

    /// Root of [`Self::root_function`] with its mismatch, the sign-change
    /// bracket and the number of rotation-number evaluations.
    ///
    /// Signs far from the root are decided with the short-orbit estimate;
    /// the last stage re-brackets with full-budget values, since the two
    /// estimates may disagree near the root. The root function is
    /// non-decreasing in `t` because the family is monotone.
    fn find_root(&self, x: &Diffeo) -> Result<(f64, f64, (f64, f64), usize)> {
        let p = &self.params;
        let t0 = self.family.t0;
        let ftol = 0.5 * p.root_tol;
        let two_stage = p.coarse_budget < p.budget;
        let mut evals = 0usize;
        let mut coarse_seen: Vec<(f64, f64)> = Vec::new();
        let mut coarse = |t: f64| -> Result<f64> {
            if let Some(&(_, v)) = coarse_seen.iter().find(|e| e.0 == t) {
                return Ok(v);
            }
            evals += 1;
            let v = if two_stage { self.coarse_root_function(x, t)? } else { self.root_function(x, t)? };
            coarse_seen.push((t, v));
            Ok(v)
        };
        let f0 = coarse(0.0)?;
        let (lo, hi) = if f0 == 0.0 {
            (0.0, 0.0)
        } else {
            let mut s = p.bracket_step;
            let found = loop {
                let probe = if f0 > 0.0 { -s } else { s };
                if t0 + probe <= 0.0 {
                    break None;
                }
                let fp = coarse(probe)?;
                if fp.signum() != f0.signum() {
                    break Some(if f0 > 0.0 { (probe, 0.0) } else { (0.0, probe) });
                }
                if s >= p.bracket_max {
                    break None;
                }
                s = (2.0 * s).min(p.bracket_max);
            };
            found.ok_or_else(|| {
                Error::Gate(format!("ρ(h_(t0+t) ∘ x) does not cross ρ0 for |t| ≤ {}", p.bracket_max))
            })?
        };
        if lo == hi {
            return Ok((0.0, self.root_function(x, 0.0)?.abs(), (lo, hi), evals + 1));
        }
        let stop = if two_stage { p.coarse_switch } else { ftol };
        let t1 = brent_ftol(&mut coarse, lo, hi, 1e-15, stop, 200)?;
        let slope = (coarse(hi)? - coarse(lo)?) / (hi - lo);

        let mut fine_seen: Vec<(f64, f64)> = Vec::new();
        let mut fine = |t: f64| -> Result<f64> {
            if let Some(&(_, v)) = fine_seen.iter().find(|e| e.0 == t) {
                return Ok(v);
            }
            evals += 1;
            let v = self.root_function(x, t)?;
            fine_seen.push((t, v));
            Ok(v)
        };
        let f1 = fine(t1)?;
        let t = if f1.abs() <= ftol {
            t1
        } else {
            let dir = -f1.signum();
            let mut step = (f1.abs() / slope.max(f64::MIN_POSITIVE)).max(1e-12);
            let mut near = t1;
            let far = loop {
                let probe = (near + dir * step).clamp(lo, hi);
                let fp = fine(probe)?;
                if fp.signum() != f1.signum() || fp == 0.0 {
                    break probe;
                }
                if probe == lo || probe == hi {
                    return Err(Error::Gate("full-budget rotation numbers do not cross ρ0 on the bracket".into()));
                }
                near = probe;
                step *= 2.0;
            };
            brent_ftol(&mut fine, near.min(far), near.max(far), 1e-15, ftol, 200)?
        };
        let mismatch = match fine_seen.iter().find(|e| e.0 == t) {
            Some(&(_, v)) => v.abs(),
            None => {
                evals += 1;
                self.root_function(x, t)?.abs()
            }
        };
        Ok((t, mismatch, (lo, hi), evals))
    }

    pub fn solve(&self, x: &Diffeo) -> Result<FamilySolution> {
        let p = &self.params;
        let t0 = self.family.t0;
        let (t, mismatch, (lo, hi), evals) = self.find_root(x)?;
        if mismatch > p.root_tol {
            return Err(Error::Gate(format!("rotation number matched only to {mismatch:e}")));
        }
        let c1 = self.base()?;
        let target = self.family.h(t0 + t).after(x);
        // The target is conjugate to the base map, so Newton is not retried
        // when the base already needed the orbit representation.
        let method = match (p.linearize.method, c1.method) {
            (Method::Auto, Method::Orbit) => Method::Orbit,
            (m, _) => m,
        };
        let c2 = linearize(&target, &LinearizeParams { method, ..p.linearize.clone() })?;
        let b = conjugacy(&c1.c, &c2.c, 0.0);
        let rebuilt = self.family.h(t0 + t).inverse().after(&self.family.base().conjugate_by(&b));
        let residual = c0_distance(&rebuilt, x, p.residual_grid)?;
        Ok(FamilySolution {
            t,
            b,
            residual,
            iterations: evals + c1.iterations + c2.iterations,
            rho0: self.family.rho0,
            cf_quality: c1.cf_quality,
            bracket: (lo, hi),
            mismatch,
            base_residual: c1.residual,
            target_residual: c2.residual,
            theta: 0.0,
            c_base: Some(c1.c.clone()),
            c_target: Some(c2.c),
        })
    }
}

/// One-shot form of [`FamilySolver::solve`].
pub fn solve_family(x: &Diffeo, family: FlowFamily, params: &SolveParams) -> Result<FamilySolution> {
    FamilySolver::new(family, params.clone()).solve(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn synthetic_rotation_family() {
        let cfg = ScanConfig { points: 50, ..ScanConfig::default() };
        let picked = pick_t0(&|t: f64| Diffeo::rotation(t), &cfg).unwrap();
        assert!(picked.scan.monotone);
        assert!(picked.t0 > 0.0 && picked.t0 <= 0.5);
        assert!((picked.t0 - picked.rho0).abs() < 1e-10);
        assert!(picked.quality <= 25);
        let cf = continued_fraction(picked.rho0, 30);
        assert!(cf.cf_terms[3..20].iter().all(|&a| a == 1));
    }

    #[test]
    fn noble_targets_respect_range() {
        let t = noble_targets(0.03, 0.05, 25);
        assert!(!t.is_empty());
        assert!(t.iter().all(|(v, p)| *v > 0.03 && *v < 0.05 && p.iter().all(|&a| a <= 25)));
    }
}
