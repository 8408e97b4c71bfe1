//! The generators `F1, ..., F5` and the per-slot gadgets that encode
//! commutators `[f_n, g_n]` as words.

use serde::{Deserialize, Serialize};

use crate::circle::{
    c0_distance, c1_distance, circle_dist, frac, support, BumpTranslation, Diffeo, EncodedSlot, EncodedSlots,
    Interval, MorseSmale, Primitive,
};
use crate::error::{Error, Result};
use crate::smooth::{Plateau, Smoothstep};
use crate::word::{GenId, Word};

/// Upper end of the admissible `λ` range for the monotone gluing of `F1`.
pub const LAMBDA_MAX: f64 = 1.237;
/// Support of `F2`.
pub const F2_SUPPORT: (f64, f64) = (0.25, 0.75);
/// Translation zone of `F2` and its shift.
pub const F2_PLATEAU: (f64, f64) = (0.4, 0.6);
pub const F2_SHIFT: f64 = 0.01;
/// Domain on which `F̂_n` must be affine.
pub const HAT_DOMAIN: (f64, f64) = (0.125, 0.875);
/// Support required of the encoded maps.
pub const GATE: (f64, f64) = (1.0 / 7.0, 6.0 / 7.0);
const CONTRACTION_MARGIN: f64 = 0.95;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GeneratorSet {
    pub f1: Diffeo,
    pub f2: Diffeo,
    pub f3: Diffeo,
    pub f4: Diffeo,
    pub f5: Diffeo,
    pub alpha: f64,
    pub lambda: f64,
    pub mu: f64,
}

impl GeneratorSet {
    /// `F1, F2, F3` with `F4 = F5 = id`.
    pub fn new(alpha: f64, lambda: f64) -> Result<Self> {
        Ok(GeneratorSet {
            f1: build_f1(lambda)?,
            f2: build_f2()?,
            f3: Diffeo::rotation(alpha),
            f4: Diffeo::identity(),
            f5: Diffeo::identity(),
            alpha,
            lambda,
            mu: 1.0 / lambda,
        })
    }

    pub fn golden() -> Result<Self> {
        GeneratorSet::new(golden_mean(), 9.0 / 8.0)
    }

    pub fn with_encoders(mut self, f4: Diffeo, f5: Diffeo) -> Self {
        self.f4 = f4;
        self.f5 = f5;
        self
    }

    pub fn array(&self) -> [Diffeo; 5] {
        [self.f1.clone(), self.f2.clone(), self.f3.clone(), self.f4.clone(), self.f5.clone()]
    }

    pub fn get(&self, id: GenId) -> &Diffeo {
        match id {
            GenId::F1 => &self.f1,
            GenId::F2 => &self.f2,
            GenId::F3 => &self.f3,
            GenId::F4 => &self.f4,
            GenId::F5 => &self.f5,
        }
    }

    pub fn realize(&self, w: &Word) -> Diffeo {
        w.to_diffeo(&self.array())
    }

    /// The maps `(f_n, g_n)` encoded in slot `n` (identity when absent).
    pub fn slot_maps(&self, n: usize) -> (Diffeo, Diffeo) {
        (slot_map(&self.f4, n), slot_map(&self.f5, n))
    }
}

fn slot_map(f: &Diffeo, n: usize) -> Diffeo {
    match f.expr() {
        crate::circle::Expr::Primitive { map: Primitive::Encoded(e) } => e
            .slots
            .iter()
            .find(|s| s.index == n)
            .map(|s| s.map.clone())
            .unwrap_or_else(Diffeo::identity),
        _ => Diffeo::identity(),
    }
}

pub fn golden_mean() -> f64 {
    0.5 * (5f64.sqrt() - 1.0)
}

pub fn build_f1(lambda: f64) -> Result<Diffeo> {
    if !(lambda > 1.0 && lambda < LAMBDA_MAX) {
        return Err(Error::Construction(format!("lambda = {lambda} outside (1, {LAMBDA_MAX})")));
    }
    let m = MorseSmale { lambda };
    m.validate()?;
    Ok(Diffeo::primitive(Primitive::MorseSmale(m)))
}

pub fn build_f2() -> Result<Diffeo> {
    let bump = Plateau::new(F2_SUPPORT.0, F2_PLATEAU.0, F2_PLATEAU.1, F2_SUPPORT.1, Smoothstep::Gentle);
    Ok(Diffeo::primitive(Primitive::BumpTranslation(BumpTranslation::new(bump, F2_SHIFT)?)))
}

/// `I_n = [1/(2n+1), 1/(2n)]`.
pub fn interval_in(n: usize) -> Result<Interval> {
    if n == 0 {
        return Err(Error::Domain("gadget index must be at least 1".into()));
    }
    let n = n as f64;
    Ok(Interval::closed(1.0 / (2.0 * n + 1.0), 1.0 / (2.0 * n)))
}

/// Data attached to one gadget slot.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Gadget {
    pub n: usize,
    /// Exponent of `F3` in `F̃_n`.
    pub a: i64,
    /// Exponent of `F1` in `F̃_n` (negative).
    pub b: i64,
    /// Exponent of `F3` in `F̂_n`.
    pub a_hat: i64,
    /// Exponent of `F1` in `F̂_n` (negative).
    pub b_hat: i64,
    pub i_n: Interval,
    pub t_n: Interval,
    pub t_n_prime: Interval,
    /// Letter count of the word for `H`.
    pub letters_k_prime: usize,
    #[serde(skip)]
    pub f_tilde: Option<Diffeo>,
    #[serde(skip)]
    pub f_hat: Option<Diffeo>,
}

impl Gadget {
    /// Word for `F̃_n = F3^a F1^b F2 F1^{-b} F3^{-a}`.
    pub fn tilde_word(&self) -> Word {
        let conj = Word::power(GenId::F3, self.a).then(&Word::power(GenId::F1, self.b));
        conj.clone().then(&Word::letter(GenId::F2, 1)).then(&conj.inverse())
    }

    /// Word for `F̂_n = F3^{a_hat} F1^{b_hat}`.
    pub fn hat_word(&self) -> Word {
        Word::power(GenId::F3, self.a_hat).then(&Word::power(GenId::F1, self.b_hat))
    }

    /// Affine data `(center, scale)` of `F̂_n` on `(1/8, 7/8)`.
    pub fn hat_affine(&self, gens: &GeneratorSet) -> Result<(f64, f64)> {
        let hat = self.f_hat.clone().unwrap_or_else(|| gens.realize(&self.hat_word()));
        Ok((hat.eval(0.5)?.value(), gens.mu.powi(self.b_hat.unsigned_abs() as i32)))
    }
}

/// Letter count `2(a_hat + |b_hat|) + 6(2a + 2|b| + 1) + 8`.
pub fn k_prime(a: i64, b: i64, a_hat: i64, b_hat: i64) -> usize {
    (2 * (a_hat.unsigned_abs() + b_hat.unsigned_abs()) + 6 * (2 * a.unsigned_abs() + 2 * b.unsigned_abs() + 1) + 8)
        as usize
}

/// Smallest `k ≥ 0` such that the arc `(lo + kα, hi + kα)` (mod 1) lies in
/// `target` (strictly inside when `strict`), stepping by repeated addition
/// exactly as the rotation is evaluated.
fn rotation_scan(alpha: f64, lo: f64, hi: f64, target: &Interval, strict: bool, cap: u64) -> Option<i64> {
    let (mut l, mut h) = (frac(lo), frac(hi));
    for k in 0..=cap {
        let inside = if strict {
            l > target.left && h < target.right && l < h
        } else {
            l >= target.left && h <= target.right && l < h
        };
        if inside {
            return Some(k as i64);
        }
        l = frac(l + alpha);
        h = frac(h + alpha);
    }
    None
}

/// Smallest `k ≥ 1` with `scale · μ^k` below `bound` (strictly when `strict`).
fn contraction_exponent(mu: f64, scale: f64, bound: f64, strict: bool) -> Result<i64> {
    for k in 1..10_000 {
        let v = scale * mu.powi(k);
        if (strict && v < bound) || (!strict && v <= bound) {
            return Ok(k as i64);
        }
    }
    Err(Error::SearchExhausted(format!("no contraction exponent reaches {bound:e}")))
}

/// Exponents `a, b`, the interval `T_n` and `F̃_n` for slot `n`.
pub fn find_gadget(n: usize, gens: &GeneratorSet, cap: u64) -> Result<Gadget> {
    let i_n = interval_in(n)?;
    let b = -contraction_exponent(gens.mu, 0.5, CONTRACTION_MARGIN * i_n.length(), true)?;
    let f1b = gens.f1.pow(b);
    // (1/4, 3/4) sits in the affine zone, where backward iterates contract
    // towards 1/2 by μ per step.
    let lo = f1b.eval(F2_SUPPORT.0)?.value();
    let hi = f1b.eval(F2_SUPPORT.1)?.value();
    let a = rotation_scan(gens.alpha, lo, hi, &i_n, true, cap)
        .ok_or_else(|| Error::SearchExhausted(format!("slot {n}: no F3 exponent below {cap}")))?;
    let conj = gens.f3.pow(a).after(&f1b);
    let t_n = Interval::open(conj.eval(F2_PLATEAU.0)?.value(), conj.eval(F2_PLATEAU.1)?.value());
    let f_tilde = gens.f2.conjugate_by(&conj);
    Ok(Gadget {
        n,
        a,
        b,
        a_hat: 0,
        b_hat: 0,
        i_n,
        t_n,
        t_n_prime: t_n,
        letters_k_prime: 0,
        f_tilde: Some(f_tilde),
        f_hat: None,
    })
}

/// Exponents `a_hat, b_hat`, the interval `T'_n` and `F̂_n`.
pub fn find_hat(mut g: Gadget, gens: &GeneratorSet, cap: u64) -> Result<Gadget> {
    let width = HAT_DOMAIN.1 - HAT_DOMAIN.0;
    let b_hat = -contraction_exponent(gens.mu, width, g.t_n.length() / 40.0, false)?;
    let f1b = gens.f1.pow(b_hat);
    let lo = f1b.eval(HAT_DOMAIN.0)?.value();
    let hi = f1b.eval(HAT_DOMAIN.1)?.value();
    let a_hat = rotation_scan(gens.alpha, lo, hi, &g.t_n, false, cap)
        .ok_or_else(|| Error::SearchExhausted(format!("slot {}: no F3 exponent for F̂ below {cap}", g.n)))?;
    let f_hat = gens.f3.pow(a_hat).after(&f1b);
    g.t_n_prime = Interval::open(f_hat.eval(HAT_DOMAIN.0)?.value(), f_hat.eval(HAT_DOMAIN.1)?.value());
    g.a_hat = a_hat;
    g.b_hat = b_hat;
    g.letters_k_prime = k_prime(g.a, g.b, a_hat, b_hat);
    g.f_hat = Some(f_hat);
    Ok(g)
}

/// Gadgets for slots `1..=count`.
pub fn build_gadgets(count: usize, gens: &GeneratorSet, cap: u64) -> Result<Vec<Gadget>> {
    (1..=count).map(|n| find_hat(find_gadget(n, gens, cap)?, gens, cap)).collect()
}

/// Largest `|F̃_n(x) - x - |T_n|/20|` over `probes` points of `T_n`.
pub fn translation_defect(g: &Gadget, probes: usize) -> Result<f64> {
    let f = g.f_tilde.as_ref().ok_or_else(|| Error::Construction("gadget without F̃".into()))?;
    let shift = g.t_n.length() / 20.0;
    let mut worst = 0.0f64;
    for x in g.t_n.probes(probes) {
        worst = worst.max((f.displacement(x)? - shift).abs());
    }
    Ok(worst)
}

/// Per-slot diagnostics from [`build_f45`].
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct EncodingReport {
    pub slots: Vec<usize>,
    pub c1_f: Vec<f64>,
    pub c1_g: Vec<f64>,
    /// C^2 seminorm `max |f''|` estimated by differences of `f'`.
    pub c2_f: Vec<f64>,
    pub c2_g: Vec<f64>,
    /// Whether the C^1 sizes are non-increasing in the slot index.
    pub non_increasing: bool,
}

/// Options for [`build_f45`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EncodeParams {
    /// Required bound on the C^1 distance of each map to the identity.
    pub c1_bound: f64,
    pub support_tol: f64,
    pub grid: usize,
    /// Allowed overshoot of the support beyond `(1/7, 6/7)`.
    pub support_slack: f64,
}

impl Default for EncodeParams {
    fn default() -> Self {
        EncodeParams { c1_bound: 0.1, support_tol: 1e-12, grid: 4096, support_slack: 0.0 }
    }
}

fn check_piece(f: &Diffeo, slot: usize, name: &str, p: &EncodeParams) -> Result<(f64, f64)> {
    let gate = Interval::open(GATE.0 - p.support_slack, GATE.1 + p.support_slack);
    for piece in support(f, p.support_tol, p.grid)? {
        if !piece.within(&gate, 0.0) {
            return Err(Error::Precondition {
                slot,
                message: format!("{name} supported on {piece:?}, outside (1/7, 6/7)"),
            });
        }
    }
    let id = Diffeo::identity();
    let c1 = c1_distance(f, &id, p.grid)?;
    if !(c1 < p.c1_bound) {
        return Err(Error::Precondition { slot, message: format!("{name} has C^1 size {c1:.4} ≥ {}", p.c1_bound) });
    }
    let c2 = crate::circle::order_norms(f, &id, 2, p.grid)?[2];
    Ok((c1, c2))
}

/// `F4`, `F5`: identity outside the `T'_n`, and `F̂_n f_n F̂_n⁻¹` (resp.
/// `g_n`) on `T'_n`. `pairs[i]` goes into the slot of `gadgets[i]`.
pub fn build_f45(
    pairs: &[(Diffeo, Diffeo)],
    gadgets: &[Gadget],
    gens: &GeneratorSet,
    p: &EncodeParams,
) -> Result<(Diffeo, Diffeo, EncodingReport)> {
    if pairs.len() > gadgets.len() {
        return Err(Error::Construction(format!("{} pairs for {} gadget slots", pairs.len(), gadgets.len())));
    }
    let mut f_slots = Vec::new();
    let mut g_slots = Vec::new();
    let mut report = EncodingReport::default();
    for ((f, g), gadget) in pairs.iter().zip(gadgets) {
        let (center, scale) = gadget.hat_affine(gens)?;
        let (c1f, c2f) = check_piece(f, gadget.n, "f", p)?;
        let (c1g, c2g) = check_piece(g, gadget.n, "g", p)?;
        report.slots.push(gadget.n);
        report.c1_f.push(c1f);
        report.c1_g.push(c1g);
        report.c2_f.push(c2f);
        report.c2_g.push(c2g);
        if !f.is_identity() {
            f_slots.push(EncodedSlot { index: gadget.n, center, scale, map: f.clone() });
        }
        if !g.is_identity() {
            g_slots.push(EncodedSlot { index: gadget.n, center, scale, map: g.clone() });
        }
    }
    let sizes: Vec<f64> = report.c1_f.iter().zip(&report.c1_g).map(|(a, b)| a.max(*b)).collect();
    report.non_increasing = sizes.windows(2).all(|w| w[1] <= w[0]);
    let wrap = |slots: Vec<EncodedSlot>| {
        if slots.is_empty() {
            Diffeo::identity()
        } else {
            Diffeo::primitive(Primitive::Encoded(EncodedSlots { slots }))
        }
    };
    Ok((wrap(f_slots), wrap(g_slots), report))
}

/// The map `H = F̂⁻¹ A B C F̂` of slot `n` and its word, where
/// `A = F4 F̃ F4⁻¹ F̃⁻¹`, `B = F5 F̃ F5⁻¹ F̃⁻¹` and
/// `C = F4⁻¹ F5⁻¹ F̃ F5 F4 F̃⁻¹`.
pub struct CommutatorWord {
    pub h: Diffeo,
    pub word: Word,
    pub abc: Word,
    /// C^0 distance of `H` to `[f_n, g_n]` on the verification grid.
    pub residual: f64,
}

pub fn commutator_word(g: &Gadget, gens: &GeneratorSet, probes: usize, tol: f64) -> Result<CommutatorWord> {
    let tilde = g.tilde_word();
    let f4 = Word::letter(GenId::F4, 1);
    let f5 = Word::letter(GenId::F5, 1);
    let a = Word::commutator(&f4, &tilde);
    let b = Word::commutator(&f5, &tilde);
    let c = Word::concat(&[&f4.inverse(), &f5.inverse(), &tilde, &f5, &f4, &tilde.inverse()]);
    let abc = Word::concat(&[&a, &b, &c]);
    let hat = g.hat_word();
    let word = Word::concat(&[&hat.inverse(), &abc, &hat]);
    debug_assert_eq!(word.len(), g.letters_k_prime);
    let h = gens.realize(&word);
    let (fm, gm) = gens.slot_maps(g.n);
    let target = fm.commutator(&gm);
    let (residual, at) = worst_deviation(&h, &target, probes)?;
    if !(residual < tol) {
        return Err(Error::VerificationFailed { deviation: residual, at });
    }
    Ok(CommutatorWord { h, word, abc, residual })
}

/// Largest circle distance between `f` and `g` on `n` points, and where.
pub fn worst_deviation(f: &Diffeo, g: &Diffeo, n: usize) -> Result<(f64, f64)> {
    let mut worst = (0.0f64, 0.0);
    for i in 0..n {
        let x = i as f64 / n as f64;
        let d = circle_dist(f.eval(x)?.value(), g.eval(x)?.value());
        if d > worst.0 {
            worst = (d, x);
        }
    }
    Ok(worst)
}

/// C^0 size of a map (max displacement on a grid).
pub fn c0_size(f: &Diffeo, n: usize) -> Result<f64> {
    c0_distance(f, &Diffeo::identity(), n)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gens() -> GeneratorSet {
        GeneratorSet::golden().unwrap()
    }

    #[test]
    fn f1_examples() {
        let g = gens();
        assert_eq!(g.f1.eval(0.5).unwrap().value(), 0.5);
        assert!((g.f1.eval(0.6).unwrap().value() - 0.6125).abs() < 1e-15);
        let h = 1e-6;
        let fd = (g.f1.lift(0.005 + h).unwrap() - g.f1.lift(0.005 - h).unwrap()) / (2.0 * h);
        assert!((fd - 8.0 / 9.0).abs() < 1e-9);
        assert!(build_f1(1.25).is_err());
    }

    #[test]
    fn f2_examples() {
        let g = gens();
        assert_eq!(g.f2.eval(0.1).unwrap().value(), 0.1);
        assert!((g.f2.eval(0.45).unwrap().value() - 0.46).abs() < 1e-15);
        assert!((g.f2.eval(0.5).unwrap().value() - 0.51).abs() < 1e-15);
        assert!((g.f2.eval_inverse(0.51).unwrap().value() - 0.5).abs() < 1e-14);
        assert_eq!(g.f2.derivative(0.5).unwrap(), 1.0);
        let min = (0..4096).map(|i| g.f2.derivative(i as f64 / 4096.0).unwrap()).fold(f64::MAX, f64::min);
        assert!(min > 0.9);
    }

    #[test]
    fn intervals() {
        assert_eq!(interval_in(1).unwrap(), Interval::closed(1.0 / 3.0, 0.5));
        assert_eq!(interval_in(2).unwrap(), Interval::closed(0.2, 0.25));
        assert!(interval_in(0).is_err());
    }

    #[test]
    fn first_gadget() {
        let g = gens();
        let gd = find_hat(find_gadget(1, &g, 1_000_000).unwrap(), &g, 1_000_000).unwrap();
        assert_eq!(gd.b, -10);
        assert_eq!(gd.b_hat, -53);
        assert!(translation_defect(&gd, 512).unwrap() < 1e-10);
        assert!(gd.t_n_prime.length() <= gd.t_n.length() / 40.0);
        assert_eq!(gd.letters_k_prime, k_prime(gd.a, gd.b, gd.a_hat, gd.b_hat));
    }

    #[test]
    fn identity_pairs_give_identity_encoders() {
        let g = gens();
        let gadgets = build_gadgets(1, &g, 1_000_000).unwrap();
        let (f4, f5, _) =
            build_f45(&[(Diffeo::identity(), Diffeo::identity())], &gadgets, &g, &EncodeParams::default()).unwrap();
        assert!(f4.is_identity() && f5.is_identity());
    }

    #[test]
    fn slot_word_realizes_commutator() {
        let g = gens();
        let gadgets = build_gadgets(2, &g, 1_000_000).unwrap();
        let pairs = [
            (crate::flows::f_flow(0.05), crate::flows::g_flow(0.05)),
            (crate::flows::g_flow(0.02), crate::flows::f_flow(-0.03)),
        ];
        let p = EncodeParams { c1_bound: f64::INFINITY, ..EncodeParams::default() };
        let (f4, f5, report) = build_f45(&pairs, &gadgets, &g, &p).unwrap();
        assert_eq!(report.slots, vec![1, 2]);
        let g = g.with_encoders(f4, f5);
        for gd in &gadgets {
            let cw = commutator_word(gd, &g, 256, 1e-8).unwrap();
            assert_eq!(cw.word.len(), gd.letters_k_prime);
        }
    }
}
