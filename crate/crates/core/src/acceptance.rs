//! Acceptance checks 1–9, shared by the test suite and `verify-suite`.

use std::sync::OnceLock;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::circle::{
    c0_distance, centered, circle_dist, distance, frac, BumpTranslation, Diffeo, FourierLift, Interval, Primitive,
};
use crate::config::Config;
use crate::distortion::{
    assemble_word, bfs_distance, choose_m, distortion_demo, slot_pairs, verify_word, DistortionReport,
};
use crate::error::{Error, Result};
use crate::flows::{build_fields, f_flow, g_flow, FlowFamily};
use crate::generators::{build_f45, build_gadgets, c0_size, commutator_word, translation_defect, GeneratorSet};
use crate::perfect::{decompose, CommutatorDecomposition};
use crate::rotation::{linearize, rotation_number, FamilySolver};
use crate::smooth::{Plateau, Smoothstep};
use crate::word::{GenId, Letter, Word};

const SEED: u64 = 0x5eed;

#[derive(Clone, Debug, Serialize)]
pub struct CriterionResult {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
    pub limit_seconds: f64,
}

impl CriterionResult {
    pub fn line(&self) -> String {
        format!(
            "criterion {} {:<28} {} ({:.1} s of {:.0} s) {}",
            self.id,
            self.name,
            if self.passed { "PASS" } else { "FAIL" },
            self.seconds,
            self.limit_seconds,
            self.detail
        )
    }
}

/// Shared state: the family, its solver and the decomposition reused by
/// later checks. Set-up time is not charged to any criterion.
pub struct Suite {
    pub cfg: Config,
    family: OnceLock<FlowFamily>,
    solver: OnceLock<FamilySolver>,
    forward: OnceLock<(Diffeo, CommutatorDecomposition)>,
}

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Result<Outcome> {
    Ok(Outcome { passed, detail })
}

impl Suite {
    pub fn new(cfg: Config) -> Self {
        Suite { cfg, family: OnceLock::new(), solver: OnceLock::new(), forward: OnceLock::new() }
    }

    pub fn family(&self) -> Result<FlowFamily> {
        if let Some(f) = self.family.get() {
            return Ok(*f);
        }
        let family = self.cfg.family()?;
        Ok(*self.family.get_or_init(|| family))
    }

    pub fn solver(&self) -> Result<&FamilySolver> {
        if self.solver.get().is_none() {
            let s = FamilySolver::new(self.family()?, self.cfg.solve_params());
            s.base()?;
            let _ = self.solver.set(s);
        }
        Ok(self.solver.get().expect("solver set above"))
    }

    /// Family, solver and base linearization, computed ahead of the timed
    /// checks. Returns the elapsed seconds.
    pub fn prepare(&self) -> Result<f64> {
        let start = Instant::now();
        self.solver()?;
        Ok(start.elapsed().as_secs_f64())
    }

    pub fn generators(&self) -> Result<GeneratorSet> {
        GeneratorSet::new(self.cfg.generators.alpha, self.cfg.generators.lambda)
    }

    fn run(
        &self,
        id: u8,
        name: &'static str,
        limit_seconds: f64,
        f: impl FnOnce(&Self) -> Result<Outcome>,
    ) -> CriterionResult {
        let start = Instant::now();
        let result = f(self);
        let seconds = start.elapsed().as_secs_f64();
        let (mut passed, mut detail) = match result {
            Ok(o) => (o.passed, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        if seconds > limit_seconds {
            passed = false;
            detail.push_str("; over time limit");
        }
        CriterionResult { id, name, passed, detail, seconds, limit_seconds }
    }

    pub fn criterion(&self, id: u8) -> CriterionResult {
        match id {
            1 => self.run(1, "gadget translation", 10.0, Suite::gadget_translation),
            2 => self.run(2, "commutator gadget", 60.0, Suite::commutator_gadget),
            3 => self.run(3, "rotation number", 30.0, Suite::rotation_numbers),
            4 => self.run(4, "linearization", 120.0, Suite::linearization),
            5 => self.run(5, "four-commutator decomposition", 300.0, Suite::decomposition),
            6 => self.run(6, "word assembly", 300.0, Suite::word_assembly),
            7 => self.run(7, "distortion demonstration", 1200.0, Suite::demonstration),
            8 => self.run(8, "bfs oracle consistency", 60.0, Suite::bfs_consistency),
            9 => self.run(9, "core suite", 60.0, Suite::core_suite),
            _ => CriterionResult {
                id,
                name: "unknown",
                passed: false,
                detail: "no such criterion".into(),
                seconds: 0.0,
                limit_seconds: 0.0,
            },
        }
    }

    pub fn run_all(&self) -> Vec<CriterionResult> {
        (1..=9).map(|id| self.criterion(id)).collect()
    }

    fn gadget_translation(&self) -> Result<Outcome> {
        let gens = self.generators()?;
        let gadgets = build_gadgets(3, &gens, self.cfg.generators.search_cap)?;
        let defects = gadgets.iter().map(|g| translation_defect(g, 512)).collect::<Result<Vec<f64>>>()?;
        let worst = defects.iter().cloned().fold(0.0, f64::max);
        outcome(worst < 1e-9, format!("max defect {worst:.2e} over n = 1, 2, 3"))
    }

    fn commutator_gadget(&self) -> Result<Outcome> {
        let gens = self.generators()?;
        let gadgets = build_gadgets(3, &gens, self.cfg.generators.search_cap)?;
        let tau = flow_time_for_size(1e-2)?;
        let f2 = gens.f2.clone();
        let pairs = vec![
            (f_flow(tau), g_flow(tau)),
            (g_flow(tau), f_flow(-tau)),
            (f2, g_flow(-tau)),
        ];
        for (f, g) in &pairs {
            let (sf, sg) = (c0_size(f, 4096)?, c0_size(g, 4096)?);
            if (sf - 1e-2).abs() > 1e-6 || (sg - 1e-2).abs() > 1e-6 {
                return Err(Error::Construction(format!("test pair sizes {sf:e}, {sg:e}")));
            }
        }
        let (f4, f5, _) = build_f45(&pairs, &gadgets, &gens, &self.cfg.encode_params())?;
        let gens = gens.with_encoders(f4, f5);
        let mut worst_h = 0.0f64;
        let mut worst_support = 0.0f64;
        for g in &gadgets {
            let cw = commutator_word(g, &gens, 512, f64::INFINITY)?;
            worst_h = worst_h.max(cw.residual);
            let abc = gens.realize(&cw.abc);
            let tilde = g.f_tilde.as_ref().expect("gadgets carry F̃");
            let moved = Interval::closed(tilde.eval(g.t_n_prime.left)?.value(), tilde.eval(g.t_n_prime.right)?.value());
            worst_support = worst_support.max(outside_displacement(&abc, &[g.t_n_prime, moved], 1e-10)?);
        }
        outcome(
            worst_h < 1e-8 && worst_support < 1e-10,
            format!("max |H - [f,g]| {worst_h:.2e}, displacement of ABC off T' ∪ F̃(T') {worst_support:.2e}"),
        )
    }

    fn rotation_numbers(&self) -> Result<Outcome> {
        // Cheap maps: a long orbit costs well under a second.
        let budget = self.cfg.rotation.iterates.max(1 << 17);
        let mut rng = ChaCha8Rng::seed_from_u64(SEED);
        let mut worst_rigid = 0.0f64;
        for _ in 0..20 {
            let a: f64 = rng.gen_range(0.0..1.0);
            let r = rotation_number(&Diffeo::rotation(a), budget)?;
            worst_rigid = worst_rigid.max(circle_dist(r.value, a));
        }
        let mut worst_conj = 0.0f64;
        for _ in 0..20 {
            let a: f64 = rng.gen_range(0.0..1.0);
            let f = Diffeo::rotation(a).after(&self.generators()?.f2);
            let c = random_fourier(&mut rng, 0.02, 4);
            let r0 = rotation_number(&f, budget)?.value;
            let r1 = rotation_number(&f.conjugate_by(&c), budget)?.value;
            worst_conj = worst_conj.max(circle_dist(r0, r1));
        }
        let f1 = rotation_number(&self.generators()?.f1, budget)?.value;
        let f1_err = circle_dist(f1, 0.0);
        outcome(
            worst_rigid < 1e-12 && worst_conj < 1e-8 && f1_err < 1e-10,
            format!("rigid {worst_rigid:.2e}, conjugates {worst_conj:.2e}, ρ(F1) {f1_err:.2e}"),
        )
    }

    fn linearization(&self) -> Result<Outcome> {
        let bump = Plateau::new(0.2, 0.4, 0.5, 0.7, Smoothstep::Standard);
        let b = Diffeo::primitive(Primitive::BumpTranslation(BumpTranslation::new(bump, 1e-3)?));
        let rot = Diffeo::rotation(crate::generators::golden_mean());
        let a = rot.conjugate_by(&b);
        let r = linearize(&a, &self.cfg.linearize_params())?;
        let shift = b.eval_inverse(0.0)?.value();
        let mut recovery = 0.0f64;
        for i in 0..1024 {
            let x = i as f64 / 1024.0;
            let expected = frac(b.eval_inverse(x)?.value() - shift);
            recovery = recovery.max(circle_dist(r.c.eval(x)?.value(), expected));
        }
        let conj = r.c.after(&a).after(&r.c.inverse());
        let residual = c0_distance(&conj, &Diffeo::rotation(r.rho), 1024)?;
        outcome(
            residual < 1e-6 && recovery < 1e-5,
            format!("residual {residual:.2e}, conjugacy recovery {recovery:.2e} ({:?})", r.method),
        )
    }

    /// `x = h_{t0+t}⁻¹ b h_{t0} b⁻¹` for a known `t` and bump `b`.
    pub fn forward_instance(&self) -> Result<Diffeo> {
        let fam = self.family()?;
        let bump = Plateau::new(0.35, 0.45, 0.55, 0.65, Smoothstep::Standard);
        let b = Diffeo::primitive(Primitive::BumpTranslation(BumpTranslation::new(bump, 1e-3)?));
        Ok(fam.h(fam.t0 + 2e-3).inverse().after(&fam.base().conjugate_by(&b)))
    }

    fn forward(&self) -> Result<&(Diffeo, CommutatorDecomposition)> {
        if self.forward.get().is_none() {
            let x = self.forward_instance()?;
            let d = decompose(&x, self.solver()?, &self.cfg.decompose_params())?;
            let _ = self.forward.set((x, d));
        }
        Ok(self.forward.get().expect("set above"))
    }

    fn decomposition(&self) -> Result<Outcome> {
        let margin = self.cfg.decompose.support_margin;
        let (_, d1) = self.forward()?;
        let mut rng = ChaCha8Rng::seed_from_u64(SEED + 5);
        let x = self.forward_instance()?;
        let p = scale_to_size(random_fourier(&mut rng, 1.0, 3), 1e-3)?;
        let x2 = p.after(&x);
        let d2 = decompose(&x2, self.solver()?, &self.cfg.decompose_params())?;
        let overshoot = |d: &CommutatorDecomposition| d.supports.iter().map(|s| s.overshoot).fold(0.0, f64::max);
        let worst = d1.residual.max(d2.residual);
        let over = overshoot(d1).max(overshoot(&d2));
        outcome(
            worst < 1e-5 && over <= margin,
            format!(
                "residuals {:.2e} (forward, t = {:.3e}), {:.2e} (perturbed, t = {:.3e}); support overshoot {over:.2e}",
                d1.residual, d1.t, d2.residual, d2.t
            ),
        )
    }

    fn word_assembly(&self) -> Result<Outcome> {
        let base = self.generators()?;
        let m = choose_m(base.alpha, self.cfg.generators.search_cap)?;
        let (h, d) = self.forward()?;
        let gadgets = build_gadgets(4, &base, self.cfg.generators.search_cap)?;
        let pairs = slot_pairs(d, &base.f3, m);
        let (f4, f5, _) = build_f45(&pairs, &gadgets, &base, &self.cfg.encode_params())?;
        let gens = base.with_encoders(f4, f5);
        let a = assemble_word(&gadgets, [1, 2, 3, 4], &gens, m, 512, f64::INFINITY)?;
        let residual = verify_word(&a.word, h, &gens, self.cfg.demo.verify_grid)?;
        let fine = verify_word(&a.word, h, &gens, 10 * self.cfg.demo.verify_grid)?;
        let counted: usize = gadgets.iter().map(|g| g.letters_k_prime).sum::<usize>() + 2 * m as usize;
        let golden_m = choose_m(crate::generators::golden_mean(), self.cfg.generators.search_cap)?;
        outcome(
            residual < 1e-4 && a.word.len() == counted && a.ledger_length == counted && golden_m == 4,
            format!(
                "residual {residual:.2e} (10x grid {fine:.2e}), {} letters = ledger {counted}, m = {m} (golden {golden_m})",
                a.word.len()
            ),
        )
    }

    pub fn demo_report(&self) -> Result<DistortionReport> {
        distortion_demo(&self.generators()?, self.solver()?, &self.cfg.demo_params())
    }

    fn demonstration(&self) -> Result<Outcome> {
        let report = self.demo_report()?;
        let fib = fibonacci(60);
        let ok: Vec<_> = report.successful().collect();
        let all_fib = ok.iter().all(|r| fib.contains(&r.q));
        let residual_ok = ok.iter().all(|r| r.residual.is_some_and(|v| v < 1e-4));
        let decreasing = report.ratio_decreasing();
        let rows: Vec<String> = report
            .rows
            .iter()
            .map(|r| match (r.word_length, r.ratio) {
                (Some(k), Some(ratio)) if r.success => format!("q={} k={k} k/q={ratio:.1}", r.q),
                _ => format!("q={} failed", r.q),
            })
            .collect();
        outcome(
            ok.len() >= 3 && all_fib && residual_ok && decreasing,
            format!("{} successful, ratio decreasing: {decreasing}; {}", ok.len(), rows.join(", ")),
        )
    }

    fn bfs_consistency(&self) -> Result<Outcome> {
        let g = self.generators()?;
        let toy = [
            g.f1.clone(),
            g.f2.clone(),
            g.f3.clone(),
            Diffeo::rotation(2f64.sqrt() - 1.0),
            g.f2.after(&Diffeo::rotation(0.3)),
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(SEED + 8);
        let p = crate::distortion::BfsParams { max_radius: 4, ..self.cfg.bfs_params() };
        let mut violations = 0;
        let mut shorter = 0;
        for _ in 0..50 {
            let len = rng.gen_range(1..=4);
            let word = Word {
                letters: (0..len)
                    .map(|_| Letter::new(GenId::ALL[rng.gen_range(0..5)], if rng.gen_bool(0.5) { 1 } else { -1 }))
                    .collect(),
            };
            let target = word.to_diffeo(&toy);
            match bfs_distance(&toy, &target, &p)? {
                Some((d, _)) if d <= word.len() => shorter += usize::from(d < word.len()),
                _ => violations += 1,
            }
        }
        outcome(violations == 0, format!("50 words, {violations} violations, {shorter} with shorter BFS words"))
    }

    fn core_suite(&self) -> Result<Outcome> {
        let g = self.generators()?;
        let mut rng = ChaCha8Rng::seed_from_u64(SEED + 9);
        let mut round_trip = 0.0f64;
        for _ in 0..1000 {
            let pieces = rng.gen_range(1..=3);
            let f = Diffeo::chain(&(0..pieces).map(|_| random_piece(&mut rng, &g)).collect::<Vec<_>>());
            let x: f64 = rng.gen_range(0.0..1.0);
            round_trip = round_trip.max(circle_dist(f.eval(f.eval_inverse(x)?.value())?.value(), x));
            round_trip = round_trip.max(circle_dist(f.eval_inverse(f.eval(x)?.value())?.value(), x));
        }
        let metric = crate::circle::MetricConfig::with_order(self.cfg.metric.order, 512);
        let mut axiom_failures = 0;
        for _ in 0..100 {
            let [a, b, c] = [0; 3].map(|_| random_fourier(&mut rng, 0.02, 3));
            let ab = distance(&a, &b, &metric)?;
            let ba = distance(&b, &a, &metric)?;
            let ac = distance(&a, &c, &metric)?;
            let cb = distance(&c, &b, &metric)?;
            let aa = distance(&a, &a, &metric)?;
            if aa != 0.0 || (ab - ba).abs() > 1e-15 || ab > ac + cb + 1e-12 || ab < 0.0 {
                axiom_failures += 1;
            }
        }
        let mut additivity = 0.0f64;
        for (s, t) in [(0.1, 0.2), (0.3, -0.1), (0.05, 0.45)] {
            for flow in [f_flow as fn(f64) -> Diffeo, g_flow] {
                additivity = additivity.max(c0_distance(&flow(s).after(&flow(t)), &flow(s + t), 1024)?);
            }
        }
        let fields = build_fields().map(|_| ()).map_err(|e| e.to_string());
        outcome(
            round_trip < 1e-11 && axiom_failures == 0 && additivity < 1e-10 && fields.is_ok(),
            format!(
                "round trip {round_trip:.2e}, metric axiom failures {axiom_failures}, flow additivity {additivity:.2e}, fields {}",
                fields.err().unwrap_or_else(|| "ok".into())
            ),
        )
    }
}

/// Flow time `τ > 0` with `|f_τ - id|_0 = size` (equal for `g_τ` by symmetry).
pub fn flow_time_for_size(size: f64) -> Result<f64> {
    crate::solve::brent(|t| Ok(c0_size(&f_flow(t), 4096)? - size), 1e-4, 1.0, 1e-14, 200)
}

/// Largest `|f(x) - x|` over probe points outside the union of `allowed`
/// widened by `slack`: a uniform grid plus dense points next to each arc.
fn outside_displacement(f: &Diffeo, allowed: &[Interval], slack: f64) -> Result<f64> {
    let mut xs: Vec<f64> = (0..8192).map(|i| (i as f64 + 0.5) / 8192.0).collect();
    for a in allowed {
        let w = a.length();
        for k in 1..=64 {
            let d = slack + w * k as f64 / 64.0;
            xs.push(frac(a.left - d));
            xs.push(frac(a.right + d));
        }
    }
    let mut worst = 0.0f64;
    for x in xs {
        if allowed.iter().any(|a| a.widen(slack).contains(x)) {
            continue;
        }
        worst = worst.max(centered(f.displacement(x)?).abs());
    }
    Ok(worst)
}

/// Fourier lift with `modes` random coefficients whose slope perturbation
/// stays below `1/2`, scaled by `amplitude`.
fn random_fourier(rng: &mut ChaCha8Rng, amplitude: f64, modes: usize) -> Diffeo {
    let raw = |rng: &mut ChaCha8Rng| -> Vec<f64> { (0..modes).map(|_| rng.gen_range(-1.0..1.0)).collect() };
    let (cos, sin) = (raw(rng), raw(rng));
    let constant = rng.gen_range(-1.0..1.0) * amplitude;
    let lift = FourierLift::new(0.0, cos, sin);
    let scale = amplitude.min(0.5 / lift.slope_amplitude());
    let cos = lift.cos.iter().map(|c| c * scale).collect();
    let sin = lift.sin.iter().map(|c| c * scale).collect();
    Diffeo::primitive(Primitive::Fourier(FourierLift::new(constant, cos, sin)))
}

/// Rescales a Fourier lift (constant term included) to the given C^0 size.
fn scale_to_size(f: Diffeo, size: f64) -> Result<Diffeo> {
    let current = c0_size(&f, 4096)?;
    match f.expr() {
        crate::circle::Expr::Primitive { map: Primitive::Fourier(l) } => {
            let k = size / current;
            let scaled = |v: &[f64]| v.iter().map(|c| c * k).collect();
            Ok(Diffeo::primitive(Primitive::Fourier(FourierLift::new(l.constant * k, scaled(&l.cos), scaled(&l.sin)))))
        }
        _ => Err(Error::Construction("expected a Fourier lift".into())),
    }
}

/// One of `F1^±1`, `F2^±1`, `F3`, a flow with `|t| ≤ 0.3` or a random
/// Fourier lift.
fn random_piece(rng: &mut ChaCha8Rng, g: &GeneratorSet) -> Diffeo {
    let sign = if rng.gen_bool(0.5) { 1 } else { -1 };
    match rng.gen_range(0..6) {
        0 => g.f1.pow(sign),
        1 => g.f2.pow(sign),
        2 => g.f3.clone(),
        3 => f_flow(rng.gen_range(-0.3..0.3)),
        4 => g_flow(rng.gen_range(-0.3..0.3)),
        _ => random_fourier(rng, 0.05, 4),
    }
}

fn fibonacci(count: usize) -> Vec<u64> {
    let mut v = vec![1u64, 2];
    while v.len() < count {
        let n = v[v.len() - 1] + v[v.len() - 2];
        v.push(n);
    }
    v
}
