//! Word assembly for products of four commutators, word verification and the
//! distortion demonstration for rotations.

mod bfs;

pub use bfs::{bfs_distance, BfsParams};

use serde::{Deserialize, Serialize};

use crate::circle::{c0_distance, centered, distance, Diffeo, MetricConfig};
use crate::error::{Error, Result};
use crate::generators::{
    build_f45, build_gadgets, commutator_word, EncodeParams, EncodingReport, Gadget, GeneratorSet, GATE,
};
use crate::perfect::{decompose, CommutatorDecomposition, DecomposeParams};
use crate::rotation::{convergent_denominators, FamilySolver};
use crate::word::{GenId, Word};

/// Smallest `m ≥ 1` with `F3^m((1/7, 6/7)) ⊇ [7/10, 13/10]`, i.e.
/// `{mα} ∈ [13/10 - 6/7, 7/10 - 1/7]`.
pub fn choose_m(alpha: f64, cap: u64) -> Result<i64> {
    let (lo, hi) = (1.3 - GATE.1, 0.7 - GATE.0);
    let mut x = 0.0f64;
    for m in 1..=cap {
        x = (x + alpha).rem_euclid(1.0);
        if x >= lo && x <= hi {
            return Ok(m as i64);
        }
    }
    Err(Error::SearchExhausted(format!("no m ≤ {cap} moves (1/7, 6/7) over the complement of (3/10, 7/10)")))
}

/// The pairs `(f_j, g_j)` for the four slots of one decomposition, with the
/// middle two conjugated by `F3^{-m}` so that every piece lives in
/// `(1/7, 6/7)`.
pub fn slot_pairs(d: &CommutatorDecomposition, f3: &Diffeo, m: i64) -> [(Diffeo, Diffeo); 4] {
    let shift = f3.pow(-m);
    let moved = |f: &Diffeo| f.conjugate_by(&shift);
    let x = &d.x;
    [
        (x[0].clone(), x[1].clone()),
        (moved(&x[2]), moved(&x[3])),
        (moved(&x[4]), moved(&x[5])),
        (x[6].clone(), x[7].clone()),
    ]
}

/// Word `H_1 F3^m H_2 H_3 F3^{-m} H_4` from the four slot words.
pub fn splice(words: [&Word; 4], m: i64) -> Word {
    let up = Word::power(GenId::F3, m);
    Word::concat(&[words[0], &up, words[1], words[2], &up.inverse(), words[3]])
}

/// Assembled word for one target, with its length bookkeeping.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Assembly {
    pub slots: [usize; 4],
    pub word: Word,
    pub slot_lengths: [usize; 4],
    pub m: i64,
    /// `Σ k'_j + 2m`.
    pub ledger_length: usize,
    /// Largest residual of the four slot words against their commutators.
    pub slot_residual: f64,
}

/// Builds the word for `h = [x1,x2][x3,x4][x5,x6][x7,x8]` from slots
/// `slots`, given generators whose `F4`, `F5` already encode
/// [`slot_pairs`] there.
pub fn assemble_word(
    gadgets: &[Gadget],
    slots: [usize; 4],
    gens: &GeneratorSet,
    m: i64,
    probes: usize,
    tol: f64,
) -> Result<Assembly> {
    let mut words = Vec::with_capacity(4);
    let mut slot_lengths = [0usize; 4];
    let mut slot_residual = 0.0f64;
    for (k, &n) in slots.iter().enumerate() {
        let g = gadgets
            .iter()
            .find(|g| g.n == n)
            .ok_or_else(|| Error::Assembly { piece: format!("slot {n}"), message: "gadget not built".into() })?;
        let cw = commutator_word(g, gens, probes, tol)
            .map_err(|e| Error::Assembly { piece: format!("slot {n}"), message: e.to_string() })?;
        slot_lengths[k] = g.letters_k_prime;
        slot_residual = slot_residual.max(cw.residual);
        words.push(cw.word);
    }
    let word = splice([&words[0], &words[1], &words[2], &words[3]], m);
    let ledger_length = slot_lengths.iter().sum::<usize>() + 2 * m.unsigned_abs() as usize;
    if word.len() != ledger_length {
        return Err(Error::Assembly {
            piece: "word".into(),
            message: format!("{} letters against ledger {ledger_length}", word.len()),
        });
    }
    Ok(Assembly { slots, word, slot_lengths, m, ledger_length, slot_residual })
}

/// C^0 grid distance between the word's map and `target`.
pub fn verify_word(word: &Word, target: &Diffeo, gens: &GeneratorSet, grid: usize) -> Result<f64> {
    c0_distance(&gens.realize(word), target, grid)
}

/// Settings for [`distortion_demo`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DemoParams {
    pub beta: f64,
    /// Number of rows attempted.
    pub count: usize,
    /// Rows start at the first denominator `q` with `‖qβ‖` at most this.
    pub max_closeness: f64,
    pub search_cap: u64,
    pub verify_grid: usize,
    pub slot_probes: usize,
    pub slot_tol: f64,
    /// Residual below which a row counts as successful.
    pub row_tol: f64,
    /// Also report lengths over the generators together with `f` itself,
    /// where `f^q` is available as a word of length `q`.
    pub append_f: bool,
    pub decompose: DecomposeParams,
    pub encode: EncodeParams,
    pub metric: MetricConfig,
}

impl Default for DemoParams {
    fn default() -> Self {
        DemoParams {
            beta: crate::generators::golden_mean(),
            count: 5,
            max_closeness: 1.5e-3,
            search_cap: 1_000_000,
            verify_grid: 1024,
            slot_probes: 512,
            slot_tol: 2.5e-5,
            row_tol: 1e-4,
            append_f: false,
            decompose: DecomposeParams::default(),
            encode: EncodeParams { c1_bound: f64::INFINITY, support_slack: 0.0, ..EncodeParams::default() },
            metric: MetricConfig::default(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DemoRow {
    pub j: usize,
    pub q: u64,
    /// `d(f^q, id)`.
    pub closeness: f64,
    pub word_length: Option<usize>,
    pub ratio: Option<f64>,
    /// `min(k, q)`, present when `f` is appended to the generators.
    pub length_with_f: Option<usize>,
    pub residual: Option<f64>,
    pub t: Option<f64>,
    pub decomposition_residual: Option<f64>,
    pub slots: Option<[usize; 4]>,
    pub success: bool,
    pub failure: Option<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DistortionReport {
    pub beta: f64,
    pub m: i64,
    pub t0: f64,
    pub rho0: f64,
    pub append_f: bool,
    pub rows: Vec<DemoRow>,
    pub encoding: EncodingReport,
    #[serde(skip)]
    pub words: Vec<Option<Word>>,
    #[serde(skip)]
    pub gadgets: Vec<Gadget>,
}

impl DistortionReport {
    pub fn successful(&self) -> impl Iterator<Item = &DemoRow> {
        self.rows.iter().filter(|r| r.success)
    }

    /// Whether `k_j / q_j` strictly decreases along the successful rows.
    pub fn ratio_decreasing(&self) -> bool {
        let ratios: Vec<f64> = self.successful().filter_map(|r| r.ratio).collect();
        ratios.windows(2).all(|w| w[1] < w[0])
    }
}

/// Runs the pipeline on `h_j = f^{q_j}` for `f = Rotation(β)`.
///
/// The `r`-th decomposed row consumes gadget slots `4r+1, ..., 4r+4`. All
/// rows share one generator set: `F4`, `F5` encode every decomposed row.
pub fn distortion_demo(base: &GeneratorSet, solver: &FamilySolver, p: &DemoParams) -> Result<DistortionReport> {
    let m = choose_m(base.alpha, p.search_cap)?;
    let f = Diffeo::rotation(p.beta);
    let qs: Vec<u64> = convergent_denominators(p.beta, 60)
        .into_iter()
        .filter(|&q| centered(q as f64 * p.beta).abs() <= p.max_closeness)
        .take(p.count)
        .collect();
    let id = Diffeo::identity();
    let mut rows = Vec::new();
    let mut decomps: Vec<(usize, CommutatorDecomposition)> = Vec::new();
    for (j, &q) in qs.iter().enumerate() {
        let h = f.pow(q as i64);
        let closeness = distance(&h, &id, &p.metric)?;
        let mut row = DemoRow {
            j: j + 1,
            q,
            closeness,
            word_length: None,
            ratio: None,
            length_with_f: None,
            residual: None,
            t: None,
            decomposition_residual: None,
            slots: None,
            success: false,
            failure: None,
        };
        match decompose(&h, solver, &p.decompose) {
            Ok(d) => {
                row.t = Some(d.t);
                row.decomposition_residual = Some(d.residual);
                let r = decomps.len();
                row.slots = Some([4 * r + 1, 4 * r + 2, 4 * r + 3, 4 * r + 4]);
                decomps.push((rows.len(), d));
            }
            Err(e) => row.failure = Some(format!("decompose: {e}")),
        }
        rows.push(row);
    }

    let gadgets = build_gadgets(4 * decomps.len(), base, p.search_cap)?;
    let mut pairs = Vec::new();
    for (_, d) in &decomps {
        pairs.extend(slot_pairs(d, &base.f3, m));
    }
    let (f4, f5, encoding) = build_f45(&pairs, &gadgets, base, &p.encode)?;
    let gens = base.clone().with_encoders(f4, f5);
    let mut words = vec![None; rows.len()];
    for (i, _) in &decomps {
        let row = &mut rows[*i];
        let slots = row.slots.expect("decomposed rows have slots");
        let h = f.pow(row.q as i64);
        match assemble_word(&gadgets, slots, &gens, m, p.slot_probes, p.slot_tol) {
            Ok(a) => {
                let residual = verify_word(&a.word, &h, &gens, p.verify_grid)?;
                row.word_length = Some(a.ledger_length);
                row.ratio = Some(a.ledger_length as f64 / row.q as f64);
                if p.append_f {
                    row.length_with_f = Some(a.ledger_length.min(row.q as usize));
                }
                row.residual = Some(residual);
                row.success = residual < p.row_tol;
                if !row.success {
                    row.failure = Some(format!("word residual {residual:e}"));
                }
                words[*i] = Some(a.word);
            }
            Err(e) => row.failure = Some(format!("assemble: {e}")),
        }
    }
    Ok(DistortionReport {
        beta: p.beta,
        m,
        t0: solver.family.t0,
        rho0: solver.family.rho0,
        append_f: p.append_f,
        rows,
        encoding,
        words,
        gadgets,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::golden_mean;

    #[test]
    fn choose_m_examples() {
        assert_eq!(choose_m(golden_mean(), 1000).unwrap(), 4);
        assert_eq!(choose_m(0.45, 1000).unwrap(), 1);
    }

    #[test]
    fn splice_with_identity_pieces_is_identity() {
        let gens = GeneratorSet::golden().unwrap();
        let e = Word::empty();
        let w = splice([&e, &e, &e, &e], 4);
        assert_eq!(w.len(), 8);
        assert!(verify_word(&w, &Diffeo::identity(), &gens, 256).unwrap() < 1e-15);
    }
}
