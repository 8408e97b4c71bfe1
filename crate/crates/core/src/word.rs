//! Words over the generator alphabet `{F1, ..., F5}`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::circle::Diffeo;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum GenId {
    F1,
    F2,
    F3,
    F4,
    F5,
}

impl GenId {
    pub const ALL: [GenId; 5] = [GenId::F1, GenId::F2, GenId::F3, GenId::F4, GenId::F5];

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for GenId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "F{}", self.index() + 1)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Letter {
    pub gen: GenId,
    /// `+1` or `-1`.
    pub sign: i8,
}

impl Letter {
    pub fn new(gen: GenId, sign: i8) -> Self {
        debug_assert!(sign == 1 || sign == -1);
        Letter { gen, sign }
    }

    pub fn inverse(self) -> Self {
        Letter { gen: self.gen, sign: -self.sign }
    }
}

impl fmt::Display for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.sign > 0 {
            write!(f, "{}", self.gen)
        } else {
            write!(f, "{}⁻¹", self.gen)
        }
    }
}

/// A finite product `s_1 s_2 ⋯ s_k`, read as the composition
/// `s_1 ∘ s_2 ∘ ⋯ ∘ s_k` (the rightmost letter acts first).
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Word {
    pub letters: Vec<Letter>,
}

impl Word {
    pub fn empty() -> Self {
        Word::default()
    }

    pub fn letter(gen: GenId, sign: i8) -> Self {
        Word { letters: vec![Letter::new(gen, sign)] }
    }

    /// `gen^exponent` spelled out.
    pub fn power(gen: GenId, exponent: i64) -> Self {
        let sign = if exponent < 0 { -1 } else { 1 };
        Word { letters: vec![Letter::new(gen, sign); exponent.unsigned_abs() as usize] }
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn inverse(&self) -> Self {
        Word { letters: self.letters.iter().rev().map(|l| l.inverse()).collect() }
    }

    /// Product `self · other`.
    pub fn then(mut self, other: &Word) -> Self {
        self.letters.extend_from_slice(&other.letters);
        self
    }

    pub fn concat(words: &[&Word]) -> Self {
        Word { letters: words.iter().flat_map(|w| w.letters.iter().copied()).collect() }
    }

    /// Commutator `u v u⁻¹ v⁻¹`.
    pub fn commutator(u: &Word, v: &Word) -> Self {
        Word::concat(&[u, v, &u.inverse(), &v.inverse()])
    }

    /// Maximal runs `(letter, count)`.
    pub fn runs(&self) -> Vec<(Letter, usize)> {
        let mut out: Vec<(Letter, usize)> = Vec::new();
        for &l in &self.letters {
            match out.last_mut() {
                Some((last, n)) if *last == l => *n += 1,
                _ => out.push((l, 1)),
            }
        }
        out
    }

    /// Letter counts per generator (both signs).
    pub fn counts(&self) -> [usize; 5] {
        let mut c = [0; 5];
        for l in &self.letters {
            c[l.gen.index()] += 1;
        }
        c
    }

    /// Freely reduced copy (adjacent `s s⁻¹` cancelled).
    pub fn reduced(&self) -> Self {
        let mut out: Vec<Letter> = Vec::with_capacity(self.letters.len());
        for &l in &self.letters {
            if out.last() == Some(&l.inverse()) {
                out.pop();
            } else {
                out.push(l);
            }
        }
        Word { letters: out }
    }

    /// The map of the word, with runs collapsed into power nodes.
    pub fn to_diffeo(&self, gens: &[Diffeo; 5]) -> Diffeo {
        let maps: Vec<Diffeo> = self
            .runs()
            .into_iter()
            .map(|(l, n)| gens[l.gen.index()].pow(l.sign as i64 * n as i64))
            .collect();
        Diffeo::chain(&maps)
    }

    /// Compact text form, e.g. `F3^29 F1^-10 F2`.
    pub fn to_compact(&self) -> String {
        self.runs()
            .into_iter()
            .map(|(l, n)| {
                let e = l.sign as i64 * n as i64;
                if e == 1 {
                    l.gen.to_string()
                } else {
                    format!("{}^{}", l.gen, e)
                }
            })
            .collect::<Vec<_>>()
            .join(" ")
    }

    pub fn parse_compact(text: &str) -> Result<Self> {
        let mut w = Word::empty();
        for tok in text.split_whitespace() {
            let (g, e) = match tok.split_once('^') {
                Some((g, e)) => (g, e.parse::<i64>().map_err(|_| Error::Parse(format!("bad exponent in {tok:?}")))?),
                None => (tok, 1),
            };
            let gen = match g {
                "F1" => GenId::F1,
                "F2" => GenId::F2,
                "F3" => GenId::F3,
                "F4" => GenId::F4,
                "F5" => GenId::F5,
                _ => return Err(Error::Parse(format!("unknown generator {g:?}"))),
            };
            w = w.then(&Word::power(gen, e));
        }
        Ok(w)
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            write!(f, "e")
        } else {
            write!(f, "{}", self.to_compact())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_reverses_and_flips() {
        let w = Word::parse_compact("F1^2 F3^-1 F5").unwrap();
        assert_eq!(w.len(), 4);
        assert_eq!(w.inverse().to_compact(), "F5^-1 F3 F1^-2");
        assert!(w.clone().then(&w.inverse()).reduced().is_empty());
    }

    #[test]
    fn diffeo_applies_rightmost_first() {
        let gens = [
            Diffeo::rotation(0.1),
            Diffeo::rotation(0.2),
            Diffeo::rotation(0.3),
            Diffeo::identity(),
            Diffeo::identity(),
        ];
        let w = Word::parse_compact("F1 F2^2 F3^-1").unwrap();
        let y = w.to_diffeo(&gens).eval(0.0).unwrap().value();
        assert!((y - 0.2).abs() < 1e-15);
    }
}
