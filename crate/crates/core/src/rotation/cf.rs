use serde::{Deserialize, Serialize};

/// Continued-fraction data of a real in `(0, 1)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiophantineParams {
    /// Partial quotients `a_1, a_2, ...` (the integer part is dropped).
    pub cf_terms: Vec<u64>,
    /// Largest partial quotient among the first 15.
    pub quality: u64,
    /// The expansion ended because the remainder vanished (rational to
    /// machine precision), not because precision ran out.
    pub terminated: bool,
    /// Lower-envelope constant `C` in `|q x - p| >= C q^{-τ}` over the
    /// computed convergents.
    pub constant: f64,
    /// Fitted exponent `τ` (at least 1).
    pub exponent: f64,
    pub denominators: Vec<u64>,
}

const QUALITY_TERMS: usize = 15;

/// Standard continued-fraction expansion, stopped at `depth` terms, at an
/// exact remainder, or once floating-point error in the remainder exceeds
/// `1e-4` (roughly when `q_k² ε > 1e-4`).
pub fn continued_fraction(x: f64, depth: usize) -> DiophantineParams {
    let mut terms = Vec::new();
    let mut dens: Vec<u64> = Vec::new();
    let mut nums: Vec<u64> = Vec::new();
    let (mut q_prev, mut q) = (0u64, 1u64);
    let (mut p_prev, mut p) = (1u64, 0u64);
    let mut r = x - x.floor();
    let mut terminated = false;
    while terms.len() < depth {
        if r <= 0.0 {
            terminated = true;
            break;
        }
        let inv = 1.0 / r;
        let a = inv.floor();
        if a > 1e12 {
            terminated = true;
            break;
        }
        let a = a as u64;
        let q_next = a.saturating_mul(q).saturating_add(q_prev);
        let p_next = a.saturating_mul(p).saturating_add(p_prev);
        terms.push(a);
        (q_prev, q) = (q, q_next);
        (p_prev, p) = (p, p_next);
        dens.push(q);
        nums.push(p);
        r = inv - a as f64;
        let drift = f64::EPSILON * (q as f64) * (q as f64);
        if r < drift.max(1e-13) * 4.0 {
            terminated = true;
            break;
        }
        if drift > 1e-4 {
            break;
        }
    }
    let quality = terms.iter().take(QUALITY_TERMS).copied().max().unwrap_or(1).max(1);
    let errors: Vec<(f64, f64)> = dens
        .iter()
        .zip(&nums)
        .map(|(&q, &p)| (q as f64, (q as f64 * x - p as f64).abs()))
        .filter(|&(q, e)| q >= 2.0 && e > 0.0)
        .collect();
    let exponent = fit_exponent(&errors);
    let constant = errors
        .iter()
        .map(|&(q, e)| e * q.powf(exponent))
        .fold(f64::INFINITY, f64::min);
    DiophantineParams {
        cf_terms: terms,
        quality,
        terminated,
        constant: if constant.is_finite() { constant } else { 1.0 },
        exponent,
        denominators: dens,
    }
}

/// Least-squares slope of `log(1/e)` against `log q`, floored at 1.
fn fit_exponent(points: &[(f64, f64)]) -> f64 {
    if points.len() < 2 {
        return 1.0;
    }
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| -p.1.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        1.0
    } else {
        (sxy / sxx).max(1.0)
    }
}

/// Value of `[0; prefix..., 1, 1, 1, ...]`.
pub fn noble(prefix: &[u64]) -> f64 {
    let phi = 0.5 * (1.0 + 5f64.sqrt());
    let mut r = phi;
    for &a in prefix.iter().rev() {
        r = a as f64 + 1.0 / r;
    }
    1.0 / r
}

/// Continued-fraction denominators `q_1, q_2, ...` of `x`, up to `count`.
pub fn convergent_denominators(x: f64, count: usize) -> Vec<u64> {
    let mut d = continued_fraction(x, count).denominators;
    d.dedup();
    d
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_is_all_ones() {
        let g = 0.5 * (5f64.sqrt() - 1.0);
        let cf = continued_fraction(g, 60);
        assert!(cf.cf_terms.len() >= 20);
        assert!(cf.cf_terms.iter().all(|&a| a == 1));
        assert_eq!(cf.quality, 1);
        assert!(!cf.terminated);
        assert_eq!(&cf.denominators[..8], &[1, 2, 3, 5, 8, 13, 21, 34]);
    }

    #[test]
    fn half_terminates() {
        let cf = continued_fraction(0.5, 10);
        assert_eq!(cf.cf_terms, vec![2]);
        assert!(cf.terminated);
    }

    #[test]
    fn noble_values() {
        let g = 0.5 * (5f64.sqrt() - 1.0);
        assert!((noble(&[]) - g).abs() < 1e-15);
        assert!((noble(&[1]) - g).abs() < 1e-15);
        let v = noble(&[24]);
        assert!((v - 1.0 / (24.0 + g)).abs() < 1e-15);
        let cf = continued_fraction(v, 12);
        assert_eq!(cf.cf_terms[0], 24);
        assert!(cf.cf_terms[1..].iter().all(|&a| a == 1));
    }
}
