//! Breadth-first search in the Cayley graph, used as an independent check on
//! word lengths at small radii.

use std::collections::HashMap;

use crate::circle::{circle_dist, Diffeo};
use crate::error::{Error, Result};
use crate::word::{GenId, Letter, Word};

pub const PROBES: usize = 64;
pub const QUANTUM: f64 = 1e-9;
const RECHECK_POINTS: usize = 256;
const RECHECK_TOL: f64 = 1e-8;

#[derive(Clone, Debug)]
pub struct BfsParams {
    pub max_radius: usize,
    /// Cap on the number of distinct elements stored.
    pub max_nodes: usize,
}

impl Default for BfsParams {
    fn default() -> Self {
        BfsParams { max_radius: 6, max_nodes: 2_000_000 }
    }
}

fn probes() -> Vec<f64> {
    (0..PROBES).map(|i| (i as f64 + 0.5) / PROBES as f64).collect()
}

fn fingerprint(values: &[f64]) -> Vec<i64> {
    values.iter().map(|v| (v.rem_euclid(1.0) / QUANTUM).round() as i64).collect()
}

struct Node {
    values: Vec<f64>,
    parent: Option<(usize, Letter)>,
}

fn word_of(nodes: &[Node], mut i: usize) -> Word {
    // Letters were prepended on the left, so walking up the tree gives them
    // from left to right.
    let mut letters = Vec::new();
    while let Some((p, l)) = nodes[i].parent {
        letters.push(l);
        i = p;
    }
    Word { letters }
}

fn same_map(a: &Diffeo, b: &Diffeo) -> Result<bool> {
    for i in 0..RECHECK_POINTS {
        let x = (i as f64 + 0.25) / RECHECK_POINTS as f64;
        if circle_dist(a.eval(x)?.value(), b.eval(x)?.value()) > RECHECK_TOL {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Word-metric distance from the identity to `target` over the generators
/// `gens` (and their inverses), if it is at most `max_radius`. Returns the
/// distance and a shortest word.
pub fn bfs_distance(gens: &[Diffeo; 5], target: &Diffeo, p: &BfsParams) -> Result<Option<(usize, Word)>> {
    if p.max_radius > 6 {
        return Err(Error::Domain(format!("BFS radius {} exceeds 6", p.max_radius)));
    }
    let xs = probes();
    let target_values: Vec<f64> = xs.iter().map(|&x| target.eval(x).map(|v| v.value())).collect::<Result<_>>()?;
    let target_print = fingerprint(&target_values);
    let letters: Vec<Letter> =
        GenId::ALL.iter().flat_map(|&g| [Letter::new(g, 1), Letter::new(g, -1)]).collect();

    let mut nodes = vec![Node { values: xs.clone(), parent: None }];
    let mut seen: HashMap<Vec<i64>, Vec<usize>> = HashMap::new();
    seen.entry(fingerprint(&xs)).or_default().push(0);
    let check = |nodes: &[Node], i: usize| -> Result<bool> {
        let w = word_of(nodes, i);
        same_map(&w.to_diffeo(gens), target)
    };
    if fingerprint(&xs) == target_print && check(&nodes, 0)? {
        return Ok(Some((0, Word::empty())));
    }
    let mut frontier = vec![0usize];
    for radius in 1..=p.max_radius {
        let mut next = Vec::new();
        for &i in &frontier {
            let last = nodes[i].parent.map(|(_, l)| l);
            for &l in &letters {
                if last == Some(l.inverse()) {
                    continue;
                }
                let g = &gens[l.gen.index()];
                let values = nodes[i]
                    .values
                    .iter()
                    .map(|&v| if l.sign > 0 { g.eval(v) } else { g.eval_inverse(v) }.map(|y| y.value()))
                    .collect::<Result<Vec<f64>>>()?;
                let print = fingerprint(&values);
                let idx = nodes.len();
                nodes.push(Node { values, parent: Some((i, l)) });
                // Distinct elements can share a fingerprint; compare maps.
                let bucket = seen.entry(print.clone()).or_default();
                let mut duplicate = false;
                for &j in bucket.iter() {
                    if same_map(&word_of(&nodes, j).to_diffeo(gens), &word_of(&nodes, idx).to_diffeo(gens))? {
                        duplicate = true;
                        break;
                    }
                }
                if duplicate {
                    nodes.pop();
                    continue;
                }
                bucket.push(idx);
                if print == target_print && check(&nodes, idx)? {
                    return Ok(Some((radius, word_of(&nodes, idx))));
                }
                next.push(idx);
                if nodes.len() > p.max_nodes {
                    return Err(Error::Resource { radius, message: format!("{} elements stored", nodes.len()) });
                }
            }
        }
        frontier = next;
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> [Diffeo; 5] {
        [
            Diffeo::rotation(0.1),
            Diffeo::rotation(0.5f64.sqrt() / 10.0),
            Diffeo::identity(),
            Diffeo::identity(),
            Diffeo::identity(),
        ]
    }

    #[test]
    fn small_radii() {
        let g = toy();
        let p = BfsParams { max_radius: 2, ..BfsParams::default() };
        assert_eq!(bfs_distance(&g, &Diffeo::identity(), &p).unwrap().unwrap().0, 0);
        assert_eq!(bfs_distance(&g, &g[0], &p).unwrap().unwrap().0, 1);
        let two = g[0].after(&g[1]);
        assert_eq!(bfs_distance(&g, &two, &p).unwrap().unwrap().0, 2);
        let far = Diffeo::rotation(0.123456);
        assert!(bfs_distance(&g, &far, &p).unwrap().is_none());
    }
}
