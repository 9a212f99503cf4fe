//! Independent reference computations used only by tests.
//!
//! Nothing here calls into the library's energy, community or pivot code; each function
//! recomputes its quantity from the definitions with plain loops.

#![allow(dead_code)]

use std::collections::BTreeSet;
use std::ops::Add;

use rand::Rng;

/// Links `(i, j, ced)` of the co-energy graph, by a direct double loop.
pub fn brute_force_links(rows: &[Vec<f64>], dv: &[f64], alpha: f64) -> Vec<(usize, usize, f64)> {
    let r = rows.len();
    let k = dv.len();
    let mut out = Vec::new();
    for a in 0..r {
        for b in (a + 1)..r {
            let mut both = 0usize;
            for e in 0..k {
                if rows[a][e] >= dv[e] && rows[b][e] >= dv[e] {
                    both += 1;
                }
            }
            let ced = both as f64 / k as f64;
            if ced >= alpha {
                out.push((a, b, ced));
            }
        }
    }
    out
}

/// Energy of each row: count of events at or above the reference, over `K`.
pub fn brute_force_energies(rows: &[Vec<f64>], dv: &[f64]) -> Vec<f64> {
    rows.iter()
        .map(|row| row.iter().zip(dv).filter(|(x, d)| x >= d).count() as f64 / dv.len() as f64)
        .collect()
}

/// Possibility degrees by enumerating every linear extension of the strict order induced
/// by `p` (ascending) and keeping, per atom, the largest cumulative mass up to that atom.
pub fn possibility_by_linear_extensions<T>(p: &[T]) -> Vec<T>
where
    T: Copy + PartialOrd + Add<Output = T> + Default,
{
    fn extend<T>(p: &[T], remaining: &mut Vec<usize>, prefix: &mut Vec<usize>, best: &mut [Option<T>])
    where
        T: Copy + PartialOrd + Add<Output = T> + Default,
    {
        if remaining.is_empty() {
            let mut acc = T::default();
            for &i in prefix.iter() {
                acc = acc + p[i];
                if best[i].map_or(true, |b| acc > b) {
                    best[i] = Some(acc);
                }
            }
            return;
        }
        for pos in 0..remaining.len() {
            let cand = remaining[pos];
            // a minimal element: nothing left is strictly smaller
            if remaining.iter().any(|&o| p[o] < p[cand]) {
                continue;
            }
            remaining.remove(pos);
            prefix.push(cand);
            extend(p, remaining, prefix, best);
            prefix.pop();
            remaining.insert(pos, cand);
        }
    }

    let mut best = vec![None; p.len()];
    extend(p, &mut (0..p.len()).collect(), &mut Vec::new(), &mut best);
    best.into_iter().map(|b| b.expect("every atom appears in some extension")).collect()
}

/// Count of linear extensions; product of tie-class factorials.
pub fn count_linear_extensions(p: &[f64]) -> usize {
    let mut sorted = p.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut total = 1usize;
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j < sorted.len() && sorted[j] == sorted[i] {
            j += 1;
        }
        total *= (1..=(j - i)).product::<usize>();
        i = j;
    }
    total
}

/// Random distribution over `n` atoms with some atoms forced to share values or be zero.
pub fn random_distribution_with_ties(rng: &mut impl Rng, n: usize) -> Vec<u32> {
    let mut w: Vec<u32> = (0..n).map(|_| rng.gen_range(0..6)).collect();
    if n > 1 && rng.gen_bool(0.5) {
        let a = rng.gen_range(0..n);
        let b = rng.gen_range(0..n);
        w[b] = w[a];
    }
    if w.iter().all(|&x| x == 0) {
        w[rng.gen_range(0..n)] = 1;
    }
    w
}

/// Dense subgroups by enumerating every node subset of size 3..=max_size.
pub fn dense_by_enumeration(
    nodes: &[usize],
    weight: impl Fn(usize, usize) -> Option<f64>,
    eps: f64,
    max_size: usize,
) -> Vec<Vec<usize>> {
    let valid = |s: &[usize]| -> bool {
        let mut ws = Vec::new();
        for (a, &x) in s.iter().enumerate() {
            for &y in &s[a + 1..] {
                match weight(x, y) {
                    Some(w) => ws.push(w),
                    None => return false,
                }
            }
        }
        let lo = ws.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = ws.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        hi - lo <= eps
    };
    let n = nodes.len();
    let mut found: Vec<Vec<usize>> = Vec::new();
    for mask in 0u32..(1 << n) {
        let s: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).map(|i| nodes[i]).collect();
        if s.len() < 3 || s.len() > max_size || !valid(&s) {
            continue;
        }
        let maximal = nodes.iter().filter(|v| !s.contains(v)).all(|&v| {
            let mut t = s.clone();
            t.push(v);
            t.sort_unstable();
            !valid(&t)
        });
        if maximal {
            found.push(s);
        }
    }
    let set: BTreeSet<Vec<usize>> = found.into_iter().collect();
    let mut out: Vec<Vec<usize>> = set.into_iter().collect();
    out.sort_by(|a, b| b.len().cmp(&a.len()).then_with(|| a.cmp(b)));
    out
}

/// Trace of the sample covariance of the columns, computed event by event.
pub fn covariance_trace(rows: &[Vec<f64>]) -> f64 {
    let r = rows.len() as f64;
    let k = rows[0].len();
    (0..k)
        .map(|e| {
            let mean = rows.iter().map(|row| row[e]).sum::<f64>() / r;
            rows.iter().map(|row| (row[e] - mean).powi(2)).sum::<f64>() / (r - 1.0)
        })
        .sum()
}

pub fn random_matrix(rng: &mut impl Rng, r: usize, k: usize, max: u32) -> Vec<Vec<f64>> {
    (0..r)
        .map(|_| (0..k).map(|_| f64::from(rng.gen_range(0..=max))).collect())
        .collect()
}
