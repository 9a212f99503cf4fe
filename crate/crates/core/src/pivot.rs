//! Pivot detection through the optimal probability-to-possibility transformation.
//!
//! Node energies are normalized into a probability distribution `p`. The most specific
//! possibility distribution that dominates `p` and preserves its strict order is
//!
//! ```text
//! π_i = Σ_{j : p_j ≤ p_i} p_j
//! ```
//!
//! which equals the maximum, over every linear extension of the order induced by `p`, of the
//! cumulative mass up to and including `i`. Nodes whose possibility reaches `delta` are pivots.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Error, PartialEq)]
pub enum PivotError {
    #[error("all energies are zero; no probability distribution exists")]
    DegenerateCommunity,
    #[error("negative or non-finite entry {value} at position {index}")]
    InvalidEntry { index: usize, value: String },
    #[error("probabilities sum to {0}, expected 1")]
    NotNormalized(f64),
    #[error("vectors of different length ({left} vs {right})")]
    LengthMismatch { left: usize, right: usize },
    #[error("empty distribution")]
    Empty,
    #[error("threshold {0} outside (0, 1]")]
    BadDelta(f64),
    #[error("probability input: {0}")]
    Parse(String),
}

/// Slack on `Σp = 1`, on dominance, and on the pivot threshold.
pub const TOLERANCE: f64 = 1e-9;
/// Slack on `Σp = 1` for vectors read from files; larger deviations are renormalized.
pub const INPUT_SUM_TOLERANCE: f64 = 1e-6;
pub const DEFAULT_DELTA: f64 = 1.0;
/// Largest distribution checked over every subset.
pub const EXHAUSTIVE_LIMIT: usize = 20;

#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityDistribution<T>(Vec<T>);

impl<T: Scalar> ProbabilityDistribution<T> {
    /// Validates nonnegativity and `Σp = 1` within [`TOLERANCE`].
    pub fn new(p: Vec<T>) -> Result<Self, PivotError> {
        if p.is_empty() {
            return Err(PivotError::Empty);
        }
        check_entries(&p)?;
        let sum: T = p.iter().copied().sum();
        if (sum - T::one()).abs() > T::from_f64_lossy(TOLERANCE) {
            return Err(PivotError::NotNormalized(sum.to_f64_lossy()));
        }
        Ok(Self(p))
    }

    pub fn as_slice(&self) -> &[T] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PossibilityDistribution<T>(Vec<T>);

impl<T: Scalar> PossibilityDistribution<T> {
    pub fn new(pi: Vec<T>) -> Self {
        Self(pi)
    }

    pub fn as_slice(&self) -> &[T] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Possibility measure of a set of nodes: the largest degree among them.
    pub fn measure(&self, subset: &[usize]) -> T {
        subset.iter().map(|&i| self.0[i]).fold(T::zero(), T::max_of)
    }
}

fn check_entries<T: Scalar>(v: &[T]) -> Result<(), PivotError> {
    for (index, &x) in v.iter().enumerate() {
        let finite = x.to_f64().is_some_and(f64::is_finite);
        if !finite || x < T::zero() {
            return Err(PivotError::InvalidEntry {
                index,
                value: x.to_string(),
            });
        }
    }
    Ok(())
}

/// `p_i = E_i / Σ_j E_j`.
pub fn energy_to_probability<T: Scalar>(energies: &[T]) -> Result<ProbabilityDistribution<T>, PivotError> {
    if energies.is_empty() {
        return Err(PivotError::Empty);
    }
    check_entries(energies)?;
    let total: T = energies.iter().copied().sum();
    if total <= T::zero() {
        return Err(PivotError::DegenerateCommunity);
    }
    Ok(ProbabilityDistribution(energies.iter().map(|&e| e / total).collect()))
}

fn cmp<T: Scalar>(a: T, b: T) -> Ordering {
    a.partial_cmp(&b).unwrap_or(Ordering::Equal)
}

/// Most specific order-preserving possibility distribution dominating `p`.
pub fn probability_to_possibility<T: Scalar>(p: &ProbabilityDistribution<T>) -> PossibilityDistribution<T> {
    let p = p.as_slice();
    let mut order: Vec<usize> = (0..p.len()).collect();
    order.sort_by(|&a, &b| cmp(p[a], p[b]));
    let mut pi = vec![T::zero(); p.len()];
    let mut acc = T::zero();
    let mut start = 0;
    // one tie class at a time: every member gets the mass up to the end of its class
    while start < order.len() {
        let value = p[order[start]];
        let mut end = start;
        while end < order.len() && p[order[end]] == value {
            acc += p[order[end]];
            end += 1;
        }
        for &i in &order[start..end] {
            pi[i] = acc;
        }
        start = end;
    }
    PossibilityDistribution(pi)
}

/// Nodes with `π_i ≥ delta - TOLERANCE`.
pub fn detect_pivots<T: Scalar>(pi: &PossibilityDistribution<T>, delta: T) -> Result<BTreeSet<usize>, PivotError> {
    if !(delta > T::zero() && delta <= T::one()) {
        return Err(PivotError::BadDelta(delta.to_f64_lossy()));
    }
    let cut = delta - T::from_f64_lossy(TOLERANCE);
    Ok(pi
        .as_slice()
        .iter()
        .enumerate()
        .filter(|(_, &v)| v >= cut)
        .map(|(i, _)| i)
        .collect())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dominance {
    pub holds: bool,
    /// First subset found with `P(A) > Π(A)`, as sorted 0-based node indices.
    pub violation: Option<Vec<usize>>,
}

/// Checks `P(A) ≤ Π(A)` for every nonempty subset `A`.
///
/// Up to [`EXHAUSTIVE_LIMIT`] nodes every subset is enumerated in increasing bitmask order.
/// Beyond that the check uses the exact reduction: for each node `i` the worst subset with
/// `Π(A) = π_i` is `{j : π_j ≤ π_i}`.
pub fn dominance_check<T: Scalar>(
    p: &ProbabilityDistribution<T>,
    pi: &PossibilityDistribution<T>,
) -> Result<Dominance, PivotError> {
    let (p, pi) = (p.as_slice(), pi.as_slice());
    if p.len() != pi.len() {
        return Err(PivotError::LengthMismatch {
            left: p.len(),
            right: pi.len(),
        });
    }
    let tol = T::from_f64_lossy(TOLERANCE);
    let n = p.len();
    if n <= EXHAUSTIVE_LIMIT {
        for mask in 1u32..(1u32 << n) {
            let mut mass = T::zero();
            let mut poss = T::zero();
            for i in (0..n).filter(|i| mask & (1 << i) != 0) {
                mass += p[i];
                poss = poss.max_of(pi[i]);
            }
            if mass > poss + tol {
                let subset = (0..n).filter(|i| mask & (1 << i) != 0).collect();
                return Ok(Dominance {
                    holds: false,
                    violation: Some(subset),
                });
            }
        }
    } else {
        for i in 0..n {
            let subset: Vec<usize> = (0..n).filter(|&j| pi[j] <= pi[i]).collect();
            let mass: T = subset.iter().map(|&j| p[j]).sum();
            if mass > pi[i] + tol {
                return Ok(Dominance {
                    holds: false,
                    violation: Some(subset),
                });
            }
        }
    }
    Ok(Dominance {
        holds: true,
        violation: None,
    })
}

/// Dominance on `samples` random subsets; a cheap spot check for very large distributions.
pub fn dominance_sampled<T: Scalar>(
    p: &ProbabilityDistribution<T>,
    pi: &PossibilityDistribution<T>,
    samples: usize,
    seed: u64,
) -> Result<Dominance, PivotError> {
    let (p, pi) = (p.as_slice(), pi.as_slice());
    if p.len() != pi.len() {
        return Err(PivotError::LengthMismatch {
            left: p.len(),
            right: pi.len(),
        });
    }
    let tol = T::from_f64_lossy(TOLERANCE);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..samples {
        let subset: Vec<usize> = (0..p.len()).filter(|_| rng.gen_bool(0.5)).collect();
        if subset.is_empty() {
            continue;
        }
        let mass: T = subset.iter().map(|&i| p[i]).sum();
        let poss = subset.iter().map(|&i| pi[i]).fold(T::zero(), T::max_of);
        if mass > poss + tol {
            return Ok(Dominance {
                holds: false,
                violation: Some(subset),
            });
        }
    }
    Ok(Dominance {
        holds: true,
        violation: None,
    })
}

/// `sign(p_i - p_j) = sign(π_i - π_j)` for every pair, ties included.
pub fn order_preservation_check<T: Scalar>(p: &[T], pi: &[T]) -> Result<bool, PivotError> {
    if p.len() != pi.len() {
        return Err(PivotError::LengthMismatch {
            left: p.len(),
            right: pi.len(),
        });
    }
    let n = p.len();
    Ok((0..n).all(|i| (0..n).all(|j| p[i].partial_cmp(&p[j]) == pi[i].partial_cmp(&pi[j]))))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PivotRow<T> {
    pub id: String,
    /// Total participation; absent when the distribution was supplied directly.
    pub nbe: Option<T>,
    pub p: T,
    pub pi: T,
    pub is_pivot: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PivotReport<T> {
    pub rows: Vec<PivotRow<T>>,
    pub delta: T,
}

impl<T: Scalar> PivotReport<T> {
    pub fn build(
        ids: &[String],
        nbe: Option<&[T]>,
        p: &ProbabilityDistribution<T>,
        delta: T,
    ) -> Result<Self, PivotError> {
        if ids.len() != p.len() {
            return Err(PivotError::LengthMismatch {
                left: ids.len(),
                right: p.len(),
            });
        }
        let pi = probability_to_possibility(p);
        let pivots = detect_pivots(&pi, delta)?;
        let rows = ids
            .iter()
            .enumerate()
            .map(|(i, id)| PivotRow {
                id: id.clone(),
                nbe: nbe.map(|v| v[i]),
                p: p.as_slice()[i],
                pi: pi.as_slice()[i],
                is_pivot: pivots.contains(&i),
            })
            .collect();
        Ok(Self { rows, delta })
    }

    pub fn pivots(&self) -> BTreeSet<usize> {
        self.rows
            .iter()
            .enumerate()
            .filter(|(_, r)| r.is_pivot)
            .map(|(i, _)| i)
            .collect()
    }

    /// Columns `id, nbe, p, pi, pivot, p_full, pi_full`; two decimals, then full precision.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("id\tnbe\tp\tpi\tpivot\tp_full\tpi_full\n");
        for r in &self.rows {
            let nbe = r.nbe.map(|v| v.to_string()).unwrap_or_default();
            out.push_str(&format!(
                "{}\t{}\t{:.2}\t{:.2}\t{}\t{}\t{}\n",
                r.id,
                nbe,
                r.p.to_f64_lossy(),
                r.pi.to_f64_lossy(),
                if r.is_pivot { "Y" } else { "N" },
                r.p,
                r.pi
            ));
        }
        out
    }
}

/// Probability vector read from text, with a note when it had to be renormalized.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedProbabilities<T> {
    pub distribution: ProbabilityDistribution<T>,
    pub renormalized_from: Option<f64>,
}

/// Parses a single CSV row or single column of nonnegative reals.
///
/// A sum within [`INPUT_SUM_TOLERANCE`] of 1 is accepted as is (then rescaled exactly);
/// any other positive sum is renormalized and reported through `renormalized_from`.
pub fn parse_probabilities<T: Scalar + FromStr>(text: &str) -> Result<ParsedProbabilities<T>, PivotError> {
    let lines: Vec<&str> = text.lines().map(str::trim).filter(|l| !l.is_empty()).collect();
    let cells: Vec<&str> = match lines.as_slice() {
        [] => return Err(PivotError::Empty),
        [single] => single.split(',').map(str::trim).collect(),
        many => {
            if many.iter().any(|l| l.contains(',')) {
                return Err(PivotError::Parse(
                    "expected a single row or a single column of values".into(),
                ));
            }
            many.to_vec()
        }
    };
    let mut values = Vec::with_capacity(cells.len());
    for (index, cell) in cells.iter().enumerate() {
        let v: T = cell
            .parse()
            .map_err(|_| PivotError::Parse(format!("`{cell}` at position {} is not a number", index + 1)))?;
        values.push(v);
    }
    check_entries(&values)?;
    let sum: T = values.iter().copied().sum();
    if sum <= T::zero() {
        return Err(PivotError::DegenerateCommunity);
    }
    let off = (sum - T::one()).abs() > T::from_f64_lossy(INPUT_SUM_TOLERANCE);
    let scaled: Vec<T> = values.iter().map(|&v| v / sum).collect();
    Ok(ParsedProbabilities {
        distribution: ProbabilityDistribution::new(scaled)?,
        renormalized_from: off.then(|| sum.to_f64_lossy()),
    })
}
