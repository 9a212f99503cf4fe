//! Karhunen-Loeve model over events and the decision variable built from it.
//!
//! The event covariance `C = Xcᵀ Xc / (R-1)` is `K×K`, but it shares its nonzero spectrum with
//! the `R×R` Gram matrix `G = Xc Xcᵀ / (R-1)`. We diagonalize `G` and lift each eigenvector `u`
//! to event space as `Xcᵀ u / sqrt((R-1) λ)`, so the cost never involves a dense `K×K` solve.

use std::fmt::Write as _;

use thiserror::Error;

use crate::ingest::ParticipationMatrix;
use crate::jacobi::{self, EigenError};
use crate::scalar::Real;

#[derive(Debug, Error, PartialEq)]
pub enum KltError {
    #[error("covariance needs at least two actors, got {0}")]
    DegenerateMatrix(usize),
    #[error(transparent)]
    Eigen(#[from] EigenError),
    #[error("variance fraction {0} outside [0, 1]")]
    BadBeta(f64),
}

/// Eigenvalues below this fraction of the largest are treated as zero.
pub const EIGEN_CLAMP: f64 = 1e-12;
pub const DEFAULT_BETA: f64 = 0.95;

#[derive(Debug, Clone)]
pub struct KltModel<T> {
    /// Per-event mean over actors.
    pub mean: Vec<T>,
    /// Nonincreasing, nonnegative; `min(R-1, K)` entries.
    pub eigenvalues: Vec<T>,
    /// Orthonormal event-space basis, one per strictly positive eigenvalue.
    pub components: Vec<Vec<T>>,
    /// Cumulative explained variance per eigenvalue, ending at exactly 1 (all zero if no variance).
    pub variance_fractions: Vec<T>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DvMethod {
    Klt,
    ColumnMean,
}

impl DvMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            DvMethod::Klt => "klt",
            DvMethod::ColumnMean => "column-mean",
        }
    }
}

impl std::str::FromStr for DvMethod {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "klt" => Ok(DvMethod::Klt),
            "column-mean" => Ok(DvMethod::ColumnMean),
            other => Err(format!("unknown dv method `{other}` (expected klt or column-mean)")),
        }
    }
}

/// Reference level per event that actor participation is compared against.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionVariable<T> {
    pub dv: Vec<T>,
    pub method: DvMethod,
    /// Components used in the reconstruction; 0 for the column-mean method.
    pub retained: usize,
    pub beta: T,
}

impl<T: Real> DecisionVariable<T> {
    /// Wraps an externally supplied reference vector.
    pub fn column_mean_of(dv: Vec<T>) -> Self {
        Self {
            dv,
            method: DvMethod::ColumnMean,
            retained: 0,
            beta: T::zero(),
        }
    }

    pub fn len(&self) -> usize {
        self.dv.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dv.is_empty()
    }
}

fn centered<T: Real>(m: &ParticipationMatrix<T>, mean: &[T]) -> Vec<Vec<T>> {
    m.rows()
        .iter()
        .map(|row| row.iter().zip(mean).map(|(&x, &mu)| x - mu).collect())
        .collect()
}

fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

pub fn fit<T: Real>(m: &ParticipationMatrix<T>) -> Result<KltModel<T>, KltError> {
    let r = m.n_actors();
    let k = m.n_events();
    if r < 2 {
        return Err(KltError::DegenerateMatrix(r));
    }
    let mean = m.column_means();
    let xc = centered(m, &mean);
    let denom = T::from_count(r - 1);

    let gram: Vec<Vec<T>> = (0..r)
        .map(|i| (0..r).map(|j| dot(&xc[i], &xc[j]) / denom).collect())
        .collect();
    let eig = jacobi::symmetric_eigen(&gram, T::from_f64_lossy(jacobi::DEFAULT_TOLERANCE))?;

    let keep = (r - 1).min(k);
    let largest = eig.values.first().copied().unwrap_or_else(T::zero).max(T::zero());
    let floor = largest * T::from_f64_lossy(EIGEN_CLAMP);
    let eigenvalues: Vec<T> = eig
        .values
        .iter()
        .take(keep)
        .map(|&l| if l <= floor || l <= T::zero() { T::zero() } else { l })
        .collect();

    let mut components = Vec::new();
    for (lambda, u) in eigenvalues.iter().zip(&eig.vectors) {
        if *lambda <= T::zero() {
            break;
        }
        let scale = (denom * *lambda).sqrt();
        let mut v: Vec<T> = (0..k)
            .map(|kk| (0..r).fold(T::zero(), |acc, i| acc + xc[i][kk] * u[i]) / scale)
            .collect();
        // renormalize against rounding in the lift
        let norm = dot(&v, &v).sqrt();
        v.iter_mut().for_each(|x| *x = *x / norm);
        fix_sign(&mut v);
        components.push(v);
    }

    let total: T = eigenvalues.iter().copied().sum();
    let mut variance_fractions = Vec::with_capacity(eigenvalues.len());
    let mut acc = T::zero();
    for &l in &eigenvalues {
        acc += l;
        variance_fractions.push(if total > T::zero() { acc / total } else { T::zero() });
    }
    if total > T::zero() {
        if let Some(last) = variance_fractions.last_mut() {
            *last = T::one();
        }
    }

    Ok(KltModel {
        mean,
        eigenvalues,
        components,
        variance_fractions,
    })
}

/// Flips `v` so its largest-magnitude entry (first one on ties) is positive.
fn fix_sign<T: Real>(v: &mut [T]) {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    if v.get(best).is_some_and(|x| *x < T::zero()) {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

/// Smallest number of leading components whose cumulative variance fraction reaches `beta`.
pub fn select_components<T: Real>(model: &KltModel<T>, beta: T) -> usize {
    if model.eigenvalues.iter().all(|l| *l <= T::zero()) {
        return 0;
    }
    let m = model
        .variance_fractions
        .iter()
        .position(|&f| f >= beta)
        .map_or(model.variance_fractions.len(), |i| i + 1);
    m.clamp(1, model.components.len())
}

impl<T: Real> KltModel<T> {
    /// Rows rebuilt from the mean plus the top `retained` components.
    pub fn reconstruct(&self, m: &ParticipationMatrix<T>, retained: usize) -> Vec<Vec<T>> {
        let comps = &self.components[..retained.min(self.components.len())];
        m.rows()
            .iter()
            .map(|row| {
                let c: Vec<T> = row.iter().zip(&self.mean).map(|(&x, &mu)| x - mu).collect();
                let mut out = self.mean.clone();
                for v in comps {
                    let score = dot(&c, v);
                    out.iter_mut().zip(v).for_each(|(o, &vk)| *o += score * vk);
                }
                out
            })
            .collect()
    }

    /// Eigenvalue table with columns `index, eigenvalue, cumulative_fraction` (1-based index).
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("index\teigenvalue\tcumulative_fraction\n");
        for (i, (l, f)) in self.eigenvalues.iter().zip(&self.variance_fractions).enumerate() {
            let _ = writeln!(out, "{}\t{}\t{}", i + 1, l, f);
        }
        out
    }
}

pub fn decision_variable<T: Real>(
    m: &ParticipationMatrix<T>,
    method: DvMethod,
    beta: T,
) -> Result<DecisionVariable<T>, KltError> {
    if !(beta >= T::zero() && beta <= T::one()) {
        return Err(KltError::BadBeta(beta.to_f64_lossy()));
    }
    match method {
        DvMethod::ColumnMean => Ok(DecisionVariable {
            dv: m.column_means(),
            method,
            retained: 0,
            beta,
        }),
        DvMethod::Klt => {
            let model = fit(m)?;
            let retained = select_components(&model, beta);
            let rec = model.reconstruct(m, retained);
            let r = T::from_count(m.n_actors());
            let dv = (0..m.n_events())
                .map(|k| rec.iter().map(|row| row[k]).sum::<T>() / r)
                .collect();
            Ok(DecisionVariable {
                dv,
                method,
                retained,
                beta,
            })
        }
    }
}
