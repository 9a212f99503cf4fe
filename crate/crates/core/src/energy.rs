//! Actor energies and pairwise co-energies against a decision variable.
//!
//! An actor's energy set holds the events where its participation meets or exceeds the
//! decision variable; the energy is the size of that set over `K`. The co-energy of two actors
//! is the size of the intersection of their sets over `K`.
//!
//! Event indices are 0-based in memory and 1-based in every textual output.

use std::fmt::Write as _;

use rayon::prelude::*;
use thiserror::Error;

use crate::ingest::ParticipationMatrix;
use crate::scalar::Scalar;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EnergyError {
    #[error("row has {row} events but the decision variable has {dv}")]
    LengthMismatch { row: usize, dv: usize },
    #[error("actor index {index} out of range for {actors} actors")]
    IndexOutOfRange { index: usize, actors: usize },
    #[error("pair needs two distinct actors, got {0} twice")]
    SamePair(usize),
}

/// Sorted, duplicate-free set of 0-based event indices.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct EventSet(Vec<usize>);

impl EventSet {
    pub fn from_sorted(indices: Vec<usize>) -> Self {
        debug_assert!(indices.windows(2).all(|w| w[0] < w[1]));
        Self(indices)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, k: usize) -> bool {
        self.0.binary_search(&k).is_ok()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn intersection_len(&self, other: &EventSet) -> usize {
        let (mut a, mut b) = (self.0.iter().peekable(), other.0.iter().peekable());
        let mut n = 0;
        while let (Some(&&x), Some(&&y)) = (a.peek(), b.peek()) {
            match x.cmp(&y) {
                std::cmp::Ordering::Less => {
                    a.next();
                }
                std::cmp::Ordering::Greater => {
                    b.next();
                }
                std::cmp::Ordering::Equal => {
                    n += 1;
                    a.next();
                    b.next();
                }
            }
        }
        n
    }
}

/// Events where `x[k] + eps >= dv[k]`. With `eps = 0` the comparison is exact and ties count.
pub fn energy_set_eps<T: Scalar>(x: &[T], dv: &[T], eps: T) -> Result<EventSet, EnergyError> {
    if x.len() != dv.len() {
        return Err(EnergyError::LengthMismatch { row: x.len(), dv: dv.len() });
    }
    let idx = x
        .iter()
        .zip(dv)
        .enumerate()
        .filter(|(_, (&xk, &dk))| if eps == T::zero() { xk >= dk } else { xk + eps >= dk })
        .map(|(k, _)| k)
        .collect();
    Ok(EventSet(idx))
}

pub fn energy_set<T: Scalar>(x: &[T], dv: &[T]) -> Result<EventSet, EnergyError> {
    energy_set_eps(x, dv, T::zero())
}

pub fn energy<T: Scalar>(ed: &EventSet, k_total: usize) -> T {
    T::ratio(ed.len(), k_total)
}

pub fn co_energy<T: Scalar>(ed_i: &EventSet, ed_j: &EventSet, k_total: usize) -> T {
    T::ratio(ed_i.intersection_len(ed_j), k_total)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnergyProfile<T> {
    pub actor_index: usize,
    pub ed_set: EventSet,
    pub energy: T,
}

/// Symmetric `R×R` co-energies; the diagonal holds each actor's energy.
#[derive(Debug, Clone, PartialEq)]
pub struct CoEnergyMatrix<T> {
    n: usize,
    ced: Vec<T>,
}

impl<T: Scalar> CoEnergyMatrix<T> {
    pub fn get(&self, i: usize, j: usize) -> T {
        self.ced[i * self.n + j]
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }
}

/// Energy sets and co-energies of every actor in a matrix.
#[derive(Debug, Clone)]
pub struct EnergyAnalysis<T> {
    pub n_events: usize,
    pub profiles: Vec<EnergyProfile<T>>,
    pub co_energy: CoEnergyMatrix<T>,
}

impl<T: Scalar> EnergyAnalysis<T> {
    pub fn compute(m: &ParticipationMatrix<T>, dv: &[T]) -> Result<Self, EnergyError> {
        Self::compute_eps(m, dv, T::zero())
    }

    /// Like [`EnergyAnalysis::compute`] with an absolute tolerance on the event comparison.
    pub fn compute_eps(m: &ParticipationMatrix<T>, dv: &[T], eps: T) -> Result<Self, EnergyError> {
        let k = m.n_events();
        let profiles = m
            .rows()
            .iter()
            .enumerate()
            .map(|(i, row)| {
                let ed_set = energy_set_eps(row, dv, eps)?;
                let energy = energy(&ed_set, k);
                Ok(EnergyProfile {
                    actor_index: i,
                    ed_set,
                    energy,
                })
            })
            .collect::<Result<Vec<_>, EnergyError>>()?;
        let n = profiles.len();
        // each cell is computed independently, so the result does not depend on scheduling
        let ced = (0..n * n)
            .into_par_iter()
            .map(|idx| {
                let (i, j) = (idx / n, idx % n);
                if i == j {
                    profiles[i].energy
                } else {
                    co_energy(&profiles[i].ed_set, &profiles[j].ed_set, k)
                }
            })
            .collect();
        Ok(Self {
            n_events: k,
            profiles,
            co_energy: CoEnergyMatrix { n, ced },
        })
    }

    pub fn energies(&self) -> Vec<T> {
        self.profiles.iter().map(|p| p.energy).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OverlapRecord<T> {
    /// 1-based.
    pub event_index: usize,
    pub x_i: T,
    pub x_j: T,
    pub dv: T,
    pub both_exceed: bool,
}

/// Per-event view of two actors against the decision variable.
pub fn pair_overlap_table<T: Scalar>(
    m: &ParticipationMatrix<T>,
    dv: &[T],
    i: usize,
    j: usize,
) -> Result<Vec<OverlapRecord<T>>, EnergyError> {
    let r = m.n_actors();
    for idx in [i, j] {
        if idx >= r {
            return Err(EnergyError::IndexOutOfRange { index: idx, actors: r });
        }
    }
    if i == j {
        return Err(EnergyError::SamePair(i));
    }
    let ed_i = energy_set(m.row(i), dv)?;
    let ed_j = energy_set(m.row(j), dv)?;
    Ok((0..m.n_events())
        .map(|k| OverlapRecord {
            event_index: k + 1,
            x_i: m.get(i, k),
            x_j: m.get(j, k),
            dv: dv[k],
            both_exceed: ed_i.contains(k) && ed_j.contains(k),
        })
        .collect())
}

pub fn overlap_tsv<T: Scalar>(records: &[OverlapRecord<T>]) -> String {
    let mut out = String::from("event_index\tx_i\tx_j\tdv\tboth_exceed\n");
    for r in records {
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}",
            r.event_index, r.x_i, r.x_j, r.dv, r.both_exceed
        );
    }
    out
}
