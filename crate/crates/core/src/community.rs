//! Sub-community graphs built by thresholding co-energy.
//!
//! Two actors are linked when their co-energy reaches `alpha`. The link carries the co-energy
//! as its weight and the interval `[min(E_i, E_j), max(E_i, E_j)]` of the two actors' energies.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use rayon::prelude::*;
use thiserror::Error;

use crate::energy::{EnergyAnalysis, EnergyError};
use crate::ingest::ParticipationMatrix;
use crate::scalar::Scalar;

#[derive(Debug, Error, PartialEq)]
pub enum CommunityError {
    #[error("node subset is empty")]
    EmptySubset,
    #[error("node {index} out of range for {actors} actors")]
    NodeOutOfRange { index: usize, actors: usize },
    #[error("threshold {0} outside [0, 1]")]
    BadAlpha(f64),
    #[error("{left} sub-communities but {right} pivot counts")]
    LengthMismatch { left: usize, right: usize },
    #[error(transparent)]
    Energy(#[from] EnergyError),
}

pub const DEFAULT_DENSE_EPS: f64 = 1e-9;
pub const MIN_DENSE_SIZE: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct Link<T> {
    /// Always `i < j`.
    pub i: usize,
    pub j: usize,
    pub weight: T,
    pub lo: T,
    pub hi: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubCommunity<T> {
    pub nodes: BTreeSet<usize>,
    /// Sorted by `(i, j)`.
    pub links: Vec<Link<T>>,
    pub alpha: T,
}

impl<T: Scalar> SubCommunity<T> {
    pub fn link(&self, a: usize, b: usize) -> Option<&Link<T>> {
        let (i, j) = if a < b { (a, b) } else { (b, a) };
        self.links
            .binary_search_by(|l| (l.i, l.j).cmp(&(i, j)))
            .ok()
            .map(|pos| &self.links[pos])
    }

    pub fn neighbors(&self) -> BTreeMap<usize, BTreeSet<usize>> {
        let mut adj: BTreeMap<usize, BTreeSet<usize>> = BTreeMap::new();
        for l in &self.links {
            adj.entry(l.i).or_default().insert(l.j);
            adj.entry(l.j).or_default().insert(l.i);
        }
        adj
    }

    /// Connected components, each as its own sub-community, ordered by smallest node.
    pub fn components(&self) -> Vec<SubCommunity<T>> {
        let adj = self.neighbors();
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for &start in &self.nodes {
            if !seen.insert(start) {
                continue;
            }
            let mut nodes = BTreeSet::from([start]);
            let mut stack = vec![start];
            while let Some(u) = stack.pop() {
                for &w in adj.get(&u).into_iter().flatten() {
                    if seen.insert(w) {
                        nodes.insert(w);
                        stack.push(w);
                    }
                }
            }
            let links = self
                .links
                .iter()
                .filter(|l| nodes.contains(&l.i))
                .cloned()
                .collect();
            out.push(SubCommunity {
                nodes,
                links,
                alpha: self.alpha,
            });
        }
        out
    }

    /// Graphviz rendering; `labels` and `energies` are indexed by actor.
    pub fn to_dot(&self, labels: &[String], energies: &[T]) -> String {
        let mut out = String::from("graph subcommunity {\n");
        for &n in &self.nodes {
            let _ = writeln!(
                out,
                "  \"{}\" [energy=\"{:.2}\"];",
                escape(&labels[n]),
                energies[n].to_f64_lossy()
            );
        }
        for l in &self.links {
            let _ = writeln!(
                out,
                "  \"{}\" -- \"{}\" [label=\"{:.2}\", weight=\"{}\"];",
                escape(&labels[l.i]),
                escape(&labels[l.j]),
                l.weight.to_f64_lossy(),
                l.weight
            );
        }
        out.push_str("}\n");
        out
    }
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

/// Links every pair of `subset` (default: all actors) whose co-energy is at least `alpha`.
pub fn discover_in<T: Scalar>(
    analysis: &EnergyAnalysis<T>,
    alpha: T,
    node_subset: Option<&[usize]>,
) -> Result<SubCommunity<T>, CommunityError> {
    if !(alpha >= T::zero() && alpha <= T::one()) {
        return Err(CommunityError::BadAlpha(alpha.to_f64_lossy()));
    }
    let r = analysis.profiles.len();
    let nodes: Vec<usize> = match node_subset {
        None => (0..r).collect(),
        Some(s) => {
            let set: BTreeSet<usize> = s.iter().copied().collect();
            if let Some(&bad) = set.iter().find(|&&i| i >= r) {
                return Err(CommunityError::NodeOutOfRange { index: bad, actors: r });
            }
            set.into_iter().collect()
        }
    };
    if nodes.is_empty() {
        return Err(CommunityError::EmptySubset);
    }
    let pairs: Vec<(usize, usize)> = nodes
        .iter()
        .enumerate()
        .flat_map(|(a, &i)| nodes[a + 1..].iter().map(move |&j| (i, j)))
        .collect();
    // per-pair threshold; par_iter + collect keeps the (i, j) order
    let links: Vec<Link<T>> = pairs
        .par_iter()
        .filter_map(|&(i, j)| {
            let weight = analysis.co_energy.get(i, j);
            if weight < alpha {
                return None;
            }
            let (ei, ej) = (analysis.profiles[i].energy, analysis.profiles[j].energy);
            Some(Link {
                i,
                j,
                weight,
                lo: ei.min_of(ej),
                hi: ei.max_of(ej),
            })
        })
        .collect();
    let nodes = links.iter().flat_map(|l| [l.i, l.j]).collect();
    Ok(SubCommunity { nodes, links, alpha })
}

pub fn discover<T: Scalar>(
    m: &ParticipationMatrix<T>,
    dv: &[T],
    alpha: T,
    node_subset: Option<&[usize]>,
) -> Result<SubCommunity<T>, CommunityError> {
    let analysis = EnergyAnalysis::compute(m, dv)?;
    discover_in(&analysis, alpha, node_subset)
}

/// Actors of the analysis that have no link in `sc`.
pub fn isolated<T: Scalar>(sc: &SubCommunity<T>, n_actors: usize) -> Vec<usize> {
    (0..n_actors).filter(|i| !sc.nodes.contains(i)).collect()
}

/// Maximal cliques of at least three nodes whose link weights all agree within `eps`.
///
/// Bron-Kerbosch without pivoting over the hereditary property "clique with weight spread
/// at most `eps`". Sorted by size descending, then lexicographically.
pub fn dense_subgroups<T: Scalar>(sc: &SubCommunity<T>, eps: T) -> Vec<Vec<usize>> {
    struct Search<'a, T> {
        sc: &'a SubCommunity<T>,
        eps: T,
        out: Vec<Vec<usize>>,
    }

    impl<T: Scalar> Search<'_, T> {
        /// Weight range of `r ∪ {u}` if it is still a valid group.
        fn extend(&self, r: &[usize], range: Option<(T, T)>, u: usize) -> Option<Option<(T, T)>> {
            let mut range = range;
            for &v in r {
                let w = self.sc.link(u, v)?.weight;
                range = Some(match range {
                    None => (w, w),
                    Some((lo, hi)) => (lo.min_of(w), hi.max_of(w)),
                });
            }
            match range {
                Some((lo, hi)) if hi - lo > self.eps => None,
                _ => Some(range),
            }
        }

        fn run(&mut self, r: &mut Vec<usize>, range: Option<(T, T)>, mut p: Vec<usize>, mut x: Vec<usize>) {
            if p.is_empty() && x.is_empty() {
                if r.len() >= MIN_DENSE_SIZE {
                    let mut g = r.clone();
                    g.sort_unstable();
                    self.out.push(g);
                }
                return;
            }
            while let Some(v) = p.first().copied() {
                p.remove(0);
                if let Some(new_range) = self.extend(r, range, v) {
                    r.push(v);
                    let np = p.iter().copied().filter(|&u| self.extend(r, new_range, u).is_some()).collect();
                    let nx = x.iter().copied().filter(|&u| self.extend(r, new_range, u).is_some()).collect();
                    self.run(r, new_range, np, nx);
                    r.pop();
                }
                x.push(v);
            }
        }
    }

    let mut search = Search {
        sc,
        eps,
        out: Vec::new(),
    };
    search.run(&mut Vec::new(), None, sc.nodes.iter().copied().collect(), Vec::new());
    let mut out = search.out;
    out.sort_by(|a, b| b.len().cmp(&a.len()).then_with(|| a.cmp(b)));
    out
}

/// Sub-community indices, most pivots first; ties by node count descending, then input order.
pub fn rank_subcommunities<T: Scalar>(
    scs: &[SubCommunity<T>],
    pivot_counts: &[usize],
) -> Result<Vec<usize>, CommunityError> {
    if scs.len() != pivot_counts.len() {
        return Err(CommunityError::LengthMismatch {
            left: scs.len(),
            right: pivot_counts.len(),
        });
    }
    let mut order: Vec<usize> = (0..scs.len()).collect();
    order.sort_by(|&a, &b| {
        pivot_counts[b]
            .cmp(&pivot_counts[a])
            .then_with(|| scs[b].nodes.len().cmp(&scs[a].nodes.len()))
    });
    Ok(order)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PivotGroups {
    /// `(pivot, {pivot} ∪ neighbors)`, in ascending pivot order.
    pub groups: Vec<(usize, BTreeSet<usize>)>,
    pub pivots_linked: bool,
}

/// Splits a sub-community around pivots, provided no two pivots are linked to each other.
pub fn pivot_centered_groups<T: Scalar>(sc: &SubCommunity<T>, pivots: &BTreeSet<usize>) -> PivotGroups {
    let linked = pivots
        .iter()
        .any(|&a| pivots.iter().any(|&b| a < b && sc.link(a, b).is_some()));
    if linked {
        return PivotGroups {
            groups: Vec::new(),
            pivots_linked: true,
        };
    }
    let adj = sc.neighbors();
    let groups = pivots
        .iter()
        .map(|&p| {
            let mut g: BTreeSet<usize> = adj.get(&p).cloned().unwrap_or_default();
            g.insert(p);
            (p, g)
        })
        .collect();
    PivotGroups {
        groups,
        pivots_linked: false,
    }
}
