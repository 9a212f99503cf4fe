//! Sub-community discovery in actor × event participation data, and pivot detection inside
//! the discovered groups.
//!
//! The pipeline: load a [`ParticipationMatrix`], build a [`DecisionVariable`] (per-event
//! reference level, from a Karhunen-Loeve reconstruction or plain column means), derive each
//! actor's energy and every pair's co-energy, link pairs whose co-energy reaches a threshold,
//! then turn energies into a probability distribution and its most specific dominating
//! possibility distribution. Nodes with full possibility are the pivots.
//!
//! Everything except the eigen solver is generic over [`Scalar`], so the combinatorial parts
//! also run on exact rationals ([`Rational`]).

pub mod community;
pub mod energy;
pub mod ingest;
pub mod jacobi;
pub mod klt;
pub mod pivot;
pub mod scalar;

pub use community::{
    dense_subgroups, discover, discover_in, isolated, pivot_centered_groups, rank_subcommunities, CommunityError,
    Link, PivotGroups, SubCommunity,
};
pub use energy::{
    co_energy, energy, energy_set, energy_set_eps, overlap_tsv, pair_overlap_table, CoEnergyMatrix, EnergyAnalysis,
    EnergyError, EnergyProfile, EventSet, OverlapRecord,
};
pub use ingest::{load_csv, read_csv, row_sums, IngestError, ParticipationMatrix};
pub use klt::{decision_variable, fit, select_components, DecisionVariable, DvMethod, KltError, KltModel};
pub use pivot::{
    detect_pivots, dominance_check, energy_to_probability, order_preservation_check, parse_probabilities,
    probability_to_possibility, Dominance, PivotError, PivotReport, PivotRow, PossibilityDistribution,
    ProbabilityDistribution,
};
pub use scalar::{Real, Scalar};

/// Exact rational scalar.
pub type Rational = num_rational::Ratio<i64>;

pub type Matrix64 = ParticipationMatrix<f64>;
pub type Matrix32 = ParticipationMatrix<f32>;
pub type Distribution64 = ProbabilityDistribution<f64>;
pub type RationalDistribution = ProbabilityDistribution<Rational>;
pub type Possibility64 = PossibilityDistribution<f64>;
pub type SubCommunity64 = SubCommunity<f64>;
pub type DecisionVariable64 = DecisionVariable<f64>;
pub type KltModel64 = KltModel<f64>;
