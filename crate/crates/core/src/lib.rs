//! Transition-entropy analysis of gate-level netlists.
//!
//! The crate bundles everything needed to hunt for low-activity logic in a
//! sequential circuit: an ISCAS-89 style `.bench` parser, a deterministic
//! cycle-based two-valued simulator, waveform transition encoding, empirical
//! entropy and mutual-information estimators, 1-D DBSCAN over the per-wire
//! entropy space, mutual-information-driven constrained-random stimulus
//! selection, and TPR/TNR scoring against labeled wire lists.
//!
//! Numeric code is generic over the scalar type via [`Real`] (any
//! `num_traits::Float`, in practice `f32` or `f64`); the `*64` aliases at the
//! crate root pin the `f64` instantiations the CLI uses.

pub mod bits;
pub mod cluster;
pub mod eval;
pub mod infotheory;
pub mod netlist;
pub mod rng;
pub mod simulator;
pub mod store;
pub mod testgen;
pub mod waveform;

mod real;

pub use real::Real;

/// `f64` instantiations used throughout the CLI and reports.
pub type EntropyRecord64 = infotheory::EntropyRecord<f64>;
pub type ClusterParams64 = cluster::ClusterParams<f64>;
pub type Clustering64 = cluster::Clustering<f64>;
pub type SuspectSet64 = cluster::SuspectSet<f64>;
pub type CorrelationList64 = testgen::StrongCorrelationList<f64>;
pub type EvalMetrics64 = eval::EvalMetrics<f64>;
