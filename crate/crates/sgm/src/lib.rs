//! Predictive classification of categorical data with decomposable and
//! stratified graphical models.
//!
//! A stratified graphical model augments a decomposable Markov network with
//! per-edge *strata*: sets of contexts (outcomes of the edge's common
//! neighbors) under which the edge's endpoints become conditionally
//! independent. Strata merge rows of conditional probability tables, giving
//! a sparser model whose marginal likelihood still has a closed form.
//!
//! The crate provides
//!
//! - graph machinery: separation queries, decomposability tests, maximal
//!   cliques, junction trees ([`graph`]);
//! - stratified graphs and the parent-outcome merging they induce
//!   ([`strata`]);
//! - exact log-domain marginal likelihood and posterior-predictive scoring
//!   ([`score`]);
//! - greedy structure learning for graphs and strata ([`learn`]);
//! - marginal and simultaneous posterior-predictive classifiers
//!   ([`classify`]);
//! - seeded generators and dataset/model serialization ([`generate`],
//!   [`io`]);
//! - an experiment harness for success-rate sweeps, convergence studies,
//!   and per-feature-group benchmarks ([`harness`]).
//!
//! The `examples/` directory has one runnable program per capability; the
//! `sgm` binary exposes the harness on the command line.

pub mod classify;
pub mod data;
pub mod error;
pub mod generate;
pub mod graph;
pub mod harness;
pub mod io;
pub mod learn;
pub mod score;
pub mod strata;

pub use classify::{
    classify_marginal, classify_simultaneous, ClassModel, ClassificationResult, Init,
};
pub use data::{DataMatrix, LabelVector};
pub use error::{Error, Result};
pub use generate::{GeneratingModel, SyntheticSpec};
pub use graph::{Edge, JunctionTree, UndirectedGraph};
pub use learn::{learn_class_models, learn_graph, learn_strata, LearnedModel, SearchConfig};
pub use score::{graph_marginal_likelihood, HyperParams, LogScore};
pub use strata::{OutcomeSpace, ParentGrouping, StratifiedGraph, Stratum};
