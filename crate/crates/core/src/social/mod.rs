//! Offline social network construction: Gamma fits of contact durations,
//! pairwise closeness and threshold clustering.

mod gamma;
mod graph;

pub use gamma::{
    closeness, contact_pdf, fit_gamma, fit_moments, ln_gamma, regularized_lower_incomplete_gamma, DurationModel,
    GammaParams,
};
pub use graph::{build_closeness_graph, build_offsn, ClosenessGraph, OffsnPartition, GRAPH_HEADER};
