//! Item-based collaborative filtering, mass-diffusion style kernels and their
//! geometric hybrids on bipartite user–item graphs, with a seeded benchmark
//! harness measuring accuracy, coverage, inter-user diversity and novelty.
//!
//! The usual flow:
//!
//! 1. [`data::load`] an interaction file and [`data::split`] it by edges;
//! 2. build the training [`graph::InteractionGraph`];
//! 3. [`kernels::build_model`] a [`kernels::SimilarityModel`] for a
//!    [`kernels::KernelSpec`];
//! 4. produce top-K lists with [`recommender::recommend_all`];
//! 5. score them with [`metrics::evaluate`].
//!
//! [`experiment::run_sweep`] runs the whole pipeline over kernel families,
//! parameter grids and split seeds. See the crate's `examples/` directory for
//! one runnable program per capability.

pub mod data;
pub mod error;
pub mod experiment;
pub mod graph;
pub mod kernels;
pub mod metrics;
pub mod recommender;

pub use error::{Error, Result};
pub use graph::{build_graph, Edge, EdgeList, InteractionGraph};
pub use kernels::{build_model, Family, KernelSpec, SimilarityModel};
pub use metrics::EvalReport;
pub use recommender::{FillPolicy, RecommendationList};
