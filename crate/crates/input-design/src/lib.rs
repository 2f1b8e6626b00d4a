//! Design of amplitude-constrained excitation signals for system
//! identification.
//!
//! The input is restricted to a finite set of levels and modeled as a
//! stationary process with finite memory. Stationary processes over the
//! level set form a polytope whose extreme points are the uniform
//! distributions carried by the prime cycles of a de Bruijn graph of input
//! windows, so any stationary design is a convex combination of a finite
//! cycle basis. Each basis element gets an information matrix estimated
//! from a periodic traversal of its cycle; a concave scalar criterion of
//! the combined matrix is then maximized over the simplex of weights, and
//! the optimal weights are realized as a stationary Markov chain whose
//! sample paths are the designed input signals.
//!
//! The pipeline in order:
//!
//! 1. [`debruijn`] builds the memory graph, enumerates its elementary
//!    cycles and lifts them to the prime-cycle basis;
//! 2. [`model`] maps input signals to predictor gradient traces;
//! 3. [`fisher`] turns traces into per-cycle information matrices;
//! 4. [`design`] maximizes a D or A criterion over the simplex with a
//!    Frank-Wolfe scheme carrying a duality-gap certificate;
//! 5. [`markov`] assembles the stationary distribution, builds a
//!    transition matrix fixing it exactly, and samples realizations;
//! 6. [`pipeline`] wires everything behind a JSON-configured batch
//!    front end with reproducible file artifacts.
//!
//! See the `examples/` directory for one runnable program per stage.

pub mod debruijn;
pub mod design;
pub mod error;
pub mod fisher;
pub mod markov;
pub mod model;
pub mod pipeline;
pub mod signal;

pub use debruijn::{Alphabet, CycleBasis, ElementaryCycle, MemoryGraph, PrimeCycle};
pub use design::{criterion_value, optimize, Criterion, DesignResult, DesignWeights};
pub use fisher::{
    basis_info_matrices, combine, cycle_info_matrix, exact_cycle_info_matrix,
    sampled_info_matrix, InfoMatrix,
};
pub use markov::{
    assemble_stationary, build_transition_matrix, generate_sequence, StationaryDistribution,
    TransitionMatrix,
};
pub use model::{ExternalModel, GradientTrace, ModelKind, ModelMemory, ModelSpec};
pub use signal::Signal;
