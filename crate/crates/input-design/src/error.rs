//! Error types for each stage of the design pipeline.

use thiserror::Error;

/// Errors from graph construction and cycle enumeration.
#[derive(Debug, Error)]
pub enum GraphError {
    #[error("alphabet must be nonempty")]
    EmptyAlphabet,
    #[error("alphabet values must be distinct and finite (offending value {0})")]
    InvalidAlphabetValue(f64),
    #[error("memory must be at least 1")]
    ZeroMemory,
    #[error("graph would have more than {max} nodes ({requested})")]
    TooManyNodes { requested: u128, max: usize },
    #[error(
        "instance too large: {nodes} nodes exceeds the enumeration cap of {cap} \
         (elementary-cycle enumeration is bounded by O(n*(c+1)*(cycles+1)))"
    )]
    InstanceTooLarge { nodes: usize, cap: usize },
    #[error("cycle is not a cycle of the source graph (missing edge {from} -> {to})")]
    NotACycle { from: usize, to: usize },
    #[error("graphs disagree (expected alphabet/memory {expected}, got {found})")]
    GraphMismatch { expected: String, found: String },
}

/// Errors from model evaluation.
#[derive(Debug, Error)]
pub enum ModelError {
    #[error("theta0 must have {expected} entries for this model kind, got {found}")]
    ParameterDimension { expected: usize, found: usize },
    #[error("noise variance must be positive, got {0}")]
    NonPositiveNoiseVariance(f64),
    #[error("denominator polynomial is unstable (theta3={theta3}, theta4={theta4})")]
    UnstableDenominator { theta3: f64, theta4: f64 },
    #[error("non-finite value at time index {t}")]
    NonFinite { t: usize },
    #[error("signal is empty")]
    EmptySignal,
    #[error("burn-in {burn_in} leaves no samples of a length-{len} signal")]
    BurnInExceedsLength { burn_in: usize, len: usize },
}

/// Errors from information-matrix estimation.
#[derive(Debug, Error)]
pub enum FisherError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("sample count {n} is below the cycle length {cycle_len}")]
    SampleCountTooSmall { n: usize, cycle_len: usize },
    #[error("exact information matrix requires a finite-memory model (memory <= {memory})")]
    InfiniteMemoryModel { memory: usize },
    #[error("model memory {model_memory} exceeds the graph memory {memory}")]
    MemoryExceedsGraph { model_memory: usize, memory: usize },
    #[error("matrix is not positive semidefinite (min eigenvalue {min_eig})")]
    NotPositiveSemidefinite { min_eig: f64 },
    #[error("matrix is not symmetric (max asymmetry {0})")]
    NotSymmetric(f64),
    #[error("expected {expected} matrices, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
}

/// Errors from the simplex design optimizer.
#[derive(Debug, Error)]
pub enum DesignError {
    #[error("basis is empty")]
    EmptyBasis,
    #[error("weights must be length {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("weights must be nonnegative and sum to 1 (sum error {0})")]
    NotASimplexPoint(f64),
    #[error("singular design: the criterion is not finite at any feasible starting point")]
    SingularDesign,
    #[error("matrices must all be {expected}x{expected}, got {found}x{found}")]
    MatrixDimension { expected: usize, found: usize },
}

/// Errors from stationary-distribution assembly and chain simulation.
#[derive(Debug, Error)]
pub enum MarkovError {
    #[error("weight vector length {weights} does not match basis size {basis}")]
    DimensionMismatch { weights: usize, basis: usize },
    #[error("distribution has zero support")]
    ZeroSupport,
    #[error("objects were built over different graphs")]
    GraphMismatch,
    #[error("sequence length must be at least 1")]
    ZeroLength,
}
