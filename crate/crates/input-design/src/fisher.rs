//! Information-matrix estimation from gradient traces.
//!
//! Each prime cycle induces a stationary input distribution; the
//! information matrix under that distribution is estimated by averaging
//! gradient outer products over a long periodic traversal of the cycle,
//! normalized by the noise variance. For models whose memory fits inside
//! the graph window the average is replaced by an exact expectation over
//! the cycle nodes, and the two routes agree to machine precision when the
//! simulated length is a multiple of the cycle length.

use crate::debruijn::{MemoryGraph, PrimeCycle};
use crate::design::DesignWeights;
use crate::error::FisherError;
use crate::model::{ModelMemory, ModelSpec};
use crate::signal::Signal;
use nalgebra::DMatrix;

/// Provenance of an information matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InfoMatrixKind {
    PerCycle,
    Combined,
    Sampled,
}

/// A symmetric positive-semidefinite information matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct InfoMatrix {
    matrix: DMatrix<f64>,
    sample_count: usize,
    kind: InfoMatrixKind,
}

impl InfoMatrix {
    /// Symmetrize and validate a raw matrix.
    pub fn new(
        raw: DMatrix<f64>,
        sample_count: usize,
        kind: InfoMatrixKind,
    ) -> Result<Self, FisherError> {
        assert_eq!(raw.nrows(), raw.ncols(), "information matrix must be square");
        let scale = raw.iter().fold(0.0f64, |acc, &v| acc.max(v.abs())).max(1.0);
        let mut max_asym = 0.0f64;
        for i in 0..raw.nrows() {
            for j in (i + 1)..raw.ncols() {
                max_asym = max_asym.max((raw[(i, j)] - raw[(j, i)]).abs());
            }
        }
        if max_asym > 1e-12 * scale {
            return Err(FisherError::NotSymmetric(max_asym));
        }
        let matrix = (&raw + raw.transpose()) * 0.5;
        let trace = matrix.trace();
        let min_eig = matrix
            .clone()
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .fold(f64::INFINITY, |a, &b| a.min(b));
        if trace < 0.0 || min_eig < -1e-10 * trace.max(1e-300) {
            return Err(FisherError::NotPositiveSemidefinite { min_eig });
        }
        Ok(Self {
            matrix,
            sample_count,
            kind,
        })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn sample_count(&self) -> usize {
        self.sample_count
    }

    pub fn kind(&self) -> InfoMatrixKind {
        self.kind
    }
}

fn average_outer_products(
    model: &ModelSpec,
    signal: &Signal,
    kind: InfoMatrixKind,
) -> Result<InfoMatrix, FisherError> {
    let trace = model.gradient_trace(signal)?;
    let m = model.param_dim();
    let mut acc = DMatrix::<f64>::zeros(m, m);
    for psi in trace.vectors() {
        acc.ger(1.0, psi, psi, 1.0);
    }
    let norm = model.noise_variance * trace.len() as f64;
    InfoMatrix::new(acc / norm, trace.len(), kind)
}

/// Monte Carlo estimate of the per-cycle information matrix.
///
/// The requested length is raised to at least 100 cycle lengths and
/// rounded up to an exact multiple of the cycle length, which removes
/// partial-period bias; combined with the tail prefill of the cycle
/// signal, the average over a finite-memory model is then exact.
pub fn cycle_info_matrix(
    model: &ModelSpec,
    graph: &MemoryGraph,
    cycle: &PrimeCycle,
    n: usize,
) -> Result<InfoMatrix, FisherError> {
    let len = cycle.len();
    if n < len {
        return Err(FisherError::SampleCountTooSmall { n, cycle_len: len });
    }
    let n_eff = n.max(100 * len).div_ceil(len) * len;
    let signal = cycle.signal(graph, n_eff);
    average_outer_products(model, &signal, InfoMatrixKind::PerCycle)
}

/// Exact per-cycle information matrix for finite-memory models: the
/// expectation of the gradient outer product under the uniform
/// distribution on the cycle nodes.
pub fn exact_cycle_info_matrix(
    model: &ModelSpec,
    graph: &MemoryGraph,
    cycle: &PrimeCycle,
) -> Result<InfoMatrix, FisherError> {
    match model.memory() {
        ModelMemory::Infinite => {
            return Err(FisherError::InfiniteMemoryModel {
                memory: graph.memory(),
            })
        }
        ModelMemory::Finite(k) => {
            if k > graph.memory() {
                return Err(FisherError::MemoryExceedsGraph {
                    model_memory: k,
                    memory: graph.memory(),
                });
            }
        }
    }
    let no_burn_in = model.clone().with_burn_in(0);
    let m = model.param_dim();
    let mut acc = DMatrix::<f64>::zeros(m, m);
    for &node in cycle.nodes() {
        let values = graph.node_values(node);
        let (last, history) = values.split_last().expect("memory >= 1");
        let window = Signal::with_prefill(vec![*last], history.to_vec());
        let trace = no_burn_in.gradient_trace(&window)?;
        let psi = &trace.vectors()[0];
        acc.ger(1.0, psi, psi, 1.0);
    }
    let norm = model.noise_variance * cycle.len() as f64;
    InfoMatrix::new(acc / norm, cycle.len(), InfoMatrixKind::PerCycle)
}

/// Per-cycle matrices for a whole basis, exact when the model memory fits
/// in the graph window and Monte Carlo otherwise.
pub fn basis_info_matrices(
    model: &ModelSpec,
    basis: &crate::debruijn::CycleBasis,
    mc_length: usize,
) -> Result<Vec<InfoMatrix>, FisherError> {
    let exact = match model.memory() {
        ModelMemory::Finite(k) => k <= basis.graph().memory(),
        ModelMemory::Infinite => false,
    };
    basis
        .cycles()
        .iter()
        .map(|cycle| {
            if exact {
                exact_cycle_info_matrix(model, basis.graph(), cycle)
            } else {
                cycle_info_matrix(model, basis.graph(), cycle, mc_length)
            }
        })
        .collect()
}

/// Convex combination of basis matrices under simplex weights.
pub fn combine(basis: &[InfoMatrix], weights: &DesignWeights) -> Result<InfoMatrix, FisherError> {
    if basis.len() != weights.len() {
        return Err(FisherError::DimensionMismatch {
            expected: weights.len(),
            found: basis.len(),
        });
    }
    let m = basis[0].dim();
    let mut acc = DMatrix::<f64>::zeros(m, m);
    for (mat, &alpha) in basis.iter().zip(weights.alpha()) {
        if mat.dim() != m {
            return Err(FisherError::DimensionMismatch {
                expected: m,
                found: mat.dim(),
            });
        }
        acc += mat.matrix() * alpha;
    }
    let samples = basis.iter().map(|m| m.sample_count()).min().unwrap_or(0);
    InfoMatrix::new(acc, samples, InfoMatrixKind::Combined)
}

/// The same estimator as [`cycle_info_matrix`] applied to an arbitrary
/// realization.
pub fn sampled_info_matrix(model: &ModelSpec, signal: &Signal) -> Result<InfoMatrix, FisherError> {
    average_outer_products(model, signal, InfoMatrixKind::Sampled)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::debruijn::{Alphabet, CycleBasis};
    use crate::error::ModelError;
    use crate::model::ExternalModel;
    use nalgebra::DVector;
    use std::sync::Arc;

    fn graph(values: &[f64], memory: usize) -> MemoryGraph {
        MemoryGraph::new(Alphabet::new(values.to_vec()).unwrap(), memory).unwrap()
    }

    fn fir() -> ModelSpec {
        ModelSpec::nonlinear_fir([1.0, 0.5, -0.3, 0.2], 1.0).unwrap()
    }

    /// Static gain: psi_t = u_t.
    struct StaticGain;
    impl ExternalModel for StaticGain {
        fn param_dim(&self) -> usize {
            1
        }
        fn memory(&self) -> ModelMemory {
            ModelMemory::Finite(1)
        }
        fn gradient_trace(&self, signal: &Signal) -> Result<Vec<DVector<f64>>, ModelError> {
            Ok(signal
                .samples()
                .iter()
                .map(|&u| DVector::from_vec(vec![u]))
                .collect())
        }
    }

    #[test]
    fn static_gain_unit_self_loop_is_one() {
        let g = graph(&[0.0, 1.0], 2);
        let cycle = PrimeCycle::new(vec![g.node_from_digits(&[1, 1])]);
        let model = ModelSpec::external(Arc::new(StaticGain), 1.0, 0).unwrap();
        let info = cycle_info_matrix(&model, &g, &cycle, 100).unwrap();
        assert_eq!(info.dim(), 1);
        assert!((info.matrix()[(0, 0)] - 1.0).abs() < 1e-15);
        let exact = exact_cycle_info_matrix(&model, &g, &cycle).unwrap();
        assert!((exact.matrix()[(0, 0)] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn alternating_cycle_half_pattern() {
        let g = graph(&[0.0, 1.0], 2);
        let cycle = PrimeCycle::new(vec![
            g.node_from_digits(&[0, 1]),
            g.node_from_digits(&[1, 0]),
        ]);
        let info = exact_cycle_info_matrix(&fir(), &g, &cycle).unwrap();
        let half = [(0, 0), (0, 2), (2, 0), (2, 2), (1, 1), (1, 3), (3, 1), (3, 3)];
        for i in 0..4 {
            for j in 0..4 {
                let want = if half.contains(&(i, j)) { 0.5 } else { 0.0 };
                assert!(
                    (info.matrix()[(i, j)] - want).abs() < 1e-15,
                    "entry ({i},{j})"
                );
            }
        }
    }

    #[test]
    fn unit_self_loop_all_ones_and_zero_loop_zero() {
        let g = graph(&[0.0, 1.0], 2);
        let ones = PrimeCycle::new(vec![g.node_from_digits(&[1, 1])]);
        let info = exact_cycle_info_matrix(&fir(), &g, &ones).unwrap();
        assert!(info.matrix().iter().all(|&v| (v - 1.0).abs() < 1e-15));
        let zeros = PrimeCycle::new(vec![g.node_from_digits(&[0, 0])]);
        let info = exact_cycle_info_matrix(&fir(), &g, &zeros).unwrap();
        assert!(info.matrix().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn monte_carlo_matches_exact_for_finite_memory() {
        let g = graph(&[-1.0, 0.0, 1.0], 2);
        let basis = CycleBasis::enumerate(&g).unwrap();
        let model = fir();
        for cycle in basis.cycles() {
            let exact = exact_cycle_info_matrix(&model, &g, cycle).unwrap();
            let mc = cycle_info_matrix(&model, &g, cycle, 5000).unwrap();
            let diff = (exact.matrix() - mc.matrix()).abs().max();
            assert!(diff <= 1e-12, "cycle {:?}: diff {diff}", cycle.nodes());
        }
    }

    #[test]
    fn noise_variance_scales_inversely() {
        let g = graph(&[0.0, 1.0], 2);
        let cycle = PrimeCycle::new(vec![
            g.node_from_digits(&[0, 1]),
            g.node_from_digits(&[1, 0]),
        ]);
        let m1 = exact_cycle_info_matrix(&fir(), &g, &cycle).unwrap();
        let mut doubled = fir();
        doubled.noise_variance = 2.0;
        let m2 = exact_cycle_info_matrix(&doubled, &g, &cycle).unwrap();
        for (a, b) in m1.matrix().iter().zip(m2.matrix().iter()) {
            assert_eq!(a / 2.0, *b);
        }
    }

    #[test]
    fn combine_selects_and_mixes() {
        let a = InfoMatrix::new(
            DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 0.0])),
            1,
            InfoMatrixKind::PerCycle,
        )
        .unwrap();
        let b = InfoMatrix::new(
            DMatrix::from_diagonal(&DVector::from_vec(vec![0.0, 1.0])),
            1,
            InfoMatrixKind::PerCycle,
        )
        .unwrap();
        let e1 = DesignWeights::new(vec![1.0, 0.0]).unwrap();
        let picked = combine(&[a.clone(), b.clone()], &e1).unwrap();
        assert_eq!(picked.matrix(), a.matrix());
        let even = DesignWeights::new(vec![0.5, 0.5]).unwrap();
        let mixed = combine(&[a, b], &even).unwrap();
        assert_eq!(mixed.matrix()[(0, 0)], 0.5);
        assert_eq!(mixed.matrix()[(1, 1)], 0.5);
        assert_eq!(mixed.matrix()[(0, 1)], 0.0);
    }

    #[test]
    fn combine_rejects_length_mismatch() {
        let a = InfoMatrix::new(DMatrix::identity(2, 2), 1, InfoMatrixKind::PerCycle).unwrap();
        let w = DesignWeights::new(vec![0.5, 0.5]).unwrap();
        assert!(matches!(
            combine(&[a], &w),
            Err(FisherError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn sampled_equals_cycle_estimate_on_cycle_signal() {
        let g = graph(&[-1.0, 0.0, 1.0], 2);
        let cycle = PrimeCycle::new(vec![
            g.node_from_digits(&[0, 2]),
            g.node_from_digits(&[2, 0]),
        ]);
        let model = fir();
        let from_cycle = cycle_info_matrix(&model, &g, &cycle, 500).unwrap();
        let signal = cycle.signal(&g, 500);
        let sampled = sampled_info_matrix(&model, &signal).unwrap();
        assert_eq!(from_cycle.matrix(), sampled.matrix());
    }

    #[test]
    fn zero_signal_gives_zero_matrix() {
        let sampled = sampled_info_matrix(&fir(), &Signal::new(vec![0.0; 64])).unwrap();
        assert!(sampled.matrix().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn rejects_sample_count_below_cycle_length() {
        let g = graph(&[0.0, 1.0], 2);
        let cycle = PrimeCycle::new(vec![
            g.node_from_digits(&[0, 1]),
            g.node_from_digits(&[1, 0]),
        ]);
        assert!(matches!(
            cycle_info_matrix(&fir(), &g, &cycle, 1),
            Err(FisherError::SampleCountTooSmall { .. })
        ));
    }

    #[test]
    fn exact_rejects_infinite_memory() {
        let g = graph(&[-1.0, 1.0], 2);
        let cycle = PrimeCycle::new(vec![g.node_from_digits(&[1, 1])]);
        let oe = ModelSpec::output_error([4.86e-3, 4.75e-3, -1.84, 0.94], 1e-4).unwrap();
        assert!(matches!(
            exact_cycle_info_matrix(&oe, &g, &cycle),
            Err(FisherError::InfiniteMemoryModel { .. })
        ));
    }

    #[test]
    fn non_psd_matrix_is_rejected() {
        let raw = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        assert!(matches!(
            InfoMatrix::new(raw, 1, InfoMatrixKind::Sampled),
            Err(FisherError::NotPositiveSemidefinite { .. })
        ));
    }
}
