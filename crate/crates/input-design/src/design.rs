//! Concave design criteria over the simplex of cycle weights.
//!
//! The combined information matrix is linear in the weights, so maximizing
//! a concave matrix criterion over the probability simplex is a convex
//! problem. It is solved with a Frank-Wolfe scheme: the linear oracle over
//! the simplex is vertex selection, the duality gap doubles as a free
//! optimality certificate, and an away step is taken whenever it promises
//! more ascent than the forward step (plain forward steps stall at
//! sublinear rates once the solution sits on a face).

use crate::error::DesignError;
use crate::fisher::InfoMatrix;
use nalgebra::{Cholesky, DMatrix};
use serde::{Deserialize, Serialize};

/// Scalar criterion of the information matrix to maximize.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Criterion {
    /// Maximize `log det M`; reported as `det M`.
    D,
    /// Maximize `-tr(M^{-1})`; reported as `tr(M^{-1})`.
    A,
}

impl Criterion {
    /// Conventional reported form of an objective value: determinant for
    /// the D criterion, inverse trace for the A criterion.
    pub fn reported(self, objective: f64) -> f64 {
        match self {
            Criterion::D => objective.exp(),
            Criterion::A => -objective,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Criterion::D => "det",
            Criterion::A => "tr-inv",
        }
    }
}

/// A point on the probability simplex: nonnegative weights summing to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignWeights {
    alpha: Vec<f64>,
}

impl DesignWeights {
    pub fn new(alpha: Vec<f64>) -> Result<Self, DesignError> {
        if alpha.is_empty() {
            return Err(DesignError::EmptyBasis);
        }
        let sum: f64 = alpha.iter().sum();
        if alpha.iter().any(|&a| !(a >= 0.0)) || (sum - 1.0).abs() > 1e-12 {
            return Err(DesignError::NotASimplexPoint(sum - 1.0));
        }
        Ok(Self { alpha })
    }

    pub fn uniform(n: usize) -> Self {
        Self {
            alpha: vec![1.0 / n as f64; n],
        }
    }

    pub fn vertex(n: usize, j: usize) -> Self {
        let mut alpha = vec![0.0; n];
        alpha[j] = 1.0;
        Self { alpha }
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn len(&self) -> usize {
        self.alpha.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alpha.is_empty()
    }

    /// Clamp negatives, drop weights below float resolution of the
    /// simplex, and rescale to unit sum.
    fn normalized(mut alpha: Vec<f64>) -> Self {
        for a in alpha.iter_mut() {
            if *a < 1e-15 {
                *a = 0.0;
            }
        }
        let sum: f64 = alpha.iter().sum();
        for a in alpha.iter_mut() {
            *a /= sum;
        }
        Self { alpha }
    }
}

/// Outcome of a design optimization.
#[derive(Debug, Clone)]
pub struct DesignResult {
    pub weights: DesignWeights,
    /// Criterion value at the returned point (`log det` or `-tr(M^{-1})`).
    pub objective: f64,
    /// Frank-Wolfe duality gap at termination.
    pub certificate: f64,
    pub iterations: usize,
    /// False when the iteration budget ran out above the tolerance.
    pub converged: bool,
}

pub const DEFAULT_TOLERANCE: f64 = 1e-8;
pub const DEFAULT_MAX_ITERATIONS: usize = 100_000;

/// `log det M` through a Cholesky factor; `None` when M is not positive
/// definite.
fn log_det(m: &DMatrix<f64>) -> Option<f64> {
    let chol = Cholesky::new(m.clone())?;
    let v: f64 = chol.l().diagonal().iter().map(|d| d.ln()).sum();
    Some(2.0 * v)
}

fn inverse(m: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    Cholesky::new(m.clone()).map(|c| c.inverse())
}

/// Evaluate the criterion of a symmetric PSD matrix.
pub fn criterion_value(matrix: &InfoMatrix, criterion: Criterion) -> Result<f64, DesignError> {
    raw_criterion(matrix.matrix(), criterion).ok_or(DesignError::SingularDesign)
}

fn raw_criterion(m: &DMatrix<f64>, criterion: Criterion) -> Option<f64> {
    let value = match criterion {
        Criterion::D => log_det(m)?,
        Criterion::A => -inverse(m)?.trace(),
    };
    value.is_finite().then_some(value)
}

struct Problem<'a> {
    basis: &'a [InfoMatrix],
    criterion: Criterion,
    dim: usize,
}

impl<'a> Problem<'a> {
    fn combined(&self, alpha: &[f64]) -> DMatrix<f64> {
        let mut acc = DMatrix::<f64>::zeros(self.dim, self.dim);
        for (mat, &a) in self.basis.iter().zip(alpha) {
            if a != 0.0 {
                acc += mat.matrix() * a;
            }
        }
        acc
    }

    fn objective(&self, alpha: &[f64]) -> Option<f64> {
        raw_criterion(&self.combined(alpha), self.criterion)
    }

    /// Gradient of the objective in the weights: `tr(M^{-1} I_j)` for the
    /// D criterion and `tr(M^{-2} I_j)` for the A criterion.
    fn gradient(&self, alpha: &[f64]) -> Option<Vec<f64>> {
        let minv = inverse(&self.combined(alpha))?;
        let lhs = match self.criterion {
            Criterion::D => minv.clone(),
            Criterion::A => &minv * &minv,
        };
        Some(
            self.basis
                .iter()
                .map(|mat| lhs.iter().zip(mat.matrix().iter()).map(|(a, b)| a * b).sum())
                .collect(),
        )
    }
}

/// Frank-Wolfe duality gap `max_j <grad, e_j - alpha>` of a feasible point;
/// upper-bounds its suboptimality.
pub fn frank_wolfe_gap(
    basis: &[InfoMatrix],
    weights: &DesignWeights,
    criterion: Criterion,
) -> Result<f64, DesignError> {
    let problem = checked_problem(basis, criterion, weights.len())?;
    let grads = problem
        .gradient(weights.alpha())
        .ok_or(DesignError::SingularDesign)?;
    let inner: f64 = grads
        .iter()
        .zip(weights.alpha())
        .map(|(g, a)| g * a)
        .sum();
    let best = grads.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Ok(best - inner)
}

fn checked_problem<'a>(
    basis: &'a [InfoMatrix],
    criterion: Criterion,
    weights_len: usize,
) -> Result<Problem<'a>, DesignError> {
    if basis.is_empty() {
        return Err(DesignError::EmptyBasis);
    }
    if basis.len() != weights_len {
        return Err(DesignError::DimensionMismatch {
            expected: basis.len(),
            found: weights_len,
        });
    }
    let dim = basis[0].dim();
    for mat in basis {
        if mat.dim() != dim {
            return Err(DesignError::MatrixDimension {
                expected: dim,
                found: mat.dim(),
            });
        }
    }
    Ok(Problem {
        basis,
        criterion,
        dim,
    })
}

#[derive(Clone, Copy)]
enum Direction {
    /// Move toward vertex `j`: `alpha + s (e_j - alpha)`, `s <= 1`.
    Forward(usize),
    /// Move away from vertex `j`: `alpha + s (alpha - e_j)`,
    /// `s <= alpha_j / (1 - alpha_j)` keeps the point feasible.
    Away(usize),
}

/// Backtracking halving line search along one direction; returns the
/// first tried point that strictly improves the objective.
fn backtracking_step(
    problem: &Problem<'_>,
    alpha: &[f64],
    value: f64,
    dir: Direction,
) -> Option<(Vec<f64>, f64)> {
    let step_max = match dir {
        Direction::Forward(_) => 1.0,
        Direction::Away(v) => alpha[v] / (1.0 - alpha[v]),
    };
    let mut step = step_max;
    for _ in 0..70 {
        let mut candidate = alpha.to_vec();
        match dir {
            Direction::Forward(j) => {
                for (i, c) in candidate.iter_mut().enumerate() {
                    *c = (1.0 - step) * *c + if i == j { step } else { 0.0 };
                }
            }
            Direction::Away(j) => {
                for (i, c) in candidate.iter_mut().enumerate() {
                    *c = (1.0 + step) * *c - if i == j { step } else { 0.0 };
                }
                if step == step_max {
                    candidate[j] = 0.0;
                }
            }
        }
        let candidate = DesignWeights::normalized(candidate).alpha;
        if let Some(v) = problem.objective(&candidate) {
            if v > value {
                return Some((candidate, v));
            }
        }
        step *= 0.5;
    }
    None
}

/// Maximize the criterion of the combined matrix over the simplex.
///
/// Starts from the uniform weight vector (falling back to the best finite
/// vertex pulled 1% toward uniform when the uniform mix is singular) and
/// iterates Frank-Wolfe steps with backtracking halving line search until
/// the duality gap drops to `tolerance`. Vertex ties are broken toward the
/// lowest index.
pub fn optimize(
    basis: &[InfoMatrix],
    criterion: Criterion,
    tolerance: f64,
    max_iterations: usize,
) -> Result<DesignResult, DesignError> {
    assert!(tolerance > 0.0, "tolerance must be positive");
    assert!(max_iterations > 0, "iteration budget must be positive");
    let n = basis.len();
    let problem = checked_problem(basis, criterion, n)?;

    let mut alpha = DesignWeights::uniform(n).alpha.clone();
    let mut value = match problem.objective(&alpha) {
        Some(v) => v,
        None => {
            let mut best: Option<(usize, f64)> = None;
            for j in 0..n {
                let vertex = DesignWeights::vertex(n, j);
                if let Some(v) = problem.objective(vertex.alpha()) {
                    if best.map_or(true, |(_, b)| v > b) {
                        best = Some((j, v));
                    }
                }
            }
            let (j, _) = best.ok_or(DesignError::SingularDesign)?;
            let unif = 1.0 / n as f64;
            for (i, a) in alpha.iter_mut().enumerate() {
                *a = 0.01 * unif + if i == j { 0.99 } else { 0.0 };
            }
            problem.objective(&alpha).ok_or(DesignError::SingularDesign)?
        }
    };

    let mut gap = f64::INFINITY;
    let mut iterations = 0;
    let mut converged = false;

    for iter in 1..=max_iterations {
        iterations = iter;
        let grads = match problem.gradient(&alpha) {
            Some(g) => g,
            None => break,
        };
        let inner: f64 = grads.iter().zip(&alpha).map(|(g, a)| g * a).sum();

        // Forward vertex: best ascent direction toward a vertex.
        let mut fw = 0;
        for j in 1..n {
            if grads[j] > grads[fw] {
                fw = j;
            }
        }
        gap = grads[fw] - inner;
        if gap <= tolerance {
            converged = true;
            iterations = iter - 1;
            break;
        }

        // Away vertex: worst direction currently carrying weight.
        let mut away = None;
        for j in 0..n {
            if alpha[j] > 0.0 && away.map_or(true, |a: usize| grads[j] < grads[a]) {
                away = Some(j);
            }
        }
        let away = away.expect("simplex point has support");
        let away_gap = inner - grads[away];

        let prefer_away = away_gap > gap && alpha[away] < 1.0;
        let order = if prefer_away {
            [Direction::Away(away), Direction::Forward(fw)]
        } else {
            [Direction::Forward(fw), Direction::Away(away)]
        };
        let mut accepted = false;
        for dir in order {
            if let Direction::Away(v) = dir {
                if alpha[v] >= 1.0 {
                    continue;
                }
            }
            if let Some((next, next_value)) = backtracking_step(&problem, &alpha, value, dir) {
                alpha = next;
                value = next_value;
                accepted = true;
                break;
            }
        }
        if !accepted {
            // No representable step along either direction improves the
            // objective; the remaining gap is below float resolution.
            break;
        }
    }

    let weights = DesignWeights::normalized(alpha);
    // Recompute the certificate at the final point.
    let final_gap = frank_wolfe_gap(basis, &weights, criterion).unwrap_or(gap);
    Ok(DesignResult {
        objective: problem
            .objective(weights.alpha())
            .ok_or(DesignError::SingularDesign)?,
        weights,
        certificate: final_gap,
        iterations,
        converged: converged || final_gap <= tolerance,
    })
}
