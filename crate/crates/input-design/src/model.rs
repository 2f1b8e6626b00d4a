//! Predictor models mapping input histories to parameter gradients.
//!
//! A model exposes the gradient `psi_t` of its one-step predictor with
//! respect to the parameters, evaluated at the true parameter vector. The
//! noise enters additively at the output only, so the gradient trace is a
//! deterministic function of the input signal and no noise realization is
//! ever consumed here.

use crate::error::ModelError;
use crate::signal::Signal;
use nalgebra::DVector;
use std::fmt;
use std::sync::Arc;

/// How far back a model's predictor looks at past inputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelMemory {
    /// The predictor at time `t` depends on `u_t, ..., u_{t-k+1}` only.
    Finite(usize),
    /// Autoregressive dynamics: the predictor depends on the whole history.
    Infinite,
}

/// Extension point for user-supplied predictors.
///
/// Implementations return the full gradient trace `psi_1, ..., psi_N`
/// (burn-in trimming is handled by the caller) and declare their memory so
/// the exact per-cycle evaluation knows when it applies.
pub trait ExternalModel: Send + Sync {
    fn param_dim(&self) -> usize;
    fn memory(&self) -> ModelMemory;
    /// Gradient vectors for `t = 1..=signal.len()`.
    fn gradient_trace(&self, signal: &Signal) -> Result<Vec<DVector<f64>>, ModelError>;
}

/// The model structure to evaluate.
#[derive(Clone)]
pub enum ModelKind {
    /// `y_t = theta1*u_t + theta2*u_{t-1} + theta3*u_t^2 + theta4*u_{t-1}^2`
    NonlinearFir,
    /// Rational predictor with two numerator and two denominator
    /// coefficients: `y_t = theta1*u_{t-1} + theta2*u_{t-2} - theta3*y_{t-1} - theta4*y_{t-2}`.
    OutputError22,
    External(Arc<dyn ExternalModel>),
}

impl fmt::Debug for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelKind::NonlinearFir => write!(f, "NonlinearFir"),
            ModelKind::OutputError22 => write!(f, "OutputError22"),
            ModelKind::External(_) => write!(f, "External"),
        }
    }
}

/// Default burn-in for the output-error model: long enough that the
/// filter transient from zero initial states has decayed.
pub const DEFAULT_OUTPUT_ERROR_BURN_IN: usize = 1000;

/// A model structure together with its true parameters and noise level.
#[derive(Debug, Clone)]
pub struct ModelSpec {
    pub kind: ModelKind,
    pub theta0: Vec<f64>,
    pub noise_variance: f64,
    /// Samples discarded before averaging (dynamic models only).
    pub burn_in: usize,
}

impl ModelSpec {
    pub fn nonlinear_fir(theta0: [f64; 4], noise_variance: f64) -> Result<Self, ModelError> {
        let spec = Self {
            kind: ModelKind::NonlinearFir,
            theta0: theta0.to_vec(),
            noise_variance,
            burn_in: 0,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn output_error(theta0: [f64; 4], noise_variance: f64) -> Result<Self, ModelError> {
        let spec = Self {
            kind: ModelKind::OutputError22,
            theta0: theta0.to_vec(),
            noise_variance,
            burn_in: DEFAULT_OUTPUT_ERROR_BURN_IN,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn external(
        model: Arc<dyn ExternalModel>,
        noise_variance: f64,
        burn_in: usize,
    ) -> Result<Self, ModelError> {
        let dim = model.param_dim();
        let spec = Self {
            kind: ModelKind::External(model),
            theta0: vec![0.0; dim],
            noise_variance,
            burn_in,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_burn_in(mut self, burn_in: usize) -> Self {
        self.burn_in = burn_in;
        self
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.noise_variance <= 0.0 || !self.noise_variance.is_finite() {
            return Err(ModelError::NonPositiveNoiseVariance(self.noise_variance));
        }
        match &self.kind {
            ModelKind::NonlinearFir => {
                if self.theta0.len() != 4 {
                    return Err(ModelError::ParameterDimension {
                        expected: 4,
                        found: self.theta0.len(),
                    });
                }
            }
            ModelKind::OutputError22 => {
                if self.theta0.len() != 4 {
                    return Err(ModelError::ParameterDimension {
                        expected: 4,
                        found: self.theta0.len(),
                    });
                }
                let (t3, t4) = (self.theta0[2], self.theta0[3]);
                // Jury criterion for z^2 + t3 z + t4: both roots strictly
                // inside the unit circle.
                if !(t4.abs() < 1.0 && t3.abs() < 1.0 + t4) {
                    return Err(ModelError::UnstableDenominator {
                        theta3: t3,
                        theta4: t4,
                    });
                }
            }
            ModelKind::External(model) => {
                if model.param_dim() == 0 {
                    return Err(ModelError::ParameterDimension {
                        expected: 1,
                        found: 0,
                    });
                }
            }
        }
        Ok(())
    }

    /// Number of parameters, i.e. the dimension of each gradient vector.
    pub fn param_dim(&self) -> usize {
        match &self.kind {
            ModelKind::NonlinearFir | ModelKind::OutputError22 => 4,
            ModelKind::External(model) => model.param_dim(),
        }
    }

    pub fn memory(&self) -> ModelMemory {
        match &self.kind {
            ModelKind::NonlinearFir => ModelMemory::Finite(2),
            ModelKind::OutputError22 => ModelMemory::Infinite,
            ModelKind::External(model) => model.memory(),
        }
    }

    /// Gradient trace for `t = burn_in+1 ..= N`.
    pub fn gradient_trace(&self, signal: &Signal) -> Result<GradientTrace, ModelError> {
        self.validate()?;
        if signal.is_empty() {
            return Err(ModelError::EmptySignal);
        }
        if self.burn_in >= signal.len() {
            return Err(ModelError::BurnInExceedsLength {
                burn_in: self.burn_in,
                len: signal.len(),
            });
        }
        let full = self.full_trace(signal)?;
        let psi: Vec<DVector<f64>> = full.into_iter().skip(self.burn_in).collect();
        Ok(GradientTrace { psi })
    }

    /// Gradient vectors for every `t = 1..=N`, before burn-in trimming.
    fn full_trace(&self, signal: &Signal) -> Result<Vec<DVector<f64>>, ModelError> {
        let trace = match &self.kind {
            ModelKind::NonlinearFir => fir_trace(signal),
            ModelKind::OutputError22 => output_error_trace(&self.theta0, signal)?,
            ModelKind::External(model) => model.gradient_trace(signal)?,
        };
        for (i, psi) in trace.iter().enumerate() {
            if psi.iter().any(|v| !v.is_finite()) {
                return Err(ModelError::NonFinite { t: i + 1 });
            }
        }
        Ok(trace)
    }
}

/// Sequence of predictor gradients, one per retained time step.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientTrace {
    psi: Vec<DVector<f64>>,
}

impl GradientTrace {
    pub fn vectors(&self) -> &[DVector<f64>] {
        &self.psi
    }

    pub fn len(&self) -> usize {
        self.psi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.psi.is_empty()
    }
}

fn fir_trace(signal: &Signal) -> Vec<DVector<f64>> {
    (1..=signal.len() as i64)
        .map(|t| {
            let u0 = signal.value_at(t);
            let u1 = signal.value_at(t - 1);
            DVector::from_vec(vec![u0, u1, u0 * u0, u1 * u1])
        })
        .collect()
}

/// Predictor and sensitivity recursions for the output-error model, all
/// filters starting from zero internal state. Each sensitivity shares the
/// denominator: `s_t = x_t - theta3*s_{t-1} - theta4*s_{t-2}` with driving
/// terms `u_{t-1}`, `u_{t-2}`, `-y_{t-1}`, `-y_{t-2}` respectively.
fn output_error_trace(theta: &[f64], signal: &Signal) -> Result<Vec<DVector<f64>>, ModelError> {
    let (t1, t2, t3, t4) = (theta[0], theta[1], theta[2], theta[3]);
    let n = signal.len();
    let mut out = Vec::with_capacity(n);

    let mut y = [0.0f64; 2]; // y[0] = y_{t-1}, y[1] = y_{t-2}
    let mut s = [[0.0f64; 2]; 4];

    for t in 1..=n as i64 {
        let u1 = signal.value_at(t - 1);
        let u2 = signal.value_at(t - 2);
        let y_now = t1 * u1 + t2 * u2 - t3 * y[0] - t4 * y[1];
        let drive = [u1, u2, -y[0], -y[1]];
        let mut psi = DVector::zeros(4);
        for (j, s_j) in s.iter_mut().enumerate() {
            let s_now = drive[j] - t3 * s_j[0] - t4 * s_j[1];
            psi[j] = s_now;
            s_j[1] = s_j[0];
            s_j[0] = s_now;
        }
        if !y_now.is_finite() {
            return Err(ModelError::NonFinite { t: t as usize });
        }
        y[1] = y[0];
        y[0] = y_now;
        out.push(psi);
    }
    Ok(out)
}

/// Predictor output trace (no gradients); used by evaluation and tests.
pub fn output_error_predict(theta: &[f64], signal: &Signal) -> Vec<f64> {
    let (t1, t2, t3, t4) = (theta[0], theta[1], theta[2], theta[3]);
    let mut y = [0.0f64; 2];
    let mut out = Vec::with_capacity(signal.len());
    for t in 1..=signal.len() as i64 {
        let y_now = t1 * signal.value_at(t - 1) + t2 * signal.value_at(t - 2) - t3 * y[0] - t4 * y[1];
        y[1] = y[0];
        y[0] = y_now;
        out.push(y_now);
    }
    out
}
