//! Input sequences with an optional virtual history.

/// A finite input sequence `u_1, ..., u_N` plus an optional prefill of
/// virtual past values `..., u_-1, u_0` (oldest first).
///
/// The prefill lets periodic signals built from graph cycles be exactly
/// periodic from `t = 1`: every sliding window over the extended sequence
/// lies on the generating cycle. Raw signals default to an empty prefill,
/// in which case missing past inputs read as zero.
#[derive(Debug, Clone, PartialEq)]
pub struct Signal {
    samples: Vec<f64>,
    prefill: Vec<f64>,
}

impl Signal {
    pub fn new(samples: Vec<f64>) -> Self {
        Self {
            samples,
            prefill: Vec::new(),
        }
    }

    pub fn with_prefill(samples: Vec<f64>, prefill: Vec<f64>) -> Self {
        Self { samples, prefill }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn prefill(&self) -> &[f64] {
        &self.prefill
    }

    /// Value of `u_t` for 1-based `t`; `t <= 0` reads the prefill and then
    /// zero once the prefill is exhausted.
    pub fn value_at(&self, t: i64) -> f64 {
        if t >= 1 {
            self.samples[(t - 1) as usize]
        } else {
            // t = 0 is the last prefill entry, t = -1 the one before, ...
            let back = (-t) as usize;
            if back < self.prefill.len() {
                self.prefill[self.prefill.len() - 1 - back]
            } else {
                0.0
            }
        }
    }
}
