use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

/// Numeric thresholds shared by every layer. All are relative unless noted.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// smallest / largest singular value below which a matrix is rank deficient
    pub rank: f64,
    /// self-adjointness residual, relative to the squared matrix norm
    pub self_adjoint: f64,
    /// B-block norm of an "A-only" row, relative to the row norm
    pub separated: f64,
    /// polynomial coefficients below this (scaled) fraction are dropped
    pub trim: f64,
    /// upper edge of the near-singular band for the leading coefficient
    pub near_singular: f64,
    /// allowed |Im| of a root, times (1 + |Re|)
    pub real: f64,
    /// roots closer than this times (1 + |λ|) form one multiple root
    pub cluster: f64,
    /// equality tests in set membership
    pub set: f64,
    /// finite one-sided limits must agree to this (absolute, times 1 + |λ|)
    pub limit: f64,
    /// monotonicity slack, times (1 + |λ|)
    pub monotone_slack: f64,
    /// out-of-sample residual accepted by the interpolation oracle
    pub interpolation: f64,
    /// magnitude that counts as divergence (absolute, not overridable)
    #[serde(skip)]
    pub divergence: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            rank: 1e-12,
            self_adjoint: 1e-10,
            separated: 1e-10,
            trim: 1e-11,
            near_singular: 1e-8,
            real: 1e-7,
            cluster: 1e-6,
            set: 1e-9,
            limit: 1e-4,
            monotone_slack: 1e-9,
            interpolation: 1e-9,
            divergence: 1e6,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ToleranceError {
    #[error("unknown tolerance `{0}`")]
    Unknown(String),
    #[error("tolerance `{0}` must be positive and at most 1e-2, got {1}")]
    OutOfRange(String, f64),
}

impl Tolerances {
    /// Looser thresholds for `f32` runs.
    pub fn single_precision() -> Self {
        Tolerances {
            rank: 1e-5,
            self_adjoint: 1e-4,
            separated: 1e-4,
            trim: 1e-5,
            near_singular: 1e-3,
            real: 1e-3,
            cluster: 1e-3,
            set: 1e-4,
            limit: 1e-2,
            monotone_slack: 1e-4,
            interpolation: 1e-3,
            divergence: 1e6,
        }
    }

    pub fn with_overrides(mut self, overrides: &BTreeMap<String, f64>) -> Result<Self, ToleranceError> {
        for (key, &value) in overrides {
            if !(value > 0.0 && value <= 1e-2) {
                return Err(ToleranceError::OutOfRange(key.clone(), value));
            }
            let slot = match key.as_str() {
                "rank" => &mut self.rank,
                "self_adjoint" => &mut self.self_adjoint,
                "separated" => &mut self.separated,
                "trim" => &mut self.trim,
                "near_singular" => &mut self.near_singular,
                "real" => &mut self.real,
                "cluster" => &mut self.cluster,
                "set" => &mut self.set,
                "limit" => &mut self.limit,
                "monotone_slack" => &mut self.monotone_slack,
                "interpolation" => &mut self.interpolation,
                _ => return Err(ToleranceError::Unknown(key.clone())),
            };
            *slot = value;
        }
        Ok(self)
    }
}
