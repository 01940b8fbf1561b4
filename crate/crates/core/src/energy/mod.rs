//! Box-supervised polygon energy: unary box term, relaxed membership field,
//! local and global pairwise terms, and their weighted total. Every term
//! returns its gradient w.r.t. the flat `[x0, y0, x1, y1, ...]` vertex
//! vector.

mod field;
mod iou;
mod pairwise;
mod total;
mod unary;

pub use field::{relaxed_field, MembershipField};
pub use iou::{ciou, ciou_alpha, ciou_frozen, giou, BoxScore};
pub use pairwise::{
    affinity_weight, discrete_local_energy, global_pairwise_loss, global_value_with_means,
    local_pairwise_loss, region_means, AffinityTable, RegionMeans,
};
pub use total::{total_loss, EnergyModel, FrozenCoefficients, TotalLoss};
pub use unary::{unary_alpha, unary_loss, unary_side_slopes, unary_value_frozen};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UnaryKind {
    #[default]
    Ciou,
    Giou,
}

/// How the pairwise sums are normalized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Reduction {
    /// Raw sums over pairs / pixels.
    #[default]
    Sum,
    /// Local term divided by the number of pairs, global term by the number
    /// of pixels.
    Mean,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyConfig {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    /// Sigmoid temperature of the relaxed membership, in grid pixels.
    pub tau: f64,
    /// Color affinity temperature.
    pub sigma_i: f64,
    /// Side of the (odd) pairwise window.
    pub window: usize,
    pub dilation: usize,
    pub unary: UnaryKind,
    pub reduction: Reduction,
    /// Treat the region means of the global term as constants when
    /// differentiating.
    pub detach_means: bool,
}

impl Default for EnergyConfig {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            beta: 0.5,
            gamma: 0.03,
            tau: 0.1,
            sigma_i: 1.0,
            window: 3,
            dilation: 2,
            unary: UnaryKind::Ciou,
            reduction: Reduction::Sum,
            detach_means: true,
        }
    }
}

impl EnergyConfig {
    pub fn unary_only() -> Self {
        Self {
            beta: 0.0,
            gamma: 0.0,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        for (name, w) in [
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("gamma", self.gamma),
        ] {
            if !(w >= 0.0 && w.is_finite()) {
                return bad(format!(
                    "{name} must be a finite non-negative weight, got {w}"
                ));
            }
        }
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return bad(format!("tau must be positive, got {}", self.tau));
        }
        if !(self.sigma_i > 0.0 && self.sigma_i.is_finite()) {
            return bad(format!("sigma_i must be positive, got {}", self.sigma_i));
        }
        if self.window < 3 || self.window % 2 == 0 {
            return bad(format!("window must be odd and >= 3, got {}", self.window));
        }
        if self.dilation < 1 {
            return bad("dilation must be >= 1".into());
        }
        Ok(())
    }

    /// Whether any pairwise term participates.
    pub fn has_pairwise(&self) -> bool {
        self.beta > 0.0 || self.gamma > 0.0
    }
}

/// A scalar loss and its gradient w.r.t. the flat vertex vector.
#[derive(Debug, Clone, PartialEq)]
pub struct LossValue<T> {
    pub value: T,
    pub gradient: Vec<T>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_reference_hyperparameters() {
        let c = EnergyConfig::default();
        assert_eq!((c.alpha, c.beta, c.gamma), (1.0, 0.5, 0.03));
        assert_eq!((c.tau, c.sigma_i, c.window, c.dilation), (0.1, 1.0, 3, 2));
        c.validate().unwrap();
    }

    #[test]
    fn validation_rejects_bad_fields() {
        let base = EnergyConfig::default();
        for c in [
            EnergyConfig { beta: -1.0, ..base },
            EnergyConfig { tau: 0.0, ..base },
            EnergyConfig {
                sigma_i: f64::NAN,
                ..base
            },
            EnergyConfig { window: 4, ..base },
            EnergyConfig { window: 1, ..base },
            EnergyConfig {
                dilation: 0,
                ..base
            },
        ] {
            assert!(c.validate().is_err(), "{c:?}");
        }
    }
}
