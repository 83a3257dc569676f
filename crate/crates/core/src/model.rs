//! Refraction profiles and sources.
//!
//! Coordinates are `[x_1, .., x_{D-1}, z]`: the last component is depth `z`,
//! the first is the horizontal range `x`. Lengths are in arbitrary but
//! consistent units; `k0` is in inverse length.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Squared index of refraction `n²(x)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum RefractionModel {
    /// `n² = n0sq`
    Constant { n0sq: f64 },
    /// `n² = n0sq − a·z`
    LinearZ { n0sq: f64, a: f64 },
    /// `n² = n0sq − alpha·z²` (sound channel)
    QuadraticZ { n0sq: f64, alpha: f64 },
    /// `n² = n0sq − beta·x − alpha·z²`
    LinearXQuadraticZ { n0sq: f64, alpha: f64, beta: f64 },
    /// `n² = Σ coeffs[k]·z^k`; only reachable through the Laurent module.
    PolynomialZ { coeffs: Vec<f64> },
}

impl RefractionModel {
    pub fn validate(&self) -> Result<()> {
        let n0sq = match self {
            RefractionModel::Constant { n0sq }
            | RefractionModel::LinearZ { n0sq, .. }
            | RefractionModel::QuadraticZ { n0sq, .. }
            | RefractionModel::LinearXQuadraticZ { n0sq, .. } => *n0sq,
            RefractionModel::PolynomialZ { coeffs } => {
                if coeffs.is_empty() || coeffs.iter().any(|c| !c.is_finite()) {
                    return Err(Error::InvalidInput("polynomial coefficients".into()));
                }
                coeffs[0]
            }
        };
        if !(n0sq > 0.0) || !n0sq.is_finite() {
            return Err(Error::InvalidInput(format!("n0sq must be positive, got {n0sq}")));
        }
        Ok(())
    }

    pub fn n0sq(&self) -> f64 {
        match self {
            RefractionModel::Constant { n0sq }
            | RefractionModel::LinearZ { n0sq, .. }
            | RefractionModel::QuadraticZ { n0sq, .. }
            | RefractionModel::LinearXQuadraticZ { n0sq, .. } => *n0sq,
            RefractionModel::PolynomialZ { coeffs } => coeffs[0],
        }
    }

    /// `n²` at a point.
    pub fn n2(&self, x: &[f64]) -> f64 {
        let z = *x.last().unwrap_or(&0.0);
        match self {
            RefractionModel::Constant { n0sq } => *n0sq,
            RefractionModel::LinearZ { n0sq, a } => n0sq - a * z,
            RefractionModel::QuadraticZ { n0sq, alpha } => n0sq - alpha * z * z,
            RefractionModel::LinearXQuadraticZ { n0sq, alpha, beta } => {
                n0sq - beta * x[0] - alpha * z * z
            }
            RefractionModel::PolynomialZ { coeffs } => {
                coeffs.iter().rev().fold(0.0, |acc, c| acc * z + c)
            }
        }
    }

    /// Coefficients of `n²(z)` in powers of `z`, if it depends on `z` only.
    pub fn z_polynomial(&self) -> Option<Vec<f64>> {
        match self {
            RefractionModel::Constant { n0sq } => Some(vec![*n0sq]),
            RefractionModel::LinearZ { n0sq, a } => Some(vec![*n0sq, -a]),
            RefractionModel::QuadraticZ { n0sq, alpha } => Some(vec![*n0sq, 0.0, -alpha]),
            RefractionModel::LinearXQuadraticZ { .. } => None,
            RefractionModel::PolynomialZ { coeffs } => Some(coeffs.clone()),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            RefractionModel::Constant { .. } => "constant",
            RefractionModel::LinearZ { .. } => "linear-z",
            RefractionModel::QuadraticZ { .. } => "quadratic-z",
            RefractionModel::LinearXQuadraticZ { .. } => "linear-x-quadratic-z",
            RefractionModel::PolynomialZ { .. } => "polynomial-z",
        }
    }
}

/// Source term of the Helmholtz equation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum SourceSpec {
    /// `δ^D(x − at)`; the dimension is `at.len()`.
    PointDelta { at: Vec<f64> },
    /// `δ(z − z0)·exp(−i k0 x²/(4 mu))` in two dimensions.
    PhaseSheet { mu: f64, #[serde(default)] z0: f64 },
}

impl SourceSpec {
    pub fn point(at: &[f64]) -> Self {
        SourceSpec::PointDelta { at: at.to_vec() }
    }

    pub fn dim(&self) -> usize {
        match self {
            SourceSpec::PointDelta { at } => at.len(),
            SourceSpec::PhaseSheet { .. } => 2,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            SourceSpec::PointDelta { at } => {
                if at.is_empty() || at.len() > 3 {
                    return Err(Error::DimensionMismatch(format!(
                        "point source must have 1..=3 components, got {}",
                        at.len()
                    )));
                }
                if at.iter().any(|v| !v.is_finite()) {
                    return Err(Error::InvalidInput("source location".into()));
                }
            }
            SourceSpec::PhaseSheet { mu, z0 } => {
                if !(*mu > 0.0) || !z0.is_finite() {
                    return Err(Error::InvalidInput(format!("smearing mu must be positive, got {mu}")));
                }
            }
        }
        Ok(())
    }
}

/// Model, source and the point pair bundled for serialisation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProblemSpec {
    pub model: RefractionModel,
    pub source: SourceSpec,
}
