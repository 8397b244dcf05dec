//! Closed-form order-2 Wasserstein distances.
//!
//! Three specializations cover everything the analysis needs: between two
//! Gaussians, between a Gaussian and the Dirac at the origin, and between a
//! Gaussian mixture and that Dirac. The general coupling infimum is never
//! solved numerically.

use crate::error::Error;
use crate::gaussian_mixture::{Gaussian, GaussianMixture};
use crate::numerics::{sym_psd_sqrt, SymmetricPsd, PSD_EIG_FLOOR};
use crate::Result;

/// Round-off envelope of the Eq.-9 trace cancellation, relative to the
/// all-positive part of the squared distance: the cross-term trace loses
/// half its digits when a covariance is near singular (small eigenvalues of
/// a squared matrix), so the squared distance may legitimately come out this
/// far below zero.
pub const W2_SQUARED_DUST: f64 = 1e-7;

/// Nonnegative distance in state-space norm units.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Distance(f64);

impl Distance {
    /// Builds from a squared distance, clamping round-off dust at zero.
    /// A squared distance below [`PSD_EIG_FLOOR`] is a numerical failure.
    pub(crate) fn from_squared(sq: f64) -> Result<Self> {
        if !sq.is_finite() || sq < PSD_EIG_FLOOR {
            return Err(Error::NotPsd { min_eigenvalue: sq });
        }
        Ok(Self(sq.max(0.0).sqrt()))
    }

    pub fn value(&self) -> f64 {
        self.0
    }

    pub fn squared(&self) -> f64 {
        self.0 * self.0
    }
}

impl From<Distance> for f64 {
    fn from(d: Distance) -> f64 {
        d.0
    }
}

impl std::fmt::Display for Distance {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.0.fmt(f)
    }
}

/// W2 between two Gaussians:
/// `sqrt(|mu1 - mu2|^2 + tr(S1 + S2 - 2 [sqrt(S1) S2 sqrt(S1)]^(1/2)))`.
pub fn w2_gaussians(g1: &Gaussian, g2: &Gaussian) -> Result<Distance> {
    if g1.dim() != g2.dim() {
        return Err(Error::DimensionMismatch(format!(
            "Gaussians have dimensions {} and {}",
            g1.dim(),
            g2.dim()
        )));
    }
    let root1 = sym_psd_sqrt(g1.cov())?;
    let inner = root1.as_matrix() * g2.cov().as_matrix() * root1.as_matrix();
    let cross = sym_psd_sqrt(&SymmetricPsd::from_psd_construction(inner))?;
    let mean_sq = (g1.mean() - g2.mean()).norm_squared();
    let trace_term = g1.cov().trace() + g2.cov().trace() - 2.0 * cross.trace();
    let sq = mean_sq + trace_term;
    let scale = mean_sq + g1.cov().trace() + g2.cov().trace();
    if !sq.is_finite() || sq < -W2_SQUARED_DUST * scale.max(1.0) {
        return Err(Error::NotPsd { min_eigenvalue: sq });
    }
    Ok(Distance(sq.max(0.0).sqrt()))
}

/// W2 between a Gaussian and the Dirac at the origin:
/// `sqrt(|mu|^2 + tr(S))`.
pub fn w2_gaussian_to_dirac(g: &Gaussian) -> Distance {
    let sq = g.mean().norm_squared() + g.cov().trace();
    Distance(sq.max(0.0).sqrt())
}

/// W2 between a mixture and the Dirac at the origin: the weighted
/// root-mean-square of the per-component distances.
pub fn w2_mixture_to_dirac(m: &GaussianMixture) -> Distance {
    let sq: f64 = m
        .weights()
        .iter()
        .zip(m.components())
        .map(|(&w, c)| w * (c.mean().norm_squared() + c.cov().trace()))
        .sum();
    Distance(sq.max(0.0).sqrt())
}
