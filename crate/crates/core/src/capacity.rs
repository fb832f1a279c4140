//! Sum-rate capacity at the panel-output interface.
//!
//! All determinants are taken on the `K x K` user side. Filters enter only
//! through the orthogonal projector onto their column space, so
//! rank-deficient filters are handled without forming `(W^H W)^{-1}`.

use num_complex::Complex64;
use serde::Serialize;

use crate::equalizers::{EqualizerSet, PanelEqualizer};
use crate::error::{LisError, Result};
use crate::numerics::{self, CMatrix, DEFAULT_RANK_TOL};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CapacityReport {
    pub sum_rate_bits: f64,
    /// Cumulative capacity after each panel of an IIC chain; empty otherwise.
    pub per_panel_cumulative: Vec<f64>,
    pub channel_capacity_bits: f64,
}

fn check_rho(rho: f64) -> Result<()> {
    if rho > 0.0 && rho.is_finite() {
        Ok(())
    } else {
        Err(LisError::Domain(format!("rho must be positive and finite, got {rho}")))
    }
}

fn check_finite(a: &CMatrix, what: &str) -> Result<()> {
    if numerics::is_finite(a) {
        Ok(())
    } else {
        Err(LisError::Domain(format!("{what} has non-finite entries")))
    }
}

/// `log2 det(I + rho * G)` for a PSD Gram-type matrix `G`.
fn logdet_plus_identity(g: &CMatrix, rho: f64) -> Result<f64> {
    let a = numerics::identity(g.nrows()) + g * Complex64::new(rho, 0.0);
    numerics::logdet2_hpd(&a)
}

/// `H^H Q Q^H H` where `Q` is an orthonormal basis of `col(W)`.
fn projected_gram(h: &CMatrix, basis: &CMatrix) -> CMatrix {
    numerics::gram(&(basis.adjoint() * h))
}

fn panel_gram(h: &CMatrix, eq: &PanelEqualizer) -> Result<CMatrix> {
    if h.nrows() != eq.antennas() {
        return Err(LisError::Dimension(format!(
            "panel channel has {} rows, filter has {}",
            h.nrows(),
            eq.antennas()
        )));
    }
    Ok(projected_gram(h, &eq.range_basis()?))
}

fn check_blocks(blocks: &[CMatrix], eq: &EqualizerSet) -> Result<usize> {
    if blocks.len() != eq.num_panels() {
        return Err(LisError::Dimension(format!(
            "{} channel blocks but {} panel filters",
            blocks.len(),
            eq.num_panels()
        )));
    }
    let k = blocks.first().map(|b| b.ncols()).unwrap_or(0);
    if blocks.iter().any(|b| b.ncols() != k) {
        return Err(LisError::Dimension("channel blocks disagree on the number of users".into()));
    }
    Ok(k)
}

/// Sum rate `log2 det(I + rho H^H P_W H)` for a dense filter `W`.
pub fn sum_rate_full(h: &CMatrix, w: &CMatrix, rho: f64) -> Result<f64> {
    check_rho(rho)?;
    check_finite(h, "channel")?;
    check_finite(w, "filter")?;
    if h.nrows() != w.nrows() {
        return Err(LisError::Dimension(format!(
            "channel has {} rows, filter has {}",
            h.nrows(),
            w.nrows()
        )));
    }
    let q = numerics::orthonormal_range(w, DEFAULT_RANK_TOL)?;
    logdet_plus_identity(&projected_gram(h, &q), rho)
}

/// Sum rate for a block-diagonal filter, accumulated panel by panel.
pub fn sum_rate_panelized(blocks: &[CMatrix], eq: &EqualizerSet, rho: f64) -> Result<f64> {
    check_rho(rho)?;
    let k = check_blocks(blocks, eq)?;
    let mut acc = CMatrix::zeros(k, k);
    for (h, e) in blocks.iter().zip(&eq.per_panel) {
        acc += panel_gram(h, e)?;
    }
    logdet_plus_identity(&acc, rho)
}

/// Unfiltered channel capacity `log2 det(I + rho H^H H)`.
pub fn channel_capacity(h: &CMatrix, rho: f64) -> Result<f64> {
    check_rho(rho)?;
    check_finite(h, "channel")?;
    logdet_plus_identity(&numerics::gram(h), rho)
}

/// Channel capacity of a block channel without stacking it.
pub fn channel_capacity_blocks(blocks: &[CMatrix], rho: f64) -> Result<f64> {
    check_rho(rho)?;
    let k = blocks.first().map(|b| b.ncols()).unwrap_or(0);
    let mut acc = CMatrix::zeros(k, k);
    for b in blocks {
        if b.ncols() != k {
            return Err(LisError::Dimension("channel blocks disagree on the number of users".into()));
        }
        acc += numerics::gram(b);
    }
    logdet_plus_identity(&acc, rho)
}

/// Cumulative capacity after each panel, in chain order.
pub fn chain_capacity_trace(blocks: &[CMatrix], eq: &EqualizerSet, rho: f64) -> Result<Vec<f64>> {
    check_rho(rho)?;
    let k = check_blocks(blocks, eq)?;
    let mut acc = CMatrix::zeros(k, k);
    let mut trace = Vec::with_capacity(blocks.len());
    for (h, e) in blocks.iter().zip(&eq.per_panel) {
        acc += panel_gram(h, e)?;
        trace.push(logdet_plus_identity(&acc, rho)?);
    }
    Ok(trace)
}
