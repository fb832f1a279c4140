//! Per-panel linear filters.
//!
//! Three constructions are provided: the reduced matched filter (strongest
//! channel columns), the single-panel capacity-optimal filter (dominant left
//! singular vectors of the channel), and one step of iterative interference
//! cancellation (dominant left singular vectors of the channel whitened by
//! the accumulated message).

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::chain::ChainMessage;
use crate::error::{LisError, Result};
use crate::numerics::{self, CMatrix, CVector, DEFAULT_RANK_TOL};

/// Max-entry tolerance on `w^H w - I` for a filter to count as semi-unitary.
pub const SEMI_UNITARY_TOL: f64 = 1e-9;

/// Residual norm below which a canonical vector is treated as already
/// spanned when completing a basis.
const COMPLETION_TOL: f64 = 1e-6;

/// A Gram-Schmidt pass that keeps at least this fraction of the norm needs
/// no second pass.
const REORTH_RATIO: f64 = std::f64::consts::FRAC_1_SQRT_2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EqualizerKind {
    Rmf,
    SvdOpt,
    Iic,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PanelEqualizer {
    w: CMatrix,
    kind: EqualizerKind,
    semi_unitary: bool,
}

impl PanelEqualizer {
    /// Wrap a filter matrix; semi-unitarity is measured, not assumed.
    pub fn new(w: CMatrix, kind: EqualizerKind) -> Self {
        let semi_unitary = w.ncols() > 0
            && numerics::max_abs_entry(&(w.adjoint() * &w - numerics::identity(w.ncols()))) <= SEMI_UNITARY_TOL;
        Self { w, kind, semi_unitary }
    }

    /// Wrap a filter whose columns are orthonormal by construction.
    pub(crate) fn from_orthonormal(w: CMatrix, kind: EqualizerKind) -> Self {
        Self { w, kind, semi_unitary: true }
    }

    pub fn w(&self) -> &CMatrix {
        &self.w
    }

    pub fn kind(&self) -> EqualizerKind {
        self.kind
    }

    pub fn is_semi_unitary(&self) -> bool {
        self.semi_unitary
    }

    pub fn antennas(&self) -> usize {
        self.w.nrows()
    }

    pub fn outputs(&self) -> usize {
        self.w.ncols()
    }

    /// Orthonormal basis of the filter's column space.
    pub fn range_basis(&self) -> Result<CMatrix> {
        if self.semi_unitary {
            Ok(self.w.clone())
        } else {
            numerics::orthonormal_range(&self.w, DEFAULT_RANK_TOL)
        }
    }

    /// Orthogonal projector `S` onto the filter's column space.
    pub fn projector(&self) -> Result<CMatrix> {
        let q = self.range_basis()?;
        Ok(&q * q.adjoint())
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct EqualizerSet {
    pub per_panel: Vec<PanelEqualizer>,
}

impl EqualizerSet {
    pub fn new(per_panel: Vec<PanelEqualizer>) -> Self {
        Self { per_panel }
    }

    pub fn num_panels(&self) -> usize {
        self.per_panel.len()
    }

    /// Total number of outputs `N` delivered to the backplane.
    pub fn total_outputs(&self) -> usize {
        self.per_panel.iter().map(PanelEqualizer::outputs).sum()
    }

    pub fn total_antennas(&self) -> usize {
        self.per_panel.iter().map(PanelEqualizer::antennas).sum()
    }

    /// Dense `M x N` block-diagonal filter matrix.
    pub fn block_diagonal(&self) -> CMatrix {
        let mut w = CMatrix::zeros(self.total_antennas(), self.total_outputs());
        let (mut r, mut c) = (0, 0);
        for eq in &self.per_panel {
            w.view_mut((r, c), eq.w.shape()).copy_from(&eq.w);
            r += eq.antennas();
            c += eq.outputs();
        }
        w
    }
}

/// Reduced matched filter: the `np_outputs` strongest columns of the panel
/// channel, strongest first. Ties go to the lower user index.
pub fn rmf_filter(h_panel: &CMatrix, np_outputs: usize) -> Result<PanelEqualizer> {
    if np_outputs < 1 {
        return Err(LisError::Config("np_outputs must be at least 1".into()));
    }
    if h_panel.ncols() == 0 {
        return Err(LisError::Dimension("panel channel has no users".into()));
    }
    let strength: Vec<f64> = h_panel.column_iter().map(|c| c.norm_squared()).collect();
    let mut order: Vec<usize> = (0..strength.len()).collect();
    order.sort_by(|&a, &b| strength[b].total_cmp(&strength[a]));
    order.truncate(np_outputs.min(h_panel.ncols()));
    let w = CMatrix::from_fn(h_panel.nrows(), order.len(), |i, j| h_panel[(i, order[j])]);
    Ok(PanelEqualizer::new(w, EqualizerKind::Rmf))
}

/// Extend the orthonormal columns of `basis` to `target` columns using
/// canonical unit vectors, each orthogonalized against the columns already
/// present (classical Gram-Schmidt, repeated once when the first pass
/// cancels most of the vector).
pub fn complete_basis(basis: CMatrix, target: usize) -> CMatrix {
    let m = basis.nrows();
    let have = basis.ncols();
    if have >= target {
        return basis;
    }
    let target = target.min(m);
    let mut q = basis.resize_horizontally(target, Complex64::new(0.0, 0.0));
    let mut filled = have;
    let one = Complex64::new(1.0, 0.0);
    let mut coeffs = CVector::zeros(target);
    for e in 0..m {
        if filled == target {
            break;
        }
        let mut v = CVector::zeros(m);
        v[e] = one;
        let mut norm = 1.0;
        for _ in 0..2 {
            let cur = q.columns(0, filled);
            let mut c = coeffs.rows_mut(0, filled);
            c.gemv_ad(one, &cur, &v, Complex64::new(0.0, 0.0));
            v.gemv(-one, &cur, &c, one);
            let after = v.norm();
            let settled = after >= REORTH_RATIO * norm;
            norm = after;
            if settled {
                break;
            }
        }
        if norm > COMPLETION_TOL {
            q.set_column(filled, &(v / Complex64::new(norm, 0.0)));
            filled += 1;
        }
    }
    q.columns(0, filled).into_owned()
}

/// Dominant left singular vectors of `a` above the rank threshold, capped
/// at `n`, then completed to `n` columns.
fn dominant_subspace(a: &CMatrix, n: usize) -> Result<CMatrix> {
    let dec = numerics::svd(a)?;
    let keep = dec.rank(DEFAULT_RANK_TOL).min(n);
    Ok(complete_basis(dec.left.columns(0, keep).into_owned(), n))
}

/// Single-panel optimum: the dominant `min(n_outputs, rank h)` left singular
/// vectors of `h`. A zero channel falls back to canonical unit vectors.
pub fn single_panel_filter(h: &CMatrix, n_outputs: usize) -> Result<PanelEqualizer> {
    if n_outputs < 1 || n_outputs > h.nrows() {
        return Err(LisError::Config(format!(
            "n_outputs must be in 1..={}, got {n_outputs}",
            h.nrows()
        )));
    }
    let dec = numerics::svd(h)?;
    let rank = dec.rank(DEFAULT_RANK_TOL);
    let w = if rank == 0 {
        complete_basis(CMatrix::zeros(h.nrows(), 0), n_outputs)
    } else {
        dec.left.columns(0, rank.min(n_outputs)).into_owned()
    };
    Ok(PanelEqualizer::from_orthonormal(w, EqualizerKind::SvdOpt))
}

/// Result of one panel's interference-cancellation step.
#[derive(Debug, Clone)]
pub struct LocalStep {
    pub equalizer: PanelEqualizer,
    /// Capacity increment in bits contributed by this panel.
    pub delta_c: f64,
    pub next: ChainMessage,
}

/// One IIC step: whiten the local channel by the incoming accumulator,
/// keep its dominant left singular subspace, and fold the panel's
/// contribution into the outgoing message.
pub fn iic_local_step(h_panel: &CMatrix, z_prev: &ChainMessage, rho: f64, np_outputs: usize) -> Result<LocalStep> {
    let k = h_panel.ncols();
    if z_prev.z.nrows() != k || z_prev.z.ncols() != k {
        return Err(LisError::Dimension(format!(
            "message is {}x{}, panel channel serves {k} users",
            z_prev.z.nrows(),
            z_prev.z.ncols()
        )));
    }
    if np_outputs < 1 {
        return Err(LisError::Config("np_outputs must be at least 1".into()));
    }
    if !(rho > 0.0) {
        return Err(LisError::Domain(format!("rho must be positive, got {rho}")));
    }

    let eig = numerics::hermitian_eig(&z_prev.z)?;
    if let Some(&min) = eig.values.last() {
        if !(min > 0.0) {
            return Err(LisError::Domain(format!(
                "incoming message is not positive definite (min eigenvalue {min:e})"
            )));
        }
    }
    let mut whitener = eig.basis.clone();
    for (j, &s) in eig.values.iter().enumerate() {
        whitener.column_mut(j).scale_mut(1.0 / s.sqrt());
    }
    let h_white = h_panel * whitener * Complex64::new(rho.sqrt(), 0.0);

    let n = np_outputs.min(h_panel.nrows());
    let w = dominant_subspace(&h_white, n)?;

    let projected_white = w.adjoint() * &h_white;
    let delta_c = numerics::logdet2_hpd(&(numerics::gram(&projected_white) + numerics::identity(k)))?;

    let projected = w.adjoint() * h_panel;
    let mut z_next = &z_prev.z + numerics::gram(&projected) * Complex64::new(rho, 0.0);
    numerics::hermitize_mut(&mut z_next);

    Ok(LocalStep {
        equalizer: PanelEqualizer::from_orthonormal(w, EqualizerKind::Iic),
        delta_c,
        next: ChainMessage { z: z_next, hop_index: z_prev.hop_index + 1 },
    })
}

/// Block-diagonal filtering `z = W^H y`.
pub fn apply_equalizers(eq: &EqualizerSet, y: &CVector) -> Result<CVector> {
    if y.len() != eq.total_antennas() {
        return Err(LisError::Dimension(format!(
            "received vector has {} samples, equalizers cover {} antennas",
            y.len(),
            eq.total_antennas()
        )));
    }
    let mut z = CVector::zeros(eq.total_outputs());
    let (mut r, mut c) = (0, 0);
    for p in &eq.per_panel {
        let seg = y.rows(r, p.antennas());
        z.rows_mut(c, p.outputs()).copy_from(&(p.w.adjoint() * seg));
        r += p.antennas();
        c += p.outputs();
    }
    Ok(z)
}
