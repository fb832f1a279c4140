//! Dense complex-matrix kernels.
//!
//! Thin, contract-checked wrappers over `nalgebra` decompositions. Every
//! decomposition returned here is sorted in descending order (stable, so
//! ties keep their input order) and every positive-definite routine reports
//! a [`LisError::Domain`] instead of producing NaNs.
//!
//! Eigen- and singular vectors are not phase-canonicalized. Callers should
//! only depend on phase-invariant quantities such as projectors.

use nalgebra::{DMatrix, DVector, SymmetricEigen, SVD};
use num_complex::Complex64;

use crate::error::{LisError, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Max-entry tolerance on `|A - A^H|`, scaled by `max(1, max|A_ij|)`.
pub const HERMITIAN_TOL: f64 = 1e-10;

/// Default relative rank threshold for [`orthonormal_range`].
pub const DEFAULT_RANK_TOL: f64 = 1e-10;

/// Eigen-decomposition `A = basis * diag(values) * basis^H` of a Hermitian matrix.
#[derive(Debug, Clone)]
pub struct EigDecomp {
    pub basis: CMatrix,
    pub values: Vec<f64>,
}

/// Thin singular value decomposition `A = left * diag(singulars) * right^H`.
#[derive(Debug, Clone)]
pub struct SvdDecomp {
    pub left: CMatrix,
    pub singulars: Vec<f64>,
    pub right: CMatrix,
}

impl EigDecomp {
    pub fn reconstruct(&self) -> CMatrix {
        let d = CMatrix::from_diagonal(&DVector::from_iterator(
            self.values.len(),
            self.values.iter().map(|&v| Complex64::new(v, 0.0)),
        ));
        &self.basis * d * self.basis.adjoint()
    }
}

impl SvdDecomp {
    pub fn reconstruct(&self) -> CMatrix {
        let mut scaled = self.left.clone();
        for (j, &s) in self.singulars.iter().enumerate() {
            scaled.column_mut(j).scale_mut(s);
        }
        scaled * self.right.adjoint()
    }

    /// Number of singular values above `rank_tol * largest`.
    pub fn rank(&self, rank_tol: f64) -> usize {
        let top = self.singulars.first().copied().unwrap_or(0.0);
        if top <= 0.0 {
            return 0;
        }
        self.singulars.iter().take_while(|&&s| s > rank_tol * top).count()
    }
}

pub fn max_abs_entry(a: &CMatrix) -> f64 {
    a.iter().fold(0.0_f64, |m, z| m.max(z.norm()))
}

/// `‖a - b‖_F / max(‖b‖_F, tiny)`.
pub fn rel_frobenius(a: &CMatrix, b: &CMatrix) -> f64 {
    let diff = (a - b).norm();
    diff / b.norm().max(f64::MIN_POSITIVE)
}

pub fn is_finite(a: &CMatrix) -> bool {
    a.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

/// `B^H B`, with the upper triangle mirrored from the lower one so the
/// result is exactly Hermitian.
pub fn gram(b: &CMatrix) -> CMatrix {
    let mut g = b.adjoint() * b;
    hermitize_mut(&mut g);
    g
}

/// Replace `a` by `(a + a^H) / 2`.
pub fn hermitize_mut(a: &mut CMatrix) {
    let n = a.nrows();
    for i in 0..n {
        a[(i, i)].im = 0.0;
        for j in 0..i {
            let avg = (a[(i, j)] + a[(j, i)].conj()) * 0.5;
            a[(i, j)] = avg;
            a[(j, i)] = avg.conj();
        }
    }
}

fn check_square(a: &CMatrix, what: &str) -> Result<()> {
    if a.nrows() != a.ncols() {
        return Err(LisError::Dimension(format!(
            "{what}: expected a square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    Ok(())
}

fn check_hermitian(a: &CMatrix, what: &str) -> Result<()> {
    check_square(a, what)?;
    if !is_finite(a) {
        return Err(LisError::Domain(format!("{what}: non-finite entry")));
    }
    let dev = max_abs_entry(&(a - a.adjoint()));
    let tol = HERMITIAN_TOL * max_abs_entry(a).max(1.0);
    if dev > tol {
        return Err(LisError::Domain(format!(
            "{what}: matrix is not Hermitian (max |A - A^H| = {dev:e})"
        )));
    }
    Ok(())
}

/// Indices that sort `values` descending; ties keep input order.
fn descending_order(values: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
    idx
}

fn select_columns(a: &CMatrix, order: &[usize]) -> CMatrix {
    CMatrix::from_fn(a.nrows(), order.len(), |i, j| a[(i, order[j])])
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues descending.
pub fn hermitian_eig(a: &CMatrix) -> Result<EigDecomp> {
    check_hermitian(a, "hermitian_eig")?;
    let mut sym = a.clone();
    hermitize_mut(&mut sym);
    let eig = SymmetricEigen::new(sym);
    let raw: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    let order = descending_order(&raw);
    Ok(EigDecomp {
        basis: select_columns(&eig.eigenvectors, &order),
        values: order.iter().map(|&i| raw[i]).collect(),
    })
}

/// Thin SVD with singular values descending.
pub fn svd(a: &CMatrix) -> Result<SvdDecomp> {
    if !is_finite(a) {
        return Err(LisError::Domain("svd: non-finite entry".into()));
    }
    let (m, n) = a.shape();
    let r = m.min(n);
    if r == 0 {
        return Ok(SvdDecomp {
            left: CMatrix::zeros(m, 0),
            singulars: Vec::new(),
            right: CMatrix::zeros(n, 0),
        });
    }
    let dec = SVD::new(a.clone(), true, true);
    let u = dec.u.expect("left singular vectors requested");
    let v_t = dec.v_t.expect("right singular vectors requested");
    let raw: Vec<f64> = dec.singular_values.iter().copied().collect();
    let order = descending_order(&raw);
    let right = CMatrix::from_fn(n, r, |i, j| v_t[(order[j], i)].conj());
    Ok(SvdDecomp {
        left: select_columns(&u, &order),
        singulars: order.iter().map(|&i| raw[i].max(0.0)).collect(),
        right,
    })
}

/// Base-2 log-determinant of a Hermitian positive-definite matrix, taken
/// from the pivots of a Cholesky factorization.
pub fn logdet2_hpd(a: &CMatrix) -> Result<f64> {
    check_hermitian(a, "logdet2_hpd")?;
    let n = a.nrows();
    let mut l = CMatrix::zeros(n, n);
    let mut acc = 0.0;
    for j in 0..n {
        let mut d = a[(j, j)].re;
        for k in 0..j {
            d -= l[(j, k)].norm_sqr();
        }
        if !(d > 0.0) {
            return Err(LisError::Domain(format!(
                "logdet2_hpd: matrix is not positive definite (pivot {d:e} at {j})"
            )));
        }
        let pivot = d.sqrt();
        l[(j, j)] = Complex64::new(pivot, 0.0);
        for i in (j + 1)..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = s / pivot;
        }
        acc += pivot.log2();
    }
    Ok(2.0 * acc)
}

/// Orthonormal basis (m x r) for the column space of `a`, keeping singular
/// directions above `rank_tol * sigma_max`.
pub fn orthonormal_range(a: &CMatrix, rank_tol: f64) -> Result<CMatrix> {
    if !(rank_tol > 0.0) {
        return Err(LisError::Domain(format!(
            "orthonormal_range: rank_tol must be positive, got {rank_tol}"
        )));
    }
    let dec = svd(a)?;
    let r = dec.rank(rank_tol);
    Ok(dec.left.columns(0, r).into_owned())
}

/// `A^{-1/2}` for Hermitian positive-definite `A`.
pub fn inv_sqrt_hpd(a: &CMatrix) -> Result<CMatrix> {
    let eig = hermitian_eig(a)?;
    inv_sqrt_from_eig(&eig)
}

/// `A^{-1/2}` from an existing eigen-decomposition of `A`.
pub fn inv_sqrt_from_eig(eig: &EigDecomp) -> Result<CMatrix> {
    if let Some(&min) = eig.values.last() {
        if !(min > 0.0) {
            return Err(LisError::Domain(format!(
                "inv_sqrt_hpd: matrix is not positive definite (min eigenvalue {min:e})"
            )));
        }
    }
    let mut scaled = eig.basis.clone();
    for (j, &v) in eig.values.iter().enumerate() {
        scaled.column_mut(j).scale_mut(1.0 / v.sqrt());
    }
    let mut b = scaled * eig.basis.adjoint();
    hermitize_mut(&mut b);
    Ok(b)
}
