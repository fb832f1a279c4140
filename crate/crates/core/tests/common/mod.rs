//! Shared helpers for the integration tests: random instances and an
//! LU-based determinant that does not share code with the library's
//! Cholesky / SVD paths.
#![allow(dead_code)]

use lis_uplink::numerics::CMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn cgauss<R: Rng>(rng: &mut R) -> Complex64 {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re * s, im * s)
}

pub fn random_matrix<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| cgauss(rng))
}

/// Uniformly distributed unit vector in C^n.
pub fn random_unit<R: Rng>(rng: &mut R, n: usize) -> CMatrix {
    let v = random_matrix(rng, n, 1);
    let norm = v.norm();
    v / Complex64::new(norm, 0.0)
}

/// `G^H G + I`, Hermitian positive definite.
pub fn random_hpd<R: Rng>(rng: &mut R, n: usize) -> CMatrix {
    let g = random_matrix(rng, n, n);
    let mut a = g.adjoint() * g + CMatrix::identity(n, n);
    for i in 0..n {
        for j in 0..i {
            a[(j, i)] = a[(i, j)].conj();
        }
        a[(i, i)].im = 0.0;
    }
    a
}

/// `log2 |det A|` by Gaussian elimination with partial pivoting.
pub fn lu_logdet2(a: &CMatrix) -> f64 {
    let n = a.nrows();
    assert_eq!(n, a.ncols());
    let mut m = a.clone();
    let mut acc = 0.0;
    for col in 0..n {
        let pivot_row = (col..n)
            .max_by(|&x, &y| m[(x, col)].norm().total_cmp(&m[(y, col)].norm()))
            .unwrap();
        if pivot_row != col {
            m.swap_rows(pivot_row, col);
        }
        let p = m[(col, col)];
        assert!(p.norm() > 0.0, "singular matrix in LU oracle");
        acc += p.norm().log2();
        for r in (col + 1)..n {
            let f = m[(r, col)] / p;
            for c in col..n {
                let v = m[(col, c)];
                m[(r, c)] -= f * v;
            }
        }
    }
    acc
}

/// Mutual information in its two-determinant (covariance) form:
/// `log2|rho W^H H H^H W + W^H W| - log2|W^H W|`.
pub fn two_determinant_rate(h: &CMatrix, w: &CMatrix, rho: f64) -> f64 {
    let whh = w.adjoint() * h;
    let wtw = w.adjoint() * w;
    let cov = &whh * whh.adjoint() * Complex64::new(rho, 0.0) + &wtw;
    lu_logdet2(&cov) - lu_logdet2(&wtw)
}

pub fn block_diag(blocks: &[CMatrix]) -> CMatrix {
    let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
    let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = CMatrix::zeros(rows, cols);
    let (mut r, mut c) = (0, 0);
    for b in blocks {
        for i in 0..b.nrows() {
            for j in 0..b.ncols() {
                out[(r + i, c + j)] = b[(i, j)];
            }
        }
        r += b.nrows();
        c += b.ncols();
    }
    out
}

pub fn stack(blocks: &[CMatrix]) -> CMatrix {
    let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
    let k = blocks[0].ncols();
    let mut out = CMatrix::zeros(rows, k);
    let mut r = 0;
    for b in blocks {
        for i in 0..b.nrows() {
            for j in 0..k {
                out[(r + i, j)] = b[(i, j)];
            }
        }
        r += b.nrows();
    }
    out
}

pub fn max_abs(a: &CMatrix) -> f64 {
    a.iter().fold(0.0, |m, z| m.max(z.norm()))
}

/// Random unitary via QR-free Gram-Schmidt of a Gaussian matrix.
pub fn random_unitary<R: Rng>(rng: &mut R, n: usize) -> CMatrix {
    let g = random_matrix(rng, n, n);
    let mut q = CMatrix::zeros(n, n);
    for j in 0..n {
        let mut v = g.column(j).into_owned();
        for _ in 0..2 {
            for i in 0..j {
                let qi = q.column(i).into_owned();
                let p = qi.dotc(&v);
                v -= qi * p;
            }
        }
        let norm = v.norm();
        q.set_column(j, &(v / Complex64::new(norm, 0.0)));
    }
    q
}
