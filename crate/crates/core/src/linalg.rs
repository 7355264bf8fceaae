//! Thin wrappers over the dense complex kernels in `faer`.

use faer::dyn_stack::{MemBuffer, MemStack};
use faer::linalg::evd::ComputeEigenvectors;
use faer::linalg::solvers::{GeneralizedEigen, PartialPivLu, Solve};
use faer::diag::Diag;
use faer::{Col, Mat, Par};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMat = Mat<Complex64>;

/// Generalized eigenvalues `α_k / β_k` of the pencil `(a, b)`. Infinite
/// eigenvalues come back with `β = 0`.
///
/// The eigenvalue-only QZ path of faer 0.24 returns `0/0` for most of an
/// Orr–Sommerfeld pencil, so the Schur vectors are always accumulated into a
/// scratch matrix that is then discarded.
pub fn generalized_eigenvalues(a: &CMat, b: &CMat) -> Result<Vec<(Complex64, Complex64)>> {
    let n = a.nrows();
    let mut a = a.clone();
    let mut b = b.clone();
    let mut s = Diag::<Complex64>::zeros(n);
    let mut beta = Diag::<Complex64>::zeros(n);
    let mut vecs = CMat::zeros(n, n);
    let par = Par::Seq;
    let req = faer::linalg::gevd::gevd_scratch::<Complex64>(
        n,
        ComputeEigenvectors::No,
        ComputeEigenvectors::Yes,
        par,
        Default::default(),
    );
    let mut mem = MemBuffer::new(req);
    faer::linalg::gevd::gevd_cplx(
        a.as_mut(),
        b.as_mut(),
        s.as_mut(),
        beta.as_mut(),
        None,
        Some(vecs.as_mut()),
        par,
        MemStack::new(&mut mem),
        Default::default(),
    )
    .map_err(|e| Error::Eigensolver(format!("{e:?}")))?;
    Ok((0..n).map(|k| (s[k], beta[k])).collect())
}

/// Generalized eigenvalues with right eigenvectors (columns of the returned
/// matrix).
pub fn generalized_eigen(a: &CMat, b: &CMat) -> Result<(Vec<(Complex64, Complex64)>, CMat)> {
    let ge = GeneralizedEigen::new(a.as_ref(), b.as_ref())
        .map_err(|e| Error::Eigensolver(format!("{e:?}")))?;
    let n = a.nrows();
    let vals = (0..n).map(|k| (ge.S_a()[k], ge.S_b()[k])).collect();
    Ok((vals, ge.U().to_owned()))
}

/// LU factorization with partial pivoting.
pub struct Lu {
    lu: PartialPivLu<Complex64>,
    n: usize,
}

impl Lu {
    pub fn new(m: &CMat) -> Self {
        Self {
            lu: m.partial_piv_lu(),
            n: m.nrows(),
        }
    }

    pub fn solve(&self, rhs: &[Complex64]) -> Vec<Complex64> {
        let col = Col::<Complex64>::from_fn(self.n, |i| rhs[i]);
        let x = self.lu.solve(&col);
        (0..self.n).map(|i| x[i]).collect()
    }

    /// Ratio of the largest to the smallest pivot of `U`: a cheap lower-end
    /// estimate of the condition number.
    pub fn pivot_ratio(&self) -> f64 {
        let u = self.lu.U();
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for i in 0..self.n {
            let v = u[(i, i)].norm();
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if lo == 0.0 {
            f64::INFINITY
        } else {
            hi / lo
        }
    }
}

pub fn cmatvec(m: &CMat, v: &[Complex64]) -> Vec<Complex64> {
    let n = m.nrows();
    (0..n)
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)] * v[j]).sum())
        .collect()
}

/// Infinity norm of a matrix (max row sum).
pub fn norm_inf(m: &CMat) -> f64 {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)].norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

pub fn vnorm_inf(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm()).fold(0.0, f64::max)
}
