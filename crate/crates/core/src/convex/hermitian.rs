//! Dense Hermitian matrices and the spectral utilities used for rank-one
//! extraction.

use nalgebra::SymmetricEigen;

use crate::error::{Error, Result};
use crate::scalar::{abs2, creal, CMat, CVec, Complex, Real};

/// Square complex matrix kept exactly Hermitian.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix<T: Real>(CMat<T>);

/// Eigen-decomposition with eigenvalues in descending order.
#[derive(Debug, Clone)]
pub struct HermitianEigen<T: Real> {
    pub values: Vec<T>,
    /// Orthonormal eigenvectors stored as columns, matching `values`.
    pub vectors: CMat<T>,
}

impl<T: Real> HermitianEigen<T> {
    pub fn vector(&self, i: usize) -> CVec<T> {
        self.vectors.column(i).into_owned()
    }
}

impl<T: Real> HermitianMatrix<T> {
    /// Symmetrizes `m` as `(m + m^H) / 2`.
    ///
    /// Panics if `m` is not square.
    pub fn new(m: CMat<T>) -> Self {
        assert_eq!(m.nrows(), m.ncols(), "Hermitian matrix must be square");
        let half = T::lit(0.5);
        let mut out = m.clone();
        let n = m.nrows();
        for i in 0..n {
            out[(i, i)] = creal(m[(i, i)].re);
            for j in (i + 1)..n {
                let v = (m[(i, j)] + m[(j, i)].conj()).scale(half);
                out[(i, j)] = v;
                out[(j, i)] = v.conj();
            }
        }
        HermitianMatrix(out)
    }

    pub fn zeros(n: usize) -> Self {
        HermitianMatrix(CMat::zeros(n, n))
    }

    pub fn identity(n: usize) -> Self {
        HermitianMatrix(CMat::identity(n, n))
    }

    pub fn from_real_diagonal(d: &[T]) -> Self {
        let n = d.len();
        let mut m = CMat::zeros(n, n);
        for (i, &v) in d.iter().enumerate() {
            m[(i, i)] = creal(v);
        }
        HermitianMatrix(m)
    }

    /// `h h^H`.
    pub fn rank_one(h: &CVec<T>) -> Self {
        HermitianMatrix(h * h.adjoint())
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &CMat<T> {
        &self.0
    }

    pub fn into_inner(self) -> CMat<T> {
        self.0
    }

    pub fn trace(&self) -> T {
        (0..self.dim()).fold(T::zero(), |acc, i| acc + self.0[(i, i)].re)
    }

    /// Real trace pairing `tr(A B)`.
    pub fn inner(&self, other: &HermitianMatrix<T>) -> T {
        frob_inner(&self.0, &other.0)
    }

    /// Quadratic form `v^H A v`.
    pub fn quad_form(&self, v: &CVec<T>) -> T {
        (v.adjoint() * &self.0 * v)[(0, 0)].re
    }

    pub fn frobenius_norm(&self) -> T {
        self.0.iter().fold(T::zero(), |acc, z| acc + abs2(*z)).sqrt()
    }

    /// All eigenpairs, eigenvalues descending. Each eigenvector is phase
    /// normalized so that its largest-magnitude entry (lowest index on ties)
    /// is real and positive.
    pub fn eig(&self) -> HermitianEigen<T> {
        let n = self.dim();
        if n == 0 {
            return HermitianEigen {
                values: Vec::new(),
                vectors: CMat::zeros(0, 0),
            };
        }
        let se = SymmetricEigen::new(self.0.clone());
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| {
            se.eigenvalues[b]
                .partial_cmp(&se.eigenvalues[a])
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        let mut vectors = CMat::zeros(n, n);
        let mut values = Vec::with_capacity(n);
        for (dst, &src) in order.iter().enumerate() {
            values.push(se.eigenvalues[src]);
            let mut v = se.eigenvectors.column(src).into_owned();
            normalize_phase(&mut v);
            vectors.set_column(dst, &v);
        }
        HermitianEigen { values, vectors }
    }

    /// Number of eigenvalues above `tol_rank · λ_max`; zero when
    /// `λ_max` is below the absolute floor.
    pub fn numerical_rank(&self, tol_rank: T) -> usize {
        rank_of_spectrum(&self.eig().values, tol_rank)
    }

    /// Unit eigenvector of the second-largest eigenvalue.
    pub fn second_eigvec(&self, tol_rank: T) -> Result<CVec<T>> {
        let e = self.eig();
        let rank = rank_of_spectrum(&e.values, tol_rank);
        if rank < 2 {
            return Err(Error::Precondition(format!(
                "second eigenvector requested from a matrix of numerical rank {rank}"
            )));
        }
        Ok(e.vector(1))
    }

    /// Principal square root with negative eigenvalues clipped to zero.
    pub fn psd_sqrt(&self) -> CMat<T> {
        let e = self.eig();
        let n = self.dim();
        let mut scaled = e.vectors.clone();
        for j in 0..n {
            let s = e.values[j].max(T::zero()).sqrt();
            for i in 0..n {
                scaled[(i, j)] = scaled[(i, j)].scale(s);
            }
        }
        &scaled * e.vectors.adjoint()
    }

    /// Projection onto the PSD cone (eigenvalue clipping).
    pub fn nearest_psd(&self) -> HermitianMatrix<T> {
        let e = self.eig();
        let n = self.dim();
        let mut scaled = e.vectors.clone();
        for j in 0..n {
            let s = e.values[j].max(T::zero());
            for i in 0..n {
                scaled[(i, j)] = scaled[(i, j)].scale(s);
            }
        }
        HermitianMatrix::new(&scaled * e.vectors.adjoint())
    }

    /// Dominant eigenvector scaled by `√λ₁`, i.e. the best rank-one factor.
    pub fn dominant_factor(&self) -> CVec<T> {
        let e = self.eig();
        if e.values.is_empty() {
            return CVec::zeros(0);
        }
        let s = e.values[0].max(T::zero()).sqrt();
        e.vector(0).map(|z| z.scale(s))
    }
}

fn rank_of_spectrum<T: Real>(values: &[T], tol_rank: T) -> usize {
    let Some(&lmax) = values.first() else {
        return 0;
    };
    if lmax <= absolute_floor::<T>() {
        return 0;
    }
    values.iter().filter(|&&v| v > tol_rank * lmax).count()
}

fn absolute_floor<T: Real>() -> T {
    T::lit(T::UNIT_ROUNDOFF * 1e2)
}

/// `Re tr(A^H B)`, which equals `tr(A B)` for Hermitian `A`.
pub(crate) fn frob_inner<T: Real>(a: &CMat<T>, b: &CMat<T>) -> T {
    a.iter()
        .zip(b.iter())
        .fold(T::zero(), |acc, (x, y)| acc + x.re * y.re + x.im * y.im)
}

pub(crate) fn normalize_phase<T: Real>(v: &mut CVec<T>) {
    let mags: Vec<T> = v.iter().map(|z| abs2(*z)).collect();
    let Some(max) = mags.iter().copied().reduce(|a, b| a.max(b)) else {
        return;
    };
    if max <= T::zero() {
        return;
    }
    let thresh = max * (T::one() - T::lit(1e-8));
    let idx = mags.iter().position(|&m| m >= thresh).unwrap_or(0);
    let pivot = v[idx];
    let unit = pivot.conj().unscale(max.sqrt());
    for z in v.iter_mut() {
        *z *= unit;
    }
    v[idx] = Complex::new(v[idx].re, T::zero());
}
