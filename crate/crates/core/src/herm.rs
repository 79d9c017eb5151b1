//! Dense complex Hermitian linear algebra.
//!
//! Everything downstream (Rényi objectives, theta searches, purifications)
//! runs on the types in this module: [`HermitianOperator`] with its refined
//! views [`DensityOperator`] and [`Projector`], and the cyclic-Jacobi
//! eigendecomposition [`eig_hermitian`]. Jacobi is slower than a Householder
//! tridiagonalization but it is simple, has no external dependencies, and is
//! bit-stable across runs, which matters for reproducible bound evaluations.
//! Intended scale is dim <= 64.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::CqError;

/// Tolerance for Hermitian symmetry of raw input entries.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Eigenvalues of a density operator may undershoot zero by this much.
pub const DENSITY_EIG_TOL: f64 = 1e-10;
/// Trace of a density operator must be 1 within this tolerance.
pub const DENSITY_TRACE_TOL: f64 = 1e-10;
/// Idempotency tolerance for projectors (Frobenius norm of P^2 - P).
pub const PROJECTOR_TOL: f64 = 1e-9;
/// Default relative rank tolerance: eigenvalues below this times the largest
/// eigenvalue are treated as exactly zero.
pub const RANK_TOL_DEFAULT: f64 = 1e-10;
/// Kronecker products refuse to produce matrices larger than this.
pub const KRON_DIM_CAP: usize = 4096;

const JACOBI_MAX_SWEEPS: usize = 64;

/// Dense complex Hermitian matrix, row-major storage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HermitianOperator {
    dim: usize,
    data: Vec<Complex64>,
}

impl HermitianOperator {
    /// Validate and wrap raw entries. Fails if any entry is non-finite or the
    /// matrix deviates from `A = A†` by more than [`HERMITIAN_TOL`]. The
    /// stored matrix is symmetrized, so later arithmetic sees `A = A†`
    /// exactly.
    pub fn new(dim: usize, data: Vec<Complex64>) -> Result<Self, CqError> {
        if dim == 0 || data.len() != dim * dim {
            return Err(CqError::DimensionMismatch(format!(
                "expected {} entries for dim {}, got {}",
                dim * dim,
                dim,
                data.len()
            )));
        }
        let mut max_asym: f64 = 0.0;
        for i in 0..dim {
            for j in 0..dim {
                let a = data[i * dim + j];
                if !a.re.is_finite() || !a.im.is_finite() {
                    return Err(CqError::InvalidInput(format!(
                        "non-finite entry at ({i},{j})"
                    )));
                }
                let b = data[j * dim + i];
                max_asym = max_asym.max((a - b.conj()).norm());
            }
        }
        if max_asym > HERMITIAN_TOL {
            return Err(CqError::NotHermitian { max_asym });
        }
        let mut op = Self { dim, data };
        op.symmetrize();
        Ok(op)
    }

    /// Build without the symmetry check; used internally where hermiticity
    /// holds by construction. Still symmetrizes to kill round-off drift.
    pub(crate) fn from_parts(dim: usize, data: Vec<Complex64>) -> Self {
        debug_assert_eq!(data.len(), dim * dim);
        let mut op = Self { dim, data };
        op.symmetrize();
        op
    }

    fn symmetrize(&mut self) {
        let d = self.dim;
        for i in 0..d {
            self.data[i * d + i] = Complex64::new(self.data[i * d + i].re, 0.0);
            for j in (i + 1)..d {
                let avg = 0.5 * (self.data[i * d + j] + self.data[j * d + i].conj());
                self.data[i * d + j] = avg;
                self.data[j * d + i] = avg.conj();
            }
        }
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![Complex64::new(0.0, 0.0); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = Complex64::new(1.0, 0.0);
        }
        m
    }

    /// Diagonal matrix from real entries.
    pub fn from_diag(diag: &[f64]) -> Self {
        let dim = diag.len();
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = Complex64::new(diag[i], 0.0);
        }
        m
    }

    /// Rank-one |v⟩⟨v|.
    pub fn outer(v: &[Complex64]) -> Self {
        let dim = v.len();
        let mut data = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                data.push(v[i] * v[j].conj());
            }
        }
        Self::from_parts(dim, data)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.dim + j]
    }

    #[inline]
    pub(crate) fn set(&mut self, i: usize, j: usize, v: Complex64) {
        self.data[i * self.dim + j] = v;
    }

    /// Trace; real for Hermitian matrices.
    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.data[i * self.dim + i].re).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a + b)
            .collect();
        Self::from_parts(self.dim, data)
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a - b)
            .collect();
        Self::from_parts(self.dim, data)
    }

    pub fn scale(&self, factor: f64) -> Self {
        let data = self.data.iter().map(|a| a * factor).collect();
        Self::from_parts(self.dim, data)
    }

    /// Matrix product; the result of A·B is not Hermitian in general, so this
    /// returns raw entries.
    pub fn matmul_raw(&self, other: &Self) -> Vec<Complex64> {
        assert_eq!(self.dim, other.dim);
        let d = self.dim;
        let mut out = vec![Complex64::new(0.0, 0.0); d * d];
        for i in 0..d {
            for k in 0..d {
                let aik = self.data[i * d + k];
                if aik.norm_sqr() == 0.0 {
                    continue;
                }
                for j in 0..d {
                    out[i * d + j] += aik * other.data[k * d + j];
                }
            }
        }
        out
    }

    /// Tr(A·B); real when both are Hermitian.
    pub fn trace_product(&self, other: &Self) -> f64 {
        assert_eq!(self.dim, other.dim);
        let d = self.dim;
        let mut acc = 0.0;
        for i in 0..d {
            for j in 0..d {
                // Tr(AB) = sum_ij A_ij B_ji = sum_ij A_ij conj(B_ij)
                let a = self.data[i * d + j];
                let b = other.data[i * d + j];
                acc += a.re * b.re + a.im * b.im;
            }
        }
        acc
    }

    /// ⟨v|A|v⟩; real for Hermitian A.
    pub fn expectation(&self, v: &[Complex64]) -> f64 {
        assert_eq!(v.len(), self.dim);
        let d = self.dim;
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..d {
            let mut row = Complex64::new(0.0, 0.0);
            for j in 0..d {
                row += self.data[i * d + j] * v[j];
            }
            acc += v[i].conj() * row;
        }
        acc.re
    }

    /// A·v.
    pub fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(v.len(), self.dim);
        let d = self.dim;
        let mut out = vec![Complex64::new(0.0, 0.0); d];
        for i in 0..d {
            let mut acc = Complex64::new(0.0, 0.0);
            for j in 0..d {
                acc += self.data[i * d + j] * v[j];
            }
            out[i] = acc;
        }
        out
    }

    /// Largest absolute difference to another matrix, entrywise.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

/// Hermitian PSD matrix with unit trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityOperator(HermitianOperator);

impl DensityOperator {
    /// Validate PSD (eigenvalues >= -1e-10) and unit trace (within 1e-10).
    pub fn new(op: HermitianOperator) -> Result<Self, CqError> {
        let tr = op.trace();
        if (tr - 1.0).abs() > DENSITY_TRACE_TOL {
            return Err(CqError::NotDensity(format!("trace = {tr}, expected 1")));
        }
        let eig = eig_hermitian(&op)?;
        let min_eig = eig.eigenvalues.last().copied().unwrap_or(0.0);
        if min_eig < -DENSITY_EIG_TOL {
            return Err(CqError::NotDensity(format!(
                "smallest eigenvalue = {min_eig:.3e}"
            )));
        }
        Ok(Self(op))
    }

    /// Wrap a matrix known PSD/trace-1 by construction.
    pub(crate) fn from_herm_unchecked(op: HermitianOperator) -> Self {
        Self(op)
    }

    /// Pure state |v⟩⟨v| from a unit vector.
    pub fn pure_state(v: &[Complex64]) -> Result<Self, CqError> {
        let n2: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        if (n2 - 1.0).abs() > 1e-9 {
            return Err(CqError::InvalidInput(format!(
                "pure state vector has norm² = {n2}"
            )));
        }
        Ok(Self(HermitianOperator::outer(v)))
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self(HermitianOperator::identity(dim).scale(1.0 / dim as f64))
    }

    pub fn as_herm(&self) -> &HermitianOperator {
        &self.0
    }

    pub fn into_herm(self) -> HermitianOperator {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }
}

impl std::ops::Deref for DensityOperator {
    type Target = HermitianOperator;
    fn deref(&self) -> &Self::Target {
        &self.0
    }
}

/// Hermitian idempotent (P² = P).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Projector(HermitianOperator);

impl Projector {
    pub fn new(op: HermitianOperator) -> Result<Self, CqError> {
        let sq = HermitianOperator::from_parts(op.dim(), op.matmul_raw(&op));
        let residual = sq.max_abs_diff(&op);
        if residual > PROJECTOR_TOL {
            return Err(CqError::NotProjector { residual });
        }
        Ok(Self(op))
    }

    pub(crate) fn from_herm_unchecked(op: HermitianOperator) -> Self {
        Self(op)
    }

    pub fn as_herm(&self) -> &HermitianOperator {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    /// Rank as the rounded trace.
    pub fn rank(&self) -> usize {
        self.0.trace().round() as usize
    }
}

impl std::ops::Deref for Projector {
    type Target = HermitianOperator;
    fn deref(&self) -> &Self::Target {
        &self.0
    }
}

/// Result of a Hermitian eigendecomposition: `A = U diag(λ) U†` with
/// eigenvalues sorted descending and eigenvectors as the columns of `U`.
#[derive(Debug, Clone)]
pub struct EigenSystem {
    pub eigenvalues: Vec<f64>,
    /// Unitary matrix, column k is the eigenvector of `eigenvalues[k]`.
    pub eigenvectors: HermitianStoreUnitary,
}

/// Column-major-accessible dense unitary. Not Hermitian itself; stored
/// separately from [`HermitianOperator`] to keep the invariants honest.
#[derive(Debug, Clone)]
pub struct HermitianStoreUnitary {
    dim: usize,
    /// Row-major entries.
    data: Vec<Complex64>,
}

impl HermitianStoreUnitary {
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.dim + j]
    }

    /// Column k as a vector.
    pub fn column(&self, k: usize) -> Vec<Complex64> {
        (0..self.dim).map(|i| self.get(i, k)).collect()
    }

    /// Max deviation of U†U from the identity.
    pub fn unitarity_residual(&self) -> f64 {
        let d = self.dim;
        let mut max_dev: f64 = 0.0;
        for j in 0..d {
            for k in j..d {
                let mut acc = Complex64::new(0.0, 0.0);
                for i in 0..d {
                    acc += self.get(i, j).conj() * self.get(i, k);
                }
                let target = if j == k { 1.0 } else { 0.0 };
                max_dev = max_dev.max((acc - target).norm());
            }
        }
        max_dev
    }

    /// U · diag(f) · U† as a Hermitian matrix.
    pub fn conjugate_diag(&self, diag: &[f64]) -> HermitianOperator {
        let d = self.dim;
        assert_eq!(diag.len(), d);
        let mut data = vec![Complex64::new(0.0, 0.0); d * d];
        for k in 0..d {
            let f = diag[k];
            if f == 0.0 {
                continue;
            }
            for i in 0..d {
                let uik = self.get(i, k) * f;
                for j in i..d {
                    data[i * d + j] += uik * self.get(j, k).conj();
                }
            }
        }
        for i in 0..d {
            for j in 0..i {
                data[i * d + j] = data[j * d + i].conj();
            }
        }
        HermitianOperator::from_parts(d, data)
    }

    /// U† · A · U (rotate A into the eigenbasis). A must be Hermitian; the
    /// result is Hermitian again.
    pub fn rotate_into_basis(&self, a: &HermitianOperator) -> HermitianOperator {
        let d = self.dim;
        assert_eq!(a.dim(), d);
        // tmp = A · U
        let mut tmp = vec![Complex64::new(0.0, 0.0); d * d];
        for i in 0..d {
            for k in 0..d {
                let aik = a.get(i, k);
                if aik.norm_sqr() == 0.0 {
                    continue;
                }
                for j in 0..d {
                    tmp[i * d + j] += aik * self.get(k, j);
                }
            }
        }
        // out = U† · tmp
        let mut out = vec![Complex64::new(0.0, 0.0); d * d];
        for i in 0..d {
            for k in 0..d {
                let u = self.get(k, i).conj();
                if u.norm_sqr() == 0.0 {
                    continue;
                }
                for j in 0..d {
                    out[i * d + j] += u * tmp[k * d + j];
                }
            }
        }
        HermitianOperator::from_parts(d, out)
    }

    /// U · A · U† (rotate A back from the eigenbasis).
    pub fn rotate_from_basis(&self, a: &HermitianOperator) -> HermitianOperator {
        let d = self.dim;
        assert_eq!(a.dim(), d);
        // tmp = U · A
        let mut tmp = vec![Complex64::new(0.0, 0.0); d * d];
        for i in 0..d {
            for k in 0..d {
                let uik = self.get(i, k);
                if uik.norm_sqr() == 0.0 {
                    continue;
                }
                for j in 0..d {
                    tmp[i * d + j] += uik * a.get(k, j);
                }
            }
        }
        let mut out = vec![Complex64::new(0.0, 0.0); d * d];
        for i in 0..d {
            for k in 0..d {
                let t = tmp[i * d + k];
                if t.norm_sqr() == 0.0 {
                    continue;
                }
                for j in 0..d {
                    out[i * d + j] += t * self.get(j, k).conj();
                }
            }
        }
        HermitianOperator::from_parts(d, out)
    }
}

impl EigenSystem {
    /// Rebuild U diag(λ) U†; used by the reconstruction invariant tests.
    pub fn reconstruct(&self) -> HermitianOperator {
        self.eigenvectors.conjugate_diag(&self.eigenvalues)
    }

    /// Apply a scalar function to the spectrum: U diag(f(λ)) U†.
    pub fn map_eigenvalues(&self, f: impl Fn(f64) -> f64) -> HermitianOperator {
        let mapped: Vec<f64> = self.eigenvalues.iter().map(|&l| f(l)).collect();
        self.eigenvectors.conjugate_diag(&mapped)
    }
}

/// Eigendecomposition of a Hermitian matrix by cyclic Jacobi with complex
/// rotations. Deterministic; adequate up to dim ~64.
pub fn eig_hermitian(h: &HermitianOperator) -> Result<EigenSystem, CqError> {
    let d = h.dim();
    let mut a = h.clone();
    let mut u = HermitianStoreUnitary {
        dim: d,
        data: HermitianOperator::identity(d).data,
    };
    if d == 1 {
        return Ok(EigenSystem {
            eigenvalues: vec![a.get(0, 0).re],
            eigenvectors: u,
        });
    }

    let norm = a.frobenius_norm().max(f64::MIN_POSITIVE);
    let tol = 1e-14 * norm;

    let mut converged = false;
    let mut sweeps = 0;
    while sweeps < JACOBI_MAX_SWEEPS {
        let off = off_diagonal_norm(&a);
        if off <= tol {
            converged = true;
            break;
        }
        for p in 0..d {
            for q in (p + 1)..d {
                jacobi_rotate(&mut a, &mut u, p, q);
            }
        }
        sweeps += 1;
    }
    if !converged && off_diagonal_norm(&a) > tol {
        return Err(CqError::EigNonConvergence {
            residual: off_diagonal_norm(&a),
            sweeps,
        });
    }

    let mut order: Vec<usize> = (0..d).collect();
    let diag: Vec<f64> = (0..d).map(|i| a.get(i, i).re).collect();
    order.sort_by(|&i, &j| diag[j].partial_cmp(&diag[i]).unwrap());

    let eigenvalues: Vec<f64> = order.iter().map(|&i| diag[i]).collect();
    let mut vecs = vec![Complex64::new(0.0, 0.0); d * d];
    for (new_col, &old_col) in order.iter().enumerate() {
        for i in 0..d {
            vecs[i * d + new_col] = u.get(i, old_col);
        }
    }
    Ok(EigenSystem {
        eigenvalues,
        eigenvectors: HermitianStoreUnitary { dim: d, data: vecs },
    })
}

fn off_diagonal_norm(a: &HermitianOperator) -> f64 {
    let d = a.dim();
    let mut acc = 0.0;
    for i in 0..d {
        for j in (i + 1)..d {
            acc += 2.0 * a.get(i, j).norm_sqr();
        }
    }
    acc.sqrt()
}

/// One complex Jacobi rotation zeroing A[p][q]. Updates A in place and
/// accumulates the rotation into U (U ← U·J).
fn jacobi_rotate(a: &mut HermitianOperator, u: &mut HermitianStoreUnitary, p: usize, q: usize) {
    let d = a.dim();
    let apq = a.get(p, q);
    let r = apq.norm();
    if r == 0.0 {
        return;
    }
    let phase = apq / r; // e^{i phi}
    let app = a.get(p, p).re;
    let aqq = a.get(q, q).re;
    let tau = (aqq - app) / (2.0 * r);
    let t = if tau >= 0.0 {
        1.0 / (tau + (1.0 + tau * tau).sqrt())
    } else {
        -1.0 / (-tau + (1.0 + tau * tau).sqrt())
    };
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;

    // Rotation J: J[p][p]=c, J[p][q]=s·e^{i phi}, J[q][p]=-s·e^{-i phi}, J[q][q]=c.
    let se = s * phase;
    let sec = se.conj();

    // Rows/columns p and q of A.
    for k in 0..d {
        if k == p || k == q {
            continue;
        }
        let akp = a.get(k, p);
        let akq = a.get(k, q);
        let new_akp = c * akp - sec * akq;
        let new_akq = se * akp + c * akq;
        a.set(k, p, new_akp);
        a.set(p, k, new_akp.conj());
        a.set(k, q, new_akq);
        a.set(q, k, new_akq.conj());
    }
    let new_app = app * c * c + aqq * s * s - 2.0 * s * c * r;
    let new_aqq = app * s * s + aqq * c * c + 2.0 * s * c * r;
    a.set(p, p, Complex64::new(new_app, 0.0));
    a.set(q, q, Complex64::new(new_aqq, 0.0));
    a.set(p, q, Complex64::new(0.0, 0.0));
    a.set(q, p, Complex64::new(0.0, 0.0));

    for k in 0..d {
        let ukp = u.data[k * d + p];
        let ukq = u.data[k * d + q];
        u.data[k * d + p] = c * ukp - sec * ukq;
        u.data[k * d + q] = se * ukp + c * ukq;
    }
}

/// Fractional matrix power A^alpha for PSD A and alpha in [0, 1], with the
/// convention 0^0 = 0: eigenvalues below `RANK_TOL_DEFAULT · λ_max` are
/// treated as exactly zero, so alpha = 0 yields the range projector.
pub fn frac_power(a: &HermitianOperator, alpha: f64) -> Result<HermitianOperator, CqError> {
    frac_power_with_tol(a, alpha, RANK_TOL_DEFAULT)
}

/// [`frac_power`] with an explicit relative rank tolerance.
pub fn frac_power_with_tol(
    a: &HermitianOperator,
    alpha: f64,
    rank_tol: f64,
) -> Result<HermitianOperator, CqError> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(CqError::InvalidInput(format!(
            "fractional power exponent {alpha} outside [0, 1]"
        )));
    }
    let eig = eig_hermitian(a)?;
    let lmax = eig.eigenvalues.first().copied().unwrap_or(0.0).max(0.0);
    let floor = rank_tol * lmax;
    if let Some(&lmin) = eig.eigenvalues.last() {
        if lmin < -DENSITY_EIG_TOL.max(floor) {
            return Err(CqError::InvalidInput(format!(
                "matrix is not PSD: smallest eigenvalue {lmin:.3e}"
            )));
        }
    }
    Ok(eig.map_eigenvalues(|l| {
        if l <= floor {
            0.0
        } else if alpha == 0.0 {
            1.0
        } else {
            l.powf(alpha)
        }
    }))
}

/// Projector onto the span of eigenvectors with eigenvalue above
/// `rank_tol · λ_max`.
pub fn range_projector(a: &HermitianOperator, rank_tol: f64) -> Result<Projector, CqError> {
    let eig = eig_hermitian(a)?;
    let lmax = eig.eigenvalues.first().copied().unwrap_or(0.0).max(0.0);
    if let Some(&lmin) = eig.eigenvalues.last() {
        if lmin < -DENSITY_EIG_TOL.max(rank_tol * lmax) {
            return Err(CqError::InvalidInput(format!(
                "matrix is not PSD: smallest eigenvalue {lmin:.3e}"
            )));
        }
    }
    let floor = rank_tol * lmax;
    let proj = eig.map_eigenvalues(|l| if l > floor { 1.0 } else { 0.0 });
    Ok(Projector::from_herm_unchecked(proj))
}

/// Kronecker product with row-major block layout: index `(i_A·dim_B + i_B)`.
pub fn kron(a: &HermitianOperator, b: &HermitianOperator) -> Result<HermitianOperator, CqError> {
    let da = a.dim();
    let db = b.dim();
    let d = da.checked_mul(db).unwrap_or(usize::MAX);
    if d > KRON_DIM_CAP {
        return Err(CqError::DimensionCap {
            dim: d,
            cap: KRON_DIM_CAP,
        });
    }
    let mut data = vec![Complex64::new(0.0, 0.0); d * d];
    for ia in 0..da {
        for ja in 0..da {
            let aij = a.get(ia, ja);
            if aij.norm_sqr() == 0.0 {
                continue;
            }
            for ib in 0..db {
                for jb in 0..db {
                    data[(ia * db + ib) * d + (ja * db + jb)] = aij * b.get(ib, jb);
                }
            }
        }
    }
    Ok(HermitianOperator::from_parts(d, data))
}

/// Canonical purification of a density operator: `ψ = Σ_i √λ_i e_i ⊗ e_i` in
/// the eigenbasis of F. The partial trace of |ψ⟩⟨ψ| over the second factor
/// recovers F.
pub fn purify(f: &DensityOperator) -> Result<Vec<Complex64>, CqError> {
    let d = f.dim();
    let eig = eig_hermitian(f.as_herm())?;
    let mut psi = vec![Complex64::new(0.0, 0.0); d * d];
    for k in 0..d {
        let l = eig.eigenvalues[k].max(0.0);
        if l == 0.0 {
            continue;
        }
        let w = l.sqrt();
        let col = eig.eigenvectors.column(k);
        for i in 0..d {
            for j in 0..d {
                psi[i * d + j] += w * col[i] * col[j];
            }
        }
    }
    Ok(psi)
}

/// Partial trace over the second tensor factor of |ψ⟩⟨ψ| for ψ in dim d·d2.
pub fn partial_trace_second(psi: &[Complex64], d: usize, d2: usize) -> HermitianOperator {
    assert_eq!(psi.len(), d * d2);
    let mut data = vec![Complex64::new(0.0, 0.0); d * d];
    for i in 0..d {
        for ip in 0..d {
            let mut acc = Complex64::new(0.0, 0.0);
            for j in 0..d2 {
                acc += psi[i * d2 + j] * psi[ip * d2 + j].conj();
            }
            data[i * d + ip] = acc;
        }
    }
    HermitianOperator::from_parts(d, data)
}

/// Complex vector helpers used across the crate.
pub mod cvec {
    use num_complex::Complex64;

    pub fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
        debug_assert_eq!(a.len(), b.len());
        a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
    }

    pub fn norm(a: &[Complex64]) -> f64 {
        a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn normalize(a: &mut [Complex64]) {
        let n = norm(a);
        if n > 0.0 {
            for z in a.iter_mut() {
                *z /= n;
            }
        }
    }

    pub fn scale(a: &[Complex64], f: Complex64) -> Vec<Complex64> {
        a.iter().map(|z| z * f).collect()
    }

    pub fn axpy(y: &mut [Complex64], alpha: Complex64, x: &[Complex64]) {
        debug_assert_eq!(y.len(), x.len());
        for (yi, xi) in y.iter_mut().zip(x) {
            *yi += alpha * xi;
        }
    }

    pub fn kron_vec(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
        let mut out = Vec::with_capacity(a.len() * b.len());
        for x in a {
            for y in b {
                out.push(x * y);
            }
        }
        out
    }

    pub fn from_reals(r: &[f64]) -> Vec<Complex64> {
        r.iter().map(|&x| Complex64::new(x, 0.0)).collect()
    }
}
