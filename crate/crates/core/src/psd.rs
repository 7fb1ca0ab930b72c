//! Symmetric and positive semidefinite matrix calculus.
//!
//! Every matrix function here (roots, pseudo-inverses, projections) is a
//! spectral function of one symmetric eigendecomposition, cached on
//! [`PsdMatrix`]. Rank decisions use the scale-aware threshold
//! `tol_psd = n · ε · max(1, λ_max)`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sum;

/// Wire format `{"dim": n, "rows": [[...], ...]}`, row-major.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatrixJson {
    pub dim: usize,
    pub rows: Vec<Vec<f64>>,
}

impl MatrixJson {
    pub fn from_matrix(m: &DMatrix<f64>) -> Self {
        debug_assert_eq!(m.nrows(), m.ncols());
        MatrixJson {
            dim: m.nrows(),
            rows: (0..m.nrows())
                .map(|i| m.row(i).iter().copied().collect())
                .collect(),
        }
    }

    pub fn to_matrix(&self) -> Result<DMatrix<f64>> {
        if self.dim == 0 {
            return Err(Error::OutOfRange("matrix dimension must be positive".into()));
        }
        if self.rows.len() != self.dim {
            return Err(Error::LengthMismatch {
                expected: self.dim,
                found: self.rows.len(),
            });
        }
        for r in &self.rows {
            if r.len() != self.dim {
                return Err(Error::DimensionMismatch {
                    expected: self.dim,
                    found: r.len(),
                });
            }
        }
        let m = DMatrix::from_fn(self.dim, self.dim, |i, j| self.rows[i][j]);
        if m.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(m)
    }
}

/// A real symmetric matrix, symmetrized as `(E + Eᵗ)/2` on construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MatrixJson", into = "MatrixJson")]
pub struct SymMatrix(DMatrix<f64>);

impl SymMatrix {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch {
                expected: m.nrows(),
                found: m.ncols(),
            });
        }
        if m.nrows() == 0 {
            return Err(Error::OutOfRange("matrix dimension must be positive".into()));
        }
        if m.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self::symmetrized(m))
    }

    pub(crate) fn symmetrized(m: DMatrix<f64>) -> Self {
        let t = m.transpose();
        Self((m + t) * 0.5)
    }

    pub fn identity(dim: usize) -> Self {
        Self(DMatrix::identity(dim, dim))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    /// Eigenvalues in nonincreasing order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        sorted_eigen(&self.0).0
    }

    pub fn min_eigenvalue(&self) -> f64 {
        *self.eigenvalues().last().expect("nonempty matrix")
    }

    pub fn trace(&self) -> f64 {
        self.0.trace()
    }
}

impl TryFrom<MatrixJson> for SymMatrix {
    type Error = Error;
    fn try_from(raw: MatrixJson) -> Result<Self> {
        SymMatrix::new(raw.to_matrix()?)
    }
}

impl From<SymMatrix> for MatrixJson {
    fn from(m: SymMatrix) -> Self {
        MatrixJson::from_matrix(&m.0)
    }
}

/// An arbitrary square matrix, e.g. the off-diagonal block Ψ of a coupling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MatrixJson", into = "MatrixJson")]
pub struct GeneralMatrix(DMatrix<f64>);

impl GeneralMatrix {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if m.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self(m))
    }

    pub fn identity(dim: usize) -> Self {
        Self(DMatrix::identity(dim, dim))
    }

    pub fn rows(&self) -> usize {
        self.0.nrows()
    }

    pub fn cols(&self) -> usize {
        self.0.ncols()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    pub fn inverse(&self) -> Result<DMatrix<f64>> {
        if self.rows() != self.cols() {
            return Err(Error::Singular);
        }
        let inv = self.0.clone().try_inverse().ok_or(Error::Singular)?;
        if inv.iter().any(|c| !c.is_finite()) {
            return Err(Error::Singular);
        }
        Ok(inv)
    }
}

impl TryFrom<MatrixJson> for GeneralMatrix {
    type Error = Error;
    fn try_from(raw: MatrixJson) -> Result<Self> {
        GeneralMatrix::new(raw.to_matrix()?)
    }
}

impl From<GeneralMatrix> for MatrixJson {
    fn from(m: GeneralMatrix) -> Self {
        MatrixJson::from_matrix(&m.0)
    }
}

/// A symmetric positive semidefinite matrix with its eigendecomposition.
///
/// Eigenvalues are stored in nonincreasing order and are never negative;
/// eigenvalues within `tol_psd` below zero are clamped on construction.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "MatrixJson", into = "MatrixJson")]
pub struct PsdMatrix {
    base: SymMatrix,
    eigenvalues: Vec<f64>,
    eigenvectors: DMatrix<f64>,
}

impl PartialEq for PsdMatrix {
    fn eq(&self, other: &Self) -> bool {
        self.base == other.base
    }
}

impl TryFrom<MatrixJson> for PsdMatrix {
    type Error = Error;
    fn try_from(raw: MatrixJson) -> Result<Self> {
        PsdMatrix::new(SymMatrix::try_from(raw)?)
    }
}

impl From<PsdMatrix> for MatrixJson {
    fn from(m: PsdMatrix) -> Self {
        MatrixJson::from_matrix(m.matrix())
    }
}

fn sorted_eigen(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let eig = SymmetricEigen::new(m.clone());
    let n = m.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

fn psd_tol(dim: usize, lambda_max: f64) -> f64 {
    dim as f64 * f64::EPSILON * lambda_max.max(1.0)
}

impl PsdMatrix {
    /// Validates positive semidefiniteness within `tol_psd`.
    pub fn new(base: SymMatrix) -> Result<Self> {
        let (values, vectors) = sorted_eigen(base.matrix());
        let tol = psd_tol(base.dim(), values[0]);
        let min = *values.last().expect("nonempty");
        if min < -tol {
            return Err(Error::NotPsd { eigenvalue: min, tol });
        }
        Ok(Self::from_parts(base, values, vectors))
    }

    pub fn from_matrix(m: DMatrix<f64>) -> Result<Self> {
        Self::new(SymMatrix::new(m)?)
    }

    /// For matrices that are PSD analytically (Gram matrices, congruences):
    /// roundoff-negative eigenvalues are clamped without validation.
    pub fn from_gram(m: DMatrix<f64>) -> Self {
        let base = SymMatrix::symmetrized(m);
        let (values, vectors) = sorted_eigen(base.matrix());
        Self::from_parts(base, values, vectors)
    }

    pub fn from_diagonal(diag: &[f64]) -> Result<Self> {
        Self::from_matrix(DMatrix::from_diagonal(&DVector::from_column_slice(diag)))
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_gram(DMatrix::identity(dim, dim))
    }

    fn from_parts(base: SymMatrix, mut values: Vec<f64>, vectors: DMatrix<f64>) -> Self {
        values.iter_mut().for_each(|l| *l = l.max(0.0));
        Self {
            base,
            eigenvalues: values,
            eigenvectors: vectors,
        }
    }

    /// Builds `V diag(f(λ)) Vᵗ` from the cached decomposition. `f` must map
    /// nonnegative reals to nonnegative reals.
    fn spectral_psd(&self, f: impl Fn(f64) -> f64) -> PsdMatrix {
        let n = self.dim();
        let mapped: Vec<f64> = self.eigenvalues.iter().map(|&l| f(l)).collect();
        let m = self.spectral_matrix(&mapped);
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| mapped[b].total_cmp(&mapped[a]));
        let values = order.iter().map(|&i| mapped[i]).collect();
        let vectors = DMatrix::from_fn(n, n, |r, c| self.eigenvectors[(r, order[c])]);
        Self::from_parts(SymMatrix::symmetrized(m), values, vectors)
    }

    fn spectral_matrix(&self, values: &[f64]) -> DMatrix<f64> {
        let v = &self.eigenvectors;
        let scaled = DMatrix::from_fn(v.nrows(), v.ncols(), |r, c| v[(r, c)] * values[c]);
        scaled * v.transpose()
    }

    pub fn dim(&self) -> usize {
        self.base.dim()
    }

    pub fn base(&self) -> &SymMatrix {
        &self.base
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        self.base.matrix()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Orthonormal eigenvectors as columns, ordered like [`eigenvalues`](Self::eigenvalues).
    pub fn eigenvectors(&self) -> &DMatrix<f64> {
        &self.eigenvectors
    }

    pub fn lambda_max(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn lambda_min(&self) -> f64 {
        *self.eigenvalues.last().expect("nonempty")
    }

    pub fn tol_psd(&self) -> f64 {
        psd_tol(self.dim(), self.lambda_max())
    }

    pub fn rank(&self) -> usize {
        let tol = self.tol_psd();
        self.eigenvalues.iter().filter(|&&l| l >= tol).count()
    }

    /// All eigenvalues above `tol_psd`.
    pub fn is_definite(&self) -> bool {
        self.lambda_min() > self.tol_psd()
    }

    pub fn trace(&self) -> f64 {
        sum::sum(self.eigenvalues.iter().copied())
    }

    fn is_zero(&self, l: f64, tol: f64) -> bool {
        l < tol
    }

    /// Principal square root.
    pub fn sqrt(&self) -> PsdMatrix {
        let tol = self.tol_psd();
        self.spectral_psd(|l| if self.is_zero(l, tol) { 0.0 } else { l.sqrt() })
    }

    /// Moore–Penrose pseudo-inverse.
    pub fn pinv(&self) -> PsdMatrix {
        let tol = self.tol_psd();
        self.spectral_psd(|l| if self.is_zero(l, tol) { 0.0 } else { 1.0 / l })
    }

    /// Pseudo-inverse of the square root.
    pub fn pinv_sqrt(&self) -> PsdMatrix {
        let tol = self.tol_psd();
        self.spectral_psd(|l| if self.is_zero(l, tol) { 0.0 } else { 1.0 / l.sqrt() })
    }

    /// Orthogonal projection onto the image.
    pub fn image_projection(&self) -> PsdMatrix {
        let tol = self.tol_psd();
        self.spectral_psd(|l| if self.is_zero(l, tol) { 0.0 } else { 1.0 })
    }

    /// The inverse, for definite matrices only.
    pub fn inverse(&self) -> Result<PsdMatrix> {
        if !self.is_definite() {
            return Err(Error::NotDefinite(self.lambda_min()));
        }
        Ok(self.pinv())
    }

    /// `xᵗ S x`.
    pub fn quadratic_form(&self, x: &DVector<f64>) -> f64 {
        x.dot(&(self.matrix() * x))
    }
}

/// Principal square root.
pub fn sqrt_psd(s: &PsdMatrix) -> PsdMatrix {
    s.sqrt()
}

/// Moore–Penrose pseudo-inverse.
pub fn pinv_psd(s: &PsdMatrix) -> PsdMatrix {
    s.pinv()
}

/// Orthogonal projection onto `im S`, equal to `S · S⁺`.
pub fn image_projection(s: &PsdMatrix) -> PsdMatrix {
    s.image_projection()
}

fn check_dims(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::DimensionMismatch {
            expected: a,
            found: b,
        });
    }
    Ok(())
}

/// The unique PSD solution A of `A S A = T`:
/// `A = S^{-1/2} (S^{1/2} T S^{1/2})^{1/2} S^{-1/2}`.
///
/// Pushing a measure with frame operator `S` forward by `A` gives the
/// closest measure (in W₂) with frame operator `T`.
pub fn optimal_map(s: &PsdMatrix, t: &PsdMatrix) -> Result<PsdMatrix> {
    check_dims(s.dim(), t.dim())?;
    if !s.is_definite() {
        return Err(Error::NotDefinite(s.lambda_min()));
    }
    let root = s.sqrt();
    let inv_root = s.pinv_sqrt();
    let middle = PsdMatrix::from_gram(root.matrix() * t.matrix() * root.matrix());
    let a = inv_root.matrix() * middle.sqrt().matrix() * inv_root.matrix();
    Ok(PsdMatrix::from_gram(a))
}

/// Congruence action `M S Mᵗ`.
pub fn congruence(s: &PsdMatrix, m: &GeneralMatrix) -> Result<PsdMatrix> {
    check_dims(s.dim(), m.cols())?;
    let out = m.matrix() * s.matrix() * m.matrix().transpose();
    Ok(PsdMatrix::from_gram(out))
}

/// Loewner order test `A ⪰ B`: smallest eigenvalue of `A − B` is at least `−tol`.
pub fn loewner_geq(a: &SymMatrix, b: &SymMatrix, tol: f64) -> Result<bool> {
    check_dims(a.dim(), b.dim())?;
    let diff = SymMatrix::symmetrized(a.matrix() - b.matrix());
    Ok(diff.min_eigenvalue() >= -tol)
}

/// Smallest eigenvalue of the assembled block matrix `[[S, Ψ], [Ψᵗ, T]]`.
pub fn block_min_eigenvalue(s: &PsdMatrix, t: &PsdMatrix, psi: &GeneralMatrix) -> Result<f64> {
    let n = s.dim();
    check_dims(n, t.dim())?;
    check_dims(n, psi.rows())?;
    check_dims(n, psi.cols())?;
    let mut block = DMatrix::zeros(2 * n, 2 * n);
    block.view_mut((0, 0), (n, n)).copy_from(s.matrix());
    block.view_mut((n, n), (n, n)).copy_from(t.matrix());
    block.view_mut((0, n), (n, n)).copy_from(psi.matrix());
    block.view_mut((n, 0), (n, n)).copy_from(&psi.matrix().transpose());
    Ok(SymMatrix::symmetrized(block).min_eigenvalue())
}

/// Decides `[[S, Ψ], [Ψᵗ, T]] ⪰ 0` by eigenvalues of the full 2n×2n block.
pub fn block_psd_direct(s: &PsdMatrix, t: &PsdMatrix, psi: &GeneralMatrix, tol: f64) -> Result<bool> {
    Ok(block_min_eigenvalue(s, t, psi)? >= -tol)
}

/// Decides `[[S, Ψ], [Ψᵗ, T]] ⪰ 0` through a Schur complement:
/// `S − Ψ T⁻¹ Ψᵗ ⪰ 0` when T is definite, else `T − Ψᵗ S⁻¹ Ψ ⪰ 0` when S
/// is definite, else the direct eigenvalue test.
pub fn block_coupling_psd(s: &PsdMatrix, t: &PsdMatrix, psi: &GeneralMatrix, tol: f64) -> Result<bool> {
    let n = s.dim();
    check_dims(n, t.dim())?;
    check_dims(n, psi.rows())?;
    check_dims(n, psi.cols())?;
    let p = psi.matrix();
    if t.is_definite() {
        let schur = s.matrix() - p * t.pinv().matrix() * p.transpose();
        Ok(SymMatrix::symmetrized(schur).min_eigenvalue() >= -tol)
    } else if s.is_definite() {
        let schur = t.matrix() - p.transpose() * s.pinv().matrix() * p;
        Ok(SymMatrix::symmetrized(schur).min_eigenvalue() >= -tol)
    } else {
        block_psd_direct(s, t, psi, tol)
    }
}

fn fidelity_one_sided(s: &PsdMatrix, t: &PsdMatrix) -> f64 {
    let x = s.sqrt();
    let middle = PsdMatrix::from_gram(x.matrix() * t.matrix() * x.matrix());
    let tol = middle.tol_psd();
    sum::sum(
        middle
            .eigenvalues()
            .iter()
            .map(|&l| if l < tol { 0.0 } else { l.sqrt() }),
    )
}

/// `tr (S^{1/2} T S^{1/2})^{1/2}`, averaged over both argument orders so
/// that it is exactly symmetric.
pub fn fidelity_trace(s: &PsdMatrix, t: &PsdMatrix) -> Result<f64> {
    check_dims(s.dim(), t.dim())?;
    Ok(0.5 * (fidelity_one_sided(s, t) + fidelity_one_sided(t, s)))
}

/// Condition number above which [`bures_squared`] falls back to the trace
/// expression.
const BURES_MAX_CONDITION: f64 = 1e8;

fn condition(s: &PsdMatrix) -> f64 {
    if s.is_definite() {
        s.lambda_max() / s.lambda_min()
    } else {
        f64::INFINITY
    }
}

/// `tr(S + T − 2 (S^{1/2} T S^{1/2})^{1/2})`.
///
/// When one argument is well conditioned, say `S`, this is evaluated as
/// `‖S^{1/2} (I − A(S, T))‖_F²`, which equals the trace expression but does
/// not cancel catastrophically when `S ≈ T`. Otherwise the trace expression
/// is used and clamped at zero.
pub fn bures_squared(s: &PsdMatrix, t: &PsdMatrix) -> Result<f64> {
    check_dims(s.dim(), t.dim())?;
    let (cs, ct) = (condition(s), condition(t));
    if cs.min(ct) <= BURES_MAX_CONDITION {
        // order-independent choice, so that the result is exactly symmetric
        let s_first = cs < ct
            || (cs == ct && s.matrix().iter().partial_cmp(t.matrix().iter()) != Some(std::cmp::Ordering::Greater));
        let (a, b) = if s_first { (s, t) } else { (t, s) };
        let n = a.dim();
        let map = optimal_map(a, b)?;
        let r = a.sqrt().matrix() * (DMatrix::identity(n, n) - map.matrix());
        return Ok(sum::sum(r.iter().map(|c| c * c)));
    }
    let f = fidelity_trace(s, t)?;
    Ok(sum::sum([s.trace(), t.trace(), -2.0 * f]).max(0.0))
}

/// The metric `d_W(S, T) = W₂(P_S, P_T)`: square root of [`bures_squared`].
pub fn d_w(s: &PsdMatrix, t: &PsdMatrix) -> Result<f64> {
    Ok(bures_squared(s, t)?.sqrt())
}

/// `(1 − t)·I + t·A` for `t ∈ [0, 1]`.
pub fn interpolate_map(a: &PsdMatrix, t: f64) -> Result<SymMatrix> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::OutOfRange(format!("interpolation time {t} not in [0, 1]")));
    }
    let n = a.dim();
    let m = DMatrix::identity(n, n) * (1.0 - t) + a.matrix() * t;
    SymMatrix::new(m)
}

/// Spectral norm of a symmetric matrix.
pub fn op_norm_sym(m: &DMatrix<f64>) -> f64 {
    let e = SymmetricEigen::new(SymMatrix::symmetrized(m.clone()).into_matrix());
    e.eigenvalues.amax()
}
