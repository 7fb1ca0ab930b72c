//! Finitely supported probability measures on R^n.
//!
//! A [`DiscreteMeasure`] is a list of atoms with nonnegative weights summing
//! to one. Atoms are never merged automatically: push-forwards routinely map
//! distinct atoms onto the same point and the measure keeps both entries.
//! Use [`DiscreteMeasure::canonicalize`] when comparing measures.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sum::{self, Compensated};

/// Tolerance on the total mass of a measure or coupling.
pub const WEIGHT_TOL: f64 = 1e-12;

/// Tolerance on the norm of a direction on the unit sphere.
pub const UNIT_TOL: f64 = 1e-10;

/// Atom merge tolerance used by [`DiscreteMeasure::canonicalize`].
pub const MERGE_TOL: f64 = 1e-12;

/// A direction on the unit sphere S^{n-1}.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitVector(DVector<f64>);

impl UnitVector {
    /// Accepts `coords` only if its Euclidean norm is 1 within [`UNIT_TOL`].
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        Self::from_vector(DVector::from_vec(coords))
    }

    pub fn from_vector(v: DVector<f64>) -> Result<Self> {
        if v.is_empty() {
            return Err(Error::Empty);
        }
        if v.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite);
        }
        let norm = v.norm();
        if (norm - 1.0).abs() > UNIT_TOL {
            return Err(Error::NotUnit(norm));
        }
        Ok(Self(v))
    }

    /// Rescales a nonzero vector onto the sphere.
    pub fn normalize(v: DVector<f64>) -> Result<Self> {
        let norm = v.norm();
        if !norm.is_finite() {
            return Err(Error::NonFinite);
        }
        if norm == 0.0 {
            return Err(Error::NotUnit(0.0));
        }
        Ok(Self(v / norm))
    }

    /// The i-th standard basis vector of R^dim.
    pub fn basis(dim: usize, i: usize) -> Self {
        let mut v = DVector::zeros(dim);
        v[i] = 1.0;
        Self(v)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_vector(&self) -> &DVector<f64> {
        &self.0
    }

    pub fn as_slice(&self) -> &[f64] {
        self.0.as_slice()
    }

    pub fn into_inner(self) -> DVector<f64> {
        self.0
    }
}

/// A finitely supported Borel probability measure on R^dim.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MeasureJson", into = "MeasureJson")]
pub struct DiscreteMeasure {
    dim: usize,
    atoms: Vec<DVector<f64>>,
    weights: Vec<f64>,
}

/// Wire format `{"dim": n, "atoms": [[...], ...], "weights": [...]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MeasureJson {
    pub dim: usize,
    pub atoms: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

impl TryFrom<MeasureJson> for DiscreteMeasure {
    type Error = Error;

    fn try_from(raw: MeasureJson) -> Result<Self> {
        DiscreteMeasure::new(raw.dim, raw.atoms, raw.weights, false)
    }
}

impl From<DiscreteMeasure> for MeasureJson {
    fn from(mu: DiscreteMeasure) -> Self {
        MeasureJson {
            dim: mu.dim,
            atoms: mu.atoms.iter().map(|a| a.as_slice().to_vec()).collect(),
            weights: mu.weights,
        }
    }
}

impl DiscreteMeasure {
    /// Validates and builds a measure.
    ///
    /// Without `renormalize` the weights must already sum to one within
    /// [`WEIGHT_TOL`]; with it they are divided by their (positive) sum.
    pub fn new(
        dim: usize,
        atoms: Vec<Vec<f64>>,
        weights: Vec<f64>,
        renormalize: bool,
    ) -> Result<Self> {
        let atoms = atoms.into_iter().map(DVector::from_vec).collect();
        Self::from_vectors(dim, atoms, weights, renormalize)
    }

    pub fn from_vectors(
        dim: usize,
        atoms: Vec<DVector<f64>>,
        mut weights: Vec<f64>,
        renormalize: bool,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::OutOfRange("dimension must be positive".into()));
        }
        if atoms.is_empty() {
            return Err(Error::Empty);
        }
        if atoms.len() != weights.len() {
            return Err(Error::LengthMismatch {
                expected: atoms.len(),
                found: weights.len(),
            });
        }
        for a in &atoms {
            if a.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: a.len(),
                });
            }
            if a.iter().any(|c| !c.is_finite()) {
                return Err(Error::NonFinite);
            }
        }
        for (index, &w) in weights.iter().enumerate() {
            if !w.is_finite() {
                return Err(Error::NonFinite);
            }
            if w < 0.0 {
                return Err(Error::NegativeWeight { index, weight: w });
            }
        }
        let total = sum::sum(weights.iter().copied());
        if total <= 0.0 {
            return Err(Error::ZeroMass(total));
        }
        if renormalize {
            weights.iter_mut().for_each(|w| *w /= total);
        } else if (total - 1.0).abs() > WEIGHT_TOL {
            return Err(Error::NotNormalized(total));
        }
        Ok(Self { dim, atoms, weights })
    }

    /// The point mass at `point`.
    pub fn dirac(point: Vec<f64>) -> Result<Self> {
        let dim = point.len();
        Self::new(dim, vec![point], vec![1.0], false)
    }

    /// Uniform weights on the given atoms.
    pub fn uniform(dim: usize, atoms: Vec<Vec<f64>>) -> Result<Self> {
        let k = atoms.len();
        if k == 0 {
            return Err(Error::Empty);
        }
        Self::new(dim, atoms, vec![1.0 / k as f64; k], false)
    }

    // Internal constructor for operations that preserve validity by construction.
    pub(crate) fn assemble(dim: usize, atoms: Vec<DVector<f64>>, weights: Vec<f64>) -> Self {
        debug_assert_eq!(atoms.len(), weights.len());
        debug_assert!(atoms.iter().all(|a| a.len() == dim));
        Self { dim, atoms, weights }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of atoms (not merged).
    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn atoms(&self) -> &[DVector<f64>] {
        &self.atoms
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn iter(&self) -> impl Iterator<Item = (&DVector<f64>, f64)> {
        self.atoms.iter().zip(self.weights.iter().copied())
    }

    pub fn total_mass(&self) -> f64 {
        sum::sum(self.weights.iter().copied())
    }

    fn check_dir(&self, x: &UnitVector) -> Result<()> {
        if x.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: x.dim(),
            });
        }
        Ok(())
    }

    /// Image of the measure under the linear map `v ↦ T v`.
    pub fn push_forward_linear(&self, t: &DMatrix<f64>) -> Result<Self> {
        if t.ncols() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: t.ncols(),
            });
        }
        if t.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite);
        }
        let atoms = self.atoms.iter().map(|v| t * v).collect();
        Ok(Self::assemble(t.nrows(), atoms, self.weights.clone()))
    }

    /// Image under an atom-indexed map: atom i is replaced by `images[i]`.
    ///
    /// All images must share one length, which becomes the target dimension.
    pub fn push_forward_map(&self, images: &[DVector<f64>]) -> Result<Self> {
        if images.len() != self.atoms.len() {
            return Err(Error::LengthMismatch {
                expected: self.atoms.len(),
                found: images.len(),
            });
        }
        let target = images[0].len();
        if target == 0 {
            return Err(Error::OutOfRange("target dimension must be positive".into()));
        }
        for img in images {
            if img.len() != target {
                return Err(Error::DimensionMismatch {
                    expected: target,
                    found: img.len(),
                });
            }
            if img.iter().any(|c| !c.is_finite()) {
                return Err(Error::NonFinite);
            }
        }
        Ok(Self::assemble(target, images.to_vec(), self.weights.clone()))
    }

    /// Orthogonal projection onto the hyperplane x^⊥, `v ↦ v − ⟨v,x⟩x`.
    pub fn project_hyperplane(&self, x: &UnitVector) -> Result<Self> {
        self.check_dir(x)?;
        let x = x.as_vector();
        let atoms = self.atoms.iter().map(|v| v - x * v.dot(x)).collect();
        Ok(Self::assemble(self.dim, atoms, self.weights.clone()))
    }

    /// One-dimensional measure of the coordinates `⟨v,x⟩`.
    pub fn project_line(&self, x: &UnitVector) -> Result<Self> {
        self.check_dir(x)?;
        let x = x.as_vector();
        let atoms = self
            .atoms
            .iter()
            .map(|v| DVector::from_element(1, v.dot(x)))
            .collect();
        Ok(Self::assemble(1, atoms, self.weights.clone()))
    }

    /// Center of mass Σ w_i v_i.
    pub fn mean(&self) -> DVector<f64> {
        let mut acc = vec![Compensated::new(); self.dim];
        for (v, w) in self.iter() {
            for (a, c) in acc.iter_mut().zip(v.iter()) {
                a.add(w * c);
            }
        }
        DVector::from_iterator(self.dim, acc.iter().map(Compensated::value))
    }

    /// The measure translated so that its mean is the origin.
    pub fn center(&self) -> Self {
        let m = self.mean();
        let atoms = self.atoms.iter().map(|v| v - &m).collect();
        Self::assemble(self.dim, atoms, self.weights.clone())
    }

    /// p-th moment Σ w_i ‖v_i‖^p.
    pub fn moment(&self, p: f64) -> Result<f64> {
        if !(p >= 1.0) || !p.is_finite() {
            return Err(Error::OutOfRange(format!("moment order p = {p} must be >= 1")));
        }
        Ok(sum::sum(self.iter().map(|(v, w)| {
            if p == 2.0 {
                w * v.norm_squared()
            } else {
                w * v.norm().powf(p)
            }
        })))
    }

    /// Mixture Σ t_i μ_i. Atom lists are concatenated in order.
    pub fn convex_combine(parts: &[(f64, DiscreteMeasure)]) -> Result<Self> {
        let first = parts.first().ok_or(Error::Empty)?;
        let dim = first.1.dim;
        check_probability_vector(parts.iter().map(|(t, _)| *t))?;
        let mut atoms = Vec::new();
        let mut weights = Vec::new();
        for (t, mu) in parts {
            if mu.dim != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: mu.dim,
                });
            }
            for (v, w) in mu.iter() {
                atoms.push(v.clone());
                weights.push(t * w);
            }
        }
        Ok(Self::assemble(dim, atoms, weights))
    }

    /// Sorted, merged form with zero-mass atoms removed.
    pub fn canonicalize(&self) -> Self {
        self.canonicalize_with(MERGE_TOL)
    }

    /// Like [`canonicalize`](Self::canonicalize) but merging atoms whose
    /// coordinates agree within `tol` (max norm).
    pub fn canonicalize_with(&self, tol: f64) -> Self {
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.sort_by(|&a, &b| lex_cmp(&self.atoms[a], &self.atoms[b]));
        let mut atoms: Vec<DVector<f64>> = Vec::new();
        let mut mass: Vec<Compensated> = Vec::new();
        for i in order {
            let w = self.weights[i];
            if w == 0.0 {
                continue;
            }
            let v = &self.atoms[i];
            match atoms.iter().position(|a| (a - v).amax() <= tol) {
                Some(k) => mass[k].add(w),
                None => {
                    atoms.push(v.clone());
                    let mut c = Compensated::new();
                    c.add(w);
                    mass.push(c);
                }
            }
        }
        let weights = mass.iter().map(Compensated::value).collect();
        Self::assemble(self.dim, atoms, weights)
    }

    /// Equality up to atom order and merging: supports agree within
    /// `atom_tol` and weights within `weight_tol`.
    pub fn approx_eq(&self, other: &Self, atom_tol: f64, weight_tol: f64) -> bool {
        if self.dim != other.dim {
            return false;
        }
        let a = self.canonicalize_with(atom_tol);
        let b = other.canonicalize_with(atom_tol);
        a.len() == b.len()
            && a.iter().zip(b.iter()).all(|((va, wa), (vb, wb))| {
                (va - vb).amax() <= atom_tol && (wa - wb).abs() <= weight_tol
            })
    }
}

fn lex_cmp(a: &DVector<f64>, b: &DVector<f64>) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b.iter()) {
        match x.total_cmp(y) {
            std::cmp::Ordering::Equal => continue,
            ord => return ord,
        }
    }
    std::cmp::Ordering::Equal
}

pub(crate) fn check_probability_vector<I: IntoIterator<Item = f64>>(ts: I) -> Result<()> {
    let mut acc = Compensated::new();
    for (index, t) in ts.into_iter().enumerate() {
        if !t.is_finite() {
            return Err(Error::NonFinite);
        }
        if t < 0.0 {
            return Err(Error::NegativeWeight { index, weight: t });
        }
        acc.add(t);
    }
    if (acc.value() - 1.0).abs() > WEIGHT_TOL {
        return Err(Error::NotNormalized(acc.value()));
    }
    Ok(())
}
