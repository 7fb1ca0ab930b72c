use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measure::{check_probability_vector, DiscreteMeasure};
use crate::psd::{GeneralMatrix, PsdMatrix};
use crate::sum::{self, OuterAccumulator};

/// One atom `((x, y), mass)` of a coupling.
#[derive(Debug, Clone, PartialEq)]
pub struct Pair {
    pub x: DVector<f64>,
    pub y: DVector<f64>,
    pub mass: f64,
}

/// A finitely supported probability on R^{left_dim} × R^{right_dim}, with
/// both marginals cached.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CouplingJson", into = "CouplingJson")]
pub struct Coupling {
    pairs: Vec<Pair>,
    left: DiscreteMeasure,
    right: DiscreteMeasure,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PairJson {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub mass: f64,
}

/// Wire format `{"dim": n, "pairs": [{"x": [...], "y": [...], "mass": w}, ...]}`.
///
/// `right_dim` is only present when the two sides differ.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CouplingJson {
    pub dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub right_dim: Option<usize>,
    pub pairs: Vec<PairJson>,
}

impl TryFrom<CouplingJson> for Coupling {
    type Error = Error;
    fn try_from(raw: CouplingJson) -> Result<Self> {
        let right_dim = raw.right_dim.unwrap_or(raw.dim);
        let pairs = raw
            .pairs
            .into_iter()
            .map(|p| Pair {
                x: DVector::from_vec(p.x),
                y: DVector::from_vec(p.y),
                mass: p.mass,
            })
            .collect();
        Coupling::new(raw.dim, right_dim, pairs)
    }
}

impl From<Coupling> for CouplingJson {
    fn from(c: Coupling) -> Self {
        let (l, r) = (c.left_dim(), c.right_dim());
        CouplingJson {
            dim: l,
            right_dim: (l != r).then_some(r),
            pairs: c
                .pairs
                .into_iter()
                .map(|p| PairJson {
                    x: p.x.as_slice().to_vec(),
                    y: p.y.as_slice().to_vec(),
                    mass: p.mass,
                })
                .collect(),
        }
    }
}

/// Block decomposition of a coupling's frame operator
/// `S_γ = [[S_left, Ψ], [Ψᵗ, S_right]]` with `Ψ = Σ mass · x yᵗ`.
#[derive(Debug, Clone)]
pub struct CouplingFrameOperator {
    pub full: PsdMatrix,
    pub left: PsdMatrix,
    pub psi: GeneralMatrix,
    pub right: PsdMatrix,
}

impl Coupling {
    /// Validates dimensions, nonnegative masses and total mass 1.
    pub fn new(left_dim: usize, right_dim: usize, pairs: Vec<Pair>) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::Empty);
        }
        for p in &pairs {
            if p.x.len() != left_dim {
                return Err(Error::DimensionMismatch {
                    expected: left_dim,
                    found: p.x.len(),
                });
            }
            if p.y.len() != right_dim {
                return Err(Error::DimensionMismatch {
                    expected: right_dim,
                    found: p.y.len(),
                });
            }
            if p.x.iter().chain(p.y.iter()).any(|c| !c.is_finite()) {
                return Err(Error::NonFinite);
            }
        }
        check_probability_vector(pairs.iter().map(|p| p.mass))?;
        Self::build(left_dim, right_dim, pairs)
    }

    fn build(left_dim: usize, right_dim: usize, pairs: Vec<Pair>) -> Result<Self> {
        let masses: Vec<f64> = pairs.iter().map(|p| p.mass).collect();
        let left = DiscreteMeasure::from_vectors(
            left_dim,
            pairs.iter().map(|p| p.x.clone()).collect(),
            masses.clone(),
            false,
        )?;
        let right = DiscreteMeasure::from_vectors(
            right_dim,
            pairs.iter().map(|p| p.y.clone()).collect(),
            masses,
            false,
        )?;
        Ok(Self { pairs, left, right })
    }

    /// Internal constructor for pair lists whose validity follows from how
    /// they were produced.
    pub(crate) fn assemble(left_dim: usize, right_dim: usize, pairs: Vec<Pair>) -> Self {
        let masses: Vec<f64> = pairs.iter().map(|p| p.mass).collect();
        let left = DiscreteMeasure::assemble(
            left_dim,
            pairs.iter().map(|p| p.x.clone()).collect(),
            masses.clone(),
        );
        let right = DiscreteMeasure::assemble(
            right_dim,
            pairs.iter().map(|p| p.y.clone()).collect(),
            masses,
        );
        debug_assert!((left.total_mass() - 1.0).abs() <= 1e-10);
        Self { pairs, left, right }
    }

    /// `(id × id)_# μ`.
    pub fn diagonal(mu: &DiscreteMeasure) -> Self {
        pushforward_coupling(mu, mu.atoms()).expect("images match atoms")
    }

    /// The product coupling `μ ⊗ ν`.
    pub fn product(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Self {
        let mut pairs = Vec::with_capacity(mu.len() * nu.len());
        for (x, wx) in mu.iter() {
            for (y, wy) in nu.iter() {
                pairs.push(Pair {
                    x: x.clone(),
                    y: y.clone(),
                    mass: wx * wy,
                });
            }
        }
        Self::assemble(mu.dim(), nu.dim(), pairs)
    }

    /// Mixture `Σ t_i γ_i` of couplings with matching dimensions.
    pub fn mixture(parts: &[(f64, Coupling)]) -> Result<Self> {
        let first = parts.first().ok_or(Error::Empty)?;
        let (l, r) = (first.1.left_dim(), first.1.right_dim());
        check_probability_vector(parts.iter().map(|(t, _)| *t))?;
        let mut pairs = Vec::new();
        for (t, g) in parts {
            if g.left_dim() != l {
                return Err(Error::DimensionMismatch {
                    expected: l,
                    found: g.left_dim(),
                });
            }
            if g.right_dim() != r {
                return Err(Error::DimensionMismatch {
                    expected: r,
                    found: g.right_dim(),
                });
            }
            pairs.extend(g.pairs.iter().map(|p| Pair {
                x: p.x.clone(),
                y: p.y.clone(),
                mass: t * p.mass,
            }));
        }
        Ok(Self::assemble(l, r, pairs))
    }

    pub fn left_dim(&self) -> usize {
        self.left.dim()
    }

    pub fn right_dim(&self) -> usize {
        self.right.dim()
    }

    pub fn pairs(&self) -> &[Pair] {
        &self.pairs
    }

    pub fn left_marginal(&self) -> &DiscreteMeasure {
        &self.left
    }

    pub fn right_marginal(&self) -> &DiscreteMeasure {
        &self.right
    }

    pub fn total_mass(&self) -> f64 {
        sum::sum(self.pairs.iter().map(|p| p.mass))
    }

    /// Transport cost `Σ mass · ‖x − y‖^p`.
    pub fn cost(&self, p: f64) -> Result<f64> {
        if self.left_dim() != self.right_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.left_dim(),
                found: self.right_dim(),
            });
        }
        Ok(sum::sum(
            self.pairs
                .iter()
                .map(|pr| pr.mass * ground_cost(&pr.x, &pr.y, p)),
        ))
    }

    /// Applies `y ↦ B y` to the right-hand atoms.
    pub fn map_right(&self, b: &DMatrix<f64>) -> Result<Self> {
        if b.ncols() != self.right_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.right_dim(),
                found: b.ncols(),
            });
        }
        let pairs = self
            .pairs
            .iter()
            .map(|p| Pair {
                x: p.x.clone(),
                y: b * &p.y,
                mass: p.mass,
            })
            .collect();
        Ok(Self::assemble(self.left_dim(), b.nrows(), pairs))
    }

    /// Frame operator of the coupling and its blocks.
    pub fn frame_operator(&self) -> Result<CouplingFrameOperator> {
        coupling_frame_operator(self)
    }
}

pub(crate) fn ground_cost(x: &DVector<f64>, y: &DVector<f64>, p: f64) -> f64 {
    let d2 = (x - y).norm_squared();
    if p == 2.0 {
        d2
    } else if p == 1.0 {
        d2.sqrt()
    } else {
        d2.sqrt().powf(p)
    }
}

/// `((v_i, images[i]), w_i)`: the coupling `(id × h)_# μ` of an atom-indexed map.
pub fn pushforward_coupling(mu: &DiscreteMeasure, images: &[DVector<f64>]) -> Result<Coupling> {
    let nu = mu.push_forward_map(images)?;
    let pairs = mu
        .iter()
        .zip(images)
        .map(|((x, w), y)| Pair {
            x: x.clone(),
            y: y.clone(),
            mass: w,
        })
        .collect();
    Ok(Coupling::assemble(mu.dim(), nu.dim(), pairs))
}

/// Frame operator `S_γ` on R^{2n} with blocks `S_left`, `Ψ`, `S_right`.
pub fn coupling_frame_operator(gamma: &Coupling) -> Result<CouplingFrameOperator> {
    let n = gamma.left_dim();
    if gamma.right_dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: gamma.right_dim(),
        });
    }
    let mut acc = OuterAccumulator::new(2 * n, 2 * n);
    let mut z = vec![0.0; 2 * n];
    for p in &gamma.pairs {
        z[..n].copy_from_slice(p.x.as_slice());
        z[n..].copy_from_slice(p.y.as_slice());
        acc.add(p.mass, &z, &z);
    }
    let full = acc.finish();
    let left = PsdMatrix::from_gram(full.view((0, 0), (n, n)).into_owned());
    let right = PsdMatrix::from_gram(full.view((n, n), (n, n)).into_owned());
    let psi = GeneralMatrix::new(full.view((0, n), (n, n)).into_owned())?;
    Ok(CouplingFrameOperator {
        full: PsdMatrix::from_gram(full),
        left,
        psi,
        right,
    })
}
