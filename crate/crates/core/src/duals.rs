//! Transport duals and M-duals.
//!
//! A coupling `γ` with marginals `μ`, `ν` makes `(μ, ν)` an M-dual pair when
//! the off-diagonal block `Ψ = Σ mass · x yᵗ` of its frame operator equals
//! `M`; `M = I` gives a transport dual. Every check here is recomputed from
//! the pairs of the coupling.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::frame::{self, frame_operator};
use crate::measure::DiscreteMeasure;
use crate::ot::{pushforward_coupling, Coupling, Pair};
use crate::psd::{self, GeneralMatrix, PsdMatrix, SymMatrix};
use crate::sphere::probe_set;
use crate::sum;

/// Default tolerance on `‖Ψ − M‖_F` and on the block PSD test.
pub const DUAL_TOL: f64 = 1e-8;

/// Evidence that a coupling is (or is not) an M-dual coupling.
#[derive(Debug, Clone, Serialize)]
pub struct DualCertificate {
    pub coupling: Coupling,
    pub m: GeneralMatrix,
    pub psi: GeneralMatrix,
    /// `‖Ψ − M‖_F`.
    pub psi_residual: f64,
    /// Block frame operator `[[S_left, Ψ], [Ψᵗ, S_right]] ⪰ 0`, decided by a
    /// Schur complement.
    pub psd_ok: bool,
    pub block_min_eigenvalue: f64,
    /// `min_x W₂(left, π_{x⊥}left) · W₂(right, π_{x⊥}right)` over the probes.
    pub product_min: f64,
    pub probe_set: String,
    pub tol: f64,
    pub psd_tol: f64,
    pub valid: bool,
}

/// Certifies `γ` against `M`.
pub fn is_m_dual(gamma: &Coupling, m: &GeneralMatrix, tol: f64) -> Result<DualCertificate> {
    let n = gamma.left_dim();
    if gamma.right_dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: gamma.right_dim(),
        });
    }
    if m.rows() != n || m.cols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: if m.rows() != n { m.rows() } else { m.cols() },
        });
    }
    if !(tol > 0.0) {
        return Err(Error::OutOfRange("tolerance must be positive".into()));
    }
    let f = gamma.frame_operator()?;
    let psi_residual = (f.psi.matrix() - m.matrix()).norm();
    let psd_tol = tol * f.full.lambda_max().max(1.0);
    let psd_ok = psd::block_coupling_psd(&f.left, &f.right, &f.psi, psd_tol)?;
    let block_min_eigenvalue = psd::block_min_eigenvalue(&f.left, &f.right, &f.psi)?;
    let probes = probe_set(n)?;
    let product_min = probes
        .directions
        .iter()
        .map(|x| {
            let x = x.as_vector();
            (f.left.quadratic_form(x) * f.right.quadratic_form(x)).max(0.0).sqrt()
        })
        .fold(f64::INFINITY, f64::min);
    Ok(DualCertificate {
        coupling: gamma.clone(),
        m: m.clone(),
        psi: f.psi,
        psi_residual,
        psd_ok,
        block_min_eigenvalue,
        product_min,
        probe_set: probes.id,
        tol,
        psd_tol,
        valid: psi_residual <= tol && psd_ok,
    })
}

/// [`is_m_dual`] with `M = I`.
pub fn is_transport_dual(gamma: &Coupling, tol: f64) -> Result<DualCertificate> {
    is_m_dual(gamma, &GeneralMatrix::identity(gamma.left_dim()), tol)
}

/// Frame-operator feasibility of a transport-dual pair.
#[derive(Debug, Clone, Serialize)]
pub struct Feasibility {
    /// `S_ν ⪰ S_μ^{-1}`.
    pub loewner_ok: bool,
    /// Spectrum of `S_ν^{1/2} S_μ S_ν^{1/2}`, nonincreasing.
    pub eigenvalues: Vec<f64>,
    /// `min eigenvalue ≥ 1 − tol`; agrees with `loewner_ok`.
    pub eigen_ok: bool,
    pub tol: f64,
}

/// Necessary condition on `(S_μ, S_ν)` for `ν` to be a transport dual of `μ`.
pub fn dual_feasibility(s_mu: &PsdMatrix, s_nu: &PsdMatrix, tol: f64) -> Result<Feasibility> {
    if s_mu.dim() != s_nu.dim() {
        return Err(Error::DimensionMismatch {
            expected: s_mu.dim(),
            found: s_nu.dim(),
        });
    }
    if !s_mu.is_definite() {
        return Err(Error::NotDefinite(s_mu.lambda_min()));
    }
    let inv = s_mu.pinv();
    let loewner_ok = psd::loewner_geq(s_nu.base(), inv.base(), tol * inv.lambda_max().max(1.0))?;
    let r = s_nu.sqrt();
    let core = PsdMatrix::from_gram(r.matrix() * s_mu.matrix() * r.matrix());
    let eigenvalues = core.eigenvalues().to_vec();
    let eigen_ok = core.lambda_min() >= 1.0 - tol;
    Ok(Feasibility {
        loewner_ok,
        eigenvalues,
        eigen_ok,
        tol,
    })
}

/// `(id × S_μ^{-1})_# μ`.
pub fn canonical_dual_coupling(mu: &DiscreteMeasure) -> Result<Coupling> {
    let s = frame_operator(mu);
    if !s.is_definite() {
        return Err(Error::NotAFrame(s.lambda_min()));
    }
    let inv = s.pinv();
    let images: Vec<DVector<f64>> = mu.atoms().iter().map(|v| inv.matrix() * v).collect();
    pushforward_coupling(mu, &images)
}

/// Transport dual obtained from an atom-indexed perturbation `h`:
/// `H(z) = S^{-1} z + h(z) − Σ_j w_j ⟨S^{-1} z, v_j⟩ h_j`.
pub fn pushforward_dual(mu: &DiscreteMeasure, h: &[DVector<f64>]) -> Result<(DiscreteMeasure, Coupling)> {
    let s = frame_operator(mu);
    if !s.is_definite() {
        return Err(Error::NotAFrame(s.lambda_min()));
    }
    if h.len() != mu.len() {
        return Err(Error::LengthMismatch {
            expected: mu.len(),
            found: h.len(),
        });
    }
    let n = mu.dim();
    for hv in h {
        if hv.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: hv.len(),
            });
        }
    }
    // K = Σ_j w_j h_j v_jᵗ, so the correction term is K S^{-1} z.
    let mut acc = sum::OuterAccumulator::new(n, n);
    for ((v, w), hv) in mu.iter().zip(h) {
        acc.add(w, hv.as_slice(), v.as_slice());
    }
    let k = acc.finish();
    let inv = s.pinv();
    let images: Vec<DVector<f64>> = mu
        .atoms()
        .iter()
        .zip(h)
        .map(|(z, hv)| {
            let sz = inv.matrix() * z;
            let corr = &k * &sz;
            sz + hv - corr
        })
        .collect();
    let gamma = pushforward_coupling(mu, &images)?;
    Ok((gamma.right_marginal().clone(), gamma))
}

/// Moves a transport-dual coupling to an M-dual one by `y ↦ Mᵗ y`.
pub fn m_dual_from_transport_dual(gamma: &Coupling, m: &GeneralMatrix) -> Result<Coupling> {
    let cert = is_transport_dual(gamma, DUAL_TOL)?;
    if !cert.valid {
        return Err(Error::InvalidDual(format!(
            "not a transport dual: |Psi - I|_F = {:e}",
            cert.psi_residual
        )));
    }
    m.inverse()?;
    gamma.map_right(&m.matrix().transpose())
}

/// Inverse of [`m_dual_from_transport_dual`]: `y ↦ (M^{-1})ᵗ y`.
pub fn transport_dual_from_m_dual(gamma: &Coupling, m: &GeneralMatrix) -> Result<Coupling> {
    let inv = m.inverse()?;
    gamma.map_right(&inv.transpose())
}

/// Mixture of M-dual couplings sharing one `M`.
pub fn convex_combine_duals(parts: &[(f64, Coupling)], m: &GeneralMatrix) -> Result<Coupling> {
    for (i, (_, g)) in parts.iter().enumerate() {
        let cert = is_m_dual(g, m, DUAL_TOL)?;
        if !cert.valid {
            return Err(Error::InvalidDual(format!(
                "part {i} is not an M-dual: |Psi - M|_F = {:e}",
                cert.psi_residual
            )));
        }
    }
    Coupling::mixture(parts)
}

/// `((a²λ − 1)/(a²λ)) δ_0 + (1/(a²λ)) δ_{aλ}`: mean `1/a`, second moment `λ`.
///
/// At the boundary `λ = a^{-2}` the δ_0 atom has no mass and is dropped.
pub fn delta_dual_family(a: f64, lambda: f64) -> Result<DiscreteMeasure> {
    if a == 0.0 || !a.is_finite() || !lambda.is_finite() {
        return Err(Error::OutOfRange(format!("a = {a} must be finite and nonzero")));
    }
    let q = a * a * lambda;
    if q < 1.0 - 1e-12 {
        return Err(Error::OutOfRange(format!(
            "lambda = {lambda} is below 1/a^2 = {}",
            1.0 / (a * a)
        )));
    }
    if q <= 1.0 {
        return DiscreteMeasure::dirac(vec![1.0 / a]);
    }
    let w1 = 1.0 / q;
    DiscreteMeasure::new(1, vec![vec![0.0], vec![a * lambda]], vec![(q - 1.0) / q, w1], false)
}

/// The only coupling of `δ_a` with `ν`: pairs `(a, y)` with `ν`'s weights.
pub fn delta_coupling(a: &[f64], nu: &DiscreteMeasure) -> Result<Coupling> {
    let x = DiscreteMeasure::dirac(a.to_vec())?;
    Ok(Coupling::product(&x, nu))
}

/// Distance and inequality margins of a transport-dual pair relative to the
/// canonical dual. All margins are nonnegative up to roundoff.
#[derive(Debug, Clone, Serialize)]
pub struct DualDistanceReport {
    pub coupling_cost: f64,
    /// `tr(S + S^{-1} − 2I)`, the cost of the canonical coupling.
    pub canonical_cost: f64,
    pub cost_margin: f64,
    /// `min_x W₂(ν, π_{x⊥}ν) − W₂(μ_c, π_{x⊥}μ_c)` over the probes.
    pub directional_margin: f64,
    /// `min_x W₂(μ, π_{x⊥}μ) · W₂(ν, π_{x⊥}ν)` over the probes.
    pub product_min: f64,
    /// Smallest eigenvalue of `S_ν − S_μ^{-1}`.
    pub loewner_margin: f64,
    /// Smallest eigenvalue of `S_ν^{1/2} S_μ S_ν^{1/2}`.
    pub eigen_min: f64,
    pub probe_set: String,
    pub cost_ok: bool,
    pub directional_ok: bool,
    pub product_ok: bool,
}

pub fn dual_distance_check(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    gamma: &Coupling,
) -> Result<DualDistanceReport> {
    let cert = is_transport_dual(gamma, DUAL_TOL)?;
    if !cert.valid {
        return Err(Error::InvalidDual(format!(
            "not a transport dual: |Psi - I|_F = {:e}",
            cert.psi_residual
        )));
    }
    let marg_tol = 1e-9;
    if !gamma.left_marginal().canonicalize().approx_eq(&mu.canonicalize(), marg_tol, marg_tol)
        || !gamma.right_marginal().canonicalize().approx_eq(&nu.canonicalize(), marg_tol, marg_tol)
    {
        return Err(Error::InvalidDual("coupling marginals differ from the given measures".into()));
    }
    let s = frame_operator(mu);
    let t = frame_operator(nu);
    let inv = s.inverse()?;
    let n = s.dim();
    let coupling_cost = gamma.cost(2.0)?;
    let canonical_cost = sum::sum([s.trace(), inv.trace(), -2.0 * n as f64]);
    let probes = probe_set(n)?;
    let mut directional_margin = f64::INFINITY;
    let mut product_min = f64::INFINITY;
    for x in &probes.directions {
        let x = x.as_vector();
        let dn = t.quadratic_form(x).max(0.0).sqrt();
        let dc = inv.quadratic_form(x).max(0.0).sqrt();
        let dm = s.quadratic_form(x).max(0.0).sqrt();
        directional_margin = directional_margin.min(dn - dc);
        product_min = product_min.min(dm * dn);
    }
    let diff = SymMatrix::symmetrized(t.matrix() - inv.matrix());
    let feas = dual_feasibility(&s, &t, DUAL_TOL)?;
    let cost_margin = coupling_cost - canonical_cost;
    Ok(DualDistanceReport {
        coupling_cost,
        canonical_cost,
        cost_margin,
        directional_margin,
        product_min,
        loewner_margin: diff.min_eigenvalue(),
        eigen_min: *feas.eigenvalues.last().expect("nonempty"),
        probe_set: probes.id,
        cost_ok: cost_margin >= -1e-8,
        directional_ok: directional_margin >= -1e-8,
        product_ok: product_min >= 1.0 - 1e-7,
    })
}

/// Mixture of arbitrary couplings, certified against `M` as a whole.
pub fn finite_mixture_dual(
    parts: &[(f64, Coupling)],
    m: &GeneralMatrix,
    tol: f64,
) -> Result<(DiscreteMeasure, DiscreteMeasure, DualCertificate)> {
    let gamma = Coupling::mixture(parts)?;
    let cert = is_m_dual(&gamma, m, tol)?;
    Ok((
        gamma.left_marginal().clone(),
        gamma.right_marginal().clone(),
        cert,
    ))
}

/// Frame report flags of both marginals, for non-degeneracy checks.
pub fn marginals_are_frames(gamma: &Coupling) -> Result<(bool, bool)> {
    let opts = frame::FrameOptions::default();
    Ok((
        frame::frame_report(gamma.left_marginal(), 2.0, opts)?.is_frame,
        frame::frame_report(gamma.right_marginal(), 2.0, opts)?.is_frame,
    ))
}

/// A scaled push-forward coupling `(id × c·B)_# μ`, whose cross block is
/// `c · S_μ Bᵗ`.
pub fn linear_coupling(mu: &DiscreteMeasure, b: &DMatrix<f64>) -> Result<Coupling> {
    let images: Vec<DVector<f64>> = mu.atoms().iter().map(|v| b * v).collect();
    pushforward_coupling(mu, &images)
}

/// Pairs of a coupling as `(x, y, mass)` triples, convenient for tests.
pub fn pair_list(gamma: &Coupling) -> Vec<(Vec<f64>, Vec<f64>, f64)> {
    gamma
        .pairs()
        .iter()
        .map(|Pair { x, y, mass }| (x.as_slice().to_vec(), y.as_slice().to_vec(), *mass))
        .collect()
}
