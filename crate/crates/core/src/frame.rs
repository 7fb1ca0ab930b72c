//! Frame bounds, frame ellipsoids and the transport geometry of the sets
//! `P_S = {μ : S_μ = S}` of measures sharing a frame operator.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::measure::{DiscreteMeasure, UnitVector, UNIT_TOL};
use crate::psd::{self, PsdMatrix};
use crate::sphere::{self, GridInfo, DEFAULT_GRID};
use crate::sum::{self, Compensated, OuterAccumulator};

/// Default tolerance of the frame / tight / Parseval decisions, relative
/// to `max(1, B)`.
pub const FRAME_TOL: f64 = 1e-9;

/// Atoms of a sphere-supported measure must have norm 1 within this.
pub const SPHERE_TOL: f64 = 1e-8;

/// `S_μ = Σ w v vᵗ`.
pub fn frame_operator(mu: &DiscreteMeasure) -> PsdMatrix {
    let n = mu.dim();
    let mut acc = OuterAccumulator::new(n, n);
    for (v, w) in mu.iter() {
        acc.add(w, v.as_slice(), v.as_slice());
    }
    PsdMatrix::from_gram(acc.finish())
}

fn check_p(p: f64) -> Result<()> {
    if !(p >= 1.0) || !p.is_finite() {
        return Err(Error::OutOfRange(format!("exponent p = {p} must be >= 1")));
    }
    Ok(())
}

fn abs_pow(c: f64, p: f64) -> f64 {
    if p == 2.0 {
        c * c
    } else if p == 1.0 {
        c.abs()
    } else {
        c.abs().powf(p)
    }
}

fn raw_moment(mu: &DiscreteMeasure, x: &DVector<f64>, p: f64) -> f64 {
    sum::sum(mu.iter().map(|(v, w)| w * abs_pow(v.dot(x), p)))
}

/// `Σ w |⟨x, v⟩|^p`, the p-th power of [`directional_distance`].
pub fn directional_moment(mu: &DiscreteMeasure, x: &UnitVector, p: f64) -> Result<f64> {
    check_p(p)?;
    if x.dim() != mu.dim() {
        return Err(Error::DimensionMismatch {
            expected: mu.dim(),
            found: x.dim(),
        });
    }
    Ok(raw_moment(mu, x.as_vector(), p))
}

/// `W_p(μ, (π_{x⊥})_# μ)` in closed form: `(Σ w |⟨x, v⟩|^p)^{1/p}`.
pub fn directional_distance(mu: &DiscreteMeasure, x: &UnitVector, p: f64) -> Result<f64> {
    Ok(directional_moment(mu, x, p)?.powf(1.0 / p))
}

/// Options for grid-based frame bounds.
#[derive(Debug, Clone, Copy)]
pub struct FrameOptions {
    pub frame_tol: f64,
    pub grid: usize,
}

impl Default for FrameOptions {
    fn default() -> Self {
        Self {
            frame_tol: FRAME_TOL,
            grid: DEFAULT_GRID,
        }
    }
}

/// Optimal frame bounds of a measure and the derived flags.
#[derive(Debug, Clone, Serialize)]
pub struct FrameReport {
    pub frame_operator: PsdMatrix,
    /// `A = min_{‖x‖=1} Σ w |⟨x, v⟩|^p`.
    pub lower_bound: f64,
    /// `B = max_{‖x‖=1} Σ w |⟨x, v⟩|^p`.
    pub upper_bound: f64,
    pub is_frame: bool,
    pub is_tight: bool,
    pub is_parseval: bool,
    pub p: f64,
    pub frame_tol: f64,
    /// `"spectral"` for p = 2, `"sphere-grid"` otherwise.
    pub method: &'static str,
    pub grid: Option<GridInfo>,
    pub argmin: Vec<f64>,
    pub argmax: Vec<f64>,
}

/// Frame bounds `A`, `B` for exponent `p`.
///
/// Exact for `p = 2` (extreme eigenvalues of `S_μ`); for other `p` the
/// extrema come from a sphere grid with local polishing, which is only
/// available for `dim ≤ 3`.
pub fn frame_report(mu: &DiscreteMeasure, p: f64, opts: FrameOptions) -> Result<FrameReport> {
    check_p(p)?;
    if !(opts.frame_tol > 0.0) {
        return Err(Error::OutOfRange("frame_tol must be positive".into()));
    }
    let s = frame_operator(mu);
    let n = mu.dim();
    let (a, b, amin, amax, grid, method) = if p == 2.0 {
        let v = s.eigenvectors();
        (
            s.lambda_min(),
            s.lambda_max(),
            v.column(n - 1).iter().copied().collect(),
            v.column(0).iter().copied().collect(),
            None,
            "spectral",
        )
    } else {
        if n > 3 {
            return Err(Error::Unsupported(format!(
                "frame bounds for p = {p} need dim <= 3, got {n}"
            )));
        }
        let f = |x: &DVector<f64>| raw_moment(mu, x, p);
        let (lo, info) = sphere::minimize(n, opts.grid, f)?;
        let (hi, _) = sphere::maximize(n, opts.grid, f)?;
        (
            lo.value.max(0.0),
            hi.value,
            lo.point.as_slice().to_vec(),
            hi.point.as_slice().to_vec(),
            Some(info),
            "sphere-grid",
        )
    };
    let scale = opts.frame_tol * b.max(1.0);
    let is_frame = a > scale;
    let is_tight = is_frame && b - a <= scale;
    let is_parseval = is_tight && (a - 1.0).abs() <= opts.frame_tol;
    Ok(FrameReport {
        frame_operator: s,
        lower_bound: a,
        upper_bound: b,
        is_frame,
        is_tight,
        is_parseval,
        p,
        frame_tol: opts.frame_tol,
        method,
        grid,
        argmin: amin,
        argmax: amax,
    })
}

/// The frame ellipsoid `{S^{1/2} x : ‖x‖ = 1}`.
#[derive(Debug, Clone, Serialize)]
pub struct Ellipsoid {
    /// Principal directions, one per semi-axis.
    pub axes: Vec<Vec<f64>>,
    /// Nonincreasing `√λ_i(S)`.
    pub semi_lengths: Vec<f64>,
}

impl Ellipsoid {
    /// `Σ ⟨y, axis_i⟩² / semi_i²`; equals 1 exactly on the ellipsoid.
    /// Infinite if `y` leaves the span of a degenerate ellipsoid.
    pub fn level(&self, y: &DVector<f64>) -> f64 {
        let mut acc = Compensated::new();
        for (axis, &l) in self.axes.iter().zip(&self.semi_lengths) {
            let c: f64 = axis.iter().zip(y.iter()).map(|(a, b)| a * b).sum();
            if l > 0.0 {
                acc.add((c / l).powi(2));
            } else if c.abs() > 1e-12 {
                return f64::INFINITY;
            }
        }
        acc.value()
    }

    /// `Σ semi_i² ⟨y, axis_i⟩² = yᵗ S y`, the level function of the polar
    /// ellipsoid. For unit `x`, `x / W₂(μ, π_{x⊥}μ)` has polar level 1.
    pub fn polar_level(&self, y: &DVector<f64>) -> f64 {
        let mut acc = Compensated::new();
        for (axis, &l) in self.axes.iter().zip(&self.semi_lengths) {
            let c: f64 = axis.iter().zip(y.iter()).map(|(a, b)| a * b).sum();
            acc.add((c * l).powi(2));
        }
        acc.value()
    }

    pub fn is_degenerate(&self) -> bool {
        self.semi_lengths.contains(&0.0)
    }
}

pub fn frame_ellipsoid(mu: &DiscreteMeasure) -> Ellipsoid {
    ellipsoid_of(&frame_operator(mu))
}

pub fn ellipsoid_of(s: &PsdMatrix) -> Ellipsoid {
    let v = s.eigenvectors();
    Ellipsoid {
        axes: (0..s.dim())
            .map(|i| v.column(i).iter().copied().collect())
            .collect(),
        semi_lengths: s.eigenvalues().iter().map(|l| l.sqrt()).collect(),
    }
}

fn require_frame(mu: &DiscreteMeasure) -> Result<PsdMatrix> {
    let s = frame_operator(mu);
    if !s.is_definite() {
        return Err(Error::NotAFrame(s.lambda_min()));
    }
    Ok(s)
}

/// `(S_μ^{-1})_# μ`.
pub fn canonical_dual(mu: &DiscreteMeasure) -> Result<DiscreteMeasure> {
    let s = require_frame(mu)?;
    mu.push_forward_linear(s.pinv().matrix())
}

/// Nearest measure in a fiber `P_T`, with the map that produces it.
#[derive(Debug, Clone, Serialize)]
pub struct FiberProjection {
    pub measure: DiscreteMeasure,
    pub map: PsdMatrix,
    /// `W₂(μ, ν) = √(tr S (I − A)²)`.
    pub distance: f64,
}

/// `A(S_μ, T)_# μ`, the closest element of `P_T` to `μ`.
pub fn closest_in_fiber(mu: &DiscreteMeasure, t: &PsdMatrix) -> Result<FiberProjection> {
    let s = require_frame(mu)?;
    if t.dim() != s.dim() {
        return Err(Error::DimensionMismatch {
            expected: s.dim(),
            found: t.dim(),
        });
    }
    if !t.is_definite() {
        return Err(Error::NotDefinite(t.lambda_min()));
    }
    let a = psd::optimal_map(&s, t)?;
    let n = s.dim();
    let r = DMatrix::identity(n, n) - a.matrix();
    let d2 = (s.matrix() * &r * &r).trace().max(0.0);
    Ok(FiberProjection {
        measure: mu.push_forward_linear(a.matrix())?,
        map: a,
        distance: d2.sqrt(),
    })
}

/// Nearest measure on the ray `{P_{λT} : λ > 0}`.
#[derive(Debug, Clone, Serialize)]
pub struct RayProjection {
    /// `tr (S^{1/2} T S^{1/2})^{1/2} / tr T`.
    pub c_min: f64,
    pub measure: DiscreteMeasure,
    pub distance: f64,
}

/// `(c_min · A(S_μ, T))_# μ`, which lies in `P_{c_min² T}`.
pub fn closest_on_ray(mu: &DiscreteMeasure, t: &PsdMatrix) -> Result<RayProjection> {
    let s = require_frame(mu)?;
    if t.dim() != s.dim() {
        return Err(Error::DimensionMismatch {
            expected: s.dim(),
            found: t.dim(),
        });
    }
    if !t.is_definite() {
        return Err(Error::NotDefinite(t.lambda_min()));
    }
    let a = psd::optimal_map(&s, t)?;
    let fid = psd::fidelity_trace(&s, t)?;
    let c = fid / t.trace();
    let d2 = sum::sum([s.trace(), -fid * c]).max(0.0);
    Ok(RayProjection {
        c_min: c,
        measure: mu.push_forward_linear(&(a.matrix() * c))?,
        distance: d2.sqrt(),
    })
}

/// Closest tight frame: [`closest_on_ray`] with `T = I`.
pub fn closest_tight(mu: &DiscreteMeasure) -> Result<RayProjection> {
    closest_on_ray(mu, &PsdMatrix::identity(mu.dim()))
}

/// Lower bound on `W₂²(μ, ν)` over `μ ∈ P_S`, `ν ∈ P_T`.
pub fn gelbrich_bound(s: &PsdMatrix, t: &PsdMatrix) -> Result<f64> {
    psd::bures_squared(s, t)
}

/// Checks that `basis` is orthonormal within [`UNIT_TOL`].
pub fn check_orthonormal(basis: &[UnitVector], dim: usize) -> Result<()> {
    if basis.is_empty() {
        return Err(Error::Empty);
    }
    if basis.len() > dim {
        return Err(Error::NotOrthonormal(basis.len() as f64));
    }
    for (i, a) in basis.iter().enumerate() {
        if a.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: a.dim(),
            });
        }
        for b in &basis[..i] {
            let d = a.as_vector().dot(b.as_vector());
            if d.abs() > UNIT_TOL {
                return Err(Error::NotOrthonormal(d));
            }
        }
    }
    Ok(())
}

/// `Σ_i (W₂(μ, π_{e_i⊥}μ) − W₂(ν, π_{e_i⊥}ν))²` over an orthonormal set.
pub fn directional_lower_bound(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    basis: &[UnitVector],
) -> Result<f64> {
    if mu.dim() != nu.dim() {
        return Err(Error::DimensionMismatch {
            expected: mu.dim(),
            found: nu.dim(),
        });
    }
    check_orthonormal(basis, mu.dim())?;
    let mut acc = Compensated::new();
    for e in basis {
        let d = directional_distance(mu, e, 2.0)? - directional_distance(nu, e, 2.0)?;
        acc.add(d * d);
    }
    Ok(acc.value())
}

/// `((1 − t) I + t A)_# μ`.
pub fn geodesic(mu: &DiscreteMeasure, a: &PsdMatrix, t: f64) -> Result<DiscreteMeasure> {
    let m = psd::interpolate_map(a, t)?;
    mu.push_forward_linear(m.matrix())
}

/// `A(S_μ, S)_# μ`; the identity on `P_S`.
pub fn retract_to_fiber(mu: &DiscreteMeasure, s: &PsdMatrix) -> Result<DiscreteMeasure> {
    Ok(closest_in_fiber(mu, s)?.measure)
}

fn check_sphere(mu: &DiscreteMeasure) -> Result<()> {
    for (index, v) in mu.atoms().iter().enumerate() {
        let norm = v.norm();
        if (norm - 1.0).abs() > SPHERE_TOL {
            return Err(Error::OffSphere { index, norm });
        }
    }
    Ok(())
}

/// Frame potential `Σ_{i,j} w_i w_j |⟨v_i, v_j⟩|^p` of a measure on the sphere.
pub fn pfp(mu: &DiscreteMeasure, p: f64) -> Result<f64> {
    check_p(p)?;
    check_sphere(mu)?;
    let mut acc = Compensated::new();
    for (vi, wi) in mu.iter() {
        for (vj, wj) in mu.iter() {
            acc.add(wi * wj * abs_pow(vi.dot(vj), p));
        }
    }
    Ok(acc.value())
}

/// Necessary-condition check for `μ` to minimize the frame potential:
/// `Σ w |⟨x, v⟩|^p ≥ PFP(μ)` everywhere on the sphere, with equality on
/// the support.
#[derive(Debug, Clone, Serialize)]
pub struct PfpReport {
    pub pfp: f64,
    pub p: f64,
    /// `min_x Σ w |⟨x, v⟩|^p − PFP`.
    pub min_gap: f64,
    pub argmin: Vec<f64>,
    /// `max_i |Σ_j w_j |⟨v_i, v_j⟩|^p − PFP|` over support atoms.
    pub support_deviation: f64,
    pub violation: bool,
    pub tol: f64,
    pub method: &'static str,
    pub grid: Option<GridInfo>,
}

pub fn pfp_minimizer_check(mu: &DiscreteMeasure, p: f64, opts: FrameOptions) -> Result<PfpReport> {
    let value = pfp(mu, p)?;
    let n = mu.dim();
    let (min, argmin, grid, method) = if p == 2.0 {
        let s = frame_operator(mu);
        let arg = s.eigenvectors().column(n - 1).iter().copied().collect();
        (s.lambda_min(), arg, None, "spectral")
    } else {
        if n > 3 {
            return Err(Error::Unsupported(format!(
                "frame potential check for p = {p} needs dim <= 3, got {n}"
            )));
        }
        let (e, info) = sphere::minimize(n, opts.grid, |x| raw_moment(mu, x, p))?;
        (e.value, e.point.as_slice().to_vec(), Some(info), "sphere-grid")
    };
    let support_deviation = mu
        .atoms()
        .iter()
        .map(|v| (raw_moment(mu, v, p) - value).abs())
        .fold(0.0, f64::max);
    let tol = opts.frame_tol * value.max(1.0);
    let min_gap = min - value;
    Ok(PfpReport {
        pfp: value,
        p,
        min_gap,
        argmin,
        support_deviation,
        violation: min_gap < -tol,
        tol,
        method,
        grid,
    })
}
