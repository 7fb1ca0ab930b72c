//! Deterministic point sets on the unit sphere.
//!
//! Two uses: dense grids (with a local polish step) for optimizing
//! non-quadratic functions of a direction in dimensions 1–3, and small fixed
//! probe sets for reporting inequalities that quantify over all directions.
//!
//! Every function handled here is even (`f(x) = f(−x)`), so the R² grid
//! only covers a half circle.

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::measure::UnitVector;

/// Default number of grid points.
pub const DEFAULT_GRID: usize = 10_000;

/// Number of probe directions.
pub const PROBE_COUNT: usize = 64;

/// Seed of the probe set in dimensions ≥ 4.
pub const PROBE_SEED: u64 = 0x5eed_f4a3;

const GOLDEN_ANGLE: f64 = 2.399_963_229_728_653; // π (3 − √5)

/// Description of a grid search, embedded in reports.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridInfo {
    pub kind: &'static str,
    pub points: usize,
    pub refined: bool,
}

/// Grid over the (half) unit sphere of R^dim, `dim ∈ {1, 2, 3}`.
///
/// - dim 1: the single point `1`;
/// - dim 2: angles `π k / N`, `k = 0..N`;
/// - dim 3: Fibonacci (golden-angle) lattice with N points.
pub fn grid(dim: usize, resolution: usize) -> Result<(Vec<DVector<f64>>, GridInfo)> {
    if resolution == 0 {
        return Err(Error::OutOfRange("grid resolution must be positive".into()));
    }
    let (pts, kind) = match dim {
        1 => (vec![DVector::from_element(1, 1.0)], "point"),
        2 => (half_circle(resolution), "uniform-angle"),
        3 => (fibonacci(resolution), "fibonacci"),
        _ => {
            return Err(Error::Unsupported(format!(
                "sphere grid search needs dim <= 3, got {dim}"
            )))
        }
    };
    let info = GridInfo {
        kind,
        points: pts.len(),
        refined: dim > 1,
    };
    Ok((pts, info))
}

fn half_circle(n: usize) -> Vec<DVector<f64>> {
    (0..n)
        .map(|k| {
            let t = std::f64::consts::PI * k as f64 / n as f64;
            DVector::from_vec(vec![t.cos(), t.sin()])
        })
        .collect()
}

fn fibonacci(n: usize) -> Vec<DVector<f64>> {
    (0..n)
        .map(|k| {
            let z = 1.0 - (2.0 * k as f64 + 1.0) / n as f64;
            let r = (1.0 - z * z).max(0.0).sqrt();
            let phi = GOLDEN_ANGLE * k as f64;
            DVector::from_vec(vec![r * phi.cos(), r * phi.sin(), z])
        })
        .collect()
}

/// Result of a sphere optimization.
#[derive(Debug, Clone)]
pub struct Extremum {
    pub point: DVector<f64>,
    pub value: f64,
}

/// Minimizes `f` over the unit sphere: grid scan, then compass search in
/// the tangent space of the best grid point.
pub fn minimize<F>(dim: usize, resolution: usize, f: F) -> Result<(Extremum, GridInfo)>
where
    F: Fn(&DVector<f64>) -> f64,
{
    let (pts, info) = grid(dim, resolution)?;
    let mut best = Extremum {
        point: pts[0].clone(),
        value: f(&pts[0]),
    };
    for x in &pts[1..] {
        let v = f(x);
        if v < best.value {
            best = Extremum {
                point: x.clone(),
                value: v,
            };
        }
    }
    if dim > 1 {
        let spacing = match dim {
            2 => std::f64::consts::PI / resolution as f64,
            _ => (4.0 * std::f64::consts::PI / resolution as f64).sqrt(),
        };
        best = polish(best, spacing, &f);
    }
    Ok((best, info))
}

/// Maximizes `f` over the unit sphere; see [`minimize`].
pub fn maximize<F>(dim: usize, resolution: usize, f: F) -> Result<(Extremum, GridInfo)>
where
    F: Fn(&DVector<f64>) -> f64,
{
    let (e, info) = minimize(dim, resolution, |x| -f(x))?;
    Ok((
        Extremum {
            point: e.point,
            value: -e.value,
        },
        info,
    ))
}

fn tangent_basis(x: &DVector<f64>) -> Vec<DVector<f64>> {
    let n = x.len();
    let mut out: Vec<DVector<f64>> = Vec::with_capacity(n - 1);
    for i in 0..n {
        let mut e = DVector::zeros(n);
        e[i] = 1.0;
        e -= x * x[i];
        for b in &out {
            let c = b.dot(&e);
            e -= b * c;
        }
        let norm = e.norm();
        if norm > 1e-6 {
            out.push(e / norm);
        }
        if out.len() == n - 1 {
            break;
        }
    }
    out
}

fn polish<F>(start: Extremum, spacing: f64, f: &F) -> Extremum
where
    F: Fn(&DVector<f64>) -> f64,
{
    let mut best = start;
    let mut step = spacing;
    let mut iters = 0;
    while step > 1e-12 && iters < 2000 {
        iters += 1;
        let mut improved = false;
        for t in tangent_basis(&best.point) {
            for sign in [1.0, -1.0] {
                let cand = &best.point + &t * (sign * step);
                let cand = &cand / cand.norm();
                let v = f(&cand);
                if v < best.value {
                    best = Extremum {
                        point: cand,
                        value: v,
                    };
                    improved = true;
                    break;
                }
            }
            if improved {
                break;
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    best
}

/// A fixed, named set of unit directions.
#[derive(Debug, Clone)]
pub struct ProbeSet {
    pub id: String,
    pub directions: Vec<UnitVector>,
}

/// [`PROBE_COUNT`] deterministic directions in R^dim: uniform angles on the
/// half circle for dim 2, a Fibonacci lattice for dim 3, and for dim ≥ 4
/// the standard-normal draws of a seeded ChaCha stream, the first `dim` of
/// them orthonormalized. In dim 1 the only direction is `1`.
pub fn probe_set(dim: usize) -> Result<ProbeSet> {
    let (id, raw) = match dim {
        0 => return Err(Error::OutOfRange("dimension must be positive".into())),
        1 => ("line-1".to_string(), vec![DVector::from_element(1, 1.0)]),
        2 => (format!("s1-uniform-{PROBE_COUNT}"), half_circle(PROBE_COUNT)),
        3 => (format!("s2-fibonacci-{PROBE_COUNT}"), fibonacci(PROBE_COUNT)),
        _ => (
            format!("gauss-chacha8-{PROBE_SEED:x}-n{dim}-{PROBE_COUNT}"),
            gaussian_probes(dim),
        ),
    };
    let directions = raw
        .into_iter()
        .map(UnitVector::normalize)
        .collect::<Result<Vec<_>>>()?;
    Ok(ProbeSet { id, directions })
}

fn gaussian_probes(dim: usize) -> Vec<DVector<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(PROBE_SEED);
    let mut out: Vec<DVector<f64>> = Vec::with_capacity(PROBE_COUNT);
    while out.len() < PROBE_COUNT {
        let mut v = DVector::from_fn(dim, |_, _| StandardNormal.sample(&mut rng));
        if out.len() < dim {
            for b in &out {
                let c = b.dot(&v);
                v -= b * c;
            }
        }
        let n = v.norm();
        if n > 1e-8 {
            out.push(v / n);
        }
    }
    out
}
