//! Independent oracles and random generators shared by the integration tests.
//!
//! Nothing here calls the simplex solver or the closed-form routines under
//! test: transport costs come from brute-force vertex enumeration or the
//! 1-D quantile coupling, frame operators from exact rational arithmetic.

#![allow(dead_code)]

use frameport::ot::Coupling;
use frameport::{DiscreteMeasure, PsdMatrix, UnitVector};
use nalgebra::{DMatrix, DVector};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Fixed-seed proptest configuration, so that every run explores the same
/// cases.
pub fn pt_config(cases: u32) -> proptest::test_runner::Config {
    proptest::test_runner::Config {
        cases,
        rng_seed: proptest::test_runner::RngSeed::Fixed(0x0f7a_3e55),
        failure_persistence: None,
        ..Default::default()
    }
}

// ---------------------------------------------------------------- generators

pub fn random_weights(rng: &mut ChaCha8Rng, k: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..k).map(|_| rng.random_range(0.05..1.0)).collect();
    let total: f64 = raw.iter().sum();
    let mut w: Vec<f64> = raw.iter().map(|x| x / total).collect();
    // push the rounding residue onto the largest weight
    let resid = 1.0 - w.iter().sum::<f64>();
    let imax = (0..k).max_by(|&a, &b| w[a].total_cmp(&w[b])).unwrap();
    w[imax] += resid;
    w
}

pub fn random_measure(rng: &mut ChaCha8Rng, dim: usize, atoms: usize) -> DiscreteMeasure {
    let pts = (0..atoms)
        .map(|_| (0..dim).map(|_| rng.random_range(-2.0..2.0)).collect())
        .collect();
    let w = random_weights(rng, atoms);
    DiscreteMeasure::new(dim, pts, w, false).unwrap()
}

/// Random measure whose frame operator has smallest eigenvalue ≥ 0.05.
pub fn random_frame(rng: &mut ChaCha8Rng, dim: usize, max_atoms: usize) -> DiscreteMeasure {
    loop {
        let k = rng.random_range(dim.max(1)..=max_atoms.max(dim));
        let mu = random_measure(rng, dim, k);
        if frameport::frame::frame_operator(&mu).lambda_min() >= 0.05 {
            return mu;
        }
    }
}

pub fn random_unit(rng: &mut ChaCha8Rng, dim: usize) -> UnitVector {
    loop {
        let v = DVector::from_fn(dim, |_, _| rng.random_range(-1.0..1.0));
        if v.norm() > 0.1 {
            return UnitVector::normalize(v).unwrap();
        }
    }
}

pub fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.5..1.5))
}

/// `B Bᵗ` with `B` of shape `n × rank`.
pub fn random_psd(rng: &mut ChaCha8Rng, n: usize, rank: usize) -> PsdMatrix {
    let b = random_matrix(rng, n, rank);
    PsdMatrix::from_gram(&b * b.transpose())
}

/// PSD with smallest eigenvalue ≥ 0.1.
pub fn random_definite(rng: &mut ChaCha8Rng, n: usize) -> PsdMatrix {
    let b = random_matrix(rng, n, n);
    PsdMatrix::from_gram(&b * b.transpose() + DMatrix::identity(n, n) * 0.1)
}

pub fn random_orthogonal(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    random_matrix(rng, n, n).qr().q()
}

/// Uniform measure on the `k` lines at angles `π j / k` (unit atoms).
pub fn equiangular_lines(k: usize) -> DiscreteMeasure {
    let atoms = (0..k)
        .map(|j| {
            let t = std::f64::consts::PI * j as f64 / k as f64;
            vec![t.cos(), t.sin()]
        })
        .collect();
    DiscreteMeasure::uniform(2, atoms).unwrap()
}

pub fn random_sphere_measure(rng: &mut ChaCha8Rng, dim: usize, atoms: usize) -> DiscreteMeasure {
    let pts = (0..atoms)
        .map(|_| random_unit(rng, dim).into_inner())
        .collect();
    DiscreteMeasure::from_vectors(dim, pts, random_weights(rng, atoms), false).unwrap()
}

// ------------------------------------------------------- transport oracles

fn ground(x: &DVector<f64>, y: &DVector<f64>, p: f64) -> f64 {
    (x - y).norm().powf(p)
}

fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-12 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            if f != 0.0 {
                for c in col..n {
                    a[r][c] -= f * a[col][c];
                }
                b[r] -= f * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    Some(x)
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    rec(0, n, k, &mut cur, &mut out);
    out
}

/// Minimum of the transport objective over every vertex of the
/// transportation polytope, by enumerating all bases of the equality system
/// (the last column constraint is redundant and dropped).
pub fn vertex_enumeration_cost(supply: &[f64], demand: &[f64], cost: &[f64]) -> f64 {
    let (m, k) = (supply.len(), demand.len());
    assert!(m * k <= 16, "oracle is for tiny instances");
    let rows = m + k - 1;
    let rhs: Vec<f64> = supply.iter().chain(&demand[..k - 1]).copied().collect();
    let column = |cell: usize| -> Vec<f64> {
        let (i, j) = (cell / k, cell % k);
        let mut c = vec![0.0; rows];
        c[i] = 1.0;
        if j < k - 1 {
            c[m + j] = 1.0;
        }
        c
    };
    let mut best = f64::INFINITY;
    for basis in combinations(m * k, rows) {
        let cols: Vec<Vec<f64>> = basis.iter().map(|&c| column(c)).collect();
        let a: Vec<Vec<f64>> = (0..rows).map(|r| cols.iter().map(|c| c[r]).collect()).collect();
        let Some(x) = solve_dense(a, rhs.clone()) else {
            continue;
        };
        if x.iter().any(|&v| v < -1e-12) {
            continue;
        }
        let val: f64 = basis.iter().zip(&x).map(|(&c, &v)| v * cost[c]).sum();
        best = best.min(val);
    }
    best
}

/// Vertex-enumeration optimum of the discrete transport problem.
pub fn brute_force_cost(mu: &DiscreteMeasure, nu: &DiscreteMeasure, p: f64) -> f64 {
    let mut cost = Vec::new();
    for x in mu.atoms() {
        for y in nu.atoms() {
            cost.push(ground(x, y, p));
        }
    }
    vertex_enumeration_cost(mu.weights(), nu.weights(), &cost)
}

/// Monotone (quantile) coupling cost in R¹, optimal for convex costs.
pub fn quantile_cost(mu: &DiscreteMeasure, nu: &DiscreteMeasure, p: f64) -> f64 {
    assert_eq!(mu.dim(), 1);
    let sorted = |m: &DiscreteMeasure| {
        let mut v: Vec<(f64, f64)> = m.iter().map(|(x, w)| (x[0], w)).collect();
        v.sort_by(|a, b| a.0.total_cmp(&b.0));
        v
    };
    let (a, b) = (sorted(mu), sorted(nu));
    let (mut i, mut j) = (0, 0);
    let (mut ra, mut rb) = (a[0].1, b[0].1);
    let mut total = 0.0;
    loop {
        let t = ra.min(rb);
        total += t * (a[i].0 - b[j].0).abs().powf(p);
        ra -= t;
        rb -= t;
        let next_a = ra <= 1e-15 && i + 1 < a.len();
        let next_b = rb <= 1e-15 && j + 1 < b.len();
        if !next_a && !next_b {
            break;
        }
        if next_a {
            i += 1;
            ra += a[i].1;
        }
        if next_b {
            j += 1;
            rb += b[j].1;
        }
    }
    total
}

/// Checks that `gamma` has marginals `mu` and `nu` up to `tol` in weight.
pub fn marginals_match(gamma: &Coupling, mu: &DiscreteMeasure, nu: &DiscreteMeasure, tol: f64) -> bool {
    let mass_at = |m: &DiscreteMeasure, p: &DVector<f64>| -> f64 {
        m.iter().filter(|(x, _)| *x == p).map(|(_, w)| w).sum()
    };
    let left = gamma.left_marginal();
    let right = gamma.right_marginal();
    mu.atoms().iter().all(|x| (mass_at(left, x) - mass_at(mu, x)).abs() <= tol)
        && nu.atoms().iter().all(|y| (mass_at(right, y) - mass_at(nu, y)).abs() <= tol)
}

// ---------------------------------------------------- exact frame operator

fn exact(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite")
}

/// `Σ w v vᵗ` summed in exact rational arithmetic, rounded once.
pub fn exact_frame_operator(mu: &DiscreteMeasure) -> DMatrix<f64> {
    let n = mu.dim();
    let mut acc = vec![BigRational::zero(); n * n];
    for (v, w) in mu.iter() {
        let w = exact(w);
        let v: Vec<BigRational> = v.iter().map(|&c| exact(c)).collect();
        for r in 0..n {
            for c in 0..n {
                acc[r * n + c] += &w * &v[r] * &v[c];
            }
        }
    }
    DMatrix::from_fn(n, n, |r, c| acc[r * n + c].to_f64().unwrap())
}

/// Exact rational `Σ_i w_i x_i^k`.
pub fn exact_moment_1d(mu: &DiscreteMeasure, k: u32) -> f64 {
    let mut acc = BigRational::zero();
    for (v, w) in mu.iter() {
        let x = exact(v[0]);
        let mut pow = BigRational::from_integer(BigInt::from(1));
        for _ in 0..k {
            pow *= &x;
        }
        acc += exact(w) * pow;
    }
    acc.to_f64().unwrap()
}

// ----------------------------------------------------------- scalar search

/// Minimizer of a unimodal `f` on `[lo, hi]`: coarse grid, then golden
/// section until the bracket is below `tol`.
pub fn grid_minimize(f: impl Fn(f64) -> f64, lo: f64, hi: f64, tol: f64) -> f64 {
    let n = 400;
    let step = (hi - lo) / n as f64;
    let mut best = 0usize;
    let mut best_v = f64::INFINITY;
    for i in 0..=n {
        let v = f(lo + step * i as f64);
        if v < best_v {
            best_v = v;
            best = i;
        }
    }
    let mut a = lo + step * best.saturating_sub(1) as f64;
    let mut b = (lo + step * (best + 1) as f64).min(hi);
    let g = (5f64.sqrt() - 1.0) / 2.0;
    while b - a > tol {
        let c = b - g * (b - a);
        let d = a + g * (b - a);
        if f(c) < f(d) {
            b = d;
        } else {
            a = c;
        }
    }
    0.5 * (a + b)
}
