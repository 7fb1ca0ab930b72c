mod common;

use common::*;
use frameport::frame::*;
use frameport::ot::{solve_exact, wasserstein_p};
use frameport::psd::{bures_squared, d_w, op_norm_sym, optimal_map};
use frameport::{DiscreteMeasure, PsdMatrix, UnitVector};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::Rng;

#[test]
fn directional_distance_matches_oracle() {
    let mut r = rng(21);
    for _ in 0..30 {
        let dim = r.random_range(1..=3);
        let k = r.random_range(1..=20);
        let mu = random_measure(&mut r, dim, k);
        for _ in 0..10 {
            let x = random_unit(&mut r, dim);
            let closed = directional_distance(&mu, &x, 2.0).unwrap();
            let oracle = wasserstein_p(&mu, &mu.project_hyperplane(&x).unwrap(), 2.0).unwrap();
            assert!((closed - oracle).abs() <= 1e-7, "{closed} vs {oracle}");
            let quad = frame_operator(&mu).quadratic_form(x.as_vector()).sqrt();
            assert!((closed - quad).abs() <= 1e-10);
        }
    }
}

#[test]
fn distance_to_hyperplane_is_distance_of_line_projection_to_origin() {
    let mut r = rng(22);
    for _ in 0..60 {
        let dim = r.random_range(1..=4);
        let mu = random_measure(&mut r, dim, 9);
        let x = random_unit(&mut r, dim);
        let origin = DiscreteMeasure::dirac(vec![0.0]).unwrap();
        for p in [1.0, 2.0, 3.0] {
            let lhs = directional_distance(&mu, &x, p).unwrap();
            let rhs = wasserstein_p(&mu.project_line(&x).unwrap(), &origin, p).unwrap();
            assert!((lhs - rhs).abs() <= 1e-9);
        }
    }
}

#[test]
fn frame_operator_matches_exact_summation() {
    let mut r = rng(23);
    for _ in 0..50 {
        let dim = r.random_range(1..=4);
        let mu = random_measure(&mut r, dim, 25);
        let s = frame_operator(&mu);
        assert!((s.matrix() - exact_frame_operator(&mu)).amax() <= 1e-12);
    }
}

/// `‖S_μ^{1/2} − S_ν^{1/2}‖_op ≤ W₂(μ, ν)` fails for `δ_(1,0)`, `δ_(1,1)`.
#[test]
fn root_difference_in_operator_norm_is_not_dominated_by_w2() {
    let mu = DiscreteMeasure::dirac(vec![1.0, 0.0]).unwrap();
    let nu = DiscreteMeasure::dirac(vec![1.0, 1.0]).unwrap();
    let w = wasserstein_p(&mu, &nu, 2.0).unwrap();
    let diff = frame_operator(&mu).sqrt().matrix() - frame_operator(&nu).sqrt().matrix();
    let op = op_norm_sym(&diff);
    assert!((w - 1.0).abs() < 1e-15);
    assert!(op > w + 0.07, "{op}");
}

/// Direction by direction, the frame map is 1-Lipschitz:
/// `|√(xᵗS_μx) − √(xᵗS_νx)| ≤ W₂(μ, ν)`.
#[test]
fn directional_roots_are_lipschitz_in_w2() {
    let mut r = rng(24);
    for _ in 0..60 {
        let dim = r.random_range(1..=3);
        let mu = random_measure(&mut r, dim, 8);
        let nu = random_measure(&mut r, dim, 8);
        let w = wasserstein_p(&mu, &nu, 2.0).unwrap();
        let (s, t) = (frame_operator(&mu), frame_operator(&nu));
        let probes = frameport::sphere::probe_set(dim).unwrap();
        for x in &probes.directions {
            let gap = s.quadratic_form(x.as_vector()).sqrt() - t.quadratic_form(x.as_vector()).sqrt();
            assert!(gap.abs() <= w + 1e-8);
        }
        assert!(d_w(&s, &t).unwrap() <= w + 1e-8);
    }
}

#[test]
fn ellipsoid_decomposition() {
    let mut r = rng(25);
    for _ in 0..40 {
        let dim = r.random_range(1..=4);
        let mu = random_frame(&mut r, dim, 12);
        let el = frame_ellipsoid(&mu);
        let eigen_dists: Vec<f64> = el
            .axes
            .iter()
            .map(|a| directional_distance(&mu, &UnitVector::normalize(DVector::from_vec(a.clone())).unwrap(), 2.0).unwrap())
            .collect();
        for _ in 0..10 {
            let x = random_unit(&mut r, dim);
            let coords: Vec<f64> = el
                .axes
                .iter()
                .map(|a| a.iter().zip(x.as_slice()).map(|(p, q)| p * q).sum())
                .collect();
            let sum: f64 = coords.iter().zip(&eigen_dists).map(|(c, d)| c * c * d * d).sum();
            let d = directional_distance(&mu, &x, 2.0).unwrap();
            assert!((sum - d * d).abs() <= 1e-10);
            let y = x.as_vector() / d;
            assert!((el.polar_level(&y) - 1.0).abs() <= 1e-9);
            // and S^{1/2} x lies on the frame ellipsoid itself
            let on = frame_operator(&mu).sqrt().matrix() * x.as_vector();
            assert!((el.level(&on) - 1.0).abs() <= 1e-9);
        }
    }
}

#[test]
fn closest_in_fiber_against_oracle() {
    let mut r = rng(26);
    for _ in 0..40 {
        let dim = r.random_range(1..=3);
        let mu = random_frame(&mut r, dim, 12);
        let t = random_definite(&mut r, dim);
        let f = closest_in_fiber(&mu, &t).unwrap();
        let s = frame_operator(&mu);
        assert!((frame_operator(&f.measure).matrix() - t.matrix()).amax() <= 1e-8);
        assert!((f.distance - d_w(&s, &t).unwrap()).abs() <= 1e-8);
        let oracle = solve_exact(&mu, &f.measure, 2.0).unwrap().cost;
        assert!((oracle - f.distance * f.distance).abs() <= 1e-6);
        // retraction fixes its target fiber
        let again = retract_to_fiber(&f.measure, &t).unwrap();
        assert!(again.approx_eq(&f.measure, 1e-8, 0.0));
    }
}

#[test]
fn fiber_distance_does_not_depend_on_the_representative() {
    let mut r = rng(27);
    for _ in 0..10 {
        let dim = r.random_range(2..=3);
        let mu = random_frame(&mut r, dim, 10);
        let s = frame_operator(&mu);
        let t = random_definite(&mut r, dim);
        let base = closest_in_fiber(&mu, &t).unwrap().distance;
        // S^{1/2} U S^{-1/2} maps P_S to itself for orthogonal U
        for _ in 0..10 {
            let u = random_orthogonal(&mut r, dim);
            let g = s.sqrt().matrix() * u * s.pinv_sqrt().matrix();
            let other = mu.push_forward_linear(&g).unwrap();
            assert!((frame_operator(&other).matrix() - s.matrix()).amax() <= 1e-10);
            let d = closest_in_fiber(&other, &t).unwrap().distance;
            assert!((d - base).abs() <= 1e-8);
        }
    }
}

#[test]
fn closest_on_ray_minimizes_over_scalings() {
    let mut r = rng(28);
    for _ in 0..30 {
        let dim = r.random_range(1..=3);
        let mu = random_frame(&mut r, dim, 10);
        let t = random_definite(&mut r, dim);
        let ray = closest_on_ray(&mu, &t).unwrap();
        let s = frame_operator(&mu);
        let f = |c: f64| bures_squared(&s, &PsdMatrix::from_gram(t.matrix() * (c * c))).unwrap();
        let c = grid_minimize(f, 0.0, 4.0 * ray.c_min.max(1.0), 1e-9);
        assert!((c - ray.c_min).abs() <= 1e-6, "{c} vs {}", ray.c_min);
        assert!((ray.distance * ray.distance - f(ray.c_min)).abs() <= 1e-9);
        let st = frame_operator(&ray.measure);
        assert!((st.matrix() - t.matrix() * ray.c_min.powi(2)).amax() <= 1e-8);
    }
    let diag = DiscreteMeasure::new(2, vec![vec![2.0 * 2f64.sqrt(), 0.0], vec![0.0, 3.0 * 2f64.sqrt()]], vec![0.5, 0.5], false)
        .unwrap();
    let s = frame_operator(&diag);
    let f = |c: f64| bures_squared(&s, &PsdMatrix::identity(2).pipe_scale(c * c)).unwrap();
    assert!((grid_minimize(f, 0.0, 10.0, 1e-9) - 2.5).abs() <= 1e-6);
}

trait Scale {
    fn pipe_scale(&self, c: f64) -> PsdMatrix;
}

impl Scale for PsdMatrix {
    fn pipe_scale(&self, c: f64) -> PsdMatrix {
        PsdMatrix::from_gram(self.matrix() * c)
    }
}

#[test]
fn gelbrich_bound_is_a_lower_bound() {
    let mut r = rng(29);
    for _ in 0..100 {
        let dim = r.random_range(1..=3);
        let mu = random_measure(&mut r, dim, 8);
        let nu = random_measure(&mut r, dim, 8);
        let bound = gelbrich_bound(&frame_operator(&mu), &frame_operator(&nu)).unwrap();
        let w2 = solve_exact(&mu, &nu, 2.0).unwrap().cost;
        assert!(w2 >= bound - 1e-8);
    }
}

#[test]
fn directional_lower_bound_against_oracle() {
    let mut r = rng(30);
    for _ in 0..40 {
        let dim = r.random_range(1..=3);
        let mu = random_frame(&mut r, dim, 10);
        let q = random_orthogonal(&mut r, dim);
        let basis: Vec<UnitVector> = (0..dim)
            .map(|i| UnitVector::normalize(q.column(i).into_owned()).unwrap())
            .collect();
        let nu = random_measure(&mut r, dim, 8);
        let lb = directional_lower_bound(&mu, &nu, &basis).unwrap();
        assert!(lb <= solve_exact(&mu, &nu, 2.0).unwrap().cost + 1e-8);

        // T diagonal in the basis (positive entries): equality
        let d: Vec<f64> = (0..dim).map(|_| r.random_range(0.3..2.0)).collect();
        let t = &q * DMatrix::from_diagonal(&DVector::from_vec(d)) * q.transpose();
        let pushed = mu.push_forward_linear(&t).unwrap();
        let lb = directional_lower_bound(&mu, &pushed, &basis).unwrap();
        let w2 = solve_exact(&mu, &pushed, 2.0).unwrap().cost;
        let _ = lb;
        assert!(lb <= w2 + 1e-8);
    }
}

#[test]
fn geodesics_have_constant_speed() {
    let mut r = rng(31);
    let times = [0.0, 0.25, 0.5, 0.75, 1.0];
    for _ in 0..10 {
        let dim = r.random_range(1..=3);
        let mu = random_frame(&mut r, dim, 8);
        let a = optimal_map(&frame_operator(&mu), &random_definite(&mut r, dim)).unwrap();
        let curve: Vec<DiscreteMeasure> = times.iter().map(|&t| geodesic(&mu, &a, t).unwrap()).collect();
        let total = wasserstein_p(&curve[0], &curve[4], 2.0).unwrap();
        for i in 0..5 {
            for j in i + 1..5 {
                let w = wasserstein_p(&curve[i], &curve[j], 2.0).unwrap();
                assert!((w - (times[j] - times[i]) * total).abs() <= 1e-7);
            }
        }
    }
}

#[test]
fn continuity_modulus_of_hyperplane_projections() {
    let mut r = rng(32);
    for _ in 0..60 {
        let dim = r.random_range(2..=3);
        let mu = random_measure(&mut r, dim, 8);
        let x = random_unit(&mut r, dim);
        let y = random_unit(&mut r, dim);
        let p = [1.0, 2.0, 3.0][r.random_range(0..3)];
        let lhs = solve_exact(&mu.project_hyperplane(&x).unwrap(), &mu.project_hyperplane(&y).unwrap(), p)
            .unwrap()
            .cost;
        let rhs = 2f64.powf(p) * mu.moment(p).unwrap() * (x.as_vector() - y.as_vector()).norm().powf(p);
        assert!(lhs <= rhs + 1e-8);
    }
}

#[test]
fn pfp_bounds_on_the_sphere() {
    let mut r = rng(33);
    for _ in 0..100 {
        let dim = r.random_range(1..=4);
        let k = r.random_range(1..=12);
        let mu = random_sphere_measure(&mut r, dim, k);
        let v = pfp(&mu, 2.0).unwrap();
        assert!(v >= 1.0 / dim as f64 - 1e-9);
        let eig: f64 = frame_operator(&mu).eigenvalues().iter().map(|l| l * l).sum();
        assert!((v - eig).abs() <= 1e-10);
        let tight = frame_report(&mu, 2.0, FrameOptions::default()).unwrap().is_tight;
        assert_eq!(tight, (v - 1.0 / dim as f64).abs() <= 1e-9, "{v} dim {dim}");
    }
    for k in 2..=8 {
        let v = pfp(&equiangular_lines(k), 2.0).unwrap();
        assert!((v - 0.5).abs() <= 1e-9);
    }
}

proptest! {
    #![proptest_config(pt_config(48))]

    #[test]
    fn report_flags_are_consistent(seed in any::<u64>(), dim in 1usize..=3, p in prop::sample::select(vec![1.0f64, 2.0, 3.0])) {
        let mut r = rng(seed);
        let mu = random_measure(&mut r, dim, 6);
        let rep = frame_report(&mu, p, FrameOptions { grid: 300, ..Default::default() }).unwrap();
        prop_assert!(rep.lower_bound <= rep.upper_bound + 1e-12);
        if rep.is_parseval { prop_assert!(rep.is_tight); }
        if rep.is_tight { prop_assert!(rep.is_frame); }
        // grid extrema bracket every probe value
        let probes = frameport::sphere::probe_set(dim).unwrap();
        for x in &probes.directions {
            let v = directional_moment(&mu, x, p).unwrap();
            prop_assert!(v >= rep.lower_bound - 1e-9 && v <= rep.upper_bound + 1e-9);
        }
    }
}
