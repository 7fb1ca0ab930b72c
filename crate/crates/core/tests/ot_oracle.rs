mod common;

use common::*;
use frameport::frame::frame_operator;
use frameport::ot::{pushforward_coupling, solve_exact, wasserstein_p};
use frameport::DiscreteMeasure;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

#[test]
fn random_three_by_three_matches_vertex_enumeration() {
    let mut r = rng(11);
    for _ in 0..50 {
        let mu = random_measure(&mut r, 2, 3);
        let nu = random_measure(&mut r, 2, 3);
        for p in [1.0, 2.0] {
            let plan = solve_exact(&mu, &nu, p).unwrap();
            let want = brute_force_cost(&mu, &nu, p);
            assert!((plan.cost - want).abs() <= 1e-10, "{} vs {}", plan.cost, want);
        }
    }
}

#[test]
fn plans_are_feasible_and_certified() {
    let mut r = rng(12);
    for _ in 0..60 {
        let (m, k) = (r_usize(&mut r, 1, 20), r_usize(&mut r, 1, 20));
        let dim = r_usize(&mut r, 1, 3);
        let mu = random_measure(&mut r, dim, m);
        let nu = random_measure(&mut r, dim, k);
        let plan = solve_exact(&mu, &nu, 2.0).unwrap();
        assert!(marginals_match(&plan.coupling, &mu, &nu, 1e-9));
        let scale = plan.coupling.pairs().iter().map(|p| (&p.x - &p.y).norm_squared()).fold(1.0, f64::max);
        assert!(plan.min_reduced_cost >= -1e-10 * scale);
        let recomputed: f64 = plan
            .coupling
            .pairs()
            .iter()
            .map(|p| p.mass * (&p.x - &p.y).norm_squared())
            .sum();
        assert!((recomputed - plan.cost).abs() <= 1e-10);
        // at most m + k − 1 pairs in a basic solution
        assert!(plan.coupling.pairs().len() < m + k);
    }
}

fn r_usize(r: &mut rand_chacha::ChaCha8Rng, lo: usize, hi: usize) -> usize {
    use rand::Rng;
    r.random_range(lo..=hi)
}

#[test]
fn triangle_inequality() {
    let mut r = rng(13);
    for _ in 0..40 {
        let dim = r_usize(&mut r, 1, 3);
        let k = r_usize(&mut r, 1, 8);
        let a = random_measure(&mut r, dim, k);
        let k = r_usize(&mut r, 1, 8);
        let b = random_measure(&mut r, dim, k);
        let k = r_usize(&mut r, 1, 8);
        let c = random_measure(&mut r, dim, k);
        for p in [1.0, 2.0, 3.0] {
            let ab = wasserstein_p(&a, &b, p).unwrap();
            let bc = wasserstein_p(&b, &c, p).unwrap();
            let ac = wasserstein_p(&a, &c, p).unwrap();
            assert!(ac <= ab + bc + 1e-9);
        }
    }
}

#[test]
fn pushforward_coupling_cost_dominates_distance() {
    let mut r = rng(14);
    for _ in 0..40 {
        let mu = random_measure(&mut r, 2, 6);
        let images: Vec<DVector<f64>> = mu.atoms().iter().map(|_| random_unit(&mut r, 2).into_inner() * 1.7).collect();
        let g = pushforward_coupling(&mu, &images).unwrap();
        let nu = g.right_marginal();
        assert!(g.cost(2.0).unwrap() >= solve_exact(&mu, nu, 2.0).unwrap().cost - 1e-12);
    }
}

#[test]
fn canonical_coupling_has_identity_cross_block() {
    let mut r = rng(15);
    for dim in 1..=4 {
        let mu = random_frame(&mut r, dim, 10);
        let inv = frame_operator(&mu).inverse().unwrap();
        let images: Vec<DVector<f64>> = mu.atoms().iter().map(|v| inv.matrix() * v).collect();
        let f = pushforward_coupling(&mu, &images).unwrap().frame_operator().unwrap();
        assert!((f.psi.matrix() - DMatrix::identity(dim, dim)).amax() < 1e-10);
        assert!((f.left.matrix() - exact_frame_operator(&mu)).amax() < 1e-12);
    }
}

#[test]
fn canonicalized_marginals_reproduce_inputs() {
    let mut r = rng(16);
    for _ in 0..30 {
        let mu = random_measure(&mut r, 2, 7);
        let nu = random_measure(&mut r, 2, 5);
        let plan = solve_exact(&mu, &nu, 2.0).unwrap();
        let left = plan.coupling.left_marginal().canonicalize();
        let right = plan.coupling.right_marginal().canonicalize();
        assert!(left.approx_eq(&mu.canonicalize(), 0.0, 1e-9));
        assert!(right.approx_eq(&nu.canonicalize(), 0.0, 1e-9));
    }
}

#[test]
fn dilation_scales_distance() {
    let mut r = rng(17);
    for _ in 0..30 {
        let mu = random_measure(&mut r, 3, 6);
        let nu = random_measure(&mut r, 3, 6);
        let base = wasserstein_p(&mu, &nu, 2.0).unwrap();
        for c in [-2.5, 0.5, 3.0] {
            let d = DMatrix::identity(3, 3) * c;
            let w = wasserstein_p(&mu.push_forward_linear(&d).unwrap(), &nu.push_forward_linear(&d).unwrap(), 2.0).unwrap();
            assert!((w - c.abs() * base).abs() <= 1e-9);
        }
    }
}

#[test]
fn degenerate_supplies() {
    // equal weights and coincident atoms produce many tied bases
    let pts: Vec<Vec<f64>> = vec![vec![0.0], vec![0.0], vec![1.0], vec![1.0]];
    let mu = DiscreteMeasure::uniform(1, pts.clone()).unwrap();
    let nu = DiscreteMeasure::uniform(1, pts.into_iter().rev().collect()).unwrap();
    let plan = solve_exact(&mu, &nu, 2.0).unwrap();
    assert!(plan.cost.abs() < 1e-15);
    assert_eq!(plan.cost, brute_force_cost(&mu, &nu, 2.0));
}

proptest! {
    #![proptest_config(pt_config(64))]

    #[test]
    fn solver_matches_quantile_coupling_on_the_line(
        xs in prop::collection::vec(-5.0f64..5.0, 1..12),
        ys in prop::collection::vec(-5.0f64..5.0, 1..12),
        p in prop::sample::select(vec![1.0f64, 2.0, 3.0]),
    ) {
        let mu = DiscreteMeasure::uniform(1, xs.iter().map(|&x| vec![x]).collect()).unwrap();
        let nu = DiscreteMeasure::uniform(1, ys.iter().map(|&y| vec![y]).collect()).unwrap();
        let got = solve_exact(&mu, &nu, p).unwrap().cost;
        let want = quantile_cost(&mu, &nu, p);
        prop_assert!((got - want).abs() <= 1e-10 * want.max(1.0), "{} vs {}", got, want);
    }

    #[test]
    fn solver_matches_vertex_enumeration(
        seed in any::<u64>(),
        m in 1usize..=4,
        k in 1usize..=4,
    ) {
        let mut r = rng(seed);
        let mu = random_measure(&mut r, 2, m);
        let nu = random_measure(&mut r, 2, k);
        let got = solve_exact(&mu, &nu, 2.0).unwrap().cost;
        prop_assert!((got - brute_force_cost(&mu, &nu, 2.0)).abs() <= 1e-10);
    }
}
