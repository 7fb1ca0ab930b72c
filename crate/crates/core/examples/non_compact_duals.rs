//! Transport duals of a centered frame are not a bounded set: shifting the
//! canonical dual by any vector keeps the cross block at the identity while
//! the 2-Wasserstein distance to the canonical dual grows linearly.
//!
//! cargo run -p frameport --example non_compact_duals

use frameport::duals::{canonical_dual_coupling, is_transport_dual, pushforward_dual, DUAL_TOL};
use frameport::ot::wasserstein_p;
use frameport::DiscreteMeasure;
use nalgebra::DVector;

fn main() -> frameport::Result<()> {
    let mu = DiscreteMeasure::new(
        2,
        vec![vec![1.0, 0.0], vec![-1.0, 0.5], vec![0.5, -1.0], vec![0.0, 2.0]],
        vec![0.4, 0.2, 0.3, 0.1],
        false,
    )?
    .center();
    let canonical = canonical_dual_coupling(&mu)?.right_marginal().clone();
    let dir = DVector::from_vec(vec![0.6, 0.8]);

    println!("{:>8} {:>14} {:>14} {:>12}", "alpha", "W2(nu, mu_c)", "cost", "|Psi - I|_F");
    for alpha in [0.0, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0] {
        // h ≡ alpha·dir; with mean zero the correction term vanishes
        let h = vec![&dir * alpha; mu.len()];
        let (nu, gamma) = pushforward_dual(&mu, &h)?;
        let cert = is_transport_dual(&gamma, DUAL_TOL)?;
        assert!(cert.valid);
        println!(
            "{alpha:>8.1} {:>14.6} {:>14.6} {:>12.2e}",
            wasserstein_p(&nu, &canonical, 2.0)?,
            gamma.cost(2.0)?,
            cert.psi_residual
        );
    }
    Ok(())
}
