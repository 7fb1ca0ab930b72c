//! Exact optimal transport between discrete measures.
//!
//! This is the oracle every closed-form Wasserstein identity in the crate is
//! checked against: the transportation linear program is solved exactly by
//! a primal simplex (see [`simplex`]), and the resulting plan is returned as
//! a [`Coupling`].

mod coupling;
pub mod simplex;

pub use coupling::{
    coupling_frame_operator, pushforward_coupling, Coupling, CouplingFrameOperator, CouplingJson,
    Pair, PairJson,
};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::measure::DiscreteMeasure;

/// Largest admissible `m · k` for [`solve_exact`].
pub const MAX_CELLS: usize = 40_000;

/// An optimal coupling and its cost `Σ mass · ‖x − y‖^p`.
#[derive(Debug, Clone, Serialize)]
pub struct TransportPlan {
    pub coupling: Coupling,
    pub cost: f64,
    pub p: f64,
    /// Simplex pivots taken from the north-west corner start.
    pub pivots: usize,
    /// Smallest reduced cost at termination; nonnegative up to roundoff
    /// certifies optimality.
    pub min_reduced_cost: f64,
}

impl TransportPlan {
    /// `cost^{1/p}`.
    pub fn distance(&self) -> f64 {
        self.cost.max(0.0).powf(1.0 / self.p)
    }
}

fn check_p(p: f64) -> Result<()> {
    if !(p >= 1.0) || !p.is_finite() {
        return Err(Error::OutOfRange(format!("cost exponent p = {p} must be >= 1")));
    }
    Ok(())
}

/// Solves the discrete optimal transport problem with ground cost
/// `‖x − y‖^p` exactly. Deterministic for a fixed ordering of atoms.
pub fn solve_exact(mu: &DiscreteMeasure, nu: &DiscreteMeasure, p: f64) -> Result<TransportPlan> {
    check_p(p)?;
    if mu.dim() != nu.dim() {
        return Err(Error::DimensionMismatch {
            expected: mu.dim(),
            found: nu.dim(),
        });
    }
    let (m, k) = (mu.len(), nu.len());
    if m * k > MAX_CELLS {
        return Err(Error::SizeLimit {
            rows: m,
            cols: k,
            limit: MAX_CELLS,
        });
    }
    let mut cost = Vec::with_capacity(m * k);
    for x in mu.atoms() {
        for y in nu.atoms() {
            cost.push(coupling::ground_cost(x, y, p));
        }
    }
    let sol = simplex::solve_transport(mu.weights(), nu.weights(), &cost)?;
    let mut pairs = Vec::new();
    for (i, x) in mu.atoms().iter().enumerate() {
        for (j, y) in nu.atoms().iter().enumerate() {
            let f = sol.flow[i * k + j];
            if f > 0.0 {
                pairs.push(Pair {
                    x: x.clone(),
                    y: y.clone(),
                    mass: f,
                });
            }
        }
    }
    let coupling = Coupling::assemble(mu.dim(), nu.dim(), pairs);
    let cost = coupling.cost(p)?;
    Ok(TransportPlan {
        coupling,
        cost,
        p,
        pivots: sol.pivots,
        min_reduced_cost: sol.min_reduced_cost,
    })
}

/// `W_p(μ, ν)` from the exact solver.
pub fn wasserstein_p(mu: &DiscreteMeasure, nu: &DiscreteMeasure, p: f64) -> Result<f64> {
    Ok(solve_exact(mu, nu, p)?.distance())
}
