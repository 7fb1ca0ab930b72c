//! Primal transportation simplex on a spanning-tree basis.
//!
//! Rows are supply nodes, columns are demand nodes; a basis is a spanning
//! tree of `m + k − 1` cells of the bipartite graph. Entering cells follow
//! Bland's rule in row-major order and ties for the leaving cell go to the
//! row-major smallest cell, so the pivot sequence is fully determined by the
//! input ordering.

use crate::error::{Error, Result};

/// Optimal basic solution of a balanced transportation problem.
#[derive(Debug, Clone)]
pub struct TransportSolution {
    /// Row-major flows, `m × k`.
    pub flow: Vec<f64>,
    /// Row potentials `u` and column potentials `v` with `u_i + v_j = c_ij`
    /// on basic cells.
    pub row_potential: Vec<f64>,
    pub col_potential: Vec<f64>,
    /// Basic cells `(i, j)`, a spanning tree.
    pub basis: Vec<(usize, usize)>,
    pub pivots: usize,
    /// Smallest reduced cost `c_ij − u_i − v_j` over all cells.
    pub min_reduced_cost: f64,
}

struct Tree {
    parent: Vec<Option<(usize, usize)>>, // (parent node, basis index)
    depth: Vec<usize>,
}

pub(crate) struct Transport<'a> {
    m: usize,
    k: usize,
    cost: &'a [f64],
    flow: Vec<f64>,
    in_basis: Vec<bool>,
    basis: Vec<(usize, usize)>,
}

impl<'a> Transport<'a> {
    fn node_col(&self, j: usize) -> usize {
        self.m + j
    }

    /// North-west corner start. Always produces exactly `m + k − 1` cells.
    fn northwest(supply: &[f64], demand: &[f64], cost: &'a [f64]) -> Self {
        let (m, k) = (supply.len(), demand.len());
        let mut flow = vec![0.0; m * k];
        let mut in_basis = vec![false; m * k];
        let mut basis = Vec::with_capacity(m + k - 1);
        let mut rem_s = supply.to_vec();
        let mut rem_d = demand.to_vec();
        let (mut i, mut j) = (0, 0);
        loop {
            let x = rem_s[i].min(rem_d[j]).max(0.0);
            flow[i * k + j] = x;
            in_basis[i * k + j] = true;
            basis.push((i, j));
            rem_s[i] -= x;
            rem_d[j] -= x;
            if i == m - 1 && j == k - 1 {
                break;
            }
            if i == m - 1 {
                j += 1;
            } else if j == k - 1 || rem_s[i] <= rem_d[j] {
                i += 1;
            } else {
                j += 1;
            }
        }
        debug_assert_eq!(basis.len(), m + k - 1);
        Self {
            m,
            k,
            cost,
            flow,
            in_basis,
            basis,
        }
    }

    fn build_tree(&self) -> (Tree, Vec<f64>, Vec<f64>) {
        let nodes = self.m + self.k;
        let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); nodes];
        for (b, &(i, j)) in self.basis.iter().enumerate() {
            let c = self.node_col(j);
            adj[i].push((c, b));
            adj[c].push((i, b));
        }
        let mut parent = vec![None; nodes];
        let mut depth = vec![0; nodes];
        let mut seen = vec![false; nodes];
        let mut u = vec![0.0; self.m];
        let mut v = vec![0.0; self.k];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(node) = stack.pop() {
            for &(next, b) in &adj[node] {
                if seen[next] {
                    continue;
                }
                seen[next] = true;
                parent[next] = Some((node, b));
                depth[next] = depth[node] + 1;
                let (i, j) = self.basis[b];
                let c = self.cost[i * self.k + j];
                if next >= self.m {
                    v[next - self.m] = c - u[i];
                } else {
                    u[next] = c - v[j];
                }
                stack.push(next);
            }
        }
        debug_assert!(seen.iter().all(|&s| s), "basis is not a spanning tree");
        (Tree { parent, depth }, u, v)
    }

    /// Basis indices on the tree path from column node of `j` to row `i`,
    /// in order starting at the column end.
    fn tree_path(&self, tree: &Tree, i: usize, j: usize) -> Vec<usize> {
        let mut a = self.node_col(j);
        let mut b = i;
        let mut from_a = Vec::new();
        let mut from_b = Vec::new();
        while a != b {
            if tree.depth[a] >= tree.depth[b] {
                let (p, e) = tree.parent[a].expect("non-root");
                from_a.push(e);
                a = p;
            } else {
                let (p, e) = tree.parent[b].expect("non-root");
                from_b.push(e);
                b = p;
            }
        }
        from_a.extend(from_b.into_iter().rev());
        from_a
    }

    fn run(&mut self, max_pivots: usize) -> Result<TransportSolution> {
        let scale = self.cost.iter().fold(1.0f64, |acc, c| acc.max(c.abs()));
        let eps = 1e-13 * scale;
        let mut pivots = 0;
        loop {
            let (tree, u, v) = self.build_tree();
            let mut entering = None;
            let mut min_rc = f64::INFINITY;
            for i in 0..self.m {
                for j in 0..self.k {
                    let rc = self.cost[i * self.k + j] - u[i] - v[j];
                    min_rc = min_rc.min(rc);
                    if entering.is_none() && !self.in_basis[i * self.k + j] && rc < -eps {
                        entering = Some((i, j));
                    }
                }
            }
            let Some((ei, ej)) = entering else {
                return Ok(TransportSolution {
                    flow: self.flow.clone(),
                    row_potential: u,
                    col_potential: v,
                    basis: self.basis.clone(),
                    pivots,
                    min_reduced_cost: min_rc,
                });
            };
            if pivots >= max_pivots {
                return Err(Error::Unsupported(format!(
                    "transport simplex exceeded {max_pivots} pivots"
                )));
            }
            pivots += 1;

            let path = self.tree_path(&tree, ei, ej);
            debug_assert!(path.len() % 2 == 1);
            // Path edges alternate −, +, −, ... starting at the column end.
            let mut theta = f64::INFINITY;
            let mut leaving: Option<usize> = None;
            for (pos, &b) in path.iter().enumerate() {
                if pos % 2 != 0 {
                    continue;
                }
                let (i, j) = self.basis[b];
                let f = self.flow[i * self.k + j];
                let better = match leaving {
                    None => true,
                    Some(l) => {
                        f < theta || (f == theta && (i, j) < self.basis[l])
                    }
                };
                if better {
                    theta = f;
                    leaving = Some(b);
                }
            }
            let leaving = leaving.expect("cycle has a decreasing cell");
            for (pos, &b) in path.iter().enumerate() {
                let (i, j) = self.basis[b];
                let cell = &mut self.flow[i * self.k + j];
                if pos % 2 == 0 {
                    *cell = (*cell - theta).max(0.0);
                } else {
                    *cell += theta;
                }
            }
            let (li, lj) = self.basis[leaving];
            self.flow[li * self.k + lj] = 0.0;
            self.in_basis[li * self.k + lj] = false;
            self.flow[ei * self.k + ej] = theta;
            self.in_basis[ei * self.k + ej] = true;
            self.basis[leaving] = (ei, ej);
        }
    }
}

/// Solves `min Σ c_ij x_ij` subject to row sums `supply`, column sums
/// `demand`, `x ≥ 0`. `cost` is row-major `m × k`.
pub fn solve_transport(supply: &[f64], demand: &[f64], cost: &[f64]) -> Result<TransportSolution> {
    let (m, k) = (supply.len(), demand.len());
    if m == 0 || k == 0 {
        return Err(Error::Empty);
    }
    if cost.len() != m * k {
        return Err(Error::LengthMismatch {
            expected: m * k,
            found: cost.len(),
        });
    }
    if cost.iter().chain(supply).chain(demand).any(|c| !c.is_finite()) {
        return Err(Error::NonFinite);
    }
    let mut t = Transport::northwest(supply, demand, cost);
    let max_pivots = 50 * (m * k) + 1000;
    t.run(max_pivots)
}
