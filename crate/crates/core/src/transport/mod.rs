//! Exact optimal transport between discrete measures.
//!
//! `W_ℓ(m1, m2) = (min_π ∫|x−y|^ℓ dπ)^{1/(ℓ∨1)}`, and `W_0` uses the bounded
//! cost `1 ∧ |x−y|` with no outer root. All values come from an exact
//! transportation simplex; in one dimension with `ℓ ≥ 1` the monotone
//! coupling of the sorted supports is optimal and is used directly.

pub mod simplex;

use crate::error::{Error, Result};
use crate::measures::{write_atoms, AtomView, DiscreteMeasure, Point, ProductMeasure2d};
use simplex::CostMatrix;

/// Largest combined support handled by the exact solver.
pub const MAX_SUPPORT: usize = 2048;

/// Optimal coupling with its cost.
#[derive(Clone, Debug)]
pub struct TransportPlan {
    pub rows: usize,
    pub cols: usize,
    pub mass: Vec<Vec<f64>>,
    pub cost: f64,
}

impl TransportPlan {
    fn from_cells(rows: usize, cols: usize, cells: &[(usize, usize, f64)], cost: &CostMatrix) -> Self {
        let mut mass = vec![vec![0.0; cols]; rows];
        for &(i, j, q) in cells {
            mass[i][j] += q;
        }
        let total = cells.iter().map(|&(i, j, q)| q * cost.at(i, j)).sum::<f64>().max(0.0);
        TransportPlan { rows, cols, mass, cost: total }
    }

    pub fn row_sums(&self) -> Vec<f64> {
        self.mass.iter().map(|r| r.iter().sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<f64> {
        (0..self.cols).map(|j| self.mass.iter().map(|r| r[j]).sum()).collect()
    }

    /// Cost recomputed from the mass matrix and a cost function.
    pub fn recompute_cost(&self, c: impl Fn(usize, usize) -> f64) -> f64 {
        let mut total = 0.0;
        for (i, row) in self.mass.iter().enumerate() {
            for (j, q) in row.iter().enumerate() {
                if *q != 0.0 {
                    total += q * c(i, j);
                }
            }
        }
        total
    }

    /// The two measures in text format followed by a `plan` section.
    pub fn to_text(&self, source: &DiscreteMeasure, target: &DiscreteMeasure) -> String {
        let mut out = write_atoms(source.dim(), source.atoms());
        out.push_str(&write_atoms(target.dim(), target.atoms()));
        crate::measures::write_plan(&mut out, self.rows, self.cols, &self.mass);
        out
    }
}

fn check_pair(a: AtomView<'_>, b: AtomView<'_>) -> Result<()> {
    let (da, db) = (a.dim().ok_or(Error::EmptyMeasure)?, b.dim().ok_or(Error::EmptyMeasure)?);
    if da != db {
        return Err(Error::DimensionMismatch { expected: da, found: db });
    }
    let atoms = a.len() + b.len();
    if atoms > MAX_SUPPORT {
        return Err(Error::ExactSolverLimit { atoms, limit: MAX_SUPPORT });
    }
    Ok(())
}

/// Drop zero-weight atoms from a view.
fn compact<'a>(v: AtomView<'a>) -> (Vec<&'a Point>, Vec<f64>) {
    v.iter().unzip()
}

fn same_atoms(a: &(Vec<&Point>, Vec<f64>), b: &(Vec<&Point>, Vec<f64>)) -> bool {
    a.0.len() == b.0.len()
        && a.0.iter().zip(&b.0).all(|(p, q)| p == q)
        && a.1.iter().zip(&b.1).all(|(x, y)| x.to_bits() == y.to_bits())
}

fn diagonal_plan(w: &[f64]) -> TransportPlan {
    let k = w.len();
    let mut mass = vec![vec![0.0; k]; k];
    for (i, wi) in w.iter().enumerate() {
        mass[i][i] = *wi;
    }
    TransportPlan { rows: k, cols: k, mass, cost: 0.0 }
}

/// Minimal-cost plan for an arbitrary ground cost between the atoms of two
/// views (zero-weight atoms skipped). Rows and columns of the returned plan
/// index the nonzero atoms in view order.
pub fn optimal_plan(
    a: AtomView<'_>,
    b: AtomView<'_>,
    cost: impl Fn(&Point, &Point) -> f64,
    monotone: bool,
) -> Result<TransportPlan> {
    check_pair(a, b)?;
    let ca = compact(a);
    let cb = compact(b);
    if ca.0.is_empty() || cb.0.is_empty() {
        return Err(Error::EmptyMeasure);
    }
    if same_atoms(&ca, &cb) {
        return Ok(diagonal_plan(&ca.1));
    }
    let matrix = CostMatrix::build(ca.0.len(), cb.0.len(), |i, j| cost(ca.0[i], cb.0[j]));
    let cells = if monotone {
        simplex::northwest_corner(&ca.1, &cb.1)
    } else {
        simplex::solve(&ca.1, &cb.1, &matrix)
    };
    Ok(TransportPlan::from_cells(ca.0.len(), cb.0.len(), &cells, &matrix))
}

/// Cost `|x−y|^ℓ`, with `0^0 = 0` so that identical points are free.
pub fn power_cost(ell: f64) -> impl Fn(&Point, &Point) -> f64 {
    move |x, y| {
        let d = x.distance(y);
        if d == 0.0 {
            0.0
        } else {
            d.powf(ell)
        }
    }
}

fn root(cost: f64, ell: f64) -> f64 {
    cost.max(0.0).powf(1.0 / ell.max(1.0))
}

fn check_ell(ell: f64) -> Result<()> {
    if !(ell.is_finite() && ell > 0.0) {
        return Err(Error::InvalidArgument(format!("order ℓ must be positive, got {ell}")));
    }
    Ok(())
}

/// `W_ℓ` between two views, using the monotone coupling in one dimension
/// when `ℓ ≥ 1`.
pub fn wasserstein_views(a: AtomView<'_>, b: AtomView<'_>, ell: f64) -> Result<(f64, TransportPlan)> {
    check_ell(ell)?;
    let monotone = ell >= 1.0 && a.dim() == Some(1);
    let plan = optimal_plan(a, b, power_cost(ell), monotone)?;
    Ok((root(plan.cost, ell), plan))
}

/// `W_ℓ(m1, m2)` and an optimal plan.
pub fn wasserstein(m1: &DiscreteMeasure, m2: &DiscreteMeasure, ell: f64) -> Result<(f64, TransportPlan)> {
    wasserstein_views(m1.view(), m2.view(), ell)
}

/// `W_ℓ` always through the general simplex, bypassing the 1D fast path.
pub fn wasserstein_general(m1: &DiscreteMeasure, m2: &DiscreteMeasure, ell: f64) -> Result<(f64, TransportPlan)> {
    check_ell(ell)?;
    let plan = optimal_plan(m1.view(), m2.view(), power_cost(ell), false)?;
    Ok((root(plan.cost, ell), plan))
}

/// `W_0(m1, m2)` with cost `1 ∧ |x−y|`.
pub fn wasserstein0(m1: &DiscreteMeasure, m2: &DiscreteMeasure) -> Result<f64> {
    let plan = optimal_plan(m1.view(), m2.view(), |x, y| x.distance(y).min(1.0), false)?;
    Ok(plan.cost)
}

/// `W_ℓ` between measures on R^d × R^d seen as points of R^{2d}.
pub fn product_wasserstein(p1: &ProductMeasure2d, p2: &ProductMeasure2d, ell: f64) -> Result<f64> {
    if p1.base_dim() != p2.base_dim() {
        return Err(Error::DimensionMismatch { expected: p1.base_dim(), found: p2.base_dim() });
    }
    Ok(wasserstein(p1.joint(), p2.joint(), ell)?.0)
}

/// `d_{V,β}` between two weight vectors over a common state list:
/// `Σ_x |θ(x) − σ(x)| (1 + β V(x))`.
pub fn d_v_beta_weights(theta: &[f64], sigma: &[f64], v: &[f64], beta: f64) -> Result<f64> {
    if theta.len() != v.len() || sigma.len() != v.len() {
        return Err(Error::SupportMismatch(format!(
            "weight vectors of length {} and {} over {} states",
            theta.len(),
            sigma.len(),
            v.len()
        )));
    }
    if !(beta > 0.0) {
        return Err(Error::InvalidArgument(format!("β must be positive, got {beta}")));
    }
    Ok(theta
        .iter()
        .zip(sigma)
        .zip(v)
        .map(|((t, s), vx)| (t - s).abs() * (1.0 + beta * vx))
        .sum())
}

/// Weights of `m` over `states`; errors if `m` charges a point outside.
pub fn weights_on_states(m: &DiscreteMeasure, states: &[Point]) -> Result<Vec<f64>> {
    let mut w = vec![0.0; states.len()];
    for (p, wp) in m.atoms() {
        let k = states
            .iter()
            .position(|s| s == p)
            .ok_or_else(|| Error::SupportMismatch(format!("atom {p} is not a state")))?;
        w[k] += wp;
    }
    Ok(w)
}

/// `d_{V,β}(θ, σ)` for measures supported on `states`, with `V` indexed
/// like `states`.
pub fn d_v_beta(theta: &DiscreteMeasure, sigma: &DiscreteMeasure, states: &[Point], v: &[f64], beta: f64) -> Result<f64> {
    if states.len() != v.len() {
        return Err(Error::SupportMismatch(format!("{} states but {} values of V", states.len(), v.len())));
    }
    let t = weights_on_states(theta, states)?;
    let s = weights_on_states(sigma, states)?;
    d_v_beta_weights(&t, &s, v, beta)
}
