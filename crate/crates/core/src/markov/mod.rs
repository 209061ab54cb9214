//! Finite-state Markov kernels embedded in R^d.
//!
//! States are stored in canonical (lexicographic) order and the kernel is
//! permuted to match, so state indices agree with the atom order of every
//! measure built on the state space.

mod io;
mod lyapunov;
mod poisson;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::measures::{DiscreteMeasure, Point};
use crate::rng::{cumulative, draw_index, Stream};

pub use lyapunov::{
    contraction_factor, sqrt_contraction_factor, verify_lyapunov, LyapunovCertificate, LyapunovViolation,
    Variant,
};
pub use poisson::{asymptotic_variance_markov, solve_poisson_direct, solve_poisson_neumann, PoissonSolution, MAX_NEUMANN_TERMS};

/// Row sums must be within this distance of 1.
pub const ROW_SUM_TOL: f64 = 1e-12;
/// Componentwise tolerance for `μP = μ`.
pub const INVARIANCE_TOL: f64 = 1e-10;
/// Eigenvalues with modulus above `1 − SPECTRAL_TOL` count as unit.
pub const SPECTRAL_TOL: f64 = 1e-9;

/// Kernel `P` on a finite list of states together with its invariant law.
#[derive(Clone, Debug)]
pub struct MarkovModel {
    states: Vec<Point>,
    rows: Vec<Vec<f64>>,
    cdf: Vec<Vec<f64>>,
    mu: Vec<f64>,
}

impl MarkovModel {
    /// Validates `P`, reorders states canonically and solves for `μ`.
    pub fn new(states: Vec<Point>, p: Vec<Vec<f64>>) -> Result<Self> {
        let k = states.len();
        if k == 0 {
            return Err(Error::EmptyMeasure);
        }
        let dim = states[0].dim();
        for s in &states {
            if s.dim() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: s.dim() });
            }
        }
        if p.len() != k {
            return Err(Error::InvalidArgument(format!("{k} states but {} kernel rows", p.len())));
        }
        for (i, row) in p.iter().enumerate() {
            if row.len() != k {
                return Err(Error::InvalidArgument(format!("row {i} has {} entries, expected {k}", row.len())));
            }
            if let Some(x) = row.iter().find(|x| !(x.is_finite() && **x >= 0.0 && **x <= 1.0)) {
                return Err(Error::InvalidArgument(format!("row {i} has entry {x} outside [0, 1]")));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > ROW_SUM_TOL {
                return Err(Error::InvalidArgument(format!("row {i} sums to {sum}")));
            }
        }
        let mut order: Vec<usize> = (0..k).collect();
        order.sort_by(|&a, &b| states[a].cmp(&states[b]));
        if order.windows(2).any(|w| states[w[0]] == states[w[1]]) {
            return Err(Error::InvalidArgument("duplicate states".into()));
        }
        let sorted_states: Vec<Point> = order.iter().map(|&i| states[i].clone()).collect();
        let rows: Vec<Vec<f64>> = order.iter().map(|&i| order.iter().map(|&j| p[i][j]).collect()).collect();
        let mu = invariant_measure(&rows)?;
        let cdf = rows.iter().map(|r| cumulative(r)).collect();
        let model = MarkovModel { states: sorted_states, rows, cdf, mu };
        let pushed = model.push(&model.mu);
        if let Some((i, _)) = pushed.iter().zip(&model.mu).enumerate().find(|(_, (a, b))| (*a - *b).abs() > INVARIANCE_TOL) {
            return Err(Error::NotErgodic(format!("invariant measure check failed at state {i}")));
        }
        Ok(model)
    }

    /// Kernel whose rows all equal `mu`: an i.i.d. sequence seen as a chain.
    pub fn iid(mu: &DiscreteMeasure) -> Result<Self> {
        let row = mu.weights().to_vec();
        Self::new(mu.points().to_vec(), vec![row; mu.len()])
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.states[0].dim()
    }

    pub fn states(&self) -> &[Point] {
        &self.states
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    /// Invariant weights indexed like `states`.
    pub fn invariant(&self) -> &[f64] {
        &self.mu
    }

    pub fn invariant_measure(&self) -> DiscreteMeasure {
        DiscreteMeasure::on_support(&self.states, &self.mu).expect("invariant weights form a probability vector")
    }

    pub fn index_of(&self, p: &Point) -> Option<usize> {
        self.states.binary_search(p).ok()
    }

    /// `(Pf)(x)` for a state-indexed `f`.
    pub fn apply(&self, f: &[f64]) -> Vec<f64> {
        self.rows.iter().map(|r| r.iter().zip(f).map(|(p, v)| p * v).sum()).collect()
    }

    /// `νP` for a state-indexed weight vector `ν`.
    pub fn push(&self, nu: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.len()];
        for (row, w) in self.rows.iter().zip(nu) {
            if *w == 0.0 {
                continue;
            }
            for (o, p) in out.iter_mut().zip(row) {
                *o += w * p;
            }
        }
        out
    }

    /// `μ(f)`.
    pub fn expectation(&self, f: &[f64]) -> f64 {
        self.mu.iter().zip(f).map(|(m, v)| m * v).sum()
    }

    /// Weights of `m` over the states.
    pub fn weights_of(&self, m: &DiscreteMeasure) -> Result<Vec<f64>> {
        let mut w = vec![0.0; self.len()];
        for (p, wp) in m.atoms() {
            let i = self
                .index_of(p)
                .ok_or_else(|| Error::SupportMismatch(format!("atom {p} is not a state of the chain")))?;
            w[i] = wp;
        }
        Ok(w)
    }

    /// State indices of a path `X_1..X_n` with `X_1 ~ nu1`.
    pub fn sample_indices(&self, nu1_cdf: &[f64], n: usize, rng: &mut Stream) -> Vec<usize> {
        let mut path = Vec::with_capacity(n);
        if n == 0 {
            return path;
        }
        let mut x = draw_index(rng, nu1_cdf);
        path.push(x);
        for _ in 1..n {
            x = draw_index(rng, &self.cdf[x]);
            path.push(x);
        }
        path
    }

    /// A path of length `n` started from `nu1`.
    pub fn sample_chain(&self, nu1: &DiscreteMeasure, n: usize, rng: &mut Stream) -> Result<Vec<Point>> {
        let cdf = cumulative(&self.weights_of(nu1)?);
        Ok(self.sample_indices(&cdf, n, rng).into_iter().map(|i| self.states[i].clone()).collect())
    }

    pub fn to_text(&self) -> String {
        io::write_model(self)
    }

    pub fn from_text(s: &str) -> Result<Self> {
        io::parse_model(s)
    }
}

/// Unique invariant probability vector of a row-stochastic matrix.
///
/// One balance equation of `μ(P − I) = 0` is replaced by `Σμ = 1`. More
/// than one eigenvalue on the unit circle means the invariant law is not
/// unique or the chain is periodic, and is rejected.
pub fn invariant_measure(rows: &[Vec<f64>]) -> Result<Vec<f64>> {
    let k = rows.len();
    if k == 0 {
        return Err(Error::EmptyMeasure);
    }
    if k == 1 {
        return Ok(vec![1.0]);
    }
    let p = DMatrix::from_fn(k, k, |i, j| rows[i][j]);
    let unit = p
        .complex_eigenvalues()
        .iter()
        .filter(|z| z.norm() >= 1.0 - SPECTRAL_TOL)
        .count();
    if unit > 1 {
        return Err(Error::NotErgodic(format!("{unit} eigenvalues of modulus 1")));
    }
    let mut a = p.transpose() - DMatrix::identity(k, k);
    for j in 0..k {
        a[(k - 1, j)] = 1.0;
    }
    let mut b = DVector::zeros(k);
    b[k - 1] = 1.0;
    let sol = a
        .lu()
        .solve(&b)
        .ok_or_else(|| Error::NotErgodic("balance equations are singular".into()))?;
    if let Some(x) = sol.iter().find(|x| **x < -1e-10 || !x.is_finite()) {
        return Err(Error::NotErgodic(format!("invariant solution has entry {x}")));
    }
    let mut mu: Vec<f64> = sol.iter().map(|x| x.max(0.0)).collect();
    let total: f64 = mu.iter().sum();
    mu.iter_mut().for_each(|x| *x /= total);
    Ok(mu)
}
