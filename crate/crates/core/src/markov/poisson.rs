//! Poisson equation `F − PF = f − μ(f)` on a finite state space.
//!
//! Solutions are unique up to an additive constant; the one returned here
//! satisfies `μ(F) = 0`. The asymptotic variance `μ(P(F²)) − μ((PF)²)` does
//! not depend on that choice.

use nalgebra::{DMatrix, DVector};

use super::{LyapunovCertificate, MarkovModel};
use crate::error::{Error, Result};
use crate::functionals::Functional;

/// Hard cap on the number of Neumann terms.
pub const MAX_NEUMANN_TERMS: usize = 1_000_000;
/// Relative tolerance for `μ(P(F²)) = μ(F²)`.
const INVARIANCE_REL_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct PoissonSolution {
    pub f: Vec<f64>,
    /// `F`, centered so that `μ(F) = 0`.
    pub big_f: Vec<f64>,
    pub pf: Vec<f64>,
    /// `max_x |F(x) − PF(x) − f(x) + μ(f)|`.
    pub residual: f64,
    /// `μ(P(F²)) − μ((PF)²)`.
    pub variance: f64,
    /// `μ(F²) − μ(P(F²))`, zero up to rounding for an invariant `μ`.
    pub invariance_gap: f64,
    /// Weighted norms of the Neumann terms `Pⁿf − μ(f)`; empty for the
    /// direct solver.
    pub term_norms: Vec<f64>,
}

fn finish(model: &MarkovModel, f: &[f64], mut big_f: Vec<f64>, term_norms: Vec<f64>) -> Result<PoissonSolution> {
    let shift = model.expectation(&big_f);
    big_f.iter_mut().for_each(|x| *x -= shift);
    let mean_f = model.expectation(f);
    let pf = model.apply(&big_f);
    let residual = big_f
        .iter()
        .zip(&pf)
        .zip(f)
        .map(|((a, b), c)| (a - b - c + mean_f).abs())
        .fold(0.0, f64::max);
    let f2: Vec<f64> = big_f.iter().map(|x| x * x).collect();
    let mu_pf2 = model.expectation(&model.apply(&f2));
    let mu_f2 = model.expectation(&f2);
    let pf_sq: Vec<f64> = pf.iter().map(|x| x * x).collect();
    let variance = mu_pf2 - model.expectation(&pf_sq);
    let invariance_gap = mu_f2 - mu_pf2;
    if invariance_gap.abs() > INVARIANCE_REL_TOL * (1.0 + mu_f2.abs()) {
        return Err(Error::NotErgodic(format!("μ(PF²) − μ(F²) = {} is not zero", -invariance_gap)));
    }
    Ok(PoissonSolution { f: f.to_vec(), big_f, pf, residual, variance, invariance_gap, term_norms })
}

fn check_len(model: &MarkovModel, f: &[f64]) -> Result<()> {
    if f.len() != model.len() {
        return Err(Error::SupportMismatch(format!("observable has {} values for {} states", f.len(), model.len())));
    }
    if let Some(x) = f.iter().find(|x| !x.is_finite()) {
        return Err(Error::NonFinite(format!("observable value {x}")));
    }
    Ok(())
}

/// Solves `(I − P + 1μᵀ) F = f − μ(f)`. The rank-one term pins `μ(F) = 0`
/// and makes the matrix invertible exactly when the invariant law is unique.
pub fn solve_poisson_direct(model: &MarkovModel, f: &[f64]) -> Result<PoissonSolution> {
    check_len(model, f)?;
    let k = model.len();
    let mu = model.invariant();
    let rows = model.rows();
    let a = DMatrix::from_fn(k, k, |i, j| f64::from(u8::from(i == j)) - rows[i][j] + mu[j]);
    let mean_f = model.expectation(f);
    let b = DVector::from_iterator(k, f.iter().map(|x| x - mean_f));
    let sol = a
        .lu()
        .solve(&b)
        .ok_or_else(|| Error::NotErgodic("augmented Poisson system is singular".into()))?;
    finish(model, f, sol.iter().copied().collect(), Vec::new())
}

/// `sup_x |g(x)| / (1 + √V(x))`.
fn sqrt_v_norm(g: &[f64], sqrt_v: &[f64]) -> f64 {
    g.iter().zip(sqrt_v).map(|(x, s)| x.abs() / (1.0 + s)).fold(0.0, f64::max)
}

/// Truncated series `F = Σ_n (Pⁿf − μ(f))`.
///
/// Term norms are measured in `‖·‖_{√V,1}` (the sup norm when no
/// certificate is given). The sum stops once the geometric tail estimate
/// `‖term_n‖ q / (1 − q)` falls below `tol`, with `q` the largest of the
/// last five consecutive norm ratios.
pub fn solve_poisson_neumann(
    model: &MarkovModel,
    cert: Option<&LyapunovCertificate>,
    f: &[f64],
    tol: f64,
) -> Result<PoissonSolution> {
    check_len(model, f)?;
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {tol}")));
    }
    let sqrt_v = match cert {
        Some(c) if c.v.len() == model.len() => c.sqrt_v(),
        Some(c) => {
            return Err(Error::SupportMismatch(format!("certificate has {} values for {} states", c.v.len(), model.len())))
        }
        None => vec![0.0; model.len()],
    };
    const WINDOW: usize = 5;
    let mean_f = model.expectation(f);
    let mut term: Vec<f64> = f.iter().map(|x| x - mean_f).collect();
    let mut sum = vec![0.0; model.len()];
    let mut norms: Vec<f64> = Vec::new();
    for _ in 0..MAX_NEUMANN_TERMS {
        let norm = sqrt_v_norm(&term, &sqrt_v);
        norms.push(norm);
        if norm == 0.0 {
            return finish(model, f, sum, norms);
        }
        sum.iter_mut().zip(&term).for_each(|(s, t)| *s += t);
        let n = norms.len();
        if n > WINDOW {
            let q = norms[n - WINDOW - 1..]
                .windows(2)
                .map(|w| if w[0] > 0.0 { w[1] / w[0] } else { 0.0 })
                .fold(0.0, f64::max);
            if q < 1.0 && norm * q / (1.0 - q) <= tol {
                return finish(model, f, sum, norms);
            }
        }
        term = model.apply(&term);
        // re-center against drift of μ(term) away from zero by rounding
        let drift = model.expectation(&term);
        term.iter_mut().for_each(|x| *x -= drift);
    }
    Err(Error::ConvergenceFailure { terms: MAX_NEUMANN_TERMS })
}

/// Asymptotic variance of `√N (U(μ_N) − U(μ))` along the chain: the Poisson
/// variance of `f = δU/δm(μ, ·)` on the states.
pub fn asymptotic_variance_markov(model: &MarkovModel, u: &Functional) -> Result<f64> {
    let mu = model.invariant_measure();
    let states: Vec<_> = model.states().iter().collect();
    let f = u.derivative_many(mu.view(), &states)?;
    Ok(solve_poisson_direct(model, &f)?.variance)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functionals::lookup;
    use crate::markov::{sqrt_contraction_factor, verify_lyapunov, Variant};
    use crate::measures::Point;

    fn two_state() -> MarkovModel {
        MarkovModel::new(
            vec![Point::scalar(0.0), Point::scalar(1.0)],
            vec![vec![0.7, 0.3], vec![0.2, 0.8]],
        )
        .unwrap()
    }

    /// `Var_μ(f) + 2 Σ_{k=1..lags} Cov_μ(f(X_0), f(X_k))` from matrix powers.
    fn covariance_series(model: &MarkovModel, f: &[f64], lags: usize) -> f64 {
        let mean = model.expectation(f);
        let c: Vec<f64> = f.iter().map(|x| x - mean).collect();
        let weighted: Vec<f64> = c.iter().zip(model.invariant()).map(|(a, m)| a * m).collect();
        let mut total: f64 = weighted.iter().zip(&c).map(|(a, b)| a * b).sum();
        let mut pk = c.clone();
        for _ in 0..lags {
            pk = model.apply(&pk);
            total += 2.0 * weighted.iter().zip(&pk).map(|(a, b)| a * b).sum::<f64>();
        }
        total
    }

    #[test]
    fn constant_observable() {
        let m = two_state();
        let s = solve_poisson_direct(&m, &[2.0, 2.0]).unwrap();
        assert_eq!(s.big_f, vec![0.0, 0.0]);
        assert_eq!(s.variance, 0.0);
        let n = solve_poisson_neumann(&m, None, &[2.0, 2.0], 1e-12).unwrap();
        assert_eq!(n.term_norms.len(), 1);
        assert_eq!(n.big_f, vec![0.0, 0.0]);
    }

    #[test]
    fn two_state_closed_form() {
        let m = two_state();
        let f = [0.0, 1.0];
        let s = solve_poisson_direct(&m, &f).unwrap();
        // (f − μ(f)) / (a + b) is already μ-centered
        let expected = [-0.6 / 0.5, 0.4 / 0.5];
        for (a, b) in s.big_f.iter().zip(expected) {
            assert!((a - b).abs() < 1e-14);
        }
        assert!(s.residual <= 1e-14);
        assert!((s.variance - covariance_series(&m, &f, 200)).abs() < 1e-8);
        // Var_μ(f) (2 − a − b) / (a + b) = 0.24 · 1.5 / 0.5
        assert!((s.variance - 0.72).abs() < 1e-13);
    }

    #[test]
    fn neumann_agrees_with_direct() {
        let m = two_state();
        let f = [0.0, 1.0];
        let d = solve_poisson_direct(&m, &f).unwrap();
        let cert = verify_lyapunov(&m, &[0.0, 1.0], 0.85, 0.31, 210.0, 0.5, Variant::L2Prime, 2.0).unwrap();
        let n = solve_poisson_neumann(&m, Some(&cert), &f, 1e-12).unwrap();
        for (a, b) in n.big_f.iter().zip(&d.big_f) {
            assert!((a - b).abs() < 1e-11);
        }
        // P has second eigenvalue 0.5, which sits below the certified rate
        let chi = sqrt_contraction_factor(&cert, 0.5).unwrap();
        let tail = &n.term_norms[n.term_norms.len() - 10..];
        for w in tail.windows(2) {
            assert!(w[1] / w[0] <= chi + 0.05);
        }
    }

    #[test]
    fn neumann_tolerance_sweep() {
        let m = two_state();
        let f = [0.3, -1.7];
        let reference = solve_poisson_direct(&m, &f).unwrap().variance;
        for tol in [1e-6, 1e-8, 1e-10, 1e-12] {
            let n = solve_poisson_neumann(&m, None, &f, tol).unwrap();
            assert!((n.variance - reference).abs() < 1e-5);
            let sup = n.big_f.iter().zip(&solve_poisson_direct(&m, &f).unwrap().big_f).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            assert!(sup <= 10.0 * tol);
        }
        assert!(solve_poisson_neumann(&m, None, &f, 0.0).is_err());
    }

    #[test]
    fn centering_constant_does_not_change_variance() {
        let m = two_state();
        let a = solve_poisson_direct(&m, &[0.0, 1.0]).unwrap();
        let shifted: Vec<f64> = a.big_f.iter().map(|x| x + 3.0).collect();
        let pf = m.apply(&shifted);
        let f2: Vec<f64> = shifted.iter().map(|x| x * x).collect();
        let pf2: Vec<f64> = pf.iter().map(|x| x * x).collect();
        let v = m.expectation(&m.apply(&f2)) - m.expectation(&pf2);
        assert!((v - a.variance).abs() < 1e-12);
    }

    #[test]
    fn iid_kernel_variance_is_plain_variance() {
        let mu = crate::measures::DiscreteMeasure::consolidate(vec![
            (Point::scalar(-1.0), 0.2),
            (Point::scalar(0.5), 0.5),
            (Point::scalar(2.0), 0.3),
        ])
        .unwrap();
        let m = MarkovModel::iid(&mu).unwrap();
        let u = lookup("ustat2:variance").unwrap();
        let v = asymptotic_variance_markov(&m, &u).unwrap();
        let d: Vec<f64> = mu.points().iter().map(|x| u.derivative(&mu, x).unwrap()).collect();
        let mean: f64 = d.iter().zip(mu.weights()).map(|(a, w)| a * w).sum();
        let var: f64 = d.iter().zip(mu.weights()).map(|(a, w)| w * (a - mean).powi(2)).sum();
        assert!((v - var).abs() < 1e-12);
        assert_eq!(asymptotic_variance_markov(&m, &lookup("linear:one").unwrap()).unwrap(), 0.0);
    }

    #[test]
    fn invariance_identities() {
        let m = two_state();
        let s = solve_poisson_direct(&m, &[1.5, -0.5]).unwrap();
        for g in [s.big_f.iter().map(|x| x * x).collect::<Vec<_>>(), s.pf.clone(), s.f.clone()] {
            assert!((m.expectation(&m.apply(&g)) - m.expectation(&g)).abs() <= 1e-12);
        }
        assert!(m.expectation(&s.big_f).abs() <= 1e-12);
        assert!(s.variance >= -1e-12);
    }
}
