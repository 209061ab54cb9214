//! Drift and minorization certificates, checked exhaustively over states.

use std::fmt;

use super::MarkovModel;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Variant {
    /// `R > 2K / (1 − γ)`.
    L2,
    /// `R > 4K / (1 − √γ)²`, which also certifies the `√V` quadruple.
    L2Prime,
}

/// A failed inequality with its witness.
#[derive(Clone, Debug, PartialEq)]
pub enum LyapunovViolation {
    Parameter(String),
    NegativeV { state: usize, value: f64 },
    Drift { state: usize, pv: f64, bound: f64 },
    SqrtDrift { state: usize, lhs: f64, rhs: f64 },
    Radius { r: f64, threshold: f64 },
    Minorization { x: usize, y: usize, overlap: f64, rho: f64 },
    InvariantMoment { mu_v: f64, bound: f64 },
}

impl fmt::Display for LyapunovViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Parameter(msg) => write!(f, "{msg}"),
            Self::NegativeV { state, value } => write!(f, "V({state}) = {value} < 0"),
            Self::Drift { state, pv, bound } => write!(f, "drift fails at state {state}: PV = {pv} > γV + K = {bound}"),
            Self::SqrtDrift { state, lhs, rhs } => {
                write!(f, "√V drift fails at state {state}: P√V = {lhs} > √γ√V + √K = {rhs}")
            }
            Self::Radius { r, threshold } => write!(f, "radius R = {r} does not exceed {threshold}"),
            Self::Minorization { x, y, overlap, rho } => {
                write!(f, "overlap of states ({x}, {y}) is {overlap} < ρ = {rho}")
            }
            Self::InvariantMoment { mu_v, bound } => write!(f, "μ(V) = {mu_v} exceeds K/(1−γ) = {bound}"),
        }
    }
}

/// Verified constants for `PV ≤ γV + K` and the minorization on
/// `{V(x) + V(y) ≤ R}`.
#[derive(Clone, Debug, PartialEq)]
pub struct LyapunovCertificate {
    pub v: Vec<f64>,
    pub gamma: f64,
    pub k: f64,
    pub r: f64,
    pub rho: f64,
    pub variant: Variant,
    pub ell: f64,
    /// `max_x |x|^ℓ / (1 + V(x))`.
    pub c_ell: f64,
}

impl LyapunovCertificate {
    /// Supremum of the admissible `β` for the `V` quadruple: `ρ / K`.
    pub fn beta_upper(&self) -> f64 {
        if self.k == 0.0 {
            f64::INFINITY
        } else {
            self.rho / self.k
        }
    }

    /// Supremum of the admissible `β` for the `√V` quadruple: `ρ / √K`.
    pub fn sqrt_beta_upper(&self) -> f64 {
        if self.k == 0.0 {
            f64::INFINITY
        } else {
            self.rho / self.k.sqrt()
        }
    }

    /// `√V` indexed like the states.
    pub fn sqrt_v(&self) -> Vec<f64> {
        self.v.iter().map(|v| v.sqrt()).collect()
    }
}

/// `Σ_z min(P(x,z), P(y,z))`.
pub fn overlap(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| p.min(*q)).sum()
}

/// Radius threshold of the variant.
pub fn radius_threshold(gamma: f64, k: f64, variant: Variant) -> f64 {
    match variant {
        Variant::L2 => 2.0 * k / (1.0 - gamma),
        Variant::L2Prime => 4.0 * k / (1.0 - gamma.sqrt()).powi(2),
    }
}

/// Check every condition and report all failures together.
#[allow(clippy::too_many_arguments)]
pub fn verify_lyapunov(
    model: &MarkovModel,
    v: &[f64],
    gamma: f64,
    k: f64,
    r: f64,
    rho: f64,
    variant: Variant,
    ell: f64,
) -> Result<LyapunovCertificate> {
    let mut bad = Vec::new();
    if v.len() != model.len() {
        return Err(Error::SupportMismatch(format!("{} values of V for {} states", v.len(), model.len())));
    }
    if !(gamma > 0.0 && gamma < 1.0) {
        bad.push(LyapunovViolation::Parameter(format!("γ = {gamma} outside (0, 1)")));
    }
    if !(k >= 0.0 && k.is_finite()) {
        bad.push(LyapunovViolation::Parameter(format!("K = {k} must be finite and ≥ 0")));
    }
    if !(r > 0.0 && r.is_finite()) {
        bad.push(LyapunovViolation::Parameter(format!("R = {r} must be positive")));
    }
    if !(rho > 0.0 && rho <= 1.0) {
        bad.push(LyapunovViolation::Parameter(format!("ρ = {rho} outside (0, 1]")));
    }
    if !(ell >= 0.0) {
        bad.push(LyapunovViolation::Parameter(format!("ℓ = {ell} must be ≥ 0")));
    }
    for (state, &value) in v.iter().enumerate() {
        if !(value >= 0.0 && value.is_finite()) {
            bad.push(LyapunovViolation::NegativeV { state, value });
        }
    }
    if !bad.is_empty() {
        return Err(Error::Lyapunov(bad));
    }

    let pv = model.apply(v);
    for (state, (&lhs, &vx)) in pv.iter().zip(v).enumerate() {
        let bound = gamma * vx + k;
        if lhs > bound * (1.0 + 1e-14) + 1e-15 {
            bad.push(LyapunovViolation::Drift { state, pv: lhs, bound });
        }
    }
    let threshold = radius_threshold(gamma, k, variant);
    if r <= threshold {
        bad.push(LyapunovViolation::Radius { r, threshold });
    }
    let rows = model.rows();
    for x in 0..model.len() {
        for y in x + 1..model.len() {
            if v[x] + v[y] <= r {
                let o = overlap(&rows[x], &rows[y]);
                if o < rho * (1.0 - 1e-14) {
                    bad.push(LyapunovViolation::Minorization { x, y, overlap: o, rho });
                }
            }
        }
    }
    let mu_v = model.expectation(v);
    let moment_bound = k / (1.0 - gamma);
    if mu_v > moment_bound * (1.0 + 1e-12) + 1e-15 {
        bad.push(LyapunovViolation::InvariantMoment { mu_v, bound: moment_bound });
    }
    let sv: Vec<f64> = v.iter().map(|x| x.sqrt()).collect();
    let psv = model.apply(&sv);
    for (state, (&lhs, &s)) in psv.iter().zip(&sv).enumerate() {
        let rhs = gamma.sqrt() * s + k.sqrt();
        if lhs > rhs * (1.0 + 1e-14) + 1e-15 {
            bad.push(LyapunovViolation::SqrtDrift { state, lhs, rhs });
        }
    }
    if !bad.is_empty() {
        return Err(Error::Lyapunov(bad));
    }

    let c_ell = model
        .states()
        .iter()
        .zip(v)
        .map(|(x, vx)| x.norm().powf(ell) / (1.0 + vx))
        .fold(0.0, f64::max);
    Ok(LyapunovCertificate { v: v.to_vec(), gamma, k, r, rho, variant, ell, c_ell })
}

/// `χ(ρ,β,γ,K,R) = (1 − ρ + βK) ∨ (2 + βγR + 2βK) / (2 + βR)`.
pub fn chi(rho: f64, beta: f64, gamma: f64, k: f64, r: f64) -> f64 {
    (1.0 - rho + beta * k).max((2.0 + beta * gamma * r + 2.0 * beta * k) / (2.0 + beta * r))
}

fn checked_chi(beta: f64, upper: f64, rho: f64, gamma: f64, k: f64, r: f64) -> Result<f64> {
    if !(beta > 0.0 && beta < upper) {
        return Err(Error::InvalidBeta { beta, upper });
    }
    let value = chi(rho, beta, gamma, k, r);
    if !(value > 0.0 && value < 1.0) {
        return Err(Error::Degenerate(format!("contraction factor {value} not in (0, 1)")));
    }
    Ok(value)
}

/// Contraction factor of `P` in `d_{V,β}`, for `β ∈ (0, ρ/K)`.
pub fn contraction_factor(cert: &LyapunovCertificate, beta: f64) -> Result<f64> {
    checked_chi(beta, cert.beta_upper(), cert.rho, cert.gamma, cert.k, cert.r)
}

/// Contraction factor for the `(√V, √γ, √K, √R)` quadruple, for
/// `β ∈ (0, ρ/√K)`. Needs the stronger radius condition.
pub fn sqrt_contraction_factor(cert: &LyapunovCertificate, beta: f64) -> Result<f64> {
    if cert.variant != Variant::L2Prime {
        return Err(Error::Unsupported("√V contraction needs the L2' radius condition".into()));
    }
    checked_chi(beta, cert.sqrt_beta_upper(), cert.rho, cert.gamma.sqrt(), cert.k.sqrt(), cert.r.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::Point;
    use crate::transport::d_v_beta_weights;
    use rand::Rng;

    fn two_state() -> MarkovModel {
        MarkovModel::new(
            vec![Point::scalar(0.0), Point::scalar(1.0)],
            vec![vec![0.7, 0.3], vec![0.2, 0.8]],
        )
        .unwrap()
    }

    fn min_overlap(model: &MarkovModel) -> f64 {
        let rows = model.rows();
        let mut best = 1.0f64;
        for x in 0..rows.len() {
            for y in x + 1..rows.len() {
                best = best.min(overlap(&rows[x], &rows[y]));
            }
        }
        best
    }

    #[test]
    fn zero_lyapunov_function_passes_drift() {
        let m = two_state();
        let rho = min_overlap(&m);
        let err = verify_lyapunov(&m, &[0.0, 0.0], 0.5, 1.0, 3.0, rho, Variant::L2, 2.0).unwrap_err();
        // R = 3 is below 2K/(1−γ) = 4, so only the radius condition fails
        let Error::Lyapunov(v) = err else { panic!("unexpected error") };
        assert!(v.iter().all(|w| matches!(w, LyapunovViolation::Radius { .. })), "{v:?}");
        assert!(verify_lyapunov(&m, &[0.0, 0.0], 0.5, 1.0, 4.5, rho, Variant::L2, 2.0).is_ok());
    }

    #[test]
    fn two_state_certificate() {
        let m = two_state();
        let pv = m.apply(&[0.0, 1.0]);
        assert!((pv[0] - 0.3).abs() < 1e-15 && (pv[1] - 0.8).abs() < 1e-15);
        let cert = verify_lyapunov(&m, &[0.0, 1.0], 0.85, 0.31, 5.0, 0.5, Variant::L2, 2.0).unwrap();
        assert_eq!(cert.c_ell, 0.5);

        let err = verify_lyapunov(&m, &[0.0, 1.0], 0.5, 0.2, 5.0, 0.5, Variant::L2, 2.0).unwrap_err();
        let Error::Lyapunov(v) = err else { panic!("unexpected error") };
        assert!(v.iter().any(|w| matches!(w, LyapunovViolation::Drift { state: 1, .. })));
    }

    #[test]
    fn l2_prime_threshold() {
        // 4K/(1−√γ)² with √0.85 evaluated as the root of x² = 0.85 refined by Newton
        let mut s = 0.92f64;
        for _ in 0..6 {
            s = 0.5 * (s + 0.85 / s);
        }
        let expected = 4.0 * 0.31 / ((1.0 - s) * (1.0 - s));
        let got = radius_threshold(0.85, 0.31, Variant::L2Prime);
        assert!((got - expected).abs() < 1e-10 * expected);
        assert!(got > 203.5 && got < 203.6, "{got}");
        let m = two_state();
        assert!(verify_lyapunov(&m, &[0.0, 1.0], 0.85, 0.31, 200.0, 0.5, Variant::L2Prime, 2.0).is_err());
        assert!(verify_lyapunov(&m, &[0.0, 1.0], 0.85, 0.31, 210.0, 0.5, Variant::L2Prime, 2.0).is_ok());
    }

    #[test]
    fn contraction_factor_formula() {
        let m = two_state();
        let cert = verify_lyapunov(&m, &[0.0, 1.0], 0.85, 0.31, 5.0, 0.5, Variant::L2, 2.0).unwrap();
        let beta: f64 = 0.1;
        let first = 1.0 - 0.5 + beta * 0.31;
        let second = (2.0 + beta * 0.85 * 5.0 + 2.0 * beta * 0.31) / (2.0 + beta * 5.0);
        assert_eq!(contraction_factor(&cert, beta).unwrap(), first.max(second));
        assert!(matches!(contraction_factor(&cert, 2.0), Err(Error::InvalidBeta { .. })));
        assert!(matches!(contraction_factor(&cert, 0.0), Err(Error::InvalidBeta { .. })));
        assert!(matches!(sqrt_contraction_factor(&cert, 0.1), Err(Error::Unsupported(_))));
    }

    #[test]
    fn contraction_with_zero_drift_constant() {
        let cert = LyapunovCertificate {
            v: vec![0.0],
            gamma: 0.5,
            k: 0.0,
            r: 3.0,
            rho: 1.0,
            variant: Variant::L2,
            ell: 2.0,
            c_ell: 0.0,
        };
        for beta in [0.1, 1.0, 10.0] {
            let c = contraction_factor(&cert, beta).unwrap();
            assert_eq!(c, (2.0 + beta * 0.5 * 3.0) / (2.0 + beta * 3.0));
        }
    }

    #[test]
    fn empirical_contraction_two_state() {
        let m = two_state();
        let cert = verify_lyapunov(&m, &[0.0, 1.0], 0.85, 0.31, 5.0, 0.5, Variant::L2, 2.0).unwrap();
        let mut rng = crate::rng::stream(4, 0);
        for beta in [0.1, 0.8, 1.5] {
            let chi = contraction_factor(&cert, beta).unwrap();
            for _ in 0..20 {
                let a: f64 = rng.random();
                let mut sigma = vec![a, 1.0 - a];
                let d0 = d_v_beta_weights(&sigma, m.invariant(), &cert.v, beta).unwrap();
                for n in 1..=30 {
                    sigma = m.push(&sigma);
                    let dn = d_v_beta_weights(&sigma, m.invariant(), &cert.v, beta).unwrap();
                    assert!(dn <= chi.powi(n) * d0 * (1.0 + 1e-12) + 1e-15);
                }
            }
        }
    }
}
