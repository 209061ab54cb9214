//! Sampling regimes for `X_1, X_2, ...`: independent with laws `ν_i`
//! (identical, cyclic, or perturbations of a limit `μ`), finite-state
//! Markov chains, and a Gaussian AR(1) recursion.
//!
//! Finite families share one canonical support holding every atom any `ν_i`
//! can charge; marginals are weight vectors over it and paths are sampled
//! as support indices by inverse CDF.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::markov::MarkovModel;
use crate::measures::{DiscreteMeasure, Point, ProductMeasure2d, SignedDiscreteMeasure};
use crate::rng::{cumulative, draw_index, Stream};

/// Mass of a perturbation must vanish to this tolerance.
const MASS_TOL: f64 = 1e-12;
/// Largest negative weight tolerated as rounding in perturbed marginals.
const WEIGHT_TOL: f64 = 1e-15;
/// Indices checked against the decay bound at construction.
const DECAY_PROBES: usize = 100;

#[derive(Clone, Debug)]
pub enum FamilyKind {
    Iid { mu: DiscreteMeasure },
    /// `ν_i = θ_{(i−1) mod m}`.
    Cyclic { thetas: Vec<DiscreteMeasure> },
    /// `ν_i = μ + i^{−α} τ` with `‖τ‖_ℓ ≤ c`.
    Decaying { mu: DiscreteMeasure, tau: SignedDiscreteMeasure, alpha: f64, c: f64 },
    /// `ν_i = μ + i^{−1/2} τ`, whose Cesàro bias is `σ = 2τ`.
    SqrtPerturbed { mu: DiscreteMeasure, tau: SignedDiscreteMeasure },
    /// Chain with kernel `model` started from `nu1` (weights over states).
    Markov { model: MarkovModel, nu1: Vec<f64> },
    /// `X_{n+1} = a X_n + ε_n`, `ε_n ~ N(0, σ²)`, stationary start.
    Ar1 { a: f64, sigma: f64 },
}

/// A sampling regime together with its moment order `ℓ`.
#[derive(Clone, Debug)]
pub struct SequenceFamily {
    kind: FamilyKind,
    ell: f64,
    support: Vec<Point>,
}

fn union_support<'a>(parts: impl Iterator<Item = &'a [Point]>) -> Vec<Point> {
    let mut pts: Vec<Point> = parts.flat_map(|p| p.iter().cloned()).collect();
    pts.sort();
    pts.dedup();
    pts
}

fn weights_on(support: &[Point], atoms: impl Iterator<Item = (Point, f64)>) -> Vec<f64> {
    let mut w = vec![0.0; support.len()];
    for (p, x) in atoms {
        let i = support.binary_search(&p).expect("support contains every atom");
        w[i] += x;
    }
    w
}

fn check_ell(ell: f64) -> Result<()> {
    if !(ell >= 0.0 && ell.is_finite()) {
        return Err(Error::InvalidArgument(format!("ℓ must be finite and ≥ 0, got {ell}")));
    }
    Ok(())
}

fn check_perturbation(mu: &DiscreteMeasure, tau: &SignedDiscreteMeasure) -> Result<()> {
    if tau.dim() != mu.dim() && !tau.is_empty() {
        return Err(Error::DimensionMismatch { expected: mu.dim(), found: tau.dim() });
    }
    let mass = tau.total_mass();
    if mass.abs() > MASS_TOL {
        return Err(Error::InvalidArgument(format!("perturbation must have total mass 0, got {mass}")));
    }
    // μ + tτ for t ∈ [0, 1] interpolates μ and μ + τ, so i = 1 is the worst case
    let worst = mu.to_signed().add(tau)?;
    if let Some((p, w)) = worst.atoms().find(|(_, w)| *w < -WEIGHT_TOL) {
        return Err(Error::InvalidArgument(format!("μ + τ has negative weight {w} at {p}")));
    }
    Ok(())
}

impl SequenceFamily {
    fn finite(kind: FamilyKind, ell: f64, support: Vec<Point>) -> Result<Self> {
        check_ell(ell)?;
        Ok(SequenceFamily { kind, ell, support })
    }

    pub fn iid(mu: DiscreteMeasure, ell: f64) -> Result<Self> {
        let support = mu.points().to_vec();
        Self::finite(FamilyKind::Iid { mu }, ell, support)
    }

    pub fn cyclic(thetas: Vec<DiscreteMeasure>, ell: f64) -> Result<Self> {
        let first = thetas.first().ok_or_else(|| Error::InvalidArgument("cyclic family needs at least one law".into()))?;
        for t in &thetas {
            if t.dim() != first.dim() {
                return Err(Error::DimensionMismatch { expected: first.dim(), found: t.dim() });
            }
        }
        let support = union_support(thetas.iter().map(|t| t.points()));
        Self::finite(FamilyKind::Cyclic { thetas }, ell, support)
    }

    /// Checks `α > 1/2`, `ν_i ≥ 0` for all `i`, and `‖ν_i − μ‖_ℓ ≤ c i^{−α}`
    /// on the first indices.
    pub fn decaying(mu: DiscreteMeasure, tau: SignedDiscreteMeasure, alpha: f64, c: f64, ell: f64) -> Result<Self> {
        check_ell(ell)?;
        if !(alpha > 0.5) {
            return Err(Error::InvalidArgument(format!("decay exponent must exceed 1/2, got {alpha}")));
        }
        check_perturbation(&mu, &tau)?;
        let support = union_support([mu.points(), tau.points()].into_iter());
        let fam = Self::finite(FamilyKind::Decaying { mu: mu.clone(), tau, alpha, c }, ell, support)?;
        for i in 1..=DECAY_PROBES {
            let gap = fam.marginal(i)?.minus(&mu)?.weighted_norm(ell);
            let bound = c / (i as f64).powf(alpha);
            if gap > bound * (1.0 + 1e-12) {
                return Err(Error::InvalidArgument(format!("‖ν_{i} − μ‖_ℓ = {gap} exceeds c/i^α = {bound}")));
            }
        }
        Ok(fam)
    }

    pub fn sqrt_perturbed(mu: DiscreteMeasure, tau: SignedDiscreteMeasure, ell: f64) -> Result<Self> {
        check_perturbation(&mu, &tau)?;
        let support = union_support([mu.points(), tau.points()].into_iter());
        Self::finite(FamilyKind::SqrtPerturbed { mu, tau }, ell, support)
    }

    pub fn markov(model: MarkovModel, nu1: &DiscreteMeasure, ell: f64) -> Result<Self> {
        let w = model.weights_of(nu1)?;
        let support = model.states().to_vec();
        Self::finite(FamilyKind::Markov { model, nu1: w }, ell, support)
    }

    /// Markov family started from the invariant law.
    pub fn stationary_markov(model: MarkovModel, ell: f64) -> Result<Self> {
        let nu1 = model.invariant_measure();
        Self::markov(model, &nu1, ell)
    }

    pub fn ar1(a: f64, sigma: f64, ell: f64) -> Result<Self> {
        check_ell(ell)?;
        if !(a.abs() < 1.0) {
            return Err(Error::InvalidArgument(format!("AR(1) coefficient must satisfy |a| < 1, got {a}")));
        }
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidArgument(format!("noise scale must be positive, got {sigma}")));
        }
        Ok(SequenceFamily { kind: FamilyKind::Ar1 { a, sigma }, ell, support: Vec::new() })
    }

    pub fn kind(&self) -> &FamilyKind {
        &self.kind
    }

    pub fn ell(&self) -> f64 {
        self.ell
    }

    pub fn is_markov(&self) -> bool {
        matches!(self.kind, FamilyKind::Markov { .. } | FamilyKind::Ar1 { .. })
    }

    pub fn is_finite(&self) -> bool {
        !matches!(self.kind, FamilyKind::Ar1 { .. })
    }

    pub fn dim(&self) -> usize {
        self.support.first().map(Point::dim).unwrap_or(1)
    }

    /// Canonical support shared by all marginals; empty for AR(1).
    pub fn support(&self) -> &[Point] {
        &self.support
    }

    fn unsupported(&self, what: &str) -> Error {
        Error::Unsupported(format!("{what} is not available for the AR(1) family"))
    }

    /// Law of `X_i` as weights over [`support`](Self::support), `i ≥ 1`.
    pub fn marginal_weights(&self, i: usize) -> Result<Vec<f64>> {
        if i == 0 {
            return Err(Error::InvalidArgument("indices start at 1".into()));
        }
        let s = &self.support;
        let w = match &self.kind {
            FamilyKind::Iid { mu } => mu.weights().to_vec(),
            FamilyKind::Cyclic { thetas } => {
                let t = &thetas[(i - 1) % thetas.len()];
                weights_on(s, t.atoms().map(|(p, w)| (p.clone(), w)))
            }
            FamilyKind::Decaying { mu, tau, alpha, .. } => perturbed(s, mu, tau, (i as f64).powf(-alpha)),
            FamilyKind::SqrtPerturbed { mu, tau } => perturbed(s, mu, tau, 1.0 / (i as f64).sqrt()),
            FamilyKind::Markov { model, nu1 } => {
                let mut w = nu1.clone();
                for _ in 1..i {
                    w = model.push(&w);
                }
                w
            }
            FamilyKind::Ar1 { .. } => return Err(self.unsupported("an exact marginal")),
        };
        Ok(w)
    }

    fn perturbation_weights(&self, mu: &DiscreteMeasure, tau: &SignedDiscreteMeasure) -> (Vec<f64>, Vec<f64>) {
        let base = weights_on(&self.support, mu.atoms().map(|(p, w)| (p.clone(), w)));
        let dir = weights_on(&self.support, tau.atoms().map(|(p, w)| (p.clone(), w)));
        (base, dir)
    }

    /// Law of `X_i`.
    pub fn marginal(&self, i: usize) -> Result<DiscreteMeasure> {
        let w = self.marginal_weights(i)?;
        DiscreteMeasure::on_support(&self.support, &w)
    }

    /// Weights of the first `n` marginals, computed incrementally.
    pub fn marginal_weight_table(&self, n: usize) -> Result<Vec<Vec<f64>>> {
        match &self.kind {
            FamilyKind::Markov { model, nu1 } => {
                let mut out = Vec::with_capacity(n);
                let mut w = nu1.clone();
                for i in 0..n {
                    if i > 0 {
                        w = model.push(&w);
                    }
                    out.push(w.clone());
                }
                Ok(out)
            }
            _ => (1..=n).map(|i| self.marginal_weights(i)).collect(),
        }
    }

    /// `ν̄_N = (1/N) Σ_{i≤N} ν_i` computed exactly.
    pub fn average_marginal(&self, n: usize) -> Result<DiscreteMeasure> {
        let w = self.average_weights(n)?;
        DiscreteMeasure::on_support(&self.support, &w)
    }

    fn average_weights(&self, n: usize) -> Result<Vec<f64>> {
        if n == 0 {
            return Err(Error::InvalidArgument("average over zero indices".into()));
        }
        let mut acc = vec![0.0; self.support.len()];
        for w in self.marginal_weight_table(n)? {
            acc.iter_mut().zip(&w).for_each(|(a, x)| *a += x);
        }
        acc.iter_mut().for_each(|a| *a /= n as f64);
        Ok(acc)
    }

    /// `√N (ν̄_N − μ)` for independent families.
    pub fn scaled_bias(&self, n: usize) -> Result<SignedDiscreteMeasure> {
        let (mu, _, _) = self.limit_data()?;
        let avg = self.average_marginal(n)?;
        Ok(avg.minus(&mu)?.scale((n as f64).sqrt()))
    }

    /// `(1/N) Σ_{i≤N} ν_i ⊗ ν_i` on the support grid.
    pub fn pair_average(&self, n: usize) -> Result<ProductMeasure2d> {
        let k = self.support.len();
        let mut grid = vec![0.0; k * k];
        for w in self.marginal_weight_table(n)? {
            for (a, wa) in w.iter().enumerate() {
                if *wa == 0.0 {
                    continue;
                }
                for (b, wb) in w.iter().enumerate() {
                    grid[a * k + b] += wa * wb;
                }
            }
        }
        let raw = grid
            .iter()
            .enumerate()
            .filter(|(_, w)| **w > 0.0)
            .map(|(ab, w)| ((self.support[ab / k].clone(), self.support[ab % k].clone()), *w / n as f64))
            .collect();
        ProductMeasure2d::from_pairs(raw)
    }

    /// `(μ, η, σ)` of the independent central limit theorem.
    pub fn limit_data(&self) -> Result<(DiscreteMeasure, ProductMeasure2d, SignedDiscreteMeasure)> {
        let zero = |d: usize| SignedDiscreteMeasure::zero(d);
        match &self.kind {
            FamilyKind::Iid { mu } | FamilyKind::Decaying { mu, .. } => {
                Ok((mu.clone(), ProductMeasure2d::product(mu, mu)?, zero(mu.dim())))
            }
            FamilyKind::Cyclic { thetas } => {
                let c = 1.0 / thetas.len() as f64;
                let parts: Vec<(f64, &DiscreteMeasure)> = thetas.iter().map(|t| (c, t)).collect();
                let mu = DiscreteMeasure::mixture(&parts)?;
                let eta = ProductMeasure2d::diagonal_mixture(&parts)?;
                let d = mu.dim();
                Ok((mu, eta, zero(d)))
            }
            FamilyKind::SqrtPerturbed { mu, tau } => {
                Ok((mu.clone(), ProductMeasure2d::product(mu, mu)?, tau.scale(2.0)))
            }
            FamilyKind::Markov { .. } | FamilyKind::Ar1 { .. } => {
                Err(Error::Unsupported("limit data belongs to independent families; use the chain's invariant law".into()))
            }
        }
    }

    /// The law `μ` that `μ_N` converges to.
    pub fn limit_measure(&self) -> Result<DiscreteMeasure> {
        match &self.kind {
            FamilyKind::Markov { model, .. } => Ok(model.invariant_measure()),
            FamilyKind::Ar1 { .. } => Err(self.unsupported("a discrete limit law")),
            _ => Ok(self.limit_data()?.0),
        }
    }

    /// Support indices of a path `X_1..X_n` (finite families only).
    pub fn sample_indices(&self, n: usize, rng: &mut Stream) -> Result<Vec<usize>> {
        let path = match &self.kind {
            FamilyKind::Iid { mu } => {
                let cdf = cumulative(mu.weights());
                (0..n).map(|_| draw_index(rng, &cdf)).collect()
            }
            FamilyKind::Cyclic { thetas } => {
                let cdfs: Vec<Vec<f64>> = thetas
                    .iter()
                    .map(|t| cumulative(&weights_on(&self.support, t.atoms().map(|(p, w)| (p.clone(), w)))))
                    .collect();
                (0..n).map(|i| draw_index(rng, &cdfs[i % cdfs.len()])).collect()
            }
            FamilyKind::Decaying { mu, tau, alpha, .. } => {
                let (base, dir) = self.perturbation_weights(mu, tau);
                (1..=n).map(|i| draw_perturbed(rng, &base, &dir, (i as f64).powf(-alpha))).collect()
            }
            FamilyKind::SqrtPerturbed { mu, tau } => {
                let (base, dir) = self.perturbation_weights(mu, tau);
                (1..=n).map(|i| draw_perturbed(rng, &base, &dir, 1.0 / (i as f64).sqrt())).collect()
            }
            FamilyKind::Markov { model, nu1 } => model.sample_indices(&cumulative(nu1), n, rng),
            FamilyKind::Ar1 { .. } => return Err(self.unsupported("index sampling")),
        };
        Ok(path)
    }

    /// A path `X_1..X_n`.
    pub fn sample_sequence(&self, n: usize, rng: &mut Stream) -> Result<Vec<Point>> {
        match &self.kind {
            FamilyKind::Ar1 { a, sigma } => Ok(sample_ar1(*a, *sigma, n, rng).into_iter().map(Point::scalar).collect()),
            _ => Ok(self.sample_indices(n, rng)?.into_iter().map(|i| self.support[i].clone()).collect()),
        }
    }

    /// `Σ_{i≤I} (1/i) E((|X_i|^ℓ − i^β) 1{|X_i|^ℓ > i^β})`, exact from the
    /// marginals. A truncated diagnostic of the tail condition.
    pub fn tx_condition_partial_sum(&self, ell: f64, beta: f64, i_max: usize) -> Result<f64> {
        if !(beta > 0.0 && beta < 1.0) {
            return Err(Error::InvalidArgument(format!("β must lie in (0, 1), got {beta}")));
        }
        if !self.is_finite() {
            return Err(self.unsupported("the tail condition"));
        }
        let powers: Vec<f64> = self.support.iter().map(|x| x.norm().powf(ell)).collect();
        let mut total = 0.0;
        for (i, w) in self.marginal_weight_table(i_max)?.iter().enumerate() {
            let i = (i + 1) as f64;
            let level = i.powf(beta);
            let excess: f64 = powers.iter().zip(w).filter(|(p, _)| **p > level).map(|(p, wx)| wx * (p - level)).sum();
            total += excess / i;
        }
        Ok(total)
    }

    /// `(1/N) Σ_{i≤N} E(|X_i|^ℓ 1{|X_i|^ℓ > N ε})`, exact from the marginals.
    pub fn lindeberg_partial(&self, ell: f64, n: usize, eps: f64) -> Result<f64> {
        if !self.is_finite() {
            return Err(self.unsupported("the Lindeberg sum"));
        }
        if n == 0 || !(eps > 0.0) {
            return Err(Error::InvalidArgument("need N ≥ 1 and ε > 0".into()));
        }
        let level = n as f64 * eps;
        let powers: Vec<f64> = self.support.iter().map(|x| x.norm().powf(ell)).collect();
        let mut total = 0.0;
        for w in self.marginal_weight_table(n)? {
            total += powers.iter().zip(&w).filter(|(p, _)| **p > level).map(|(p, wx)| wx * p).sum::<f64>();
        }
        Ok(total / n as f64)
    }
}

/// Inverse-CDF draw from the weights `base + coef·dir`, scanned in support
/// order without allocating.
fn draw_perturbed(rng: &mut Stream, base: &[f64], dir: &[f64], coef: f64) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (j, (b, d)) in base.iter().zip(dir).enumerate() {
        let w = (b + coef * d).max(0.0);
        if w > 0.0 {
            last_positive = j;
        }
        acc += w;
        if acc > u {
            return j;
        }
    }
    last_positive
}

fn perturbed(support: &[Point], mu: &DiscreteMeasure, tau: &SignedDiscreteMeasure, coef: f64) -> Vec<f64> {
    let mut w = weights_on(support, mu.atoms().map(|(p, w)| (p.clone(), w)));
    for (p, t) in tau.atoms() {
        let i = support.binary_search(p).expect("support contains every atom");
        w[i] += coef * t;
    }
    w.iter_mut().for_each(|x| {
        if *x < 0.0 {
            *x = 0.0;
        }
    });
    w
}

/// AR(1) path with `X_1` drawn from the stationary law `N(0, σ²/(1−a²))`.
pub fn sample_ar1(a: f64, sigma: f64, n: usize, rng: &mut Stream) -> Vec<f64> {
    let mut out = Vec::with_capacity(n);
    if n == 0 {
        return out;
    }
    let z: f64 = StandardNormal.sample(rng);
    let mut x = z * sigma / (1.0 - a * a).sqrt();
    out.push(x);
    for _ in 1..n {
        let e: f64 = StandardNormal.sample(rng);
        x = a * x + sigma * e;
        out.push(x);
    }
    out
}

/// Asymptotic variance of `√N` times the AR(1) sample mean:
/// `σ² / (1 − a)²`, from the Poisson solution `F(x) = x / (1 − a)`.
pub fn ar1_linear_variance(a: f64, sigma: f64) -> f64 {
    sigma * sigma / ((1.0 - a) * (1.0 - a))
}
