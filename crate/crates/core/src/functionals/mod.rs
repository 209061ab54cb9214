//! Functionals of probability measures and their linear functional
//! derivatives.
//!
//! Three shapes are supported: linear `∫f dm`, U-statistics
//! `∫φ dm^{⊗n}` with a symmetric kernel, and composites `g(∫f dm)`. The
//! derivative of a U-statistic is anchored so that `δU/δm(m, 0) = 0`:
//!
//! `δU/δm(m, x) = n ∫ (φ(x, x_2..x_n) − φ(0, x_2..x_n)) m(dx_2)..m(dx_n)`.
//!
//! Linear entries return the raw `f` and composites `g'(∫f dm) f(x)`.
//! Downstream variance formulas only see centered derivatives, so the
//! choice of additive constant does not matter.

mod catalog;
pub mod quadrature;

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};

use crate::error::{Error, Result};
use crate::measures::{AtomView, DiscreteMeasure, Point};

pub use catalog::{catalog_ids, lookup};

/// Largest number of kernel terms evaluated for one U-statistic value.
pub const MAX_KERNEL_TERMS: f64 = 1e8;

pub type PointFn = Arc<dyn Fn(&Point) -> f64 + Send + Sync>;
pub type KernelFn = Arc<dyn Fn(&[&Point]) -> f64 + Send + Sync>;
pub type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Regularity constants of a catalog functional.
///
/// Bounds hold for measures whose mean has norm at most `mean_bound`:
/// growth `|δU/δm(m,x)| ≤ growth_const (1 + |x|^{ℓ/2})`, the single-integral
/// modulus with `holder_const`, and the two-term split modulus with
/// `split_const`.
#[derive(Clone, Debug, PartialEq)]
pub struct RegularityCertificate {
    pub ell: f64,
    pub radius: f64,
    pub alpha: f64,
    pub growth_const: f64,
    pub holder_const: f64,
    pub split_const: f64,
    pub mean_bound: f64,
}

impl RegularityCertificate {
    pub fn new(ell: f64, alpha: f64, growth_const: f64, holder_const: f64, split_const: f64) -> Result<Self> {
        let cert = RegularityCertificate {
            ell,
            radius: f64::INFINITY,
            alpha,
            growth_const,
            holder_const,
            split_const,
            mean_bound: 2.0,
        };
        cert.validate()?;
        Ok(cert)
    }

    pub fn with_radius(mut self, radius: f64) -> Result<Self> {
        self.radius = radius;
        self.validate()?;
        Ok(self)
    }

    fn validate(&self) -> Result<()> {
        if !(self.ell >= 0.0 && self.ell.is_finite()) {
            return Err(Error::InvalidArgument(format!("ℓ must be finite and ≥ 0, got {}", self.ell)));
        }
        if !(self.radius > 0.0) {
            return Err(Error::InvalidArgument(format!("radius must be positive, got {}", self.radius)));
        }
        if !(self.alpha > 0.5 && self.alpha <= 1.0) {
            return Err(Error::InvalidArgument(format!("α must lie in (1/2, 1], got {}", self.alpha)));
        }
        if !(self.growth_const > 0.0) || self.holder_const < 0.0 || self.split_const < 0.0 {
            return Err(Error::InvalidArgument("regularity constants must be nonnegative".into()));
        }
        Ok(())
    }
}

#[derive(Clone)]
pub enum Kind {
    Linear { f: PointFn },
    UStatistic { n: usize, phi: KernelFn },
    Composite { g: RealFn, g_prime: RealFn, f: PointFn },
}

impl fmt::Debug for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Kind::Linear { .. } => write!(f, "Linear"),
            Kind::UStatistic { n, .. } => write!(f, "UStatistic(n={n})"),
            Kind::Composite { .. } => write!(f, "Composite"),
        }
    }
}

/// A functional with evaluator, derivative and regularity certificate.
#[derive(Clone, Debug)]
pub struct Functional {
    id: String,
    kind: Kind,
    certificate: RegularityCertificate,
    derivative_offset: f64,
}

fn probe_points(rng: &mut rand_chacha::ChaCha8Rng, dim: usize, count: usize) -> Vec<Point> {
    (0..count)
        .map(|_| Point::new((0..dim).map(|_| rng.random_range(-3.0..3.0)).collect()).unwrap())
        .collect()
}

impl Functional {
    pub fn linear(id: &str, f: PointFn, certificate: RegularityCertificate) -> Self {
        Functional { id: id.into(), kind: Kind::Linear { f }, certificate, derivative_offset: 0.0 }
    }

    /// Registers a U-statistic after spot-checking the kernel's symmetry on
    /// random arguments in dimensions 1 and 2.
    pub fn ustatistic(id: &str, n: usize, phi: KernelFn, certificate: RegularityCertificate) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidArgument(format!("U-statistic order must be ≥ 2, got {n}")));
        }
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x5eed);
        for dim in [1, 2] {
            for _ in 0..20 {
                let pts = probe_points(&mut rng, dim, n);
                let base: Vec<&Point> = pts.iter().collect();
                let reference = phi(&base);
                for a in 0..n {
                    for b in a + 1..n {
                        let mut swapped = base.clone();
                        swapped.swap(a, b);
                        let value = phi(&swapped);
                        if (value - reference).abs() > 1e-12 * (1.0 + reference.abs()) {
                            return Err(Error::InvalidArgument(format!(
                                "kernel of `{id}` is not symmetric: {reference} vs {value}"
                            )));
                        }
                    }
                }
            }
        }
        Ok(Functional { id: id.into(), kind: Kind::UStatistic { n, phi }, certificate, derivative_offset: 0.0 })
    }

    /// Registers `g(∫f dm)` after checking `g'` against central differences.
    pub fn composite(id: &str, g: RealFn, g_prime: RealFn, f: PointFn, certificate: RegularityCertificate) -> Result<Self> {
        let h = 1e-5;
        for k in 0..=24 {
            let t = -3.0 + 0.25 * k as f64;
            let fd = (g(t + h) - g(t - h)) / (2.0 * h);
            let exact = g_prime(t);
            if (fd - exact).abs() > 1e-5 * (1.0 + exact.abs()) {
                return Err(Error::InvalidArgument(format!(
                    "derivative of `{id}` disagrees with finite differences at t={t}: {exact} vs {fd}"
                )));
            }
        }
        Ok(Functional { id: id.into(), kind: Kind::Composite { g, g_prime, f }, certificate, derivative_offset: 0.0 })
    }

    /// Same functional with `c` added to its derivative. Any constant is a
    /// valid choice of derivative; this exposes that freedom for testing.
    pub fn with_derivative_offset(mut self, c: f64) -> Self {
        self.derivative_offset = c;
        self
    }

    /// Replace the derivative-domain radius.
    pub fn with_radius(mut self, radius: f64) -> Result<Self> {
        self.certificate = self.certificate.with_radius(radius)?;
        Ok(self)
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn kind(&self) -> &Kind {
        &self.kind
    }

    pub fn certificate(&self) -> &RegularityCertificate {
        &self.certificate
    }

    pub fn is_linear(&self) -> bool {
        matches!(self.kind, Kind::Linear { .. })
    }

    /// Number of kernel evaluations for one value on `k` atoms.
    fn check_cost(k: usize, power: usize) -> Result<()> {
        let terms = (k as f64).powi(power as i32);
        if terms > MAX_KERNEL_TERMS {
            return Err(Error::CostLimit { terms, limit: MAX_KERNEL_TERMS });
        }
        Ok(())
    }

    /// `U(m)` for a measure given as a view (zero weights ignored).
    pub fn evaluate_view(&self, m: AtomView<'_>) -> Result<f64> {
        match &self.kind {
            Kind::Linear { f } => Ok(m.integrate(|x| f(x))),
            Kind::Composite { g, f, .. } => Ok(g(m.integrate(|x| f(x)))),
            Kind::UStatistic { n, phi } => {
                let atoms: Vec<(&Point, f64)> = m.iter().collect();
                Self::check_cost(atoms.len(), *n)?;
                Ok(tuple_sum(&atoms, *n, None, phi))
            }
        }
    }

    pub fn evaluate(&self, m: &DiscreteMeasure) -> Result<f64> {
        self.evaluate_view(m.view())
    }

    /// `δU/δm(m, x)` for every `x` in `xs`.
    pub fn derivative_many(&self, m: AtomView<'_>, xs: &[&Point]) -> Result<Vec<f64>> {
        let c = self.derivative_offset;
        match &self.kind {
            Kind::Linear { f } => Ok(xs.iter().map(|x| f(x) + c).collect()),
            Kind::Composite { g_prime, f, .. } => {
                let slope = g_prime(m.integrate(|x| f(x)));
                Ok(xs.iter().map(|x| slope * f(x) + c).collect())
            }
            Kind::UStatistic { n, phi } => {
                let atoms: Vec<(&Point, f64)> = m.iter().collect();
                Self::check_cost(atoms.len(), n - 1)?;
                let dim = xs.first().map(|x| x.dim()).or(m.dim()).unwrap_or(1);
                let origin = Point::origin(dim);
                let anchor = tuple_sum(&atoms, n - 1, Some(&origin), phi);
                Ok(xs
                    .iter()
                    .map(|x| *n as f64 * (tuple_sum(&atoms, n - 1, Some(x), phi) - anchor) + c)
                    .collect())
            }
        }
    }

    pub fn derivative_view(&self, m: AtomView<'_>, x: &Point) -> Result<f64> {
        Ok(self.derivative_many(m, &[x])?[0])
    }

    pub fn derivative(&self, m: &DiscreteMeasure, x: &Point) -> Result<f64> {
        self.derivative_view(m.view(), x)
    }
}

/// `Σ w_{i_1}..w_{i_p} φ(lead, x_{i_1}, .., x_{i_p})` over all p-tuples of
/// atoms, with `lead` omitted when `None`.
fn tuple_sum(atoms: &[(&Point, f64)], p: usize, lead: Option<&Point>, phi: &KernelFn) -> f64 {
    let k = atoms.len();
    if k == 0 {
        return 0.0;
    }
    let offset = usize::from(lead.is_some());
    let mut args: Vec<&Point> = Vec::with_capacity(p + offset);
    if let Some(x) = lead {
        args.push(x);
    }
    args.extend(std::iter::repeat_n(atoms[0].0, p));
    let mut idx = vec![0usize; p];
    let mut total = 0.0;
    loop {
        let w: f64 = idx.iter().map(|&i| atoms[i].1).product();
        total += w * phi(&args);
        // odometer increment, last position fastest
        let mut pos = p;
        loop {
            if pos == 0 {
                return total;
            }
            pos -= 1;
            idx[pos] += 1;
            if idx[pos] < k {
                args[offset + pos] = atoms[idx[pos]].0;
                break;
            }
            idx[pos] = 0;
            args[offset + pos] = atoms[0].0;
        }
    }
}

/// Weights of `(1−s) m + s m'` on the union support.
fn union_support(m: &DiscreteMeasure, m2: &DiscreteMeasure) -> (Vec<Point>, Vec<f64>, Vec<f64>) {
    let mut points: Vec<Point> = m.points().iter().chain(m2.points()).cloned().collect();
    points.sort();
    points.dedup();
    let w1 = points.iter().map(|p| m.weight_of(p)).collect();
    let w2 = points.iter().map(|p| m2.weight_of(p)).collect();
    (points, w1, w2)
}

/// `|U(m') − U(m) − ∫_0^1 ∫ δU/δm((1−s)m + s m', y) (m' − m)(dy) ds|` with
/// the `s`-integral by Gauss–Legendre on `nodes` points.
pub fn finite_difference_identity_residual(
    u: &Functional,
    m: &DiscreteMeasure,
    m2: &DiscreteMeasure,
    nodes: usize,
) -> Result<f64> {
    if nodes < 1 {
        return Err(Error::InvalidArgument("quadrature needs at least one node".into()));
    }
    if m.dim() != m2.dim() {
        return Err(Error::DimensionMismatch { expected: m.dim(), found: m2.dim() });
    }
    let (points, w1, w2) = union_support(m, m2);
    let diff: Vec<f64> = w1.iter().zip(&w2).map(|(a, b)| b - a).collect();
    let refs: Vec<&Point> = points.iter().collect();
    let mut integral = 0.0;
    let mut mix = vec![0.0; points.len()];
    for (s, weight) in quadrature::gauss_legendre_01(nodes) {
        for (k, slot) in mix.iter_mut().enumerate() {
            *slot = (1.0 - s) * w1[k] + s * w2[k];
        }
        let d = u.derivative_many(AtomView::new(&points, &mix), &refs)?;
        integral += weight * d.iter().zip(&diff).map(|(a, b)| a * b).sum::<f64>();
    }
    Ok((u.evaluate(m2)? - u.evaluate(m)? - integral).abs())
}

/// Default probe grid: `count` points spread over `[-span, span]` along the
/// first axis.
pub fn probe_grid(dim: usize, count: usize, span: f64) -> Vec<Point> {
    (0..count)
        .map(|k| {
            let t = -span + 2.0 * span * k as f64 / (count.max(2) - 1) as f64;
            let mut c = vec![0.0; dim];
            c[0] = t;
            Point::new(c).unwrap()
        })
        .collect()
}

/// Single-integral modulus check. Returns
/// `lhs = max_x |δU(m2,x) − δU(m1,x)| / (1 + |x|^{ℓ/2})` over `probes` and
/// `rhs = C (∫ (1 + |y|^{ℓ/(2α)}) |m2 − m1|(dy))^α`.
pub fn holder_modulus_probe(u: &Functional, m1: &DiscreteMeasure, m2: &DiscreteMeasure, probes: &[Point]) -> Result<(f64, f64)> {
    let cert = u.certificate();
    let refs: Vec<&Point> = probes.iter().collect();
    let d1 = u.derivative_many(m1.view(), &refs)?;
    let d2 = u.derivative_many(m2.view(), &refs)?;
    let lhs = probes
        .iter()
        .zip(d1.iter().zip(&d2))
        .map(|(x, (a, b))| (b - a).abs() / (1.0 + x.norm().powf(cert.ell / 2.0)))
        .fold(0.0, f64::max);
    let tau = m2.minus(m1)?;
    let mass = tau.atoms().map(|(y, w)| w.abs() * (1.0 + y.norm().powf(cert.ell / (2.0 * cert.alpha)))).sum::<f64>();
    Ok((lhs, cert.holder_const * mass.powf(cert.alpha)))
}

/// Two-term split modulus check. Returns
/// `lhs = max_x |δU(m2,x) − δU(m1,x)| / B(x)` with
/// `B(x) = (1+|x|^ℓ) ‖m2−m1‖_0^α + (1+|x|^{ℓ(1−α)}) (∫|y|^ℓ |m2−m1|(dy))^α`,
/// and `rhs` the certificate constant. Probes with `B(x) = 0` are skipped.
pub fn split_modulus_probe(u: &Functional, m1: &DiscreteMeasure, m2: &DiscreteMeasure, probes: &[Point]) -> Result<(f64, f64)> {
    let cert = u.certificate();
    let (ell, alpha) = (cert.ell, cert.alpha);
    let refs: Vec<&Point> = probes.iter().collect();
    let d1 = u.derivative_many(m1.view(), &refs)?;
    let d2 = u.derivative_many(m2.view(), &refs)?;
    let tau = m2.minus(m1)?;
    let t0 = tau.total_variation().powf(alpha);
    let tl = tau.atoms().map(|(y, w)| w.abs() * y.norm().powf(ell)).sum::<f64>().powf(alpha);
    let mut lhs = 0.0f64;
    for (x, (a, b)) in probes.iter().zip(d1.iter().zip(&d2)) {
        let r = x.norm();
        let bound = (1.0 + r.powf(ell)) * t0 + (1.0 + r.powf(ell * (1.0 - alpha))) * tl;
        if bound > 0.0 {
            lhs = lhs.max((b - a).abs() / bound);
        }
    }
    Ok((lhs, cert.split_const))
}
