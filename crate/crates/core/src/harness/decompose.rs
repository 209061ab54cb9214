//! Linearization diagnostics along one sample path.
//!
//! With interpolating measures `μ_N^{i,s}` stepping from the base law to
//! `μ_N` one sample at a time, `U(μ_N) − U(base)` splits into a
//! martingale-type linear term `Q_N` and a remainder `R_N`. Independent
//! paths start from `ν̄_N` and replace `ν_i` by `δ_{X_i}`; Markov paths start
//! from `μ` and replace a `1/N` share of `μ` by `δ_{X_i}`.

use crate::error::{Error, Result};
use crate::functionals::quadrature::gauss_legendre_01;
use crate::functionals::{Functional, Kind};
use crate::measures::{AtomView, DiscreteMeasure, Point};
use crate::sequences::SequenceFamily;
use crate::transport::{wasserstein_views, weights_on_states};

/// Quadrature nodes in `s` for non-polynomial derivatives.
const COMPOSITE_NODES: usize = 16;

#[derive(Clone, Debug, PartialEq)]
pub struct Decomposition {
    pub q: f64,
    /// `R_N` from the `s`-integral form when `I_N = N + 1`, otherwise from
    /// the difference `U(μ_N) − U(base) − Q_N`.
    pub r: f64,
    /// `U(μ_N) − U(base) − Q_N` as a cross-check on `r`.
    pub r_difference: f64,
    /// First index whose interpolating measures leave the ball `B(μ, r)`;
    /// `N + 1` when none does.
    pub stop_index: usize,
}

impl Decomposition {
    pub fn truncated(&self, n: usize) -> bool {
        self.stop_index <= n
    }
}

/// Precomputed per-family data reused across paths of the same length.
pub struct PathContext<'a> {
    u: &'a Functional,
    support: Vec<Point>,
    mu: Vec<f64>,
    /// `ν_i` weights (independent regime) or `None` for chains.
    marginals: Option<Vec<Vec<f64>>>,
    /// `Σ_{j ≥ i} ν_j`, index `i−1`, plus a trailing zero row.
    tails: Option<Vec<Vec<f64>>>,
    n: usize,
    nodes: Vec<(f64, f64)>,
}

impl<'a> PathContext<'a> {
    pub fn new(family: &SequenceFamily, u: &'a Functional, n: usize) -> Result<Self> {
        if !family.is_finite() {
            return Err(Error::Unsupported("decomposition needs a finite-support family".into()));
        }
        let support = family.support().to_vec();
        let mu = weights_on_states(&family.limit_measure()?, &support)?;
        let (marginals, tails) = if family.is_markov() {
            (None, None)
        } else {
            let table = family.marginal_weight_table(n)?;
            let k = support.len();
            let mut tails = vec![vec![0.0; k]; n + 1];
            for i in (0..n).rev() {
                let (head, rest) = tails.split_at_mut(i + 1);
                for ((t, next), w) in head[i].iter_mut().zip(&rest[0]).zip(&table[i]) {
                    *t = next + w;
                }
            }
            (Some(table), Some(tails))
        };
        let nodes = match u.kind() {
            Kind::Linear { .. } => Vec::new(),
            Kind::UStatistic { n, .. } => gauss_legendre_01(*n),
            Kind::Composite { .. } => gauss_legendre_01(COMPOSITE_NODES),
        };
        Ok(PathContext { u, support, mu, marginals, tails, n, nodes })
    }

    fn reference(&self, i: usize) -> &[f64] {
        match &self.marginals {
            Some(t) => &t[i - 1],
            None => &self.mu,
        }
    }

    /// Weights of `μ_N^{i,0}` given the counts of `X_1..X_{i−1}`.
    fn start_weights(&self, i: usize, counts: &[f64]) -> Vec<f64> {
        let n = self.n as f64;
        match &self.tails {
            Some(t) => counts.iter().zip(&t[i - 1]).map(|(c, tail)| (c + tail) / n).collect(),
            None => {
                let rest = 1.0 - (i - 1) as f64 / n;
                counts.iter().zip(&self.mu).map(|(c, m)| c / n + rest * m).collect()
            }
        }
    }

    fn derivative(&self, weights: &[f64]) -> Result<Vec<f64>> {
        let pts: Vec<&Point> = self.support.iter().collect();
        self.u.derivative_many(AtomView::new(&self.support, weights), &pts)
    }

    fn distance_to_mu(&self, weights: &[f64], ell: f64) -> Result<f64> {
        let a = AtomView::new(&self.support, weights);
        let b = AtomView::new(&self.support, &self.mu);
        Ok(wasserstein_views(a, b, ell)?.0)
    }

    fn stop_index(&self, path: &[usize]) -> Result<usize> {
        let cert = self.u.certificate();
        let n = self.n;
        if cert.radius.is_infinite() {
            return Ok(n + 1);
        }
        let k = self.support.len();
        let mut counts = vec![0.0; k];
        // W(μ_N^{0,1}, μ) with μ_N^{0,1} = μ_N^{1,0}
        let mut prev = self.distance_to_mu(&self.start_weights(1, &counts), cert.ell)?;
        for i in 1..=n {
            counts[path[i - 1]] += 1.0;
            let cur = self.distance_to_mu(&self.start_weights(i + 1, &counts), cert.ell)?;
            if prev.max(cur) >= cert.radius {
                return Ok(i);
            }
            prev = cur;
        }
        Ok(n + 1)
    }

    /// Decompose one path given as support indices.
    pub fn decompose(&self, path: &[usize]) -> Result<Decomposition> {
        let n = self.n;
        if path.len() != n {
            return Err(Error::InvalidArgument(format!("path has length {}, expected {n}", path.len())));
        }
        let k = self.support.len();
        let nf = n as f64;
        let stop = self.stop_index(path)?;

        let mut counts = vec![0.0; k];
        let mut q = 0.0;
        let mut r_int = 0.0;
        let mut frozen: Option<Vec<f64>> = None;
        for i in 1..=n {
            let x = path[i - 1];
            let reference = self.reference(i);
            let start = self.start_weights(i, &counts);
            // δ_{X_i} − ref_i on the support
            let mut step: Vec<f64> = reference.iter().map(|r| -r).collect();
            step[x] += 1.0;

            let d_start = self.derivative(&start)?;
            if i <= stop {
                if i == stop {
                    frozen = Some(d_start.clone());
                }
                q += dot(&d_start, &step);
            } else {
                q += dot(frozen.as_ref().expect("frozen once i passes I_N"), &step);
            }

            for (s, w) in &self.nodes {
                let ws: Vec<f64> = start.iter().zip(&step).map(|(a, b)| a + s * b / nf).collect();
                let d_s = self.derivative(&ws)?;
                let diff: Vec<f64> = d_s.iter().zip(&d_start).map(|(a, b)| a - b).collect();
                r_int += w * dot(&diff, &step);
            }
            counts[x] += 1.0;
        }
        q /= nf;
        r_int /= nf;

        let empirical = DiscreteMeasure::on_support(&self.support, &counts.iter().map(|c| c / nf).collect::<Vec<_>>())?;
        let base_w = self.start_weights(1, &vec![0.0; k]);
        let base = DiscreteMeasure::on_support(&self.support, &base_w)?;
        let total = self.u.evaluate(&empirical)? - self.u.evaluate(&base)?;
        let r_difference = total - q;
        let r = if stop > n { r_int } else { r_difference };
        Ok(Decomposition { q, r, r_difference, stop_index: stop })
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Median of `|√N R_N|` over paths.
pub fn median_abs_scaled(rs: &[f64], n: usize) -> f64 {
    let mut v: Vec<f64> = rs.iter().map(|r| (n as f64).sqrt() * r.abs()).collect();
    v.sort_by(f64::total_cmp);
    let m = v.len();
    if m == 0 {
        return f64::NAN;
    }
    if m % 2 == 1 {
        v[m / 2]
    } else {
        0.5 * (v[m / 2 - 1] + v[m / 2])
    }
}

/// Least-squares slope of `ln y` against `ln x`; `None` if any `y ≤ 0`.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.len() < 2 || ys.iter().any(|y| !(*y > 0.0)) {
        return None;
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let k = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / k;
    let my = ly.iter().sum::<f64>() / k;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    Some(sxy / sxx)
}
