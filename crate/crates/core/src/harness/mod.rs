//! Monte Carlo checks of both central limit theorems.
//!
//! [`predict`] computes the limiting Gaussian from exact finite sums,
//! [`run_experiment`] replicates `Z_N = √N (U(μ_N) − U(μ))` on disjoint
//! random streams and compares, and the optional decomposition trace records
//! how fast the linearization remainder `√N R_N` vanishes along a grid of
//! path lengths.

pub mod config;
pub mod decompose;
pub mod ks;
pub mod report;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use config::{ConfigDoc, ExperimentConfig};
pub use decompose::{log_log_slope, median_abs_scaled, Decomposition, PathContext};
pub use ks::ks_test;
pub use report::{parse_samples_csv, samples_csv, ReportDoc};

use crate::error::{Error, Result};
use crate::functionals::Functional;
use crate::markov::asymptotic_variance_markov;
use crate::measures::{DiscreteMeasure, Point};
use crate::rng::{stream, stream_id};
use crate::sequences::{ar1_linear_variance, sample_ar1, FamilyKind, SequenceFamily};
use crate::transport::weights_on_states;

/// Predicted variances at or below this are treated as a point mass.
pub const DEGENERATE_VARIANCE: f64 = 1e-12;
/// Paths per grid point in the decomposition trace.
pub const DECOMPOSITION_REPS: usize = 200;
/// Relative slack for the variance inequality and sign checks.
const VARIANCE_SLACK: f64 = 1e-12;

const MAIN_TAG: u32 = 0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PredictionSource {
    IndependentTheorem,
    MarkovTheorem,
}

/// Mean and variance of the Gaussian limit of `Z_N`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub mean: f64,
    pub variance: f64,
    /// `Var_μ(δU/δm(μ, ·))`, the variance under i.i.d. sampling from `μ`.
    pub iid_variance: f64,
    pub source: PredictionSource,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KsSummary {
    pub statistic: f64,
    pub pvalue: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecompositionPoint {
    pub n: usize,
    pub median_abs_scaled_remainder: f64,
    /// Paths whose stopping index fell inside `1..=N`.
    pub truncated: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecompositionTrace {
    pub reps: usize,
    pub points: Vec<DecompositionPoint>,
    /// Log-log slope of the medians against `N`; absent when a median is 0.
    pub slope: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CltReport {
    pub family: String,
    pub functional: String,
    pub n: usize,
    pub m: usize,
    pub master_seed: u64,
    pub ell: f64,
    /// `U(μ)`.
    pub u_limit: f64,
    pub samples: Vec<f64>,
    pub predicted: Prediction,
    pub empirical_mean: f64,
    pub empirical_variance: f64,
    pub degenerate: bool,
    pub ks: Option<KsSummary>,
    pub decomposition: Option<DecompositionTrace>,
}

/// Sample mean and unbiased variance, summed in index order.
pub fn moments(xs: &[f64]) -> (f64, f64) {
    let m = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / m;
    let var = if xs.len() > 1 { xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m - 1.0) } else { 0.0 };
    (mean, var)
}

pub fn family_label(family: &SequenceFamily) -> &'static str {
    match family.kind() {
        FamilyKind::Iid { .. } => "iid",
        FamilyKind::Cyclic { .. } => "cyclic",
        FamilyKind::Decaying { .. } => "decaying",
        FamilyKind::SqrtPerturbed { .. } => "sqrt_perturbed",
        FamilyKind::Markov { .. } => "markov",
        FamilyKind::Ar1 { .. } => "ar1",
    }
}

fn require_ar1_observable(u: &Functional) -> Result<()> {
    if u.id() != "linear:x1" {
        return Err(Error::Unsupported(format!("the AR(1) family supports only `linear:x1`, not `{}`", u.id())));
    }
    Ok(())
}

fn mean_var(d: &[f64], w: &[f64]) -> (f64, f64) {
    let mean: f64 = d.iter().zip(w).map(|(a, b)| a * b).sum();
    let second: f64 = d.iter().zip(w).map(|(a, b)| a * a * b).sum();
    (mean, second - mean * mean)
}

/// Limit law of `Z_N` from the matching theorem, by exact finite sums.
pub fn predict(family: &SequenceFamily, u: &Functional) -> Result<Prediction> {
    match family.kind() {
        FamilyKind::Markov { model, .. } => {
            let mu = model.invariant_measure();
            let d = u.derivative_many(mu.view(), &model.states().iter().collect::<Vec<_>>())?;
            let (_, iid_variance) = mean_var(&d, model.invariant());
            let variance = asymptotic_variance_markov(model, u)?;
            Ok(Prediction { mean: 0.0, variance, iid_variance: iid_variance.max(0.0), source: PredictionSource::MarkovTheorem })
        }
        FamilyKind::Ar1 { a, sigma } => {
            require_ar1_observable(u)?;
            Ok(Prediction {
                mean: 0.0,
                variance: ar1_linear_variance(*a, *sigma),
                iid_variance: sigma * sigma / (1.0 - a * a),
                source: PredictionSource::MarkovTheorem,
            })
        }
        _ => {
            let (mu, eta, sigma) = family.limit_data()?;
            let support = family.support();
            let d = u.derivative_many(mu.view(), &support.iter().collect::<Vec<_>>())?;
            let at = |p: &Point| d[support.binary_search(p).expect("limit data lives on the support")];
            let w = weights_on_states(&mu, support)?;
            let (_, iid_variance) = mean_var(&d, &w);
            // adding 0.0 turns the empty sum's -0.0 into 0.0
            let mean = sigma.integrate(|x| at(x)) + 0.0;
            let second: f64 = d.iter().zip(&w).map(|(a, b)| a * a * b).sum();
            let cross = eta.integrate(|x, y| at(x) * at(y));
            let raw = second - cross;
            let slack = VARIANCE_SLACK * (1.0 + second.abs());
            if raw < -slack {
                return Err(Error::Degenerate(format!("predicted variance {raw} is negative")));
            }
            if raw > iid_variance + slack {
                return Err(Error::VarianceBound { predicted: raw, bound: iid_variance });
            }
            Ok(Prediction {
                mean,
                variance: raw.max(0.0),
                iid_variance: iid_variance.max(0.0),
                source: PredictionSource::IndependentTheorem,
            })
        }
    }
}

/// `U(μ)` for the family's limit law.
pub fn limit_value(family: &SequenceFamily, u: &Functional) -> Result<f64> {
    match family.kind() {
        FamilyKind::Ar1 { .. } => {
            require_ar1_observable(u)?;
            Ok(0.0)
        }
        _ => u.evaluate(&family.limit_measure()?),
    }
}

/// `√N (U(ν̄_N) − U(μ))`, the deterministic part of `Z_N` for independent
/// families.
pub fn deterministic_bias(family: &SequenceFamily, u: &Functional, n: usize) -> Result<f64> {
    if family.is_markov() {
        return Err(Error::Unsupported("the Cesàro bias is defined for independent families".into()));
    }
    let avg = family.average_marginal(n)?;
    Ok((n as f64).sqrt() * (u.evaluate(&avg)? - limit_value(family, u)?))
}

/// `√N (U(μ_N) − U(μ))` for one path drawn on stream `id`.
pub fn replicate(family: &SequenceFamily, u: &Functional, n: usize, u_limit: f64, seed: u64, id: u64) -> Result<f64> {
    let mut rng = stream(seed, id);
    let value = match family.kind() {
        FamilyKind::Ar1 { a, sigma } => {
            let xs = sample_ar1(*a, *sigma, n, &mut rng);
            xs.iter().sum::<f64>() / n as f64
        }
        _ => {
            let support = family.support();
            let mut counts = vec![0u64; support.len()];
            for i in family.sample_indices(n, &mut rng)? {
                counts[i] += 1;
            }
            u.evaluate(&DiscreteMeasure::from_counts(support, &counts)?)?
        }
    };
    Ok((n as f64).sqrt() * (value - u_limit))
}

/// Medians of `|√N R_N|` over [`DECOMPOSITION_REPS`] paths per grid point.
pub fn decomposition_trace(family: &SequenceFamily, u: &Functional, n_grid: &[usize], seed: u64) -> Result<DecompositionTrace> {
    let mut points = Vec::with_capacity(n_grid.len());
    for (g, &n) in n_grid.iter().enumerate() {
        let ctx = PathContext::new(family, u, n)?;
        let tag = MAIN_TAG + 1 + g as u32;
        let parts: Vec<Result<Decomposition>> = (0..DECOMPOSITION_REPS)
            .into_par_iter()
            .map(|r| {
                let path = family.sample_indices(n, &mut stream(seed, stream_id(tag, r as u32)))?;
                ctx.decompose(&path)
            })
            .collect();
        let parts = parts.into_iter().collect::<Result<Vec<_>>>()?;
        let rs: Vec<f64> = parts.iter().map(|d| d.r).collect();
        points.push(DecompositionPoint {
            n,
            median_abs_scaled_remainder: median_abs_scaled(&rs, n),
            truncated: parts.iter().filter(|d| d.truncated(n)).count(),
        });
    }
    let xs: Vec<f64> = points.iter().map(|p| p.n as f64).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.median_abs_scaled_remainder).collect();
    Ok(DecompositionTrace { reps: DECOMPOSITION_REPS, points, slope: log_log_slope(&xs, &ys) })
}

/// Run `M` replications and compare with the prediction. Deterministic in
/// the master seed regardless of thread count.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<CltReport> {
    let family = &cfg.family;
    let u = &cfg.functional;
    let predicted = predict(family, u)?;
    let u_limit = limit_value(family, u)?;
    if family.is_finite() {
        // every μ_N lives on the support, so this bounds the evaluation cost
        let k = family.support().len();
        u.evaluate(&DiscreteMeasure::on_support(family.support(), &vec![1.0 / k as f64; k])?)?;
    }
    let results: Vec<Result<f64>> = (0..cfg.m)
        .into_par_iter()
        .map(|r| replicate(family, u, cfg.n, u_limit, cfg.master_seed, stream_id(MAIN_TAG, r as u32)))
        .collect();
    let samples = results.into_iter().collect::<Result<Vec<f64>>>()?;
    if samples.iter().any(|z| !z.is_finite()) {
        return Err(Error::NonFinite("replication produced a non-finite sample".into()));
    }
    let (empirical_mean, empirical_variance) = moments(&samples);
    let degenerate = predicted.variance <= DEGENERATE_VARIANCE;
    let ks = if degenerate {
        None
    } else {
        let (statistic, pvalue) = ks_test(&samples, predicted.mean, predicted.variance)?;
        Some(KsSummary { statistic, pvalue })
    };
    let decomposition = if cfg.decomposition_trace {
        Some(decomposition_trace(family, u, &cfg.n_grid, cfg.master_seed)?)
    } else {
        None
    };
    Ok(CltReport {
        family: family_label(family).to_string(),
        functional: u.id().to_string(),
        n: cfg.n,
        m: cfg.m,
        master_seed: cfg.master_seed,
        ell: cfg.ell,
        u_limit,
        samples,
        predicted,
        empirical_mean,
        empirical_variance,
        degenerate,
        ks,
        decomposition,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functionals::lookup;
    use crate::markov::MarkovModel;
    use crate::measures::SignedDiscreteMeasure;

    fn m1d(atoms: &[(f64, f64)]) -> DiscreteMeasure {
        DiscreteMeasure::consolidate(atoms.iter().map(|&(x, w)| (Point::scalar(x), w)).collect()).unwrap()
    }

    fn dirac(x: f64) -> DiscreteMeasure {
        DiscreteMeasure::dirac(Point::scalar(x))
    }

    #[test]
    fn iid_prediction_is_the_plain_variance() {
        let mu = m1d(&[(0.0, 0.2), (1.0, 0.5), (3.0, 0.3)]);
        let fam = SequenceFamily::iid(mu.clone(), 2.0).unwrap();
        let p = predict(&fam, &lookup("linear:x1").unwrap()).unwrap();
        let mean = 0.5 + 0.9;
        let var = 0.5 + 2.7 - mean * mean;
        assert!((p.variance - var).abs() < 1e-14);
        assert!((p.variance - p.iid_variance).abs() < 1e-14);
        assert_eq!(p.mean, 0.0);
    }

    #[test]
    fn cyclic_predictions() {
        let u = lookup("ustat2:variance").unwrap();
        let two = SequenceFamily::cyclic(vec![dirac(0.0), dirac(1.0)], 6.0).unwrap();
        let p = predict(&two, &u).unwrap();
        assert_eq!((p.variance, p.iid_variance), (0.0, 0.0));
        let three = SequenceFamily::cyclic(
            vec![m1d(&[(0.0, 0.5), (1.0, 0.5)]), m1d(&[(1.0, 0.5), (2.0, 0.5)]), m1d(&[(0.0, 0.5), (2.0, 0.5)])],
            6.0,
        )
        .unwrap();
        let p = predict(&three, &u).unwrap();
        assert!((p.variance - 1.0 / 6.0).abs() < 1e-14);
        assert!((p.iid_variance - 2.0 / 9.0).abs() < 1e-14);
    }

    #[test]
    fn iid_kernel_chain_matches_iid_family() {
        let mu = m1d(&[(0.0, 0.3), (1.0, 0.7)]);
        let u = lookup("ustat2:variance").unwrap();
        let chain = SequenceFamily::stationary_markov(MarkovModel::iid(&mu).unwrap(), 6.0).unwrap();
        let a = predict(&chain, &u).unwrap();
        let b = predict(&SequenceFamily::iid(mu, 6.0).unwrap(), &u).unwrap();
        assert!((a.variance - b.variance).abs() < 1e-12);
    }

    #[test]
    fn sqrt_perturbed_mean() {
        let tau = SignedDiscreteMeasure::consolidate(1, vec![(Point::scalar(1.0), 0.1), (Point::scalar(0.0), -0.1)]).unwrap();
        let fam = SequenceFamily::sqrt_perturbed(m1d(&[(0.0, 0.5), (1.0, 0.5)]), tau, 2.0).unwrap();
        let p = predict(&fam, &lookup("linear:x1").unwrap()).unwrap();
        assert!((p.mean - 0.2).abs() < 1e-15);
    }

    #[test]
    fn bias_and_fluctuation_recombine() {
        let tau = SignedDiscreteMeasure::consolidate(1, vec![(Point::scalar(1.0), 0.1), (Point::scalar(0.0), -0.1)]).unwrap();
        let fam = SequenceFamily::sqrt_perturbed(m1d(&[(0.0, 0.5), (1.0, 0.5)]), tau, 6.0).unwrap();
        let u = lookup("ustat2:variance").unwrap();
        let n = 400;
        let z = replicate(&fam, &u, n, limit_value(&fam, &u).unwrap(), 3, 0).unwrap();
        let bias = deterministic_bias(&fam, &u, n).unwrap();
        let mut rng = stream(3, 0);
        let mut counts = vec![0u64; 2];
        fam.sample_indices(n, &mut rng).unwrap().into_iter().for_each(|i| counts[i] += 1);
        let u_n = u.evaluate(&DiscreteMeasure::from_counts(fam.support(), &counts).unwrap()).unwrap();
        let fluct = (n as f64).sqrt() * (u_n - u.evaluate(&fam.average_marginal(n).unwrap()).unwrap());
        assert!((z - (bias + fluct)).abs() < 1e-12);

        let cyc = SequenceFamily::cyclic(vec![dirac(0.0), dirac(1.0)], 6.0).unwrap();
        assert!(deterministic_bias(&cyc, &u, 1000).unwrap().abs() < 1e-12);
    }

    #[test]
    fn constant_functional_is_degenerate() {
        let fam = SequenceFamily::iid(m1d(&[(0.0, 0.5), (1.0, 0.5)]), 0.0).unwrap();
        let cfg = ExperimentConfig::new(fam, lookup("linear:one").unwrap(), 50, 100, 1).unwrap();
        let r = run_experiment(&cfg).unwrap();
        assert!(r.degenerate && r.ks.is_none());
        assert!(r.samples.iter().all(|z| *z == 0.0));
    }

    #[test]
    fn runs_are_deterministic() {
        let fam = SequenceFamily::iid(m1d(&[(0.0, 0.5), (2.0, 0.5)]), 6.0).unwrap();
        let cfg = ExperimentConfig::new(fam, lookup("ustat2:variance").unwrap(), 100, 200, 9)
            .unwrap()
            .with_trace(vec![50, 100])
            .unwrap();
        let a = run_experiment(&cfg).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| run_experiment(&cfg)).unwrap();
        assert_eq!(a, b);
        assert_eq!(ReportDoc::from_report(&a).to_json(), ReportDoc::from_report(&b).to_json());
    }

    #[test]
    fn ar1_linear_prediction() {
        let fam = SequenceFamily::ar1(0.5, 1.0, 2.0).unwrap();
        let p = predict(&fam, &lookup("linear:x1").unwrap()).unwrap();
        assert_eq!(p.variance, 4.0);
        assert!(matches!(predict(&fam, &lookup("ustat2:variance").unwrap()), Err(Error::Unsupported(_))));
    }
}
