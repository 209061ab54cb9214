//! One-sample Kolmogorov–Smirnov test against a normal law.

use crate::error::{Error, Result};

const SERIES_TERMS: usize = 100;

/// Complementary error function, rational Chebyshev fit with fractional
/// error below 1.2e-7 everywhere.
pub fn erfc(x: f64) -> f64 {
    let z = x.abs();
    let t = 1.0 / (1.0 + 0.5 * z);
    let poly = -z * z - 1.265_512_23
        + t * (1.000_023_68
            + t * (0.374_091_96
                + t * (0.096_784_18
                    + t * (-0.186_288_06
                        + t * (0.278_868_07
                            + t * (-1.135_203_98 + t * (1.488_515_87 + t * (-0.822_152_23 + t * 0.170_872_77))))))));
    let r = t * poly.exp();
    if x >= 0.0 {
        r
    } else {
        2.0 - r
    }
}

/// Standard normal CDF. The tail branch keeps the `erfc` argument
/// nonnegative so the absolute error stays below 1e-7.
pub fn normal_cdf(z: f64) -> f64 {
    let h = 0.5 * erfc(z.abs() / std::f64::consts::SQRT_2);
    if z >= 0.0 {
        1.0 - h
    } else {
        h
    }
}

/// `P(K > λ)` for the Kolmogorov distribution, each series cut at 100 terms.
pub fn kolmogorov_survival(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    let p = if lambda < 1.18 {
        // theta-function form, fast for small λ
        let c = std::f64::consts::PI.powi(2) / (8.0 * lambda * lambda);
        let s: f64 = (1..=SERIES_TERMS).map(|j| (-((2 * j - 1) as f64).powi(2) * c).exp()).sum();
        1.0 - (2.0 * std::f64::consts::PI).sqrt() / lambda * s
    } else {
        let s: f64 = (1..=SERIES_TERMS)
            .map(|j| {
                let sign = if j % 2 == 1 { 1.0 } else { -1.0 };
                sign * (-2.0 * (j * j) as f64 * lambda * lambda).exp()
            })
            .sum();
        2.0 * s
    };
    p.clamp(0.0, 1.0)
}

/// `(D_M, p)` for `samples` against `N(mean, variance)`.
pub fn ks_test(samples: &[f64], mean: f64, variance: f64) -> Result<(f64, f64)> {
    if !(variance > 0.0) {
        return Err(Error::Degenerate(format!("KS test needs a positive variance, got {variance}")));
    }
    if samples.is_empty() {
        return Err(Error::InvalidArgument("KS test needs samples".into()));
    }
    if let Some(x) = samples.iter().find(|x| !x.is_finite()) {
        return Err(Error::NonFinite(format!("sample {x}")));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let m = sorted.len() as f64;
    let sd = variance.sqrt();
    let d = sorted
        .iter()
        .enumerate()
        .map(|(i, x)| {
            let f = normal_cdf((x - mean) / sd);
            ((i + 1) as f64 / m - f).max(f - i as f64 / m)
        })
        .fold(0.0, f64::max);
    Ok((d, kolmogorov_survival(m.sqrt() * d)))
}
