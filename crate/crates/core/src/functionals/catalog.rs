//! Built-in functionals addressable by string id.
//!
//! Constants are valid for measures whose mean has norm at most 2. Each
//! follows from Cauchy–Schwarz or Hölder applied to the explicit
//! derivative; the unit tests re-check them on random measures.

use std::sync::Arc;

use super::{Functional, KernelFn, PointFn, RealFn, RegularityCertificate};
use crate::error::{Error, Result};
use crate::measures::Point;

const IDS: [&str; 8] = [
    "linear:x1",
    "linear:norm2",
    "linear:one",
    "ustat2:variance",
    "ustat2:gini",
    "ustat3:product",
    "composite:mean_squared",
    "composite:exp_mean",
];

/// All catalog ids.
pub fn catalog_ids() -> &'static [&'static str] {
    &IDS
}

fn cert(ell: f64, growth: f64, holder: f64, split: f64) -> RegularityCertificate {
    RegularityCertificate::new(ell, 1.0, growth, holder, split).expect("catalog constants are valid")
}

fn point_fn(f: fn(&Point) -> f64) -> PointFn {
    Arc::new(f)
}

fn real_fn(f: fn(f64) -> f64) -> RealFn {
    Arc::new(f)
}

fn kernel(f: fn(&[&Point]) -> f64) -> KernelFn {
    Arc::new(f)
}

fn squared_distance(a: &Point, b: &Point) -> f64 {
    a.coords().iter().zip(b.coords()).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Look up a functional by id.
pub fn lookup(id: &str) -> Result<Functional> {
    let e2 = std::f64::consts::E * std::f64::consts::E;
    // 2 sup_r r / (1 + r^3), attained at r^3 = 1/2
    let variance_holder = 2.0 * 0.5f64.cbrt() / 1.5;
    let u = match id {
        "linear:x1" => Functional::linear(id, point_fn(|x| x.x1()), cert(2.0, 1.0, 0.0, 0.0)),
        "linear:norm2" => {
            Functional::linear(id, point_fn(|x| x.norm().powi(2)), cert(4.0, 1.0, 0.0, 0.0))
        }
        "linear:one" => Functional::linear(id, point_fn(|_| 1.0), cert(0.0, 1.0, 0.0, 0.0)),
        "ustat2:variance" => Functional::ustatistic(
            id,
            2,
            kernel(|a| 0.5 * squared_distance(a[0], a[1])),
            cert(6.0, 5.0, variance_holder * (1.0 + 1e-12), 2.0),
        )?,
        "ustat2:gini" => Functional::ustatistic(
            id,
            2,
            kernel(|a| a[0].distance(a[1])),
            cert(4.0, 2.0, 1.0, 2.0),
        )?,
        "ustat3:product" => Functional::ustatistic(
            id,
            3,
            kernel(|a| a[0].x1() * a[1].x1() * a[2].x1()),
            cert(4.0, 12.0, 6.0, 12.0),
        )?,
        "composite:mean_squared" => Functional::composite(
            id,
            real_fn(|t| t * t),
            real_fn(|t| 2.0 * t),
            point_fn(|x| x.x1()),
            cert(2.0, 4.0, 2.0, 2.0),
        )?,
        "composite:exp_mean" => Functional::composite(
            id,
            real_fn(f64::exp),
            real_fn(f64::exp),
            point_fn(|x| x.x1()),
            cert(2.0, e2, e2, e2),
        )?,
        _ => return Err(Error::UnknownFunctional(id.to_string())),
    };
    Ok(u)
}
