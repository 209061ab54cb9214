//! Fixture families, chains and random generators shared by the
//! integration tests and the acceptance suite.
#![allow(dead_code)]

use functional_clt::markov::{verify_lyapunov, LyapunovCertificate, MarkovModel, Variant};
use functional_clt::measures::{DiscreteMeasure, Point, SignedDiscreteMeasure};
use functional_clt::rng::Stream;
use functional_clt::sequences::SequenceFamily;
use rand::Rng;

pub fn m1d(atoms: &[(f64, f64)]) -> DiscreteMeasure {
    DiscreteMeasure::consolidate(atoms.iter().map(|&(x, w)| (Point::scalar(x), w)).collect()).unwrap()
}

pub fn s1d(atoms: &[(f64, f64)]) -> SignedDiscreteMeasure {
    SignedDiscreteMeasure::consolidate(1, atoms.iter().map(|&(x, w)| (Point::scalar(x), w)).collect()).unwrap()
}

pub fn dirac(x: f64) -> DiscreteMeasure {
    DiscreteMeasure::dirac(Point::scalar(x))
}

pub fn two_state() -> MarkovModel {
    MarkovModel::new(vec![Point::scalar(0.0), Point::scalar(1.0)], vec![vec![0.7, 0.3], vec![0.2, 0.8]]).unwrap()
}

/// Walk on {0,..,4}: reset to 0 w.p. 0.2, otherwise ±1 with reflection.
pub fn five_state() -> MarkovModel {
    let k = 5;
    let mut rows = vec![vec![0.0; k]; k];
    for (x, row) in rows.iter_mut().enumerate() {
        row[0] += 0.2;
        row[(x + 1).min(k - 1)] += 0.4;
        row[x.saturating_sub(1)] += 0.4;
    }
    MarkovModel::new((0..k).map(|x| Point::scalar(x as f64)).collect(), rows).unwrap()
}

pub fn two_state_certificate() -> LyapunovCertificate {
    verify_lyapunov(&two_state(), &[0.0, 1.0], 0.85, 0.31, 5.0, 0.5, Variant::L2, 2.0).unwrap()
}

pub fn five_state_certificate() -> LyapunovCertificate {
    let v: Vec<f64> = (0..5).map(|x| x as f64).collect();
    verify_lyapunov(&five_state(), &v, 0.8, 0.4, 4.5, 0.2, Variant::L2, 2.0).unwrap()
}

pub fn iid3() -> DiscreteMeasure {
    m1d(&[(-1.0, 0.3), (0.5, 0.5), (2.0, 0.2)])
}

pub fn cyclic_dirac(ell: f64) -> SequenceFamily {
    SequenceFamily::cyclic(vec![dirac(0.0), dirac(1.0)], ell).unwrap()
}

pub fn cyclic3(ell: f64) -> SequenceFamily {
    SequenceFamily::cyclic(
        vec![m1d(&[(0.0, 0.5), (1.0, 0.5)]), m1d(&[(1.0, 0.5), (2.0, 0.5)]), m1d(&[(0.0, 0.5), (2.0, 0.5)])],
        ell,
    )
    .unwrap()
}

pub fn sqrt_perturbed(ell: f64) -> SequenceFamily {
    SequenceFamily::sqrt_perturbed(m1d(&[(0.0, 0.5), (1.0, 0.5)]), s1d(&[(1.0, 0.1), (0.0, -0.1)]), ell).unwrap()
}

pub fn decaying(ell: f64) -> SequenceFamily {
    SequenceFamily::decaying(m1d(&[(0.0, 0.5), (1.0, 0.5)]), s1d(&[(1.0, 0.2), (0.0, -0.2)]), 0.8, 0.6, ell).unwrap()
}

/// Every finite fixture family, labelled.
pub fn fixture_families(ell: f64) -> Vec<(&'static str, SequenceFamily)> {
    vec![
        ("iid", SequenceFamily::iid(iid3(), ell).unwrap()),
        ("cyclic-dirac", cyclic_dirac(ell)),
        ("cyclic-3", cyclic3(ell)),
        ("sqrt-perturbed", sqrt_perturbed(ell)),
        ("decaying", decaying(ell)),
        ("markov-2", SequenceFamily::stationary_markov(two_state(), ell).unwrap()),
        ("markov-5", SequenceFamily::markov(five_state(), &dirac(4.0), ell).unwrap()),
    ]
}

/// Kernel with strictly positive entries on `k` states.
pub fn random_chain(rng: &mut Stream, k: usize) -> MarkovModel {
    let states = (0..k).map(|x| Point::scalar(x as f64)).collect();
    let rows = (0..k)
        .map(|_| {
            let raw: Vec<f64> = (0..k).map(|_| 0.05 + rng.random::<f64>()).collect();
            let s: f64 = raw.iter().sum();
            raw.into_iter().map(|x| x / s).collect()
        })
        .collect();
    MarkovModel::new(states, rows).unwrap()
}

/// Random probability vector of length `k`.
pub fn random_simplex(rng: &mut Stream, k: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..k).map(|_| rng.random::<f64>()).collect();
    let s: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / s).collect()
}

/// Random measure with `k` atoms on a coarse grid in dimension `d`.
pub fn random_measure(rng: &mut Stream, k: usize, d: usize) -> DiscreteMeasure {
    let w = random_simplex(rng, k);
    let raw = w
        .into_iter()
        .map(|w| (Point::new((0..d).map(|_| rng.random_range(-20..=20) as f64 / 10.0).collect()).unwrap(), w))
        .collect();
    DiscreteMeasure::consolidate(raw).unwrap()
}
