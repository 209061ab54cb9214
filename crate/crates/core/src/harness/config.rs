//! Experiment configuration documents (JSON) and their resolution into
//! library objects.
//!
//! A document has four sections: `family`, `functional`, `run`, `output`.
//! Measures and chain models are given inline as atom lists, inline text in
//! the measure/model formats, or a file path relative to the config file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functionals::{lookup, Functional};
use crate::markov::MarkovModel;
use crate::measures::{DiscreteMeasure, Point, SignedDiscreteMeasure};
use crate::sequences::SequenceFamily;

/// Smallest path length and replication count accepted.
pub const MIN_N: usize = 10;
pub const MIN_M: usize = 100;

pub const DEFAULT_N_GRID: [usize; 5] = [250, 500, 1000, 2000, 4000];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigDoc {
    pub family: FamilySpec,
    pub functional: String,
    pub run: RunSpec,
    #[serde(default)]
    pub output: OutputSpec,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FamilySpec {
    Iid { mu: MeasureSpec },
    Cyclic { thetas: Vec<MeasureSpec> },
    Decaying { mu: MeasureSpec, tau: MeasureSpec, alpha: f64, c: f64 },
    SqrtPerturbed { mu: MeasureSpec, tau: MeasureSpec },
    Markov {
        model: ModelSpec,
        /// Initial law; the invariant law when absent.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        start: Option<MeasureSpec>,
    },
    Ar1 { a: f64, sigma: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeasureSpec {
    File(String),
    Text(String),
    /// Rows `[x_1, .., x_d, w]`.
    Atoms(Vec<Vec<f64>>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelSpec {
    File(String),
    Text(String),
    Kernel { states: Vec<Vec<f64>>, rows: Vec<Vec<f64>> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSpec {
    pub n: usize,
    pub m: usize,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ell: Option<f64>,
    #[serde(default)]
    pub decomposition_trace: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_grid: Option<Vec<usize>>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<String>,
}

/// A validated experiment.
#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub family: SequenceFamily,
    pub functional: Functional,
    pub n: usize,
    pub m: usize,
    pub master_seed: u64,
    pub ell: f64,
    pub decomposition_trace: bool,
    pub n_grid: Vec<usize>,
}

impl ExperimentConfig {
    pub fn new(family: SequenceFamily, functional: Functional, n: usize, m: usize, master_seed: u64) -> Result<Self> {
        if n < MIN_N || m < MIN_M {
            return Err(Error::InvalidConfig(format!("need N ≥ {MIN_N} and M ≥ {MIN_M}, got N={n}, M={m}")));
        }
        let ell = functional.certificate().ell;
        if family.ell() != ell {
            return Err(Error::InvalidConfig(format!(
                "family ℓ = {} differs from the functional's certificate ℓ = {ell}",
                family.ell()
            )));
        }
        Ok(ExperimentConfig {
            family,
            functional,
            n,
            m,
            master_seed,
            ell,
            decomposition_trace: false,
            n_grid: DEFAULT_N_GRID.to_vec(),
        })
    }

    pub fn with_trace(mut self, n_grid: Vec<usize>) -> Result<Self> {
        if n_grid.len() < 2 || n_grid.iter().any(|&n| n < MIN_N) {
            return Err(Error::InvalidConfig("N_grid needs at least two values, each ≥ 10".into()));
        }
        self.decomposition_trace = true;
        self.n_grid = n_grid;
        Ok(self)
    }
}

impl ConfigDoc {
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))
    }

    /// Sorted keys, no insignificant whitespace.
    pub fn canonical_json(&self) -> String {
        let value = serde_json::to_value(self).expect("config serializes");
        serde_json::to_string(&value).expect("value serializes")
    }

    /// Build the experiment; relative file references resolve against `base`.
    pub fn resolve(&self, base: &Path) -> Result<ExperimentConfig> {
        let functional = lookup(&self.functional)?;
        let ell = functional.certificate().ell;
        if let Some(e) = self.run.ell {
            if e != ell {
                return Err(Error::InvalidConfig(format!(
                    "run.ell = {e} differs from the certificate ℓ = {ell} of `{}`",
                    self.functional
                )));
            }
        }
        let family = self.family.build(base, ell)?;
        let cfg = ExperimentConfig::new(family, functional, self.run.n, self.run.m, self.run.seed)?;
        if self.run.decomposition_trace {
            cfg.with_trace(self.run.n_grid.clone().unwrap_or_else(|| DEFAULT_N_GRID.to_vec()))
        } else {
            Ok(cfg)
        }
    }
}

fn read(base: &Path, file: &str) -> Result<String> {
    let path: PathBuf = base.join(file);
    std::fs::read_to_string(&path).map_err(|e| Error::InvalidConfig(format!("cannot read {}: {e}", path.display())))
}

fn atoms_from_rows(rows: &[Vec<f64>]) -> Result<(usize, Vec<(Point, f64)>)> {
    let dim = rows.first().map(|r| r.len()).unwrap_or(0);
    if dim < 2 {
        return Err(Error::InvalidConfig("atom rows are `[x_1, .., x_d, w]` with d ≥ 1".into()));
    }
    let mut atoms = Vec::with_capacity(rows.len());
    for row in rows {
        if row.len() != dim {
            return Err(Error::InvalidConfig(format!("atom rows must all have length {dim}")));
        }
        atoms.push((Point::new(row[..dim - 1].to_vec())?, row[dim - 1]));
    }
    Ok((dim - 1, atoms))
}

impl MeasureSpec {
    pub fn probability(&self, base: &Path) -> Result<DiscreteMeasure> {
        match self {
            MeasureSpec::File(f) => DiscreteMeasure::from_text(&read(base, f)?),
            MeasureSpec::Text(t) => DiscreteMeasure::from_text(t),
            MeasureSpec::Atoms(rows) => DiscreteMeasure::consolidate(atoms_from_rows(rows)?.1),
        }
    }

    pub fn signed(&self, base: &Path) -> Result<SignedDiscreteMeasure> {
        match self {
            MeasureSpec::File(f) => SignedDiscreteMeasure::from_text(&read(base, f)?),
            MeasureSpec::Text(t) => SignedDiscreteMeasure::from_text(t),
            MeasureSpec::Atoms(rows) => {
                let (dim, atoms) = atoms_from_rows(rows)?;
                SignedDiscreteMeasure::consolidate(dim, atoms)
            }
        }
    }
}

impl ModelSpec {
    pub fn model(&self, base: &Path) -> Result<MarkovModel> {
        match self {
            ModelSpec::File(f) => MarkovModel::from_text(&read(base, f)?),
            ModelSpec::Text(t) => MarkovModel::from_text(t),
            ModelSpec::Kernel { states, rows } => {
                let states = states.iter().map(|s| Point::new(s.clone())).collect::<Result<Vec<_>>>()?;
                MarkovModel::new(states, rows.clone())
            }
        }
    }
}

impl FamilySpec {
    pub fn build(&self, base: &Path, ell: f64) -> Result<SequenceFamily> {
        match self {
            FamilySpec::Iid { mu } => SequenceFamily::iid(mu.probability(base)?, ell),
            FamilySpec::Cyclic { thetas } => {
                SequenceFamily::cyclic(thetas.iter().map(|t| t.probability(base)).collect::<Result<_>>()?, ell)
            }
            FamilySpec::Decaying { mu, tau, alpha, c } => {
                SequenceFamily::decaying(mu.probability(base)?, tau.signed(base)?, *alpha, *c, ell)
            }
            FamilySpec::SqrtPerturbed { mu, tau } => {
                SequenceFamily::sqrt_perturbed(mu.probability(base)?, tau.signed(base)?, ell)
            }
            FamilySpec::Markov { model, start } => {
                let model = model.model(base)?;
                match start {
                    Some(s) => SequenceFamily::markov(model, &s.probability(base)?, ell),
                    None => SequenceFamily::stationary_markov(model, ell),
                }
            }
            FamilySpec::Ar1 { a, sigma } => SequenceFamily::ar1(*a, *sigma, ell),
        }
    }
}
