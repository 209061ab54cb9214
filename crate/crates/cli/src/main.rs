//! `functional-clt`: exact Wasserstein distances, Monte Carlo CLT runs and
//! Poisson-equation solves from the command line.
//!
//! Exit codes: 0 success, 2 input error, 3 resource limit, 4 mathematical
//! precondition failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use functional_clt::functionals::lookup;
use functional_clt::harness::{run_experiment, samples_csv, ConfigDoc, ReportDoc};
use functional_clt::markov::{solve_poisson_direct, solve_poisson_neumann, MarkovModel};
use functional_clt::measures::DiscreteMeasure;
use functional_clt::transport::wasserstein;
use functional_clt::{Error, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Parser)]
#[command(name = "functional-clt", version, about = "Central limit theorems for functionals of empirical measures")]
struct Cli {
    /// Worker threads for replications (0 = one per core).
    #[arg(long, global = true, env = "FUNCTIONAL_CLT_THREADS", default_value_t = 0)]
    threads: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Exact W_ℓ distance between two measure files.
    Wasserstein {
        first: PathBuf,
        second: PathBuf,
        #[arg(long, default_value_t = 2.0)]
        ell: f64,
        /// Also print both measures and the optimal plan.
        #[arg(long)]
        plan: bool,
    },
    /// Run a Monte Carlo experiment described by a JSON config.
    CltRun {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; defaults to the config's `output.dir`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the config's master seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Solve the Poisson equation of a chain for a linear catalog observable.
    Poisson {
        model: PathBuf,
        observable: String,
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
    },
}

#[derive(Serialize)]
struct Outputs {
    samples: String,
    report: String,
}

#[derive(Serialize)]
struct Manifest {
    config_digest: String,
    config: serde_json::Value,
    tool_version: String,
    master_seed: u64,
    outputs: Outputs,
    wall_clock_seconds: f64,
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::InvalidArgument(format!("cannot read {}: {e}", path.display())))
}

fn with_file<T>(path: &Path, r: Result<T>) -> Result<T> {
    r.map_err(|e| Error::InFile { path: path.display().to_string(), source: Box::new(e) })
}

fn cmd_wasserstein(first: &Path, second: &Path, ell: f64, plan: bool) -> Result<()> {
    let a = with_file(first, DiscreteMeasure::from_text(&read(first)?))?;
    let b = with_file(second, DiscreteMeasure::from_text(&read(second)?))?;
    let (w, p) = wasserstein(&a, &b, ell)?;
    println!("{w:.11e}");
    if plan {
        print!("{}", p.to_text(&a, &b));
    }
    Ok(())
}

fn cmd_clt_run(config: &Path, out: Option<&Path>, seed: Option<u64>) -> Result<()> {
    let start = Instant::now();
    let mut doc = ConfigDoc::parse(&read(config)?)?;
    if let Some(s) = seed {
        doc.run.seed = s;
    }
    let base = config.parent().unwrap_or(Path::new("."));
    let cfg = doc.resolve(base)?;
    let out_dir = match (out, &doc.output.dir) {
        (Some(o), _) => o.to_path_buf(),
        (None, Some(d)) => base.join(d),
        (None, None) => return Err(Error::InvalidConfig("no output directory: pass --out or set output.dir".into())),
    };
    let report = run_experiment(&cfg)?;
    std::fs::create_dir_all(&out_dir)?;
    std::fs::write(out_dir.join("samples.csv"), samples_csv(&report.samples))?;
    std::fs::write(out_dir.join("report.json"), ReportDoc::from_report(&report).to_json())?;
    let canonical = doc.canonical_json();
    let manifest = Manifest {
        config_digest: hex::encode(Sha256::digest(canonical.as_bytes())),
        config: serde_json::from_str(&canonical)?,
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        master_seed: cfg.master_seed,
        outputs: Outputs { samples: "samples.csv".into(), report: "report.json".into() },
        wall_clock_seconds: start.elapsed().as_secs_f64(),
    };
    let mut text = serde_json::to_string_pretty(&manifest)?;
    text.push('\n');
    std::fs::write(out_dir.join("manifest.json"), text)?;

    let p = &report.predicted;
    println!("family {} functional {} N={} M={} seed={}", report.family, report.functional, report.n, report.m, report.master_seed);
    println!("predicted mean {:.6e} variance {:.6e}", p.mean, p.variance);
    println!("empirical mean {:.6e} variance {:.6e}", report.empirical_mean, report.empirical_variance);
    match &report.ks {
        Some(ks) => println!("ks statistic {:.6e} pvalue {:.6e}", ks.statistic, ks.pvalue),
        None => println!("ks skipped (degenerate limit)"),
    }
    println!("wrote {}", out_dir.display());
    Ok(())
}

fn cmd_poisson(model_path: &Path, observable: &str, tol: f64) -> Result<()> {
    let model = with_file(model_path, MarkovModel::from_text(&read(model_path)?))?;
    let u = lookup(observable)?;
    if !u.is_linear() {
        return Err(Error::InvalidArgument(format!("observable `{observable}` is not a linear catalog entry")));
    }
    let mu = model.invariant_measure();
    let f = u.derivative_many(mu.view(), &model.states().iter().collect::<Vec<_>>())?;
    let direct = solve_poisson_direct(&model, &f)?;
    let series = solve_poisson_neumann(&model, None, &f, tol)?;
    let gap = direct.big_f.iter().zip(&series.big_f).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    println!("state F");
    for (x, v) in model.states().iter().zip(&series.big_f) {
        println!("{x} {v:.11e}");
    }
    println!("residual {:.6e}", series.residual);
    println!("variance {:.11e}", series.variance);
    println!("direct_variance {:.11e}", direct.variance);
    println!("neumann_terms {} max_gap {:.3e}", series.term_norms.len(), gap);
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global() {
        eprintln!("error: cannot start worker threads: {e}");
        return ExitCode::from(2);
    }
    let result = match &cli.command {
        Command::Wasserstein { first, second, ell, plan } => cmd_wasserstein(first, second, *ell, *plan),
        Command::CltRun { config, out, seed } => cmd_clt_run(config, out.as_deref(), *seed),
        Command::Poisson { model, observable, tol } => cmd_poisson(model, observable, *tol),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
