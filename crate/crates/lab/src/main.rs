use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use medlab::adversary::{check_median_identity, make_adversarial_density, BumpFamily};
use medlab::harness::{emit, fit_exponent, read_csv, run_sweep, SweepConfig};
use medlab::quantiles::{quantiles_bisect, quantiles_ivp_det, QuantileRequest};
use medlab::{
    builtin_catalog_with, median_bisection, verify_membership, Criterion, Error, HolderParams,
    Setting,
};

#[derive(Parser)]
#[command(
    name = "lab",
    version,
    about = "Median and quantile experiments on smooth densities"
)]
struct Cli {
    /// Base seed for anything random.
    #[arg(long, global = true, env = "LAB_SEED", default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a sweep and write sweep.csv, fits.json and plots.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Estimate one median.
    Median {
        #[arg(long, default_value = "sine-0.5")]
        density: String,
        #[arg(long, default_value = "det")]
        setting: Setting,
        #[arg(long, default_value = "res")]
        criterion: Criterion,
        #[arg(long, default_value_t = 1.0 / 1024.0)]
        eps: f64,
        #[arg(long, default_value_t = 1)]
        r: usize,
        #[arg(long, default_value_t = 1.0)]
        rho: f64,
        /// Write the full bisection trace as JSON.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Estimate several quantiles.
    Quantiles {
        #[arg(long, default_value = "sine-0.5")]
        density: String,
        /// Comma-separated levels in [0, 1].
        #[arg(long, value_delimiter = ',', required = true)]
        alpha: Vec<f64>,
        #[arg(long, value_enum, default_value_t = Method::Bisect)]
        method: Method,
        #[arg(long, default_value = "det")]
        setting: Setting,
        #[arg(long, default_value_t = 1.0 / 1024.0)]
        eps: f64,
        #[arg(long, default_value_t = 1)]
        r: usize,
        #[arg(long, default_value_t = 1.0)]
        rho: f64,
    },
    /// Build a random bump-family density and check the median identity.
    Adversary {
        #[arg(long)]
        eps1: f64,
        #[arg(long, default_value_t = 1)]
        r: usize,
        #[arg(long, default_value_t = 1.0)]
        rho: f64,
        #[arg(long = "D", default_value_t = 2.0)]
        d: f64,
        #[arg(long = "H", default_value_t = 100.0)]
        h: f64,
    },
    /// Fit cost exponents to an existing sweep.csv.
    Fit {
        #[arg(long = "in")]
        input: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Bisect,
    Ivp,
}

fn run(cli: Cli) -> medlab::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(cli.seed);
    match cli.cmd {
        Cmd::Sweep { config, out } => {
            let mut cfg = SweepConfig::load(&config)?;
            if std::env::var_os("LAB_SEED").is_some() && !config_sets_seed(&config)? {
                cfg.seed = cli.seed;
            }
            let records = run_sweep(&cfg)?;
            let mut fits = Vec::new();
            for &s in &cfg.settings {
                match fit_exponent(&records, s) {
                    Ok(f) => fits.push(f),
                    Err(e) => eprintln!("no fit for {s}: {e}"),
                }
            }
            emit(&records, &fits, &out)?;
            println!("{} records written to {}", records.len(), out.display());
        }
        Cmd::Median {
            density,
            setting,
            criterion,
            eps,
            r,
            rho,
            trace,
        } => {
            let d = builtin_catalog_with::<f64>(&density, r, rho)?;
            let res = median_bisection(&d, eps, setting, criterion, &mut rng)?;
            if let Some(path) = trace {
                std::fs::write(path, serde_json::to_string_pretty(&res)?)?;
            }
            let summary = json!({
                "density": d.name(),
                "setting": setting,
                "criterion": criterion,
                "eps": eps,
                "xi_hat": res.xi_hat,
                "guarantee": res.guarantee,
                "queries": res.trace.total_queries,
                "steps": res.trace.i0,
                "reference_median": d.reference_median(),
            });
            println!("{}", serde_json::to_string_pretty(&summary)?);
        }
        Cmd::Quantiles {
            density,
            alpha,
            method,
            setting,
            eps,
            r,
            rho,
        } => {
            let d = builtin_catalog_with::<f64>(&density, r, rho)?;
            let req = QuantileRequest::new(alpha, eps, setting)?;
            let est = match method {
                Method::Bisect => quantiles_bisect(&d, &req, &mut rng)?,
                Method::Ivp => quantiles_ivp_det(&d, &req)?,
            };
            println!("{}", serde_json::to_string_pretty(&est)?);
        }
        Cmd::Adversary { eps1, r, rho, d, h } => {
            let params = HolderParams::new(r, rho, d, h, 2.0 / 3.0)?;
            let fam = BumpFamily::new(eps1, &params)?;
            let x: Vec<f64> = (0..fam.n).map(|_| rng.random::<f64>()).collect();
            let dens = make_adversarial_density(&fam, &x)?;
            let xi = dens.reference_median();
            let report = verify_membership(&dens, 4096, 1e-8);
            let out = json!({
                "family": &fam,
                "xi": xi,
                "identity_residual": check_median_identity(&fam, &x, xi),
                "membership": report.passes(),
                "max_violation": report.max_violation,
            });
            println!("{}", serde_json::to_string_pretty(&out)?);
            if !report.passes() {
                return Err(Error::InternalInvariant(
                    "constructed density left the class".into(),
                ));
            }
        }
        Cmd::Fit { input } => {
            let records = read_csv(&input)?;
            let settings: std::collections::BTreeSet<Setting> =
                records.iter().map(|r| r.setting).collect();
            let fits = settings
                .into_iter()
                .map(|s| fit_exponent(&records, s))
                .collect::<medlab::Result<Vec<_>>>()?;
            println!("{}", serde_json::to_string_pretty(&fits)?);
        }
    }
    Ok(())
}

fn config_sets_seed(path: &PathBuf) -> medlab::Result<bool> {
    let text = std::fs::read_to_string(path)?;
    Ok(text.lines().any(|l| {
        l.split('#')
            .next()
            .unwrap_or("")
            .split('=')
            .next()
            .map(str::trim)
            == Some("seed")
    }))
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::Config { .. } => 2,
                Error::InternalInvariant(_) => 3,
                _ => 1,
            })
        }
    }
}
