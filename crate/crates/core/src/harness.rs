//! Sweep orchestration, exponent fitting and artifact emission.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::holder::{builtin_catalog_with, Density, HolderParams};
use crate::median::median_bisection;
use crate::setting::{Criterion, Setting};

/// One measured solver run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub setting: Setting,
    pub criterion: Criterion,
    pub density: String,
    pub r: usize,
    pub rho: f64,
    #[serde(rename = "D")]
    pub d: f64,
    #[serde(rename = "H")]
    pub h: f64,
    pub gamma: f64,
    pub eps: f64,
    pub seed: u64,
    pub queries: u64,
    pub achieved_error_abs: f64,
    pub achieved_error_res: f64,
    pub success: bool,
    pub wall_time: f64,
}

/// Keys accepted in a sweep config file.
pub const CONFIG_KEYS: &[&str] = &[
    "settings",
    "criteria",
    "densities",
    "r",
    "rho",
    "D",
    "H",
    "gamma",
    "eps_exponents",
    "trials_det",
    "trials_rand",
    "trials_quant",
    "seed",
    "timing",
];

/// Sweep description.
///
/// The file format is one `key = value` per line; `#` starts a comment.
/// Lists are comma separated and `eps_exponents` also accepts a range
/// `6..16` (inclusive), meaning `eps = 2^-6, ..., 2^-16`. `D`, `H` and
/// `gamma` override the catalog's class constants when present.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepConfig {
    pub settings: Vec<Setting>,
    pub criteria: Vec<Criterion>,
    pub densities: Vec<String>,
    pub r: usize,
    pub rho: f64,
    pub d: Option<f64>,
    pub h: Option<f64>,
    pub gamma: Option<f64>,
    pub eps_exponents: Vec<u32>,
    pub trials_det: usize,
    pub trials_rand: usize,
    pub trials_quant: usize,
    pub seed: u64,
    /// Record wall time; off keeps `sweep.csv` byte-reproducible.
    pub timing: bool,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            settings: Setting::ALL.to_vec(),
            criteria: vec![Criterion::Residual],
            densities: vec!["sine-0.5".into()],
            r: 1,
            rho: 1.0,
            d: None,
            h: None,
            gamma: None,
            eps_exponents: (6..=12).collect(),
            trials_det: 1,
            trials_rand: 200,
            trials_quant: 200,
            seed: 0,
            timing: false,
        }
    }
}

fn config_err(key: &str, msg: impl Into<String>) -> Error {
    Error::Config {
        key: key.to_string(),
        msg: msg.into(),
    }
}

fn parse_value<V: std::str::FromStr>(key: &str, v: &str) -> Result<V>
where
    V::Err: std::fmt::Display,
{
    v.trim()
        .parse::<V>()
        .map_err(|e| config_err(key, format!("cannot parse `{}`: {e}", v.trim())))
}

fn parse_list<V: std::str::FromStr>(key: &str, v: &str) -> Result<Vec<V>>
where
    V::Err: std::fmt::Display,
{
    let out = v
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| parse_value(key, s))
        .collect::<Result<Vec<V>>>()?;
    if out.is_empty() {
        return Err(config_err(key, "empty list"));
    }
    Ok(out)
}

impl SweepConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        let mut seen = BTreeSet::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(config_err(
                    line,
                    format!("line {}: expected `key = value`", lineno + 1),
                ));
            };
            let key = key.trim();
            if !CONFIG_KEYS.contains(&key) {
                return Err(config_err(key, "unknown key"));
            }
            if !seen.insert(key.to_string()) {
                return Err(config_err(key, "duplicate key"));
            }
            match key {
                "settings" => cfg.settings = parse_list(key, value)?,
                "criteria" => cfg.criteria = parse_list(key, value)?,
                "densities" => cfg.densities = parse_list(key, value)?,
                "r" => cfg.r = parse_value(key, value)?,
                "rho" => cfg.rho = parse_value(key, value)?,
                "D" => cfg.d = Some(parse_value(key, value)?),
                "H" => cfg.h = Some(parse_value(key, value)?),
                "gamma" => cfg.gamma = Some(parse_value(key, value)?),
                "eps_exponents" => cfg.eps_exponents = parse_exponents(key, value)?,
                "trials_det" => cfg.trials_det = parse_value(key, value)?,
                "trials_rand" => cfg.trials_rand = parse_value(key, value)?,
                "trials_quant" => cfg.trials_quant = parse_value(key, value)?,
                "seed" => cfg.seed = parse_value(key, value)?,
                "timing" => cfg.timing = parse_value(key, value)?,
                _ => unreachable!("key list checked above"),
            }
        }
        cfg.check()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    fn check(&self) -> Result<()> {
        if let Some(&e) = self.eps_exponents.iter().find(|&&e| !(2..=52).contains(&e)) {
            return Err(config_err(
                "eps_exponents",
                format!("exponent {e} outside 2..=52"),
            ));
        }
        if !(self.rho > 0.0 && self.rho <= 1.0) {
            return Err(config_err("rho", "must lie in (0, 1]"));
        }
        Ok(())
    }

    pub fn trials(&self, setting: Setting) -> usize {
        match setting {
            Setting::Deterministic => self.trials_det,
            Setting::Randomized => self.trials_rand,
            Setting::Quantum => self.trials_quant,
        }
    }

    /// Resolves a density name under the configured class and overrides.
    pub fn density(&self, name: &str) -> Result<Density<f64>> {
        let base = builtin_catalog_with::<f64>(name, self.r, self.rho)
            .map_err(|e| config_err("densities", e.to_string()))?;
        if self.d.is_none() && self.h.is_none() && self.gamma.is_none() {
            return Ok(base);
        }
        let p = base.params();
        let params = HolderParams::new(
            self.r,
            self.rho,
            self.d.unwrap_or(p.d),
            self.h.unwrap_or(p.h),
            self.gamma.unwrap_or(p.gamma),
        )
        .map_err(|e| config_err("D", e.to_string()))?;
        base.with_params(params)
    }
}

fn parse_exponents(key: &str, v: &str) -> Result<Vec<u32>> {
    if let Some((a, b)) = v.split_once("..") {
        let (a, b): (u32, u32) = (parse_value(key, a)?, parse_value(key, b)?);
        if a > b {
            return Err(config_err(key, "empty range"));
        }
        return Ok((a..=b).collect());
    }
    parse_list(key, v)
}

struct Job {
    setting: Setting,
    criterion: Criterion,
    density: usize,
    exponent: u32,
    seed: u64,
}

/// Runs every `(setting, criterion, density, eps, trial)` and returns records
/// sorted by `(setting, density, eps, seed)`.
///
/// Trial seeds are drawn from a generator seeded with `config.seed`, in cell
/// order, before any work starts; each trial then owns a fresh counter and
/// its own stream, so the output does not depend on scheduling.
pub fn run_sweep(config: &SweepConfig) -> Result<Vec<SweepRecord>> {
    let densities = config
        .densities
        .iter()
        .map(|n| config.density(n))
        .collect::<Result<Vec<_>>>()?;
    let mut master = ChaCha8Rng::seed_from_u64(config.seed);
    let mut jobs = Vec::new();
    for &setting in &config.settings {
        for &criterion in &config.criteria {
            for density in 0..densities.len() {
                for &exponent in &config.eps_exponents {
                    for _ in 0..config.trials(setting) {
                        jobs.push(Job {
                            setting,
                            criterion,
                            density,
                            exponent,
                            seed: master.random(),
                        });
                    }
                }
            }
        }
    }
    let mut records = jobs
        .par_iter()
        .map(|job| run_trial(&densities[job.density], job, config.timing))
        .collect::<Result<Vec<_>>>()?;
    records.sort_by(|a, b| {
        (a.setting, &a.density, a.eps.to_bits(), a.seed, a.criterion).cmp(&(
            b.setting,
            &b.density,
            b.eps.to_bits(),
            b.seed,
            b.criterion,
        ))
    });
    Ok(records)
}

fn run_trial(density: &Density<f64>, job: &Job, timing: bool) -> Result<SweepRecord> {
    let d = density.fork();
    let eps = 0.5f64.powi(job.exponent as i32);
    let mut rng = ChaCha8Rng::seed_from_u64(job.seed);
    let start = Instant::now();
    let res = median_bisection(&d, eps, job.setting, job.criterion, &mut rng)?;
    let wall = if timing {
        start.elapsed().as_secs_f64()
    } else {
        0.0
    };
    if res.trace.total_queries != d.queries() {
        return Err(Error::InternalInvariant(format!(
            "reported cost {} differs from counter {}",
            res.trace.total_queries,
            d.queries()
        )));
    }
    let err_abs = (res.xi_hat - d.reference_median()).abs();
    let err_res = (d.reference_cdf(res.xi_hat) - 0.5).abs();
    let achieved = match job.criterion {
        Criterion::Absolute => err_abs,
        Criterion::Residual => err_res,
    };
    let p = d.params();
    Ok(SweepRecord {
        setting: job.setting,
        criterion: job.criterion,
        density: d.name().to_string(),
        r: p.r,
        rho: p.rho,
        d: p.d,
        h: p.h,
        gamma: p.gamma,
        eps,
        seed: job.seed,
        queries: res.trace.total_queries,
        achieved_error_abs: err_abs,
        achieved_error_res: err_res,
        success: achieved <= res.guarantee,
        wall_time: wall,
    })
}

/// Logarithmic factor divided out before fitting.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LogCorrection {
    None,
    /// `log₂(1/ε)`
    Log,
    /// `log₂(1/ε)·log₂log₂(1/ε)`
    LogLogLog,
    /// `log₂²(1/ε)·log₂log₂(1/ε)`
    Log2LogLog,
}

impl LogCorrection {
    pub fn for_setting(setting: Setting) -> Self {
        match setting {
            Setting::Deterministic => Self::Log,
            Setting::Randomized => Self::Log2LogLog,
            Setting::Quantum => Self::LogLogLog,
        }
    }

    pub fn factor(self, eps: f64) -> f64 {
        let l = (1.0 / eps).log2();
        match self {
            Self::None => 1.0,
            Self::Log => l,
            Self::LogLogLog => l * l.log2(),
            Self::Log2LogLog => l * l * l.log2(),
        }
    }
}

/// Predicted cost exponent `1/(r+ρ)`, `1/(r+ρ+1/2)`, `1/(r+ρ+1)`.
pub fn theory_exponent(setting: Setting, smoothness: f64) -> f64 {
    match setting {
        Setting::Deterministic => 1.0 / smoothness,
        Setting::Randomized => 1.0 / (smoothness + 0.5),
        Setting::Quantum => 1.0 / (smoothness + 1.0),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub setting: Setting,
    pub exponent_hat: f64,
    pub log_correction: LogCorrection,
    /// `2^intercept`: cost ≈ constant·ε^{-exponent}·L(ε).
    pub constant_hat: f64,
    pub r_squared: f64,
    pub theory_exponent: f64,
    /// `(log₂(1/ε), log₂(mean cost / L(ε)))` per grid point.
    pub points: Vec<(f64, f64)>,
}

/// Least-squares slope of `log₂(mean queries / L(ε))` on `log₂(1/ε)`.
///
/// Requires at least 5 distinct `eps` spanning a factor `2^8`.
pub fn fit_exponent(records: &[SweepRecord], setting: Setting) -> Result<FitResult> {
    let correction = LogCorrection::for_setting(setting);
    let mut cells: BTreeMap<u64, (f64, u64, usize)> = BTreeMap::new();
    let mut smoothness = None;
    for rec in records.iter().filter(|r| r.setting == setting) {
        let e = cells.entry(rec.eps.to_bits()).or_insert((rec.eps, 0, 0));
        e.1 += rec.queries;
        e.2 += 1;
        smoothness.get_or_insert(rec.r as f64 + rec.rho);
    }
    if cells.len() < 5 {
        return Err(Error::Fit(format!(
            "{} distinct eps values for {setting}, need at least 5",
            cells.len()
        )));
    }
    let eps: Vec<f64> = cells.values().map(|c| c.0).collect();
    let lo = eps.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = eps.iter().cloned().fold(0.0, f64::max);
    if hi / lo < 256.0 * (1.0 - 1e-12) {
        return Err(Error::Fit(format!(
            "eps range {lo}..{hi} spans less than 2^8"
        )));
    }
    let mut points = Vec::with_capacity(cells.len());
    for &(e, total, count) in cells.values() {
        let l = correction.factor(e);
        let mean = total as f64 / count as f64;
        if !(l > 0.0 && mean > 0.0) {
            return Err(Error::Fit(format!("cannot take logs at eps = {e}")));
        }
        points.push(((1.0 / e).log2(), (mean / l).log2()));
    }
    points.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (slope, intercept, r2) = least_squares(&points);
    Ok(FitResult {
        setting,
        exponent_hat: slope,
        log_correction: correction,
        constant_hat: intercept.exp2(),
        r_squared: r2,
        theory_exponent: theory_exponent(setting, smoothness.unwrap_or(1.0)),
        points,
    })
}

fn least_squares(points: &[(f64, f64)]) -> (f64, f64, f64) {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = points.iter().map(|p| (p.1 - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 {
        1.0
    } else {
        (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0)
    };
    (slope, intercept, r2)
}

pub fn write_csv<W: std::io::Write>(records: &[SweepRecord], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(out);
    w.write_record(SWEEP_COLUMNS)?;
    for rec in records {
        w.serialize(rec)?;
    }
    w.flush()?;
    Ok(())
}

pub const SWEEP_COLUMNS: &[&str] = &[
    "setting",
    "criterion",
    "density",
    "r",
    "rho",
    "D",
    "H",
    "gamma",
    "eps",
    "seed",
    "queries",
    "achieved_error_abs",
    "achieved_error_res",
    "success",
    "wall_time",
];

pub fn read_csv(path: &Path) -> Result<Vec<SweepRecord>> {
    let mut rdr = csv::Reader::from_path(path)?;
    rdr.deserialize().map(|r| r.map_err(Error::from)).collect()
}

/// Writes `sweep.csv`, `fits.json` and one `cost-<setting>.svg` per fitted setting.
pub fn emit(records: &[SweepRecord], fits: &[FitResult], out_dir: &Path) -> Result<()> {
    std::fs::create_dir_all(out_dir)?;
    write_csv(records, std::fs::File::create(out_dir.join("sweep.csv"))?)?;
    let by_setting: BTreeMap<&str, &FitResult> =
        fits.iter().map(|f| (f.setting.as_str(), f)).collect();
    std::fs::write(
        out_dir.join("fits.json"),
        serde_json::to_string_pretty(&by_setting)? + "\n",
    )?;
    for fit in fits {
        std::fs::write(
            out_dir.join(format!("cost-{}.svg", fit.setting.as_str())),
            plot_svg(fit),
        )?;
    }
    Ok(())
}

/// Log-log plot of corrected cost against `1/ε` with the fitted line and the
/// theory line through the first point.
pub fn plot_svg(fit: &FitResult) -> String {
    const W: f64 = 480.0;
    const H: f64 = 360.0;
    const PAD: f64 = 48.0;
    let xs = fit.points.iter().map(|p| p.0);
    let ys = fit.points.iter().map(|p| p.1);
    let (x0, x1) = bounds(xs);
    let (mut y0, mut y1) = bounds(ys);
    if let (Some(&(fx0, fy0)), Some(&(fx1, _))) = (fit.points.first(), fit.points.last()) {
        let ty = fy0 + fit.theory_exponent * (fx1 - fx0);
        y0 = y0.min(ty);
        y1 = y1.max(ty);
    }
    let sx = |x: f64| PAD + (x - x0) / (x1 - x0).max(1e-9) * (W - 2.0 * PAD);
    let sy = |y: f64| H - PAD - (y - y0) / (y1 - y0).max(1e-9) * (H - 2.0 * PAD);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<path d="M{PAD} {PAD} V{b} H{r}" fill="none" stroke="black"/>"#,
        b = H - PAD,
        r = W - PAD
    );
    let _ = writeln!(
        s,
        r#"<text x="{x}" y="{y}" text-anchor="middle">log2(1/eps)</text>"#,
        x = W / 2.0,
        y = H - 12.0
    );
    let _ = writeln!(
        s,
        r#"<text x="14" y="{y}" transform="rotate(-90 14 {y})" text-anchor="middle">log2(cost / L(eps))</text>"#,
        y = H / 2.0
    );
    let _ = writeln!(
        s,
        r#"<text x="{W2}" y="20" text-anchor="middle">{} : fit {:.3}, theory {:.3}</text>"#,
        fit.setting.as_str(),
        fit.exponent_hat,
        fit.theory_exponent,
        W2 = W / 2.0
    );
    if let (Some(&(fx0, fy0)), Some(&(fx1, _))) = (fit.points.first(), fit.points.last()) {
        let c = fit.constant_hat.log2();
        let _ = writeln!(
            s,
            r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="steelblue"/>"#,
            sx(fx0),
            sy(c + fit.exponent_hat * fx0),
            sx(fx1),
            sy(c + fit.exponent_hat * fx1)
        );
        let _ = writeln!(
            s,
            r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="firebrick" stroke-dasharray="6 4"/>"#,
            sx(fx0),
            sy(fy0),
            sx(fx1),
            sy(fy0 + fit.theory_exponent * (fx1 - fx0))
        );
    }
    for &(x, y) in &fit.points {
        let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="3"/>"#, sx(x), sy(y));
    }
    s.push_str("</svg>\n");
    s
}

fn bounds(it: impl Iterator<Item = f64>) -> (f64, f64) {
    it.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| {
        (a.min(v), b.max(v))
    })
}
