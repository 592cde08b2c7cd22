//! Batch experiments: many episodes on fresh random instances, regret traces on disk.
//!
//! Output layout inside `output_dir`:
//!
//! - `run_NNNN.csv`: `run_id,t,matching,mi,cumulative_mi,event_ok`, one row per step
//! - `aggregate.csv`: `t,mean_cum_mi,std_cum_mi,bound` (plus `bound_no_log` on request)
//! - `config.toml`: the configuration that produced the files

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bandit::{run_episode, Delta, EpisodeConfig, PolicyKind};
use crate::error::{Error, Result};
use crate::instability::{matching_instability, InstabilityReport};
use crate::market::io::{read_instance, read_matching, read_strategies};
use crate::market::{generate_instance, Generator};

/// Default output directory when neither the config nor the environment names one.
pub const DEFAULT_OUTPUT_DIR: &str = "results";
pub const OUTPUT_DIR_ENV: &str = "UCBMG_OUTPUT_DIR";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub p: usize,
    pub a: usize,
    pub m: usize,
    pub k: usize,
    #[serde(alias = "T")]
    pub horizon: usize,
    #[serde(default = "default_runs")]
    pub runs: usize,
    #[serde(default)]
    pub seeds_base: u64,
    #[serde(default = "default_policy")]
    pub policy: PolicyKind,
    #[serde(default = "default_generator")]
    pub generator: Generator,
    #[serde(default = "default_outside_option")]
    pub outside_option: f64,
    #[serde(default)]
    pub delta: Delta,
    #[serde(default = "default_noise_scale")]
    pub noise_scale: f64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    /// Add a `bound_no_log` column to the aggregate file.
    #[serde(default)]
    pub bound_no_log: bool,
}

fn default_runs() -> usize {
    50
}

fn default_policy() -> PolicyKind {
    PolicyKind::SelfPlay
}

fn default_generator() -> Generator {
    Generator::GaussianUnit
}

fn default_outside_option() -> f64 {
    -1.0
}

fn default_noise_scale() -> f64 {
    1.0
}

/// `$UCBMG_OUTPUT_DIR`, or `results`.
pub fn default_output_dir() -> PathBuf {
    std::env::var_os(OUTPUT_DIR_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR))
}

impl ExperimentConfig {
    pub fn new(p: usize, a: usize, m: usize, k: usize, horizon: usize) -> Self {
        ExperimentConfig {
            p,
            a,
            m,
            k,
            horizon,
            runs: default_runs(),
            seeds_base: 0,
            policy: default_policy(),
            generator: default_generator(),
            outside_option: default_outside_option(),
            delta: Delta::Auto,
            noise_scale: default_noise_scale(),
            output_dir: default_output_dir(),
            bound_no_log: false,
        }
    }

    pub fn from_toml(text: &str, origin: &str) -> Result<Self> {
        let config: ExperimentConfig =
            toml::from_str(text).map_err(|e| Error::format(origin, e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text, &path.display().to_string())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configs always serialise")
    }

    pub fn validate(&self) -> Result<()> {
        if self.p == 0 || self.a == 0 || self.m == 0 || self.k == 0 {
            return Err(Error::Input(format!(
                "p, a, m, k must be positive, got {} {} {} {}",
                self.p, self.a, self.m, self.k
            )));
        }
        if self.horizon == 0 {
            return Err(Error::Input("horizon T must be at least 1".into()));
        }
        if self.runs == 0 {
            return Err(Error::Input("runs must be at least 1".into()));
        }
        if !self.outside_option.is_finite() {
            return Err(Error::Input("outside option must be finite".into()));
        }
        if !(self.noise_scale >= 0.0 && self.noise_scale.is_finite()) {
            return Err(Error::Input(format!(
                "noise scale must be finite and non-negative, got {}",
                self.noise_scale
            )));
        }
        if let Delta::Fixed(d) = self.delta {
            if !(d > 0.0 && d < 1.0) {
                return Err(Error::Input(format!("delta must lie in (0, 1), got {d}")));
            }
        }
        Ok(())
    }

    pub fn seed_of(&self, run: usize) -> u64 {
        self.seeds_base.wrapping_add(run as u64)
    }
}

/// `2 sqrt(4 t m k p a ln(4 t² m k p² a²)) + 2`
pub fn theoretical_bound(t: u64, p: u64, a: u64, m: u64, k: u64) -> Result<f64> {
    check_bound_args(t, p, a, m, k)?;
    let (t, p, a, m, k) = (t as f64, p as f64, a as f64, m as f64, k as f64);
    let log = (4.0 * t * t * m * k * p * p * a * a).ln();
    Ok(2.0 * (4.0 * t * m * k * p * a * log).sqrt() + 2.0)
}

/// The bound with its logarithmic factor dropped, `2 sqrt(4 t m k p a) + 2`.
pub fn theoretical_bound_no_log(t: u64, p: u64, a: u64, m: u64, k: u64) -> Result<f64> {
    check_bound_args(t, p, a, m, k)?;
    let (t, p, a, m, k) = (t as f64, p as f64, a as f64, m as f64, k as f64);
    Ok(2.0 * (4.0 * t * m * k * p * a).sqrt() + 2.0)
}

fn check_bound_args(t: u64, p: u64, a: u64, m: u64, k: u64) -> Result<()> {
    if [t, p, a, m, k].contains(&0) {
        return Err(Error::Input(format!(
            "bound arguments must be at least 1, got t={t} p={p} a={a} m={m} k={k}"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace {
    pub run_id: usize,
    pub seed: u64,
    pub matchings: Vec<String>,
    pub mi: Vec<f64>,
    pub cumulative: Vec<f64>,
    pub event_ok: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegretTrace {
    pub runs: Vec<RunTrace>,
    /// Mean cumulative instability across runs, index `t − 1`.
    pub mean: Vec<f64>,
    /// Population standard deviation across runs.
    pub std: Vec<f64>,
    pub bound: Vec<f64>,
}

fn run_one(config: &ExperimentConfig, run_id: usize) -> Result<RunTrace> {
    let seed = config.seed_of(run_id);
    let instance = generate_instance(
        config.p,
        config.a,
        config.m,
        config.k,
        config.generator,
        config.outside_option,
        seed,
    )?;
    let mut episode = EpisodeConfig::new(config.policy, config.horizon, seed);
    episode.delta = config.delta;
    episode.noise_scale = config.noise_scale;
    let records = run_episode(&instance, &episode)?;
    let mut total = 0.0;
    let mut trace = RunTrace {
        run_id,
        seed,
        matchings: Vec::with_capacity(records.len()),
        mi: Vec::with_capacity(records.len()),
        cumulative: Vec::with_capacity(records.len()),
        event_ok: Vec::with_capacity(records.len()),
    };
    for rec in records {
        total += rec.mi;
        trace.matchings.push(rec.matching.to_compact());
        trace.mi.push(rec.mi);
        trace.cumulative.push(total);
        trace.event_ok.push(rec.event_ok);
    }
    Ok(trace)
}

/// Mean and population standard deviation of each step across runs.
pub fn aggregate(runs: &[RunTrace]) -> (Vec<f64>, Vec<f64>) {
    let n = runs.len() as f64;
    let steps = runs.first().map_or(0, |r| r.cumulative.len());
    (0..steps)
        .map(|t| {
            let mean = runs.iter().map(|r| r.cumulative[t]).sum::<f64>() / n;
            let var = runs
                .iter()
                .map(|r| (r.cumulative[t] - mean).powi(2))
                .sum::<f64>()
                / n;
            (mean, var.sqrt())
        })
        .unzip()
}

/// Runs every episode of `config` in parallel, without touching the file system.
pub fn simulate(config: &ExperimentConfig) -> Result<RegretTrace> {
    config.validate()?;
    let runs = (0..config.runs)
        .into_par_iter()
        .map(|run| run_one(config, run))
        .collect::<Result<Vec<_>>>()?;
    let (mean, std) = aggregate(&runs);
    let bound = (1..=config.horizon as u64)
        .map(|t| {
            theoretical_bound(
                t,
                config.p as u64,
                config.a as u64,
                config.m as u64,
                config.k as u64,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RegretTrace {
        runs,
        mean,
        std,
        bound,
    })
}

pub fn run_file_name(run_id: usize) -> String {
    format!("run_{run_id:04}.csv")
}

pub const AGGREGATE_FILE: &str = "aggregate.csv";
pub const CONFIG_FILE: &str = "config.toml";

pub fn run_csv(run: &RunTrace) -> String {
    let mut out = String::from("run_id,t,matching,mi,cumulative_mi,event_ok\n");
    for t in 0..run.mi.len() {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            run.run_id,
            t + 1,
            run.matchings[t],
            run.mi[t],
            run.cumulative[t],
            run.event_ok[t]
        );
    }
    out
}

pub fn aggregate_csv(config: &ExperimentConfig, trace: &RegretTrace) -> Result<String> {
    let mut out = String::from("t,mean_cum_mi,std_cum_mi,bound");
    out.push_str(if config.bound_no_log { ",bound_no_log\n" } else { "\n" });
    for t in 0..trace.mean.len() {
        let _ = write!(out, "{},{},{},{}", t + 1, trace.mean[t], trace.std[t], trace.bound[t]);
        if config.bound_no_log {
            let b = theoretical_bound_no_log(
                t as u64 + 1,
                config.p as u64,
                config.a as u64,
                config.m as u64,
                config.k as u64,
            )?;
            let _ = write!(out, ",{b}");
        }
        out.push('\n');
    }
    Ok(out)
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Runs the experiment and writes per-run traces, the aggregate and the config echo.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RegretTrace> {
    config.validate()?;
    let dir = &config.output_dir;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let trace = simulate(config)?;
    trace
        .runs
        .par_iter()
        .try_for_each(|run| write_file(&dir.join(run_file_name(run.run_id)), &run_csv(run)))?;
    write_file(&dir.join(AGGREGATE_FILE), &aggregate_csv(config, &trace)?)?;
    write_file(&dir.join(CONFIG_FILE), &config.to_toml())?;
    Ok(trace)
}

/// Matching instability of the outcome described by three files.
pub fn audit(instance: &Path, matching: &Path, strategies: &Path) -> Result<InstabilityReport> {
    let instance = read_instance(instance)?;
    let matching = read_matching(matching)?;
    let strategies = read_strategies(strategies)?;
    matching_instability(&instance, &matching, &strategies)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bound_values() {
        let b = theoretical_bound(1, 1, 1, 1, 1).unwrap();
        // 2·sqrt(4 ln 4) + 2, evaluated independently
        assert!((b - 6.709640090061899).abs() < 1e-12);
        let big = theoretical_bound(1000, 2, 2, 2, 2).unwrap();
        assert!((big - 2228.2830297663463).abs() < 1e-9);
        assert!(theoretical_bound(2, 1, 1, 1, 1).unwrap() > b);
        assert!(matches!(theoretical_bound(0, 1, 1, 1, 1), Err(Error::Input(_))));
        assert_eq!(theoretical_bound_no_log(1, 1, 1, 1, 1).unwrap(), 6.0);
    }

    #[test]
    fn config_round_trips_through_toml() {
        let mut config = ExperimentConfig::new(2, 3, 2, 2, 100);
        config.delta = Delta::Fixed(0.05);
        config.output_dir = PathBuf::from("out");
        let back = ExperimentConfig::from_toml(&config.to_toml(), "mem").unwrap();
        assert_eq!(back, config);
    }

    #[test]
    fn config_defaults_and_errors() {
        let c = ExperimentConfig::from_toml("p = 2\na = 2\nm = 2\nk = 2\nT = 10\n", "c").unwrap();
        assert_eq!(c.runs, 50);
        assert_eq!(c.delta, Delta::Auto);
        assert_eq!(c.outside_option, -1.0);
        assert_eq!(c.policy, PolicyKind::SelfPlay);

        let err = ExperimentConfig::from_toml("p = 2\na = 2\nm = 2\nk = 2\nT = 10\nbogus = 1\n", "c.toml")
            .unwrap_err();
        assert!(err.to_string().contains("bogus"), "{err}");
        let err = ExperimentConfig::from_toml("p = 2\na = 2\nm = 2\nk = 2\nT = 0\n", "c").unwrap_err();
        assert!(matches!(err, Error::Input(_)));
        let err =
            ExperimentConfig::from_toml("p = 2\na = 2\nm = 2\nk = 2\nT = 5\ndelta = 2.0\n", "c").unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn single_run_aggregate_is_the_run() {
        let mut config = ExperimentConfig::new(2, 2, 2, 2, 10);
        config.runs = 1;
        config.noise_scale = 0.0;
        config.seeds_base = 42;
        let trace = simulate(&config).unwrap();
        assert_eq!(trace.mean, trace.runs[0].cumulative);
        assert!(trace.std.iter().all(|s| *s == 0.0));
    }
}
