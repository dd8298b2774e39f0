//! Experiment driver: drop loop, rate CDFs and CSV output.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::bounds::{se_lb, sinr_dl_lb, sinr_ul_lb, upper_bounds};
use crate::config::SystemConfig;
use crate::deployment::UserKind;
use crate::error::{Error, Result};
use crate::network::Network;

/// Spectral efficiencies (bit/s/Hz) and rates (bit/s) of one user in one drop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateReport {
    pub drop_index: usize,
    pub user: usize,
    pub kind: UserKind,
    pub se_dl_lb: f64,
    pub se_ul_lb: f64,
    /// Monte-Carlo upper bounds, absent when no fading trials were run.
    pub se_dl_ub: Option<f64>,
    pub se_ul_ub: Option<f64>,
    pub ub_std_err_dl: Option<f64>,
    pub ub_std_err_ul: Option<f64>,
    pub bandwidth: f64,
}

impl RateReport {
    pub fn rate(&self, direction: Direction, bound: Bound) -> Option<f64> {
        let se = match (direction, bound) {
            (Direction::Dl, Bound::Lb) => Some(self.se_dl_lb),
            (Direction::Ul, Bound::Lb) => Some(self.se_ul_lb),
            (Direction::Dl, Bound::Ub) => self.se_dl_ub,
            (Direction::Ul, Bound::Ub) => self.se_ul_ub,
        };
        se.map(|s| s * self.bandwidth)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Population {
    Gue,
    Uav,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    Dl,
    Ul,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Bound {
    Lb,
    Ub,
}

impl Population {
    pub const ALL: [Population; 2] = [Population::Gue, Population::Uav];

    fn matches(self, kind: UserKind) -> bool {
        matches!(
            (self, kind),
            (Population::Gue, UserKind::Gue) | (Population::Uav, UserKind::Uav)
        )
    }
}

impl Direction {
    pub const ALL: [Direction; 2] = [Direction::Dl, Direction::Ul];
}

impl Bound {
    pub const ALL: [Bound; 2] = [Bound::Lb, Bound::Ub];
}

impl fmt::Display for Population {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Population::Gue => "gue",
            Population::Uav => "uav",
        })
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::Dl => "dl",
            Direction::Ul => "ul",
        })
    }
}

impl fmt::Display for Bound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Bound::Lb => "lb",
            Bound::Ub => "ub",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub n_drops: usize,
    pub n_fading_trials: usize,
    pub seed: u64,
    /// Drop-major, users in network order within a drop.
    pub reports: Vec<RateReport>,
}

impl ExperimentResult {
    /// Sorted rates (bit/s) of one population, direction and bound.
    pub fn cdf_samples(
        &self,
        population: Population,
        direction: Direction,
        bound: Bound,
    ) -> Vec<f64> {
        let mut v: Vec<f64> = self
            .reports
            .iter()
            .filter(|r| population.matches(r.kind))
            .filter_map(|r| r.rate(direction, bound))
            .collect();
        v.sort_by(f64::total_cmp);
        v
    }
}

/// Evaluates every user of one realized drop.
pub fn evaluate_drop(
    net: &Network,
    bandwidth: f64,
    n_fading_trials: usize,
    seed: u64,
    drop_index: usize,
) -> Result<Vec<RateReport>> {
    let ub = if n_fading_trials > 0 {
        Some(upper_bounds(net, n_fading_trials, seed, drop_index)?)
    } else {
        None
    };
    (0..net.n_users())
        .map(|k| {
            Ok(RateReport {
                drop_index,
                user: k,
                kind: net.user_kinds[k],
                se_dl_lb: se_lb(sinr_dl_lb(net, k)?, net.data_fraction),
                se_ul_lb: se_lb(sinr_ul_lb(net, k)?, net.data_fraction),
                se_dl_ub: ub.as_ref().map(|u| u.dl[k].mean),
                se_ul_ub: ub.as_ref().map(|u| u.ul[k].mean),
                ub_std_err_dl: ub.as_ref().map(|u| u.dl[k].std_err),
                ub_std_err_ul: ub.as_ref().map(|u| u.ul[k].std_err),
                bandwidth,
            })
        })
        .collect()
}

/// Runs `n_drops` independent drops in parallel. Results depend only on the
/// inputs, not on the number of worker threads.
pub fn run_experiment(
    cfg: &SystemConfig,
    n_drops: usize,
    n_fading_trials: usize,
    seed: u64,
) -> Result<ExperimentResult> {
    cfg.validate()?;
    if n_drops == 0 {
        return Err(Error::Config("at least one drop is required".into()));
    }
    let per_drop: Vec<Vec<RateReport>> = (0..n_drops)
        .into_par_iter()
        .map(|d| {
            let run = || {
                let (_, net) = Network::realize(cfg, seed, d)?;
                evaluate_drop(&net, cfg.bandwidth, n_fading_trials, seed, d)
            };
            run().map_err(|e| e.in_drop(d))
        })
        .collect::<Result<_>>()?;
    log::info!("finished {n_drops} drops");
    Ok(ExperimentResult {
        n_drops,
        n_fading_trials,
        seed,
        reports: per_drop.into_iter().flatten().collect(),
    })
}

/// Linear-interpolation quantile of sorted samples, `q` in [0, 1].
pub fn percentile(sorted: &[f64], q: f64) -> Result<f64> {
    if sorted.is_empty() {
        return Err(Error::EmptySamples);
    }
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::Config(format!("quantile {q} outside [0, 1]")));
    }
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    Ok(sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64))
}

/// `(x_i, (i+1)/n)` for sorted samples.
pub fn empirical_cdf(sorted: &[f64]) -> Vec<(f64, f64)> {
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| (x, (i + 1) as f64 / n))
        .collect()
}

pub fn cdf_file_name(population: Population, direction: Direction, bound: Bound) -> String {
    format!("cdf_{population}_{direction}_{bound}.csv")
}

pub const SUMMARY_FILE: &str = "summary.csv";

/// One row of the percentile summary.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub population: String,
    pub direction: String,
    pub bound: String,
    pub samples: usize,
    /// 5th percentile, the 95%-likely rate.
    pub p5_bps: Option<f64>,
    pub median_bps: Option<f64>,
    pub mean_bps: Option<f64>,
    pub note: String,
}

pub const SUMMARY_HEADER: [&str; 8] = [
    "population",
    "direction",
    "bound",
    "samples",
    "p5_bps",
    "median_bps",
    "mean_bps",
    "note",
];

fn summary_row(
    population: Population,
    direction: Direction,
    bound: Bound,
    sorted: &[f64],
    note: &str,
) -> SummaryRow {
    let stat = |q| percentile(sorted, q).ok();
    SummaryRow {
        population: population.to_string(),
        direction: direction.to_string(),
        bound: bound.to_string(),
        samples: sorted.len(),
        p5_bps: stat(0.05),
        median_bps: stat(0.5),
        mean_bps: (!sorted.is_empty()).then(|| sorted.iter().sum::<f64>() / sorted.len() as f64),
        note: note.to_string(),
    }
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(|v| format!("{v:e}")).unwrap_or_default()
}

/// Writes one CDF file per (population, direction, bound) and `summary.csv`
/// into `dir`. Empty populations get no CDF file and a note in the summary.
/// Returns the paths written.
pub fn emit_cdf(result: &ExperimentResult, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let mut rows = Vec::new();
    for population in Population::ALL {
        for direction in Direction::ALL {
            for bound in Bound::ALL {
                let sorted = result.cdf_samples(population, direction, bound);
                let note = if !sorted.is_empty() {
                    let path = dir.join(cdf_file_name(population, direction, bound));
                    write_cdf(&path, &sorted)?;
                    written.push(path);
                    ""
                } else if bound == Bound::Ub && result.n_fading_trials == 0 {
                    "no fading trials"
                } else {
                    "empty population"
                };
                rows.push(summary_row(population, direction, bound, &sorted, note));
            }
        }
    }
    let path = dir.join(SUMMARY_FILE);
    write_summary(&path, &rows)?;
    written.push(path);
    Ok(written)
}

fn write_cdf(path: &Path, sorted: &[f64]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["rate_bps", "cdf"])?;
    for (x, p) in empirical_cdf(sorted) {
        // `{:e}` is the shortest round-trip representation.
        w.write_record([format!("{x:e}"), format!("{p:e}")])?;
    }
    w.flush()?;
    Ok(())
}

fn write_summary(path: &Path, rows: &[SummaryRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(SUMMARY_HEADER)?;
    for r in rows {
        w.write_record([
            r.population.clone(),
            r.direction.clone(),
            r.bound.clone(),
            r.samples.to_string(),
            fmt_opt(r.p5_bps),
            fmt_opt(r.median_bps),
            fmt_opt(r.mean_bps),
            r.note.clone(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Parses a CDF file written by [`emit_cdf`].
pub fn read_cdf(path: &Path) -> Result<Vec<(f64, f64)>> {
    let mut r = csv::Reader::from_path(path)?;
    let header = r.headers()?.clone();
    if header.iter().collect::<Vec<_>>() != ["rate_bps", "cdf"] {
        return Err(Error::Config(format!(
            "{}: unexpected header",
            path.display()
        )));
    }
    let parse = |s: &str| {
        s.parse::<f64>()
            .map_err(|e| Error::Config(format!("{}: bad number {s:?}: {e}", path.display())))
    };
    r.records()
        .map(|rec| {
            let rec = rec?;
            Ok((parse(&rec[0])?, parse(&rec[1])?))
        })
        .collect()
}

/// Recomputes the summary from the CDF files in `dir`.
pub fn summarize(dir: &Path) -> Result<Vec<SummaryRow>> {
    if !dir.is_dir() {
        return Err(Error::Config(format!(
            "{} is not a directory",
            dir.display()
        )));
    }
    let mut rows = Vec::new();
    for population in Population::ALL {
        for direction in Direction::ALL {
            for bound in Bound::ALL {
                let path = dir.join(cdf_file_name(population, direction, bound));
                let (sorted, note) = if path.exists() {
                    (
                        read_cdf(&path)?
                            .into_iter()
                            .map(|(x, _)| x)
                            .collect::<Vec<_>>(),
                        "",
                    )
                } else {
                    (Vec::new(), "missing")
                };
                rows.push(summary_row(population, direction, bound, &sorted, note));
            }
        }
    }
    Ok(rows)
}
