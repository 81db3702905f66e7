//! Monte Carlo harness: seeded replications, per-level statistics with
//! confidence intervals, and one module per experiment kind.
//!
//! Replications run in parallel on independent RNG streams derived from the
//! master seed, and results are merged by replication index, so reports are
//! bit-identical across runs and thread schedules. Every reported estimate
//! carries an interval; nothing is reported bare.

mod density;
mod emptying;
mod levelcount;
mod mbd_moments;
mod stab;
mod straightness;

pub use emptying::EmptyingOutcome;

use std::collections::BTreeMap;
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::deviations::HorizonConfig;
use crate::error::{Error, Result};
use crate::ppp::SeedDescriptor;

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Levelcount,
    MbdMoments,
    DensityThick,
    Straightness,
    StabProbe,
    EmptyingDemo,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 6] = [
        ExperimentKind::Levelcount,
        ExperimentKind::MbdMoments,
        ExperimentKind::DensityThick,
        ExperimentKind::Straightness,
        ExperimentKind::StabProbe,
        ExperimentKind::EmptyingDemo,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::Levelcount => "levelcount",
            ExperimentKind::MbdMoments => "mbd_moments",
            ExperimentKind::DensityThick => "density_thick",
            ExperimentKind::Straightness => "straightness",
            ExperimentKind::StabProbe => "stab_probe",
            ExperimentKind::EmptyingDemo => "emptying_demo",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for ExperimentKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown experiment kind '{s}'")))
    }
}

/// Kind-specific knobs; unset fields fall back to the documented defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KindParams {
    /// Moment order for mbd_moments (default 2).
    pub p: Option<f64>,
    /// δ: ancestor-distance threshold (emptying eligibility, block badness).
    pub delta: Option<f64>,
    /// δ′: small-ball radius at z₂ (stabilization, emptying).
    pub delta_prime: Option<f64>,
    /// Gap values h for the stabilization probe (default [1,2,3]).
    pub h_values: Option<Vec<f64>>,
    /// Gap h for the emptying demo (default 2).
    pub h: Option<f64>,
    /// Fixed cone aperture θ for the emptying demo; bisected when unset.
    pub theta: Option<f64>,
    /// ε for the straightness profile (default 0.5).
    pub epsilon: Option<f64>,
    /// Cap multiplier κ for σ-proxies (default 1).
    pub kappa: Option<f64>,
    /// Resample count k per stabilization probe (default 20).
    pub resamples: Option<usize>,
    /// Horizon band width for trace crossings (default 0.25).
    pub trace_band: Option<f64>,
}

/// Full experiment configuration; together with the master seed it
/// determines the report bit-for-bit.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub d: usize,
    pub lambda: f64,
    pub horizon: f64,
    pub margin: f64,
    pub levels: Vec<f64>,
    pub replications: usize,
    pub master_seed: u64,
    #[serde(default)]
    pub params: KindParams,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.replications < 1 {
            return Err(Error::invalid("need at least one replication"));
        }
        if self.lambda < 0.0 || self.horizon <= 0.0 || self.d < 1 {
            return Err(Error::invalid("need lambda >= 0, horizon > 0, d >= 1"));
        }
        let max_level = self.horizon - self.margin;
        for &r in &self.levels {
            if !(1.0..=max_level).contains(&r) {
                return Err(Error::Censored {
                    level: r,
                    horizon: self.horizon,
                    margin: self.margin,
                });
            }
        }
        self.horizon_config()?.validate()
    }

    pub fn horizon_config(&self) -> Result<HorizonConfig> {
        let mut cfg = HorizonConfig::new(self.horizon, self.margin)?;
        if let Some(band) = self.params.trace_band {
            cfg.trace_band = band;
        }
        if let Some(k) = self.params.kappa {
            cfg.kappa = k;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// RNG stream for replication k's primary sample.
    pub fn rep_seed(&self, rep: u64) -> SeedDescriptor {
        SeedDescriptor::new(self.master_seed, rep)
    }

    /// RNG stream for auxiliary draws (resamples etc.) inside a replication.
    /// The tag/index pair keeps streams disjoint from the primary ones.
    pub fn sub_seed(&self, rep: u64, tag: u64, idx: u64) -> SeedDescriptor {
        SeedDescriptor::new(
            self.master_seed,
            (1 << 63) | (rep << 20) | ((tag & 0x3ff) << 10) | (idx & 0x3ff),
        )
    }
}

/// One per-level (or per-parameter) result row. Metric keys are sorted, so
/// serialization order is deterministic.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Row {
    pub level: f64,
    pub metrics: BTreeMap<String, f64>,
}

impl Row {
    pub fn new(level: f64) -> Self {
        Row {
            level,
            metrics: BTreeMap::new(),
        }
    }

    pub fn set(&mut self, key: &str, value: f64) -> &mut Self {
        self.metrics.insert(key.to_string(), value);
        self
    }

    pub fn get(&self, key: &str) -> Option<f64> {
        self.metrics.get(key).copied()
    }
}

/// Aggregated experiment output. `wall_clock_secs` is measured but excluded
/// from serialization so re-runs with the same config produce byte-identical
/// files.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub schema_version: u32,
    pub config: ExperimentConfig,
    pub rows: Vec<Row>,
    pub summary: BTreeMap<String, f64>,
    /// Stream indices used by the replications (master seed in config).
    pub rep_streams: Vec<u64>,
    /// Confidence level of every interval in rows/summary.
    pub ci_level: f64,
    #[serde(skip)]
    pub wall_clock_secs: f64,
}

impl ExperimentReport {
    fn new(config: ExperimentConfig) -> Self {
        let streams = (0..config.replications as u64).collect();
        ExperimentReport {
            schema_version: REPORT_SCHEMA_VERSION,
            config,
            rows: Vec::new(),
            summary: BTreeMap::new(),
            rep_streams: streams,
            ci_level: 0.95,
            wall_clock_secs: 0.0,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::invalid(format!("report parse: {e}")))
    }

    /// Per-level CSV with the config echoed into leading columns; metric
    /// columns are the sorted union over rows.
    pub fn to_csv(&self) -> String {
        let mut keys: Vec<&str> = Vec::new();
        for row in &self.rows {
            for k in row.metrics.keys() {
                if !keys.contains(&k.as_str()) {
                    keys.push(k);
                }
            }
        }
        keys.sort_unstable();
        let mut out = String::from("kind,d,lambda,horizon,margin,replications,master_seed,level");
        for k in &keys {
            out.push(',');
            out.push_str(k);
        }
        out.push('\n');
        for row in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}",
                self.config.kind,
                self.config.d,
                self.config.lambda,
                self.config.horizon,
                self.config.margin,
                self.config.replications,
                self.config.master_seed,
                row.level
            ));
            for k in &keys {
                out.push(',');
                if let Some(v) = row.metrics.get(*k) {
                    out.push_str(&format!("{v}"));
                }
            }
            out.push('\n');
        }
        out
    }
}

/// Runs every replication on its own stream, in parallel, and returns the
/// results ordered by replication index.
pub(crate) fn run_replications<T, F>(cfg: &ExperimentConfig, per_rep: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync + Send,
{
    (0..cfg.replications as u64)
        .into_par_iter()
        .map(per_rep)
        .collect()
}

/// Dispatches to the experiment module for the configured kind.
pub fn run(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let start = std::time::Instant::now();
    let mut report = match cfg.kind {
        ExperimentKind::Levelcount => levelcount::run(cfg)?,
        ExperimentKind::MbdMoments => mbd_moments::run(cfg)?,
        ExperimentKind::DensityThick => density::run(cfg)?,
        ExperimentKind::Straightness => straightness::run(cfg)?,
        ExperimentKind::StabProbe => stab::run(cfg)?,
        ExperimentKind::EmptyingDemo => emptying::run(cfg)?,
    };
    report.wall_clock_secs = start.elapsed().as_secs_f64();
    Ok(report)
}

/// Expands a grid of (λ, horizon) values into one config per combination and
/// merges all row sets into a single CSV (the config echo columns
/// distinguish the grid cells).
pub fn run_sweep(
    base: &ExperimentConfig,
    lambdas: &[f64],
    horizons: &[f64],
) -> Result<(Vec<ExperimentReport>, String)> {
    let mut reports = Vec::new();
    for &lambda in lambdas {
        for &horizon in horizons {
            let mut cfg = base.clone();
            cfg.lambda = lambda;
            cfg.horizon = horizon;
            reports.push(run(&cfg)?);
        }
    }
    let mut merged = String::new();
    for (i, rep) in reports.iter().enumerate() {
        let csv = rep.to_csv();
        if i == 0 {
            merged.push_str(&csv);
        } else if let Some(pos) = csv.find('\n') {
            merged.push_str(&csv[pos + 1..]);
        }
    }
    Ok((reports, merged))
}

pub(crate) fn add_mean_ci(row: &mut Row, prefix: &str, values: &[f64]) {
    let (mean, se) = crate::stats::mean_stderr(values);
    row.set(prefix, mean);
    row.set(&format!("{prefix}_stderr"), se);
    row.set(&format!("{prefix}_ci_low"), mean - crate::stats::Z_95 * se);
    row.set(&format!("{prefix}_ci_high"), mean + crate::stats::Z_95 * se);
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn small_cfg(kind: ExperimentKind) -> ExperimentConfig {
        ExperimentConfig {
            kind,
            d: 1,
            lambda: 1.0,
            horizon: 6.5,
            margin: 1.5,
            levels: vec![2.0, 3.0, 4.0],
            replications: 20,
            master_seed: 12345,
            params: KindParams::default(),
        }
    }

    #[test]
    fn config_rejects_censored_levels() {
        let mut cfg = small_cfg(ExperimentKind::Levelcount);
        cfg.levels = vec![2.0, 6.0];
        assert!(matches!(cfg.validate(), Err(Error::Censored { .. })));
        cfg.levels = vec![0.5];
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn reports_are_bit_identical_across_runs() {
        let cfg = small_cfg(ExperimentKind::Levelcount);
        let a = run(&cfg).unwrap();
        let b = run(&cfg).unwrap();
        assert_eq!(a.to_json(), b.to_json());
        assert_eq!(a.to_csv(), b.to_csv());
        let mut cfg2 = cfg.clone();
        cfg2.master_seed += 1;
        let c = run(&cfg2).unwrap();
        assert_ne!(a.to_json(), c.to_json());
    }

    #[test]
    fn report_json_roundtrip() {
        let cfg = small_cfg(ExperimentKind::Levelcount);
        let rep = run(&cfg).unwrap();
        let back = ExperimentReport::from_json(&rep.to_json()).unwrap();
        assert_eq!(back.to_json(), rep.to_json());
    }

    #[test]
    fn sweep_merges_rows_with_config_echo() {
        let mut cfg = small_cfg(ExperimentKind::Levelcount);
        cfg.replications = 5;
        let (reports, csv) = run_sweep(&cfg, &[0.5, 1.0], &[6.5]).unwrap();
        assert_eq!(reports.len(), 2);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 1 + 2 * cfg.levels.len());
        assert!(lines[1].starts_with("levelcount,1,0.5,"));
        assert!(lines[1 + cfg.levels.len()].starts_with("levelcount,1,1,"));
    }

    #[test]
    fn single_replication_gives_degenerate_but_valid_report() {
        let mut cfg = small_cfg(ExperimentKind::Levelcount);
        cfg.replications = 1;
        let rep = run(&cfg).unwrap();
        assert_eq!(rep.rows.len(), cfg.levels.len());
        // stderr is infinite with one replication; the file stays valid
        assert!(rep.rows[0].get("mean_count_stderr").unwrap().is_infinite());
        let _ = rep.to_json();
        let _ = rep.to_csv();
    }
}
