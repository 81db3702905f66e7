//! Level-set counts E[#L_r] and per-cap second moments.
//!
//! The count grows like e^{dr}; the regression of log mean count on r should
//! have slope ≈ d. Per covering cap of angular radius e^{−r}, the squared
//! crossing count has a uniformly bounded mean (no trend in r), which is
//! checked via a jackknife CI on the slope.

use super::{add_mean_ci, run_replications, ExperimentConfig, ExperimentReport, Row};
use crate::arcs::level_set;
use crate::covering::build_covering;
use crate::error::Result;
use crate::ppp::sample_ball;
use crate::rst::build;
use crate::stats;

pub fn run(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let coverings: Vec<_> = cfg
        .levels
        .iter()
        .map(|&r| build_covering(r, cfg.d))
        .collect::<Result<_>>()?;

    struct RepOut {
        counts: Vec<f64>,
        cap_sq: Vec<f64>,
    }

    let per_rep = run_replications(cfg, |rep| {
        let cloud = sample_ball(cfg.d, cfg.lambda, cfg.horizon, cfg.rep_seed(rep))?;
        let tree = build(cloud)?;
        let mut counts = Vec::with_capacity(cfg.levels.len());
        let mut cap_sq = Vec::with_capacity(cfg.levels.len());
        for (li, &r) in cfg.levels.iter().enumerate() {
            let crossings = level_set(&tree, r);
            counts.push(crossings.len() as f64);
            let cov = &coverings[li];
            let mut per_cap = vec![0u32; cov.len()];
            for c in &crossings {
                for m in cov.covering_caps(c.location.dir()) {
                    per_cap[m] += 1;
                }
            }
            let mean_sq = per_cap
                .iter()
                .map(|&k| (k as f64) * (k as f64))
                .sum::<f64>()
                / cov.len() as f64;
            cap_sq.push(mean_sq);
        }
        Ok(RepOut { counts, cap_sq })
    })?;

    let counts: Vec<Vec<f64>> = per_rep.iter().map(|r| r.counts.clone()).collect();
    let cap_sq: Vec<Vec<f64>> = per_rep.iter().map(|r| r.cap_sq.clone()).collect();

    let mut report = ExperimentReport::new(cfg.clone());
    for (li, &r) in cfg.levels.iter().enumerate() {
        let mut row = Row::new(r);
        let col: Vec<f64> = counts.iter().map(|c| c[li]).collect();
        add_mean_ci(&mut row, "mean_count", &col);
        let sq: Vec<f64> = cap_sq.iter().map(|c| c[li]).collect();
        add_mean_ci(&mut row, "cap_sq_mean", &sq);
        row.set("covering_size", coverings[li].len() as f64);
        report.rows.push(row);
    }

    if cfg.levels.len() >= 2 && cfg.replications >= 2 {
        let (slope, se) = stats::jackknife_slope(&cfg.levels, &counts, f64::ln);
        report.summary.insert("count_log_slope".into(), slope);
        report.summary.insert("count_log_slope_stderr".into(), se);
        let (s2, se2) = stats::jackknife_slope(&cfg.levels, &cap_sq, |x| x);
        report.summary.insert("cap_sq_slope".into(), s2);
        report.summary.insert("cap_sq_slope_stderr".into(), se2);
        report
            .summary
            .insert("cap_sq_slope_ci_low".into(), s2 - stats::Z_95 * se2);
        report
            .summary
            .insert("cap_sq_slope_ci_high".into(), s2 + stats::Z_95 * se2);
    }
    Ok(report)
}
