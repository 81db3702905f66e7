//! Density of thick traces along level sets: the fraction of L_r crossings
//! whose subtree survives to the horizon band with at least two crossings,
//! the σ-proxy mass, and the Cauchy–Schwarz lower-bound proxy
//! (Σσ)²/(Σσ²) ≤ #{σ > 0}.

use super::{add_mean_ci, run_replications, ExperimentConfig, ExperimentReport, Row};
use crate::arcs::level_set;
use crate::deviations::{cap_union_measure, trace_estimate_for_crossing};
use crate::error::Result;
use crate::ppp::sample_ball;
use crate::rst::build;
use crate::stats;

struct RepOut {
    /// per level: (crossings, thick, survived, Σσ, Σσ², cs_bound)
    levels: Vec<(f64, f64, f64, f64, f64, f64)>,
    /// σ-measure of the union of caps around every horizon crossing of the
    /// whole tree (the "coverage" the per-crossing proxies must dominate).
    coverage: f64,
}

pub fn run(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let hcfg = cfg.horizon_config()?;
    let per_rep = run_replications(cfg, |rep| {
        let cloud = sample_ball(cfg.d, cfg.lambda, cfg.horizon, cfg.rep_seed(rep))?;
        let tree = build(cloud)?;
        let horizon_crossings = level_set(&tree, hcfg.trace_level());
        let all_dirs: Vec<Vec<f64>> = horizon_crossings
            .iter()
            .map(|c| c.location.dir().to_vec())
            .collect();
        let coverage = cap_union_measure(&all_dirs, hcfg.cap_radius(), cfg.d, 0.0);
        let mut levels = Vec::with_capacity(cfg.levels.len());
        for &r in &cfg.levels {
            let crossings = level_set(&tree, r);
            let mut thick = 0.0;
            let mut survived = 0.0;
            let mut sum_sigma = 0.0;
            let mut sum_sigma_sq = 0.0;
            for c in &crossings {
                let est = trace_estimate_for_crossing(&tree, c, &hcfg)?;
                if est.is_thick() {
                    thick += 1.0;
                }
                if est.survived {
                    survived += 1.0;
                }
                sum_sigma += est.sigma_proxy;
                sum_sigma_sq += est.sigma_proxy * est.sigma_proxy;
            }
            let cs = if sum_sigma_sq > 0.0 {
                sum_sigma * sum_sigma / sum_sigma_sq
            } else {
                0.0
            };
            levels.push((
                crossings.len() as f64,
                thick,
                survived,
                sum_sigma,
                sum_sigma_sq,
                cs,
            ));
        }
        Ok(RepOut { levels, coverage })
    })?;

    let mut report = ExperimentReport::new(cfg.clone());
    for (li, &r) in cfg.levels.iter().enumerate() {
        let mut row = Row::new(r);
        let counts: Vec<f64> = per_rep.iter().map(|o| o.levels[li].0).collect();
        add_mean_ci(&mut row, "mean_count", &counts);
        // per-replication fractions (reps without crossings carry no
        // information about the fraction and are skipped)
        let fractions: Vec<f64> = per_rep
            .iter()
            .filter(|o| o.levels[li].0 > 0.0)
            .map(|o| o.levels[li].1 / o.levels[li].0)
            .collect();
        if !fractions.is_empty() {
            add_mean_ci(&mut row, "thick_fraction", &fractions);
        }
        let survived_fracs: Vec<f64> = per_rep
            .iter()
            .filter(|o| o.levels[li].0 > 0.0)
            .map(|o| o.levels[li].2 / o.levels[li].0)
            .collect();
        if !survived_fracs.is_empty() {
            add_mean_ci(&mut row, "survived_fraction", &survived_fracs);
        }
        // pooled Wilson interval over all crossings (correlated within a
        // replication; reported alongside the replication-level CI)
        let total: f64 = per_rep.iter().map(|o| o.levels[li].0).sum();
        let thick_total: f64 = per_rep.iter().map(|o| o.levels[li].1).sum();
        let (wlo, whi) = stats::wilson_interval(thick_total as u64, total as u64, stats::Z_95);
        row.set("thick_pooled_wilson_low", wlo);
        row.set("thick_pooled_wilson_high", whi);
        let sigma_sums: Vec<f64> = per_rep.iter().map(|o| o.levels[li].3).collect();
        add_mean_ci(&mut row, "sum_sigma", &sigma_sums);
        let cs: Vec<f64> = per_rep.iter().map(|o| o.levels[li].5).collect();
        add_mean_ci(&mut row, "cs_lower_bound", &cs);
        report.rows.push(row);
    }
    let coverage: Vec<f64> = per_rep.iter().map(|o| o.coverage).collect();
    let (cov_mean, cov_se) = stats::mean_stderr(&coverage);
    report.summary.insert("coverage_mean".into(), cov_mean);
    report.summary.insert("coverage_stderr".into(), cov_se);
    Ok(report)
}
