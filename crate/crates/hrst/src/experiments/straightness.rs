//! Straightness: the fraction of vertices per radius bin whose descendant
//! set spills out of the cone of aperture e^{−(1−ε)r}; the fraction should
//! fall as the base radius grows.

use super::{add_mean_ci, run_replications, ExperimentConfig, ExperimentReport, Row};
use crate::error::Result;
use crate::ppp::sample_ball;
use crate::rst::build;

pub fn run(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let epsilon = cfg.params.epsilon.unwrap_or(0.5);
    // levels are bin left edges of unit-width bins
    let mut edges: Vec<f64> = cfg.levels.clone();
    edges.push(cfg.levels.last().unwrap() + 1.0);
    let max_base = cfg.horizon - cfg.margin;

    let per_rep = run_replications(cfg, |rep| {
        let cloud = sample_ball(cfg.d, cfg.lambda, cfg.horizon, cfg.rep_seed(rep))?;
        let tree = build(cloud)?;
        let bins = tree.straightness_profile(epsilon, &edges, max_base)?;
        Ok(bins
            .iter()
            .map(|b| (b.vertices as f64, b.flagged as f64))
            .collect::<Vec<_>>())
    })?;

    let mut report = ExperimentReport::new(cfg.clone());
    let mut means = Vec::new();
    for (li, &r) in cfg.levels.iter().enumerate() {
        let mut row = Row::new(r);
        let fractions: Vec<f64> = per_rep
            .iter()
            .filter(|b| b[li].0 > 0.0)
            .map(|b| b[li].1 / b[li].0)
            .collect();
        if !fractions.is_empty() {
            add_mean_ci(&mut row, "violation_fraction", &fractions);
            means.push(row.get("violation_fraction").unwrap());
        } else {
            means.push(f64::NAN);
        }
        let vertices: Vec<f64> = per_rep.iter().map(|b| b[li].0).collect();
        add_mean_ci(&mut row, "vertices", &vertices);
        report.rows.push(row);
    }
    let decreasing = means
        .windows(2)
        .all(|w| w[0].is_nan() || w[1].is_nan() || w[1] < w[0]);
    report.summary.insert(
        "strictly_decreasing".into(),
        f64::from(u8::from(decreasing)),
    );
    report.summary.insert("epsilon".into(), epsilon);
    Ok(report)
}
