//! Moments of the maximal backward deviations summed over level sets:
//! E[Σ_{z∈L_r} MBD_r^{horizon}(z)^p] decays like e^{(d−p)r} (the e^{dr}
//! crossings each contribute ≈ e^{−pr}).

use super::{add_mean_ci, run_replications, ExperimentConfig, ExperimentReport, Row};
use crate::arcs::level_set;
use crate::deviations::mbd;
use crate::error::{Error, Result};
use crate::ppp::sample_ball;
use crate::rst::build;
use crate::stats;

pub fn run(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let p = cfg.params.p.unwrap_or(2.0);
    if p < 1.5 * cfg.d as f64 {
        return Err(Error::invalid(format!(
            "moment order p = {p} must be >= 3d/2 = {}",
            1.5 * cfg.d as f64
        )));
    }

    let sums = run_replications(cfg, |rep| {
        let cloud = sample_ball(cfg.d, cfg.lambda, cfg.horizon, cfg.rep_seed(rep))?;
        let tree = build(cloud)?;
        let mut out = Vec::with_capacity(cfg.levels.len());
        for &r in &cfg.levels {
            let mut sum = 0.0;
            for c in level_set(&tree, r) {
                sum += mbd(&tree, &c, cfg.horizon)?.powf(p);
            }
            out.push(sum);
        }
        Ok(out)
    })?;

    let mut report = ExperimentReport::new(cfg.clone());
    for (li, &r) in cfg.levels.iter().enumerate() {
        let mut row = Row::new(r);
        let col: Vec<f64> = sums.iter().map(|s| s[li]).collect();
        add_mean_ci(&mut row, "mbd_moment_sum", &col);
        report.rows.push(row);
    }
    if cfg.levels.len() >= 2 && cfg.replications >= 2 {
        let (slope, se) = stats::jackknife_slope(&cfg.levels, &sums, f64::ln);
        report.summary.insert("decay_slope".into(), slope);
        report.summary.insert("decay_slope_stderr".into(), se);
        report
            .summary
            .insert("predicted_slope".into(), cfg.d as f64 - p);
    }
    report.summary.insert("p".into(), p);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::super::{ExperimentConfig, ExperimentKind, KindParams};
    use crate::arcs::level_set;
    use crate::deviations::mbd;
    use crate::hypgeom::HPoint;
    use crate::ppp::{PointCloud, SeedDescriptor};
    use crate::rst::build;

    #[test]
    fn radial_chain_contributes_zero() {
        let mut points = vec![
            HPoint::from_angle(1.0, 0.0),
            HPoint::from_angle(2.5, 0.0),
            HPoint::from_angle(4.0, 0.0),
        ];
        points.sort_by(|a, b| a.radius().total_cmp(&b.radius()));
        let tree = build(PointCloud {
            d: 1,
            lambda: 0.0,
            radius: 5.0,
            seed: SeedDescriptor::new(0, 0),
            points,
        })
        .unwrap();
        for r in [1.5, 2.0, 3.0] {
            for c in level_set(&tree, r) {
                assert!(mbd(&tree, &c, 5.0).unwrap() < 1e-12);
            }
        }
    }

    #[test]
    fn rejects_too_small_moment_order() {
        let cfg = ExperimentConfig {
            kind: ExperimentKind::MbdMoments,
            d: 2,
            lambda: 1.0,
            horizon: 5.0,
            margin: 1.5,
            levels: vec![2.0],
            replications: 2,
            master_seed: 1,
            params: KindParams {
                p: Some(1.0),
                ..KindParams::default()
            },
        };
        assert!(super::super::run(&cfg).is_err());
    }
}
