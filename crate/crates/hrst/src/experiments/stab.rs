//! Stabilization probe: descendant sets of Poisson points near z₂ = (r+h; u)
//! should not react to resampling the configuration inside B(r); the
//! stability frequency should climb to 1 as the gap h grows, uniformly over
//! the tested base radii.

use std::collections::BTreeSet;

use super::{run_replications, ExperimentConfig, ExperimentReport, Row};
use crate::error::{Error, Result};
use crate::hypgeom::{distance, HPoint};
use crate::ppp::{resample_inside, sample_ball, PointCloud};
use crate::rst::{build, RadialTree};
use crate::stats;

/// Identity of a point by exact coordinates (bit patterns); outer points
/// keep their coordinates across inner resamples.
type PointKey = Vec<u64>;

fn key_of(p: &HPoint) -> PointKey {
    let mut k = vec![p.radius().to_bits()];
    k.extend(p.dir().iter().map(|x| x.to_bits()));
    k
}

fn descendant_keys(tree: &RadialTree, v: usize) -> BTreeSet<PointKey> {
    tree.descendants(v)
        .members
        .iter()
        .map(|&w| key_of(tree.point(w)))
        .collect()
}

fn find_point(cloud: &PointCloud, p: &HPoint) -> Option<usize> {
    let r = p.radius();
    let mut i = cloud.points.partition_point(|q| q.radius() < r);
    while i < cloud.points.len() && cloud.points[i].radius() == r {
        if cloud.points[i].dir() == p.dir() {
            return Some(i);
        }
        i += 1;
    }
    None
}

pub fn run(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let delta_prime = cfg.params.delta_prime.unwrap_or(0.3);
    let h_values = cfg.params.h_values.clone().unwrap_or(vec![1.0, 2.0, 3.0]);
    let resamples = cfg.params.resamples.unwrap_or(20).max(1);
    let max_r = cfg.levels.iter().copied().fold(0.0, f64::max);
    let max_h = h_values.iter().copied().fold(0.0, f64::max);
    if max_r + max_h + delta_prime + cfg.margin > cfg.horizon {
        return Err(Error::invalid(format!(
            "probe geometry censored: r + h + delta' + margin = {} exceeds horizon {}",
            max_r + max_h + delta_prime + cfg.margin,
            cfg.horizon
        )));
    }

    let axis: Vec<f64> = {
        let mut a = vec![0.0; cfg.d + 1];
        a[0] = 1.0;
        a
    };

    // stable[r][h], vacuous[r][h]
    type RepOut = (Vec<Vec<bool>>, Vec<Vec<bool>>);
    let per_rep = run_replications(cfg, |rep| -> Result<RepOut> {
        let cloud = sample_ball(cfg.d, cfg.lambda, cfg.horizon, cfg.rep_seed(rep))?;
        let tree = build(cloud)?;
        let mut stable = vec![vec![true; h_values.len()]; cfg.levels.len()];
        let mut vacuous = vec![vec![true; h_values.len()]; cfg.levels.len()];
        for (ri, &r) in cfg.levels.iter().enumerate() {
            // targets per h: points of the sample in B(z₂, δ′)
            let mut targets: Vec<Vec<usize>> = Vec::with_capacity(h_values.len());
            for &h in &h_values {
                let z2 = HPoint::new(r + h, axis.clone())?;
                let lo = tree
                    .cloud
                    .points
                    .partition_point(|q| q.radius() < r + h - delta_prime);
                let mut found = Vec::new();
                for (off, q) in tree.cloud.points[lo..].iter().enumerate() {
                    if q.radius() > r + h + delta_prime {
                        break;
                    }
                    if distance(q, &z2) < delta_prime {
                        found.push(lo + off);
                    }
                }
                targets.push(found);
            }
            if targets.iter().all(Vec::is_empty) {
                continue; // vacuously stable at every h for this r
            }
            let originals: Vec<Vec<BTreeSet<PointKey>>> = targets
                .iter()
                .map(|ts| ts.iter().map(|&v| descendant_keys(&tree, v)).collect())
                .collect();
            for j in 0..resamples {
                let seed = cfg.sub_seed(rep, ri as u64, j as u64);
                let recloud = resample_inside(&tree.cloud, r, seed)?;
                let retree = build(recloud)?;
                for (hi, ts) in targets.iter().enumerate() {
                    if ts.is_empty() {
                        continue;
                    }
                    vacuous[ri][hi] = false;
                    for (ti, &v) in ts.iter().enumerate() {
                        let Some(w) = find_point(&retree.cloud, tree.point(v)) else {
                            stable[ri][hi] = false;
                            continue;
                        };
                        if descendant_keys(&retree, w) != originals[hi][ti] {
                            stable[ri][hi] = false;
                        }
                    }
                }
            }
        }
        Ok((stable, vacuous))
    })?;

    let mut report = ExperimentReport::new(cfg.clone());
    let mut all_monotone = true;
    for (ri, &r) in cfg.levels.iter().enumerate() {
        let mut freqs = Vec::new();
        for (hi, &h) in h_values.iter().enumerate() {
            let stable_count = per_rep.iter().filter(|(s, _)| s[ri][hi]).count() as u64;
            let vacuous_count = per_rep.iter().filter(|(_, v)| v[ri][hi]).count() as u64;
            let n = cfg.replications as u64;
            let freq = stable_count as f64 / n as f64;
            let (lo, hi_ci) = stats::wilson_interval(stable_count, n, stats::Z_95);
            let mut row = Row::new(r);
            row.set("h", h);
            row.set("stability_freq", freq);
            row.set("wilson_low", lo);
            row.set("wilson_high", hi_ci);
            row.set("vacuous_fraction", vacuous_count as f64 / n as f64);
            report.rows.push(row);
            freqs.push(freq);
        }
        let monotone = freqs.windows(2).all(|w| w[1] >= w[0]);
        all_monotone &= monotone;
        report
            .summary
            .insert(format!("nondecreasing_r{r}"), f64::from(u8::from(monotone)));
        report
            .summary
            .insert(format!("freq_at_max_h_r{r}"), *freqs.last().unwrap());
    }
    report.summary.insert(
        "nondecreasing_all".into(),
        f64::from(u8::from(all_monotone)),
    );
    report.summary.insert("delta_prime".into(), delta_prime);
    report.summary.insert("resamples".into(), resamples as f64);
    Ok(report)
}
