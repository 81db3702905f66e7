//! Re-parenting by emptying: delete the Poisson points of
//! U = (B(r+h+δ′) \ (B(r) ∪ B(z₂,δ′))) ∩ Cone(u, θ) and the unique
//! surviving point z near z₂ reconnects to the G(δ) vertex z₁ = (r; u),
//! attaching z's horizon trace to the subtree of z₀.
//!
//! A replication is eligible when it exhibits the event's ingredients: a
//! G(δ) descendant z₁ of z₀ in the level band, exactly one Poisson point z
//! in B(z₂,δ′), z surviving to the horizon band, and z's proper descendants
//! all outside B(r+h+δ′) (checked exactly on the built tree). The cone
//! aperture θ is bisected to the smallest value at which the re-parenting
//! succeeds; deleting more points only removes competitors, so success is
//! monotone in θ.

use serde::Serialize;

use super::{run_replications, ExperimentConfig, ExperimentReport, Row};
use crate::deviations::{subtree_crossings, trace_estimate, HorizonConfig};
use crate::error::{Error, Result};
use crate::hypgeom::{angle_between_dirs, distance, HPoint};
use crate::ppp::PointCloud;
use crate::rst::{build, RadialTree};
use crate::stats;

/// Per-replication outcome of the demo.
#[derive(Debug, Clone, Serialize)]
pub struct EmptyingOutcome {
    pub eligible: bool,
    /// Re-parenting A(z) = z₁ held at the bisected (or fixed) aperture.
    pub success: bool,
    /// Smallest succeeding aperture found by bisection (NaN if not run).
    pub theta: f64,
    /// z's horizon trace ended up inside z₀'s subtree after the rebuild.
    pub trace_attached: bool,
    /// Number of points deleted at the reported aperture.
    pub deleted: usize,
}

struct Candidate {
    z1: usize,
    z: usize,
    r: f64,
}

pub fn run(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let delta = cfg.params.delta.unwrap_or(0.9);
    let delta_prime = cfg.params.delta_prime.unwrap_or(0.25);
    if delta_prime >= delta / 3.0 {
        return Err(Error::invalid(format!(
            "emptying needs delta' < delta/3, got {delta_prime} vs {delta}"
        )));
    }
    let h = cfg.params.h.unwrap_or(2.0);
    let hcfg = cfg.horizon_config()?;
    let (band_lo, band_hi) = (
        cfg.levels.first().copied().unwrap_or(2.0),
        cfg.levels.last().copied().unwrap_or(2.0),
    );
    if band_hi + h + delta_prime > hcfg.max_base_level() {
        return Err(Error::invalid(format!(
            "emptying band censored: top z radius {} exceeds horizon - margin = {}",
            band_hi + h + delta_prime,
            hcfg.max_base_level()
        )));
    }
    let r0 = 0.5;
    let u0 = {
        let mut a = vec![0.0; cfg.d + 1];
        a[0] = 1.0;
        a
    };

    let outcomes = run_replications(cfg, |rep| {
        let cloud = crate::ppp::sample_ball(cfg.d, cfg.lambda, cfg.horizon, cfg.rep_seed(rep))?;
        let tree = build(cloud)?;
        Ok(run_one(
            &tree,
            &hcfg,
            r0,
            &u0,
            delta,
            delta_prime,
            h,
            band_lo,
            band_hi,
            cfg.params.theta,
        ))
    })?;

    let mut report = ExperimentReport::new(cfg.clone());
    let eligible: Vec<&EmptyingOutcome> = outcomes.iter().filter(|o| o.eligible).collect();
    let successes = eligible.iter().filter(|o| o.success).count();
    let attached = eligible.iter().filter(|o| o.trace_attached).count();
    let thetas: Vec<f64> = eligible
        .iter()
        .filter(|o| o.theta.is_finite())
        .map(|o| o.theta)
        .collect();
    let n = cfg.replications as u64;
    let (elo, ehi) = stats::wilson_interval(eligible.len() as u64, n, stats::Z_95);
    let mut row = Row::new(band_lo);
    row.set("eligible", eligible.len() as f64);
    row.set("eligibility_freq", eligible.len() as f64 / n as f64);
    row.set("eligibility_wilson_low", elo);
    row.set("eligibility_wilson_high", ehi);
    row.set("successes", successes as f64);
    row.set(
        "success_rate",
        if eligible.is_empty() {
            f64::NAN
        } else {
            successes as f64 / eligible.len() as f64
        },
    );
    row.set(
        "trace_attached_rate",
        if eligible.is_empty() {
            f64::NAN
        } else {
            attached as f64 / eligible.len() as f64
        },
    );
    if !thetas.is_empty() {
        let (tm, tse) = stats::mean_stderr(&thetas);
        row.set("theta_mean", tm);
        row.set("theta_stderr", tse);
    }
    report.rows.push(row);
    report
        .summary
        .insert("eligible".into(), eligible.len() as f64);
    report.summary.insert("successes".into(), successes as f64);
    report.summary.insert("delta".into(), delta);
    report.summary.insert("delta_prime".into(), delta_prime);
    report.summary.insert("h".into(), h);
    Ok(report)
}

#[allow(clippy::too_many_arguments)]
fn run_one(
    tree: &RadialTree,
    hcfg: &HorizonConfig,
    r0: f64,
    u0: &[f64],
    delta: f64,
    delta_prime: f64,
    h: f64,
    band_lo: f64,
    band_hi: f64,
    fixed_theta: Option<f64>,
) -> EmptyingOutcome {
    let none = EmptyingOutcome {
        eligible: false,
        success: false,
        theta: f64::NAN,
        trace_attached: false,
        deleted: 0,
    };
    if tree.is_empty() {
        return none;
    }
    // z₀: the Poisson point closest to (r0; u0)
    let probe = HPoint::new(r0, u0.to_vec()).expect("probe point");
    let z0 = (0..tree.len())
        .min_by(|&a, &b| {
            distance(tree.point(a), &probe).total_cmp(&distance(tree.point(b), &probe))
        })
        .expect("nonempty");
    // G(δ) candidates inside the level band, in deterministic order
    let mut candidates: Vec<usize> = tree
        .descendants(z0)
        .members
        .into_iter()
        .filter(|&v| {
            let r = tree.point(v).radius();
            (band_lo..=band_hi).contains(&r) && tree.ancestor_distance[v] >= delta
        })
        .collect();
    candidates.sort_by(|&a, &b| {
        tree.point(a)
            .radius()
            .total_cmp(&tree.point(b).radius())
            .then(a.cmp(&b))
    });

    let Some(cand) = find_eligible(tree, hcfg, &candidates, delta_prime, h) else {
        return none;
    };

    // success is monotone in θ: deleting more of U only removes competitors
    let success_at = |theta: f64| -> Option<(RadialTree, usize, usize)> {
        let (newtree, deleted) =
            delete_and_rebuild(tree, cand.r, h, delta_prime, theta, cand.z1, cand.z);
        let z_new = find_index(&newtree.cloud, tree.point(cand.z))?;
        let z1_new = find_index(&newtree.cloud, tree.point(cand.z1))?;
        (newtree.parent[z_new] == Some(z1_new)).then_some((newtree, z_new, deleted))
    };

    let theta = match fixed_theta {
        Some(t) => t,
        None => {
            if success_at(std::f64::consts::PI).is_none() {
                return EmptyingOutcome {
                    eligible: true,
                    success: false,
                    theta: f64::NAN,
                    trace_attached: false,
                    deleted: 0,
                };
            }
            let mut lo = 0.0f64;
            let mut hi = std::f64::consts::PI;
            while hi - lo > 0.01 {
                let mid = 0.5 * (lo + hi);
                if success_at(mid).is_some() {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            hi
        }
    };
    match success_at(theta) {
        Some((newtree, z_new, deleted)) => {
            let z0_new = find_index(&newtree.cloud, tree.point(z0));
            let trace_attached = z0_new.is_some_and(|z0n| {
                let z_dirs = subtree_crossings(&newtree, z_new, hcfg.trace_level());
                let z0_dirs = subtree_crossings(&newtree, z0n, hcfg.trace_level());
                let z0_children: std::collections::BTreeSet<usize> =
                    z0_dirs.iter().map(|c| c.child).collect();
                !z_dirs.is_empty() && z_dirs.iter().all(|c| z0_children.contains(&c.child))
            });
            EmptyingOutcome {
                eligible: true,
                success: true,
                theta,
                trace_attached,
                deleted,
            }
        }
        None => EmptyingOutcome {
            eligible: true,
            success: false,
            theta,
            trace_attached: false,
            deleted: 0,
        },
    }
}

fn find_eligible(
    tree: &RadialTree,
    hcfg: &HorizonConfig,
    candidates: &[usize],
    delta_prime: f64,
    h: f64,
) -> Option<Candidate> {
    for &z1 in candidates {
        let r = tree.point(z1).radius();
        let z2 = HPoint::new(r + h, tree.point(z1).dir().to_vec()).expect("z2");
        // unique Poisson point in B(z₂, δ′)
        let lo = tree
            .cloud
            .points
            .partition_point(|q| q.radius() < r + h - delta_prime);
        let mut inside = Vec::new();
        for (off, q) in tree.cloud.points[lo..].iter().enumerate() {
            if q.radius() > r + h + delta_prime {
                break;
            }
            if distance(q, &z2) < delta_prime {
                inside.push(lo + off);
            }
        }
        let [z] = inside[..] else { continue };
        // z must survive to the horizon band
        let Ok(est) = trace_estimate(tree, z, hcfg) else {
            continue;
        };
        if !est.survived {
            continue;
        }
        // proper descendants of z all outside B(r+h+δ′), checked exactly
        let cutoff = r + h + delta_prime;
        let ok = tree
            .descendants(z)
            .members
            .iter()
            .all(|&w| w == z || tree.point(w).radius() > cutoff);
        if ok {
            return Some(Candidate { z1, z, r });
        }
    }
    None
}

/// Deletes N ∩ U(r, h, δ′, θ) and rebuilds. The annulus inner bound is
/// strict, so z₁ (radius exactly r) survives; z is kept by its ball.
fn delete_and_rebuild(
    tree: &RadialTree,
    r: f64,
    h: f64,
    delta_prime: f64,
    theta: f64,
    z1: usize,
    z: usize,
) -> (RadialTree, usize) {
    let axis = tree.point(z1).dir();
    let z2 = HPoint::new(r + h, axis.to_vec()).expect("z2");
    let outer = r + h + delta_prime;
    let mut drop = Vec::new();
    for (i, p) in tree.cloud.points.iter().enumerate() {
        if i == z1 || i == z {
            continue;
        }
        let rho = p.radius();
        if rho > r
            && rho < outer
            && angle_between_dirs(p.dir(), axis) <= theta
            && distance(p, &z2) >= delta_prime
        {
            drop.push(i);
        }
    }
    let deleted = drop.len();
    let cloud = tree.cloud.without_indices(&drop);
    (
        build(cloud).expect("deletion keeps points distinct"),
        deleted,
    )
}

fn find_index(cloud: &PointCloud, p: &HPoint) -> Option<usize> {
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

#[cfg(test)]
mod tests {
    use super::super::{ExperimentConfig, ExperimentKind, KindParams};
    use crate::ppp::{sample_ball, SeedDescriptor};
    use crate::rst::build;

    #[test]
    fn empty_u_rebuild_is_identity() {
        // θ = 0 aperture with the two protected points: nothing deleted
        let cloud = sample_ball(1, 1.0, 6.0, SeedDescriptor::new(404, 0)).unwrap();
        let tree = build(cloud).unwrap();
        let (newtree, deleted) = super::delete_and_rebuild(&tree, 2.0, 1.0, 0.05, 0.0, 0, 0);
        // aperture 0 still matches points exactly on the axis (angle = 0);
        // none of the sampled points sit exactly there
        assert_eq!(deleted, 0);
        assert_eq!(newtree.parent, tree.parent);
    }

    #[test]
    fn demo_finds_eligible_replications_and_succeeds() {
        let cfg = ExperimentConfig {
            kind: ExperimentKind::EmptyingDemo,
            d: 1,
            lambda: 1.0,
            horizon: 10.0,
            margin: 2.0,
            levels: vec![2.0, 5.5],
            replications: 12,
            master_seed: 99,
            params: KindParams {
                delta: Some(0.9),
                delta_prime: Some(0.25),
                h: Some(2.0),
                ..KindParams::default()
            },
        };
        let rep = super::super::run(&cfg).unwrap();
        let eligible = rep.summary["eligible"];
        let successes = rep.summary["successes"];
        assert!(eligible >= 1.0, "want at least one eligible replication");
        assert_eq!(successes, eligible, "re-parenting must always succeed");
        let row = &rep.rows[0];
        assert!(row.get("theta_mean").unwrap() > 0.0);
        assert!(row.get("trace_attached_rate").unwrap() > 0.99);
    }

    #[test]
    fn delta_prime_bound_is_enforced() {
        let cfg = ExperimentConfig {
            kind: ExperimentKind::EmptyingDemo,
            d: 1,
            lambda: 1.0,
            horizon: 10.0,
            margin: 2.0,
            levels: vec![2.0, 5.0],
            replications: 1,
            master_seed: 1,
            params: KindParams {
                delta: Some(0.3),
                delta_prime: Some(0.2),
                ..KindParams::default()
            },
        };
        assert!(super::super::run(&cfg).is_err());
    }
}
