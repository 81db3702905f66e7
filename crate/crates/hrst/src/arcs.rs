//! The arc representation of RST edges and the level sets it induces.
//!
//! The arc |[z1, z2]| between z1 = (r1; u1) and its ancestor z2 = (r2; u2)
//! runs at radius (1−t)r1 + t·r2 with direction γ_{u1,u2}(φ(t)), where γ is
//! the unit-speed spherical geodesic from u1 to u2 and
//!
//!   φ(t) = (1/θ)·arccos( ((1−t)·sinh r1 + t·cos θ·sinh r2)
//!                        / ((1−t)·sinh r1 + t·sinh r2) ),   θ = ∠(u1, u2).
//!
//! The arccos argument is a convex combination of 1 and cos θ, so φ maps
//! [0,1] onto [0,1] monotonically. Radius is affine in t, hence the distance
//! to the origin is strictly monotone along the arc and every sphere S(r)
//! with r strictly between the endpoint radii is crossed exactly once. Level
//! sets count crossings with multiplicity: coincident locations generated by
//! distinct arcs stay distinct entries, and each crossing knows its
//! generating arc (the child endpoint is the z_↓ of that crossing).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hypgeom::{angle_between_dirs, HPoint};
use crate::rst::RadialTree;

/// Threshold below which the endpoint directions are treated as equal and
/// the arc degenerates to a radial segment (the φ prefactor 1/θ is unstable
/// there while the limit is the radial path).
const DEGENERATE_ANGLE: f64 = 1e-12;

/// An RST edge in arc form: child endpoint z1, parent endpoint z2 (the
/// origin when the edge attaches to the root).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Arc {
    pub child: usize,
    pub parent: Option<usize>,
    r1: f64,
    u1: Vec<f64>,
    r2: f64,
    u2: Vec<f64>,
    theta: f64,
}

impl Arc {
    pub fn from_endpoints(
        child: usize,
        parent: Option<usize>,
        z1: &HPoint,
        z2: &HPoint,
    ) -> Result<Self> {
        let theta = if z2.is_origin() || z1.is_origin() {
            0.0
        } else {
            angle_between_dirs(z1.dir(), z2.dir())
        };
        if std::f64::consts::PI - theta < 1e-9 {
            return Err(Error::AntipodalEndpoints);
        }
        Ok(Arc {
            child,
            parent,
            r1: z1.radius(),
            u1: z1.dir().to_vec(),
            r2: z2.radius(),
            u2: z2.dir().to_vec(),
            theta,
        })
    }

    /// The arc of the edge leaving vertex v (toward its ancestor).
    pub fn of_edge(tree: &RadialTree, v: usize) -> Result<Self> {
        let z1 = tree.point(v);
        match tree.parent[v] {
            Some(p) => Arc::from_endpoints(v, Some(p), z1, tree.point(p)),
            None => Arc::from_endpoints(v, None, z1, &HPoint::origin(tree.cloud.d)),
        }
    }

    pub fn child_radius(&self) -> f64 {
        self.r1
    }

    pub fn parent_radius(&self) -> f64 {
        self.r2
    }

    pub fn angle(&self) -> f64 {
        self.theta
    }

    /// Radius at parameter t (affine).
    pub fn radius_at(&self, t: f64) -> f64 {
        (1.0 - t) * self.r1 + t * self.r2
    }

    /// φ(t); well-defined for non-degenerate arcs.
    pub fn phi(&self, t: f64) -> f64 {
        if self.theta < DEGENERATE_ANGLE {
            return t;
        }
        let w1 = (1.0 - t) * self.r1.sinh();
        let w2 = t * self.r2.sinh();
        let arg = ((w1 + w2 * self.theta.cos()) / (w1 + w2)).clamp(-1.0, 1.0);
        // arccos amplifies fp noise near arg = 1 when θ is tiny; the true
        // value lies in [0,1] (the argument is a convex combination of 1 and
        // cos θ), so clamp.
        (arg.acos() / self.theta).clamp(0.0, 1.0)
    }
}

/// Point of the arc at parameter t ∈ [0,1]; t = 0 and t = 1 reproduce the
/// endpoints exactly.
pub fn arc_point(arc: &Arc, t: f64) -> Result<HPoint> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::invalid(format!("arc parameter {t} outside [0,1]")));
    }
    if t == 0.0 {
        return Ok(HPoint::from_unit(arc.r1, arc.u1.clone()));
    }
    if t == 1.0 {
        return Ok(if arc.r2 == 0.0 {
            HPoint::origin(arc.u1.len() - 1)
        } else {
            HPoint::from_unit(arc.r2, arc.u2.clone())
        });
    }
    let radius = arc.radius_at(t);
    if arc.theta < DEGENERATE_ANGLE || arc.r2 == 0.0 {
        return Ok(HPoint::from_unit(radius, arc.u1.clone()));
    }
    let dir = slerp(&arc.u1, &arc.u2, arc.theta, arc.phi(t));
    Ok(HPoint::from_unit(radius, dir))
}

/// Unit-speed spherical interpolation between unit vectors at angle theta.
fn slerp(u1: &[f64], u2: &[f64], theta: f64, s: f64) -> Vec<f64> {
    let st = theta.sin();
    let w1 = ((1.0 - s) * theta).sin() / st;
    let w2 = (s * theta).sin() / st;
    let mut v: Vec<f64> = u1.iter().zip(u2).map(|(a, b)| w1 * a + w2 * b).collect();
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    for x in &mut v {
        *x /= norm;
    }
    v
}

/// An element of the level set L_r: a location on S(r) plus the identity of
/// the generating arc (multiplicity convention: one entry per arc).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LevelCrossing {
    pub level: f64,
    pub location: HPoint,
    /// z_↓: the child endpoint of the generating arc.
    pub child: usize,
    /// z_↑: the parent endpoint (None = origin).
    pub parent: Option<usize>,
    /// Arc parameter of the crossing.
    pub t: f64,
}

/// The unique crossing of S(r) by the arc, when r lies strictly between the
/// endpoint radii. Radius is affine in t, so t solves exactly; endpoint
/// grazing returns None (a vertex shared by two arcs must not be counted
/// twice).
pub fn level_crossing(arc: &Arc, r: f64) -> Option<LevelCrossing> {
    let (lo, hi) = (arc.r1.min(arc.r2), arc.r1.max(arc.r2));
    if !(r > lo && r < hi) {
        return None;
    }
    let t = (r - arc.r1) / (arc.r2 - arc.r1);
    let location = arc_point(arc, t).expect("interior parameter is valid");
    Some(LevelCrossing {
        level: r,
        location,
        child: arc.child,
        parent: arc.parent,
        t,
    })
}

/// L_r: one crossing per arc straddling level r, in vertex order.
pub fn level_set(tree: &RadialTree, r: f64) -> Vec<LevelCrossing> {
    let mut out = Vec::new();
    for v in 0..tree.len() {
        let rv = tree.point(v).radius();
        let rp = tree.parent[v].map_or(0.0, |p| tree.point(p).radius());
        if rp < r && r < rv {
            let arc = Arc::of_edge(tree, v).expect("RST edges are never antipodal");
            if let Some(c) = level_crossing(&arc, r) {
                out.push(c);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ppp::{sample_ball, SeedDescriptor};
    use crate::rst::build;
    use approx::assert_relative_eq;

    fn arc_d1(r1: f64, a1: f64, r2: f64, a2: f64) -> Arc {
        Arc::from_endpoints(
            0,
            Some(1),
            &HPoint::from_angle(r1, a1),
            &HPoint::from_angle(r2, a2),
        )
        .unwrap()
    }

    #[test]
    fn endpoints_reproduced_exactly() {
        let z1 = HPoint::from_angle(3.0, 0.7);
        let z2 = HPoint::from_angle(2.0, 0.9);
        let arc = Arc::from_endpoints(0, Some(1), &z1, &z2).unwrap();
        assert_eq!(arc_point(&arc, 0.0).unwrap(), z1);
        assert_eq!(arc_point(&arc, 1.0).unwrap(), z2);
    }

    #[test]
    fn same_direction_arc_is_radial() {
        let arc = arc_d1(3.0, 0.4, 1.0, 0.4);
        for t in [0.25, 0.5, 0.75] {
            let p = arc_point(&arc, t).unwrap();
            assert_relative_eq!(p.radius(), 3.0 - 2.0 * t, epsilon = 1e-14);
            assert_relative_eq!(p.angle(), 0.4, epsilon = 1e-14);
        }
    }

    #[test]
    fn origin_parent_arc_is_radial() {
        let z1 = HPoint::from_angle(2.0, 1.1);
        let arc = Arc::from_endpoints(0, None, &z1, &HPoint::origin(1)).unwrap();
        let p = arc_point(&arc, 0.5).unwrap();
        assert_relative_eq!(p.radius(), 1.0, epsilon = 1e-14);
        assert_relative_eq!(p.angle(), 1.1, epsilon = 1e-14);
        assert!(arc_point(&arc, 1.0).unwrap().is_origin());
    }

    #[test]
    fn antipodal_endpoints_rejected() {
        let z1 = HPoint::from_angle(3.0, 0.0);
        let z2 = HPoint::from_angle(2.0, std::f64::consts::PI);
        assert!(matches!(
            Arc::from_endpoints(0, Some(1), &z1, &z2),
            Err(Error::AntipodalEndpoints)
        ));
    }

    #[test]
    fn phi_matches_high_precision_oracle() {
        // z1 = (3; 0°), z2 = (2; 20°), t = 1/2, evaluated at 50-digit
        // precision: φ = 0.51363851982916925, direction angle = θ·φ.
        let arc = arc_d1(3.0, 0.0, 2.0, 20f64.to_radians());
        assert_relative_eq!(arc.phi(0.5), 0.513_638_519_829_169_2, epsilon = 1e-13);
        let p = arc_point(&arc, 0.5).unwrap();
        assert_relative_eq!(p.radius(), 2.5, epsilon = 1e-14);
        assert_relative_eq!(p.angle(), 0.179_293_666_721_783_7, epsilon = 1e-12);
    }

    #[test]
    fn crossing_solved_exactly_on_affine_radius() {
        let arc = arc_d1(3.0, 0.1, 2.0, 0.25);
        let c = level_crossing(&arc, 2.5).unwrap();
        assert_relative_eq!(c.t, 0.5, epsilon = 1e-14);
        assert_relative_eq!(c.location.radius(), 2.5, epsilon = 1e-12);
        assert!(level_crossing(&arc, 4.0).is_none());
        assert!(
            level_crossing(&arc, 2.0).is_none(),
            "endpoint grazing excluded"
        );
        assert!(level_crossing(&arc, 3.0).is_none());
    }

    #[test]
    fn level_set_on_radial_chain() {
        let mut points = vec![
            HPoint::from_angle(1.0, 0.2),
            HPoint::from_angle(2.0, 0.2),
            HPoint::from_angle(3.0, 0.2),
        ];
        points.sort_by(|a, b| a.radius().total_cmp(&b.radius()));
        let cloud = crate::ppp::PointCloud {
            d: 1,
            lambda: 0.0,
            radius: 4.0,
            seed: SeedDescriptor::new(0, 0),
            points,
        };
        let tree = build(cloud).unwrap();
        let ls = level_set(&tree, 1.5);
        assert_eq!(ls.len(), 1);
        assert_eq!(ls[0].child, 1, "z_↓ is the vertex at radius 2");
        assert_eq!(ls[0].parent, Some(0));
        let ls_high = level_set(&tree, 3.5);
        assert!(ls_high.is_empty(), "no arcs beyond the outermost point");
    }

    #[test]
    fn arc_properties_on_random_rst_arcs() {
        // radius monotone, φ ∈ [0,1], angular additivity, distance-to-z1
        // monotone, crossing self-consistency — swept over real RST edges
        let cloud = sample_ball(1, 1.0, 6.0, SeedDescriptor::new(101, 0)).unwrap();
        let tree = build(cloud).unwrap();
        let mut checked = 0;
        for v in 0..tree.len() {
            let arc = Arc::of_edge(&tree, v).unwrap();
            let z1 = tree.point(v).clone();
            let mut prev_r = f64::INFINITY;
            let mut prev_d = -1.0;
            for k in 0..=64 {
                let t = k as f64 / 64.0;
                let p = arc_point(&arc, t).unwrap();
                assert!(
                    p.radius() < prev_r || k == 0,
                    "radius must strictly decrease"
                );
                prev_r = p.radius();
                let dz1 = crate::hypgeom::distance(&z1, &p);
                assert!(
                    dz1 >= prev_d - 1e-9,
                    "distance to z1 must be monotone (v={v}, t={t})"
                );
                prev_d = dz1;
                let phi = arc.phi(t);
                assert!((-1e-12..=1.0 + 1e-12).contains(&phi));
                if arc.angle() > 1e-9 && !p.is_origin() {
                    let a1 = angle_between_dirs(&arc.u1, p.dir());
                    let a2 = angle_between_dirs(p.dir(), &arc.u2);
                    assert!(
                        (a1 + a2 - arc.angle()).abs() < 1e-9,
                        "angular additivity violated: {} vs {}",
                        a1 + a2,
                        arc.angle()
                    );
                }
            }
            // straddled spheres crossed exactly once: count sign changes of
            // radius − r over a dense sample
            let (lo, hi) = (arc.parent_radius(), arc.child_radius());
            if hi - lo > 1e-6 {
                let r = 0.5 * (lo + hi);
                let mut crossings = 0;
                let mut prev_sign = (arc.radius_at(0.0) - r).signum();
                for k in 1..=256 {
                    let sign = (arc.radius_at(k as f64 / 256.0) - r).signum();
                    if sign != prev_sign {
                        crossings += 1;
                        prev_sign = sign;
                    }
                }
                assert_eq!(crossings, 1);
                assert!(level_crossing(&arc, r).is_some());
                let c = level_crossing(&arc, r).unwrap();
                let again = arc_point(&arc, c.t).unwrap();
                assert!((again.radius() - r).abs() < 1e-12);
            }
            checked += 1;
        }
        assert!(checked > 50, "want a meaningful sweep, got {checked} arcs");
    }

    #[test]
    fn level_set_multiplicity_keeps_distinct_arcs() {
        // two children of one parent both straddle the level: two entries
        // even though locations may be near-coincident
        let mut points = vec![
            HPoint::from_angle(1.0, 0.0),
            HPoint::from_angle(2.5, 0.01),
            HPoint::from_angle(2.5000001, 2.0),
        ];
        points.sort_by(|a, b| a.radius().total_cmp(&b.radius()));
        let cloud = crate::ppp::PointCloud {
            d: 1,
            lambda: 0.0,
            radius: 4.0,
            seed: SeedDescriptor::new(0, 0),
            points,
        };
        let tree = build(cloud).unwrap();
        let ls = level_set(&tree, 2.0);
        assert_eq!(ls.len(), 2);
        assert_ne!(ls[0].child, ls[1].child);
    }
}
