//! The Radial Spanning Tree: each Poisson point links to its nearest
//! neighbor among the points strictly closer to the origin (the origin
//! included as a candidate), A(z) = argmin_{z' ∈ (N∪{0}) ∩ B(d(0,z))} d(z',z).
//!
//! Construction scans candidates in decreasing radius with the lower bound
//! d(z,z') >= r_z − r_{z'} for early exit; for d = 1 an angular bucket grid
//! prunes further, which matters at rendering intensities (λ = 30 at R = 8 is
//! ~4.5·10⁴ points). Both paths use the same distance arithmetic and the same
//! tie rule, and are validated against the quadratic brute-force oracle.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hypgeom::{self, angle_between_dirs, to_poincare, HPoint};
use crate::ppp::PointCloud;

/// Parent/children structure over a [`PointCloud`] plus the root at the
/// origin. `parent[v] = None` means the ancestor of v is the origin.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RadialTree {
    pub cloud: PointCloud,
    pub parent: Vec<Option<usize>>,
    #[serde(skip)]
    pub children: Vec<Vec<usize>>,
    #[serde(skip)]
    pub root_children: Vec<usize>,
    #[serde(rename = "ancestorDistance")]
    pub ancestor_distance: Vec<f64>,
    /// Number of exact distance ties broken by the smaller-index rule.
    #[serde(skip)]
    pub tie_count: u64,
}

/// The set of descendants of a vertex, the vertex itself included.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DescendantSet {
    pub root_vertex: usize,
    pub members: Vec<usize>,
}

struct Best {
    cosh_d: f64,
    dist: f64,
    parent: Option<usize>,
    ties: u64,
}

impl Best {
    /// Candidate acceptance with the deterministic tie rule: strictly smaller
    /// cosh distance wins; exact ties go to the smaller index.
    fn offer(&mut self, cosh_d: f64, idx: usize) {
        if cosh_d < self.cosh_d {
            self.cosh_d = cosh_d;
            self.dist = f64::NAN; // recomputed lazily
            self.parent = Some(idx);
        } else if cosh_d == self.cosh_d {
            self.ties += 1;
            if self.parent.is_some_and(|p| idx < p) {
                self.parent = Some(idx);
            }
        }
    }

    fn dist(&mut self) -> f64 {
        if self.dist.is_nan() {
            self.dist = if self.cosh_d <= 1.0 {
                0.0
            } else {
                self.cosh_d.acosh()
            };
        }
        self.dist
    }
}

struct Precomp {
    radius: Vec<f64>,
    sinh_r: Vec<f64>,
}

fn dir_diff2(u: &[f64], v: &[f64]) -> f64 {
    u.iter().zip(v).map(|(a, b)| (a - b) * (a - b)).sum()
}

fn candidate_cosh(pre: &Precomp, cloud: &PointCloud, i: usize, j: usize) -> f64 {
    let diff2 = dir_diff2(cloud.points[i].dir(), cloud.points[j].dir());
    (pre.radius[i] - pre.radius[j]).cosh() + pre.sinh_r[i] * pre.sinh_r[j] * (0.5 * diff2)
}

/// Builds the RST. Errors on coincident points (degenerate input). Points at
/// exactly equal radius are legal (the earlier-index point is simply not a
/// candidate for the later one, matching the strict B(d(0,z)) domain —
/// such ties have probability zero and arise only from edited clouds).
pub fn build(cloud: PointCloud) -> Result<RadialTree> {
    let n = cloud.len();
    let pre = Precomp {
        radius: cloud.points.iter().map(|p| p.radius()).collect(),
        sinh_r: cloud.points.iter().map(|p| p.radius().sinh()).collect(),
    };
    let use_buckets = cloud.d == 1 && n >= 4096;
    let mut buckets = if use_buckets {
        Some(BucketGrid::new(n))
    } else {
        None
    };

    let mut parent = vec![None; n];
    let mut ancestor_distance = vec![0.0; n];
    let mut tie_count = 0u64;

    for i in 0..n {
        // exact duplicates sit adjacently in the radius-sorted cloud
        let mut j = i;
        while j > 0 && pre.radius[j - 1] == pre.radius[i] {
            j -= 1;
            if cloud.points[j].dir() == cloud.points[i].dir() {
                return Err(Error::DuplicatePoint(j, i));
            }
        }
        let mut best = Best {
            cosh_d: pre.radius[i].cosh(), // the origin as initial candidate
            dist: pre.radius[i],
            parent: None,
            ties: 0,
        };
        match &mut buckets {
            Some(grid) => {
                grid.nearest(&cloud, &pre, i, &mut best);
                grid.insert(cloud.points[i].angle(), i);
            }
            None => {
                // descending radial scan over j < i (strictly smaller radius,
                // ties excluded by construction order)
                for j in (0..i).rev() {
                    if pre.radius[j] == pre.radius[i] {
                        continue;
                    }
                    if pre.radius[i] - pre.radius[j] >= best.dist() {
                        break;
                    }
                    best.offer(candidate_cosh(&pre, &cloud, i, j), j);
                }
            }
        }
        if best.cosh_d <= 1.0 {
            if let Some(j) = best.parent {
                return Err(Error::DuplicatePoint(j, i));
            }
        }
        parent[i] = best.parent;
        ancestor_distance[i] = best.dist();
        tie_count += best.ties;
    }

    let mut children = vec![Vec::new(); n];
    let mut root_children = Vec::new();
    for (v, p) in parent.iter().enumerate() {
        match p {
            Some(j) => children[*j].push(v),
            None => root_children.push(v),
        }
    }
    Ok(RadialTree {
        cloud,
        parent,
        children,
        root_children,
        ancestor_distance,
        tie_count,
    })
}

/// Angular bucket grid for d = 1: buckets hold already-processed (smaller
/// radius) points; ring expansion stops once the distance from the query to
/// the ring's bounding ray exceeds the current best.
struct BucketGrid {
    k: usize,
    width: f64,
    buckets: Vec<Vec<usize>>,
}

impl BucketGrid {
    fn new(n: usize) -> Self {
        let k = (n / 8).next_power_of_two().clamp(64, 1 << 16);
        BucketGrid {
            k,
            width: 2.0 * std::f64::consts::PI / k as f64,
            buckets: vec![Vec::new(); k],
        }
    }

    fn index(&self, angle: f64) -> usize {
        let a = angle.rem_euclid(2.0 * std::f64::consts::PI);
        ((a / self.width) as usize).min(self.k - 1)
    }

    fn insert(&mut self, angle: f64, idx: usize) {
        let b = self.index(angle);
        self.buckets[b].push(idx); // radius-ascending by construction order
    }

    fn scan_bucket(
        &self,
        bucket: usize,
        cloud: &PointCloud,
        pre: &Precomp,
        i: usize,
        best: &mut Best,
    ) {
        for &j in self.buckets[bucket].iter().rev() {
            if pre.radius[j] == pre.radius[i] {
                continue;
            }
            if pre.radius[i] - pre.radius[j] >= best.dist() {
                break;
            }
            best.offer(candidate_cosh(pre, cloud, i, j), j);
        }
    }

    fn nearest(&self, cloud: &PointCloud, pre: &Precomp, i: usize, best: &mut Best) {
        let center = self.index(cloud.points[i].angle());
        self.scan_bucket(center, cloud, pre, i, best);
        let max_ring = self.k / 2;
        for m in 1..=max_ring {
            if m >= 2 {
                // any point in ring m is at angular offset >= (m-1)*width;
                // below that the hyperbolic distance to the bounding ray is
                // sinh^{-1}(sinh r_i · sin Δθ)
                let dtheta = (m - 1) as f64 * self.width;
                let lb = if dtheta >= std::f64::consts::FRAC_PI_2 {
                    pre.radius[i]
                } else {
                    (pre.sinh_r[i] * dtheta.sin()).asinh()
                };
                if lb >= best.dist() {
                    break;
                }
            }
            let left = (center + self.k - m) % self.k;
            let right = (center + m) % self.k;
            self.scan_bucket(left, cloud, pre, i, best);
            if right != left {
                self.scan_bucket(right, cloud, pre, i, best);
            }
        }
    }
}

/// Brute-force ancestor assignment, the oracle the pruned builder is checked
/// against. Same distance arithmetic, same tie rule, O(n²).
pub fn build_brute_force(cloud: PointCloud) -> Result<RadialTree> {
    let n = cloud.len();
    let pre = Precomp {
        radius: cloud.points.iter().map(|p| p.radius()).collect(),
        sinh_r: cloud.points.iter().map(|p| p.radius().sinh()).collect(),
    };
    let mut parent = vec![None; n];
    let mut ancestor_distance = vec![0.0; n];
    let mut tie_count = 0u64;
    for i in 0..n {
        let mut j = i;
        while j > 0 && pre.radius[j - 1] == pre.radius[i] {
            j -= 1;
            if cloud.points[j].dir() == cloud.points[i].dir() {
                return Err(Error::DuplicatePoint(j, i));
            }
        }
        let mut best = Best {
            cosh_d: pre.radius[i].cosh(),
            dist: pre.radius[i],
            parent: None,
            ties: 0,
        };
        for j in 0..n {
            if pre.radius[j] < pre.radius[i] {
                best.offer(candidate_cosh(&pre, &cloud, i, j), j);
            }
        }
        if best.cosh_d <= 1.0 {
            if let Some(j) = best.parent {
                return Err(Error::DuplicatePoint(j, i));
            }
        }
        parent[i] = best.parent;
        ancestor_distance[i] = best.dist();
        tie_count += best.ties;
    }
    let mut children = vec![Vec::new(); n];
    let mut root_children = Vec::new();
    for (v, p) in parent.iter().enumerate() {
        match p {
            Some(j) => children[*j].push(v),
            None => root_children.push(v),
        }
    }
    Ok(RadialTree {
        cloud,
        parent,
        children,
        root_children,
        ancestor_distance,
        tie_count,
    })
}

impl RadialTree {
    pub fn len(&self) -> usize {
        self.cloud.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cloud.is_empty()
    }

    pub fn point(&self, v: usize) -> &HPoint {
        &self.cloud.points[v]
    }

    /// Rebuilds the children adjacency (needed after deserialization, where
    /// only parents are stored).
    pub fn rebuild_children(&mut self) {
        self.children = vec![Vec::new(); self.cloud.len()];
        self.root_children.clear();
        for (v, p) in self.parent.iter().enumerate() {
            match p {
                Some(j) => self.children[*j].push(v),
                None => self.root_children.push(v),
            }
        }
    }

    /// All vertices reachable from v through child edges, v included,
    /// in BFS order.
    pub fn descendants(&self, v: usize) -> DescendantSet {
        let mut members = vec![v];
        let mut head = 0;
        while head < members.len() {
            let u = members[head];
            head += 1;
            members.extend_from_slice(&self.children[u]);
        }
        DescendantSet {
            root_vertex: v,
            members,
        }
    }

    /// Vertices on the path from v to the root, v first; the origin (which is
    /// not an indexed vertex) terminates every path and is left implicit.
    pub fn path_to_root(&self, v: usize) -> Vec<usize> {
        let mut path = vec![v];
        let mut cur = v;
        while let Some(p) = self.parent[cur] {
            path.push(p);
            cur = p;
        }
        path
    }

    /// Tests all geodesic-segment pairs for interior crossings in the
    /// Poincaré disc (d = 1 only). Segments are sampled as 64-point polylines
    /// with exact endpoint anchoring; returns the offending vertex pairs.
    pub fn check_planarity_d1(&self) -> Result<Vec<(usize, usize)>> {
        if self.cloud.d != 1 {
            return Err(Error::NotPlanarDimension(self.cloud.d));
        }
        const SAMPLES: usize = 64;
        let n = self.len();
        let mut polylines: Vec<Vec<[f64; 2]>> = Vec::with_capacity(n);
        let mut boxes = Vec::with_capacity(n);
        for v in 0..n {
            let a = self.point(v);
            let b = match self.parent[v] {
                Some(p) => self.point(p).clone(),
                None => HPoint::origin(1),
            };
            let poly = geodesic_polyline_d1(a, &b, SAMPLES);
            let mut lo = [f64::INFINITY; 2];
            let mut hi = [f64::NEG_INFINITY; 2];
            for p in &poly {
                for k in 0..2 {
                    lo[k] = lo[k].min(p[k]);
                    hi[k] = hi[k].max(p[k]);
                }
            }
            polylines.push(poly);
            boxes.push((lo, hi));
        }
        let tol = 1e-9;
        let mut crossings = Vec::new();
        for v in 0..n {
            for w in v + 1..n {
                let (alo, ahi) = &boxes[v];
                let (blo, bhi) = &boxes[w];
                if alo[0] > bhi[0] + tol
                    || blo[0] > ahi[0] + tol
                    || alo[1] > bhi[1] + tol
                    || blo[1] > ahi[1] + tol
                {
                    continue;
                }
                if polylines_cross_interior(&polylines[v], &polylines[w], tol) {
                    crossings.push((v, w));
                }
            }
        }
        Ok(crossings)
    }

    /// Fraction of vertices per radius bin whose descendant set exceeds the
    /// straightness aperture e^{−(1−ε)r}. Only vertices whose subtree is
    /// horizon-uncensored (radius ≤ max_base_radius) are counted.
    pub fn straightness_profile(
        &self,
        epsilon: f64,
        bin_edges: &[f64],
        max_base_radius: f64,
    ) -> Result<Vec<StraightnessBin>> {
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(Error::invalid("straightness epsilon must lie in (0,1)"));
        }
        if bin_edges.len() < 2 {
            return Err(Error::invalid("need at least one radius bin"));
        }
        let extents = self.descendant_angular_extents();
        let mut bins: Vec<StraightnessBin> = bin_edges
            .windows(2)
            .map(|w| StraightnessBin {
                r_lo: w[0],
                r_hi: w[1],
                vertices: 0,
                flagged: 0,
            })
            .collect();
        for (v, extent) in extents.iter().enumerate() {
            let r = self.point(v).radius();
            if r > max_base_radius {
                continue;
            }
            let Some(bin) = bins.iter_mut().find(|b| r >= b.r_lo && r < b.r_hi) else {
                continue;
            };
            bin.vertices += 1;
            if *extent > (-(1.0 - epsilon) * r).exp() {
                bin.flagged += 1;
            }
        }
        Ok(bins)
    }

    /// Angular extent (max pairwise angle at the origin) of every vertex's
    /// descendant set. d = 1 accumulates signed angular intervals bottom-up;
    /// d ≥ 2 measures pairwise angles per subtree.
    pub fn descendant_angular_extents(&self) -> Vec<f64> {
        let n = self.len();
        if self.cloud.d == 1 {
            // interval [lo, hi] of descendant angles relative to each vertex
            let mut lo = vec![0.0f64; n];
            let mut hi = vec![0.0f64; n];
            let order = self.radius_descending_order();
            for &v in &order {
                let av = self.point(v).angle();
                for &c in &self.children[v] {
                    let off = wrap_to_pi(self.point(c).angle() - av);
                    lo[v] = lo[v].min(lo[c] + off);
                    hi[v] = hi[v].max(hi[c] + off);
                }
            }
            lo.iter()
                .zip(&hi)
                .map(|(l, h)| (h - l).min(2.0 * std::f64::consts::PI))
                .collect()
        } else {
            (0..n)
                .map(|v| {
                    let ds = self.descendants(v);
                    let mut maxang = 0.0f64;
                    for (k, &a) in ds.members.iter().enumerate() {
                        for &b in &ds.members[k + 1..] {
                            maxang = maxang
                                .max(angle_between_dirs(self.point(a).dir(), self.point(b).dir()));
                        }
                    }
                    maxang
                })
                .collect()
        }
    }

    /// Vertex indices ordered by decreasing radius (children before parents,
    /// since every parent has strictly smaller radius).
    pub fn radius_descending_order(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.sort_by(|&a, &b| self.point(b).radius().total_cmp(&self.point(a).radius()));
        order
    }

    pub fn max_in_degree(&self) -> usize {
        self.children
            .iter()
            .map(Vec::len)
            .max()
            .unwrap_or(0)
            .max(self.root_children.len())
    }
}

pub fn wrap_to_pi(x: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut y = x.rem_euclid(two_pi);
    if y > std::f64::consts::PI {
        y -= two_pi;
    }
    y
}

#[derive(Debug, Clone, Serialize)]
pub struct StraightnessBin {
    pub r_lo: f64,
    pub r_hi: f64,
    pub vertices: u64,
    pub flagged: u64,
}

impl StraightnessBin {
    pub fn fraction(&self) -> f64 {
        if self.vertices == 0 {
            0.0
        } else {
            self.flagged as f64 / self.vertices as f64
        }
    }
}

/// Samples the hyperbolic geodesic [a, b] as a polyline in the Poincaré disc
/// (endpoints exact). Interpolation runs on the hyperboloid, where the
/// geodesic is γ(s) = (sinh((1−s)D)·A + sinh(sD)·B)/sinh D.
pub fn geodesic_polyline_d1(a: &HPoint, b: &HPoint, samples: usize) -> Vec<[f64; 2]> {
    let samples = samples.max(2);
    let pa = to_poincare(a);
    let pb = to_poincare(b);
    let mut out = Vec::with_capacity(samples);
    out.push([pa[0], pa[1]]);
    let dist = hypgeom::distance(a, b);
    if dist > 1e-12 {
        let (t0a, xa, ya) = hyperboloid(a);
        let (t0b, xb, yb) = hyperboloid(b);
        let sd = dist.sinh();
        for k in 1..samples - 1 {
            let s = k as f64 / (samples - 1) as f64;
            let wa = ((1.0 - s) * dist).sinh() / sd;
            let wb = (s * dist).sinh() / sd;
            let t = wa * t0a + wb * t0b;
            let x = wa * xa + wb * xb;
            let y = wa * ya + wb * yb;
            // Poincaré disc from hyperboloid: (x,y)/(1+t)
            out.push([x / (1.0 + t), y / (1.0 + t)]);
        }
    }
    out.push([pb[0], pb[1]]);
    out
}

fn hyperboloid(p: &HPoint) -> (f64, f64, f64) {
    let (c, s) = (p.radius().cosh(), p.radius().sinh());
    (c, s * p.dir()[0], s * p.dir()[1])
}

fn polylines_cross_interior(a: &[[f64; 2]], b: &[[f64; 2]], tol: f64) -> bool {
    // Skip crossings within tol of a shared endpoint (edges sharing a vertex
    // meet there legitimately).
    let ends = [a[0], a[a.len() - 1], b[0], b[b.len() - 1]];
    for sa in a.windows(2) {
        for sb in b.windows(2) {
            if let Some(pt) = segment_intersection(sa[0], sa[1], sb[0], sb[1], tol) {
                let near_shared = ends
                    .iter()
                    .any(|e| (e[0] - pt[0]).hypot(e[1] - pt[1]) < 100.0 * tol.max(1e-12));
                if !near_shared {
                    return true;
                }
            }
        }
    }
    false
}

fn segment_intersection(
    p1: [f64; 2],
    p2: [f64; 2],
    q1: [f64; 2],
    q2: [f64; 2],
    tol: f64,
) -> Option<[f64; 2]> {
    let r = [p2[0] - p1[0], p2[1] - p1[1]];
    let s = [q2[0] - q1[0], q2[1] - q1[1]];
    let denom = r[0] * s[1] - r[1] * s[0];
    if denom.abs() < 1e-18 {
        return None;
    }
    let qp = [q1[0] - p1[0], q1[1] - p1[1]];
    let t = (qp[0] * s[1] - qp[1] * s[0]) / denom;
    let u = (qp[0] * r[1] - qp[1] * r[0]) / denom;
    if t > tol && t < 1.0 - tol && u > tol && u < 1.0 - tol {
        Some([p1[0] + t * r[0], p1[1] + t * r[1]])
    } else {
        None
    }
}
