//! Geometry of hyperbolic space in polar coordinates.
//!
//! Points carry a hyperbolic distance to the origin and a unit direction in
//! R^{d+1}, one representation for every dimension. The volume measure is the
//! rescaled one: dVol = sinh^d(r) dr dσ(u) with σ(S^d) = 1, so intensities in
//! the sampling module are per unit rescaled volume. Curvature is fixed at −1.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DIRECTION_NORM_TOL: f64 = 1e-12;

/// A point of H^{d+1} in polar coordinates: hyperbolic radius plus a unit
/// direction in R^{d+1}. radius = 0 denotes the origin (a direction is still
/// stored, normalized, but carries no information there).
///
/// Serializes as the flat array `[radius, dir_0, ..., dir_d]`.
#[derive(Debug, Clone, PartialEq)]
pub struct HPoint {
    radius: f64,
    dir: Vec<f64>,
}

impl Serialize for HPoint {
    fn serialize<S: serde::Serializer>(
        &self,
        serializer: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeSeq;
        let mut seq = serializer.serialize_seq(Some(1 + self.dir.len()))?;
        seq.serialize_element(&self.radius)?;
        for x in &self.dir {
            seq.serialize_element(x)?;
        }
        seq.end()
    }
}

impl<'de> Deserialize<'de> for HPoint {
    fn deserialize<D: serde::Deserializer<'de>>(
        deserializer: D,
    ) -> std::result::Result<Self, D::Error> {
        let values = Vec::<f64>::deserialize(deserializer)?;
        if values.len() < 3 {
            return Err(serde::de::Error::custom(
                "point needs a radius and at least two direction components",
            ));
        }
        let (radius, dir) = (values[0], values[1..].to_vec());
        let norm = dir.iter().map(|x| x * x).sum::<f64>().sqrt();
        if (norm - 1.0).abs() <= DIRECTION_NORM_TOL && radius >= 0.0 && radius.is_finite() {
            // keep the stored bits so serialized clouds replay exactly
            Ok(HPoint { radius, dir })
        } else {
            HPoint::new(radius, dir).map_err(serde::de::Error::custom)
        }
    }
}

impl HPoint {
    /// Builds a point, normalizing `dir`. Rejects nonfinite input, negative
    /// radius and zero direction vectors.
    pub fn new(radius: f64, dir: Vec<f64>) -> Result<Self> {
        if !radius.is_finite() || radius < 0.0 {
            return Err(Error::invalid(format!("radius must be >= 0, got {radius}")));
        }
        if dir.len() < 2 {
            return Err(Error::invalid("direction needs at least 2 components"));
        }
        let norm = dir.iter().map(|x| x * x).sum::<f64>().sqrt();
        if !norm.is_finite() || norm < 1e-300 {
            return Err(Error::invalid("direction vector must be nonzero"));
        }
        let dir = dir.into_iter().map(|x| x / norm).collect();
        Ok(HPoint { radius, dir })
    }

    /// Wraps components already known to be unit-normalized (sampler and
    /// arc interpolation outputs); bypasses the renormalization in `new` so
    /// endpoints reproduce bitwise.
    pub(crate) fn from_unit(radius: f64, dir: Vec<f64>) -> Self {
        HPoint { radius, dir }
    }

    /// The origin of H^{d+1}; the stored direction is the first axis.
    pub fn origin(d: usize) -> Self {
        let mut dir = vec![0.0; d + 1];
        dir[0] = 1.0;
        HPoint { radius: 0.0, dir }
    }

    /// d=1 convenience constructor: direction given as an angle on the circle.
    pub fn from_angle(radius: f64, theta: f64) -> Self {
        HPoint {
            radius,
            dir: vec![theta.cos(), theta.sin()],
        }
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn dir(&self) -> &[f64] {
        &self.dir
    }

    /// Ambient sphere dimension d (direction lives on S^d).
    pub fn sphere_dim(&self) -> usize {
        self.dir.len() - 1
    }

    /// d=1 convenience: the direction as an angle in (−π, π].
    pub fn angle(&self) -> f64 {
        self.dir[1].atan2(self.dir[0])
    }

    pub fn is_origin(&self) -> bool {
        self.radius == 0.0
    }
}

/// Angle in [0, π] between two unit vectors, stable for nearly parallel and
/// nearly antipodal pairs (the acos-of-dot form loses ~8 digits near 0).
pub fn angle_between_dirs(u: &[f64], v: &[f64]) -> f64 {
    debug_assert_eq!(u.len(), v.len());
    let mut diff2 = 0.0;
    let mut sum2 = 0.0;
    for (a, b) in u.iter().zip(v) {
        diff2 += (a - b) * (a - b);
        sum2 += (a + b) * (a + b);
    }
    2.0 * diff2.sqrt().atan2(sum2.sqrt())
}

/// Hyperbolic distance via the law of cosines,
/// cosh d = cosh r_a cosh r_b − sinh r_a sinh r_b cos θ,
/// evaluated in the cancellation-free form
/// cosh d = cosh(r_a − r_b) + sinh r_a sinh r_b (1 − cos θ)
/// with 1 − cos θ = |u − v|²/2. Total function, symmetric.
pub fn distance(a: &HPoint, b: &HPoint) -> f64 {
    if a.is_origin() {
        return b.radius;
    }
    if b.is_origin() {
        return a.radius;
    }
    let mut diff2 = 0.0;
    for (x, y) in a.dir.iter().zip(&b.dir) {
        diff2 += (x - y) * (x - y);
    }
    cosh_distance_parts(a.radius, b.radius, diff2).0
}

/// (distance, cosh distance) from radii and the squared direction difference.
/// Exposed within the crate so the tree builder can compare candidates with
/// exactly the same arithmetic the public distance uses.
pub(crate) fn cosh_distance_parts(ra: f64, rb: f64, dir_diff2: f64) -> (f64, f64) {
    let c = (ra - rb).cosh() + ra.sinh() * rb.sinh() * (0.5 * dir_diff2);
    (safe_acosh(c), c)
}

fn safe_acosh(x: f64) -> f64 {
    if x <= 1.0 {
        0.0
    } else {
        x.acosh()
    }
}

/// Angle at the origin between the directions of two points, in [0, π].
/// Undefined (error) when either point is the origin.
pub fn angle_at_origin(a: &HPoint, b: &HPoint) -> Result<f64> {
    if a.is_origin() || b.is_origin() {
        return Err(Error::OriginAngle);
    }
    Ok(angle_between_dirs(&a.dir, &b.dir))
}

/// Rescaled volume of the ball B(r): ∫₀^r sinh^d(ρ) dρ. Closed forms for
/// d ∈ {1,2,3}, adaptive quadrature (relative error ≤ 1e-10) above.
pub fn ball_volume(r: f64, d: usize) -> f64 {
    assert!(d >= 1, "dimension parameter d must be >= 1");
    if r <= 0.0 {
        return 0.0;
    }
    match d {
        1 => r.cosh() - 1.0,
        2 => (2.0 * r).sinh() / 4.0 - r / 2.0,
        3 => {
            let c = r.cosh();
            c * c * c / 3.0 - c + 2.0 / 3.0
        }
        _ => adaptive_quadrature(|x| x.sinh().powi(d as i32), 0.0, r, 1e-12),
    }
}

/// σ-measure of a spherical cap of angular radius θ on S^d, with σ(S^d) = 1:
/// ∫₀^θ sin^{d−1} / ∫₀^π sin^{d−1}. Closed forms for d ∈ {1,2,3}.
pub fn cap_measure(theta: f64, d: usize) -> f64 {
    assert!(d >= 1);
    let theta = theta.clamp(0.0, std::f64::consts::PI);
    match d {
        1 => theta / std::f64::consts::PI,
        2 => (1.0 - theta.cos()) / 2.0,
        3 => (theta - theta.sin() * theta.cos()) / std::f64::consts::PI,
        _ => {
            let f = |x: f64| x.sin().powi(d as i32 - 1);
            let num = adaptive_quadrature(f, 0.0, theta, 1e-12);
            let den = adaptive_quadrature(f, 0.0, std::f64::consts::PI, 1e-12);
            num / den
        }
    }
}

/// Poincaré open-ball embedding: (r; u) ↦ tanh(r/2)·u.
pub fn to_poincare(z: &HPoint) -> Vec<f64> {
    let s = (z.radius / 2.0).tanh();
    z.dir.iter().map(|x| s * x).collect()
}

/// Inverse of [`to_poincare`]. The input must have Euclidean norm < 1.
pub fn from_poincare(x: &[f64]) -> Result<HPoint> {
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm >= 1.0 {
        return Err(Error::invalid("point must lie in the open unit ball"));
    }
    if norm == 0.0 {
        return Ok(HPoint::origin(x.len() - 1));
    }
    let r = 2.0 * norm.atanh();
    HPoint::new(r, x.iter().map(|v| v / norm).collect())
}

/// Uniform direction on S^d: normalized standard Gaussian vector.
pub fn sample_direction<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..=d).map(|_| rng.sample(StandardNormal)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-12 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

/// Regions of H^{d+1} used by the sampler and the block experiments.
///
/// `HalfLens(z, ρ)` is the set B⁺(z, ρ) = B(z, ρ) ∩ B(0, d(0,z)); the ancestor
/// rule makes exactly this set devoid of Poisson points below the ancestor
/// distance.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum Region {
    Ball { center: HPoint, radius: f64 },
    Annulus { inner: f64, outer: f64 },
    Cone { axis: Vec<f64>, aperture: f64 },
    HalfLens { point: HPoint, radius: f64 },
    Intersection(Vec<Region>),
}

impl Region {
    pub fn validate(&self) -> Result<()> {
        match self {
            Region::Ball { radius, .. } => {
                if *radius <= 0.0 {
                    return Err(Error::invalid("ball radius must be > 0"));
                }
            }
            Region::Annulus { inner, outer } => {
                if !(*inner >= 0.0 && inner < outer) {
                    return Err(Error::invalid("annulus requires 0 <= inner < outer"));
                }
            }
            Region::Cone { axis, aperture } => {
                let n = axis.iter().map(|x| x * x).sum::<f64>().sqrt();
                if (n - 1.0).abs() > 1e-9 {
                    return Err(Error::invalid("cone axis must be a unit vector"));
                }
                if !(*aperture > 0.0 && *aperture <= std::f64::consts::PI) {
                    return Err(Error::invalid("cone aperture must lie in (0, π]"));
                }
            }
            Region::HalfLens { radius, .. } => {
                if *radius <= 0.0 {
                    return Err(Error::invalid("half-lens radius must be > 0"));
                }
            }
            Region::Intersection(parts) => {
                for p in parts {
                    p.validate()?;
                }
            }
        }
        Ok(())
    }

    /// Exact membership. Balls and annuli are open; cones are closed at the
    /// aperture: Cone(axis, θ) = {z : angle(axis, z) ≤ θ}.
    pub fn contains(&self, z: &HPoint) -> bool {
        match self {
            Region::Ball { center, radius } => distance(center, z) < *radius,
            Region::Annulus { inner, outer } => z.radius > *inner && z.radius < *outer,
            Region::Cone { axis, aperture } => {
                z.is_origin() || angle_between_dirs(axis, &z.dir) <= *aperture
            }
            Region::HalfLens { point, radius } => {
                z.radius < point.radius && distance(point, z) < *radius
            }
            Region::Intersection(parts) => parts.iter().all(|p| p.contains(z)),
        }
    }

    /// Radius R such that the region fits inside B(0, R), when one exists.
    pub fn enclosing_radius(&self) -> Option<f64> {
        match self {
            Region::Ball { center, radius } => Some(center.radius + radius),
            Region::Annulus { outer, .. } => Some(*outer),
            Region::Cone { .. } => None,
            Region::HalfLens { point, .. } => Some(point.radius),
            Region::Intersection(parts) => parts
                .iter()
                .filter_map(Region::enclosing_radius)
                .min_by(|a, b| a.total_cmp(b)),
        }
    }
}

/// Draws the radial coordinate of a uniform point of B(0, r_max) under the
/// rescaled volume measure (density ∝ sinh^d). d=1 inverts the CDF in closed
/// form; d ≥ 2 uses a monotone cubic interpolant of the inverse CDF whose knot
/// count is doubled until the max inverse error drops below 1e-8.
#[derive(Debug, Clone)]
pub struct RadialSampler {
    d: usize,
    r_max: f64,
    total: f64,
    inverse: RadialInverse,
}

#[derive(Debug, Clone)]
enum RadialInverse {
    ClosedD1 { cosh_span: f64 },
    Spline(MonotoneSpline),
}

impl RadialSampler {
    pub fn new(d: usize, r_max: f64) -> Result<Self> {
        if !(r_max > 0.0 && r_max.is_finite()) {
            return Err(Error::invalid("sampler radius must be positive and finite"));
        }
        let total = ball_volume(r_max, d);
        let inverse = if d == 1 {
            RadialInverse::ClosedD1 {
                cosh_span: r_max.cosh() - 1.0,
            }
        } else {
            RadialInverse::Spline(build_inverse_cdf_spline(d, r_max, total)?)
        };
        Ok(RadialSampler {
            d,
            r_max,
            total,
            inverse,
        })
    }

    pub fn total_volume(&self) -> f64 {
        self.total
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    pub fn d(&self) -> usize {
        self.d
    }

    /// Inverse CDF at u ∈ [0,1].
    pub fn inverse_cdf(&self, u: f64) -> f64 {
        let u = u.clamp(0.0, 1.0);
        match &self.inverse {
            RadialInverse::ClosedD1 { cosh_span } => (1.0 + u * cosh_span).acosh(),
            RadialInverse::Spline(s) => s.eval(u).clamp(0.0, self.r_max),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.inverse_cdf(rng.random::<f64>())
    }
}

fn build_inverse_cdf_spline(d: usize, r_max: f64, total: f64) -> Result<MonotoneSpline> {
    let cdf = |rho: f64| ball_volume(rho, d) / total;
    let pdf = |rho: f64| rho.sinh().powi(d as i32) / total;
    let mut knots = 4096usize;
    loop {
        let xs: Vec<f64> = (0..=knots)
            .map(|i| cdf(r_max * i as f64 / knots as f64))
            .collect();
        let ys: Vec<f64> = (0..=knots)
            .map(|i| r_max * i as f64 / knots as f64)
            .collect();
        let spline = MonotoneSpline::fit(xs, ys)?;
        // Verify against Newton-refined truth on a denser grid.
        let mut max_err: f64 = 0.0;
        let checks = 4 * knots.min(16384);
        for i in 1..checks {
            let u = i as f64 / checks as f64;
            let approx = spline.eval(u);
            let mut rho = approx.clamp(1e-12, r_max);
            for _ in 0..40 {
                let f = cdf(rho) - u;
                let dp = pdf(rho);
                if dp <= 0.0 {
                    break;
                }
                let step = f / dp;
                rho = (rho - step).clamp(0.0, r_max);
                if step.abs() < 1e-13 {
                    break;
                }
            }
            max_err = max_err.max((approx - rho).abs());
        }
        if max_err < 1e-8 {
            return Ok(spline);
        }
        knots *= 2;
        if knots > 1 << 18 {
            return Err(Error::invalid(
                "inverse CDF spline failed to reach 1e-8 accuracy",
            ));
        }
    }
}

/// Monte Carlo estimate of a bounded region's rescaled volume by rejection
/// from the enclosing origin ball. Returns (estimate, standard error).
pub fn region_volume_mc<R: Rng + ?Sized>(
    region: &Region,
    d: usize,
    samples: u64,
    rng: &mut R,
) -> Result<(f64, f64)> {
    region.validate()?;
    if samples < 1000 {
        return Err(Error::invalid("region_volume_mc requires >= 1000 samples"));
    }
    let enclosing = region.enclosing_radius().ok_or(Error::UnboundedRegion)?;
    let sampler = RadialSampler::new(d, enclosing)?;
    let vol = sampler.total_volume();
    let mut hits = 0u64;
    for _ in 0..samples {
        let r = sampler.sample(rng);
        let dir = sample_direction(d, rng);
        let z = HPoint { radius: r, dir };
        if region.contains(&z) {
            hits += 1;
        }
    }
    let p = hits as f64 / samples as f64;
    let stderr = vol * (p * (1.0 - p) / samples as f64).sqrt();
    Ok((vol * p, stderr))
}

/// Adaptive Simpson quadrature with Richardson error control, refined until
/// the local error estimate is below `rel_tol` times the running integral.
pub fn adaptive_quadrature(f: impl Fn(f64) -> f64 + Copy, a: f64, b: f64, rel_tol: f64) -> f64 {
    fn simpson(a: f64, fa: f64, b: f64, fb: f64, fm: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: impl Fn(f64) -> f64 + Copy,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        fm: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = simpson(a, fa, m, fm, flm);
        let right = simpson(m, fm, b, fb, frm);
        let err = left + right - whole;
        if depth == 0 || err.abs() <= 15.0 * tol {
            return left + right + err / 15.0;
        }
        recurse(f, a, fa, m, fm, flm, left, 0.5 * tol, depth - 1)
            + recurse(f, m, fm, b, fb, frm, right, 0.5 * tol, depth - 1)
    }
    if a == b {
        return 0.0;
    }
    let fa = f(a);
    let fb = f(b);
    let fm = f(0.5 * (a + b));
    let whole = simpson(a, fa, b, fb, fm);
    let tol = rel_tol * whole.abs().max(1e-300);
    recurse(f, a, fa, b, fb, fm, whole, tol, 48)
}

/// Monotone cubic Hermite interpolant (Fritsch–Carlson tangents) on strictly
/// increasing abscissae.
#[derive(Debug, Clone)]
pub struct MonotoneSpline {
    xs: Vec<f64>,
    ys: Vec<f64>,
    tangents: Vec<f64>,
}

impl MonotoneSpline {
    pub fn fit(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        if xs.len() != ys.len() || xs.len() < 2 {
            return Err(Error::invalid("spline needs >= 2 matched knots"));
        }
        let n = xs.len();
        let mut secants = Vec::with_capacity(n - 1);
        for i in 0..n - 1 {
            let h = xs[i + 1] - xs[i];
            if h <= 0.0 {
                return Err(Error::invalid("spline abscissae must strictly increase"));
            }
            secants.push((ys[i + 1] - ys[i]) / h);
        }
        let mut tangents = vec![0.0; n];
        tangents[0] = secants[0];
        tangents[n - 1] = secants[n - 2];
        for i in 1..n - 1 {
            if secants[i - 1] * secants[i] <= 0.0 {
                tangents[i] = 0.0;
            } else {
                tangents[i] = 0.5 * (secants[i - 1] + secants[i]);
            }
        }
        // Fritsch-Carlson clamp keeps the interpolant monotone.
        for i in 0..n - 1 {
            if secants[i] == 0.0 {
                tangents[i] = 0.0;
                tangents[i + 1] = 0.0;
                continue;
            }
            let alpha = tangents[i] / secants[i];
            let beta = tangents[i + 1] / secants[i];
            let s = alpha * alpha + beta * beta;
            if s > 9.0 {
                let tau = 3.0 / s.sqrt();
                tangents[i] = tau * alpha * secants[i];
                tangents[i + 1] = tau * beta * secants[i];
            }
        }
        Ok(MonotoneSpline { xs, ys, tangents })
    }

    pub fn eval(&self, x: f64) -> f64 {
        let n = self.xs.len();
        if x <= self.xs[0] {
            return self.ys[0];
        }
        if x >= self.xs[n - 1] {
            return self.ys[n - 1];
        }
        let mut lo = 0usize;
        let mut hi = n - 1;
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if self.xs[mid] <= x {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let h = self.xs[lo + 1] - self.xs[lo];
        let t = (x - self.xs[lo]) / h;
        let t2 = t * t;
        let t3 = t2 * t;
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        h00 * self.ys[lo]
            + h10 * h * self.tangents[lo]
            + h01 * self.ys[lo + 1]
            + h11 * h * self.tangents[lo + 1]
    }
}
