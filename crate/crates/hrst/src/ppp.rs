//! Homogeneous Poisson point processes in balls and bounded regions of
//! H^{d+1}, with intensity λ per unit rescaled volume.
//!
//! Every sampling operation takes a [`SeedDescriptor`] — a (master seed,
//! stream index) pair mapped to an independent ChaCha8 stream — so that
//! replications are reproducible regardless of scheduling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hypgeom::{sample_direction, HPoint, RadialSampler, Region};

/// Hard cap on the expected number of points in one sample.
pub const DEFAULT_COUNT_CAP: u64 = 10_000_000;

/// Identifies one RNG stream: a master seed plus a stream index. Distinct
/// indices under the same master give statistically independent streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedDescriptor {
    pub master: u64,
    pub stream: u64,
}

impl SeedDescriptor {
    pub fn new(master: u64, stream: u64) -> Self {
        SeedDescriptor { master, stream }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master);
        rng.set_stream(self.stream);
        rng
    }
}

/// An indexed, radius-sorted Poisson sample inside B(0, radius).
///
/// For clouds produced by [`sample_ball`]/[`sample_region`] the stored seed
/// descriptor fully determines the sample. Clouds derived by
/// [`resample_inside`] or point deletion store the descriptor of the stream
/// that produced the edit and are replayable given the input cloud.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PointCloud {
    pub d: usize,
    pub lambda: f64,
    #[serde(rename = "R")]
    pub radius: f64,
    pub seed: SeedDescriptor,
    pub points: Vec<HPoint>,
}

impl PointCloud {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Sorts by radius ascending; equal radii keep insertion order.
    fn sort_points(points: &mut [HPoint]) {
        points.sort_by(|a, b| a.radius().total_cmp(&b.radius()));
    }

    /// Restriction to the open ball B(0, r), preserving order.
    pub fn restrict(&self, r: f64) -> PointCloud {
        PointCloud {
            d: self.d,
            lambda: self.lambda,
            radius: r.min(self.radius),
            seed: self.seed,
            points: self
                .points
                .iter()
                .filter(|p| p.radius() < r)
                .cloned()
                .collect(),
        }
    }

    /// Removes the points at the given (sorted, deduplicated) indices.
    pub fn without_indices(&self, drop: &[usize]) -> PointCloud {
        let mut keep = Vec::with_capacity(self.points.len());
        let mut it = drop.iter().peekable();
        for (i, p) in self.points.iter().enumerate() {
            if it.peek() == Some(&&i) {
                it.next();
            } else {
                keep.push(p.clone());
            }
        }
        PointCloud {
            d: self.d,
            lambda: self.lambda,
            radius: self.radius,
            seed: self.seed,
            points: keep,
        }
    }
}

fn draw_count<R: Rng + ?Sized>(mean: f64, cap: u64, rng: &mut R) -> Result<u64> {
    if mean > cap as f64 {
        return Err(Error::CountCapExceeded {
            expected: mean,
            cap,
        });
    }
    if mean == 0.0 {
        return Ok(0);
    }
    let pois = Poisson::new(mean).map_err(|e| Error::invalid(format!("poisson: {e}")))?;
    Ok(pois.sample(rng) as u64)
}

/// Samples a homogeneous PPP of intensity λ in B(0, R). The count is
/// Poisson(λ·Vol(B(R))), radii follow sinh^d via the inverse CDF, directions
/// are uniform on S^d.
pub fn sample_ball(d: usize, lambda: f64, radius: f64, seed: SeedDescriptor) -> Result<PointCloud> {
    sample_ball_capped(d, lambda, radius, seed, DEFAULT_COUNT_CAP)
}

pub fn sample_ball_capped(
    d: usize,
    lambda: f64,
    radius: f64,
    seed: SeedDescriptor,
    cap: u64,
) -> Result<PointCloud> {
    if lambda < 0.0 {
        return Err(Error::invalid("intensity must be >= 0"));
    }
    if radius <= 0.0 {
        return Err(Error::invalid("domain radius must be > 0"));
    }
    let mut rng = seed.rng();
    let mut points = Vec::new();
    if lambda > 0.0 {
        let sampler = RadialSampler::new(d, radius)?;
        let n = draw_count(lambda * sampler.total_volume(), cap, &mut rng)?;
        points.reserve(n as usize);
        for _ in 0..n {
            let r = sampler.sample(&mut rng);
            let dir = sample_direction(d, &mut rng);
            points.push(HPoint::new(r, dir).expect("sampled point is valid"));
        }
    }
    PointCloud::sort_points(&mut points);
    Ok(PointCloud {
        d,
        lambda,
        radius,
        seed,
        points,
    })
}

/// Samples a PPP restricted to a bounded region by rejection from its
/// enclosing origin ball; rejection preserves the Poisson law.
pub fn sample_region(
    d: usize,
    lambda: f64,
    region: &Region,
    seed: SeedDescriptor,
) -> Result<PointCloud> {
    region.validate()?;
    let enclosing = region.enclosing_radius().ok_or(Error::UnboundedRegion)?;
    let ball = sample_ball(d, lambda, enclosing, seed)?;
    let points = ball
        .points
        .into_iter()
        .filter(|p| region.contains(p))
        .collect();
    Ok(PointCloud {
        d,
        lambda,
        radius: enclosing,
        seed,
        points,
    })
}

/// Replaces the configuration inside B(0, r) with a fresh PPP sample,
/// keeping every point at radius >= r untouched. Supports stabilization
/// probes that condition on the configuration outside a ball.
pub fn resample_inside(cloud: &PointCloud, r: f64, seed: SeedDescriptor) -> Result<PointCloud> {
    if !(r > 0.0 && r < cloud.radius) {
        return Err(Error::invalid(format!(
            "resample radius must lie in (0, {}), got {r}",
            cloud.radius
        )));
    }
    let mut rng = seed.rng();
    let mut points: Vec<HPoint> = cloud
        .points
        .iter()
        .filter(|p| p.radius() >= r)
        .cloned()
        .collect();
    if cloud.lambda > 0.0 {
        let sampler = RadialSampler::new(cloud.d, r)?;
        let n = draw_count(
            cloud.lambda * sampler.total_volume(),
            DEFAULT_COUNT_CAP,
            &mut rng,
        )?;
        for _ in 0..n {
            let rad = sampler.sample(&mut rng);
            let dir = sample_direction(cloud.d, &mut rng);
            points.push(HPoint::new(rad, dir).expect("sampled point is valid"));
        }
    }
    PointCloud::sort_points(&mut points);
    Ok(PointCloud {
        d: cloud.d,
        lambda: cloud.lambda,
        radius: cloud.radius,
        seed,
        points,
    })
}
