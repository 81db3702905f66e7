//! Statistical helpers for the experiments and the verification suites:
//! confidence intervals, regression with jackknife errors, and the rank /
//! distribution tests the acceptance checks call for.

use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

pub const Z_95: f64 = 1.959963984540054;

/// Sample mean and standard error of the mean.
pub fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, f64::INFINITY);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n as f64 - 1.0);
    (mean, (var / n as f64).sqrt())
}

/// Wilson score interval for a binomial proportion.
pub fn wilson_interval(successes: u64, trials: u64, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// Ordinary least squares fit y = slope·x + intercept.
pub fn ols(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Regression of a transform of across-replication level means against the
/// level grid, with a delete-one jackknife over replications for the slope's
/// standard error. `values[k][j]` is replication k's statistic at level j.
pub fn jackknife_slope(
    levels: &[f64],
    values: &[Vec<f64>],
    transform: impl Fn(f64) -> f64,
) -> (f64, f64) {
    let reps = values.len();
    let nl = levels.len();
    assert!(reps >= 2 && nl >= 2);
    let mut sums = vec![0.0; nl];
    for row in values {
        for (s, v) in sums.iter_mut().zip(row) {
            *s += v;
        }
    }
    let full_means: Vec<f64> = sums.iter().map(|s| transform(s / reps as f64)).collect();
    let (slope, _) = ols(levels, &full_means);
    let mut jack = Vec::with_capacity(reps);
    for row in values {
        let means: Vec<f64> = sums
            .iter()
            .zip(row)
            .map(|(s, v)| transform((s - v) / (reps as f64 - 1.0)))
            .collect();
        jack.push(ols(levels, &means).0);
    }
    let jbar = jack.iter().sum::<f64>() / reps as f64;
    let var = jack.iter().map(|s| (s - jbar) * (s - jbar)).sum::<f64>() * (reps as f64 - 1.0)
        / reps as f64;
    (slope, var.sqrt())
}

/// One-sided Mann–Whitney test of H1: `a` is stochastically smaller than `b`.
/// Normal approximation with tie correction and continuity correction.
pub fn mann_whitney_less(a: &[f64], b: &[f64]) -> f64 {
    let n1 = a.len() as f64;
    let n2 = b.len() as f64;
    if n1 == 0.0 || n2 == 0.0 {
        return 1.0;
    }
    let mut pooled: Vec<(f64, usize)> = a
        .iter()
        .map(|&x| (x, 0))
        .chain(b.iter().map(|&x| (x, 1)))
        .collect();
    pooled.sort_by(|x, y| x.0.total_cmp(&y.0));
    let n = pooled.len();
    let mut ranks = vec![0.0; n];
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && pooled[j + 1].0 == pooled[i].0 {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for r in ranks.iter_mut().take(j + 1).skip(i) {
            *r = avg;
        }
        let t = (j - i + 1) as f64;
        tie_term += t * t * t - t;
        i = j + 1;
    }
    let r1: f64 = pooled
        .iter()
        .zip(&ranks)
        .filter(|((_, g), _)| *g == 0)
        .map(|(_, r)| r)
        .sum();
    let u1 = r1 - n1 * (n1 + 1.0) / 2.0;
    let mean = n1 * n2 / 2.0;
    let nn = n as f64;
    let var = n1 * n2 / 12.0 * ((nn + 1.0) - tie_term / (nn * (nn - 1.0)));
    if var <= 0.0 {
        return if u1 < mean { 0.0 } else { 1.0 };
    }
    let z = (u1 - mean + 0.5) / var.sqrt();
    let normal = Normal::new(0.0, 1.0).unwrap();
    normal.cdf(z)
}

fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let term = (-2.0 * (k as f64) * (k as f64) * lambda * lambda).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Asymptotic two-sample Kolmogorov–Smirnov p-value.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let mut xs: Vec<f64> = a.to_vec();
    let mut ys: Vec<f64> = b.to_vec();
    xs.sort_by(f64::total_cmp);
    ys.sort_by(f64::total_cmp);
    let (n1, n2) = (xs.len(), ys.len());
    if n1 == 0 || n2 == 0 {
        return 1.0;
    }
    let mut d: f64 = 0.0;
    let (mut i, mut j) = (0usize, 0usize);
    while i < n1 && j < n2 {
        let x = xs[i].min(ys[j]);
        while i < n1 && xs[i] <= x {
            i += 1;
        }
        while j < n2 && ys[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / n1 as f64 - j as f64 / n2 as f64).abs());
    }
    let ne = (n1 as f64 * n2 as f64) / (n1 as f64 + n2 as f64);
    let sqrt_ne = ne.sqrt();
    kolmogorov_sf((sqrt_ne + 0.12 + 0.11 / sqrt_ne) * d)
}

/// One-sample KS test against the uniform law on [0,1].
pub fn ks_uniform01(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        return 1.0;
    }
    let mut d: f64 = 0.0;
    for (i, x) in v.iter().enumerate() {
        d = d.max((x - i as f64 / n as f64).abs());
        d = d.max(((i + 1) as f64 / n as f64 - x).abs());
    }
    let sqrt_n = (n as f64).sqrt();
    kolmogorov_sf((sqrt_n + 0.12 + 0.11 / sqrt_n) * d)
}

/// Chi-square homogeneity test for two samples of small counts, binned into
/// at most `max_bins` value classes with sparse tails pooled so every
/// expected cell count stays above 5.
pub fn chi_square_homogeneity(a: &[f64], b: &[f64], max_bins: usize) -> f64 {
    let lo = a
        .iter()
        .chain(b)
        .fold(f64::INFINITY, |m, &x| m.min(x))
        .floor();
    let hi = a
        .iter()
        .chain(b)
        .fold(f64::NEG_INFINITY, |m, &x| m.max(x))
        .ceil();
    if hi <= lo {
        return 1.0;
    }
    let bins = max_bins.max(2);
    let width = (hi - lo) / bins as f64;
    let index = |x: f64| (((x - lo) / width) as usize).min(bins - 1);
    let mut ca = vec![0.0; bins];
    let mut cb = vec![0.0; bins];
    for &x in a {
        ca[index(x)] += 1.0;
    }
    for &x in b {
        cb[index(x)] += 1.0;
    }
    // pool bins until every pooled expected count is >= 5
    let na: f64 = ca.iter().sum();
    let nb: f64 = cb.iter().sum();
    let total = na + nb;
    let mut pooled: Vec<(f64, f64)> = Vec::new();
    let mut acc = (0.0, 0.0);
    for i in 0..bins {
        acc.0 += ca[i];
        acc.1 += cb[i];
        let tot = acc.0 + acc.1;
        if tot * na / total >= 5.0 && tot * nb / total >= 5.0 {
            pooled.push(acc);
            acc = (0.0, 0.0);
        }
    }
    if acc.0 + acc.1 > 0.0 {
        if let Some(last) = pooled.last_mut() {
            last.0 += acc.0;
            last.1 += acc.1;
        } else {
            pooled.push(acc);
        }
    }
    if pooled.len() < 2 {
        return 1.0;
    }
    let mut stat = 0.0;
    for &(oa, ob) in &pooled {
        let row = oa + ob;
        let ea = row * na / total;
        let eb = row * nb / total;
        stat += (oa - ea) * (oa - ea) / ea + (ob - eb) * (ob - eb) / eb;
    }
    let df = (pooled.len() - 1) as f64;
    let chi = ChiSquared::new(df).unwrap();
    1.0 - chi.cdf(stat)
}
