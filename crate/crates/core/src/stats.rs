//! Small statistics toolkit: running moments, batch means, goodness-of-fit tests
//! and least-squares fits.

use statrs::distribution::{ChiSquared, ContinuousCDF, FisherSnedecor};

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Moments {
    pub n: u64,
    pub mean: f64,
    m2: f64,
}

impl Moments {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn merge(&mut self, other: &Moments) {
        if other.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = *other;
            return;
        }
        let n = self.n + other.n;
        let delta = other.mean - self.mean;
        self.mean += delta * other.n as f64 / n as f64;
        self.m2 += other.m2 + delta * delta * (self.n as f64) * (other.n as f64) / n as f64;
        self.n = n;
    }

    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            self.m2 / (self.n - 1) as f64
        }
    }

    pub fn stderr(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            (self.variance() / self.n as f64).sqrt()
        }
    }

    pub fn from_slice(xs: &[f64]) -> Self {
        let mut m = Moments::default();
        for &x in xs {
            m.push(x);
        }
        m
    }
}

/// Mean and standard error of equally weighted batch values.
pub fn batch_mean(batches: &[f64]) -> (f64, f64) {
    let m = Moments::from_slice(batches);
    (m.mean, m.stderr())
}

/// Standard error of a Bernoulli proportion; with zero successes the
/// rule-of-three bound `3/n` is returned so that stderr stays informative.
pub fn bernoulli_stderr(successes: u64, trials: u64) -> f64 {
    if trials == 0 {
        return f64::INFINITY;
    }
    let p = successes as f64 / trials as f64;
    if successes == 0 || successes == trials {
        3.0 / trials as f64
    } else {
        (p * (1.0 - p) / trials as f64).sqrt()
    }
}

pub fn pooled_stderr(a: f64, b: f64) -> f64 {
    (a * a + b * b).sqrt()
}

#[derive(Clone, Copy, Debug)]
pub struct TestResult {
    pub statistic: f64,
    pub dof: f64,
    pub p_value: f64,
}

/// Pearson χ² goodness of fit. Cells with expected count below 5 are pooled
/// into one cell before the statistic is formed.
pub fn chi_square(observed: &[u64], probs: &[f64]) -> TestResult {
    assert_eq!(observed.len(), probs.len());
    let total: u64 = observed.iter().sum();
    let n = total as f64;
    let mut cells: Vec<(f64, f64)> = Vec::new();
    let (mut pooled_o, mut pooled_e) = (0.0, 0.0);
    let psum: f64 = probs.iter().sum();
    for (&o, &p) in observed.iter().zip(probs) {
        let e = n * p / psum;
        if e < 5.0 {
            pooled_o += o as f64;
            pooled_e += e;
        } else {
            cells.push((o as f64, e));
        }
    }
    if pooled_e > 0.0 || pooled_o > 0.0 {
        cells.push((pooled_o, pooled_e.max(f64::MIN_POSITIVE)));
    }
    let stat: f64 = cells.iter().map(|(o, e)| (o - e) * (o - e) / e).sum();
    let dof = cells.len().saturating_sub(1).max(1) as f64;
    let p = 1.0 - ChiSquared::new(dof).unwrap().cdf(stat);
    TestResult { statistic: stat, dof, p_value: p }
}

/// Asymptotic Kolmogorov survival function Q(λ) = 2 Σ (-1)^{k-1} e^{-2k²λ²}.
fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=200 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * lambda * lambda).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Two-sample Kolmogorov–Smirnov test (asymptotic p-value with the usual
/// small-sample correction of the effective size).
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> TestResult {
    assert!(!a.is_empty() && !b.is_empty());
    let mut xs = a.to_vec();
    let mut ys = b.to_vec();
    xs.sort_by(|p, q| p.total_cmp(q));
    ys.sort_by(|p, q| p.total_cmp(q));
    let (n, m) = (xs.len(), ys.len());
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < n && j < m {
        let v = xs[i].min(ys[j]);
        while i < n && xs[i] <= v {
            i += 1;
        }
        while j < m && ys[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    let ne = (n as f64 * m as f64) / (n + m) as f64;
    let lambda = (ne.sqrt() + 0.12 + 0.11 / ne.sqrt()) * d;
    TestResult { statistic: d, dof: ne, p_value: kolmogorov_q(lambda) }
}

/// F test comparing the spread of batch means against the within-batch
/// variance; a small p-value flags dependence between batches.
pub fn batch_f_test(batches: &[Moments]) -> TestResult {
    let k = batches.len();
    assert!(k >= 2);
    let mut all = Moments::default();
    for b in batches {
        all.merge(b);
    }
    let ss_between: f64 = batches
        .iter()
        .map(|b| b.n as f64 * (b.mean - all.mean).powi(2))
        .sum();
    let ss_within: f64 = batches.iter().map(|b| b.variance() * (b.n.max(1) - 1) as f64).sum();
    let df1 = (k - 1) as f64;
    let df2 = (all.n as f64 - k as f64).max(1.0);
    let f = if ss_within > 0.0 { (ss_between / df1) / (ss_within / df2) } else { 0.0 };
    let p = 1.0 - FisherSnedecor::new(df1, df2).unwrap().cdf(f);
    TestResult { statistic: f, dof: df1, p_value: p }
}

#[derive(Clone, Copy, Debug)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_stderr: f64,
    pub intercept_stderr: f64,
}

/// Ordinary least squares for `y = intercept + slope·x`, optionally weighted.
pub fn linear_fit(x: &[f64], y: &[f64], weights: Option<&[f64]>) -> LinearFit {
    assert_eq!(x.len(), y.len());
    assert!(x.len() >= 2);
    let w: Vec<f64> = match weights {
        Some(w) => w.to_vec(),
        None => vec![1.0; x.len()],
    };
    let sw: f64 = w.iter().sum();
    let mx = x.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() / sw;
    let my = y.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() / sw;
    let sxx: f64 = x.iter().zip(&w).map(|(a, b)| b * (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).zip(&w).map(|((a, c), b)| b * (a - mx) * (c - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let n = x.len() as f64;
    let (slope_stderr, intercept_stderr) = if weights.is_some() {
        // Weights are inverse variances: covariance of the estimates is (XᵀWX)⁻¹.
        ((1.0 / sxx).sqrt(), (1.0 / sw + mx * mx / sxx).sqrt())
    } else if x.len() > 2 {
        let rss: f64 = x
            .iter()
            .zip(y)
            .map(|(a, c)| (c - intercept - slope * a).powi(2))
            .sum();
        let s2 = rss / (n - 2.0);
        ((s2 / sxx).sqrt(), (s2 * (1.0 / n + mx * mx / sxx)).sqrt())
    } else {
        (0.0, 0.0)
    };
    LinearFit { slope, intercept, slope_stderr, intercept_stderr }
}

/// Linear-interpolated quantile of unsorted data.
pub fn quantile(data: &[f64], q: f64) -> f64 {
    assert!(!data.is_empty());
    let mut v = data.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let pos = q.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    v[lo] * (1.0 - frac) + v[hi] * frac
}

pub fn median(data: &[f64]) -> f64 {
    quantile(data, 0.5)
}
