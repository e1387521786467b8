//! Gaussian tail helpers, the truncated normal, and goodness-of-fit tools.

use statrs::function::erf::erfc;

use crate::error::{Error, Result};

/// Gaussian upper tail `Q(x) = P(N(0,1) > x)`.
pub fn q_function(x: f64) -> f64 {
    0.5 * erfc(x / std::f64::consts::SQRT_2)
}

/// `P(a <= N(0,1) <= b)`, evaluated on the tail that keeps precision.
pub fn normal_interval(a: f64, b: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    if a >= 0.0 {
        q_function(a) - q_function(b)
    } else if b <= 0.0 {
        q_function(-b) - q_function(-a)
    } else {
        1.0 - q_function(b) - q_function(-a)
    }
}

/// Normal distribution truncated to `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncatedNormal {
    pub mean: f64,
    pub sd: f64,
    pub lo: f64,
    pub hi: f64,
    norm: f64,
}

impl TruncatedNormal {
    pub fn new(mean: f64, variance: f64, lo: f64, hi: f64) -> Result<Self> {
        if !(variance > 0.0) || !variance.is_finite() {
            return Err(Error::InvalidParameter(format!("variance must be positive, got {variance}")));
        }
        if !(lo < hi) {
            return Err(Error::InvalidParameter(format!("empty support [{lo}, {hi}]")));
        }
        let sd = variance.sqrt();
        let norm = normal_interval((lo - mean) / sd, (hi - mean) / sd);
        if !(norm > 0.0) {
            return Err(Error::Numerical("truncated normal has no mass on its support".into()));
        }
        Ok(Self {
            mean,
            sd,
            lo,
            hi,
            norm,
        })
    }

    /// Probability mass of the untruncated normal inside the support.
    pub fn support_mass(&self) -> f64 {
        self.norm
    }

    pub fn pdf(&self, x: f64) -> f64 {
        if x < self.lo || x > self.hi {
            return 0.0;
        }
        let z = (x - self.mean) / self.sd;
        (-0.5 * z * z).exp() / ((2.0 * std::f64::consts::PI).sqrt() * self.sd * self.norm)
    }

    /// `P(a <= X <= b)`.
    pub fn interval(&self, a: f64, b: f64) -> f64 {
        let a = a.max(self.lo);
        let b = b.min(self.hi);
        let p = normal_interval((a - self.mean) / self.sd, (b - self.mean) / self.sd) / self.norm;
        p.clamp(0.0, 1.0)
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x <= self.lo {
            0.0
        } else if x >= self.hi {
            1.0
        } else {
            self.interval(self.lo, x)
        }
    }
}

/// One-sample Kolmogorov-Smirnov statistic of `samples` against `cdf`.
pub fn ks_statistic(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut xs = samples.to_vec();
    xs.sort_by(|a, b| a.total_cmp(b));
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

/// Asymptotic p-value of the KS statistic `d` for `n` samples, with the
/// Stephens small-sample correction.
pub fn ks_p_value(d: f64, n: usize) -> f64 {
    let sn = (n as f64).sqrt();
    let lambda = (sn + 0.12 + 0.11 / sn) * d;
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    for j in 1..=100 {
        let term = (-2.0 * (j * j) as f64 * lambda * lambda).exp();
        sum += if j % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Binomial standard error `sqrt(p (1 - p) / trials)`.
pub fn binomial_std_error(p: f64, trials: usize) -> f64 {
    (p * (1.0 - p) / trials as f64).max(0.0).sqrt()
}

/// Sample mean and unbiased variance.
pub fn mean_variance(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var)
}
