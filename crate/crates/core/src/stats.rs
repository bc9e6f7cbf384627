//! Small statistics helpers for Monte-Carlo checks.

use statrs::distribution::{ContinuousCDF, StudentsT};

/// A sample mean with its standard error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub std_err: f64,
    pub n: usize,
}

impl Estimate {
    /// Frequency of `hits` successes in `n` Bernoulli trials.
    pub fn bernoulli(hits: usize, n: usize) -> Self {
        if n == 0 {
            return Estimate { mean: 0.0, std_err: 0.0, n };
        }
        let p = hits as f64 / n as f64;
        Estimate { mean: p, std_err: (p * (1.0 - p) / n as f64).sqrt(), n }
    }

    /// Mean of arbitrary samples; the standard error uses the sample variance.
    pub fn from_samples(xs: &[f64]) -> Self {
        let n = xs.len();
        if n == 0 {
            return Estimate { mean: 0.0, std_err: 0.0, n };
        }
        let mean = xs.iter().sum::<f64>() / n as f64;
        if n == 1 {
            return Estimate { mean, std_err: 0.0, n };
        }
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        Estimate { mean, std_err: (var / n as f64).sqrt(), n }
    }

    /// Whether the estimate is at most `bound` plus `sigmas` standard errors.
    pub fn at_most(&self, bound: f64, sigmas: f64) -> bool {
        self.mean <= bound + sigmas * self.std_err
    }
}

/// Average ranks (1-based), ties sharing their mean rank.
pub fn ranks(xs: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..xs.len()).collect();
    idx.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut out = vec![0.0; xs.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && xs[idx[j + 1]] == xs[idx[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            out[k] = rank;
        }
        i = j + 1;
    }
    out
}

/// Spearman rank correlation with a one-sided p-value for a positive trend.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpearmanTest {
    pub rho: f64,
    /// P-value of `H1: rho > 0` under the Student-t approximation.
    pub p_increasing: f64,
    /// P-value of `H1: rho < 0`.
    pub p_decreasing: f64,
}

pub fn spearman(xs: &[f64], ys: &[f64]) -> SpearmanTest {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len();
    let (rx, ry) = (ranks(xs), ranks(ys));
    let mean = (n as f64 + 1.0) / 2.0;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mean) * (b - mean);
        sxx += (a - mean).powi(2);
        syy += (b - mean).powi(2);
    }
    if n < 3 || sxx == 0.0 || syy == 0.0 {
        return SpearmanTest { rho: 0.0, p_increasing: 1.0, p_decreasing: 1.0 };
    }
    let rho = (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0);
    let dof = (n - 2) as f64;
    if rho.abs() >= 1.0 {
        let (pi, pd) = if rho > 0.0 { (0.0, 1.0) } else { (1.0, 0.0) };
        return SpearmanTest { rho, p_increasing: pi, p_decreasing: pd };
    }
    let t = rho * (dof / (1.0 - rho * rho)).sqrt();
    let dist = StudentsT::new(0.0, 1.0, dof).expect("positive degrees of freedom");
    SpearmanTest { rho, p_increasing: 1.0 - dist.cdf(t), p_decreasing: dist.cdf(t) }
}
