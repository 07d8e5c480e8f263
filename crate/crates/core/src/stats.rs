//! Correlation and variance-analysis primitives.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, FisherSnedecor, Normal};

use crate::error::StatsError;

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Population standard deviation; 0 for an empty slice.
pub fn pop_std(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    let m = mean(xs);
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / xs.len() as f64).sqrt()
}

/// Sample (n − 1) standard deviation; 0 for fewer than two values.
pub fn sample_std(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

/// Pearson product-moment correlation.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64, StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 2 {
        return Err(StatsError::TooFew {
            needed: 2,
            got: x.len(),
        });
    }
    let (mx, my) = (mean(x), mean(y));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(StatsError::ZeroVariance);
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KendallResult {
    pub tau: f64,
    /// Two-sided p-value from the tie-corrected normal approximation.
    pub p_value: f64,
    pub concordant: u64,
    pub discordant: u64,
    pub n: usize,
}

fn tie_sums(xs: &[f64]) -> (f64, f64, f64) {
    let mut sorted = xs.to_vec();
    sorted.sort_by(f64::total_cmp);
    let (mut pairs, mut v0, mut v1) = (0.0, 0.0, 0.0);
    for group in sorted.chunk_by(|a, b| a == b) {
        let t = group.len() as f64;
        if t > 1.0 {
            pairs += t * (t - 1.0) / 2.0;
            v0 += t * (t - 1.0) * (t - 2.0);
            v1 += t * (t - 1.0) * (2.0 * t + 5.0);
        }
    }
    (pairs, v0, v1)
}

/// Kendall's tau-b with a two-sided significance test.
pub fn kendall_tau_test(x: &[f64], y: &[f64]) -> Result<KendallResult, StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::LengthMismatch(x.len(), y.len()));
    }
    let n = x.len();
    if n < 2 {
        return Err(StatsError::TooFew { needed: 2, got: n });
    }
    let (mut concordant, mut discordant) = (0u64, 0u64);
    for i in 0..n {
        for j in i + 1..n {
            if x[i] == x[j] || y[i] == y[j] {
                continue;
            }
            if (x[i] < x[j]) == (y[i] < y[j]) {
                concordant += 1;
            } else {
                discordant += 1;
            }
        }
    }
    let (xtie, x0, x1) = tie_sums(x);
    let (ytie, y0, y1) = tie_sums(y);
    let nf = n as f64;
    let total = nf * (nf - 1.0) / 2.0;
    let denom = ((total - xtie) * (total - ytie)).sqrt();
    if denom == 0.0 {
        return Err(StatsError::AllTies);
    }
    let s = concordant as f64 - discordant as f64;
    let tau = (s / denom).clamp(-1.0, 1.0);

    let m = nf * (nf - 1.0);
    let mut var = (m * (2.0 * nf + 5.0) - x1 - y1) / 18.0 + 2.0 * xtie * ytie / m;
    if n > 2 {
        var += x0 * y0 / (9.0 * m * (nf - 2.0));
    }
    let p_value = if var > 0.0 {
        let z = s / var.sqrt();
        let normal = Normal::standard();
        (2.0 * normal.sf(z.abs())).min(1.0)
    } else {
        1.0
    };
    Ok(KendallResult {
        tau,
        p_value,
        concordant,
        discordant,
        n,
    })
}

/// Kendall's tau-b coefficient.
pub fn kendall_tau(x: &[f64], y: &[f64]) -> Result<f64, StatsError> {
    kendall_tau_test(x, y).map(|r| r.tau)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnovaResult {
    pub f: f64,
    pub p_value: f64,
    pub df_between: usize,
    pub df_within: usize,
    pub ss_between: f64,
    pub ss_within: f64,
}

/// Classical one-way ANOVA.
pub fn anova_oneway(groups: &[Vec<f64>]) -> Result<AnovaResult, StatsError> {
    if groups.len() < 2 || groups.iter().any(|g| g.len() < 2) {
        return Err(StatsError::TooFewGroups);
    }
    let total_n: usize = groups.iter().map(Vec::len).sum();
    let grand = groups.iter().flatten().sum::<f64>() / total_n as f64;
    let (mut ss_between, mut ss_within) = (0.0, 0.0);
    for g in groups {
        let m = mean(g);
        ss_between += g.len() as f64 * (m - grand).powi(2);
        ss_within += g.iter().map(|x| (x - m).powi(2)).sum::<f64>();
    }
    if ss_within == 0.0 {
        return Err(StatsError::ZeroVariance);
    }
    let df_between = groups.len() - 1;
    let df_within = total_n - groups.len();
    let f = (ss_between / df_between as f64) / (ss_within / df_within as f64);
    let p_value = if f == 0.0 {
        1.0
    } else {
        FisherSnedecor::new(df_between as f64, df_within as f64)
            .expect("degrees of freedom are positive")
            .sf(f)
    };
    Ok(AnovaResult {
        f,
        p_value,
        df_between,
        df_within,
        ss_between,
        ss_within,
    })
}
