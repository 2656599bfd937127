//! Error analysis for correlated Monte Carlo series.

use serde::Serialize;

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance.
pub fn variance(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 2 {
        return 0.0;
    }
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1) as f64
}

/// Standard error of the mean of `xs` treated as independent.
pub fn naive_std_error(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    (variance(xs) / xs.len() as f64).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlockingResult {
    pub mean: f64,
    /// Conservative estimate: the largest level estimate among levels that
    /// keep at least [`MIN_BLOCKS`] blocks.
    pub std_error: f64,
    /// `(block size, standard error)` for each level.
    pub levels: Vec<(usize, f64)>,
}

pub const MIN_BLOCKS: usize = 32;

/// Flyvbjerg-Petersen blocking: pairwise-average the series repeatedly and
/// track the naive standard error at each level.
pub fn blocking(xs: &[f64]) -> BlockingResult {
    let m = mean(xs);
    let mut cur: Vec<f64> = xs.to_vec();
    let mut levels = Vec::new();
    let mut size = 1;
    while cur.len() >= MIN_BLOCKS {
        levels.push((size, naive_std_error(&cur)));
        cur = cur.chunks_exact(2).map(|c| 0.5 * (c[0] + c[1])).collect();
        size *= 2;
    }
    let std_error = levels
        .iter()
        .map(|l| l.1)
        .fold(naive_std_error(xs), f64::max);
    BlockingResult {
        mean: m,
        std_error,
        levels,
    }
}

/// Integrated autocorrelation time `τ = 1 + 2Σ_t ρ(t)` with Sokal's
/// self-consistent window (stop at the first `M ≥ c·τ(M)`, `c = 5`).
/// Returns 1 for a constant series.
pub fn integrated_autocorrelation_time(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 2 {
        return 1.0;
    }
    let m = mean(xs);
    let c0: f64 = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / n as f64;
    if c0 <= 0.0 {
        return 1.0;
    }
    let mut tau = 1.0;
    for t in 1..n / 2 {
        let ct: f64 = xs[..n - t]
            .iter()
            .zip(&xs[t..])
            .map(|(a, b)| (a - m) * (b - m))
            .sum::<f64>()
            / n as f64;
        tau += 2.0 * ct / c0;
        if t as f64 >= 5.0 * tau {
            break;
        }
    }
    tau.max(1.0 / n as f64)
}

/// `n/τ`, clamped to `[1, n]`.
pub fn effective_sample_size(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return 0.0;
    }
    (n / integrated_autocorrelation_time(xs)).clamp(1.0, n)
}

/// Contiguous ranges splitting `0..total` into `batches` near-equal parts.
pub fn batch_ranges(total: usize, batches: usize) -> Vec<std::ops::Range<usize>> {
    let batches = batches.clamp(1, total.max(1));
    let base = total / batches;
    let extra = total % batches;
    let mut start = 0;
    (0..batches)
        .map(|b| {
            let len = base + usize::from(b < extra);
            let r = start..start + len;
            start += len;
            r
        })
        .collect()
}

/// Mean and standard error from equally weighted batch estimates.
pub fn batch_mean_error(values: &[f64]) -> (f64, f64) {
    (mean(values), naive_std_error(values))
}
