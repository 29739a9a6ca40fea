//! Deterministic reductions used by the Monte Carlo and enumeration code.

const PAIRWISE_BLOCK: usize = 32;

/// Pairwise (tree) summation with a fixed split shape: the result depends only
/// on the slice contents and order.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= PAIRWISE_BLOCK {
        xs.iter().sum()
    } else {
        let mid = xs.len() / 2;
        pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
    }
}

pub fn mean(xs: &[f64]) -> f64 {
    pairwise_sum(xs) / xs.len() as f64
}

/// Mean, unbiased sample variance and standard error of the mean.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub mean: f64,
    pub variance: f64,
    pub se: f64,
    /// Excess kurtosis; NaN when the variance is zero.
    pub excess_kurtosis: f64,
}

pub fn summarize(xs: &[f64]) -> Summary {
    let n = xs.len() as f64;
    let m = mean(xs);
    let centered: Vec<f64> = xs.iter().map(|x| x - m).collect();
    let sq: Vec<f64> = centered.iter().map(|c| c * c).collect();
    let m2 = pairwise_sum(&sq) / n;
    let q: Vec<f64> = sq.iter().map(|s| s * s).collect();
    let m4 = pairwise_sum(&q) / n;
    let variance = if xs.len() > 1 { m2 * n / (n - 1.0) } else { 0.0 };
    let excess_kurtosis = if m2 > 0.0 { m4 / (m2 * m2) - 3.0 } else { f64::NAN };
    Summary {
        mean: m,
        variance,
        se: (variance / n).sqrt(),
        excess_kurtosis,
    }
}
