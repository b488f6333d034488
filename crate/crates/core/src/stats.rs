//! Mean / sample standard deviation shared by the robust tuning objective and
//! the rewrite reproducibility analysis.

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Sample standard deviation (divisor `n - 1`). A single value has zero spread.
pub fn sample_std(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let mu = mean(values);
    let ss: f64 = values.iter().map(|v| (v - mu) * (v - mu)).sum();
    (ss / (values.len() - 1) as f64).sqrt()
}

/// `(μ, σ, μ − α·σ)`.
pub fn robust_score(values: &[f64], alpha: f64) -> (f64, f64, f64) {
    let mu = mean(values);
    let sigma = sample_std(values);
    (mu, sigma, mu - alpha * sigma)
}
