//! Empirical distributions and quantiles over KPI samples.

/// Right-continuous empirical CDF: sorted unique values with the cumulative
/// fraction of samples at or below each. Empty input gives an empty curve.
pub fn ecdf(samples: &[f64]) -> Vec<(f64, f64)> {
    if samples.is_empty() {
        return Vec::new();
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("no NaN in samples"));
    let n = sorted.len() as f64;
    let mut out: Vec<(f64, f64)> = Vec::new();
    for (i, v) in sorted.iter().enumerate() {
        let frac = (i + 1) as f64 / n;
        match out.last_mut() {
            // Duplicate values merge into one step at the highest fraction.
            Some(last) if last.0 == *v => last.1 = frac,
            _ => out.push((*v, frac)),
        }
    }
    out
}

/// Complementary CDF: `1 - ecdf` at every step; the final point is 0.
pub fn ccdf(samples: &[f64]) -> Vec<(f64, f64)> {
    ecdf(samples)
        .into_iter()
        .map(|(v, f)| (v, 1.0 - f))
        .collect()
}

/// Empirical q-quantile (order statistic at rank `ceil(q n)`), `q` in (0,1].
pub fn quantile(samples: &[f64], q: f64) -> Option<f64> {
    if samples.is_empty() || !(0.0..=1.0).contains(&q) || q == 0.0 {
        return None;
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("no NaN in samples"));
    let rank = (q * sorted.len() as f64).ceil() as usize;
    Some(sorted[rank.max(1) - 1])
}

/// Outage-latency estimate at target probability `p`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutageEstimate {
    /// The (1-p)-quantile; `None` when the quantile falls into the failed
    /// (infinite-latency) mass, or when there are no samples at all.
    pub value_ms: Option<f64>,
    /// Fewer than `10 / p` samples: the estimate is statistically hollow.
    pub insufficient: bool,
    /// Completed plus failed packets behind the estimate.
    pub total_samples: usize,
    pub failed: usize,
}

/// Empirical (1-p)-quantile of the latency distribution with HARQ-failed
/// packets censored at rank +infinity. `completed` holds finite latencies of
/// delivered packets; `failed` counts packets that never arrived.
pub fn outage_latency(completed: &[f64], failed: usize, p: f64) -> OutageEstimate {
    assert!(p > 0.0 && p < 1.0, "outage probability in (0,1)");
    let n = completed.len() + failed;
    let insufficient = (n as f64) < 10.0 / p;
    if n == 0 {
        return OutageEstimate {
            value_ms: None,
            insufficient: true,
            total_samples: 0,
            failed,
        };
    }
    let mut sorted = completed.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("no NaN in samples"));
    let rank = ((1.0 - p) * n as f64).ceil() as usize;
    let idx = rank.max(1) - 1;
    let value_ms = sorted.get(idx).copied();
    OutageEstimate {
        value_ms,
        insufficient,
        total_samples: n,
        failed,
    }
}

/// Symmetric percentage difference `(a - b) / ((a + b) / 2) * 100`.
pub fn symmetric_percent(a: f64, b: f64) -> f64 {
    let mid = (a + b) / 2.0;
    if mid == 0.0 {
        return 0.0;
    }
    (a - b) / mid * 100.0
}
