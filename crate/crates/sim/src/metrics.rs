//! Frequentist summary metrics over simulation replicates: bias, empirical
//! standard error, root mean squared error, and credible-interval coverage
//! for the linear coefficients; pointwise and domain-averaged coverage for
//! the smooth terms.

/// Covariate locations at which pointwise smooth coverage is tracked.
pub const COVERAGE_POINTS: [f64; 9] = [-0.95, -0.70, -0.50, -0.20, 0.0, 0.20, 0.50, 0.70, 0.95];

/// Number of equidistant domain points for averaged smooth coverage.
pub const AVG_COVERAGE_POINTS: usize = 200;

/// Credible levels tracked for domain-averaged smooth coverage.
pub const AVG_COVERAGE_LEVELS: [f64; 3] = [0.90, 0.95, 0.99];

/// Per-coefficient frequentist summaries (coverage in percent).
#[derive(Debug, Clone, PartialEq)]
pub struct BetaMetrics {
    pub truth: f64,
    pub bias: f64,
    pub cp90: f64,
    pub cp95: f64,
    pub ese: f64,
    pub rmse: f64,
}

/// Per-smooth coverage summaries (percent).
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothMetrics {
    /// 90% pointwise coverage at each of [`COVERAGE_POINTS`].
    pub pointwise_cp90: Vec<f64>,
    /// Coverage averaged over the domain grid, one entry per level in
    /// [`AVG_COVERAGE_LEVELS`].
    pub avg_cp: [f64; 3],
}

/// Metrics for one fit variant over all successful replicates.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsTable {
    pub beta: Vec<BetaMetrics>,
    pub smooths: Vec<SmoothMetrics>,
}

/// Raw per-replicate outcomes for one variant.
#[derive(Debug, Clone)]
pub(crate) struct VariantRecord {
    pub beta_est: Vec<f64>,
    pub beta_cover90: Vec<bool>,
    pub beta_cover95: Vec<bool>,
    /// `[smooth][location]` 90% coverage indicators.
    pub point_cover90: Vec<Vec<bool>>,
    /// `[smooth][level][grid point]` coverage indicators.
    pub avg_cover: Vec<Vec<Vec<bool>>>,
}

pub(crate) fn aggregate(records: &[&VariantRecord], beta_truth: &[f64]) -> MetricsTable {
    let s = records.len();
    let sf = s as f64;
    let p = beta_truth.len();
    let mut beta = Vec::with_capacity(p);
    for (k, &truth) in beta_truth.iter().enumerate() {
        let ests: Vec<f64> = records.iter().map(|r| r.beta_est[k]).collect();
        let mean = ests.iter().sum::<f64>() / sf;
        let bias = mean - truth;
        let ese = if s > 1 {
            (ests.iter().map(|e| (e - mean) * (e - mean)).sum::<f64>() / (sf - 1.0)).sqrt()
        } else {
            0.0
        };
        let rmse = (ests.iter().map(|e| (e - truth) * (e - truth)).sum::<f64>() / sf).sqrt();
        let cp90 =
            100.0 * records.iter().filter(|r| r.beta_cover90[k]).count() as f64 / sf;
        let cp95 =
            100.0 * records.iter().filter(|r| r.beta_cover95[k]).count() as f64 / sf;
        beta.push(BetaMetrics {
            truth,
            bias,
            cp90,
            cp95,
            ese,
            rmse,
        });
    }

    let q = records.first().map_or(0, |r| r.point_cover90.len());
    let mut smooths = Vec::with_capacity(q);
    for j in 0..q {
        let pointwise_cp90 = (0..COVERAGE_POINTS.len())
            .map(|l| {
                100.0 * records.iter().filter(|r| r.point_cover90[j][l]).count() as f64 / sf
            })
            .collect();
        let mut avg_cp = [0.0; 3];
        for (li, slot) in avg_cp.iter_mut().enumerate() {
            let total: usize = records
                .iter()
                .map(|r| r.avg_cover[j][li].iter().filter(|c| **c).count())
                .sum();
            *slot = 100.0 * total as f64 / (sf * AVG_COVERAGE_POINTS as f64);
        }
        smooths.push(SmoothMetrics {
            pointwise_cp90,
            avg_cp,
        });
    }

    MetricsTable { beta, smooths }
}
