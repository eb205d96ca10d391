//! Structured report documents and Q-Q residual diagnostics.
//!
//! The Q-Q diagnostic standardizes the per-SNP residuals of the fitted
//! linear relation, r_j = (Γ̂_j − β̂γ̂_j)/√(σ̂²_Yj + τ̂² + β̂²σ̂²_Xj)
//! (τ̂² only when pleiotropy-adjusted, clamped at 0), which should look
//! standard normal when the model holds. The output is plot-ready pairs
//! (Φ⁻¹((i−½)/p), r_(i)); no rendering happens here.

use serde::Serialize;

use crate::data_model::SummaryDataset;
use crate::estimators::EstimateReport;
use crate::math::normal_quantile;
use crate::selection::StrengthEstimates;

/// Q-Q data: sorted standardized residuals against normal quantiles.
#[derive(Clone, Debug, Serialize)]
pub struct QqData {
    /// Φ⁻¹((i − 0.5)/p) for i = 1..p.
    pub theoretical: Vec<f64>,
    /// Standardized residuals, sorted ascending, same length.
    pub residual: Vec<f64>,
}

/// Top-level report emitted by the CLI (JSON form is schema-stable).
#[derive(Clone, Debug, Serialize)]
pub struct ReportDocument {
    pub tool_version: String,
    /// SHA-256 of the input file, hex-encoded with a `sha256:` prefix.
    pub input_digest: String,
    pub estimates: Vec<EstimateReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub strength: Option<StrengthEstimates>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub qq: Option<QqData>,
    pub warnings: Vec<String>,
}

/// Standardized residuals in record order (length p, unscreened).
///
/// `tau2` is the raw τ̂² when the caller wants pleiotropy-adjusted
/// residuals; it is clamped at 0 inside the denominator.
pub fn standardized_residuals(
    dataset: &SummaryDataset,
    beta_hat: f64,
    tau2: Option<f64>,
) -> Vec<f64> {
    let t2 = tau2.unwrap_or(0.0).max(0.0);
    let b2 = beta_hat * beta_hat;
    dataset
        .records()
        .iter()
        .map(|r| {
            let denom = (r.se_y * r.se_y + t2 + b2 * r.se_x * r.se_x).sqrt();
            (r.big_gamma_hat - beta_hat * r.gamma_hat) / denom
        })
        .collect()
}

/// Pairs sorted residuals with their theoretical normal quantiles.
pub fn qq_data(residuals: &[f64]) -> QqData {
    let p = residuals.len();
    let mut sorted = residuals.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let theoretical = (1..=p)
        .map(|i| normal_quantile((i as f64 - 0.5) / p as f64))
        .collect();
    QqData {
        theoretical,
        residual: sorted,
    }
}

/// Two-sided Kolmogorov–Smirnov distance of sorted standardized residuals
/// from N(0, 1). Exposed for the diagnostics tests.
pub fn ks_statistic_normal(sorted_residuals: &[f64]) -> f64 {
    let n = sorted_residuals.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &r) in sorted_residuals.iter().enumerate() {
        let cdf = crate::math::normal_cdf(r);
        let hi = (i as f64 + 1.0) / n - cdf;
        let lo = cdf - i as f64 / n;
        d = d.max(hi).max(lo);
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data_model::{PopulationParams, SnpRecord, SummaryDataset};
    use crate::estimators::{divw, SelectionSet};
    use crate::simulation::gen_summary_level;

    #[test]
    fn residuals_are_zero_on_exact_fit() {
        let records = (0..4)
            .map(|j| {
                let g = 0.5 + j as f64 * 0.1;
                SnpRecord {
                    id: format!("rs{j}"),
                    gamma_hat: g,
                    se_x: 0.1,
                    big_gamma_hat: 0.4 * g,
                    se_y: 0.2,
                    gamma_star: None,
                    se_x_star: None,
                }
            })
            .collect();
        let ds = SummaryDataset::new(records).unwrap();
        for r in standardized_residuals(&ds, 0.4, None) {
            assert!(r.abs() < 1e-14);
        }
    }

    #[test]
    fn qq_pairs_are_sorted_and_full_length() {
        let res = vec![0.3, -1.2, 0.0, 2.4, -0.7];
        let qq = qq_data(&res);
        assert_eq!(qq.theoretical.len(), 5);
        assert_eq!(qq.residual.len(), 5);
        assert!(qq.residual.windows(2).all(|w| w[0] <= w[1]));
        assert!(qq.theoretical.windows(2).all(|w| w[0] < w[1]));
        // Quantiles are symmetric about 0 for a symmetric grid.
        assert!((qq.theoretical[0] + qq.theoretical[4]).abs() < 1e-12);
    }

    /// Data generated exactly under the normal measurement model: the KS
    /// distance of the standardized residuals from N(0,1) should stay below
    /// the 1% critical value in (at least) 95% of replications.
    #[test]
    fn ks_distance_small_under_the_model() {
        let p = 500;
        let params = PopulationParams {
            gamma: vec![0.5; p],
            sigma_x: vec![0.02; p],
            sigma_y: vec![0.1; p],
            sigma_x_star: vec![0.02; p],
            beta0: 0.4,
            tau0: 0.0,
            alpha: Vec::new(),
        };
        // Asymptotic 1% critical value c(α)/√p with c(0.01) ≈ 1.628.
        let crit = 1.628 / (p as f64).sqrt();
        let reps = 200;
        let mut below = 0;
        for rep in 0..reps {
            let ds = gen_summary_level(&params, 77, rep);
            let beta = divw(&ds, &SelectionSet::all(p)).unwrap();
            let mut res = standardized_residuals(&ds, beta, None);
            res.sort_by(|a, b| a.partial_cmp(b).unwrap());
            if ks_statistic_normal(&res) < crit {
                below += 1;
            }
        }
        assert!(
            below as f64 >= 0.95 * reps as f64,
            "only {below}/{reps} replications below the 1% critical value"
        );
    }
}
