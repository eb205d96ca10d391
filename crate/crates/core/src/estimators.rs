//! IVW and dIVW point and variance estimators.
//!
//! All estimators are pure functions of a [`SummaryDataset`] and a
//! [`SelectionSet`]. With per-SNP weights ŵ_j = γ̂_j²/σ̂²_Yj and
//! v̂_j = σ̂²_Xj/σ̂²_Yj:
//!
//! - IVW:  β̂ = Σ Γ̂_j γ̂_j σ̂_Yj⁻² / Σ γ̂_j² σ̂_Yj⁻²
//! - dIVW: β̂ = Σ Γ̂_j γ̂_j σ̂_Yj⁻² / Σ (γ̂_j² − σ̂²_Xj) σ̂_Yj⁻²
//!
//! The dIVW denominator subtracts the measurement-error inflation
//! E[γ̂_j²] = γ_j² + σ²_Xj, which removes the weak-instrument bias that drags
//! IVW toward zero when many instruments are individually weak.
//!
//! Every sum is Neumaier-compensated, so results are reproducible to well
//! past 12 significant digits regardless of how work is scheduled.

use serde::Serialize;

use crate::data_model::SummaryDataset;
use crate::error::DivwError;
use crate::math::CompensatedSum;
use crate::selection::{self, MrEoTrace, StrengthEstimates};

/// Critical value for 95% normal-approximation confidence intervals.
pub const Z_95: f64 = 1.96;

/// Threshold below which the effective-sample-size warning fires.
pub const EFFECTIVE_SAMPLE_SIZE_WARN: f64 = 20.0;

/// A screened subset of record positions, together with the threshold λ
/// that produced it. λ = 0 means screening was bypassed (all SNPs).
#[derive(Clone, Debug, PartialEq)]
pub struct SelectionSet {
    indices: Vec<usize>,
    lambda: f64,
}

impl SelectionSet {
    /// Builds a selection from sorted, in-range indices.
    pub fn new(mut indices: Vec<usize>, lambda: f64, p: usize) -> Result<Self, DivwError> {
        indices.sort_unstable();
        indices.dedup();
        if indices.last().is_some_and(|&i| i >= p) {
            return Err(DivwError::Config(format!(
                "selection index {} out of range for p = {p}",
                indices.last().unwrap()
            )));
        }
        if lambda < 0.0 || !lambda.is_finite() {
            return Err(DivwError::Config(format!("lambda must be ≥ 0, got {lambda}")));
        }
        if lambda == 0.0 && indices.len() != p {
            return Err(DivwError::Config(
                "lambda = 0 must select every SNP".into(),
            ));
        }
        Ok(Self { indices, lambda })
    }

    /// The unscreened selection: every SNP, λ = 0.
    pub fn all(p: usize) -> Self {
        Self {
            indices: (0..p).collect(),
            lambda: 0.0,
        }
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

/// Plug-in weight terms ŵ_j = γ̂_j²/σ̂²_Yj and v̂_j = σ̂²_Xj/σ̂²_Yj.
#[derive(Clone, Debug)]
pub struct WeightTerms {
    pub w_hat: Vec<f64>,
    pub v_hat: Vec<f64>,
}

impl WeightTerms {
    pub fn from_dataset(dataset: &SummaryDataset) -> Self {
        let mut w_hat = Vec::with_capacity(dataset.p());
        let mut v_hat = Vec::with_capacity(dataset.p());
        for r in dataset.records() {
            let inv_sy2 = 1.0 / (r.se_y * r.se_y);
            w_hat.push(r.gamma_hat * r.gamma_hat * inv_sy2);
            v_hat.push(r.se_x * r.se_x * inv_sy2);
        }
        Self { w_hat, v_hat }
    }
}

/// Numerator Σ_{S} Γ̂_j γ̂_j σ̂_Yj⁻² and the two candidate denominators
/// Σ_{S} ŵ_j (IVW) and Σ_{S} (ŵ_j − v̂_j) (dIVW).
fn core_sums(dataset: &SummaryDataset, selection: &SelectionSet) -> (f64, f64, f64) {
    let records = dataset.records();
    let mut num = CompensatedSum::new();
    let mut den_ivw = CompensatedSum::new();
    let mut den_divw = CompensatedSum::new();
    for &j in selection.indices() {
        let r = &records[j];
        let inv_sy2 = 1.0 / (r.se_y * r.se_y);
        num.add(r.big_gamma_hat * r.gamma_hat * inv_sy2);
        den_ivw.add(r.gamma_hat * r.gamma_hat * inv_sy2);
        den_divw.add((r.gamma_hat * r.gamma_hat - r.se_x * r.se_x) * inv_sy2);
    }
    (num.value(), den_ivw.value(), den_divw.value())
}

/// Screened IVW estimator β̂_{λ,IVW}.
pub fn ivw(dataset: &SummaryDataset, selection: &SelectionSet) -> Result<f64, DivwError> {
    if selection.is_empty() {
        return Err(DivwError::NoUsableInstruments(format!(
            "selection at lambda = {} is empty",
            selection.lambda()
        )));
    }
    let (num, den, _) = core_sums(dataset, selection);
    if !(den > 0.0) {
        return Err(DivwError::NoUsableInstruments(format!(
            "IVW denominator Σγ̂²σ̂_Y⁻² = {den} is not positive"
        )));
    }
    Ok(num / den)
}

/// Screened dIVW estimator β̂_{λ,dIVW}.
pub fn divw(dataset: &SummaryDataset, selection: &SelectionSet) -> Result<f64, DivwError> {
    if selection.is_empty() {
        return Err(DivwError::NoUsableInstruments(format!(
            "selection at lambda = {} is empty",
            selection.lambda()
        )));
    }
    let (num, _, den) = core_sums(dataset, selection);
    if !(den > 0.0) {
        return Err(DivwError::DegenerateDenominator { denominator: den });
    }
    Ok(num / den)
}

/// Shared variance numerator Σ_{S} [ŵ_j + β̂² v̂_j (ŵ_j + v̂_j)], with an
/// optional per-SNP pleiotropy inflation ŵ_j τ² σ̂_Yj⁻².
fn variance_numerator(
    dataset: &SummaryDataset,
    selection: &SelectionSet,
    beta_hat: f64,
    tau2: f64,
) -> f64 {
    let records = dataset.records();
    let b2 = beta_hat * beta_hat;
    let mut num = CompensatedSum::new();
    for &j in selection.indices() {
        let r = &records[j];
        let inv_sy2 = 1.0 / (r.se_y * r.se_y);
        let w = r.gamma_hat * r.gamma_hat * inv_sy2;
        let v = r.se_x * r.se_x * inv_sy2;
        num.add(w * (1.0 + tau2 * inv_sy2) + b2 * v * (w + v));
    }
    num.value()
}

/// Plug-in variance of the screened IVW estimator:
/// Σ[ŵ_j + β̂²v̂_j(ŵ_j + v̂_j)] / (Σŵ_j)².
pub fn ivw_variance(
    dataset: &SummaryDataset,
    selection: &SelectionSet,
    beta_hat: f64,
) -> Result<f64, DivwError> {
    let (_, den, _) = core_sums(dataset, selection);
    if selection.is_empty() || !(den > 0.0) {
        return Err(DivwError::NoUsableInstruments(format!(
            "IVW variance needs Σŵ > 0, got {den}"
        )));
    }
    Ok(variance_numerator(dataset, selection, beta_hat, 0.0) / (den * den))
}

/// Plug-in variance of the screened dIVW estimator:
/// Σ[ŵ_j + β̂²v̂_j(ŵ_j + v̂_j)] / [Σ(ŵ_j − v̂_j)]².
pub fn divw_variance(
    dataset: &SummaryDataset,
    selection: &SelectionSet,
    beta_hat: f64,
) -> Result<f64, DivwError> {
    divw_variance_pleiotropy(dataset, selection, beta_hat, 0.0)
}

/// Balanced-pleiotropy dIVW variance:
/// Σ[ŵ_j(1 + τ²σ̂_Yj⁻²) + β̂²v̂_j(ŵ_j + v̂_j)] / [Σ(ŵ_j − v̂_j)]².
///
/// `tau2` is clamped at 0: a negative method-of-moments τ̂² is a diagnostic
/// (reported raw upstream) but would make the variance non-monotone.
pub fn divw_variance_pleiotropy(
    dataset: &SummaryDataset,
    selection: &SelectionSet,
    beta_hat: f64,
    tau2: f64,
) -> Result<f64, DivwError> {
    if selection.is_empty() {
        return Err(DivwError::NoUsableInstruments(
            "variance of an empty selection".into(),
        ));
    }
    let (_, _, den) = core_sums(dataset, selection);
    if !(den > 0.0) {
        return Err(DivwError::DegenerateDenominator { denominator: den });
    }
    let tau2 = tau2.max(0.0);
    Ok(variance_numerator(dataset, selection, beta_hat, tau2) / (den * den))
}

/// Method-of-moments estimator of the balanced-pleiotropy variance τ₀²:
///
/// τ̂² = Σ_j [(Γ̂_j − β̂γ̂_j)² − σ̂²_Yj − β̂²σ̂²_Xj] σ̂_Yj⁻² / Σ_j σ̂_Yj⁻²,
///
/// with β̂ the *unscreened* dIVW estimate and the sums over all p SNPs.
/// The raw value may be negative; callers clamp before using it in a
/// variance but report it untouched.
pub fn tau2_hat(dataset: &SummaryDataset) -> Result<f64, DivwError> {
    let all = SelectionSet::all(dataset.p());
    let beta = divw(dataset, &all)?;
    let b2 = beta * beta;
    let mut num = CompensatedSum::new();
    let mut den = CompensatedSum::new();
    for r in dataset.records() {
        let inv_sy2 = 1.0 / (r.se_y * r.se_y);
        let resid = r.big_gamma_hat - beta * r.gamma_hat;
        num.add((resid * resid - r.se_y * r.se_y - b2 * r.se_x * r.se_x) * inv_sy2);
        den.add(inv_sy2);
    }
    Ok(num.value() / den.value())
}

/// Which point estimator to report.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Ivw,
    Divw,
}

/// How the screening threshold λ is chosen.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum LambdaPolicy {
    /// No screening: λ = 0, all SNPs.
    None,
    /// Genome-wide significance, λ = 5.45.
    GenomeWide,
    /// λ = √(2 log p).
    SqrtTwoLogP,
    /// Adaptive threshold from the MR-EO algorithm.
    MrEo,
    /// User-supplied fixed λ > 0.
    Fixed(f64),
}

/// λ = 5.45, the z-threshold conventionally matched to the genome-wide
/// significance level 5×10⁻⁸.
pub const GENOME_WIDE_LAMBDA: f64 = 5.45;

impl LambdaPolicy {
    pub fn label(&self) -> String {
        match self {
            LambdaPolicy::None => "none".into(),
            LambdaPolicy::GenomeWide => "genomewide".into(),
            LambdaPolicy::SqrtTwoLogP => "sqrt2logp".into(),
            LambdaPolicy::MrEo => "mr-eo".into(),
            LambdaPolicy::Fixed(l) => format!("fixed({l})"),
        }
    }
}

/// A fully resolved estimate with its uncertainty and diagnostics.
#[derive(Clone, Debug, Serialize)]
pub struct EstimateReport {
    pub method: Method,
    pub pleiotropy_adjusted: bool,
    /// Screening threshold actually used.
    pub lambda: f64,
    pub beta_hat: f64,
    pub se: f64,
    /// `beta_hat − 1.96·se`.
    pub ci_low: f64,
    /// `beta_hat + 1.96·se`.
    pub ci_high: f64,
    /// Number of SNPs surviving screening.
    pub p_selected: usize,
    /// κ̂_λ over the selected SNPs.
    pub kappa_hat: f64,
    /// κ̂_λ √p̂_λ / max(1, λ²).
    pub effective_sample_size: f64,
    /// Raw τ̂² (may be negative); present only when pleiotropy-adjusted.
    pub tau2_hat: Option<f64>,
    pub warnings: Vec<String>,
}

/// Resolves a λ-policy into a concrete selection set (plus the MR-EO trace
/// when that policy is in play).
pub fn resolve_selection(
    dataset: &SummaryDataset,
    policy: LambdaPolicy,
) -> Result<(SelectionSet, Option<MrEoTrace>), DivwError> {
    let p = dataset.p();
    match policy {
        LambdaPolicy::None => Ok((SelectionSet::all(p), None)),
        LambdaPolicy::GenomeWide => Ok((selection::screen(dataset, GENOME_WIDE_LAMBDA)?, None)),
        LambdaPolicy::SqrtTwoLogP => {
            Ok((selection::screen(dataset, selection::sqrt_two_log_p(p))?, None))
        }
        LambdaPolicy::Fixed(l) => Ok((selection::screen(dataset, l)?, None)),
        LambdaPolicy::MrEo => {
            let (sel, trace) =
                selection::mr_eo(dataset, selection::MR_EO_T_MAX, selection::sqrt_two_log_p(p))?;
            Ok((sel, Some(trace)))
        }
    }
}

/// Runs the full pipeline for one method/λ-policy combination: screening,
/// point estimate, variance (pleiotropy-adjusted on request), strength
/// diagnostics, and warnings.
pub fn analyze(
    dataset: &SummaryDataset,
    method: Method,
    policy: LambdaPolicy,
    pleiotropy: bool,
) -> Result<EstimateReport, DivwError> {
    let (selection_set, _trace) = resolve_selection(dataset, policy)?;
    analyze_with_selection(dataset, method, &selection_set, pleiotropy)
}

/// As [`analyze`], but with the selection already resolved (the Monte Carlo
/// runner screens once and reuses the set across methods).
pub fn analyze_with_selection(
    dataset: &SummaryDataset,
    method: Method,
    selection_set: &SelectionSet,
    pleiotropy: bool,
) -> Result<EstimateReport, DivwError> {
    let beta_hat = match method {
        Method::Ivw => ivw(dataset, selection_set)?,
        Method::Divw => divw(dataset, selection_set)?,
    };
    let tau2 = if pleiotropy {
        Some(tau2_hat(dataset)?)
    } else {
        None
    };
    let variance = match (method, tau2) {
        (Method::Ivw, None) => ivw_variance(dataset, selection_set, beta_hat)?,
        (Method::Ivw, Some(t2)) => {
            // Pleiotropy-adjusted IVW: same τ² inflation of the numerator,
            // IVW denominator.
            let (_, den, _) = core_sums(dataset, selection_set);
            variance_numerator(dataset, selection_set, beta_hat, t2.max(0.0)) / (den * den)
        }
        (Method::Divw, None) => divw_variance(dataset, selection_set, beta_hat)?,
        (Method::Divw, Some(t2)) => {
            divw_variance_pleiotropy(dataset, selection_set, beta_hat, t2)?
        }
    };
    let se = variance.sqrt();

    let strength: StrengthEstimates = selection::kappa_hat(dataset, selection_set)?;
    let mut warnings = Vec::new();
    if strength.effective_sample_size < EFFECTIVE_SAMPLE_SIZE_WARN {
        warnings.push(format!(
            "effective sample size below 20: κ̂_λ√p̂_λ/max(1,λ²) = {:.2}",
            strength.effective_sample_size
        ));
    }

    Ok(EstimateReport {
        method,
        pleiotropy_adjusted: pleiotropy,
        lambda: selection_set.lambda(),
        beta_hat,
        se,
        ci_low: beta_hat - Z_95 * se,
        ci_high: beta_hat + Z_95 * se,
        p_selected: selection_set.len(),
        kappa_hat: strength.kappa_hat,
        effective_sample_size: strength.effective_sample_size,
        tau2_hat: tau2,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data_model::SnpRecord;

    fn dataset(rows: &[(f64, f64, f64, f64)]) -> SummaryDataset {
        let records = rows
            .iter()
            .enumerate()
            .map(|(i, &(gamma_hat, se_x, big_gamma_hat, se_y))| SnpRecord {
                id: format!("rs{i}"),
                gamma_hat,
                se_x,
                big_gamma_hat,
                se_y,
                gamma_star: Some(gamma_hat),
                se_x_star: Some(se_x.max(1e-12)),
            })
            .collect();
        SummaryDataset::new(records).unwrap()
    }

    #[test]
    fn ivw_single_snp() {
        let ds = dataset(&[(2.0, 1.0, 1.0, 1.0)]);
        let all = SelectionSet::all(1);
        assert!((ivw(&ds, &all).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn ivw_two_identical_snps() {
        let ds = dataset(&[(1.0, 0.1, 0.4, 1.0), (1.0, 0.1, 0.4, 1.0)]);
        let all = SelectionSet::all(2);
        assert!((ivw(&ds, &all).unwrap() - 0.4).abs() < 1e-15);
    }

    #[test]
    fn divw_single_snp() {
        // 1·2 / (4 − 1) = 2/3.
        let ds = dataset(&[(2.0, 1.0, 1.0, 1.0)]);
        let all = SelectionSet::all(1);
        assert!((divw(&ds, &all).unwrap() - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn divw_equals_ivw_when_sigma_x_is_zero() {
        let ds = dataset(&[(0.5, 0.0, 0.2, 0.3), (-0.8, 0.0, -0.3, 0.7), (1.1, 0.0, 0.5, 0.4)]);
        let all = SelectionSet::all(3);
        assert_eq!(divw(&ds, &all).unwrap(), ivw(&ds, &all).unwrap());
        let b = divw(&ds, &all).unwrap();
        assert_eq!(
            divw_variance(&ds, &all, b).unwrap(),
            ivw_variance(&ds, &all, b).unwrap()
        );
    }

    #[test]
    fn divw_degenerate_denominator_is_an_error() {
        // γ̂² < σ̂_X² everywhere → Σ(ŵ−v̂) < 0.
        let ds = dataset(&[(0.1, 1.0, 0.0, 1.0), (0.05, 1.0, 0.0, 1.0)]);
        let all = SelectionSet::all(2);
        match divw(&ds, &all) {
            Err(DivwError::DegenerateDenominator { denominator }) => assert!(denominator < 0.0),
            other => panic!("expected degenerate denominator, got {other:?}"),
        }
    }

    #[test]
    fn ivw_variance_hand_values() {
        let ds = dataset(&[(1.0, 1.0, 0.0, 1.0)]);
        let all = SelectionSet::all(1);
        // β̂=0: (ŵ + 0)/ŵ² = 1.
        assert!((ivw_variance(&ds, &all, 0.0).unwrap() - 1.0).abs() < 1e-15);
        // β̂=1: (1 + 1·(1+1))/1 = 3.
        assert!((ivw_variance(&ds, &all, 1.0).unwrap() - 3.0).abs() < 1e-15);
    }

    #[test]
    fn divw_variance_hand_value() {
        // ŵ=(2,2), v̂=(1,1), β̂=0 → (2+2)/(2+2−1−1)² = 1.
        // Realized with σ̂_Y=1, γ̂=√2, σ̂_X=1.
        let g = 2.0_f64.sqrt();
        let ds = dataset(&[(g, 1.0, 0.0, 1.0), (g, 1.0, 0.0, 1.0)]);
        let all = SelectionSet::all(2);
        assert!((divw_variance(&ds, &all, 0.0).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pleiotropy_variance_reduces_and_inflates() {
        let ds = dataset(&[(1.5, 0.3, 0.6, 0.8), (0.9, 0.2, 0.4, 1.1)]);
        let all = SelectionSet::all(2);
        let b = divw(&ds, &all).unwrap();
        let plain = divw_variance(&ds, &all, b).unwrap();
        assert_eq!(divw_variance_pleiotropy(&ds, &all, b, 0.0).unwrap(), plain);
        // Negative τ² is clamped, not applied.
        assert_eq!(divw_variance_pleiotropy(&ds, &all, b, -0.5).unwrap(), plain);
        assert!(divw_variance_pleiotropy(&ds, &all, b, 0.3).unwrap() > plain);
    }

    #[test]
    fn pleiotropy_variance_hand_value() {
        // ŵ=2, v̂=1, β̂=0, τ²σ̂_Y⁻²=1 → 2·2/(2−1)² = 4.
        let g = 2.0_f64.sqrt();
        let ds = dataset(&[(g, 1.0, 0.0, 1.0)]);
        let all = SelectionSet::all(1);
        assert!((divw_variance_pleiotropy(&ds, &all, 0.0, 1.0).unwrap() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn tau2_hat_exact_fit_recovers_minus_one() {
        // Γ̂_j = β̂γ̂_j exactly, σ̂_Y = 1, σ̂_X = 0 → residual 0, τ̂² = −1.
        let beta = 0.7;
        let rows: Vec<_> = [1.0, 2.0, -1.5]
            .iter()
            .map(|&g| (g, 0.0, beta * g, 1.0))
            .collect();
        let ds = dataset(&rows);
        assert!((tau2_hat(&ds).unwrap() - (-1.0)).abs() < 1e-12);
    }

    #[test]
    fn analyze_populates_report() {
        let ds = dataset(&[(2.0, 0.1, 0.8, 0.5), (1.5, 0.1, 0.6, 0.5), (1.8, 0.1, 0.7, 0.5)]);
        let report = analyze(&ds, Method::Divw, LambdaPolicy::None, false).unwrap();
        assert_eq!(report.p_selected, 3);
        assert_eq!(report.lambda, 0.0);
        assert!((report.ci_low - (report.beta_hat - 1.96 * report.se)).abs() < 1e-15);
        assert!((report.ci_high - (report.beta_hat + 1.96 * report.se)).abs() < 1e-15);
        assert!(report.tau2_hat.is_none());
    }

    #[test]
    fn analyze_requires_selection_data_for_screening() {
        let records = vec![SnpRecord {
            id: "rs0".into(),
            gamma_hat: 1.0,
            se_x: 0.1,
            big_gamma_hat: 0.4,
            se_y: 0.2,
            gamma_star: None,
            se_x_star: None,
        }];
        let ds = SummaryDataset::new(records).unwrap();
        assert!(matches!(
            analyze(&ds, Method::Divw, LambdaPolicy::GenomeWide, false),
            Err(DivwError::Config(_))
        ));
    }
}
