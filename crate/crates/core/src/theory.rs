//! Population-level closed forms: screening survival probabilities,
//! instrument strength, asymptotic biases, limits, and variances.
//!
//! These are the quantities the estimators converge to, evaluated exactly
//! from true parameters. The Monte Carlo suite uses them as oracles: a
//! correct estimator implementation must land on these values within
//! simulation noise. Population weights are w_j = γ_j²/σ²_Yj and
//! v_j = σ²_Xj/σ²_Yj.

use crate::data_model::PopulationParams;
use crate::error::DivwError;
use crate::math::{normal_cdf, CompensatedSum};

/// Instrument-strength summary of a population at threshold λ.
#[derive(Clone, Debug)]
pub struct PopulationStrength {
    /// κ = (1/p) Σ γ_j²/σ²_Xj — unscreened average strength.
    pub kappa: f64,
    /// κ_λ = Σ (γ_j²/σ²_Xj) q_{λ,j} / Σ q_{λ,j}.
    pub kappa_lambda: f64,
    /// p_λ = Σ q_{λ,j} — expected number of selected SNPs.
    pub p_lambda: f64,
    /// Per-SNP survival probabilities q_{λ,j}.
    pub q: Vec<f64>,
}

/// Survival probability of each SNP under screening at λ:
/// q_{λ,j} = P(|γ̂*_j| > λσ*_Xj) = Φ(γ_j/σ*_Xj − λ) + Φ(−γ_j/σ*_Xj − λ).
pub fn q_lambda(params: &PopulationParams, lambda: f64) -> Vec<f64> {
    assert!(lambda >= 0.0, "lambda must be ≥ 0");
    params
        .gamma
        .iter()
        .zip(&params.sigma_x_star)
        .map(|(&g, &s)| {
            let delta = g / s;
            normal_cdf(delta - lambda) + normal_cdf(-delta - lambda)
        })
        .collect()
}

/// κ, κ_λ, and p_λ for a population at threshold λ.
pub fn population_strength(params: &PopulationParams, lambda: f64) -> PopulationStrength {
    let q = q_lambda(params, lambda);
    let p = params.p() as f64;
    let mut kappa_sum = CompensatedSum::new();
    let mut num = CompensatedSum::new();
    let mut den = CompensatedSum::new();
    for ((&g, &sx), &qj) in params.gamma.iter().zip(&params.sigma_x).zip(&q) {
        let strength = g * g / (sx * sx);
        kappa_sum.add(strength);
        num.add(strength * qj);
        den.add(qj);
    }
    PopulationStrength {
        kappa: kappa_sum.value() / p,
        kappa_lambda: num.value() / den.value(),
        p_lambda: den.value(),
        q,
    }
}

/// Asymptotic bias of the unscreened IVW estimator in the bounded-κ regime:
/// abias = −β₀ Σv_j / Σ(w_j + v_j).
pub fn ivw_abias(params: &PopulationParams) -> f64 {
    let mut num = CompensatedSum::new();
    let mut den = CompensatedSum::new();
    for ((&g, &sx), &sy) in params.gamma.iter().zip(&params.sigma_x).zip(&params.sigma_y) {
        let inv_sy2 = 1.0 / (sy * sy);
        let w = g * g * inv_sy2;
        let v = sx * sx * inv_sy2;
        num.add(v);
        den.add(w + v);
    }
    -params.beta0 * num.value() / den.value()
}

/// Probability limit of the screened IVW estimator when κ_λ stays bounded:
/// β₀ Σ w_j q_{λ,j} / Σ (w_j + v_j) q_{λ,j}.
///
/// Tends to β₀ as instruments strengthen (v_j → 0) and to 0 as κ_λ → 0.
pub fn theorem31_limit(params: &PopulationParams, lambda: f64) -> f64 {
    let q = q_lambda(params, lambda);
    let mut num = CompensatedSum::new();
    let mut den = CompensatedSum::new();
    for (((&g, &sx), &sy), &qj) in params
        .gamma
        .iter()
        .zip(&params.sigma_x)
        .zip(&params.sigma_y)
        .zip(&q)
    {
        let inv_sy2 = 1.0 / (sy * sy);
        let w = g * g * inv_sy2;
        let v = sx * sx * inv_sy2;
        num.add(w * qj);
        den.add((w + v) * qj);
    }
    params.beta0 * num.value() / den.value()
}

/// Which asymptotic variance to evaluate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Estimator {
    Ivw,
    Divw,
}

/// Asymptotic variance of the screened estimator at threshold λ:
///
/// - IVW:  Σ[(w_j+v_j)q_j + β₀²v_j(w_j+3v_j)q_j − β₀²v_j²q_j²] / [Σ(w_j+v_j)q_j]²
/// - dIVW: Σ[(w_j+v_j) + β₀²v_j(w_j+2v_j)] q_j / (Σ w_j q_j)²
pub fn asymptotic_variance(
    params: &PopulationParams,
    lambda: f64,
    estimator: Estimator,
) -> Result<f64, DivwError> {
    let q = q_lambda(params, lambda);
    let b2 = params.beta0 * params.beta0;
    let mut num = CompensatedSum::new();
    let mut den = CompensatedSum::new();
    for (((&g, &sx), &sy), &qj) in params
        .gamma
        .iter()
        .zip(&params.sigma_x)
        .zip(&params.sigma_y)
        .zip(&q)
    {
        let inv_sy2 = 1.0 / (sy * sy);
        let w = g * g * inv_sy2;
        let v = sx * sx * inv_sy2;
        match estimator {
            Estimator::Ivw => {
                num.add((w + v) * qj + b2 * v * (w + 3.0 * v) * qj - b2 * v * v * qj * qj);
                den.add((w + v) * qj);
            }
            Estimator::Divw => {
                num.add(((w + v) + b2 * v * (w + 2.0 * v)) * qj);
                den.add(w * qj);
            }
        }
    }
    let den = den.value();
    if estimator == Estimator::Divw && !(den > 0.0) {
        return Err(DivwError::NoUsableInstruments(format!(
            "asymptotic dIVW variance needs Σw_j q_j > 0, got {den}"
        )));
    }
    Ok(num.value() / (den * den))
}

/// Probability-limit bias of the dIVW estimator under directional
/// pleiotropy: bias_λ = Σ(α_j/γ_j) w_j q_{λ,j} / Σ w_j q_{λ,j}.
///
/// Terms with w_j = 0 (γ_j = 0) carry zero weight and are skipped when
/// α_j = 0 too; γ_j = 0 with α_j ≠ 0 makes the ratio undefined and is an
/// error.
pub fn unbalanced_bias(
    params: &PopulationParams,
    alpha: &[f64],
    lambda: f64,
) -> Result<f64, DivwError> {
    if alpha.len() != params.p() {
        return Err(DivwError::Config(format!(
            "alpha has length {}, expected {}",
            alpha.len(),
            params.p()
        )));
    }
    let q = q_lambda(params, lambda);
    let mut num = CompensatedSum::new();
    let mut den = CompensatedSum::new();
    for ((((&g, &sy), &a), &qj), j) in params
        .gamma
        .iter()
        .zip(&params.sigma_y)
        .zip(alpha)
        .zip(&q)
        .zip(0..)
    {
        let w = g * g / (sy * sy);
        if w == 0.0 {
            if a != 0.0 {
                return Err(DivwError::Config(format!(
                    "alpha[{j}] = {a} with gamma[{j}] = 0: ratio α_j/γ_j undefined"
                )));
            }
            continue;
        }
        num.add(a / g * w * qj);
        den.add(w * qj);
    }
    let den = den.value();
    if !(den > 0.0) {
        return Err(DivwError::NoUsableInstruments(
            "all w_j q_{λ,j} vanish in unbalanced_bias".into(),
        ));
    }
    Ok(num.value() / den)
}

/// The strength-growth diagnostic (κ/p, n_X/p²): κ/p cannot diverge unless
/// n_X/p² does, because κ ≈ n_X·h²-scale quantities over p SNPs.
pub fn kappa_p_bound(params: &PopulationParams, n_x: usize) -> (f64, f64) {
    let p = params.p() as f64;
    let kappa = population_strength(params, 0.0).kappa;
    (kappa / p, n_x as f64 / (p * p))
}

/// The Φ-approximated screened strength
/// κ̃_λ = Σ δ_j² Φ(δ_j − λ) / Σ Φ(δ_j − λ), δ_j = |γ_j|/σ*_Xj,
/// which is nondecreasing in λ for every δ vector. Exposed for the
/// monotonicity property tests.
pub fn kappa_tilde(delta: &[f64], lambda: f64) -> f64 {
    let mut num = CompensatedSum::new();
    let mut den = CompensatedSum::new();
    for &d in delta {
        let d = d.abs();
        let phi = normal_cdf(d - lambda);
        num.add(d * d * phi);
        den.add(phi);
    }
    num.value() / den.value()
}
