//! Instrument screening, strength estimation, and the MR-EO adaptive
//! threshold search.
//!
//! Screening keeps SNP j when its selection-dataset z-score clears a
//! threshold: S_λ = { j : |γ̂*_j| > λ σ̂*_Xj } (strict inequality). The
//! selection dataset is independent of both the exposure and outcome GWAS,
//! which is what keeps screening free of winner's curse.

use serde::Serialize;

use crate::data_model::SummaryDataset;
use crate::error::DivwError;
use crate::estimators::{self, SelectionSet};
use crate::math::CompensatedSum;

/// Default iteration cap for MR-EO.
pub const MR_EO_T_MAX: usize = 5;

/// Estimated instrument strength over a selection set.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct StrengthEstimates {
    /// κ̂_λ = (1/p̂_λ) Σ_{S_λ} γ̂_j²/σ̂²_Xj − 1.
    pub kappa_hat: f64,
    /// p̂_λ = |S_λ|.
    pub p_hat: usize,
    /// The threshold that produced the selection.
    pub lambda: f64,
    /// κ̂_λ √p̂_λ / max(1, λ²) — the quantity that acts like an effective
    /// sample size for the screened dIVW estimator.
    pub effective_sample_size: f64,
}

/// Why the MR-EO loop stopped.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MrEoStop {
    /// The candidate variance failed to improve on the incumbent.
    VarianceNonDecreasing,
    /// The iteration cap was reached with the variance still improving.
    TMaxReached,
}

/// Accepted iterations of the MR-EO loop.
#[derive(Clone, Debug, Serialize)]
pub struct MrEoTrace {
    /// (t, λ_t, β̂_{λ_t,dIVW}, V̂_{λ_t}); the variance column strictly
    /// decreases down the list.
    pub iterations: Vec<(usize, f64, f64, f64)>,
    pub final_lambda: f64,
    pub stop_reason: MrEoStop,
}

/// Applies the hard threshold λ, returning the surviving indices.
///
/// λ = 0 bypasses screening entirely (all SNPs, no selection data needed);
/// λ > 0 requires every record to carry selection-dataset statistics.
pub fn screen(dataset: &SummaryDataset, lambda: f64) -> Result<SelectionSet, DivwError> {
    if lambda < 0.0 || !lambda.is_finite() {
        return Err(DivwError::Config(format!(
            "screening threshold must be finite and ≥ 0, got {lambda}"
        )));
    }
    if lambda == 0.0 {
        return Ok(SelectionSet::all(dataset.p()));
    }
    if !dataset.has_selection() {
        return Err(DivwError::Config(
            "screening with lambda > 0 requires selection-dataset columns \
             (beta.selection, se.selection)"
                .into(),
        ));
    }
    let indices = dataset
        .records()
        .iter()
        .enumerate()
        .filter(|(_, r)| {
            r.gamma_star.unwrap().abs() > lambda * r.se_x_star.unwrap()
        })
        .map(|(j, _)| j)
        .collect();
    SelectionSet::new(indices, lambda, dataset.p())
}

/// Estimates κ̂_λ and the effective sample size over a selection.
pub fn kappa_hat(
    dataset: &SummaryDataset,
    selection: &SelectionSet,
) -> Result<StrengthEstimates, DivwError> {
    if selection.is_empty() {
        return Err(DivwError::NoUsableInstruments(
            "strength of an empty selection".into(),
        ));
    }
    let records = dataset.records();
    let mut sum = CompensatedSum::new();
    for &j in selection.indices() {
        let r = &records[j];
        sum.add(r.gamma_hat * r.gamma_hat / (r.se_x * r.se_x));
    }
    let p_hat = selection.len();
    let kappa = sum.value() / p_hat as f64 - 1.0;
    let lambda = selection.lambda();
    Ok(StrengthEstimates {
        kappa_hat: kappa,
        p_hat,
        lambda,
        effective_sample_size: kappa * (p_hat as f64).sqrt() / (lambda * lambda).max(1.0),
    })
}

/// The default slowly diverging threshold √(2 ln p).
pub fn sqrt_two_log_p(p: usize) -> f64 {
    assert!(p >= 1, "p must be ≥ 1");
    (2.0 * (p as f64).ln()).sqrt()
}

/// Upper bound on the probability that screening at λ keeps at least one of
/// the p − s null IVs: 2(p−s)/(λ√(2π)) · e^{−λ²/2}.
pub fn null_selection_bound(p: usize, s: usize, lambda: f64) -> Result<f64, DivwError> {
    if s > p {
        return Err(DivwError::Config(format!("s = {s} exceeds p = {p}")));
    }
    if !(lambda > 0.0) {
        return Err(DivwError::Config(format!(
            "null-selection bound requires lambda > 0, got {lambda}"
        )));
    }
    let nulls = (p - s) as f64;
    Ok(2.0 * nulls / (lambda * (2.0 * std::f64::consts::PI).sqrt()) * (-0.5 * lambda * lambda).exp())
}

/// Per-SNP quantities for the O-step, sorted by selection z-score
/// descending, with prefix sums so any top-k objective evaluates in O(1).
struct OStepTable {
    /// Distinct candidate thresholds as (lambda, k = |S_lambda|), λ ascending.
    candidates: Vec<(f64, usize)>,
    /// Prefix sums over the z-descending order: w[k] = Σ of the top k, etc.
    w: Vec<f64>,
    v: Vec<f64>,
    /// Σ v̂_j (ŵ_j + v̂_j) over the top k.
    u: Vec<f64>,
}

impl OStepTable {
    fn build(dataset: &SummaryDataset, bracket_high: f64) -> Self {
        let records = dataset.records();
        let p = records.len();
        let mut order: Vec<usize> = (0..p).collect();
        let z = |j: usize| -> f64 {
            let r = &records[j];
            r.gamma_star.unwrap().abs() / r.se_x_star.unwrap()
        };
        order.sort_by(|&a, &b| z(b).partial_cmp(&z(a)).unwrap().then(a.cmp(&b)));

        let mut w = Vec::with_capacity(p + 1);
        let mut v = Vec::with_capacity(p + 1);
        let mut u = Vec::with_capacity(p + 1);
        w.push(0.0);
        v.push(0.0);
        u.push(0.0);
        let (mut cw, mut cv, mut cu) =
            (CompensatedSum::new(), CompensatedSum::new(), CompensatedSum::new());
        for &j in &order {
            let r = &records[j];
            let inv_sy2 = 1.0 / (r.se_y * r.se_y);
            let wj = r.gamma_hat * r.gamma_hat * inv_sy2;
            let vj = r.se_x * r.se_x * inv_sy2;
            cw.add(wj);
            cv.add(vj);
            cu.add(vj * (wj + vj));
            w.push(cw.value());
            v.push(cv.value());
            u.push(cu.value());
        }

        // The objective is piecewise-constant in λ, changing only where S_λ
        // changes, i.e. at the order statistics of the z-scores. One
        // representative λ per piece: the midpoint between consecutive
        // distinct z values (ties collapse into one piece), λ = 0 for the
        // select-all piece, and bracket_high for the piece containing it.
        let zs: Vec<f64> = order.iter().map(|&j| z(j)).collect();
        let mut candidates: Vec<(f64, usize)> = vec![(0.0, p)];
        for k in 1..p {
            if zs[k - 1] > zs[k] {
                let mid = 0.5 * (zs[k - 1] + zs[k]);
                if mid <= bracket_high {
                    candidates.push((mid, k));
                }
            }
        }
        let k_at_bracket = zs.iter().take_while(|&&zj| zj > bracket_high).count();
        if k_at_bracket >= 1 {
            candidates.push((bracket_high, k_at_bracket));
        }
        candidates.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        candidates.dedup_by(|a, b| a.1 == b.1);

        Self { candidates, w, v, u }
    }

    /// V̂_λ,dIVW with β̂ held fixed, for the piece selecting the top k SNPs;
    /// +∞ when the selection is empty or the dIVW denominator non-positive.
    fn objective(&self, k: usize, beta: f64) -> f64 {
        if k == 0 {
            return f64::INFINITY;
        }
        let den = self.w[k] - self.v[k];
        if !(den > 0.0) {
            return f64::INFINITY;
        }
        (self.w[k] + beta * beta * self.u[k]) / (den * den)
    }

    /// argmin over the candidate thresholds; ties go to the smallest λ.
    fn minimize(&self, beta: f64) -> Option<(f64, usize)> {
        let mut best: Option<(f64, usize, f64)> = None;
        for &(lambda, k) in &self.candidates {
            let obj = self.objective(k, beta);
            if obj.is_finite() && best.map_or(true, |(_, _, b)| obj < b) {
                best = Some((lambda, k, obj));
            }
        }
        best.map(|(lambda, k, _)| (lambda, k))
    }

    /// Largest candidate λ at which the dIVW denominator is positive; used
    /// to restart when the conventional λ₀ leaves no usable instruments.
    fn largest_defined(&self) -> Option<f64> {
        self.candidates
            .iter()
            .rev()
            .find(|&&(_, k)| k > 0 && self.w[k] - self.v[k] > 0.0)
            .map(|&(lambda, _)| lambda)
    }
}

/// The MR-EO (estimation–optimization) threshold search.
///
/// Starting from λ₀ = √(2 log p), alternate an E-step (compute
/// β̂_{λ_t,dIVW} and its estimated variance) with an O-step (minimize
/// V̂_{λ,dIVW} over λ ∈ [0, `bracket_high`] holding β̂ fixed). The loop
/// stops as soon as the variance fails to improve, or after `t_max`
/// accepted iterations; the returned λ is the one whose accepted variance
/// was smallest.
///
/// Because the O-step objective only changes when S_λ changes, it is
/// minimized exactly by enumerating one λ per selection piece (midpoints of
/// consecutive distinct z-score order statistics) with O(1) prefix-sum
/// evaluations, rather than by a generic 1-D search. Ties prefer the
/// smallest λ, retaining more instruments.
pub fn mr_eo(
    dataset: &SummaryDataset,
    t_max: usize,
    bracket_high: f64,
) -> Result<(SelectionSet, MrEoTrace), DivwError> {
    if !dataset.has_selection() {
        return Err(DivwError::Config(
            "MR-EO requires selection-dataset columns".into(),
        ));
    }
    if t_max < 1 {
        return Err(DivwError::Config("MR-EO needs t_max ≥ 1".into()));
    }
    if !(bracket_high >= 0.0) {
        return Err(DivwError::Config(format!(
            "bracket_high must be ≥ 0, got {bracket_high}"
        )));
    }

    let table = OStepTable::build(dataset, bracket_high);
    let mut lambda_t = sqrt_two_log_p(dataset.p()).min(bracket_high);
    let mut v_best = f64::INFINITY;
    let mut iterations: Vec<(usize, f64, f64, f64)> = Vec::new();
    let mut stop_reason = MrEoStop::TMaxReached;

    for t in 0..t_max {
        let sel = screen(dataset, lambda_t)?;
        let estimate = estimators::divw(dataset, &sel)
            .and_then(|beta| estimators::divw_variance(dataset, &sel, beta).map(|v| (beta, v)));
        let (beta, variance) = match estimate {
            Ok(pair) => pair,
            Err(err) if t == 0 => {
                // λ₀ left no usable instruments (common when every IV is
                // weak): restart from the largest threshold that still
                // yields a defined dIVW estimate.
                let fallback = table.largest_defined().ok_or(err)?;
                lambda_t = fallback;
                let sel = screen(dataset, lambda_t)?;
                let beta = estimators::divw(dataset, &sel)?;
                let variance = estimators::divw_variance(dataset, &sel, beta)?;
                (beta, variance)
            }
            Err(err) => return Err(err),
        };

        if v_best <= variance {
            stop_reason = MrEoStop::VarianceNonDecreasing;
            break;
        }
        v_best = variance;
        iterations.push((t, lambda_t, beta, variance));

        if t + 1 == t_max {
            stop_reason = MrEoStop::TMaxReached;
            break;
        }
        match table.minimize(beta) {
            Some((lambda_next, _)) => lambda_t = lambda_next,
            None => {
                return Err(DivwError::NoUsableInstruments(
                    "no threshold in the bracket yields a defined dIVW estimator".into(),
                ))
            }
        }
    }

    let &(_, final_lambda, _, _) = iterations
        .last()
        .ok_or_else(|| DivwError::NoUsableInstruments("MR-EO accepted no iteration".into()))?;
    let selection = screen(dataset, final_lambda)?;
    Ok((
        selection,
        MrEoTrace {
            iterations,
            final_lambda,
            stop_reason,
        },
    ))
}
