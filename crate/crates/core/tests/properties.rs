//! Property-based invariants for the estimator and selection layers.

use divw_core::data_model::{PopulationParams, SnpRecord, SummaryDataset};
use divw_core::estimators::{
    divw, divw_variance, divw_variance_pleiotropy, ivw, ivw_variance, SelectionSet,
};
use divw_core::selection::screen;
use divw_core::theory::{kappa_tilde, population_strength};
use proptest::prelude::*;

/// One SNP worth of raw summary statistics.
fn snp_strategy() -> impl Strategy<Value = SnpRecord> {
    (
        -2.0f64..2.0,
        0.05f64..1.0,
        -2.0f64..2.0,
        0.05f64..1.0,
        -3.0f64..3.0,
        0.05f64..1.0,
    )
        .prop_map(|(g, sx, big, sy, gs, sxs)| SnpRecord {
            id: String::new(),
            gamma_hat: g,
            se_x: sx,
            big_gamma_hat: big,
            se_y: sy,
            gamma_star: Some(gs),
            se_x_star: Some(sxs),
        })
}

fn dataset_strategy(min_p: usize) -> impl Strategy<Value = SummaryDataset> {
    prop::collection::vec(snp_strategy(), min_p..40).prop_map(|mut recs| {
        for (j, r) in recs.iter_mut().enumerate() {
            r.id = format!("snp{j}");
        }
        SummaryDataset::new(recs).unwrap()
    })
}

/// Σŵ and Σ(ŵ − v̂) over the whole dataset, computed naively.
fn naive_denominators(ds: &SummaryDataset) -> (f64, f64) {
    let mut den_ivw = 0.0;
    let mut den_divw = 0.0;
    for r in ds.records() {
        let inv = 1.0 / (r.se_y * r.se_y);
        den_ivw += r.gamma_hat * r.gamma_hat * inv;
        den_divw += (r.gamma_hat * r.gamma_hat - r.se_x * r.se_x) * inv;
    }
    (den_ivw, den_divw)
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1e-300)
}

proptest! {
    /// dIVW is the IVW estimator times the explicit debiasing factor
    /// Σŵ / Σ(ŵ − v̂), to 12 significant digits.
    #[test]
    fn divw_is_rescaled_ivw(ds in dataset_strategy(1)) {
        let (den_ivw, den_divw) = naive_denominators(&ds);
        prop_assume!(den_divw > 1e-3 && den_ivw > 1e-3);
        let all = SelectionSet::all(ds.p());
        let b_ivw = ivw(&ds, &all).unwrap();
        let b_divw = divw(&ds, &all).unwrap();
        prop_assert!(rel_close(b_divw, b_ivw * den_ivw / den_divw, 1e-12));
    }

    /// λ = 0 screening keeps every SNP, in order.
    #[test]
    fn lambda_zero_keeps_everything(ds in dataset_strategy(1)) {
        let sel = screen(&ds, 0.0).unwrap();
        prop_assert_eq!(sel.len(), ds.p());
        prop_assert!(sel.indices().iter().copied().eq(0..ds.p()));
    }

    /// Estimates and variances do not depend on record order.
    #[test]
    fn permutation_invariance(ds in dataset_strategy(2), seed in 0u64..1000) {
        let (_, den_divw) = naive_denominators(&ds);
        prop_assume!(den_divw > 1e-3);
        let mut recs = ds.records().to_vec();
        // Deterministic shuffle keyed on `seed`.
        let n = recs.len();
        let mut state = seed.wrapping_mul(2862933555777941757).wrapping_add(1);
        for i in (1..n).rev() {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            recs.swap(i, (state >> 33) as usize % (i + 1));
        }
        let perm = SummaryDataset::new(recs).unwrap();
        let all_a = SelectionSet::all(ds.p());
        let all_b = SelectionSet::all(perm.p());
        let b = divw(&ds, &all_a).unwrap();
        prop_assert!(rel_close(b, divw(&perm, &all_b).unwrap(), 1e-12));
        prop_assert!(rel_close(
            divw_variance(&ds, &all_a, b).unwrap(),
            divw_variance(&perm, &all_b, b).unwrap(),
            1e-12,
        ));
    }

    /// Rescaling the outcome by c (Γ̂ → cΓ̂, σ̂_Y → cσ̂_Y) rescales the
    /// estimate and its standard error by c.
    #[test]
    fn outcome_scale_equivariance(ds in dataset_strategy(1), c in 0.1f64..10.0) {
        let (den_ivw, den_divw) = naive_denominators(&ds);
        prop_assume!(den_divw > 1e-3 && den_ivw > 1e-3);
        let mut recs = ds.records().to_vec();
        for r in &mut recs {
            r.big_gamma_hat *= c;
            r.se_y *= c;
        }
        let scaled = SummaryDataset::new(recs).unwrap();
        let all = SelectionSet::all(ds.p());
        let b = divw(&ds, &all).unwrap();
        let b_c = divw(&scaled, &all).unwrap();
        prop_assert!(rel_close(b_c, c * b, 1e-10));
        let v = divw_variance(&ds, &all, b).unwrap();
        let v_c = divw_variance(&scaled, &all, b_c).unwrap();
        prop_assert!(rel_close(v_c, c * c * v, 1e-10));
        let bi = ivw(&ds, &all).unwrap();
        prop_assert!(rel_close(ivw(&scaled, &all).unwrap(), c * bi, 1e-10));
    }

    /// With Σ(ŵ − v̂) > 0 the dIVW variance dominates the IVW variance at
    /// any common β (same numerator, smaller squared denominator).
    #[test]
    fn divw_variance_dominates(ds in dataset_strategy(1), beta in -2.0f64..2.0) {
        let (_, den_divw) = naive_denominators(&ds);
        prop_assume!(den_divw > 1e-3);
        let all = SelectionSet::all(ds.p());
        let vi = ivw_variance(&ds, &all, beta).unwrap();
        let vd = divw_variance(&ds, &all, beta).unwrap();
        prop_assert!(vd >= vi * (1.0 - 1e-12));
    }

    /// Selection sets are nested: λ₁ ≤ λ₂ ⇒ S_{λ₂} ⊆ S_{λ₁}.
    #[test]
    fn screening_is_nested(ds in dataset_strategy(1), l1 in 0.0f64..4.0, l2 in 0.0f64..4.0) {
        let (lo, hi) = if l1 <= l2 { (l1, l2) } else { (l2, l1) };
        let s_lo = screen(&ds, lo).unwrap();
        let s_hi = screen(&ds, hi).unwrap();
        prop_assert!(s_hi
            .indices()
            .iter()
            .all(|j| s_lo.indices().contains(j)));
    }

    /// A negative raw τ̂² is clamped to zero inside the variance.
    #[test]
    fn tau2_clamped_at_zero(ds in dataset_strategy(1), beta in -2.0f64..2.0, t in 0.0f64..5.0) {
        let (_, den_divw) = naive_denominators(&ds);
        prop_assume!(den_divw > 1e-3);
        let all = SelectionSet::all(ds.p());
        let v0 = divw_variance_pleiotropy(&ds, &all, beta, 0.0).unwrap();
        let vneg = divw_variance_pleiotropy(&ds, &all, beta, -t).unwrap();
        prop_assert_eq!(v0, vneg);
    }

    /// κ̃_λ = Σ δ_j² Φ(δ_j − λ) / Σ Φ(δ_j − λ) is non-decreasing in λ.
    #[test]
    fn kappa_tilde_monotone(
        delta in prop::collection::vec(0.0f64..6.0, 1..30),
        l1 in 0.0f64..5.0,
        step in 0.0f64..3.0,
    ) {
        let a = kappa_tilde(&delta, l1);
        let b = kappa_tilde(&delta, l1 + step);
        prop_assert!(b >= a - 1e-9 * a.abs().max(1.0));
    }

    /// The expected selected count p_λ strictly decreases as λ grows, and
    /// screened strength κ_λ never drops below the unscreened κ.
    #[test]
    fn population_p_lambda_decreasing(
        gamma in prop::collection::vec(-0.5f64..0.5, 2..20),
        l1 in 0.0f64..3.0,
        step in 0.1f64..2.0,
    ) {
        let p = gamma.len();
        let params = PopulationParams {
            gamma,
            sigma_x: vec![0.2; p],
            sigma_y: vec![0.3; p],
            sigma_x_star: vec![0.2; p],
            beta0: 0.4,
            tau0: 0.0,
            alpha: vec![0.0; p],
        };
        let a = population_strength(&params, l1);
        let b = population_strength(&params, l1 + step);
        prop_assert!(b.p_lambda < a.p_lambda);
        prop_assert!(a.kappa_lambda >= a.kappa - 1e-9);
    }
}
