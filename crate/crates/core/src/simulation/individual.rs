//! Individual-level data-generating process.
//!
//! Three independent cohorts (exposure, outcome, selection) are simulated
//! under the structural model
//!
//! X = Σ_j γ_j Z_j + η_X U + E_X,
//! Y = β₀ X + Σ_j α_j Z_j + η_Y U + E_Y,
//!
//! with genotypes Z_j ∈ {0,1,2}, P = (1/4, 1/2, 1/4), confounder
//! U ~ N(0, 0.6(1−h²)) and noises E_X, E_Y ~ N(0, 0.4(1−h²)). Each SNP is
//! then regressed marginally (with intercept) on its cohort's trait to
//! produce the usual GWAS summary statistics, with SE² = RSS/((n−2)·S_zz).
//!
//! The n×p genotype matrix is never materialized: genotype columns are
//! regenerated on demand from per-(replication, cohort, SNP) substreams.
//! Pass 1 accumulates each individual's trait from the columns with
//! non-zero coefficients; pass 2 regenerates every column to compute its
//! marginal regression against the finished trait vector. Genotypes come
//! two bits at a time from the ChaCha words — the sum of two fair bits is
//! exactly the (1/4, 1/2, 1/4) law — and the per-column accumulation is
//! branch-free bit manipulation, which is what makes the larger benchmark
//! cases (3·10⁸ genotypes per replication) affordable.

use rand::{Rng, RngCore};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::data_model::{PopulationParams, SnpRecord, SummaryDataset};
use crate::error::DivwError;
use crate::simulation::config::{Pleiotropy, SimulationConfig};
use crate::simulation::rng::{
    substream, COHORT_EXPOSURE, COHORT_OUTCOME, COHORT_SELECTION, TAG_ALPHA, TAG_GENO, TAG_NOISE,
    TAG_PHI,
};

const PAIR_MASK: u64 = 0x5555_5555_5555_5555;

/// Adds `c · Z_j` to the trait vector, streaming the genotype column from
/// its substream. 32 genotypes per ChaCha word.
fn add_genotype_column(rng: &mut ChaCha8Rng, n: usize, c: f64, trait_values: &mut [f64]) {
    let c2 = 2.0 * c;
    let mut base = 0usize;
    while base < n {
        let lim = (n - base).min(32);
        let mut word = rng.next_u64();
        if lim < 32 {
            word &= (1u64 << (2 * lim)) - 1;
        }
        let ones = (word ^ (word >> 1)) & PAIR_MASK;
        let twos = (word & (word >> 1)) & PAIR_MASK;
        let mut m = ones;
        while m != 0 {
            trait_values[base + (m.trailing_zeros() >> 1) as usize] += c;
            m &= m - 1;
        }
        let mut m = twos;
        while m != 0 {
            trait_values[base + (m.trailing_zeros() >> 1) as usize] += c2;
            m &= m - 1;
        }
        base += lim;
    }
}

/// Sufficient statistics of one genotype column against a trait vector:
/// counts of Z = 1 and Z = 2 and the trait sums over those individuals.
fn genotype_column_stats(rng: &mut ChaCha8Rng, n: usize, trait_values: &[f64]) -> (u64, u64, f64, f64) {
    let (mut n1, mut n2) = (0u64, 0u64);
    let (mut s1, mut s2) = (0.0f64, 0.0f64);
    let mut base = 0usize;
    while base < n {
        let lim = (n - base).min(32);
        let mut word = rng.next_u64();
        if lim < 32 {
            word &= (1u64 << (2 * lim)) - 1;
        }
        let ones = (word ^ (word >> 1)) & PAIR_MASK;
        let twos = (word & (word >> 1)) & PAIR_MASK;
        n1 += ones.count_ones() as u64;
        n2 += twos.count_ones() as u64;
        let mut m = ones;
        while m != 0 {
            s1 += trait_values[base + (m.trailing_zeros() >> 1) as usize];
            m &= m - 1;
        }
        let mut m = twos;
        while m != 0 {
            s2 += trait_values[base + (m.trailing_zeros() >> 1) as usize];
            m &= m - 1;
        }
        base += lim;
    }
    (n1, n2, s1, s2)
}

/// Marginal OLS of trait on one SNP (with intercept) from sufficient
/// statistics: slope and its squared SE, RSS/((n−2)·S_zz).
fn marginal_ols(
    n: usize,
    n1: u64,
    n2: u64,
    s1: f64,
    s2: f64,
    sum_t: f64,
    sum_t2: f64,
) -> Result<(f64, f64), DivwError> {
    let nn = n as f64;
    let sz = (n1 + 2 * n2) as f64;
    let szz_raw = (n1 + 4 * n2) as f64;
    let szt_raw = s1 + 2.0 * s2;
    let szz = szz_raw - sz * sz / nn;
    if !(szz > 0.0) {
        return Err(DivwError::Config(
            "monomorphic SNP column: marginal OLS undefined".into(),
        ));
    }
    let szt = szt_raw - sz * sum_t / nn;
    let stt = sum_t2 - sum_t * sum_t / nn;
    let slope = szt / szz;
    let rss = (stt - slope * szt).max(0.0);
    let se2 = rss / ((nn - 2.0) * szz);
    Ok((slope, se2))
}

/// One cohort's summary statistics for all p SNPs.
///
/// `coeffs[j]` is the structural coefficient of Z_j on this cohort's trait
/// (γ_j for exposure-type cohorts, β₀γ_j + α_j for the outcome cohort);
/// `noise_sd = (confounder loading, U sd, E sd)` description is folded into
/// the closure-free parameters below.
struct CohortSpec<'a> {
    cohort_tag: u64,
    n: usize,
    /// Per-SNP trait coefficients (length p, zeros skipped in pass 1).
    coeffs: &'a [f64],
    /// Trait loading on the shared confounder draw.
    u_load: f64,
    /// Trait loading on the cohort's E_X draw.
    ex_load: f64,
    /// Trait loading on the cohort's E_Y draw (0 for exposure cohorts).
    ey_load: f64,
}

fn simulate_cohort(
    spec: &CohortSpec,
    seed: u64,
    rep: u64,
    u_sd: f64,
    e_sd: f64,
) -> Result<Vec<(f64, f64)>, DivwError> {
    let n = spec.n;
    let p = spec.coeffs.len();
    let mut trait_values = vec![0.0f64; n];

    // Pass 1: structural genotype contributions, then individual noise.
    for (j, &c) in spec.coeffs.iter().enumerate() {
        if c != 0.0 {
            let mut rng = substream(seed, &[TAG_GENO, rep, spec.cohort_tag, j as u64]);
            add_genotype_column(&mut rng, n, c, &mut trait_values);
        }
    }
    {
        let mut rng = substream(seed, &[TAG_NOISE, rep, spec.cohort_tag]);
        let draws_ey = spec.ey_load != 0.0;
        for t in trait_values.iter_mut() {
            let u: f64 = rng.sample(StandardNormal);
            let ex: f64 = rng.sample(StandardNormal);
            *t += spec.u_load * u_sd * u + spec.ex_load * e_sd * ex;
            if draws_ey {
                let ey: f64 = rng.sample(StandardNormal);
                *t += spec.ey_load * e_sd * ey;
            }
        }
    }

    let sum_t: f64 = trait_values.iter().sum();
    let sum_t2: f64 = trait_values.iter().map(|t| t * t).sum();

    // Pass 2: regenerate every column for its marginal regression.
    let mut stats = Vec::with_capacity(p);
    for j in 0..p {
        let mut rng = substream(seed, &[TAG_GENO, rep, spec.cohort_tag, j as u64]);
        let (n1, n2, s1, s2) = genotype_column_stats(&mut rng, n, &trait_values);
        stats.push(marginal_ols(n, n1, n2, s1, s2, sum_t, sum_t2)?);
    }
    Ok(stats)
}

/// The γ vector implied by a configuration: γ_j = φ_j √(2h²/s) for the
/// first s SNPs (φ_j standard normal, drawn once per config seed), 0 for
/// the rest.
pub fn draw_gamma(config: &SimulationConfig) -> Vec<f64> {
    let mut rng = substream(config.seed, &[TAG_PHI]);
    let scale = if config.s > 0 {
        (2.0 * config.h2 / config.s as f64).sqrt()
    } else {
        0.0
    };
    (0..config.p)
        .map(|j| {
            if j < config.s {
                scale * rng.sample::<f64, _>(StandardNormal)
            } else {
                0.0
            }
        })
        .collect()
}

/// The per-replication direct-effect vector α.
fn draw_alpha(config: &SimulationConfig, rep: u64) -> Vec<f64> {
    match &config.pleiotropy {
        Pleiotropy::None => vec![0.0; config.p],
        Pleiotropy::Directional { alpha } => alpha.clone(),
        Pleiotropy::Balanced { tau0 } => {
            let mut rng = substream(config.seed, &[TAG_ALPHA, rep]);
            (0..config.p)
                .map(|_| tau0 * rng.sample::<f64, _>(StandardNormal))
                .collect()
        }
    }
}

/// Closed-form true SDs of the marginal summary statistics, given the
/// realized γ and α vectors:
///
/// Var(X) = 0.5 Σγ² + (0.6η_X² + 0.4)(1−h²),
/// Var(Y) = β₀²Var(X) + 0.5 Σα² + (0.6η_Y² + 0.4)(1−h²) + 1.2 β₀η_Xη_Y(1−h²),
/// σ²_Xj = (Var(X) − 0.5γ_j²) / (0.5 n_X),
/// σ²_Yj = (Var(Y) − 0.5(β₀γ_j + α_j)²) / (0.5 n_Y),
///
/// and σ*²_Xj as σ²_Xj with n_X* in place of n_X.
pub fn true_population(
    config: &SimulationConfig,
    gamma: &[f64],
    alpha: &[f64],
) -> PopulationParams {
    let one_m_h2 = 1.0 - config.h2;
    let sum_g2: f64 = gamma.iter().map(|g| g * g).sum();
    let sum_a2: f64 = alpha.iter().map(|a| a * a).sum();
    let var_x = 0.5 * sum_g2 + (0.6 * config.eta_x * config.eta_x + 0.4) * one_m_h2;
    let var_y = config.beta0 * config.beta0 * var_x
        + 0.5 * sum_a2
        + (0.6 * config.eta_y * config.eta_y + 0.4) * one_m_h2
        + 1.2 * config.beta0 * config.eta_x * config.eta_y * one_m_h2;
    let sd = |var_trait: f64, effect: f64, n: usize| {
        ((var_trait - 0.5 * effect * effect) / (0.5 * n as f64)).sqrt()
    };
    PopulationParams {
        sigma_x: gamma.iter().map(|&g| sd(var_x, g, config.n_x)).collect(),
        sigma_y: gamma
            .iter()
            .zip(alpha)
            .map(|(&g, &a)| sd(var_y, config.beta0 * g + a, config.n_y))
            .collect(),
        sigma_x_star: gamma
            .iter()
            .map(|&g| sd(var_x, g, config.n_x_star))
            .collect(),
        gamma: gamma.to_vec(),
        beta0: config.beta0,
        tau0: match config.pleiotropy {
            Pleiotropy::Balanced { tau0 } => tau0,
            _ => 0.0,
        },
        alpha: alpha.to_vec(),
    }
}

/// Generates one individual-level replication: three cohorts, per-SNP
/// marginal regressions, and (optionally) closed-form true SDs in place of
/// the regression SEs.
pub fn gen_individual_level(
    config: &SimulationConfig,
    gamma: &[f64],
    rep: u64,
) -> Result<SummaryDataset, DivwError> {
    assert_eq!(gamma.len(), config.p, "gamma vector must have length p");
    for (name, n) in [
        ("n_x", config.n_x),
        ("n_y", config.n_y),
        ("n_x_star", config.n_x_star),
    ] {
        if n < 3 {
            return Err(DivwError::Config(format!(
                "{name} = {n} is too small: marginal OLS needs n ≥ 3"
            )));
        }
    }
    let alpha = draw_alpha(config, rep);
    let one_m_h2 = 1.0 - config.h2;
    let u_sd = (0.6 * one_m_h2).sqrt();
    let e_sd = (0.4 * one_m_h2).sqrt();

    // Y = β₀X + ΣαZ + η_Y U + E_Y with X expanded, so the outcome-cohort
    // trait has genotype coefficients β₀γ_j + α_j, confounder loading
    // β₀η_X + η_Y, and noise loadings β₀ on E_X and 1 on E_Y.
    let y_coeffs: Vec<f64> = gamma
        .iter()
        .zip(&alpha)
        .map(|(&g, &a)| config.beta0 * g + a)
        .collect();

    let exposure = simulate_cohort(
        &CohortSpec {
            cohort_tag: COHORT_EXPOSURE,
            n: config.n_x,
            coeffs: gamma,
            u_load: config.eta_x,
            ex_load: 1.0,
            ey_load: 0.0,
        },
        config.seed,
        rep,
        u_sd,
        e_sd,
    )?;
    let outcome = simulate_cohort(
        &CohortSpec {
            cohort_tag: COHORT_OUTCOME,
            n: config.n_y,
            coeffs: &y_coeffs,
            u_load: config.beta0 * config.eta_x + config.eta_y,
            ex_load: config.beta0,
            ey_load: 1.0,
        },
        config.seed,
        rep,
        u_sd,
        e_sd,
    )?;
    let selection = simulate_cohort(
        &CohortSpec {
            cohort_tag: COHORT_SELECTION,
            n: config.n_x_star,
            coeffs: gamma,
            u_load: config.eta_x,
            ex_load: 1.0,
            ey_load: 0.0,
        },
        config.seed,
        rep,
        u_sd,
        e_sd,
    )?;

    let truth = if config.use_true_sds {
        Some(true_population(config, gamma, &alpha))
    } else {
        None
    };

    let mut records = Vec::with_capacity(config.p);
    for j in 0..config.p {
        let (se_x, se_y, se_x_star) = match &truth {
            Some(t) => (t.sigma_x[j], t.sigma_y[j], t.sigma_x_star[j]),
            None => (
                exposure[j].1.sqrt(),
                outcome[j].1.sqrt(),
                selection[j].1.sqrt(),
            ),
        };
        records.push(SnpRecord {
            id: format!("snp{j}"),
            gamma_hat: exposure[j].0,
            se_x,
            big_gamma_hat: outcome[j].0,
            se_y,
            gamma_star: Some(selection[j].0),
            se_x_star: Some(se_x_star),
        });
    }
    SummaryDataset::new(records)
}
