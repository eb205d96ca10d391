//! Simulation configurations: the built-in benchmark cases, and a flat
//! key-value config-file format for custom runs.

use std::path::Path;

use crate::data_model::PopulationParams;
use crate::error::DivwError;

/// Which data-generating process to run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Dgp {
    /// Sample (γ̂*, γ̂, Γ̂) directly from the normal measurement model.
    SummaryLevel,
    /// Simulate genotype cohorts and run per-SNP marginal regressions.
    IndividualLevel,
}

/// Direct-effect (pleiotropy) specification.
#[derive(Clone, Debug, PartialEq)]
pub enum Pleiotropy {
    None,
    /// α_j ~ N(0, τ₀²) redrawn each replication.
    Balanced { tau0: f64 },
    /// Fixed α vector (directional pleiotropy).
    Directional { alpha: Vec<f64> },
}

/// Full description of a Monte Carlo experiment.
#[derive(Clone, Debug)]
pub struct SimulationConfig {
    pub dgp: Dgp,
    /// Exposure-, outcome-, and selection-cohort sizes.
    pub n_x: usize,
    pub n_y: usize,
    pub n_x_star: usize,
    /// Number of SNPs and number of non-null SNPs (γ_j ≠ 0 for j < s).
    pub p: usize,
    pub s: usize,
    /// Total heritability of the exposure (individual-level only).
    pub h2: f64,
    pub beta0: f64,
    /// Confounder loadings.
    pub eta_x: f64,
    pub eta_y: f64,
    pub pleiotropy: Pleiotropy,
    pub replications: usize,
    pub seed: u64,
    /// Report the closed-form true SDs instead of the regression SEs.
    pub use_true_sds: bool,
    /// Population for the summary-level DGP (ignored by individual-level).
    pub population: Option<PopulationParams>,
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<(), DivwError> {
        if self.s > self.p {
            return Err(DivwError::Config(format!(
                "s = {} exceeds p = {}",
                self.s, self.p
            )));
        }
        if self.replications < 1 {
            return Err(DivwError::Config("replications must be ≥ 1".into()));
        }
        if !(0.0..1.0).contains(&self.h2) {
            return Err(DivwError::Config(format!(
                "h2 must lie in [0, 1), got {}",
                self.h2
            )));
        }
        match self.dgp {
            Dgp::SummaryLevel => {
                let pop = self.population.as_ref().ok_or_else(|| {
                    DivwError::Config(
                        "summary-level simulation needs population parameters \
                         (params_file = <tsv>)"
                            .into(),
                    )
                })?;
                pop.validate()?;
            }
            Dgp::IndividualLevel => {
                if self.p == 0 {
                    return Err(DivwError::Config("p must be ≥ 1".into()));
                }
                for (name, n) in [("n_x", self.n_x), ("n_y", self.n_y), ("n_x_star", self.n_x_star)]
                {
                    if n < 3 {
                        return Err(DivwError::Config(format!(
                            "{name} = {n} is too small: marginal OLS needs n ≥ 3"
                        )));
                    }
                }
            }
        }
        if let Pleiotropy::Directional { alpha } = &self.pleiotropy {
            if alpha.len() != self.p {
                return Err(DivwError::Config(format!(
                    "directional alpha has length {}, expected {}",
                    alpha.len(),
                    self.p
                )));
            }
        }
        Ok(())
    }
}

/// Built-in benchmark configurations.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CaseId {
    /// n = 10000, p = 2000, s = 200, h² = 0.1 — many weak, many null IVs.
    Case4,
    /// n = 10000, p = 2000, s = 1000, h² = 0.2.
    Case5,
    /// n = 50000, p = 2000, s = 1000, h² = 0.2 — larger cohorts.
    Case6,
    /// n = 10000, s = p = 2000, h² = 0.2 — every IV weak, none null.
    Case7,
    /// Balanced-pleiotropy benchmark: synthetic summary-level population
    /// with τ₀ = 2·mean(σ_Yj).
    TableS1,
    /// Directional-pleiotropy benchmark: α_j = 0.01 for j ≤ round(p·ξ).
    TableS2 { xi: f64 },
}

/// The synthetic summary-level benchmark population behind the pleiotropy
/// cases: p = 1119 SNPs with |γ_j| = 0.005 in a fixed sign pattern (ten
/// leading −, then alternating + / −), σ_Xj = σ*_Xj = 0.0018,
/// σ_Yj = 0.0088, β₀ = 0.4. Per-SNP strength γ²/σ_X² ≈ 7.7 with
/// κ√p ≈ 258, comfortably above the effective-sample-size guideline.
pub fn pleiotropy_benchmark_population() -> PopulationParams {
    let p = 1119;
    let gamma: Vec<f64> = (0..p)
        .map(|j| {
            if j < 10 {
                -0.005
            } else if (j - 10) % 2 == 0 {
                0.005
            } else {
                -0.005
            }
        })
        .collect();
    PopulationParams {
        gamma,
        sigma_x: vec![0.0018; p],
        sigma_y: vec![0.0088; p],
        sigma_x_star: vec![0.0018; p],
        beta0: 0.4,
        tau0: 0.0,
        alpha: Vec::new(),
    }
}

/// Directional α vector for the TableS2-style benchmark: 0.01 for the
/// first round(p·ξ) SNPs, 0 elsewhere.
pub fn directional_alpha(p: usize, xi: f64) -> Vec<f64> {
    let cutoff = (p as f64 * xi).round() as usize;
    (0..p).map(|j| if j < cutoff { 0.01 } else { 0.0 }).collect()
}

/// Returns the exact configuration of a built-in case (500 replications,
/// seed 0; override both from the CLI).
pub fn case_config(case: CaseId) -> SimulationConfig {
    let individual = |n: usize, s: usize, h2: f64| SimulationConfig {
        dgp: Dgp::IndividualLevel,
        n_x: n,
        n_y: n,
        n_x_star: n,
        p: 2000,
        s,
        h2,
        beta0: 0.4,
        eta_x: 1.0,
        eta_y: 1.0,
        pleiotropy: Pleiotropy::None,
        replications: 500,
        seed: 0,
        use_true_sds: false,
        population: None,
    };
    match case {
        CaseId::Case4 => individual(10_000, 200, 0.1),
        CaseId::Case5 => individual(10_000, 1000, 0.2),
        CaseId::Case6 => individual(50_000, 1000, 0.2),
        CaseId::Case7 => individual(10_000, 2000, 0.2),
        CaseId::TableS1 => {
            let population = pleiotropy_benchmark_population();
            let mean_sy =
                population.sigma_y.iter().sum::<f64>() / population.p() as f64;
            summary_benchmark(population, Pleiotropy::Balanced { tau0: 2.0 * mean_sy })
        }
        CaseId::TableS2 { xi } => {
            let population = pleiotropy_benchmark_population();
            let alpha = directional_alpha(population.p(), xi);
            summary_benchmark(population, Pleiotropy::Directional { alpha })
        }
    }
}

fn summary_benchmark(population: PopulationParams, pleiotropy: Pleiotropy) -> SimulationConfig {
    let p = population.p();
    SimulationConfig {
        dgp: Dgp::SummaryLevel,
        n_x: 0,
        n_y: 0,
        n_x_star: 0,
        p,
        s: p,
        h2: 0.0,
        beta0: population.beta0,
        eta_x: 1.0,
        eta_y: 1.0,
        pleiotropy,
        replications: 500,
        seed: 0,
        use_true_sds: true,
        population: Some(population),
    }
}

/// Parses a case name as used by the CLI: `4`..`7`, `s1`, or `s2:<ξ>`.
pub fn parse_case(text: &str) -> Result<CaseId, DivwError> {
    match text {
        "4" | "case4" => Ok(CaseId::Case4),
        "5" | "case5" => Ok(CaseId::Case5),
        "6" | "case6" => Ok(CaseId::Case6),
        "7" | "case7" => Ok(CaseId::Case7),
        "s1" => Ok(CaseId::TableS1),
        other => {
            if let Some(xi_text) = other.strip_prefix("s2:") {
                let xi: f64 = xi_text.parse().map_err(|_| {
                    DivwError::Config(format!("cannot parse ξ in case spec {other:?}"))
                })?;
                if !(0.0..=1.0).contains(&xi) {
                    return Err(DivwError::Config(format!("ξ must lie in [0, 1], got {xi}")));
                }
                Ok(CaseId::TableS2 { xi })
            } else {
                Err(DivwError::Config(format!(
                    "unknown case {other:?}; expected 4, 5, 6, 7, s1, or s2:<ξ>"
                )))
            }
        }
    }
}

/// Reads a flat `key = value` config file (`#` starts a comment).
///
/// Keys: `dgp` (summary_level | individual_level), `n_x`, `n_y`,
/// `n_x_star`, `p`, `s`, `h2`, `beta0`, `eta_x`, `eta_y`, `pleiotropy`
/// (none | balanced:<τ₀> | directional:<ξ>), `replications`, `seed`,
/// `use_true_sds` (true | false), `params_file` (population TSV for the
/// summary-level DGP, resolved relative to the config file).
pub fn read_config_file(path: &Path) -> Result<SimulationConfig, DivwError> {
    let raw = std::fs::read_to_string(path)?;
    let mut cfg = SimulationConfig {
        dgp: Dgp::IndividualLevel,
        n_x: 10_000,
        n_y: 10_000,
        n_x_star: 10_000,
        p: 2000,
        s: 200,
        h2: 0.1,
        beta0: 0.4,
        eta_x: 1.0,
        eta_y: 1.0,
        pleiotropy: Pleiotropy::None,
        replications: 500,
        seed: 0,
        use_true_sds: false,
        population: None,
    };
    let mut pleiotropy_spec: Option<String> = None;
    let mut beta0_seen = false;
    let mut params_file: Option<String> = None;

    for (lineno, line) in raw.lines().enumerate() {
        let line = line.split('#').next().unwrap().trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            DivwError::Config(format!(
                "{}:{}: expected key = value",
                path.display(),
                lineno + 1
            ))
        })?;
        let key = key.trim();
        let value = value.trim();
        let bad = |what: &str| {
            DivwError::Config(format!(
                "{}:{}: cannot parse {what} from {value:?}",
                path.display(),
                lineno + 1
            ))
        };
        match key {
            "dgp" => {
                cfg.dgp = match value {
                    "summary_level" => Dgp::SummaryLevel,
                    "individual_level" => Dgp::IndividualLevel,
                    _ => return Err(bad("dgp")),
                }
            }
            "n_x" => cfg.n_x = value.parse().map_err(|_| bad("n_x"))?,
            "n_y" => cfg.n_y = value.parse().map_err(|_| bad("n_y"))?,
            "n_x_star" => cfg.n_x_star = value.parse().map_err(|_| bad("n_x_star"))?,
            "p" => cfg.p = value.parse().map_err(|_| bad("p"))?,
            "s" => cfg.s = value.parse().map_err(|_| bad("s"))?,
            "h2" => cfg.h2 = value.parse().map_err(|_| bad("h2"))?,
            "beta0" => {
                cfg.beta0 = value.parse().map_err(|_| bad("beta0"))?;
                beta0_seen = true;
            }
            "eta_x" => cfg.eta_x = value.parse().map_err(|_| bad("eta_x"))?,
            "eta_y" => cfg.eta_y = value.parse().map_err(|_| bad("eta_y"))?,
            "pleiotropy" => pleiotropy_spec = Some(value.to_string()),
            "replications" => {
                cfg.replications = value.parse().map_err(|_| bad("replications"))?
            }
            "seed" => cfg.seed = value.parse().map_err(|_| bad("seed"))?,
            "use_true_sds" => {
                cfg.use_true_sds = value.parse().map_err(|_| bad("use_true_sds"))?
            }
            "params_file" => params_file = Some(value.to_string()),
            other => {
                return Err(DivwError::Config(format!(
                    "{}:{}: unknown key {other:?}",
                    path.display(),
                    lineno + 1
                )))
            }
        }
    }

    if let Some(file) = params_file {
        let resolved = path.parent().unwrap_or(Path::new(".")).join(file);
        let pop = crate::data_model::read_population_tsv(&resolved, cfg.beta0, 0.0)?;
        if !beta0_seen {
            cfg.beta0 = pop.beta0;
        }
        cfg.p = pop.p();
        cfg.s = pop.gamma.iter().filter(|g| **g != 0.0).count();
        cfg.population = Some(pop);
    }

    if let Some(spec) = pleiotropy_spec {
        cfg.pleiotropy = match spec.as_str() {
            "none" => Pleiotropy::None,
            other => {
                if let Some(t) = other.strip_prefix("balanced:") {
                    let tau0: f64 = t
                        .parse()
                        .map_err(|_| DivwError::Config(format!("bad τ₀ in {other:?}")))?;
                    Pleiotropy::Balanced { tau0 }
                } else if let Some(x) = other.strip_prefix("directional:") {
                    let xi: f64 = x
                        .parse()
                        .map_err(|_| DivwError::Config(format!("bad ξ in {other:?}")))?;
                    Pleiotropy::Directional {
                        alpha: directional_alpha(cfg.p, xi),
                    }
                } else {
                    return Err(DivwError::Config(format!(
                        "unknown pleiotropy spec {other:?}"
                    )));
                }
            }
        };
    }

    cfg.validate()?;
    Ok(cfg)
}
