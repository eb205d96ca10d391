//! Monte Carlo runner: replicate a DGP, apply a list of method/λ-policy
//! specifications to each replication, and aggregate means, SDs, average
//! SEs, and coverage.
//!
//! Replications run in parallel but the result is worker-count invariant:
//! each replication's randomness is a pure function of (seed, rep), per-rep
//! results are collected in replication order, and aggregation is a single
//! sequential compensated reduction over that ordered list.

use std::io::Write;

use rayon::prelude::*;

use crate::data_model::SummaryDataset;
use crate::error::DivwError;
use crate::estimators::{self, LambdaPolicy, Method};
use crate::math::CompensatedSum;
use crate::simulation::config::{Dgp, SimulationConfig};
use crate::simulation::individual::{draw_gamma, gen_individual_level};
use crate::simulation::summary::gen_summary_level;

/// One estimator configuration to evaluate on every replication.
#[derive(Clone, Debug)]
pub struct MethodSpec {
    pub method: Method,
    pub policy: LambdaPolicy,
    pub pleiotropy_adjusted: bool,
}

impl MethodSpec {
    pub fn label(&self) -> String {
        let base = match self.method {
            Method::Ivw => "ivw",
            Method::Divw => "divw",
        };
        if self.pleiotropy_adjusted {
            format!("{base}_alpha")
        } else {
            base.to_string()
        }
    }
}

/// Aggregated Monte Carlo results for one method spec.
#[derive(Clone, Debug)]
pub struct MonteCarloSummary {
    pub method: String,
    pub lambda_policy: String,
    /// Mean point estimate over non-failed replications.
    pub mean: f64,
    /// Sample SD of the point estimate over non-failed replications.
    pub sd: f64,
    /// Mean reported SE over non-failed replications.
    pub mean_se: f64,
    /// Fraction of non-failed replications whose 95% CI covers β₀.
    pub coverage: f64,
    /// Replications where the estimator errored (e.g. empty selection).
    pub failures: usize,
    /// Mean λ actually used (interesting for MR-EO).
    pub mean_lambda: f64,
    /// Replications that produced an estimate.
    pub successes: usize,
}

#[derive(Clone, Copy)]
struct RepOutcome {
    beta: f64,
    se: f64,
    lambda: f64,
    covered: bool,
}

fn run_one_spec(
    dataset: &SummaryDataset,
    spec: &MethodSpec,
    beta0: f64,
) -> Result<RepOutcome, DivwError> {
    let report = estimators::analyze(dataset, spec.method, spec.policy, spec.pleiotropy_adjusted)?;
    Ok(RepOutcome {
        beta: report.beta_hat,
        se: report.se,
        lambda: report.lambda,
        covered: report.ci_low <= beta0 && beta0 <= report.ci_high,
    })
}

/// Runs the full Monte Carlo experiment. `workers = 0` uses all cores;
/// results are identical for every worker count.
pub fn run_monte_carlo(
    config: &SimulationConfig,
    specs: &[MethodSpec],
    workers: usize,
) -> Result<Vec<MonteCarloSummary>, DivwError> {
    config.validate()?;
    let gamma = match config.dgp {
        Dgp::IndividualLevel => draw_gamma(config),
        Dgp::SummaryLevel => Vec::new(),
    };

    let simulate_rep = |rep: u64| -> Result<Vec<Result<RepOutcome, DivwError>>, DivwError> {
        let dataset = match config.dgp {
            Dgp::SummaryLevel => {
                let mut params = config
                    .population
                    .clone()
                    .expect("validated: summary-level has population");
                match &config.pleiotropy {
                    super::config::Pleiotropy::None => {}
                    super::config::Pleiotropy::Balanced { tau0 } => params.tau0 = *tau0,
                    super::config::Pleiotropy::Directional { alpha } => {
                        params.alpha = alpha.clone()
                    }
                }
                gen_summary_level(&params, config.seed, rep)
            }
            Dgp::IndividualLevel => gen_individual_level(config, &gamma, rep)?,
        };
        Ok(specs
            .iter()
            .map(|spec| run_one_spec(&dataset, spec, config.beta0))
            .collect())
    };

    let reps = config.replications as u64;
    let per_rep: Vec<_> = if workers == 1 {
        (0..reps).map(simulate_rep).collect::<Result<_, _>>()?
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| DivwError::Config(format!("cannot build worker pool: {e}")))?;
        pool.install(|| {
            (0..reps)
                .into_par_iter()
                .map(simulate_rep)
                .collect::<Result<Vec<_>, _>>()
        })?
    };

    // Sequential aggregation in replication order.
    let mut out = Vec::with_capacity(specs.len());
    for (k, spec) in specs.iter().enumerate() {
        let outcomes: Vec<Option<RepOutcome>> = per_rep
            .iter()
            .map(|rep| rep[k].as_ref().ok().copied())
            .collect();
        let successes: Vec<RepOutcome> = outcomes.iter().flatten().copied().collect();
        let failures = outcomes.len() - successes.len();
        let n = successes.len();

        let (mean, sd, mean_se, coverage, mean_lambda) = if n == 0 {
            (f64::NAN, f64::NAN, f64::NAN, f64::NAN, f64::NAN)
        } else {
            let mean = compensated_mean(successes.iter().map(|o| o.beta));
            let sd = if n > 1 {
                let ss =
                    crate::math::compensated_sum(successes.iter().map(|o| {
                        let d = o.beta - mean;
                        d * d
                    }));
                (ss / (n - 1) as f64).sqrt()
            } else {
                f64::NAN
            };
            let mean_se = compensated_mean(successes.iter().map(|o| o.se));
            let covered = successes.iter().filter(|o| o.covered).count();
            let mean_lambda = compensated_mean(successes.iter().map(|o| o.lambda));
            (mean, sd, mean_se, covered as f64 / n as f64, mean_lambda)
        };

        out.push(MonteCarloSummary {
            method: spec.label(),
            lambda_policy: spec.policy.label(),
            mean,
            sd,
            mean_se,
            coverage,
            failures,
            mean_lambda,
            successes: n,
        });
    }
    Ok(out)
}

fn compensated_mean(values: impl Iterator<Item = f64> + ExactSizeIterator) -> f64 {
    let n = values.len();
    let mut sum = CompensatedSum::new();
    for v in values {
        sum.add(v);
    }
    sum.value() / n as f64
}

/// Writes the aggregate table as CSV. Floats use shortest-round-trip
/// formatting, so identical summaries serialize to identical bytes.
pub fn write_summary_csv(
    rows: &[MonteCarloSummary],
    out: &mut dyn Write,
) -> std::io::Result<()> {
    writeln!(
        out,
        "method,lambda_policy,mean,sd,mean_se,coverage,failures,mean_lambda"
    )?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.method, r.lambda_policy, r.mean, r.sd, r.mean_se, r.coverage, r.failures, r.mean_lambda
        )?;
    }
    Ok(())
}

/// Renders the aggregate table as aligned text for the console.
pub fn format_summary_table(rows: &[MonteCarloSummary]) -> String {
    let mut s = String::new();
    s.push_str(&format!(
        "{:<12} {:<12} {:>9} {:>9} {:>9} {:>9} {:>9} {:>12}\n",
        "method", "lambda", "mean", "sd", "mean_se", "coverage", "failures", "mean_lambda"
    ));
    for r in rows {
        s.push_str(&format!(
            "{:<12} {:<12} {:>9.4} {:>9.4} {:>9.4} {:>9.3} {:>9} {:>12.3}\n",
            r.method,
            r.lambda_policy,
            r.mean,
            r.sd,
            r.mean_se,
            r.coverage,
            r.failures,
            r.mean_lambda
        ));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data_model::PopulationParams;
    use crate::simulation::config::Pleiotropy;

    fn summary_config(reps: usize, seed: u64) -> SimulationConfig {
        let p = 60;
        let population = PopulationParams {
            gamma: (0..p).map(|j| 0.3 + 0.002 * j as f64).collect(),
            sigma_x: vec![0.05; p],
            sigma_y: vec![0.1; p],
            sigma_x_star: vec![0.05; p],
            beta0: 0.4,
            tau0: 0.0,
            alpha: Vec::new(),
        };
        SimulationConfig {
            dgp: Dgp::SummaryLevel,
            n_x: 0,
            n_y: 0,
            n_x_star: 0,
            p,
            s: p,
            h2: 0.0,
            beta0: 0.4,
            eta_x: 1.0,
            eta_y: 1.0,
            pleiotropy: Pleiotropy::None,
            replications: reps,
            seed,
            use_true_sds: true,
            population: Some(population),
        }
    }

    fn specs() -> Vec<MethodSpec> {
        vec![
            MethodSpec {
                method: Method::Ivw,
                policy: LambdaPolicy::None,
                pleiotropy_adjusted: false,
            },
            MethodSpec {
                method: Method::Divw,
                policy: LambdaPolicy::MrEo,
                pleiotropy_adjusted: false,
            },
        ]
    }

    #[test]
    fn identical_for_any_worker_count() {
        let config = summary_config(24, 13);
        let mut buffers: Vec<Vec<u8>> = Vec::new();
        for workers in [1usize, 2, 5] {
            let rows = run_monte_carlo(&config, &specs(), workers).unwrap();
            let mut buf = Vec::new();
            write_summary_csv(&rows, &mut buf).unwrap();
            buffers.push(buf);
        }
        assert_eq!(buffers[0], buffers[1]);
        assert_eq!(buffers[0], buffers[2]);
    }

    #[test]
    fn strong_instruments_recover_beta0() {
        let config = summary_config(60, 4);
        let rows = run_monte_carlo(&config, &specs(), 1).unwrap();
        let divw = &rows[1];
        assert_eq!(divw.failures, 0);
        // Σw ≈ 60·9 → SD ≈ 0.043; 60 reps → mean within ~0.02 of β₀.
        assert!((divw.mean - 0.4).abs() < 0.03, "mean {}", divw.mean);
        assert!(divw.coverage > 0.8);
    }

    #[test]
    fn failures_are_counted_not_dropped() {
        // γ = 0 with tight selection SEs: λ = 5.45 screens everything out.
        let p = 20;
        let mut config = summary_config(10, 2);
        config.p = p;
        config.s = 0;
        config.population = Some(PopulationParams {
            gamma: vec![0.0; p],
            sigma_x: vec![0.5; p],
            sigma_y: vec![0.1; p],
            sigma_x_star: vec![0.5; p],
            beta0: 0.4,
            tau0: 0.0,
            alpha: Vec::new(),
        });
        let spec = vec![MethodSpec {
            method: Method::Divw,
            policy: LambdaPolicy::GenomeWide,
            pleiotropy_adjusted: false,
        }];
        let rows = run_monte_carlo(&config, &spec, 1).unwrap();
        assert_eq!(rows[0].failures, 10);
        assert_eq!(rows[0].successes, 0);
        assert!(rows[0].mean.is_nan());
    }
}
