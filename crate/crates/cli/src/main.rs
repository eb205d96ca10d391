//! `divw` — IVW/dIVW Mendelian randomization from the command line.
//!
//! Subcommands: `analyze` (summary TSV → estimate report), `simulate`
//! (Monte Carlo benchmark tables), `diagnose` (Q-Q residual data and
//! instrument-strength diagnostics), `oracle` (population-level closed
//! forms from a parameter file).
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 degenerate
//! estimator (no usable instruments / non-positive dIVW denominator).

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sha2::{Digest, Sha256};

use divw_core::data_model::{self, ColumnMap, SummaryDataset};
use divw_core::estimators::{self, LambdaPolicy, Method};
use divw_core::report::{qq_data, standardized_residuals, ReportDocument};
use divw_core::selection;
use divw_core::simulation::{self, runner, MethodSpec};
use divw_core::theory;
use divw_core::DivwError;

const EXIT_USAGE: u8 = 1;
const EXIT_DATA: u8 = 2;
const EXIT_DEGENERATE: u8 = 3;

#[derive(Parser)]
#[command(
    name = "divw",
    version,
    about = "Debiased inverse-variance-weighted Mendelian randomization"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate the exposure effect from a summary-statistics TSV.
    Analyze(AnalyzeArgs),
    /// Run a Monte Carlo benchmark and print the aggregate table.
    Simulate(SimulateArgs),
    /// Emit Q-Q residual pairs and instrument-strength diagnostics.
    Diagnose(DiagnoseArgs),
    /// Evaluate population-level closed forms from a parameter file.
    Oracle(OracleArgs),
}

#[derive(Args, Clone)]
struct ColumnArgs {
    /// Column holding the SNP identifier.
    #[arg(long, default_value = "SNP")]
    col_snp: String,
    /// Column holding the SNP–exposure association.
    #[arg(long, default_value = "beta.exposure")]
    col_beta_exposure: String,
    /// Column holding its standard error.
    #[arg(long, default_value = "se.exposure")]
    col_se_exposure: String,
    /// Column holding the SNP–outcome association.
    #[arg(long, default_value = "beta.outcome")]
    col_beta_outcome: String,
    /// Column holding its standard error.
    #[arg(long, default_value = "se.outcome")]
    col_se_outcome: String,
    /// Column holding the selection-dataset association (optional in data).
    #[arg(long, default_value = "beta.selection")]
    col_beta_selection: String,
    /// Column holding its standard error (optional in data).
    #[arg(long, default_value = "se.selection")]
    col_se_selection: String,
}

impl ColumnArgs {
    fn to_map(&self) -> ColumnMap {
        ColumnMap {
            id: self.col_snp.clone(),
            beta_exposure: self.col_beta_exposure.clone(),
            se_exposure: self.col_se_exposure.clone(),
            beta_outcome: self.col_beta_outcome.clone(),
            se_outcome: self.col_se_outcome.clone(),
            beta_selection: self.col_beta_selection.clone(),
            se_selection: self.col_se_selection.clone(),
        }
    }
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Input summary-statistics TSV.
    input: PathBuf,
    /// Screening threshold policy: none, genomewide (λ=5.45), sqrt2logp,
    /// mr-eo, or an explicit λ value.
    #[arg(long, default_value = "none")]
    lambda: String,
    /// Report ivw, divw, or both.
    #[arg(long, default_value = "divw")]
    method: String,
    /// Use the balanced-pleiotropy (τ²-adjusted) variance.
    #[arg(long)]
    pleiotropy: bool,
    /// Output format: json, csv, or text.
    #[arg(long, default_value = "text")]
    format: String,
    #[command(flatten)]
    columns: ColumnArgs,
}

#[derive(Args)]
struct SimulateArgs {
    /// Built-in case: 4, 5, 6, 7, s1, or s2:<ξ>.
    #[arg(long, conflicts_with = "config")]
    case: Option<String>,
    /// Custom key-value configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Replication count (overrides the case/config default).
    #[arg(long)]
    reps: Option<usize>,
    /// RNG seed (overrides the case/config default).
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (0 = all cores).
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Output format: csv or text.
    #[arg(long, default_value = "csv")]
    format: String,
}

#[derive(Args)]
struct DiagnoseArgs {
    /// Input summary-statistics TSV.
    input: PathBuf,
    /// Screening threshold policy (see `analyze`).
    #[arg(long, default_value = "none")]
    lambda: String,
    /// Standardize residuals with the τ²-adjusted denominator.
    #[arg(long)]
    pleiotropy: bool,
    /// Output format: json, csv (quantile/residual pairs), or text.
    #[arg(long, default_value = "text")]
    format: String,
    #[command(flatten)]
    columns: ColumnArgs,
}

#[derive(Args)]
struct OracleArgs {
    /// Population-parameter TSV (columns gamma, sigma.x, sigma.y, and
    /// optionally sigma.x.star, alpha).
    params: PathBuf,
    /// Screening threshold λ.
    #[arg(long, default_value_t = 0.0)]
    lambda: f64,
    /// True exposure effect β₀.
    #[arg(long, default_value_t = 0.0)]
    beta0: f64,
    /// Balanced-pleiotropy SD τ₀.
    #[arg(long, default_value_t = 0.0)]
    tau0: f64,
    /// Exposure-cohort size for the κ/p growth bound (omit to skip).
    #[arg(long)]
    n_x: Option<usize>,
    /// Output format: json or text.
    #[arg(long, default_value = "text")]
    format: String,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            use clap::error::ErrorKind;
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => EXIT_USAGE,
            };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Analyze(args) => cmd_analyze(&args),
        Command::Simulate(args) => cmd_simulate(&args),
        Command::Diagnose(args) => cmd_diagnose(&args),
        Command::Oracle(args) => cmd_oracle(&args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(CliError::Domain(err)) => {
            eprintln!("error: {err}");
            if err.is_degenerate() {
                ExitCode::from(EXIT_DEGENERATE)
            } else {
                ExitCode::from(EXIT_DATA)
            }
        }
    }
}

enum CliError {
    Usage(String),
    Domain(DivwError),
}

impl From<DivwError> for CliError {
    fn from(err: DivwError) -> Self {
        CliError::Domain(err)
    }
}

fn parse_lambda_policy(text: &str) -> Result<LambdaPolicy, CliError> {
    match text {
        "none" => Ok(LambdaPolicy::None),
        "genomewide" => Ok(LambdaPolicy::GenomeWide),
        "sqrt2logp" => Ok(LambdaPolicy::SqrtTwoLogP),
        "mr-eo" => Ok(LambdaPolicy::MrEo),
        other => match other.parse::<f64>() {
            Ok(l) if l >= 0.0 && l.is_finite() => Ok(LambdaPolicy::Fixed(l)),
            _ => Err(CliError::Usage(format!(
                "--lambda must be none, genomewide, sqrt2logp, mr-eo, or a \
                 nonnegative number; got {other:?}"
            ))),
        },
    }
}

fn parse_methods(text: &str) -> Result<Vec<Method>, CliError> {
    match text {
        "ivw" => Ok(vec![Method::Ivw]),
        "divw" => Ok(vec![Method::Divw]),
        "both" => Ok(vec![Method::Ivw, Method::Divw]),
        other => Err(CliError::Usage(format!(
            "--method must be ivw, divw, or both; got {other:?}"
        ))),
    }
}

fn load_dataset(
    path: &PathBuf,
    columns: &ColumnArgs,
) -> Result<(SummaryDataset, String, Vec<String>), CliError> {
    let dataset = data_model::read_summary_tsv(path, &columns.to_map())?;
    let violations = dataset.validate();
    if !violations.is_empty() {
        let v = &violations[0];
        return Err(CliError::Domain(DivwError::Config(format!(
            "{} invalid record(s); first: SNP {:?} field {}: {}",
            violations.len(),
            v.id,
            v.field,
            v.message
        ))));
    }
    let digest = file_digest(path)?;
    let mut warnings = Vec::new();
    let dups = dataset.duplicate_ids();
    if !dups.is_empty() {
        warnings.push(format!(
            "{} duplicate SNP id(s), e.g. {:?}; estimators treat rows independently",
            dups.len(),
            dups[0]
        ));
    }
    Ok((dataset, digest, warnings))
}

fn file_digest(path: &PathBuf) -> Result<String, DivwError> {
    let bytes = std::fs::read(path)?;
    let mut hasher = Sha256::new();
    hasher.update(&bytes);
    Ok(format!("sha256:{:x}", hasher.finalize()))
}

fn print_json<T: serde::Serialize>(value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Domain(DivwError::Config(format!("cannot serialize: {e}"))))?;
    println!("{text}");
    Ok(())
}

fn cmd_analyze(args: &AnalyzeArgs) -> Result<(), CliError> {
    let policy = parse_lambda_policy(&args.lambda)?;
    let methods = parse_methods(&args.method)?;
    let (dataset, digest, warnings) = load_dataset(&args.input, &args.columns)?;

    let (selection_set, _trace) = estimators::resolve_selection(&dataset, policy)?;
    let mut estimates = Vec::new();
    for method in methods {
        estimates.push(estimators::analyze_with_selection(
            &dataset,
            method,
            &selection_set,
            args.pleiotropy,
        )?);
    }
    let strength = selection::kappa_hat(&dataset, &selection_set)?;
    let doc = ReportDocument {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        input_digest: digest,
        estimates,
        strength: Some(strength),
        qq: None,
        warnings,
    };

    match args.format.as_str() {
        "json" => print_json(&doc)?,
        "csv" => {
            println!("method,lambda,pleiotropy_adjusted,beta_hat,se,ci_low,ci_high,p_selected");
            for e in &doc.estimates {
                println!(
                    "{},{},{},{},{},{},{},{}",
                    match e.method {
                        Method::Ivw => "ivw",
                        Method::Divw => "divw",
                    },
                    e.lambda,
                    e.pleiotropy_adjusted,
                    e.beta_hat,
                    e.se,
                    e.ci_low,
                    e.ci_high,
                    e.p_selected
                );
            }
        }
        "text" => {
            for e in &doc.estimates {
                let name = match e.method {
                    Method::Ivw => "IVW",
                    Method::Divw => "dIVW",
                };
                let adj = if e.pleiotropy_adjusted { " (pleiotropy-adjusted)" } else { "" };
                println!(
                    "{name}{adj}: beta = {:.6}  SE = {:.6}  95% CI [{:.6}, {:.6}]",
                    e.beta_hat, e.se, e.ci_low, e.ci_high
                );
                println!(
                    "  lambda = {:.4}, selected {} SNP(s), kappa_hat = {:.4}, \
                     effective sample size = {:.1}",
                    e.lambda, e.p_selected, e.kappa_hat, e.effective_sample_size
                );
                if let Some(t2) = e.tau2_hat {
                    println!("  tau2_hat (raw) = {t2:.6e}");
                }
                for w in &e.warnings {
                    println!("  warning: {w}");
                }
            }
            for w in &doc.warnings {
                println!("warning: {w}");
            }
        }
        other => {
            return Err(CliError::Usage(format!(
                "--format must be json, csv, or text; got {other:?}"
            )))
        }
    }
    Ok(())
}

fn cmd_simulate(args: &SimulateArgs) -> Result<(), CliError> {
    let mut config = match (&args.case, &args.config) {
        (Some(case), None) => simulation::case_config(simulation::config::parse_case(case)?),
        (None, Some(path)) => simulation::config::read_config_file(path)?,
        _ => {
            return Err(CliError::Usage(
                "simulate needs exactly one of --case or --config".into(),
            ))
        }
    };
    if let Some(reps) = args.reps {
        config.replications = reps;
    }
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    config
        .validate()
        .map_err(|e| CliError::Usage(e.to_string()))?;

    let mut specs = vec![
        MethodSpec {
            method: Method::Ivw,
            policy: LambdaPolicy::None,
            pleiotropy_adjusted: false,
        },
        MethodSpec {
            method: Method::Divw,
            policy: LambdaPolicy::None,
            pleiotropy_adjusted: false,
        },
        MethodSpec {
            method: Method::Divw,
            policy: LambdaPolicy::SqrtTwoLogP,
            pleiotropy_adjusted: false,
        },
        MethodSpec {
            method: Method::Divw,
            policy: LambdaPolicy::MrEo,
            pleiotropy_adjusted: false,
        },
    ];
    if !matches!(config.pleiotropy, simulation::Pleiotropy::None) {
        specs.push(MethodSpec {
            method: Method::Divw,
            policy: LambdaPolicy::None,
            pleiotropy_adjusted: true,
        });
    }

    let rows = runner::run_monte_carlo(&config, &specs, args.workers)?;
    match args.format.as_str() {
        "csv" => {
            let mut out = Vec::new();
            runner::write_summary_csv(&rows, &mut out)
                .map_err(|e| CliError::Domain(DivwError::Io(e)))?;
            std::io::stdout()
                .write_all(&out)
                .map_err(|e| CliError::Domain(DivwError::Io(e)))?;
        }
        "text" => print!("{}", runner::format_summary_table(&rows)),
        other => {
            return Err(CliError::Usage(format!(
                "--format must be csv or text; got {other:?}"
            )))
        }
    }
    Ok(())
}

fn cmd_diagnose(args: &DiagnoseArgs) -> Result<(), CliError> {
    let policy = parse_lambda_policy(&args.lambda)?;
    let (dataset, digest, warnings) = load_dataset(&args.input, &args.columns)?;

    let (selection_set, _trace) = estimators::resolve_selection(&dataset, policy)?;
    let estimate =
        estimators::analyze_with_selection(&dataset, Method::Divw, &selection_set, args.pleiotropy)?;
    let residuals = standardized_residuals(&dataset, estimate.beta_hat, estimate.tau2_hat);
    let qq = qq_data(&residuals);
    let strength = selection::kappa_hat(&dataset, &selection_set)?;
    let ess_ok = strength.effective_sample_size >= 20.0;

    match args.format.as_str() {
        "json" => {
            let doc = ReportDocument {
                tool_version: env!("CARGO_PKG_VERSION").to_string(),
                input_digest: digest,
                estimates: vec![estimate],
                strength: Some(strength),
                qq: Some(qq),
                warnings,
            };
            print_json(&doc)?;
        }
        "csv" => {
            println!("theoretical_quantile,standardized_residual");
            for (t, r) in qq.theoretical.iter().zip(&qq.residual) {
                println!("{t},{r}");
            }
        }
        "text" => {
            println!(
                "dIVW beta = {:.6} (SE {:.6}), lambda = {:.4}, {} SNP(s) selected",
                estimate.beta_hat, estimate.se, estimate.lambda, estimate.p_selected
            );
            println!(
                "effective sample size kappa_hat*sqrt(p_hat)/max(1,lambda^2) = {:.1}  [{}]",
                strength.effective_sample_size,
                if ess_ok { "PASS" } else { "WARN: below 20" }
            );
            if let Some(t2) = estimate.tau2_hat {
                println!("tau2_hat (raw) = {t2:.6e}");
            }
            println!("{} Q-Q pairs; first/last residuals: {:.4} / {:.4}",
                qq.residual.len(),
                qq.residual.first().unwrap(),
                qq.residual.last().unwrap()
            );
            for w in &warnings {
                println!("warning: {w}");
            }
        }
        other => {
            return Err(CliError::Usage(format!(
                "--format must be json, csv, or text; got {other:?}"
            )))
        }
    }
    Ok(())
}

fn cmd_oracle(args: &OracleArgs) -> Result<(), CliError> {
    let params = data_model::read_population_tsv(&args.params, args.beta0, args.tau0)?;
    if args.lambda < 0.0 || !args.lambda.is_finite() {
        return Err(CliError::Usage(format!(
            "--lambda must be a nonnegative number, got {}",
            args.lambda
        )));
    }
    let strength = theory::population_strength(&params, args.lambda);
    let v_ivw = theory::asymptotic_variance(&params, args.lambda, theory::Estimator::Ivw)?;
    let v_divw = theory::asymptotic_variance(&params, args.lambda, theory::Estimator::Divw)?;
    let abias = theory::ivw_abias(&params);
    let limit = theory::theorem31_limit(&params, args.lambda);
    let bias = if params.alpha.is_empty() {
        None
    } else {
        Some(theory::unbalanced_bias(&params, &params.alpha.clone(), args.lambda)?)
    };
    let kp = args.n_x.map(|n| theory::kappa_p_bound(&params, n));

    match args.format.as_str() {
        "json" => {
            let mut doc = serde_json::json!({
                "p": params.p(),
                "lambda": args.lambda,
                "kappa": strength.kappa,
                "kappa_lambda": strength.kappa_lambda,
                "p_lambda": strength.p_lambda,
                "v_ivw": v_ivw,
                "v_divw": v_divw,
                "ivw_abias": abias,
                "theorem31_limit": limit,
            });
            if let Some(b) = bias {
                doc["unbalanced_bias"] = serde_json::json!(b);
                doc["beta0_plus_bias"] = serde_json::json!(params.beta0 + b);
            }
            if let Some((ratio, bound)) = kp {
                doc["kappa_over_p"] = serde_json::json!(ratio);
                doc["n_x_over_p_squared"] = serde_json::json!(bound);
            }
            print_json(&doc)?;
        }
        "text" => {
            println!("p            = {}", params.p());
            println!("lambda       = {}", args.lambda);
            println!("kappa        = {:.6}", strength.kappa);
            println!("kappa_lambda = {:.6}", strength.kappa_lambda);
            println!("p_lambda     = {:.3}", strength.p_lambda);
            println!("V_ivw        = {:.6e}", v_ivw);
            println!("V_divw       = {:.6e}", v_divw);
            println!("ivw abias    = {:.6}", abias);
            println!("ivw limit    = {:.6}  (screened probability limit)", limit);
            if let Some(b) = bias {
                println!("unbalanced bias = {:.6}; beta0 + bias = {:.6}", b, params.beta0 + b);
            }
            if let Some((ratio, bound)) = kp {
                println!("kappa/p      = {:.6e} vs bound n_x/p^2 = {:.6e}", ratio, bound);
            }
        }
        other => {
            return Err(CliError::Usage(format!(
                "--format must be json or text; got {other:?}"
            )))
        }
    }
    Ok(())
}
