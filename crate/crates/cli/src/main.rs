mod report;

use clap::{Parser, Subcommand, ValueEnum};
use report::*;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use tailmean::mean::{
    posterior_mean_moments, split_sample, treatment_effect, TailMeanPosterior, TailMethod,
};
use tailmean::prior::fit_beta_prior;
use tailmean::seed::{derive_seed, stream_rng};
use tailmean::study::{
    background_prior, run_simulation_study, run_subsample_validation, simulate_dgp, Method,
    SimConfig, StudyResult, ValidationConfig,
};
use tailmean::tail::{imh_sample, laplace_lambda, map_fit};
use tailmean::threshold::{
    default_grid, grid_at_levels, select_threshold_with, threshold_scan, ThresholdDiagnostic,
    DEFAULT_GRID_LEVELS, DEFAULT_RATIO_TOLERANCE,
};
use tailmean::BetaGammaPrior;

#[derive(Parser)]
#[command(name = "tailmean", version, about = "Semiparametric inference for heavy-tailed means")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Worker threads (default: all cores). Output is identical either way.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Master seed for all randomized steps.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FitMethod {
    Laplace,
    Imh,
}

#[derive(clap::Args, Clone)]
struct PriorArgs {
    /// Beta prior on the tail index as "a,b" (default 1,1).
    #[arg(long, value_name = "A,B")]
    prior_xi: Option<String>,
    /// Gamma prior on the scale as "c,d" (default 0,0 — reference).
    #[arg(long, value_name = "C,D")]
    prior_sigma: Option<String>,
    /// Fit the Beta prior from a file of tail-index estimates.
    #[arg(long, value_name = "FILE", conflicts_with = "prior_xi")]
    prior_from_estimates: Option<PathBuf>,
}

#[derive(clap::Args, Clone)]
struct FitArgs {
    /// Fixed threshold; omit to select by the ratio rule.
    #[arg(long)]
    threshold: Option<f64>,
    /// Tail method.
    #[arg(long, value_enum, default_value_t = FitMethod::Laplace)]
    method: FitMethod,
    /// iMH draws.
    #[arg(long, default_value_t = 1000)]
    draws: usize,
    #[command(flatten)]
    prior: PriorArgs,
}

#[derive(Subcommand)]
enum Command {
    /// Fit the semiparametric mean posterior to one sample.
    Fit {
        input: PathBuf,
        #[command(flatten)]
        args: FitArgs,
    },
    /// Compare two independent samples (treatment minus control).
    Ab {
        input_a: PathBuf,
        input_b: PathBuf,
        #[command(flatten)]
        args: FitArgs,
    },
    /// Threshold diagnostics over a candidate grid.
    Scan {
        input: PathBuf,
        /// Explicit thresholds as "u1,u2,...".
        #[arg(long, value_name = "U1,U2,...")]
        grid: Option<String>,
        /// Quantile levels for the grid (default 0.90..0.999).
        #[arg(long, value_name = "L1,L2,...", conflicts_with = "grid")]
        levels: Option<String>,
        /// "Near one" tolerance for the selection rule.
        #[arg(long, default_value_t = DEFAULT_RATIO_TOLERANCE)]
        tolerance: f64,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        #[command(flatten)]
        prior: PriorArgs,
    },
    /// Simulation study on exponential-plus-GPD mixtures.
    Simulate {
        /// Tail indices, comma separated.
        #[arg(long, default_value = "0.2,0.5,0.8")]
        xi: String,
        #[arg(long, default_value_t = 100_000)]
        n_total: usize,
        #[arg(long, default_value_t = 10.0)]
        exp_mean: f64,
        #[arg(long, default_value_t = 10.0)]
        gpd_sigma: f64,
        #[arg(long, default_value_t = 0.5)]
        tail_fraction: f64,
        #[arg(long, default_value_t = 20)]
        replicates: usize,
        /// Threshold grid quantile levels.
        #[arg(long, value_name = "L1,L2,...")]
        levels: Option<String>,
        /// Methods, comma separated.
        #[arg(long, default_value = "semiparametric-laplace,naive,winsorized")]
        methods: String,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        /// Also write per-(method, xi) plot-data CSVs with this path prefix.
        #[arg(long)]
        plot_prefix: Option<PathBuf>,
        #[command(flatten)]
        prior: PriorArgs,
    },
    /// Subsample-validation study against a big sample's full mean.
    Validate {
        /// Big-sample file; omit to simulate one with --synthetic-xi.
        input: Option<PathBuf>,
        #[arg(long, required_unless_present = "input", conflicts_with = "input")]
        synthetic_xi: Option<f64>,
        /// Size of the synthetic big sample.
        #[arg(long, default_value_t = 1_000_000)]
        n_big: usize,
        #[arg(long, default_value_t = 50_000)]
        subsample_size: usize,
        #[arg(long, default_value_t = 100)]
        replicates: usize,
        /// Fixed threshold; omit to select by rule on the big sample.
        #[arg(long)]
        threshold: Option<f64>,
        #[arg(long, default_value = "semiparametric-laplace,naive,winsorized")]
        methods: String,
        /// Fit a Beta prior of this concentration from the big sample's tail.
        #[arg(long, conflicts_with_all = ["prior_xi", "prior_from_estimates"])]
        background_concentration: Option<f64>,
        #[arg(long, default_value_t = 1000)]
        draws: usize,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        #[command(flatten)]
        prior: PriorArgs,
    },
}

enum CliError {
    Input(String),
    Inference(tailmean::Error),
    Config(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Inference(_) => 3,
            CliError::Config(_) => 4,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::Input(_) => "input",
            CliError::Inference(_) => "inference",
            CliError::Config(_) => "config",
        }
    }

    fn message(&self) -> String {
        match self {
            CliError::Input(m) | CliError::Config(m) => m.clone(),
            CliError::Inference(e) => e.to_string(),
        }
    }
}

impl From<tailmean::Error> for CliError {
    fn from(e: tailmean::Error) -> Self {
        use tailmean::Error::*;
        match e {
            InvalidConfig(_) | InvalidParameter(_) | EmptyGrid => CliError::Config(e.to_string()),
            _ => CliError::Inference(e),
        }
    }
}

type CliResult<T> = Result<T, CliError>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        // ignore failure: the pool can only be configured once per process
        let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    }
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let err = serde_json::json!({
                "error": { "code": e.code(), "kind": e.kind(), "message": e.message() }
            });
            eprintln!("{err}");
            ExitCode::from(e.code())
        }
    }
}

fn run(cli: &Cli) -> CliResult<()> {
    match &cli.command {
        Command::Fit { input, args } => {
            let report = fit_one(input, args, cli.seed, 0)?;
            emit(&to_json(&report)?, cli.out.as_deref())
        }
        Command::Ab { input_a, input_b, args } => {
            let a = fit_one(input_a, args, cli.seed, 1)?;
            let b = fit_one(input_b, args, cli.seed, 2)?;
            let effect = treatment_effect(
                &to_mean_posterior(&a),
                &to_mean_posterior(&b),
            );
            let report = AbReport {
                a,
                b,
                effect: EffectReport { gamma: effect.gamma, sd: effect.sd },
            };
            emit(&to_json(&report)?, cli.out.as_deref())
        }
        Command::Scan { input, grid, levels, tolerance, format, prior } => {
            let values = parse_input(input)?;
            let prior = build_prior(prior)?;
            let grid = match (grid, levels) {
                (Some(g), _) => parse_floats(g)?,
                (None, Some(l)) => grid_at_levels(&values, &parse_floats(l)?),
                (None, None) => default_grid(&values),
            };
            if grid.is_empty() {
                return Err(CliError::Config("empty threshold grid".into()));
            }
            let diags = threshold_scan(&values, &grid, &prior)?;
            let choice = select_threshold_with(&diags, *tolerance)?;
            let rows: Vec<DiagnosticRow> = diags
                .iter()
                .enumerate()
                .map(|(i, d)| diagnostic_row(d, i == choice.index))
                .collect();
            let report = ScanReport {
                input: digest(input, &values),
                prior: prior_report(&prior),
                rows,
                selected_u: choice.u,
                low_confidence: choice.low_confidence,
            };
            let text = match format {
                Format::Json => to_json(&report)?,
                Format::Csv => report.to_csv(),
            };
            emit(&text, cli.out.as_deref())
        }
        Command::Simulate {
            xi,
            n_total,
            exp_mean,
            gpd_sigma,
            tail_fraction,
            replicates,
            levels,
            methods,
            format,
            plot_prefix,
            prior,
        } => {
            let prior = build_prior(prior)?;
            let configs: Vec<SimConfig> = parse_floats(xi)?
                .into_iter()
                .map(|xi| SimConfig {
                    xi,
                    n_total: *n_total,
                    exp_mean: *exp_mean,
                    gpd_sigma: *gpd_sigma,
                    tail_fraction: *tail_fraction,
                    seed: 0,
                })
                .collect();
            let levels = match levels {
                Some(l) => parse_floats(l)?,
                None => DEFAULT_GRID_LEVELS.to_vec(),
            };
            let methods = parse_methods(methods)?;
            let result =
                run_simulation_study(&configs, &levels, *replicates, &methods, &prior, cli.seed)?;
            if let Some(prefix) = plot_prefix {
                write_plot_data(prefix, &result)?;
            }
            emit_study(&result, *format, cli.out.as_deref())
        }
        Command::Validate {
            input,
            synthetic_xi,
            n_big,
            subsample_size,
            replicates,
            threshold,
            methods,
            background_concentration,
            draws,
            format,
            prior,
        } => {
            let big = match (input, synthetic_xi) {
                (Some(path), _) => parse_input(path)?,
                (None, Some(xi)) => {
                    let config = SimConfig { xi: *xi, n_total: *n_big, ..SimConfig::default() };
                    config.validate()?;
                    let mut rng = stream_rng(cli.seed, 0xb1, 0);
                    simulate_dgp(&config, &mut rng)
                }
                (None, None) => unreachable!("clap enforces input or --synthetic-xi"),
            };
            let prior = match background_concentration {
                Some(conc) => background_prior(&big, *threshold, *conc)?,
                None => build_prior(prior)?,
            };
            let methods = parse_methods(methods)?;
            let vc = ValidationConfig {
                subsample_size: *subsample_size,
                replicates: *replicates,
                threshold: *threshold,
                seed: cli.seed,
                imh_draws: *draws,
            };
            let result = run_subsample_validation(&big, &methods, &prior, &vc)?;
            emit_study(&result, *format, cli.out.as_deref())
        }
    }
}

fn fit_one(path: &Path, args: &FitArgs, seed: u64, group: u64) -> CliResult<AnalysisReport> {
    let values = parse_input(path)?;
    let prior = build_prior(&args.prior)?;

    let (u, mode, low_confidence, diagnostics) = match args.threshold {
        Some(u) => {
            if !(u > 0.0) {
                return Err(CliError::Config(format!("threshold must be positive, got {u}")));
            }
            (u, "given", false, Vec::new())
        }
        None => {
            let grid = default_grid(&values);
            if grid.is_empty() {
                return Err(CliError::Inference(tailmean::Error::NoValidDiagnostics));
            }
            let diags = threshold_scan(&values, &grid, &prior)?;
            let choice = select_threshold_with(&diags, DEFAULT_RATIO_TOLERANCE)?;
            let rows = diags
                .iter()
                .enumerate()
                .map(|(i, d)| diagnostic_row(d, i == choice.index))
                .collect();
            (choice.u, "auto", choice.low_confidence, rows)
        }
    };

    let split = split_sample(&values, u);
    let map = map_fit(&prior, split.exceedances())?;
    let (tail, acceptance) = match args.method {
        FitMethod::Laplace => {
            let lap = laplace_lambda(&prior, split.exceedances(), &map.params)?;
            (
                TailMeanPosterior {
                    mean: lap.lambda_hat,
                    variance: lap.variance,
                    method: TailMethod::Laplace,
                },
                None,
            )
        }
        FitMethod::Imh => {
            let chain =
                imh_sample(&prior, split.exceedances(), args.draws, derive_seed(seed, 0x11, group))?;
            (
                TailMeanPosterior {
                    mean: chain.lambda_mean,
                    variance: chain.lambda_variance,
                    method: TailMethod::Imh,
                },
                Some(chain.acceptance_rate),
            )
        }
    };
    let posterior = posterior_mean_moments(&split, Some(&tail))?;
    let naive = tailmean::baselines::naive_mean(&values)?;
    let winsorized = tailmean::baselines::winsorized_mean(&values, u)?;

    Ok(AnalysisReport {
        input: digest(path, &values),
        seed,
        threshold: ThresholdReport { value: u, mode: mode.to_string(), low_confidence },
        prior: prior_report(&prior),
        tail: TailReport {
            n: split.n(),
            xi: map.params.xi(),
            sigma: map.params.sigma(),
            boundary: map.boundary,
            method: match args.method {
                FitMethod::Laplace => "laplace".to_string(),
                FitMethod::Imh => "imh".to_string(),
            },
            lambda_mean: tail.mean,
            lambda_variance: tail.variance,
            acceptance_rate: acceptance,
        },
        mean_posterior: MeanReport {
            mean: posterior.mean,
            sd: posterior.sd(),
            variance: posterior.variance,
        },
        naive: BaselineReport { estimate: naive.estimate, se: naive.se },
        winsorized: BaselineReport { estimate: winsorized.estimate, se: winsorized.se },
        diagnostics,
    })
}

fn to_mean_posterior(report: &AnalysisReport) -> tailmean::MeanPosterior {
    tailmean::MeanPosterior {
        mean: report.mean_posterior.mean,
        variance: report.mean_posterior.variance,
        lambda_mean: report.tail.lambda_mean,
        lambda_variance: report.tail.lambda_variance,
        method: match report.tail.method.as_str() {
            "imh" => TailMethod::Imh,
            _ => TailMethod::Laplace,
        },
    }
}

fn diagnostic_row(d: &ThresholdDiagnostic, selected: bool) -> DiagnosticRow {
    DiagnosticRow {
        u: d.u,
        n: d.n,
        xi: d.fit.map(|f| f.xi),
        sigma: d.fit.map(|f| f.sigma),
        ratio: d.fit.map(|f| f.ratio),
        q_n: d.fit.map(|f| f.q_n),
        boundary: d.fit.map(|f| f.boundary),
        selected,
    }
}

fn digest(path: &Path, values: &[f64]) -> InputDigest {
    let count = values.len();
    let (mut min, mut max, mut sum) = (f64::INFINITY, f64::NEG_INFINITY, 0.0);
    for &v in values {
        min = min.min(v);
        max = max.max(v);
        sum += v;
    }
    InputDigest { path: path.display().to_string(), count, min, max, mean: sum / count as f64 }
}

fn prior_report(prior: &BetaGammaPrior) -> PriorReport {
    PriorReport { a: prior.a(), b: prior.b(), c: prior.c(), d: prior.d() }
}

/// One value per line; a single leading header line is tolerated.
fn parse_input(path: &Path) -> CliResult<Vec<f64>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
    let mut values = Vec::new();
    let mut first_data_line = true;
    for (lineno, line) in text.lines().enumerate() {
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        match trimmed.parse::<f64>() {
            Ok(v) if v.is_finite() => {
                values.push(v);
                first_data_line = false;
            }
            Ok(v) => {
                return Err(CliError::Input(format!(
                    "{}:{}: non-finite value {v}",
                    path.display(),
                    lineno + 1
                )))
            }
            Err(_) if first_data_line => first_data_line = false, // header
            Err(_) => {
                return Err(CliError::Input(format!(
                    "{}:{}: cannot parse '{trimmed}' as a number",
                    path.display(),
                    lineno + 1
                )))
            }
        }
    }
    if values.len() < 4 {
        return Err(CliError::Input(format!(
            "{}: need at least 4 numeric values, found {}",
            path.display(),
            values.len()
        )));
    }
    Ok(values)
}

fn parse_floats(text: &str) -> CliResult<Vec<f64>> {
    text.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| CliError::Config(format!("cannot parse '{t}' as a number")))
        })
        .collect()
}

fn parse_pair(text: &str, what: &str) -> CliResult<(f64, f64)> {
    let parts = parse_floats(text)?;
    if parts.len() != 2 {
        return Err(CliError::Config(format!("{what} expects two comma-separated values")));
    }
    Ok((parts[0], parts[1]))
}

fn parse_methods(text: &str) -> CliResult<Vec<Method>> {
    text.split(',').map(|t| t.trim().parse::<Method>().map_err(CliError::from)).collect()
}

fn build_prior(args: &PriorArgs) -> CliResult<BetaGammaPrior> {
    let (a, b) = match (&args.prior_xi, &args.prior_from_estimates) {
        (Some(ab), _) => parse_pair(ab, "--prior-xi")?,
        (None, Some(path)) => {
            let estimates = parse_input(path)?;
            let fitted = fit_beta_prior(&estimates)?;
            (fitted.a(), fitted.b())
        }
        (None, None) => (1.0, 1.0),
    };
    let (c, d) = match &args.prior_sigma {
        Some(cd) => parse_pair(cd, "--prior-sigma")?,
        None => (0.0, 0.0),
    };
    BetaGammaPrior::new(a, b, c, d).map_err(CliError::from)
}

fn to_json<T: serde::Serialize>(value: &T) -> CliResult<String> {
    serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Config(format!("serialization failed: {e}")))
}

fn emit(text: &str, out: Option<&Path>) -> CliResult<()> {
    let mut text = text.to_string();
    if !text.ends_with('\n') {
        text.push('\n');
    }
    match out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| CliError::Input(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn emit_study(result: &StudyResult, format: Format, out: Option<&Path>) -> CliResult<()> {
    let text = match format {
        Format::Json => to_json(result)?,
        Format::Csv => result.to_csv(),
    };
    emit(&text, out)
}

/// One CSV per (method, xi) pair: x = threshold, y = metrics.
fn write_plot_data(prefix: &Path, result: &StudyResult) -> CliResult<()> {
    use std::collections::BTreeSet;
    let keys: BTreeSet<(String, String)> = result
        .rows
        .iter()
        .map(|r| (r.method.clone(), r.xi.map(|x| x.to_string()).unwrap_or_default()))
        .collect();
    for (method, xi) in keys {
        let mut body = String::from("level,threshold,rmse,mean_sd,calibration,ratio\n");
        for r in &result.rows {
            if r.method != method || r.xi.map(|x| x.to_string()).unwrap_or_default() != xi {
                continue;
            }
            let opt = |v: &Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
            body.push_str(&format!(
                "{},{},{},{},{},{}\n",
                opt(&r.level),
                opt(&r.threshold),
                r.rmse,
                r.mean_sd,
                opt(&r.calibration),
                opt(&r.ratio)
            ));
        }
        let name = format!(
            "{}-{}{}.csv",
            prefix.display(),
            method,
            if xi.is_empty() { String::new() } else { format!("-xi{xi}") }
        );
        std::fs::write(&name, body)
            .map_err(|e| CliError::Input(format!("cannot write {name}: {e}")))?;
    }
    Ok(())
}
