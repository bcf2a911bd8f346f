//! Command-line interface: fit additive models from CSV data, run the
//! simulation studies, and verify the analytic penalty-posterior
//! derivatives against finite differences.
//!
//! Exit codes label the failing stage: 2 = configuration or data parsing,
//! 3 = design assembly, 4 = model fitting, 5 = posterior exploration,
//! 6 = output I/O. The worker thread count follows `RAYON_NUM_THREADS`.

mod config;
mod data;
mod report;
mod simulate;

use clap::{Args, Parser, Subcommand};
pub(crate) use config::parse_method;
use config::ModelConfig;
use lps_core::{
    assemble_design, fit_lps, fit_lpsmap, FitOptions, LpsError, PenaltyHyperPrior,
};
use nalgebra::{DMatrix, DVector};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

#[derive(Parser)]
#[command(name = "lps", version, about = "Laplace-P-spline additive model fitting")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit an additive model to a CSV dataset.
    Fit(FitArgs),
    /// Run a replicated simulation study and write its metrics.
    Simulate(simulate::SimulateArgs),
    /// Verify the analytic gradient and Hessian of the log-penalty
    /// posterior against finite differences on a synthetic Poisson model.
    CheckDerivatives(CheckArgs),
}

#[derive(Args)]
struct FitArgs {
    /// Model configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Input dataset (CSV with a header row).
    #[arg(long)]
    data: PathBuf,
    /// Output directory (created if missing).
    #[arg(long)]
    out: PathBuf,
    /// Override the config variant: "lps" or "lpsmap".
    #[arg(long)]
    variant: Option<String>,
    /// Override the exploration seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the exploration method: "grid" or "imh".
    #[arg(long)]
    method: Option<String>,
}

#[derive(Args)]
struct CheckArgs {
    /// Number of smooth terms (1 to 6).
    #[arg(long, default_value_t = 3)]
    q: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Random log-penalty evaluation points.
    #[arg(long, default_value_t = 50)]
    points: usize,
    /// Sample size of the synthetic dataset.
    #[arg(long, default_value_t = 250)]
    n: usize,
}

/// Stage-labeled failure carrying its exit code.
pub(crate) struct Failure {
    pub(crate) code: u8,
    pub(crate) message: String,
}

impl Failure {
    pub(crate) fn new(code: u8, message: impl Into<String>) -> Self {
        Failure {
            code,
            message: message.into(),
        }
    }
}

pub(crate) const EXIT_PARSE: u8 = 2;
const EXIT_DESIGN: u8 = 3;
pub(crate) const EXIT_FIT: u8 = 4;
const EXIT_EXPLORE: u8 = 5;
pub(crate) const EXIT_IO: u8 = 6;

fn fit_error(e: LpsError) -> Failure {
    let code = match e.stage() {
        Some("exploration") => EXIT_EXPLORE,
        _ => EXIT_FIT,
    };
    Failure::new(code, e.to_string())
}

fn io_error(e: std::io::Error, what: &str) -> Failure {
    Failure::new(EXIT_IO, format!("cannot write {what}: {e}"))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Fit(args) => run_fit(args),
        Command::Simulate(args) => simulate::run(args),
        Command::CheckDerivatives(args) => run_check(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn run_fit(args: FitArgs) -> Result<(), Failure> {
    let config_text = std::fs::read_to_string(&args.config)
        .map_err(|e| Failure::new(EXIT_PARSE, format!("cannot read the config file: {e}")))?;
    let config =
        ModelConfig::from_json(&config_text).map_err(|e| Failure::new(EXIT_PARSE, e.to_string()))?;
    let dataset = data::load_csv(&args.data).map_err(|e| Failure::new(EXIT_PARSE, e.to_string()))?;
    config
        .validate(&dataset)
        .map_err(|e| Failure::new(EXIT_PARSE, e.to_string()))?;

    let variant = args
        .variant
        .or_else(|| config.variant.clone())
        .unwrap_or_else(|| "lps".into());
    if variant != "lps" && variant != "lpsmap" {
        return Err(Failure::new(
            EXIT_PARSE,
            format!("--variant must be \"lps\" or \"lpsmap\", got \"{variant}\""),
        ));
    }

    let y_values = dataset.column(&config.response).expect("validated");
    let y = DVector::from_column_slice(y_values);
    let family = config
        .response_family(y_values)
        .map_err(|e| Failure::new(EXIT_PARSE, e.to_string()))?;

    let n = dataset.rows;
    let z = DMatrix::from_fn(n, config.linear.len(), |i, j| {
        dataset.column(&config.linear[j]).expect("validated")[i]
    });
    let x = DMatrix::from_fn(n, config.smooth.len(), |i, j| {
        dataset.column(&config.smooth[j].name).expect("validated")[i]
    });
    let design = assemble_design(&z, &x, &config.smooth_specs())
        .map_err(|e| Failure::new(EXIT_DESIGN, e.to_string()))?;
    for w in &design.warnings {
        eprintln!("warning: {w}");
    }

    let seed = args.seed.or(config.explorer.seed).unwrap_or(1);
    let mut opts = FitOptions {
        hyper: PenaltyHyperPrior {
            nu: config.hyperprior.nu,
            a_delta: config.hyperprior.a_delta,
            b_delta: config.hyperprior.b_delta,
        },
        zeta: config.hyperprior.zeta,
        ..FitOptions::default()
    };
    opts.explorer.seed = seed;
    opts.explorer.alpha = config.explorer.alpha;
    opts.explorer.chain_length = config.explorer.chain_length;
    opts.explorer.proposal_dof = config.explorer.proposal_dof;
    opts.explorer.grid_points = config.explorer.grid_points;
    let method_name = args.method.or_else(|| config.explorer.method.clone());
    if let Some(name) = &method_name {
        let method = parse_method(name).map_err(|e| Failure::new(EXIT_PARSE, e.to_string()))?;
        opts.explorer.method = Some(method);
    }

    let start = Instant::now();
    let fit = if variant == "lps" {
        fit_lps(&design, &family, &y, &opts)
    } else {
        fit_lpsmap(&design, &family, &y, &opts)
    }
    .map_err(fit_error)?;
    let elapsed = start.elapsed().as_secs_f64();

    let smooth_names: Vec<String> = config.smooth.iter().map(|s| s.name.clone()).collect();
    let fit_report = report::build_report(
        &design,
        &family,
        &fit,
        &config.linear,
        &smooth_names,
        &config.credible_levels,
        seed,
    )
    .map_err(fit_error)?;

    std::fs::create_dir_all(&args.out).map_err(|e| io_error(e, "the output directory"))?;
    let report_json = serde_json::to_string_pretty(&fit_report)
        .map_err(|e| Failure::new(EXIT_IO, format!("cannot serialize the report: {e}")))?;
    std::fs::write(args.out.join("fit_report.json"), report_json)
        .map_err(|e| io_error(e, "fit_report.json"))?;
    std::fs::write(
        args.out.join("coefficients.csv"),
        report::coefficients_csv(&fit_report),
    )
    .map_err(|e| io_error(e, "coefficients.csv"))?;
    for smooth in &fit_report.smooths {
        let file = format!("smooth_{}.csv", smooth.name);
        std::fs::write(args.out.join(&file), report::smooth_csv(smooth))
            .map_err(|e| io_error(e, &file))?;
    }
    let diag_json = serde_json::to_string_pretty(&fit_report.diagnostics)
        .map_err(|e| Failure::new(EXIT_IO, format!("cannot serialize diagnostics: {e}")))?;
    std::fs::write(args.out.join("diagnostics.json"), diag_json)
        .map_err(|e| io_error(e, "diagnostics.json"))?;

    println!(
        "fitted {} ({}) in {:.3}s: n={}, dim(latent)={}, method={}, ensemble={}",
        fit_report.model.family,
        fit_report.model.variant,
        elapsed,
        design.n,
        design.dim_xi(),
        fit_report.diagnostics.method,
        fit_report.diagnostics.ensemble_size,
    );
    println!(
        "log-penalty mode: {:?} ({} outer iterations)",
        fit_report.diagnostics.v_hat, fit_report.diagnostics.mode_iterations
    );
    println!("outputs written to {}", args.out.display());
    Ok(())
}

fn run_check(args: CheckArgs) -> Result<(), Failure> {
    println!(
        "checking analytic derivatives on a Poisson model: q={}, n={}, {} points, seed {}",
        args.q, args.n, args.points, args.seed
    );
    let check = lps_sim::derivative_check(args.q, args.n, args.points, args.seed)
        .map_err(|e| Failure::new(EXIT_FIT, e.to_string()))?;
    for (i, (g, h)) in check.per_point.iter().enumerate() {
        println!(
            "point {:>3}: gradient rel err {g:.3e}, hessian rel err {h:.3e}",
            i + 1
        );
    }
    println!(
        "worst gradient rel err {:.3e} (tolerance 1e-5), worst hessian rel err {:.3e} \
         (tolerance 1e-4)",
        check.grad_max_rel, check.hess_max_rel
    );
    if check.grad_max_rel < 1e-5 && check.hess_max_rel < 1e-4 {
        println!("PASS");
        Ok(())
    } else {
        Err(Failure::new(EXIT_FIT, "derivative check failed"))
    }
}
