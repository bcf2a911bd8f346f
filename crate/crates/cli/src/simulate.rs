//! The `simulate` subcommand: run a replicated scenario and write
//! `metrics.csv` (tidy long format covering both variants). Wall-clock
//! timing is written to `timing.csv` only when `--timing` is passed, since
//! timing values are inherently non-deterministic while default outputs
//! are byte-reproducible for a fixed seed.

use crate::{parse_method, Failure, EXIT_FIT, EXIT_IO, EXIT_PARSE};
use clap::Args;
use lps_sim::{
    run_study, MetricsTable, Scenario, ScenarioKind, StudyOptions, COVERAGE_POINTS,
};
use std::fmt::Write as _;
use std::path::PathBuf;

#[derive(Args)]
pub struct SimulateArgs {
    /// Scenario name: poisson, normal, binomial, bernoulli, q6-normal, or
    /// q6-binomial.
    #[arg(long)]
    scenario: String,
    /// Sample size per replicate.
    #[arg(long, default_value_t = 300)]
    n: usize,
    /// Number of replicates.
    #[arg(long, default_value_t = 100)]
    reps: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Output directory (created if missing).
    #[arg(long)]
    out: PathBuf,
    /// Force the exploration method: "grid" or "imh".
    #[arg(long)]
    method: Option<String>,
    /// Markov chain length for independence sampling.
    #[arg(long, default_value_t = 500)]
    chain_length: usize,
    /// Full Newton refits at every quadrature point.
    #[arg(long, default_value_t = false)]
    full_refits: bool,
    /// Also write timing.csv (wall-clock values; not byte-reproducible).
    #[arg(long, default_value_t = false)]
    timing: bool,
    /// Run replicates serially instead of in parallel.
    #[arg(long, default_value_t = false)]
    serial: bool,
}

fn metrics_rows(out: &mut String, variant: &str, table: &MetricsTable) {
    for (k, b) in table.beta.iter().enumerate() {
        let name = format!("beta{}", k + 1);
        let _ = writeln!(out, "{variant},beta,{name},truth,,{}", b.truth);
        let _ = writeln!(out, "{variant},beta,{name},bias,,{}", b.bias);
        let _ = writeln!(out, "{variant},beta,{name},cp,90,{}", b.cp90);
        let _ = writeln!(out, "{variant},beta,{name},cp,95,{}", b.cp95);
        let _ = writeln!(out, "{variant},beta,{name},ese,,{}", b.ese);
        let _ = writeln!(out, "{variant},beta,{name},rmse,,{}", b.rmse);
    }
    for (j, s) in table.smooths.iter().enumerate() {
        let name = format!("f{}", j + 1);
        for (x, cp) in COVERAGE_POINTS.iter().zip(&s.pointwise_cp90) {
            let _ = writeln!(out, "{variant},smooth,{name},cp_at_{x},90,{cp}");
        }
        for (level, cp) in [(90, s.avg_cp[0]), (95, s.avg_cp[1]), (99, s.avg_cp[2])] {
            let _ = writeln!(out, "{variant},smooth,{name},cp_avg,{level},{cp}");
        }
    }
}

pub fn run(args: SimulateArgs) -> Result<(), Failure> {
    let kind = ScenarioKind::parse(&args.scenario).ok_or_else(|| {
        Failure::new(
            EXIT_PARSE,
            format!(
                "unknown scenario \"{}\" (expected poisson, normal, binomial, bernoulli, \
                 q6-normal, or q6-binomial)",
                args.scenario
            ),
        )
    })?;
    let scenario = Scenario::new(kind, args.n, args.reps, args.seed);
    let mut opts = StudyOptions {
        chain_length: args.chain_length,
        full_refits: args.full_refits,
        parallel: !args.serial,
        ..StudyOptions::default()
    };
    if let Some(name) = &args.method {
        let method = parse_method(name).map_err(|e| Failure::new(EXIT_PARSE, e.to_string()))?;
        opts.method = Some(method);
    }

    let start = std::time::Instant::now();
    let result = run_study(&scenario, &opts).map_err(|e| Failure::new(EXIT_FIT, e.to_string()))?;
    let elapsed = start.elapsed().as_secs_f64();

    let mut metrics = String::from("variant,target,name,statistic,level,value\n");
    metrics_rows(&mut metrics, "lps", &result.lps);
    metrics_rows(&mut metrics, "lpsmap", &result.lpsmap);
    let _ = writeln!(metrics, "lps,run,,failures,,{}", result.failures);
    if let Some(rate) = result.mean_acceptance {
        let _ = writeln!(metrics, "lps,run,,mean_acceptance,,{rate}");
    }

    std::fs::create_dir_all(&args.out)
        .map_err(|e| Failure::new(EXIT_IO, format!("cannot create the output directory: {e}")))?;
    std::fs::write(args.out.join("metrics.csv"), metrics)
        .map_err(|e| Failure::new(EXIT_IO, format!("cannot write metrics.csv: {e}")))?;
    if args.timing {
        let mut timing = String::from("scenario,n,q,reps,mean_fit_seconds\n");
        let _ = writeln!(
            timing,
            "{},{},{},{},{}",
            kind.name(),
            args.n,
            scenario.q(),
            args.reps,
            result.mean_fit_seconds
        );
        std::fs::write(args.out.join("timing.csv"), timing)
            .map_err(|e| Failure::new(EXIT_IO, format!("cannot write timing.csv: {e}")))?;
    }

    println!(
        "scenario {} (n={}, reps={}, seed={}): {} failures, mean fit {:.3}s, total {:.1}s",
        kind.name(),
        args.n,
        args.reps,
        args.seed,
        result.failures,
        result.mean_fit_seconds,
        elapsed
    );
    if let Some(rate) = result.mean_acceptance {
        println!("mean sampler acceptance rate {rate:.3}");
    }
    println!("metrics written to {}", args.out.join("metrics.csv").display());
    Ok(())
}
