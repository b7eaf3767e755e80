use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use incomedist::binning::build_log_bins;
use incomedist::gompertz::GompertzParams;
use incomedist::inequality::{gini, lorenz_curve};
use incomedist::ingest::InputFormat;
use incomedist::model::{sample_model, TwoClassModel};
use incomedist::pareto::ParetoParams;
use incomedist::pipeline::{lorenz_csv, load_sample, run_pipeline, write_outputs, FitSettings, PipelineConfig, PipelineError, ReportFormat};
use incomedist::rng::entropy_seed;

#[derive(Parser)]
#[command(name = "incomedist", version, about = "Gompertz + Pareto income distribution analysis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full analysis and write the report and plot data.
    Fit(FitArgs),
    /// Draw a synthetic sample from a two-class model as aggregated CSV.
    Simulate(SimulateArgs),
    /// Lorenz curve and Gini coefficient only.
    Lorenz(LorenzArgs),
    /// Print the logarithmic evaluation grid.
    Bins(BinsArgs),
}

#[derive(Args)]
struct InputArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value = "household")]
    format: InputFormat,
}

#[derive(Args)]
struct FitArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long, default_value_t = 0.01)]
    x_min: f64,
    #[arg(long, default_value_t = 1.1)]
    bin_ratio: f64,
    #[arg(long, default_value_t = 1.5, allow_negative_numbers = true)]
    a_target: f64,
    #[arg(long, default_value_t = 0.1)]
    a_tol: f64,
    /// Start of the Pareto region; defaults to the end of the Gompertz region.
    #[arg(long)]
    x_pmin: Option<f64>,
    /// Number of bootstrap resamples (0 disables).
    #[arg(long, default_value_t = 1000)]
    bootstrap: usize,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
    /// json | text
    #[arg(long, default_value = "json")]
    report: ReportFormat,
    #[arg(long)]
    label: Option<String>,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long, allow_negative_numbers = true)]
    a: f64,
    #[arg(long)]
    b: f64,
    #[arg(long)]
    alpha: f64,
    #[arg(long)]
    x_t: f64,
    /// Pareto amplitude; defaults to the value continuous with the Gompertz
    /// branch at x_t.
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long, default_value_t = 1_000_000)]
    count: usize,
    #[arg(long)]
    seed: Option<u64>,
    /// Output CSV path; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct LorenzArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Directory for lorenz.csv.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BinsArgs {
    #[arg(long, default_value_t = 0.01)]
    x_min: f64,
    #[arg(long, default_value_t = 1.1)]
    bin_ratio: f64,
    /// Last abscissa bound; taken from the input's maximum when absent.
    #[arg(long)]
    x_max: Option<f64>,
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long, default_value = "household")]
    format: InputFormat,
}

fn fit(args: FitArgs) -> Result<(), PipelineError> {
    let config = PipelineConfig {
        input: args.input.input,
        format: args.input.format,
        fit: FitSettings {
            x_min: args.x_min,
            bin_ratio: args.bin_ratio,
            a_target: args.a_target,
            a_tol: args.a_tol,
            x_pmin: args.x_pmin,
            bootstrap_resamples: args.bootstrap,
            seed: args.seed,
        },
        out_dir: Some(args.out),
        report_format: args.report,
        label: args.label,
    };
    let report = run_pipeline(&config)?;
    print!("{}", report.to_text());
    Ok(())
}

fn simulate(args: SimulateArgs) -> Result<(), PipelineError> {
    let config = |e: &dyn std::fmt::Display| PipelineError::Config(e.to_string());
    let gomp = GompertzParams::new(args.a, args.b).map_err(|e| config(&e))?;
    let model = match args.beta {
        Some(beta) => {
            let par = ParetoParams::new(args.alpha, beta).map_err(|e| config(&e))?;
            TwoClassModel::new(gomp, par, args.x_t, 0.0)
        }
        None => TwoClassModel::continuous(gomp, args.alpha, args.x_t, 0.0),
    }
    .map_err(|e| config(&e))?;
    let seed = args.seed.unwrap_or_else(entropy_seed);
    eprintln!("seed {seed}");
    let sample = sample_model(&model, args.count, seed);

    let mut csv = String::with_capacity(24 * args.count + 32);
    csv.push_str("income,multiplicity\n");
    for e in sample.entries() {
        csv.push_str(&format!("{},1\n", e.x));
    }
    match args.out {
        Some(path) => {
            let tmp = path.with_extension("partial");
            fs::write(&tmp, csv)?;
            fs::rename(tmp, path)?;
        }
        None => io::stdout().lock().write_all(csv.as_bytes())?,
    }
    Ok(())
}

fn lorenz(args: LorenzArgs) -> Result<(), PipelineError> {
    let sample = load_sample(&args.input.input, args.input.format)?;
    let curve = lorenz_curve(&sample)?;
    println!("gini {}", gini(&curve));
    if let Some(dir) = args.out {
        write_outputs(&dir, &[("lorenz.csv", lorenz_csv(&curve))])?;
    }
    Ok(())
}

fn bins(args: BinsArgs) -> Result<(), PipelineError> {
    let x_max = match (args.x_max, &args.input) {
        (Some(x), _) => x,
        (None, Some(path)) => load_sample(path, args.format)?.max_x().unwrap_or(0.0),
        (None, None) => return Err(PipelineError::Config("either --x-max or --input is required".into())),
    };
    let grid = build_log_bins(args.x_min, args.bin_ratio, x_max)?;
    let mut out = String::from("j,x\n");
    for (j, x) in grid.abscissae().iter().enumerate() {
        out.push_str(&format!("{},{}\n", j + 1, x));
    }
    io::stdout().lock().write_all(out.as_bytes())?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Fit(args) => fit(args),
        Command::Simulate(args) => simulate(args),
        Command::Lorenz(args) => lorenz(args),
        Command::Bins(args) => bins(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error [{}]: {e}", e.stage());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
