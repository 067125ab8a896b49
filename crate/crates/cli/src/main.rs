//! Thin sequential shell around the `polygrowth` library: configuration
//! sampling, single simulation runs with exports, harness ensembles, and
//! closed-form reference tables.
//!
//! Exit codes: 0 on success, 1 when an experiment verdict fails, 2 on usage
//! errors (including invalid parameter regimes).

use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;
use serde_json::json;

use polygrowth::harness::{run_ensemble, ExperimentId, ExperimentSpec};
use polygrowth::hydro::ModelParams;
use polygrowth::point::sample_config;
use polygrowth::{export, hammersley, lpp, png};

/// Environment variable holding the default output directory.
const OUT_ENV: &str = "POLYGROWTH_OUT";

#[derive(Parser)]
#[command(
    name = "polygrowth",
    version,
    about = "Simulation laboratory for Poisson last-passage percolation, the \
             Hammersley process, and two-type polynuclear growth"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a seeded Poisson point configuration and emit it.
    Sample(ModelArgs),
    /// Run one simulation and export its state.
    Simulate {
        #[command(subcommand)]
        model: Model,
    },
    /// Run a named ensemble experiment through the harness.
    Experiment(ExperimentArgs),
    /// Print closed-form reference tables.
    Tabulate {
        #[command(subcommand)]
        table: Table,
    },
}

#[derive(Subcommand)]
enum Model {
    /// Last-passage percolation: level decomposition of a sampled config.
    Lpp(ModelArgs),
    /// Hammersley interacting particle process with sources and sinks.
    Hammersley(ModelArgs),
    /// Polynuclear growth in the rotated picture, two-type dynamics.
    Png(ModelArgs),
}

#[derive(Subcommand)]
enum Table {
    /// Limit CDF of the rescaled second-class particle.
    Cdf(ModelArgs),
    /// Ellipsoidal droplet shape f(c).
    Shape(ModelArgs),
    /// Entropic Burgers profile at unit time.
    Burgers(ModelArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
    Svg,
}

#[derive(Args)]
struct ModelArgs {
    /// Source intensity on the x-axis.
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    /// Sink intensity on the t-axis.
    #[arg(long, default_value_t = 1.0)]
    rho: f64,
    /// Window side / simulation horizon.
    #[arg(long, default_value_t = 50.0)]
    horizon: f64,
    /// Base RNG seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory (defaults to $POLYGROWTH_OUT, else stdout).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Args)]
struct ExperimentArgs {
    /// Experiment id, e.g. cdf_scp or shape_check.
    id: String,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long)]
    horizon: Option<f64>,
    #[arg(long)]
    replicas: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory for records (defaults to $POLYGROWTH_OUT).
    #[arg(long)]
    out: Option<PathBuf>,
    /// JSON config file mirroring the experiment spec; flags win over it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output format for the summary document.
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

/// Partial spec as read from a --config file; every field optional so the
/// file may pin only what it cares about.
#[derive(Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpecFile {
    experiment: Option<ExperimentId>,
    lambda: Option<f64>,
    rho: Option<f64>,
    horizon: Option<f64>,
    replicas: Option<usize>,
    seed: Option<u64>,
    out_dir: Option<PathBuf>,
}

struct Usage(String);

impl<E: std::fmt::Display> From<E> for Usage {
    fn from(e: E) -> Self {
        Usage(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, Usage> {
    match cli.command {
        Command::Sample(args) => sample(&args),
        Command::Simulate { model } => simulate(&model),
        Command::Experiment(args) => experiment(&args),
        Command::Tabulate { table } => tabulate(&table),
    }
}

fn default_out(explicit: &Option<PathBuf>) -> Option<PathBuf> {
    explicit
        .clone()
        .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
}

/// Prints a line to stdout, treating a closed pipe as a normal end of
/// output rather than an error.
fn print_out(content: &str) -> Result<(), Usage> {
    use std::io::Write;
    let newline = if content.ends_with('\n') { "" } else { "\n" };
    match write!(std::io::stdout().lock(), "{content}{newline}") {
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        r => Ok(r?),
    }
}

/// Writes to `<dir>/<name>` when an output directory is resolved, printing
/// the path; otherwise prints the content itself.
fn emit(args: &ModelArgs, name: &str, content: &str) -> Result<(), Usage> {
    match default_out(&args.out) {
        Some(dir) => {
            std::fs::create_dir_all(&dir)?;
            let path = dir.join(name);
            std::fs::write(&path, content)?;
            print_out(&path.display().to_string())?;
        }
        None => print_out(content)?,
    }
    Ok(())
}

fn ext(format: Format) -> &'static str {
    match format {
        Format::Csv => "csv",
        Format::Json => "json",
        Format::Svg => "svg",
    }
}

fn sample(args: &ModelArgs) -> Result<ExitCode, Usage> {
    let cfg = sample_config(args.lambda, args.rho, (args.horizon, args.horizon), args.seed)?;
    let content = match args.format {
        Format::Json => cfg.to_json()?,
        Format::Csv => export::points_csv(&cfg),
        Format::Svg => export::decomposition_svg(&cfg, &lpp::level_decomposition(&cfg))?,
    };
    emit(args, &format!("config_{}.{}", args.seed, ext(args.format)), &content)?;
    Ok(ExitCode::SUCCESS)
}

fn simulate(model: &Model) -> Result<ExitCode, Usage> {
    let (args, name, content) = match model {
        Model::Lpp(args) => {
            let cfg =
                sample_config(args.lambda, args.rho, (args.horizon, args.horizon), args.seed)?;
            let decomp = lpp::level_decomposition(&cfg);
            let content = match args.format {
                Format::Svg => export::decomposition_svg(&cfg, &decomp)?,
                Format::Csv => {
                    let mut out = String::from("x,t,level\n");
                    for (p, &k) in decomp.points.iter().zip(&decomp.level_of) {
                        out.push_str(&format!("{},{},{k}\n", p.loc.x, p.loc.t));
                    }
                    out
                }
                Format::Json => serde_json::to_string_pretty(&json!({
                    "window": cfg.window,
                    "max_complete_level": decomp.max_complete_level(),
                    "points": decomp
                        .points
                        .iter()
                        .zip(&decomp.level_of)
                        .map(|(p, &k)| json!({"x": p.loc.x, "t": p.loc.t, "level": k}))
                        .collect::<Vec<_>>(),
                }))?,
            };
            (args, "lpp", content)
        }
        Model::Hammersley(args) => {
            let cfg =
                sample_config(args.lambda, args.rho, (args.horizon, args.horizon), args.seed)?;
            let run = hammersley::evolve(&cfg);
            let content = match args.format {
                Format::Svg => export::trajectories_svg(&run),
                Format::Csv => export::run_csv(&run),
                Format::Json => serde_json::to_string_pretty(&run)?,
            };
            (args, "hammersley", content)
        }
        Model::Png(args) => {
            let cfg =
                sample_config(args.lambda, args.rho, (args.horizon, args.horizon), args.seed)?;
            let nucs = png::nucleations_from(&cfg);
            let s_max = (cfg.window.0 + cfg.window.1) / f64::sqrt(2.0);
            let (profile, trace) = png::evolve_two_type(&nucs, s_max)?;
            let content = match args.format {
                Format::Svg => export::height_svg(&profile, Some(&trace)),
                Format::Csv => export::height_grid_csv(
                    &profile,
                    (-s_max / 2.0, s_max / 2.0),
                    (0.0, s_max * 0.999),
                    41,
                    41,
                )?,
                Format::Json => serde_json::to_string_pretty(&json!({
                    "profile": profile,
                    "interface": trace,
                }))?,
            };
            (args, "png", content)
        }
    };
    emit(args, &format!("{name}_{}.{}", args.seed, ext(args.format)), &content)?;
    Ok(ExitCode::SUCCESS)
}

fn experiment(args: &ExperimentArgs) -> Result<ExitCode, Usage> {
    let file: SpecFile = match &args.config {
        Some(path) => serde_json::from_str(&std::fs::read_to_string(path)?)?,
        None => SpecFile::default(),
    };
    // Precedence: built-in defaults, then the config file, then flags.
    let id = ExperimentId::from_str(&args.id)?;
    if let Some(other) = file.experiment {
        if other != id {
            return Err(Usage(format!(
                "config file names experiment `{other}` but the command line says `{id}`"
            )));
        }
    }
    let mut spec = ExperimentSpec::defaults(id);
    if let Some(v) = file.lambda {
        spec.lambda = v;
    }
    if let Some(v) = file.rho {
        spec.rho = v;
    }
    if let Some(v) = file.horizon {
        spec.horizon = v;
    }
    if let Some(v) = file.replicas {
        spec.replicas = v;
    }
    if let Some(v) = file.seed {
        spec.seed = v;
    }
    spec.out_dir = file.out_dir;
    if let Some(v) = args.lambda {
        spec.lambda = v;
    }
    if let Some(v) = args.rho {
        spec.rho = v;
    }
    if let Some(v) = args.horizon {
        spec.horizon = v;
    }
    if let Some(v) = args.replicas {
        spec.replicas = v;
    }
    if let Some(v) = args.seed {
        spec.seed = v;
    }
    if let Some(dir) = default_out(&args.out) {
        spec.out_dir = Some(dir);
    }

    let record = run_ensemble(&spec)?;
    let content = match args.format {
        Format::Json => serde_json::to_string_pretty(&json!({
            "spec": record.spec,
            "summary": record.summary,
        }))?,
        Format::Csv => {
            let mut out = String::from("kind,name,value,tolerance,pass\n");
            for e in &record.summary.estimates {
                out.push_str(&format!("estimate,{},{},,\n", e.name, e.value));
            }
            for v in &record.summary.verdicts {
                out.push_str(&format!(
                    "verdict,{},{},\"{}\",{}\n",
                    v.name, v.observed, v.tolerance, v.pass
                ));
            }
            out
        }
        Format::Svg => {
            if id != ExperimentId::CdfScp {
                return Err(Usage("--format svg is only available for cdf_scp".into()));
            }
            let params = ModelParams::new(spec.lambda, spec.rho)?;
            let samples: Vec<f64> = record
                .replicas
                .iter()
                .filter(|r| r.excluded.is_none())
                .filter_map(|r| r.observables.get("x_over_t")?.as_f64())
                .collect();
            export::cdf_overlay_svg(
                &samples,
                move |r| {
                    if r <= 0.0 {
                        0.0
                    } else {
                        polygrowth::hydro::z_cdf(r, params).unwrap_or(f64::NAN)
                    }
                },
                "empirical X_t/t vs limit CDF",
            )
        }
    };
    print_out(&content)?;
    if record.summary.all_pass() {
        Ok(ExitCode::SUCCESS)
    } else {
        Ok(ExitCode::from(1))
    }
}

fn tabulate(table: &Table) -> Result<ExitCode, Usage> {
    let (args, name, csv) = match table {
        Table::Cdf(args) => {
            let params = ModelParams::new(args.lambda, args.rho)?;
            if args.rho <= 0.0 {
                return Err(Usage("tabulate cdf needs ρ > 0".into()));
            }
            let lo = args.rho * args.rho;
            let hi = if args.lambda > 0.0 {
                1.0 / (args.lambda * args.lambda)
            } else {
                100.0 * lo
            };
            (args, "cdf", export::cdf_table_csv(params, (lo, hi), 101)?)
        }
        Table::Shape(args) => (args, "shape", export::shape_table_csv(101)),
        Table::Burgers(args) => {
            let params = ModelParams::new(args.lambda, args.rho)?;
            let hi = if args.lambda > 0.0 {
                1.2 / (args.lambda * args.lambda)
            } else {
                10.0
            };
            (args, "burgers", export::burgers_table_csv(params, 1.0, (0.01, hi), 101)?)
        }
    };
    let content = match args.format {
        Format::Csv => csv,
        Format::Json => serde_json::to_string_pretty(&csv_to_json(&csv))?,
        Format::Svg => return Err(Usage("tabulate has no svg form; use csv or json".into())),
    };
    emit(args, &format!("{name}.{}", ext(args.format)), &content)?;
    Ok(ExitCode::SUCCESS)
}

fn csv_to_json(csv: &str) -> serde_json::Value {
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap_or("").split(',').collect();
    let rows: Vec<serde_json::Value> = lines
        .map(|line| {
            let cells = line.split(',').map(|c| {
                c.parse::<f64>()
                    .map(|v| json!(v))
                    .unwrap_or_else(|_| json!(c))
            });
            header.iter().zip(cells).map(|(&k, v)| (k.to_string(), v)).collect()
        })
        .map(serde_json::Value::Object)
        .collect();
    json!(rows)
}
