use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use offsetph_cli::bench::{run_bench, BenchConfig};
use offsetph_cli::plot::barcode_svg;
use offsetph_cli::{compare, generate, parse_instance, run_pipeline, write_instance, BarcodeFile, CliError, GenConfig, Pipeline};

/// Persistence barcodes of offset filtrations of disjoint convex polygons.
#[derive(Parser, Debug)]
#[command(name = "offsetph", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a random instance of disjoint convex polygons
    Gen {
        #[arg(short, long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 2.0)]
        min_side: f64,
        #[arg(long, default_value_t = 10.0)]
        max_side: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Barcode from the Voronoi-restricted nerve
    Exact(RunArgs),
    /// Barcode from the full nerve of all offsets
    Cech {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, default_value_t = 400)]
        cech_cap: usize,
    },
    /// Barcode from the alpha filtration of a grid sample
    Sample {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        eps: f64,
    },
    /// Bottleneck distances and bar counts between two barcode files
    Compare {
        a: PathBuf,
        b: PathBuf,
        /// Also count bars shorter than this
        #[arg(long)]
        below: Option<f64>,
    },
    /// Render a barcode file as SVG
    Plot {
        barcode: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Time all pipelines on generated instances and write CSV
    Bench {
        #[arg(long, value_delimiter = ',', required = true)]
        sizes: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_value = "1,2,3,4,5")]
        seeds: Vec<u64>,
        #[arg(long, value_delimiter = ',', default_value = "1,0.5,0.1")]
        eps: Vec<f64>,
        #[arg(long, default_value_t = 400)]
        cech_cap: usize,
        #[arg(long, default_value_t = 2.0)]
        min_side: f64,
        #[arg(long, default_value_t = 10.0)]
        max_side: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Debug)]
struct RunArgs {
    instance: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Keep bars of length at most 1e-9
    #[arg(long)]
    show_zero_bars: bool,
    /// Record wall-clock time in the output
    #[arg(long)]
    timing: bool,
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn read_barcode(path: &Path) -> Result<BarcodeFile> {
    BarcodeFile::parse(&read(path)?).with_context(|| path.display().to_string())
}

fn run_command(args: &RunArgs, pipeline: Pipeline) -> Result<()> {
    let sites = parse_instance(&read(&args.instance)?).with_context(|| args.instance.display().to_string())?;
    let run = run_pipeline(&sites, pipeline)?;
    let file = run.to_file(&sites, pipeline, args.show_zero_bars, args.timing);
    emit(args.out.as_deref(), &file.to_json())
}

fn execute(command: Command) -> Result<()> {
    match command {
        Command::Gen { n, seed, min_side, max_side, out } => {
            let sites = generate(&GenConfig { n, seed, min_side, max_side, ..GenConfig::default() })?;
            emit(out.as_deref(), &write_instance(&sites))
        }
        Command::Exact(run) => run_command(&run, Pipeline::Restricted),
        Command::Cech { run, cech_cap } => run_command(&run, Pipeline::Cech { cap: cech_cap }),
        Command::Sample { run, eps } => {
            if !(eps > 0.0 && eps.is_finite()) {
                return Err(CliError::Usage(format!("--eps must be positive and finite, got {eps}")).into());
            }
            run_command(&run, Pipeline::Sample { epsilon: eps })
        }
        Command::Compare { a, b, below } => {
            let (fa, fb) = (read_barcode(&a)?, read_barcode(&b)?);
            print!("{}", compare(&fa.barcode, &fb.barcode, below));
            Ok(())
        }
        Command::Plot { barcode, out } => emit(out.as_deref(), &barcode_svg(&read_barcode(&barcode)?.barcode)),
        Command::Bench { sizes, seeds, eps, cech_cap, min_side, max_side, out } => {
            if eps.iter().any(|e| !(*e > 0.0 && e.is_finite())) {
                return Err(CliError::Usage("--eps values must be positive and finite".into()).into());
            }
            let csv = run_bench(&BenchConfig { sizes, seeds, epsilons: eps, cech_cap, min_side, max_side })?;
            emit(out.as_deref(), &csv)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(e.downcast_ref::<CliError>().map_or(1, CliError::exit_code))
        }
    }
}
