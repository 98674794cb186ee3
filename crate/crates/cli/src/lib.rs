//! Command-line driver: `sketch`, `estimate` and `experiment`.
//!
//! Exit codes: 0 on success, 2 for invalid flags or configuration, 3 for
//! unreadable or malformed input and output files, 4 for numerical failures.
//! Every failure also prints one JSON object on stderr.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use sha2::{Digest, Sha256};
use sketchboot::io::{write_curves_csv, write_matrix_market, write_raw_f64, write_trials_csv};
use sketchboot::{
    bootstrap_errors_with, extrapolate_curve, read_matrix, run_experiment_on, sketch_with,
    sketched_svd_from_sketch, squared_length_probabilities, uniform_probabilities, BootstrapConfig,
    CountedMatrix, DenseMatrix, Error, EstimateReport, Execution, ExperimentConfig, MatrixSpec,
    Sketch, SketchSpec,
};

pub const EXIT_USAGE: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;

#[derive(Parser, Debug)]
#[command(
    name = "sketchboot",
    version,
    about = "Sketched SVD with bootstrap error estimates"
)]
struct Cli {
    /// Run every data-parallel loop on the calling thread
    #[arg(long, global = true)]
    serial: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sketch a matrix file and write Ã
    Sketch(SketchArgs),
    /// Bootstrap error quantiles from a sketch file
    Estimate(EstimateArgs),
    /// Run a Monte-Carlo experiment from a JSON config
    Experiment(ExperimentArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum KindArg {
    Gaussian,
    Rowsample,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FormatArg {
    Raw,
    Mm,
}

#[derive(Args, Debug)]
struct SketchArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum)]
    kind: KindArg,
    /// uniform, sqlen, or file:<path> with one probability per row
    #[arg(long, default_value = "uniform")]
    probs: String,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    t: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Output format of the sketch
    #[arg(long, value_enum, default_value = "raw")]
    format: FormatArg,
}

#[derive(Args, Debug)]
struct EstimateArgs {
    #[arg(long)]
    sketch: PathBuf,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    k: u64,
    /// Comma-separated 1-based triplet indices
    #[arg(long = "J", default_value = "1", value_parser = parse_index_set)]
    index_set: IndexSet,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long = "B", default_value_t = 30, value_parser = clap::value_parser!(u64).range(1..))]
    replicates: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Sketch sizes as start:stop:step (stop included when aligned) or a comma list
    #[arg(long, value_parser = parse_grid)]
    extrapolate: Option<Grid>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct ExperimentArgs {
    #[arg(long)]
    config: PathBuf,
    /// Directory receiving curves.csv, trials.csv and manifest.json
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Clone, Debug)]
struct IndexSet(Vec<usize>);

#[derive(Clone, Debug)]
struct Grid(Vec<usize>);

fn parse_index_set(s: &str) -> Result<IndexSet, String> {
    s.split(',')
        .map(|x| {
            x.trim()
                .parse::<usize>()
                .map_err(|e| format!("bad index {x:?}: {e}"))
        })
        .collect::<Result<_, _>>()
        .map(IndexSet)
}

fn parse_grid(s: &str) -> Result<Grid, String> {
    parse_t_grid(s).map(Grid)
}

/// Parses `start:stop:step` (inclusive of `stop` when `stop − start` is a
/// multiple of `step`) or a comma-separated list.
pub fn parse_t_grid(s: &str) -> Result<Vec<usize>, String> {
    let num = |x: &str| {
        x.trim()
            .parse::<usize>()
            .map_err(|e| format!("bad grid value {x:?}: {e}"))
    };
    let parts: Vec<&str> = s.split(':').collect();
    match parts.as_slice() {
        [start, stop, step] => {
            let (start, stop, step) = (num(start)?, num(stop)?, num(step)?);
            if step == 0 || start > stop {
                return Err(format!("empty or unbounded range {s:?}"));
            }
            Ok((start..=stop).step_by(step).collect())
        }
        [_] => s.split(',').map(num).collect(),
        _ => Err(format!(
            "grid {s:?} is neither start:stop:step nor a comma list"
        )),
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            return 0;
        }
        Err(e) => {
            report(EXIT_USAGE, "usage", &e.kind().to_string(), &e.to_string());
            return EXIT_USAGE;
        }
    };
    let exec = if cli.serial {
        Execution::Serial
    } else {
        Execution::Parallel
    };
    let outcome = match cli.command {
        Command::Sketch(a) => cmd_sketch(a, exec),
        Command::Estimate(a) => cmd_estimate(a, exec),
        Command::Experiment(a) => cmd_experiment(a, exec),
    };
    match outcome {
        Ok(()) => 0,
        Err(e) => {
            let code = exit_code(&e);
            let kind = match code {
                EXIT_IO => "io",
                EXIT_NUMERICAL => "numerical",
                _ => "invalid_input",
            };
            report(code, kind, kind, &e.to_string());
            code
        }
    }
}

/// Maps a library error to the process exit code.
pub fn exit_code(e: &Error) -> i32 {
    if e.is_io() {
        EXIT_IO
    } else if e.is_numerical() {
        EXIT_NUMERICAL
    } else {
        EXIT_USAGE
    }
}

#[derive(Serialize)]
struct ErrorLine<'a> {
    error: &'a str,
    kind: &'a str,
    message: &'a str,
    exit_code: i32,
}

fn report(code: i32, error: &str, kind: &str, message: &str) {
    let line = ErrorLine {
        error,
        kind,
        message: message.trim_end(),
        exit_code: code,
    };
    eprintln!(
        "{}",
        serde_json::to_string(&line).expect("error line serializes")
    );
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_owned(),
        source,
    }
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<(), Error> {
    fs::write(path, bytes).map_err(io_err(path))
}

fn read_probability_file(path: &Path) -> Result<Vec<f64>, Error> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    text.split_whitespace()
        .map(|x| {
            x.parse::<f64>()
                .map_err(|e| Error::Format(format!("bad probability {x:?}: {e}")))
        })
        .collect()
}

fn cmd_sketch(args: SketchArgs, exec: Execution) -> Result<(), Error> {
    let a = read_matrix(&args.input, None)?;
    let counted = CountedMatrix::new(&a);
    let t = args.t as usize;
    let spec = match args.kind {
        KindArg::Gaussian => SketchSpec::gaussian(t, args.seed),
        KindArg::Rowsample => {
            let p = match args.probs.as_str() {
                "uniform" => uniform_probabilities(a.rows()),
                "sqlen" => squared_length_probabilities(&counted)?,
                other => match other.strip_prefix("file:") {
                    Some(path) => read_probability_file(Path::new(path))?,
                    None => {
                        return Err(Error::InvalidConfig(format!(
                            "--probs must be uniform, sqlen or file:<path>, got {other:?}"
                        )))
                    }
                },
            };
            SketchSpec::row_sampling(t, p, args.seed)
        }
    };
    let sk = sketch_with(&counted, &spec, exec)?;
    let mut bytes = Vec::new();
    match args.format {
        FormatArg::Raw => write_raw_f64(&mut bytes, &sk.a_tilde)?,
        FormatArg::Mm => write_matrix_market(&mut bytes, &sk.a_tilde)?,
    }
    write_bytes(&args.out, &bytes)?;
    println!(
        "{}",
        serde_json::json!({ "t": sk.t(), "d": sk.a_tilde.cols(), "passes": counted.passes() })
    );
    Ok(())
}

fn cmd_estimate(args: EstimateArgs, exec: Execution) -> Result<(), Error> {
    let a_tilde = read_matrix(&args.sketch, None)?;
    let t = a_tilde.rows();
    // Only the size of a sketch read from disk is known.
    let spec = SketchSpec::gaussian(t, 0);
    let sk = Sketch::from_matrix(a_tilde, spec, 0)?;
    let k = args.k as usize;
    let sketched = sketched_svd_from_sketch::<DenseMatrix>(&sk, k, None)?;
    let cfg = BootstrapConfig::new(
        args.replicates as usize,
        args.alpha,
        args.index_set.0,
        args.seed,
    );
    let est = bootstrap_errors_with(&sk, &sketched, &cfg, exec)?;
    let extrapolated = match &args.extrapolate {
        Some(grid) => extrapolate_curve(&est, &grid.0)?,
        None => Vec::new(),
    };
    let report = EstimateReport::new(&est, k, extrapolated);
    let mut json = serde_json::to_vec_pretty(&report)?;
    json.push(b'\n');
    write_bytes(&args.out, &json)?;
    if est.has_rank_deficiency_warning() {
        eprintln!(
            "warning: {} of {} bootstrap replicates were rank deficient",
            est.rank_deficient_replicates,
            est.b()
        );
    }
    println!(
        "{}",
        serde_json::json!({ "t0": est.t0, "q_u": est.q_u, "q_sigma": est.q_sigma, "q_v": est.q_v })
    );
    Ok(())
}

#[derive(Serialize)]
struct OutputEntry {
    file: String,
    bytes: usize,
    sha256: String,
}

#[derive(Serialize)]
struct RunManifest<'a> {
    version: &'static str,
    master_seed: u64,
    started_at: String,
    finished_at: String,
    config: &'a ExperimentConfig,
    outputs: Vec<OutputEntry>,
}

fn cmd_experiment(args: ExperimentArgs, exec: Execution) -> Result<(), Error> {
    let started_at = chrono::Utc::now().to_rfc3339();
    let text = fs::read(&args.config).map_err(io_err(&args.config))?;
    let mut cfg: ExperimentConfig = serde_json::from_slice(&text)
        .map_err(|e| Error::InvalidConfig(format!("{}: {e}", args.config.display())))?;
    if let MatrixSpec::File { path, .. } = &mut cfg.matrix {
        if path.is_relative() {
            if let Some(dir) = args.config.parent() {
                *path = dir.join(&*path);
            }
        }
    }
    cfg.validate()?;
    let a = cfg.matrix.build()?;
    let curves = run_experiment_on(&a, &cfg, exec)?;

    fs::create_dir_all(&args.out_dir).map_err(io_err(&args.out_dir))?;
    let mut outputs = Vec::new();
    let mut emit = |name: &str, bytes: Vec<u8>| -> Result<(), Error> {
        write_bytes(&args.out_dir.join(name), &bytes)?;
        outputs.push(OutputEntry {
            file: name.to_owned(),
            bytes: bytes.len(),
            sha256: hex::encode(Sha256::digest(&bytes)),
        });
        Ok(())
    };
    let mut buf = Vec::new();
    write_curves_csv(&mut buf, &curves)?;
    emit("curves.csv", buf)?;
    let mut buf = Vec::new();
    write_trials_csv(&mut buf, &curves)?;
    emit("trials.csv", buf)?;

    let manifest = RunManifest {
        version: env!("CARGO_PKG_VERSION"),
        master_seed: cfg.master_seed,
        started_at,
        finished_at: chrono::Utc::now().to_rfc3339(),
        config: &cfg,
        outputs,
    };
    let mut json = serde_json::to_vec_pretty(&manifest)?;
    json.push(b'\n');
    let manifest_path = args.out_dir.join("manifest.json");
    write_bytes(&manifest_path, &json)?;
    println!(
        "wrote {} grid points to {}",
        curves.points.len(),
        args.out_dir.display()
    );
    Ok(())
}
