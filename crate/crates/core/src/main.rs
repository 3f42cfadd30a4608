use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};

use polyspin::dynamics::ChainParams;
use polyspin::estimator::{approximate_z, format_record, EstimatorOptions, Mode, RecordFormat, SpinSampler};
use polyspin::graph::{generate_random_regular_bipartite, second_eigenvalue, BipartiteGraph, DEFAULT_SPECTRAL_TOL};
use polyspin::spin_model::InteractionMatrix;
use polyspin::verify::{self, Level};
use polyspin::Error;

#[derive(Parser)]
#[command(name = "polyspin", version, about = "Approximate counting and sampling for spin systems on bipartite expanders")]
struct Cli {
    /// Worker threads (results do not depend on this).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Result record encoding.
    #[arg(long, global = true, value_enum, default_value_t = Format::Kv)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Kv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Strict,
    Lab,
}

#[derive(Clone, Copy, ValueEnum)]
enum LevelArg {
    Quick,
    Full,
}

#[derive(clap::Args)]
struct RunArgs {
    /// Graph file.
    #[arg(short = 'g', long)]
    graph: PathBuf,
    /// Interaction matrix file (a δ-matrix).
    #[arg(short = 'm', long)]
    matrix: PathBuf,
    /// Target relative error ε*.
    #[arg(short = 'e', long = "eps")]
    eps: f64,
    #[arg(short = 's', long)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = ModeArg::Lab)]
    mode: ModeArg,
    /// Polymer size fraction ε (default: premise formula).
    #[arg(long)]
    epsilon: Option<f64>,
    /// Largest polymer the chain inserts.
    #[arg(long, default_value_t = 4)]
    size_cap: usize,
    /// Median amplification runs (default: from the failure budget).
    #[arg(long)]
    median_runs: Option<usize>,
    /// Never take the brute-force path.
    #[arg(long)]
    no_exact: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random Δ-regular bipartite graph and certify λ.
    Gen {
        #[arg(short = 'n', long)]
        n: usize,
        #[arg(short = 'd', long)]
        degree: usize,
        #[arg(short = 's', long)]
        seed: u64,
        /// Output path (stdout when omitted; the certificate then goes to stderr).
        #[arg(short = 'o', long)]
        out: Option<PathBuf>,
    },
    /// Approximate ln Z.
    Estimate(RunArgs),
    /// Draw approximate Gibbs samples.
    Sample {
        #[command(flatten)]
        run: RunArgs,
        #[arg(short = 'c', long)]
        count: usize,
        #[arg(short = 'o', long)]
        out: Option<PathBuf>,
    },
    /// Run the invariant suites.
    Verify {
        #[arg(value_enum)]
        level: LevelArg,
        #[arg(short = 's', long, default_value_t = 1)]
        seed: u64,
    },
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::PremisesUnmet(_) => 3,
        Error::Infeasible(_) | Error::ResourceLimit(_) | Error::NoConvergence { .. } | Error::DegenerateRatio(_) => 2,
        _ => 1,
    }
}

fn read(path: &Path) -> Result<String, Error> {
    fs::read_to_string(path).map_err(|e| Error::Parse {
        line: 0,
        msg: format!("{}: {e}", path.display()),
    })
}

fn write_out(path: Option<&Path>, text: &str) -> io::Result<()> {
    match path {
        Some(p) => fs::write(p, text),
        None => io::stdout().write_all(text.as_bytes()),
    }
}

fn options(a: &RunArgs) -> EstimatorOptions {
    EstimatorOptions {
        mode: match a.mode {
            ModeArg::Strict => Mode::Strict,
            ModeArg::Lab => Mode::Lab,
        },
        epsilon: a.epsilon,
        chain: ChainParams {
            size_cap: a.size_cap,
            ..ChainParams::default()
        },
        median_runs: a.median_runs,
        allow_exact_fallback: !a.no_exact,
        ..EstimatorOptions::default()
    }
}

fn load(a: &RunArgs) -> Result<(BipartiteGraph, InteractionMatrix), Error> {
    let g = BipartiteGraph::parse(&read(&a.graph)?)?;
    let h = InteractionMatrix::parse(&read(&a.matrix)?)?;
    Ok((g, h))
}

fn record_format(f: Format) -> RecordFormat {
    match f {
        Format::Kv => RecordFormat::Kv,
        Format::Json => RecordFormat::Json,
    }
}

fn run(cli: Cli) -> Result<u8, Error> {
    let io_err = |e: io::Error| Error::InvalidRange(format!("write failed: {e}"));
    match cli.command {
        Command::Gen { n, degree, seed, out } => {
            let g = generate_random_regular_bipartite(n, degree, seed)?;
            let cert = second_eigenvalue(&g, DEFAULT_SPECTRAL_TOL)?;
            let bound = 2.0 * (degree as f64).sqrt();
            let pass = cert.lambda <= bound;
            let line = match cli.format {
                Format::Kv => format!(
                    "lambda={} bound={} pass={} iterations={} residual={:e}",
                    cert.lambda, bound, pass, cert.iterations, cert.residual
                ),
                Format::Json => serde_json::json!({
                    "lambda": cert.lambda,
                    "bound": bound,
                    "pass": pass,
                    "iterations": cert.iterations,
                    "residual": cert.residual,
                })
                .to_string(),
            };
            write_out(out.as_deref(), &g.to_text()).map_err(io_err)?;
            if out.is_some() {
                println!("{line}");
            } else {
                eprintln!("{line}");
            }
            Ok(0)
        }
        Command::Estimate(a) => {
            let (g, h) = load(&a)?;
            let start = Instant::now();
            let est = approximate_z(&g, &h, a.eps, &options(&a), a.seed)?;
            for w in &est.warnings {
                eprintln!("warning: {w}");
            }
            println!(
                "{}",
                format_record(&est, a.seed, start.elapsed().as_millis(), record_format(cli.format))
            );
            Ok(0)
        }
        Command::Sample { run, count, out } => {
            let (g, h) = load(&run)?;
            let mut text = String::new();
            if count > 0 {
                let sampler = SpinSampler::new(&g, &h, run.eps, &options(&run), run.seed)?;
                for w in &sampler.estimate().warnings {
                    eprintln!("warning: {w}");
                }
                for s in sampler.sample_many(count, run.seed)? {
                    text.push_str(&s.to_line());
                    text.push('\n');
                }
            }
            write_out(out.as_deref(), &text).map_err(io_err)?;
            Ok(0)
        }
        Command::Verify { level, seed } => {
            let level = match level {
                LevelArg::Quick => Level::Quick,
                LevelArg::Full => Level::Full,
            };
            let outcomes = verify::run(level, seed)?;
            let mut ok = true;
            for o in &outcomes {
                ok &= o.passed;
                println!("{} {}: {}", if o.passed { "PASS" } else { "FAIL" }, o.name, o.detail);
            }
            Ok(if ok { 0 } else { 4 })
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(t) = cli.threads {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t.max(1)).build_global();
    }
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
