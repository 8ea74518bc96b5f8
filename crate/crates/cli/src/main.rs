use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use singular_pq::config::{Config, LambdaChoice};
use singular_pq::pipeline::{self, CertifyKind};
use singular_pq::Error;

#[derive(Parser, Debug)]
#[command(name = "singular-pq", version, about = "Sub/supersolution pairs and monotone iteration for singular (p,q)-Laplacian problems on a ball")]
struct Cli {
    /// JSON configuration (schema v1)
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Grid intervals, overriding the configuration
    #[arg(long, global = true)]
    nodes: Option<usize>,
    /// lambda value, or lower, midpoint, upper
    #[arg(long, global = true)]
    lambda: Option<String>,
    /// Seed for randomized searches
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Parameter window and assumption checks
    Window,
    /// Radial comparison profile and its claim certificate
    Radial,
    /// Barrier profile, scaling report and collar certificate
    Barrier,
    /// Both sub/supersolution pairs with certificates
    Pairs,
    /// Minimal and maximal solutions by monotone iteration
    Solve,
    /// Re-check a grid function read from CSV
    Certify {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum)]
        kind: KindArg,
        /// Second function for ordering checks
        #[arg(long)]
        against: Option<PathBuf>,
    },
    /// Solve over evenly spaced lambdas in the window
    Sweep,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum KindArg {
    Subsolution,
    Supersolution,
    Ordering,
    Nonordering,
    RadialClaim,
}

impl From<KindArg> for CertifyKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Subsolution => CertifyKind::Subsolution,
            KindArg::Supersolution => CertifyKind::Supersolution,
            KindArg::Ordering => CertifyKind::Ordering,
            KindArg::Nonordering => CertifyKind::Nonordering,
            KindArg::RadialClaim => CertifyKind::RadialClaim,
        }
    }
}

const EXIT_CERTIFICATE: u8 = 1;
const EXIT_INPUT: u8 = 2;
const EXIT_CONVERGENCE: u8 = 3;

fn exit_for(e: &Error) -> u8 {
    if e.is_convergence() {
        EXIT_CONVERGENCE
    } else {
        EXIT_INPUT
    }
}

fn load_config(cli: &Cli) -> Result<Config, Error> {
    let mut cfg = match &cli.config {
        Some(p) => Config::load(p)?,
        None => Config::reference(),
    };
    if let Some(n) = cli.nodes {
        cfg.grid.nodes = n;
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn out_dir(cli: &Cli, cfg: &Config) -> Result<PathBuf, Error> {
    let dir = cli
        .out
        .clone()
        .or_else(|| cfg.output.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    std::fs::create_dir_all(&dir)?;
    Ok(dir)
}

fn report(name: &str, pass: bool, dir: &Path) -> u8 {
    println!("{name}: {} ({})", if pass { "pass" } else { "FAIL" }, dir.display());
    if pass {
        0
    } else {
        EXIT_CERTIFICATE
    }
}

fn run(cli: &Cli) -> Result<u8, Error> {
    let cfg = load_config(cli)?;
    let lambda = cli.lambda.as_deref().map(str::parse::<LambdaChoice>).transpose()?;
    let dir = out_dir(cli, &cfg)?;
    let code = match &cli.command {
        Command::Window => {
            let r = pipeline::run_window(&cfg, lambda)?;
            r.write(&dir)?;
            report("window", r.pass(), &dir)
        }
        Command::Radial => {
            let r = pipeline::run_radial(&cfg, lambda)?;
            r.write(&dir)?;
            report("radial", r.pass(), &dir)
        }
        Command::Barrier => {
            let r = pipeline::run_barrier(&cfg, lambda)?;
            r.write(&dir)?;
            report("barrier", r.pass(), &dir)
        }
        Command::Pairs => {
            let r = pipeline::run_pairs(&cfg, lambda)?;
            r.write(&dir)?;
            report("pairs", r.pass(), &dir)
        }
        Command::Solve => {
            let r = pipeline::run_solve(&cfg, lambda, cli.seed)?;
            r.write(&dir)?;
            report("solve", r.pass(), &dir)
        }
        Command::Certify { input, kind, against } => {
            let r = pipeline::run_certify(&cfg, lambda, (*kind).into(), input, against.as_deref());
            let r = match r {
                Err(Error::PositivityLoss { node }) => {
                    let detail = serde_json::json!({
                        "kind": CertifyKind::from(*kind),
                        "pass": false,
                        "error": "positivity_loss",
                        "node": node,
                    });
                    std::fs::write(dir.join("certificate.json"), serde_json::to_string_pretty(&detail)? + "\n")?;
                    eprintln!("certify: positivity lost at node {node}");
                    return Ok(report("certify", false, &dir));
                }
                other => other?,
            };
            r.write(&dir)?;
            report("certify", r.pass, &dir)
        }
        Command::Sweep => {
            let r = pipeline::run_sweep(&cfg)?;
            r.write(&dir)?;
            report("sweep", r.pass(), &dir)
        }
    };
    Ok(code)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_for(&e))
        }
    }
}
