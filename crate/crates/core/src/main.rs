use std::fs;
use std::io::Read;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use serde_json::Value;

use gaussframe::cli::{self, Command, Outcome, RunSpec};
use gaussframe::{Error, Result};

/// Series expansions of Gaussian processes: build, sample, verify.
#[derive(Debug, Parser)]
#[command(name = "gaussframe", version)]
struct Args {
    /// JSON run spec; `-` reads standard input.
    #[arg(long)]
    spec: Option<PathBuf>,

    /// Command, overriding the spec's.
    #[arg(value_enum)]
    command: Option<CommandArg>,

    /// Family spec as inline JSON.
    #[arg(long)]
    family: Option<String>,

    /// Kernel spec as inline JSON.
    #[arg(long)]
    kernel: Option<String>,

    #[arg(long)]
    seed: Option<u64>,

    /// Comma-separated truncation points.
    #[arg(long, value_delimiter = ',')]
    truncations: Option<Vec<usize>>,

    #[arg(long)]
    replicates: Option<usize>,

    #[arg(long)]
    n_terms: Option<usize>,

    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Worker threads; 0 picks the number of cores.
    #[arg(long, default_value_t = 0)]
    threads: usize,
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
enum CommandArg {
    Expand,
    Sample,
    Remainder,
    Verify,
    Eigs,
}

impl From<CommandArg> for Command {
    fn from(c: CommandArg) -> Command {
        match c {
            CommandArg::Expand => Command::Expand,
            CommandArg::Sample => Command::Sample,
            CommandArg::Remainder => Command::Remainder,
            CommandArg::Verify => Command::Verify,
            CommandArg::Eigs => Command::Eigs,
        }
    }
}

fn inline_json(flag: &str, text: &str) -> Result<Value> {
    serde_json::from_str(text).map_err(|e| Error::Parse(format!("--{flag}: {e}")))
}

fn execute(args: &Args) -> Result<Outcome> {
    let doc = match &args.spec {
        Some(path) => {
            let text = if path.as_os_str() == "-" {
                let mut s = String::new();
                std::io::stdin().read_to_string(&mut s)?;
                s
            } else {
                fs::read_to_string(path)?
            };
            serde_json::from_str(&text).map_err(|e| Error::Parse(format!("run spec: {e}")))?
        }
        None => cli::empty_spec(),
    };
    let mut overrides = Vec::new();
    if let Some(c) = args.command {
        overrides.push(("command", serde_json::to_value(Command::from(c))?));
    }
    if let Some(f) = &args.family {
        overrides.push(("family", inline_json("family", f)?));
    }
    if let Some(k) = &args.kernel {
        overrides.push(("kernel", inline_json("kernel", k)?));
    }
    if let Some(s) = args.seed {
        overrides.push(("seed", s.into()));
    }
    if let Some(t) = &args.truncations {
        overrides.push(("truncations", serde_json::to_value(t)?));
    }
    if let Some(r) = args.replicates {
        overrides.push(("n_replicates", r.into()));
    }
    if let Some(n) = args.n_terms {
        overrides.push(("n_terms", n.into()));
    }
    let spec = RunSpec::from_value(cli::apply_overrides(doc, &overrides)?)?;
    if args.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(args.threads)
            .build_global()
            .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
    }
    let dir = args
        .out
        .clone()
        .or_else(|| spec.output.clone())
        .unwrap_or_else(|| PathBuf::from(cli::DEFAULT_OUTPUT));
    cli::run(&spec, &dir)
}

fn main() -> ExitCode {
    let args = Args::parse();
    let result = execute(&args);
    match &result {
        Ok(Outcome::ChecksFailed) => eprintln!("gaussframe: one or more checks failed"),
        Err(e) => eprintln!("gaussframe: {e}"),
        Ok(Outcome::Success) => {}
    }
    ExitCode::from(cli::exit_code(&result))
}
