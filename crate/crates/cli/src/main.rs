mod args;
mod commands;
mod manifest;

use args::{Cli, Command};
use clap::Parser;
use commands::Output;
use std::io::Write;
use std::path::Path;
use std::process::ExitCode;

/// Why a command failed, mapped to a stable exit code.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Lib(bibee::Error),
}

impl From<bibee::Error> for Failure {
    fn from(e: bibee::Error) -> Self {
        Failure::Lib(e)
    }
}

impl Failure {
    fn exit_code(&self) -> u8 {
        use bibee::Error as E;
        match self {
            Failure::Usage(_) => 2,
            Failure::Lib(e) => match e.root() {
                E::Parse { .. }
                | E::EmptyInput(_)
                | E::Topology(_)
                | E::Geometry(_)
                | E::Config(_)
                | E::Io(_)
                | E::Csv(_)
                | E::Json(_) => 3,
                E::Domain(_) | E::NearSingularity { .. } => 4,
                E::NonConvergence { .. } | E::Consistency(_) => 5,
                E::Experiment { .. } => unreachable!("root() unwraps experiment context"),
            },
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Usage(m) => write!(f, "usage error: {m}"),
            Failure::Lib(e) => write!(f, "{e}"),
        }
    }
}

fn with_suffix(path: &Path, suffix: &str) -> std::path::PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".");
    s.push(suffix);
    s.into()
}

fn emit(output: Output, out: Option<&Path>) -> Result<(), Failure> {
    let manifest = serde_json::to_vec_pretty(&output.manifest).map_err(bibee::Error::from)?;
    let io = |e: std::io::Error| Failure::Lib(e.into());
    match out {
        Some(path) => {
            std::fs::write(path, &output.primary).map_err(io)?;
            for (suffix, bytes) in &output.extra {
                std::fs::write(with_suffix(path, suffix), bytes).map_err(io)?;
            }
            std::fs::write(with_suffix(path, "manifest.json"), manifest).map_err(io)?;
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(&output.primary).map_err(io)?;
            for (_, bytes) in &output.extra {
                stdout.write_all(b"\n").map_err(io)?;
                stdout.write_all(bytes).map_err(io)?;
            }
            stdout.flush().map_err(io)?;
            let mut stderr = std::io::stderr().lock();
            stderr.write_all(&manifest).map_err(io)?;
            stderr.write_all(b"\n").map_err(io)?;
        }
    }
    for note in &output.notes {
        eprintln!("{note}");
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<(), Failure> {
    if let Some(n) = cli.global.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Usage(format!("--threads: {e}")))?;
    }
    let output = match &cli.command {
        Command::Sphere(a) => commands::sphere(&cli.global, a)?,
        Command::Bem(a) => commands::bem(&cli.global, a)?,
        Command::Experiment(a) => commands::experiment(&cli.global, a)?,
        Command::Sweep(a) => commands::sweep(&cli.global, a)?,
    };
    emit(output, cli.global.out.as_deref())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("bibee: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
