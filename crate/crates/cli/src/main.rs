mod config;
mod report;
mod run;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use config::{MarkArg, MeshSource, RunConfig};

#[derive(Debug, Parser)]
#[command(name = "ddforms", version, about = "Distributional de Rham complexes on simplicial meshes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Relative Betti numbers b_0 … b_n of the pair (T, U).
    Betti(Args),
    /// Local exactness, geometric decomposition and the local patch condition.
    Check(Args),
    /// Harmonic dimensions of every complex family.
    Harmonic(Args),
    /// Verify the chain of harmonic-space isomorphisms for every degree.
    Chain(Args),
    /// Solve the Hodge-Laplace problem on the conforming complex for a built-in source.
    Solve(Args),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Table,
    Structured,
}

#[derive(Debug, clap::Args)]
struct Args {
    /// Mesh file (JSON) or `catalog:<key>`, e.g. `catalog:annulus(1)`.
    #[arg(long)]
    mesh: String,
    /// `whitney`, `trimmed_p_minus`, `full_p`, or a spelled-out `trimmed(2)`.
    #[arg(long, default_value = "whitney")]
    family: String,
    /// Polynomial degree r.
    #[arg(long)]
    degree: Option<u32>,
    /// Subcomplex: `none`, `full` or `half` boundary, or `file` (the mesh file's own list).
    #[arg(long, value_enum)]
    mark: Option<MarkArg>,
    /// Tolerance for residuals and subspace gaps in the verdicts.
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    format: Format,
    /// Treat condition-checker warnings as failures.
    #[arg(long)]
    strict: bool,
    /// Write every assembled D, T and Gram matrix to this directory.
    #[arg(long, value_name = "DIR")]
    dump_operators: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = MetricArg::Weighted)]
    metric: MetricArg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MetricArg {
    Weighted,
    Unweighted,
}

fn config(command: &'static str, a: Args) -> Result<RunConfig, config::ConfigError> {
    RunConfig::new(
        command,
        MeshSource::parse(&a.mesh),
        &a.family,
        a.degree,
        a.mark,
        a.tol,
        a.format,
        a.strict,
        a.dump_operators,
        match a.metric {
            MetricArg::Weighted => ddforms::assembly::Metric::Weighted,
            MetricArg::Unweighted => ddforms::assembly::Metric::Unweighted,
        },
    )
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (name, args) = match cli.command {
        Command::Betti(a) => ("betti", a),
        Command::Check(a) => ("check", a),
        Command::Harmonic(a) => ("harmonic", a),
        Command::Chain(a) => ("chain", a),
        Command::Solve(a) => ("solve", a),
    };
    let result = config(name, args).map_err(run::RunError::from).and_then(|cfg| {
        let report = run::run(&cfg)?;
        Ok((cfg.format, report))
    });
    match result {
        Ok((format, report)) => {
            let text = match format {
                Format::Table => report.table(),
                Format::Structured => report.structured() + "\n",
            };
            // a closed pipe (e.g. `| head`) is not an error of the run
            let _ = std::io::stdout().lock().write_all(text.as_bytes());
            if report.pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
