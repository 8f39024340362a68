use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use convpoly_cli::commands::{self, CommandError, Options, Outcome};
use convpoly_cli::manifest::Document;

#[derive(Parser)]
#[command(name = "convpoly", version, about = "Exact convergence polygons and graph potentials")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Embedded radius along the skeleton.
    Radius(RunArgs),
    /// Full polygon report with all checks.
    Polygon(RunArgs),
    /// Laplacian of the function in the [graph] block.
    Laplacian(RunArgs),
    /// Harmonic extension of the boundary values in the [graph] block.
    Dirichlet(RunArgs),
    /// Bundled verification criteria, plus the manifest's polygon if given.
    Verify(VerifyArgs),
}

#[derive(clap::Args)]
struct Common {
    /// Truncation order N.
    #[arg(long)]
    order: Option<usize>,
    /// Taylor terms J for off-skeleton probes.
    #[arg(long)]
    tail: Option<usize>,
    /// Directory for report and TSV files.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Number of TSV sample points.
    #[arg(long)]
    samples: Option<usize>,
}

#[derive(clap::Args)]
struct RunArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[command(flatten)]
    common: Common,
}

#[derive(clap::Args)]
struct VerifyArgs {
    #[arg(long)]
    manifest: Option<PathBuf>,
    #[command(flatten)]
    common: Common,
}

fn write_outputs(dir: &Path, out: &Outcome) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    for (name, contents) in &out.files {
        std::fs::write(dir.join(name), contents)?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(Outcome, Option<PathBuf>), CommandError> {
    let (manifest, common) = match &cli.command {
        Command::Radius(a) | Command::Polygon(a) | Command::Laplacian(a) | Command::Dirichlet(a) => {
            (Some(a.manifest.as_path()), &a.common)
        }
        Command::Verify(a) => (a.manifest.as_deref(), &a.common),
    };
    let doc = manifest.map(Document::load).transpose()?;
    let opts = Options {
        order: common.order,
        tail: common.tail,
        samples: common.samples,
    };
    let out_dir = common
        .out
        .clone()
        .or_else(|| doc.as_ref().and_then(|d| d.manifest.run.out.clone()).map(PathBuf::from));
    let outcome = match (&cli.command, &doc) {
        (Command::Radius(_), Some(d)) => commands::radius(d, &opts)?,
        (Command::Polygon(_), Some(d)) => commands::polygon(d, &opts)?,
        (Command::Laplacian(_), Some(d)) => commands::laplacian_cmd(d, &opts)?,
        (Command::Dirichlet(_), Some(d)) => commands::dirichlet(d, &opts)?,
        (Command::Verify(_), d) => commands::verify(d.as_ref(), &opts)?,
        _ => unreachable!("manifest is required by clap"),
    };
    Ok((outcome, out_dir))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok((outcome, dir)) => {
            print!("{}", outcome.stdout);
            if let Some(dir) = dir {
                if let Err(e) = write_outputs(&dir, &outcome) {
                    eprintln!("error: cannot write to {}: {e}", dir.display());
                    return ExitCode::from(2);
                }
            }
            if outcome.passed {
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
