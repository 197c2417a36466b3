use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use masla_cli::{load_config, run_experiment, FigureId, Manifest, Overrides, Result};
use masla_core::{TargetId, Variant};

#[derive(Parser)]
#[command(name = "masla", version, about = "Subdifferential Langevin sampling experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// Output directory (default: the configuration's `output_dir`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Multiplier on the number of chains.
    #[arg(long)]
    scale: Option<f64>,
    /// Iteration count, truncating the snapshot schedule if needed.
    #[arg(long)]
    iters: Option<usize>,
}

impl Common {
    fn overrides(&self) -> Overrides {
        Overrides { output_dir: self.out.clone(), seed: self.seed, scale: self.scale, iters: self.iters }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a TOML configuration.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Run a pre-registered figure experiment.
    Figure {
        /// fig1 .. fig5
        id: String,
        #[command(flatten)]
        common: Common,
    },
    /// List catalogue entries.
    List { what: Listing },
}

#[derive(Clone, Copy, ValueEnum)]
enum Listing {
    Targets,
    Kernels,
    Figures,
}

fn summarize(manifest: &Manifest, out: &std::path::Path) {
    println!(
        "{}: {} chains x {} iterations (nominal {} x {}), output in {}",
        manifest.experiment_id,
        manifest.effective.n_chains,
        manifest.effective.n_iters,
        manifest.nominal.n_chains,
        manifest.nominal.n_iters,
        out.display()
    );
    for (label, secs) in &manifest.timings_seconds {
        let rate = manifest.acceptance_rates.get(label).map(|a| format!("  acceptance {a:.4}")).unwrap_or_default();
        println!("  {label:<16} {secs:>9.3} s{rate}");
    }
    for r in &manifest.results {
        println!("  {:<16} {:<3} iter {:>7}  {:.6}", r.kernel, r.metric.id(), r.iteration, r.value);
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { config, common } => {
            let mut c = load_config(&config)?;
            common.overrides().apply(&mut c)?;
            let m = run_experiment(&c)?;
            summarize(&m, &c.output_dir);
        }
        Command::Figure { id, common } => {
            let mut c = id.parse::<FigureId>()?.config();
            common.overrides().apply(&mut c)?;
            let m = run_experiment(&c)?;
            summarize(&m, &c.output_dir);
        }
        Command::List { what } => match what {
            Listing::Targets => TargetId::ALL.iter().for_each(|t| println!("{:<10} {}", t.id(), t.description())),
            Listing::Kernels => Variant::ALL.iter().for_each(|v| println!("{:<8} {}", v.id(), v.description())),
            Listing::Figures => FigureId::ALL.iter().for_each(|f| println!("{:<5} {}", f.id(), f.description())),
        },
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
