use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};
use flowledger::engine::{parse_config_list, AssetKind, GranularityConfig};
use flowledger::harness::{
    default_datasets, generate_dataset, run_matrix, seed_from_env, verify, DatasetInput, GenOptions, Profile, Report,
    RunOptions, DEFAULT_SEED,
};

#[derive(Parser)]
#[command(name = "flowledger", version, about = "Progress-linked payment simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic project dataset.
    Gen {
        #[arg(long)]
        profile: ProfileArg,
        /// Number of building elements (profile default when omitted).
        #[arg(long)]
        elements: Option<usize>,
        #[arg(long, env = "FLOWLEDGER_SEED", default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Scheduled values in multiples of 10000 cents.
        #[arg(long)]
        divisible: bool,
    },
    /// Run the scenario matrix and write a run directory.
    Run {
        /// Dataset files; the two default datasets are generated when none is given.
        #[arg(long = "dataset", num_args = 1..)]
        datasets: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// `all`, or scenario ids / codes such as `1,4,HHH`.
        #[arg(long, default_value = "all", value_parser = parse_configs)]
        configs: Configs,
        #[arg(long, default_value = "native")]
        asset: AssetArg,
        /// Seed for generated datasets (FLOWLEDGER_SEED takes precedence).
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
    },
    /// Re-check a run directory; exit 1 on any finding.
    Verify { dir: PathBuf },
    /// Render the matrix report of a run directory.
    Report {
        dir: PathBuf,
        #[arg(long, default_value = "md")]
        format: Format,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ProfileArg {
    Uav,
    Ugv,
}

#[derive(Clone, Copy, ValueEnum)]
enum AssetArg {
    Native,
    Token,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
    Md,
}

#[derive(Clone)]
struct Configs(Vec<GranularityConfig>);

fn parse_configs(s: &str) -> Result<Configs, String> {
    parse_config_list(s).map(Configs)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    match execute(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn execute(command: Command) -> anyhow::Result<ExitCode> {
    match command {
        Command::Gen { profile, elements, seed, out, divisible } => {
            let profile = match profile {
                ProfileArg::Uav => Profile::Uav,
                ProfileArg::Ugv => Profile::Ugv,
            };
            let elements = elements.unwrap_or(profile.default_elements());
            anyhow::ensure!(elements >= 1, "--elements must be at least 1");
            let opts = GenOptions { profile, elements, seed, divisible };
            let bytes = generate_dataset(&opts).to_canonical_bytes();
            std::fs::write(&out, bytes).with_context(|| format!("writing {}", out.display()))?;
            println!("{} -> {}", opts.name(), out.display());
        }
        Command::Run { datasets, out, configs, asset, seed } => {
            let seed = seed_from_env(seed)?;
            let inputs: Vec<DatasetInput> = if datasets.is_empty() {
                default_datasets(seed).into_iter().map(DatasetInput::generated).collect()
            } else {
                datasets.iter().map(|p| DatasetInput::from_file(p)).collect::<Result<_, _>>()?
            };
            let asset = match asset {
                AssetArg::Native => AssetKind::Native,
                AssetArg::Token => AssetKind::Token,
            };
            let manifest = run_matrix(&inputs, &RunOptions { seed, asset, configs: configs.0 }, &out)?;
            for s in &manifest.scenarios {
                println!("{}", s.dir);
            }
            println!("{} scenarios written to {}", manifest.scenarios.len(), out.display());
        }
        Command::Verify { dir } => {
            let report = verify(&dir)?;
            for f in &report.findings {
                println!("FINDING {f}");
            }
            println!(
                "{} scenarios, {} blocks, {} payments, {} evidence objects, {} findings",
                report.scenarios,
                report.blocks,
                report.payments,
                report.evidence_objects,
                report.findings.len()
            );
            if !report.is_ok() {
                return Ok(ExitCode::from(1));
            }
        }
        Command::Report { dir, format } => {
            let report = Report::from_dir(&dir)?;
            let bytes = match format {
                Format::Json => report.to_json(),
                Format::Csv => report.to_csv(),
                Format::Md => report.to_markdown().into_bytes(),
            };
            use std::io::Write;
            std::io::stdout().write_all(&bytes)?;
        }
    }
    Ok(ExitCode::SUCCESS)
}
