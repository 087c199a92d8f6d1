use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use kicked_kerr_cli::output::verify_manifest;
use kicked_kerr_cli::{run, CliError, Command, RunConfig};

/// Kicked Kerr oscillator: classical bifurcations, Wigner negativity,
/// recurrence analysis and spectral entropy.
#[derive(Parser)]
#[command(name = "kicked-kerr", version)]
struct Cli {
    /// TOML configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override a configuration key, e.g. `--set model.dim=48`.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,
    /// Output directory; shorthand for `--set output.dir=…`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Classical bifurcation diagram over the ε grid.
    Bifurcation,
    /// δ, δ_n, ⟨n⟩ and trace defect per kick for each configured ε.
    DeltaSeries {
        /// Replaces `delta_series.epsilons`.
        #[arg(long = "epsilon")]
        epsilons: Vec<f64>,
    },
    /// Wigner function of the state after a given kick.
    Wigner {
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long)]
        kick: Option<usize>,
    },
    /// Delay, embedding dimension and recurrence quantification of a δ_n series.
    Rqa {
        /// delta-series CSV to analyse instead of running the model.
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        epsilon: Option<f64>,
    },
    /// Spectral entropy of δ_n across the ε grid.
    EntropySweep,
    /// Print the effective configuration.
    Config,
    /// Check a result directory against its manifest.
    Verify { dir: PathBuf },
}

fn toml_str(s: &str) -> String {
    toml::Value::String(s.to_string()).to_string()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("kicked-kerr: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn execute(cli: Cli) -> Result<(), CliError> {
    if let Ok(w) = std::env::var("KICKED_KERR_WORKERS") {
        let n: usize = w
            .parse()
            .map_err(|_| CliError::Config(format!("KICKED_KERR_WORKERS = `{w}` is not a count")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(e.to_string()))?;
    }
    let mut overrides = cli.overrides;
    if let Some(out) = &cli.out {
        overrides.push(format!("output.dir={}", toml_str(&out.to_string_lossy())));
    }
    let command = match cli.command {
        Cmd::Verify { dir } => {
            let m = verify_manifest(&dir)?;
            println!("{}: {} files verified", m.command, m.files.len());
            return Ok(());
        }
        Cmd::Config => {
            print!("{}", RunConfig::load(cli.config.as_deref(), &overrides)?.emit());
            return Ok(());
        }
        Cmd::Bifurcation => Command::Bifurcation,
        Cmd::DeltaSeries { epsilons } => {
            if !epsilons.is_empty() {
                let list: Vec<String> = epsilons.iter().map(|e| format!("{e:?}")).collect();
                overrides.push(format!("delta_series.epsilons=[{}]", list.join(", ")));
            }
            Command::DeltaSeries
        }
        Cmd::Wigner { epsilon, kick } => {
            overrides.extend(epsilon.map(|e| format!("wigner.epsilon={e:?}")));
            overrides.extend(kick.map(|k| format!("wigner.kick={k}")));
            Command::Wigner
        }
        Cmd::Rqa { input, epsilon } => {
            overrides.extend(input.map(|p| format!("rqa.input={}", toml_str(&p.to_string_lossy()))));
            overrides.extend(epsilon.map(|e| format!("rqa.epsilon={e:?}")));
            Command::Rqa
        }
        Cmd::EntropySweep => Command::EntropySweep,
    };
    let config = RunConfig::load(cli.config.as_deref(), &overrides)?;
    let result = run(command, &config);
    let dir = kicked_kerr_cli::command_dir(&config, command);
    match &result {
        Ok(m) => println!("{}: wrote {} files to {}", m.command, m.files.len(), dir.display()),
        Err(CliError::Partial { .. }) => println!("{}: partial results in {}", command.name(), dir.display()),
        Err(_) => {}
    }
    result.map(|_| ())
}
