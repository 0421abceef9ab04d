use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use twofold_lab::scenario::{self, ScenarioConfig};

#[derive(Parser)]
#[command(name = "twofold-lab", version, about = "Numerical experiments around the regularized visible-invisible two-fold")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the scenario described by a JSON config.
    Run {
        config: PathBuf,
        /// Worker threads for grid and sweep evaluations.
        #[arg(long)]
        jobs: Option<usize>,
        /// Output directory; overrides `output_dir` from the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a config without integrating anything.
    Validate { config: PathBuf },
}

fn init_logging() {
    let level = std::env::var("TWOFOLD_LAB_LOG").unwrap_or_else(|_| "error".into());
    env_logger::Builder::new().parse_filters(&level).format_timestamp(None).init();
}

fn main() -> ExitCode {
    init_logging();
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Validate { config } => match scenario::validate(&config) {
            Ok(report) => {
                println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
                if report.findings.is_empty() {
                    0
                } else {
                    2
                }
            }
            Err(e) => {
                eprintln!("error: {e}");
                e.exit_code()
            }
        },
        Command::Run { config, jobs, out } => {
            if let Some(n) = jobs {
                if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                    log::warn!("could not size the worker pool: {e}");
                }
            }
            let result = ScenarioConfig::load(&config).and_then(|cfg| {
                let dir = out.or_else(|| cfg.output_dir.clone()).unwrap_or_else(|| PathBuf::from("twofold-out"));
                scenario::run(&cfg, &dir)
            });
            match result {
                Ok(o) => {
                    println!("{}", o.summary_path.display());
                    if o.errors > 0 {
                        eprintln!("{} numerical error(s); see {}", o.errors, o.summary_path.display());
                    }
                    o.exit_code
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    e.exit_code()
                }
            }
        }
    };
    ExitCode::from(code as u8)
}
