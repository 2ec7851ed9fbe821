use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgAction, Parser, Subcommand};
use triangle_oracle::commands::{cmd_graph, cmd_price, cmd_simulate, PriceArgs, EXIT_FAILURE};
use triangle_oracle::service::{bind, serve, AppState};
use triangle_oracle::{DEFAULT_SAMPLES, SNAPSHOT_ENV};

#[derive(Parser)]
#[command(name = "triangle-oracle", version, about = "Manipulation-resistant DEX price oracle over a triangle graph of pools")]
struct Cli {
    /// Reject unknown fields in snapshot documents (`--strict false` to only warn).
    #[arg(long, global = true, default_value_t = true, action = ArgAction::Set)]
    strict: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the pool graph and write its JSON export.
    Graph {
        #[arg(long, env = SNAPSHOT_ENV)]
        snapshot: PathBuf,
        /// Export destination; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Price BASE in units of QUOTE along the least irregular path.
    Price {
        #[arg(long, env = SNAPSHOT_ENV)]
        snapshot: PathBuf,
        #[arg(long)]
        base: String,
        #[arg(long)]
        quote: String,
        #[arg(long, default_value_t = DEFAULT_SAMPLES)]
        samples: u32,
        /// Endpoint sampling seed; drawn from the OS RNG when omitted and echoed.
        #[arg(long)]
        seed: Option<u64>,
        /// Print the same JSON body as `POST /price`.
        #[arg(long)]
        json: bool,
    },
    /// Run attack scenarios against a synthetic market and report errors.
    Simulate {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        scenarios: PathBuf,
        /// Where to write the JSON report.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Serve /health, /price and /reload over HTTP.
    Serve {
        #[arg(long, env = SNAPSHOT_ENV)]
        snapshot: PathBuf,
        #[arg(long, default_value = "127.0.0.1:8080")]
        bind: String,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let stdout = io::stdout();
    let stderr = io::stderr();
    let (mut out, mut err) = (stdout.lock(), stderr.lock());
    let status = match cli.command {
        Command::Graph { snapshot, out: path } => cmd_graph(&snapshot, path.as_deref(), cli.strict, &mut out, &mut err),
        Command::Price {
            snapshot,
            base,
            quote,
            samples,
            seed,
            json,
        } => cmd_price(
            &PriceArgs {
                snapshot_path: &snapshot,
                base: &base,
                quote: &quote,
                samples,
                seed: seed.unwrap_or_else(rand::random::<u64>),
                strict: cli.strict,
                json,
            },
            &mut out,
            &mut err,
        ),
        Command::Simulate { spec, scenarios, out: path } => cmd_simulate(&spec, &scenarios, path.as_deref(), &mut out, &mut err),
        Command::Serve { snapshot, bind: address } => {
            drop((out, err));
            return run_server(snapshot, &address, cli.strict);
        }
    };
    let _ = out.flush();
    ExitCode::from(status as u8)
}

fn run_server(snapshot: PathBuf, address: &str, strict: bool) -> ExitCode {
    let runtime = match tokio::runtime::Runtime::new() {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: cannot start runtime: {e}");
            return ExitCode::from(EXIT_FAILURE as u8);
        }
    };
    runtime.block_on(async {
        let (listener, local) = match bind(address).await {
            Ok(pair) => pair,
            Err(e) => {
                eprintln!("error: cannot bind {address}: {e}");
                return ExitCode::from(EXIT_FAILURE as u8);
            }
        };
        println!("listening on http://{local}");
        let _ = io::stdout().flush();
        let shutdown = async {
            let _ = tokio::signal::ctrl_c().await;
        };
        match serve(AppState::new(snapshot, strict), listener, shutdown).await {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => {
                eprintln!("error: server stopped: {e}");
                ExitCode::from(EXIT_FAILURE as u8)
            }
        }
    })
}
