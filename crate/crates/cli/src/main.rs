//! `slowspace` operator command line.

use std::fs;
use std::io;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Parser, Subcommand};
use slowspace_core::pcg::Catalog;
use slowspace_core::scene::{export_scene, ExportError};
use slowspace_core::{decode_space, scene_hash, validate_space, GridSpec};
use slowspace_server::session::{decode_log, encode_log, replay_log, ResiduePolicy};
use slowspace_server::sim::{run_fuzz, FuzzConfig};
use slowspace_server::store::{load_space_file, SpaceStore, StoreError};
use slowspace_server::{Hub, ServerConfig};

#[derive(Debug, Parser)]
#[command(
    name = "slowspace",
    version,
    about = "Collaborative slow-space editor server and tools"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the session server.
    Serve {
        #[arg(long, env = "SLOWSPACE_ADDR", default_value = "127.0.0.1:8080")]
        addr: SocketAddr,
        #[arg(long, env = "SLOWSPACE_DATA", default_value = "data")]
        data: PathBuf,
        /// Wear per second of presence.
        #[arg(long, default_value_t = 0.001)]
        wear_rate: f64,
        #[arg(long, default_value_t = 10)]
        autosave_secs: u64,
        /// Directory of static editor assets served at `/`.
        #[arg(long)]
        ui: Option<PathBuf>,
        #[arg(long)]
        catalog: Option<PathBuf>,
    },
    /// Create a fresh space in the data directory and print its id.
    New {
        #[arg(long)]
        name: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 16)]
        width: u32,
        #[arg(long, default_value_t = 16)]
        height: u32,
        #[arg(long, default_value_t = 2.0)]
        cell_size: f64,
        #[arg(long, env = "SLOWSPACE_DATA", default_value = "data")]
        data: PathBuf,
    },
    /// Check a space file and print every violation.
    Validate { file: PathBuf },
    /// Write the scene description of a space file.
    Export {
        file: PathBuf,
        #[arg(short = 'o', long = "out")]
        out: PathBuf,
        #[arg(long)]
        catalog: Option<PathBuf>,
    },
    /// Replay an op log over a creation state and print the final scene hash.
    Replay { file: PathBuf, log: PathBuf },
    /// Run simulated clients against an in-process server and check convergence.
    Fuzz {
        #[arg(long, default_value_t = 3)]
        clients: usize,
        #[arg(long, default_value_t = 1000)]
        ops: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Also write `creation.json` and `log.jsonl` here.
        #[arg(long)]
        emit: Option<PathBuf>,
    },
}

/// A failed command. The variant picks the exit code.
enum Failure {
    Invalid(String),
    Io(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Invalid(_) => 1,
            Failure::Io(_) => 3,
        }
    }
}

impl From<StoreError> for Failure {
    fn from(e: StoreError) -> Self {
        match e {
            StoreError::NotFound(_) | StoreError::Io { .. } => Failure::Io(e.to_string()),
            StoreError::CorruptFile { .. } | StoreError::Invalid(_) => {
                Failure::Invalid(e.to_string())
            }
        }
    }
}

fn read(path: &Path) -> Result<Vec<u8>, Failure> {
    fs::read(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

fn io_failure(path: &Path) -> impl FnOnce(io::Error) -> Failure + '_ {
    move |e| Failure::Io(format!("{}: {e}", path.display()))
}

fn load_catalog(path: Option<&Path>) -> Result<Catalog, Failure> {
    match path {
        None => Ok(Catalog::default()),
        Some(p) => Catalog::from_json(&read(p)?)
            .map_err(|e| Failure::Invalid(format!("{}: {e}", p.display()))),
    }
}

fn run(cmd: Command) -> Result<(), Failure> {
    match cmd {
        Command::Serve {
            addr,
            data,
            wear_rate,
            autosave_secs,
            ui,
            catalog,
        } => {
            if autosave_secs == 0 {
                return Err(Failure::Invalid("--autosave-secs must be positive".into()));
            }
            let config = ServerConfig {
                addr,
                data_dir: data,
                policy: ResiduePolicy::new(wear_rate).map_err(Failure::Invalid)?,
                autosave: Duration::from_secs(autosave_secs),
                catalog: load_catalog(catalog.as_deref())?,
                ui_dir: ui,
            };
            tracing_subscriber::fmt()
                .with_env_filter(
                    tracing_subscriber::EnvFilter::try_from_default_env()
                        .unwrap_or_else(|_| "info".into()),
                )
                .init();
            let runtime = tokio::runtime::Runtime::new().map_err(|e| Failure::Io(e.to_string()))?;
            runtime.block_on(async {
                let hub = Hub::new(config)?;
                slowspace_server::http::serve(hub)
                    .await
                    .map_err(|e| Failure::Io(e.to_string()))
            })
        }
        Command::New {
            name,
            seed,
            width,
            height,
            cell_size,
            data,
        } => {
            let grid = GridSpec::new(width, height, cell_size)
                .map_err(|e| Failure::Invalid(e.to_string()))?;
            let space = SpaceStore::new(data)?.create(&name, seed, grid)?;
            println!("{}", space.space_id);
            Ok(())
        }
        Command::Validate { file } => {
            let bytes = read(&file)?;
            let space = decode_space(&bytes).map_err(|e| Failure::Invalid(e.to_string()))?;
            match validate_space(&space) {
                Ok(()) => Ok(()),
                Err(violations) => {
                    for v in &violations {
                        println!("{v}");
                    }
                    Err(Failure::Invalid(format!(
                        "{} violation(s)",
                        violations.len()
                    )))
                }
            }
        }
        Command::Export { file, out, catalog } => {
            let space = load_space_file(&file)?;
            let catalog = load_catalog(catalog.as_deref())?;
            match export_scene(&space, &catalog, &out) {
                Ok(_) => Ok(()),
                Err(ExportError::Pcg(e)) => Err(Failure::Invalid(e.to_string())),
                Err(e @ ExportError::Io(_)) => Err(Failure::Io(format!("{}: {e}", out.display()))),
            }
        }
        Command::Replay { file, log } => {
            let creation = load_space_file(&file)?;
            let text = String::from_utf8(read(&log)?)
                .map_err(|_| Failure::Invalid(format!("{}: not utf-8", log.display())))?;
            let entries = decode_log(&text)
                .map_err(|e| Failure::Invalid(format!("{}: {e}", log.display())))?;
            let space =
                replay_log(&creation, &entries).map_err(|e| Failure::Invalid(e.to_string()))?;
            println!("{}", scene_hash(&space));
            Ok(())
        }
        Command::Fuzz {
            clients,
            ops,
            seed,
            emit,
        } => {
            if clients == 0 {
                return Err(Failure::Invalid("--clients must be at least 1".into()));
            }
            let report = run_fuzz(&FuzzConfig::new(clients, ops, seed))
                .map_err(|e| Failure::Invalid(e.to_string()))?;
            if let Some(dir) = emit {
                fs::create_dir_all(&dir).map_err(io_failure(&dir))?;
                let creation = dir.join("creation.json");
                fs::write(&creation, slowspace_core::canonical_bytes(&report.creation))
                    .map_err(io_failure(&creation))?;
                let log = dir.join("log.jsonl");
                fs::write(&log, encode_log(&report.log)).map_err(io_failure(&log))?;
            }
            println!("{}", report.server_hash);
            if report.converged() {
                Ok(())
            } else {
                Err(Failure::Invalid(format!(
                    "replicas diverged: server {} replay {} replicas {:?}",
                    report.server_hash, report.replay_hash, report.replica_hashes
                )))
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let (Failure::Invalid(msg) | Failure::Io(msg)) = &f;
            eprintln!("slowspace: {msg}");
            ExitCode::from(f.code())
        }
    }
}
