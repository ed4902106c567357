//! `wcec`: analyze WCIR programs, simulate the driver, export LP files and
//! run energy-harvesting lifecycles.
//!
//! Exit codes: 0 success, 1 diagnostics or failed checks, 2 usage.

mod analyze;
mod fixtures;
mod lifecycle;
mod simulate;

use clap::{Parser, Subcommand, ValueEnum};
use std::path::PathBuf;
use std::process::ExitCode;
use wcec_core::{AckWaitState, Objective};

#[derive(Parser)]
#[command(name = "wcec", version, about = "Device-aware WCET/WCEC analysis toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum ObjectiveArg {
    Wcet,
    AlwaysOn,
    DeviceAware,
}

impl From<ObjectiveArg> for Objective {
    fn from(o: ObjectiveArg) -> Self {
        match o {
            ObjectiveArg::Wcet => Objective::WcetCycles,
            ObjectiveArg::AlwaysOn => Objective::WcecAlwaysOn,
            ObjectiveArg::DeviceAware => Objective::WcecDeviceAware,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
pub enum PolicyArg {
    Transmitting,
    Standby,
    Sleep,
}

impl From<PolicyArg> for AckWaitState {
    fn from(p: PolicyArg) -> Self {
        match p {
            PolicyArg::Transmitting => AckWaitState::Transmitting,
            PolicyArg::Standby => AckWaitState::Standby,
            PolicyArg::Sleep => AckWaitState::Sleep,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
pub enum FormatArg {
    /// Aligned table, 3 significant figures for time, 4 for energy.
    Table,
    /// `row <name> <cycles> <ns> <aon_pJ> <da_pJ>` with exact fields.
    Lines,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum ScenarioArg {
    Tx,
    Rx,
    Idle,
}

#[derive(Subcommand)]
enum Command {
    /// Parse, validate and bound WCIR programs.
    Analyze {
        /// WCIR files, analyzed in parallel and reported in this order.
        #[arg(required = true)]
        paths: Vec<PathBuf>,
        /// Print only this bound per program.
        #[arg(long, value_enum)]
        objective: Option<ObjectiveArg>,
        /// Device graph file; the ESP32-C3 model by default.
        #[arg(long)]
        device_graph: Option<PathBuf>,
        /// File with a single `platform` line; overrides the graph's.
        #[arg(long)]
        platform: Option<PathBuf>,
        /// Comma-separated entry states replacing each program's own.
        #[arg(long, value_delimiter = ',')]
        entry_states: Option<Vec<String>>,
        #[arg(long, value_enum, default_value = "table")]
        format: FormatArg,
    },
    /// Run a driver scenario on the simulated peripheral and report its
    /// energy trace.
    Simulate {
        #[arg(value_enum)]
        scenario: ScenarioArg,
        /// Channel script.
        #[arg(long)]
        script: PathBuf,
        /// ACK-wait radio state for the TX scenario.
        #[arg(long, value_enum, default_value = "sleep")]
        policy: PolicyArg,
        /// Length of the RX or idle window.
        #[arg(long, default_value_t = 1_000_000)]
        window_ns: u64,
        /// Write the segment trace here.
        #[arg(long)]
        trace_out: Option<PathBuf>,
        /// Fail unless the trace energy is at most this many µJ.
        #[arg(long)]
        check_bound: Option<String>,
        /// Check every driver call against its twin's bounds.
        #[arg(long)]
        check_twins: bool,
    },
    /// Write the IPET problem of a WCIR program in LP format.
    ExportLp {
        path: PathBuf,
        #[arg(long, value_enum)]
        objective: ObjectiveArg,
        #[arg(long)]
        device_graph: Option<PathBuf>,
        /// Output file; stdout by default.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Simulate WCEC-gated dispatch on a harvesting capacitor.
    Lifecycle {
        /// TOML run configuration.
        config: PathBuf,
    },
    /// Regenerate the bundled fixture set.
    GenFixtures {
        #[arg(long, default_value = "fixtures")]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Analyze {
            paths,
            objective,
            device_graph,
            platform,
            entry_states,
            format,
        } => analyze::run(&analyze::Options {
            paths,
            objective: objective.map(Into::into),
            device_graph,
            platform,
            entry_states,
            format,
        }),
        Command::Simulate {
            scenario,
            script,
            policy,
            window_ns,
            trace_out,
            check_bound,
            check_twins,
        } => simulate::run(&simulate::Options {
            scenario,
            script,
            policy: policy.into(),
            window_ns,
            trace_out,
            check_bound,
            check_twins,
        }),
        Command::ExportLp {
            path,
            objective,
            device_graph,
            output,
        } => analyze::export_lp(&path, objective.into(), device_graph.as_deref(), output.as_deref()),
        Command::Lifecycle { config } => lifecycle::run(&config),
        Command::GenFixtures { out } => fixtures::write_all(&out),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
