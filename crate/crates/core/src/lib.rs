//! Device-aware worst-case execution time and energy analysis, with an
//! executable Wi-Fi driver and peripheral model to cross-check the bounds.

pub mod device;
pub mod driver;
pub mod harness;
pub mod ipet;
pub mod lp;
pub mod peripheral;
pub mod program;
pub mod report;
pub mod solver;
pub mod states;
pub mod trace;
pub mod units;

pub use device::{default_esp32c3_model, DeviceGraph, PlatformModel, StateId};
pub use harness::{
    available_energy, dispatch, simulate_lifecycle, Capacitor, HarvestTrace, LifecycleReport, Transaction,
};
pub use ipet::build_ilp;
pub use lp::{export_lp, IlpProblem, Objective};
pub use peripheral::{parse_channel_script, AckWaitState, ChannelScript};
pub use program::{parse_wcir, serialize_wcir, WcirProgram};
pub use report::{analyze_program, Analysis};
pub use report::{render_lines, render_table, row};
pub use solver::{check_certificate, solve, IlpSolution, SolverConfig};
pub use states::{analyze_states, StateMap};
pub use trace::{check_bound, check_scenario, run_traced, EnergyTrace, Scenario};
pub use units::Q;
