//! Energy integration over simulated runs, and bound checks against the
//! analysis.

use crate::device::{DeviceError, DeviceGraph, PlatformModel, PowerMode, StateId};
use crate::driver::frames::{encapsulate_from_ap, Frame8023, MacAddr};
use crate::driver::twins::twin_for;
use crate::driver::{CallRecord, DriverContext, DriverError, TxOutcome};
use crate::peripheral::{AckWaitState, ChannelScript, PeripheralState};
use crate::report::{analyze_program, Analysis, AnalysisError};
use crate::solver::SolverConfig;
use crate::units::{format_exact, format_sig, micro, q_u64, PS_PER_NS, PS_PER_S, Q};
use num_traits::Zero;
use std::collections::BTreeMap;
use std::fmt::Write as _;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Segment {
    pub start_ps: u64,
    pub end_ps: u64,
    pub state: StateId,
    /// Total power drawn in `state`, watts.
    pub power_w: Q,
    /// Transition penalty paid when the segment starts, joules.
    pub penalty_j: Q,
}

impl Segment {
    pub fn duration_ps(&self) -> u64 {
        self.end_ps - self.start_ps
    }

    pub fn energy(&self) -> Q {
        &self.power_w * q_u64(self.duration_ps()) / q_u64(PS_PER_S) + &self.penalty_j
    }
}

/// Contiguous, non-overlapping segments; `total_energy` is the exact sum of
/// segment energies.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct EnergyTrace {
    pub segments: Vec<Segment>,
    pub total_cycles: u64,
    pub per_state: BTreeMap<StateId, Q>,
    pub total_energy: Q,
}

impl EnergyTrace {
    pub fn empty() -> Self {
        EnergyTrace::default()
    }

    /// Trace of the peripheral's device state over `[start_ps, end_ps)`.
    /// Transitions logged at exactly `start_ps` belong to the window, those
    /// at `end_ps` do not.
    pub fn from_window(
        periph: &PeripheralState,
        platform: &PlatformModel,
        start_ps: u64,
        end_ps: u64,
    ) -> Result<Self, DeviceError> {
        let graph = periph.graph();
        let mut cur = graph.initial.clone();
        let mut marks: Vec<(u64, StateId, Q)> = Vec::new();
        for change in periph.op_log() {
            if change.time_ps < start_ps {
                cur = change.to.clone();
            } else if change.time_ps < end_ps {
                let penalty = graph.step(&change.from, &change.op)?.energy_penalty_j;
                marks.push((change.time_ps, change.to.clone(), penalty));
            }
        }
        let mut trace = EnergyTrace::empty();
        let mut seg_start = start_ps;
        let mut penalty = Q::zero();
        for (t, to, p) in marks {
            trace.push(graph, platform, seg_start, t, &cur, std::mem::take(&mut penalty))?;
            seg_start = t;
            cur = to;
            penalty = p;
        }
        trace.push(graph, platform, seg_start, end_ps, &cur, penalty)?;
        trace.total_cycles = cycles_in(platform, end_ps - start_ps);
        Ok(trace)
    }

    fn push(
        &mut self,
        graph: &DeviceGraph,
        platform: &PlatformModel,
        start_ps: u64,
        end_ps: u64,
        state: &StateId,
        penalty_j: Q,
    ) -> Result<(), DeviceError> {
        if end_ps == start_ps && penalty_j.is_zero() {
            return Ok(());
        }
        let seg = Segment {
            start_ps,
            end_ps,
            state: state.clone(),
            power_w: graph.energy_rate(platform, &PowerMode::State(state.clone()))?,
            penalty_j,
        };
        self.add(seg);
        Ok(())
    }

    fn add(&mut self, seg: Segment) {
        let e = seg.energy();
        *self.per_state.entry(seg.state.clone()).or_insert_with(Q::zero) += &e;
        self.total_energy += e;
        self.segments.push(seg);
    }

    pub fn start_ps(&self) -> Option<u64> {
        self.segments.first().map(|s| s.start_ps)
    }

    pub fn end_ps(&self) -> Option<u64> {
        self.segments.last().map(|s| s.end_ps)
    }

    pub fn time_in_state_ps(&self, state: &StateId) -> u64 {
        self.segments
            .iter()
            .filter(|s| &s.state == state)
            .map(|s| s.duration_ps())
            .sum()
    }

    /// `self` followed by `other`, shifted to start where `self` ends.
    /// Energies and cycles add exactly.
    pub fn concat(&self, other: &EnergyTrace) -> EnergyTrace {
        let mut out = self.clone();
        let base = self.end_ps().unwrap_or(0);
        let origin = other.start_ps().unwrap_or(0);
        for s in &other.segments {
            let mut s = s.clone();
            s.start_ps = s.start_ps - origin + base;
            s.end_ps = s.end_ps - origin + base;
            out.add(s);
        }
        out.total_cycles = self.total_cycles + other.total_cycles;
        out
    }

    /// `segment <start_ns> <end_ns> <state>` lines plus a summary block, with
    /// exact decimal times and picojoule energies.
    pub fn export(&self) -> String {
        let ns = |ps: u64| format_exact(&(q_u64(ps) / q_u64(PS_PER_NS)));
        let pj = |j: &Q| format_exact(&(j * q_u64(PS_PER_S)));
        let mut out = String::new();
        for s in &self.segments {
            let _ = writeln!(out, "segment {} {} {}", ns(s.start_ps), ns(s.end_ps), s.state);
        }
        let _ = writeln!(out, "cycles {}", self.total_cycles);
        for (state, e) in &self.per_state {
            let _ = writeln!(out, "energy_pj {state} {}", pj(e));
        }
        let _ = writeln!(out, "total_energy_pj {}", pj(&self.total_energy));
        let _ = writeln!(out, "total_energy_uj {}", format_sig(&micro(&self.total_energy), 4));
        out
    }
}

fn cycles_in(platform: &PlatformModel, ps: u64) -> u64 {
    let per = PS_PER_S / platform.clock_hz.max(1);
    ps.div_ceil(per.max(1))
}

/// Outcome of comparing a simulated energy to an analyzed bound.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoundCheck {
    pub pass: bool,
    /// `bound − total`, zero on failure.
    pub slack: Q,
    /// `total − bound`, zero on success.
    pub excess: Q,
}

pub fn check_bound(trace: &EnergyTrace, bound: &Q) -> BoundCheck {
    let pass = &trace.total_energy <= bound;
    let diff = bound - &trace.total_energy;
    if pass {
        BoundCheck {
            pass,
            slack: diff,
            excess: Q::zero(),
        }
    } else {
        BoundCheck {
            pass,
            slack: Q::zero(),
            excess: -diff,
        }
    }
}

/// Station address used by the bundled scenarios.
pub const STATION: MacAddr = [0x02, 0x00, 0x00, 0x00, 0x00, 0x01];
/// Access point used by the bundled scenarios.
pub const ACCESS_POINT: MacAddr = [0x02, 0x00, 0x00, 0x00, 0x00, 0xa1];
/// Peer behind the access point.
pub const PEER: MacAddr = [0x02, 0x00, 0x00, 0x00, 0x00, 0x42];

/// An 802.11 frame from the access point to the station carrying `payload`.
pub fn inbound_frame(payload: Vec<u8>) -> Vec<u8> {
    let f = Frame8023::new(STATION, PEER, 0x0800, payload).expect("payload within limits");
    encapsulate_from_ap(&f, ACCESS_POINT).to_bytes()
}

/// The frame the TX scenario sends.
pub fn outbound_frame() -> Frame8023 {
    Frame8023::new(PEER, STATION, 0x0800, (0..64u8).collect()).expect("64-byte payload")
}

/// A driver entry point run under a channel script.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    /// Radio asleep, CPU busy-waiting.
    Idle { ns: u64 },
    /// Power up, then one run of the TX task (traced).
    TxTask { policy: AckWaitState },
    /// Power up, interrupts and RX, then serve the script's RX injections
    /// for `window_ns` (traced after setup).
    RxBurst { window_ns: u64 },
}

impl Scenario {
    pub fn policy(&self) -> AckWaitState {
        match self {
            Scenario::TxTask { policy } => *policy,
            _ => AckWaitState::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct TracedRun {
    pub scenario: Scenario,
    pub trace: EnergyTrace,
    /// Every driver call of the run, setup included.
    pub calls: Vec<CallRecord>,
    pub tx_outcome: Option<TxOutcome>,
    pub delivered_frames: usize,
}

#[derive(Debug, thiserror::Error)]
pub enum TraceError {
    #[error(transparent)]
    Driver(#[from] DriverError),
    #[error(transparent)]
    Device(#[from] DeviceError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error("no twin for function `{0}`")]
    NoTwin(String),
}

pub fn run_traced(scenario: Scenario, script: &ChannelScript) -> Result<TracedRun, TraceError> {
    let mut ctx = DriverContext::esp32c3(scenario.policy(), script.clone())?;
    ctx.set_bssid(ACCESS_POINT);
    run_on(&mut ctx, scenario)
}

/// A call that escaped its twin's bounds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub function: String,
    pub what: String,
}

/// Analyzed twins, keyed by function name.
#[derive(Debug)]
pub struct TwinBounds {
    policy: AckWaitState,
    cache: BTreeMap<String, (crate::program::WcirProgram, Analysis)>,
}

impl TwinBounds {
    pub fn new(policy: AckWaitState) -> Self {
        TwinBounds {
            policy,
            cache: BTreeMap::new(),
        }
    }

    pub fn get(&mut self, function: &str) -> Result<&(crate::program::WcirProgram, Analysis), TraceError> {
        let policy = self.policy;
        if !self.cache.contains_key(function) {
            let twin = twin_for(function, policy).ok_or_else(|| TraceError::NoTwin(function.into()))?;
            let (g, pl) = crate::device::default_esp32c3_model();
            let a = analyze_program(&twin, &g, &pl, &SolverConfig::default())?;
            self.cache.insert(function.to_string(), (twin, a));
        }
        Ok(&self.cache[function])
    }
}

/// Checks every call of `run` against its function's twin: the recorded
/// path must be a path of the twin, and the call's cycles and window
/// energy must not exceed the twin's WCET and device-aware WCEC.
pub fn check_calls(
    run: &TracedRun,
    periph_log: &PeripheralState,
    bounds: &mut TwinBounds,
) -> Result<Vec<Violation>, TraceError> {
    let platform = PlatformModel::esp32c3();
    let mut out = Vec::new();
    for call in &run.calls {
        let (twin, a) = bounds.get(call.function)?;
        if let Err(e) = crate::driver::twins::check_path(twin, &call.path) {
            out.push(Violation {
                function: call.function.into(),
                what: format!("path: {e}"),
            });
        }
        if call.cycles > a.wcet_cycles {
            out.push(Violation {
                function: call.function.into(),
                what: format!("cycles {} > {}", call.cycles, a.wcet_cycles),
            });
        }
        let t = EnergyTrace::from_window(periph_log, &platform, call.start_ps, call.end_ps)?;
        let check = check_bound(&t, &a.wcec_device_aware);
        if !check.pass {
            out.push(Violation {
                function: call.function.into(),
                what: format!(
                    "energy exceeds bound by {} pJ",
                    format_exact(&(check.excess * q_u64(PS_PER_S)))
                ),
            });
        }
    }
    Ok(out)
}

/// Runs `scenario` and checks every call against its twin. For the TX task
/// the whole trace is also checked against the task twin.
pub fn check_scenario(
    scenario: Scenario,
    script: &ChannelScript,
    bounds: &mut TwinBounds,
) -> Result<(TracedRun, Vec<Violation>), TraceError> {
    let mut ctx = DriverContext::esp32c3(scenario.policy(), script.clone())?;
    ctx.set_bssid(ACCESS_POINT);
    let run = run_on(&mut ctx, scenario)?;
    let mut violations = check_calls(&run, &ctx.periph, bounds)?;
    if let Scenario::TxTask { .. } = scenario {
        let (_, a) = bounds.get(crate::driver::tables::TX_TASK_NAME)?;
        if run.trace.total_cycles > a.wcet_cycles {
            violations.push(Violation {
                function: "tx_task".into(),
                what: format!("trace cycles {} > {}", run.trace.total_cycles, a.wcet_cycles),
            });
        }
        if !check_bound(&run.trace, &a.wcec_device_aware).pass {
            violations.push(Violation {
                function: "tx_task".into(),
                what: "trace energy exceeds device-aware bound".into(),
            });
        }
    }
    Ok((run, violations))
}

fn run_on(ctx: &mut DriverContext, scenario: Scenario) -> Result<TracedRun, TraceError> {
    let platform = ctx.platform().clone();
    let (trace, tx_outcome) = match scenario {
        Scenario::Idle { ns } => {
            ctx.idle(ns * PS_PER_NS);
            (
                EnergyTrace::from_window(&ctx.periph, &platform, 0, ns * PS_PER_NS)?,
                None,
            )
        }
        Scenario::TxTask { .. } => {
            ctx.wifi_hw_init()?;
            let report = ctx.tx_task_run(&outbound_frame())?;
            (report.trace, Some(report.outcome))
        }
        Scenario::RxBurst { window_ns } => {
            ctx.wifi_hw_init()?;
            ctx.wifi_setup_interrupt()?;
            ctx.wifi_setup_rx()?;
            let start = ctx.now_ps();
            ctx.run_until(start + window_ns * PS_PER_NS)?;
            (
                EnergyTrace::from_window(&ctx.periph, &platform, start, ctx.now_ps())?,
                None,
            )
        }
    };
    Ok(TracedRun {
        scenario,
        trace,
        calls: ctx.calls().to_vec(),
        tx_outcome,
        delivered_frames: ctx.delivered.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::device::{default_esp32c3_model, states};
    use crate::peripheral::{regs, PeripheralConfig};
    use crate::units::ratio;

    fn powered_up_at_10ns() -> PeripheralState {
        let (g, _) = default_esp32c3_model();
        let mut p = PeripheralState::new(g, PeripheralConfig::default(), ChannelScript::default()).unwrap();
        p.advance(10_000);
        p.mmio_write(regs::POWER, regs::POWER_BIT).unwrap();
        p.advance(10_000);
        p
    }

    #[test]
    fn window_segments_and_energy() {
        let p = powered_up_at_10ns();
        let pl = PlatformModel::esp32c3();
        let t = EnergyTrace::from_window(&p, &pl, 0, 20_000).unwrap();
        let got: Vec<_> = t
            .segments
            .iter()
            .map(|s| (s.start_ps, s.end_ps, s.state.as_str()))
            .collect();
        assert_eq!(got, vec![(0, 10_000, states::SLEEP), (10_000, 20_000, states::STANDBY)]);
        // 92.4 mW and 379.5 mW for 10 ns each
        assert_eq!(t.total_energy, ratio(4719, 1_000_000_000_000));
        assert_eq!(t.total_cycles, 4);
        assert_eq!(t.time_in_state_ps(&StateId::new(states::STANDBY)), 10_000);

        let late = EnergyTrace::from_window(&p, &pl, 10_000, 20_000).unwrap();
        assert_eq!(late.segments.len(), 1);
        assert_eq!(late.segments[0].state.as_str(), states::STANDBY);
        let early = EnergyTrace::from_window(&p, &pl, 0, 10_000).unwrap();
        assert_eq!(early.segments.len(), 1);
        assert_eq!(early.concat(&late), t);
    }

    #[test]
    fn bound_checks_and_export() {
        let p = powered_up_at_10ns();
        let t = EnergyTrace::from_window(&p, &PlatformModel::esp32c3(), 0, 20_000).unwrap();
        let exact = t.total_energy.clone();
        assert!(check_bound(&t, &exact).pass);
        let low = check_bound(&t, &(&exact - ratio(1, 1_000_000_000_000)));
        assert!(!low.pass && low.excess == ratio(1, 1_000_000_000_000) && low.slack.is_zero());
        let text = t.export();
        assert!(text.starts_with("segment 0 10 Sleep\nsegment 10 20 Standby\ncycles 4\n"));
        assert!(text.contains("total_energy_pj 4719\n"));
    }

    #[test]
    fn tx_task_spends_the_airtime_transmitting() {
        let script = ChannelScript {
            ack_latency_ns: vec![50_000],
            ..ChannelScript::default()
        };
        let run = run_traced(
            Scenario::TxTask {
                policy: AckWaitState::Sleep,
            },
            &script,
        )
        .unwrap();
        assert_eq!(run.tx_outcome, Some(TxOutcome::Acked));
        assert_eq!(
            run.trace.time_in_state_ps(&StateId::new(states::TRANSMITTING)),
            1_450_000
        );
        let mut bounds = TwinBounds::new(AckWaitState::Sleep);
        let (_, violations) = check_scenario(
            Scenario::TxTask {
                policy: AckWaitState::Sleep,
            },
            &script,
            &mut bounds,
        )
        .unwrap();
        assert!(violations.is_empty(), "{violations:?}");
    }
}
