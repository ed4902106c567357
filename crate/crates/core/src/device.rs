//! Device power-state graph and platform constants.
//!
//! Currents in [`DeviceState`] are the peripheral's own contribution; the
//! CPU baseline from [`PlatformModel`] is added on top by
//! [`DeviceGraph::energy_rate`].

use crate::program::is_identifier;
use crate::units::{parse_decimal, q, q_u64, ratio, Q};
use num_traits::{Signed, Zero};
use std::collections::HashSet;
use std::fmt;
use std::fmt::Write as _;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StateId(pub String);

impl StateId {
    pub fn new(s: impl Into<String>) -> Self {
        StateId(s.into())
    }
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for StateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Symbolic device transition trigger, e.g. `wifi_power_up`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DeviceOp(pub String);

impl DeviceOp {
    pub fn new(s: impl Into<String>) -> Self {
        DeviceOp(s.into())
    }
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for DeviceOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

pub mod ops {
    pub const WIFI_POWER_UP: &str = "wifi_power_up";
    pub const WIFI_POWER_DOWN: &str = "wifi_power_down";
    pub const TX_START: &str = "tx_start";
    pub const TX_DONE: &str = "tx_done";
}

pub mod states {
    pub const SLEEP: &str = "Sleep";
    pub const STANDBY: &str = "Standby";
    pub const TRANSMITTING: &str = "Transmitting";
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeviceState {
    pub id: StateId,
    /// Peripheral current in milliamperes, CPU excluded.
    pub current_ma: Q,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transition {
    pub from: StateId,
    pub op: DeviceOp,
    pub to: StateId,
    /// Extra energy charged whenever the transition fires (joules). Zero in
    /// the default model.
    pub energy_penalty_j: Q,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlatformModel {
    pub clock_hz: u64,
    pub supply_volts: Q,
    pub cpu_current_ma: Q,
}

impl PlatformModel {
    pub fn esp32c3() -> Self {
        PlatformModel {
            clock_hz: 160_000_000,
            supply_volts: ratio(33, 10),
            cpu_current_ma: q(28),
        }
    }

    /// Seconds taken by `cycles` processor cycles.
    pub fn cycles_to_seconds(&self, cycles: u64) -> Q {
        Q::new(cycles.into(), self.clock_hz.into())
    }

    /// Picoseconds per cycle, when that is an integer (6250 at 160 MHz).
    pub fn picos_per_cycle(&self) -> Option<u64> {
        crate::units::PS_PER_S
            .is_multiple_of(self.clock_hz)
            .then(|| crate::units::PS_PER_S / self.clock_hz)
    }
}

/// Which power figure to charge: a concrete state, or the pessimistic
/// "every device at its highest power mode" figure.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PowerMode {
    State(StateId),
    AlwaysOn,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DeviceError {
    #[error("unknown device state `{0}`")]
    UnknownState(StateId),
    #[error("invalid device graph: {0}")]
    Invalid(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// Result of [`DeviceGraph::step`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Step {
    pub state: StateId,
    /// Set when the op has no transition out of the current state.
    pub inert: bool,
    pub energy_penalty_j: Q,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeviceGraph {
    pub states: Vec<DeviceState>,
    pub transitions: Vec<Transition>,
    pub initial: StateId,
    /// Ops that are known to never change state.
    pub inert_ops: Vec<DeviceOp>,
}

impl DeviceGraph {
    pub fn state(&self, id: &StateId) -> Result<&DeviceState, DeviceError> {
        self.states
            .iter()
            .find(|s| &s.id == id)
            .ok_or_else(|| DeviceError::UnknownState(id.clone()))
    }

    pub fn state_index(&self, id: &StateId) -> Option<usize> {
        self.states.iter().position(|s| &s.id == id)
    }

    /// Applies one op. Ops without a transition from `state` leave it
    /// unchanged and report `inert`.
    pub fn step(&self, state: &StateId, op: &DeviceOp) -> Result<Step, DeviceError> {
        self.state(state)?;
        Ok(
            match self.transitions.iter().find(|t| &t.from == state && &t.op == op) {
                Some(t) => Step {
                    state: t.to.clone(),
                    inert: false,
                    energy_penalty_j: t.energy_penalty_j.clone(),
                },
                None => {
                    log::debug!("device op `{op}` is inert in state `{state}`");
                    Step {
                        state: state.clone(),
                        inert: true,
                        energy_penalty_j: Q::zero(),
                    }
                }
            },
        )
    }

    /// Replays `ops` from `start`.
    pub fn replay<'a>(
        &self,
        start: &StateId,
        ops: impl IntoIterator<Item = &'a DeviceOp>,
    ) -> Result<StateId, DeviceError> {
        let mut cur = start.clone();
        for op in ops {
            cur = self.step(&cur, op)?.state;
        }
        Ok(cur)
    }

    pub fn max_current_ma(&self) -> Q {
        self.states
            .iter()
            .map(|s| s.current_ma.clone())
            .max()
            .unwrap_or_else(Q::zero)
    }

    fn mode_current(&self, mode: &PowerMode) -> Result<Q, DeviceError> {
        match mode {
            PowerMode::State(id) => Ok(self.state(id)?.current_ma.clone()),
            PowerMode::AlwaysOn => Ok(self.max_current_ma()),
        }
    }

    /// Total power in watts: `V · (I_cpu + I_state)`.
    pub fn energy_rate(&self, platform: &PlatformModel, mode: &PowerMode) -> Result<Q, DeviceError> {
        let ma = &platform.cpu_current_ma + self.mode_current(mode)?;
        Ok(&platform.supply_volts * ma / q(1000))
    }

    /// Joules consumed by one processor cycle in `mode`.
    pub fn energy_per_cycle(&self, platform: &PlatformModel, mode: &PowerMode) -> Result<Q, DeviceError> {
        Ok(self.energy_rate(platform, mode)? / q_u64(platform.clock_hz))
    }

    /// The op is mentioned by some transition or declared inert.
    pub fn knows_op(&self, op: &DeviceOp) -> bool {
        self.inert_ops.contains(op) || self.transitions.iter().any(|t| &t.op == op)
    }

    pub fn check(&self) -> Result<(), DeviceError> {
        let mut ids = HashSet::new();
        for s in &self.states {
            if !ids.insert(&s.id) {
                return Err(DeviceError::Invalid(format!("duplicate state `{}`", s.id)));
            }
            if s.current_ma.is_negative() {
                return Err(DeviceError::Invalid(format!("negative current in `{}`", s.id)));
            }
        }
        if !ids.contains(&self.initial) {
            return Err(DeviceError::UnknownState(self.initial.clone()));
        }
        let mut keys = HashSet::new();
        for t in &self.transitions {
            for s in [&t.from, &t.to] {
                if !ids.contains(s) {
                    return Err(DeviceError::UnknownState(s.clone()));
                }
            }
            if !keys.insert((&t.from, &t.op)) {
                return Err(DeviceError::Invalid(format!(
                    "nondeterministic: two transitions for ({}, {})",
                    t.from, t.op
                )));
            }
            if t.energy_penalty_j.is_negative() {
                return Err(DeviceError::Invalid("negative transition penalty".into()));
            }
        }
        Ok(())
    }
}

impl PlatformModel {
    pub fn check(&self) -> Result<(), DeviceError> {
        if self.clock_hz == 0 || !self.supply_volts.is_positive() || !self.cpu_current_ma.is_positive() {
            return Err(DeviceError::Invalid(
                "platform constants must be strictly positive".into(),
            ));
        }
        Ok(())
    }
}

/// The three-state ESP32-C3 Wi-Fi model (Sleep 0 mA, Standby 87 mA,
/// Transmitting 285 mA) on a 160 MHz / 3.3 V / 28 mA CPU.
pub fn default_esp32c3_model() -> (DeviceGraph, PlatformModel) {
    let st = |id: &str, ma: i64| DeviceState {
        id: StateId::new(id),
        current_ma: q(ma),
    };
    let tr = |from: &str, op: &str, to: &str| Transition {
        from: StateId::new(from),
        op: DeviceOp::new(op),
        to: StateId::new(to),
        energy_penalty_j: Q::zero(),
    };
    let graph = DeviceGraph {
        states: vec![
            st(states::SLEEP, 0),
            st(states::STANDBY, 87),
            st(states::TRANSMITTING, 285),
        ],
        transitions: vec![
            tr(states::SLEEP, ops::WIFI_POWER_UP, states::STANDBY),
            tr(states::STANDBY, ops::WIFI_POWER_DOWN, states::SLEEP),
            tr(states::STANDBY, ops::TX_START, states::TRANSMITTING),
            tr(states::TRANSMITTING, ops::TX_DONE, states::STANDBY),
        ],
        initial: StateId::new(states::SLEEP),
        inert_ops: Vec::new(),
    };
    (graph, PlatformModel::esp32c3())
}

/// Parses the device-graph text format:
///
/// ```text
/// state Sleep current_ma=0
/// state Standby current_ma=87
/// transition Sleep wifi_power_up Standby [penalty_nj=<decimal>]
/// inert some_op
/// initial Sleep
/// platform clock_hz=160000000 volts=3.3 cpu_ma=28
/// ```
///
/// Without a `platform` line the ESP32-C3 constants are used.
pub fn parse_device_graph(text: &str) -> Result<(DeviceGraph, PlatformModel), DeviceError> {
    let mut states = Vec::new();
    let mut transitions = Vec::new();
    let mut inert = Vec::new();
    let mut initial = None;
    let mut platform = None;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let err = |message: String| DeviceError::Parse { line, message };
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let words: Vec<&str> = content.split_whitespace().collect();
        let ident = |w: Option<&&str>, what: &str| -> Result<String, DeviceError> {
            match w {
                Some(w) if is_identifier(w) => Ok(w.to_string()),
                Some(w) => Err(DeviceError::Parse {
                    line,
                    message: format!("expected {what}, found `{w}`"),
                }),
                None => Err(DeviceError::Parse {
                    line,
                    message: format!("expected {what}"),
                }),
            }
        };
        let keyed = |w: &str, key: &str| -> Result<Q, DeviceError> {
            let v = w
                .strip_prefix(key)
                .and_then(|r| r.strip_prefix('='))
                .ok_or_else(|| DeviceError::Parse {
                    line,
                    message: format!("expected {key}=<decimal>, found `{w}`"),
                })?;
            parse_decimal(v).map_err(|e| DeviceError::Parse {
                line,
                message: e.to_string(),
            })
        };
        match words[0] {
            "state" => {
                let id = ident(words.get(1), "state id")?;
                let ma = keyed(
                    words.get(2).ok_or_else(|| err("missing current_ma".into()))?,
                    "current_ma",
                )?;
                if words.len() > 3 {
                    return Err(err(format!("unexpected `{}`", words[3])));
                }
                states.push(DeviceState {
                    id: StateId(id),
                    current_ma: ma,
                });
            }
            "transition" => {
                let from = ident(words.get(1), "source state")?;
                let op = ident(words.get(2), "op name")?;
                let to = ident(words.get(3), "target state")?;
                let penalty = match words.get(4) {
                    Some(w) => keyed(w, "penalty_nj")? / q(1_000_000_000),
                    None => Q::zero(),
                };
                if words.len() > 5 {
                    return Err(err(format!("unexpected `{}`", words[5])));
                }
                transitions.push(Transition {
                    from: StateId(from),
                    op: DeviceOp(op),
                    to: StateId(to),
                    energy_penalty_j: penalty,
                });
            }
            "inert" => {
                inert.push(DeviceOp(ident(words.get(1), "op name")?));
            }
            "initial" => {
                initial = Some(StateId(ident(words.get(1), "state id")?));
            }
            "platform" => platform = Some(platform_line(&words, line)?),
            other => return Err(err(format!("unknown directive `{other}`"))),
        }
    }
    let graph = DeviceGraph {
        states,
        transitions,
        initial: initial.ok_or(DeviceError::Parse {
            line: text.lines().count().max(1),
            message: "missing `initial` directive".into(),
        })?,
        inert_ops: inert,
    };
    graph.check()?;
    Ok((graph, platform.unwrap_or_else(PlatformModel::esp32c3)))
}

fn platform_line(words: &[&str], line: usize) -> Result<PlatformModel, DeviceError> {
    let err = |message: String| DeviceError::Parse { line, message };
    let keyed = |w: &str, key: &str| -> Result<Q, DeviceError> {
        let v = w
            .strip_prefix(key)
            .and_then(|r| r.strip_prefix('='))
            .ok_or_else(|| err(format!("expected {key}=<decimal>, found `{w}`")))?;
        parse_decimal(v).map_err(|e| err(e.to_string()))
    };
    let mut clock = None;
    let mut volts = None;
    let mut cpu = None;
    for w in &words[1..] {
        if w.starts_with("clock_hz=") {
            let v = keyed(w, "clock_hz")?;
            if !v.is_integer() || !v.is_positive() {
                return Err(err("clock_hz must be a positive integer".into()));
            }
            clock = Some(
                v.to_integer()
                    .try_into()
                    .map_err(|_| err("clock_hz out of range".into()))?,
            );
        } else if w.starts_with("volts=") {
            volts = Some(keyed(w, "volts")?);
        } else if w.starts_with("cpu_ma=") {
            cpu = Some(keyed(w, "cpu_ma")?);
        } else {
            return Err(err(format!("unexpected `{w}`")));
        }
    }
    let p = PlatformModel {
        clock_hz: clock.ok_or_else(|| err("missing clock_hz".into()))?,
        supply_volts: volts.ok_or_else(|| err("missing volts".into()))?,
        cpu_current_ma: cpu.ok_or_else(|| err("missing cpu_ma".into()))?,
    };
    p.check()?;
    Ok(p)
}

/// Parses a file holding exactly one `platform` line (comments allowed).
pub fn parse_platform(text: &str) -> Result<PlatformModel, DeviceError> {
    let mut found = None;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let words: Vec<&str> = content.split_whitespace().collect();
        if words[0] != "platform" || found.is_some() {
            return Err(DeviceError::Parse {
                line,
                message: "expected a single `platform` line".into(),
            });
        }
        found = Some(platform_line(&words, line)?);
    }
    found.ok_or(DeviceError::Parse {
        line: 1,
        message: "missing `platform` line".into(),
    })
}

pub fn serialize_device_graph(graph: &DeviceGraph, platform: &PlatformModel) -> String {
    use crate::units::format_exact;
    let mut out = String::new();
    for s in &graph.states {
        let _ = writeln!(out, "state {} current_ma={}", s.id, format_exact(&s.current_ma));
    }
    for t in &graph.transitions {
        let _ = write!(out, "transition {} {} {}", t.from, t.op, t.to);
        if !t.energy_penalty_j.is_zero() {
            let _ = write!(
                out,
                " penalty_nj={}",
                format_exact(&(&t.energy_penalty_j * q(1_000_000_000)))
            );
        }
        out.push('\n');
    }
    for op in &graph.inert_ops {
        let _ = writeln!(out, "inert {op}");
    }
    let _ = writeln!(out, "initial {}", graph.initial);
    let _ = writeln!(
        out,
        "platform clock_hz={} volts={} cpu_ma={}",
        platform.clock_hz,
        format_exact(&platform.supply_volts),
        format_exact(&platform.cpu_current_ma)
    );
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(id: &str) -> StateId {
        StateId::new(id)
    }
    fn op(o: &str) -> DeviceOp {
        DeviceOp::new(o)
    }

    #[test]
    fn default_model_shape() {
        let (g, p) = default_esp32c3_model();
        assert_eq!(g.states.len(), 3);
        assert_eq!(g.transitions.len(), 4);
        assert_eq!(g.initial, s("Sleep"));
        assert!(g.check().is_ok());
        assert_eq!(p.clock_hz, 160_000_000);
        assert_eq!(p.picos_per_cycle(), Some(6250));
    }

    #[test]
    fn power_figures_by_hand() {
        let (g, p) = default_esp32c3_model();
        let w = |m: PowerMode| g.energy_rate(&p, &m).unwrap();
        // 3.3 V * 28 mA, 3.3 V * 115 mA, 3.3 V * 313 mA
        assert_eq!(w(PowerMode::State(s("Sleep"))), ratio(924, 10_000));
        assert_eq!(w(PowerMode::State(s("Standby"))), ratio(3795, 10_000));
        assert_eq!(w(PowerMode::State(s("Transmitting"))), ratio(10329, 10_000));
        assert_eq!(w(PowerMode::AlwaysOn), ratio(10329, 10_000));
    }

    #[test]
    fn always_on_cycle_energy_is_exact() {
        let (g, p) = default_esp32c3_model();
        let e = g.energy_per_cycle(&p, &PowerMode::AlwaysOn).unwrap();
        // 6.455625 nJ
        assert_eq!(e, ratio(6_455_625, 1_000_000_000_000_000));
        let deinit = e * q(48);
        assert_eq!(crate::units::format_sig(&(deinit * q(1_000_000)), 4), "0.3099");
    }

    #[test]
    fn rate_ordering() {
        let (g, p) = default_esp32c3_model();
        let r = |id: &str| g.energy_rate(&p, &PowerMode::State(s(id))).unwrap();
        assert!(r("Sleep") < r("Standby"));
        assert!(r("Standby") < r("Transmitting"));
        assert_eq!(r("Transmitting"), g.energy_rate(&p, &PowerMode::AlwaysOn).unwrap());
    }

    #[test]
    fn stepping() {
        let (g, _) = default_esp32c3_model();
        let st = g.step(&s("Sleep"), &op("wifi_power_up")).unwrap();
        assert_eq!(st.state, s("Standby"));
        assert!(!st.inert);
        let st = g.step(&s("Sleep"), &op("tx_done")).unwrap();
        assert_eq!(st.state, s("Sleep"));
        assert!(st.inert);
        assert_eq!(g.step(&s("Standby"), &op("tx_start")).unwrap().state, s("Transmitting"));
        assert_eq!(
            g.step(&s("Nowhere"), &op("tx_start")),
            Err(DeviceError::UnknownState(s("Nowhere")))
        );
        assert!(g
            .energy_rate(&PlatformModel::esp32c3(), &PowerMode::State(s("Nowhere")))
            .is_err());
    }

    #[test]
    fn text_round_trip() {
        let (g, p) = default_esp32c3_model();
        let text = serialize_device_graph(&g, &p);
        let (g2, p2) = parse_device_graph(&text).unwrap();
        assert_eq!(g, g2);
        assert_eq!(p, p2);
    }

    #[test]
    fn text_errors() {
        assert!(parse_device_graph("state A current_ma=1\ninitial B").is_err());
        assert!(parse_device_graph("state A current_ma=x\ninitial A").is_err());
        assert!(parse_device_graph("state A current_ma=1\ntransition A go A\ntransition A go A\ninitial A").is_err());
        assert!(parse_device_graph("state A current_ma=1").is_err());
        assert!(parse_device_graph("state A current_ma=-1\ninitial A").is_err());
        let (g, p) = parse_device_graph(
            "state A current_ma=1.5\ninert poke\ninitial A\nplatform clock_hz=1000 volts=2 cpu_ma=1",
        )
        .unwrap();
        assert!(g.knows_op(&op("poke")));
        assert_eq!(p.clock_hz, 1000);
    }
}
