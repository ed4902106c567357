//! Capacitor-backed supply and a reactive dispatcher that admits a
//! transaction only when its analyzed WCEC fits the stored energy.
//!
//! Energy is tracked exactly as the charge above the brown-out threshold,
//! `E = C/2 (v_now^2 - v_min^2)`. Voltage is derived from it on demand.

use crate::driver::tables::TX_TASK_NAME;
use crate::peripheral::{AckWaitState, ChannelScript};
use crate::report::Analysis;
use crate::trace::{run_traced, EnergyTrace, Scenario, TwinBounds};
use crate::units::{format_exact, format_sig, micro, parse_decimal, q_u64, ratio, to_f64, PS_PER_NS, PS_PER_S, Q};
use num_traits::{Signed, ToPrimitive, Zero};
use std::fmt::Write as _;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum HarnessError {
    #[error("capacitor: {0}")]
    Capacitor(String),
    #[error("transaction `{0}`: {1}")]
    Transaction(String, String),
    #[error("harvest trace line {line}: {message}")]
    Harvest { line: usize, message: String },
    #[error("transaction setup: {0}")]
    Setup(String),
}

/// Invariant: `0 <= energy <= headroom`, `v_min < v_max`, `capacitance > 0`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Capacitor {
    capacitance: Q,
    v_min: Q,
    v_max: Q,
    energy: Q,
}

impl Capacitor {
    pub fn new(capacitance_f: Q, v_now: Q, v_min: Q, v_max: Q) -> Result<Self, HarnessError> {
        let bad = |m: &str| Err(HarnessError::Capacitor(m.into()));
        if !capacitance_f.is_positive() {
            return bad("capacitance must be positive");
        }
        if v_min.is_negative() || v_min >= v_max {
            return bad("need 0 <= v_min < v_max");
        }
        if v_now < v_min || v_now > v_max {
            return bad("need v_min <= v_now <= v_max");
        }
        let energy = energy_between(&capacitance_f, &v_now, &v_min);
        Ok(Capacitor {
            capacitance: capacitance_f,
            v_min,
            v_max,
            energy,
        })
    }

    /// 100 µF charged to 3.3 V with a 2.8 V floor.
    pub fn demo() -> Self {
        Capacitor::new(ratio(1, 10_000), ratio(33, 10), ratio(28, 10), ratio(33, 10)).expect("valid demo capacitor")
    }

    /// Same capacitor, discharged to the floor.
    pub fn emptied(&self) -> Self {
        Capacitor {
            energy: Q::zero(),
            ..self.clone()
        }
    }

    pub fn capacitance(&self) -> &Q {
        &self.capacitance
    }

    pub fn v_min(&self) -> &Q {
        &self.v_min
    }

    pub fn v_max(&self) -> &Q {
        &self.v_max
    }

    /// Energy above the brown-out threshold, joules.
    pub fn stored(&self) -> &Q {
        &self.energy
    }

    /// Largest storable energy above the threshold, joules.
    pub fn headroom(&self) -> Q {
        energy_between(&self.capacitance, &self.v_max, &self.v_min)
    }

    pub fn v_now(&self) -> f64 {
        let vmin = to_f64(&self.v_min);
        (vmin * vmin + 2.0 * to_f64(&self.energy) / to_f64(&self.capacitance)).sqrt()
    }
}

fn energy_between(c: &Q, hi: &Q, lo: &Q) -> Q {
    c * (hi * hi - lo * lo) / q_u64(2)
}

pub fn available_energy(cap: &Capacitor) -> Q {
    cap.energy.clone()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    Run,
    Wait,
}

/// RUN iff the bound fits the stored energy. Harvest that may arrive during
/// the run is not counted.
pub fn dispatch(cap: &Capacitor, txn: &Transaction) -> Decision {
    if txn.wcec <= cap.energy {
        Decision::Run
    } else {
        Decision::Wait
    }
}

/// Constant-power slice of a simulated run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LoadSlice {
    pub duration_ps: u64,
    pub power_w: Q,
    /// Paid when the slice starts, joules.
    pub penalty_j: Q,
}

/// The simulated energy demand of one run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Profile {
    pub slices: Vec<LoadSlice>,
}

impl Profile {
    pub fn from_trace(trace: &EnergyTrace) -> Self {
        Profile {
            slices: trace
                .segments
                .iter()
                .map(|s| LoadSlice {
                    duration_ps: s.duration_ps(),
                    power_w: s.power_w.clone(),
                    penalty_j: s.penalty_j.clone(),
                })
                .collect(),
        }
    }

    pub fn duration_ps(&self) -> u64 {
        self.slices.iter().map(|s| s.duration_ps).sum()
    }

    pub fn energy(&self) -> Q {
        self.slices.iter().fold(Q::zero(), |acc, s| {
            acc + &s.power_w * q_u64(s.duration_ps) / q_u64(PS_PER_S) + &s.penalty_j
        })
    }
}

/// An atomic unit of work. Successive runs replay `profiles` cyclically.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transaction {
    pub name: String,
    /// Analyzed bound, joules.
    pub wcec: Q,
    pub wcet_ps: u64,
    pub profiles: Vec<Profile>,
}

impl Transaction {
    pub fn new(name: impl Into<String>, wcec: Q, wcet_ps: u64, profiles: Vec<Profile>) -> Result<Self, HarnessError> {
        let name = name.into();
        if !wcec.is_positive() {
            return Err(HarnessError::Transaction(name, "wcec must be positive".into()));
        }
        if profiles.is_empty() {
            return Err(HarnessError::Transaction(name, "needs at least one profile".into()));
        }
        Ok(Transaction {
            name,
            wcec,
            wcet_ps,
            profiles,
        })
    }

    /// Gated by the device-aware bound of `analysis`.
    pub fn from_analysis(analysis: &Analysis, traces: &[EnergyTrace]) -> Result<Self, HarnessError> {
        let wcet_ps = analysis.wcet_seconds() * q_u64(PS_PER_S);
        let wcet_ps = wcet_ps.ceil().to_integer().to_u64().unwrap_or(u64::MAX);
        Transaction::new(
            analysis.name.clone(),
            analysis.wcec_device_aware.clone(),
            wcet_ps,
            traces.iter().map(Profile::from_trace).collect(),
        )
    }
}

/// The TX task under `policy`, gated by its twin's device-aware bound and
/// replaying one simulated run per script.
pub fn tx_task_transaction(policy: AckWaitState, scripts: &[ChannelScript]) -> Result<Transaction, HarnessError> {
    let setup = |e: String| HarnessError::Setup(e);
    let mut bounds = TwinBounds::new(policy);
    let (_, analysis) = bounds.get(TX_TASK_NAME).map_err(|e| setup(e.to_string()))?;
    let traces = scripts
        .iter()
        .map(|s| run_traced(Scenario::TxTask { policy }, s).map(|r| r.trace))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| setup(e.to_string()))?;
    Transaction::from_analysis(analysis, &traces)
}

/// Piecewise-constant input power: `points[i].1` watts from `points[i].0`
/// until the next point. Zero before the first point.
/// Invariant: strictly increasing times, non-negative powers.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct HarvestTrace {
    points: Vec<(u64, Q)>,
}

impl HarvestTrace {
    pub fn new(points: Vec<(u64, Q)>) -> Result<Self, HarnessError> {
        for (i, (t, p)) in points.iter().enumerate() {
            let line = i + 1;
            if p.is_negative() {
                return Err(HarnessError::Harvest {
                    line,
                    message: "negative power".into(),
                });
            }
            if i > 0 && *t <= points[i - 1].0 {
                return Err(HarnessError::Harvest {
                    line,
                    message: "times must strictly increase".into(),
                });
            }
        }
        Ok(HarvestTrace { points })
    }

    pub fn constant(watts: Q) -> Self {
        HarvestTrace::new(vec![(0, watts)]).expect("non-negative constant")
    }

    pub fn points(&self) -> &[(u64, Q)] {
        &self.points
    }

    pub fn power_at(&self, t_ps: u64) -> Q {
        let i = self.points.partition_point(|(t, _)| *t <= t_ps);
        if i == 0 {
            Q::zero()
        } else {
            self.points[i - 1].1.clone()
        }
    }

    /// First breakpoint strictly after `t_ps`.
    pub fn next_change(&self, t_ps: u64) -> Option<u64> {
        let i = self.points.partition_point(|(t, _)| *t <= t_ps);
        self.points.get(i).map(|(t, _)| *t)
    }

    /// `harvest <time_ns> <microwatts>` lines; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, HarnessError> {
        let mut points: Vec<(u64, Q)> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let err = |message: String| HarnessError::Harvest { line, message };
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let words: Vec<&str> = content.split_whitespace().collect();
            let ["harvest", t, uw] = words.as_slice() else {
                return Err(err(format!(
                    "expected `harvest <time_ns> <microwatts>`, got `{content}`"
                )));
            };
            let t: u64 = t.parse().map_err(|_| err(format!("invalid time `{t}`")))?;
            let ps = t.checked_mul(PS_PER_NS).ok_or_else(|| err("time overflows".into()))?;
            let p = parse_decimal(uw).map_err(|e| err(e.to_string()))? / q_u64(1_000_000);
            if p.is_negative() {
                return Err(err("negative power".into()));
            }
            if points.last().is_some_and(|(prev, _)| *prev >= ps) {
                return Err(err("times must strictly increase".into()));
            }
            points.push((ps, p));
        }
        Ok(HarvestTrace { points })
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (t, p) in &self.points {
            let _ = writeln!(
                out,
                "harvest {} {}",
                t / PS_PER_NS,
                format_exact(&(p * q_u64(1_000_000)))
            );
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BrownOut {
    pub time_ps: u64,
    pub transaction: String,
}

/// One charge-discharge period: charging from `charge_start_ps` until the
/// gate opens at `run_start_ps`, then runs until the gate closes at
/// `end_ps`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Period {
    pub charge_start_ps: u64,
    pub run_start_ps: u64,
    pub end_ps: u64,
    pub completions: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LifecycleReport {
    pub horizon_ps: u64,
    pub dispatches: u64,
    pub completions: u64,
    /// Per transaction, in input order.
    pub completions_by_txn: Vec<(String, u64)>,
    /// WAIT decisions.
    pub waits: u64,
    pub brownouts: Vec<BrownOut>,
    /// Periods whose gate opened inside the horizon.
    pub periods: Vec<Period>,
    /// Harvest that arrived while the capacitor was full was lost.
    pub harvested_j: Q,
    pub consumed_j: Q,
    pub final_energy_j: Q,
    pub final_v: f64,
    /// The queue head could never be admitted again.
    pub starved: bool,
}

impl LifecycleReport {
    pub fn render(&self) -> String {
        let uj = |v: &Q| format_sig(&micro(v), 4);
        let mut out = String::new();
        let _ = writeln!(
            out,
            "horizon_ns {}",
            format_exact(&(q_u64(self.horizon_ps) / q_u64(PS_PER_NS)))
        );
        let _ = writeln!(out, "dispatches {}", self.dispatches);
        let _ = writeln!(out, "completions {}", self.completions);
        for (name, n) in &self.completions_by_txn {
            let _ = writeln!(out, "completions[{name}] {n}");
        }
        let _ = writeln!(out, "waits {}", self.waits);
        let _ = writeln!(out, "brownouts {}", self.brownouts.len());
        for b in &self.brownouts {
            let _ = writeln!(
                out,
                "brownout {} at {} ns",
                b.transaction,
                format_exact(&(q_u64(b.time_ps) / q_u64(PS_PER_NS)))
            );
        }
        let _ = writeln!(out, "periods {}", self.periods.len());
        let min = self.periods.iter().map(|p| p.completions).min().unwrap_or(0);
        let _ = writeln!(out, "min_completions_per_period {min}");
        let _ = writeln!(out, "harvested_uj {}", uj(&self.harvested_j));
        let _ = writeln!(out, "consumed_uj {}", uj(&self.consumed_j));
        let _ = writeln!(out, "final_energy_uj {}", uj(&self.final_energy_j));
        let _ = writeln!(out, "final_v {:.4}", self.final_v);
        let _ = writeln!(out, "starved {}", self.starved);
        out
    }
}

enum Charge {
    Reached,
    Horizon,
    /// The target exceeds the headroom, or harvest has stopped for good.
    Never,
}

/// Mutable simulation state. `energy` stays in `[0, headroom]` except when a
/// brown-out is recorded.
struct Sim<'a> {
    harvest: &'a HarvestTrace,
    headroom: Q,
    energy: Q,
    now: u64,
    harvested: Q,
    consumed: Q,
}

impl Sim<'_> {
    /// Advances `duration` ps under `load` watts, charging from the harvest.
    /// Returns the brown-out time if the stored energy goes negative.
    fn advance(&mut self, duration: u64, load: &Q) -> Option<u64> {
        let end = self.now + duration;
        while self.now < end {
            let until = self.harvest.next_change(self.now).map_or(end, |t| t.min(end));
            let dt = q_u64(until - self.now) / q_u64(PS_PER_S);
            let p_in = self.harvest.power_at(self.now);
            let net = &p_in - load;
            // net is constant over the piece, so the minimum sits at an end
            // point and the clamp at the top cannot cause a brown-out
            let next = &self.energy + &net * &dt;
            if next.is_negative() {
                let t = &self.energy / -net * q_u64(PS_PER_S);
                let at = self.now + t.floor().to_integer().to_u64().unwrap_or(0);
                self.consumed += load * &dt;
                self.energy = Q::zero();
                self.now = until;
                return Some(at);
            }
            let stored = next.clone().min(self.headroom.clone());
            self.harvested += &p_in * &dt - (&next - &stored);
            self.consumed += load * &dt;
            self.energy = stored;
            self.now = until;
        }
        None
    }

    /// Idles until the stored energy reaches `target` or time reaches
    /// `horizon`.
    fn charge_to(&mut self, target: &Q, horizon: u64) -> Charge {
        let unreachable = *target > self.headroom;
        while unreachable || self.energy < *target {
            if self.now >= horizon {
                let dead = self.harvest.power_at(self.now).is_zero() && self.harvest.next_change(self.now).is_none();
                return if unreachable || dead {
                    Charge::Never
                } else {
                    Charge::Horizon
                };
            }
            let p = self.harvest.power_at(self.now);
            let piece_end = self.harvest.next_change(self.now).map_or(horizon, |t| t.min(horizon));
            if p.is_positive() && !unreachable {
                let need = (target - &self.energy) / &p * q_u64(PS_PER_S);
                let need = need.ceil().to_integer().to_u64().unwrap_or(u64::MAX);
                if self.now.saturating_add(need) <= piece_end {
                    self.advance(need, &Q::zero());
                    continue;
                }
            }
            self.advance(piece_end - self.now, &Q::zero());
        }
        Charge::Reached
    }
}

/// Round-robin, energy-gated dispatch of `txns` over `[0, horizon_ps)`.
/// A run started before the horizon is simulated to its end.
pub fn simulate_lifecycle(
    cap: &Capacitor,
    txns: &[Transaction],
    harvest: &HarvestTrace,
    horizon_ps: u64,
) -> LifecycleReport {
    let mut sim = Sim {
        harvest,
        headroom: cap.headroom(),
        energy: cap.energy.clone(),
        now: 0,
        harvested: Q::zero(),
        consumed: Q::zero(),
    };
    let mut by_txn: Vec<(String, u64)> = txns.iter().map(|t| (t.name.clone(), 0)).collect();
    let mut runs_of: Vec<usize> = vec![0; txns.len()];
    let (mut dispatches, mut completions, mut waits) = (0u64, 0u64, 0u64);
    let mut brownouts = Vec::new();
    let mut periods: Vec<Period> = Vec::new();
    let mut open: Option<Period> = None;
    let mut charge_start = 0u64;
    let mut starved = false;
    let mut next = 0usize;

    while !txns.is_empty() && sim.now < horizon_ps {
        let txn = &txns[next];
        let gate = Capacitor {
            energy: sim.energy.clone(),
            ..cap.clone()
        };
        match dispatch(&gate, txn) {
            Decision::Run => {
                let period = open.get_or_insert(Period {
                    charge_start_ps: charge_start,
                    run_start_ps: sim.now,
                    end_ps: sim.now,
                    completions: 0,
                });
                dispatches += 1;
                let profile = &txn.profiles[runs_of[next] % txn.profiles.len()];
                runs_of[next] += 1;
                let mut failed = None;
                for s in &profile.slices {
                    sim.energy -= &s.penalty_j;
                    sim.consumed += &s.penalty_j;
                    if sim.energy.is_negative() {
                        failed = Some(sim.now);
                        sim.energy = Q::zero();
                        break;
                    }
                    if let Some(t) = sim.advance(s.duration_ps, &s.power_w) {
                        failed = Some(t);
                        break;
                    }
                }
                period.end_ps = sim.now;
                match failed {
                    Some(t) => brownouts.push(BrownOut {
                        time_ps: t,
                        transaction: txn.name.clone(),
                    }),
                    None => {
                        completions += 1;
                        by_txn[next].1 += 1;
                        period.completions += 1;
                        next = (next + 1) % txns.len();
                    }
                }
            }
            Decision::Wait => {
                waits += 1;
                if let Some(p) = open.take() {
                    periods.push(p);
                }
                charge_start = sim.now;
                let target = txn.wcec.clone();
                match sim.charge_to(&target, horizon_ps) {
                    Charge::Reached => {}
                    Charge::Horizon => break,
                    Charge::Never => {
                        starved = true;
                        break;
                    }
                }
            }
        }
    }
    if let Some(p) = open.take() {
        periods.push(p);
    }
    let final_cap = Capacitor {
        energy: sim.energy.clone(),
        ..cap.clone()
    };
    LifecycleReport {
        horizon_ps,
        dispatches,
        completions,
        completions_by_txn: by_txn,
        waits,
        brownouts,
        periods,
        harvested_j: sim.harvested,
        consumed_j: sim.consumed,
        final_energy_j: sim.energy,
        final_v: final_cap.v_now(),
        starved,
    }
}
