//! Simulated ESP32-C3 Wi-Fi peripheral.
//!
//! Time is kept in integer picoseconds so that one 160 MHz cycle (6250 ps)
//! is exact. Scheduled events (ACKs, RX injections, DMA confirmations) fire
//! at their exact timestamps during [`PeripheralState::advance`].
//!
//! The device state only changes through ops fired by register writes and
//! by scheduled events; `device_state` always equals the device graph's
//! replay of [`PeripheralState::op_log`].

pub mod dma;
pub mod regs;
pub mod script;

use crate::device::{ops, states, DeviceGraph, DeviceOp, StateId};
use crate::units::PS_PER_NS;
use dma::{DmaDescriptor, DmaRam, MAX_DMA_LEN};
use regs::irq;
pub use script::{parse_channel_script, ChannelScript, RxInjection, ScriptError};
use std::collections::{BTreeMap, BTreeSet};

/// Where the radio sits between the end of a frame's airtime and its ACK.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum AckWaitState {
    /// Stays in Transmitting until the ACK or timeout.
    #[default]
    Transmitting,
    /// Drops to Standby at the end of airtime.
    Standby,
    /// Drops to Standby and powers down at the end of airtime; powers back
    /// up when the ACK or timeout arrives.
    Sleep,
}

impl AckWaitState {
    pub const ALL: [AckWaitState; 3] = [AckWaitState::Transmitting, AckWaitState::Standby, AckWaitState::Sleep];

    pub fn as_str(self) -> &'static str {
        match self {
            AckWaitState::Transmitting => "transmitting",
            AckWaitState::Standby => "standby",
            AckWaitState::Sleep => "sleep",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "transmitting" => Some(AckWaitState::Transmitting),
            "standby" => Some(AckWaitState::Standby),
            "sleep" => Some(AckWaitState::Sleep),
            _ => None,
        }
    }

    /// Ops the radio fires by itself when airtime ends.
    pub fn airtime_end_ops(self) -> &'static [&'static str] {
        match self {
            AckWaitState::Transmitting => &[],
            AckWaitState::Standby => &[ops::TX_DONE],
            AckWaitState::Sleep => &[ops::TX_DONE, ops::WIFI_POWER_DOWN],
        }
    }

    /// Ops the radio fires by itself on ACK or timeout.
    pub fn completion_ops(self) -> &'static [&'static str] {
        match self {
            AckWaitState::Transmitting => &[ops::TX_DONE],
            AckWaitState::Standby => &[],
            AckWaitState::Sleep => &[ops::WIFI_POWER_UP],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PeripheralConfig {
    pub tx_slots: usize,
    pub policy: AckWaitState,
}

impl Default for PeripheralConfig {
    fn default() -> Self {
        PeripheralConfig {
            tx_slots: 5,
            policy: AckWaitState::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum AccessFault {
    #[error("access to unmapped address {0:#010x}")]
    Unmapped(u32),
    #[error("write to read-only register {0:#010x}")]
    ReadOnly(u32),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SideEffect {
    DeviceOp {
        op: DeviceOp,
        from: StateId,
        to: StateId,
        inert: bool,
    },
    TxScheduled {
        slot: usize,
        index: u64,
        ack_at_ps: Option<u64>,
    },
    TxCompleted {
        slot: usize,
        acked: bool,
    },
    RxEnabled(bool),
    RxListBase(u32),
    RxConfirmed,
    RxDelivered {
        bytes: usize,
        descriptors: usize,
    },
    RxDropped {
        reason: &'static str,
    },
    InterruptRaised(u32),
    InterruptCleared(u32),
    SlotsCleared(u32),
    Warning(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateChange {
    pub time_ps: u64,
    pub op: DeviceOp,
    pub from: StateId,
    pub to: StateId,
    pub inert: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct TxSlot {
    pub descriptor: u32,
    pub active: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TxRecord {
    pub slot: usize,
    pub index: u64,
    pub time_ps: u64,
    pub frame: Vec<u8>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Event {
    AirtimeEnd { slot: usize },
    TxComplete { slot: usize, acked: bool },
    DmaConfirm { generation: u64 },
    RxInject { index: usize },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RxCounters {
    pub delivered: u64,
    pub dropped_disabled: u64,
    pub dropped_overflow: u64,
}

#[derive(Debug, Clone)]
pub struct PeripheralState {
    graph: DeviceGraph,
    config: PeripheralConfig,
    script: ChannelScript,
    /// Stored words of documented and extension registers.
    regs: BTreeMap<u32, u32>,
    pub rx_dma_head: u32,
    pub tx_slots: Vec<TxSlot>,
    pub pending_irq: u32,
    device_state: StateId,
    now_ps: u64,
    pub dma: DmaRam,
    events: BTreeMap<(u64, u64), Event>,
    seq: u64,
    dma_generation: u64,
    tx_started: u64,
    op_log: Vec<StateChange>,
    pub transmitted: Vec<TxRecord>,
    pub rx: RxCounters,
    pub warnings: Vec<String>,
}

impl PeripheralState {
    /// A powered-down peripheral at time zero, starting in the graph's
    /// initial state.
    pub fn new(graph: DeviceGraph, config: PeripheralConfig, script: ChannelScript) -> Result<Self, ScriptError> {
        script.check()?;
        let mut state = PeripheralState {
            device_state: graph.initial.clone(),
            graph,
            tx_slots: vec![TxSlot::default(); config.tx_slots],
            config,
            regs: BTreeMap::new(),
            rx_dma_head: 0,
            pending_irq: 0,
            now_ps: 0,
            dma: DmaRam::default(),
            events: BTreeMap::new(),
            seq: 0,
            dma_generation: 0,
            tx_started: 0,
            op_log: Vec::new(),
            transmitted: Vec::new(),
            rx: RxCounters::default(),
            warnings: Vec::new(),
            script,
        };
        for (index, r) in state.script.rx.clone().iter().enumerate() {
            state.schedule(r.time_ns * PS_PER_NS, Event::RxInject { index });
        }
        Ok(state)
    }

    pub fn graph(&self) -> &DeviceGraph {
        &self.graph
    }

    pub fn config(&self) -> &PeripheralConfig {
        &self.config
    }

    pub fn script(&self) -> &ChannelScript {
        &self.script
    }

    pub fn device_state(&self) -> &StateId {
        &self.device_state
    }

    pub fn now_ps(&self) -> u64 {
        self.now_ps
    }

    /// Every op fired so far, in order, with its effect.
    pub fn op_log(&self) -> &[StateChange] {
        &self.op_log
    }

    /// Time of the next scheduled event, if any.
    pub fn next_event_ps(&self) -> Option<u64> {
        self.events.keys().next().map(|(t, _)| *t)
    }

    /// The Wi-Fi interrupt line towards the CPU.
    pub fn interrupt_line(&self) -> bool {
        self.pending_irq != 0
            && self.reg(regs::INT_ENABLE) & regs::INT_ENABLE_WIFI_BIT != 0
            && self.reg(regs::INT_SOURCE) == regs::WIFI_CPU_INTERRUPT
    }

    pub fn rx_enabled(&self) -> bool {
        self.reg(regs::RX_CTRL) & regs::RX_ENABLE_BIT != 0
    }

    fn reg(&self, addr: u32) -> u32 {
        self.regs.get(&addr).copied().unwrap_or(0)
    }

    fn schedule(&mut self, time_ps: u64, event: Event) {
        self.events.insert((time_ps, self.seq), event);
        self.seq += 1;
    }

    fn fire(&mut self, op: &str, effects: &mut Vec<SideEffect>) {
        let op = DeviceOp::new(op);
        let step = self
            .graph
            .step(&self.device_state, &op)
            .expect("device_state is always a graph state");
        if step.inert {
            let msg = format!("device op `{op}` is inert in state `{}`", self.device_state);
            log::warn!("{msg}");
            self.warnings.push(msg.clone());
            effects.push(SideEffect::Warning(msg));
        }
        let from = std::mem::replace(&mut self.device_state, step.state.clone());
        self.op_log.push(StateChange {
            time_ps: self.now_ps,
            op: op.clone(),
            from: from.clone(),
            to: step.state.clone(),
            inert: step.inert,
        });
        effects.push(SideEffect::DeviceOp {
            op,
            from,
            to: step.state,
            inert: step.inert,
        });
    }

    fn raise(&mut self, bits: u32, effects: &mut Vec<SideEffect>) {
        self.pending_irq |= bits;
        effects.push(SideEffect::InterruptRaised(bits));
    }

    fn warn(&mut self, msg: String, effects: &mut Vec<SideEffect>) {
        log::warn!("{msg}");
        self.warnings.push(msg.clone());
        effects.push(SideEffect::Warning(msg));
    }

    /// Pure register read.
    pub fn mmio_read(&self, addr: u32) -> Result<u32, AccessFault> {
        if !regs::is_mapped(addr) {
            return Err(AccessFault::Unmapped(addr));
        }
        Ok(match addr {
            regs::INT_STATUS => self.pending_irq,
            regs::RX_DMA_STATUS => self.reg(addr),
            _ if regs::lookup(addr).is_some() => self.reg(addr),
            _ => 0,
        })
    }

    pub fn mmio_write(&mut self, addr: u32, word: u32) -> Result<Vec<SideEffect>, AccessFault> {
        if !regs::is_mapped(addr) {
            return Err(AccessFault::Unmapped(addr));
        }
        let Some(info) = regs::lookup(addr) else {
            let mut effects = Vec::new();
            self.warn(
                format!("write of {word:#010x} to undocumented register {addr:#010x} ignored"),
                &mut effects,
            );
            return Ok(effects);
        };
        if info.access == regs::Access::ReadOnly {
            return Err(AccessFault::ReadOnly(addr));
        }
        let mut effects = Vec::new();
        let old = self.reg(addr);
        self.regs.insert(addr, word);
        match addr {
            regs::RX_CTRL => {
                let was = old & regs::RX_ENABLE_BIT != 0;
                let now = word & regs::RX_ENABLE_BIT != 0;
                if was != now {
                    effects.push(SideEffect::RxEnabled(now));
                }
            }
            regs::RX_DMA_BASE => {
                self.rx_dma_head = word;
                self.regs.insert(regs::RX_DMA_STATUS, 0);
                self.dma_generation += 1;
                let at = self.now_ps + self.script.dma_confirm_ns * PS_PER_NS;
                self.schedule(
                    at,
                    Event::DmaConfirm {
                        generation: self.dma_generation,
                    },
                );
                effects.push(SideEffect::RxListBase(word));
            }
            regs::POWER => {
                if word & regs::POWER_BIT != 0 {
                    self.fire(ops::WIFI_POWER_UP, &mut effects);
                } else {
                    self.fire(ops::WIFI_POWER_DOWN, &mut effects);
                }
            }
            regs::INT_CLEAR => {
                let cleared = self.pending_irq & word;
                self.pending_irq &= !word;
                effects.push(SideEffect::InterruptCleared(cleared));
            }
            regs::TX_SLOT_CLEAR => {
                for (k, slot) in self.tx_slots.iter_mut().enumerate() {
                    if k < 32 && word & (1 << k) != 0 {
                        slot.active = false;
                    }
                }
                effects.push(SideEffect::SlotsCleared(word));
            }
            _ => {
                if let Some(slot) = (0..self.tx_slots.len()).find(|&k| regs::tx_slot_register(k) == addr) {
                    self.tx_slots[slot].descriptor = word & regs::TX_ADDR_MASK;
                    if word & regs::TX_TRIGGER_BIT != 0 {
                        self.trigger_tx(slot, &mut effects);
                    }
                }
            }
        }
        Ok(effects)
    }

    fn trigger_tx(&mut self, slot: usize, effects: &mut Vec<SideEffect>) {
        if self.tx_slots[slot].active {
            self.warn(format!("trigger on busy TX slot {slot} ignored"), effects);
            return;
        }
        let desc_addr = self.tx_slots[slot].descriptor;
        let frame = match self.dma.read_descriptor(desc_addr) {
            Ok(d) if (d.length as usize) <= MAX_DMA_LEN && d.length > 0 => {
                match self.dma.read(d.buffer, d.length as usize) {
                    Ok(bytes) => bytes.to_vec(),
                    Err(e) => {
                        self.warn(format!("TX slot {slot}: {e}"), effects);
                        return;
                    }
                }
            }
            Ok(d) => {
                self.warn(format!("TX slot {slot}: invalid frame length {}", d.length), effects);
                return;
            }
            Err(e) => {
                self.warn(format!("TX slot {slot}: {e}"), effects);
                return;
            }
        };
        self.fire(ops::TX_START, effects);
        if self.device_state.as_str() != states::TRANSMITTING {
            self.warn(format!("TX slot {slot}: radio not ready, frame discarded"), effects);
            return;
        }
        let index = self.tx_started;
        self.tx_started += 1;
        self.tx_slots[slot].active = true;
        self.transmitted.push(TxRecord {
            slot,
            index,
            time_ps: self.now_ps,
            frame,
        });
        let ack = self.script.ack_for(index);
        if !self.config.policy.airtime_end_ops().is_empty() {
            self.schedule(
                self.now_ps + self.script.airtime_ns * PS_PER_NS,
                Event::AirtimeEnd { slot },
            );
        }
        let done_at = self.now_ps + ack.unwrap_or(script::ACK_BOUND_NS) * PS_PER_NS;
        self.schedule(
            done_at,
            Event::TxComplete {
                slot,
                acked: ack.is_some(),
            },
        );
        effects.push(SideEffect::TxScheduled {
            slot,
            index,
            ack_at_ps: ack.map(|_| done_at),
        });
    }

    fn deliver_rx(&mut self, frame: &[u8], effects: &mut Vec<SideEffect>) {
        let drop = |s: &mut Self, reason: &'static str, effects: &mut Vec<SideEffect>| {
            s.rx.dropped_disabled += 1;
            effects.push(SideEffect::RxDropped { reason });
        };
        if self.device_state.as_str() == states::SLEEP {
            return drop(self, "radio powered down", effects);
        }
        if !self.rx_enabled() {
            return drop(self, "rx disabled", effects);
        }
        if self.rx_dma_head == 0 || self.reg(regs::RX_DMA_STATUS) & regs::DMA_CONFIRMED_BIT == 0 {
            return drop(self, "no confirmed rx list", effects);
        }
        // first run of hardware-owned descriptors, walking from the head
        let mut chain: Vec<(u32, DmaDescriptor)> = Vec::new();
        let mut visited = BTreeSet::new();
        let mut cur = self.rx_dma_head;
        let mut capacity = 0usize;
        while cur != 0 && visited.insert(cur) {
            let Ok(d) = self.dma.read_descriptor(cur) else {
                self.warn(format!("rx descriptor at {cur:#010x} is outside DMA RAM"), effects);
                break;
            };
            if d.owner_hw {
                chain.push((cur, d));
                capacity += d.size as usize;
                if capacity >= frame.len() {
                    break;
                }
            } else if !chain.is_empty() {
                break;
            }
            cur = d.next;
        }
        if capacity < frame.len() {
            self.rx.dropped_overflow += 1;
            effects.push(SideEffect::RxDropped {
                reason: "no free rx descriptors",
            });
            return;
        }
        let mut offset = 0;
        let n = chain.len();
        for (i, (addr, mut d)) in chain.into_iter().enumerate() {
            let take = (d.size as usize).min(frame.len() - offset);
            if let Err(e) = self.dma.write(d.buffer, &frame[offset..offset + take]) {
                self.warn(format!("rx buffer write failed: {e}"), effects);
                return;
            }
            offset += take;
            d.length = take as u16;
            d.eof = i + 1 == n;
            d.owner_hw = false;
            self.dma.write_descriptor(addr, &d).expect("descriptor was just read");
        }
        self.rx.delivered += 1;
        effects.push(SideEffect::RxDelivered {
            bytes: frame.len(),
            descriptors: n,
        });
        self.raise(irq::RX_DONE, effects);
    }

    fn handle(&mut self, event: Event, effects: &mut Vec<SideEffect>) {
        match event {
            Event::AirtimeEnd { .. } => {
                for op in self.config.policy.airtime_end_ops() {
                    self.fire(op, effects);
                }
            }
            Event::TxComplete { slot, acked } => {
                for op in self.config.policy.completion_ops() {
                    self.fire(op, effects);
                }
                self.raise(if acked { irq::TX_DONE } else { irq::TX_TIMEOUT }, effects);
                effects.push(SideEffect::TxCompleted { slot, acked });
            }
            Event::DmaConfirm { generation } => {
                if generation == self.dma_generation {
                    self.regs.insert(regs::RX_DMA_STATUS, regs::DMA_CONFIRMED_BIT);
                    effects.push(SideEffect::RxConfirmed);
                }
            }
            Event::RxInject { index } => {
                let frame = self.script.rx[index].frame.clone();
                self.deliver_rx(&frame, effects);
            }
        }
    }

    /// Moves time forward by `delta_ps`, firing every event scheduled in
    /// `(now, now + delta]` (and any still due at `now`) in time order.
    pub fn advance(&mut self, delta_ps: u64) -> Vec<SideEffect> {
        let end = self.now_ps + delta_ps;
        let mut effects = Vec::new();
        while let Some((&(t, seq), _)) = self.events.iter().next() {
            if t > end {
                break;
            }
            let event = self.events.remove(&(t, seq)).expect("key just observed");
            self.now_ps = self.now_ps.max(t);
            self.handle(event, &mut effects);
        }
        self.now_ps = end;
        effects
    }

    pub fn advance_ns(&mut self, delta_ns: u64) -> Vec<SideEffect> {
        self.advance(delta_ns * PS_PER_NS)
    }
}
