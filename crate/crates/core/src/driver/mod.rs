//! Executable model of the open-source Wi-Fi driver.
//!
//! Every driver function runs against [`PeripheralState`] and advances
//! simulated time by the cycle cost of each block it executes, so a
//! function's recorded path can be replayed on its WCIR twin
//! ([`twins`]). A block's register accesses happen when the block starts;
//! its cycles elapse before the next block starts.
//!
//! Buffers, descriptor pools and queues are sized once in
//! [`DriverContext::new`]. The call log and the delivered-frame sink are
//! instrumentation and the only collections that grow afterwards.

pub mod event_loop;
pub mod frames;
mod functions;
pub mod tables;
pub mod twins;

use crate::device::{DeviceGraph, PlatformModel};
use crate::peripheral::dma::{DmaFault, DMA_RAM_BASE};
use crate::peripheral::{AccessFault, AckWaitState, ChannelScript, PeripheralConfig, PeripheralState, ScriptError};
use frames::{FrameError, MacAddr, MAX_80211_LEN};
pub use functions::{TxOutcome, TxReport};
use std::collections::VecDeque;
use tables::BlockSpec;

/// A fixed-capacity FIFO. `push` hands the item back when full.
#[derive(Debug, Clone)]
pub struct BoundedQueue<T> {
    items: VecDeque<T>,
    capacity: usize,
}

impl<T> BoundedQueue<T> {
    pub fn new(capacity: usize) -> Self {
        BoundedQueue {
            items: VecDeque::with_capacity(capacity),
            capacity,
        }
    }

    pub fn push(&mut self, item: T) -> Result<(), T> {
        if self.items.len() >= self.capacity {
            return Err(item);
        }
        self.items.push_back(item);
        Ok(())
    }

    pub fn pop(&mut self) -> Option<T> {
        self.items.pop_front()
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.items.len() >= self.capacity
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }
}

/// A frame held in a [`FramePool`] buffer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrameRef {
    pub buffer: usize,
    pub len: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HwEvent {
    /// Interrupt reason bits, as read by the handler.
    Interrupt(u32),
    /// An 802.11 frame to transmit.
    TxRequest(FrameRef),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MacEvent {
    RxFrame(FrameRef),
}

/// Statically allocated frame buffers of [`MAX_80211_LEN`] bytes each.
#[derive(Debug, Clone)]
pub struct FramePool {
    bytes: Vec<u8>,
    free: Vec<usize>,
    count: usize,
}

impl FramePool {
    pub fn new(count: usize) -> Self {
        FramePool {
            bytes: vec![0; count * MAX_80211_LEN],
            free: (0..count).rev().collect(),
            count,
        }
    }

    pub fn acquire(&mut self, data: &[u8]) -> Option<FrameRef> {
        if data.len() > MAX_80211_LEN {
            return None;
        }
        let buffer = self.free.pop()?;
        let start = buffer * MAX_80211_LEN;
        self.bytes[start..start + data.len()].copy_from_slice(data);
        Some(FrameRef {
            buffer,
            len: data.len(),
        })
    }

    pub fn get(&self, r: FrameRef) -> &[u8] {
        let start = r.buffer * MAX_80211_LEN;
        &self.bytes[start..start + r.len]
    }

    pub fn release(&mut self, r: FrameRef) {
        debug_assert!(!self.free.contains(&r.buffer), "double release of buffer {}", r.buffer);
        self.free.push(r.buffer);
    }

    pub fn available(&self) -> usize {
        self.free.len()
    }

    /// Heap footprint in bytes; constant over the pool's life.
    pub fn footprint(&self) -> usize {
        self.bytes.capacity() + self.free.capacity() * std::mem::size_of::<usize>()
    }

    pub fn count(&self) -> usize {
        self.count
    }
}

/// DMA RAM layout of the driver.
pub mod layout {
    use super::DMA_RAM_BASE;

    pub const RX_DESC_BASE: u32 = DMA_RAM_BASE;
    pub const RX_DESC_STRIDE: u32 = 16;
    pub const RX_BUF_BASE: u32 = DMA_RAM_BASE + 0x100;
    /// Frames longer than this span several RX descriptors.
    pub const RX_BUF_SIZE: u32 = 800;
    pub const TX_DESC_BASE: u32 = DMA_RAM_BASE + 0x4000;
    pub const TX_DESC_STRIDE: u32 = 16;
    pub const TX_BUF_BASE: u32 = DMA_RAM_BASE + 0x4100;
    pub const TX_BUF_SIZE: u32 = 1600;

    pub fn rx_desc(i: usize) -> u32 {
        RX_DESC_BASE + i as u32 * RX_DESC_STRIDE
    }

    pub fn rx_buf(i: usize) -> u32 {
        RX_BUF_BASE + i as u32 * RX_BUF_SIZE
    }

    pub fn tx_desc(slot: usize) -> u32 {
        TX_DESC_BASE + slot as u32 * TX_DESC_STRIDE
    }

    pub fn tx_buf(slot: usize) -> u32 {
        TX_BUF_BASE + slot as u32 * TX_BUF_SIZE
    }
}

#[derive(Debug, Clone)]
struct RxPool {
    handed_out: bool,
    cursor: usize,
    /// Bytes of a frame whose tail is still in flight.
    partial: Vec<u8>,
    partial_overflow: bool,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct DriverCounters {
    pub irq_delivered: u64,
    pub irq_dropped: u64,
    pub rx_forwarded: u64,
    pub rx_dropped_queue_full: u64,
    pub rx_dropped_oversize: u64,
    pub mac_delivered: u64,
    pub mac_malformed: u64,
    pub tx_submitted: u64,
    pub tx_rejected: u64,
}

/// One completed driver-function invocation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CallRecord {
    pub function: &'static str,
    pub start_ps: u64,
    pub end_ps: u64,
    pub cycles: u64,
    /// Executed block ids, callees included.
    pub path: Vec<&'static str>,
    /// Costed with inlined block figures.
    pub inlined: bool,
}

#[derive(Debug)]
struct ActiveCall {
    function: &'static str,
    start_ps: u64,
    cycles: u64,
    path: Vec<&'static str>,
    inlined: bool,
}

#[derive(Debug, thiserror::Error)]
pub enum DriverError {
    #[error(transparent)]
    Access(#[from] AccessFault),
    #[error(transparent)]
    Dma(#[from] DmaFault),
    #[error(transparent)]
    Frame(#[from] FrameError),
    #[error(transparent)]
    Script(#[from] ScriptError),
    #[error(transparent)]
    Device(#[from] crate::device::DeviceError),
    #[error("RX descriptor pool already handed to the hardware")]
    PoolExhausted,
    #[error("TX slot {0} is busy")]
    SlotBusy(usize),
    #[error("no free frame buffer")]
    NoBuffer,
    #[error("hardware event queue is full")]
    QueueFull,
    #[error("clock period is not a whole number of picoseconds")]
    Clock,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DriverConfig {
    pub queue_capacity: usize,
    pub frame_buffers: usize,
    pub tx_slots: usize,
    pub policy: AckWaitState,
}

impl Default for DriverConfig {
    fn default() -> Self {
        DriverConfig {
            queue_capacity: 16,
            frame_buffers: 16,
            tx_slots: 5,
            policy: AckWaitState::default(),
        }
    }
}

pub struct DriverContext {
    pub periph: PeripheralState,
    pub hw_events: BoundedQueue<HwEvent>,
    pub mac_events: BoundedQueue<MacEvent>,
    frames: FramePool,
    rx_pool: RxPool,
    bssid: MacAddr,
    /// Triggered slots, oldest first.
    tx_in_flight: VecDeque<usize>,
    isr_registered: bool,
    platform: PlatformModel,
    ps_per_cycle: u64,
    pub counters: DriverCounters,
    stack: Vec<ActiveCall>,
    pending_cycles: u64,
    calls: Vec<CallRecord>,
    /// Output of the MAC task.
    pub delivered: Vec<frames::Frame8023>,
}

impl DriverContext {
    pub fn new(
        graph: DeviceGraph,
        platform: PlatformModel,
        config: DriverConfig,
        script: ChannelScript,
    ) -> Result<Self, DriverError> {
        let ps_per_cycle = platform.picos_per_cycle().ok_or(DriverError::Clock)?;
        let periph = PeripheralState::new(
            graph,
            PeripheralConfig {
                tx_slots: config.tx_slots,
                policy: config.policy,
            },
            script,
        )?;
        Ok(DriverContext {
            periph,
            hw_events: BoundedQueue::new(config.queue_capacity),
            mac_events: BoundedQueue::new(config.queue_capacity),
            frames: FramePool::new(config.frame_buffers),
            rx_pool: RxPool {
                handed_out: false,
                cursor: 0,
                partial: Vec::with_capacity(MAX_80211_LEN),
                partial_overflow: false,
            },
            bssid: [0; 6],
            tx_in_flight: VecDeque::with_capacity(config.tx_slots),
            isr_registered: false,
            platform,
            ps_per_cycle,
            counters: DriverCounters::default(),
            stack: Vec::new(),
            pending_cycles: 0,
            calls: Vec::new(),
            delivered: Vec::new(),
        })
    }

    /// ESP32-C3 model with the given ACK-wait policy.
    pub fn esp32c3(policy: AckWaitState, script: ChannelScript) -> Result<Self, DriverError> {
        let (g, p) = crate::device::default_esp32c3_model();
        Self::new(
            g,
            p,
            DriverConfig {
                policy,
                ..DriverConfig::default()
            },
            script,
        )
    }

    pub fn platform(&self) -> &PlatformModel {
        &self.platform
    }

    pub fn policy(&self) -> AckWaitState {
        self.periph.config().policy
    }

    pub fn set_bssid(&mut self, bssid: MacAddr) {
        self.bssid = bssid;
    }

    pub fn calls(&self) -> &[CallRecord] {
        &self.calls
    }

    pub fn frame_pool(&self) -> &FramePool {
        &self.frames
    }

    pub fn tx_in_flight(&self) -> usize {
        self.tx_in_flight.len()
    }

    pub fn isr_registered(&self) -> bool {
        self.isr_registered
    }

    pub fn now_ps(&self) -> u64 {
        self.periph.now_ps()
    }

    /// Lets `ps` of idle time pass.
    pub fn idle(&mut self, ps: u64) {
        self.retire();
        self.periph.advance(ps);
    }

    fn retire(&mut self) {
        let cycles = std::mem::take(&mut self.pending_cycles);
        if cycles > 0 {
            self.periph.advance(cycles * self.ps_per_cycle);
        }
    }

    /// Executes `block` in the innermost active call.
    fn exec(&mut self, block: &BlockSpec) {
        self.retire();
        let inlined = self.current_inlined();
        let cycles = if inlined { block.inlined } else { block.cycles };
        for call in &mut self.stack {
            call.path.push(block.id);
            call.cycles += cycles;
        }
        self.pending_cycles = cycles;
    }

    fn enter(&mut self, function: &'static str, inlined: bool) {
        self.retire();
        self.stack.push(ActiveCall {
            function,
            start_ps: self.periph.now_ps(),
            cycles: 0,
            path: Vec::new(),
            inlined,
        });
    }

    fn leave(&mut self) {
        self.retire();
        let call = self.stack.pop().expect("leave without enter");
        self.calls.push(CallRecord {
            function: call.function,
            start_ps: call.start_ps,
            end_ps: self.periph.now_ps(),
            cycles: call.cycles,
            path: call.path,
            inlined: call.inlined,
        });
    }

    fn current_inlined(&self) -> bool {
        self.stack.last().map(|c| c.inlined).unwrap_or(false)
    }

    /// Callees of an active non-leaf call are costed inlined.
    fn inline_callees(&self) -> bool {
        !self.stack.is_empty()
    }

    fn read(&self, addr: u32) -> Result<u32, DriverError> {
        Ok(self.periph.mmio_read(addr)?)
    }

    fn write(&mut self, addr: u32, word: u32) -> Result<(), DriverError> {
        self.periph.mmio_write(addr, word)?;
        Ok(())
    }
}
