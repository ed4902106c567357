use super::frames::{decapsulate, mac_encapsulate, Frame80211, Frame8023, MacAddr, MAX_80211_LEN};
use super::tables::*;
use super::{layout, CallRecord, DriverContext, DriverError, HwEvent, MacEvent};
use crate::peripheral::dma::DmaDescriptor;
use crate::peripheral::regs::{self, irq};
use crate::trace::EnergyTrace;

/// Result of waiting for a transmission.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TxOutcome {
    Acked,
    TimedOut,
    /// The poll budget ran out with neither bit set.
    Exhausted,
    /// No free TX slot; nothing was sent.
    Busy,
}

impl TxOutcome {
    pub fn as_str(self) -> &'static str {
        match self {
            TxOutcome::Acked => "acked",
            TxOutcome::TimedOut => "timed-out",
            TxOutcome::Exhausted => "exhausted",
            TxOutcome::Busy => "busy",
        }
    }
}

#[derive(Debug, Clone)]
pub struct TxReport {
    pub outcome: TxOutcome,
    pub call: CallRecord,
    pub trace: EnergyTrace,
}

impl TxReport {
    /// Table of cycles, time and energy per device state.
    pub fn render(&self) -> String {
        use crate::units::{format_sig, micro};
        use std::fmt::Write as _;
        let mut out = String::new();
        let _ = writeln!(out, "outcome  {}", self.outcome.as_str());
        let _ = writeln!(out, "cycles   {}", self.call.cycles);
        let _ = writeln!(
            out,
            "time_ns  {}",
            (self.call.end_ps - self.call.start_ps) / crate::units::PS_PER_NS
        );
        let _ = writeln!(out, "{:<14} {:>12} {:>12}", "state", "ns", "uJ");
        for (state, e) in &self.trace.per_state {
            let ns = self.trace.time_in_state_ps(state) / crate::units::PS_PER_NS;
            let _ = writeln!(
                out,
                "{:<14} {:>12} {:>12}",
                state.as_str(),
                ns,
                format_sig(&micro(e), 4)
            );
        }
        let _ = writeln!(
            out,
            "{:<14} {:>12} {:>12}",
            "total",
            "",
            format_sig(&micro(&self.trace.total_energy), 4)
        );
        out
    }
}

impl DriverContext {
    fn begin(&mut self, function: &'static str) {
        let inlined = self.inline_callees();
        self.enter(function, inlined);
    }

    /// Powers the radio up: Sleep to Standby.
    pub fn wifi_hw_init(&mut self) -> Result<(), DriverError> {
        self.begin(HW_INIT.name);
        self.exec(&HI_ENTRY);
        self.exec(&HI_POWER);
        let v = self.read(regs::POWER)?;
        self.write(regs::POWER, v | regs::POWER_BIT)?;
        self.exec(&HI_EXIT);
        self.leave();
        Ok(())
    }

    /// Powers the radio down.
    pub fn wifi_hw_deinit(&mut self) -> Result<(), DriverError> {
        self.begin(HW_DEINIT.name);
        self.exec(&HD_ENTRY);
        self.exec(&HD_POWER);
        let v = self.read(regs::POWER)?;
        self.write(regs::POWER, v & 0xff00_efff)?;
        self.exec(&HD_EXIT);
        self.leave();
        Ok(())
    }

    /// Clears the source, masks, registers the handler, then unmasks and
    /// routes the Wi-Fi source to CPU interrupt 1.
    pub fn wifi_setup_interrupt(&mut self) -> Result<(), DriverError> {
        self.begin(SETUP_INTERRUPT.name);
        self.exec(&SI_ENTRY);
        self.exec(&SI_CLEAR_SRC);
        self.write(regs::INT_SOURCE, 0)?;
        self.exec(&SI_DISABLE);
        let en = self.read(regs::INT_ENABLE)?;
        self.write(regs::INT_ENABLE, en & !regs::INT_ENABLE_WIFI_BIT)?;
        self.exec(&SI_REGISTER);
        self.isr_registered = true;
        self.exec(&SI_ENABLE);
        self.write(regs::INT_ENABLE, en | regs::INT_ENABLE_WIFI_BIT)?;
        self.write(regs::INT_SOURCE, regs::WIFI_CPU_INTERRUPT)?;
        self.exec(&SI_EXIT);
        self.leave();
        Ok(())
    }

    /// Polls until the hardware confirms the RX list or the 800 ns budget is
    /// spent.
    fn confirm_rx_list(&mut self, hdr: &BlockSpec, miss: &BlockSpec, hit: &BlockSpec) -> Result<(), DriverError> {
        let mut misses = 0;
        loop {
            self.exec(hdr);
            let confirmed = self.read(regs::RX_DMA_STATUS)? & regs::DMA_CONFIRMED_BIT != 0;
            if confirmed || misses == DMA_CONFIRM_POLLS {
                if !confirmed {
                    log::warn!("RX list not confirmed within {DMA_CONFIRM_POLLS} polls");
                }
                self.exec(hit);
                return Ok(());
            }
            self.exec(miss);
            misses += 1;
        }
    }

    /// Hands the RX descriptor pool to the hardware and enables reception.
    pub fn wifi_setup_rx(&mut self) -> Result<(), DriverError> {
        self.begin(SETUP_RX.name);
        self.exec(&SRX_ENTRY);
        if self.rx_pool.handed_out {
            self.exec(&SRX_EXIT);
            self.leave();
            return Err(DriverError::PoolExhausted);
        }
        let n = RX_POOL_LEN as usize;
        for i in 0..n {
            self.exec(&SRX_HDR);
            self.exec(&SRX_DESC);
            let d = DmaDescriptor {
                size: layout::RX_BUF_SIZE as u16,
                length: 0,
                eof: false,
                owner_hw: true,
                buffer: layout::rx_buf(i),
                next: if i + 1 < n { layout::rx_desc(i + 1) } else { 0 },
            };
            self.periph.dma.write_descriptor(layout::rx_desc(i), &d)?;
        }
        self.exec(&SRX_HDR);
        self.exec(&SRX_BASE);
        self.write(regs::RX_DMA_BASE, layout::rx_desc(0))?;
        self.rx_pool.cursor = 0;
        self.exec(&SRX_ENABLE);
        let ctrl = self.read(regs::RX_CTRL)?;
        self.write(regs::RX_CTRL, ctrl | regs::RX_ENABLE_BIT)?;
        self.confirm_rx_list(&SRX_CONF_HDR, &SRX_CONF_MISS, &SRX_CONF_HIT)?;
        self.exec(&SRX_EXIT);
        self.rx_pool.handed_out = true;
        self.leave();
        Ok(())
    }

    /// Lowest slot that is neither in flight nor active in hardware.
    pub fn free_tx_slot(&self) -> Option<usize> {
        (0..self.periph.tx_slots.len()).find(|s| !self.tx_in_flight.contains(s) && !self.periph.tx_slots[*s].active)
    }

    /// Writes `frame` into `slot`'s descriptor and triggers transmission.
    pub fn wifi_transmit_packet(&mut self, frame: &Frame80211, slot: usize) -> Result<(), DriverError> {
        self.begin(TRANSMIT_PACKET.name);
        self.exec(&TP_ENTRY);
        let busy = slot >= self.periph.tx_slots.len()
            || self.tx_in_flight.contains(&slot)
            || self.periph.tx_slots[slot].active;
        if busy {
            self.exec(&TP_BUSY);
            // inlined, the early return lands on the caller's exit
            if !self.current_inlined() {
                self.exec(&TP_EXIT);
            }
            self.leave();
            self.counters.tx_rejected += 1;
            return Err(DriverError::SlotBusy(slot));
        }
        self.exec(&TP_DESC);
        let bytes = frame.to_bytes();
        self.periph.dma.write(layout::tx_buf(slot), &bytes)?;
        let d = DmaDescriptor {
            size: layout::TX_BUF_SIZE as u16,
            length: bytes.len() as u16,
            eof: true,
            owner_hw: true,
            buffer: layout::tx_buf(slot),
            next: 0,
        };
        self.periph.dma.write_descriptor(layout::tx_desc(slot), &d)?;
        self.exec(&TP_TRIGGER);
        self.write(
            regs::tx_slot_register(slot),
            layout::tx_desc(slot) | regs::TX_TRIGGER_BIT,
        )?;
        self.tx_in_flight.push_back(slot);
        self.counters.tx_submitted += 1;
        self.exec(&TP_EXIT);
        self.leave();
        Ok(())
    }

    /// Actively polls the interrupt status for the ACK or the timeout.
    pub fn wifi_wait_for_tx(&mut self) -> Result<TxOutcome, DriverError> {
        self.begin(WAIT_FOR_TX.name);
        self.exec(&WT_ENTRY);
        let mut misses = 0;
        let outcome = loop {
            self.exec(&WT_HDR);
            let status = self.read(regs::INT_STATUS)?;
            if status & (irq::TX_DONE | irq::TX_TIMEOUT) != 0 {
                self.exec(&WT_ACK);
                self.exec(&WT_HIT);
                break if status & irq::TX_DONE != 0 {
                    TxOutcome::Acked
                } else {
                    TxOutcome::TimedOut
                };
            }
            if misses == ACK_WAIT_POLLS {
                break TxOutcome::Exhausted;
            }
            self.exec(&WT_MISS);
            misses += 1;
        };
        self.exec(&WT_EXIT);
        self.leave();
        Ok(outcome)
    }

    fn retire_slot(&mut self, clear_slot: &BlockSpec) -> Result<(), DriverError> {
        self.exec(clear_slot);
        let mask = self.tx_in_flight.pop_front().map(|s| 1u32 << s).unwrap_or(0);
        self.write(regs::TX_SLOT_CLEAR, mask)
    }

    /// Acknowledges a completed transmission and frees its slot.
    /// Returns whether one was pending.
    pub fn wifi_process_tx_done(&mut self) -> Result<bool, DriverError> {
        self.begin(PROCESS_TX_DONE.name);
        self.exec(&PD_ENTRY);
        let pending = self.read(regs::INT_STATUS)? & irq::TX_DONE != 0;
        if pending {
            self.exec(&PD_CLEAR_IRQ);
            self.write(regs::INT_CLEAR, irq::TX_DONE)?;
            self.retire_slot(&PD_CLEAR_SLOT)?;
        }
        self.exec(&PD_EXIT);
        self.leave();
        Ok(pending)
    }

    /// Acknowledges a timed-out transmission and frees its slot.
    pub fn wifi_process_timeout(&mut self) -> Result<bool, DriverError> {
        self.begin(PROCESS_TIMEOUT.name);
        self.exec(&PT_ENTRY);
        let pending = self.read(regs::INT_STATUS)? & irq::TX_TIMEOUT != 0;
        if pending {
            self.exec(&PT_CLEAR_IRQ);
            self.write(regs::INT_CLEAR, irq::TX_TIMEOUT)?;
            self.retire_slot(&PT_CLEAR_SLOT)?;
        }
        self.exec(&PT_EXIT);
        self.leave();
        Ok(pending)
    }

    /// Walks the RX list from the cursor, forwards completed frames to the
    /// MAC queue and returns descriptors to the hardware. Returns the number
    /// of frames forwarded.
    pub fn wifi_handle_rx(&mut self) -> Result<usize, DriverError> {
        self.begin(HANDLE_RX.name);
        self.exec(&HRX_ENTRY);
        self.write(regs::INT_CLEAR, irq::RX_DONE)?;
        let n = RX_POOL_LEN as usize;
        let mut forwarded = 0;
        let mut rearmed = false;
        let mut visited = 0;
        loop {
            self.exec(&HRX_HDR);
            if visited == n || !self.rx_pool.handed_out {
                break;
            }
            let addr = layout::rx_desc(self.rx_pool.cursor);
            let mut d = self.periph.dma.read_descriptor(addr)?;
            if d.owner_hw {
                break;
            }
            self.exec(&HRX_CHECK);
            let chunk_len = (d.length as usize).min(d.size as usize);
            let fits = self.rx_pool.partial.len() + chunk_len <= MAX_80211_LEN;
            if fits {
                let chunk = self.periph.dma.read(d.buffer, chunk_len)?;
                self.rx_pool.partial.extend_from_slice(chunk);
            } else {
                self.rx_pool.partial_overflow = true;
            }
            if d.eof {
                self.exec(&HRX_FORWARD);
                if self.forward_partial() {
                    forwarded += 1;
                }
            } else {
                self.exec(&HRX_DEFER);
            }
            self.exec(&HRX_REARM);
            d.length = 0;
            d.eof = false;
            d.owner_hw = true;
            self.periph.dma.write_descriptor(addr, &d)?;
            rearmed = true;
            self.exec(&HRX_NEXT);
            self.rx_pool.cursor = (self.rx_pool.cursor + 1) % n;
            visited += 1;
        }
        if rearmed {
            self.exec(&HRX_RELINK);
            // linear list in ring order from the cursor keeps arrival order
            let start = self.rx_pool.cursor;
            for k in 0..n {
                let i = (start + k) % n;
                let addr = layout::rx_desc(i);
                let mut d = self.periph.dma.read_descriptor(addr)?;
                d.next = if k + 1 < n { layout::rx_desc((i + 1) % n) } else { 0 };
                self.periph.dma.write_descriptor(addr, &d)?;
            }
            self.write(regs::RX_DMA_BASE, layout::rx_desc(start))?;
            self.confirm_rx_list(&HRX_CONF_HDR, &HRX_CONF_MISS, &HRX_CONF_HIT)?;
        }
        self.exec(&HRX_EXIT);
        self.leave();
        Ok(forwarded)
    }

    /// Moves the assembled frame into a pool buffer and onto the MAC queue.
    fn forward_partial(&mut self) -> bool {
        let overflow = std::mem::take(&mut self.rx_pool.partial_overflow);
        let ok = if overflow {
            self.counters.rx_dropped_oversize += 1;
            false
        } else if self.mac_events.is_full() {
            self.counters.rx_dropped_queue_full += 1;
            false
        } else if let Some(r) = self.frames.acquire(&self.rx_pool.partial) {
            self.mac_events
                .push(MacEvent::RxFrame(r))
                .expect("queue checked not full");
            self.counters.rx_forwarded += 1;
            true
        } else {
            self.counters.rx_dropped_queue_full += 1;
            false
        };
        self.rx_pool.partial.clear();
        ok
    }

    /// Copies the configured BSSID out byte by byte.
    pub fn wifi_get_bssid(&mut self) -> MacAddr {
        self.begin(GET_BSSID.name);
        self.exec(&GB_ENTRY);
        let mut out = [0u8; 6];
        for (i, byte) in out.iter_mut().enumerate() {
            self.exec(&GB_HDR);
            self.exec(&GB_COPY);
            *byte = self.bssid[i];
        }
        self.exec(&GB_HDR);
        self.exec(&GB_EXIT);
        self.leave();
        out
    }

    /// Strips the 802.11 header of a received data frame.
    pub fn wifi_mac_handle_rx(&mut self, bytes: &[u8]) -> Result<Frame8023, DriverError> {
        self.begin(MAC_HANDLE_RX.name);
        self.exec(&MHR_ENTRY);
        let parsed = Frame80211::from_bytes(bytes).and_then(|f| decapsulate(&f, self.bssid));
        let frame = match parsed {
            Ok(f) => f,
            Err(e) => {
                self.exec(&MHR_ERR);
                self.exec(&MHR_EXIT);
                self.leave();
                return Err(e.into());
            }
        };
        self.exec(&MHR_HDR);
        for _ in 0..frame.payload().len() {
            self.exec(&MHR_COPY_HDR);
            self.exec(&MHR_COPY);
        }
        self.exec(&MHR_COPY_HDR);
        self.exec(&MHR_EXIT);
        self.leave();
        Ok(frame)
    }

    /// Reads the interrupt reason, defers it to the driver task and masks
    /// the source until the task has handled it.
    pub fn wifi_interrupt_handler(&mut self) -> Result<(), DriverError> {
        self.begin(INTERRUPT_HANDLER.name);
        self.exec(&ISR_ENTRY);
        self.exec(&ISR_READ);
        let reason = self.read(regs::INT_STATUS)?;
        if self.hw_events.is_full() {
            self.exec(&ISR_DROP);
            self.counters.irq_dropped += 1;
        } else {
            self.exec(&ISR_ENQUEUE);
            self.hw_events
                .push(HwEvent::Interrupt(reason))
                .expect("queue checked not full");
            self.counters.irq_delivered += 1;
        }
        self.exec(&ISR_CLEAR);
        self.write(regs::INT_SOURCE, 0)?;
        self.exec(&ISR_EXIT);
        self.leave();
        Ok(())
    }

    /// Sends one frame and actively waits for its completion.
    pub fn tx_task_run(&mut self, frame: &Frame8023) -> Result<TxReport, DriverError> {
        let wifi = mac_encapsulate(frame, self.bssid);
        self.enter(TX_TASK_NAME, false);
        self.exec(&TASK_ENTRY);
        let slot = self.free_tx_slot().unwrap_or(0);
        let outcome = match self.wifi_transmit_packet(&wifi, slot) {
            Err(DriverError::SlotBusy(_)) => TxOutcome::Busy,
            Err(e) => return Err(e),
            Ok(()) => {
                let outcome = self.wifi_wait_for_tx()?;
                if outcome == TxOutcome::Acked {
                    self.wifi_process_tx_done()?;
                } else {
                    self.wifi_process_timeout()?;
                }
                outcome
            }
        };
        self.exec(&TASK_EXIT);
        self.leave();
        let call = self.calls.last().expect("just recorded").clone();
        let trace = EnergyTrace::from_window(&self.periph, &self.platform, call.start_ps, call.end_ps)?;
        Ok(TxReport { outcome, call, trace })
    }

    /// Encapsulates `frame` and queues it for the driver task.
    pub fn submit_tx(&mut self, frame: &Frame8023) -> Result<(), DriverError> {
        let bytes = mac_encapsulate(frame, self.bssid).to_bytes();
        if self.hw_events.is_full() {
            return Err(DriverError::QueueFull);
        }
        let r = self.frames.acquire(&bytes).ok_or(DriverError::NoBuffer)?;
        self.hw_events
            .push(HwEvent::TxRequest(r))
            .expect("queue checked not full");
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::device::states;
    use crate::driver::twins::{check_path, function_twin, tx_task_twin};
    use crate::peripheral::script::RxInjection;
    use crate::peripheral::{AckWaitState, ChannelScript};
    use crate::trace::{inbound_frame, outbound_frame, ACCESS_POINT};
    use crate::units::PS_PER_NS;

    fn ctx(policy: AckWaitState, script: ChannelScript) -> DriverContext {
        let mut c = DriverContext::esp32c3(policy, script).unwrap();
        c.set_bssid(ACCESS_POINT);
        c
    }

    fn state(c: &DriverContext) -> &str {
        c.periph.device_state().as_str()
    }

    fn last_path_ok(c: &DriverContext, policy: AckWaitState) {
        let call = c.calls().last().unwrap();
        let spec = function(call.function).unwrap();
        let twin = function_twin(spec, policy);
        let cost = check_path(&twin, &call.path).unwrap();
        assert_eq!(cost, call.cycles);
    }

    #[test]
    fn init_and_deinit_follow_the_power_graph() {
        let mut c = ctx(AckWaitState::Sleep, ChannelScript::default());
        assert_eq!(state(&c), states::SLEEP);
        c.wifi_hw_init().unwrap();
        assert_eq!(state(&c), states::STANDBY);
        assert_eq!(c.calls()[0].cycles, 49);
        c.wifi_hw_init().unwrap();
        assert_eq!(state(&c), states::STANDBY);
        assert_eq!(c.periph.warnings.len(), 1);
        c.wifi_hw_deinit().unwrap();
        assert_eq!(state(&c), states::SLEEP);
        assert_eq!(c.calls()[2].cycles, 48);
        c.wifi_hw_deinit().unwrap();
        assert_eq!(state(&c), states::SLEEP);
        assert_eq!(c.periph.warnings.len(), 2);
        last_path_ok(&c, AckWaitState::Sleep);
    }

    #[test]
    fn setup_interrupt_sets_enable_bit() {
        let mut c = ctx(AckWaitState::Sleep, ChannelScript::default());
        c.wifi_setup_interrupt().unwrap();
        let en = c.periph.mmio_read(regs::INT_ENABLE).unwrap();
        assert_ne!(en & regs::INT_ENABLE_WIFI_BIT, 0);
        assert_eq!(c.calls()[0].cycles, 178);
        assert!(c.isr_registered());
    }

    #[test]
    fn setup_rx_enables_and_waits_for_confirmation() {
        let mut c = ctx(AckWaitState::Sleep, ChannelScript::default());
        c.wifi_hw_init().unwrap();
        c.wifi_setup_rx().unwrap();
        assert!(c.periph.rx_enabled());
        assert_ne!(
            c.periph.mmio_read(regs::RX_DMA_STATUS).unwrap() & regs::DMA_CONFIRMED_BIT,
            0
        );
        let call = c.calls().last().unwrap();
        assert!(call.cycles <= 1881);
        last_path_ok(&c, AckWaitState::Sleep);
        assert!(matches!(c.wifi_setup_rx(), Err(DriverError::PoolExhausted)));
        last_path_ok(&c, AckWaitState::Sleep);
    }

    #[test]
    fn transmit_enters_transmitting_and_rejects_busy_slot() {
        let mut c = ctx(AckWaitState::Transmitting, ChannelScript::default());
        c.wifi_hw_init().unwrap();
        let f = mac_encapsulate(&outbound_frame(), ACCESS_POINT);
        c.wifi_transmit_packet(&f, 0).unwrap();
        assert_eq!(state(&c), states::TRANSMITTING);
        assert_eq!(c.calls().last().unwrap().cycles, 335);
        assert!(matches!(c.wifi_transmit_packet(&f, 0), Err(DriverError::SlotBusy(0))));
        last_path_ok(&c, AckWaitState::Transmitting);
        assert_eq!(c.periph.transmitted.len(), 1);
        assert_eq!(c.periph.transmitted[0].frame, f.to_bytes());
    }

    #[test]
    fn early_ack_returns_early() {
        let script = ChannelScript {
            ack_latency_ns: vec![10_000],
            ..ChannelScript::default()
        };
        let mut c = ctx(AckWaitState::Transmitting, script);
        c.wifi_hw_init().unwrap();
        let f = mac_encapsulate(&outbound_frame(), ACCESS_POINT);
        c.wifi_transmit_packet(&f, 0).unwrap();
        assert_eq!(c.wifi_wait_for_tx().unwrap(), TxOutcome::Acked);
        let call = c.calls().last().unwrap();
        assert!(call.cycles < 1_700, "{}", call.cycles);
        last_path_ok(&c, AckWaitState::Transmitting);
        assert!(c.wifi_process_tx_done().unwrap());
        assert_eq!(c.tx_in_flight(), 0);
        assert!(!c.periph.tx_slots[0].active);
        assert_eq!(c.periph.pending_irq, 0);
        assert!(!c.wifi_process_tx_done().unwrap());
        assert!(!c.wifi_process_timeout().unwrap());
    }

    #[test]
    fn ack_at_bound_uses_almost_the_whole_budget() {
        let mut c = ctx(AckWaitState::Transmitting, ChannelScript::default());
        c.wifi_hw_init().unwrap();
        let report = c.tx_task_run(&outbound_frame()).unwrap();
        assert_eq!(report.outcome, TxOutcome::Acked);
        assert!(report.call.cycles <= 52_615);
        let twin = tx_task_twin(AckWaitState::Transmitting);
        assert_eq!(check_path(&twin, &report.call.path).unwrap(), report.call.cycles);
        // Transmitting from the trigger to the ACK: 326 µs
        let tx = report
            .trace
            .time_in_state_ps(&crate::device::StateId::new(states::TRANSMITTING));
        assert_eq!(tx, 326_000 * PS_PER_NS);
        assert!(report.render().contains("Transmitting"));
    }

    #[test]
    fn dropped_frame_times_out() {
        let script = ChannelScript {
            drops: [0].into(),
            ..ChannelScript::default()
        };
        let mut c = ctx(AckWaitState::Sleep, script);
        c.wifi_hw_init().unwrap();
        let report = c.tx_task_run(&outbound_frame()).unwrap();
        assert_eq!(report.outcome, TxOutcome::TimedOut);
        assert_eq!(c.tx_in_flight(), 0);
        assert_eq!(state(&c), states::STANDBY);
    }

    #[test]
    fn handle_rx_forwards_injected_frames() {
        let script = ChannelScript {
            rx: vec![
                RxInjection {
                    time_ns: 20_000,
                    frame: inbound_frame(vec![1; 100]),
                },
                RxInjection {
                    time_ns: 21_000,
                    frame: inbound_frame(vec![2; 1200]),
                },
            ],
            ..ChannelScript::default()
        };
        let mut c = ctx(AckWaitState::Sleep, script);
        c.wifi_hw_init().unwrap();
        c.wifi_setup_rx().unwrap();
        assert_eq!(c.wifi_handle_rx().unwrap(), 0);
        c.idle(30_000 * PS_PER_NS);
        assert_eq!(c.wifi_handle_rx().unwrap(), 2);
        last_path_ok(&c, AckWaitState::Sleep);
        assert_eq!(c.mac_events.len(), 2);
        let MacEvent::RxFrame(r) = c.mac_events.pop().unwrap();
        let bytes = c.frame_pool().get(r).to_vec();
        let f = c.wifi_mac_handle_rx(&bytes).unwrap();
        assert_eq!(f.payload(), &[1; 100][..]);
        let MacEvent::RxFrame(r) = c.mac_events.pop().unwrap();
        let bytes = c.frame_pool().get(r).to_vec();
        let f = c.wifi_mac_handle_rx(&bytes).unwrap();
        assert_eq!(f.payload(), &[2; 1200][..]);
        last_path_ok(&c, AckWaitState::Sleep);
    }

    #[test]
    fn bssid_and_mac_rx() {
        let mut c = DriverContext::esp32c3(AckWaitState::Sleep, ChannelScript::default()).unwrap();
        assert_eq!(c.wifi_get_bssid(), [0; 6]);
        assert_eq!(c.calls()[0].cycles, 94);
        c.set_bssid(ACCESS_POINT);
        assert_eq!(c.wifi_get_bssid(), ACCESS_POINT);
        assert!(matches!(c.wifi_mac_handle_rx(&[0; 10]), Err(DriverError::Frame(_))));
        last_path_ok(&c, AckWaitState::Sleep);
        let full = c.wifi_mac_handle_rx(&inbound_frame(vec![7; 1500])).unwrap();
        assert_eq!(full.payload().len(), 1500);
        assert_eq!(c.calls().last().unwrap().cycles, 68_715);
    }

    #[test]
    fn interrupt_reasons_are_forwarded_or_counted() {
        let mut c = DriverContext::new(
            crate::device::default_esp32c3_model().0,
            crate::device::PlatformModel::esp32c3(),
            crate::driver::DriverConfig {
                queue_capacity: 1,
                ..Default::default()
            },
            ChannelScript::default(),
        )
        .unwrap();
        c.periph.pending_irq = irq::TX_TIMEOUT | irq::RX_DONE;
        c.wifi_interrupt_handler().unwrap();
        assert_eq!(
            c.hw_events.pop(),
            Some(HwEvent::Interrupt(irq::TX_TIMEOUT | irq::RX_DONE))
        );
        assert_eq!(c.calls()[0].cycles, 943);
        c.wifi_interrupt_handler().unwrap();
        c.wifi_interrupt_handler().unwrap();
        assert_eq!(c.counters.irq_delivered, 2);
        assert_eq!(c.counters.irq_dropped, 1);
        assert_eq!(c.periph.mmio_read(regs::INT_SOURCE).unwrap(), 0);
    }
}
