//! Cooperative scheduling of the interrupt handler, the driver task and the
//! MAC task on one logical timeline. Every step runs to completion.

use super::frames::Frame80211;
use super::{DriverContext, DriverError, HwEvent, MacEvent};
use crate::peripheral::regs::{self, irq};

/// What one scheduler step did.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Step {
    Interrupt,
    Driver,
    Mac,
    Idle,
    Done,
}

impl DriverContext {
    /// One driver-task step for `event`.
    pub fn driver_step(&mut self, event: HwEvent) -> Result<(), DriverError> {
        match event {
            HwEvent::Interrupt(reason) => {
                if reason & irq::RX_DONE != 0 {
                    self.wifi_handle_rx()?;
                }
                if reason & irq::TX_DONE != 0 {
                    self.wifi_process_tx_done()?;
                }
                if reason & irq::TX_TIMEOUT != 0 {
                    self.wifi_process_timeout()?;
                }
                // unmask the source the handler cleared
                self.write(regs::INT_SOURCE, regs::WIFI_CPU_INTERRUPT)?;
            }
            HwEvent::TxRequest(r) => {
                let frame = Frame80211::from_bytes(self.frames.get(r));
                self.frames.release(r);
                let frame = frame?;
                match self.free_tx_slot() {
                    Some(slot) => self.wifi_transmit_packet(&frame, slot)?,
                    None => self.counters.tx_rejected += 1,
                }
            }
        }
        Ok(())
    }

    /// One MAC-task step for `event`.
    pub fn mac_step(&mut self, event: MacEvent) {
        let MacEvent::RxFrame(r) = event;
        let mut buf = [0u8; super::frames::MAX_80211_LEN];
        let len = r.len;
        buf[..len].copy_from_slice(self.frames.get(r));
        self.frames.release(r);
        match self.wifi_mac_handle_rx(&buf[..len]) {
            Ok(f) => {
                self.counters.mac_delivered += 1;
                self.delivered.push(f);
            }
            Err(e) => {
                log::debug!("MAC task dropped frame: {e}");
                self.counters.mac_malformed += 1;
            }
        }
    }

    /// Runs the highest-priority ready work, or idles until the next
    /// peripheral event (at most until `until_ps`).
    pub fn step(&mut self, until_ps: u64) -> Result<Step, DriverError> {
        if self.isr_registered && self.periph.interrupt_line() {
            self.wifi_interrupt_handler()?;
            return Ok(Step::Interrupt);
        }
        if let Some(ev) = self.hw_events.pop() {
            self.driver_step(ev)?;
            return Ok(Step::Driver);
        }
        if let Some(ev) = self.mac_events.pop() {
            self.mac_step(ev);
            return Ok(Step::Mac);
        }
        let now = self.now_ps();
        if now >= until_ps {
            return Ok(Step::Done);
        }
        let next = self.periph.next_event_ps().unwrap_or(until_ps).clamp(now, until_ps);
        self.idle(next - now);
        Ok(Step::Idle)
    }

    /// Steps until `until_ps` with no work left.
    pub fn run_until(&mut self, until_ps: u64) -> Result<(), DriverError> {
        while self.step(until_ps)? != Step::Done {}
        Ok(())
    }
}
