//! Channel scripts: how the simulated air interface behaves during a run.
//!
//! ```text
//! ack_latency_ns 50000      # one line per transmission; the last repeats
//! rx 500 080200...          # inject a raw 802.11 frame (hex) at 500 ns
//! drop 2                    # transmission #2 (0-based) is never acknowledged
//! airtime_ns 1450           # trigger to end of airtime
//! dma_confirm_ns 800        # RX list base write to confirmation
//! ```

use super::dma::MAX_DMA_LEN;
use std::collections::BTreeSet;
use std::fmt::Write as _;

/// Upper bound on ACK latency and the TX timeout, in ns.
pub const ACK_BOUND_NS: u64 = 326_000;
/// Lower bound on ACK latency (one SIFS-scale turnaround), in ns.
pub const ACK_FLOOR_NS: u64 = 10_000;
/// Upper bound on DMA list confirmation, in ns.
pub const DMA_CONFIRM_BOUND_NS: u64 = 800;
/// Upper bound on frame airtime, in ns: the duration of the trigger block.
pub const AIRTIME_BOUND_NS: u64 = 1_450;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RxInjection {
    pub time_ns: u64,
    pub frame: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChannelScript {
    pub ack_latency_ns: Vec<u64>,
    pub rx: Vec<RxInjection>,
    pub drops: BTreeSet<u64>,
    pub airtime_ns: u64,
    pub dma_confirm_ns: u64,
}

impl Default for ChannelScript {
    fn default() -> Self {
        ChannelScript {
            ack_latency_ns: Vec::new(),
            rx: Vec::new(),
            drops: BTreeSet::new(),
            airtime_ns: AIRTIME_BOUND_NS,
            dma_confirm_ns: DMA_CONFIRM_BOUND_NS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ScriptError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("{0}")]
    Bound(String),
}

impl ChannelScript {
    /// ACK latency of transmission `index` (0-based); `None` when dropped.
    pub fn ack_for(&self, index: u64) -> Option<u64> {
        if self.drops.contains(&index) {
            return None;
        }
        let i = (index as usize).min(self.ack_latency_ns.len().saturating_sub(1));
        Some(self.ack_latency_ns.get(i).copied().unwrap_or(ACK_BOUND_NS))
    }

    /// Rejects scripts that break the timing and size bounds the analysis
    /// relies on.
    pub fn check(&self) -> Result<(), ScriptError> {
        for &l in &self.ack_latency_ns {
            if !(ACK_FLOOR_NS..=ACK_BOUND_NS).contains(&l) {
                return Err(ScriptError::Bound(format!(
                    "ack latency {l} ns outside [{ACK_FLOOR_NS}, {ACK_BOUND_NS}] ns"
                )));
            }
        }
        for r in &self.rx {
            if r.frame.is_empty() || r.frame.len() > MAX_DMA_LEN {
                return Err(ScriptError::Bound(format!(
                    "rx frame of {} bytes at {} ns: frames must be 1..={MAX_DMA_LEN} bytes",
                    r.frame.len(),
                    r.time_ns
                )));
            }
        }
        if self.airtime_ns == 0 || self.airtime_ns > AIRTIME_BOUND_NS {
            return Err(ScriptError::Bound(format!(
                "airtime {} ns outside [1, {AIRTIME_BOUND_NS}] ns",
                self.airtime_ns
            )));
        }
        if self.dma_confirm_ns > DMA_CONFIRM_BOUND_NS {
            return Err(ScriptError::Bound(format!(
                "DMA confirmation {} ns exceeds {DMA_CONFIRM_BOUND_NS} ns",
                self.dma_confirm_ns
            )));
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for l in &self.ack_latency_ns {
            let _ = writeln!(out, "ack_latency_ns {l}");
        }
        if self.airtime_ns != AIRTIME_BOUND_NS {
            let _ = writeln!(out, "airtime_ns {}", self.airtime_ns);
        }
        if self.dma_confirm_ns != DMA_CONFIRM_BOUND_NS {
            let _ = writeln!(out, "dma_confirm_ns {}", self.dma_confirm_ns);
        }
        for d in &self.drops {
            let _ = writeln!(out, "drop {d}");
        }
        for r in &self.rx {
            let _ = writeln!(out, "rx {} {}", r.time_ns, to_hex(&r.frame));
        }
        out
    }
}

pub fn to_hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn from_hex(text: &str) -> Option<Vec<u8>> {
    let digits: Vec<u8> = text.bytes().filter(|b| !b.is_ascii_whitespace()).collect();
    if !digits.len().is_multiple_of(2) {
        return None;
    }
    digits
        .chunks(2)
        .map(|p| u8::from_str_radix(std::str::from_utf8(p).ok()?, 16).ok())
        .collect()
}

/// Parses and bound-checks a channel script.
pub fn parse_channel_script(text: &str) -> Result<ChannelScript, ScriptError> {
    let mut s = ChannelScript::default();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let err = |message: String| ScriptError::Syntax { line, message };
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let mut words = content.split_whitespace();
        let directive = words.next().unwrap_or_default();
        let mut number = |what: &str| -> Result<u64, ScriptError> {
            let w = words.next().ok_or_else(|| err(format!("missing {what}")))?;
            w.parse().map_err(|_| err(format!("invalid {what} `{w}`")))
        };
        match directive {
            "ack_latency_ns" => {
                let v = number("latency")?;
                s.ack_latency_ns.push(v);
            }
            "airtime_ns" => s.airtime_ns = number("airtime")?,
            "dma_confirm_ns" => s.dma_confirm_ns = number("confirmation delay")?,
            "drop" => {
                let v = number("transmission index")?;
                s.drops.insert(v);
            }
            "rx" => {
                let t = number("time")?;
                let hex: String = words.collect::<Vec<_>>().join("");
                let frame = from_hex(&hex).ok_or_else(|| err("invalid hex frame".into()))?;
                s.rx.push(RxInjection { time_ns: t, frame });
                continue;
            }
            other => return Err(err(format!("unknown directive `{other}`"))),
        }
        if let Some(extra) = content.split_whitespace().nth(2) {
            return Err(err(format!("unexpected `{extra}`")));
        }
    }
    s.check()?;
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_round_trip() {
        let text = "ack_latency_ns 50000\nack_latency_ns 326000\ndrop 2\nrx 500 0801aabb\n";
        let s = parse_channel_script(text).unwrap();
        assert_eq!(s.ack_for(0), Some(50_000));
        assert_eq!(s.ack_for(1), Some(326_000));
        assert_eq!(s.ack_for(2), None);
        assert_eq!(s.ack_for(9), Some(326_000));
        assert_eq!(s.rx[0].frame, vec![0x08, 0x01, 0xaa, 0xbb]);
        assert_eq!(parse_channel_script(&s.to_text()).unwrap(), s);
    }

    #[test]
    fn bounds_are_enforced() {
        assert!(parse_channel_script("ack_latency_ns 326001").is_err());
        assert!(parse_channel_script("ack_latency_ns 9999").is_err());
        assert!(parse_channel_script("dma_confirm_ns 801").is_err());
        assert!(parse_channel_script("airtime_ns 2000").is_err());
        let big = format!("rx 0 {}", "00".repeat(1601));
        assert!(parse_channel_script(&big).is_err());
    }

    #[test]
    fn syntax_errors() {
        assert!(matches!(
            parse_channel_script("ack_latency_ns"),
            Err(ScriptError::Syntax { line: 1, .. })
        ));
        assert!(parse_channel_script("rx 10 0g").is_err());
        assert!(parse_channel_script("warp 1").is_err());
        assert!(parse_channel_script("drop 1 2").is_err());
        assert_eq!(parse_channel_script("# nothing\n\n").unwrap(), ChannelScript::default());
    }
}
