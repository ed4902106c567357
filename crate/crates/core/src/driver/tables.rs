//! Calibrated block tables of the driver functions.
//!
//! Every driver function executes the blocks listed here, in an order its
//! control-flow table allows. The cycle counts are reconstructed constants
//! chosen so that each function's worst-case path sums to its published
//! total; they are not measurements. `inlined` is the cost of the same block
//! when the function is inlined into the TX task (prologue and epilogue
//! shrink).

use crate::device::{ops, states};
use crate::peripheral::AckWaitState;
use crate::program::BoundOrigin;

/// Device ops attached to a block.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ops {
    None,
    Fixed(&'static [&'static str]),
    /// `tx_start` followed by the radio's own airtime-end ops.
    TxTrigger,
    /// Ops the radio fires when the ACK or timeout arrives.
    TxCompletion,
}

impl Ops {
    pub fn resolve(self, policy: AckWaitState) -> Vec<&'static str> {
        match self {
            Ops::None => Vec::new(),
            Ops::Fixed(o) => o.to_vec(),
            Ops::TxTrigger => std::iter::once(ops::TX_START)
                .chain(policy.airtime_end_ops().iter().copied())
                .collect(),
            Ops::TxCompletion => policy.completion_ops().to_vec(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockSpec {
    pub id: &'static str,
    pub cycles: u64,
    pub inlined: u64,
    pub ops: Ops,
}

const fn b(id: &'static str, cycles: u64) -> BlockSpec {
    BlockSpec {
        id,
        cycles,
        inlined: cycles,
        ops: Ops::None,
    }
}

const fn bi(id: &'static str, cycles: u64, inlined: u64) -> BlockSpec {
    BlockSpec {
        id,
        cycles,
        inlined,
        ops: Ops::None,
    }
}

const fn bo(id: &'static str, cycles: u64, ops: Ops) -> BlockSpec {
    BlockSpec {
        id,
        cycles,
        inlined: cycles,
        ops,
    }
}

pub const RX_POOL_LEN: u64 = 10;
/// 800 ns at 160 MHz.
pub const DMA_CONFIRM_POLLS: u64 = 128;
/// 326 µs at 160 MHz, one poll per cycle.
pub const ACK_WAIT_POLLS: u64 = 52_160;
pub const BSSID_LEN: u64 = 6;

pub const HD_ENTRY: BlockSpec = b("hd_entry", 10);
pub const HD_POWER: BlockSpec = bo("hd_power", 31, Ops::Fixed(&[ops::WIFI_POWER_DOWN]));
pub const HD_EXIT: BlockSpec = b("hd_exit", 7);

pub const HI_ENTRY: BlockSpec = b("hi_entry", 10);
pub const HI_POWER: BlockSpec = bo("hi_power", 32, Ops::Fixed(&[ops::WIFI_POWER_UP]));
pub const HI_EXIT: BlockSpec = b("hi_exit", 7);

pub const SI_ENTRY: BlockSpec = b("si_entry", 20);
pub const SI_CLEAR_SRC: BlockSpec = b("si_clear_src", 30);
pub const SI_DISABLE: BlockSpec = b("si_disable", 30);
pub const SI_REGISTER: BlockSpec = b("si_register", 60);
pub const SI_ENABLE: BlockSpec = b("si_enable", 30);
pub const SI_EXIT: BlockSpec = b("si_exit", 8);

pub const SRX_ENTRY: BlockSpec = b("srx_entry", 41);
pub const SRX_HDR: BlockSpec = b("srx_hdr", 0);
pub const SRX_DESC: BlockSpec = b("srx_desc", 160);
pub const SRX_BASE: BlockSpec = b("srx_base", 30);
pub const SRX_ENABLE: BlockSpec = b("srx_enable", 50);
pub const SRX_CONF_HDR: BlockSpec = b("srx_conf_hdr", 0);
pub const SRX_CONF_MISS: BlockSpec = b("srx_conf_miss", 1);
pub const SRX_CONF_HIT: BlockSpec = b("srx_conf_hit", 4);
pub const SRX_EXIT: BlockSpec = b("srx_exit", 28);

pub const TP_ENTRY: BlockSpec = bi("tp_entry", 20, 6);
pub const TP_BUSY: BlockSpec = b("tp_busy", 15);
pub const TP_DESC: BlockSpec = b("tp_desc", 75);
pub const TP_TRIGGER: BlockSpec = bo("tp_trigger", 232, Ops::TxTrigger);
pub const TP_EXIT: BlockSpec = bi("tp_exit", 8, 0);

pub const WT_ENTRY: BlockSpec = bi("wt_entry", 12, 2);
pub const WT_HDR: BlockSpec = b("wt_hdr", 0);
pub const WT_MISS: BlockSpec = b("wt_miss", 1);
pub const WT_ACK: BlockSpec = bo("wt_ack", 0, Ops::TxCompletion);
pub const WT_HIT: BlockSpec = b("wt_hit", 4);
pub const WT_EXIT: BlockSpec = bi("wt_exit", 8, 0);

pub const PD_ENTRY: BlockSpec = bi("pd_entry", 40, 12);
pub const PD_CLEAR_IRQ: BlockSpec = b("pd_clear_irq", 60);
pub const PD_CLEAR_SLOT: BlockSpec = b("pd_clear_slot", 50);
pub const PD_EXIT: BlockSpec = bi("pd_exit", 7, 0);

pub const HRX_ENTRY: BlockSpec = b("hrx_entry", 45);
pub const HRX_HDR: BlockSpec = b("hrx_hdr", 0);
pub const HRX_CHECK: BlockSpec = b("hrx_check", 80);
pub const HRX_FORWARD: BlockSpec = b("hrx_forward", 1040);
pub const HRX_DEFER: BlockSpec = b("hrx_defer", 30);
pub const HRX_REARM: BlockSpec = b("hrx_rearm", 100);
pub const HRX_NEXT: BlockSpec = b("hrx_next", 20);
pub const HRX_RELINK: BlockSpec = b("hrx_relink", 60);
pub const HRX_CONF_HDR: BlockSpec = b("hrx_conf_hdr", 0);
pub const HRX_CONF_MISS: BlockSpec = b("hrx_conf_miss", 1);
pub const HRX_CONF_HIT: BlockSpec = b("hrx_conf_hit", 4);
pub const HRX_EXIT: BlockSpec = b("hrx_exit", 352);

pub const PT_ENTRY: BlockSpec = bi("pt_entry", 35, 7);
pub const PT_CLEAR_IRQ: BlockSpec = b("pt_clear_irq", 50);
pub const PT_CLEAR_SLOT: BlockSpec = b("pt_clear_slot", 45);
pub const PT_EXIT: BlockSpec = bi("pt_exit", 8, 0);

pub const GB_ENTRY: BlockSpec = b("gb_entry", 10);
pub const GB_HDR: BlockSpec = b("gb_hdr", 2);
pub const GB_COPY: BlockSpec = b("gb_copy", 10);
pub const GB_EXIT: BlockSpec = b("gb_exit", 10);

pub const MHR_ENTRY: BlockSpec = b("mhr_entry", 600);
pub const MHR_ERR: BlockSpec = b("mhr_err", 40);
pub const MHR_HDR: BlockSpec = b("mhr_hdr", 500);
pub const MHR_COPY_HDR: BlockSpec = b("mhr_copy_hdr", 1);
pub const MHR_COPY: BlockSpec = b("mhr_copy", 44);
pub const MHR_EXIT: BlockSpec = b("mhr_exit", 114);

pub const ISR_ENTRY: BlockSpec = b("isr_entry", 300);
pub const ISR_READ: BlockSpec = b("isr_read", 80);
pub const ISR_ENQUEUE: BlockSpec = b("isr_enqueue", 350);
pub const ISR_DROP: BlockSpec = b("isr_drop", 60);
pub const ISR_CLEAR: BlockSpec = b("isr_clear", 100);
pub const ISR_EXIT: BlockSpec = b("isr_exit", 113);

pub const TASK_ENTRY: BlockSpec = b("task_entry", 10);
pub const TASK_EXIT: BlockSpec = b("task_exit", 4);

type Edge = (&'static str, &'static str);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FunctionSpec {
    pub name: &'static str,
    pub blocks: &'static [BlockSpec],
    pub edges: &'static [Edge],
    pub exits: &'static [&'static str],
    pub loops: &'static [(&'static str, u64, BoundOrigin)],
    pub entry: Entry,
}

/// Device states a function may be entered in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Entry {
    States(&'static [&'static str]),
    /// Whatever state the radio settles in once a frame's airtime ends.
    AfterAirtime,
}

impl Entry {
    pub fn resolve(self, policy: AckWaitState) -> Vec<&'static str> {
        match self {
            Entry::States(s) => s.to_vec(),
            Entry::AfterAirtime => vec![match policy {
                AckWaitState::Transmitting => states::TRANSMITTING,
                AckWaitState::Standby => states::STANDBY,
                AckWaitState::Sleep => states::SLEEP,
            }],
        }
    }
}

const ALL_STATES: &[&str] = &[states::SLEEP, states::STANDBY, states::TRANSMITTING];

pub const HW_DEINIT: FunctionSpec = FunctionSpec {
    name: "wifi_hw_deinit",
    blocks: &[HD_ENTRY, HD_POWER, HD_EXIT],
    edges: &[("hd_entry", "hd_power"), ("hd_power", "hd_exit")],
    exits: &["hd_exit"],
    loops: &[],
    entry: Entry::States(ALL_STATES),
};

pub const HW_INIT: FunctionSpec = FunctionSpec {
    name: "wifi_hw_init",
    blocks: &[HI_ENTRY, HI_POWER, HI_EXIT],
    edges: &[("hi_entry", "hi_power"), ("hi_power", "hi_exit")],
    exits: &["hi_exit"],
    loops: &[],
    entry: Entry::States(&[states::SLEEP, states::STANDBY]),
};

pub const SETUP_INTERRUPT: FunctionSpec = FunctionSpec {
    name: "wifi_setup_interrupt",
    blocks: &[SI_ENTRY, SI_CLEAR_SRC, SI_DISABLE, SI_REGISTER, SI_ENABLE, SI_EXIT],
    edges: &[
        ("si_entry", "si_clear_src"),
        ("si_clear_src", "si_disable"),
        ("si_disable", "si_register"),
        ("si_register", "si_enable"),
        ("si_enable", "si_exit"),
    ],
    exits: &["si_exit"],
    loops: &[],
    entry: Entry::States(ALL_STATES),
};

pub const SETUP_RX: FunctionSpec = FunctionSpec {
    name: "wifi_setup_rx",
    blocks: &[
        SRX_ENTRY,
        SRX_HDR,
        SRX_DESC,
        SRX_BASE,
        SRX_ENABLE,
        SRX_CONF_HDR,
        SRX_CONF_MISS,
        SRX_CONF_HIT,
        SRX_EXIT,
    ],
    edges: &[
        ("srx_entry", "srx_hdr"),
        ("srx_entry", "srx_exit"),
        ("srx_hdr", "srx_desc"),
        ("srx_desc", "srx_hdr"),
        ("srx_hdr", "srx_base"),
        ("srx_base", "srx_enable"),
        ("srx_enable", "srx_conf_hdr"),
        ("srx_conf_hdr", "srx_conf_miss"),
        ("srx_conf_miss", "srx_conf_hdr"),
        ("srx_conf_hdr", "srx_conf_hit"),
        ("srx_conf_hit", "srx_exit"),
    ],
    exits: &["srx_exit"],
    loops: &[
        ("srx_hdr", RX_POOL_LEN, BoundOrigin::Driver),
        ("srx_conf_hdr", DMA_CONFIRM_POLLS, BoundOrigin::Hardware),
    ],
    entry: Entry::States(&[states::STANDBY]),
};

pub const TRANSMIT_PACKET: FunctionSpec = FunctionSpec {
    name: "wifi_transmit_packet",
    blocks: &[TP_ENTRY, TP_BUSY, TP_DESC, TP_TRIGGER, TP_EXIT],
    edges: &[
        ("tp_entry", "tp_busy"),
        ("tp_busy", "tp_exit"),
        ("tp_entry", "tp_desc"),
        ("tp_desc", "tp_trigger"),
        ("tp_trigger", "tp_exit"),
    ],
    exits: &["tp_exit"],
    loops: &[],
    entry: Entry::States(&[states::STANDBY]),
};

pub const WAIT_FOR_TX: FunctionSpec = FunctionSpec {
    name: "wifi_wait_for_tx",
    blocks: &[WT_ENTRY, WT_HDR, WT_MISS, WT_ACK, WT_HIT, WT_EXIT],
    edges: &[
        ("wt_entry", "wt_hdr"),
        ("wt_hdr", "wt_miss"),
        ("wt_miss", "wt_hdr"),
        ("wt_hdr", "wt_ack"),
        ("wt_ack", "wt_hit"),
        ("wt_hit", "wt_exit"),
        ("wt_hdr", "wt_exit"),
    ],
    exits: &["wt_exit"],
    loops: &[("wt_hdr", ACK_WAIT_POLLS, BoundOrigin::Protocol)],
    entry: Entry::AfterAirtime,
};

pub const PROCESS_TX_DONE: FunctionSpec = FunctionSpec {
    name: "wifi_process_tx_done",
    blocks: &[PD_ENTRY, PD_CLEAR_IRQ, PD_CLEAR_SLOT, PD_EXIT],
    edges: &[
        ("pd_entry", "pd_clear_irq"),
        ("pd_clear_irq", "pd_clear_slot"),
        ("pd_clear_slot", "pd_exit"),
        ("pd_entry", "pd_exit"),
    ],
    exits: &["pd_exit"],
    loops: &[],
    entry: Entry::States(&[states::STANDBY]),
};

pub const HANDLE_RX: FunctionSpec = FunctionSpec {
    name: "wifi_handle_rx",
    blocks: &[
        HRX_ENTRY,
        HRX_HDR,
        HRX_CHECK,
        HRX_FORWARD,
        HRX_DEFER,
        HRX_REARM,
        HRX_NEXT,
        HRX_RELINK,
        HRX_CONF_HDR,
        HRX_CONF_MISS,
        HRX_CONF_HIT,
        HRX_EXIT,
    ],
    edges: &[
        ("hrx_entry", "hrx_hdr"),
        ("hrx_hdr", "hrx_check"),
        ("hrx_check", "hrx_forward"),
        ("hrx_check", "hrx_defer"),
        ("hrx_forward", "hrx_rearm"),
        ("hrx_defer", "hrx_rearm"),
        ("hrx_rearm", "hrx_next"),
        ("hrx_next", "hrx_hdr"),
        ("hrx_hdr", "hrx_relink"),
        ("hrx_hdr", "hrx_exit"),
        ("hrx_relink", "hrx_conf_hdr"),
        ("hrx_conf_hdr", "hrx_conf_miss"),
        ("hrx_conf_miss", "hrx_conf_hdr"),
        ("hrx_conf_hdr", "hrx_conf_hit"),
        ("hrx_conf_hit", "hrx_exit"),
    ],
    exits: &["hrx_exit"],
    loops: &[
        ("hrx_hdr", RX_POOL_LEN, BoundOrigin::Driver),
        ("hrx_conf_hdr", DMA_CONFIRM_POLLS, BoundOrigin::Hardware),
    ],
    entry: Entry::States(&[states::STANDBY]),
};

pub const PROCESS_TIMEOUT: FunctionSpec = FunctionSpec {
    name: "wifi_process_timeout",
    blocks: &[PT_ENTRY, PT_CLEAR_IRQ, PT_CLEAR_SLOT, PT_EXIT],
    edges: &[
        ("pt_entry", "pt_clear_irq"),
        ("pt_clear_irq", "pt_clear_slot"),
        ("pt_clear_slot", "pt_exit"),
        ("pt_entry", "pt_exit"),
    ],
    exits: &["pt_exit"],
    loops: &[],
    entry: Entry::States(&[states::STANDBY]),
};

pub const GET_BSSID: FunctionSpec = FunctionSpec {
    name: "wifi_get_bssid",
    blocks: &[GB_ENTRY, GB_HDR, GB_COPY, GB_EXIT],
    edges: &[
        ("gb_entry", "gb_hdr"),
        ("gb_hdr", "gb_copy"),
        ("gb_copy", "gb_hdr"),
        ("gb_hdr", "gb_exit"),
    ],
    exits: &["gb_exit"],
    loops: &[("gb_hdr", BSSID_LEN, BoundOrigin::Protocol)],
    entry: Entry::States(ALL_STATES),
};

pub const MAC_HANDLE_RX: FunctionSpec = FunctionSpec {
    name: "wifi_mac_handle_rx",
    blocks: &[MHR_ENTRY, MHR_ERR, MHR_HDR, MHR_COPY_HDR, MHR_COPY, MHR_EXIT],
    edges: &[
        ("mhr_entry", "mhr_err"),
        ("mhr_err", "mhr_exit"),
        ("mhr_entry", "mhr_hdr"),
        ("mhr_hdr", "mhr_copy_hdr"),
        ("mhr_copy_hdr", "mhr_copy"),
        ("mhr_copy", "mhr_copy_hdr"),
        ("mhr_copy_hdr", "mhr_exit"),
    ],
    exits: &["mhr_exit"],
    loops: &[(
        "mhr_copy_hdr",
        crate::driver::frames::MAX_PAYLOAD as u64,
        BoundOrigin::Protocol,
    )],
    entry: Entry::States(ALL_STATES),
};

pub const INTERRUPT_HANDLER: FunctionSpec = FunctionSpec {
    name: "wifi_interrupt_handler",
    blocks: &[ISR_ENTRY, ISR_READ, ISR_ENQUEUE, ISR_DROP, ISR_CLEAR, ISR_EXIT],
    edges: &[
        ("isr_entry", "isr_read"),
        ("isr_read", "isr_enqueue"),
        ("isr_read", "isr_drop"),
        ("isr_enqueue", "isr_clear"),
        ("isr_drop", "isr_clear"),
        ("isr_clear", "isr_exit"),
    ],
    exits: &["isr_exit"],
    loops: &[],
    entry: Entry::States(ALL_STATES),
};

/// The twelve driver functions, in result-table order.
pub const FUNCTIONS: [&FunctionSpec; 12] = [
    &HW_DEINIT,
    &SETUP_INTERRUPT,
    &SETUP_RX,
    &HW_INIT,
    &TRANSMIT_PACKET,
    &WAIT_FOR_TX,
    &PROCESS_TX_DONE,
    &HANDLE_RX,
    &PROCESS_TIMEOUT,
    &GET_BSSID,
    &MAC_HANDLE_RX,
    &INTERRUPT_HANDLER,
];

pub fn function(name: &str) -> Option<&'static FunctionSpec> {
    FUNCTIONS.iter().copied().find(|f| f.name == name)
}

pub const TX_TASK_NAME: &str = "tx_task";
