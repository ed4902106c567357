//! Register map of the simulated Wi-Fi peripheral.
//!
//! Only the addresses in [`REGISTER_MAP`] have behavior. Other word-aligned
//! addresses inside `0x60033000..=0x60035fff` read as zero and ignore
//! writes; anything else faults.

pub const MAC_ADDR_LO: u32 = 0x6003_3000;
/// High half of the MAC address (bytes 4 and 5). Simulator extension.
pub const MAC_ADDR_HI: u32 = 0x6003_3004;
pub const RX_CTRL: u32 = 0x6003_3084;
pub const RX_DMA_BASE: u32 = 0x6003_3088;
/// Bit 0 set once the peripheral has latched the RX list base. Simulator
/// extension.
pub const RX_DMA_STATUS: u32 = 0x6003_308c;
pub const POWER: u32 = 0x6003_3ca0;
pub const TX_SLOT0: u32 = 0x6003_3d08;
pub const INT_STATUS: u32 = 0x6003_3c3c;
pub const INT_CLEAR: u32 = 0x6003_3c40;
pub const TX_SLOT_CLEAR: u32 = 0x6003_3cac;
pub const INT_SOURCE: u32 = 0x600c_2000;
pub const INT_ENABLE: u32 = 0x600c_2104;

pub const WIFI_RANGE: std::ops::RangeInclusive<u32> = 0x6003_3000..=0x6003_5fff;

pub const RX_ENABLE_BIT: u32 = 1 << 31;
pub const POWER_BIT: u32 = 1 << 12;
pub const TX_TRIGGER_BIT: u32 = 1 << 31;
pub const TX_ADDR_MASK: u32 = 0x3fff_ffff;
pub const DMA_CONFIRMED_BIT: u32 = 1;
pub const INT_ENABLE_WIFI_BIT: u32 = 1 << 1;
/// Value of [`INT_SOURCE`] that routes the Wi-Fi interrupt to the CPU.
pub const WIFI_CPU_INTERRUPT: u32 = 1;

/// Interrupt reasons as bits of [`INT_STATUS`].
pub mod irq {
    pub const RX_DONE: u32 = 1 << 0;
    pub const TX_DONE: u32 = 1 << 7;
    pub const TX_TIMEOUT: u32 = 1 << 8;
    pub const ALL: u32 = RX_DONE | TX_DONE | TX_TIMEOUT;
}

/// Address of TX slot `k`'s trigger register.
pub const fn tx_slot_register(slot: usize) -> u32 {
    TX_SLOT0 - 8 * slot as u32
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Access {
    ReadOnly,
    ReadWrite,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RegisterInfo {
    pub address: u32,
    pub name: &'static str,
    pub access: Access,
    pub purpose: &'static str,
    /// Not part of the documented map; added so the model is closed.
    pub extension: bool,
}

const fn reg(address: u32, name: &'static str, access: Access, purpose: &'static str, extension: bool) -> RegisterInfo {
    RegisterInfo {
        address,
        name,
        access,
        purpose,
        extension,
    }
}

pub const REGISTER_MAP: &[RegisterInfo] = &[
    reg(
        MAC_ADDR_LO,
        "MAC_ADDR_LO",
        Access::ReadWrite,
        "MAC address configuration",
        false,
    ),
    reg(
        MAC_ADDR_HI,
        "MAC_ADDR_HI",
        Access::ReadWrite,
        "MAC address configuration (bytes 4-5)",
        true,
    ),
    reg(
        RX_CTRL,
        "RX_CTRL",
        Access::ReadWrite,
        "MS bit enables or disables Rx",
        false,
    ),
    reg(
        RX_DMA_BASE,
        "RX_DMA_BASE",
        Access::ReadWrite,
        "Set base DMA linked list address",
        false,
    ),
    reg(
        RX_DMA_STATUS,
        "RX_DMA_STATUS",
        Access::ReadOnly,
        "DMA list base confirmation",
        true,
    ),
    reg(
        POWER,
        "POWER",
        Access::ReadWrite,
        "Power up and power down Wi-Fi module",
        false,
    ),
    reg(
        TX_SLOT0,
        "TX_SLOT0",
        Access::ReadWrite,
        "Configure Tx DMA address and trigger Tx",
        false,
    ),
    reg(
        tx_slot_register(1),
        "TX_SLOT1",
        Access::ReadWrite,
        "Configure Tx DMA address and trigger Tx (slot 1)",
        true,
    ),
    reg(
        tx_slot_register(2),
        "TX_SLOT2",
        Access::ReadWrite,
        "Configure Tx DMA address and trigger Tx (slot 2)",
        true,
    ),
    reg(
        tx_slot_register(3),
        "TX_SLOT3",
        Access::ReadWrite,
        "Configure Tx DMA address and trigger Tx (slot 3)",
        true,
    ),
    reg(
        tx_slot_register(4),
        "TX_SLOT4",
        Access::ReadWrite,
        "Configure Tx DMA address and trigger Tx (slot 4)",
        true,
    ),
    reg(
        INT_STATUS,
        "INT_STATUS",
        Access::ReadOnly,
        "Get interrupt reason",
        false,
    ),
    reg(INT_CLEAR, "INT_CLEAR", Access::ReadWrite, "Clear interrupt", false),
    reg(
        TX_SLOT_CLEAR,
        "TX_SLOT_CLEAR",
        Access::ReadWrite,
        "Clear Tx slot",
        false,
    ),
    reg(
        INT_SOURCE,
        "INT_SOURCE",
        Access::ReadWrite,
        "Wi-Fi interrupt source selection",
        false,
    ),
    reg(
        INT_ENABLE,
        "INT_ENABLE",
        Access::ReadWrite,
        "CPU interrupt enable (bit 1: Wi-Fi)",
        false,
    ),
];

pub fn lookup(address: u32) -> Option<&'static RegisterInfo> {
    REGISTER_MAP.iter().find(|r| r.address == address)
}

/// Whether `address` can be accessed at all.
pub fn is_mapped(address: u32) -> bool {
    address.is_multiple_of(4) && (WIFI_RANGE.contains(&address) || address == INT_SOURCE || address == INT_ENABLE)
}
