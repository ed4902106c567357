//! DMA-visible RAM and linked-list descriptors.
//!
//! Descriptor layout, three little-endian words:
//!
//! | word | bits  | field                      |
//! |------|-------|----------------------------|
//! | 0    | 0-11  | buffer size                |
//! | 0    | 12-23 | bytes used (length)        |
//! | 0    | 30    | end of frame               |
//! | 0    | 31    | owner: 1 hardware, 0 CPU   |
//! | 1    |       | buffer address             |
//! | 2    |       | next descriptor, 0 = end   |

pub const DMA_RAM_BASE: u32 = 0x3fc8_0000;
pub const DMA_RAM_SIZE: u32 = 0x1_0000;
pub const DESCRIPTOR_BYTES: u32 = 12;
pub const MAX_DMA_LEN: usize = 1600;

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("DMA access of {len} bytes at {addr:#010x} is outside DMA RAM")]
pub struct DmaFault {
    pub addr: u32,
    pub len: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct DmaDescriptor {
    pub size: u16,
    pub length: u16,
    pub eof: bool,
    pub owner_hw: bool,
    pub buffer: u32,
    pub next: u32,
}

impl DmaDescriptor {
    pub fn encode(&self) -> [u32; 3] {
        let w0 = (self.size as u32 & 0xfff)
            | ((self.length as u32 & 0xfff) << 12)
            | ((self.eof as u32) << 30)
            | ((self.owner_hw as u32) << 31);
        [w0, self.buffer, self.next]
    }

    pub fn decode(words: [u32; 3]) -> Self {
        let w0 = words[0];
        DmaDescriptor {
            size: (w0 & 0xfff) as u16,
            length: ((w0 >> 12) & 0xfff) as u16,
            eof: w0 & (1 << 30) != 0,
            owner_hw: w0 & (1 << 31) != 0,
            buffer: words[1],
            next: words[2],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DmaRam {
    bytes: Vec<u8>,
}

impl Default for DmaRam {
    fn default() -> Self {
        DmaRam {
            bytes: vec![0; DMA_RAM_SIZE as usize],
        }
    }
}

impl DmaRam {
    fn range(&self, addr: u32, len: usize) -> Result<std::ops::Range<usize>, DmaFault> {
        let fault = DmaFault { addr, len };
        let off = addr.checked_sub(DMA_RAM_BASE).ok_or(fault)? as usize;
        let end = off.checked_add(len).ok_or(fault)?;
        if end > self.bytes.len() {
            return Err(fault);
        }
        Ok(off..end)
    }

    pub fn read(&self, addr: u32, len: usize) -> Result<&[u8], DmaFault> {
        let r = self.range(addr, len)?;
        Ok(&self.bytes[r])
    }

    pub fn write(&mut self, addr: u32, data: &[u8]) -> Result<(), DmaFault> {
        let r = self.range(addr, data.len())?;
        self.bytes[r].copy_from_slice(data);
        Ok(())
    }

    pub fn read_u32(&self, addr: u32) -> Result<u32, DmaFault> {
        let b = self.read(addr, 4)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }

    pub fn write_u32(&mut self, addr: u32, value: u32) -> Result<(), DmaFault> {
        self.write(addr, &value.to_le_bytes())
    }

    pub fn read_descriptor(&self, addr: u32) -> Result<DmaDescriptor, DmaFault> {
        Ok(DmaDescriptor::decode([
            self.read_u32(addr)?,
            self.read_u32(addr + 4)?,
            self.read_u32(addr + 8)?,
        ]))
    }

    pub fn write_descriptor(&mut self, addr: u32, d: &DmaDescriptor) -> Result<(), DmaFault> {
        let w = d.encode();
        self.write_u32(addr, w[0])?;
        self.write_u32(addr + 4, w[1])?;
        self.write_u32(addr + 8, w[2])
    }
}
