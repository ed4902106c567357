//! 802.3 and 802.11 data frames.

pub type MacAddr = [u8; 6];

pub const MAX_PAYLOAD: usize = 1500;
pub const MAX_80211_LEN: usize = 1600;
pub const WIFI_HEADER_LEN: usize = 24;
pub const LLC_SNAP_LEN: usize = 8;
pub const ETH_HEADER_LEN: usize = 14;

/// Frame control of a plain data frame (type 2, subtype 0).
pub const FC_DATA: u8 = 0x08;
pub const FLAG_TO_DS: u8 = 0x01;
pub const FLAG_FROM_DS: u8 = 0x02;
const LLC_SNAP: [u8; 6] = [0xaa, 0xaa, 0x03, 0x00, 0x00, 0x00];

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FrameError {
    #[error("payload of {0} bytes exceeds {MAX_PAYLOAD}")]
    PayloadTooLong(usize),
    #[error("frame of {0} bytes exceeds {MAX_80211_LEN}")]
    FrameTooLong(usize),
    #[error("frame of {0} bytes is too short")]
    TooShort(usize),
    #[error("not a data frame (frame control {0:#04x})")]
    NotData(u8),
    #[error("unsupported distribution-system flags {0:#04x}")]
    DsFlags(u8),
    #[error("frame is for another BSS")]
    WrongBssid,
    #[error("missing LLC/SNAP header")]
    NoSnap,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame8023 {
    pub dst: MacAddr,
    pub src: MacAddr,
    pub ethertype: u16,
    payload: Vec<u8>,
}

impl Frame8023 {
    pub fn new(dst: MacAddr, src: MacAddr, ethertype: u16, payload: Vec<u8>) -> Result<Self, FrameError> {
        if payload.len() > MAX_PAYLOAD {
            return Err(FrameError::PayloadTooLong(payload.len()));
        }
        Ok(Frame8023 {
            dst,
            src,
            ethertype,
            payload,
        })
    }

    pub fn payload(&self) -> &[u8] {
        &self.payload
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(ETH_HEADER_LEN + self.payload.len());
        out.extend_from_slice(&self.dst);
        out.extend_from_slice(&self.src);
        out.extend_from_slice(&self.ethertype.to_be_bytes());
        out.extend_from_slice(&self.payload);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, FrameError> {
        if bytes.len() < ETH_HEADER_LEN {
            return Err(FrameError::TooShort(bytes.len()));
        }
        Frame8023::new(
            bytes[0..6].try_into().expect("6 bytes"),
            bytes[6..12].try_into().expect("6 bytes"),
            u16::from_be_bytes([bytes[12], bytes[13]]),
            bytes[ETH_HEADER_LEN..].to_vec(),
        )
    }
}

/// An 802.11 frame: 24-byte header plus body.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame80211 {
    pub frame_control: [u8; 2],
    pub duration: u16,
    pub addr1: MacAddr,
    pub addr2: MacAddr,
    pub addr3: MacAddr,
    pub seq_ctrl: u16,
    body: Vec<u8>,
}

impl Frame80211 {
    pub fn new(
        frame_control: [u8; 2],
        addr1: MacAddr,
        addr2: MacAddr,
        addr3: MacAddr,
        body: Vec<u8>,
    ) -> Result<Self, FrameError> {
        let len = WIFI_HEADER_LEN + body.len();
        if len > MAX_80211_LEN {
            return Err(FrameError::FrameTooLong(len));
        }
        Ok(Frame80211 {
            frame_control,
            duration: 0,
            addr1,
            addr2,
            addr3,
            seq_ctrl: 0,
            body,
        })
    }

    pub fn body(&self) -> &[u8] {
        &self.body
    }

    pub fn len(&self) -> usize {
        WIFI_HEADER_LEN + self.body.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.len());
        out.extend_from_slice(&self.frame_control);
        out.extend_from_slice(&self.duration.to_le_bytes());
        out.extend_from_slice(&self.addr1);
        out.extend_from_slice(&self.addr2);
        out.extend_from_slice(&self.addr3);
        out.extend_from_slice(&self.seq_ctrl.to_le_bytes());
        out.extend_from_slice(&self.body);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, FrameError> {
        if bytes.len() < WIFI_HEADER_LEN {
            return Err(FrameError::TooShort(bytes.len()));
        }
        if bytes.len() > MAX_80211_LEN {
            return Err(FrameError::FrameTooLong(bytes.len()));
        }
        let addr = |o: usize| -> MacAddr { bytes[o..o + 6].try_into().expect("6 bytes") };
        Ok(Frame80211 {
            frame_control: [bytes[0], bytes[1]],
            duration: u16::from_le_bytes([bytes[2], bytes[3]]),
            addr1: addr(4),
            addr2: addr(10),
            addr3: addr(16),
            seq_ctrl: u16::from_le_bytes([bytes[22], bytes[23]]),
            body: bytes[WIFI_HEADER_LEN..].to_vec(),
        })
    }
}

/// Wraps an Ethernet frame for transmission to the access point (ToDS):
/// addr1 = BSSID, addr2 = source, addr3 = destination.
pub fn mac_encapsulate(frame: &Frame8023, bssid: MacAddr) -> Frame80211 {
    let mut body = Vec::with_capacity(LLC_SNAP_LEN + frame.payload.len());
    body.extend_from_slice(&LLC_SNAP);
    body.extend_from_slice(&frame.ethertype.to_be_bytes());
    body.extend_from_slice(&frame.payload);
    Frame80211::new([FC_DATA, FLAG_TO_DS], bssid, frame.src, frame.dst, body)
        .expect("1500-byte payload plus 32 header bytes fits 1600")
}

/// Wraps an Ethernet frame as the access point would deliver it (FromDS):
/// addr1 = destination, addr2 = BSSID, addr3 = source.
pub fn encapsulate_from_ap(frame: &Frame8023, bssid: MacAddr) -> Frame80211 {
    let mut f = mac_encapsulate(frame, bssid);
    f.frame_control[1] = FLAG_FROM_DS;
    f.addr1 = frame.dst;
    f.addr2 = bssid;
    f.addr3 = frame.src;
    f
}

/// Inverse of [`mac_encapsulate`]; also accepts FromDS frames
/// (addr1 = destination, addr2 = BSSID, addr3 = source).
pub fn decapsulate(frame: &Frame80211, bssid: MacAddr) -> Result<Frame8023, FrameError> {
    let [fc, flags] = frame.frame_control;
    if fc & 0x0c != FC_DATA {
        return Err(FrameError::NotData(fc));
    }
    let (dst, src, bss) = match flags & (FLAG_TO_DS | FLAG_FROM_DS) {
        FLAG_TO_DS => (frame.addr3, frame.addr2, frame.addr1),
        FLAG_FROM_DS => (frame.addr1, frame.addr3, frame.addr2),
        other => return Err(FrameError::DsFlags(other)),
    };
    if bss != bssid {
        return Err(FrameError::WrongBssid);
    }
    let body = &frame.body;
    if body.len() < LLC_SNAP_LEN {
        return Err(FrameError::TooShort(frame.len()));
    }
    if body[..6] != LLC_SNAP {
        return Err(FrameError::NoSnap);
    }
    let ethertype = u16::from_be_bytes([body[6], body[7]]);
    Frame8023::new(dst, src, ethertype, body[LLC_SNAP_LEN..].to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;

    const BSSID: MacAddr = [0x02, 0, 0, 0, 0, 0xaa];
    const A: MacAddr = [0x02, 1, 2, 3, 4, 5];
    const B: MacAddr = [0x02, 6, 7, 8, 9, 10];

    #[test]
    fn encapsulation_fields_and_length() {
        let f = Frame8023::new(B, A, 0x0800, vec![1, 2, 3]).unwrap();
        let w = mac_encapsulate(&f, BSSID);
        assert_eq!(w.addr1, BSSID);
        assert_eq!(w.addr2, A);
        assert_eq!(w.addr3, B);
        assert_eq!(w.len(), 3 + WIFI_HEADER_LEN + LLC_SNAP_LEN);
        assert_eq!(decapsulate(&w, BSSID).unwrap(), f);
    }

    #[test]
    fn from_ds_is_accepted() {
        let f = Frame8023::new(B, A, 0x86dd, vec![9; 40]).unwrap();
        let mut w = mac_encapsulate(&f, BSSID);
        w.frame_control[1] = FLAG_FROM_DS;
        (w.addr1, w.addr2, w.addr3) = (B, BSSID, A);
        assert_eq!(decapsulate(&w, BSSID).unwrap(), f);
    }

    #[test]
    fn malformed_frames() {
        assert!(matches!(
            Frame80211::from_bytes(&[0; 10]),
            Err(FrameError::TooShort(10))
        ));
        let f = Frame8023::new(B, A, 0x0800, vec![]).unwrap();
        let w = mac_encapsulate(&f, BSSID);
        assert_eq!(decapsulate(&w, [0; 6]), Err(FrameError::WrongBssid));
        let mut bad = w.clone();
        bad.frame_control[0] = 0x80;
        assert!(decapsulate(&bad, BSSID).is_err());
        let mut bad = w.clone();
        bad.frame_control[1] = FLAG_TO_DS | FLAG_FROM_DS;
        assert!(decapsulate(&bad, BSSID).is_err());
        assert!(Frame8023::new(A, B, 0, vec![0; 1501]).is_err());
    }

    #[test]
    fn byte_round_trips() {
        let f = Frame8023::new(B, A, 0x0800, vec![5; 100]).unwrap();
        assert_eq!(Frame8023::from_bytes(&f.to_bytes()).unwrap(), f);
        let w = mac_encapsulate(&f, BSSID);
        assert_eq!(Frame80211::from_bytes(&w.to_bytes()).unwrap(), w);
    }
}
