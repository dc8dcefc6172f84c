//! Packet framing for coded rows.
//!
//! Each packet is self-describing: a fixed header names the field, the
//! generation geometry, and the row, followed by the raw payload bytes.
//! Streams are plain concatenations of packets.
//!
//! Layout, all multi-byte integers big-endian:
//!
//! ```text
//! "SRTZ"  magic, 4 bytes
//! version 1 byte (1 = base, 2 = base plus trailing pad length)
//! p       1 byte
//! poly    2 bytes, the reducing polynomial minus 2^p (the leading term
//!         is implied by p, so the remainder always fits 16 bits)
//! k       2 bytes
//! gen     4 bytes
//! branch  1 byte
//! index   2 bytes
//! len     2 bytes
//! pad     4 bytes, version 2 only: zero bytes appended to the source
//!         tail when the last generation was not full
//! payload len bytes
//! ```

use std::error::Error;
use std::fmt;
use std::io::{self, Read, Write};

pub const MAGIC: [u8; 4] = *b"SRTZ";

/// Errors from packet framing.
#[derive(Debug)]
pub enum WireError {
    Io(io::Error),
    /// Stream does not start a packet with the expected magic bytes.
    BadMagic([u8; 4]),
    /// Version byte this reader does not understand.
    UnsupportedVersion(u8),
    /// A header field is out of range.
    BadHeader { reason: &'static str },
    /// Stream ended inside a packet.
    Truncated,
    /// Payload does not fit the 16-bit length field.
    PayloadTooLong(usize),
}

impl fmt::Display for WireError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WireError::Io(e) => write!(f, "io error: {}", e),
            WireError::BadMagic(m) => write!(f, "bad magic bytes {:02x?}", m),
            WireError::UnsupportedVersion(v) => write!(f, "unsupported packet version {}", v),
            WireError::BadHeader { reason } => write!(f, "bad packet header: {}", reason),
            WireError::Truncated => write!(f, "stream truncated inside a packet"),
            WireError::PayloadTooLong(l) => write!(f, "payload of {} bytes exceeds u16", l),
        }
    }
}

impl Error for WireError {
    fn source(&self) -> Option<&(dyn Error + 'static)> {
        match self {
            WireError::Io(e) => Some(e),
            _ => None,
        }
    }
}

impl From<io::Error> for WireError {
    fn from(e: io::Error) -> WireError {
        if e.kind() == io::ErrorKind::UnexpectedEof {
            WireError::Truncated
        } else {
            WireError::Io(e)
        }
    }
}

/// One framed coded row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Packet {
    pub p: u8,
    pub poly: u32,
    pub k: u16,
    pub generation: u32,
    pub branch: u8,
    pub index: u16,
    /// Zero bytes appended to the source tail; set on every packet of the
    /// final generation and absent elsewhere.
    pub pad: Option<u32>,
    pub payload: Vec<u8>,
}

impl Packet {
    pub fn write_to(&self, w: &mut impl Write) -> Result<(), WireError> {
        if self.payload.len() > u16::MAX as usize {
            return Err(WireError::PayloadTooLong(self.payload.len()));
        }
        if self.p == 0 || self.p > 16 {
            return Err(WireError::BadHeader {
                reason: "field degree out of range",
            });
        }
        let leading = 1u32 << self.p;
        if self.poly < leading || self.poly - leading > u16::MAX as u32 {
            return Err(WireError::BadHeader {
                reason: "polynomial does not match field degree",
            });
        }
        w.write_all(&MAGIC)?;
        w.write_all(&[if self.pad.is_some() { 2 } else { 1 }, self.p])?;
        w.write_all(&((self.poly - leading) as u16).to_be_bytes())?;
        w.write_all(&self.k.to_be_bytes())?;
        w.write_all(&self.generation.to_be_bytes())?;
        w.write_all(&[self.branch])?;
        w.write_all(&self.index.to_be_bytes())?;
        w.write_all(&(self.payload.len() as u16).to_be_bytes())?;
        if let Some(pad) = self.pad {
            w.write_all(&pad.to_be_bytes())?;
        }
        w.write_all(&self.payload)?;
        Ok(())
    }

    /// Reads the next packet, or None at a clean end of stream.
    pub fn read_from(r: &mut impl Read) -> Result<Option<Packet>, WireError> {
        let mut magic = [0u8; 4];
        let mut filled = 0;
        while filled < 4 {
            let n = r.read(&mut magic[filled..]).map_err(WireError::from)?;
            if n == 0 {
                if filled == 0 {
                    return Ok(None);
                }
                return Err(WireError::Truncated);
            }
            filled += n;
        }
        if magic != MAGIC {
            return Err(WireError::BadMagic(magic));
        }
        let mut head = [0u8; 2];
        r.read_exact(&mut head)?;
        let (version, p) = (head[0], head[1]);
        if version != 1 && version != 2 {
            return Err(WireError::UnsupportedVersion(version));
        }
        if p == 0 || p > 16 {
            return Err(WireError::BadHeader {
                reason: "field degree out of range",
            });
        }
        let poly = (1u32 << p) + read_u16(r)? as u32;
        let k = read_u16(r)?;
        let generation = read_u32(r)?;
        let mut branch = [0u8; 1];
        r.read_exact(&mut branch)?;
        let index = read_u16(r)?;
        let len = read_u16(r)? as usize;
        let pad = if version == 2 {
            Some(read_u32(r)?)
        } else {
            None
        };
        let mut payload = vec![0u8; len];
        r.read_exact(&mut payload)?;
        Ok(Some(Packet {
            p,
            poly,
            k,
            generation,
            branch: branch[0],
            index,
            pad,
            payload,
        }))
    }
}

/// Reads a whole stream of packets.
pub fn read_all(r: &mut impl Read) -> Result<Vec<Packet>, WireError> {
    let mut out = Vec::new();
    while let Some(p) = Packet::read_from(r)? {
        out.push(p);
    }
    Ok(out)
}

fn read_u16(r: &mut impl Read) -> Result<u16, WireError> {
    let mut b = [0u8; 2];
    r.read_exact(&mut b)?;
    Ok(u16::from_be_bytes(b))
}

fn read_u32(r: &mut impl Read) -> Result<u32, WireError> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_be_bytes(b))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(pad: Option<u32>) -> Packet {
        Packet {
            p: 8,
            poly: 0x11D,
            k: 6,
            generation: 3,
            branch: 1,
            index: 4,
            pad,
            payload: vec![0xAB, 0x00, 0xFF, 0x17],
        }
    }

    #[test]
    fn round_trips_both_versions() {
        for pad in [None, Some(0), Some(1234)] {
            let p = sample(pad);
            let mut buf = Vec::new();
            p.write_to(&mut buf).unwrap();
            let got = Packet::read_from(&mut buf.as_slice()).unwrap().unwrap();
            assert_eq!(got, p);
        }
    }

    #[test]
    fn poly_is_stored_without_leading_term() {
        let p = sample(None);
        let mut buf = Vec::new();
        p.write_to(&mut buf).unwrap();
        // magic(4) version(1) p(1), then the 16-bit poly remainder.
        assert_eq!(buf[4], 1);
        assert_eq!(buf[5], 8);
        assert_eq!(u16::from_be_bytes([buf[6], buf[7]]), 0x1D);
    }

    #[test]
    fn streams_concatenate() {
        let mut buf = Vec::new();
        let a = sample(None);
        let mut b = sample(Some(9));
        b.index = 5;
        a.write_to(&mut buf).unwrap();
        b.write_to(&mut buf).unwrap();
        let all = read_all(&mut buf.as_slice()).unwrap();
        assert_eq!(all, vec![a, b]);
    }

    #[test]
    fn empty_stream_is_none() {
        assert!(Packet::read_from(&mut [].as_slice()).unwrap().is_none());
    }

    #[test]
    fn rejects_malformed_streams() {
        let mut buf = Vec::new();
        sample(None).write_to(&mut buf).unwrap();

        let mut wrong = buf.clone();
        wrong[0] = b'X';
        assert!(matches!(
            Packet::read_from(&mut wrong.as_slice()),
            Err(WireError::BadMagic(_))
        ));

        let mut newer = buf.clone();
        newer[4] = 7;
        assert!(matches!(
            Packet::read_from(&mut newer.as_slice()),
            Err(WireError::UnsupportedVersion(7))
        ));

        let mut huge_p = buf.clone();
        huge_p[5] = 21;
        assert!(matches!(
            Packet::read_from(&mut huge_p.as_slice()),
            Err(WireError::BadHeader { .. })
        ));

        for cut in 1..buf.len() {
            assert!(matches!(
                Packet::read_from(&mut &buf[..cut]),
                Err(WireError::Truncated)
            ));
        }
    }

    #[test]
    fn write_rejects_inconsistent_headers() {
        let mut p = sample(None);
        p.poly = 0x1B;
        assert!(matches!(
            p.write_to(&mut Vec::new()),
            Err(WireError::BadHeader { .. })
        ));
        let mut q = sample(None);
        q.p = 0;
        assert!(matches!(
            q.write_to(&mut Vec::new()),
            Err(WireError::BadHeader { .. })
        ));
    }
}
