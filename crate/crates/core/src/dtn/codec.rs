//! Big-endian wire format.
//!
//! ```text
//! magic      2  0x47 0x4F
//! version    1  0x01
//! flags      1  bit 0: lifetime override present
//! src_eid    2
//! dst_eid    2
//! creation   8  ms
//! lifetime   8  ms
//! age_block  8  ms
//! override   8  ms, only when flag bit 0 is set
//! length     4  payload bytes
//! payload
//! ```

use thiserror::Error;

use crate::sim_core::SimTime;

use super::Bundle;

pub const MAGIC: [u8; 2] = [0x47, 0x4F];
pub const VERSION: u8 = 1;
/// Header length without the override field.
pub const HEADER_LEN: usize = 36;
const OVERRIDE_LEN: usize = 8;
const FLAG_OVERRIDE: u8 = 0x01;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CodecError {
    #[error("bad magic {0:02x?}")]
    BadMagic([u8; 2]),
    #[error("unsupported version {0}")]
    UnsupportedVersion(u8),
    #[error("unknown flag bits {0:#04x}")]
    UnknownFlags(u8),
    #[error("header truncated: need {needed} bytes, have {have}")]
    TruncatedHeader { needed: usize, have: usize },
    #[error("payload length field says {declared}, found {actual}")]
    LengthMismatch { declared: u64, actual: u64 },
}

pub fn encode_bundle(b: &Bundle, payload: &[u8]) -> Result<Vec<u8>, CodecError> {
    if payload.len() as u64 != u64::from(b.payload_len) {
        return Err(CodecError::LengthMismatch {
            declared: b.payload_len.into(),
            actual: payload.len() as u64,
        });
    }
    let extra = if b.lifetime_override.is_some() { OVERRIDE_LEN } else { 0 };
    let mut out = Vec::with_capacity(HEADER_LEN + extra + payload.len());
    out.extend_from_slice(&MAGIC);
    out.push(VERSION);
    out.push(if b.lifetime_override.is_some() { FLAG_OVERRIDE } else { 0 });
    out.extend_from_slice(&b.src_eid.to_be_bytes());
    out.extend_from_slice(&b.dst_eid.to_be_bytes());
    out.extend_from_slice(&b.creation_ts.0.to_be_bytes());
    out.extend_from_slice(&b.lifetime.to_be_bytes());
    out.extend_from_slice(&b.age_block.to_be_bytes());
    if let Some(o) = b.lifetime_override {
        out.extend_from_slice(&o.to_be_bytes());
    }
    out.extend_from_slice(&b.payload_len.to_be_bytes());
    out.extend_from_slice(payload);
    Ok(out)
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take<const N: usize>(&mut self) -> [u8; N] {
        let mut out = [0; N];
        out.copy_from_slice(&self.buf[self.pos..self.pos + N]);
        self.pos += N;
        out
    }
}

/// Decodes one bundle. The returned bundle has `id == 0`; ids are local.
pub fn decode_bundle(bytes: &[u8]) -> Result<(Bundle, Vec<u8>), CodecError> {
    let truncated = |needed| CodecError::TruncatedHeader { needed, have: bytes.len() };
    if bytes.len() < 4 {
        return Err(truncated(HEADER_LEN));
    }
    let mut r = Reader { buf: bytes, pos: 0 };
    let magic = r.take::<2>();
    if magic != MAGIC {
        return Err(CodecError::BadMagic(magic));
    }
    let [version] = r.take::<1>();
    if version != VERSION {
        return Err(CodecError::UnsupportedVersion(version));
    }
    let [flags] = r.take::<1>();
    if flags & !FLAG_OVERRIDE != 0 {
        return Err(CodecError::UnknownFlags(flags));
    }
    let has_override = flags & FLAG_OVERRIDE != 0;
    let header_len = HEADER_LEN + if has_override { OVERRIDE_LEN } else { 0 };
    if bytes.len() < header_len {
        return Err(truncated(header_len));
    }
    let src_eid = u16::from_be_bytes(r.take());
    let dst_eid = u16::from_be_bytes(r.take());
    let creation_ts = SimTime(u64::from_be_bytes(r.take()));
    let lifetime = u64::from_be_bytes(r.take());
    let age_block = u64::from_be_bytes(r.take());
    let lifetime_override = has_override.then(|| u64::from_be_bytes(r.take()));
    let payload_len = u32::from_be_bytes(r.take());
    let payload = &bytes[header_len..];
    if payload.len() as u64 != u64::from(payload_len) {
        return Err(CodecError::LengthMismatch {
            declared: payload_len.into(),
            actual: payload.len() as u64,
        });
    }
    let bundle = Bundle {
        id: 0,
        src_eid,
        dst_eid,
        creation_ts,
        lifetime,
        age_block,
        payload_len,
        lifetime_override,
    };
    Ok((bundle, payload.to_vec()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Bundle {
        Bundle {
            id: 0,
            src_eid: 0x0102,
            dst_eid: 0x0304,
            creation_ts: SimTime(0x1122_3344_5566_7788),
            lifetime: 86_400_000,
            age_block: 271_978,
            payload_len: 3,
            lifetime_override: None,
        }
    }

    #[test]
    fn layout_is_big_endian() {
        let bytes = encode_bundle(&sample(), b"abc").unwrap();
        assert_eq!(bytes.len(), HEADER_LEN + 3);
        assert_eq!(&bytes[..4], &[0x47, 0x4F, 0x01, 0x00]);
        assert_eq!(&bytes[4..8], &[0x01, 0x02, 0x03, 0x04]);
        assert_eq!(&bytes[8..16], &[0x11, 0x22, 0x33, 0x44, 0x55, 0x66, 0x77, 0x88]);
        assert_eq!(&bytes[32..36], &[0, 0, 0, 3]);
        assert_eq!(&bytes[36..], b"abc");
    }

    #[test]
    fn override_adds_eight_bytes() {
        let b = Bundle { lifetime_override: Some(5), ..sample() };
        let bytes = encode_bundle(&b, b"abc").unwrap();
        assert_eq!(bytes.len(), HEADER_LEN + 8 + 3);
        assert_eq!(bytes[3], 0x01);
        assert_eq!(decode_bundle(&bytes).unwrap(), (b, b"abc".to_vec()));
    }

    #[test]
    fn decode_errors() {
        let good = encode_bundle(&sample(), b"abc").unwrap();
        let mut bad = good.clone();
        bad[0] = 0x48;
        assert!(matches!(decode_bundle(&bad), Err(CodecError::BadMagic(_))));
        assert!(matches!(decode_bundle(&good[..20]), Err(CodecError::TruncatedHeader { .. })));
        assert!(matches!(decode_bundle(&good[..2]), Err(CodecError::TruncatedHeader { .. })));
        assert!(matches!(
            decode_bundle(&good[..good.len() - 1]),
            Err(CodecError::LengthMismatch { declared: 3, actual: 2 })
        ));
        let mut long = good.clone();
        long.push(0);
        assert!(matches!(decode_bundle(&long), Err(CodecError::LengthMismatch { .. })));
        let mut flagged = good;
        flagged[3] = 0x01;
        // Claims an override, so the 36-byte header plus payload is now too short.
        assert!(matches!(decode_bundle(&flagged), Err(CodecError::TruncatedHeader { .. })));
    }

    #[test]
    fn encode_rejects_wrong_payload_length() {
        assert!(matches!(
            encode_bundle(&sample(), b"ab"),
            Err(CodecError::LengthMismatch { declared: 3, actual: 2 })
        ));
    }
}
