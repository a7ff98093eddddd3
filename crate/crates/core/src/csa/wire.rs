//! Bit-exact wire format for precoder maps.
//!
//! Layout, most significant bit first:
//!   header: sender id (16) | generation tti (32) | entry count (8)
//!   entry:  slot id (4) | sub-band index (ceil(log2 num_subbands)) | pmi (pmi_bits)
//!
//! Only codebook-index entries are encodable; the perfect-knowledge variant
//! exists for upper-bound experiments and never touches the wire.

use super::{MapEntry, PmiValue, PrecoderMap};
use crate::topology::CellId;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum WireError {
    #[error("map not encodable: {0}")]
    Unencodable(String),
    #[error("decode: {0}")]
    Decode(String),
}

/// Bits needed to address a sub-band index; at least 1.
pub fn subband_bits(num_subbands: usize) -> u8 {
    let mut bits = 0u8;
    while (1usize << bits) < num_subbands {
        bits += 1;
    }
    bits.max(1)
}

struct BitWriter {
    bytes: Vec<u8>,
    used: u8,
}

impl BitWriter {
    fn new() -> Self {
        BitWriter {
            bytes: Vec::new(),
            used: 8,
        }
    }

    fn push(&mut self, value: u64, bits: u8) {
        for i in (0..bits).rev() {
            if self.used == 8 {
                self.bytes.push(0);
                self.used = 0;
            }
            let bit = ((value >> i) & 1) as u8;
            let last = self.bytes.last_mut().unwrap();
            *last |= bit << (7 - self.used);
            self.used += 1;
        }
    }
}

struct BitReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> BitReader<'a> {
    fn new(bytes: &'a [u8]) -> Self {
        BitReader { bytes, pos: 0 }
    }

    fn pull(&mut self, bits: u8) -> Result<u64, WireError> {
        let mut v = 0u64;
        for _ in 0..bits {
            let byte = self.pos / 8;
            if byte >= self.bytes.len() {
                return Err(WireError::Decode("truncated stream".into()));
            }
            let bit = (self.bytes[byte] >> (7 - (self.pos % 8))) & 1;
            v = (v << 1) | bit as u64;
            self.pos += 1;
        }
        Ok(v)
    }
}

pub fn encode_map(
    map: &PrecoderMap,
    num_subbands: usize,
    pmi_bits: u8,
) -> Result<Vec<u8>, WireError> {
    if map.entries.len() > u8::MAX as usize {
        return Err(WireError::Unencodable(format!(
            "{} entries exceed the 8-bit count field",
            map.entries.len()
        )));
    }
    let sb_bits = subband_bits(num_subbands);
    let mut w = BitWriter::new();
    w.push(map.sender.0 as u64, 16);
    w.push(map.tti as u64, 32);
    w.push(map.entries.len() as u64, 8);
    for e in &map.entries {
        let pmi = match &e.pmi {
            PmiValue::Index(i) => *i as u64,
            PmiValue::Exact(_) => {
                return Err(WireError::Unencodable(
                    "exact-vector entries have no wire representation".into(),
                ))
            }
        };
        if e.slot_id >= 16 {
            return Err(WireError::Unencodable(format!(
                "slot id {} exceeds the 4-bit field",
                e.slot_id
            )));
        }
        if e.sub_band as usize >= num_subbands {
            return Err(WireError::Unencodable(format!(
                "sub-band {} out of range {num_subbands}",
                e.sub_band
            )));
        }
        if pmi >= (1u64 << pmi_bits) {
            return Err(WireError::Unencodable(format!(
                "pmi {pmi} exceeds {pmi_bits} bits"
            )));
        }
        w.push(e.slot_id as u64, 4);
        w.push(e.sub_band as u64, sb_bits);
        w.push(pmi, pmi_bits);
    }
    Ok(w.bytes)
}

pub fn decode_map(
    bytes: &[u8],
    num_subbands: usize,
    pmi_bits: u8,
) -> Result<PrecoderMap, WireError> {
    let sb_bits = subband_bits(num_subbands);
    let mut r = BitReader::new(bytes);
    let sender = CellId(r.pull(16)? as u16);
    let tti = r.pull(32)? as u32;
    let count = r.pull(8)? as usize;
    let mut entries = Vec::with_capacity(count);
    for _ in 0..count {
        let slot_id = r.pull(4)? as u8;
        let sub_band = r.pull(sb_bits)? as u8;
        if sub_band as usize >= num_subbands {
            return Err(WireError::Decode(format!(
                "sub-band {sub_band} out of range {num_subbands}"
            )));
        }
        let pmi = r.pull(pmi_bits)? as u16;
        entries.push(MapEntry {
            slot_id,
            sub_band,
            pmi: PmiValue::Index(pmi),
        });
    }
    Ok(PrecoderMap {
        sender,
        tti,
        entries,
    })
}
