//! Bit file formats and CSV tables.
//!
//! Packed files start with a 16-byte header:
//!
//! ```text
//! offset  size  field
//!      0     4  magic "QRB1"
//!      4     1  bit order: 0 = msb_first, 1 = lsb_first
//!      5     3  reserved, zero
//!      8     8  bit_count, u64 little-endian
//!     16     -  payload, ceil(bit_count / 8) bytes
//! ```
//!
//! `sts_raw` is the bare msb-first payload and only exists for whole bytes.

use std::fmt::Write as _;

use crate::bits::BitBuffer;
use crate::error::{Error, Result};
use crate::sim::SweepRow;

pub const MAGIC: [u8; 4] = *b"QRB1";
pub const HEADER_LEN: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BitOrder {
    #[default]
    MsbFirst,
    LsbFirst,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Packed,
    Ascii,
    StsRaw,
}

impl std::str::FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "packed" => Ok(Format::Packed),
            "ascii" => Ok(Format::Ascii),
            "sts_raw" | "sts-raw" => Ok(Format::StsRaw),
            other => Err(Error::Format(format!("unknown format `{other}` (packed, ascii, sts_raw)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BitFileHeader {
    pub bit_count: u64,
    pub bit_order: BitOrder,
}

impl BitFileHeader {
    pub fn payload_len(&self) -> usize {
        (self.bit_count as usize).div_ceil(8)
    }

    pub fn to_bytes(&self) -> [u8; HEADER_LEN] {
        let mut h = [0u8; HEADER_LEN];
        h[..4].copy_from_slice(&MAGIC);
        h[4] = match self.bit_order {
            BitOrder::MsbFirst => 0,
            BitOrder::LsbFirst => 1,
        };
        h[8..].copy_from_slice(&self.bit_count.to_le_bytes());
        h
    }

    pub fn parse(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < HEADER_LEN {
            return Err(Error::Format(format!("truncated header: {} bytes", bytes.len())));
        }
        if bytes[..4] != MAGIC {
            return Err(Error::Format("bad magic".into()));
        }
        let bit_order = match bytes[4] {
            0 => BitOrder::MsbFirst,
            1 => BitOrder::LsbFirst,
            b => return Err(Error::Format(format!("unknown bit order byte {b}"))),
        };
        let bit_count = u64::from_le_bytes(bytes[8..16].try_into().expect("8 bytes"));
        Ok(Self { bit_count, bit_order })
    }
}

fn pack(bits: &BitBuffer, order: BitOrder) -> Vec<u8> {
    let n_bytes = bits.len().div_ceil(8);
    let mut out = Vec::with_capacity(n_bytes);
    for w in bits.words() {
        out.extend_from_slice(&w.to_le_bytes());
    }
    out.truncate(n_bytes);
    if order == BitOrder::MsbFirst {
        for b in &mut out {
            *b = b.reverse_bits();
        }
    }
    out
}

fn unpack(bytes: &[u8], bit_count: usize, order: BitOrder) -> BitBuffer {
    let words = bytes
        .chunks(8)
        .map(|c| {
            let mut le = [0u8; 8];
            for (dst, &src) in le.iter_mut().zip(c) {
                *dst = match order {
                    BitOrder::MsbFirst => src.reverse_bits(),
                    BitOrder::LsbFirst => src,
                };
            }
            u64::from_le_bytes(le)
        })
        .collect();
    BitBuffer::from_words(words, bit_count)
}

/// Packed file with header, in the given bit order.
pub fn write_packed(bits: &BitBuffer, order: BitOrder) -> Vec<u8> {
    let header = BitFileHeader { bit_count: bits.len() as u64, bit_order: order };
    let mut out = header.to_bytes().to_vec();
    out.extend(pack(bits, order));
    out
}

/// Serialises `bits`; packed output is msb-first.
pub fn write_bits(bits: &BitBuffer, format: Format) -> Result<Vec<u8>> {
    match format {
        Format::Packed => Ok(write_packed(bits, BitOrder::MsbFirst)),
        Format::Ascii => Ok(bits.iter().map(|b| if b { b'1' } else { b'0' }).collect()),
        Format::StsRaw => {
            if bits.len() % 8 != 0 {
                return Err(Error::Format(format!(
                    "sts_raw needs a multiple of 8 bits, got {} (refusing to pad)",
                    bits.len()
                )));
            }
            Ok(pack(bits, BitOrder::MsbFirst))
        }
    }
}

/// Parses bytes in `format`. With `lenient`, ASCII whitespace in ascii
/// input is skipped instead of rejected.
pub fn read_bits(bytes: &[u8], format: Format, lenient: bool) -> Result<BitBuffer> {
    match format {
        Format::Packed => {
            let header = BitFileHeader::parse(bytes)?;
            let payload = &bytes[HEADER_LEN..];
            let need = header.payload_len();
            if payload.len() < need {
                return Err(Error::Format(format!(
                    "truncated payload: header declares {} bits ({need} bytes), found {} bytes",
                    header.bit_count,
                    payload.len()
                )));
            }
            if payload.len() > need {
                return Err(Error::Format(format!(
                    "{} trailing bytes after payload",
                    payload.len() - need
                )));
            }
            Ok(unpack(payload, header.bit_count as usize, header.bit_order))
        }
        Format::Ascii => {
            let mut out = BitBuffer::with_capacity(bytes.len());
            for (i, &c) in bytes.iter().enumerate() {
                match c {
                    b'0' => out.push(false),
                    b'1' => out.push(true),
                    c if lenient && c.is_ascii_whitespace() => {}
                    c => {
                        return Err(Error::Format(format!(
                            "invalid byte {c:#04x} at offset {i} in ascii bit file"
                        )))
                    }
                }
            }
            Ok(out)
        }
        Format::StsRaw => Ok(unpack(bytes, bytes.len() * 8, BitOrder::MsbFirst)),
    }
}

pub const SWEEP_CSV_HEADER: &str =
    "axis_value,n,p1_hat,bias,a1_hat,a1_err,a1_pred,truncated_flag,error";

/// Sweep table as CSV. Floats use shortest round-trip formatting.
pub fn write_sweep_csv(rows: &[SweepRow]) -> String {
    let mut s = String::from(SWEEP_CSV_HEADER);
    s.push('\n');
    for r in rows {
        let err = r
            .error
            .as_deref()
            .unwrap_or("")
            .replace([',', '\n', '\r'], ";");
        let _ = writeln!(
            s,
            "{},{},{:e},{:e},{:e},{:e},{:e},{},{}",
            r.axis_value,
            r.n,
            r.p1_hat,
            r.bias,
            r.a1_hat,
            r.a1_err,
            r.a1_pred,
            u8::from(r.truncated),
            err
        );
    }
    s
}

/// Inverse of [`write_sweep_csv`].
pub fn read_sweep_csv(text: &str) -> Result<Vec<SweepRow>> {
    let mut lines = text.lines();
    if lines.next() != Some(SWEEP_CSV_HEADER) {
        return Err(Error::Format("unexpected sweep CSV header".into()));
    }
    lines
        .filter(|l| !l.is_empty())
        .map(|line| {
            let f: Vec<&str> = line.splitn(9, ',').collect();
            if f.len() != 9 {
                return Err(Error::Format(format!("expected 9 columns: `{line}`")));
            }
            let num = |s: &str| {
                s.parse::<f64>()
                    .map_err(|_| Error::Format(format!("bad number `{s}`")))
            };
            Ok(SweepRow {
                axis_value: num(f[0])?,
                n: f[1].parse().map_err(|_| Error::Format(format!("bad count `{}`", f[1])))?,
                p1_hat: num(f[2])?,
                bias: num(f[3])?,
                a1_hat: num(f[4])?,
                a1_err: num(f[5])?,
                a1_pred: num(f[6])?,
                truncated: f[7] == "1",
                error: (!f[8].is_empty()).then(|| f[8].to_string()),
            })
        })
        .collect()
}
