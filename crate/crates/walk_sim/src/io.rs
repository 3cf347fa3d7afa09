//! Compact binary walk files: "RWLK", version, n, seed, stream_id (LE),
//! then 3-bit step codes packed least-significant-bit first.

use crate::{WalkError, WalkPath};
use std::io::{Read, Write};

const MAGIC: &[u8; 4] = b"RWLK";
const VERSION: u32 = 1;

pub fn write_walk<W: Write>(w: &mut W, path: &WalkPath) -> Result<(), WalkError> {
    let codes = path.codes();
    let mut buf = Vec::with_capacity(32 + codes.len() * 3 / 8 + 1);
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.extend_from_slice(&(codes.len() as u64).to_le_bytes());
    buf.extend_from_slice(&path.seed.to_le_bytes());
    buf.extend_from_slice(&path.stream_id.to_le_bytes());
    let mut acc: u32 = 0;
    let mut bits = 0;
    for c in codes {
        acc |= (c as u32) << bits;
        bits += 3;
        while bits >= 8 {
            buf.push(acc as u8);
            acc >>= 8;
            bits -= 8;
        }
    }
    if bits > 0 {
        buf.push(acc as u8);
    }
    w.write_all(&buf).map_err(|e| WalkError::Format(e.to_string()))
}

pub fn read_walk<R: Read>(r: &mut R) -> Result<WalkPath, WalkError> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)
        .map_err(|e| WalkError::Format(e.to_string()))?;
    if bytes.len() < 32 || &bytes[..4] != MAGIC {
        return Err(WalkError::Format("bad header".into()));
    }
    let u32_at = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().unwrap());
    let u64_at = |i: usize| u64::from_le_bytes(bytes[i..i + 8].try_into().unwrap());
    if u32_at(4) != VERSION {
        return Err(WalkError::Format("unsupported version".into()));
    }
    let n = u64_at(8) as usize;
    let seed = u64_at(16);
    let stream = u64_at(24);
    let body = &bytes[32..];
    if body.len() != (3 * n).div_ceil(8) {
        return Err(WalkError::Format("truncated body".into()));
    }
    let mut codes = Vec::with_capacity(n);
    let mut acc: u32 = 0;
    let mut bits = 0;
    let mut it = body.iter();
    for _ in 0..n {
        if bits < 3 {
            acc |= (*it.next().unwrap() as u32) << bits;
            bits += 8;
        }
        codes.push((acc & 7) as u8);
        acc >>= 3;
        bits -= 3;
    }
    Ok(WalkPath::from_codes(&codes, seed, stream))
}
