//! MSB-first bit reading and writing, with optional JPEG 0xFF00 byte stuffing.

use crate::error::{malformed, Result};

/// Bit reader over an entropy-coded byte range.
///
/// Reads past the end of the data see 1-bits (the JPEG fill-bit convention) for
/// peeking only; consuming them is an error. In stuffed mode a 0x00 after 0xFF is
/// dropped and any other marker ends the data.
#[derive(Clone)]
pub struct BitReader<'a> {
    data: &'a [u8],
    byte_pos: usize,
    stuffed: bool,
    acc: u64,
    nbits: u32,
    fill_bits: u32,
    consumed: u64,
}

impl<'a> BitReader<'a> {
    /// Reader for raw bits (no stuffing), as stored in container segments.
    pub fn plain(data: &'a [u8]) -> Self {
        Self::with_mode(data, false)
    }

    /// Reader for a JPEG scan with byte stuffing still present.
    pub fn stuffed(data: &'a [u8]) -> Self {
        Self::with_mode(data, true)
    }

    fn with_mode(data: &'a [u8], stuffed: bool) -> Self {
        let mut r = Self {
            data,
            byte_pos: 0,
            stuffed,
            acc: 0,
            nbits: 0,
            fill_bits: 0,
            consumed: 0,
        };
        r.refill();
        r
    }

    #[inline]
    fn next_byte(&mut self) -> Option<u8> {
        let b = *self.data.get(self.byte_pos)?;
        self.byte_pos += 1;
        if self.stuffed && b == 0xFF {
            match self.data.get(self.byte_pos) {
                Some(0x00) => self.byte_pos += 1,
                _ => {
                    // A marker terminates the entropy-coded segment.
                    self.byte_pos = self.data.len();
                    return None;
                }
            }
        }
        Some(b)
    }

    #[inline]
    fn refill(&mut self) {
        while self.nbits <= 56 {
            let byte = match self.next_byte() {
                Some(b) => b,
                None => {
                    self.fill_bits += 8;
                    0xFF
                }
            };
            self.acc |= (byte as u64) << (56 - self.nbits);
            self.nbits += 8;
        }
    }

    /// Next 16 bits without consuming them, 1-padded past the end.
    #[inline]
    pub fn peek16(&self) -> u16 {
        (self.acc >> 48) as u16
    }

    /// Real (non-fill) bits that remain available.
    pub fn remaining_hint(&self) -> u32 {
        self.nbits.saturating_sub(self.fill_bits)
    }

    #[inline]
    pub fn consume(&mut self, n: u32) -> Result<()> {
        debug_assert!(n <= 32);
        if n > self.nbits - self.fill_bits.min(self.nbits) {
            return Err(malformed("entropy-coded data ends mid-symbol"));
        }
        self.acc = if n == 64 { 0 } else { self.acc << n };
        self.nbits -= n;
        self.consumed += n as u64;
        self.refill();
        Ok(())
    }

    #[inline]
    pub fn read_bits(&mut self, n: u32) -> Result<u32> {
        if n == 0 {
            return Ok(0);
        }
        let v = (self.acc >> (64 - n)) as u32;
        self.consume(n)?;
        Ok(v)
    }

    /// Bits consumed so far, counted after unstuffing.
    pub fn position(&self) -> u64 {
        self.consumed
    }
}

/// MSB-first bit writer; pads with 1-bits on [`BitWriter::align`].
#[derive(Default, Clone)]
pub struct BitWriter {
    out: Vec<u8>,
    acc: u64,
    nbits: u32,
    stuffed: bool,
    written: u64,
}

impl BitWriter {
    pub fn plain() -> Self {
        Self::default()
    }

    pub fn stuffed() -> Self {
        Self {
            stuffed: true,
            ..Self::default()
        }
    }

    #[inline]
    pub fn write_bits(&mut self, value: u32, n: u32) {
        if n == 0 {
            return;
        }
        debug_assert!(n <= 32);
        let v = value as u64 & ((1u64 << n) - 1);
        self.acc = (self.acc << n) | v;
        self.nbits += n;
        self.written += n as u64;
        while self.nbits >= 8 {
            self.nbits -= 8;
            let byte = (self.acc >> self.nbits) as u8;
            self.out.push(byte);
            if self.stuffed && byte == 0xFF {
                self.out.push(0x00);
            }
        }
        self.acc &= (1u64 << self.nbits) - 1;
    }

    /// Copies `len` bits starting at bit `start` of a plain (unstuffed) buffer.
    pub fn copy_bits(&mut self, src: &[u8], start: u64, len: u64) {
        let mut pos = start;
        let end = start + len;
        while pos < end {
            let n = (end - pos).min(24) as u32;
            self.write_bits(extract_bits(src, pos, n), n);
            pos += n as u64;
        }
    }

    /// Pads with 1-bits up to the next byte boundary, returning the pad length.
    pub fn align(&mut self) -> u32 {
        let pad = (8 - self.nbits % 8) % 8;
        if pad > 0 {
            self.write_bits((1 << pad) - 1, pad);
        }
        pad
    }

    /// Total bits written (excluding stuffing bytes).
    pub fn bit_len(&self) -> u64 {
        self.written
    }

    pub fn byte_len(&self) -> usize {
        self.out.len()
    }

    pub fn into_bytes(mut self) -> Vec<u8> {
        self.align();
        self.out
    }
}

/// Reads `n <= 32` bits at absolute bit offset `pos`; missing bytes read as 1-bits.
pub fn extract_bits(src: &[u8], pos: u64, n: u32) -> u32 {
    if n == 0 {
        return 0;
    }
    let byte = (pos / 8) as usize;
    let shift = (pos % 8) as u32;
    let mut window = 0u64;
    for i in 0..5 {
        window = (window << 8) | *src.get(byte + i).unwrap_or(&0xFF) as u64;
    }
    // window holds 40 bits; the wanted bits start `shift` bits in.
    ((window >> (40 - shift - n)) & ((1u64 << n) - 1)) as u32
}

/// Removes 0xFF00 byte stuffing, stopping at the first marker.
pub fn unstuff(scan: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(scan.len());
    let mut i = 0;
    while i < scan.len() {
        let b = scan[i];
        if b == 0xFF {
            if scan.get(i + 1) == Some(&0x00) {
                out.push(0xFF);
                i += 2;
                continue;
            }
            break;
        }
        out.push(b);
        i += 1;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn stuffed_reader_skips_zero_after_ff() {
        let data = [0xFF, 0x00, 0x80];
        let mut r = BitReader::stuffed(&data);
        assert_eq!(r.read_bits(8).unwrap(), 0xFF);
        assert_eq!(r.read_bits(1).unwrap(), 1);
        assert_eq!(r.read_bits(7).unwrap(), 0);
        assert!(r.read_bits(1).is_err());
    }

    #[test]
    fn marker_ends_stuffed_data() {
        let data = [0xAB, 0xFF, 0xD9];
        let mut r = BitReader::stuffed(&data);
        assert_eq!(r.read_bits(8).unwrap(), 0xAB);
        assert_eq!(r.peek16(), 0xFFFF);
        assert!(r.consume(1).is_err());
    }

    #[test]
    fn writer_pads_with_ones_and_stuffs() {
        let mut w = BitWriter::stuffed();
        w.write_bits(0b1111_1111, 8);
        w.write_bits(0b0, 1);
        let bytes = w.into_bytes();
        assert_eq!(bytes, vec![0xFF, 0x00, 0x7F]);
    }

    proptest! {
        #[test]
        fn write_then_read(fields in prop::collection::vec((any::<u32>(), 1u32..=24), 0..200), stuffed: bool) {
            let mut w = if stuffed { BitWriter::stuffed() } else { BitWriter::plain() };
            for &(v, n) in &fields {
                w.write_bits(v, n);
            }
            let bytes = w.into_bytes();
            let mut r = if stuffed { BitReader::stuffed(&bytes) } else { BitReader::plain(&bytes) };
            for &(v, n) in &fields {
                prop_assert_eq!(r.read_bits(n).unwrap(), v & ((1u32 << n) - 1));
            }
            if stuffed {
                let plain = unstuff(&bytes);
                let mut copy = BitWriter::plain();
                let total: u64 = fields.iter().map(|f| f.1 as u64).sum();
                copy.copy_bits(&plain, 0, total);
                let copied = copy.into_bytes();
                prop_assert_eq!(&copied[..], &plain[..copied.len()]);
            }
        }
    }
}
