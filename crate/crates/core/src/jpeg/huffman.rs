//! Canonical Huffman codes (T.81 Annex C) with two symbol decoders.
//!
//! [`HuffmanDecoder::next_symbol_sequential`] is the classic decoder: a 9-bit lookup
//! table backed by the per-length `maxcode` walk. [`HuffmanDecoder::next_symbol_ballot`]
//! emulates a 32-lane warp: the next 16 bits are prefetched, each lane compares the
//! window against one candidate code (trimmed to the candidate's length), and a ballot
//! mask picks the matching lane. Both must return identical symbols for every stream.

use crate::error::{malformed, Error, Result};
use crate::jpeg::bits::{BitReader, BitWriter};

/// Lanes per ballot round.
pub const LANES: usize = 32;
const LUT_BITS: u32 = 9;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HuffmanSpec {
    /// Number of codes of each length 1..=16.
    pub counts: [u8; 16],
    /// Symbols in code order.
    pub symbols: Vec<u8>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Codeword {
    pub code: u16,
    pub len: u8,
    pub symbol: u8,
}

impl HuffmanSpec {
    pub fn new(counts: [u8; 16], symbols: &[u8]) -> Self {
        Self {
            counts,
            symbols: symbols.to_vec(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let total: usize = self.counts.iter().map(|&c| c as usize).sum();
        if total != self.symbols.len() {
            return Err(Error::InvalidSpec(format!(
                "counts sum to {total} but {} symbols are listed",
                self.symbols.len()
            )));
        }
        if total > 256 {
            return Err(Error::InvalidSpec(format!("{total} codes exceed 256")));
        }
        // Kraft sum scaled by 2^16.
        let kraft: u64 = self
            .counts
            .iter()
            .enumerate()
            .map(|(i, &c)| (c as u64) << (15 - i))
            .sum();
        if kraft > 1 << 16 {
            return Err(Error::InvalidSpec(
                "code lengths violate the Kraft inequality".into(),
            ));
        }
        Ok(())
    }

    /// Canonical code assignment in symbol order.
    pub fn codewords(&self) -> Result<Vec<Codeword>> {
        self.validate()?;
        let mut out = Vec::with_capacity(self.symbols.len());
        let mut code: u32 = 0;
        let mut k = 0;
        for len in 1..=16u8 {
            for _ in 0..self.counts[len as usize - 1] {
                out.push(Codeword {
                    code: code as u16,
                    len,
                    symbol: self.symbols[k],
                });
                k += 1;
                code += 1;
            }
            code <<= 1;
        }
        Ok(out)
    }
}

/// Instrumentation for the ballot decoder.
#[derive(Debug, Default, Clone, Copy, PartialEq, Eq)]
pub struct BallotStats {
    pub symbols: u64,
    pub rounds: u64,
    pub max_rounds_per_symbol: u32,
}

#[derive(Debug, Clone)]
pub struct HuffmanDecoder {
    codes: Vec<Codeword>,
    /// `len << 8 | symbol` for codes of length <= LUT_BITS, 0 otherwise.
    lut: Vec<u16>,
    maxcode: [i32; 17],
    valptr: [i32; 17],
    mincode: [i32; 17],
}

impl HuffmanDecoder {
    pub fn new(spec: &HuffmanSpec) -> Result<Self> {
        let codes = spec.codewords()?;
        let mut lut = vec![0u16; 1 << LUT_BITS];
        let mut maxcode = [-1i32; 17];
        let mut valptr = [0i32; 17];
        let mut mincode = [0i32; 17];
        for (i, cw) in codes.iter().enumerate() {
            let l = cw.len as usize;
            if maxcode[l] < 0 {
                valptr[l] = i as i32;
                mincode[l] = cw.code as i32;
            }
            maxcode[l] = cw.code as i32;
            if cw.len as u32 <= LUT_BITS {
                let shift = LUT_BITS - cw.len as u32;
                let base = (cw.code as usize) << shift;
                for e in &mut lut[base..base + (1 << shift)] {
                    *e = (cw.len as u16) << 8 | cw.symbol as u16;
                }
            }
        }
        Ok(Self {
            codes,
            lut,
            maxcode,
            valptr,
            mincode,
        })
    }

    pub fn codewords(&self) -> &[Codeword] {
        &self.codes
    }

    /// Returns `(symbol, length)` for the code at the front of a 16-bit window.
    #[inline]
    pub fn match_sequential(&self, window: u16) -> Option<(u8, u8)> {
        let e = self.lut[(window >> (16 - LUT_BITS)) as usize];
        if e != 0 {
            return Some((e as u8, (e >> 8) as u8));
        }
        for l in LUT_BITS as usize + 1..=16 {
            let code = (window >> (16 - l)) as i32;
            if code <= self.maxcode[l] {
                let idx = self.valptr[l] + code - self.mincode[l];
                return Some((self.codes[idx as usize].symbol, l as u8));
            }
        }
        None
    }

    /// Lane-emulated match: 32 candidates per round, lowest matching lane wins.
    #[inline]
    pub fn match_ballot(&self, window: u16, stats: &mut BallotStats) -> Option<(u8, u8)> {
        let mut rounds = 0u32;
        let mut found = None;
        for chunk in self.codes.chunks(LANES) {
            rounds += 1;
            let mut ballot: u32 = 0;
            for (lane, cw) in chunk.iter().enumerate() {
                let trimmed = window >> (16 - cw.len as u32);
                ballot |= ((trimmed == cw.code) as u32) << lane;
            }
            if ballot != 0 {
                let winner = &chunk[ballot.trailing_zeros() as usize];
                found = Some((winner.symbol, winner.len));
                break;
            }
        }
        stats.symbols += 1;
        stats.rounds += rounds as u64;
        stats.max_rounds_per_symbol = stats.max_rounds_per_symbol.max(rounds);
        found
    }

    #[inline]
    pub fn next_symbol_sequential(&self, r: &mut BitReader<'_>) -> Result<u8> {
        let (sym, len) = self
            .match_sequential(r.peek16())
            .ok_or_else(|| malformed("bit pattern matches no huffman code"))?;
        r.consume(len as u32)?;
        Ok(sym)
    }

    #[inline]
    pub fn next_symbol_ballot(&self, r: &mut BitReader<'_>, stats: &mut BallotStats) -> Result<u8> {
        let (sym, len) = self
            .match_ballot(r.peek16(), stats)
            .ok_or_else(|| malformed("bit pattern matches no huffman code"))?;
        r.consume(len as u32)?;
        Ok(sym)
    }
}

/// Symbol → code lookup for the encoder.
#[derive(Debug, Clone)]
pub struct HuffmanEncoder {
    code: [u16; 256],
    len: [u8; 256],
}

impl HuffmanEncoder {
    pub fn new(spec: &HuffmanSpec) -> Result<Self> {
        let mut code = [0u16; 256];
        let mut len = [0u8; 256];
        for cw in spec.codewords()? {
            code[cw.symbol as usize] = cw.code;
            len[cw.symbol as usize] = cw.len;
        }
        Ok(Self { code, len })
    }

    /// Code length of `symbol`, 0 if the table has no code for it.
    pub fn code_len(&self, symbol: u8) -> u8 {
        self.len[symbol as usize]
    }

    #[inline]
    pub fn emit(&self, w: &mut BitWriter, symbol: u8) {
        let l = self.len[symbol as usize];
        debug_assert!(l > 0, "symbol {symbol:#x} has no code");
        w.write_bits(self.code[symbol as usize] as u32, l as u32);
    }
}
