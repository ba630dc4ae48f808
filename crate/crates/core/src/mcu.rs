//! Random-access decoding of single MCUs from an [`RaTexture`].

use crate::error::{malformed, Error, Result};
use crate::jpeg::bits::BitReader;
use crate::jpeg::huffman::{BallotStats, HuffmanDecoder};
use crate::jpeg::scan::{
    extend, CoeffBlock, McuCoefficients, DC_MAX, DC_MIN, MAX_AC_SIZE, MAX_DC_SIZE,
};
use crate::jpeg::tables::ZIGZAG;
use crate::pixel::{reconstruct_mcu, PixelBlock};
use crate::transcode::RaTexture;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HuffmanVariant {
    #[default]
    Sequential,
    Ballot,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct McuDecodeStats {
    pub ac_symbols: u64,
    pub ballot: BallotStats,
}

struct SymbolSource<'r, 'a> {
    reader: &'r mut BitReader<'a>,
    variant: HuffmanVariant,
    stats: &'r mut McuDecodeStats,
}

impl SymbolSource<'_, '_> {
    #[inline]
    fn next(&mut self, dec: &HuffmanDecoder) -> Result<u8> {
        match self.variant {
            HuffmanVariant::Sequential => dec.next_symbol_sequential(self.reader),
            HuffmanVariant::Ballot => dec.next_symbol_ballot(self.reader, &mut self.stats.ballot),
        }
    }

    fn dc_diff(&mut self, dec: &HuffmanDecoder) -> Result<i32> {
        let size = self.next(dec)?;
        if size > MAX_DC_SIZE {
            return Err(malformed(format!("DC magnitude category {size}")));
        }
        Ok(extend(self.reader.read_bits(size as u32)?, size))
    }

    fn acs(&mut self, dec: &HuffmanDecoder, block: &mut CoeffBlock) -> Result<()> {
        let mut k = 1usize;
        while k < 64 {
            let rs = self.next(dec)?;
            self.stats.ac_symbols += 1;
            let (run, size) = ((rs >> 4) as usize, rs & 15);
            if size == 0 {
                if run == 15 {
                    k += 16;
                    if k > 64 {
                        return Err(malformed("zero run past coefficient 63"));
                    }
                    continue;
                }
                return Ok(());
            }
            k += run;
            if k > 63 {
                return Err(malformed("more than 63 AC coefficients"));
            }
            if size > MAX_AC_SIZE {
                return Err(malformed(format!("AC magnitude category {size}")));
            }
            block[ZIGZAG[k]] = extend(self.reader.read_bits(size as u32)?, size) as i16;
            k += 1;
        }
        Ok(())
    }
}

fn signed12(v: u32) -> i32 {
    ((v << 20) as i32) >> 20
}

/// Entropy-decodes MCU `mcu` into quantized coefficients, recording statistics.
pub fn decode_mcu_coefficients(
    tex: &RaTexture,
    mcu: usize,
    variant: HuffmanVariant,
    stats: &mut McuDecodeStats,
) -> Result<McuCoefficients> {
    decode_segment(tex, mcu, variant, stats).map(|(c, _)| c)
}

/// Like [`decode_mcu_coefficients`], also returning the segment bits consumed.
pub(crate) fn decode_segment(
    tex: &RaTexture,
    mcu: usize,
    variant: HuffmanVariant,
    stats: &mut McuDecodeStats,
) -> Result<(McuCoefficients, u64)> {
    if mcu >= tex.mcu_count() {
        return Err(Error::InvalidArgument(format!(
            "MCU {mcu} outside texture of {} MCUs",
            tex.mcu_count()
        )));
    }
    let decs = tex.decoders();
    let mut reader = BitReader::plain(tex.segment(mcu));
    let y1 = signed12(reader.read_bits(12)?);
    let cb = signed12(reader.read_bits(12)?);
    let cr = signed12(reader.read_bits(12)?);
    let mut src = SymbolSource {
        reader: &mut reader,
        variant,
        stats,
    };
    let mut out = McuCoefficients::default();
    let b = &mut out.0;

    b[0][0] = y1 as i16;
    src.acs(&decs.ac[0], &mut b[0])?;
    let mut pred = y1;
    for du in 1..4 {
        pred += src.dc_diff(&decs.dc[0])?;
        if !(DC_MIN..=DC_MAX).contains(&pred) {
            return Err(malformed(format!("DC value {pred} overflows 12 bits")));
        }
        b[du][0] = pred as i16;
        src.acs(&decs.ac[0], &mut b[du])?;
    }
    b[4][0] = cb as i16;
    src.acs(&decs.ac[1], &mut b[4])?;
    b[5][0] = cr as i16;
    src.acs(&decs.ac[2], &mut b[5])?;
    Ok((out, reader.position()))
}

/// Decodes MCU `mcu` to texels with the sequential Huffman decoder.
pub fn decode_mcu(tex: &RaTexture, mcu: usize) -> Result<PixelBlock> {
    decode_mcu_with(tex, mcu, HuffmanVariant::Sequential)
}

pub fn decode_mcu_with(tex: &RaTexture, mcu: usize, variant: HuffmanVariant) -> Result<PixelBlock> {
    let mut stats = McuDecodeStats::default();
    let coeffs = decode_mcu_coefficients(tex, mcu, variant, &mut stats)?;
    Ok(reconstruct_mcu(&coeffs, &tex.decoders().quant))
}
