//! Sequential reference decoding of a baseline 4:2:0 scan into coefficients.

use crate::error::{malformed, Result};
use crate::jpeg::bits::BitReader;
use crate::jpeg::huffman::HuffmanDecoder;
use crate::jpeg::parse::ParsedJpeg;
use crate::jpeg::tables::ZIGZAG;

/// 64 quantized coefficients in natural (row-major) order.
pub type CoeffBlock = [i16; 64];

pub const DC_MIN: i32 = -2048;
pub const DC_MAX: i32 = 2047;
/// Largest magnitude category for baseline AC values (|v| <= 1023).
pub const MAX_AC_SIZE: u8 = 10;
/// Largest magnitude category for baseline DC differences.
pub const MAX_DC_SIZE: u8 = 11;

/// One MCU's data units: Y1, Y2, Y3, Y4, Cb, Cr.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct McuCoefficients(pub [CoeffBlock; 6]);

impl Default for McuCoefficients {
    fn default() -> Self {
        Self([[0; 64]; 6])
    }
}

/// Component index (0 = Y, 1 = Cb, 2 = Cr) of each data unit in an MCU.
pub const DU_COMPONENT: [usize; 6] = [0, 0, 0, 0, 1, 2];

/// Sign-extends a `size`-bit magnitude (T.81 F.12 EXTEND).
#[inline]
pub fn extend(bits: u32, size: u8) -> i32 {
    if size == 0 {
        return 0;
    }
    let v = bits as i32;
    if v < 1 << (size - 1) {
        v - (1 << size) + 1
    } else {
        v
    }
}

fn decode_dc_diff(r: &mut BitReader<'_>, dec: &HuffmanDecoder) -> Result<i32> {
    let size = dec.next_symbol_sequential(r)?;
    if size > MAX_DC_SIZE {
        return Err(malformed(format!("DC magnitude category {size}")));
    }
    Ok(extend(r.read_bits(size as u32)?, size))
}

fn decode_acs(r: &mut BitReader<'_>, dec: &HuffmanDecoder, block: &mut CoeffBlock) -> Result<()> {
    let mut k = 1usize;
    while k < 64 {
        let rs = dec.next_symbol_sequential(r)?;
        let (run, size) = ((rs >> 4) as usize, rs & 15);
        if size == 0 {
            if run == 15 {
                k += 16;
                if k > 64 {
                    return Err(malformed("zero run past coefficient 63"));
                }
                continue;
            }
            break;
        }
        k += run;
        if k > 63 {
            return Err(malformed("more than 63 AC coefficients"));
        }
        if size > MAX_AC_SIZE {
            return Err(malformed(format!("AC magnitude category {size}")));
        }
        block[ZIGZAG[k]] = extend(r.read_bits(size as u32)?, size) as i16;
        k += 1;
    }
    Ok(())
}

/// Decodes every MCU in raster order, accumulating DC predictions across the scan.
pub fn decode_scan_sequential(parsed: &ParsedJpeg) -> Result<Vec<McuCoefficients>> {
    let decs = parsed.tables.decoders()?;
    let mut r = BitReader::stuffed(&parsed.scan_data);
    let mut pred = [0i32; 3];
    let n = parsed.mcu_count();
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let mut mcu = McuCoefficients::default();
        for (du, block) in mcu.0.iter_mut().enumerate() {
            let c = DU_COMPONENT[du];
            pred[c] += decode_dc_diff(&mut r, &decs.dc[c])?;
            if !(DC_MIN..=DC_MAX).contains(&pred[c]) {
                return Err(malformed(format!("DC value {} overflows 12 bits", pred[c])));
            }
            block[0] = pred[c] as i16;
            decode_acs(&mut r, &decs.ac[c], block)?;
        }
        out.push(mcu);
    }
    Ok(out)
}
