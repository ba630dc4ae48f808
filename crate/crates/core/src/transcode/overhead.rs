//! Exact memory-overhead accounting of a transcoded texture.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::jpeg::huffman::HuffmanEncoder;
use crate::mcu::{decode_segment, HuffmanVariant, McuDecodeStats};
use crate::transcode::{RaTexture, DC_HEADER_BITS};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OverheadReport {
    pub mcu_count: usize,
    pub index_bits: u64,
    pub dc_added_bits: u64,
    /// Bits the source JPEG spent on the Y1/Cb/Cr DC codes that the header replaces.
    pub dc_removed_bits: u64,
    pub padding_bits: u64,
    /// (index + added - removed + padding) / (width * height).
    pub effective_bpp: f64,
    /// Same as `effective_bpp` without the byte-alignment padding.
    pub effective_bpp_unpadded: f64,
    /// (index + added) / (mcu_count * 256): the per-MCU upper bound without DC credit.
    pub upper_bound_bpp: f64,
}

impl OverheadReport {
    pub fn index_bits_per_mcu(&self) -> f64 {
        self.index_bits as f64 / self.mcu_count as f64
    }
}

fn dc_cost(enc: &HuffmanEncoder, diff: i32) -> u64 {
    let size = 32 - diff.unsigned_abs().leading_zeros();
    enc.code_len(size as u8) as u64 + size as u64
}

/// Walks every segment to count padding and the source bits of the replaced DC codes.
pub fn compute_overhead(tex: &RaTexture) -> Result<OverheadReport> {
    let t = &tex.tables;
    let enc = |c: usize| {
        HuffmanEncoder::new(
            t.dc[t.components[c].dc_id as usize]
                .as_ref()
                .expect("validated"),
        )
    };
    let dc_enc = [enc(0)?, enc(1)?, enc(2)?];
    let n = tex.mcu_count();
    let mut removed = 0u64;
    let mut padding = 0u64;
    // Predictors as the source scan had them: last Y (Y4), Cb, Cr of the previous MCU.
    let mut pred = [0i32; 3];
    for m in 0..n {
        let mut stats = McuDecodeStats::default();
        let (coeffs, used) = decode_segment(tex, m, HuffmanVariant::Sequential, &mut stats)?;
        let seg_bits = tex.segment(m).len() as u64 * 8;
        padding += seg_bits - used;
        let b = &coeffs.0;
        removed += dc_cost(&dc_enc[0], b[0][0] as i32 - pred[0]);
        removed += dc_cost(&dc_enc[1], b[4][0] as i32 - pred[1]);
        removed += dc_cost(&dc_enc[2], b[5][0] as i32 - pred[2]);
        pred = [b[3][0] as i32, b[4][0] as i32, b[5][0] as i32];
    }
    let index_bits = tex.index.bit_size();
    let added = DC_HEADER_BITS as u64 * n as u64;
    let pixels = tex.width as f64 * tex.height as f64;
    let net = index_bits as f64 + added as f64 - removed as f64;
    Ok(OverheadReport {
        mcu_count: n,
        index_bits,
        dc_added_bits: added,
        dc_removed_bits: removed,
        padding_bits: padding,
        effective_bpp: (net + padding as f64) / pixels,
        effective_bpp_unpadded: net / pixels,
        upper_bound_bpp: (index_bits + added) as f64 / (n as f64 * 256.0),
    })
}
