//! Baseline 4:2:0 JFIF encoder using the Annex K tables.

use std::f64::consts::PI;
use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::image::RgbImage;
use crate::jpeg::bits::BitWriter;
use crate::jpeg::huffman::{HuffmanEncoder, HuffmanSpec};
use crate::jpeg::parse::{CodingTables, ComponentInfo};
use crate::jpeg::scan::{CoeffBlock, McuCoefficients, DU_COMPONENT};
use crate::jpeg::tables::*;

/// Annex K tables with quantizers scaled for `quality` (1..=100).
pub fn standard_tables(quality: u8) -> CodingTables {
    let to_zigzag = |natural: [u16; 64]| {
        let mut zz = [0u16; 64];
        for (k, z) in zz.iter_mut().enumerate() {
            *z = natural[ZIGZAG[k]];
        }
        zz
    };
    let comp = |id, h, v, t| ComponentInfo {
        id,
        h,
        v,
        quant_id: t,
        dc_id: t,
        ac_id: t,
    };
    CodingTables {
        quant: [
            Some(to_zigzag(scaled_quant(&LUMA_QUANT, quality))),
            Some(to_zigzag(scaled_quant(&CHROMA_QUANT, quality))),
            None,
            None,
        ],
        dc: [
            Some(HuffmanSpec::new(LUMA_DC_COUNTS, &DC_SYMBOLS)),
            Some(HuffmanSpec::new(CHROMA_DC_COUNTS, &DC_SYMBOLS)),
            None,
            None,
        ],
        ac: [
            Some(HuffmanSpec::new(LUMA_AC_COUNTS, &LUMA_AC_SYMBOLS)),
            Some(HuffmanSpec::new(CHROMA_AC_COUNTS, &CHROMA_AC_SYMBOLS)),
            None,
            None,
        ],
        components: [comp(1, 2, 2, 0), comp(2, 1, 1, 1), comp(3, 1, 1, 1)],
    }
}

/// Encodes `image` as a baseline 4:2:0 JPEG.
pub fn encode_baseline(image: &RgbImage, quality: u8) -> Result<Vec<u8>> {
    if image.is_empty() {
        return Err(Error::EmptyInput);
    }
    if image.width > 65535 || image.height > 65535 {
        return Err(Error::InvalidArgument(
            "JPEG dimensions are limited to 65535".into(),
        ));
    }
    let tables = standard_tables(quality.clamp(1, 100));
    let mcus = forward_mcus(image, &tables);
    write_jpeg(image.width, image.height, &tables, &mcus)
}

fn cos_table() -> &'static [[f64; 8]; 8] {
    static T: OnceLock<[[f64; 8]; 8]> = OnceLock::new();
    T.get_or_init(|| {
        let mut t = [[0.0; 8]; 8];
        for (x, row) in t.iter_mut().enumerate() {
            for (u, c) in row.iter_mut().enumerate() {
                *c = ((2 * x + 1) as f64 * u as f64 * PI / 16.0).cos();
            }
        }
        t
    })
}

/// Separable double-precision FDCT of level-shifted samples.
fn fdct(samples: &[f64; 64]) -> [f64; 64] {
    let cos = cos_table();
    let mut tmp = [0.0f64; 64];
    for y in 0..8 {
        for u in 0..8 {
            tmp[y * 8 + u] = (0..8).map(|x| samples[y * 8 + x] * cos[x][u]).sum();
        }
    }
    let cu = |u: usize| {
        if u == 0 {
            std::f64::consts::FRAC_1_SQRT_2
        } else {
            1.0
        }
    };
    let mut out = [0.0f64; 64];
    for v in 0..8 {
        for u in 0..8 {
            let s: f64 = (0..8).map(|y| tmp[y * 8 + u] * cos[y][v]).sum();
            out[v * 8 + u] = 0.25 * cu(u) * cu(v) * s;
        }
    }
    out
}

fn quantize(samples: &[f64; 64], quant: &[u16; 64]) -> CoeffBlock {
    let f = fdct(samples);
    let mut out = [0i16; 64];
    for i in 0..64 {
        let q = (f[i] / quant[i] as f64).round();
        let lim = if i == 0 { 2047.0 } else { 1023.0 };
        out[i] = q.clamp(-lim, lim) as i16;
    }
    out
}

/// Color-converts, subsamples and quantizes `image` into MCUs (edge-replicated padding).
pub fn forward_mcus(image: &RgbImage, tables: &CodingTables) -> Vec<McuCoefficients> {
    let cols = image.width.div_ceil(16) as usize;
    let rows = image.height.div_ceil(16) as usize;
    let w = cols * 16;
    let h = rows * 16;
    let mut planes = [vec![0f64; w * h], vec![0f64; w * h], vec![0f64; w * h]];
    for y in 0..h {
        let sy = (y as u32).min(image.height - 1);
        for x in 0..w {
            let sx = (x as u32).min(image.width - 1);
            let [r, g, b] = image.get(sx, sy).map(|c| c as f64);
            planes[0][y * w + x] = 0.299 * r + 0.587 * g + 0.114 * b;
            planes[1][y * w + x] = -0.168736 * r - 0.331264 * g + 0.5 * b + 128.0;
            planes[2][y * w + x] = 0.5 * r - 0.418688 * g - 0.081312 * b + 128.0;
        }
    }
    let quant = [
        tables.quant_natural(0),
        tables.quant_natural(1),
        tables.quant_natural(2),
    ];
    let mut out = Vec::with_capacity(cols * rows);
    for my in 0..rows {
        for mx in 0..cols {
            let mut mcu = McuCoefficients::default();
            for du in 0..6 {
                let comp = DU_COMPONENT[du];
                let mut s = [0f64; 64];
                for y in 0..8 {
                    for x in 0..8 {
                        s[y * 8 + x] = if comp == 0 {
                            let px = mx * 16 + (du & 1) * 8 + x;
                            let py = my * 16 + (du >> 1) * 8 + y;
                            planes[0][py * w + px]
                        } else {
                            let px = mx * 16 + x * 2;
                            let py = my * 16 + y * 2;
                            let p = &planes[comp];
                            (p[py * w + px]
                                + p[py * w + px + 1]
                                + p[(py + 1) * w + px]
                                + p[(py + 1) * w + px + 1])
                                / 4.0
                        } - 128.0;
                    }
                }
                mcu.0[du] = quantize(&s, &quant[comp]);
            }
            out.push(mcu);
        }
    }
    out
}

fn magnitude(v: i32) -> (u8, u32) {
    let size = (32 - v.unsigned_abs().leading_zeros()) as u8;
    let bits = if v < 0 {
        (v - 1) as u32 & ((1u32 << size) - 1)
    } else {
        v as u32
    };
    (size, bits)
}

/// Huffman-codes one data unit; `pred` is the component's DC predictor.
pub fn encode_block(
    w: &mut BitWriter,
    block: &CoeffBlock,
    pred: &mut i32,
    dc: &HuffmanEncoder,
    ac: &HuffmanEncoder,
) {
    let diff = block[0] as i32 - *pred;
    *pred = block[0] as i32;
    let (size, bits) = magnitude(diff);
    dc.emit(w, size);
    w.write_bits(bits, size as u32);
    let mut run = 0u8;
    for k in 1..64 {
        let v = block[ZIGZAG[k]] as i32;
        if v == 0 {
            run += 1;
            continue;
        }
        while run >= 16 {
            ac.emit(w, 0xF0);
            run -= 16;
        }
        let (size, bits) = magnitude(v);
        ac.emit(w, run << 4 | size);
        w.write_bits(bits, size as u32);
        run = 0;
    }
    if run > 0 {
        ac.emit(w, 0x00);
    }
}

/// Entropy-codes `mcus` with `tables` and wraps them in a JFIF container.
pub fn write_jpeg(
    width: u32,
    height: u32,
    tables: &CodingTables,
    mcus: &[McuCoefficients],
) -> Result<Vec<u8>> {
    tables.validate()?;
    let expected = (width.div_ceil(16) * height.div_ceil(16)) as usize;
    if mcus.len() != expected {
        return Err(Error::InvalidArgument(format!(
            "{} MCUs given, {expected} needed",
            mcus.len()
        )));
    }
    let c = &tables.components;
    let enc = |spec: &Option<HuffmanSpec>| HuffmanEncoder::new(spec.as_ref().expect("validated"));
    let dc = [
        enc(&tables.dc[c[0].dc_id as usize])?,
        enc(&tables.dc[c[1].dc_id as usize])?,
        enc(&tables.dc[c[2].dc_id as usize])?,
    ];
    let ac = [
        enc(&tables.ac[c[0].ac_id as usize])?,
        enc(&tables.ac[c[1].ac_id as usize])?,
        enc(&tables.ac[c[2].ac_id as usize])?,
    ];

    let mut w = BitWriter::stuffed();
    let mut pred = [0i32; 3];
    for mcu in mcus {
        for (du, block) in mcu.0.iter().enumerate() {
            let comp = DU_COMPONENT[du];
            encode_block(&mut w, block, &mut pred[comp], &dc[comp], &ac[comp]);
        }
    }
    let scan = w.into_bytes();

    let mut out = Vec::with_capacity(scan.len() + 1024);
    out.extend_from_slice(&[0xFF, 0xD8]);
    segment(
        &mut out,
        0xE0,
        b"JFIF\0\x01\x01\x00\x00\x01\x00\x01\x00\x00",
    );
    for (id, q) in tables.quant.iter().enumerate() {
        if let Some(q) = q {
            let wide = q.iter().any(|&v| v > 255);
            let mut body = vec![(wide as u8) << 4 | id as u8];
            for &v in q {
                if wide {
                    body.extend_from_slice(&v.to_be_bytes());
                } else {
                    body.push(v as u8);
                }
            }
            segment(&mut out, 0xDB, &body);
        }
    }
    let mut sof = vec![8];
    sof.extend_from_slice(&(height as u16).to_be_bytes());
    sof.extend_from_slice(&(width as u16).to_be_bytes());
    sof.push(3);
    for comp in c {
        sof.extend_from_slice(&[comp.id, comp.h << 4 | comp.v, comp.quant_id]);
    }
    segment(&mut out, 0xC0, &sof);
    for (class, specs) in [(0u8, &tables.dc), (1u8, &tables.ac)] {
        for (id, spec) in specs.iter().enumerate() {
            if let Some(spec) = spec {
                let mut body = vec![class << 4 | id as u8];
                body.extend_from_slice(&spec.counts);
                body.extend_from_slice(&spec.symbols);
                segment(&mut out, 0xC4, &body);
            }
        }
    }
    let mut sos = vec![3];
    for comp in c {
        sos.extend_from_slice(&[comp.id, comp.dc_id << 4 | comp.ac_id]);
    }
    sos.extend_from_slice(&[0, 63, 0]);
    segment(&mut out, 0xDA, &sos);
    out.extend_from_slice(&scan);
    out.extend_from_slice(&[0xFF, 0xD9]);
    Ok(out)
}

fn segment(out: &mut Vec<u8>, marker: u8, body: &[u8]) {
    out.extend_from_slice(&[0xFF, marker]);
    out.extend_from_slice(&((body.len() + 2) as u16).to_be_bytes());
    out.extend_from_slice(body);
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn magnitude_categories() {
        assert_eq!(magnitude(0), (0, 0));
        assert_eq!(magnitude(1), (1, 1));
        assert_eq!(magnitude(-1), (1, 0));
        assert_eq!(magnitude(-3), (2, 0));
        assert_eq!(magnitude(3), (2, 3));
        assert_eq!(magnitude(-1023), (10, 0));
        assert_eq!(magnitude(2047), (11, 2047));
    }

    #[test]
    fn quality_50_tables_are_annex_k() {
        let t = standard_tables(50);
        assert_eq!(t.quant_natural(0), LUMA_QUANT);
        assert_eq!(t.quant_natural(1), CHROMA_QUANT);
    }

    #[test]
    fn fdct_of_constant_is_dc_only() {
        let f = fdct(&[10.0; 64]);
        assert!((f[0] - 80.0).abs() < 1e-9);
        assert!(f[1..].iter().all(|c| c.abs() < 1e-9));
    }
}
