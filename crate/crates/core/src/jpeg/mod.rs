//! Baseline JPEG: container parsing, Huffman coding, sequential scan decoding and a
//! 4:2:0 encoder.

pub mod bits;
pub mod encode;
pub mod huffman;
pub mod parse;
pub mod scan;
pub mod tables;

pub use encode::{encode_baseline, standard_tables, write_jpeg};
pub use huffman::{BallotStats, HuffmanDecoder, HuffmanEncoder, HuffmanSpec};
pub use parse::{parse_jpeg, CodingTables, ComponentInfo, ParsedJpeg};
pub use scan::{decode_scan_sequential, CoeffBlock, McuCoefficients};

use crate::error::Result;
use crate::image::RgbImage;
use crate::pixel::{reconstruct_mcu, PixelBlock, BLOCK_DIM};

/// Assembles MCU pixel blocks (raster order) into an image cropped to `width x height`.
pub fn assemble_blocks(width: u32, height: u32, blocks: &[PixelBlock]) -> RgbImage {
    let cols = width.div_ceil(16) as usize;
    let mut img = RgbImage::new(width, height);
    let row_bytes = width as usize * 3;
    for y in 0..height as usize {
        let (my, py) = (y / BLOCK_DIM, y % BLOCK_DIM);
        for mx in 0..cols {
            let x0 = mx * BLOCK_DIM;
            let n = (width as usize - x0).min(BLOCK_DIM);
            let src = &blocks[my * cols + mx].0[py * BLOCK_DIM * 3..(py * BLOCK_DIM + n) * 3];
            let dst = y * row_bytes + x0 * 3;
            img.data[dst..dst + n * 3].copy_from_slice(src);
        }
    }
    img
}

/// Reference decode: sequential scan decoding followed by the normative pixel stage.
pub fn decode_reference(parsed: &ParsedJpeg) -> Result<RgbImage> {
    let mcus = decode_scan_sequential(parsed)?;
    let quant = [
        parsed.tables.quant_natural(0),
        parsed.tables.quant_natural(1),
        parsed.tables.quant_natural(2),
    ];
    let blocks: Vec<PixelBlock> = mcus.iter().map(|m| reconstruct_mcu(m, &quant)).collect();
    Ok(assemble_blocks(parsed.width, parsed.height, &blocks))
}

/// Parses and decodes JPEG bytes with the reference path.
pub fn decode_jpeg(bytes: &[u8]) -> Result<RgbImage> {
    decode_reference(&parse_jpeg(bytes)?)
}
