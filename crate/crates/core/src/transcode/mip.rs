//! Mip chains: eight independently transcoded levels of one texture.

use crate::error::{Error, Result};
use crate::image::RgbImage;
use crate::jpeg::{decode_reference, encode_baseline, parse_jpeg, ParsedJpeg};
use crate::transcode::{transcode, RaTexture};

/// Level count, bounded by the 3-bit mip field of cache keys.
pub const MIP_LEVELS: usize = 8;
pub const MIN_MIP_DIM: u32 = 16;

#[derive(Debug, Clone, PartialEq)]
pub struct MipChain {
    pub levels: Vec<RaTexture>,
}

impl MipChain {
    pub fn texture_id(&self) -> u16 {
        self.levels[0].texture_id
    }

    pub fn level(&self, k: usize) -> &RaTexture {
        &self.levels[k.min(self.levels.len() - 1)]
    }

    /// Level-0 dimensions.
    pub fn base_dims(&self) -> (u32, u32) {
        (self.levels[0].width, self.levels[0].height)
    }
}

/// Dimensions of level `k` for a `width x height` base.
pub fn mip_dims(width: u32, height: u32, k: usize) -> (u32, u32) {
    let shrink = |d: u32| (d >> k.min(31)).max(MIN_MIP_DIM);
    (shrink(width), shrink(height))
}

/// Box filter to `tw x th`; each output texel averages the source texels its footprint
/// touches (exactly 2x2 for a halving, 1x1 for an unchanged axis).
pub fn downscale_box(src: &RgbImage, tw: u32, th: u32) -> RgbImage {
    let (sw, sh) = (src.width as u64, src.height as u64);
    let span = |i: u32, s: u64, t: u32| {
        let (i, t) = (i as u64, t as u64);
        let lo = i * s / t;
        let hi = ((i + 1) * s).div_ceil(t).max(lo + 1);
        lo as u32..hi.min(s) as u32
    };
    RgbImage::from_fn(tw, th, |x, y| {
        let (xs, ys) = (span(x, sw, tw), span(y, sh, th));
        let mut sum = [0u32; 3];
        let mut n = 0u32;
        for sy in ys {
            for sx in xs.clone() {
                let p = src.get(sx, sy);
                for c in 0..3 {
                    sum[c] += p[c] as u32;
                }
                n += 1;
            }
        }
        sum.map(|s| ((s + n / 2) / n) as u8)
    })
}

fn encode_level(image: &RgbImage, quality: u8, texture_id: u16) -> Result<RaTexture> {
    let bytes = encode_baseline(image, quality)?;
    transcode(&parse_jpeg(&bytes)?, texture_id)
}

fn check_size(w: u32, h: u32) -> Result<()> {
    if w < MIN_MIP_DIM || h < MIN_MIP_DIM {
        return Err(Error::InvalidArgument(format!(
            "mip chains need at least 16x16 texels, got {w}x{h}"
        )));
    }
    Ok(())
}

fn chain_from(base: RaTexture, image: &RgbImage, quality: u8, texture_id: u16) -> Result<MipChain> {
    let mut levels = vec![base];
    let mut prev = image.clone();
    for k in 1..MIP_LEVELS {
        let (w, h) = mip_dims(image.width, image.height, k);
        let level = if (w, h) == (prev.width, prev.height) {
            prev.clone()
        } else {
            downscale_box(&prev, w, h)
        };
        levels.push(encode_level(&level, quality, texture_id)?);
        prev = level;
    }
    Ok(MipChain { levels })
}

/// Encodes every level (including level 0) from `image` at `quality`.
pub fn build_mip_chain(image: &RgbImage, quality: u8, texture_id: u16) -> Result<MipChain> {
    check_size(image.width, image.height)?;
    let base = encode_level(image, quality, texture_id)?;
    chain_from(base, image, quality, texture_id)
}

/// Keeps the source JPEG's scan as level 0 and encodes levels 1..8 at `quality`
/// from its reference decode.
pub fn build_mip_chain_from_jpeg(
    parsed: &ParsedJpeg,
    quality: u8,
    texture_id: u16,
) -> Result<MipChain> {
    check_size(parsed.width, parsed.height)?;
    let base = transcode(parsed, texture_id)?;
    let image = decode_reference(parsed)?;
    chain_from(base, &image, quality, texture_id)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn halving_sequence_for_4k() {
        let dims: Vec<u32> = (0..MIP_LEVELS).map(|k| mip_dims(4096, 4096, k).0).collect();
        assert_eq!(dims, vec![4096, 2048, 1024, 512, 256, 128, 64, 32]);
    }

    #[test]
    fn small_textures_clamp_at_16() {
        let dims: Vec<(u32, u32)> = (0..MIP_LEVELS).map(|k| mip_dims(64, 64, k)).collect();
        assert_eq!(dims[1], (32, 32));
        assert!(dims[2..].iter().all(|&d| d == (16, 16)));
        assert_eq!(mip_dims(1000, 40, 3), (125, 16));
    }

    #[test]
    fn box_filter_averages_2x2() {
        let src = RgbImage::from_fn(4, 2, |x, _| [(x * 10) as u8, 0, 255]);
        let d = downscale_box(&src, 2, 1);
        assert_eq!(d.get(0, 0), [5, 0, 255]);
        assert_eq!(d.get(1, 0), [25, 0, 255]);
        assert_eq!(downscale_box(&src, 4, 2), src);
    }

    #[test]
    fn too_small_rejected() {
        let img = RgbImage::filled(8, 32, [1, 2, 3]);
        assert!(build_mip_chain(&img, 80, 0).is_err());
    }
}
