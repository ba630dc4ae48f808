//! Normative pixel reconstruction: dequantization, direct 2-D IDCT, 4:2:0 chroma
//! replication and YCbCr to RGB conversion.
//!
//! Every decode path in the crate goes through these functions, so two decoders that
//! agree on coefficients agree on texels bit for bit.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::sync::OnceLock;

use crate::jpeg::scan::{CoeffBlock, McuCoefficients};

pub const BLOCK_DIM: usize = 16;

/// Values closer than this to a .5 boundary are treated as ties.
const TIE_EPSILON: f64 = 1e-9;

/// Round half away from zero, absorbing floating-point noise at exact ties.
#[inline]
pub fn round_half_away(x: f64) -> i32 {
    let r = (x.abs() + 0.5 + TIE_EPSILON).floor();
    if x < 0.0 {
        -(r as i32)
    } else {
        r as i32
    }
}

#[inline]
fn clamp_u8(v: i32) -> u8 {
    v.clamp(0, 255) as u8
}

/// A decoded 16x16 MCU, RGB8 row-major.
#[derive(Clone, PartialEq, Eq)]
pub struct PixelBlock(pub [u8; BLOCK_DIM * BLOCK_DIM * 3]);

impl Default for PixelBlock {
    fn default() -> Self {
        Self([0; BLOCK_DIM * BLOCK_DIM * 3])
    }
}

impl std::fmt::Debug for PixelBlock {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "PixelBlock(first texel {:?})", self.texel(0, 0))
    }
}

impl PixelBlock {
    #[inline]
    pub fn texel(&self, x: usize, y: usize) -> [u8; 3] {
        let i = (y * BLOCK_DIM + x) * 3;
        [self.0[i], self.0[i + 1], self.0[i + 2]]
    }
}

/// `basis[k][p]`: contribution of natural coefficient k to sample p, including 1/4 C(u) C(v).
fn idct_basis() -> &'static [[f64; 64]; 64] {
    static BASIS: OnceLock<Box<[[f64; 64]; 64]>> = OnceLock::new();
    BASIS.get_or_init(|| {
        let c = |u: usize| if u == 0 { FRAC_1_SQRT_2 } else { 1.0 };
        let mut b = Box::new([[0.0; 64]; 64]);
        for v in 0..8 {
            for u in 0..8 {
                for y in 0..8 {
                    for x in 0..8 {
                        b[v * 8 + u][y * 8 + x] = 0.25
                            * c(u)
                            * c(v)
                            * ((2 * x + 1) as f64 * u as f64 * PI / 16.0).cos()
                            * ((2 * y + 1) as f64 * v as f64 * PI / 16.0).cos();
                    }
                }
            }
        }
        b
    })
}

/// Dequantizes and inverse-transforms one block (both arrays in natural order).
///
/// Samples are `clamp(round_half_away(s) + 128)`, with `s` accumulated over the
/// coefficients in ascending natural order. Zero coefficients are skipped, which
/// leaves the sums unchanged.
pub fn idct_8x8(coeffs: &CoeffBlock, quant: &[u16; 64]) -> [u8; 64] {
    let basis = idct_basis();
    let mut acc = [0.0f64; 64];
    for k in 0..64 {
        if coeffs[k] == 0 {
            continue;
        }
        let s = coeffs[k] as f64 * quant[k] as f64;
        for (a, b) in acc.iter_mut().zip(basis[k].iter()) {
            *a += s * b;
        }
    }
    let mut out = [0u8; 64];
    for (o, a) in out.iter_mut().zip(acc) {
        *o = clamp_u8(round_half_away(a) + 128);
    }
    out
}

#[inline]
pub fn ycbcr_to_rgb(y: u8, cb: u8, cr: u8) -> [u8; 3] {
    let (y, cb, cr) = (y as f64, cb as f64 - 128.0, cr as f64 - 128.0);
    [
        clamp_u8(round_half_away(y + 1.402 * cr)),
        clamp_u8(round_half_away(y - 0.344136 * cb - 0.714136 * cr)),
        clamp_u8(round_half_away(y + 1.772 * cb)),
    ]
}

/// Replicates chroma 2x2 and converts to RGB. `y` is Y1..Y4 (TL, TR, BL, BR).
pub fn upsample_and_color(y: &[[u8; 64]; 4], cb: &[u8; 64], cr: &[u8; 64]) -> PixelBlock {
    let mut block = PixelBlock::default();
    for py in 0..BLOCK_DIM {
        for px in 0..BLOCK_DIM {
            let du = (py / 8) * 2 + px / 8;
            let luma = y[du][(py % 8) * 8 + px % 8];
            let ci = (py / 2) * 8 + px / 2;
            let rgb = ycbcr_to_rgb(luma, cb[ci], cr[ci]);
            let i = (py * BLOCK_DIM + px) * 3;
            block.0[i..i + 3].copy_from_slice(&rgb);
        }
    }
    block
}

/// Full pixel stage of one MCU. `quant` holds natural-order Y, Cb, Cr quantizers.
pub fn reconstruct_mcu(mcu: &McuCoefficients, quant: &[[u16; 64]; 3]) -> PixelBlock {
    let b = &mcu.0;
    let y = [
        idct_8x8(&b[0], &quant[0]),
        idct_8x8(&b[1], &quant[0]),
        idct_8x8(&b[2], &quant[0]),
        idct_8x8(&b[3], &quant[0]),
    ];
    upsample_and_color(&y, &idct_8x8(&b[4], &quant[1]), &idct_8x8(&b[5], &quant[2]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_spectrum_is_mid_gray() {
        assert_eq!(idct_8x8(&[0; 64], &[1; 64]), [128; 64]);
    }

    #[test]
    fn dc_of_eight_lifts_by_one() {
        let mut c = [0i16; 64];
        c[0] = 8;
        assert_eq!(idct_8x8(&c, &[1; 64]), [129; 64]);
        // Ties round away from zero on both sides of mid-gray.
        c[0] = 4;
        assert_eq!(idct_8x8(&c, &[1; 64]), [129; 64]);
        c[0] = -4;
        assert_eq!(idct_8x8(&c, &[1; 64]), [127; 64]);
    }

    #[test]
    fn dc_only_block_is_constant() {
        for (d, q) in [(5i16, 16u16), (-37, 3), (100, 7), (-2048, 1), (2047, 255)] {
            let mut c = [0i16; 64];
            c[0] = d;
            let expect = (round_half_away(d as f64 * q as f64 / 8.0) + 128).clamp(0, 255) as u8;
            let mut quant = [1u16; 64];
            quant[0] = q;
            assert_eq!(idct_8x8(&c, &quant), [expect; 64], "d={d} q={q}");
        }
    }

    #[test]
    fn color_conversion_examples() {
        assert_eq!(ycbcr_to_rgb(128, 128, 128), [128, 128, 128]);
        assert_eq!(ycbcr_to_rgb(255, 128, 128), [255, 255, 255]);
        // R = 76 + 1.402*127 = 254.054, G = 76 + 14.798 - 90.695 = 0.103, B = 76 - 76.196
        assert_eq!(ycbcr_to_rgb(76, 85, 255), [254, 0, 0]);
    }

    #[test]
    fn rounding_is_symmetric() {
        assert_eq!(round_half_away(0.5), 1);
        assert_eq!(round_half_away(-0.5), -1);
        assert_eq!(round_half_away(0.4999), 0);
        assert_eq!(round_half_away(-1.5), -2);
        // Accumulated noise just below a tie still rounds away.
        assert_eq!(round_half_away(2.4999999999999996), 3);
        assert_eq!(round_half_away(2.49), 2);
    }

    #[test]
    fn chroma_is_replicated() {
        let y = [[128u8; 64]; 4];
        let mut cb = [128u8; 64];
        cb[0] = 200;
        let block = upsample_and_color(&y, &cb, &[128; 64]);
        let tinted = block.texel(0, 0);
        assert_ne!(tinted, [128, 128, 128]);
        for (x, yy) in [(1, 0), (0, 1), (1, 1)] {
            assert_eq!(block.texel(x, yy), tinted);
        }
        assert_eq!(block.texel(2, 0), [128, 128, 128]);
    }
}
