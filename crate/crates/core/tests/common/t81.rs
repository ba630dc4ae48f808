//! Brute-force baseline 4:2:0 decoder used as a test oracle. It shares no code with
//! the crate: Huffman codes are matched bit by bit against a map of canonical codes,
//! the zigzag order is generated by walking anti-diagonals, and the inverse DCT is the
//! direct per-sample double sum.

use std::collections::HashMap;

const TIE: f64 = 1e-9;

fn round_half_away(x: f64) -> i32 {
    let r = (x.abs() + 0.5 + TIE).floor() as i32;
    if x < 0.0 {
        -r
    } else {
        r
    }
}

fn zigzag() -> [usize; 64] {
    let mut order = [0usize; 64];
    let mut k = 0;
    for s in 0..15usize {
        let lo = s.saturating_sub(7);
        let hi = s.min(7);
        let rows: Vec<usize> = if s % 2 == 0 {
            (lo..=hi).rev().collect()
        } else {
            (lo..=hi).collect()
        };
        for r in rows {
            order[k] = r * 8 + (s - r);
            k += 1;
        }
    }
    order
}

struct Component {
    id: u8,
    h: u8,
    v: u8,
    tq: u8,
    td: u8,
    ta: u8,
}

struct Bits {
    data: Vec<u8>,
    pos: usize,
}

impl Bits {
    fn bit(&mut self) -> u32 {
        let byte = self.data.get(self.pos / 8).copied().unwrap_or(0xFF);
        let b = (byte >> (7 - self.pos % 8)) & 1;
        self.pos += 1;
        b as u32
    }

    fn bits(&mut self, n: u8) -> u32 {
        (0..n).fold(0, |acc, _| acc << 1 | self.bit())
    }
}

fn huff_decode(bits: &mut Bits, table: &HashMap<(u8, u16), u8>) -> Result<u8, String> {
    let mut code = 0u16;
    for len in 1..=16u8 {
        code = code << 1 | bits.bit() as u16;
        if let Some(&s) = table.get(&(len, code)) {
            return Ok(s);
        }
    }
    Err("no huffman code matched".into())
}

fn extend(v: u32, s: u8) -> i32 {
    if s == 0 {
        0
    } else if v < 1 << (s - 1) {
        v as i32 - (1 << s) + 1
    } else {
        v as i32
    }
}

fn idct_sample(f: &[f64; 64], x: usize, y: usize) -> f64 {
    let c = |k: usize| {
        if k == 0 {
            std::f64::consts::FRAC_1_SQRT_2
        } else {
            1.0
        }
    };
    let mut s = 0.0;
    for v in 0..8 {
        for u in 0..8 {
            let coef = f[v * 8 + u];
            if coef == 0.0 {
                continue;
            }
            s += c(u) * c(v) / 4.0
                * coef
                * (((2 * x + 1) * u) as f64 * std::f64::consts::PI / 16.0).cos()
                * (((2 * y + 1) * v) as f64 * std::f64::consts::PI / 16.0).cos();
        }
    }
    s
}

/// Decodes a baseline 4:2:0 JPEG to cropped RGB8.
pub fn decode(jpeg: &[u8]) -> Result<(u32, u32, Vec<u8>), String> {
    if jpeg.get(..2) != Some(&[0xFF, 0xD8]) {
        return Err("no SOI".into());
    }
    let mut qt: HashMap<u8, Vec<u16>> = HashMap::new();
    let mut ht: HashMap<(u8, u8), HashMap<(u8, u16), u8>> = HashMap::new();
    let mut comps: Vec<Component> = Vec::new();
    let (mut width, mut height) = (0usize, 0usize);
    let mut pos = 2;
    let entropy: Vec<u8> = loop {
        if jpeg.get(pos) != Some(&0xFF) {
            return Err(format!("expected marker at {pos}"));
        }
        let kind = jpeg[pos + 1];
        let len = u16::from_be_bytes([jpeg[pos + 2], jpeg[pos + 3]]) as usize;
        let seg = &jpeg[pos + 4..pos + 2 + len];
        match kind {
            0xDB => {
                let mut p = 0;
                while p < seg.len() {
                    if seg[p] >> 4 != 0 {
                        return Err("16-bit quantizers".into());
                    }
                    qt.insert(
                        seg[p] & 15,
                        seg[p + 1..p + 65].iter().map(|&b| b as u16).collect(),
                    );
                    p += 65;
                }
            }
            0xC4 => {
                let mut p = 0;
                while p < seg.len() {
                    let (tc, th) = (seg[p] >> 4, seg[p] & 15);
                    let counts = &seg[p + 1..p + 17];
                    let mut syms = seg[p + 17..].iter();
                    let mut table = HashMap::new();
                    let mut code = 0u16;
                    for len in 1..=16u8 {
                        for _ in 0..counts[len as usize - 1] {
                            table.insert((len, code), *syms.next().unwrap());
                            code += 1;
                        }
                        code <<= 1;
                    }
                    p += 17 + counts.iter().map(|&c| c as usize).sum::<usize>();
                    ht.insert((tc, th), table);
                }
            }
            0xC0 => {
                height = u16::from_be_bytes([seg[1], seg[2]]) as usize;
                width = u16::from_be_bytes([seg[3], seg[4]]) as usize;
                for i in 0..seg[5] as usize {
                    let c = &seg[6 + 3 * i..9 + 3 * i];
                    comps.push(Component {
                        id: c[0],
                        h: c[1] >> 4,
                        v: c[1] & 15,
                        tq: c[2],
                        td: 0,
                        ta: 0,
                    });
                }
            }
            0xDA => {
                for i in 0..seg[0] as usize {
                    let (id, t) = (seg[1 + 2 * i], seg[2 + 2 * i]);
                    let c = comps
                        .iter_mut()
                        .find(|c| c.id == id)
                        .ok_or("scan names unknown component")?;
                    c.td = t >> 4;
                    c.ta = t & 15;
                }
                let mut out = Vec::new();
                let mut p = pos + 2 + len;
                while p < jpeg.len() {
                    if jpeg[p] == 0xFF {
                        if jpeg.get(p + 1) == Some(&0x00) {
                            out.push(0xFF);
                            p += 2;
                            continue;
                        }
                        break;
                    }
                    out.push(jpeg[p]);
                    p += 1;
                }
                break out;
            }
            0xC1..=0xCF if kind != 0xC4 && kind != 0xC8 && kind != 0xCC => {
                return Err("not baseline".into())
            }
            _ => {}
        }
        pos += 2 + len;
    };
    if comps.len() != 3
        || (comps[0].h, comps[0].v) != (2, 2)
        || comps[1..].iter().any(|c| (c.h, c.v) != (1, 1))
    {
        return Err("not 4:2:0".into());
    }

    let zz = zigzag();
    let (mcu_cols, mcu_rows) = (width.div_ceil(16), height.div_ceil(16));
    let (yw, cw) = (mcu_cols * 16, mcu_cols * 8);
    let mut planes = [
        vec![0u8; yw * mcu_rows * 16],
        vec![0u8; cw * mcu_rows * 8],
        vec![0u8; cw * mcu_rows * 8],
    ];
    let mut bits = Bits {
        data: entropy,
        pos: 0,
    };
    let mut pred = [0i32; 3];
    for my in 0..mcu_rows {
        for mx in 0..mcu_cols {
            for (ci, blocks) in [(0usize, 4usize), (1, 1), (2, 1)] {
                let comp = &comps[ci];
                let q = qt.get(&comp.tq).ok_or("missing quantizer")?;
                let dc_t = ht.get(&(0, comp.td)).ok_or("missing DC table")?;
                let ac_t = ht.get(&(1, comp.ta)).ok_or("missing AC table")?;
                for b in 0..blocks {
                    let mut zzc = [0i32; 64];
                    let s = huff_decode(&mut bits, dc_t)?;
                    pred[ci] += extend(bits.bits(s), s);
                    zzc[0] = pred[ci];
                    let mut k = 1;
                    while k < 64 {
                        let rs = huff_decode(&mut bits, ac_t)?;
                        let (r, s) = (rs >> 4, rs & 15);
                        if s == 0 {
                            if r == 15 {
                                k += 16;
                                continue;
                            }
                            break;
                        }
                        k += r as usize;
                        if k > 63 {
                            return Err("coefficient index past 63".into());
                        }
                        zzc[k] = extend(bits.bits(s), s);
                        k += 1;
                    }
                    let mut f = [0f64; 64];
                    for i in 0..64 {
                        f[zz[i]] = (zzc[i] * q[i] as i32) as f64;
                    }
                    let (ox, oy, stride, plane) = if ci == 0 {
                        (
                            mx * 16 + (b % 2) * 8,
                            my * 16 + (b / 2) * 8,
                            yw,
                            &mut planes[0],
                        )
                    } else {
                        (mx * 8, my * 8, cw, &mut planes[ci])
                    };
                    for y in 0..8 {
                        for x in 0..8 {
                            let v = round_half_away(idct_sample(&f, x, y)) + 128;
                            plane[(oy + y) * stride + ox + x] = v.clamp(0, 255) as u8;
                        }
                    }
                }
            }
        }
    }

    let mut rgb = Vec::with_capacity(width * height * 3);
    for y in 0..height {
        for x in 0..width {
            let yy = planes[0][y * yw + x] as f64;
            let cb = planes[1][(y / 2) * cw + x / 2] as f64 - 128.0;
            let cr = planes[2][(y / 2) * cw + x / 2] as f64 - 128.0;
            for v in [
                yy + 1.402 * cr,
                yy - 0.344136 * cb - 0.714136 * cr,
                yy + 1.772 * cb,
            ] {
                rgb.push(round_half_away(v).clamp(0, 255) as u8);
            }
        }
    }
    Ok((width as u32, height as u32, rgb))
}
