//! Mark, decode, resolve: the texture passes that run after rasterization.

use crate::cache::{BlockCache, CacheKey, Reservation};
use crate::error::{Error, Result};
use crate::image::RgbImage;
use crate::mcu::{decode_mcu_with, HuffmanVariant};
use crate::par::Executor;
use crate::pixel::{round_half_away, PixelBlock, BLOCK_DIM};
use crate::render::raster::{GBuffer, GBufferPixel, BAND_ROWS};
use crate::render::scene::TextureSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Filter {
    Nearest,
    #[default]
    Bilinear,
}

impl std::str::FromStr for Filter {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "nearest" => Ok(Filter::Nearest),
            "bilinear" => Ok(Filter::Bilinear),
            _ => Err(Error::InvalidArgument(format!(
                "unknown filter {s:?} (expected nearest or bilinear)"
            ))),
        }
    }
}

/// Geometry of one mip level as seen by the texel addressing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LevelGeometry {
    pub width: u32,
    pub height: u32,
    pub mcu_cols: u32,
}

impl LevelGeometry {
    pub fn of(textures: &TextureSet, texture_id: u16, mip: u8) -> Result<Self> {
        let chain = textures
            .get(texture_id)
            .ok_or_else(|| Error::Scene(format!("texture {texture_id} is not loaded")))?;
        let level = chain.level(mip as usize);
        Ok(Self {
            width: level.width,
            height: level.height,
            mcu_cols: level.mcu_cols,
        })
    }

    /// Unwrapped integer texel coordinate containing `(u, v)`.
    #[inline]
    pub fn texel_unwrapped(&self, u: f64, v: f64) -> (i64, i64) {
        (
            (u * self.width as f64).floor() as i64,
            (v * self.height as f64).floor() as i64,
        )
    }

    #[inline]
    pub fn wrap(&self, x: i64, y: i64) -> (u32, u32) {
        (
            x.rem_euclid(self.width as i64) as u32,
            y.rem_euclid(self.height as i64) as u32,
        )
    }

    #[inline]
    pub fn mcu_of_texel(&self, x: u32, y: u32) -> u16 {
        (x / BLOCK_DIM as u32 + (y / BLOCK_DIM as u32) * self.mcu_cols) as u16
    }

    /// Wrapped texel and its MCU for a sample point.
    #[inline]
    pub fn locate(&self, u: f64, v: f64) -> (u32, u32, u16) {
        let (x, y) = self.texel_unwrapped(u, v);
        let (x, y) = self.wrap(x, y);
        (x, y, self.mcu_of_texel(x, y))
    }
}

/// Memoizes level geometry for runs of pixels sharing texture and mip.
struct GeometryCursor<'a> {
    textures: &'a TextureSet,
    last: Option<(u16, u8, LevelGeometry)>,
}

impl<'a> GeometryCursor<'a> {
    fn new(textures: &'a TextureSet) -> Self {
        Self {
            textures,
            last: None,
        }
    }

    #[inline]
    fn get(&mut self, texture_id: u16, mip: u8) -> Result<LevelGeometry> {
        match self.last {
            Some((t, m, g)) if t == texture_id && m == mip => Ok(g),
            _ => {
                let g = LevelGeometry::of(self.textures, texture_id, mip)?;
                self.last = Some((texture_id, mip, g));
                Ok(g)
            }
        }
    }
}

/// Cache key of the MCU a G-buffer pixel samples.
pub fn pixel_key(p: &GBufferPixel, textures: &TextureSet) -> Result<CacheKey> {
    let g = LevelGeometry::of(textures, p.texture_id, p.mip)?;
    Ok(CacheKey::new(g.locate(p.u, p.v).2, p.texture_id, p.mip))
}

#[derive(Debug, Clone, Default)]
pub struct MarkOutput {
    /// Keys newly reserved this frame, sorted, each exactly once.
    pub queue: Vec<CacheKey>,
    /// Sorted distinct keys sampled by each G-buffer.
    pub visible: Vec<Vec<CacheKey>>,
}

/// Reserves or marks the MCU of every valid pixel of every G-buffer.
pub fn mark_pass(
    gbuffers: &[&GBuffer],
    cache: &BlockCache,
    textures: &TextureSet,
    exec: &Executor,
) -> Result<MarkOutput> {
    let mut work = Vec::new();
    for (gi, gb) in gbuffers.iter().enumerate() {
        let bands = (gb.height as usize).div_ceil(BAND_ROWS);
        work.extend((0..bands).map(|b| (gi, b)));
    }
    let results = exec.map(
        &work,
        |&(gi, band)| -> Result<(Vec<CacheKey>, Vec<CacheKey>)> {
            let gb = gbuffers[gi];
            let w = gb.width as usize;
            let start = band * BAND_ROWS * w;
            let end = ((band + 1) * BAND_ROWS * w).min(gb.pixels.len());
            let mut cursor = GeometryCursor::new(textures);
            let mut newly = Vec::new();
            let mut seen = Vec::new();
            let mut last: Option<CacheKey> = None;
            for p in gb.pixels[start..end].iter().filter(|p| p.valid) {
                let g = cursor.get(p.texture_id, p.mip)?;
                let key = CacheKey::new(g.locate(p.u, p.v).2, p.texture_id, p.mip);
                if last == Some(key) {
                    continue;
                }
                last = Some(key);
                seen.push(key);
                if cache.reserve_or_mark(key)? == Reservation::NewlyReserved {
                    newly.push(key);
                }
            }
            seen.sort_unstable();
            seen.dedup();
            Ok((newly, seen))
        },
    );

    let mut out = MarkOutput {
        queue: Vec::new(),
        visible: vec![Vec::new(); gbuffers.len()],
    };
    for (&(gi, _), r) in work.iter().zip(results) {
        let (newly, seen) = r?;
        out.queue.extend(newly);
        out.visible[gi].extend(seen);
    }
    out.queue.sort_unstable();
    for v in &mut out.visible {
        v.sort_unstable();
        v.dedup();
    }
    Ok(out)
}

/// Decodes and publishes every queued key, one MCU per work item.
pub fn decode_pass(
    queue: &[CacheKey],
    textures: &TextureSet,
    cache: &BlockCache,
    exec: &Executor,
    variant: HuffmanVariant,
) -> Result<()> {
    let results = exec.map(queue, |&key| -> Result<()> {
        let chain = textures
            .get(key.texture_id())
            .ok_or_else(|| Error::Decode {
                key,
                source: Box::new(Error::Scene(format!(
                    "texture {} is not loaded",
                    key.texture_id()
                ))),
            })?;
        let level = chain.level(key.mip() as usize);
        let block =
            decode_mcu_with(level, key.mcu() as usize, variant).map_err(|e| Error::Decode {
                key,
                source: Box::new(e),
            })?;
        cache.publish(key, block)
    });
    results.into_iter().collect()
}

#[inline]
fn fetch(cache: &BlockCache, key: CacheKey) -> Result<&PixelBlock> {
    cache.lookup(key).ok_or(Error::MissingBlock(key))
}

/// Bilinear sample with taps outside resident MCUs replaced by the closest texel of the
/// sample's own MCU, clamped per axis.
fn sample_bilinear(p: &GBufferPixel, g: &LevelGeometry, cache: &BlockCache) -> Result<[u8; 3]> {
    let (w, h) = (g.width as f64, g.height as f64);
    let (ux, vy) = g.texel_unwrapped(p.u, p.v);
    let (px, py) = g.wrap(ux, vy);
    let primary_key = CacheKey::new(g.mcu_of_texel(px, py), p.texture_id, p.mip);
    let primary = fetch(cache, primary_key)?;
    let sx = p.u * w - 0.5;
    let sy = p.v * h - 0.5;
    let (x0, y0) = (sx.floor(), sy.floor());
    let (fx, fy) = (sx - x0, sy - y0);
    let (x0, y0) = (x0 as i64, y0 as i64);

    let (bx, by) = (
        (px / BLOCK_DIM as u32 * BLOCK_DIM as u32) as i64,
        (py / BLOCK_DIM as u32 * BLOCK_DIM as u32) as i64,
    );
    let (bx_max, by_max) = (
        (bx + BLOCK_DIM as i64 - 1).min(g.width as i64 - 1),
        (by + BLOCK_DIM as i64 - 1).min(g.height as i64 - 1),
    );

    let tap = |dx: i64, dy: i64| -> [u8; 3] {
        // Offsets relative to the primary texel are -1, 0 or +1 on each axis.
        let (ox, oy) = (x0 + dx - ux, y0 + dy - vy);
        let (tx, ty) = g.wrap(px as i64 + ox, py as i64 + oy);
        let key = CacheKey::new(g.mcu_of_texel(tx, ty), p.texture_id, p.mip);
        if key == primary_key {
            return primary.texel(
                (tx % BLOCK_DIM as u32) as usize,
                (ty % BLOCK_DIM as u32) as usize,
            );
        }
        if let Some(b) = cache.lookup(key) {
            return b.texel(
                (tx % BLOCK_DIM as u32) as usize,
                (ty % BLOCK_DIM as u32) as usize,
            );
        }
        let cx = (px as i64 + ox).clamp(bx, bx_max) - bx;
        let cy = (py as i64 + oy).clamp(by, by_max) - by;
        primary.texel(cx as usize, cy as usize)
    };
    let (c00, c10, c01, c11) = (tap(0, 0), tap(1, 0), tap(0, 1), tap(1, 1));
    Ok(std::array::from_fn(|k| {
        let top = (1.0 - fx) * c00[k] as f64 + fx * c10[k] as f64;
        let bottom = (1.0 - fx) * c01[k] as f64 + fx * c11[k] as f64;
        round_half_away((1.0 - fy) * top + fy * bottom).clamp(0, 255) as u8
    }))
}

pub fn resolve_pass(
    gbuffer: &GBuffer,
    cache: &BlockCache,
    textures: &TextureSet,
    filter: Filter,
    background: [u8; 3],
    exec: &Executor,
) -> Result<RgbImage> {
    let w = gbuffer.width as usize;
    let bands = (gbuffer.height as usize).div_ceil(BAND_ROWS);
    let rows = exec.map_range(bands, |band| -> Result<Vec<u8>> {
        let start = band * BAND_ROWS * w;
        let end = ((band + 1) * BAND_ROWS * w).min(gbuffer.pixels.len());
        let mut out = Vec::with_capacity((end - start) * 3);
        let mut cursor = GeometryCursor::new(textures);
        for p in &gbuffer.pixels[start..end] {
            let rgb = if !p.valid {
                background
            } else {
                let g = cursor.get(p.texture_id, p.mip)?;
                match filter {
                    Filter::Nearest => {
                        let (x, y, mcu) = g.locate(p.u, p.v);
                        let block = fetch(cache, CacheKey::new(mcu, p.texture_id, p.mip))?;
                        block.texel(
                            (x % BLOCK_DIM as u32) as usize,
                            (y % BLOCK_DIM as u32) as usize,
                        )
                    }
                    Filter::Bilinear => sample_bilinear(p, &g, cache)?,
                }
            };
            out.extend_from_slice(&rgb);
        }
        Ok(out)
    });
    let mut data = Vec::with_capacity(w * gbuffer.height as usize * 3);
    for r in rows {
        data.extend(r?);
    }
    RgbImage::from_raw(gbuffer.width, gbuffer.height, data)
}
