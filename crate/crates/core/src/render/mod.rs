//! Deferred texture-space rendering over a shared block cache.
//!
//! A frame runs five passes separated by barriers: rasterize G-buffers, mark the MCUs
//! they sample (reserving missing ones), decode the reserved MCUs, resolve texel
//! colors, and evict every cached block that no pixel touched.

pub mod camera;
pub mod demo;
pub mod math;
pub mod passes;
pub mod raster;
pub mod scene;

use std::time::Instant;

use serde::{Deserialize, Serialize};

pub use camera::{Camera, DEFAULT_VIEWPORT};
pub use math::Vec3;
pub use passes::{
    decode_pass, mark_pass, pixel_key, resolve_pass, Filter, LevelGeometry, MarkOutput,
};
pub use raster::{rasterize_gbuffer, GBuffer, GBufferPixel, RasterOptions};
pub use scene::{Mesh, Scene, TextureSet, Triangle};

use crate::cache::{BlockCache, CacheKey, DEFAULT_CAPACITY};
use crate::error::Result;
use crate::image::RgbImage;
use crate::mcu::HuffmanVariant;
use crate::par::Executor;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RenderConfig {
    pub filter: Filter,
    pub no_mip: bool,
    pub variant: HuffmanVariant,
    pub background: [u8; 3],
    pub cache_capacity: usize,
    /// 0 uses every available core.
    pub workers: usize,
}

impl Default for RenderConfig {
    fn default() -> Self {
        Self {
            filter: Filter::Bilinear,
            no_mip: false,
            variant: HuffmanVariant::Sequential,
            background: [0, 0, 0],
            cache_capacity: DEFAULT_CAPACITY,
            workers: 0,
        }
    }
}

/// Wall-clock milliseconds per pass.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PassTimings {
    pub geometry: f64,
    pub mark: f64,
    pub decode: f64,
    pub resolve: f64,
    pub update: f64,
}

impl PassTimings {
    pub fn total(&self) -> f64 {
        self.geometry + self.mark + self.decode + self.resolve + self.update
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct FrameStats {
    pub mcus_decoded: usize,
    /// Visible keys that were already resident.
    pub mcus_reused: usize,
    pub pixels_resolved: usize,
    pub visible_keys: usize,
    pub evicted: usize,
    pub timings: PassTimings,
}

/// Visible key set overlap between two eyes.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct SharedStats {
    pub left: usize,
    pub right: usize,
    pub shared: usize,
    pub union: usize,
    /// |L and R| / |L or R|.
    pub shared_of_union: f64,
    /// |L and R| / |R|.
    pub shared_of_right: f64,
}

impl SharedStats {
    pub fn from_sets(left: &[CacheKey], right: &[CacheKey]) -> Self {
        let (mut i, mut j, mut shared) = (0, 0, 0);
        while i < left.len() && j < right.len() {
            match left[i].cmp(&right[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    shared += 1;
                    i += 1;
                    j += 1;
                }
            }
        }
        let union = left.len() + right.len() - shared;
        let ratio = |n: usize, d: usize| if d == 0 { 1.0 } else { n as f64 / d as f64 };
        Self {
            left: left.len(),
            right: right.len(),
            shared,
            union,
            shared_of_union: ratio(shared, union),
            shared_of_right: ratio(shared, right.len()),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Frame {
    /// One image per view, in the order the cameras were given.
    pub images: Vec<RgbImage>,
    pub stats: FrameStats,
    /// Keys decoded this frame, sorted.
    pub decoded: Vec<CacheKey>,
    /// Sorted visible keys per view.
    pub visible: Vec<Vec<CacheKey>>,
}

#[derive(Debug)]
pub struct Renderer {
    config: RenderConfig,
    exec: Executor,
    cache: BlockCache,
}

fn millis_since(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

impl Renderer {
    pub fn new(config: RenderConfig) -> Self {
        Self {
            exec: Executor::new(config.workers),
            cache: BlockCache::new(config.cache_capacity),
            config,
        }
    }

    pub fn config(&self) -> &RenderConfig {
        &self.config
    }

    pub fn executor(&self) -> &Executor {
        &self.exec
    }

    pub fn cache(&self) -> &BlockCache {
        &self.cache
    }

    pub fn reset_cache(&mut self) {
        self.cache.clear();
    }

    pub fn raster_options(&self) -> RasterOptions {
        RasterOptions {
            force_base_level: self.config.no_mip,
        }
    }

    pub fn rasterize(&self, scene: &Scene, camera: &Camera) -> Result<GBuffer> {
        rasterize_gbuffer(scene, camera, &self.exec, self.raster_options())
    }

    pub fn render_frame(&mut self, scene: &Scene, camera: &Camera) -> Result<Frame> {
        self.render_views(scene, std::slice::from_ref(camera))
    }

    /// Renders both eyes as one frame: one mark and one decode over both G-buffers.
    pub fn render_stereo(
        &mut self,
        scene: &Scene,
        left: &Camera,
        right: &Camera,
    ) -> Result<(Frame, SharedStats)> {
        let frame = self.render_views(scene, &[*left, *right])?;
        let shared = SharedStats::from_sets(&frame.visible[0], &frame.visible[1]);
        Ok((frame, shared))
    }

    pub fn render_views(&mut self, scene: &Scene, cameras: &[Camera]) -> Result<Frame> {
        let t = Instant::now();
        let gbuffers = cameras
            .iter()
            .map(|c| self.rasterize(scene, c))
            .collect::<Result<Vec<_>>>()?;
        let geometry = millis_since(t);
        let mut frame =
            self.render_gbuffers(&gbuffers.iter().collect::<Vec<_>>(), &scene.textures)?;
        frame.stats.timings.geometry = geometry;
        Ok(frame)
    }

    /// Runs mark, decode, resolve and update over prepared G-buffers. On a mark or
    /// decode failure the cache is cleared so the next frame starts consistent.
    pub fn render_gbuffers(
        &mut self,
        gbuffers: &[&GBuffer],
        textures: &TextureSet,
    ) -> Result<Frame> {
        let mut timings = PassTimings::default();

        let t = Instant::now();
        let marked = mark_pass(gbuffers, &self.cache, textures, &self.exec);
        timings.mark = millis_since(t);
        let marked = match marked {
            Ok(m) => m,
            Err(e) => {
                self.cache.clear();
                return Err(e);
            }
        };

        let t = Instant::now();
        if let Err(e) = decode_pass(
            &marked.queue,
            textures,
            &self.cache,
            &self.exec,
            self.config.variant,
        ) {
            self.cache.clear();
            return Err(e);
        }
        timings.decode = millis_since(t);

        let t = Instant::now();
        let images = gbuffers
            .iter()
            .map(|gb| {
                resolve_pass(
                    gb,
                    &self.cache,
                    textures,
                    self.config.filter,
                    self.config.background,
                    &self.exec,
                )
            })
            .collect::<Result<Vec<_>>>();
        timings.resolve = millis_since(t);

        let t = Instant::now();
        let evicted = self.cache.end_frame_evict()?;
        timings.update = millis_since(t);
        let images = images?;

        let union = match marked.visible.as_slice() {
            [single] => single.len(),
            many => {
                let mut all: Vec<CacheKey> = many.iter().flatten().copied().collect();
                all.sort_unstable();
                all.dedup();
                all.len()
            }
        };
        let stats = FrameStats {
            mcus_decoded: marked.queue.len(),
            mcus_reused: union - marked.queue.len(),
            pixels_resolved: gbuffers.iter().map(|g| g.valid_count()).sum(),
            visible_keys: union,
            evicted,
            timings,
        };
        Ok(Frame {
            images,
            stats,
            decoded: marked.queue,
            visible: marked.visible,
        })
    }
}
