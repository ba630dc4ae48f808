//! Software rasterization of a scene into a G-buffer of (uv, texture id, mip level).
//!
//! Triangles are clipped against the near plane in view space, back faces are culled,
//! and coverage follows the top-left rule at pixel centers. Texture coordinates are
//! interpolated perspective-correctly. The mip level comes from the analytic screen
//! derivatives of the triangle's projective uv mapping, so it does not depend on
//! rasterization order. Row bands are rasterized independently with per-band depth
//! buffers; within a band triangles are visited in scene order and the depth test is
//! strict, so the result is identical for any worker count.

use crate::error::{Error, Result};
use crate::par::Executor;
use crate::render::camera::Camera;
use crate::render::math::Vec3;
use crate::render::scene::{Scene, Triangle};
use crate::transcode::MIP_LEVELS;

pub const BAND_ROWS: usize = 16;

/// Absorbs rounding when the footprint is an exact power of two.
const LOG2_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GBufferPixel {
    pub u: f64,
    pub v: f64,
    pub texture_id: u16,
    pub mip: u8,
    pub valid: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GBuffer {
    pub width: u32,
    pub height: u32,
    pub pixels: Vec<GBufferPixel>,
}

impl GBuffer {
    pub fn new(width: u32, height: u32) -> Self {
        Self {
            width,
            height,
            pixels: vec![GBufferPixel::default(); width as usize * height as usize],
        }
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> &GBufferPixel {
        &self.pixels[y as usize * self.width as usize + x as usize]
    }

    pub fn valid_count(&self) -> usize {
        self.pixels.iter().filter(|p| p.valid).count()
    }

    /// CRC-32 over the readable content; invalid pixels contribute a single zero byte.
    pub fn content_hash(&self) -> u32 {
        let mut h = crc32fast::Hasher::new();
        h.update(&self.width.to_le_bytes());
        h.update(&self.height.to_le_bytes());
        for p in &self.pixels {
            if p.valid {
                h.update(&[1]);
                h.update(&p.u.to_le_bytes());
                h.update(&p.v.to_le_bytes());
                h.update(&p.texture_id.to_le_bytes());
                h.update(&[p.mip]);
            } else {
                h.update(&[0]);
            }
        }
        h.finalize()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RasterOptions {
    /// Store mip level 0 for every pixel.
    pub force_base_level: bool,
}

#[derive(Debug, Clone, Copy)]
struct ScreenVertex {
    x: f64,
    y: f64,
    z: f64,
    q: f64,
    uq: f64,
    vq: f64,
}

/// Screen-space plane gradient of one attribute.
#[derive(Debug, Clone, Copy)]
struct Gradient {
    dx: f64,
    dy: f64,
}

#[derive(Debug, Clone)]
struct SetupTriangle {
    v: [ScreenVertex; 3],
    area: f64,
    top_left: [bool; 3],
    min_x: f64,
    max_x: f64,
    min_y: f64,
    max_y: f64,
    grad_q: Gradient,
    grad_uq: Gradient,
    grad_vq: Gradient,
    texture_id: u16,
    scale_u: f64,
    scale_v: f64,
    max_level: u8,
}

#[derive(Debug, Clone, Copy)]
struct ClipVertex {
    p: Vec3,
    u: f64,
    v: f64,
}

#[inline]
fn edge(a: &ScreenVertex, b: &ScreenVertex, px: f64, py: f64) -> f64 {
    (b.x - a.x) * (py - a.y) - (b.y - a.y) * (px - a.x)
}

/// With a positive-area winding the interior lies to the right of each edge in y-down
/// screen space, so top edges run in +x and left edges run in -y.
fn is_top_left(a: &ScreenVertex, b: &ScreenVertex) -> bool {
    let (dx, dy) = (b.x - a.x, b.y - a.y);
    (dy == 0.0 && dx > 0.0) || dy < 0.0
}

fn gradient(v: &[ScreenVertex; 3], a: [f64; 3]) -> Gradient {
    let (d1x, d1y) = (v[1].x - v[0].x, v[1].y - v[0].y);
    let (d2x, d2y) = (v[2].x - v[0].x, v[2].y - v[0].y);
    let det = d1x * d2y - d2x * d1y;
    let (da1, da2) = (a[1] - a[0], a[2] - a[0]);
    Gradient {
        dx: (da1 * d2y - da2 * d1y) / det,
        dy: (da2 * d1x - da1 * d2x) / det,
    }
}

/// Sutherland-Hodgman against the view-space plane z = -near.
fn clip_near(poly: &[ClipVertex], near: f64) -> Vec<ClipVertex> {
    let inside = |c: &ClipVertex| c.p.z <= -near;
    let mut out = Vec::with_capacity(poly.len() + 1);
    for i in 0..poly.len() {
        let a = poly[i];
        let b = poly[(i + 1) % poly.len()];
        match (inside(&a), inside(&b)) {
            (true, true) => out.push(b),
            (true, false) | (false, true) => {
                let t = (-near - a.p.z) / (b.p.z - a.p.z);
                out.push(ClipVertex {
                    p: a.p.lerp(b.p, t),
                    u: a.u + (b.u - a.u) * t,
                    v: a.v + (b.v - a.v) * t,
                });
                if inside(&b) {
                    out.push(b);
                }
            }
            (false, false) => {}
        }
    }
    out
}

struct TextureInfo {
    width: f64,
    height: f64,
    max_level: u8,
}

fn setup_triangle(
    tri: &Triangle,
    texture_id: u16,
    info: &TextureInfo,
    camera: &Camera,
    view: &crate::render::math::Mat4,
    proj: &crate::render::math::Mat4,
) -> Vec<SetupTriangle> {
    // Integer uv shifts are invisible under wrap addressing; removing them per triangle
    // keeps the interpolated coordinates small and translation invariant.
    let fu = tri
        .uvs
        .iter()
        .map(|t| t[0] as f64)
        .fold(f64::INFINITY, f64::min)
        .floor();
    let fv = tri
        .uvs
        .iter()
        .map(|t| t[1] as f64)
        .fold(f64::INFINITY, f64::min)
        .floor();
    let poly: Vec<ClipVertex> = (0..3)
        .map(|i| ClipVertex {
            p: view.transform_point(tri.positions[i]),
            u: tri.uvs[i][0] as f64 - fu,
            v: tri.uvs[i][1] as f64 - fv,
        })
        .collect();
    let poly = if poly.iter().all(|c| c.p.z <= -camera.near) {
        poly
    } else {
        clip_near(&poly, camera.near)
    };
    if poly.len() < 3 {
        return Vec::new();
    }
    let (w, h) = (camera.width as f64, camera.height as f64);
    let screen: Vec<ScreenVertex> = poly
        .iter()
        .map(|c| {
            let clip = proj.mul_vec4([c.p.x, c.p.y, c.p.z, 1.0]);
            let q = 1.0 / clip[3];
            ScreenVertex {
                x: (clip[0] * q + 1.0) * 0.5 * w,
                y: (1.0 - clip[1] * q) * 0.5 * h,
                z: clip[2] * q,
                q,
                uq: c.u * q,
                vq: c.v * q,
            }
        })
        .collect();

    let mut out = Vec::new();
    for i in 1..screen.len() - 1 {
        let mut v = [screen[0], screen[i], screen[i + 1]];
        let area = edge(&v[0], &v[1], v[2].x, v[2].y);
        // Counter-clockwise front faces have negative area in y-down screen space.
        if !(area < 0.0) {
            continue;
        }
        v.swap(1, 2);
        let area = -area;
        let top_left = [
            is_top_left(&v[1], &v[2]),
            is_top_left(&v[2], &v[0]),
            is_top_left(&v[0], &v[1]),
        ];
        let (min_x, max_x) = (
            v[0].x.min(v[1].x).min(v[2].x),
            v[0].x.max(v[1].x).max(v[2].x),
        );
        let (min_y, max_y) = (
            v[0].y.min(v[1].y).min(v[2].y),
            v[0].y.max(v[1].y).max(v[2].y),
        );
        out.push(SetupTriangle {
            v,
            area,
            top_left,
            min_x,
            max_x,
            min_y,
            max_y,
            grad_q: gradient(&v, [v[0].q, v[1].q, v[2].q]),
            grad_uq: gradient(&v, [v[0].uq, v[1].uq, v[2].uq]),
            grad_vq: gradient(&v, [v[0].vq, v[1].vq, v[2].vq]),
            texture_id,
            scale_u: info.width,
            scale_v: info.height,
            max_level: info.max_level,
        });
    }
    out
}

/// Level for a screen footprint measured in level-0 texels per pixel.
pub fn select_mip(footprint: f64, max_level: u8) -> u8 {
    if !(footprint > 1.0) || !footprint.is_finite() {
        return 0;
    }
    ((footprint.log2() + LOG2_EPS).floor() as i64).clamp(0, max_level as i64) as u8
}

fn rasterize_band(
    tris: &[SetupTriangle],
    width: u32,
    y0: usize,
    rows: &mut [GBufferPixel],
    opts: RasterOptions,
) {
    let w = width as usize;
    let n_rows = rows.len() / w.max(1);
    let mut depth = vec![f64::INFINITY; rows.len()];
    let (band_top, band_bottom) = (y0 as f64, (y0 + n_rows) as f64);
    for t in tris {
        if t.max_y < band_top || t.min_y > band_bottom || t.max_x < 0.0 || t.min_x > width as f64 {
            continue;
        }
        let py0 = (t.min_y.floor().max(band_top) as usize).max(y0);
        let py1 = (t.max_y.ceil().min(band_bottom) as usize).min(y0 + n_rows);
        let px0 = t.min_x.floor().max(0.0) as usize;
        let px1 = (t.max_x.ceil().min(width as f64) as usize).min(w);
        let [a, b, c] = &t.v;
        for py in py0..py1 {
            let cy = py as f64 + 0.5;
            for px in px0..px1 {
                let cx = px as f64 + 0.5;
                let e = [edge(b, c, cx, cy), edge(c, a, cx, cy), edge(a, b, cx, cy)];
                if !(0..3).all(|i| e[i] > 0.0 || (e[i] == 0.0 && t.top_left[i])) {
                    continue;
                }
                let l = [e[0] / t.area, e[1] / t.area, e[2] / t.area];
                let z = l[0] * a.z + l[1] * b.z + l[2] * c.z;
                if !(-1.0..=1.0).contains(&z) {
                    continue;
                }
                let idx = (py - y0) * w + px;
                if !(z < depth[idx]) {
                    continue;
                }
                depth[idx] = z;
                let q = l[0] * a.q + l[1] * b.q + l[2] * c.q;
                let u = (l[0] * a.uq + l[1] * b.uq + l[2] * c.uq) / q;
                let v = (l[0] * a.vq + l[1] * b.vq + l[2] * c.vq) / q;
                let mip = if opts.force_base_level {
                    0
                } else {
                    let dudx = (t.grad_uq.dx - u * t.grad_q.dx) / q * t.scale_u;
                    let dvdx = (t.grad_vq.dx - v * t.grad_q.dx) / q * t.scale_v;
                    let dudy = (t.grad_uq.dy - u * t.grad_q.dy) / q * t.scale_u;
                    let dvdy = (t.grad_vq.dy - v * t.grad_q.dy) / q * t.scale_v;
                    select_mip(dudx.hypot(dvdx).max(dudy.hypot(dvdy)), t.max_level)
                };
                rows[idx] = GBufferPixel {
                    u,
                    v,
                    texture_id: t.texture_id,
                    mip,
                    valid: true,
                };
            }
        }
    }
}

pub fn rasterize_gbuffer(
    scene: &Scene,
    camera: &Camera,
    exec: &Executor,
    opts: RasterOptions,
) -> Result<GBuffer> {
    camera.validate()?;
    let view = camera.view_matrix();
    let proj = camera.projection_matrix();

    let mut work: Vec<(&Triangle, u16, TextureInfo)> = Vec::with_capacity(scene.triangle_count());
    for mesh in &scene.meshes {
        let chain = scene
            .textures
            .get(mesh.texture_id)
            .ok_or_else(|| Error::Scene(format!("texture {} is not loaded", mesh.texture_id)))?;
        let (bw, bh) = chain.base_dims();
        let max_level = (chain.levels.len().min(MIP_LEVELS) - 1) as u8;
        for tri in &mesh.triangles {
            work.push((
                tri,
                mesh.texture_id,
                TextureInfo {
                    width: bw as f64,
                    height: bh as f64,
                    max_level,
                },
            ));
        }
    }
    let tris: Vec<SetupTriangle> = exec
        .map(&work, |(tri, id, info)| {
            setup_triangle(tri, *id, info, camera, &view, &proj)
        })
        .into_iter()
        .flatten()
        .collect();

    let mut gb = GBuffer::new(camera.width, camera.height);
    let band_len = BAND_ROWS * camera.width as usize;
    exec.for_each_chunk_mut(&mut gb.pixels, band_len, |band, rows| {
        rasterize_band(&tris, camera.width, band * BAND_ROWS, rows, opts)
    });
    Ok(gb)
}
