//! Procedurally generated test scene: a 24 x 10 x 8 m hall with a stone floor, brick
//! walls, tapestry end walls, a plastered ceiling and two rows of marble columns.
//! Floor and walls are split into panels that each carry their own texture; the
//! ceiling repeats a single one. Textures are built from seeded, tileable value noise,
//! so the scene is reproducible bit for bit.

use std::collections::{BTreeMap, HashMap};
use std::f64::consts::TAU;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::image::RgbImage;
use crate::par::Executor;
use crate::render::camera::Camera;
use crate::render::math::Vec3;
use crate::render::scene::{write_obj, Manifest, Mesh, Scene, TextureSet, Triangle};
use crate::transcode::{build_mip_chain, serialize_chain};

/// Pattern families; each panel picks one and a per-panel seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Material {
    Stone,
    Brick,
    Plaster,
    Marble,
    Tapestry,
}

const HALF_X: f64 = 12.0;
const HALF_Z: f64 = 5.0;
const HEIGHT: f64 = 8.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DemoConfig {
    /// Edge length of every level-0 texture; a multiple of 16.
    pub texture_size: u32,
    pub quality: u8,
    pub seed: u64,
    /// Walls, floor and columns get one texture per panel of at most this many meters.
    pub panel_size: f64,
}

impl Default for DemoConfig {
    fn default() -> Self {
        Self {
            texture_size: 1024,
            quality: 80,
            seed: 0x5EED,
            panel_size: 4.0,
        }
    }
}

/// Eye height standing near the middle of the hall, looking down -z.
pub fn demo_camera() -> Camera {
    Camera {
        position: Vec3::new(0.5, 1.7, 0.5),
        ..Camera::default()
    }
}

/// Tileable value noise on a `period x period` lattice.
struct ValueNoise {
    period: usize,
    lattice: Vec<f64>,
}

impl ValueNoise {
    fn new(period: usize, rng: &mut ChaCha8Rng) -> Self {
        Self {
            period,
            lattice: (0..period * period).map(|_| rng.gen::<f64>()).collect(),
        }
    }

    /// `x`, `y` in texture units; one unit spans the whole period.
    fn sample(&self, x: f64, y: f64) -> f64 {
        let p = self.period;
        let (fx, fy) = (x * p as f64, y * p as f64);
        let (ix, iy) = (fx.floor(), fy.floor());
        let smooth = |t: f64| t * t * (3.0 - 2.0 * t);
        let (tx, ty) = (smooth(fx - ix), smooth(fy - iy));
        let (x0, y0) = (
            (ix as i64).rem_euclid(p as i64) as usize,
            (iy as i64).rem_euclid(p as i64) as usize,
        );
        let (x1, y1) = ((x0 + 1) % p, (y0 + 1) % p);
        let at = |x: usize, y: usize| self.lattice[y * p + x];
        let top = at(x0, y0) + (at(x1, y0) - at(x0, y0)) * tx;
        let bottom = at(x0, y1) + (at(x1, y1) - at(x0, y1)) * tx;
        top + (bottom - top) * ty
    }
}

/// Fractal sum of octaves with doubling lattice periods, normalized to [0, 1].
struct Fbm {
    octaves: Vec<ValueNoise>,
}

impl Fbm {
    fn new(base_period: usize, octaves: usize, rng: &mut ChaCha8Rng) -> Self {
        Self {
            octaves: (0..octaves)
                .map(|o| ValueNoise::new(base_period << o, rng))
                .collect(),
        }
    }

    fn sample(&self, x: f64, y: f64) -> f64 {
        let (mut sum, mut amp, mut norm) = (0.0, 1.0, 0.0);
        for o in &self.octaves {
            sum += o.sample(x, y) * amp;
            norm += amp;
            amp *= 0.5;
        }
        sum / norm
    }
}

fn to_rgb(c: [f64; 3]) -> [u8; 3] {
    c.map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8)
}

fn mix(a: [f64; 3], b: [f64; 3], t: f64) -> [f64; 3] {
    std::array::from_fn(|k| a[k] + (b[k] - a[k]) * t)
}

fn shade(c: [f64; 3], s: f64) -> [f64; 3] {
    c.map(|v| v * s)
}

/// Distance in cells to the nearest grid line of a `cells`-periodic grid.
fn grid_distance(t: f64, cells: f64) -> f64 {
    let f = (t * cells).fract();
    f.min(1.0 - f)
}

fn generate_texture(material: Material, size: u32, seed: u64) -> RgbImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let fine = Fbm::new(16, 5, &mut rng);
    let coarse = Fbm::new(4, 3, &mut rng);
    let cell_tint: Vec<f64> = (0..64).map(|_| rng.gen_range(0.8..1.1)).collect();
    let hue: f64 = rng.gen_range(0.0..1.0);
    let n = size as f64;
    RgbImage::from_fn(size, size, |x, y| {
        let (u, v) = ((x as f64 + 0.5) / n, (y as f64 + 0.5) / n);
        let grain = fine.sample(u, v);
        let cloud = coarse.sample(u, v);
        let rgb = match material {
            Material::Stone => {
                let cells = 4.0;
                let cell = (u * cells) as usize + 4 * (v * cells) as usize;
                let light = mix([0.72, 0.68, 0.60], [0.62, 0.66, 0.70], hue);
                let stone = shade(mix([0.55, 0.52, 0.47], light, cloud), cell_tint[cell % 64]);
                let stone = shade(stone, 0.8 + 0.35 * grain);
                let grout = grid_distance(u, cells).min(grid_distance(v, cells));
                mix([0.25, 0.23, 0.21], stone, (grout / 0.03).min(1.0))
            }
            Material::Brick => {
                let rows = 16.0;
                let row = (v * rows).floor();
                let shift = if row as i64 % 2 == 0 { 0.0 } else { 0.5 / 8.0 };
                let bu = (u + shift).rem_euclid(1.0);
                let brick = (bu * 8.0) as usize + 8 * row as usize;
                let dark = mix([0.55, 0.24, 0.16], [0.45, 0.30, 0.22], hue);
                let clay = shade(mix(dark, [0.70, 0.38, 0.25], grain), cell_tint[brick % 64]);
                let mortar = grid_distance(bu, 8.0).min(grid_distance(v, rows) * 0.5);
                mix(
                    [0.78, 0.76, 0.70],
                    shade(clay, 0.85 + 0.3 * cloud),
                    (mortar / 0.04).min(1.0),
                )
            }
            Material::Plaster => shade(
                mix([0.86, 0.84, 0.78], [0.95, 0.93, 0.88], cloud),
                0.9 + 0.12 * grain,
            ),
            Material::Marble => {
                let turbulence = 6.0 * cloud + 2.0 * grain;
                let vein = ((u * 2.0 + v) * TAU * 2.0 + turbulence + hue * TAU)
                    .sin()
                    .abs()
                    .powf(0.2);
                mix([0.45, 0.45, 0.50], [0.93, 0.92, 0.90], vein)
            }
            Material::Tapestry => {
                let weave = ((u * 96.0 * TAU).sin() * (v * 96.0 * TAU).sin()).abs();
                let motif = ((u * TAU * 3.0).sin() + (v * TAU * 2.0).cos() + 2.0 * cloud) / 4.0;
                let warm = mix([0.85, 0.65, 0.20], [0.30, 0.55, 0.75], hue);
                let base = mix([0.45, 0.08, 0.12], warm, motif.clamp(0.0, 1.0));
                shade(base, 0.75 + 0.2 * weave + 0.1 * grain)
            }
        };
        to_rgb(rgb)
    })
}

/// Texture coordinates are quantized to 1/256 so they survive OBJ text and the v flip
/// exactly.
fn quantize_uv(t: f64) -> f32 {
    ((t * 256.0).round() / 256.0) as f32
}

/// Quad `o, o+a, o+a+b, o+b` mapped to the uv rectangle `uv0..uv1`. Winding is chosen
/// so the front side faces along `facing`; flipping reverses `a`, mirroring u.
fn quad(
    tris: &mut Vec<Triangle>,
    o: Vec3,
    a: Vec3,
    b: Vec3,
    facing: Vec3,
    uv0: [f64; 2],
    uv1: [f64; 2],
) {
    let (o, a, u0, u1) = if a.cross(b).dot(facing) >= 0.0 {
        (o, a, uv0[0], uv1[0])
    } else {
        (o + a, -a, uv1[0], uv0[0])
    };
    let pos = [o, o + a, o + a + b, o + b];
    let uvs = [[u0, uv0[1]], [u1, uv0[1]], [u1, uv1[1]], [u0, uv1[1]]].map(|t| t.map(quantize_uv));
    tris.push(Triangle {
        positions: [pos[0], pos[1], pos[2]],
        uvs: [uvs[0], uvs[1], uvs[2]],
    });
    tris.push(Triangle {
        positions: [pos[0], pos[2], pos[3]],
        uvs: [uvs[0], uvs[2], uvs[3]],
    });
}

/// Geometry plus the material of every texture id, before any texture is generated.
#[derive(Debug, Clone)]
pub struct DemoLayout {
    pub meshes: Vec<Mesh>,
    pub materials: Vec<(u16, Material)>,
}

impl DemoLayout {
    fn add(&mut self, material: Material, triangles: Vec<Triangle>) {
        let id = self.materials.len() as u16 + 1;
        self.materials.push((id, material));
        self.meshes.push(Mesh {
            texture_id: id,
            triangles,
        });
    }

    /// Splits the rectangle into panels of at most `panel` meters, one texture each.
    fn panels(&mut self, material: Material, o: Vec3, a: Vec3, b: Vec3, facing: Vec3, panel: f64) {
        let na = (a.length() / panel).ceil().max(1.0) as usize;
        let nb = (b.length() / panel).ceil().max(1.0) as usize;
        let (da, db) = (a * (1.0 / na as f64), b * (1.0 / nb as f64));
        for j in 0..nb {
            for i in 0..na {
                let mut tris = Vec::new();
                quad(
                    &mut tris,
                    o + da * i as f64 + db * j as f64,
                    da,
                    db,
                    facing,
                    [0.0, 0.0],
                    [1.0, 1.0],
                );
                self.add(material, tris);
            }
        }
    }
}

pub fn demo_layout(config: &DemoConfig) -> DemoLayout {
    let v = Vec3::new;
    let (x, z, h) = (HALF_X, HALF_Z, HEIGHT);
    let p = config.panel_size;
    let mut layout = DemoLayout {
        meshes: Vec::new(),
        materials: Vec::new(),
    };

    layout.panels(
        Material::Stone,
        v(-x, 0.0, z),
        v(2.0 * x, 0.0, 0.0),
        v(0.0, 0.0, -2.0 * z),
        v(0.0, 1.0, 0.0),
        p,
    );
    for (zw, facing) in [(-z, 1.0), (z, -1.0)] {
        layout.panels(
            Material::Brick,
            v(-x, h, zw),
            v(2.0 * x, 0.0, 0.0),
            v(0.0, -h, 0.0),
            v(0.0, 0.0, facing),
            p,
        );
    }
    for (xw, facing) in [(-x, 1.0), (x, -1.0)] {
        layout.panels(
            Material::Tapestry,
            v(xw, h, -z),
            v(0.0, 0.0, 2.0 * z),
            v(0.0, -h, 0.0),
            v(facing, 0.0, 0.0),
            p,
        );
    }

    // The ceiling repeats one texture every 4 m.
    let mut ceiling = Vec::new();
    let repeats = [2.0 * x / 4.0, 2.0 * z / 4.0];
    quad(
        &mut ceiling,
        v(-x, h, -z),
        v(2.0 * x, 0.0, 0.0),
        v(0.0, 0.0, 2.0 * z),
        v(0.0, -1.0, 0.0),
        [0.0, 0.0],
        repeats,
    );
    layout.add(Material::Plaster, ceiling);

    // Columns wrap one texture around their four faces.
    let r = 0.4;
    for cx in [-8.0, -4.0, 4.0, 8.0] {
        for cz in [-3.0, 3.0] {
            let top = v(cx, h, cz);
            let faces = [
                (v(-r, 0.0, r), v(2.0 * r, 0.0, 0.0), v(0.0, 0.0, 1.0)),
                (v(r, 0.0, r), v(0.0, 0.0, -2.0 * r), v(1.0, 0.0, 0.0)),
                (v(r, 0.0, -r), v(-2.0 * r, 0.0, 0.0), v(0.0, 0.0, -1.0)),
                (v(-r, 0.0, -r), v(0.0, 0.0, 2.0 * r), v(-1.0, 0.0, 0.0)),
            ];
            let mut tris = Vec::new();
            for (k, (off, a, n)) in faces.into_iter().enumerate() {
                quad(
                    &mut tris,
                    top + off,
                    a,
                    v(0.0, -h, 0.0),
                    n,
                    [k as f64 * 0.25, 0.0],
                    [(k + 1) as f64 * 0.25, 1.0],
                );
            }
            layout.add(Material::Marble, tris);
        }
    }
    layout
}

pub fn demo_texture(id: u16, material: Material, config: &DemoConfig) -> RgbImage {
    generate_texture(
        material,
        config.texture_size,
        config.seed ^ (id as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15),
    )
}

pub fn build_demo_scene(config: &DemoConfig) -> Result<Scene> {
    if config.texture_size == 0 || !config.texture_size.is_multiple_of(16) {
        return Err(Error::InvalidArgument(format!(
            "demo texture size {} must be a positive multiple of 16",
            config.texture_size
        )));
    }
    if !(config.panel_size > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "panel size {} must be positive",
            config.panel_size
        )));
    }
    let layout = demo_layout(config);
    let exec = Executor::default();
    let chains = exec.map(&layout.materials, |&(id, material)| {
        build_mip_chain(&demo_texture(id, material, config), config.quality, id)
    });
    let mut textures = TextureSet::new();
    for chain in chains {
        textures.insert(chain?);
    }
    let scene = Scene {
        meshes: layout.meshes,
        textures,
        camera: Some(demo_camera()),
    };
    scene.validate()?;
    Ok(scene)
}

/// Writes `hall.obj`, one `.ratexm` per texture and `scene.json` into `dir`; returns
/// the manifest path.
pub fn write_demo(dir: impl AsRef<Path>, scene: &Scene) -> Result<PathBuf> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    let (obj, materials) = write_obj(&scene.meshes);
    std::fs::write(dir.join("hall.obj"), obj)?;
    let mut textures = BTreeMap::new();
    for id in scene.textures.ids() {
        let name = format!("texture{id}.ratexm");
        let chain = scene.textures.get(id).expect("id came from the set");
        std::fs::write(dir.join(&name), serialize_chain(chain))?;
        textures.insert(id.to_string(), PathBuf::from(name));
    }
    let manifest = Manifest {
        mesh: PathBuf::from("hall.obj"),
        materials: materials.into_iter().collect::<HashMap<_, _>>(),
        textures,
        camera: scene.camera,
    };
    let path = dir.join("scene.json");
    std::fs::write(&path, serde_json::to_vec_pretty(&manifest)?)?;
    Ok(path)
}
