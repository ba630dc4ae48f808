//! Scene description: textured triangle meshes plus the mip chains they reference.
//!
//! On disk a scene is a JSON manifest naming a Wavefront OBJ mesh, a material name to
//! texture id map (matched against `usemtl`), and a texture id to `.ratexm` path map.
//! Relative paths resolve against the manifest's directory.

use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::render::camera::Camera;
use crate::render::math::Vec3;
use crate::transcode::{deserialize_chain, MipChain, MAX_TEXTURE_ID};

/// Texture coordinates follow image convention: v = 0 is the top row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Triangle {
    pub positions: [Vec3; 3],
    pub uvs: [[f32; 2]; 3],
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    pub texture_id: u16,
    pub triangles: Vec<Triangle>,
}

#[derive(Debug, Clone, Default)]
pub struct TextureSet {
    chains: BTreeMap<u16, MipChain>,
}

impl TextureSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, chain: MipChain) {
        self.chains.insert(chain.texture_id(), chain);
    }

    pub fn get(&self, id: u16) -> Option<&MipChain> {
        self.chains.get(&id)
    }

    pub fn ids(&self) -> impl Iterator<Item = u16> + '_ {
        self.chains.keys().copied()
    }

    pub fn len(&self) -> usize {
        self.chains.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chains.is_empty()
    }
}

#[derive(Debug, Clone, Default)]
pub struct Scene {
    pub meshes: Vec<Mesh>,
    pub textures: TextureSet,
    /// Camera suggested by the manifest, if any.
    pub camera: Option<Camera>,
}

impl Scene {
    pub fn validate(&self) -> Result<()> {
        for mesh in &self.meshes {
            if self.textures.get(mesh.texture_id).is_none() {
                return Err(Error::Scene(format!(
                    "mesh references texture {} which is not loaded",
                    mesh.texture_id
                )));
            }
        }
        Ok(())
    }

    pub fn triangle_count(&self) -> usize {
        self.meshes.iter().map(|m| m.triangles.len()).sum()
    }

    pub fn load(manifest_path: impl AsRef<Path>) -> Result<Self> {
        let manifest_path = manifest_path.as_ref();
        let manifest: Manifest = serde_json::from_slice(&std::fs::read(manifest_path)?)?;
        let base = manifest_path.parent().unwrap_or(Path::new("."));
        let resolve = |p: &Path| {
            if p.is_absolute() {
                p.to_path_buf()
            } else {
                base.join(p)
            }
        };

        let obj_source = std::fs::read_to_string(resolve(&manifest.mesh))?;
        let meshes = parse_obj(&obj_source, &manifest.materials)?;

        let mut textures = TextureSet::new();
        for (id, path) in &manifest.textures {
            let id: u16 = id
                .parse()
                .ok()
                .filter(|&id| id <= MAX_TEXTURE_ID)
                .ok_or_else(|| {
                    Error::Scene(format!("texture id {id:?} is not an integer in 0..=8191"))
                })?;
            let chain = deserialize_chain(&std::fs::read(resolve(path))?)?;
            if chain.texture_id() != id {
                return Err(Error::Scene(format!(
                    "{} holds texture id {}, the manifest expects {id}",
                    path.display(),
                    chain.texture_id()
                )));
            }
            textures.insert(chain);
        }
        let scene = Scene {
            meshes,
            textures,
            camera: manifest.camera,
        };
        scene.validate()?;
        Ok(scene)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub mesh: PathBuf,
    pub materials: HashMap<String, u16>,
    pub textures: BTreeMap<String, PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub camera: Option<Camera>,
}

/// Parses `v`, `vt`, `f` and `usemtl` records; other statements are ignored. Faces are
/// fan-triangulated and every face vertex needs a texture coordinate.
pub fn parse_obj(source: &str, materials: &HashMap<String, u16>) -> Result<Vec<Mesh>> {
    let mut positions: Vec<Vec3> = Vec::new();
    let mut uvs: Vec<[f32; 2]> = Vec::new();
    let mut meshes: Vec<Mesh> = Vec::new();
    let mut current: Option<usize> = None;
    let mut by_texture: HashMap<u16, usize> = HashMap::new();

    for (lineno, raw) in source.lines().enumerate() {
        let err = |msg: String| Error::Scene(format!("obj line {}: {msg}", lineno + 1));
        let line = raw.split('#').next().unwrap_or("").trim();
        let mut parts = line.split_whitespace();
        let Some(tag) = parts.next() else { continue };
        match tag {
            "v" => {
                let c = parse_floats::<f64>(parts, 3).map_err(err)?;
                positions.push(Vec3::new(c[0], c[1], c[2]));
            }
            "vt" => {
                let c = parse_floats::<f32>(parts, 2).map_err(err)?;
                uvs.push([c[0], 1.0 - c[1]]);
            }
            "usemtl" => {
                let name = parts
                    .next()
                    .ok_or_else(|| err("usemtl without a name".into()))?;
                let id = *materials.get(name).ok_or_else(|| {
                    err(format!(
                        "material {name:?} has no texture id in the manifest"
                    ))
                })?;
                let idx = *by_texture.entry(id).or_insert_with(|| {
                    meshes.push(Mesh {
                        texture_id: id,
                        triangles: Vec::new(),
                    });
                    meshes.len() - 1
                });
                current = Some(idx);
            }
            "f" => {
                let mesh = current.ok_or_else(|| err("face before any usemtl".into()))?;
                let corners = parts
                    .map(|c| parse_corner(c, positions.len(), uvs.len()))
                    .collect::<std::result::Result<Vec<_>, _>>()
                    .map_err(err)?;
                if corners.len() < 3 {
                    return Err(err(format!("face has {} vertices", corners.len())));
                }
                for i in 1..corners.len() - 1 {
                    let tri = [corners[0], corners[i], corners[i + 1]];
                    meshes[mesh].triangles.push(Triangle {
                        positions: tri.map(|(p, _)| positions[p]),
                        uvs: tri.map(|(_, t)| uvs[t]),
                    });
                }
            }
            _ => {}
        }
    }
    Ok(meshes)
}

fn parse_floats<'a, T: std::str::FromStr>(
    parts: impl Iterator<Item = &'a str>,
    n: usize,
) -> std::result::Result<Vec<T>, String> {
    let vals: Vec<T> = parts
        .take(n)
        .map(|s| s.parse::<T>().map_err(|_| format!("bad number {s:?}")))
        .collect::<std::result::Result<_, _>>()?;
    if vals.len() < n {
        return Err(format!("expected {n} components"));
    }
    Ok(vals)
}

fn resolve_index(s: &str, len: usize) -> std::result::Result<usize, String> {
    let i: i64 = s.parse().map_err(|_| format!("bad index {s:?}"))?;
    let idx = match i {
        0 => return Err("index 0 is invalid".into()),
        i if i > 0 => i - 1,
        i => len as i64 + i,
    };
    if idx < 0 || idx as usize >= len {
        return Err(format!("index {i} out of range ({len} defined)"));
    }
    Ok(idx as usize)
}

fn parse_corner(c: &str, n_pos: usize, n_uv: usize) -> std::result::Result<(usize, usize), String> {
    let mut it = c.split('/');
    let p = resolve_index(it.next().unwrap_or(""), n_pos)?;
    let t = match it.next() {
        Some(t) if !t.is_empty() => resolve_index(t, n_uv)?,
        _ => return Err(format!("face vertex {c:?} has no texture coordinate")),
    };
    Ok((p, t))
}

/// Writes meshes as OBJ text with one material per texture, named `tex<id>`.
pub fn write_obj(meshes: &[Mesh]) -> (String, HashMap<String, u16>) {
    use std::fmt::Write;
    let mut out = String::new();
    let mut materials = HashMap::new();
    let (mut nv, mut nt) = (0usize, 0usize);
    for mesh in meshes {
        let name = format!("tex{}", mesh.texture_id);
        let _ = writeln!(out, "usemtl {name}");
        materials.insert(name, mesh.texture_id);
        for tri in &mesh.triangles {
            for (p, t) in tri.positions.iter().zip(&tri.uvs) {
                let _ = writeln!(out, "v {} {} {}", p.x, p.y, p.z);
                let _ = writeln!(out, "vt {} {}", t[0], 1.0 - t[1]);
            }
            let _ = writeln!(
                out,
                "f {}/{} {}/{} {}/{}",
                nv + 1,
                nt + 1,
                nv + 2,
                nt + 2,
                nv + 3,
                nt + 3
            );
            nv += 3;
            nt += 3;
        }
    }
    (out, materials)
}
