#![allow(dead_code)]

pub mod t81;

use std::path::PathBuf;

use jpegtex::RgbImage;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

pub fn fixture(name: &str) -> Vec<u8> {
    std::fs::read(fixture_path(name)).unwrap_or_else(|e| panic!("fixture {name}: {e}"))
}

pub fn libjpeg_fixtures() -> Vec<(String, Vec<u8>)> {
    let mut names: Vec<String> = std::fs::read_dir(fixture_path(""))
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|n| n.starts_with("libjpeg_") && n.ends_with(".jpg"))
        .collect();
    names.sort();
    names
        .into_iter()
        .map(|n| {
            let b = fixture(&n);
            (n, b)
        })
        .collect()
}

/// Smooth sinusoid mixtures with a few hard-edged rectangles on top.
pub fn synthetic_image(w: u32, h: u32, seed: u64) -> RgbImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let waves: Vec<[f64; 5]> = (0..18)
        .map(|_| {
            [
                rng.gen_range(0.0..0.3),
                rng.gen_range(0.0..0.3),
                rng.gen_range(0.0..std::f64::consts::TAU),
                rng.gen_range(10.0..50.0),
                rng.gen_range(0.0..3.0),
            ]
        })
        .collect();
    let rects: Vec<[u32; 4]> = (0..4)
        .map(|_| {
            let x = rng.gen_range(0..w);
            let y = rng.gen_range(0..h);
            [
                x,
                y,
                x + rng.gen_range(1..=w.max(2) / 2),
                y + rng.gen_range(1..=h.max(2) / 2),
            ]
        })
        .collect();
    let tints: Vec<[u8; 3]> = (0..4).map(|_| [rng.gen(), rng.gen(), rng.gen()]).collect();
    RgbImage::from_fn(w, h, |x, y| {
        for (r, t) in rects.iter().zip(&tints) {
            if x >= r[0] && x < r[2] && y >= r[1] && y < r[3] {
                return *t;
            }
        }
        let mut c = [128.0f64; 3];
        for (i, wv) in waves.iter().enumerate() {
            let s = (wv[0] * x as f64 + wv[1] * y as f64 + wv[2]).sin() * wv[3];
            c[i % 3] += s;
        }
        c.map(|v| v.clamp(0.0, 255.0) as u8)
    })
}

pub fn noise_image(w: u32, h: u32, seed: u64) -> RgbImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    RgbImage::from_fn(w, h, |_, _| [rng.gen(), rng.gen(), rng.gen()])
}
