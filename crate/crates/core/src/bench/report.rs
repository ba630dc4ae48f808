//! Benchmark driver and its versioned JSON report.

use std::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::bench::path::{CameraPath, PathKind};
use crate::bench::stats::{max_of_medians, mean, percentile};
use crate::error::{Error, Result};
use crate::render::{Frame, FrameStats, RenderConfig, Renderer, Scene, SharedStats};

pub const SCHEMA_VERSION: u32 = 1;
pub const DEFAULT_REPETITIONS: usize = 5;
pub const DEFAULT_EYE_SEPARATION: f64 = 0.064;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub scene: String,
    pub path: PathKind,
    pub frames: usize,
    pub step_degrees: f64,
    pub repetitions: usize,
    /// Eye separation in meters when rendering stereo.
    pub stereo: Option<f64>,
    pub width: u32,
    pub height: u32,
    pub render: RenderConfig,
    pub workers_used: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameRecord {
    pub viewpoint: usize,
    pub repetition: usize,
    pub stats: FrameStats,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shared: Option<SharedStats>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub max_of_medians: f64,
    pub mean: f64,
    pub p99: f64,
}

impl Aggregate {
    /// `samples[viewpoint][repetition]`.
    pub fn of(samples: &[Vec<f64>]) -> Result<Self> {
        let flat: Vec<f64> = samples.iter().flatten().copied().collect();
        Ok(Self {
            max_of_medians: max_of_medians(samples)?,
            mean: mean(&flat)?,
            p99: percentile(&flat, 99.0)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregates {
    pub frame_ms: Aggregate,
    pub geometry_ms: Aggregate,
    pub mark_ms: Aggregate,
    pub decode_ms: Aggregate,
    pub resolve_ms: Aggregate,
    pub update_ms: Aggregate,
    pub mcus_decoded_per_frame_mean: f64,
    pub mcus_decoded_per_frame_max: usize,
    /// Decoded MCUs of one repetition, summed over viewpoints.
    pub mcus_decoded_per_repetition: usize,
    /// Fraction of visible keys already resident, averaged over frames.
    pub cache_hit_rate: f64,
    /// Decoded MCUs per second of decode-pass time; `None` when nothing was decoded.
    pub decode_mcus_per_second: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shared_of_union_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shared_of_union_mean: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shared_of_right_mean: Option<f64>,
}

/// Perceptual metrics computed by external tools; never filled in here.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ExternalQuality {
    pub flip: Option<f64>,
    pub lpips: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub schema_version: u32,
    pub config: BenchConfig,
    pub frames: Vec<FrameRecord>,
    pub aggregates: Aggregates,
    pub external_quality: ExternalQuality,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchSetup {
    pub scene_name: String,
    pub path: CameraPath,
    pub step_degrees: f64,
    pub repetitions: usize,
    pub stereo: Option<f64>,
    pub render: RenderConfig,
}

/// Renders every path pose `repetitions` times. Each repetition starts from an empty
/// cache so MCU counts repeat exactly. `on_frame(repetition, viewpoint, frame)` sees
/// every rendered frame.
pub fn run_bench(
    scene: &Scene,
    setup: &BenchSetup,
    mut on_frame: impl FnMut(usize, usize, &Frame) -> Result<()>,
) -> Result<BenchReport> {
    if setup.repetitions == 0 {
        return Err(Error::InvalidArgument(
            "repetitions must be at least 1".into(),
        ));
    }
    if setup.path.is_empty() {
        return Err(Error::InvalidArgument("camera path is empty".into()));
    }
    scene.validate()?;
    let mut renderer = Renderer::new(setup.render);
    let mut frames = Vec::with_capacity(setup.path.len() * setup.repetitions);
    for rep in 0..setup.repetitions {
        renderer.reset_cache();
        for (vp, cam) in setup.path.poses.iter().enumerate() {
            let (frame, shared) = match setup.stereo {
                Some(sep) => {
                    let (l, r) = cam.eye_pair(sep);
                    let (f, s) = renderer.render_stereo(scene, &l, &r)?;
                    (f, Some(s))
                }
                None => (renderer.render_frame(scene, cam)?, None),
            };
            on_frame(rep, vp, &frame)?;
            frames.push(FrameRecord {
                viewpoint: vp,
                repetition: rep,
                stats: frame.stats,
                shared,
            });
        }
    }
    let first = setup.path.poses[0];
    let config = BenchConfig {
        scene: setup.scene_name.clone(),
        path: setup.path.kind,
        frames: setup.path.len(),
        step_degrees: setup.step_degrees,
        repetitions: setup.repetitions,
        stereo: setup.stereo,
        width: first.width,
        height: first.height,
        render: setup.render,
        workers_used: renderer.executor().workers(),
    };
    let aggregates = aggregate(&frames, setup.path.len(), setup.repetitions)?;
    Ok(BenchReport {
        schema_version: SCHEMA_VERSION,
        config,
        frames,
        aggregates,
        external_quality: ExternalQuality::default(),
    })
}

fn aggregate(frames: &[FrameRecord], viewpoints: usize, reps: usize) -> Result<Aggregates> {
    let matrix = |f: &dyn Fn(&FrameRecord) -> f64| -> Vec<Vec<f64>> {
        let mut m = vec![vec![0.0; reps]; viewpoints];
        for r in frames {
            m[r.viewpoint][r.repetition] = f(r);
        }
        m
    };
    let agg = |f: &dyn Fn(&FrameRecord) -> f64| Aggregate::of(&matrix(f));
    let decoded: Vec<usize> = frames.iter().map(|r| r.stats.mcus_decoded).collect();
    let total_decoded: usize = decoded.iter().sum();
    let decode_seconds: f64 = frames.iter().map(|r| r.stats.timings.decode).sum::<f64>() / 1e3;
    let hit_rates: Vec<f64> = frames
        .iter()
        .map(|r| {
            if r.stats.visible_keys == 0 {
                1.0
            } else {
                r.stats.mcus_reused as f64 / r.stats.visible_keys as f64
            }
        })
        .collect();
    let union: Vec<f64> = frames
        .iter()
        .filter_map(|r| r.shared.map(|s| s.shared_of_union))
        .collect();
    let right: Vec<f64> = frames
        .iter()
        .filter_map(|r| r.shared.map(|s| s.shared_of_right))
        .collect();
    Ok(Aggregates {
        frame_ms: agg(&|r| r.stats.timings.total())?,
        geometry_ms: agg(&|r| r.stats.timings.geometry)?,
        mark_ms: agg(&|r| r.stats.timings.mark)?,
        decode_ms: agg(&|r| r.stats.timings.decode)?,
        resolve_ms: agg(&|r| r.stats.timings.resolve)?,
        update_ms: agg(&|r| r.stats.timings.update)?,
        mcus_decoded_per_frame_mean: total_decoded as f64 / frames.len() as f64,
        mcus_decoded_per_frame_max: decoded.iter().copied().max().unwrap_or(0),
        mcus_decoded_per_repetition: total_decoded / reps,
        cache_hit_rate: mean(&hit_rates)?,
        decode_mcus_per_second: (total_decoded > 0 && decode_seconds > 0.0)
            .then(|| total_decoded as f64 / decode_seconds),
        shared_of_union_min: union.iter().copied().reduce(f64::min),
        shared_of_union_mean: mean(&union).ok(),
        shared_of_right_mean: mean(&right).ok(),
    })
}

impl BenchReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let report: Self = serde_json::from_str(s)?;
        if report.schema_version != SCHEMA_VERSION {
            return Err(Error::VersionMismatch {
                found: report.schema_version as u16,
                expected: SCHEMA_VERSION as u16,
            });
        }
        Ok(report)
    }

    /// Human-readable summary.
    pub fn to_table(&self) -> String {
        let a = &self.aggregates;
        let c = &self.config;
        let mut s = String::new();
        let _ = writeln!(
            s,
            "scene {}  path {:?}  {} frames x {} reps  {}x{}  filter {:?}  mip {}  workers {}",
            c.scene,
            c.path,
            c.frames,
            c.repetitions,
            c.width,
            c.height,
            c.render.filter,
            if c.render.no_mip { "off" } else { "on" },
            c.workers_used
        );
        let _ = writeln!(
            s,
            "{:<10} {:>14} {:>10} {:>10}",
            "pass (ms)", "max-of-median", "mean", "p99"
        );
        for (name, g) in [
            ("geometry", &a.geometry_ms),
            ("mark", &a.mark_ms),
            ("decode", &a.decode_ms),
            ("resolve", &a.resolve_ms),
            ("update", &a.update_ms),
            ("frame", &a.frame_ms),
        ] {
            let _ = writeln!(
                s,
                "{:<10} {:>14.3} {:>10.3} {:>10.3}",
                name, g.max_of_medians, g.mean, g.p99
            );
        }
        let _ = writeln!(
            s,
            "decoded MCUs/frame: mean {:.1}, max {}; per repetition {}",
            a.mcus_decoded_per_frame_mean,
            a.mcus_decoded_per_frame_max,
            a.mcus_decoded_per_repetition
        );
        let _ = writeln!(s, "cache hit rate: {:.2}%", a.cache_hit_rate * 100.0);
        if let Some(t) = a.decode_mcus_per_second {
            let _ = writeln!(s, "decode throughput: {t:.0} MCU/s");
        }
        if let (Some(min), Some(mean_u), Some(mean_r)) = (
            a.shared_of_union_min,
            a.shared_of_union_mean,
            a.shared_of_right_mean,
        ) {
            let _ = writeln!(
                s,
                "stereo sharing: |L and R|/|L or R| min {:.3} mean {:.3}; |L and R|/|R| mean {:.3}",
                min, mean_u, mean_r
            );
        }
        s
    }
}
