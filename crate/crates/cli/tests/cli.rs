use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../core/tests/fixtures")
        .join(name)
}

fn run(args: &[&std::ffi::OsStr]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_jpegtex"))
        .args(args)
        .output()
        .expect("spawn jpegtex")
}

macro_rules! jpegtex {
    ($($a:expr),* $(,)?) => { run(&[$(std::ffi::OsStr::new(&$a)),*]) };
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn help_and_version_exit_zero() {
    assert_eq!(code(&jpegtex!("--help")), 0);
    assert_eq!(code(&jpegtex!("--version")), 0);
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(code(&jpegtex!("frobnicate")), 1);
    assert_eq!(code(&jpegtex!("transcode")), 1);
    assert_eq!(
        code(&jpegtex!(
            "transcode",
            "a.jpg",
            "b.ratexm",
            "--quality",
            "0"
        )),
        1
    );
    assert_eq!(
        code(&jpegtex!(
            "transcode",
            "a.jpg",
            "b.ratexm",
            "--texture-id",
            "8192"
        )),
        1
    );
    assert_eq!(
        code(&jpegtex!("render", "s.json", "--viewport", "12by4")),
        1
    );
}

#[test]
fn transcode_decode_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("a.ratexm");
    let png = dir.path().join("a.png");
    let o = jpegtex!(
        "transcode",
        fixture("libjpeg_256x256_q80.jpg"),
        out,
        "--texture-id",
        "7",
        "--json"
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(report["mcu_count"], 256);
    assert!(report["upper_bound_bpp"].as_f64().unwrap() < 0.22);

    let o = jpegtex!("decode", out, png);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let decoded = jpegtex::RgbImage::load(&png).unwrap();
    assert_eq!((decoded.width, decoded.height), (256, 256));

    let o = jpegtex!("decode", out, png, "--mip", "3", "--variant", "ballot");
    assert_eq!(code(&o), 0);
    assert_eq!(jpegtex::RgbImage::load(&png).unwrap().width, 32);

    let o = jpegtex!("info", out);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("texture id 7"));
    assert_eq!(code(&jpegtex!("info", fixture("libjpeg_33x17_q70.jpg"))), 0);
}

#[test]
fn validation_failures_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let garbage = dir.path().join("garbage.ratexm");
    std::fs::write(&garbage, b"not a container").unwrap();
    assert_eq!(
        code(&jpegtex!("decode", garbage, dir.path().join("x.png"))),
        1
    );
    assert_eq!(code(&jpegtex!("info", garbage)), 1);
    assert_eq!(
        code(&jpegtex!(
            "transcode",
            dir.path().join("missing.jpg"),
            dir.path().join("x.ratexm")
        )),
        1
    );

    let out = dir.path().join("a.ratexm");
    assert_eq!(
        code(&jpegtex!(
            "transcode",
            fixture("libjpeg_16x16_q50.jpg"),
            out
        )),
        0
    );
    assert_eq!(
        code(&jpegtex!(
            "decode",
            out,
            dir.path().join("x.png"),
            "--mip",
            "9"
        )),
        1
    );
}

#[test]
fn metrics_match_the_reference_values() {
    let refs: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(fixture("metrics.json")).unwrap()).unwrap();
    let o = jpegtex!(
        "metrics",
        fixture("natural.png"),
        fixture("natural_noisy.png"),
        "--json"
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let got: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!((got["psnr"].as_f64().unwrap() - refs["noisy"]["psnr"].as_f64().unwrap()).abs() < 0.01);
    assert!(
        (got["ssim"].as_f64().unwrap() - refs["noisy"]["ssim"].as_f64().unwrap()).abs() < 0.005
    );

    let o = jpegtex!("metrics", fixture("natural.png"), fixture("natural.png"));
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("PSNR inf"));

    let o = jpegtex!(
        "metrics",
        fixture("natural.png"),
        fixture("libjpeg_16x16_q50.jpg")
    );
    assert_eq!(code(&o), 1);
}

#[test]
fn demo_then_render_writes_frames_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let scene_dir = dir.path().join("hall");
    let o = jpegtex!("demo", scene_dir, "--texture-size", "32");
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let manifest = scene_dir.join("scene.json");
    let frames = dir.path().join("frames");
    let report = dir.path().join("report.json");
    let o = jpegtex!(
        "render",
        manifest,
        "--frames",
        "3",
        "--reps",
        "2",
        "--viewport",
        "48x32",
        "--stereo",
        "--out",
        frames,
        "--json",
        report
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("max-of-median"));
    let written = std::fs::read_dir(&frames).unwrap().count();
    assert_eq!(written, 6);
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert!(json.is_object());

    assert_eq!(code(&jpegtex!("render", manifest, "--frames", "0")), 1);
    assert_eq!(code(&jpegtex!("render", manifest, "--stereo=-1")), 1);
    assert_eq!(code(&jpegtex!("render", dir.path().join("nope.json"))), 1);
    assert_eq!(
        code(&jpegtex!(
            "demo",
            dir.path().join("bad"),
            "--texture-size",
            "20"
        )),
        1
    );
}

#[test]
fn environment_failures_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("a.ratexm");
    assert_eq!(
        code(&jpegtex!(
            "transcode",
            fixture("libjpeg_16x16_q50.jpg"),
            out
        )),
        0
    );
    // The output path is an existing directory, which is not a problem with the input.
    let o = jpegtex!("transcode", fixture("libjpeg_16x16_q50.jpg"), dir.path());
    assert_eq!(code(&o), 2, "{}", String::from_utf8_lossy(&o.stderr));
}
