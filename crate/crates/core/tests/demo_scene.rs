use jpegtex::render::demo::{
    build_demo_scene, demo_layout, demo_texture, write_demo, DemoConfig, Material,
};
use jpegtex::render::scene::Manifest;
use jpegtex::render::{RenderConfig, Renderer, Scene};
use jpegtex::Error;

fn small() -> DemoConfig {
    DemoConfig {
        texture_size: 32,
        ..DemoConfig::default()
    }
}

#[test]
fn layout_assigns_sequential_ids() {
    let layout = demo_layout(&DemoConfig::default());
    assert_eq!(layout.materials.len(), 63);
    for (i, (id, _)) in layout.materials.iter().enumerate() {
        assert_eq!(*id as usize, i + 1);
        assert_eq!(layout.meshes[i].texture_id, *id);
    }
    let count = |m: Material| layout.materials.iter().filter(|(_, x)| *x == m).count();
    assert_eq!(
        [
            count(Material::Stone),
            count(Material::Brick),
            count(Material::Tapestry),
            count(Material::Plaster),
            count(Material::Marble)
        ],
        [18, 24, 12, 1, 8]
    );
    let coarse = demo_layout(&DemoConfig {
        panel_size: 100.0,
        ..DemoConfig::default()
    });
    assert_eq!(coarse.materials.len(), 1 + 2 + 2 + 1 + 8);
}

#[test]
fn textures_are_deterministic_and_tile() {
    let cfg = DemoConfig {
        texture_size: 64,
        ..DemoConfig::default()
    };
    let a = demo_texture(3, Material::Brick, &cfg);
    assert!(a == demo_texture(3, Material::Brick, &cfg));
    assert!(a != demo_texture(4, Material::Brick, &cfg));
    assert!(a != demo_texture(3, Material::Brick, &DemoConfig { seed: 1, ..cfg }));
    // Opposite edges differ no more than neighboring interior rows do.
    for m in [
        Material::Stone,
        Material::Plaster,
        Material::Marble,
        Material::Tapestry,
    ] {
        let t = demo_texture(1, m, &cfg);
        let row_diff = |y0: u32, y1: u32| -> u32 {
            (0..64)
                .map(|x| {
                    (0..3)
                        .map(|c| (t.get(x, y0)[c] as i32 - t.get(x, y1)[c] as i32).unsigned_abs())
                        .sum::<u32>()
                })
                .sum()
        };
        let seam = row_diff(63, 0);
        let interior = (1..63).map(|y| row_diff(y - 1, y)).max().unwrap();
        assert!(
            seam <= interior * 2,
            "{m:?}: seam {seam} vs interior {interior}"
        );
    }
}

#[test]
fn invalid_configs_are_rejected() {
    for cfg in [
        DemoConfig {
            texture_size: 0,
            ..small()
        },
        DemoConfig {
            texture_size: 40,
            ..small()
        },
        DemoConfig {
            panel_size: 0.0,
            ..small()
        },
    ] {
        assert!(matches!(
            build_demo_scene(&cfg),
            Err(Error::InvalidArgument(_))
        ));
    }
}

#[test]
fn written_demo_loads_back_identically() {
    let scene = build_demo_scene(&small()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let manifest = write_demo(dir.path(), &scene).unwrap();
    let loaded = Scene::load(&manifest).unwrap();
    assert_eq!(loaded.meshes, scene.meshes);
    assert_eq!(loaded.camera, scene.camera);
    assert_eq!(
        loaded.textures.ids().collect::<Vec<_>>(),
        scene.textures.ids().collect::<Vec<_>>()
    );
    for id in scene.textures.ids() {
        assert_eq!(loaded.textures.get(id), scene.textures.get(id));
    }

    let cam = scene.camera.unwrap().with_viewport(96, 54);
    let a = Renderer::new(RenderConfig::default())
        .render_frame(&scene, &cam)
        .unwrap();
    let b = Renderer::new(RenderConfig::default())
        .render_frame(&loaded, &cam)
        .unwrap();
    assert!(a.images == b.images);
}

#[test]
fn manifest_mismatches_are_scene_errors() {
    let scene = build_demo_scene(&small()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = write_demo(dir.path(), &scene).unwrap();
    let original: Manifest = serde_json::from_slice(&std::fs::read(&path).unwrap()).unwrap();

    let mut swapped = original.clone();
    let one = swapped.textures.remove("1").unwrap();
    let two = swapped.textures.insert("2".into(), one.clone()).unwrap();
    swapped.textures.insert("1".into(), two);
    std::fs::write(&path, serde_json::to_vec(&swapped).unwrap()).unwrap();
    assert!(matches!(Scene::load(&path), Err(Error::Scene(_))));

    let mut dangling = original.clone();
    dangling.textures.remove("5");
    std::fs::write(&path, serde_json::to_vec(&dangling).unwrap()).unwrap();
    assert!(matches!(Scene::load(&path), Err(Error::Scene(_))));

    let mut missing = original;
    missing.mesh = "nowhere.obj".into();
    std::fs::write(&path, serde_json::to_vec(&missing).unwrap()).unwrap();
    assert!(matches!(Scene::load(&path), Err(Error::Io(_))));
}
