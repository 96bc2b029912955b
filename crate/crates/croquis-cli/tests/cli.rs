//! End-to-end tests running the compiled `croquis` binary.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use croquis::shapes;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_croquis"))
}

/// A per-test scratch directory (fresh on every run).
fn scratch(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("croquis-cli-{tag}-{}", std::process::id()));
    if dir.exists() {
        fs::remove_dir_all(&dir).expect("clear stale scratch dir");
    }
    fs::create_dir_all(&dir).expect("create scratch dir");
    dir
}

fn run(cmd: &mut Command) -> Output {
    cmd.output().expect("spawn croquis binary")
}

fn assert_success(out: &Output) {
    assert!(
        out.status.success(),
        "command failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

fn stderr_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// Serialize a surface as Wavefront OBJ text.
fn obj_text(surface: &croquis::mesh::Surface) -> String {
    let mut text = String::new();
    for p in surface.positions() {
        writeln!(text, "v {} {} {}", p.x, p.y, p.z).unwrap();
    }
    for f in 0..surface.face_count() {
        let [a, b, c] = surface.face_vertices(f as u32);
        writeln!(text, "f {} {} {}", a + 1, b + 1, c + 1).unwrap();
    }
    text
}

fn write_icosphere_obj(path: &Path, level: u32) {
    fs::write(path, obj_text(&shapes::icosphere(level))).unwrap();
}

/// A minimal two-keyframe MD2 model: one triangle whose frames `run1` and
/// `run2` differ in scale and translation.
fn md2_two_frame_bytes() -> Vec<u8> {
    let frames: &[(&str, [f32; 3], [f32; 3])] = &[
        ("run1", [1.0, 1.0, 1.0], [0.0, 0.0, 0.0]),
        ("run2", [2.0, 1.0, 1.0], [0.5, 0.0, 0.0]),
    ];
    let verts: [[u8; 4]; 3] = [[10, 0, 0, 0], [0, 10, 0, 0], [0, 0, 10, 5]];
    let num_xyz = verts.len() as i32;
    let framesize = 40 + 4 * num_xyz;
    let header_len = 17 * 4;
    let ofs_st = header_len;
    let ofs_tris = ofs_st + 4;
    let ofs_frames = ofs_tris + 12;
    let ofs_end = ofs_frames + framesize * frames.len() as i32;

    let mut out = Vec::new();
    out.extend_from_slice(b"IDP2");
    for value in [
        8, // version
        64,
        64,
        framesize,
        0, // num_skins
        num_xyz,
        1, // num_st
        1, // num_tris
        0, // num_glcmds
        frames.len() as i32,
        ofs_end, // ofs_skins (empty lump)
        ofs_st,
        ofs_tris,
        ofs_frames,
        ofs_end, // ofs_glcmds (empty lump)
        ofs_end,
    ] {
        out.extend_from_slice(&value.to_le_bytes());
    }
    out.extend_from_slice(&0i16.to_le_bytes());
    out.extend_from_slice(&0i16.to_le_bytes());
    for idx in [0u16, 1, 2, 0, 0, 0] {
        out.extend_from_slice(&idx.to_le_bytes());
    }
    for (name, scale, translate) in frames {
        for s in scale {
            out.extend_from_slice(&s.to_le_bytes());
        }
        for t in translate {
            out.extend_from_slice(&t.to_le_bytes());
        }
        let mut name_bytes = [0u8; 16];
        name_bytes[..name.len()].copy_from_slice(name.as_bytes());
        out.extend_from_slice(&name_bytes);
        for v in &verts {
            out.extend_from_slice(v);
        }
    }
    out
}

const SPHERE_CAMERA: &str = "eye=0,0,3;target=0,0,0;fov=40;size=64x64";
const MD2_CAMERA: &str = "eye=25,8,40;target=5,4,2;fov=45;size=48x48";

#[test]
fn render_writes_ppm_and_svg_with_visible_contours() {
    let dir = scratch("render");
    let input = dir.join("sphere.obj");
    write_icosphere_obj(&input, 2);
    let ppm = dir.join("out.ppm");
    let svg = dir.join("out.svg");
    let out = run(bin()
        .args(["render", "--input"])
        .arg(&input)
        .args(["--camera", SPHERE_CAMERA, "--style", "gooch", "--silhouette"])
        .arg("--output")
        .arg(&ppm)
        .arg("--svg-output")
        .arg(&svg));
    assert_success(&out);

    let image = fs::read(&ppm).unwrap();
    assert!(image.starts_with(b"P6\n64 64\n255\n"), "PPM header");
    assert!(
        image[15..].iter().any(|&b| b != 0),
        "the sphere should shade at least one pixel"
    );

    let drawing = fs::read_to_string(&svg).unwrap();
    let polylines = drawing.matches("<path d=\"M").count();
    assert!(
        polylines >= 1,
        "expected at least one non-empty silhouette path: {drawing}"
    );
}

#[test]
fn suggestive_contours_compute_curvature_automatically() {
    let dir = scratch("suggestive");
    let input = dir.join("sphere.obj");
    write_icosphere_obj(&input, 2);
    let ppm = dir.join("out.ppm");
    let out = run(bin()
        .args(["render", "--input"])
        .arg(&input)
        .args(["--camera", SPHERE_CAMERA, "--suggestive"])
        .arg("--output")
        .arg(&ppm));
    assert_success(&out);
    assert!(ppm.exists());
}

#[test]
fn unknown_input_extension_exits_2() {
    let dir = scratch("unknown-ext");
    let input = dir.join("mesh.xyz");
    fs::write(&input, "not a mesh").unwrap();
    let out = run(bin()
        .args(["render", "--input"])
        .arg(&input)
        .args(["--camera", SPHERE_CAMERA])
        .arg("--output")
        .arg(dir.join("out.ppm")));
    assert_eq!(out.status.code(), Some(2), "{}", stderr_of(&out));
    assert!(
        stderr_of(&out).contains("no loader for extension"),
        "stderr: {}",
        stderr_of(&out)
    );
}

#[test]
fn animation_endpoints_match_single_frame_renders_bit_exactly() {
    let dir = scratch("animate");
    let input = dir.join("tri.md2");
    fs::write(&input, md2_two_frame_bytes()).unwrap();

    let frames_dir = dir.join("frames");
    let out = run(bin()
        .args(["animate", "--input"])
        .arg(&input)
        .args(["--camera", MD2_CAMERA])
        .args(["--start", "0", "--end", "1", "--frames", "3"])
        .arg("--output")
        .arg(&frames_dir));
    assert_success(&out);
    let written: Vec<String> = {
        let mut names: Vec<String> = fs::read_dir(&frames_dir)
            .unwrap()
            .map(|e| e.unwrap().file_name().into_string().unwrap())
            .collect();
        names.sort();
        names
    };
    assert_eq!(
        written,
        vec!["frame_0000.ppm", "frame_0001.ppm", "frame_0002.ppm"]
    );

    for (frame, time) in [("frame_0000.ppm", "0"), ("frame_0002.ppm", "1")] {
        let single = dir.join(format!("keyframe-{time}.ppm"));
        let out = run(bin()
            .args(["render", "--input"])
            .arg(&input)
            .args(["--camera", MD2_CAMERA, "--time", time])
            .arg("--output")
            .arg(&single));
        assert_success(&out);
        assert_eq!(
            fs::read(frames_dir.join(frame)).unwrap(),
            fs::read(&single).unwrap(),
            "animation frame at t={time} must match the single-frame render"
        );
    }
}

#[test]
fn static_input_cannot_be_animated() {
    let dir = scratch("static-animate");
    let input = dir.join("sphere.obj");
    write_icosphere_obj(&input, 1);
    let out = run(bin()
        .args(["animate", "--input"])
        .arg(&input)
        .args(["--camera", SPHERE_CAMERA])
        .arg("--output")
        .arg(dir.join("frames")));
    assert_eq!(out.status.code(), Some(2), "{}", stderr_of(&out));
    assert!(
        stderr_of(&out).contains("input is not animated"),
        "stderr: {}",
        stderr_of(&out)
    );
}

#[test]
fn a_single_frame_animation_samples_the_range_start() {
    let dir = scratch("one-frame");
    let input = dir.join("tri.md2");
    fs::write(&input, md2_two_frame_bytes()).unwrap();

    let frames_dir = dir.join("frames");
    let out = run(bin()
        .args(["animate", "--input"])
        .arg(&input)
        .args(["--camera", MD2_CAMERA, "--frames", "1"])
        .arg("--output")
        .arg(&frames_dir));
    assert_success(&out);
    let written: Vec<_> = fs::read_dir(&frames_dir).unwrap().collect();
    assert_eq!(written.len(), 1, "exactly one frame");

    let single = dir.join("keyframe-0.ppm");
    let out = run(bin()
        .args(["render", "--input"])
        .arg(&input)
        .args(["--camera", MD2_CAMERA, "--time", "0"])
        .arg("--output")
        .arg(&single));
    assert_success(&out);
    assert_eq!(
        fs::read(frames_dir.join("frame_0000.ppm")).unwrap(),
        fs::read(&single).unwrap()
    );
}

#[test]
fn curvature_writes_one_csv_row_per_vertex() {
    let dir = scratch("curvature");
    let input = dir.join("sphere.obj");
    let sphere = shapes::icosphere(1);
    let vertex_count = sphere.vertex_count();
    fs::write(&input, obj_text(&sphere)).unwrap();
    let csv = dir.join("curvature.csv");
    let out = run(bin()
        .args(["curvature", "--input"])
        .arg(&input)
        .arg("--output")
        .arg(&csv));
    assert_success(&out);
    let text = fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some("vertex_id,k1,k2,e1_x,e1_y,e1_z,e2_x,e2_y,e2_z,a,b,c,d")
    );
    assert_eq!(lines.count(), vertex_count, "one row per vertex");
}

#[test]
fn contour_json_silhouettes_are_closed_on_a_sphere() {
    let dir = scratch("contours");
    let input = dir.join("sphere.obj");
    write_icosphere_obj(&input, 2);
    let json = dir.join("contours.json");
    let out = run(bin()
        .args(["contours", "--input"])
        .arg(&input)
        .args(["--camera", SPHERE_CAMERA, "--silhouette"])
        .arg("--output")
        .arg(&json));
    assert_success(&out);
    let doc: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&json).unwrap()).unwrap();
    let sets = doc.as_array().expect("top-level JSON array");
    assert_eq!(sets.len(), 1);
    let polylines = sets[0]["polylines"].as_array().unwrap();
    assert!(!polylines.is_empty(), "sphere silhouette exists");
    for pl in polylines {
        assert_eq!(pl["closed"], serde_json::Value::Bool(true));
    }
}

#[test]
fn lapped_covering_with_a_huge_radius_yields_one_patch() {
    let dir = scratch("lapped");
    let input = dir.join("sphere.obj");
    write_icosphere_obj(&input, 1);
    let json = dir.join("patches.json");
    let atlas = dir.join("atlas.ppm");
    let out = run(bin()
        .args(["lapped", "--input"])
        .arg(&input)
        .args(["--radius", "10"])
        .arg("--output")
        .arg(&json)
        .arg("--atlas")
        .arg(&atlas));
    assert_success(&out);
    let doc: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&json).unwrap()).unwrap();
    let patches = doc["patches"].as_array().unwrap();
    assert_eq!(patches.len(), 1, "radius covers the whole sphere");
    assert_eq!(patches[0]["faces"].as_array().unwrap().len(), 80);
    assert!(fs::read(&atlas).unwrap().starts_with(b"P6\n"));
}

#[test]
fn repeated_runs_produce_bit_identical_outputs() {
    let dir = scratch("determinism");
    let input = dir.join("sphere.obj");
    write_icosphere_obj(&input, 2);
    let mut artifacts = Vec::new();
    for round in 0..2 {
        let ppm = dir.join(format!("out-{round}.ppm"));
        let svg = dir.join(format!("out-{round}.svg"));
        let out = run(bin()
            .args(["render", "--input"])
            .arg(&input)
            .args(["--camera", SPHERE_CAMERA, "--style", "toon", "--silhouette"])
            .arg("--output")
            .arg(&ppm)
            .arg("--svg-output")
            .arg(&svg));
        assert_success(&out);
        artifacts.push((fs::read(&ppm).unwrap(), fs::read(&svg).unwrap()));
    }
    assert_eq!(artifacts[0], artifacts[1]);
}

#[test]
fn config_file_and_flags_are_interchangeable_and_flags_win() {
    let dir = scratch("config");
    let input = dir.join("sphere.obj");
    write_icosphere_obj(&input, 2);

    let from_flags = dir.join("flags.ppm");
    let out = run(bin()
        .args(["render", "--input"])
        .arg(&input)
        .args(["--camera", SPHERE_CAMERA, "--style", "phong", "--silhouette"])
        .arg("--output")
        .arg(&from_flags));
    assert_success(&out);

    let from_config = dir.join("config.ppm");
    let config = dir.join("render.json");
    fs::write(
        &config,
        serde_json::json!({
            "input": input,
            "camera": SPHERE_CAMERA,
            "style": { "kind": "phong" },
            "contours": [{ "kind": "silhouette" }],
            "output": from_config,
        })
        .to_string(),
    )
    .unwrap();
    let out = run(bin().args(["render", "--config"]).arg(&config));
    assert_success(&out);
    assert_eq!(
        fs::read(&from_flags).unwrap(),
        fs::read(&from_config).unwrap(),
        "config file and flags describe the same render"
    );

    // A camera flag overrides the config file's camera.
    let overridden = dir.join("small.ppm");
    let out = run(bin()
        .args(["render", "--config"])
        .arg(&config)
        .args(["--camera", "eye=0,0,3;target=0,0,0;fov=40;size=32x32"])
        .arg("--output")
        .arg(&overridden));
    assert_success(&out);
    assert!(fs::read(&overridden).unwrap().starts_with(b"P6\n32 32\n"));
}

#[test]
fn mismatched_output_extensions_exit_2() {
    let dir = scratch("bad-ext");
    let input = dir.join("sphere.obj");
    write_icosphere_obj(&input, 1);

    let out = run(bin()
        .args(["render", "--input"])
        .arg(&input)
        .args(["--camera", SPHERE_CAMERA])
        .arg("--output")
        .arg(dir.join("out.png")));
    assert_eq!(out.status.code(), Some(2), "{}", stderr_of(&out));

    let out = run(bin()
        .args(["curvature", "--input"])
        .arg(&input)
        .arg("--output")
        .arg(dir.join("out.txt")));
    assert_eq!(out.status.code(), Some(2), "{}", stderr_of(&out));
}

#[test]
fn missing_required_options_exit_2() {
    let dir = scratch("missing");
    let input = dir.join("sphere.obj");
    write_icosphere_obj(&input, 1);

    // No output at all.
    let out = run(bin()
        .args(["render", "--input"])
        .arg(&input)
        .args(["--camera", SPHERE_CAMERA]));
    assert_eq!(out.status.code(), Some(2));

    // Lapped without a radius.
    let out = run(bin()
        .args(["lapped", "--input"])
        .arg(&input)
        .arg("--output")
        .arg(dir.join("patches.json")));
    assert_eq!(out.status.code(), Some(2));

    // Unreadable input is an I/O failure, not a config error.
    let out = run(bin()
        .args(["render", "--input"])
        .arg(dir.join("no-such-file.obj"))
        .args(["--camera", SPHERE_CAMERA])
        .arg("--output")
        .arg(dir.join("out.ppm")));
    assert_eq!(out.status.code(), Some(3), "{}", stderr_of(&out));
}

#[test]
fn bad_camera_specs_are_rejected_with_helpful_messages() {
    let dir = scratch("camera");
    let input = dir.join("sphere.obj");
    write_icosphere_obj(&input, 1);
    for (spec, needle) in [
        ("eye=0,0,3;target=0,0,0;fov=40", "missing size"),
        ("eye=0,0,3;size=64x64", "missing target"),
        ("eye=0,0,3;target=0,0,0;fov=40;ortho=1;size=64x64", "mutually exclusive"),
        ("eye=0,0,zebra;target=0,0,0;size=64x64", "bad number"),
        ("eye=0,0,3;target=0,0,0;spin=7;size=64x64", "unknown key"),
    ] {
        let out = run(bin()
            .args(["render", "--input"])
            .arg(&input)
            .args(["--camera", spec])
            .arg("--output")
            .arg(dir.join("out.ppm")));
        assert_eq!(out.status.code(), Some(2), "spec {spec:?}");
        assert!(
            stderr_of(&out).contains(needle),
            "spec {spec:?}: {}",
            stderr_of(&out)
        );
    }
}
