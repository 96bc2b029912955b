//! Implementations of the five subcommands.

use std::fmt::Write as _;
use std::fs;

use croquis::anim::{MeshState, VertexAnimatedSurface};
use croquis::contours::{extract_silhouettes, extract_suggestive, ContourSet, TrimThresholds};
use croquis::curvature::CurvatureField;
use croquis::io::{write_ppm_path, ImageBuffer, LoadedAsset, LoaderRegistry};
use croquis::lapped::{build_tangent_field, cover_surface, Patch};
use croquis::render::{export_svg, run_pass_graph, Camera, Framebuffer, Scene};

use crate::config::{require_extension, ContourConfig, RenderConfig};
use crate::CliError;

pub fn render(cfg: &RenderConfig) -> Result<(), CliError> {
    if cfg.output.is_none() && cfg.svg_output.is_none() {
        return Err(CliError::Config(
            "no output requested; set --output (PPM) and/or --svg-output (SVG)".into(),
        ));
    }
    if let Some(out) = &cfg.output {
        require_extension(out, &["ppm"])?;
    }
    if let Some(out) = &cfg.svg_output {
        require_extension(out, &["svg"])?;
    }
    let asset = load_asset(cfg)?;
    let state = sample_state(&asset, cfg.animation.as_deref(), cfg.time)?;
    let camera = cfg.camera()?;
    let (fb, sets) = render_frame(cfg, &state, &camera)?;
    if let Some(out) = &cfg.output {
        write_ppm_path(&fb.to_image(), out)?;
        log::debug!("wrote {}", out.display());
    }
    if let Some(out) = &cfg.svg_output {
        let merged = merge_sets(&sets, &camera);
        fs::write(out, export_svg(&merged, &camera, &cfg.line_style()?)?)?;
        log::debug!("wrote {}", out.display());
    }
    Ok(())
}

pub fn animate(cfg: &RenderConfig) -> Result<(), CliError> {
    let asset = load_asset(cfg)?;
    let (start, end) = match &asset {
        LoadedAsset::Static(_) => {
            return Err(CliError::Config(
                "input is not animated; animate needs a vertex-animated or skinned asset".into(),
            ));
        }
        LoadedAsset::VertexAnimated(v) => {
            let name = clip_name(v, cfg.animation.as_deref())?;
            let frames = v
                .animations()
                .find(|(n, _)| *n == name)
                .map(|(_, range)| range.len())
                .ok_or_else(|| {
                    CliError::Config(format!("unknown animation {name:?}"))
                })?;
            (0.0, (frames - 1) as f64)
        }
        LoadedAsset::Skinned(s) => s.time_range().unwrap_or((0.0, 0.0)),
    };
    let start = cfg.start.unwrap_or(start);
    let end = cfg.end.unwrap_or(end);
    let frames = cfg.frames.unwrap_or(1);
    if frames < 1 {
        return Err(CliError::Config("frame count must be at least 1".into()));
    }
    let camera = cfg.camera()?;
    let out_dir = cfg.output.as_ref().ok_or_else(|| {
        CliError::Config("output directory required (--output or config file)".into())
    })?;
    fs::create_dir_all(out_dir)?;
    for i in 0..frames {
        let t = if frames == 1 {
            start
        } else {
            start + (end - start) * f64::from(i) / f64::from(frames - 1)
        };
        let state = sample_state(&asset, cfg.animation.as_deref(), Some(t))?;
        let (fb, _) = render_frame(cfg, &state, &camera)?;
        let path = out_dir.join(format!("frame_{i:04}.ppm"));
        write_ppm_path(&fb.to_image(), &path)?;
        log::debug!("wrote {}", path.display());
    }
    Ok(())
}

pub fn curvature(cfg: &RenderConfig) -> Result<(), CliError> {
    let out = cfg.output.as_ref().ok_or_else(|| {
        CliError::Config("output CSV path required (--output or config file)".into())
    })?;
    require_extension(out, &["csv"])?;
    let asset = load_asset(cfg)?;
    let state = MeshState::rest(asset.surface());
    let field = CurvatureField::estimate_state(&state);
    let tensors = field
        .derivative
        .as_ref()
        .expect("estimate_state computes the derivative");
    let mut csv =
        String::from("vertex_id,k1,k2,e1_x,e1_y,e1_z,e2_x,e2_y,e2_z,a,b,c,d\n");
    for (v, (c, d)) in field.vertices.iter().zip(tensors).enumerate() {
        writeln!(
            csv,
            "{v},{},{},{},{},{},{},{},{},{},{},{},{}",
            c.k1, c.k2, c.e1.x, c.e1.y, c.e1.z, c.e2.x, c.e2.y, c.e2.z, d.a, d.b, d.c, d.d
        )
        .expect("writing to a string cannot fail");
    }
    fs::write(out, csv)?;
    Ok(())
}

pub fn contours(cfg: &RenderConfig) -> Result<(), CliError> {
    let out = cfg.output.as_ref().ok_or_else(|| {
        CliError::Config("output path required (--output or config file)".into())
    })?;
    require_extension(out, &["json", "svg"])?;
    let asset = load_asset(cfg)?;
    let state = sample_state(&asset, cfg.animation.as_deref(), cfg.time)?;
    let camera = cfg.camera()?;
    let mut effective = cfg.clone();
    if effective.contours.is_empty() {
        effective.contours.push(ContourConfig::Silhouette);
    }
    let curvature = needs_curvature(&effective).then(|| CurvatureField::estimate_state(&state));
    let sets = extract_sets(&effective, &state, &camera, curvature.as_ref())?;
    let svg = out
        .extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("svg"));
    if svg {
        let merged = merge_sets(&sets, &camera);
        fs::write(out, export_svg(&merged, &camera, &effective.line_style()?)?)?;
    } else {
        let bodies: Vec<String> = sets.iter().map(ContourSet::to_json_string).collect();
        fs::write(out, format!("[{}]\n", bodies.join(",")))?;
    }
    Ok(())
}

pub fn lapped(cfg: &RenderConfig) -> Result<(), CliError> {
    let out = cfg.output.as_ref().ok_or_else(|| {
        CliError::Config("output JSON path required (--output or config file)".into())
    })?;
    require_extension(out, &["json"])?;
    if let Some(atlas) = &cfg.atlas {
        require_extension(atlas, &["ppm"])?;
    }
    let radius = cfg
        .radius
        .ok_or_else(|| CliError::Config("patch radius required (--radius or config file)".into()))?;
    if !(radius > 0.0) {
        return Err(CliError::Config("patch radius must be positive".into()));
    }
    let asset = load_asset(cfg)?;
    let surface = asset.surface();
    let curvature = CurvatureField::estimate(surface);
    let field = build_tangent_field(surface, &curvature, cfg.iterations.unwrap_or(3))?;
    let patches = cover_surface(surface, &field, radius)?;
    let doc = serde_json::json!({
        "radius": radius,
        "patches": patches
            .iter()
            .map(|p| {
                serde_json::json!({
                    "seed": p.seed(),
                    "faces": p.faces(),
                    "uvs": p
                        .uvs()
                        .iter()
                        .map(|tri| tri.map(|q| [q.x, q.y]))
                        .collect::<Vec<_>>(),
                })
            })
            .collect::<Vec<_>>(),
    });
    let body = serde_json::to_string_pretty(&doc)
        .expect("patch JSON serialization cannot fail");
    fs::write(out, body + "\n")?;
    if let Some(atlas) = &cfg.atlas {
        write_ppm_path(&uv_atlas(&patches, 128), atlas)?;
    }
    Ok(())
}

fn load_asset(cfg: &RenderConfig) -> Result<LoadedAsset, CliError> {
    let input = cfg.input.as_ref().ok_or_else(|| {
        CliError::Config("input file required (--input or config file)".into())
    })?;
    Ok(LoaderRegistry::with_defaults().load(input)?)
}

/// The mesh state at the requested time: the rest pose for static surfaces
/// (which take no `--time`), a keyframe blend for vertex animation, and a
/// posed skin for skeletal animation.
fn sample_state<'a>(
    asset: &'a LoadedAsset,
    animation: Option<&str>,
    time: Option<f64>,
) -> Result<MeshState<'a>, CliError> {
    match asset {
        LoadedAsset::Static(s) => {
            if time.is_some() {
                return Err(CliError::Config(
                    "input is not animated; --time only applies to animated assets".into(),
                ));
            }
            Ok(MeshState::rest(s))
        }
        LoadedAsset::VertexAnimated(v) => {
            let name = clip_name(v, animation)?;
            Ok(v.interpolate_keyframes(&name, time.unwrap_or(0.0))?)
        }
        LoadedAsset::Skinned(s) => {
            let t = time.unwrap_or_else(|| s.time_range().map_or(0.0, |(start, _)| start));
            Ok(s.state_at(t)?)
        }
    }
}

/// The clip to sample: the requested one, or the asset's sole clip.
fn clip_name(v: &VertexAnimatedSurface, requested: Option<&str>) -> Result<String, CliError> {
    if let Some(name) = requested {
        return Ok(name.to_string());
    }
    let names: Vec<&str> = v.animations().map(|(n, _)| n).collect();
    match names.as_slice() {
        [only] => Ok((*only).to_string()),
        _ => Err(CliError::Config(format!(
            "animation name required (--animation); available: {}",
            names.join(", ")
        ))),
    }
}

fn needs_curvature(cfg: &RenderConfig) -> bool {
    cfg.contours.iter().any(ContourConfig::is_suggestive)
}

fn extract_sets(
    cfg: &RenderConfig,
    state: &MeshState<'_>,
    camera: &Camera,
    curvature: Option<&CurvatureField>,
) -> Result<Vec<ContourSet>, CliError> {
    let eye = camera.contour_eye();
    let mut sets = Vec::new();
    for definition in &cfg.contours {
        match definition {
            ContourConfig::Silhouette => sets.push(extract_silhouettes(state, &eye)),
            ContourConfig::Suggestive {
                derivative_threshold,
                silhouette_degrees,
            } => {
                let mut thresholds = TrimThresholds::default();
                if let Some(d) = derivative_threshold {
                    thresholds.derivative = *d;
                }
                if let Some(a) = silhouette_degrees {
                    thresholds.silhouette_degrees = *a;
                }
                let curvature =
                    curvature.expect("curvature is computed whenever suggestive is configured");
                sets.push(extract_suggestive(state, curvature, &eye, thresholds)?);
            }
        }
    }
    Ok(sets)
}

/// Rasterize one frame: estimate curvature if any contour definition needs
/// it, extract the configured contour sets, and run the pass graph.
fn render_frame(
    cfg: &RenderConfig,
    state: &MeshState<'_>,
    camera: &Camera,
) -> Result<(Framebuffer, Vec<ContourSet>), CliError> {
    let curvature = needs_curvature(cfg).then(|| CurvatureField::estimate_state(state));
    let sets = extract_sets(cfg, state, camera, curvature.as_ref())?;
    let graph = cfg.pass_graph(sets.len())?;
    let scene = Scene {
        state,
        camera,
        contours: &sets,
    };
    Ok((run_pass_graph(&graph, &scene)?, sets))
}

/// All polylines from every set in one container, for single-file SVG export.
fn merge_sets(sets: &[ContourSet], camera: &Camera) -> ContourSet {
    ContourSet {
        name: "combined".into(),
        polylines: sets.iter().flat_map(|s| s.polylines.clone()).collect(),
        eye: Some(camera.contour_eye()),
        time: sets.first().map_or(0.0, |s| s.time),
        feature_size: sets.first().map_or(0.0, |s| s.feature_size),
    }
}

/// A debug chart image: each patch's UV triangles drawn in a grid cell,
/// colored by patch index.
fn uv_atlas(patches: &[Patch], tile: usize) -> ImageBuffer {
    const PALETTE: [[u8; 3]; 8] = [
        [230, 97, 97],
        [97, 175, 230],
        [120, 200, 120],
        [230, 180, 97],
        [170, 120, 220],
        [97, 210, 200],
        [220, 140, 190],
        [180, 180, 100],
    ];
    let count = patches.len().max(1);
    let grid = (count as f64).sqrt().ceil() as usize;
    let rows = count.div_ceil(grid);
    let mut image =
        ImageBuffer::new(grid * tile, rows * tile, 3).expect("atlas dimensions are valid");
    for (k, patch) in patches.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for tri in patch.uvs() {
            for p in tri {
                lo[0] = lo[0].min(p.x);
                lo[1] = lo[1].min(p.y);
                hi[0] = hi[0].max(p.x);
                hi[1] = hi[1].max(p.y);
            }
        }
        let margin = 4.0;
        let extent = (hi[0] - lo[0]).max(hi[1] - lo[1]).max(1e-12);
        let scale = (tile as f64 - 2.0 * margin) / extent;
        let cell_x = (k % grid) * tile;
        let cell_y = (k / grid) * tile;
        for tri in patch.uvs() {
            let pts = tri.map(|p| {
                [
                    cell_x as f64 + margin + (p.x - lo[0]) * scale,
                    cell_y as f64 + margin + (p.y - lo[1]) * scale,
                ]
            });
            fill_atlas_triangle(&mut image, &pts, color);
        }
    }
    image
}

fn fill_atlas_triangle(image: &mut ImageBuffer, pts: &[[f64; 2]; 3], color: [u8; 3]) {
    let min_x = pts.iter().map(|p| p[0]).fold(f64::INFINITY, f64::min);
    let max_x = pts.iter().map(|p| p[0]).fold(f64::NEG_INFINITY, f64::max);
    let min_y = pts.iter().map(|p| p[1]).fold(f64::INFINITY, f64::min);
    let max_y = pts.iter().map(|p| p[1]).fold(f64::NEG_INFINITY, f64::max);
    let x0 = min_x.floor().max(0.0) as usize;
    let y0 = min_y.floor().max(0.0) as usize;
    let x1 = (max_x.ceil() as usize).min(image.width().saturating_sub(1));
    let y1 = (max_y.ceil() as usize).min(image.height().saturating_sub(1));
    let orient = |a: &[f64; 2], b: &[f64; 2], px: f64, py: f64| {
        (b[0] - a[0]) * (py - a[1]) - (b[1] - a[1]) * (px - a[0])
    };
    for y in y0..=y1 {
        for x in x0..=x1 {
            let (px, py) = (x as f64 + 0.5, y as f64 + 0.5);
            let w0 = orient(&pts[0], &pts[1], px, py);
            let w1 = orient(&pts[1], &pts[2], px, py);
            let w2 = orient(&pts[2], &pts[0], px, py);
            let inside = (w0 >= 0.0 && w1 >= 0.0 && w2 >= 0.0)
                || (w0 <= 0.0 && w1 <= 0.0 && w2 <= 0.0);
            if inside {
                image.set_pixel(x, y, &color);
            }
        }
    }
}
