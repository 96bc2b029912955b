//! Composable multi-pass rendering over named offscreen targets.
//!
//! A [`PassGraph`] is an ordered list of passes. Each pass draws the scene's
//! surface, strokes one of its contour sets, or filters a previously
//! rendered image, and writes either the shared screen framebuffer or a
//! named offscreen texture. Execution is strictly in order (groups flatten
//! in place, so how passes are grouped never changes the result), reads of a
//! texture slot must come after a write to it, and the final pass must
//! target the screen — that framebuffer is the graph's result.

use std::collections::BTreeMap;

use crate::anim::MeshState;
use crate::contours::ContourSet;
use crate::io::ImageBuffer;
use crate::render::lines::render_lines;
use crate::render::raster::{rasterize_surface, RasterOptions};
use crate::render::shade::ShaderConfig;
use crate::render::spline::LineStyle;
use crate::render::{Camera, Framebuffer, RenderError};

/// Identity 3×3 convolution kernel.
pub const KERNEL_IDENTITY: [[f64; 3]; 3] =
    [[0.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 0.0]];

/// Horizontal Sobel edge-detection kernel.
pub const KERNEL_SOBEL_X: [[f64; 3]; 3] =
    [[-1.0, 0.0, 1.0], [-2.0, 0.0, 2.0], [-1.0, 0.0, 1.0]];

/// Vertical Sobel edge-detection kernel.
pub const KERNEL_SOBEL_Y: [[f64; 3]; 3] =
    [[-1.0, -2.0, -1.0], [0.0, 0.0, 0.0], [1.0, 2.0, 1.0]];

/// Everything a pass graph can draw: one deformed surface, the camera, and
/// any number of extracted contour sets, referenced by index from
/// [`PassKind::Lines`].
#[derive(Debug, Clone, Copy)]
pub struct Scene<'a> {
    pub state: &'a MeshState<'a>,
    pub camera: &'a Camera,
    pub contours: &'a [ContourSet],
}

/// Where a pass writes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PassTarget {
    /// The shared on-screen framebuffer returned by [`run_pass_graph`].
    Screen,
    /// A named offscreen framebuffer, allocated at viewport size on first
    /// write and readable by later [`PassKind::Image`] passes.
    Texture(String),
}

/// A per-pixel filter applied by an image pass.
#[derive(Debug, Clone, Copy)]
pub enum ImageOperator {
    /// 3×3 convolution of every color channel with clamp-to-edge borders,
    /// accumulated in `f64`. Values are not clamped, so edge filters may
    /// produce colors outside `[0, 1]` for later passes to inspect.
    Kernel([[f64; 3]; 3]),
    /// An arbitrary per-pixel color map.
    Map(fn([f32; 4]) -> [f32; 4]),
}

/// What a pass draws.
#[derive(Debug, Clone)]
pub enum PassKind {
    /// Rasterize the scene's surface with a shader.
    Surface {
        shader: ShaderConfig,
        options: RasterOptions,
    },
    /// Stroke `Scene::contours[contours]` as styled lines.
    Lines { contours: usize, style: LineStyle },
    /// Filter the named input texture and replace the target's contents
    /// with the result (depth is copied from the input).
    Image {
        input: String,
        operator: ImageOperator,
    },
    /// A sequence of passes run in place. Grouping is purely organizational:
    /// the group's own target is ignored and results are identical however
    /// passes are nested.
    Group(Vec<RenderPass>),
}

/// One step of a [`PassGraph`].
#[derive(Debug, Clone)]
pub struct RenderPass {
    pub kind: PassKind,
    pub target: PassTarget,
}

impl RenderPass {
    /// A pass drawing straight to the screen.
    pub fn to_screen(kind: PassKind) -> RenderPass {
        RenderPass {
            kind,
            target: PassTarget::Screen,
        }
    }

    /// A pass drawing to the named texture slot.
    pub fn to_texture(kind: PassKind, name: &str) -> RenderPass {
        RenderPass {
            kind,
            target: PassTarget::Texture(name.to_string()),
        }
    }
}

/// An ordered list of rendering passes.
#[derive(Debug, Clone, Default)]
pub struct PassGraph {
    pub passes: Vec<RenderPass>,
}

fn flatten<'a>(passes: &'a [RenderPass], out: &mut Vec<&'a RenderPass>) {
    for pass in passes {
        match &pass.kind {
            PassKind::Group(inner) => flatten(inner, out),
            _ => out.push(pass),
        }
    }
}

/// Executes the graph against a scene and returns the screen framebuffer.
///
/// Fails with [`RenderError::InvalidGraph`] when the graph is empty or its
/// last (flattened) pass does not target the screen, and with
/// [`RenderError::UnboundTexture`] when an image pass reads a texture slot
/// no earlier pass has written.
pub fn run_pass_graph(graph: &PassGraph, scene: &Scene<'_>) -> Result<Framebuffer, RenderError> {
    let mut order = Vec::new();
    flatten(&graph.passes, &mut order);
    let invalid = |why: &str| Err(RenderError::InvalidGraph(why.to_string()));
    match order.last() {
        None => return invalid("the graph contains no passes"),
        Some(last) if last.target != PassTarget::Screen => {
            return invalid("the final pass must target the screen");
        }
        _ => {}
    }

    let mut screen = Framebuffer::new(scene.camera.width(), scene.camera.height());
    let mut textures: BTreeMap<String, Framebuffer> = BTreeMap::new();
    for pass in order {
        // Image passes replace their target wholesale and may read a texture
        // while writing the screen, so they manage targets themselves.
        if let PassKind::Image { input, operator } = &pass.kind {
            let source = textures
                .get(input)
                .ok_or_else(|| RenderError::UnboundTexture(input.clone()))?;
            let filtered = apply_operator(source, operator);
            match &pass.target {
                PassTarget::Screen => screen = filtered,
                PassTarget::Texture(name) => {
                    textures.insert(name.clone(), filtered);
                }
            }
            continue;
        }
        let target = match &pass.target {
            PassTarget::Screen => &mut screen,
            PassTarget::Texture(name) => textures.entry(name.clone()).or_insert_with(|| {
                Framebuffer::new(scene.camera.width(), scene.camera.height())
            }),
        };
        match &pass.kind {
            PassKind::Surface { shader, options } => {
                rasterize_surface(scene.state, scene.camera, shader, target, options)?;
            }
            PassKind::Lines { contours, style } => {
                let set = scene.contours.get(*contours).ok_or_else(|| {
                    RenderError::InvalidGraph(format!(
                        "lines pass references contour set {} but the scene has {}",
                        contours,
                        scene.contours.len()
                    ))
                })?;
                render_lines(set, scene.camera, style, target)?;
            }
            PassKind::Image { .. } | PassKind::Group(_) => unreachable!("handled above"),
        }
    }
    Ok(screen)
}

fn apply_operator(source: &Framebuffer, operator: &ImageOperator) -> Framebuffer {
    let (w, h) = (source.width(), source.height());
    let mut out = Framebuffer::new(w, h);
    for y in 0..h {
        for x in 0..w {
            let color = match operator {
                ImageOperator::Kernel(kernel) => {
                    let mut acc = [0.0f64; 4];
                    for (ky, row) in kernel.iter().enumerate() {
                        for (kx, weight) in row.iter().enumerate() {
                            // Clamp-to-edge: out-of-range taps repeat the
                            // border pixel.
                            let sx = (x as i64 + kx as i64 - 1).clamp(0, w as i64 - 1) as u32;
                            let sy = (y as i64 + ky as i64 - 1).clamp(0, h as i64 - 1) as u32;
                            let c = source.color_at(sx, sy);
                            for (a, v) in acc.iter_mut().zip(c) {
                                *a += weight * f64::from(v);
                            }
                        }
                    }
                    acc.map(|v| v as f32)
                }
                ImageOperator::Map(f) => f(source.color_at(x, y)),
            };
            out.set_color(x, y, color);
            out.set_depth(x, y, source.depth_at(x, y));
        }
    }
    out
}

/// 3×3 convolution of an 8-bit image with clamp-to-edge borders.
///
/// Every channel is filtered independently (including alpha, if present);
/// results are rounded and clamped back to `0..=255`.
pub fn convolve3x3(image: &ImageBuffer, kernel: &[[f64; 3]; 3]) -> ImageBuffer {
    let (w, h, channels) = (image.width(), image.height(), image.channels());
    let mut out = ImageBuffer::new(w, h, channels).expect("source image has valid channels");
    let mut values = vec![0u8; channels];
    for y in 0..h {
        for x in 0..w {
            for (ch, value) in values.iter_mut().enumerate() {
                let mut acc = 0.0f64;
                for (ky, row) in kernel.iter().enumerate() {
                    for (kx, weight) in row.iter().enumerate() {
                        let sx = (x as i64 + kx as i64 - 1).clamp(0, w as i64 - 1) as usize;
                        let sy = (y as i64 + ky as i64 - 1).clamp(0, h as i64 - 1) as usize;
                        acc += weight * f64::from(image.pixel(sx, sy)[ch]);
                    }
                }
                *value = acc.round().clamp(0.0, 255.0) as u8;
            }
            out.set_pixel(x, y, &values);
        }
    }
    out
}
