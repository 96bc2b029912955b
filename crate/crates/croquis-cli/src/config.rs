//! Configuration schema shared by the JSON config file and command-line
//! flags, plus the conversions into library types.
//!
//! The file is a single JSON object whose fields mirror the flag names; any
//! subset may be present. Flags given on the command line override the file.

use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::{Point3, Vector3};
use serde::{Deserialize, Serialize};

use croquis::mesh::{Material, Rgb};
use croquis::render::{
    Camera, GoochConfig, ImageOperator, LineStyle, PassGraph, PassKind, PassTarget, PhongConfig,
    Projection, RasterOptions, RenderPass, ShaderConfig, Smoothing, ToonConfig, KERNEL_IDENTITY,
    KERNEL_SOBEL_X, KERNEL_SOBEL_Y,
};

use crate::CliError;

/// Everything a command might need, merged from config file and flags.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RenderConfig {
    pub input: Option<PathBuf>,
    /// Camera spec string, e.g. `"eye=0,0,3;target=0,0,0;fov=40;size=256x256"`.
    pub camera: Option<String>,
    pub style: Option<StyleConfig>,
    pub contours: Vec<ContourConfig>,
    pub line_style: Option<LineStyleConfig>,
    /// Explicit pass graph; when absent, one surface pass plus one line pass
    /// per contour definition is used.
    pub passes: Option<Vec<PassConfig>>,
    pub output: Option<PathBuf>,
    pub svg_output: Option<PathBuf>,
    pub animation: Option<String>,
    pub time: Option<f64>,
    pub start: Option<f64>,
    pub end: Option<f64>,
    pub frames: Option<u32>,
    pub radius: Option<f64>,
    pub iterations: Option<u32>,
    pub atlas: Option<PathBuf>,
    pub wireframe: Option<bool>,
    pub backface_cull: Option<bool>,
}

impl RenderConfig {
    pub fn load(path: &Path) -> Result<RenderConfig, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn camera(&self) -> Result<Camera, CliError> {
        let spec = self.camera.as_deref().ok_or_else(|| {
            CliError::Config("camera spec required (--camera or config file)".into())
        })?;
        parse_camera(spec)
    }

    pub fn shader(&self) -> ShaderConfig {
        match &self.style {
            Some(style) => style.to_shader(),
            None => ShaderConfig::Gooch(GoochConfig::default()),
        }
    }

    pub fn raster_options(&self) -> RasterOptions {
        RasterOptions {
            backface_cull: self.backface_cull.unwrap_or(true),
            wireframe: self.wireframe.unwrap_or(false),
        }
    }

    pub fn line_style(&self) -> Result<LineStyle, CliError> {
        match &self.line_style {
            Some(ls) => ls.to_line_style(),
            None => Ok(LineStyle::default()),
        }
    }

    /// The pass graph to run: the configured one, or the default
    /// surface-then-lines stack covering every extracted contour set.
    pub fn pass_graph(&self, contour_sets: usize) -> Result<PassGraph, CliError> {
        let shader = self.shader();
        let options = self.raster_options();
        let style = self.line_style()?;
        let passes = match &self.passes {
            Some(specs) => specs
                .iter()
                .map(|p| p.to_pass(&shader, &options, &style))
                .collect::<Result<Vec<_>, _>>()?,
            None => {
                let mut passes = vec![RenderPass::to_screen(PassKind::Surface {
                    shader: shader.clone(),
                    options,
                })];
                for i in 0..contour_sets {
                    passes.push(RenderPass::to_screen(PassKind::Lines {
                        contours: i,
                        style: style.clone(),
                    }));
                }
                passes
            }
        };
        Ok(PassGraph { passes })
    }
}

/// Shading model plus optional parameter overrides; omitted parameters keep
/// the library defaults.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum StyleConfig {
    Phong {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        shininess: Option<f32>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        ambient: Option<[f32; 3]>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        diffuse: Option<[f32; 3]>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        specular: Option<[f32; 3]>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        light_dir: Option<[f64; 3]>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        light_color: Option<[f64; 3]>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        ambient_light: Option<[f64; 3]>,
    },
    Gooch {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        alpha: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        beta: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        k_d: Option<[f64; 3]>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        k_blue: Option<[f64; 3]>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        k_yellow: Option<[f64; 3]>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        light_dir: Option<[f64; 3]>,
    },
    Toon {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        levels: Option<u32>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        base: Option<[f64; 3]>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        light_dir: Option<[f64; 3]>,
    },
}

impl StyleConfig {
    /// The named style with all parameters at their defaults.
    pub fn of_kind(name: &str) -> Result<StyleConfig, CliError> {
        match name {
            "phong" => Ok(StyleConfig::Phong {
                shininess: None,
                ambient: None,
                diffuse: None,
                specular: None,
                light_dir: None,
                light_color: None,
                ambient_light: None,
            }),
            "gooch" => Ok(StyleConfig::Gooch {
                alpha: None,
                beta: None,
                k_d: None,
                k_blue: None,
                k_yellow: None,
                light_dir: None,
            }),
            "toon" => Ok(StyleConfig::Toon {
                levels: None,
                base: None,
                light_dir: None,
            }),
            other => Err(CliError::Config(format!(
                "unknown style {other:?}; expected phong, gooch, or toon"
            ))),
        }
    }

    pub fn to_shader(&self) -> ShaderConfig {
        match self {
            StyleConfig::Phong {
                shininess,
                ambient,
                diffuse,
                specular,
                light_dir,
                light_color,
                ambient_light,
            } => {
                let mut material = Material::default();
                if let Some(s) = shininess {
                    material.shininess = *s;
                }
                if let Some(c) = ambient {
                    material.ambient = Rgb::new(c[0], c[1], c[2]);
                }
                if let Some(c) = diffuse {
                    material.diffuse = Rgb::new(c[0], c[1], c[2]);
                }
                if let Some(c) = specular {
                    material.specular = Rgb::new(c[0], c[1], c[2]);
                }
                let mut p = PhongConfig {
                    material,
                    ..PhongConfig::default()
                };
                if let Some(v) = light_dir {
                    p.light_dir = Vector3::new(v[0], v[1], v[2]);
                }
                if let Some(v) = light_color {
                    p.light_color = Vector3::new(v[0], v[1], v[2]);
                }
                if let Some(v) = ambient_light {
                    p.ambient_light = Vector3::new(v[0], v[1], v[2]);
                }
                ShaderConfig::Phong(p)
            }
            StyleConfig::Gooch {
                alpha,
                beta,
                k_d,
                k_blue,
                k_yellow,
                light_dir,
            } => {
                let mut g = GoochConfig::default();
                if let Some(a) = alpha {
                    g.alpha = *a;
                }
                if let Some(b) = beta {
                    g.beta = *b;
                }
                if let Some(v) = k_d {
                    g.k_d = Vector3::new(v[0], v[1], v[2]);
                }
                if let Some(v) = k_blue {
                    g.k_blue = Vector3::new(v[0], v[1], v[2]);
                }
                if let Some(v) = k_yellow {
                    g.k_yellow = Vector3::new(v[0], v[1], v[2]);
                }
                if let Some(v) = light_dir {
                    g.light_dir = Vector3::new(v[0], v[1], v[2]);
                }
                ShaderConfig::Gooch(g)
            }
            StyleConfig::Toon {
                levels,
                base,
                light_dir,
            } => {
                let mut t = ToonConfig::default();
                if let Some(n) = levels {
                    t.levels = *n;
                }
                if let Some(v) = base {
                    t.base = Vector3::new(v[0], v[1], v[2]);
                }
                if let Some(v) = light_dir {
                    t.light_dir = Vector3::new(v[0], v[1], v[2]);
                }
                ShaderConfig::Toon(t)
            }
        }
    }
}

/// One contour definition to extract.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ContourConfig {
    Silhouette,
    Suggestive {
        /// Minimum directional-derivative strength for trimming.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        derivative_threshold: Option<f64>,
        /// Angular distance from the silhouette condition, in degrees.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        silhouette_degrees: Option<f64>,
    },
}

impl ContourConfig {
    pub fn is_silhouette(&self) -> bool {
        matches!(self, ContourConfig::Silhouette)
    }

    pub fn is_suggestive(&self) -> bool {
        matches!(self, ContourConfig::Suggestive { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SmoothingConfig {
    None,
    CatmullRom,
    BSpline,
}

/// Line appearance; omitted fields keep the library defaults.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LineStyleConfig {
    pub smoothing: Option<SmoothingConfig>,
    pub samples_per_segment: Option<u32>,
    pub stroke_width: Option<f64>,
    pub color: Option<[f32; 3]>,
    pub depth_bias: Option<f64>,
}

impl LineStyleConfig {
    pub fn to_line_style(&self) -> Result<LineStyle, CliError> {
        let mut style = LineStyle::default();
        if let Some(s) = self.smoothing {
            style.smoothing = match s {
                SmoothingConfig::None => Smoothing::None,
                SmoothingConfig::CatmullRom => Smoothing::CatmullRom,
                SmoothingConfig::BSpline => Smoothing::BSpline,
            };
        }
        if let Some(n) = self.samples_per_segment {
            if n == 0 {
                return Err(CliError::Config(
                    "samples_per_segment must be at least 1".into(),
                ));
            }
            style.samples_per_segment = n;
        }
        if let Some(w) = self.stroke_width {
            if !(w > 0.0) {
                return Err(CliError::Config("stroke_width must be positive".into()));
            }
            style.stroke_width = w;
        }
        if let Some(c) = self.color {
            style.color = Rgb::new(c[0], c[1], c[2]);
        }
        if let Some(b) = self.depth_bias {
            style.depth_bias = b;
        }
        Ok(style)
    }
}

/// A convolution kernel, either by name or as an explicit 3x3 matrix.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum KernelConfig {
    Named(String),
    Matrix([[f64; 3]; 3]),
}

impl KernelConfig {
    pub fn to_operator(&self) -> Result<ImageOperator, CliError> {
        match self {
            KernelConfig::Named(name) => match name.as_str() {
                "identity" => Ok(ImageOperator::Kernel(KERNEL_IDENTITY)),
                "sobel-x" => Ok(ImageOperator::Kernel(KERNEL_SOBEL_X)),
                "sobel-y" => Ok(ImageOperator::Kernel(KERNEL_SOBEL_Y)),
                other => Err(CliError::Config(format!(
                    "unknown kernel {other:?}; expected identity, sobel-x, sobel-y, or a 3x3 matrix"
                ))),
            },
            KernelConfig::Matrix(m) => Ok(ImageOperator::Kernel(*m)),
        }
    }
}

/// One pass in an explicit pass graph. `target` is a texture name, or absent
/// for the screen.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PassConfig {
    Surface {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        target: Option<String>,
    },
    Lines {
        /// Index into the extracted contour sets.
        contours: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        target: Option<String>,
    },
    Image {
        /// Texture name to read.
        input: String,
        kernel: KernelConfig,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        target: Option<String>,
    },
    Group {
        passes: Vec<PassConfig>,
    },
}

impl PassConfig {
    pub fn to_pass(
        &self,
        shader: &ShaderConfig,
        options: &RasterOptions,
        style: &LineStyle,
    ) -> Result<RenderPass, CliError> {
        let target_of = |t: &Option<String>| match t {
            Some(name) => PassTarget::Texture(name.clone()),
            None => PassTarget::Screen,
        };
        match self {
            PassConfig::Surface { target } => Ok(RenderPass {
                kind: PassKind::Surface {
                    shader: shader.clone(),
                    options: *options,
                },
                target: target_of(target),
            }),
            PassConfig::Lines { contours, target } => Ok(RenderPass {
                kind: PassKind::Lines {
                    contours: *contours,
                    style: style.clone(),
                },
                target: target_of(target),
            }),
            PassConfig::Image {
                input,
                kernel,
                target,
            } => Ok(RenderPass {
                kind: PassKind::Image {
                    input: input.clone(),
                    operator: kernel.to_operator()?,
                },
                target: target_of(target),
            }),
            PassConfig::Group { passes } => Ok(RenderPass {
                kind: PassKind::Group(
                    passes
                        .iter()
                        .map(|p| p.to_pass(shader, options, style))
                        .collect::<Result<Vec<_>, _>>()?,
                ),
                target: PassTarget::Screen,
            }),
        }
    }
}

/// Parse the camera spec string.
///
/// Required keys: `eye=x,y,z`, `target=x,y,z`, `size=WxH`. Optional:
/// `up=x,y,z` (default: +y, or +z for near-vertical views), `fov=degrees`
/// (perspective, default 50) or `ortho=halfheight` (orthographic; mutually
/// exclusive with `fov`), `near=` and `far=` clip distances (defaults 0.1
/// and 100).
pub fn parse_camera(spec: &str) -> Result<Camera, CliError> {
    let bad = |why: String| CliError::Config(format!("camera spec: {why}"));
    let mut eye = None;
    let mut target = None;
    let mut up = None;
    let mut fov = None;
    let mut ortho = None;
    let mut near = 0.1;
    let mut far = 100.0;
    let mut size = None;
    for part in spec.split(';') {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        let (key, value) = part
            .split_once('=')
            .ok_or_else(|| bad(format!("expected key=value, got {part:?}")))?;
        let value = value.trim();
        match key.trim() {
            "eye" => eye = Some(parse_point3(value)?),
            "target" => target = Some(parse_point3(value)?),
            "up" => up = Some(parse_vector3(value)?),
            "fov" => fov = Some(parse_number(value)?),
            "ortho" => ortho = Some(parse_number(value)?),
            "near" => near = parse_number(value)?,
            "far" => far = parse_number(value)?,
            "size" => {
                let (w, h) = value
                    .split_once(['x', 'X'])
                    .ok_or_else(|| bad(format!("size must be WxH, got {value:?}")))?;
                let parse_dim = |s: &str| {
                    s.trim()
                        .parse::<u32>()
                        .map_err(|_| bad(format!("bad viewport dimension {s:?}")))
                };
                size = Some((parse_dim(w)?, parse_dim(h)?));
            }
            other => return Err(bad(format!("unknown key {other:?}"))),
        }
    }
    let eye = eye.ok_or_else(|| bad("missing eye=x,y,z".into()))?;
    let target = target.ok_or_else(|| bad("missing target=x,y,z".into()))?;
    let (width, height) = size.ok_or_else(|| bad("missing size=WxH".into()))?;
    if fov.is_some() && ortho.is_some() {
        return Err(bad("fov and ortho are mutually exclusive".into()));
    }
    let projection = match ortho {
        Some(half_height) => Projection::Orthographic {
            half_height,
            near,
            far,
        },
        None => Projection::Perspective {
            fov_y_degrees: fov.unwrap_or(50.0),
            near,
            far,
        },
    };
    let up = up.unwrap_or_else(|| {
        let gaze = target - eye;
        let vertical = gaze.norm() > 0.0 && (gaze.y / gaze.norm()).abs() > 0.999;
        if vertical {
            Vector3::z()
        } else {
            Vector3::y()
        }
    });
    Camera::new(eye, target, up, projection, width, height)
        .map_err(|e| CliError::Config(e.to_string()))
}

fn parse_number(s: &str) -> Result<f64, CliError> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| CliError::Config(format!("camera spec: bad number {s:?}")))
}

fn parse_components(s: &str) -> Result<[f64; 3], CliError> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 3 {
        return Err(CliError::Config(format!(
            "camera spec: expected x,y,z, got {s:?}"
        )));
    }
    Ok([
        parse_number(parts[0])?,
        parse_number(parts[1])?,
        parse_number(parts[2])?,
    ])
}

fn parse_point3(s: &str) -> Result<Point3<f64>, CliError> {
    let [x, y, z] = parse_components(s)?;
    Ok(Point3::new(x, y, z))
}

fn parse_vector3(s: &str) -> Result<Vector3<f64>, CliError> {
    let [x, y, z] = parse_components(s)?;
    Ok(Vector3::new(x, y, z))
}

/// Reject output paths whose extension does not match the command.
pub fn require_extension(path: &Path, allowed: &[&str]) -> Result<(), CliError> {
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase);
    match ext {
        Some(e) if allowed.contains(&e.as_str()) => Ok(()),
        _ => Err(CliError::Config(format!(
            "output {:?} must have extension {}",
            path.display(),
            allowed.join(" or ")
        ))),
    }
}
