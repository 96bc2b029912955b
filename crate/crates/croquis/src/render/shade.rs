//! Stylized per-pixel shading: Phong, Gooch cool–warm, and toon.
//!
//! Shading works in linear RGB with `f64` channels ([`Vector3<f64>`]);
//! quantization to 8 bits happens only at image export. The rasterizer
//! evaluates one of these functions per covered pixel with the interpolated
//! normal, so swapping the [`ShaderConfig`] variant swaps the style without
//! touching geometry.

use nalgebra::Vector3;

use crate::mesh::{Material, Rgb};
use crate::render::RenderError;

/// Widen an 8-bit-oriented [`Rgb`] to the `f64` linear color space used
/// during shading.
pub fn linear_color(rgb: Rgb) -> Vector3<f64> {
    Vector3::new(f64::from(rgb.r), f64::from(rgb.g), f64::from(rgb.b))
}

fn clamp01(c: Vector3<f64>) -> Vector3<f64> {
    c.map(|v| v.clamp(0.0, 1.0))
}

/// Which shading model a surface pass evaluates, with its parameters.
#[derive(Debug, Clone)]
pub enum ShaderConfig {
    Phong(PhongConfig),
    Gooch(GoochConfig),
    Toon(ToonConfig),
}

impl ShaderConfig {
    /// The light direction the variant carries (unit length not enforced on
    /// the field; normalized at use).
    pub fn light_dir(&self) -> Vector3<f64> {
        match self {
            ShaderConfig::Phong(c) => c.light_dir,
            ShaderConfig::Gooch(c) => c.light_dir,
            ShaderConfig::Toon(c) => c.light_dir,
        }
    }

    /// Check variant-specific parameter ranges.
    pub fn validate(&self) -> Result<(), RenderError> {
        let invalid = |why: String| Err(RenderError::InvalidShader(why));
        match self {
            ShaderConfig::Phong(c) => {
                if c.light_dir.norm() < 1e-12 {
                    return invalid("phong light direction is zero".to_string());
                }
            }
            ShaderConfig::Gooch(c) => {
                if !(0.0..=1.0).contains(&c.alpha) || !(0.0..=1.0).contains(&c.beta) {
                    return invalid(format!(
                        "gooch alpha/beta must be in [0, 1], got {} and {}",
                        c.alpha, c.beta
                    ));
                }
                if c.light_dir.norm() < 1e-12 {
                    return invalid("gooch light direction is zero".to_string());
                }
            }
            ShaderConfig::Toon(c) => {
                if c.levels < 2 {
                    return invalid(format!("toon needs at least 2 levels, got {}", c.levels));
                }
                if c.light_dir.norm() < 1e-12 {
                    return invalid("toon light direction is zero".to_string());
                }
            }
        }
        Ok(())
    }

    /// Evaluate the variant at one surface sample. `n`, `l`, `v` are unit.
    pub(crate) fn shade(
        &self,
        n: &Vector3<f64>,
        l: &Vector3<f64>,
        v: &Vector3<f64>,
    ) -> Vector3<f64> {
        match self {
            ShaderConfig::Phong(c) => shade_phong(c, n, l, v),
            ShaderConfig::Gooch(c) => shade_gooch(c, n.dot(l)),
            ShaderConfig::Toon(c) => shade_toon(c, n.dot(l)),
        }
    }
}

/// Classic Phong lighting driven by the surface [`Material`].
#[derive(Debug, Clone)]
pub struct PhongConfig {
    pub material: Material,
    /// Unit vector pointing from the surface toward the light.
    pub light_dir: Vector3<f64>,
    /// Light color multiplying the diffuse and specular terms.
    pub light_color: Vector3<f64>,
    /// Ambient light color multiplying the material's ambient color.
    pub ambient_light: Vector3<f64>,
}

impl Default for PhongConfig {
    fn default() -> Self {
        PhongConfig {
            material: Material::default(),
            light_dir: Vector3::z(),
            light_color: Vector3::new(1.0, 1.0, 1.0),
            ambient_light: Vector3::new(1.0, 1.0, 1.0),
        }
    }
}

/// Gooch cool–warm shading: lit areas blend toward a warm tone, unlit
/// toward a cool one, leaving the whole surface readable.
#[derive(Debug, Clone)]
pub struct GoochConfig {
    /// Object diffuse color blended into both tones.
    pub k_d: Vector3<f64>,
    /// Cool base color (default `(0, 0, 0.4)`).
    pub k_blue: Vector3<f64>,
    /// Warm base color (default `(0.4, 0.4, 0)`).
    pub k_yellow: Vector3<f64>,
    /// How much of `k_d` tints the cool tone, in [0, 1] (default 0.2).
    pub alpha: f64,
    /// How much of `k_d` tints the warm tone, in [0, 1] (default 0.6).
    pub beta: f64,
    pub light_dir: Vector3<f64>,
}

impl Default for GoochConfig {
    fn default() -> Self {
        GoochConfig {
            k_d: Vector3::new(0.5, 0.5, 0.5),
            k_blue: Vector3::new(0.0, 0.0, 0.4),
            k_yellow: Vector3::new(0.4, 0.4, 0.0),
            alpha: 0.2,
            beta: 0.6,
            light_dir: Vector3::z(),
        }
    }
}

/// Toon (cel) shading: diffuse intensity quantized to a few flat bands.
#[derive(Debug, Clone)]
pub struct ToonConfig {
    /// Number of intensity bands, at least 2.
    pub levels: u32,
    /// Color of the brightest band.
    pub base: Vector3<f64>,
    pub light_dir: Vector3<f64>,
}

impl Default for ToonConfig {
    fn default() -> Self {
        ToonConfig {
            levels: 4,
            base: Vector3::new(0.8, 0.8, 0.8),
            light_dir: Vector3::z(),
        }
    }
}

/// Phong lighting at one sample: `ambient + diffuse·max(n·l, 0) +
/// specular·max(r·v, 0)^shininess`, with `r` the light direction reflected
/// about the normal. All of `n`, `l`, `v` are unit vectors, `v` pointing
/// toward the viewer. Samples facing away from the light (`n·l ≤ 0`) get
/// the ambient term only. The result is clamped to [0, 1].
pub fn shade_phong(
    config: &PhongConfig,
    n: &Vector3<f64>,
    l: &Vector3<f64>,
    v: &Vector3<f64>,
) -> Vector3<f64> {
    let m = &config.material;
    let mut c = linear_color(m.ambient).component_mul(&config.ambient_light);
    let ndotl = n.dot(l);
    if ndotl > 0.0 {
        c += linear_color(m.diffuse).component_mul(&config.light_color) * ndotl;
        let r = 2.0 * ndotl * n - l;
        let rdotv = r.dot(v).max(0.0);
        if rdotv > 0.0 {
            c += linear_color(m.specular).component_mul(&config.light_color)
                * rdotv.powf(f64::from(m.shininess));
        }
    }
    clamp01(c)
}

/// Gooch cool–warm shading at one sample: `t·k_warm + (1−t)·k_cool` with
/// `t = (1 + n·l)/2`, `k_cool = k_blue + α·k_d`, `k_warm = k_yellow + β·k_d`.
/// Fully lit (`n·l = 1`) gives `k_warm` exactly and fully unlit gives
/// `k_cool` exactly. The result is clamped to [0, 1].
pub fn shade_gooch(config: &GoochConfig, ndotl: f64) -> Vector3<f64> {
    let k_cool = config.k_blue + config.alpha * config.k_d;
    let k_warm = config.k_yellow + config.beta * config.k_d;
    let t = (1.0 + ndotl) / 2.0;
    clamp01(t * k_warm + (1.0 - t) * k_cool)
}

/// Toon shading at one sample: the diffuse intensity `d = max(n·l, 0)` is
/// quantized to `floor(d·levels) / (levels − 1)`, clamped to 1, and scales
/// the base color — so a sweep over `d ∈ [0, 1]` produces at most `levels`
/// distinct intensities, from 0 up to the base color itself.
pub fn shade_toon(config: &ToonConfig, ndotl: f64) -> Vector3<f64> {
    let d = ndotl.max(0.0);
    let levels = f64::from(config.levels.max(2));
    let q = ((d * levels).floor() / (levels - 1.0)).min(1.0);
    clamp01(q * config.base)
}
