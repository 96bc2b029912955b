//! Command-line driver for the croquis toolkit.
//!
//! Five subcommands wire the library into batch workflows:
//!
//! * `render` — draw a single frame (surface shading plus extracted line
//!   work) to a PPM image and/or an SVG overlay.
//! * `animate` — sample an animated asset over a time range and write one
//!   PPM per frame, re-extracting contours from every deformed state.
//! * `curvature` — estimate principal curvatures and their view-independent
//!   derivative tensor, written as CSV.
//! * `contours` — extract contour polylines and serialize them as JSON or
//!   SVG without rasterizing the surface.
//! * `lapped` — grow a lapped patch cover with local parameterizations,
//!   written as JSON plus an optional UV-atlas debug image.
//!
//! Options come from an optional JSON config file (`--config`) merged with
//! command-line flags; flags win. Every command is deterministic: the same
//! inputs always produce bit-identical output files.
//!
//! Exit codes: `2` for configuration or content-parse errors, `3` for file
//! I/O failures, and `4` for numeric failures.

mod commands;
mod config;

use std::fmt;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use config::{ContourConfig, RenderConfig, StyleConfig};

/// A command failure carrying its documented exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags, bad config, or unparseable/invalid input content (exit 2).
    Config(String),
    /// Failure to read or write a file (exit 3).
    Io(String),
    /// A numeric method failed to produce a usable answer (exit 4).
    Numeric(String),
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Io(_) => 3,
            CliError::Numeric(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) | CliError::Io(m) | CliError::Numeric(m) => f.write_str(m),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> CliError {
        CliError::Io(e.to_string())
    }
}

impl From<croquis::io::IoError> for CliError {
    fn from(e: croquis::io::IoError) -> CliError {
        match e {
            // Only OS-level failures count as I/O; malformed file *content*
            // is a configuration problem (the user pointed at a bad file).
            croquis::io::IoError::Io(inner) => CliError::Io(inner.to_string()),
            other => CliError::Config(other.to_string()),
        }
    }
}

impl From<croquis::mesh::MeshError> for CliError {
    fn from(e: croquis::mesh::MeshError) -> CliError {
        CliError::Config(e.to_string())
    }
}

impl From<croquis::anim::AnimError> for CliError {
    fn from(e: croquis::anim::AnimError) -> CliError {
        CliError::Config(e.to_string())
    }
}

impl From<croquis::curvature::CurvatureError> for CliError {
    fn from(e: croquis::curvature::CurvatureError) -> CliError {
        CliError::Config(e.to_string())
    }
}

impl From<croquis::contours::ContourError> for CliError {
    fn from(e: croquis::contours::ContourError) -> CliError {
        CliError::Config(e.to_string())
    }
}

impl From<croquis::render::RenderError> for CliError {
    fn from(e: croquis::render::RenderError) -> CliError {
        CliError::Config(e.to_string())
    }
}

impl From<croquis::lapped::LappedError> for CliError {
    fn from(e: croquis::lapped::LappedError) -> CliError {
        match e {
            croquis::lapped::LappedError::SingularSystem(_) => CliError::Numeric(e.to_string()),
            other => CliError::Config(other.to_string()),
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "croquis", version, about = "Headless line-drawing renderer")]
struct Cli {
    /// JSON config file; command-line flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Enable debug logging on stderr.
    #[arg(long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

/// Flags shared by every command that loads a mesh and aims a camera.
#[derive(Args, Debug)]
struct SceneArgs {
    /// Input mesh file (.obj, .md2, .zskin).
    #[arg(long)]
    input: Option<PathBuf>,
    /// Camera spec: "eye=x,y,z;target=x,y,z;size=WxH" plus optional
    /// "up=x,y,z", "fov=degrees" or "ortho=halfheight", "near=n", "far=f".
    #[arg(long)]
    camera: Option<String>,
    /// Extract silhouette contours.
    #[arg(long)]
    silhouette: bool,
    /// Extract suggestive contours (curvature is computed automatically).
    #[arg(long)]
    suggestive: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Render a single frame to PPM and/or SVG.
    Render {
        #[command(flatten)]
        scene: SceneArgs,
        /// Shading style; parameters come from the config file.
        #[arg(long, value_parser = ["phong", "gooch", "toon"])]
        style: Option<String>,
        /// Animation clip to sample (animated inputs only).
        #[arg(long)]
        animation: Option<String>,
        /// Animation time to sample (animated inputs only).
        #[arg(long)]
        time: Option<f64>,
        /// Output PPM image path.
        #[arg(long)]
        output: Option<PathBuf>,
        /// Output SVG path for the extracted contours.
        #[arg(long)]
        svg_output: Option<PathBuf>,
        /// Draw triangle edges instead of filled faces.
        #[arg(long)]
        wireframe: bool,
    },
    /// Render an animated asset as numbered PPM frames.
    Animate {
        #[command(flatten)]
        scene: SceneArgs,
        /// Shading style; parameters come from the config file.
        #[arg(long, value_parser = ["phong", "gooch", "toon"])]
        style: Option<String>,
        /// Animation clip to sample.
        #[arg(long)]
        animation: Option<String>,
        /// First sampled time (defaults to the clip start).
        #[arg(long)]
        start: Option<f64>,
        /// Last sampled time (defaults to the clip end).
        #[arg(long)]
        end: Option<f64>,
        /// Number of frames to write (evenly spaced, at least 1).
        #[arg(long)]
        frames: Option<u32>,
        /// Output directory for frame_0000.ppm, frame_0001.ppm, ...
        #[arg(long)]
        output: Option<PathBuf>,
        /// Draw triangle edges instead of filled faces.
        #[arg(long)]
        wireframe: bool,
    },
    /// Estimate principal curvatures and write them as CSV.
    Curvature {
        /// Input mesh file.
        #[arg(long)]
        input: Option<PathBuf>,
        /// Output CSV path.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Extract contour polylines and write them as JSON or SVG.
    Contours {
        #[command(flatten)]
        scene: SceneArgs,
        /// Animation clip to sample (animated inputs only).
        #[arg(long)]
        animation: Option<String>,
        /// Animation time to sample (animated inputs only).
        #[arg(long)]
        time: Option<f64>,
        /// Output path (.json or .svg).
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Cover a surface with lapped parameterized patches.
    Lapped {
        /// Input mesh file.
        #[arg(long)]
        input: Option<PathBuf>,
        /// Patch radius in world units.
        #[arg(long)]
        radius: Option<f64>,
        /// Tangent-field smoothing iterations (default 3).
        #[arg(long)]
        iterations: Option<u32>,
        /// Output JSON path.
        #[arg(long)]
        output: Option<PathBuf>,
        /// Optional UV-atlas debug image (.ppm).
        #[arg(long)]
        atlas: Option<PathBuf>,
    },
}

fn main() {
    let cli = Cli::parse();
    env_logger::Builder::new()
        .filter_level(if cli.verbose {
            log::LevelFilter::Debug
        } else {
            log::LevelFilter::Warn
        })
        .init();
    if let Err(e) = run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut cfg = match &cli.config {
        Some(path) => RenderConfig::load(path)?,
        None => RenderConfig::default(),
    };
    match cli.command {
        Command::Render {
            scene,
            style,
            animation,
            time,
            output,
            svg_output,
            wireframe,
        } => {
            merge_scene(&mut cfg, scene);
            merge_style(&mut cfg, style.as_deref())?;
            merge(&mut cfg.animation, animation);
            merge(&mut cfg.time, time);
            merge(&mut cfg.output, output);
            merge(&mut cfg.svg_output, svg_output);
            if wireframe {
                cfg.wireframe = Some(true);
            }
            commands::render(&cfg)
        }
        Command::Animate {
            scene,
            style,
            animation,
            start,
            end,
            frames,
            output,
            wireframe,
        } => {
            merge_scene(&mut cfg, scene);
            merge_style(&mut cfg, style.as_deref())?;
            merge(&mut cfg.animation, animation);
            merge(&mut cfg.start, start);
            merge(&mut cfg.end, end);
            merge(&mut cfg.frames, frames);
            merge(&mut cfg.output, output);
            if wireframe {
                cfg.wireframe = Some(true);
            }
            commands::animate(&cfg)
        }
        Command::Curvature { input, output } => {
            merge(&mut cfg.input, input);
            merge(&mut cfg.output, output);
            commands::curvature(&cfg)
        }
        Command::Contours {
            scene,
            animation,
            time,
            output,
        } => {
            merge_scene(&mut cfg, scene);
            merge(&mut cfg.animation, animation);
            merge(&mut cfg.time, time);
            merge(&mut cfg.output, output);
            commands::contours(&cfg)
        }
        Command::Lapped {
            input,
            radius,
            iterations,
            output,
            atlas,
        } => {
            merge(&mut cfg.input, input);
            merge(&mut cfg.radius, radius);
            merge(&mut cfg.iterations, iterations);
            merge(&mut cfg.output, output);
            merge(&mut cfg.atlas, atlas);
            commands::lapped(&cfg)
        }
    }
}

/// A flag that was given replaces the config-file value.
fn merge<T>(slot: &mut Option<T>, flag: Option<T>) {
    if flag.is_some() {
        *slot = flag;
    }
}

fn merge_scene(cfg: &mut RenderConfig, scene: SceneArgs) {
    merge(&mut cfg.input, scene.input);
    merge(&mut cfg.camera, scene.camera);
    if scene.silhouette && !cfg.contours.iter().any(ContourConfig::is_silhouette) {
        cfg.contours.push(ContourConfig::Silhouette);
    }
    if scene.suggestive && !cfg.contours.iter().any(ContourConfig::is_suggestive) {
        cfg.contours.push(ContourConfig::Suggestive {
            derivative_threshold: None,
            silhouette_degrees: None,
        });
    }
}

/// `--style` switches the shading kind but keeps config-file parameters when
/// the kind already matches.
fn merge_style(cfg: &mut RenderConfig, flag: Option<&str>) -> Result<(), CliError> {
    let Some(name) = flag else { return Ok(()) };
    let same_kind = matches!(
        (&cfg.style, name),
        (Some(StyleConfig::Phong { .. }), "phong")
            | (Some(StyleConfig::Gooch { .. }), "gooch")
            | (Some(StyleConfig::Toon { .. }), "toon")
    );
    if !same_kind {
        cfg.style = Some(StyleConfig::of_kind(name)?);
    }
    Ok(())
}
