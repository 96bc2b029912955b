//! Headless software rendering: cameras, z-buffered rasterization, stylized
//! shading, composable render passes, image-space operators, and line drawing
//! with spline smoothing.
//!
//! Everything renders into plain [`Framebuffer`]s in memory — there is no
//! window or GPU involved — so output is deterministic and directly testable.
//! Raster images leave the crate through the PPM writer in [`crate::io`];
//! line drawings can also be exported as SVG documents.

mod lines;
mod passes;
mod raster;
mod shade;
pub(crate) mod spline;

pub use lines::{export_svg, render_lines};
pub use passes::{
    convolve3x3, run_pass_graph, ImageOperator, PassGraph, PassKind, PassTarget, RenderPass,
    Scene, KERNEL_IDENTITY, KERNEL_SOBEL_X, KERNEL_SOBEL_Y,
};
pub use raster::{rasterize_surface, RasterOptions};
pub use shade::{
    linear_color, shade_gooch, shade_phong, shade_toon, GoochConfig, PhongConfig, ShaderConfig,
    ToonConfig,
};
pub use spline::{smooth_polyline, LineStyle, Smoothing};

use nalgebra::{Point3, Vector3};

use crate::contours::Eye;
use crate::io::ImageBuffer;

/// Errors reported by the rendering operations.
#[derive(Debug, thiserror::Error)]
pub enum RenderError {
    /// A render target's dimensions do not match the camera viewport.
    #[error("framebuffer is {got_width}x{got_height} but the viewport is {want_width}x{want_height}")]
    DimensionMismatch {
        want_width: u32,
        want_height: u32,
        got_width: u32,
        got_height: u32,
    },
    /// A pass reads a texture slot that no earlier pass has written.
    #[error("pass reads texture slot {0:?} before any pass writes it")]
    UnboundTexture(String),
    /// A polyline operation needs at least two points.
    #[error("polyline has {0} points; at least 2 are required")]
    TooFewPoints(usize),
    /// A camera parameter violates its invariant.
    #[error("invalid camera: {0}")]
    InvalidCamera(String),
    /// A shader parameter violates its invariant.
    #[error("invalid shader config: {0}")]
    InvalidShader(String),
    /// A pass graph violates a structural invariant.
    #[error("invalid pass graph: {0}")]
    InvalidGraph(String),
}

/// Perspective or orthographic projection parameters.
///
/// `near`/`far` bound the depth range mapped to `[0, 1]`. Perspective
/// requires `near > 0`; both require `near < far`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Projection {
    Perspective {
        /// Vertical field of view in degrees, in (0, 180).
        fov_y_degrees: f64,
        near: f64,
        far: f64,
    },
    Orthographic {
        /// Half the world-space height visible at the target; width follows
        /// from the viewport aspect ratio.
        half_height: f64,
        near: f64,
        far: f64,
    },
}

/// A pinhole or orthographic camera with a pixel viewport.
///
/// The look-at basis is built once at construction: `forward` points from
/// the eye toward the target, `right` completes a right-handed frame with
/// the (re-orthogonalized) up vector. Screen coordinates have the origin at
/// the top-left pixel corner, `x` growing right and `y` growing down; the
/// center of pixel `(i, j)` is at `(i + 0.5, j + 0.5)`.
#[derive(Debug, Clone)]
pub struct Camera {
    eye: Point3<f64>,
    target: Point3<f64>,
    up: Vector3<f64>,
    projection: Projection,
    width: u32,
    height: u32,
    right: Vector3<f64>,
    true_up: Vector3<f64>,
    forward: Vector3<f64>,
}

/// A point mapped through a [`Camera`]: pixel coordinates, a normalized
/// depth (0 at the near plane, 1 at the far plane), and whether the point
/// lies on the camera side of the near plane. When `clipped` is set the
/// pixel coordinates are not meaningful.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectedPoint {
    pub x: f64,
    pub y: f64,
    pub depth: f64,
    pub clipped: bool,
}

impl Camera {
    /// A camera with an explicit basis and projection.
    pub fn new(
        eye: Point3<f64>,
        target: Point3<f64>,
        up: Vector3<f64>,
        projection: Projection,
        width: u32,
        height: u32,
    ) -> Result<Camera, RenderError> {
        let invalid = |why: &str| Err(RenderError::InvalidCamera(why.to_string()));
        if width == 0 || height == 0 {
            return invalid("viewport must be at least 1x1");
        }
        let gaze = target - eye;
        if gaze.norm() < 1e-12 {
            return invalid("eye and target coincide");
        }
        let forward = gaze.normalize();
        if up.norm() < 1e-12 {
            return invalid("up vector is zero");
        }
        let right = forward.cross(&up.normalize());
        if right.norm() < 1e-9 {
            return invalid("up vector is parallel to the view direction");
        }
        let right = right.normalize();
        let true_up = right.cross(&forward);
        match projection {
            Projection::Perspective {
                fov_y_degrees,
                near,
                far,
            } => {
                if !(fov_y_degrees > 0.0 && fov_y_degrees < 180.0) {
                    return invalid("perspective field of view must be in (0, 180) degrees");
                }
                if near <= 0.0 {
                    return invalid("perspective near plane must be positive");
                }
                if near >= far {
                    return invalid("near plane must be closer than the far plane");
                }
            }
            Projection::Orthographic {
                half_height, near, far,
            } => {
                if half_height <= 0.0 {
                    return invalid("orthographic half-height must be positive");
                }
                if near >= far {
                    return invalid("near plane must be closer than the far plane");
                }
            }
        }
        Ok(Camera {
            eye,
            target,
            up,
            projection,
            width,
            height,
            right,
            true_up,
            forward,
        })
    }

    /// A perspective camera with default clip planes (near 0.1, far 100) and
    /// an automatic up vector: +y, or +z when the view runs along the y axis.
    pub fn perspective(
        eye: Point3<f64>,
        target: Point3<f64>,
        fov_y_degrees: f64,
        width: u32,
        height: u32,
    ) -> Result<Camera, RenderError> {
        Camera::new(
            eye,
            target,
            auto_up(eye, target),
            Projection::Perspective {
                fov_y_degrees,
                near: 0.1,
                far: 100.0,
            },
            width,
            height,
        )
    }

    /// An orthographic camera with default clip planes (near 0.1, far 100)
    /// and the same automatic up vector as [`Camera::perspective`].
    pub fn orthographic(
        eye: Point3<f64>,
        target: Point3<f64>,
        half_height: f64,
        width: u32,
        height: u32,
    ) -> Result<Camera, RenderError> {
        Camera::new(
            eye,
            target,
            auto_up(eye, target),
            Projection::Orthographic {
                half_height,
                near: 0.1,
                far: 100.0,
            },
            width,
            height,
        )
    }

    /// The same camera with replaced near/far clip planes.
    pub fn with_clip(self, near: f64, far: f64) -> Result<Camera, RenderError> {
        let projection = match self.projection {
            Projection::Perspective { fov_y_degrees, .. } => Projection::Perspective {
                fov_y_degrees,
                near,
                far,
            },
            Projection::Orthographic { half_height, .. } => Projection::Orthographic {
                half_height,
                near,
                far,
            },
        };
        Camera::new(self.eye, self.target, self.up, projection, self.width, self.height)
    }

    pub fn eye(&self) -> Point3<f64> {
        self.eye
    }

    pub fn target(&self) -> Point3<f64> {
        self.target
    }

    pub fn projection(&self) -> Projection {
        self.projection
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    /// Unit vector from the eye toward the target.
    pub fn forward(&self) -> Vector3<f64> {
        self.forward
    }

    /// The viewpoint in the form contour extraction expects.
    pub fn contour_eye(&self) -> Eye {
        match self.projection {
            Projection::Perspective { .. } => Eye::Perspective(self.eye),
            Projection::Orthographic { .. } => Eye::orthographic(-self.forward),
        }
    }

    /// Map a world-space point to pixel coordinates and normalized depth.
    ///
    /// Depth is 0 at the near plane and 1 at the far plane: hyperbolic in
    /// camera-space z for perspective (affine in 1/z, so screen-linear depth
    /// interpolation is exact), linear for orthographic. Points closer than
    /// the near plane (or behind the camera) come back `clipped`.
    pub fn project(&self, p: &Point3<f64>) -> ProjectedPoint {
        let d = p - self.eye;
        let x = d.dot(&self.right);
        let y = d.dot(&self.true_up);
        let z = d.dot(&self.forward);
        let aspect = self.width as f64 / self.height as f64;
        let (ndc_x, ndc_y, depth, clipped) = match self.projection {
            Projection::Perspective {
                fov_y_degrees,
                near,
                far,
            } => {
                let clipped = z < near;
                // Clipped points still get coordinates from the raw z when
                // possible; the flag is authoritative.
                let zs = if z == 0.0 { f64::MIN_POSITIVE } else { z };
                let tan_half = (fov_y_degrees.to_radians() / 2.0).tan();
                let depth = (1.0 / near - 1.0 / zs) / (1.0 / near - 1.0 / far);
                (
                    x / (zs * tan_half * aspect),
                    y / (zs * tan_half),
                    depth,
                    clipped,
                )
            }
            Projection::Orthographic {
                half_height,
                near,
                far,
            } => (
                x / (half_height * aspect),
                y / half_height,
                (z - near) / (far - near),
                z < near,
            ),
        };
        ProjectedPoint {
            x: (ndc_x + 1.0) * 0.5 * self.width as f64,
            y: (1.0 - ndc_y) * 0.5 * self.height as f64,
            depth,
            clipped,
        }
    }
}

fn auto_up(eye: Point3<f64>, target: Point3<f64>) -> Vector3<f64> {
    let gaze = target - eye;
    if gaze.norm() > 0.0 && gaze.normalize().y.abs() > 0.999 {
        Vector3::z()
    } else {
        Vector3::y()
    }
}

/// An in-memory render target: RGBA float color plus a float depth buffer.
///
/// Color starts transparent black and depth at `+∞`. Pixels are addressed
/// by column `x` and row `y` with the origin at the top left, matching
/// [`Camera`] screen coordinates and [`ImageBuffer`] layout.
#[derive(Debug, Clone, PartialEq)]
pub struct Framebuffer {
    width: u32,
    height: u32,
    color: Vec<[f32; 4]>,
    depth: Vec<f64>,
}

impl Framebuffer {
    pub fn new(width: u32, height: u32) -> Framebuffer {
        let n = width as usize * height as usize;
        Framebuffer {
            width,
            height,
            color: vec![[0.0; 4]; n],
            depth: vec![f64::INFINITY; n],
        }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    /// Reset every pixel to `color` and every depth to `+∞`.
    pub fn clear(&mut self, color: [f32; 4]) {
        self.color.fill(color);
        self.depth.fill(f64::INFINITY);
    }

    fn index(&self, x: u32, y: u32) -> usize {
        debug_assert!(x < self.width && y < self.height);
        y as usize * self.width as usize + x as usize
    }

    pub fn color_at(&self, x: u32, y: u32) -> [f32; 4] {
        self.color[self.index(x, y)]
    }

    pub fn depth_at(&self, x: u32, y: u32) -> f64 {
        self.depth[self.index(x, y)]
    }

    pub(crate) fn set_color(&mut self, x: u32, y: u32, color: [f32; 4]) {
        let i = self.index(x, y);
        self.color[i] = color;
    }

    pub(crate) fn set_depth(&mut self, x: u32, y: u32, depth: f64) {
        let i = self.index(x, y);
        self.depth[i] = depth;
    }

    /// Quantize the color buffer to an 8-bit RGB image (alpha dropped).
    /// Channels clamp to [0, 1] and round half up, so quantization happens
    /// exactly once, at export.
    pub fn to_image(&self) -> ImageBuffer {
        let mut data = Vec::with_capacity(self.color.len() * 3);
        for px in &self.color {
            for c in &px[..3] {
                data.push((f64::from(*c).clamp(0.0, 1.0) * 255.0).round() as u8);
            }
        }
        ImageBuffer::from_raw(self.width as usize, self.height as usize, 3, data)
            .expect("framebuffer dimensions are consistent by construction")
    }

    /// Check this buffer against a camera viewport.
    pub(crate) fn matches(&self, camera: &Camera) -> Result<(), RenderError> {
        if self.width != camera.width() || self.height != camera.height() {
            return Err(RenderError::DimensionMismatch {
                want_width: camera.width(),
                want_height: camera.height(),
                got_width: self.width,
                got_height: self.height,
            });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn basic_perspective() -> Camera {
        Camera::perspective(Point3::new(0.0, 0.0, 3.0), Point3::origin(), 90.0, 100, 100)
            .unwrap()
    }

    #[test]
    fn on_axis_point_projects_to_the_viewport_center() {
        let cam = basic_perspective();
        let p = cam.project(&Point3::origin());
        assert_relative_eq!(p.x, 50.0, epsilon = 1e-12);
        assert_relative_eq!(p.y, 50.0, epsilon = 1e-12);
        assert!(!p.clipped);
        assert!(p.depth > 0.0 && p.depth < 1.0, "depth {}", p.depth);
    }

    #[test]
    fn points_inside_the_near_plane_are_clipped() {
        let cam = basic_perspective();
        // In front of the eye but at half the near distance.
        let p = cam.project(&Point3::new(0.0, 0.0, 3.0 - 0.05));
        assert!(p.clipped);
        let behind = cam.project(&Point3::new(0.0, 0.0, 4.0));
        assert!(behind.clipped);
    }

    #[test]
    fn orthographic_half_height_maps_to_the_top_row() {
        let cam = Camera::orthographic(
            Point3::new(0.0, 0.0, 3.0),
            Point3::origin(),
            1.0,
            100,
            100,
        )
        .unwrap();
        let p = cam.project(&Point3::new(0.0, 1.0, 0.0));
        assert_relative_eq!(p.y, 0.0, epsilon = 1e-12);
        assert_relative_eq!(p.x, 50.0, epsilon = 1e-12);
        assert!(!p.clipped);
    }

    #[test]
    fn depth_is_zero_at_near_and_one_at_far() {
        let eye = Point3::new(0.0, 0.0, 3.0);
        for cam in [
            basic_perspective(),
            Camera::orthographic(eye, Point3::origin(), 1.0, 100, 100).unwrap(),
        ] {
            let near = cam.project(&Point3::new(0.0, 0.0, 3.0 - 0.1));
            let far = cam.project(&Point3::new(0.0, 0.0, 3.0 - 100.0));
            assert_relative_eq!(near.depth, 0.0, epsilon = 1e-12);
            assert_relative_eq!(far.depth, 1.0, epsilon = 1e-12);
            // Depth grows monotonically in between.
            let mut last = -1.0;
            for i in 1..50 {
                let z = 3.0 - 0.1 - i as f64;
                let d = cam.project(&Point3::new(0.0, 0.0, z)).depth;
                assert!(d > last);
                last = d;
            }
        }
    }

    #[test]
    fn invalid_cameras_are_rejected() {
        let eye = Point3::new(0.0, 0.0, 3.0);
        let origin = Point3::origin();
        // Up parallel to the view direction.
        assert!(Camera::new(
            eye,
            origin,
            Vector3::z(),
            Projection::Perspective { fov_y_degrees: 60.0, near: 0.1, far: 10.0 },
            10,
            10,
        )
        .is_err());
        // Eye on target.
        assert!(Camera::perspective(origin, origin, 60.0, 10, 10).is_err());
        // Degenerate projection parameters.
        for (fov, near, far) in [(0.0, 0.1, 10.0), (60.0, -1.0, 10.0), (60.0, 5.0, 1.0)] {
            assert!(Camera::new(
                eye,
                origin,
                Vector3::y(),
                Projection::Perspective { fov_y_degrees: fov, near, far },
                10,
                10,
            )
            .is_err());
        }
        assert!(Camera::perspective(eye, origin, 60.0, 0, 10).is_err());
        // Auto-up handles a straight-down view.
        assert!(Camera::perspective(Point3::new(0.0, 5.0, 0.0), origin, 60.0, 10, 10).is_ok());
    }

    #[test]
    fn framebuffer_starts_clear_and_quantizes_half_up() {
        let mut fb = Framebuffer::new(3, 2);
        assert_eq!(fb.color_at(2, 1), [0.0; 4]);
        assert_eq!(fb.depth_at(0, 0), f64::INFINITY);

        fb.set_color(0, 0, [0.5 / 255.0, 1.5 / 255.0, 1.0, 1.0]);
        fb.set_color(1, 0, [-0.25, 2.0, 254.49 / 255.0, 1.0]);
        let img = fb.to_image();
        // 0.5 rounds up to 1, 1.5 up to 2; out-of-range clamps first.
        assert_eq!(img.pixel(0, 0), &[1, 2, 255]);
        assert_eq!(img.pixel(1, 0), &[0, 255, 254]);
    }

    #[test]
    fn contour_eye_matches_the_projection_kind() {
        let cam = basic_perspective();
        match cam.contour_eye() {
            Eye::Perspective(c) => assert_eq!(c, Point3::new(0.0, 0.0, 3.0)),
            other => panic!("unexpected eye {other:?}"),
        }
        let ortho = Camera::orthographic(Point3::new(0.0, 0.0, 3.0), Point3::origin(), 1.0, 8, 8)
            .unwrap();
        match ortho.contour_eye() {
            Eye::Orthographic(d) => {
                assert_relative_eq!((d - Vector3::z()).norm(), 0.0, epsilon = 1e-12);
            }
            other => panic!("unexpected eye {other:?}"),
        }
    }
}
