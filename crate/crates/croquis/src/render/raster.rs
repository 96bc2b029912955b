//! Z-buffered triangle rasterization with per-pixel shading.
//!
//! Triangles are projected through the camera, near-clipped at triangle
//! granularity (a face with any vertex on the camera side of the near plane
//! is dropped whole), and filled with the top-left rule so abutting
//! triangles cover every boundary pixel exactly once. Position and normal
//! interpolate with screen-space barycentric weights — a documented
//! approximation: depth is exact under it (the perspective depth mapping is
//! affine in 1/z), normals are not perspective-correct.

use nalgebra::{Point3, Vector3};

use crate::anim::MeshState;
use crate::render::lines::{draw_segment, SegmentEnd};
use crate::render::shade::ShaderConfig;
use crate::render::{Camera, Framebuffer, Projection, RenderError};

/// Rasterizer switches.
#[derive(Debug, Clone, Copy)]
pub struct RasterOptions {
    /// Skip triangles that face away from the camera.
    pub backface_cull: bool,
    /// Draw triangle edges (width 1) instead of filling.
    pub wireframe: bool,
}

impl Default for RasterOptions {
    fn default() -> Self {
        RasterOptions {
            backface_cull: true,
            wireframe: false,
        }
    }
}

/// The 2D cross product `(b − a) × (p − a)`: twice the signed area of the
/// triangle `a, b, p` in screen coordinates. Front-facing triangles have a
/// negative area under this convention (screen y grows downward).
fn orient(a: (f64, f64), b: (f64, f64), p: (f64, f64)) -> f64 {
    (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0)
}

/// Top-left tie rule for a directed edge of a front-facing triangle: pixel
/// centers exactly on the edge belong to it only when the edge is the
/// triangle's top edge (horizontal, interior below) or a left edge
/// (interior to its right). With our winding those are `d.y > 0`, or
/// `d.y == 0 && d.x < 0`.
fn accepts_boundary(d: (f64, f64)) -> bool {
    d.1 > 0.0 || (d.1 == 0.0 && d.0 < 0.0)
}

struct Corner {
    position: Point3<f64>,
    normal: Vector3<f64>,
    screen: (f64, f64),
    depth: f64,
}

/// Rasterize every face of a deformed mesh into `target`.
///
/// Depth testing is strict less-than against the existing depth buffer, so
/// passes accumulate correctly into a shared framebuffer. The shader is
/// evaluated per covered pixel with the interpolated (renormalized) normal
/// and, for Phong, the view direction from the interpolated position toward
/// the eye.
pub fn rasterize_surface(
    state: &MeshState<'_>,
    camera: &Camera,
    shader: &ShaderConfig,
    target: &mut Framebuffer,
    options: &RasterOptions,
) -> Result<(), RenderError> {
    target.matches(camera)?;
    shader.validate()?;
    let light = shader.light_dir().normalize();
    // Orthographic views share one view direction; perspective computes it
    // per pixel from the eye.
    let fixed_view = match camera.projection() {
        Projection::Orthographic { .. } => Some(-camera.forward()),
        Projection::Perspective { .. } => None,
    };

    for [a, b, c] in state.surface().faces() {
        let corner = |v: u32| {
            let position = state.position(v);
            let q = camera.project(&position);
            let corner = Corner {
                position,
                normal: state.normal(v),
                screen: (q.x, q.y),
                depth: q.depth,
            };
            (corner, q.clipped)
        };
        let (c0, x0) = corner(a);
        let (c1, x1) = corner(b);
        let (c2, x2) = corner(c);
        if x0 || x1 || x2 {
            continue;
        }
        let mut tri = [c0, c1, c2];
        let area = orient(tri[0].screen, tri[1].screen, tri[2].screen);
        if area == 0.0 || (options.backface_cull && area > 0.0) {
            continue;
        }
        if area > 0.0 {
            tri.swap(1, 2);
        }
        let area = orient(tri[0].screen, tri[1].screen, tri[2].screen);

        if options.wireframe {
            let ends: Vec<SegmentEnd> = tri
                .iter()
                .map(|corner| {
                    let n = unit_or(corner.normal, face_normal(&tri));
                    let v = view_dir(fixed_view, camera, &corner.position);
                    SegmentEnd {
                        x: corner.screen.0,
                        y: corner.screen.1,
                        depth: corner.depth,
                        color: shader.shade(&n, &light, &v),
                    }
                })
                .collect();
            for (i, j) in [(0, 1), (1, 2), (2, 0)] {
                draw_segment(target, &ends[i], &ends[j], 0.5, 0.0);
            }
            continue;
        }

        fill_triangle(&tri, area, camera, shader, &light, fixed_view, target);
    }
    Ok(())
}

fn fill_triangle(
    tri: &[Corner; 3],
    area: f64,
    camera: &Camera,
    shader: &ShaderConfig,
    light: &Vector3<f64>,
    fixed_view: Option<Vector3<f64>>,
    target: &mut Framebuffer,
) {
    let [s0, s1, s2] = [tri[0].screen, tri[1].screen, tri[2].screen];
    // Edge i is the one opposite corner i; its weight is the area of the
    // sub-triangle spanned by the other two corners and the pixel.
    let edges = [(s1, s2), (s2, s0), (s0, s1)];
    let on_edge_ok =
        edges.map(|(from, to)| accepts_boundary((to.0 - from.0, to.1 - from.1)));

    let min = |f: fn(&(f64, f64)) -> f64| f(&s0).min(f(&s1)).min(f(&s2));
    let max = |f: fn(&(f64, f64)) -> f64| f(&s0).max(f(&s1)).max(f(&s2));
    // First and last pixel indices whose centers fall inside the bounds.
    let x0 = (min(|s| s.0) - 0.5).ceil().max(0.0);
    let x1 = (max(|s| s.0) - 0.5).floor().min(f64::from(target.width() - 1));
    let y0 = (min(|s| s.1) - 0.5).ceil().max(0.0);
    let y1 = (max(|s| s.1) - 0.5).floor().min(f64::from(target.height() - 1));
    if x1 < x0 || y1 < y0 {
        return;
    }

    for py in y0 as u32..=y1 as u32 {
        for px in x0 as u32..=x1 as u32 {
            let p = (f64::from(px) + 0.5, f64::from(py) + 0.5);
            let w = [
                orient(edges[0].0, edges[0].1, p),
                orient(edges[1].0, edges[1].1, p),
                orient(edges[2].0, edges[2].1, p),
            ];
            // Inside means every edge weight carries the (negative) area
            // sign; exact zeros defer to the top-left rule.
            let inside = (0..3).all(|i| w[i] < 0.0 || (w[i] == 0.0 && on_edge_ok[i]));
            if !inside {
                continue;
            }
            let lambda = [w[0] / area, w[1] / area, w[2] / area];
            let depth = lambda[0] * tri[0].depth
                + lambda[1] * tri[1].depth
                + lambda[2] * tri[2].depth;
            if depth >= target.depth_at(px, py) {
                continue;
            }
            let position = Point3::from(
                lambda[0] * tri[0].position.coords
                    + lambda[1] * tri[1].position.coords
                    + lambda[2] * tri[2].position.coords,
            );
            let normal = unit_or(
                lambda[0] * tri[0].normal + lambda[1] * tri[1].normal + lambda[2] * tri[2].normal,
                face_normal(tri),
            );
            let v = view_dir(fixed_view, camera, &position);
            let shade = shader.shade(&normal, light, &v);
            target.set_color(px, py, [shade.x as f32, shade.y as f32, shade.z as f32, 1.0]);
            target.set_depth(px, py, depth);
        }
    }
}

fn view_dir(
    fixed_view: Option<Vector3<f64>>,
    camera: &Camera,
    position: &Point3<f64>,
) -> Vector3<f64> {
    fixed_view.unwrap_or_else(|| unit_or(camera.eye() - position, -camera.forward()))
}

fn unit_or(v: Vector3<f64>, fallback: Vector3<f64>) -> Vector3<f64> {
    let n = v.norm();
    if n > 1e-12 {
        v / n
    } else {
        fallback
    }
}

/// Geometric normal of the (possibly interpolation-degenerate) triangle.
fn face_normal(tri: &[Corner; 3]) -> Vector3<f64> {
    let n = (tri[1].position - tri[0].position).cross(&(tri[2].position - tri[0].position));
    let len = n.norm();
    if len > 1e-12 {
        n / len
    } else {
        Vector3::z()
    }
}
