//! Drawing contour polylines into a framebuffer and exporting them as SVG.
//!
//! Raster strokes are antialiased by perpendicular distance: each pixel near
//! a segment receives coverage that fades linearly over one pixel at the
//! stroke border, and is composited over the existing color. A configurable
//! depth bias lets strokes that lie exactly on a surface pass the depth test
//! against it; strokes never write depth themselves.

use std::fmt::Write as _;

use nalgebra::Vector3;

use crate::contours::ContourSet;
use crate::render::shade::linear_color;
use crate::render::spline::{smooth_polyline, LineStyle};
use crate::render::{Camera, Framebuffer, ProjectedPoint, RenderError};

/// One stroke endpoint in screen space.
#[derive(Debug, Clone, Copy)]
pub(crate) struct SegmentEnd {
    pub x: f64,
    pub y: f64,
    pub depth: f64,
    pub color: Vector3<f64>,
}

/// Composites one antialiased segment into the framebuffer.
///
/// Coverage at a pixel is `half_width + ½ − distance`, clamped to `[0, 1]`,
/// measured from the pixel center to the segment. Depth and color vary
/// linearly along the segment; a pixel is drawn only when its biased depth
/// beats the depth buffer, which itself stays untouched.
pub(crate) fn draw_segment(
    target: &mut Framebuffer,
    a: &SegmentEnd,
    b: &SegmentEnd,
    half_width: f64,
    depth_bias: f64,
) {
    let reach = half_width + 0.5;
    let x_lo = (a.x.min(b.x) - reach - 1.0).floor().max(0.0) as u32;
    let y_lo = (a.y.min(b.y) - reach - 1.0).floor().max(0.0) as u32;
    let x_hi = (a.x.max(b.x) + reach + 1.0)
        .ceil()
        .min(f64::from(target.width() - 1)) as u32;
    let y_hi = (a.y.max(b.y) + reach + 1.0)
        .ceil()
        .min(f64::from(target.height() - 1)) as u32;
    let (dx, dy) = (b.x - a.x, b.y - a.y);
    let len2 = dx * dx + dy * dy;

    for py in y_lo..=y_hi {
        for px in x_lo..=x_hi {
            let (cx, cy) = (f64::from(px) + 0.5, f64::from(py) + 0.5);
            // Parameter of the closest point on the segment to this center.
            let t = if len2 > 0.0 {
                (((cx - a.x) * dx + (cy - a.y) * dy) / len2).clamp(0.0, 1.0)
            } else {
                0.0
            };
            let (qx, qy) = (a.x + t * dx, a.y + t * dy);
            let dist = ((cx - qx).powi(2) + (cy - qy).powi(2)).sqrt();
            let coverage = (reach - dist).clamp(0.0, 1.0);
            if coverage <= 0.0 {
                continue;
            }
            let depth = a.depth + t * (b.depth - a.depth);
            if depth - depth_bias >= target.depth_at(px, py) {
                continue;
            }
            let color = a.color + t * (b.color - a.color);
            let dst = target.color_at(px, py);
            let cov = coverage as f32;
            let blended = [
                color.x as f32 * cov + dst[0] * (1.0 - cov),
                color.y as f32 * cov + dst[1] * (1.0 - cov),
                color.z as f32 * cov + dst[2] * (1.0 - cov),
                cov + dst[3] * (1.0 - cov),
            ];
            target.set_color(px, py, blended);
        }
    }
}

/// Projects one polyline's (optionally smoothed) points through the camera.
///
/// Closed chains get their first point appended so the seam segment is
/// drawn/exported like any other.
fn project_chain(
    points: &[nalgebra::Point3<f64>],
    closed: bool,
    style: &LineStyle,
    camera: &Camera,
) -> Result<Vec<ProjectedPoint>, RenderError> {
    let smoothed = smooth_polyline(points, closed, style)?;
    let mut projected: Vec<ProjectedPoint> =
        smoothed.iter().map(|p| camera.project(p)).collect();
    if closed {
        let first = projected[0];
        projected.push(first);
    }
    Ok(projected)
}

/// Draws every polyline of a contour set over the framebuffer.
///
/// Polylines are smoothed per `style`, projected, and stroked segment by
/// segment in the flat `style.color`. Segments with a near-clipped endpoint
/// are skipped. Single-point polylines are ignored.
pub fn render_lines(
    contours: &ContourSet,
    camera: &Camera,
    style: &LineStyle,
    target: &mut Framebuffer,
) -> Result<(), RenderError> {
    target.matches(camera)?;
    let color = linear_color(style.color);
    let half_width = (style.stroke_width * 0.5).max(0.0);
    for polyline in &contours.polylines {
        if polyline.points.len() < 2 {
            continue;
        }
        let projected = project_chain(&polyline.points, polyline.closed, style, camera)?;
        for pair in projected.windows(2) {
            let (p, q) = (&pair[0], &pair[1]);
            if p.clipped || q.clipped {
                continue;
            }
            let end = |r: &ProjectedPoint| SegmentEnd {
                x: r.x,
                y: r.y,
                depth: r.depth,
                color,
            };
            draw_segment(target, &end(p), &end(q), half_width, style.depth_bias);
        }
    }
    Ok(())
}

fn hex_color(style: &LineStyle) -> String {
    let channel = |v: f32| ((f64::from(v).clamp(0.0, 1.0) * 255.0).round()) as u8;
    format!(
        "#{:02x}{:02x}{:02x}",
        channel(style.color.r),
        channel(style.color.g),
        channel(style.color.b)
    )
}

/// Serializes a contour set as a standalone SVG document.
///
/// The viewport matches the camera in pixels. Each polyline becomes exactly
/// one `<path>`, in order, so elements can be matched back to their source
/// chains; clipped points split the path into subpaths and a fully visible
/// closed chain ends with `Z`. Coordinates are fixed to three decimals,
/// making the output byte-stable across runs.
pub fn export_svg(
    contours: &ContourSet,
    camera: &Camera,
    style: &LineStyle,
) -> Result<String, RenderError> {
    let (w, h) = (camera.width(), camera.height());
    let mut svg = String::new();
    let _ = writeln!(svg, "<?xml version=\"1.0\" encoding=\"UTF-8\"?>");
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" \
         viewBox=\"0 0 {w} {h}\">"
    );
    let _ = writeln!(
        svg,
        "<g fill=\"none\" stroke=\"{}\" stroke-width=\"{:.3}\" \
         stroke-linecap=\"round\" stroke-linejoin=\"round\">",
        hex_color(style),
        style.stroke_width
    );
    for polyline in &contours.polylines {
        if polyline.points.len() < 2 {
            let _ = writeln!(svg, "<path d=\"\"/>");
            continue;
        }
        let projected = project_chain(&polyline.points, polyline.closed, style, camera)?;
        let all_visible = projected.iter().all(|p| !p.clipped);
        // For a fully visible closed chain, `Z` replaces the repeated seam
        // point appended by projection.
        let outline: &[ProjectedPoint] = if polyline.closed && all_visible {
            &projected[..projected.len() - 1]
        } else {
            &projected
        };
        let mut d = String::new();
        let mut run = 0usize;
        for p in outline {
            if p.clipped {
                run = 0;
                continue;
            }
            if run == 0 {
                if !d.is_empty() {
                    d.push(' ');
                }
                let _ = write!(d, "M {:.3},{:.3}", p.x, p.y);
            } else {
                let _ = write!(d, " L {:.3},{:.3}", p.x, p.y);
            }
            run += 1;
        }
        if polyline.closed && all_visible && !d.is_empty() {
            d.push_str(" Z");
        }
        let _ = writeln!(svg, "<path d=\"{d}\"/>");
    }
    let _ = writeln!(svg, "</g>");
    let _ = writeln!(svg, "</svg>");
    Ok(svg)
}
