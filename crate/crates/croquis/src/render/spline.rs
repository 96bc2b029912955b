//! Cubic spline smoothing for polylines.
//!
//! Two uniform cubic schemes are offered: Catmull-Rom, which interpolates
//! every control point, and the uniform cubic B-spline, which trades
//! interpolation for smoothness and only approximates the control polygon.
//! Both are evaluated segment by segment with a fixed number of samples, so
//! resampling is deterministic and the open/closed distinction only changes
//! how neighbour indices wrap.

use nalgebra::Point3;

use crate::mesh::Rgb;
use crate::render::RenderError;

/// Which smoothing scheme [`smooth_polyline`] applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Smoothing {
    /// Leave the polyline untouched.
    None,
    /// Interpolating uniform Catmull-Rom spline through every control point.
    CatmullRom,
    /// Approximating uniform cubic B-spline; interior control points are
    /// generally not on the curve.
    BSpline,
}

/// Appearance and smoothing parameters for drawn lines.
#[derive(Debug, Clone)]
pub struct LineStyle {
    pub smoothing: Smoothing,
    /// Subdivisions per control-point segment; must be at least 1.
    pub samples_per_segment: u32,
    /// Stroke width in pixels.
    pub stroke_width: f64,
    pub color: Rgb,
    /// Normalized-depth bias subtracted from line depth before the depth
    /// test, so strokes lying exactly on a surface win against it.
    pub depth_bias: f64,
}

impl Default for LineStyle {
    fn default() -> Self {
        LineStyle {
            smoothing: Smoothing::None,
            samples_per_segment: 8,
            stroke_width: 1.0,
            color: Rgb::BLACK,
            depth_bias: 1e-3,
        }
    }
}

/// Catmull-Rom blending weights for the four control points around one
/// segment, at parameter `u` in `[0, 1]`.
pub(crate) fn catmull_rom_weights(u: f64) -> [f64; 4] {
    let u2 = u * u;
    let u3 = u2 * u;
    [
        0.5 * (-u3 + 2.0 * u2 - u),
        0.5 * (3.0 * u3 - 5.0 * u2 + 2.0),
        0.5 * (-3.0 * u3 + 4.0 * u2 + u),
        0.5 * (u3 - u2),
    ]
}

/// Uniform cubic B-spline blending weights at parameter `u` in `[0, 1]`.
pub(crate) fn bspline_weights(u: f64) -> [f64; 4] {
    let u2 = u * u;
    let u3 = u2 * u;
    [
        (-u3 + 3.0 * u2 - 3.0 * u + 1.0) / 6.0,
        (3.0 * u3 - 6.0 * u2 + 4.0) / 6.0,
        (-3.0 * u3 + 3.0 * u2 + 3.0 * u + 1.0) / 6.0,
        u3 / 6.0,
    ]
}

fn blend(points: [&Point3<f64>; 4], w: [f64; 4]) -> Point3<f64> {
    Point3::new(
        w[0] * points[0].x + w[1] * points[1].x + w[2] * points[2].x + w[3] * points[3].x,
        w[0] * points[0].y + w[1] * points[1].y + w[2] * points[2].y + w[3] * points[3].y,
        w[0] * points[0].z + w[1] * points[1].z + w[2] * points[2].z + w[3] * points[3].z,
    )
}

/// Resamples `points` according to `style.smoothing`.
///
/// With `Smoothing::None` the input is returned unchanged. Otherwise each
/// segment between consecutive control points is subdivided into
/// `samples_per_segment` steps. Open polylines clamp the window at the ends
/// by duplicating the first and last control points, so a Catmull-Rom curve
/// starts and ends exactly on them; closed polylines wrap neighbour indices
/// around instead and the output is again a closed loop (the seam point is
/// not repeated).
///
/// Every input control point appears verbatim among Catmull-Rom output
/// samples. Returns [`RenderError::TooFewPoints`] for fewer than two points.
pub fn smooth_polyline(
    points: &[Point3<f64>],
    closed: bool,
    style: &LineStyle,
) -> Result<Vec<Point3<f64>>, RenderError> {
    if points.len() < 2 {
        return Err(RenderError::TooFewPoints(points.len()));
    }
    if style.smoothing == Smoothing::None {
        return Ok(points.to_vec());
    }
    let weights_for = match style.smoothing {
        Smoothing::CatmullRom => catmull_rom_weights,
        Smoothing::BSpline => bspline_weights,
        Smoothing::None => unreachable!(),
    };
    let n = points.len() as isize;
    let index = |j: isize| -> &Point3<f64> {
        let j = if closed {
            j.rem_euclid(n)
        } else {
            j.clamp(0, n - 1)
        };
        &points[j as usize]
    };
    let samples = style.samples_per_segment.max(1) as usize;
    let segments = if closed { points.len() } else { points.len() - 1 };
    let mut out = Vec::with_capacity(segments * samples + 1);
    for seg in 0..segments as isize {
        let window = [index(seg - 1), index(seg), index(seg + 1), index(seg + 2)];
        for k in 0..samples {
            let u = k as f64 / samples as f64;
            out.push(blend(window, weights_for(u)));
        }
    }
    if !closed {
        // Close out the final segment at u = 1.
        let seg = segments as isize - 1;
        let window = [index(seg - 1), index(seg), index(seg + 1), index(seg + 2)];
        out.push(blend(window, weights_for(1.0)));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn style(smoothing: Smoothing, samples: u32) -> LineStyle {
        LineStyle {
            smoothing,
            samples_per_segment: samples,
            ..LineStyle::default()
        }
    }

    fn zigzag() -> Vec<Point3<f64>> {
        vec![
            Point3::new(0.0, 0.0, 0.0),
            Point3::new(1.0, 1.0, 0.5),
            Point3::new(2.0, -0.5, 1.0),
            Point3::new(3.5, 0.25, -1.0),
        ]
    }

    #[test]
    fn none_returns_input_unchanged() {
        let pts = zigzag();
        let out = smooth_polyline(&pts, false, &style(Smoothing::None, 7)).unwrap();
        assert_eq!(out, pts);
    }

    #[test]
    fn too_few_points_is_an_error() {
        let pts = [Point3::new(0.0, 0.0, 0.0)];
        let err = smooth_polyline(&pts, false, &style(Smoothing::CatmullRom, 4)).unwrap_err();
        assert!(matches!(err, RenderError::TooFewPoints(1)));
    }

    #[test]
    fn catmull_rom_interpolates_every_control_point() {
        let pts = zigzag();
        let out = smooth_polyline(&pts, false, &style(Smoothing::CatmullRom, 5)).unwrap();
        assert_eq!(out.len(), (pts.len() - 1) * 5 + 1);
        for (i, p) in pts.iter().enumerate() {
            // Control point i is the u = 0 sample of segment i (or the final
            // clamped sample); blending with weights (0, 1, 0, 0) is exact.
            let hit = out.iter().any(|q| q == p);
            assert!(hit, "control point {i} missing from samples");
        }
    }

    #[test]
    fn catmull_rom_endpoint_weights_are_exact() {
        assert_eq!(catmull_rom_weights(0.0), [0.0, 1.0, 0.0, 0.0]);
        assert_eq!(catmull_rom_weights(1.0), [0.0, 0.0, 1.0, 0.0]);
    }

    #[test]
    fn catmull_rom_samples_1_degenerates_to_control_polygon() {
        let pts = zigzag();
        let out = smooth_polyline(&pts, false, &style(Smoothing::CatmullRom, 1)).unwrap();
        assert_eq!(out, pts);
    }

    #[test]
    fn bspline_knot_evaluates_to_two_thirds() {
        // At a knot the uniform cubic B-spline blends (1, 4, 1)/6; controls
        // with y = (0, 1, 0) around the knot give 4/6 = 2/3.
        let pts = vec![
            Point3::new(0.0, 0.0, 0.0),
            Point3::new(1.0, 1.0, 0.0),
            Point3::new(2.0, 0.0, 0.0),
        ];
        let out = smooth_polyline(&pts, false, &style(Smoothing::BSpline, 1)).unwrap();
        // Samples: knot 0 (clamped), knot 1, and the u = 1 end of segment 1.
        assert!((out[1].y - 2.0 / 3.0).abs() < 1e-12, "got {}", out[1].y);
    }

    #[test]
    fn bspline_does_not_interpolate_interior_controls() {
        let pts = zigzag();
        let out = smooth_polyline(&pts, false, &style(Smoothing::BSpline, 8)).unwrap();
        let interior = &pts[1];
        let nearest = out
            .iter()
            .map(|q| (q - interior).norm())
            .fold(f64::INFINITY, f64::min);
        assert!(nearest > 1e-3, "B-spline unexpectedly hit a control point");
    }

    #[test]
    fn collinear_controls_stay_collinear() {
        let pts: Vec<_> = (0..5)
            .map(|i| Point3::new(i as f64, 2.0 * i as f64, -i as f64))
            .collect();
        for smoothing in [Smoothing::CatmullRom, Smoothing::BSpline] {
            let out = smooth_polyline(&pts, false, &style(smoothing, 6)).unwrap();
            let dir = (pts[4] - pts[0]).normalize();
            for q in &out {
                let d = q - pts[0];
                let off = (d - dir * d.dot(&dir)).norm();
                assert!(off < 1e-9, "{smoothing:?} sample strays {off}");
            }
        }
    }

    #[test]
    fn closed_loop_wraps_without_duplicating_seam() {
        let pts = vec![
            Point3::new(1.0, 0.0, 0.0),
            Point3::new(0.0, 1.0, 0.0),
            Point3::new(-1.0, 0.0, 0.0),
            Point3::new(0.0, -1.0, 0.0),
        ];
        let out = smooth_polyline(&pts, true, &style(Smoothing::CatmullRom, 3)).unwrap();
        assert_eq!(out.len(), pts.len() * 3);
        assert_eq!(out[0], pts[0]);
        assert_ne!(out.last().unwrap(), &pts[0]);
    }

    #[test]
    fn weights_sum_to_one() {
        for i in 0..=10 {
            let u = i as f64 / 10.0;
            let cr: f64 = catmull_rom_weights(u).iter().sum();
            let bs: f64 = bspline_weights(u).iter().sum();
            assert!((cr - 1.0).abs() < 1e-15);
            assert!((bs - 1.0).abs() < 1e-15);
        }
    }
}
