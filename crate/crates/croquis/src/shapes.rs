//! Procedural test and demo meshes.
//!
//! All generators produce counterclockwise (outward-facing) triangles and go
//! through [`Surface::build`], so each call validates the half-edge
//! invariants on the way out. The analytic shapes (sphere, torus, cylinder)
//! have known normals and curvatures, which makes them the measuring sticks
//! for the differential-geometry and contour modules.

use crate::mesh::{Surface, VertexId};
use nalgebra::Point3;
use std::collections::HashMap;

/// Regular tetrahedron with vertices on (±1, ±1, ±1) corners.
pub fn tetrahedron() -> Surface {
    let pts = vec![
        Point3::new(1.0, 1.0, 1.0),
        Point3::new(1.0, -1.0, -1.0),
        Point3::new(-1.0, 1.0, -1.0),
        Point3::new(-1.0, -1.0, 1.0),
    ];
    let tris = [[0, 1, 2], [0, 2, 3], [0, 3, 1], [1, 3, 2]];
    Surface::build(pts, &tris).expect("tetrahedron is manifold")
}

/// Regular octahedron with unit vertices on the coordinate axes.
pub fn octahedron() -> Surface {
    let pts = vec![
        Point3::new(1.0, 0.0, 0.0),
        Point3::new(-1.0, 0.0, 0.0),
        Point3::new(0.0, 1.0, 0.0),
        Point3::new(0.0, -1.0, 0.0),
        Point3::new(0.0, 0.0, 1.0),
        Point3::new(0.0, 0.0, -1.0),
    ];
    let tris = [
        [0, 2, 4],
        [2, 1, 4],
        [1, 3, 4],
        [3, 0, 4],
        [2, 0, 5],
        [1, 2, 5],
        [3, 1, 5],
        [0, 3, 5],
    ];
    Surface::build(pts, &tris).expect("octahedron is manifold")
}

/// Axis-aligned cube centered at the origin with the given edge length.
pub fn cube(edge: f64) -> Surface {
    let s = edge / 2.0;
    let pts = vec![
        Point3::new(-s, -s, -s),
        Point3::new(s, -s, -s),
        Point3::new(s, s, -s),
        Point3::new(-s, s, -s),
        Point3::new(-s, -s, s),
        Point3::new(s, -s, s),
        Point3::new(s, s, s),
        Point3::new(-s, s, s),
    ];
    let tris = [
        [0, 3, 2],
        [0, 2, 1], // bottom
        [4, 5, 6],
        [4, 6, 7], // top
        [0, 1, 5],
        [0, 5, 4], // front
        [1, 2, 6],
        [1, 6, 5], // right
        [2, 3, 7],
        [2, 7, 6], // back
        [3, 0, 4],
        [3, 4, 7], // left
    ];
    Surface::build(pts, &tris).expect("cube is manifold")
}

/// Flat grid in the z = 0 plane with `nx` x `ny` vertices and the given
/// spacing. Normals point along +z; the rim is an open boundary.
pub fn grid(nx: usize, ny: usize, spacing: f64) -> Surface {
    assert!(nx >= 2 && ny >= 2, "grid needs at least 2x2 vertices");
    let mut pts = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            pts.push(Point3::new(i as f64 * spacing, j as f64 * spacing, 0.0));
        }
    }
    let idx = |i: usize, j: usize| (j * nx + i) as VertexId;
    let mut tris = Vec::with_capacity((nx - 1) * (ny - 1) * 2);
    for j in 0..ny - 1 {
        for i in 0..nx - 1 {
            let (a, b, c, d) = (idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1));
            tris.push([a, b, c]);
            tris.push([a, c, d]);
        }
    }
    Surface::build(pts, &tris).expect("grid is manifold")
}

/// Height field z = f(x, y) over a grid centered on the origin, so that for
/// odd vertex counts the middle vertex sits exactly at (0, 0).
pub fn height_field(nx: usize, ny: usize, spacing: f64, f: impl Fn(f64, f64) -> f64) -> Surface {
    assert!(nx >= 2 && ny >= 2, "height field needs at least 2x2 vertices");
    let mut pts = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let x = (i as f64 - (nx - 1) as f64 / 2.0) * spacing;
            let y = (j as f64 - (ny - 1) as f64 / 2.0) * spacing;
            pts.push(Point3::new(x, y, f(x, y)));
        }
    }
    let idx = |i: usize, j: usize| (j * nx + i) as VertexId;
    let mut tris = Vec::with_capacity((nx - 1) * (ny - 1) * 2);
    for j in 0..ny - 1 {
        for i in 0..nx - 1 {
            let (a, b, c, d) = (idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1));
            tris.push([a, b, c]);
            tris.push([a, c, d]);
        }
    }
    Surface::build(pts, &tris).expect("height field is manifold")
}

/// Unit sphere built by subdividing an icosahedron `level` times by edge
/// midpoints and projecting the result onto the sphere. Level 0 has 12
/// vertices, each further level quadruples the face count (level 2: 162
/// vertices, 320 faces).
pub fn icosphere(level: u32) -> Surface {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let mut pts: Vec<Point3<f64>> = [
        (-1.0, t, 0.0),
        (1.0, t, 0.0),
        (-1.0, -t, 0.0),
        (1.0, -t, 0.0),
        (0.0, -1.0, t),
        (0.0, 1.0, t),
        (0.0, -1.0, -t),
        (0.0, 1.0, -t),
        (t, 0.0, -1.0),
        (t, 0.0, 1.0),
        (-t, 0.0, -1.0),
        (-t, 0.0, 1.0),
    ]
    .iter()
    .map(|&(x, y, z)| Point3::from(nalgebra::Vector3::new(x, y, z).normalize()))
    .collect();
    let mut tris: Vec<[VertexId; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];

    for _ in 0..level {
        let mut midpoint: HashMap<(VertexId, VertexId), VertexId> = HashMap::new();
        let mut mid = |a: VertexId, b: VertexId, pts: &mut Vec<Point3<f64>>| -> VertexId {
            let key = (a.min(b), a.max(b));
            *midpoint.entry(key).or_insert_with(|| {
                let m = (pts[a as usize].coords + pts[b as usize].coords) / 2.0;
                pts.push(Point3::from(m));
                (pts.len() - 1) as VertexId
            })
        };
        let mut next = Vec::with_capacity(tris.len() * 4);
        for [a, b, c] in tris {
            let ab = mid(a, b, &mut pts);
            let bc = mid(b, c, &mut pts);
            let ca = mid(c, a, &mut pts);
            next.push([a, ab, ca]);
            next.push([b, bc, ab]);
            next.push([c, ca, bc]);
            next.push([ab, bc, ca]);
        }
        tris = next;
    }
    // Project once at the end (geodesic-polyhedron style) rather than after
    // every split: the resulting mesh family refines uniformly, so per-vertex
    // estimates converge cleanly level over level.
    for p in &mut pts {
        *p = Point3::from(p.coords.normalize());
    }
    Surface::build(pts, &tris).expect("icosphere is manifold")
}

/// Torus around the z axis: major radius to the tube center, minor radius of
/// the tube, sampled with `nu` segments around the main ring and `nv` around
/// the tube.
pub fn torus(major: f64, minor: f64, nu: usize, nv: usize) -> Surface {
    assert!(nu >= 3 && nv >= 3, "torus needs at least 3x3 segments");
    let mut pts = Vec::with_capacity(nu * nv);
    for i in 0..nu {
        let theta = 2.0 * std::f64::consts::PI * i as f64 / nu as f64;
        for j in 0..nv {
            let phi = 2.0 * std::f64::consts::PI * j as f64 / nv as f64;
            let ring = major + minor * phi.cos();
            pts.push(Point3::new(
                ring * theta.cos(),
                ring * theta.sin(),
                minor * phi.sin(),
            ));
        }
    }
    let idx = |i: usize, j: usize| ((i % nu) * nv + (j % nv)) as VertexId;
    let mut tris = Vec::with_capacity(nu * nv * 2);
    for i in 0..nu {
        for j in 0..nv {
            let (a, b, c, d) = (idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1));
            tris.push([a, b, c]);
            tris.push([a, c, d]);
        }
    }
    Surface::build(pts, &tris).expect("torus is manifold")
}

/// Open cylinder tube along +z from z = 0 to z = height (no caps), with `nu`
/// segments around and `rows` vertex rings along the axis.
pub fn cylinder(radius: f64, height: f64, nu: usize, rows: usize) -> Surface {
    assert!(nu >= 3 && rows >= 2, "cylinder needs >= 3 segments and >= 2 rows");
    let mut pts = Vec::with_capacity(nu * rows);
    for i in 0..nu {
        let theta = 2.0 * std::f64::consts::PI * i as f64 / nu as f64;
        for j in 0..rows {
            let z = height * j as f64 / (rows - 1) as f64;
            pts.push(Point3::new(radius * theta.cos(), radius * theta.sin(), z));
        }
    }
    let idx = |i: usize, j: usize| ((i % nu) * rows + j) as VertexId;
    let mut tris = Vec::with_capacity(nu * (rows - 1) * 2);
    for i in 0..nu {
        for j in 0..rows - 1 {
            let (a, b, c, d) = (idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1));
            tris.push([a, b, c]);
            tris.push([a, c, d]);
        }
    }
    Surface::build(pts, &tris).expect("cylinder is manifold")
}
