//! Discrete curvature estimation on triangle meshes.
//!
//! Curvature is estimated per face and gathered to vertices. For each face,
//! the second fundamental form is the least-squares fit to the finite
//! differences of vertex normals along the three edges: if `e` is an edge
//! and `dn` the difference of unit normals across it, the shape operator
//! `S` should satisfy `S e = dn` in the tangent plane. Three edges give six
//! equations for the three unknowns of the symmetric form. Face tensors are
//! rotated into each vertex's tangent frame and averaged with mixed-Voronoi
//! corner weights, then diagonalized into principal curvatures and
//! directions.
//!
//! The convention is that of the shape operator `S = ∇n`: a unit sphere with
//! outward normals has curvature +1 everywhere. On a sphere the estimate is
//! exact (the normal differences equal the position differences), which the
//! tests exploit.
//!
//! The same machinery fits the *derivative* of curvature: a symmetric
//! 2x2x2 tensor per vertex ([`CurvatureTensor`]), fit per face from the
//! differences of the vertex second fundamental forms along edges. Its
//! contraction with a tangent direction gives the directional derivative of
//! normal curvature, the quantity suggestive-contour extraction needs.

use crate::anim::MeshState;
use crate::mesh::{ElementKind, FaceId, Surface, VertexId};
use nalgebra::{Matrix3, Matrix4, Vector2, Vector3, Vector4};

/// Errors from curvature estimation.
#[derive(Debug, thiserror::Error)]
pub enum CurvatureError {
    /// A required curvature input is absent or does not match the surface.
    #[error("curvature field unavailable: {0}")]
    MissingCurvature(String),
}

fn check_field_length(what: &str, expected: usize, got: usize) -> Result<(), CurvatureError> {
    if got == expected {
        Ok(())
    } else {
        Err(CurvatureError::MissingCurvature(format!(
            "{what} has {got} entries, surface has {expected} vertices"
        )))
    }
}

/// Principal curvatures and directions at one vertex.
///
/// `k1 >= k2` (signed). `e1` and `e2` are unit vectors in the tangent plane
/// with `(e1, e2, normal)` right-handed; `e1` is the direction of maximal
/// normal curvature `k1`.
#[derive(Debug, Clone, Copy)]
pub struct VertexCurvature {
    pub k1: f64,
    pub k2: f64,
    pub e1: Vector3<f64>,
    pub e2: Vector3<f64>,
}

/// A symmetric second fundamental form in an explicit tangent frame
/// `(u, v)`: the matrix `[[e, f], [f, g]]`, so `II(u, u) = e`,
/// `II(u, v) = f`, `II(v, v) = g`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SecondForm2x2 {
    pub e: f64,
    pub f: f64,
    pub g: f64,
}

impl SecondForm2x2 {
    pub fn new(e: f64, f: f64, g: f64) -> Self {
        SecondForm2x2 { e, f, g }
    }

    /// The trace `e + g`, preserved exactly by diagonalization.
    pub fn trace(&self) -> f64 {
        self.e + self.g
    }
}

/// Symmetric derivative-of-curvature tensor at a vertex, expressed in that
/// vertex's principal frame `(e1, e2)`.
///
/// The four unique components of the symmetric 2x2x2 tensor `C`:
/// `a = C(e1,e1,e1)`, `b = C(e1,e1,e2)`, `c = C(e1,e2,e2)`, `d = C(e2,e2,e2)`.
#[derive(Debug, Clone, Copy, Default)]
pub struct CurvatureTensor {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl CurvatureTensor {
    /// Full contraction `C(x, y, z)` with tangent vectors given by their
    /// `(e1, e2)` components.
    pub fn contract(&self, x: Vector2<f64>, y: Vector2<f64>, z: Vector2<f64>) -> f64 {
        self.a * x.x * y.x * z.x
            + self.b * (x.x * y.x * z.y + x.x * y.y * z.x + x.y * y.x * z.x)
            + self.c * (x.x * y.y * z.y + x.y * y.x * z.y + x.y * y.y * z.x)
            + self.d * x.y * y.y * z.y
    }

    /// `C(w, w, w)` for a single tangent direction.
    pub fn contract_cubed(&self, w: Vector2<f64>) -> f64 {
        self.contract(w, w, w)
    }
}

/// Rotates the frame `(u, v)` by the minimal rotation taking `from_n` to
/// `to_n`, keeping the frame orthonormal. Antiparallel normals (unreachable
/// for valid meshes) rotate 180 degrees about a deterministic perpendicular
/// axis — the coordinate axis least aligned with `from_n`, projected into
/// the tangent plane.
fn rotate_frame(
    u: Vector3<f64>,
    v: Vector3<f64>,
    from_n: Vector3<f64>,
    to_n: Vector3<f64>,
) -> (Vector3<f64>, Vector3<f64>) {
    let ndot = from_n.dot(&to_n);
    if ndot <= -1.0 + 1e-12 {
        let a = any_tangent(from_n);
        let r = |x: Vector3<f64>| 2.0 * a.dot(&x) * a - x;
        return (r(u), r(v));
    }
    let perp = to_n - ndot * from_n;
    let dperp = (from_n + to_n) / (1.0 + ndot);
    (u - dperp * u.dot(&perp), v - dperp * v.dot(&perp))
}

/// An arbitrary unit tangent vector perpendicular to `n`.
fn any_tangent(n: Vector3<f64>) -> Vector3<f64> {
    let axis = if n.x.abs() <= n.y.abs() && n.x.abs() <= n.z.abs() {
        Vector3::x()
    } else if n.y.abs() <= n.z.abs() {
        Vector3::y()
    } else {
        Vector3::z()
    };
    (axis - n * axis.dot(&n)).normalize()
}

/// Mixed-Voronoi corner areas of a triangle (Meyer et al.). For non-obtuse
/// triangles each corner gets its Voronoi cell area,
/// `(|AB|^2 cot C + |AC|^2 cot B) / 8`; obtuse triangles give half the face
/// area to the obtuse corner and a quarter to each of the others. The three
/// corner areas always sum to the face area.
fn corner_areas(p: [Point3; 3]) -> [f64; 3] {
    let e = [p[2] - p[1], p[0] - p[2], p[1] - p[0]];
    let area = 0.5 * e[0].cross(&e[1]).norm();
    if area <= 0.0 {
        return [0.0; 3];
    }
    // Dot product of the two edges leaving each corner; negative = obtuse.
    let cosd = [
        e[2].dot(&-e[1]),   // corner 0: p1-p0, p2-p0
        e[0].dot(&-e[2]),   // corner 1: p2-p1, p0-p1
        e[1].dot(&-e[0]),   // corner 2: p0-p2, p1-p2
    ];
    if let Some(obtuse) = cosd.iter().position(|&d| d < 0.0) {
        let mut w = [area / 4.0; 3];
        w[obtuse] = area / 2.0;
        return w;
    }
    // Non-obtuse: cot at corner k = cos/sin = dot / (2*area) since
    // |a||b|sin(angle) = 2*area for the adjacent edge pair.
    let cot = [
        cosd[0] / (2.0 * area),
        cosd[1] / (2.0 * area),
        cosd[2] / (2.0 * area),
    ];
    // Edge e[j] is opposite corner j, so the angle across e[j] is cot[j];
    // corner k is flanked by the two edges e[j], j != k.
    let l2 = [e[0].norm_squared(), e[1].norm_squared(), e[2].norm_squared()];
    let mut w = [0.0; 3];
    for k in 0..3 {
        let (i, j) = ((k + 1) % 3, (k + 2) % 3);
        w[k] = (l2[i] * cot[i] + l2[j] * cot[j]) / 8.0;
    }
    w
}

type Point3 = nalgebra::Point3<f64>;

struct FaceFrame {
    t: Vector3<f64>,
    b: Vector3<f64>,
    n: Vector3<f64>,
    /// Edge vectors: `e[j]` runs opposite corner j, from corner (j+1) to (j+2).
    e: [Vector3<f64>; 3],
    corners: [VertexId; 3],
    weights: [f64; 3],
}

fn face_frame(s: &Surface, positions: &[Point3], f: FaceId) -> Option<FaceFrame> {
    let corners = s.face_vertices(f);
    let p = corners.map(|v| positions[v as usize]);
    let e = [p[2] - p[1], p[0] - p[2], p[1] - p[0]];
    let raw = e[2].cross(&(-e[1]));
    let area2 = raw.norm();
    if area2 <= f64::EPSILON {
        // A geometrically degenerate face contributes nothing.
        log::warn!("face {f} is degenerate; skipping it in curvature estimation");
        return None;
    }
    let n = raw / area2;
    let t = e[0].normalize();
    let b = n.cross(&t);
    Some(FaceFrame { t, b, n, e, corners, weights: corner_areas(p) })
}

/// Estimates per-vertex principal curvatures and directions.
///
/// Vertices with no incident faces get zero curvature and an arbitrary
/// tangent frame; degenerate (zero-area) faces are skipped with a warning.
pub fn estimate_curvature(s: &Surface) -> Vec<VertexCurvature> {
    estimate_curvature_impl(s, s.positions(), s.normals())
}

/// [`estimate_curvature`] over deformed geometry: the state's positions and
/// normals replace the surface's own.
pub fn estimate_curvature_state(state: &MeshState) -> Vec<VertexCurvature> {
    estimate_curvature_impl(state.surface(), state.positions(), state.normals())
}

fn estimate_curvature_impl(
    s: &Surface,
    positions: &[Point3],
    normals: &[Vector3<f64>],
) -> Vec<VertexCurvature> {
    let nv = s.vertex_count();
    // Provisional tangent frames, shared by accumulation and diagonalization.
    let frames: Vec<(Vector3<f64>, Vector3<f64>)> = (0..nv)
        .map(|v| {
            let n = normals[v];
            let u = any_tangent(n);
            (u, n.cross(&u))
        })
        .collect();

    // Accumulated (ku, kuv, kv) per vertex plus total corner weight.
    let mut acc = vec![Vector3::<f64>::zeros(); nv];
    let mut wsum = vec![0.0f64; nv];

    for f in 0..s.face_count() as FaceId {
        let Some(frame) = face_frame(s, positions, f) else { continue };
        let n_at = frame.corners.map(|v| normals[v as usize]);

        // Least-squares fit of the symmetric form (a, b, c) in the face
        // frame from the normal differences along the three edges.
        let mut ata = Matrix3::<f64>::zeros();
        let mut atr = Vector3::<f64>::zeros();
        for j in 0..3 {
            let eu = frame.e[j].dot(&frame.t);
            let ev = frame.e[j].dot(&frame.b);
            let dn = n_at[(j + 2) % 3] - n_at[(j + 1) % 3];
            let rhs = [dn.dot(&frame.t), dn.dot(&frame.b)];
            let rows = [[eu, ev, 0.0], [0.0, eu, ev]];
            for (row, r) in rows.iter().zip(rhs) {
                for a in 0..3 {
                    for b in 0..3 {
                        ata[(a, b)] += row[a] * row[b];
                    }
                    atr[a] += row[a] * r;
                }
            }
        }
        let Some(sol) = ata.lu().solve(&atr) else {
            log::warn!("curvature fit is singular on face {f}; skipping it");
            continue;
        };
        let (fa, fb, fc) = (sol.x, sol.y, sol.z);

        for (k, &v) in frame.corners.iter().enumerate() {
            let (u_p, v_p) = frames[v as usize];
            let (ru, rv) = rotate_frame(u_p, v_p, normals[v as usize], frame.n);
            let (u1, v1) = (ru.dot(&frame.t), ru.dot(&frame.b));
            let (u2, v2) = (rv.dot(&frame.t), rv.dot(&frame.b));
            let ku = fa * u1 * u1 + 2.0 * fb * u1 * v1 + fc * v1 * v1;
            let kuv = fa * u1 * u2 + fb * (u1 * v2 + u2 * v1) + fc * v1 * v2;
            let kv = fa * u2 * u2 + 2.0 * fb * u2 * v2 + fc * v2 * v2;
            let w = frame.weights[k];
            acc[v as usize] += w * Vector3::new(ku, kuv, kv);
            wsum[v as usize] += w;
        }
    }

    (0..nv)
        .map(|v| {
            let (u_p, v_p) = frames[v];
            if wsum[v] > 0.0 {
                let k = acc[v] / wsum[v];
                diagonalize_second_form(
                    SecondForm2x2::new(k.x, k.y, k.z),
                    u_p,
                    v_p,
                    normals[v],
                )
            } else {
                // An isolated vertex has no geometry to estimate from.
                VertexCurvature { k1: 0.0, k2: 0.0, e1: u_p, e2: v_p }
            }
        })
        .collect()
}

/// Diagonalizes a second fundamental form given in the tangent frame
/// `(u, v)` of a vertex with the given normal.
///
/// Returns principal curvatures `k1 >= k2` (their sum equals the form's
/// trace exactly) and unit principal directions with `(e1, e2, normal)`
/// right-handed. At umbilics — `|k1 - k2| < 1e-12`, where every direction is
/// principal — `e1` is the frame's first axis `u`.
pub fn diagonalize_second_form(
    m: SecondForm2x2,
    u: Vector3<f64>,
    v: Vector3<f64>,
    normal: Vector3<f64>,
) -> VertexCurvature {
    let (ku, kuv, kv) = (m.e, m.f, m.g);
    let half = 0.5 * (ku + kv);
    let disc = (0.25 * (ku - kv) * (ku - kv) + kuv * kuv).sqrt();
    let k1 = half + disc;
    let k2 = half - disc;
    // Eigenvector of [[ku, kuv], [kuv, kv]] for k1; pick the better
    // conditioned of the two algebraic forms. At umbilics the direction is
    // arbitrary, so resolve the tie deterministically to the frame axis.
    let c1 = Vector2::new(kuv, k1 - ku);
    let c2 = Vector2::new(k1 - kv, kuv);
    let c = if c1.norm_squared() >= c2.norm_squared() { c1 } else { c2 };
    let e1 = if k1 - k2 >= 1e-12 && c.norm_squared() > 0.0 {
        (c.x * u + c.y * v).normalize()
    } else {
        u
    };
    let e2 = normal.cross(&e1).normalize();
    VertexCurvature { k1, k2, e1, e2 }
}

/// Estimates the per-vertex derivative-of-curvature tensor, given the
/// curvature field from [`estimate_curvature`].
///
/// Per face, the four unique tensor components are the least-squares fit to
/// the differences of the endpoint second fundamental forms along the three
/// edges (nine equations). Face tensors are rotated into each vertex's
/// principal frame and averaged with the same corner weights curvature uses.
pub fn estimate_curvature_derivative(
    s: &Surface,
    curvature: &[VertexCurvature],
) -> Result<Vec<CurvatureTensor>, CurvatureError> {
    estimate_curvature_derivative_impl(s, s.positions(), s.normals(), curvature)
}

/// [`estimate_curvature_derivative`] over deformed geometry.
pub fn estimate_curvature_derivative_state(
    state: &MeshState,
    curvature: &[VertexCurvature],
) -> Result<Vec<CurvatureTensor>, CurvatureError> {
    estimate_curvature_derivative_impl(
        state.surface(),
        state.positions(),
        state.normals(),
        curvature,
    )
}

fn estimate_curvature_derivative_impl(
    s: &Surface,
    positions: &[Point3],
    normals: &[Vector3<f64>],
    curvature: &[VertexCurvature],
) -> Result<Vec<CurvatureTensor>, CurvatureError> {
    check_field_length("curvature field", s.vertex_count(), curvature.len())?;
    let nv = s.vertex_count();
    let mut acc = vec![Vector4::<f64>::zeros(); nv];
    let mut wsum = vec![0.0f64; nv];

    for f in 0..s.face_count() as FaceId {
        let Some(frame) = face_frame(s, positions, f) else { continue };

        // Each corner's curvature expressed in the face frame. With the
        // form diagonal in the vertex frame, II(x, y) = sum of
        // k_i (x . e_i)(y . e_i) over the rotated principal axes.
        let mut fcurv = [Vector3::<f64>::zeros(); 3];
        for (k, &v) in frame.corners.iter().enumerate() {
            let cv = &curvature[v as usize];
            let (r1, r2) = rotate_frame(cv.e1, cv.e2, normals[v as usize], frame.n);
            let (t1, b1) = (r1.dot(&frame.t), r1.dot(&frame.b));
            let (t2, b2) = (r2.dot(&frame.t), r2.dot(&frame.b));
            fcurv[k] = Vector3::new(
                cv.k1 * t1 * t1 + cv.k2 * t2 * t2,
                cv.k1 * t1 * b1 + cv.k2 * t2 * b2,
                cv.k1 * b1 * b1 + cv.k2 * b2 * b2,
            );
        }

        // Least squares for (a, b, c, d) from d(form)/d(edge).
        let mut ata = Matrix4::<f64>::zeros();
        let mut atr = Vector4::<f64>::zeros();
        for j in 0..3 {
            let eu = frame.e[j].dot(&frame.t);
            let ev = frame.e[j].dot(&frame.b);
            let diff = fcurv[(j + 2) % 3] - fcurv[(j + 1) % 3];
            let rows = [
                [eu, ev, 0.0, 0.0],
                [0.0, eu, ev, 0.0],
                [0.0, 0.0, eu, ev],
            ];
            for (row, r) in rows.iter().zip([diff.x, diff.y, diff.z]) {
                for a in 0..4 {
                    for b in 0..4 {
                        ata[(a, b)] += row[a] * row[b];
                    }
                    atr[a] += row[a] * r;
                }
            }
        }
        let Some(sol) = ata.lu().solve(&atr) else {
            log::warn!("curvature-derivative fit is singular on face {f}; skipping it");
            continue;
        };
        let face_c = CurvatureTensor { a: sol.x, b: sol.y, c: sol.z, d: sol.w };

        for (k, &v) in frame.corners.iter().enumerate() {
            let cv = &curvature[v as usize];
            let (ru, rv) = rotate_frame(cv.e1, cv.e2, normals[v as usize], frame.n);
            // Components of the rotated vertex axes in the face frame.
            let ut = Vector2::new(ru.dot(&frame.t), ru.dot(&frame.b));
            let vt = Vector2::new(rv.dot(&frame.t), rv.dot(&frame.b));
            let projected = CurvatureTensor {
                a: face_c.contract(ut, ut, ut),
                b: face_c.contract(ut, ut, vt),
                c: face_c.contract(ut, vt, vt),
                d: face_c.contract(vt, vt, vt),
            };
            let w = frame.weights[k];
            acc[v as usize] += w * Vector4::new(projected.a, projected.b, projected.c, projected.d);
            wsum[v as usize] += w;
        }
    }

    Ok((0..nv)
        .map(|v| {
            if wsum[v] > 0.0 {
                let t = acc[v] / wsum[v];
                CurvatureTensor { a: t.x, b: t.y, c: t.z, d: t.w }
            } else {
                CurvatureTensor::default()
            }
        })
        .collect())
}

/// Names of the vertex properties [`CurvatureField::store`] writes.
const SCALAR_PROPS: [&str; 2] = ["curv_k1", "curv_k2"];
const VEC3_PROPS: [&str; 2] = ["curv_e1", "curv_e2"];
const TENSOR_PROPS: [&str; 4] = ["dcurv_a", "dcurv_b", "dcurv_c", "dcurv_d"];

/// A complete per-vertex curvature description: principal curvatures and
/// directions, optionally with the derivative-of-curvature tensor.
#[derive(Debug, Clone, Default)]
pub struct CurvatureField {
    pub vertices: Vec<VertexCurvature>,
    pub derivative: Option<Vec<CurvatureTensor>>,
}

impl CurvatureField {
    /// Estimates principal curvatures for the surface's rest geometry.
    pub fn estimate(s: &Surface) -> CurvatureField {
        CurvatureField { vertices: estimate_curvature(s), derivative: None }
    }

    /// Estimates principal curvatures and their derivative tensor.
    pub fn estimate_with_derivative(s: &Surface) -> CurvatureField {
        let vertices = estimate_curvature(s);
        let derivative = estimate_curvature_derivative(s, &vertices)
            .expect("field length matches by construction");
        CurvatureField { vertices, derivative: Some(derivative) }
    }

    /// Estimates both parts over deformed geometry.
    pub fn estimate_state(state: &MeshState) -> CurvatureField {
        let vertices = estimate_curvature_state(state);
        let derivative = estimate_curvature_derivative_state(state, &vertices)
            .expect("field length matches by construction");
        CurvatureField { vertices, derivative: Some(derivative) }
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Persists the field into the surface's vertex property tables
    /// (`curv_k1`, `curv_k2`, `curv_e1`, `curv_e2`, and `dcurv_a` through
    /// `dcurv_d` when the derivative is present), replacing any previous
    /// values.
    pub fn store(&self, s: &mut Surface) -> Result<(), CurvatureError> {
        check_field_length("curvature field", s.vertex_count(), self.vertices.len())?;
        if let Some(d) = &self.derivative {
            check_field_length("derivative field", s.vertex_count(), d.len())?;
        }
        let kind = ElementKind::Vertex;
        let mut managed: Vec<&str> = SCALAR_PROPS.iter().chain(&TENSOR_PROPS).copied().collect();
        managed.extend(VEC3_PROPS);
        for name in managed {
            let _ = s.remove_property(kind, name);
        }
        let k1 = s.add_scalar_property(kind, SCALAR_PROPS[0]).expect("name freed above");
        let k2 = s.add_scalar_property(kind, SCALAR_PROPS[1]).expect("name freed above");
        let e1 = s.add_vec3_property(kind, VEC3_PROPS[0]).expect("name freed above");
        let e2 = s.add_vec3_property(kind, VEC3_PROPS[1]).expect("name freed above");
        for (v, c) in self.vertices.iter().enumerate() {
            let v = v as VertexId;
            s.set_scalar(k1, v, c.k1);
            s.set_scalar(k2, v, c.k2);
            s.set_vec3(e1, v, c.e1);
            s.set_vec3(e2, v, c.e2);
        }
        if let Some(tensors) = &self.derivative {
            let handles = TENSOR_PROPS
                .map(|name| s.add_scalar_property(kind, name).expect("name freed above"));
            for (v, t) in tensors.iter().enumerate() {
                let v = v as VertexId;
                for (h, value) in handles.iter().zip([t.a, t.b, t.c, t.d]) {
                    s.set_scalar(*h, v, value);
                }
            }
        }
        Ok(())
    }

    /// Reads a field previously written by [`CurvatureField::store`].
    pub fn load(s: &Surface) -> Result<CurvatureField, CurvatureError> {
        let kind = ElementKind::Vertex;
        let missing = |e: crate::mesh::MeshError| CurvatureError::MissingCurvature(e.to_string());
        let k1 = s.scalar_property(kind, SCALAR_PROPS[0]).map_err(missing)?;
        let k2 = s.scalar_property(kind, SCALAR_PROPS[1]).map_err(missing)?;
        let e1 = s.vec3_property(kind, VEC3_PROPS[0]).map_err(missing)?;
        let e2 = s.vec3_property(kind, VEC3_PROPS[1]).map_err(missing)?;
        let vertices = (0..s.vertex_count() as VertexId)
            .map(|v| VertexCurvature {
                k1: s.scalar(k1, v),
                k2: s.scalar(k2, v),
                e1: s.vec3(e1, v),
                e2: s.vec3(e2, v),
            })
            .collect();
        let derivative = match TENSOR_PROPS.map(|name| s.scalar_property(kind, name)) {
            [Ok(a), Ok(b), Ok(c), Ok(d)] => Some(
                (0..s.vertex_count() as VertexId)
                    .map(|v| CurvatureTensor {
                        a: s.scalar(a, v),
                        b: s.scalar(b, v),
                        c: s.scalar(c, v),
                        d: s.scalar(d, v),
                    })
                    .collect(),
            ),
            _ => None,
        };
        Ok(CurvatureField { vertices, derivative })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shapes;
    use nalgebra::{Rotation3, Vector2};
    use rand::{Rng, SeedableRng};

    #[test]
    fn flat_grid_has_zero_curvature() {
        let s = shapes::grid(8, 8, 0.5);
        for c in estimate_curvature(&s) {
            assert!(c.k1.abs() < 1e-10);
            assert!(c.k2.abs() < 1e-10);
        }
    }

    /// Sphere with exact (radial) normals: isolates the estimator from the
    /// discrete-normal approximation.
    fn exact_sphere(level: u32, radius: f64) -> crate::mesh::Surface {
        let base = shapes::icosphere(level);
        let mut s = crate::mesh::Surface::build(
            base.positions().iter().map(|p| nalgebra::Point3::from(p.coords * radius)).collect(),
            &base.faces().collect::<Vec<_>>(),
        )
        .unwrap();
        let normals: Vec<Vector3<f64>> = s.positions().iter().map(|p| p.coords / radius).collect();
        s.set_normals(&normals);
        s
    }

    #[test]
    fn unit_sphere_with_exact_normals_is_exact() {
        // With radial normals the difference of normals along an edge equals
        // the difference of positions, so the least-squares fit is exact up
        // to rounding regardless of the corner weighting.
        let s = exact_sphere(2, 1.0);
        for (v, c) in estimate_curvature(&s).iter().enumerate() {
            assert!((c.k1 - 1.0).abs() < 1e-9, "v{v}: k1 = {}", c.k1);
            assert!((c.k2 - 1.0).abs() < 1e-9, "v{v}: k2 = {}", c.k2);
        }
    }

    #[test]
    fn unit_sphere_with_discrete_normals_is_close() {
        // Area-weighted vertex normals deviate slightly from radial, which
        // bounds the end-to-end accuracy.
        let s = shapes::icosphere(3);
        let curv = estimate_curvature(&s);
        let mean_err: f64 =
            curv.iter().map(|c| (c.k1 - 1.0).abs() + (c.k2 - 1.0).abs()).sum::<f64>()
                / (2.0 * curv.len() as f64);
        assert!(mean_err < 0.05, "mean error {mean_err}");
        for c in &curv {
            assert!((c.k1 - 1.0).abs() < 0.15, "k1 = {}", c.k1);
            assert!((c.k2 - 1.0).abs() < 0.15, "k2 = {}", c.k2);
        }
    }

    #[test]
    fn sphere_curvature_scales_inversely_with_radius() {
        for c in estimate_curvature(&exact_sphere(2, 2.0)) {
            assert!((c.k1 - 0.5).abs() < 1e-9);
            assert!((c.k2 - 0.5).abs() < 1e-9);
        }
    }

    #[test]
    fn principal_frame_is_orthonormal() {
        let s = shapes::torus(1.0, 0.3, 24, 16);
        let curv = estimate_curvature(&s);
        for (v, c) in curv.iter().enumerate() {
            let n = s.normal(v as u32);
            assert!((c.e1.norm() - 1.0).abs() < 1e-9);
            assert!((c.e2.norm() - 1.0).abs() < 1e-9);
            assert!(c.e1.dot(&c.e2).abs() < 1e-9);
            assert!(c.e1.dot(&n).abs() < 1e-9);
            assert!(c.e2.dot(&n).abs() < 1e-9);
            // Right-handed: e1 x e2 = n.
            assert!((c.e1.cross(&c.e2) - n).norm() < 1e-9);
            assert!(c.k1 >= c.k2);
        }
    }

    #[test]
    fn cylinder_principal_curvatures_and_directions() {
        // Radius 0.5 tube: k1 = 2 around the circumference, k2 = 0 along
        // the axis. Boundary rows are skipped: their one-rings are cut.
        let (nu, rows) = (64, 41);
        let s = shapes::cylinder(0.5, 2.0, nu, rows);
        let curv = estimate_curvature(&s);
        for i in 0..nu {
            for j in 2..rows - 2 {
                let c = &curv[i * rows + j];
                assert!((c.k1 - 2.0).abs() < 0.02, "k1 = {}", c.k1);
                assert!(c.k2.abs() < 0.02, "k2 = {}", c.k2);
                assert!(c.e1.z.abs() < 0.02, "e1 not circumferential: {}", c.e1);
                assert!(c.e2.z.abs() > 0.999, "e2 not axial: {}", c.e2);
            }
        }
    }

    #[test]
    fn torus_matches_analytic_curvatures() {
        // At angle phi around the tube: k1 = 1/minor,
        // k2 = cos(phi) / (major + minor*cos(phi)).
        let (major, minor, nu, nv) = (1.0, 0.25, 96, 48);
        let s = shapes::torus(major, minor, nu, nv);
        let curv = estimate_curvature(&s);
        for (i, j) in [(0, 0), (24, 12), (48, 24), (7, 31)] {
            let phi = 2.0 * std::f64::consts::PI * j as f64 / nv as f64;
            let k1_true = 1.0 / minor;
            let k2_true = phi.cos() / (major + minor * phi.cos());
            let c = &curv[i * nv + j];
            assert!((c.k1 - k1_true).abs() < 0.05 * k1_true.abs(), "({i},{j}): k1 {}", c.k1);
            assert!((c.k2 - k2_true).abs() < 0.05 * k1_true, "({i},{j}): k2 {}", c.k2);
        }
    }

    #[test]
    fn saddle_has_opposite_principal_curvatures() {
        // z = (x^2 - y^2)/2 at the origin, normals pointing up. Under the
        // sphere-positive convention the downward-bending y section curves
        // away from the normal: k1 = +1 along y, k2 = -1 along x.
        let n = 41;
        let s = shapes::height_field(n, n, 0.05, |x, y| 0.5 * (x * x - y * y));
        let center = (n / 2) * n + n / 2;
        let c = estimate_curvature(&s)[center];
        assert!((c.k1 - 1.0).abs() < 0.03, "k1 = {}", c.k1);
        assert!((c.k2 + 1.0).abs() < 0.03, "k2 = {}", c.k2);
        assert!(c.e1.y.abs() > 0.999, "e1 = {}", c.e1);
        assert!(c.e2.x.abs() > 0.999, "e2 = {}", c.e2);
    }

    #[test]
    fn curvature_is_rigid_motion_invariant() {
        let s = shapes::torus(1.0, 0.3, 32, 20);
        let rot = Rotation3::from_euler_angles(0.4, -1.1, 2.2);
        let shift = Vector3::new(3.0, -1.0, 0.5);
        let moved = crate::mesh::Surface::build(
            s.positions().iter().map(|p| rot * p + shift).collect(),
            &s.faces().collect::<Vec<_>>(),
        )
        .unwrap();
        let a = estimate_curvature(&s);
        let b = estimate_curvature(&moved);
        for v in 0..s.vertex_count() {
            assert!((a[v].k1 - b[v].k1).abs() < 1e-9);
            assert!((a[v].k2 - b[v].k2).abs() < 1e-9);
            // Directions rotate along (up to sign; the torus is nowhere
            // umbilic so they are well defined).
            assert!((rot * a[v].e1).dot(&b[v].e1).abs() > 1.0 - 1e-9);
        }
    }

    #[test]
    fn diagonalization_reconstructs_the_form() {
        let u = Vector3::x();
        let v = Vector3::y();
        let n = Vector3::z();
        let c = diagonalize_second_form(SecondForm2x2::new(3.0, 1.0, 1.0), u, v, n);
        let r2 = 2f64.sqrt();
        assert!((c.k1 - (2.0 + r2)).abs() < 1e-12);
        assert!((c.k2 - (2.0 - r2)).abs() < 1e-12);
        // Eigenvector check in (u, v) coordinates.
        let (x, y) = (c.e1.dot(&u), c.e1.dot(&v));
        assert!((3.0 * x + y - c.k1 * x).abs() < 1e-9);
        assert!((x + y - c.k1 * y).abs() < 1e-9);
    }

    #[test]
    fn diagonalization_of_equal_diagonal_with_cross_term() {
        // [[1.5, 0.5], [0.5, 1.5]] has eigenvalues 2 and 1 with the major
        // axis at 45 degrees between u and v.
        let c = diagonalize_second_form(
            SecondForm2x2::new(1.5, 0.5, 1.5),
            Vector3::x(),
            Vector3::y(),
            Vector3::z(),
        );
        assert!((c.k1 - 2.0).abs() < 1e-12);
        assert!((c.k2 - 1.0).abs() < 1e-12);
        let diag = (Vector3::x() + Vector3::y()).normalize();
        assert!(c.e1.dot(&diag).abs() > 1.0 - 1e-12, "e1 = {}", c.e1);
    }

    #[test]
    fn diagonalization_preserves_trace() {
        // The closed form computes k1 + k2 = e + g with no cancellation.
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let m = SecondForm2x2::new(
                20.0 * rng.gen::<f64>() - 10.0,
                20.0 * rng.gen::<f64>() - 10.0,
                20.0 * rng.gen::<f64>() - 10.0,
            );
            let c = diagonalize_second_form(m, Vector3::x(), Vector3::y(), Vector3::z());
            assert!((c.k1 + c.k2 - m.trace()).abs() <= 1e-12);
            assert!(c.k1 >= c.k2);
        }
    }

    #[test]
    fn diagonalization_handles_umbilic() {
        let c = diagonalize_second_form(
            SecondForm2x2::new(2.0, 0.0, 2.0),
            Vector3::x(),
            Vector3::y(),
            Vector3::z(),
        );
        assert_eq!(c.k1, 2.0);
        assert_eq!(c.k2, 2.0);
        // The tie breaks to the frame's first axis.
        assert_eq!(c.e1, Vector3::x());
        assert!((c.e1.norm() - 1.0).abs() < 1e-12);
        assert!(c.e1.dot(&c.e2).abs() < 1e-12);
        // Near-umbilic within the tie threshold behaves the same.
        let c = diagonalize_second_form(
            SecondForm2x2::new(2.0, 1e-14, 2.0),
            Vector3::x(),
            Vector3::y(),
            Vector3::z(),
        );
        assert_eq!(c.e1, Vector3::x());
    }

    #[test]
    fn convex_sphere_is_everywhere_convex() {
        // Both principal curvatures stay positive on a convex surface.
        for c in estimate_curvature(&shapes::icosphere(3)) {
            assert!(c.k2 > 0.0, "k2 = {}", c.k2);
        }
    }

    #[test]
    fn sphere_error_shrinks_monotonically_under_refinement() {
        let mean_err = |level: u32| -> f64 {
            let curv = estimate_curvature(&shapes::icosphere(level));
            curv.iter().map(|c| (c.k1 - 1.0).abs() + (c.k2 - 1.0).abs()).sum::<f64>()
                / (2.0 * curv.len() as f64)
        };
        let errs: Vec<f64> = (2..=4).map(mean_err).collect();
        assert!(errs[1] < errs[0], "level 3 ({}) not below level 2 ({})", errs[1], errs[0]);
        assert!(errs[2] < errs[1], "level 4 ({}) not below level 3 ({})", errs[2], errs[1]);
    }

    #[test]
    fn field_store_and_load_round_trip() {
        let mut s = shapes::torus(1.0, 0.3, 16, 12);
        let field = CurvatureField::estimate_with_derivative(&s);
        field.store(&mut s).unwrap();
        let back = CurvatureField::load(&s).unwrap();
        assert_eq!(back.len(), field.len());
        for (a, b) in field.vertices.iter().zip(&back.vertices) {
            assert_eq!(a.k1, b.k1);
            assert_eq!(a.k2, b.k2);
            assert_eq!(a.e1, b.e1);
            assert_eq!(a.e2, b.e2);
        }
        let (da, db) = (field.derivative.unwrap(), back.derivative.unwrap());
        for (a, b) in da.iter().zip(&db) {
            assert_eq!((a.a, a.b, a.c, a.d), (b.a, b.b, b.c, b.d));
        }
        // Storing again replaces rather than erroring on duplicate names.
        CurvatureField::estimate(&s.clone()).store(&mut s).unwrap();
        assert!(CurvatureField::load(&s).unwrap().derivative.is_none());
    }

    #[test]
    fn field_load_without_stored_data_reports_missing() {
        let s = shapes::tetrahedron();
        assert!(matches!(
            CurvatureField::load(&s),
            Err(CurvatureError::MissingCurvature(_))
        ));
    }

    #[test]
    fn deformed_state_curvature_tracks_the_deformation() {
        // Scaling a unit sphere's state to radius 2 halves its curvature;
        // the rest surface is untouched.
        let s = exact_sphere(2, 1.0);
        let state = crate::anim::MeshState::new(
            &s,
            s.positions().iter().map(|p| nalgebra::Point3::from(p.coords * 2.0)).collect(),
            s.normals().to_vec(),
            1.25,
        )
        .unwrap();
        for c in estimate_curvature_state(&state) {
            assert!((c.k1 - 0.5).abs() < 1e-9);
            assert!((c.k2 - 0.5).abs() < 1e-9);
        }
        let field = CurvatureField::estimate_state(&state);
        let t = &field.derivative.unwrap()[0];
        for c in [t.a, t.b, t.c, t.d] {
            assert!(c.abs() < 1e-8);
        }
    }

    #[test]
    fn sphere_curvature_derivative_vanishes() {
        let s = exact_sphere(2, 1.0);
        let curv = estimate_curvature(&s);
        for t in estimate_curvature_derivative(&s, &curv).unwrap() {
            for c in [t.a, t.b, t.c, t.d] {
                assert!(c.abs() < 1e-8, "tensor component {c}");
            }
        }
    }

    #[test]
    fn flat_grid_curvature_derivative_vanishes() {
        let s = shapes::grid(8, 8, 0.5);
        let curv = estimate_curvature(&s);
        for t in estimate_curvature_derivative(&s, &curv).unwrap() {
            for c in [t.a, t.b, t.c, t.d] {
                assert!(c.abs() < 1e-10);
            }
        }
    }

    #[test]
    fn cubic_height_field_matches_third_derivatives() {
        // z = x^3/6 + x*y^2/2. At the origin all first and second
        // derivatives vanish, so the curvature-derivative tensor is the
        // third-derivative tensor up to the orientation convention: with the
        // normal pointing up and sphere-positive signs, C = -(D^3 f), i.e.
        // contracting along w gives -(w_x^3 + 3 w_x w_y^2). The mixed terms
        // pick up more discretization noise than the pure ones, hence the
        // looser tolerance than the ruled-surface oracle below.
        let n = 81;
        let s = shapes::height_field(n, n, 0.025, |x, y| x * x * x / 6.0 + x * y * y / 2.0);
        let center = ((n / 2) * n + n / 2) as usize;
        let curv = estimate_curvature(&s);
        let dcurv = estimate_curvature_derivative(&s, &curv).unwrap();
        let c = &curv[center];
        let t = &dcurv[center];
        for (wx, wy) in [(1.0, 0.0), (0.0, 1.0), (0.7, 0.3), (-0.5, 0.8)] {
            let w3 = Vector3::new(wx, wy, 0.0).normalize();
            let w = Vector2::new(w3.dot(&c.e1), w3.dot(&c.e2));
            let got = t.contract_cubed(w);
            let want = -(w3.x.powi(3) + 3.0 * w3.x * w3.y * w3.y);
            assert!(
                (got - want).abs() < 0.15 * want.abs().max(0.3),
                "w = ({wx}, {wy}): got {got}, want {want}"
            );
        }
    }

    #[test]
    fn ruled_cubic_matches_finite_difference_oracle() {
        // z = x^3 with normals pointing up. Under the sphere-positive
        // convention a graph section bending toward its normal is negative,
        // so the analytic normal curvature along x is
        // k(x) = -6x / (1 + 9x^4)^(3/2); its arc-length derivative at the
        // origin is the only nonzero tensor component. The oracle below
        // differences the analytic field directly and is independent of the
        // estimator.
        let h = 0.05;
        let kappa = |x: f64| -6.0 * x / (1.0 + 9.0 * x.powi(4)).powf(1.5);
        let arc = |x0: f64, x1: f64| {
            // Arc length of z = x^3 between x0 and x1, fine midpoint rule.
            let n = 1000;
            let dx = (x1 - x0) / n as f64;
            (0..n)
                .map(|i| {
                    let x = x0 + (i as f64 + 0.5) * dx;
                    (1.0 + 9.0 * x.powi(4)).sqrt() * dx
                })
                .sum::<f64>()
        };
        let oracle = (kappa(h) - kappa(-h)) / arc(-h, h);

        let n = 41;
        let s = shapes::height_field(n, n, h, |x, _| x * x * x);
        let center = ((n / 2) * n + n / 2) as usize;
        let curv = estimate_curvature(&s);
        let t = estimate_curvature_derivative(&s, &curv).unwrap()[center];
        let c = &curv[center];
        let along = |w3: Vector3<f64>| {
            let w = Vector2::new(w3.dot(&c.e1), w3.dot(&c.e2));
            t.contract_cubed(w)
        };
        let got = along(Vector3::x());
        assert!(
            (got - oracle).abs() < 0.1 * oracle.abs(),
            "d(kappa)/ds along x: got {got}, oracle {oracle}"
        );
        // The surface is ruled along y: everything else vanishes.
        assert!(along(Vector3::y()).abs() < 0.1 * oracle.abs());
    }

    #[test]
    fn derivative_field_length_checked() {
        let s = shapes::tetrahedron();
        let err = estimate_curvature_derivative(&s, &[]).unwrap_err();
        assert!(matches!(err, CurvatureError::MissingCurvature(_)));
    }

    #[test]
    fn corner_areas_sum_to_face_area() {
        // Right triangle (non-obtuse, cot 90 = 0) and an obtuse one.
        let tris = [
            [
                nalgebra::Point3::new(0.0, 0.0, 0.0),
                nalgebra::Point3::new(2.0, 0.0, 0.0),
                nalgebra::Point3::new(0.0, 1.0, 0.0),
            ],
            [
                nalgebra::Point3::new(0.0, 0.0, 0.0),
                nalgebra::Point3::new(4.0, 0.0, 0.0),
                nalgebra::Point3::new(2.0, 0.2, 0.0),
            ],
        ];
        for p in tris {
            let w = corner_areas(p);
            let area = 0.5 * (p[1] - p[0]).cross(&(p[2] - p[0])).norm();
            assert!(w.iter().all(|&x| x > 0.0));
            assert!((w.iter().sum::<f64>() - area).abs() < 1e-12);
        }
    }

    #[test]
    fn obtuse_corner_takes_half_the_area() {
        let p = [
            nalgebra::Point3::new(0.0, 0.0, 0.0),
            nalgebra::Point3::new(4.0, 0.0, 0.0),
            nalgebra::Point3::new(2.0, 0.2, 0.0),
        ];
        let area = 0.5 * (p[1] - p[0]).cross(&(p[2] - p[0])).norm();
        let w = corner_areas(p);
        assert!((w[2] - area / 2.0).abs() < 1e-12);
        assert!((w[0] - area / 4.0).abs() < 1e-12);
        assert!((w[1] - area / 4.0).abs() < 1e-12);
    }
}
