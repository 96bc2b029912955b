//! Segmentation of a surface into overlapping, locally parameterized
//! patches aligned to a tangent vector field.
//!
//! The pipeline has three steps. [`build_tangent_field`] turns per-vertex
//! principal directions into a smoothed per-face unit tangent field.
//! [`grow_patch`] selects a connected set of faces around a seed by
//! breadth-first expansion, bounded by a field-aligned box in the seed's
//! tangent frame. [`parameterize_patch`] flattens such a set into the plane
//! by least squares, asking the parameterization's `u` gradient to follow
//! the field and its `v` gradient the in-plane perpendicular, so texture
//! applied in UV space flows along the field. [`cover_surface`] repeats
//! seed–grow–flatten until every face belongs to at least one patch.
//!
//! Patch shapes are deliberately simple (field-aligned boxes), and
//! overlapping patches are kept independent — no blending between them is
//! attempted. Deformed geometry is not supported; fields and patches are
//! built from the rest positions.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use nalgebra::{DMatrix, DVector, Point2, Point3, Vector2, Vector3};

use crate::curvature::CurvatureField;
use crate::mesh::{FaceId, Surface, VertexId, INVALID};

/// Errors from field construction, patch growth, and parameterization.
#[derive(Debug, thiserror::Error)]
pub enum LappedError {
    /// The curvature field does not describe the surface it was paired with.
    #[error("curvature field has {got} entries, surface has {expected} vertices")]
    MissingCurvature { expected: usize, got: usize },
    /// A seed or patch face id is out of range.
    #[error("face {0} does not exist")]
    InvalidSeed(FaceId),
    /// A tangent field failed validation.
    #[error("invalid tangent field: {0}")]
    InvalidField(String),
    /// The parameterization system cannot be solved.
    #[error("singular parameterization system: {0}")]
    SingularSystem(String),
}

/// A unit tangent vector per face, lying in the face plane.
#[derive(Debug, Clone)]
pub struct TangentField {
    vectors: Vec<Vector3<f64>>,
}

impl TangentField {
    /// Wraps explicit per-face vectors, validating one unit in-plane vector
    /// per face (both to 1e-6).
    pub fn from_vectors(
        surface: &Surface,
        vectors: Vec<Vector3<f64>>,
    ) -> Result<TangentField, LappedError> {
        if vectors.len() != surface.face_count() {
            return Err(LappedError::InvalidField(format!(
                "{} vectors for {} faces",
                vectors.len(),
                surface.face_count()
            )));
        }
        for (f, t) in vectors.iter().enumerate() {
            if (t.norm() - 1.0).abs() > 1e-6 {
                return Err(LappedError::InvalidField(format!(
                    "vector for face {f} has length {}",
                    t.norm()
                )));
            }
            let n = unit_face_normal(surface, f as FaceId);
            if t.dot(&n).abs() > 1e-6 {
                return Err(LappedError::InvalidField(format!(
                    "vector for face {f} leaves the face plane"
                )));
            }
        }
        Ok(TangentField { vectors })
    }

    /// The field vector on one face.
    pub fn face(&self, f: FaceId) -> Vector3<f64> {
        self.vectors[f as usize]
    }

    pub fn vectors(&self) -> &[Vector3<f64>] {
        &self.vectors
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }
}

/// A connected face set with one UV coordinate per face corner.
///
/// Corner order matches [`Surface::face_vertices`] for the same face. The
/// seed face's first corner is pinned at UV `(0, 0)`; a shared vertex may
/// map to different UVs in different patches.
#[derive(Debug, Clone, PartialEq)]
pub struct Patch {
    faces: Vec<FaceId>,
    seed: FaceId,
    uvs: Vec<[Point2<f64>; 3]>,
}

impl Patch {
    /// Faces of the patch; the seed comes first, the rest ascend by id.
    pub fn faces(&self) -> &[FaceId] {
        &self.faces
    }

    pub fn seed(&self) -> FaceId {
        self.seed
    }

    /// Corner UVs parallel to [`Patch::faces`].
    pub fn uvs(&self) -> &[[Point2<f64>; 3]] {
        &self.uvs
    }

    /// Corner UVs of the `i`-th face in [`Patch::faces`].
    pub fn uv(&self, i: usize) -> [Point2<f64>; 3] {
        self.uvs[i]
    }
}

fn unit_face_normal(surface: &Surface, f: FaceId) -> Vector3<f64> {
    let raw = surface.face_normal_raw(f);
    let len = raw.norm();
    if len > 1e-12 {
        raw / len
    } else {
        Vector3::z()
    }
}

fn face_centroid(surface: &Surface, f: FaceId) -> Point3<f64> {
    let [a, b, c] = surface.face_vertices(f);
    let p = surface.positions();
    Point3::from(
        (p[a as usize].coords + p[b as usize].coords + p[c as usize].coords) / 3.0,
    )
}

/// Faces sharing an edge with `f`, in winding order of its half-edges.
fn face_neighbors(surface: &Surface, f: FaceId) -> impl Iterator<Item = FaceId> + '_ {
    let h0 = surface.face_halfedge(f);
    let h1 = surface.halfedge(h0).next;
    let h2 = surface.halfedge(h1).next;
    [h0, h1, h2].into_iter().filter_map(|h| {
        let g = surface.halfedge(surface.halfedge(h).twin).face;
        (g != INVALID).then_some(g)
    })
}

/// Projects `w` into the plane orthogonal to unit `n` and normalizes;
/// `None` when the projection (nearly) vanishes.
fn project_to_plane(w: &Vector3<f64>, n: &Vector3<f64>) -> Option<Vector3<f64>> {
    let in_plane = w - n * w.dot(n);
    let len = in_plane.norm();
    (len > 1e-9).then(|| in_plane / len)
}

/// The face's first edge direction: a deterministic in-plane fallback axis.
fn fallback_axis(surface: &Surface, f: FaceId) -> Vector3<f64> {
    let [a, b, _] = surface.face_vertices(f);
    let d = surface.position(b) - surface.position(a);
    let len = d.norm();
    if len > 1e-12 {
        d / len
    } else {
        Vector3::x()
    }
}

/// Builds a per-face tangent field from per-vertex principal directions.
///
/// Each face starts as the sum of its corners' maximal-curvature directions
/// `e1`, projected into the face plane and normalized; when that projection
/// (nearly) cancels — as it does wherever neighboring `e1` signs disagree —
/// the face falls back to its first edge direction. Each smoothing
/// iteration then replaces every vector by the average of itself and its
/// edge neighbors (all read from the previous iteration), re-projected and
/// renormalized, keeping the previous vector where the average degenerates.
pub fn build_tangent_field(
    surface: &Surface,
    curvature: &CurvatureField,
    smoothing_iterations: u32,
) -> Result<TangentField, LappedError> {
    if curvature.len() != surface.vertex_count() {
        return Err(LappedError::MissingCurvature {
            expected: surface.vertex_count(),
            got: curvature.len(),
        });
    }
    let mut vectors: Vec<Vector3<f64>> = (0..surface.face_count() as FaceId)
        .map(|f| {
            let n = unit_face_normal(surface, f);
            let sum: Vector3<f64> = surface
                .face_vertices(f)
                .iter()
                .map(|&v| curvature.vertices[v as usize].e1)
                .sum();
            project_to_plane(&sum, &n).unwrap_or_else(|| fallback_axis(surface, f))
        })
        .collect();

    for _ in 0..smoothing_iterations {
        let previous = vectors.clone();
        for f in 0..surface.face_count() as FaceId {
            let mut sum = previous[f as usize];
            for g in face_neighbors(surface, f) {
                sum += previous[g as usize];
            }
            let n = unit_face_normal(surface, f);
            if let Some(t) = project_to_plane(&sum, &n) {
                vectors[f as usize] = t;
            }
        }
    }
    Ok(TangentField { vectors })
}

/// Mean alignment `t_f · t_g` over all edge-adjacent face pairs.
///
/// A diagnostic for how coherent a tangent field is; smoothing iterations in
/// [`build_tangent_field`] are intended to raise it.
pub fn neighbor_alignment(surface: &Surface, field: &TangentField) -> f64 {
    let mut sum = 0.0;
    let mut pairs = 0usize;
    for f in 0..surface.face_count() as FaceId {
        for g in face_neighbors(surface, f) {
            if g > f {
                sum += field.face(f).dot(&field.face(g));
                pairs += 1;
            }
        }
    }
    if pairs == 0 {
        0.0
    } else {
        sum / pairs as f64
    }
}

/// Grows a connected face set from `seed`, bounded by a field-aligned box.
///
/// Faces are visited breadth-first across shared edges. A face is admitted
/// while its centroid, relative to the seed centroid, stays within
/// `radius` along both seed-frame axes (the seed's field vector and the
/// in-plane perpendicular); expansion continues only through admitted
/// faces. The seed is always included, so a non-positive radius yields just
/// the seed. The result lists the seed first, then the remaining faces in
/// ascending id order.
pub fn grow_patch(
    surface: &Surface,
    field: &TangentField,
    seed: FaceId,
    radius: f64,
) -> Result<Vec<FaceId>, LappedError> {
    if seed as usize >= surface.face_count() {
        return Err(LappedError::InvalidSeed(seed));
    }
    let t = field.face(seed);
    let n = unit_face_normal(surface, seed);
    let perp = n.cross(&t);
    let origin = face_centroid(surface, seed);

    let mut admitted = BTreeSet::new();
    let mut visited = vec![false; surface.face_count()];
    let mut queue = VecDeque::new();
    admitted.insert(seed);
    visited[seed as usize] = true;
    queue.push_back(seed);
    while let Some(f) = queue.pop_front() {
        for g in face_neighbors(surface, f) {
            if visited[g as usize] {
                continue;
            }
            visited[g as usize] = true;
            let delta = face_centroid(surface, g) - origin;
            if delta.dot(&t).abs() <= radius && delta.dot(&perp).abs() <= radius {
                admitted.insert(g);
                queue.push_back(g);
            }
        }
    }
    let mut faces = vec![seed];
    faces.extend(admitted.into_iter().filter(|&f| f != seed));
    Ok(faces)
}

/// In-plane orthonormal basis `(b1, b2)` of a face, right-handed with its
/// normal, plus the three corner coordinates in that basis.
struct FaceFrame {
    corners2: [Vector2<f64>; 3],
    double_area: f64,
    field2: Vector2<f64>,
}

fn face_frame(surface: &Surface, f: FaceId, t: &Vector3<f64>) -> Option<FaceFrame> {
    let [a, b, c] = surface.face_vertices(f);
    let (pa, pb, pc) = (surface.position(a), surface.position(b), surface.position(c));
    let n = surface.face_normal_raw(f);
    let n_len = n.norm();
    if n_len <= 1e-12 {
        return None;
    }
    let n = n / n_len;
    let b1 = project_to_plane(&(pb - pa), &n)?;
    let b2 = n.cross(&b1);
    let flat = |p: Point3<f64>| Vector2::new((p - pa).dot(&b1), (p - pa).dot(&b2));
    let corners2 = [flat(pa), flat(pb), flat(pc)];
    let e1 = corners2[1] - corners2[0];
    let e2 = corners2[2] - corners2[0];
    let double_area = e1.x * e2.y - e1.y * e2.x;
    if double_area.abs() <= 1e-12 {
        return None;
    }
    Some(FaceFrame {
        corners2,
        double_area,
        field2: Vector2::new(t.dot(&b1), t.dot(&b2)),
    })
}

/// Gradient of the linear hat function of corner `i` over the flattened
/// triangle: the opposite edge rotated 90° counterclockwise over twice the
/// signed area.
fn hat_gradient(frame: &FaceFrame, i: usize) -> Vector2<f64> {
    let e = frame.corners2[(i + 2) % 3] - frame.corners2[(i + 1) % 3];
    Vector2::new(-e.y, e.x) / frame.double_area
}

/// Flattens a connected face set into UV space by least squares.
///
/// The energy asks, per face and weighted by face area, that the `u`
/// gradient of the map equal the face's field vector and the `v` gradient
/// its in-plane perpendicular — both expressed in the face's own plane. The
/// gauge is fixed by pinning the first face's first corner to `(0, 0)` and
/// its second corner to the first edge expressed in that face's field frame
/// (so an edge along the field maps to `(length, 0)`). The first face in
/// `faces` is taken as the seed; UVs are shared at shared vertices, and the
/// decoupled `u` and `v` normal-equation systems are solved by Cholesky
/// factorization (a warning is logged when the estimated condition number
/// exceeds 1e10).
///
/// Fails with [`LappedError::SingularSystem`] when the face set is empty,
/// not edge-connected, or contains a (nearly) degenerate face.
pub fn parameterize_patch(
    surface: &Surface,
    faces: &[FaceId],
    field: &TangentField,
) -> Result<Patch, LappedError> {
    if faces.is_empty() {
        return Err(LappedError::SingularSystem("empty face set".to_string()));
    }
    for &f in faces {
        if f as usize >= surface.face_count() {
            return Err(LappedError::InvalidSeed(f));
        }
    }
    let in_patch: BTreeSet<FaceId> = faces.iter().copied().collect();
    if in_patch.len() != faces.len() {
        return Err(LappedError::SingularSystem(
            "face set contains duplicates".to_string(),
        ));
    }
    // Edge connectivity from the first (seed) face.
    let seed = faces[0];
    let mut reached = BTreeSet::from([seed]);
    let mut queue = VecDeque::from([seed]);
    while let Some(f) = queue.pop_front() {
        for g in face_neighbors(surface, f) {
            if in_patch.contains(&g) && reached.insert(g) {
                queue.push_back(g);
            }
        }
    }
    if reached.len() != in_patch.len() {
        return Err(LappedError::SingularSystem(
            "face set is not edge-connected".to_string(),
        ));
    }

    // Gauge: pin the seed's first corner at the origin and its second where
    // the first edge lands in the seed's field frame.
    let [s0, s1, _] = surface.face_vertices(seed);
    let edge = surface.position(s1) - surface.position(s0);
    let t_seed = field.face(seed);
    let n_seed = unit_face_normal(surface, seed);
    let mut pins: BTreeMap<VertexId, Vector2<f64>> = BTreeMap::new();
    pins.insert(s0, Vector2::zeros());
    pins.insert(
        s1,
        Vector2::new(edge.dot(&t_seed), edge.dot(&n_seed.cross(&t_seed))),
    );

    // Free vertices get consecutive columns.
    let mut column: BTreeMap<VertexId, usize> = BTreeMap::new();
    for &f in faces {
        for v in surface.face_vertices(f) {
            if !pins.contains_key(&v) {
                let next = column.len();
                column.entry(v).or_insert(next);
            }
        }
    }

    // Two rows per face and per coordinate; the u and v systems share the
    // matrix and differ only in right-hand sides.
    let rows = 2 * faces.len();
    let cols = column.len();
    let mut a = DMatrix::<f64>::zeros(rows, cols);
    let mut rhs_u = DVector::<f64>::zeros(rows);
    let mut rhs_v = DVector::<f64>::zeros(rows);
    for (k, &f) in faces.iter().enumerate() {
        let t = field.face(f);
        let frame = face_frame(surface, f, &t).ok_or_else(|| {
            LappedError::SingularSystem(format!("face {f} is degenerate"))
        })?;
        let weight = (frame.double_area.abs() * 0.5).sqrt();
        let target_u = frame.field2;
        let target_v = Vector2::new(-frame.field2.y, frame.field2.x);
        let verts = surface.face_vertices(f);
        for component in 0..2 {
            let row = 2 * k + component;
            rhs_u[row] = weight * target_u[component];
            rhs_v[row] = weight * target_v[component];
            for (i, &v) in verts.iter().enumerate() {
                let g = weight * hat_gradient(&frame, i)[component];
                if let Some(pin) = pins.get(&v) {
                    rhs_u[row] -= g * pin.x;
                    rhs_v[row] -= g * pin.y;
                } else {
                    a[(row, column[&v])] += g;
                }
            }
        }
    }

    let solved_u;
    let solved_v;
    if cols == 0 {
        solved_u = DVector::zeros(0);
        solved_v = DVector::zeros(0);
    } else {
        let normal = a.transpose() * &a;
        let chol = normal.cholesky().ok_or_else(|| {
            LappedError::SingularSystem(
                "normal equations are not positive definite".to_string(),
            )
        })?;
        let diag = chol.l_dirty().diagonal();
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for d in diag.iter() {
            lo = lo.min(*d);
            hi = hi.max(*d);
        }
        let condition = (hi / lo).powi(2);
        if condition > 1e10 {
            log::warn!(
                "patch parameterization is ill-conditioned (condition estimate {condition:.2e})"
            );
        }
        solved_u = chol.solve(&(a.transpose() * &rhs_u));
        solved_v = chol.solve(&(a.transpose() * &rhs_v));
    }

    let uv_of = |v: VertexId| -> Point2<f64> {
        if let Some(pin) = pins.get(&v) {
            Point2::new(pin.x, pin.y)
        } else {
            let i = column[&v];
            Point2::new(solved_u[i], solved_v[i])
        }
    };
    let uvs = faces
        .iter()
        .map(|&f| surface.face_vertices(f).map(uv_of))
        .collect();
    Ok(Patch {
        faces: faces.to_vec(),
        seed,
        uvs,
    })
}

/// Covers the whole surface with overlapping patches.
///
/// Repeatedly takes the lowest-id face not yet in any patch as a seed,
/// grows a patch around it, and parameterizes it, until every face is
/// covered. The seeding rule makes the result deterministic for a given
/// surface, field, and radius.
pub fn cover_surface(
    surface: &Surface,
    field: &TangentField,
    radius: f64,
) -> Result<Vec<Patch>, LappedError> {
    let mut covered = vec![false; surface.face_count()];
    let mut patches = Vec::new();
    for f in 0..surface.face_count() as FaceId {
        if covered[f as usize] {
            continue;
        }
        let faces = grow_patch(surface, field, f, radius)?;
        let patch = parameterize_patch(surface, &faces, field)?;
        for &g in patch.faces() {
            covered[g as usize] = true;
        }
        patches.push(patch);
    }
    Ok(patches)
}
