//! View-dependent feature curves traced over triangle meshes.
//!
//! Curves are extracted as zero sets of per-vertex scalar fields: the
//! silhouette field `n · (eye − p)` changes sign where the surface turns away
//! from the viewer, and the radial curvature field changes sign where the
//! surface is about to do so — its zero set, trimmed by a derivative test,
//! yields suggestive contours that extend silhouettes into shallow concave
//! regions. The extraction itself is field-agnostic: any scalar sampled at
//! the vertices of a [`MeshState`] can be sliced into polylines with
//! [`extract_isocurves`].
//!
//! Within each triangle the field is interpolated linearly, so the zero set
//! crosses an edge wherever the endpoint values have opposite sign and the
//! crossing parameter is exact. Per-face segments are chained across shared
//! edges into maximal polylines, oriented so the positive side of the field
//! lies to the left of the travel direction.

use nalgebra::{Point3, Vector2, Vector3};

use crate::anim::MeshState;
use crate::curvature::CurvatureField;
use crate::mesh::{EdgeId, FaceId, VertexId};

/// Errors reported by contour extraction and trimming.
#[derive(Debug, thiserror::Error)]
pub enum ContourError {
    /// A scalar field does not have one value per vertex.
    #[error("field has {got} values for a mesh with {expected} vertices")]
    FieldLengthMismatch {
        /// Number of vertices in the mesh.
        expected: usize,
        /// Number of values supplied.
        got: usize,
    },
    /// Curvature data is absent or does not match the mesh.
    #[error("missing curvature data: {0}")]
    MissingCurvature(String),
    /// Per-point attributes required for trimming were never attached.
    #[error("missing per-point attributes: {0}")]
    MissingAttributes(String),
}

/// The view a contour is extracted for: either a perspective eye position or
/// an orthographic view direction.
///
/// This is the minimal view information contour fields need; a full camera
/// (projection, viewport) is only required once curves are rasterized or
/// exported.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Eye {
    /// Eye located at a world-space point; view rays converge on it.
    Perspective(Point3<f64>),
    /// Parallel view rays; the vector points from the scene *toward* the
    /// eye (opposite the viewing direction). Kept unit length.
    Orthographic(Vector3<f64>),
}

impl Eye {
    /// Orthographic view with `toward_eye` normalized.
    pub fn orthographic(toward_eye: Vector3<f64>) -> Eye {
        Eye::Orthographic(toward_eye.normalize())
    }

    /// Unnormalized view vector from `p` toward the eye: `eye − p` for a
    /// perspective view, the fixed (unit) direction for an orthographic one.
    pub fn view_vector(&self, p: &Point3<f64>) -> Vector3<f64> {
        match self {
            Eye::Perspective(c) => c - p,
            Eye::Orthographic(d) => *d,
        }
    }

    /// Unit vector from `p` toward the eye. Zero if `p` coincides with a
    /// perspective eye point.
    pub fn toward_unit(&self, p: &Point3<f64>) -> Vector3<f64> {
        let v = self.view_vector(p);
        let len = v.norm();
        if len > 0.0 {
            v / len
        } else {
            Vector3::zeros()
        }
    }
}

/// Where a curve point sits on the mesh: the fraction `t` along the edge
/// from vertex `a` to vertex `b`.
///
/// Any per-vertex field can be carried onto the point with
/// [`EdgeCrossing::interpolate`]; positions come from a [`MeshState`] the
/// same way, so curves stay attached to deforming geometry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeCrossing {
    /// Edge tail vertex.
    pub a: VertexId,
    /// Edge head vertex.
    pub b: VertexId,
    /// Fraction along the edge, in `[0, 1]`; the point is `a + t·(b − a)`.
    pub t: f64,
}

impl EdgeCrossing {
    /// Linearly interpolate a per-vertex scalar field at this crossing.
    pub fn interpolate(&self, field: &[f64]) -> f64 {
        let fa = field[self.a as usize];
        let fb = field[self.b as usize];
        fa + self.t * (fb - fa)
    }

    /// World-space position of the crossing under the given state.
    pub fn position(&self, state: &MeshState<'_>) -> Point3<f64> {
        let pa = state.position(self.a);
        let pb = state.position(self.b);
        Point3::from(pa.coords.lerp(&pb.coords, self.t))
    }

    /// Unordered vertex pair identifying the crossed edge.
    pub fn edge_key(&self) -> (VertexId, VertexId) {
        if self.a <= self.b {
            (self.a, self.b)
        } else {
            (self.b, self.a)
        }
    }
}

/// A chain of curve points over the surface.
///
/// Points are ordered along the curve; consecutive points are always more
/// than `1e-12` apart. The attribute vectors are either empty (raw isocurve
/// extraction) or exactly as long as `points` (after attributes are attached
/// by the silhouette/suggestive pipelines).
#[derive(Debug, Clone)]
pub struct Polyline {
    /// Ordered curve points in world space.
    pub points: Vec<Point3<f64>>,
    /// Mesh location of each point, enabling re-interpolation of any
    /// per-vertex field.
    pub crossings: Vec<EdgeCrossing>,
    /// Strength of the field derivative along the view direction at each
    /// point (zero for fields without a meaningful derivative).
    pub derivative: Vec<f64>,
    /// Unit `n · v` toward the eye at each point.
    pub ndotv: Vec<f64>,
    /// Whether the last point connects back to the first.
    pub closed: bool,
}

impl Polyline {
    /// Number of points on the chain.
    pub fn len(&self) -> usize {
        self.points.len()
    }

    /// True if the polyline has no points.
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// True once per-point attributes have been attached.
    pub fn has_attributes(&self) -> bool {
        self.derivative.len() == self.points.len() && self.ndotv.len() == self.points.len()
    }

    /// Interpolate a per-vertex scalar field at every point of the chain.
    pub fn interpolate(&self, field: &[f64]) -> Vec<f64> {
        self.crossings.iter().map(|c| c.interpolate(field)).collect()
    }
}

/// A batch of polylines extracted from one field under one view.
///
/// Alongside the curves it records the name of the originating contour
/// definition and the view / state stamp they were extracted under, so a
/// set can be trimmed, serialized, or re-rendered without re-deriving that
/// context.
#[derive(Debug, Clone)]
pub struct ContourSet {
    /// Name of the contour definition that produced the set.
    pub name: String,
    /// Extracted chains.
    pub polylines: Vec<Polyline>,
    /// View the curves were extracted for; `None` for raw isocurves of a
    /// view-independent field.
    pub eye: Option<Eye>,
    /// Animation time of the state the curves were extracted from.
    pub time: f64,
    /// Feature size of the underlying surface (median edge length), kept so
    /// trimming thresholds can be made scale-invariant.
    pub feature_size: f64,
}

impl ContourSet {
    /// Total number of points across all polylines.
    pub fn point_count(&self) -> usize {
        self.polylines.iter().map(Polyline::len).sum()
    }

    /// True if the set contains no polylines.
    pub fn is_empty(&self) -> bool {
        self.polylines.is_empty()
    }

    /// Serialize the set to a JSON string.
    ///
    /// Schema: `{"name": string, "time": number, "feature_size": number,
    /// "eye": {"perspective": [x,y,z]} | {"orthographic": [x,y,z]} | null,
    /// "polylines": [{"closed": bool, "points": [[x,y,z], ...],
    /// "crossings": [{"a": id, "b": id, "t": number}, ...],
    /// "derivative": [number, ...], "ndotv": [number, ...]}]}`.
    /// The attribute arrays are empty when attributes were never attached.
    pub fn to_json_string(&self) -> String {
        let eye = match self.eye {
            Some(Eye::Perspective(c)) => serde_json::json!({ "perspective": [c.x, c.y, c.z] }),
            Some(Eye::Orthographic(d)) => serde_json::json!({ "orthographic": [d.x, d.y, d.z] }),
            None => serde_json::Value::Null,
        };
        let polylines: Vec<serde_json::Value> = self
            .polylines
            .iter()
            .map(|pl| {
                serde_json::json!({
                    "closed": pl.closed,
                    "points": pl.points.iter().map(|p| [p.x, p.y, p.z]).collect::<Vec<_>>(),
                    "crossings": pl
                        .crossings
                        .iter()
                        .map(|c| serde_json::json!({ "a": c.a, "b": c.b, "t": c.t }))
                        .collect::<Vec<_>>(),
                    "derivative": pl.derivative,
                    "ndotv": pl.ndotv,
                })
            })
            .collect();
        serde_json::json!({
            "name": self.name,
            "time": self.time,
            "feature_size": self.feature_size,
            "eye": eye,
            "polylines": polylines,
        })
        .to_string()
    }
}

/// Thresholds for [`trim_suggestive`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrimThresholds {
    /// Minimum derivative strength, in units of `|w| / feature_size`
    /// (points with `D_w κ_r ≤ derivative · |w| / feature_size` are
    /// dropped). Must be non-negative.
    pub derivative: f64,
    /// Angular distance from the silhouette condition, in degrees: points
    /// whose normal is within this angle of perpendicular to the view
    /// (`|n·v| < sin θ`) are dropped as unstable.
    pub silhouette_degrees: f64,
}

impl Default for TrimThresholds {
    /// Derivative floor `0.001`; silhouette margin such that points with
    /// `|n·v| < 0.1` are dropped.
    fn default() -> Self {
        TrimThresholds {
            derivative: 0.001,
            silhouette_degrees: (0.1f64).asin().to_degrees(),
        }
    }
}

/// A named scalar field paired with an optional per-point filter.
///
/// Bundling the two makes a contour style a single reusable value: the
/// field decides *where* curves live, the filter decides which points
/// survive, and [`ContourDefinition::extract`] runs the whole pipeline.
pub struct ContourDefinition {
    name: String,
    #[allow(clippy::type_complexity)]
    field: Box<
        dyn Fn(&MeshState<'_>, Option<&CurvatureField>, &Eye) -> Result<Vec<f64>, ContourError>,
    >,
    #[allow(clippy::type_complexity)]
    filter: Option<Box<dyn Fn(&PointSample) -> bool>>,
}

/// Everything a [`ContourDefinition`] filter can see about one curve point.
#[derive(Debug, Clone, Copy)]
pub struct PointSample {
    /// World-space position of the point.
    pub position: Point3<f64>,
    /// Interpolated derivative-strength attribute.
    pub derivative: f64,
    /// Interpolated unit `n · v` attribute.
    pub ndotv: f64,
    /// Magnitude of the view vector projected into the tangent plane.
    pub w_norm: f64,
    /// Feature size of the surface the curve lives on.
    pub feature_size: f64,
}

impl ContourDefinition {
    /// A contour defined by an arbitrary per-vertex scalar field.
    pub fn new(
        name: impl Into<String>,
        field: impl Fn(&MeshState<'_>, Option<&CurvatureField>, &Eye) -> Result<Vec<f64>, ContourError>
            + 'static,
    ) -> Self {
        ContourDefinition {
            name: name.into(),
            field: Box::new(field),
            filter: None,
        }
    }

    /// Attach a per-point filter applied after extraction; points failing
    /// the predicate are dropped and chains split around them.
    pub fn with_filter(mut self, filter: impl Fn(&PointSample) -> bool + 'static) -> Self {
        self.filter = Some(Box::new(filter));
        self
    }

    /// The silhouette contour: zero set of `n · (eye − p)`.
    pub fn silhouette() -> Self {
        ContourDefinition::new("silhouette", |state, _curv, eye| {
            Ok(silhouette_field(state, eye))
        })
    }

    /// The suggestive contour: zero set of the radial curvature, filtered by
    /// the derivative and silhouette-proximity tests.
    pub fn suggestive(thresholds: TrimThresholds) -> Self {
        let sin_theta = thresholds.silhouette_degrees.to_radians().sin();
        ContourDefinition::new("suggestive", |state, curv, eye| {
            let curv = curv.ok_or_else(|| {
                ContourError::MissingCurvature("suggestive contours need a curvature field".into())
            })?;
            radial_curvature_field(state, curv, eye)
        })
        .with_filter(move |s| {
            s.derivative > thresholds.derivative * (s.w_norm / s.feature_size)
                && s.ndotv.abs() >= sin_theta
        })
    }

    /// Name of the definition.
    pub fn name(&self) -> &str {
        &self.name
    }

    /// Evaluate the field, slice its zero set, attach attributes, and apply
    /// the filter.
    ///
    /// The derivative attribute is the radial-curvature derivative when a
    /// curvature field with derivative tensors is supplied, zero otherwise.
    pub fn extract(
        &self,
        state: &MeshState<'_>,
        curvature: Option<&CurvatureField>,
        eye: &Eye,
    ) -> Result<ContourSet, ContourError> {
        let field = (self.field)(state, curvature, eye)?;
        let mut set = extract_isocurves(state, &field)?;
        set.name = self.name.clone();
        set.eye = Some(*eye);
        let derivative = match curvature {
            Some(c) if c.derivative.is_some() => radial_derivative_field(state, c, eye)?,
            _ => vec![0.0; state.positions().len()],
        };
        attach_attributes(&mut set, state, &derivative, eye);
        match &self.filter {
            Some(f) => filter_points(&set, f),
            None => Ok(set),
        }
    }
}

/// Per-vertex silhouette field: `g(p) = n(p) · (eye − p)` for a perspective
/// view, `g(p) = n(p) · d` (unit direction toward the eye) for an
/// orthographic one. Front-facing vertices are positive; the zero set is
/// the silhouette.
pub fn silhouette_field(state: &MeshState<'_>, eye: &Eye) -> Vec<f64> {
    (0..state.positions().len() as VertexId)
        .map(|v| state.normal(v).dot(&eye.view_vector(&state.position(v))))
        .collect()
}

/// Per-vertex unit `n · v`: cosine of the angle between the normal and the
/// direction toward the eye.
pub fn ndotv_field(state: &MeshState<'_>, eye: &Eye) -> Vec<f64> {
    (0..state.positions().len() as VertexId)
        .map(|v| state.normal(v).dot(&eye.toward_unit(&state.position(v))))
        .collect()
}

fn check_curvature_length(
    state: &MeshState<'_>,
    curvature: &CurvatureField,
) -> Result<(), ContourError> {
    let nv = state.positions().len();
    if curvature.vertices.len() != nv {
        return Err(ContourError::MissingCurvature(format!(
            "curvature field has {} entries for a mesh with {} vertices",
            curvature.vertices.len(),
            nv
        )));
    }
    Ok(())
}

/// Per-vertex radial curvature: the normal curvature in the direction `w`,
/// the view vector projected into the tangent plane.
///
/// `κ_r = (κ1 (w·e1)² + κ2 (w·e2)²) / |w|²`. Where the view is within
/// `1e-9 · feature_size` of the normal the projection is degenerate and the
/// field falls back to `κ1`. The zero set of this field is the locus of
/// suggestive contours.
pub fn radial_curvature_field(
    state: &MeshState<'_>,
    curvature: &CurvatureField,
    eye: &Eye,
) -> Result<Vec<f64>, ContourError> {
    check_curvature_length(state, curvature)?;
    let tiny = 1e-9 * state.surface().feature_size();
    let field = (0..state.positions().len())
        .map(|i| {
            let v = i as VertexId;
            let cv = &curvature.vertices[i];
            let n = state.normal(v);
            let view = eye.view_vector(&state.position(v));
            let w = view - view.dot(&n) * n;
            let w2 = w.norm_squared();
            if w2.sqrt() < tiny {
                cv.k1
            } else {
                let wu = w.dot(&cv.e1);
                let wv = w.dot(&cv.e2);
                (cv.k1 * wu * wu + cv.k2 * wv * wv) / w2
            }
        })
        .collect();
    Ok(field)
}

/// Per-vertex directional derivative of the radial curvature along the
/// projected view direction, the quantity suggestive-contour trimming
/// thresholds against.
///
/// With `v̂` the unit vector toward the eye, `θ` its angle to the normal,
/// and `ŵ` the normalized tangent projection of `v̂`, the derivative is
/// reconstructed from the stored curvature data as
///
/// ```text
/// D_w κ_r = sin θ · C(ŵ, ŵ, ŵ) − 2 (n·v̂) (κ1 − κ2)² (ŵ·e1)² (ŵ·e2)²
/// ```
///
/// where `C` is the third-order curvature-derivative tensor contracted
/// three times with `ŵ` expressed in the principal frame. The first term
/// differentiates the curvature itself along the curve direction; the
/// second corrects for the rotation of the projected view direction as the
/// basepoint moves under a fixed eye. Vertices where the view is parallel
/// to the normal have no well-defined `ŵ` and get zero.
///
/// Requires derivative tensors on the curvature field.
pub fn radial_derivative_field(
    state: &MeshState<'_>,
    curvature: &CurvatureField,
    eye: &Eye,
) -> Result<Vec<f64>, ContourError> {
    check_curvature_length(state, curvature)?;
    let tensors = curvature.derivative.as_ref().ok_or_else(|| {
        ContourError::MissingCurvature(
            "curvature field has no derivative tensors; estimate with derivatives to trim".into(),
        )
    })?;
    if tensors.len() != curvature.vertices.len() {
        return Err(ContourError::MissingCurvature(format!(
            "{} derivative tensors for {} vertices",
            tensors.len(),
            curvature.vertices.len()
        )));
    }
    let field = (0..state.positions().len())
        .map(|i| {
            let v = i as VertexId;
            let cv = &curvature.vertices[i];
            let n = state.normal(v);
            let vhat = eye.toward_unit(&state.position(v));
            let ndotv = n.dot(&vhat);
            let w = vhat - ndotv * n;
            let sin_theta = w.norm();
            if sin_theta < 1e-12 {
                return 0.0;
            }
            let what = w / sin_theta;
            let wu = what.dot(&cv.e1);
            let wv = what.dot(&cv.e2);
            let cubic = tensors[i].contract_cubed(Vector2::new(wu, wv));
            let swing = (cv.k1 - cv.k2) * wu * wv;
            sin_theta * cubic - 2.0 * ndotv * swing * swing
        })
        .collect();
    Ok(field)
}

/// The sign of a field value with exact zeros perturbed to `+ε`: zero
/// vertices count as positive, so the zero set always falls on edges with a
/// strict sign change and every triangle is crossed by zero or two edges.
fn is_positive(value: f64) -> bool {
    value >= 0.0
}

struct FaceSegment {
    from_edge: EdgeId,
    to_edge: EdgeId,
}

/// Slice the linear interpolant of a per-vertex scalar field at zero.
///
/// An edge `(a, b)` is crossed when the perturbed signs of `f(a)` and
/// `f(b)` differ; the crossing sits at `t = f_a / (f_a − f_b)`, which
/// reconstructs `f = 0` exactly in exact arithmetic. Per-face segments are
/// chained across shared edges into maximal polylines — closed loops are
/// flagged and do not repeat their first point. Each polyline travels with
/// the positive side of the field on its left, taking the face winding as
/// the reference orientation.
///
/// Exact zeros at vertices produce coincident crossing points on the
/// incident edges; consecutive coincident points (closer than `1e-12`) are
/// merged and chains left with fewer than two distinct points are dropped.
pub fn extract_isocurves(
    state: &MeshState<'_>,
    field: &[f64],
) -> Result<ContourSet, ContourError> {
    let s = state.surface();
    let nv = s.vertex_count();
    if field.len() != nv {
        return Err(ContourError::FieldLengthMismatch {
            expected: nv,
            got: field.len(),
        });
    }

    // One crossing per sign-changing edge, shared verbatim by both incident
    // faces so chained chains meet in exactly equal points.
    let ne = s.edge_count();
    let mut crossings: Vec<Option<EdgeCrossing>> = vec![None; ne];
    for e in 0..ne {
        let (a, b) = s.edge_endpoints(e as EdgeId);
        let (fa, fb) = (field[a as usize], field[b as usize]);
        if is_positive(fa) != is_positive(fb) {
            let t = fa / (fa - fb);
            crossings[e] = Some(EdgeCrossing { a, b, t });
        }
    }

    // One oriented segment per face with crossed edges.
    let nf = s.face_count();
    let mut segments: Vec<Option<FaceSegment>> = (0..nf).map(|_| None).collect();
    // Chain links: which face's segment enters / leaves a given edge.
    let mut by_entry: Vec<Option<FaceId>> = vec![None; ne];
    let mut by_exit: Vec<Option<FaceId>> = vec![None; ne];
    for f in 0..nf {
        let h0 = s.face_halfedge(f as FaceId);
        let h1 = s.halfedge(h0).next;
        let h2 = s.halfedge(h1).next;
        // Positive-left orientation, decided combinatorially from the face
        // winding: travel starts at the half-edge running positive→negative
        // and ends at the one running negative→positive, which keeps the
        // positive side on the left and agrees exactly across neighboring
        // faces (a half-edge's twin runs the opposite way).
        let mut from_edge = None;
        let mut to_edge = None;
        for h in [h0, h1, h2] {
            let he = s.halfedge(h);
            let tail = is_positive(field[he.origin as usize]);
            let head = is_positive(field[s.dest(h) as usize]);
            if tail && !head {
                from_edge = Some(he.edge);
            } else if !tail && head {
                to_edge = Some(he.edge);
            }
        }
        let (Some(from_edge), Some(to_edge)) = (from_edge, to_edge) else {
            debug_assert!(
                from_edge.is_none() && to_edge.is_none(),
                "a triangle crosses the zero set 0 or 2 times"
            );
            continue;
        };
        debug_assert!(by_entry[from_edge as usize].is_none());
        debug_assert!(by_exit[to_edge as usize].is_none());
        by_entry[from_edge as usize] = Some(f as FaceId);
        by_exit[to_edge as usize] = Some(f as FaceId);
        segments[f] = Some(FaceSegment { from_edge, to_edge });
    }

    // Chain segments into maximal polylines.
    let mut emitted = vec![false; nf];
    let mut polylines = Vec::new();
    for f0 in 0..nf {
        if emitted[f0] || segments[f0].is_none() {
            continue;
        }
        // Walk backward to the chain start (or detect a closed loop).
        let mut start = f0;
        let mut closed = false;
        loop {
            let entry = segments[start].as_ref().unwrap().from_edge;
            match by_exit[entry as usize] {
                Some(prev) => {
                    if prev as usize == f0 {
                        closed = true;
                        start = f0;
                        break;
                    }
                    start = prev as usize;
                }
                None => break,
            }
        }
        // Walk forward collecting one point per crossed edge.
        let mut chain = Vec::new();
        chain.push(crossings[segments[start].as_ref().unwrap().from_edge as usize].unwrap());
        let mut f = start;
        loop {
            emitted[f] = true;
            let exit = segments[f].as_ref().unwrap().to_edge;
            chain.push(crossings[exit as usize].unwrap());
            match by_entry[exit as usize] {
                Some(next) if !emitted[next as usize] => f = next as usize,
                _ => break,
            }
        }
        if closed {
            // The final exit edge is the first entry edge again.
            chain.pop();
        }
        if let Some(polyline) = assemble_polyline(state, chain, closed) {
            polylines.push(polyline);
        }
    }

    Ok(ContourSet {
        name: "isocurves".into(),
        polylines,
        eye: None,
        time: state.time(),
        feature_size: s.feature_size(),
    })
}

/// Merge coincident consecutive crossings and build the polyline; `None`
/// when fewer than two distinct points remain (three for a closed loop).
fn assemble_polyline(
    state: &MeshState<'_>,
    chain: Vec<EdgeCrossing>,
    closed: bool,
) -> Option<Polyline> {
    let mut points: Vec<Point3<f64>> = Vec::with_capacity(chain.len());
    let mut kept: Vec<EdgeCrossing> = Vec::with_capacity(chain.len());
    for crossing in chain {
        let p = crossing.position(state);
        if let Some(last) = points.last() {
            if (p - last).norm() <= 1e-12 {
                continue;
            }
        }
        points.push(p);
        kept.push(crossing);
    }
    if closed {
        while points.len() > 1 && (points[points.len() - 1] - points[0]).norm() <= 1e-12 {
            points.pop();
            kept.pop();
        }
    }
    let minimum = if closed { 3 } else { 2 };
    if points.len() < minimum {
        return None;
    }
    Some(Polyline {
        points,
        crossings: kept,
        derivative: Vec::new(),
        ndotv: Vec::new(),
        closed,
    })
}

/// Interpolate the derivative-strength and `n·v` attributes onto every
/// point of the set.
fn attach_attributes(
    set: &mut ContourSet,
    state: &MeshState<'_>,
    derivative: &[f64],
    eye: &Eye,
) {
    let ndotv = ndotv_field(state, eye);
    for pl in &mut set.polylines {
        pl.derivative = pl.interpolate(derivative);
        pl.ndotv = pl.interpolate(&ndotv);
    }
}

/// Apply a per-point predicate, splitting chains at dropped points and
/// discarding fragments shorter than two points.
fn filter_points(
    set: &ContourSet,
    keep: impl Fn(&PointSample) -> bool,
) -> Result<ContourSet, ContourError> {
    let eye = set.eye.ok_or_else(|| {
        ContourError::MissingAttributes("contour set carries no view to filter against".into())
    })?;
    let mut polylines = Vec::new();
    for pl in &set.polylines {
        if !pl.has_attributes() {
            return Err(ContourError::MissingAttributes(format!(
                "polyline has {} points but {} derivative / {} n·v values",
                pl.points.len(),
                pl.derivative.len(),
                pl.ndotv.len()
            )));
        }
        let mask: Vec<bool> = (0..pl.len())
            .map(|i| {
                let ndotv = pl.ndotv[i];
                // |w| = |view| · sin θ, recovered from the unit n·v.
                let view_len = match eye {
                    Eye::Perspective(c) => (c - pl.points[i]).norm(),
                    Eye::Orthographic(_) => 1.0,
                };
                let w_norm = view_len * (1.0 - ndotv * ndotv).max(0.0).sqrt();
                keep(&PointSample {
                    position: pl.points[i],
                    derivative: pl.derivative[i],
                    ndotv,
                    w_norm,
                    feature_size: set.feature_size,
                })
            })
            .collect();
        split_by_mask(pl, &mask, &mut polylines);
    }
    Ok(ContourSet {
        name: set.name.clone(),
        polylines,
        eye: set.eye,
        time: set.time,
        feature_size: set.feature_size,
    })
}

/// Emit the kept runs of a polyline as separate chains.
fn split_by_mask(pl: &Polyline, mask: &[bool], out: &mut Vec<Polyline>) {
    let n = pl.len();
    if mask.iter().all(|&k| k) {
        out.push(pl.clone());
        return;
    }
    // Collect maximal runs of kept indices; on a closed loop runs may wrap
    // the seam, so scan in an order starting just past a dropped point.
    let mut runs: Vec<Vec<usize>> = Vec::new();
    let mut run: Vec<usize> = Vec::new();
    let order: Vec<usize> = if pl.closed {
        let first_dropped = mask.iter().position(|&k| !k).unwrap();
        (1..=n).map(|off| (first_dropped + off) % n).collect()
    } else {
        (0..n).collect()
    };
    for &i in &order {
        if mask[i] {
            run.push(i);
        } else if !run.is_empty() {
            runs.push(std::mem::take(&mut run));
        }
    }
    if !run.is_empty() {
        runs.push(run);
    }
    for run in runs {
        if run.len() < 2 {
            continue;
        }
        out.push(Polyline {
            points: run.iter().map(|&i| pl.points[i]).collect(),
            crossings: run.iter().map(|&i| pl.crossings[i]).collect(),
            derivative: run.iter().map(|&i| pl.derivative[i]).collect(),
            ndotv: run.iter().map(|&i| pl.ndotv[i]).collect(),
            closed: false,
        });
    }
}

/// Drop suggestive-contour points that fail the derivative test or sit too
/// close to the silhouette, splitting chains at the dropped points.
///
/// A point survives when `D_w κ_r > t_d · |w| / feature_size` (the stored
/// derivative attribute against the scale-invariant floor) *and* its normal
/// is more than the silhouette margin away from perpendicular to the view
/// (`|n·v| ≥ sin θ_c`) — near-silhouette points are where the radial
/// curvature zero set becomes unstable. Fragments shorter than two points
/// are discarded. The curvature field must carry derivative tensors, and
/// the set must have attributes attached by the extraction pipeline.
pub fn trim_suggestive(
    contours: &ContourSet,
    curvature: &CurvatureField,
    thresholds: TrimThresholds,
) -> Result<ContourSet, ContourError> {
    if curvature.derivative.is_none() {
        return Err(ContourError::MissingCurvature(
            "trimming needs the curvature derivative tensors".into(),
        ));
    }
    let sin_theta = thresholds.silhouette_degrees.to_radians().sin();
    filter_points(contours, |s| {
        s.derivative > thresholds.derivative * (s.w_norm / s.feature_size)
            && s.ndotv.abs() >= sin_theta
    })
}

/// Extract silhouette curves: the zero set of [`silhouette_field`] with
/// `n·v` attributes attached (the derivative attribute is zero — the
/// silhouette needs no trimming).
pub fn extract_silhouettes(state: &MeshState<'_>, eye: &Eye) -> ContourSet {
    let field = silhouette_field(state, eye);
    let mut set = extract_isocurves(state, &field).expect("field built per vertex");
    set.name = "silhouette".into();
    set.eye = Some(*eye);
    let zeros = vec![0.0; state.positions().len()];
    attach_attributes(&mut set, state, &zeros, eye);
    set
}

/// Extract suggestive contours: slice the radial curvature field at zero,
/// attach the derivative and `n·v` attributes, and trim unstable points.
pub fn extract_suggestive(
    state: &MeshState<'_>,
    curvature: &CurvatureField,
    eye: &Eye,
    thresholds: TrimThresholds,
) -> Result<ContourSet, ContourError> {
    let field = radial_curvature_field(state, curvature, eye)?;
    let derivative = radial_derivative_field(state, curvature, eye)?;
    let mut set = extract_isocurves(state, &field)?;
    set.name = "suggestive".into();
    set.eye = Some(*eye);
    attach_attributes(&mut set, state, &derivative, eye);
    trim_suggestive(&set, curvature, thresholds)
}
