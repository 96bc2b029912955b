//! Half-edge triangle mesh with dynamic per-element properties.
//!
//! [`Surface`] is the central type of the toolkit: an indexed triangle mesh
//! stored as half-edges so that adjacency queries (one-rings, edge twins,
//! face circulation) are O(1) per step. Building a surface also derives the
//! attributes every other module relies on: area-weighted vertex normals, a
//! bounding sphere and a feature size (mean edge length).
//!
//! Boundary edges get explicit half-edges with no incident face, linked into
//! loops around each hole, so `twin(twin(h)) == h` holds for every half-edge
//! and circulation never needs special cases.

use nalgebra::{Point3, Vector3};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

/// Index of a vertex in a [`Surface`].
pub type VertexId = u32;
/// Index of a half-edge in a [`Surface`].
pub type HalfEdgeId = u32;
/// Index of a face in a [`Surface`].
pub type FaceId = u32;
/// Index of an undirected edge in a [`Surface`].
pub type EdgeId = u32;

/// Sentinel for "no element" (boundary faces, unset links).
pub const INVALID: u32 = u32::MAX;

/// Errors produced by mesh construction and queries.
#[derive(Debug, thiserror::Error)]
pub enum MeshError {
    #[error("edge ({0}, {1}) is shared by more than two faces or has inconsistent orientation")]
    NonManifoldEdge(VertexId, VertexId),
    #[error("triangle {0} repeats vertex {1}")]
    DegenerateTriangle(usize, VertexId),
    #[error("triangle {0} references vertex {1}, but only {2} vertices exist")]
    IndexOutOfRange(usize, VertexId, usize),
    #[error("operation requires a non-empty mesh")]
    EmptyMesh,
    #[error("vertex id {0} is out of range")]
    InvalidVertex(VertexId),
    #[error("a {0:?} property named {1:?} already exists")]
    DuplicateName(ElementKind, String),
    #[error("unknown {0:?} property {1:?}")]
    UnknownProperty(ElementKind, String),
}

/// Linear RGB color, channels in [0, 1].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rgb {
    pub r: f32,
    pub g: f32,
    pub b: f32,
}

impl Rgb {
    pub const BLACK: Rgb = Rgb { r: 0.0, g: 0.0, b: 0.0 };
    pub const WHITE: Rgb = Rgb { r: 1.0, g: 1.0, b: 1.0 };

    pub fn new(r: f32, g: f32, b: f32) -> Self {
        Rgb { r, g, b }
    }

    /// Clamps each channel to [0, 1].
    pub fn clamped(self) -> Self {
        Rgb::new(self.r.clamp(0.0, 1.0), self.g.clamp(0.0, 1.0), self.b.clamp(0.0, 1.0))
    }

    pub fn scale(self, s: f32) -> Self {
        Rgb::new(self.r * s, self.g * s, self.b * s)
    }

    pub fn add(self, o: Rgb) -> Self {
        Rgb::new(self.r + o.r, self.g + o.g, self.b + o.b)
    }

    pub fn mul(self, o: Rgb) -> Self {
        Rgb::new(self.r * o.r, self.g * o.g, self.b * o.b)
    }
}

/// Surface material: Phong-style color set plus an optional diffuse texture
/// reference. Channels are clamped to [0, 1] on construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Material {
    pub name: String,
    pub ambient: Rgb,
    pub diffuse: Rgb,
    pub specular: Rgb,
    /// Specular exponent, >= 0.
    pub shininess: f32,
    /// Path of a diffuse texture image, if the asset referenced one.
    pub diffuse_texture: Option<String>,
}

impl Default for Material {
    fn default() -> Self {
        Material {
            name: "default".to_string(),
            ambient: Rgb::new(0.2, 0.2, 0.2),
            diffuse: Rgb::new(0.8, 0.8, 0.8),
            specular: Rgb::BLACK,
            shininess: 32.0,
            diffuse_texture: None,
        }
    }
}

impl Material {
    /// Clamps color channels to [0, 1] and shininess to >= 0.
    pub fn normalized(mut self) -> Self {
        self.ambient = self.ambient.clamped();
        self.diffuse = self.diffuse.clamped();
        self.specular = self.specular.clamped();
        self.shininess = self.shininess.max(0.0);
        self
    }
}

/// One directed half of an undirected edge.
#[derive(Debug, Clone, Copy)]
pub struct HalfEdge {
    /// Vertex this half-edge leaves from.
    pub origin: VertexId,
    /// Opposite half-edge (always valid).
    pub twin: HalfEdgeId,
    /// Next half-edge around the incident face, or around the hole loop for
    /// boundary half-edges.
    pub next: HalfEdgeId,
    /// Previous half-edge in the same cycle.
    pub prev: HalfEdgeId,
    /// Incident face, or [`INVALID`] for boundary half-edges.
    pub face: FaceId,
    /// Undirected edge shared with the twin.
    pub edge: EdgeId,
}

/// Element class a property is attached to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ElementKind {
    Vertex,
    Edge,
    Face,
}

/// Handle to a per-element scalar property column.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScalarHandle(usize);

/// Handle to a per-element 3-vector property column.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Vec3Handle(usize);

#[derive(Clone)]
enum PropertyData {
    Scalar(Vec<f64>),
    Vec3(Vec<Vector3<f64>>),
}

#[derive(Clone)]
struct Property {
    kind: ElementKind,
    name: String,
    data: PropertyData,
}

/// Half-edge triangle mesh with derived attributes and dynamic properties.
#[derive(Clone)]
pub struct Surface {
    positions: Vec<Point3<f64>>,
    normals: Vec<Vector3<f64>>,
    halfedges: Vec<HalfEdge>,
    /// One half-edge of each face.
    faces: Vec<HalfEdgeId>,
    /// One outgoing half-edge per vertex. For boundary vertices this is the
    /// half-edge whose counterclockwise circulation covers the open fan.
    vertex_halfedge: Vec<HalfEdgeId>,
    /// Canonical half-edge of each undirected edge.
    edges: Vec<HalfEdgeId>,
    material: Material,
    bounding_center: Point3<f64>,
    bounding_radius: f64,
    feature_size: f64,
    properties: Vec<Option<Property>>,
}

impl std::fmt::Debug for Surface {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Surface")
            .field("vertices", &self.vertex_count())
            .field("edges", &self.edge_count())
            .field("faces", &self.face_count())
            .field("closed", &self.is_closed())
            .finish()
    }
}

impl Surface {
    /// Builds a half-edge surface from positions and triangle indices.
    ///
    /// Triangles are counterclockwise when seen from outside. Vertex normals
    /// are area-weighted averages of incident face normals; the bounding
    /// sphere and feature size are computed eagerly.
    pub fn build(
        positions: Vec<Point3<f64>>,
        triangles: &[[VertexId; 3]],
    ) -> Result<Surface, MeshError> {
        if positions.is_empty() {
            return Err(MeshError::EmptyMesh);
        }
        let nv = positions.len();
        for (fi, tri) in triangles.iter().enumerate() {
            for k in 0..3 {
                if tri[k] as usize >= nv {
                    return Err(MeshError::IndexOutOfRange(fi, tri[k], nv));
                }
                if tri[k] == tri[(k + 1) % 3] {
                    return Err(MeshError::DegenerateTriangle(fi, tri[k]));
                }
            }
            if tri[0] == tri[2] {
                return Err(MeshError::DegenerateTriangle(fi, tri[0]));
            }
        }

        let mut halfedges: Vec<HalfEdge> = Vec::with_capacity(triangles.len() * 3);
        let mut faces: Vec<HalfEdgeId> = Vec::with_capacity(triangles.len());
        let mut directed: HashMap<(VertexId, VertexId), HalfEdgeId> =
            HashMap::with_capacity(triangles.len() * 3);

        for (fi, tri) in triangles.iter().enumerate() {
            let base = halfedges.len() as HalfEdgeId;
            for k in 0..3u32 {
                let a = tri[k as usize];
                let b = tri[(k as usize + 1) % 3];
                if directed.insert((a, b), base + k).is_some() {
                    return Err(MeshError::NonManifoldEdge(a, b));
                }
                halfedges.push(HalfEdge {
                    origin: a,
                    twin: INVALID,
                    next: base + (k + 1) % 3,
                    prev: base + (k + 2) % 3,
                    face: fi as FaceId,
                    edge: INVALID,
                });
            }
            faces.push(base);
        }

        // Pair twins; unmatched directed edges get explicit boundary twins.
        let interior_count = halfedges.len();
        for h in 0..interior_count {
            if halfedges[h].twin != INVALID {
                continue;
            }
            let a = halfedges[h].origin;
            let b = halfedges[halfedges[h].next as usize].origin;
            if let Some(&t) = directed.get(&(b, a)) {
                halfedges[h].twin = t;
                halfedges[t as usize].twin = h as HalfEdgeId;
            } else {
                let bid = halfedges.len() as HalfEdgeId;
                halfedges.push(HalfEdge {
                    origin: b,
                    twin: h as HalfEdgeId,
                    next: INVALID,
                    prev: INVALID,
                    face: INVALID,
                    edge: INVALID,
                });
                halfedges[h].twin = bid;
            }
        }

        // Link boundary half-edges into hole loops: the successor of a
        // boundary half-edge ending at w is found by rotating around w
        // through the interior faces until the next boundary half-edge.
        for h in interior_count..halfedges.len() {
            let mut g = halfedges[h].twin; // interior, leaves from dest(h)
            while halfedges[g as usize].face != INVALID {
                g = halfedges[halfedges[g as usize].prev as usize].twin;
            }
            halfedges[h].next = g;
            halfedges[g as usize].prev = h as HalfEdgeId;
        }

        // Undirected edge ids, one per twin pair.
        let mut edges: Vec<HalfEdgeId> = Vec::new();
        for h in 0..halfedges.len() {
            if halfedges[h].edge != INVALID {
                continue;
            }
            let id = edges.len() as EdgeId;
            let t = halfedges[h].twin as usize;
            halfedges[h].edge = id;
            halfedges[t].edge = id;
            edges.push(h as HalfEdgeId);
        }

        // Outgoing half-edge per vertex; boundary vertices point at the twin
        // of their incoming boundary half-edge so circulation starts at the
        // open fan's first interior face.
        let mut vertex_halfedge = vec![INVALID; nv];
        for (h, he) in halfedges.iter().enumerate() {
            if he.face != INVALID && vertex_halfedge[he.origin as usize] == INVALID {
                vertex_halfedge[he.origin as usize] = h as HalfEdgeId;
            }
        }
        for (h, he) in halfedges.iter().enumerate() {
            if he.face == INVALID {
                let w = halfedges[he.next as usize].origin; // dest of h
                debug_assert_eq!(halfedges[he.twin as usize].origin, w);
                vertex_halfedge[w as usize] = he.twin;
                let _ = h;
            }
        }

        let mut surface = Surface {
            positions,
            normals: vec![Vector3::zeros(); nv],
            halfedges,
            faces,
            vertex_halfedge,
            edges,
            material: Material::default(),
            bounding_center: Point3::origin(),
            bounding_radius: 0.0,
            feature_size: 0.0,
            properties: Vec::new(),
        };
        surface.recompute_normals();
        let (c, r) = compute_bounding_sphere(&surface)?;
        surface.bounding_center = c;
        surface.bounding_radius = r;
        surface.feature_size = compute_feature_size(&surface).unwrap_or(0.0);
        Ok(surface)
    }

    pub fn vertex_count(&self) -> usize {
        self.positions.len()
    }

    pub fn face_count(&self) -> usize {
        self.faces.len()
    }

    pub fn halfedge_count(&self) -> usize {
        self.halfedges.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn position(&self, v: VertexId) -> Point3<f64> {
        self.positions[v as usize]
    }

    pub fn positions(&self) -> &[Point3<f64>] {
        &self.positions
    }

    pub fn normal(&self, v: VertexId) -> Vector3<f64> {
        self.normals[v as usize]
    }

    pub fn normals(&self) -> &[Vector3<f64>] {
        &self.normals
    }

    pub fn halfedge(&self, h: HalfEdgeId) -> &HalfEdge {
        &self.halfedges[h as usize]
    }

    /// Destination vertex of a half-edge.
    pub fn dest(&self, h: HalfEdgeId) -> VertexId {
        self.halfedges[self.halfedges[h as usize].twin as usize].origin
    }

    /// One half-edge on the given face.
    pub fn face_halfedge(&self, f: FaceId) -> HalfEdgeId {
        self.faces[f as usize]
    }

    /// The three vertices of a face, in winding order.
    pub fn face_vertices(&self, f: FaceId) -> [VertexId; 3] {
        let h0 = self.faces[f as usize];
        let h1 = self.halfedges[h0 as usize].next;
        let h2 = self.halfedges[h1 as usize].next;
        [
            self.halfedges[h0 as usize].origin,
            self.halfedges[h1 as usize].origin,
            self.halfedges[h2 as usize].origin,
        ]
    }

    /// Iterates all faces as vertex-id triples.
    pub fn faces(&self) -> impl Iterator<Item = [VertexId; 3]> + '_ {
        (0..self.faces.len() as FaceId).map(|f| self.face_vertices(f))
    }

    /// Endpoints of an undirected edge.
    pub fn edge_endpoints(&self, e: EdgeId) -> (VertexId, VertexId) {
        let h = self.edges[e as usize];
        (self.halfedges[h as usize].origin, self.dest(h))
    }

    /// Canonical half-edge of an undirected edge.
    pub fn edge_halfedge(&self, e: EdgeId) -> HalfEdgeId {
        self.edges[e as usize]
    }

    /// The two faces incident to an undirected edge ([`INVALID`] on boundary).
    pub fn edge_faces(&self, e: EdgeId) -> (FaceId, FaceId) {
        let h = self.edges[e as usize];
        let t = self.halfedges[h as usize].twin;
        (self.halfedges[h as usize].face, self.halfedges[t as usize].face)
    }

    pub fn is_boundary_vertex(&self, v: VertexId) -> bool {
        let start = self.vertex_halfedge[v as usize];
        if start == INVALID {
            return true; // isolated
        }
        let mut h = start;
        loop {
            if self.halfedges[h as usize].face == INVALID {
                return true;
            }
            h = self.halfedges[self.halfedges[h as usize].prev as usize].twin;
            if h == start {
                return false;
            }
        }
    }

    /// Neighbor vertices in counterclockwise order (seen from outside).
    ///
    /// Interior vertices yield a cyclic list; boundary vertices an open fan
    /// that starts at the first interior wedge and ends across the hole.
    pub fn one_ring(&self, v: VertexId) -> Result<Vec<VertexId>, MeshError> {
        if v as usize >= self.positions.len() {
            return Err(MeshError::InvalidVertex(v));
        }
        let start = self.vertex_halfedge[v as usize];
        if start == INVALID {
            return Ok(Vec::new());
        }
        let mut ring = Vec::new();
        let mut h = start;
        loop {
            ring.push(self.dest(h));
            h = self.halfedges[self.halfedges[h as usize].prev as usize].twin;
            if h == start {
                break;
            }
        }
        Ok(ring)
    }

    /// Outgoing half-edges around a vertex, counterclockwise.
    pub fn outgoing_halfedges(&self, v: VertexId) -> Vec<HalfEdgeId> {
        let start = self.vertex_halfedge[v as usize];
        if start == INVALID {
            return Vec::new();
        }
        let mut out = Vec::new();
        let mut h = start;
        loop {
            out.push(h);
            h = self.halfedges[self.halfedges[h as usize].prev as usize].twin;
            if h == start {
                break;
            }
        }
        out
    }

    /// Faces incident to a vertex, counterclockwise.
    pub fn vertex_faces(&self, v: VertexId) -> Vec<FaceId> {
        self.outgoing_halfedges(v)
            .into_iter()
            .filter_map(|h| {
                let f = self.halfedges[h as usize].face;
                (f != INVALID).then_some(f)
            })
            .collect()
    }

    /// V - E + F.
    pub fn euler_characteristic(&self) -> i64 {
        self.vertex_count() as i64 - self.edge_count() as i64 + self.face_count() as i64
    }

    /// True when the mesh has no boundary half-edges.
    pub fn is_closed(&self) -> bool {
        self.halfedges.iter().all(|h| h.face != INVALID)
    }

    pub fn material(&self) -> &Material {
        &self.material
    }

    pub fn set_material(&mut self, material: Material) {
        self.material = material.normalized();
    }

    pub fn bounding_sphere(&self) -> (Point3<f64>, f64) {
        (self.bounding_center, self.bounding_radius)
    }

    /// Characteristic length scale: mean edge length.
    pub fn feature_size(&self) -> f64 {
        self.feature_size
    }

    /// Geometric (unnormalized) normal of a face; its length is twice the
    /// face area.
    pub fn face_normal_raw(&self, f: FaceId) -> Vector3<f64> {
        let [a, b, c] = self.face_vertices(f);
        let pa = self.positions[a as usize];
        let pb = self.positions[b as usize];
        let pc = self.positions[c as usize];
        (pb - pa).cross(&(pc - pa))
    }

    pub fn face_area(&self, f: FaceId) -> f64 {
        0.5 * self.face_normal_raw(f).norm()
    }

    /// Recomputes vertex normals as area-weighted averages of incident face
    /// normals. Loaders may override the result with file-provided normals.
    pub fn recompute_normals(&mut self) {
        for n in &mut self.normals {
            *n = Vector3::zeros();
        }
        for f in 0..self.faces.len() as FaceId {
            let raw = self.face_normal_raw(f);
            for v in self.face_vertices(f) {
                self.normals[v as usize] += raw;
            }
        }
        for n in &mut self.normals {
            let len = n.norm();
            if len > 0.0 {
                *n /= len;
            }
        }
    }

    /// Replaces vertex normals (e.g. with normals read from a file). Vectors
    /// are normalized; zero-length entries are left untouched.
    pub fn set_normals(&mut self, normals: &[Vector3<f64>]) {
        assert_eq!(normals.len(), self.normals.len(), "normal count mismatch");
        for (dst, src) in self.normals.iter_mut().zip(normals) {
            let len = src.norm();
            if len > 0.0 {
                *dst = src / len;
            }
        }
    }

    fn element_count(&self, kind: ElementKind) -> usize {
        match kind {
            ElementKind::Vertex => self.vertex_count(),
            ElementKind::Edge => self.edge_count(),
            ElementKind::Face => self.face_count(),
        }
    }

    fn check_name_free(&self, kind: ElementKind, name: &str) -> Result<(), MeshError> {
        let taken = self
            .properties
            .iter()
            .flatten()
            .any(|p| p.kind == kind && p.name == name);
        if taken {
            Err(MeshError::DuplicateName(kind, name.to_string()))
        } else {
            Ok(())
        }
    }

    /// Creates a per-element scalar property, default-initialized to 0.
    pub fn add_scalar_property(
        &mut self,
        kind: ElementKind,
        name: &str,
    ) -> Result<ScalarHandle, MeshError> {
        self.check_name_free(kind, name)?;
        let data = PropertyData::Scalar(vec![0.0; self.element_count(kind)]);
        self.properties.push(Some(Property { kind, name: name.to_string(), data }));
        Ok(ScalarHandle(self.properties.len() - 1))
    }

    /// Creates a per-element 3-vector property, default-initialized to zero.
    pub fn add_vec3_property(
        &mut self,
        kind: ElementKind,
        name: &str,
    ) -> Result<Vec3Handle, MeshError> {
        self.check_name_free(kind, name)?;
        let data = PropertyData::Vec3(vec![Vector3::zeros(); self.element_count(kind)]);
        self.properties.push(Some(Property { kind, name: name.to_string(), data }));
        Ok(Vec3Handle(self.properties.len() - 1))
    }

    /// Looks up an existing scalar property by element kind and name.
    pub fn scalar_property(
        &self,
        kind: ElementKind,
        name: &str,
    ) -> Result<ScalarHandle, MeshError> {
        self.properties
            .iter()
            .position(|p| {
                matches!(p, Some(p) if p.kind == kind && p.name == name
                    && matches!(p.data, PropertyData::Scalar(_)))
            })
            .map(ScalarHandle)
            .ok_or_else(|| MeshError::UnknownProperty(kind, name.to_string()))
    }

    /// Looks up an existing 3-vector property by element kind and name.
    pub fn vec3_property(&self, kind: ElementKind, name: &str) -> Result<Vec3Handle, MeshError> {
        self.properties
            .iter()
            .position(|p| {
                matches!(p, Some(p) if p.kind == kind && p.name == name
                    && matches!(p.data, PropertyData::Vec3(_)))
            })
            .map(Vec3Handle)
            .ok_or_else(|| MeshError::UnknownProperty(kind, name.to_string()))
    }

    pub fn scalar(&self, h: ScalarHandle, element: u32) -> f64 {
        match &self.properties[h.0] {
            Some(Property { data: PropertyData::Scalar(v), .. }) => v[element as usize],
            _ => panic!("stale scalar property handle"),
        }
    }

    pub fn set_scalar(&mut self, h: ScalarHandle, element: u32, value: f64) {
        match &mut self.properties[h.0] {
            Some(Property { data: PropertyData::Scalar(v), .. }) => v[element as usize] = value,
            _ => panic!("stale scalar property handle"),
        }
    }

    pub fn vec3(&self, h: Vec3Handle, element: u32) -> Vector3<f64> {
        match &self.properties[h.0] {
            Some(Property { data: PropertyData::Vec3(v), .. }) => v[element as usize],
            _ => panic!("stale vec3 property handle"),
        }
    }

    pub fn set_vec3(&mut self, h: Vec3Handle, element: u32, value: Vector3<f64>) {
        match &mut self.properties[h.0] {
            Some(Property { data: PropertyData::Vec3(v), .. }) => v[element as usize] = value,
            _ => panic!("stale vec3 property handle"),
        }
    }

    /// Removes a property by kind and name. Handles to it become stale.
    pub fn remove_property(&mut self, kind: ElementKind, name: &str) -> Result<(), MeshError> {
        let slot = self
            .properties
            .iter()
            .position(|p| matches!(p, Some(p) if p.kind == kind && p.name == name))
            .ok_or_else(|| MeshError::UnknownProperty(kind, name.to_string()))?;
        self.properties[slot] = None;
        Ok(())
    }
}

/// Two-pass approximate bounding sphere: center at the vertex centroid, then
/// grow to the farthest vertex. The radius is at most twice the minimal
/// enclosing radius, which is enough for camera framing and normalization.
pub fn compute_bounding_sphere(surface: &Surface) -> Result<(Point3<f64>, f64), MeshError> {
    if surface.vertex_count() == 0 {
        return Err(MeshError::EmptyMesh);
    }
    let mut center = Vector3::zeros();
    for p in surface.positions() {
        center += p.coords;
    }
    center /= surface.vertex_count() as f64;
    let center = Point3::from(center);
    let radius = surface
        .positions()
        .iter()
        .map(|p| (p - center).norm())
        .fold(0.0f64, f64::max);
    Ok((center, radius))
}

/// Feature size of a mesh: the mean length of its undirected edges.
pub fn compute_feature_size(surface: &Surface) -> Result<f64, MeshError> {
    if surface.edge_count() == 0 {
        return Err(MeshError::EmptyMesh);
    }
    let sum: f64 = (0..surface.edge_count() as EdgeId)
        .map(|e| {
            let (a, b) = surface.edge_endpoints(e);
            (surface.position(a) - surface.position(b)).norm()
        })
        .sum();
    Ok(sum / surface.edge_count() as f64)
}
