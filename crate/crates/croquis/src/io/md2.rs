//! Quake II MD2 model loading.
//!
//! MD2 stores a triangle list shared by all frames plus per-frame compressed
//! vertices: each position is one byte per axis, decompressed as
//! `position = scale · byte + translate` with per-frame `scale` and
//! `translate` headers, and each normal is an index into a fixed table of
//! 162 unit directions. Frames are grouped into named animations by their
//! shared alphabetic name prefix (`run1`, `run2` → `run`).

use std::collections::BTreeMap;
use std::ops::Range;
use std::path::Path;
use std::sync::OnceLock;

use byteorder::{ByteOrder, LittleEndian};
use nalgebra::{Point3, Vector3};

use super::{parse_error, IoError};
use crate::anim::{Interpolation, Keyframe, VertexAnimatedSurface};
use crate::mesh::{Surface, VertexId};

const MAGIC: &[u8; 4] = b"IDP2";
const VERSION: i32 = 8;

/// The 162 unit directions MD2 frame vertices index their normals into.
///
/// The set is the frequency-4 geodesic subdivision of the icosahedron with
/// vertices at the cyclic permutations of `(±1, 0, ±φ)`: every face grid
/// point `(i·A + j·B + k·C)/4`, `i+j+k = 4`, projected to the unit sphere.
/// Entries are emitted by a corner-first recursive subdivision of each face
/// so indices stay stable across builds.
pub fn md2_normal_table() -> &'static [Vector3<f64>] {
    static TABLE: OnceLock<Vec<Vector3<f64>>> = OnceLock::new();
    TABLE.get_or_init(build_normal_table).as_slice()
}

fn build_normal_table() -> Vec<Vector3<f64>> {
    let phi = (1.0 + 5.0f64.sqrt()) / 2.0;
    let v = |x: f64, y: f64, z: f64| Vector3::new(x, y, z);
    let raw = [
        v(-1.0, 0.0, phi),  // 0
        v(1.0, 0.0, phi),   // 1
        v(-1.0, 0.0, -phi), // 2
        v(1.0, 0.0, -phi),  // 3
        v(-phi, -1.0, 0.0), // 4
        v(-phi, 1.0, 0.0),  // 5
        v(phi, -1.0, 0.0),  // 6
        v(phi, 1.0, 0.0),   // 7
        v(0.0, -phi, -1.0), // 8
        v(0.0, -phi, 1.0),  // 9
        v(0.0, phi, -1.0),  // 10
        v(0.0, phi, 1.0),   // 11
    ];

    // Faces in a fixed order, the first two matching the historic table's
    // leading entries; the rest sorted by vertex index.
    let mut faces: Vec<[usize; 3]> = vec![[0, 11, 1], [1, 7, 11]];
    for i in 0..raw.len() {
        for j in i + 1..raw.len() {
            for k in j + 1..raw.len() {
                let edge = |a: usize, b: usize| ((raw[a] - raw[b]).norm_squared() - 4.0).abs();
                if edge(i, j) < 1e-9 && edge(i, k) < 1e-9 && edge(j, k) < 1e-9 {
                    let mut key = [i, j, k];
                    key.sort_unstable();
                    let dup = faces.iter().any(|f| {
                        let mut fk = *f;
                        fk.sort_unstable();
                        fk == key
                    });
                    if !dup {
                        faces.push([i, j, k]);
                    }
                }
            }
        }
    }
    debug_assert_eq!(faces.len(), 20);

    let mut out = Vec::with_capacity(162);
    let mut seen = std::collections::HashSet::new();
    for f in faces {
        subdivide(raw[f[0]], raw[f[1]], raw[f[2]], 2, &mut out, &mut seen);
    }
    debug_assert_eq!(out.len(), 162);
    out
}

fn subdivide(
    x: Vector3<f64>,
    y: Vector3<f64>,
    z: Vector3<f64>,
    depth: u32,
    out: &mut Vec<Vector3<f64>>,
    seen: &mut std::collections::HashSet<[i64; 3]>,
) {
    if depth == 0 {
        for p in [x, y, z] {
            let n = p.normalize();
            let key = [0, 1, 2].map(|k| (n[k] * 1e9).round() as i64);
            if seen.insert(key) {
                out.push(n);
            }
        }
        return;
    }
    let (mxy, mxz, myz) = ((x + y) / 2.0, (x + z) / 2.0, (y + z) / 2.0);
    subdivide(x, mxy, mxz, depth - 1, out, seen);
    subdivide(y, mxy, myz, depth - 1, out, seen);
    subdivide(z, mxz, myz, depth - 1, out, seen);
    subdivide(mxy, mxz, myz, depth - 1, out, seen);
}

/// Bounds-checked little-endian reader over an in-memory stream.
struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn new(bytes: &'a [u8]) -> Self {
        Reader { bytes, pos: 0 }
    }

    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8], IoError> {
        if self.pos + n > self.bytes.len() {
            return Err(IoError::TruncatedFile(format!(
                "{what} needs {n} bytes at offset {}",
                self.pos
            )));
        }
        let slice = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(slice)
    }

    fn seek(&mut self, pos: i32, what: &str) -> Result<(), IoError> {
        if pos < 0 || pos as usize > self.bytes.len() {
            return Err(IoError::TruncatedFile(format!(
                "{what} offset {pos} outside the {}-byte stream",
                self.bytes.len()
            )));
        }
        self.pos = pos as usize;
        Ok(())
    }

    fn i32(&mut self, what: &str) -> Result<i32, IoError> {
        Ok(LittleEndian::read_i32(self.take(4, what)?))
    }

    fn u16(&mut self, what: &str) -> Result<u16, IoError> {
        Ok(LittleEndian::read_u16(self.take(2, what)?))
    }

    fn f32(&mut self, what: &str) -> Result<f32, IoError> {
        Ok(LittleEndian::read_f32(self.take(4, what)?))
    }
}

/// Load an MD2 model from a file.
pub fn load_md2_path(path: &Path) -> Result<VertexAnimatedSurface, IoError> {
    let bytes = std::fs::read(path)?;
    load_md2(&bytes)
}

/// Load an MD2 model from memory.
///
/// The triangle lump is authoritative for connectivity; texture coordinates
/// and GL commands are validated but not needed by the mesh. The returned
/// surface is built from frame 0, keyframes carry every frame's
/// decompressed positions and table normals, and interpolation defaults to
/// linear.
pub fn load_md2(bytes: &[u8]) -> Result<VertexAnimatedSurface, IoError> {
    let mut r = Reader::new(bytes);
    let magic = r.take(4, "magic")?;
    if magic != MAGIC {
        return Err(IoError::BadMagic {
            expected: String::from_utf8_lossy(MAGIC).into_owned(),
            found: String::from_utf8_lossy(magic).into_owned(),
        });
    }
    let version = r.i32("version")?;
    if version != VERSION {
        return Err(IoError::UnsupportedVersion {
            got: version as i64,
            want: VERSION as i64,
        });
    }

    let mut header = [0i32; 15];
    for (i, name) in [
        "skinwidth",
        "skinheight",
        "framesize",
        "num_skins",
        "num_xyz",
        "num_st",
        "num_tris",
        "num_glcmds",
        "num_frames",
        "ofs_skins",
        "ofs_st",
        "ofs_tris",
        "ofs_frames",
        "ofs_glcmds",
        "ofs_end",
    ]
    .iter()
    .enumerate()
    {
        header[i] = r.i32(name)?;
    }
    let [_, _, framesize, _, num_xyz, num_st, num_tris, _, num_frames, _, ofs_st, ofs_tris, ofs_frames, _, _] =
        header;

    if num_xyz < 3 || num_tris < 1 || num_frames < 1 || num_st < 0 {
        return Err(parse_error(
            0,
            format!(
                "implausible counts: {num_xyz} vertices, {num_tris} triangles, \
                 {num_frames} frames"
            ),
        ));
    }
    let vertex_bytes = 40 + 4 * num_xyz as usize; // frame header + 4 bytes per vertex
    if (framesize as usize) < vertex_bytes {
        return Err(parse_error(
            0,
            format!("framesize {framesize} too small for {num_xyz} vertices"),
        ));
    }

    // Texture coordinates: bounds-validated, content unused.
    r.seek(ofs_st, "st lump")?;
    r.take(4 * num_st as usize, "st lump")?;

    // Triangles: per corner a vertex index and an st index.
    r.seek(ofs_tris, "triangle lump")?;
    let mut triangles = Vec::with_capacity(num_tris as usize);
    for t in 0..num_tris {
        let mut corners = [0 as VertexId; 3];
        for corner in &mut corners {
            let idx = r.u16("vertex index")?;
            if i32::from(idx) >= num_xyz {
                return Err(parse_error(
                    0,
                    format!("triangle {t} references vertex {idx} of {num_xyz}"),
                ));
            }
            *corner = VertexId::from(idx);
        }
        for _ in 0..3 {
            r.u16("st index")?;
        }
        triangles.push(corners);
    }

    // Frames: per-frame affine decompression of byte positions.
    let table = md2_normal_table();
    let mut keyframes = Vec::with_capacity(num_frames as usize);
    let mut names = Vec::with_capacity(num_frames as usize);
    for f in 0..num_frames {
        r.seek(ofs_frames + f * framesize, "frame")?;
        let mut scale = [0.0f32; 3];
        let mut translate = [0.0f32; 3];
        for s in &mut scale {
            *s = r.f32("frame scale")?;
        }
        for t in &mut translate {
            *t = r.f32("frame translate")?;
        }
        let name_bytes = r.take(16, "frame name")?;
        let end = name_bytes.iter().position(|&b| b == 0).unwrap_or(16);
        names.push(String::from_utf8_lossy(&name_bytes[..end]).into_owned());

        let mut positions = Vec::with_capacity(num_xyz as usize);
        let mut normals = Vec::with_capacity(num_xyz as usize);
        for _ in 0..num_xyz {
            let v = r.take(4, "frame vertex")?;
            positions.push(Point3::new(
                f64::from(scale[0]) * f64::from(v[0]) + f64::from(translate[0]),
                f64::from(scale[1]) * f64::from(v[1]) + f64::from(translate[1]),
                f64::from(scale[2]) * f64::from(v[2]) + f64::from(translate[2]),
            ));
            let ni = v[3] as usize;
            if ni >= table.len() {
                return Err(parse_error(
                    0,
                    format!("normal index {ni} exceeds the {}-entry table", table.len()),
                ));
            }
            normals.push(table[ni]);
        }
        keyframes.push(Keyframe { positions, normals });
    }

    let animations = group_frames(&names);
    let surface = Surface::build(keyframes[0].positions.clone(), &triangles)?;
    Ok(VertexAnimatedSurface::new(
        surface,
        keyframes,
        animations,
        Interpolation::Linear,
    )?)
}

/// Group consecutive frames by their leading alphabetic name prefix.
/// Frames whose names start with a digit group under the full name. A
/// prefix that reappears later (non-consecutively) gets a numeric suffix so
/// every clip stays a contiguous range.
fn group_frames(names: &[String]) -> BTreeMap<String, Range<usize>> {
    let prefix = |name: &str| {
        let p: String = name.chars().take_while(|c| c.is_ascii_alphabetic()).collect();
        if p.is_empty() {
            name.to_string()
        } else {
            p
        }
    };
    let mut animations = BTreeMap::new();
    let mut start = 0;
    while start < names.len() {
        let p = prefix(&names[start]);
        let mut end = start + 1;
        while end < names.len() && prefix(&names[end]) == p {
            end += 1;
        }
        let mut key = p.clone();
        let mut suffix = 2;
        while animations.contains_key(&key) {
            log::warn!("frame prefix {p:?} repeats non-consecutively");
            key = format!("{p}_{suffix}");
            suffix += 1;
        }
        animations.insert(key, start..end);
        start = end;
    }
    animations
}
