//! Wavefront OBJ and MTL parsing.
//!
//! Supports the directives `v`, `vn`, `vt`, `f` (with fan triangulation of
//! larger faces), `mtllib`, and `usemtl`. Face corners may use any of the
//! index forms `v`, `v/vt`, `v//vn`, and `v/vt/vn`; negative indices count
//! back from the most recently defined element. Positions are welded only
//! when the file indexes them identically — corners that pair one position
//! with different texture or normal indices become distinct vertices, since
//! the mesh core keeps one attribute per vertex.

use std::collections::HashMap;
use std::path::Path;

use nalgebra::{Point3, Vector3};

use super::{parse_error, IoError};
use crate::mesh::{ElementKind, Material, Rgb, Surface, VertexId};

/// Load an OBJ file; `mtllib` references resolve relative to its directory.
pub fn load_obj(path: &Path) -> Result<Surface, IoError> {
    let bytes = std::fs::read(path)?;
    load_obj_bytes(&bytes, path.parent())
}

/// Load OBJ data from memory. Companion MTL files referenced by `mtllib`
/// are looked up in `resource_dir`; without one the reference is skipped
/// with a warning.
pub fn load_obj_bytes(bytes: &[u8], resource_dir: Option<&Path>) -> Result<Surface, IoError> {
    let text = std::str::from_utf8(bytes)
        .map_err(|e| parse_error(0, format!("OBJ is not valid UTF-8: {e}")))?;

    let mut positions: Vec<Point3<f64>> = Vec::new();
    let mut texcoords: Vec<(f64, f64)> = Vec::new();
    let mut normal_count = 0usize;

    // Output vertices, welded by identical (position, texcoord, normal)
    // index triples.
    let mut corner_ids: HashMap<(usize, Option<usize>, Option<usize>), VertexId> = HashMap::new();
    let mut out_positions: Vec<Point3<f64>> = Vec::new();
    let mut out_uvs: Vec<(f64, f64)> = Vec::new();
    let mut any_uv = false;
    let mut triangles: Vec<[VertexId; 3]> = Vec::new();

    let mut materials: Vec<Material> = Vec::new();
    let mut chosen_material: Option<Material> = None;

    for (line_index, raw_line) in text.lines().enumerate() {
        let line_no = line_index + 1;
        let line = raw_line.trim();
        let mut tokens = line.split_whitespace();
        let Some(directive) = tokens.next() else {
            continue;
        };
        match directive {
            "#" | "o" | "g" | "s" => {}
            "v" => positions.push(Point3::from(parse_vec3(tokens, line_no, "v")?)),
            "vt" => {
                let u = parse_float(tokens.next(), line_no, "vt u")?;
                let v = parse_float(tokens.next(), line_no, "vt v")?;
                texcoords.push((u, v));
            }
            "vn" => {
                parse_vec3(tokens, line_no, "vn")?;
                normal_count += 1;
            }
            "f" => {
                let mut corners: Vec<VertexId> = Vec::new();
                for token in tokens {
                    let key = parse_corner(
                        token,
                        line_no,
                        positions.len(),
                        texcoords.len(),
                        normal_count,
                    )?;
                    let next_id = out_positions.len() as VertexId;
                    let id = *corner_ids.entry(key).or_insert_with(|| {
                        out_positions.push(positions[key.0]);
                        out_uvs.push(key.1.map(|vt| texcoords[vt]).unwrap_or((0.0, 0.0)));
                        next_id
                    });
                    if key.1.is_some() {
                        any_uv = true;
                    }
                    corners.push(id);
                }
                if corners.len() < 3 {
                    return Err(parse_error(
                        line_no,
                        format!("face needs at least 3 corners, found {}", corners.len()),
                    ));
                }
                // Fan triangulation for quads and larger faces.
                for i in 1..corners.len() - 1 {
                    triangles.push([corners[0], corners[i], corners[i + 1]]);
                }
            }
            "mtllib" => {
                let name = tokens.next().ok_or_else(|| {
                    parse_error(line_no, "mtllib needs a file name".to_string())
                })?;
                match resource_dir {
                    Some(dir) => {
                        let path = dir.join(name);
                        if path.is_file() {
                            materials = load_mtl(&path)?;
                        } else {
                            log::warn!("mtllib {name:?} not found next to the OBJ; skipping");
                        }
                    }
                    None => log::warn!("mtllib {name:?} ignored: no resource directory"),
                }
            }
            "usemtl" => {
                let name = tokens.next().ok_or_else(|| {
                    parse_error(line_no, "usemtl needs a material name".to_string())
                })?;
                match materials.iter().find(|m| m.name == name) {
                    // The mesh keeps one material; the first usemtl wins.
                    Some(m) if chosen_material.is_none() => chosen_material = Some(m.clone()),
                    Some(_) => {}
                    None => log::warn!("usemtl {name:?} references an unknown material"),
                }
            }
            other => log::warn!("skipping unknown OBJ directive {other:?} on line {line_no}"),
        }
    }

    let mut surface = Surface::build(out_positions, &triangles)?;
    if let Some(material) = chosen_material {
        surface.set_material(material);
    }
    if any_uv {
        let uv = surface
            .add_vec3_property(ElementKind::Vertex, "uv")
            .expect("fresh surface has no uv property");
        for (v, &(s, t)) in out_uvs.iter().enumerate() {
            surface.set_vec3(uv, v as u32, Vector3::new(s, t, 0.0));
        }
    }
    Ok(surface)
}

fn parse_float(token: Option<&str>, line_no: usize, what: &str) -> Result<f64, IoError> {
    let token = token.ok_or_else(|| parse_error(line_no, format!("missing {what}")))?;
    token
        .parse::<f64>()
        .map_err(|_| parse_error(line_no, format!("{what}: {token:?} is not a number")))
}

fn parse_vec3<'a>(
    mut tokens: impl Iterator<Item = &'a str>,
    line_no: usize,
    what: &str,
) -> Result<Vector3<f64>, IoError> {
    let x = parse_float(tokens.next(), line_no, what)?;
    let y = parse_float(tokens.next(), line_no, what)?;
    let z = parse_float(tokens.next(), line_no, what)?;
    Ok(Vector3::new(x, y, z))
}

/// Resolve a 1-based (or negative, relative) OBJ index against the current
/// element count.
fn resolve_index(raw: i64, count: usize, line_no: usize, what: &str) -> Result<usize, IoError> {
    let resolved = if raw > 0 {
        raw as usize - 1
    } else if raw < 0 {
        let back = (-raw) as usize;
        if back > count {
            return Err(parse_error(
                line_no,
                format!("{what} index {raw} reaches before the first element"),
            ));
        }
        count - back
    } else {
        return Err(parse_error(line_no, format!("{what} index may not be 0")));
    };
    if resolved >= count {
        return Err(parse_error(
            line_no,
            format!("{what} index {raw} out of range (have {count})"),
        ));
    }
    Ok(resolved)
}

type CornerKey = (usize, Option<usize>, Option<usize>);

/// Parse one face corner in any of the forms `v`, `v/vt`, `v//vn`,
/// `v/vt/vn`.
fn parse_corner(
    token: &str,
    line_no: usize,
    n_positions: usize,
    n_texcoords: usize,
    n_normals: usize,
) -> Result<CornerKey, IoError> {
    let mut parts = token.splitn(3, '/');
    let v_part = parts.next().unwrap_or_default();
    let vt_part = parts.next();
    let vn_part = parts.next();

    let parse_raw = |part: &str, what: &str| -> Result<i64, IoError> {
        part.parse::<i64>()
            .map_err(|_| parse_error(line_no, format!("{what} index {part:?} is not an integer")))
    };

    let v = resolve_index(parse_raw(v_part, "vertex")?, n_positions, line_no, "vertex")?;
    let vt = match vt_part {
        Some("") | None => None,
        Some(part) => Some(resolve_index(
            parse_raw(part, "texcoord")?,
            n_texcoords,
            line_no,
            "texcoord",
        )?),
    };
    let vn = match vn_part {
        Some("") | None => None,
        Some(part) => Some(resolve_index(
            parse_raw(part, "normal")?,
            n_normals,
            line_no,
            "normal",
        )?),
    };
    Ok((v, vt, vn))
}

/// Load an MTL material library.
pub fn load_mtl(path: &Path) -> Result<Vec<Material>, IoError> {
    let bytes = std::fs::read(path)?;
    load_mtl_bytes(&bytes)
}

/// Parse MTL data from memory: `newmtl`, `Ka`, `Kd`, `Ks`, `Ns`, and
/// `map_Kd` are honored; anything else is skipped with a warning. Fields a
/// material does not set keep their defaults (shininess 32, gray diffuse).
pub fn load_mtl_bytes(bytes: &[u8]) -> Result<Vec<Material>, IoError> {
    let text = std::str::from_utf8(bytes)
        .map_err(|e| parse_error(0, format!("MTL is not valid UTF-8: {e}")))?;
    let mut materials: Vec<Material> = Vec::new();

    for (line_index, raw_line) in text.lines().enumerate() {
        let line_no = line_index + 1;
        let line = raw_line.trim();
        let mut tokens = line.split_whitespace();
        let Some(directive) = tokens.next() else {
            continue;
        };
        if directive == "#" {
            continue;
        }
        if directive == "newmtl" {
            let name = tokens
                .next()
                .ok_or_else(|| parse_error(line_no, "newmtl needs a name".to_string()))?;
            materials.push(Material {
                name: name.to_string(),
                ..Material::default()
            });
            continue;
        }
        let current = materials.last_mut().ok_or_else(|| {
            parse_error(line_no, format!("{directive:?} before any newmtl"))
        })?;
        match directive {
            "Ka" | "Kd" | "Ks" => {
                let c = parse_vec3(tokens, line_no, directive)?;
                let rgb = Rgb::new(c.x as f32, c.y as f32, c.z as f32);
                match directive {
                    "Ka" => current.ambient = rgb,
                    "Kd" => current.diffuse = rgb,
                    _ => current.specular = rgb,
                }
            }
            "Ns" => current.shininess = parse_float(tokens.next(), line_no, "Ns")? as f32,
            "map_Kd" => {
                let name = tokens
                    .next()
                    .ok_or_else(|| parse_error(line_no, "map_Kd needs a file name".to_string()))?;
                current.diffuse_texture = Some(name.to_string());
            }
            other => log::warn!("skipping unknown MTL directive {other:?} on line {line_no}"),
        }
    }
    Ok(materials)
}
