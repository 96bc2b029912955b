//! Skinned-mesh loading from the JSON `zskin-1` format.
//!
//! The format is a plain JSON document, versioned by its `format` field so
//! it can evolve. A complete example:
//!
//! ```json
//! {
//!   "format": "zskin-1",
//!   "positions": [[0, 0, 0], [1, 0, 0], [0, 1, 0]],
//!   "triangles": [[0, 1, 2]],
//!   "bones": [
//!     {"name": "root", "parent": null,
//!      "rotation": [0, 0, 0, 1], "translation": [0, 0, 0]},
//!     {"name": "tip", "parent": 0,
//!      "rotation": [0, 0, 0, 1], "translation": [1, 0, 0]}
//!   ],
//!   "weights": [
//!     [{"bone": 0, "weight": 1}],
//!     [{"bone": 0, "weight": 0.5}, {"bone": 1, "weight": 0.5}],
//!     [{"bone": 1, "weight": 1}]
//!   ],
//!   "tracks": [
//!     [],
//!     [{"time": 0, "rotation": [0, 0, 0, 1], "translation": [1, 0, 0]}]
//!   ]
//! }
//! ```
//!
//! `positions` and `triangles` describe the bind-pose mesh. Each bone gives
//! its parent index (`null` for roots; parents must be listed before
//! children) and its bind-local transform as a `[x, y, z, w]` quaternion
//! plus translation, both optional and defaulting to identity. `weights`
//! lists one influence array per vertex; weights must be nonnegative and
//! are renormalized to sum to 1 (with a warning past a 1e-4 discrepancy).
//! `tracks` is optional and gives one key list per bone; an empty list
//! holds the bone at its bind-local transform.

use std::path::Path;

use nalgebra::{Isometry3, Point3, Quaternion, Translation3, UnitQuaternion, Vector3};
use serde::Deserialize;

use super::{parse_error, IoError};
use crate::anim::{Bone, BoneTrack, SkinnedSurface, Skeleton, VertexWeight};
use crate::mesh::Surface;

const FORMAT: &str = "zskin-1";

#[derive(Deserialize)]
struct SkinDoc {
    format: String,
    positions: Vec<[f64; 3]>,
    triangles: Vec<[u32; 3]>,
    bones: Vec<BoneDoc>,
    weights: Vec<Vec<WeightDoc>>,
    #[serde(default)]
    tracks: Option<Vec<Vec<KeyDoc>>>,
}

#[derive(Deserialize)]
struct BoneDoc {
    name: String,
    parent: Option<usize>,
    #[serde(default = "identity_rotation")]
    rotation: [f64; 4],
    #[serde(default)]
    translation: [f64; 3],
}

#[derive(Deserialize)]
struct WeightDoc {
    bone: usize,
    weight: f64,
}

#[derive(Deserialize)]
struct KeyDoc {
    time: f64,
    #[serde(default = "identity_rotation")]
    rotation: [f64; 4],
    #[serde(default)]
    translation: [f64; 3],
}

fn identity_rotation() -> [f64; 4] {
    [0.0, 0.0, 0.0, 1.0]
}

/// Load a skinned mesh from a `zskin-1` file.
pub fn load_skin(path: &Path) -> Result<SkinnedSurface, IoError> {
    let bytes = std::fs::read(path)?;
    load_skin_bytes(&bytes)
}

/// Load a skinned mesh from `zskin-1` bytes already in memory.
pub fn load_skin_bytes(bytes: &[u8]) -> Result<SkinnedSurface, IoError> {
    let doc: SkinDoc = serde_json::from_slice(bytes)
        .map_err(|e| parse_error(e.line(), e.to_string()))?;
    if doc.format != FORMAT {
        return Err(parse_error(
            1,
            format!("format {:?} is not {FORMAT:?}", doc.format),
        ));
    }

    validate_hierarchy(&doc.bones)?;
    let bones = doc
        .bones
        .into_iter()
        .map(|b| {
            Ok(Bone {
                bind_local: isometry(b.rotation, b.translation, &b.name)?,
                name: b.name,
                parent: b.parent,
            })
        })
        .collect::<Result<Vec<_>, IoError>>()?;
    let skeleton = Skeleton::new(bones)?;

    if doc.weights.len() != doc.positions.len() {
        return Err(parse_error(
            1,
            format!(
                "{} weight lists for {} vertices",
                doc.weights.len(),
                doc.positions.len()
            ),
        ));
    }
    let mut weights = Vec::with_capacity(doc.weights.len());
    for (vertex, influences) in doc.weights.iter().enumerate() {
        weights.push(normalize_weights(vertex, influences, skeleton.bone_count())?);
    }

    let tracks = match doc.tracks {
        None => vec![BoneTrack::default(); skeleton.bone_count()],
        Some(lists) => {
            if lists.len() != skeleton.bone_count() {
                return Err(parse_error(
                    1,
                    format!(
                        "{} track lists for {} bones",
                        lists.len(),
                        skeleton.bone_count()
                    ),
                ));
            }
            lists
                .into_iter()
                .enumerate()
                .map(|(bone, keys)| {
                    let keys = keys
                        .into_iter()
                        .map(|k| {
                            let label = format!("bone {bone} key at t={}", k.time);
                            Ok((k.time, isometry(k.rotation, k.translation, &label)?))
                        })
                        .collect::<Result<Vec<_>, IoError>>()?;
                    Ok(BoneTrack { keys })
                })
                .collect::<Result<Vec<_>, IoError>>()?
        }
    };

    let positions = doc
        .positions
        .iter()
        .map(|p| Point3::new(p[0], p[1], p[2]))
        .collect();
    let surface = Surface::build(positions, &doc.triangles)?;
    Ok(SkinnedSurface::new(surface, skeleton, weights, tracks)?)
}

/// Reject cyclic parent links, then out-of-range and out-of-order ones.
/// Cycles are found by walking each bone's parent chain: in an
/// `n`-bone forest no chain is longer than `n`.
fn validate_hierarchy(bones: &[BoneDoc]) -> Result<(), IoError> {
    let n = bones.len();
    for (i, bone) in bones.iter().enumerate() {
        if let Some(p) = bone.parent {
            if p >= n {
                return Err(parse_error(
                    1,
                    format!("bone {i} has parent {p}, but there are {n} bones"),
                ));
            }
        }
    }
    for start in 0..n {
        let mut at = start;
        for _ in 0..n {
            match bones[at].parent {
                Some(p) => at = p,
                None => break,
            }
        }
        if bones[at].parent.is_some() {
            return Err(IoError::CyclicSkeleton(start));
        }
    }
    for (i, bone) in bones.iter().enumerate() {
        if let Some(p) = bone.parent {
            if p >= i {
                return Err(parse_error(
                    1,
                    format!("bone {i} is listed before its parent {p}"),
                ));
            }
        }
    }
    Ok(())
}

/// Build a rigid transform from an `[x, y, z, w]` quaternion and a
/// translation. The quaternion is normalized; a near-zero one is rejected
/// and a clearly non-unit one warned about, since a scaling component
/// cannot be represented.
fn isometry(rotation: [f64; 4], translation: [f64; 3], what: &str) -> Result<Isometry3<f64>, IoError> {
    let [x, y, z, w] = rotation;
    let q = Quaternion::new(w, x, y, z);
    let norm = q.norm();
    if norm < 1e-9 {
        return Err(parse_error(1, format!("{what}: zero-length quaternion")));
    }
    if (norm - 1.0).abs() > 1e-3 {
        log::warn!("{what}: quaternion norm {norm} normalized to 1 (scales are not supported)");
    }
    Ok(Isometry3::from_parts(
        Translation3::from(Vector3::new(
            translation[0],
            translation[1],
            translation[2],
        )),
        UnitQuaternion::from_quaternion(q),
    ))
}

/// Check influences for vertex `vertex` and renormalize them to sum to 1.
fn normalize_weights(
    vertex: usize,
    influences: &[WeightDoc],
    bone_count: usize,
) -> Result<Vec<VertexWeight>, IoError> {
    let mut sum = 0.0;
    for w in influences {
        if w.bone >= bone_count {
            return Err(IoError::BadWeight(format!(
                "vertex {vertex} references bone {} of {bone_count}",
                w.bone
            )));
        }
        if w.weight < 0.0 {
            return Err(IoError::BadWeight(format!(
                "vertex {vertex} has negative weight {}",
                w.weight
            )));
        }
        sum += w.weight;
    }
    if sum <= 0.0 {
        return Err(IoError::BadWeight(format!(
            "vertex {vertex} has zero total weight"
        )));
    }
    if (sum - 1.0).abs() > 1e-4 {
        log::warn!("vertex {vertex} weights sum to {sum}; renormalizing");
    }
    Ok(influences
        .iter()
        .map(|w| VertexWeight {
            bone: w.bone,
            weight: w.weight / sum,
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn two_bone_doc() -> serde_json::Value {
        serde_json::json!({
            "format": "zskin-1",
            "positions": [[0, 0, 0], [1, 0, 0], [0, 1, 0]],
            "triangles": [[0, 1, 2]],
            "bones": [
                {"name": "root", "parent": null},
                {"name": "tip", "parent": 0, "translation": [1, 0, 0]}
            ],
            "weights": [
                [{"bone": 0, "weight": 1}],
                [{"bone": 0, "weight": 1}],
                [{"bone": 0, "weight": 1}]
            ]
        })
    }

    fn load(doc: &serde_json::Value) -> Result<SkinnedSurface, IoError> {
        load_skin_bytes(doc.to_string().as_bytes())
    }

    #[test]
    fn two_bone_chain_skins_to_bind_pose() {
        let skinned = load(&two_bone_doc()).unwrap();
        assert_eq!(skinned.skeleton().bone_count(), 2);
        assert_eq!(skinned.surface().vertex_count(), 3);

        let state = skinned.state_at(0.0).unwrap();
        for (v, p) in [(0, [0.0, 0.0, 0.0]), (1, [1.0, 0.0, 0.0]), (2, [0.0, 1.0, 0.0])] {
            let got = state.position(v);
            assert_relative_eq!(got.x, p[0], epsilon = 1e-12);
            assert_relative_eq!(got.y, p[1], epsilon = 1e-12);
            assert_relative_eq!(got.z, p[2], epsilon = 1e-12);
        }
    }

    #[test]
    fn overweight_vertices_renormalize() {
        let mut doc = two_bone_doc();
        doc["weights"][1] = serde_json::json!([
            {"bone": 0, "weight": 0.6},
            {"bone": 1, "weight": 0.6}
        ]);
        let skinned = load(&doc).unwrap();
        let w = &skinned.weights()[1];
        assert_eq!(w.len(), 2);
        assert_relative_eq!(w[0].weight, 0.5, epsilon = 1e-12);
        assert_relative_eq!(w[1].weight, 0.5, epsilon = 1e-12);
    }

    #[test]
    fn negative_weights_are_rejected() {
        let mut doc = two_bone_doc();
        doc["weights"][0] = serde_json::json!([
            {"bone": 0, "weight": 1.5},
            {"bone": 1, "weight": -0.5}
        ]);
        assert!(matches!(load(&doc), Err(IoError::BadWeight(_))));
    }

    #[test]
    fn zero_total_weight_is_rejected() {
        let mut doc = two_bone_doc();
        doc["weights"][2] = serde_json::json!([{"bone": 0, "weight": 0}]);
        assert!(matches!(load(&doc), Err(IoError::BadWeight(_))));
    }

    #[test]
    fn cyclic_skeletons_are_rejected() {
        let mut doc = two_bone_doc();
        doc["bones"] = serde_json::json!([
            {"name": "a", "parent": 1},
            {"name": "b", "parent": 0}
        ]);
        assert!(matches!(load(&doc), Err(IoError::CyclicSkeleton(0))));
    }

    #[test]
    fn children_before_parents_are_rejected() {
        let mut doc = two_bone_doc();
        doc["bones"] = serde_json::json!([
            {"name": "a", "parent": 1},
            {"name": "b", "parent": null}
        ]);
        let err = load(&doc).unwrap_err();
        assert!(
            matches!(&err, IoError::ParseError { reason, .. } if reason.contains("before its parent")),
            "{err}"
        );
    }

    #[test]
    fn out_of_range_parents_are_rejected() {
        let mut doc = two_bone_doc();
        doc["bones"][1]["parent"] = serde_json::json!(9);
        assert!(matches!(load(&doc), Err(IoError::ParseError { .. })));
    }

    #[test]
    fn wrong_format_tag_is_rejected() {
        let mut doc = two_bone_doc();
        doc["format"] = serde_json::json!("zskin-0");
        let err = load(&doc).unwrap_err();
        assert!(
            matches!(&err, IoError::ParseError { reason, .. } if reason.contains("zskin-1")),
            "{err}"
        );
    }

    #[test]
    fn malformed_json_reports_the_line() {
        let text = "{\n  \"format\": \"zskin-1\",\n  oops\n}";
        let err = load_skin_bytes(text.as_bytes()).unwrap_err();
        assert!(matches!(err, IoError::ParseError { line: 3, .. }), "{err}");
    }

    #[test]
    fn tracks_parse_and_animate() {
        let mut doc = two_bone_doc();
        // Move the root 2 units up at t=1; all weights are on bone 0.
        doc["tracks"] = serde_json::json!([
            [
                {"time": 0.0},
                {"time": 1.0, "translation": [0, 0, 2]}
            ],
            []
        ]);
        let skinned = load(&doc).unwrap();
        let state = skinned.state_at(1.0).unwrap();
        assert_relative_eq!(state.position(0).z, 2.0, epsilon = 1e-12);
        assert_relative_eq!(state.position(1).x, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn track_count_must_match_bone_count() {
        let mut doc = two_bone_doc();
        doc["tracks"] = serde_json::json!([[]]);
        assert!(matches!(load(&doc), Err(IoError::ParseError { .. })));
    }

    #[test]
    fn zero_quaternions_are_rejected() {
        let mut doc = two_bone_doc();
        doc["bones"][0]["rotation"] = serde_json::json!([0, 0, 0, 0]);
        assert!(matches!(load(&doc), Err(IoError::ParseError { .. })));
    }
}
