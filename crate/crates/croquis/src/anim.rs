//! Mesh animation: per-vertex keyframe interpolation and skeletal skinning.
//!
//! Both animation styles produce a [`MeshState`] — a snapshot of deformed
//! vertex positions and normals over the base [`Surface`] connectivity. The
//! rest of the toolkit (curvature estimation, contour extraction, rendering)
//! consumes states, so every downstream operation works identically on
//! static and animated geometry.
//!
//! [`VertexAnimatedSurface`] stores whole-mesh keyframes and named clips over
//! contiguous frame ranges, interpolated linearly or with a Catmull-Rom
//! spline; time is measured in keyframe indices. [`SkinnedSurface`] stores a
//! bone hierarchy, per-vertex bone weights, and time-keyed bone tracks in
//! seconds; posing interpolates each bone's track and skinning applies the
//! usual linear-blend formula.

use std::collections::BTreeMap;
use std::ops::Range;

use nalgebra::{Isometry3, Point3, Translation3, UnitQuaternion, Vector3};

use crate::mesh::Surface;
use crate::render::spline::catmull_rom_weights;

/// Errors reported by animation construction and evaluation.
#[derive(Debug, thiserror::Error)]
pub enum AnimError {
    /// No animation with the requested name exists.
    #[error("unknown animation {0:?}")]
    UnknownAnimation(String),
    /// The requested time lies outside the animation's valid range.
    #[error("time {t} outside the valid range [0, {max}]")]
    TimeOutOfRange { t: f64, max: f64 },
    /// A pose or track array does not have one entry per bone.
    #[error("expected {expected} per-bone entries, got {got}")]
    BadPose { expected: usize, got: usize },
    /// A deformed array does not have one entry per base vertex.
    #[error("expected {expected} per-vertex entries, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    /// An animation's frame range does not fit the stored keyframes.
    #[error("animation {name:?} covers frames {start}..{end} but only {frames} keyframes exist")]
    InvalidRange {
        name: String,
        start: usize,
        end: usize,
        frames: usize,
    },
    /// A bone's parent does not precede it in the skeleton.
    #[error("bone {bone} has parent {parent}, which does not precede it")]
    ParentOutOfOrder { bone: usize, parent: usize },
    /// A vertex's skin weights are unusable.
    #[error("vertex {vertex} has bad skin weights: {detail}")]
    BadWeight { vertex: usize, detail: String },
    /// A bone track's key times are not strictly increasing.
    #[error("track for bone {bone} has non-increasing key times")]
    BadTrack { bone: usize },
}

/// A snapshot of deformed geometry over a surface's connectivity.
///
/// Positions and normals have exactly one entry per base vertex; normals are
/// unit length. `time` records the animation time the snapshot was sampled
/// at (zero for a rest state).
#[derive(Debug, Clone)]
pub struct MeshState<'a> {
    surface: &'a Surface,
    positions: Vec<Point3<f64>>,
    normals: Vec<Vector3<f64>>,
    time: f64,
}

impl<'a> MeshState<'a> {
    /// Wraps explicit deformed arrays.
    ///
    /// Nonzero normals are renormalized; array lengths must match the
    /// surface's vertex count.
    pub fn new(
        surface: &'a Surface,
        positions: Vec<Point3<f64>>,
        mut normals: Vec<Vector3<f64>>,
        time: f64,
    ) -> Result<Self, AnimError> {
        let expected = surface.vertex_count();
        for got in [positions.len(), normals.len()] {
            if got != expected {
                return Err(AnimError::LengthMismatch { expected, got });
            }
        }
        for n in &mut normals {
            let len = n.norm();
            if len > 0.0 {
                *n /= len;
            }
        }
        Ok(MeshState {
            surface,
            positions,
            normals,
            time,
        })
    }

    /// The undeformed state: the surface's own positions and normals at time
    /// zero.
    pub fn rest(surface: &'a Surface) -> Self {
        MeshState {
            surface,
            positions: surface.positions().to_vec(),
            normals: surface.normals().to_vec(),
            time: 0.0,
        }
    }

    /// The surface providing connectivity for this state.
    pub fn surface(&self) -> &'a Surface {
        self.surface
    }

    pub fn positions(&self) -> &[Point3<f64>] {
        &self.positions
    }

    pub fn normals(&self) -> &[Vector3<f64>] {
        &self.normals
    }

    pub fn position(&self, v: u32) -> Point3<f64> {
        self.positions[v as usize]
    }

    pub fn normal(&self, v: u32) -> Vector3<f64> {
        self.normals[v as usize]
    }

    /// The animation time this state was sampled at.
    pub fn time(&self) -> f64 {
        self.time
    }
}

/// One whole-mesh keyframe: a position and a normal per vertex.
#[derive(Debug, Clone)]
pub struct Keyframe {
    pub positions: Vec<Point3<f64>>,
    pub normals: Vec<Vector3<f64>>,
}

/// How [`VertexAnimatedSurface::interpolate_keyframes`] blends between
/// frames.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Interpolation {
    /// Piecewise-linear blending of consecutive frames.
    Linear,
    /// Catmull-Rom spline through the frames, clamped at clip boundaries by
    /// duplicating the end frames.
    CatmullRom,
}

/// A surface animated by per-vertex keyframes (morph targets), with named
/// clips over contiguous frame ranges.
#[derive(Debug)]
pub struct VertexAnimatedSurface {
    surface: Surface,
    keyframes: Vec<Keyframe>,
    animations: BTreeMap<String, Range<usize>>,
    pub interpolation: Interpolation,
}

impl VertexAnimatedSurface {
    /// Validates and assembles an animated surface.
    ///
    /// Every keyframe must have exactly one position and normal per base
    /// vertex (normals are renormalized where nonzero), and every named clip
    /// must be a non-empty range within the keyframe array.
    pub fn new(
        surface: Surface,
        mut keyframes: Vec<Keyframe>,
        animations: BTreeMap<String, Range<usize>>,
        interpolation: Interpolation,
    ) -> Result<Self, AnimError> {
        let expected = surface.vertex_count();
        for frame in &mut keyframes {
            for got in [frame.positions.len(), frame.normals.len()] {
                if got != expected {
                    return Err(AnimError::LengthMismatch { expected, got });
                }
            }
            for n in &mut frame.normals {
                let len = n.norm();
                if len > 0.0 {
                    *n /= len;
                }
            }
        }
        for (name, range) in &animations {
            if range.start >= range.end || range.end > keyframes.len() {
                return Err(AnimError::InvalidRange {
                    name: name.clone(),
                    start: range.start,
                    end: range.end,
                    frames: keyframes.len(),
                });
            }
        }
        Ok(VertexAnimatedSurface {
            surface,
            keyframes,
            animations,
            interpolation,
        })
    }

    pub fn surface(&self) -> &Surface {
        &self.surface
    }

    pub fn keyframe_count(&self) -> usize {
        self.keyframes.len()
    }

    /// Clip names and their frame ranges, in name order.
    pub fn animations(&self) -> impl Iterator<Item = (&str, Range<usize>)> {
        self.animations.iter().map(|(n, r)| (n.as_str(), r.clone()))
    }

    /// Evaluates the named clip at time `t`, measured in keyframe indices
    /// local to the clip: `t` must lie in `[0, frames - 1]`.
    ///
    /// Integer times return the keyframe verbatim. Fractional times blend
    /// the bracketing frames — linearly, or with a Catmull-Rom window
    /// clamped to the clip — and renormalize the blended normals. A normal
    /// that blends to zero falls back to the earlier bracketing frame's
    /// normal.
    pub fn interpolate_keyframes(&self, name: &str, t: f64) -> Result<MeshState<'_>, AnimError> {
        let range = self
            .animations
            .get(name)
            .ok_or_else(|| AnimError::UnknownAnimation(name.to_string()))?;
        let frames = &self.keyframes[range.clone()];
        let max = (frames.len() - 1) as f64;
        if !(0.0..=max).contains(&t) || !t.is_finite() {
            return Err(AnimError::TimeOutOfRange { t, max });
        }
        let i = (t.floor() as usize).min(frames.len().saturating_sub(2));
        let u = t - i as f64;
        if u == 0.0 || frames.len() == 1 {
            let frame = &frames[t as usize];
            return Ok(MeshState {
                surface: &self.surface,
                positions: frame.positions.clone(),
                normals: frame.normals.clone(),
                time: t,
            });
        }
        let n = self.surface.vertex_count();
        let mut positions = Vec::with_capacity(n);
        let mut normals = Vec::with_capacity(n);
        match self.interpolation {
            Interpolation::Linear => {
                let (a, b) = (&frames[i], &frames[i + 1]);
                for v in 0..n {
                    positions.push(Point3::from(
                        a.positions[v].coords * (1.0 - u) + b.positions[v].coords * u,
                    ));
                    normals.push(a.normals[v] * (1.0 - u) + b.normals[v] * u);
                }
            }
            Interpolation::CatmullRom => {
                let w = catmull_rom_weights(u);
                let clamped = |j: isize| -> &Keyframe {
                    &frames[j.clamp(0, frames.len() as isize - 1) as usize]
                };
                let i = i as isize;
                let window = [clamped(i - 1), clamped(i), clamped(i + 1), clamped(i + 2)];
                for v in 0..n {
                    let mut p = Vector3::zeros();
                    let mut m = Vector3::zeros();
                    for (frame, wk) in window.iter().zip(w) {
                        p += frame.positions[v].coords * wk;
                        m += frame.normals[v] * wk;
                    }
                    positions.push(Point3::from(p));
                    normals.push(m);
                }
            }
        }
        for (v, m) in normals.iter_mut().enumerate() {
            let len = m.norm();
            if len > 1e-12 {
                *m /= len;
            } else {
                *m = frames[i].normals[v];
            }
        }
        Ok(MeshState {
            surface: &self.surface,
            positions,
            normals,
            time: t,
        })
    }
}

/// One bone of a skeleton: a name, an optional parent (which must precede
/// it), and the bind-pose transform relative to the parent.
#[derive(Debug, Clone)]
pub struct Bone {
    pub name: String,
    pub parent: Option<usize>,
    pub bind_local: Isometry3<f64>,
}

/// A bone hierarchy in bind pose, stored parents-first.
#[derive(Debug, Clone)]
pub struct Skeleton {
    bones: Vec<Bone>,
    bind_globals: Vec<Isometry3<f64>>,
    inverse_bind_globals: Vec<Isometry3<f64>>,
}

impl Skeleton {
    /// Validates the parents-first ordering and precomputes global bind
    /// transforms.
    pub fn new(bones: Vec<Bone>) -> Result<Self, AnimError> {
        let mut bind_globals = Vec::with_capacity(bones.len());
        for (i, bone) in bones.iter().enumerate() {
            let global = match bone.parent {
                Some(p) if p >= i => {
                    return Err(AnimError::ParentOutOfOrder { bone: i, parent: p })
                }
                Some(p) => bind_globals[p] * bone.bind_local,
                None => bone.bind_local,
            };
            bind_globals.push(global);
        }
        let inverse_bind_globals = bind_globals.iter().map(|g| g.inverse()).collect();
        Ok(Skeleton {
            bones,
            bind_globals,
            inverse_bind_globals,
        })
    }

    pub fn bone_count(&self) -> usize {
        self.bones.len()
    }

    pub fn bones(&self) -> &[Bone] {
        &self.bones
    }

    /// The bind-pose transform of bone `i` in model space.
    pub fn bind_global(&self, i: usize) -> Isometry3<f64> {
        self.bind_globals[i]
    }
}

/// A time-keyed track of local transforms for one bone, times in seconds and
/// strictly increasing. An empty track holds the bone at its bind-local
/// transform.
#[derive(Debug, Clone, Default)]
pub struct BoneTrack {
    pub keys: Vec<(f64, Isometry3<f64>)>,
}

impl BoneTrack {
    /// Samples the track at time `t`, clamping outside the keyed range.
    /// Rotations interpolate by [`slerp`], translations linearly. Returns
    /// `None` for an empty track.
    fn sample(&self, t: f64) -> Option<Isometry3<f64>> {
        let keys = &self.keys;
        match keys.len() {
            0 => None,
            1 => Some(keys[0].1),
            _ => {
                if t <= keys[0].0 {
                    return Some(keys[0].1);
                }
                if t >= keys[keys.len() - 1].0 {
                    return Some(keys[keys.len() - 1].1);
                }
                let j = keys.partition_point(|(time, _)| *time <= t);
                let (t0, a) = &keys[j - 1];
                let (t1, b) = &keys[j];
                let u = (t - t0) / (t1 - t0);
                let rotation = slerp(&a.rotation, &b.rotation, u);
                let translation = a.translation.vector.lerp(&b.translation.vector, u);
                Some(Isometry3::from_parts(
                    Translation3::from(translation),
                    rotation,
                ))
            }
        }
    }
}

/// Spherical linear interpolation between unit quaternions.
///
/// Flips sign to take the shortest arc, and falls back to normalized linear
/// interpolation when the quaternions are nearly parallel (dot > 0.9995),
/// where the sine denominator loses precision.
pub fn slerp(a: &UnitQuaternion<f64>, b: &UnitQuaternion<f64>, t: f64) -> UnitQuaternion<f64> {
    let qa = a.into_inner();
    let mut qb = b.into_inner();
    let mut dot = qa.dot(&qb);
    if dot < 0.0 {
        qb = -qb;
        dot = -dot;
    }
    if dot > 0.9995 {
        return UnitQuaternion::from_quaternion(qa.lerp(&qb, t));
    }
    let theta = dot.clamp(-1.0, 1.0).acos();
    let sin_theta = theta.sin();
    let wa = ((1.0 - t) * theta).sin() / sin_theta;
    let wb = (t * theta).sin() / sin_theta;
    UnitQuaternion::from_quaternion(qa * wa + qb * wb)
}

/// Evaluates every bone track at time `t` (seconds, clamped to each track's
/// keyed range) and chains the results into global transforms, one per bone.
/// Bones with empty tracks stay at their bind-local transform.
pub fn pose_skeleton(
    skeleton: &Skeleton,
    tracks: &[BoneTrack],
    t: f64,
) -> Result<Vec<Isometry3<f64>>, AnimError> {
    if tracks.len() != skeleton.bone_count() {
        return Err(AnimError::BadPose {
            expected: skeleton.bone_count(),
            got: tracks.len(),
        });
    }
    let mut globals: Vec<Isometry3<f64>> = Vec::with_capacity(skeleton.bone_count());
    for (i, bone) in skeleton.bones().iter().enumerate() {
        let local = tracks[i].sample(t).unwrap_or(bone.bind_local);
        let global = match bone.parent {
            Some(p) => globals[p] * local,
            None => local,
        };
        globals.push(global);
    }
    Ok(globals)
}

/// One bone influence on a vertex.
#[derive(Debug, Clone, Copy)]
pub struct VertexWeight {
    pub bone: usize,
    pub weight: f64,
}

/// A surface deformed by a skeleton via linear-blend skinning.
#[derive(Debug)]
pub struct SkinnedSurface {
    surface: Surface,
    skeleton: Skeleton,
    weights: Vec<Vec<VertexWeight>>,
    tracks: Vec<BoneTrack>,
}

impl SkinnedSurface {
    /// Validates per-vertex weights (nonnegative, referencing real bones,
    /// summing to 1 within 1e-6) and per-bone tracks (one per bone, strictly
    /// increasing key times).
    pub fn new(
        surface: Surface,
        skeleton: Skeleton,
        weights: Vec<Vec<VertexWeight>>,
        tracks: Vec<BoneTrack>,
    ) -> Result<Self, AnimError> {
        if weights.len() != surface.vertex_count() {
            return Err(AnimError::LengthMismatch {
                expected: surface.vertex_count(),
                got: weights.len(),
            });
        }
        for (vertex, influences) in weights.iter().enumerate() {
            let mut sum = 0.0;
            for w in influences {
                if w.bone >= skeleton.bone_count() {
                    return Err(AnimError::BadWeight {
                        vertex,
                        detail: format!(
                            "references bone {} of {}",
                            w.bone,
                            skeleton.bone_count()
                        ),
                    });
                }
                if w.weight < 0.0 {
                    return Err(AnimError::BadWeight {
                        vertex,
                        detail: format!("negative weight {}", w.weight),
                    });
                }
                sum += w.weight;
            }
            if (sum - 1.0).abs() > 1e-6 {
                return Err(AnimError::BadWeight {
                    vertex,
                    detail: format!("weights sum to {sum}, expected 1"),
                });
            }
        }
        if tracks.len() != skeleton.bone_count() {
            return Err(AnimError::BadPose {
                expected: skeleton.bone_count(),
                got: tracks.len(),
            });
        }
        for (bone, track) in tracks.iter().enumerate() {
            if track.keys.windows(2).any(|w| w[1].0 <= w[0].0) {
                return Err(AnimError::BadTrack { bone });
            }
        }
        Ok(SkinnedSurface {
            surface,
            skeleton,
            weights,
            tracks,
        })
    }

    pub fn surface(&self) -> &Surface {
        &self.surface
    }

    pub fn skeleton(&self) -> &Skeleton {
        &self.skeleton
    }

    pub fn tracks(&self) -> &[BoneTrack] {
        &self.tracks
    }

    pub fn weights(&self) -> &[Vec<VertexWeight>] {
        &self.weights
    }

    /// The time span covered by the bone tracks, as (earliest, latest) key
    /// times; `None` if every track is empty.
    pub fn time_range(&self) -> Option<(f64, f64)> {
        let mut range: Option<(f64, f64)> = None;
        for track in &self.tracks {
            for (t, _) in &track.keys {
                range = Some(match range {
                    Some((lo, hi)) => (lo.min(*t), hi.max(*t)),
                    None => (*t, *t),
                });
            }
        }
        range
    }

    /// Applies a global pose (one transform per bone) to every vertex:
    /// positions blend `pose[b] * bind_global[b]^-1` by the vertex weights,
    /// and normals blend the rotation parts, then renormalize. A normal that
    /// blends to zero keeps its rest direction.
    pub fn skin_vertices(&self, pose: &[Isometry3<f64>]) -> Result<MeshState<'_>, AnimError> {
        self.skin_at_time(pose, 0.0)
    }

    /// Poses the skeleton at `t` seconds and skins the surface with the
    /// result.
    pub fn state_at(&self, t: f64) -> Result<MeshState<'_>, AnimError> {
        let pose = pose_skeleton(&self.skeleton, &self.tracks, t)?;
        self.skin_at_time(&pose, t)
    }

    fn skin_at_time(&self, pose: &[Isometry3<f64>], time: f64) -> Result<MeshState<'_>, AnimError> {
        if pose.len() != self.skeleton.bone_count() {
            return Err(AnimError::BadPose {
                expected: self.skeleton.bone_count(),
                got: pose.len(),
            });
        }
        let deform: Vec<Isometry3<f64>> = pose
            .iter()
            .zip(&self.skeleton.inverse_bind_globals)
            .map(|(g, inv_bind)| g * inv_bind)
            .collect();
        let n = self.surface.vertex_count();
        let mut positions = Vec::with_capacity(n);
        let mut normals = Vec::with_capacity(n);
        for v in 0..n {
            let rest_p = self.surface.position(v as u32);
            let rest_n = self.surface.normal(v as u32);
            let mut p = Vector3::zeros();
            let mut m = Vector3::zeros();
            for w in &self.weights[v] {
                let map = &deform[w.bone];
                p += (map * rest_p).coords * w.weight;
                m += (map.rotation * rest_n) * w.weight;
            }
            let len = m.norm();
            normals.push(if len > 1e-12 { m / len } else { rest_n });
            positions.push(Point3::from(p));
        }
        Ok(MeshState {
            surface: &self.surface,
            positions,
            normals,
            time,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shapes;
    use approx::{assert_relative_eq, relative_eq};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::FRAC_PI_2;

    fn line_x(values: &[f64]) -> Vec<Keyframe> {
        // A keyframe per value: the whole mesh rigidly offset along x.
        let base = shapes::tetrahedron();
        values
            .iter()
            .map(|x| Keyframe {
                positions: base
                    .positions()
                    .iter()
                    .map(|p| Point3::new(p.x + x, p.y, p.z))
                    .collect(),
                normals: base.normals().to_vec(),
            })
            .collect()
    }

    fn animated(values: &[f64], interpolation: Interpolation) -> VertexAnimatedSurface {
        let frames = line_x(values);
        let mut animations = BTreeMap::new();
        animations.insert("run".to_string(), 0..frames.len());
        VertexAnimatedSurface::new(shapes::tetrahedron(), frames, animations, interpolation)
            .unwrap()
    }

    #[test]
    fn linear_integer_times_return_keyframes_bitwise() {
        let anim = animated(&[0.0, 1.0, 3.0], Interpolation::Linear);
        for (t, x) in [(0.0, 0.0), (1.0, 1.0), (2.0, 3.0)] {
            let state = anim.interpolate_keyframes("run", t).unwrap();
            let expect = &anim.keyframes[t as usize];
            assert_eq!(state.positions(), &expect.positions[..]);
            assert_eq!(state.normals(), &expect.normals[..]);
            assert_eq!(state.position(0).x, anim.surface().position(0).x + x);
        }
    }

    #[test]
    fn linear_midpoint_blends_halfway() {
        let anim = animated(&[2.0, 1.0], Interpolation::Linear);
        let state = anim.interpolate_keyframes("run", 0.5).unwrap();
        let base = anim.surface().position(0);
        assert_relative_eq!(state.position(0).x, base.x + 1.5, epsilon = 1e-15);
    }

    #[test]
    fn catmull_rom_matches_hand_evaluated_basis() {
        // Offsets 0, 1, 3, 4 at t = 1.5: the basis (-1, 9, 9, -1)/16 gives
        // (0 + 9 + 27 - 4)/16 = 2.
        let anim = animated(&[0.0, 1.0, 3.0, 4.0], Interpolation::CatmullRom);
        let state = anim.interpolate_keyframes("run", 1.5).unwrap();
        let base = anim.surface().position(0);
        assert_relative_eq!(state.position(0).x, base.x + 2.0, epsilon = 1e-12);
    }

    #[test]
    fn catmull_rom_clamps_clip_endpoints() {
        let anim = animated(&[0.0, 1.0, 3.0, 4.0], Interpolation::CatmullRom);
        for (t, x) in [(0.0, 0.0), (3.0, 4.0)] {
            let state = anim.interpolate_keyframes("run", t).unwrap();
            let base = anim.surface().position(0);
            assert_relative_eq!(state.position(0).x, base.x + x, epsilon = 1e-6);
        }
    }

    #[test]
    fn catmull_rom_window_does_not_leak_across_clips() {
        // Clip "b" starts at global frame 2; near its start the window must
        // duplicate b's first frame rather than reach into clip "a".
        let frames = line_x(&[100.0, 200.0, 0.0, 1.0, 3.0, 4.0]);
        let mut animations = BTreeMap::new();
        animations.insert("a".to_string(), 0..2);
        animations.insert("b".to_string(), 2..6);
        let anim = VertexAnimatedSurface::new(
            shapes::tetrahedron(),
            frames,
            animations,
            Interpolation::CatmullRom,
        )
        .unwrap();
        let state = anim.interpolate_keyframes("b", 0.5).unwrap();
        // Window (0, 0, 1, 3) at u = 0.5 with basis (-1, 9, 9, -1)/16:
        // (0 + 0 + 9 - 3)/16 = 0.375.
        let base = anim.surface().position(0);
        assert_relative_eq!(state.position(0).x, base.x + 0.375, epsilon = 1e-12);
    }

    #[test]
    fn interpolated_normals_stay_unit() {
        let base = shapes::icosphere(1);
        let n = base.vertex_count();
        // Second frame: everything pushed along +x, normals tilted.
        let frames = vec![
            Keyframe {
                positions: base.positions().to_vec(),
                normals: base.normals().to_vec(),
            },
            Keyframe {
                positions: base
                    .positions()
                    .iter()
                    .map(|p| Point3::new(p.x + 1.0, p.y, p.z))
                    .collect(),
                normals: (0..n)
                    .map(|v| (base.normal(v as u32) + Vector3::new(0.5, 0.0, 0.0)).normalize())
                    .collect(),
            },
        ];
        let mut animations = BTreeMap::new();
        animations.insert("push".to_string(), 0..2);
        let anim =
            VertexAnimatedSurface::new(base, frames, animations, Interpolation::Linear).unwrap();
        let state = anim.interpolate_keyframes("push", 0.25).unwrap();
        for m in state.normals() {
            assert_relative_eq!(m.norm(), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn cancelling_normals_fall_back_to_earlier_frame() {
        let base = shapes::tetrahedron();
        let n = base.vertex_count();
        let up = vec![Vector3::new(0.0, 0.0, 1.0); n];
        let down = vec![Vector3::new(0.0, 0.0, -1.0); n];
        let frames = vec![
            Keyframe {
                positions: base.positions().to_vec(),
                normals: up.clone(),
            },
            Keyframe {
                positions: base.positions().to_vec(),
                normals: down,
            },
        ];
        let mut animations = BTreeMap::new();
        animations.insert("flip".to_string(), 0..2);
        let anim =
            VertexAnimatedSurface::new(base, frames, animations, Interpolation::Linear).unwrap();
        let state = anim.interpolate_keyframes("flip", 0.5).unwrap();
        assert_eq!(state.normal(0), up[0]);
    }

    #[test]
    fn unknown_animation_and_bad_times_error() {
        let anim = animated(&[0.0, 1.0], Interpolation::Linear);
        assert!(matches!(
            anim.interpolate_keyframes("walk", 0.0),
            Err(AnimError::UnknownAnimation(_))
        ));
        for t in [-0.25, 1.0 + 1e-9, f64::NAN] {
            assert!(matches!(
                anim.interpolate_keyframes("run", t),
                Err(AnimError::TimeOutOfRange { .. })
            ));
        }
    }

    #[test]
    fn keyframe_length_mismatch_is_rejected() {
        let base = shapes::tetrahedron();
        let frames = vec![Keyframe {
            positions: vec![Point3::origin(); 3],
            normals: vec![Vector3::z(); 3],
        }];
        let mut animations = BTreeMap::new();
        animations.insert("run".to_string(), 0..1);
        let err = VertexAnimatedSurface::new(base, frames, animations, Interpolation::Linear)
            .unwrap_err();
        assert!(matches!(err, AnimError::LengthMismatch { expected: 4, got: 3 }));
    }

    #[test]
    fn empty_or_out_of_bounds_clips_are_rejected() {
        let base = shapes::tetrahedron();
        let frames = line_x(&[0.0, 1.0]);
        for range in [0..0, 1..3] {
            let mut animations = BTreeMap::new();
            animations.insert("run".to_string(), range);
            let err = VertexAnimatedSurface::new(
                base.clone(),
                frames.clone(),
                animations,
                Interpolation::Linear,
            )
            .unwrap_err();
            assert!(matches!(err, AnimError::InvalidRange { .. }));
        }
    }

    fn two_bone_skeleton() -> Skeleton {
        Skeleton::new(vec![
            Bone {
                name: "root".to_string(),
                parent: None,
                bind_local: Isometry3::translation(1.0, 0.0, 0.0),
            },
            Bone {
                name: "tip".to_string(),
                parent: Some(0),
                bind_local: Isometry3::translation(0.0, 1.0, 0.0),
            },
        ])
        .unwrap()
    }

    #[test]
    fn bind_globals_chain_parent_transforms() {
        let skel = two_bone_skeleton();
        let tip = skel.bind_global(1);
        assert_relative_eq!(tip.translation.vector, Vector3::new(1.0, 1.0, 0.0));
    }

    #[test]
    fn out_of_order_parent_is_rejected() {
        let err = Skeleton::new(vec![Bone {
            name: "loop".to_string(),
            parent: Some(0),
            bind_local: Isometry3::identity(),
        }])
        .unwrap_err();
        assert!(matches!(err, AnimError::ParentOutOfOrder { bone: 0, parent: 0 }));
    }

    #[test]
    fn pose_chains_rotations_through_the_hierarchy() {
        let skel = two_bone_skeleton();
        // Rotate the root 90 degrees about z; the tip's bind offset (0,1,0)
        // swings to (-1,0,0), landing its origin at (0,0,0) after the root's
        // own translation (1,0,0).
        let rot = UnitQuaternion::from_axis_angle(&Vector3::z_axis(), FRAC_PI_2);
        let tracks = vec![
            BoneTrack {
                keys: vec![(0.0, Isometry3::from_parts(Translation3::new(1.0, 0.0, 0.0), rot))],
            },
            BoneTrack::default(),
        ];
        let pose = pose_skeleton(&skel, &tracks, 0.0).unwrap();
        assert_relative_eq!(
            pose[1].translation.vector,
            Vector3::new(0.0, 0.0, 0.0),
            epsilon = 1e-12
        );
    }

    #[test]
    fn pose_clamps_outside_the_keyed_range_and_lerps_inside() {
        let skel = Skeleton::new(vec![Bone {
            name: "root".to_string(),
            parent: None,
            bind_local: Isometry3::identity(),
        }])
        .unwrap();
        let tracks = vec![BoneTrack {
            keys: vec![
                (1.0, Isometry3::translation(0.0, 0.0, 0.0)),
                (2.0, Isometry3::translation(4.0, 0.0, 0.0)),
            ],
        }];
        let at = |t: f64| pose_skeleton(&skel, &tracks, t).unwrap()[0].translation.vector.x;
        assert_eq!(at(0.0), 0.0);
        assert_eq!(at(5.0), 4.0);
        assert_relative_eq!(at(1.25), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn pose_requires_one_track_per_bone() {
        let skel = two_bone_skeleton();
        let err = pose_skeleton(&skel, &[BoneTrack::default()], 0.0).unwrap_err();
        assert!(matches!(err, AnimError::BadPose { expected: 2, got: 1 }));
    }

    #[test]
    fn slerp_hits_endpoints_and_midpoints() {
        let a = UnitQuaternion::identity();
        let b = UnitQuaternion::from_axis_angle(&Vector3::z_axis(), FRAC_PI_2);
        assert_relative_eq!(slerp(&a, &b, 0.0).angle(), 0.0, epsilon = 1e-12);
        assert_relative_eq!(slerp(&a, &b, 1.0).angle_to(&b), 0.0, epsilon = 1e-12);
        let mid = slerp(&a, &b, 0.5);
        assert_relative_eq!(mid.angle(), FRAC_PI_2 / 2.0, epsilon = 1e-12);
        assert_relative_eq!(mid.axis().unwrap().into_inner(), Vector3::z(), epsilon = 1e-12);
    }

    #[test]
    fn slerp_takes_the_shortest_arc_under_sign_flip() {
        let a = UnitQuaternion::from_axis_angle(&Vector3::z_axis(), 0.3);
        let negated = UnitQuaternion::from_quaternion(-a.into_inner());
        for t in [0.0, 0.3, 0.7, 1.0] {
            assert_relative_eq!(slerp(&a, &negated, t).angle_to(&a), 0.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn slerp_nearly_parallel_falls_back_smoothly() {
        let a = UnitQuaternion::identity();
        let b = UnitQuaternion::from_axis_angle(&Vector3::z_axis(), 1e-4);
        let mid = slerp(&a, &b, 0.5);
        assert_relative_eq!(mid.norm(), 1.0, epsilon = 1e-12);
        assert_relative_eq!(mid.angle(), 0.5e-4, epsilon = 1e-9);
    }

    /// A 3-row tube along x whose vertices weight between two bones by row.
    fn skinned_tube() -> SkinnedSurface {
        let surface = shapes::cylinder(0.5, 2.0, 12, 3);
        let skeleton = Skeleton::new(vec![
            Bone {
                name: "a".to_string(),
                parent: None,
                bind_local: Isometry3::identity(),
            },
            Bone {
                name: "b".to_string(),
                parent: Some(0),
                bind_local: Isometry3::translation(0.0, 0.0, 2.0),
            },
        ])
        .unwrap();
        let weights = surface
            .positions()
            .iter()
            .map(|p| {
                let wb = (p.z / 2.0).clamp(0.0, 1.0);
                vec![
                    VertexWeight { bone: 0, weight: 1.0 - wb },
                    VertexWeight { bone: 1, weight: wb },
                ]
            })
            .collect();
        let tracks = vec![BoneTrack::default(), BoneTrack::default()];
        SkinnedSurface::new(surface, skeleton, weights, tracks).unwrap()
    }

    #[test]
    fn bind_pose_reproduces_the_rest_surface() {
        let skinned = skinned_tube();
        let pose: Vec<_> = (0..2).map(|i| skinned.skeleton().bind_global(i)).collect();
        let state = skinned.skin_vertices(&pose).unwrap();
        for v in 0..skinned.surface().vertex_count() as u32 {
            assert_relative_eq!(
                state.position(v),
                skinned.surface().position(v),
                epsilon = 1e-6
            );
            assert_relative_eq!(state.normal(v), skinned.surface().normal(v), epsilon = 1e-6);
        }
    }

    #[test]
    fn half_weighted_translation_moves_vertices_halfway() {
        // Bone b translated by (2,0,0) from bind; a vertex weighted 50/50
        // between a (static) and b moves by (1,0,0).
        let skinned = skinned_tube();
        let pose = vec![
            skinned.skeleton().bind_global(0),
            skinned.skeleton().bind_global(1) * Isometry3::translation(2.0, 0.0, 0.0),
        ];
        let state = skinned.skin_vertices(&pose).unwrap();
        for v in 0..skinned.surface().vertex_count() as u32 {
            let rest = skinned.surface().position(v);
            let wb = (rest.z / 2.0).clamp(0.0, 1.0);
            // bind_global(1) is a pure translation, so the offset stays
            // axis-aligned: moved = rest + wb * (2,0,0).
            assert_relative_eq!(
                state.position(v).coords,
                rest.coords + Vector3::new(2.0 * wb, 0.0, 0.0),
                epsilon = 1e-12
            );
            // Translation-only deformation leaves normals untouched.
            assert_relative_eq!(state.normal(v), skinned.surface().normal(v), epsilon = 1e-12);
        }
    }

    #[test]
    fn rotating_a_bone_rotates_its_normals() {
        let skinned = skinned_tube();
        let rot = UnitQuaternion::from_axis_angle(&Vector3::z_axis(), FRAC_PI_2);
        let pose = vec![
            Isometry3::from_parts(Translation3::identity(), rot),
            skinned.skeleton().bind_global(1),
        ];
        let state = skinned.skin_vertices(&pose).unwrap();
        // A vertex fully owned by bone a (z = 0 row).
        let v = (0..skinned.surface().vertex_count() as u32)
            .find(|&v| skinned.surface().position(v).z == 0.0)
            .unwrap();
        assert_relative_eq!(
            state.normal(v),
            rot * skinned.surface().normal(v),
            epsilon = 1e-12
        );
    }

    #[test]
    fn skinning_commutes_with_rigid_transforms() {
        let skinned = skinned_tube();
        let mut rng = ChaCha8Rng::seed_from_u64(0x5e_1f);
        for _ in 0..8 {
            let mut random_iso = || {
                let axis = Vector3::new(
                    rng.gen::<f64>() - 0.5,
                    rng.gen::<f64>() - 0.5,
                    rng.gen::<f64>() - 0.5,
                );
                let rot = UnitQuaternion::from_scaled_axis(axis * 2.0);
                let tr = Translation3::new(
                    4.0 * rng.gen::<f64>() - 2.0,
                    4.0 * rng.gen::<f64>() - 2.0,
                    4.0 * rng.gen::<f64>() - 2.0,
                );
                Isometry3::from_parts(tr, rot)
            };
            let pose: Vec<_> = (0..2).map(|_| random_iso()).collect();
            let rigid = random_iso();
            let moved_pose: Vec<_> = pose.iter().map(|g| rigid * g).collect();
            let direct = skinned.skin_vertices(&moved_pose).unwrap();
            let composed = skinned.skin_vertices(&pose).unwrap();
            for v in 0..skinned.surface().vertex_count() as u32 {
                assert_relative_eq!(
                    direct.position(v),
                    rigid * composed.position(v),
                    epsilon = 1e-5
                );
                assert!(relative_eq!(
                    direct.normal(v),
                    rigid.rotation * composed.normal(v),
                    epsilon = 1e-5
                ));
            }
        }
    }

    #[test]
    fn weight_validation_rejects_bad_inputs() {
        let surface = shapes::tetrahedron();
        let skeleton = Skeleton::new(vec![Bone {
            name: "root".to_string(),
            parent: None,
            bind_local: Isometry3::identity(),
        }])
        .unwrap();
        let n = surface.vertex_count();
        let ok = vec![vec![VertexWeight { bone: 0, weight: 1.0 }]; n];
        let cases: Vec<(Vec<Vec<VertexWeight>>, &str)> = vec![
            (
                vec![vec![VertexWeight { bone: 1, weight: 1.0 }]; n],
                "missing bone",
            ),
            (
                vec![vec![VertexWeight { bone: 0, weight: 0.9 }]; n],
                "bad sum",
            ),
            (
                vec![vec![
                    VertexWeight { bone: 0, weight: -0.5 },
                    VertexWeight { bone: 0, weight: 1.5 },
                ]; n],
                "negative weight",
            ),
        ];
        for (weights, what) in cases {
            let err = SkinnedSurface::new(
                surface.clone(),
                skeleton.clone(),
                weights,
                vec![BoneTrack::default()],
            );
            assert!(
                matches!(err, Err(AnimError::BadWeight { .. })),
                "{what} accepted"
            );
        }
        let err = SkinnedSurface::new(
            surface.clone(),
            skeleton.clone(),
            ok.clone(),
            vec![BoneTrack {
                keys: vec![
                    (1.0, Isometry3::identity()),
                    (1.0, Isometry3::identity()),
                ],
            }],
        );
        assert!(matches!(err, Err(AnimError::BadTrack { bone: 0 })));
        let skinned =
            SkinnedSurface::new(surface, skeleton, ok, vec![BoneTrack::default()]).unwrap();
        let state = skinned.state_at(0.0).unwrap();
        assert_eq!(state.time(), 0.0);
    }

    #[test]
    fn mesh_state_rest_copies_the_surface() {
        let surface = shapes::octahedron();
        let state = MeshState::rest(&surface);
        assert_eq!(state.positions(), surface.positions());
        assert_eq!(state.normals(), surface.normals());
        assert_eq!(state.time(), 0.0);
        let err = MeshState::new(&surface, vec![Point3::origin(); 2], vec![], 0.0).unwrap_err();
        assert!(matches!(err, AnimError::LengthMismatch { .. }));
    }
}
