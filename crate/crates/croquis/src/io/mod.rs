//! Asset loading and image I/O.
//!
//! One loader exists per surface kind: Wavefront OBJ files produce static
//! [`Surface`]s, Quake II MD2 files produce [`VertexAnimatedSurface`]s, and
//! the JSON-based `zskin` format produces [`SkinnedSurface`]s. A
//! [`LoaderRegistry`] maps file extensions to loaders so callers can open
//! any supported asset without matching on the format themselves. Image
//! input/output is limited to binary PPM (P6), which round-trips bit-exactly
//! and needs no external codecs.

mod md2;
mod obj;
mod ppm;
mod skin;

pub use md2::{load_md2, load_md2_path, md2_normal_table};
pub use obj::{load_mtl, load_mtl_bytes, load_obj, load_obj_bytes};
pub use ppm::{read_ppm, read_ppm_path, write_ppm, write_ppm_path};
pub use skin::{load_skin, load_skin_bytes};

use std::collections::BTreeMap;
use std::path::Path;

use crate::anim::{AnimError, SkinnedSurface, VertexAnimatedSurface};
use crate::mesh::{MeshError, Surface};

/// Errors reported by the loaders and image codecs.
#[derive(Debug, thiserror::Error)]
pub enum IoError {
    /// The stream does not start with the format's magic bytes.
    #[error("bad magic: expected {expected:?}, found {found:?}")]
    BadMagic {
        /// Magic the format requires.
        expected: String,
        /// Bytes actually present.
        found: String,
    },
    /// Recognized format, unsupported revision.
    #[error("unsupported version {got} (supported: {want})")]
    UnsupportedVersion {
        /// Version found in the stream.
        got: i64,
        /// Version this loader understands.
        want: i64,
    },
    /// The stream ended before a required lump.
    #[error("truncated file: {0}")]
    TruncatedFile(String),
    /// Malformed content. `line` is 1-based for text formats and 0 for
    /// binary ones (the reason then carries a byte offset).
    #[error("parse error at line {line}: {reason}")]
    ParseError {
        /// 1-based source line, 0 for binary streams.
        line: usize,
        /// What went wrong.
        reason: String,
    },
    /// Bone parent links form a cycle.
    #[error("skeleton parent links form a cycle through bone {0}")]
    CyclicSkeleton(usize),
    /// A vertex weight is unusable (negative, or no usable influences).
    #[error("bad weight: {0}")]
    BadWeight(String),
    /// PPM maxval other than 255.
    #[error("unsupported PPM maxval {0} (only 255)")]
    UnsupportedMaxval(u32),
    /// PPM output needs a 3-channel image.
    #[error("PPM supports RGB only; image has {0} channels")]
    UnsupportedChannels(usize),
    /// No loader is registered for the file extension.
    #[error("no loader for extension {0:?}")]
    UnknownExtension(String),
    /// Image dimensions and data length disagree.
    #[error("{width}x{height} image with {channels} channels needs {need} bytes, got {got}")]
    ImageShape {
        /// Pixel columns.
        width: usize,
        /// Pixel rows.
        height: usize,
        /// Channels per pixel.
        channels: usize,
        /// Required data length.
        need: usize,
        /// Supplied data length.
        got: usize,
    },
    /// Underlying file-system failure.
    #[error(transparent)]
    Io(#[from] std::io::Error),
    /// The loaded geometry violates a mesh invariant.
    #[error(transparent)]
    Mesh(#[from] MeshError),
    /// The loaded animation data violates an animation invariant.
    #[error(transparent)]
    Anim(#[from] AnimError),
}

fn parse_error(line: usize, reason: impl Into<String>) -> IoError {
    IoError::ParseError {
        line,
        reason: reason.into(),
    }
}

/// An 8-bit raster image, row-major with the origin at the top left.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImageBuffer {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<u8>,
}

impl ImageBuffer {
    /// A black (all-zero) image. `channels` must be 3 (RGB) or 4 (RGBA).
    pub fn new(width: usize, height: usize, channels: usize) -> Result<ImageBuffer, IoError> {
        ImageBuffer::from_raw(width, height, channels, vec![0; width * height * channels])
    }

    /// Wrap existing pixel data; the length must be exactly
    /// `width · height · channels` and `channels` must be 3 or 4.
    pub fn from_raw(
        width: usize,
        height: usize,
        channels: usize,
        data: Vec<u8>,
    ) -> Result<ImageBuffer, IoError> {
        let need = width * height * channels;
        if !(3..=4).contains(&channels) || data.len() != need {
            return Err(IoError::ImageShape {
                width,
                height,
                channels,
                need,
                got: data.len(),
            });
        }
        Ok(ImageBuffer {
            width,
            height,
            channels,
            data,
        })
    }

    /// Pixel columns.
    pub fn width(&self) -> usize {
        self.width
    }

    /// Pixel rows.
    pub fn height(&self) -> usize {
        self.height
    }

    /// Channels per pixel: 3 (RGB) or 4 (RGBA).
    pub fn channels(&self) -> usize {
        self.channels
    }

    /// Raw row-major pixel bytes.
    pub fn data(&self) -> &[u8] {
        &self.data
    }

    /// Channel values of the pixel at column `x`, row `y` (top-left origin).
    pub fn pixel(&self, x: usize, y: usize) -> &[u8] {
        let i = (y * self.width + x) * self.channels;
        &self.data[i..i + self.channels]
    }

    /// Overwrite the pixel at column `x`, row `y`. `values` must have one
    /// entry per channel.
    pub fn set_pixel(&mut self, x: usize, y: usize, values: &[u8]) {
        assert_eq!(values.len(), self.channels, "one value per channel");
        let i = (y * self.width + x) * self.channels;
        self.data[i..i + self.channels].copy_from_slice(values);
    }

    /// The same image restricted to its RGB channels (alpha dropped).
    pub fn to_rgb(&self) -> ImageBuffer {
        if self.channels == 3 {
            return self.clone();
        }
        let mut data = Vec::with_capacity(self.width * self.height * 3);
        for px in self.data.chunks_exact(self.channels) {
            data.extend_from_slice(&px[..3]);
        }
        ImageBuffer {
            width: self.width,
            height: self.height,
            channels: 3,
            data,
        }
    }
}

/// Which of the three surface kinds a loader produces.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SurfaceKind {
    /// Fixed geometry.
    Static,
    /// Per-frame vertex positions (morph targets).
    VertexAnimated,
    /// Skeleton-driven deformation.
    Skinned,
}

/// Any loaded asset, tagged by surface kind.
#[derive(Debug)]
pub enum LoadedAsset {
    /// A static surface.
    Static(Surface),
    /// A vertex-animated surface.
    VertexAnimated(VertexAnimatedSurface),
    /// A skinned surface.
    Skinned(SkinnedSurface),
}

impl LoadedAsset {
    /// The surface kind of the asset.
    pub fn kind(&self) -> SurfaceKind {
        match self {
            LoadedAsset::Static(_) => SurfaceKind::Static,
            LoadedAsset::VertexAnimated(_) => SurfaceKind::VertexAnimated,
            LoadedAsset::Skinned(_) => SurfaceKind::Skinned,
        }
    }

    /// The base surface, whatever the kind.
    pub fn surface(&self) -> &Surface {
        match self {
            LoadedAsset::Static(s) => s,
            LoadedAsset::VertexAnimated(v) => v.surface(),
            LoadedAsset::Skinned(s) => s.surface(),
        }
    }
}

type LoaderFn = dyn Fn(&[u8], Option<&Path>) -> Result<LoadedAsset, IoError>;

/// Extension-keyed table of asset loaders.
///
/// Each loader receives the raw bytes plus the directory the file came from
/// (so formats with companion files, like OBJ with MTL, can resolve them)
/// and declares which surface kind it produces. Exactly one loader exists
/// per extension; registering an extension again replaces the previous
/// loader.
#[derive(Default)]
pub struct LoaderRegistry {
    loaders: BTreeMap<String, (SurfaceKind, Box<LoaderFn>)>,
}

impl LoaderRegistry {
    /// An empty registry.
    pub fn new() -> LoaderRegistry {
        LoaderRegistry::default()
    }

    /// A registry with the built-in loaders: `obj` (static), `md2`
    /// (vertex-animated), and `zskin` (skinned).
    pub fn with_defaults() -> LoaderRegistry {
        let mut registry = LoaderRegistry::new();
        registry.register("obj", SurfaceKind::Static, |bytes, dir| {
            load_obj_bytes(bytes, dir).map(LoadedAsset::Static)
        });
        registry.register("md2", SurfaceKind::VertexAnimated, |bytes, _| {
            load_md2(bytes).map(LoadedAsset::VertexAnimated)
        });
        registry.register("zskin", SurfaceKind::Skinned, |bytes, _| {
            load_skin_bytes(bytes).map(LoadedAsset::Skinned)
        });
        registry
    }

    /// Register (or replace) the loader for an extension. Extensions are
    /// matched case-insensitively without the leading dot.
    pub fn register(
        &mut self,
        extension: &str,
        kind: SurfaceKind,
        loader: impl Fn(&[u8], Option<&Path>) -> Result<LoadedAsset, IoError> + 'static,
    ) {
        self.loaders
            .insert(extension.to_ascii_lowercase(), (kind, Box::new(loader)));
    }

    /// The surface kind the loader for `extension` produces, if one is
    /// registered.
    pub fn kind(&self, extension: &str) -> Option<SurfaceKind> {
        self.loaders
            .get(&extension.to_ascii_lowercase())
            .map(|(kind, _)| *kind)
    }

    /// Registered extensions in sorted order.
    pub fn extensions(&self) -> impl Iterator<Item = &str> {
        self.loaders.keys().map(String::as_str)
    }

    /// Load a file, dispatching on its extension.
    pub fn load(&self, path: &Path) -> Result<LoadedAsset, IoError> {
        let extension = path
            .extension()
            .and_then(|e| e.to_str())
            .unwrap_or_default();
        let bytes = std::fs::read(path)?;
        self.load_bytes(extension, &bytes, path.parent())
    }

    /// Load from bytes already in memory, as if they had the given
    /// extension. `resource_dir` lets loaders resolve companion files.
    pub fn load_bytes(
        &self,
        extension: &str,
        bytes: &[u8],
        resource_dir: Option<&Path>,
    ) -> Result<LoadedAsset, IoError> {
        let (_, loader) = self
            .loaders
            .get(&extension.to_ascii_lowercase())
            .ok_or_else(|| IoError::UnknownExtension(extension.to_string()))?;
        loader(bytes, resource_dir)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn image_buffer_validates_its_shape() {
        assert!(ImageBuffer::new(2, 2, 3).is_ok());
        assert!(ImageBuffer::new(2, 2, 4).is_ok());
        assert!(matches!(
            ImageBuffer::new(2, 2, 5),
            Err(IoError::ImageShape { .. })
        ));
        assert!(matches!(
            ImageBuffer::from_raw(2, 2, 3, vec![0; 11]),
            Err(IoError::ImageShape { need: 12, got: 11, .. })
        ));
    }

    #[test]
    fn image_buffer_pixel_accessors_are_row_major_top_left() {
        let mut img = ImageBuffer::new(3, 2, 3).unwrap();
        img.set_pixel(2, 1, &[9, 8, 7]);
        assert_eq!(img.pixel(2, 1), &[9, 8, 7]);
        // Last pixel of the buffer is the bottom-right one.
        assert_eq!(&img.data()[15..18], &[9, 8, 7]);
        assert_eq!(img.pixel(0, 0), &[0, 0, 0]);
    }

    #[test]
    fn rgba_drops_alpha_when_converted_to_rgb() {
        let img = ImageBuffer::from_raw(1, 2, 4, vec![1, 2, 3, 4, 5, 6, 7, 8]).unwrap();
        let rgb = img.to_rgb();
        assert_eq!(rgb.channels(), 3);
        assert_eq!(rgb.data(), &[1, 2, 3, 5, 6, 7]);
    }

    #[test]
    fn registry_dispatches_by_extension() {
        let registry = LoaderRegistry::with_defaults();
        assert_eq!(registry.kind("obj"), Some(SurfaceKind::Static));
        assert_eq!(registry.kind("OBJ"), Some(SurfaceKind::Static));
        assert_eq!(registry.kind("md2"), Some(SurfaceKind::VertexAnimated));
        assert_eq!(registry.kind("zskin"), Some(SurfaceKind::Skinned));
        assert_eq!(registry.kind("ply"), None);

        let obj = b"v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\n";
        let asset = registry.load_bytes("obj", obj, None).unwrap();
        assert_eq!(asset.kind(), SurfaceKind::Static);
        assert_eq!(asset.surface().vertex_count(), 3);

        assert!(matches!(
            registry.load_bytes("ply", b"", None),
            Err(IoError::UnknownExtension(e)) if e == "ply"
        ));
    }

    #[test]
    fn registering_an_extension_twice_replaces_the_loader() {
        let mut registry = LoaderRegistry::with_defaults();
        registry.register("obj", SurfaceKind::Skinned, |_, _| {
            Err(IoError::UnknownExtension("stub".into()))
        });
        assert_eq!(registry.kind("obj"), Some(SurfaceKind::Skinned));
        assert_eq!(registry.extensions().filter(|e| *e == "obj").count(), 1);
    }
}
