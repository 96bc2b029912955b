//! Binary PPM (P6) image input and output.
//!
//! A P6 stream is the ASCII header `P6 <width> <height> <maxval>` — tokens
//! separated by whitespace, `#` comments allowed between them — followed by
//! a single whitespace byte and `width · height` raw RGB triples. Only
//! maxval 255 is supported, so pixel bytes pass through untouched and a
//! write/read round trip is bit-exact.

use std::path::Path;

use super::{parse_error, ImageBuffer, IoError};

/// Serialize an RGB image as binary PPM. 4-channel images are rejected;
/// drop the alpha with [`ImageBuffer::to_rgb`] first.
pub fn write_ppm(image: &ImageBuffer) -> Result<Vec<u8>, IoError> {
    if image.channels() != 3 {
        return Err(IoError::UnsupportedChannels(image.channels()));
    }
    let mut out = format!("P6\n{} {}\n255\n", image.width(), image.height()).into_bytes();
    out.extend_from_slice(image.data());
    Ok(out)
}

/// Write an RGB image to a PPM file.
pub fn write_ppm_path(image: &ImageBuffer, path: &Path) -> Result<(), IoError> {
    std::fs::write(path, write_ppm(image)?)?;
    Ok(())
}

/// Parse a binary PPM stream into an RGB image.
pub fn read_ppm(bytes: &[u8]) -> Result<ImageBuffer, IoError> {
    let mut header = HeaderScanner { bytes, pos: 0 };
    let magic = header.token()?;
    if magic != b"P6" {
        if magic.first() == Some(&b'P') {
            return Err(parse_error(
                1,
                format!(
                    "unsupported variant {:?} (only binary P6)",
                    String::from_utf8_lossy(magic)
                ),
            ));
        }
        return Err(IoError::BadMagic {
            expected: "P6".to_string(),
            found: String::from_utf8_lossy(magic).into_owned(),
        });
    }
    let width = header.number("width")?;
    let height = header.number("height")?;
    let maxval = header.number("maxval")?;
    if maxval != 255 {
        return Err(IoError::UnsupportedMaxval(maxval as u32));
    }
    // Exactly one whitespace byte separates the header from the pixels.
    header.raster_start()?;

    let need = width * height * 3;
    let pixels = &bytes[header.pos..];
    if pixels.len() < need {
        return Err(IoError::TruncatedFile(format!(
            "raster needs {need} bytes, found {}",
            pixels.len()
        )));
    }
    ImageBuffer::from_raw(width, height, 3, pixels[..need].to_vec())
}

/// Read a PPM file into an RGB image.
pub fn read_ppm_path(path: &Path) -> Result<ImageBuffer, IoError> {
    read_ppm(&std::fs::read(path)?)
}

/// Incremental scanner for the ASCII header of a PPM stream.
struct HeaderScanner<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> HeaderScanner<'a> {
    /// Skip whitespace and `#` comments (which run to end of line).
    fn skip_separators(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b.is_ascii_whitespace() {
                self.pos += 1;
            } else if b == b'#' {
                while self.bytes.get(self.pos).is_some_and(|&b| b != b'\n') {
                    self.pos += 1;
                }
            } else {
                break;
            }
        }
    }

    /// The next whitespace-delimited token.
    fn token(&mut self) -> Result<&'a [u8], IoError> {
        self.skip_separators();
        let start = self.pos;
        while self
            .bytes
            .get(self.pos)
            .is_some_and(|b| !b.is_ascii_whitespace() && *b != b'#')
        {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(IoError::TruncatedFile(
                "stream ended inside the PPM header".to_string(),
            ));
        }
        Ok(&self.bytes[start..self.pos])
    }

    /// The next token parsed as a decimal number.
    fn number(&mut self, what: &str) -> Result<usize, IoError> {
        let token = self.token()?;
        std::str::from_utf8(token)
            .ok()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| {
                parse_error(
                    1,
                    format!("{what} {:?} is not a number", String::from_utf8_lossy(token)),
                )
            })
    }

    /// Consume the single whitespace byte that ends the header.
    fn raster_start(&mut self) -> Result<(), IoError> {
        match self.bytes.get(self.pos) {
            Some(b) if b.is_ascii_whitespace() => {
                self.pos += 1;
                Ok(())
            }
            Some(b) => Err(parse_error(
                1,
                format!("expected whitespace before the raster, found byte {b:#04x}"),
            )),
            None => Err(IoError::TruncatedFile(
                "stream ended before the raster".to_string(),
            )),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_red_pixel_serializes_to_the_documented_bytes() {
        let img = ImageBuffer::from_raw(1, 1, 3, vec![255, 0, 0]).unwrap();
        assert_eq!(write_ppm(&img).unwrap(), b"P6\n1 1\n255\n\xff\x00\x00");
    }

    #[test]
    fn write_then_read_round_trips_bit_exactly() {
        let data: Vec<u8> = (0..5 * 4 * 3).map(|i| (i * 37 % 256) as u8).collect();
        let img = ImageBuffer::from_raw(5, 4, 3, data).unwrap();
        let bytes = write_ppm(&img).unwrap();
        let back = read_ppm(&bytes).unwrap();
        assert_eq!(back, img);
        assert_eq!(write_ppm(&back).unwrap(), bytes);
    }

    #[test]
    fn file_round_trip_works() {
        let img = ImageBuffer::from_raw(2, 1, 3, vec![1, 2, 3, 4, 5, 6]).unwrap();
        let path = std::env::temp_dir().join(format!("croquis-ppm-{}.ppm", std::process::id()));
        write_ppm_path(&img, &path).unwrap();
        let back = read_ppm_path(&path).unwrap();
        std::fs::remove_file(&path).ok();
        assert_eq!(back, img);
    }

    #[test]
    fn comments_and_extra_whitespace_are_accepted() {
        let bytes = b"P6 # a comment\n# another\n  2\t1 \n255\n\x01\x02\x03\x04\x05\x06";
        let img = read_ppm(bytes).unwrap();
        assert_eq!(img.width(), 2);
        assert_eq!(img.height(), 1);
        assert_eq!(img.pixel(1, 0), &[4, 5, 6]);
    }

    #[test]
    fn ascii_variant_is_rejected_as_unsupported() {
        let err = read_ppm(b"P3\n1 1\n255\n255 0 0\n").unwrap_err();
        assert!(
            matches!(&err, IoError::ParseError { reason, .. } if reason.contains("unsupported variant")),
            "{err}"
        );
    }

    #[test]
    fn non_ppm_bytes_are_bad_magic() {
        assert!(matches!(
            read_ppm(b"BM\x00\x00"),
            Err(IoError::BadMagic { .. })
        ));
    }

    #[test]
    fn maxval_other_than_255_is_rejected() {
        assert!(matches!(
            read_ppm(b"P6\n1 1\n65535\n\x00\x00\x00"),
            Err(IoError::UnsupportedMaxval(65535))
        ));
    }

    #[test]
    fn truncated_raster_is_reported() {
        assert!(matches!(
            read_ppm(b"P6\n2 2\n255\n\x00\x01"),
            Err(IoError::TruncatedFile(_))
        ));
    }

    #[test]
    fn rgba_images_are_rejected_for_writing() {
        let img = ImageBuffer::new(1, 1, 4).unwrap();
        assert!(matches!(
            write_ppm(&img),
            Err(IoError::UnsupportedChannels(4))
        ));
    }

    #[test]
    fn header_numbers_must_be_numeric() {
        assert!(matches!(
            read_ppm(b"P6\nwide 1\n255\n\x00\x00\x00"),
            Err(IoError::ParseError { .. })
        ));
    }
}
