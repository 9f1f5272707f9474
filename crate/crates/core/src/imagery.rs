//! Planar 8-bit images: PNM loading, color-space conversion, and Gaussian
//! pre-smoothing.
//!
//! Images are stored as one row-major plane per channel so descriptor
//! sampling addresses `(x, y, channel)` directly. All operations are pure;
//! a [`PlanarImage`] is immutable after construction and safe to share
//! across threads.

use std::borrow::Cow;
use std::fs;
use std::path::Path;

use crate::{Error, Result};

/// Channel semantics of a [`PlanarImage`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColorSpace {
    /// Single luminance plane.
    Gray,
    /// Planes R, G, B (channel indices 0, 1, 2).
    Rgb,
    /// Planes Y, Cb, Cr (channel indices 0, 1, 2).
    YCbCr,
}

impl ColorSpace {
    /// Number of planes for this space.
    pub fn plane_count(self) -> usize {
        match self {
            ColorSpace::Gray => 1,
            ColorSpace::Rgb | ColorSpace::YCbCr => 3,
        }
    }

    /// Lowercase tag used in pattern files and reports.
    pub fn tag(self) -> &'static str {
        match self {
            ColorSpace::Gray => "gray",
            ColorSpace::Rgb => "rgb",
            ColorSpace::YCbCr => "ycbcr",
        }
    }

    /// Parse the tag written by [`ColorSpace::tag`].
    pub fn from_tag(tag: &str) -> Option<Self> {
        match tag {
            "gray" => Some(ColorSpace::Gray),
            "rgb" => Some(ColorSpace::Rgb),
            "ycbcr" => Some(ColorSpace::YCbCr),
            _ => None,
        }
    }
}

/// Multi-channel 8-bit image with explicit channel semantics.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlanarImage {
    width: usize,
    height: usize,
    space: ColorSpace,
    planes: Vec<Vec<u8>>,
}

impl PlanarImage {
    /// Build an image from per-channel planes, validating plane count and
    /// sample counts.
    pub fn from_planes(
        width: usize,
        height: usize,
        space: ColorSpace,
        planes: Vec<Vec<u8>>,
    ) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidParameter(format!(
                "image dimensions must be positive, got {width}x{height}"
            )));
        }
        if planes.len() != space.plane_count() {
            return Err(Error::InvalidParameter(format!(
                "{:?} requires {} planes, got {}",
                space,
                space.plane_count(),
                planes.len()
            )));
        }
        let expected = width * height;
        for (i, plane) in planes.iter().enumerate() {
            if plane.len() != expected {
                return Err(Error::InvalidParameter(format!(
                    "plane {i} has {} samples, expected {expected}",
                    plane.len()
                )));
            }
        }
        Ok(PlanarImage {
            width,
            height,
            space,
            planes,
        })
    }

    /// Single-plane grayscale image.
    pub fn gray(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        Self::from_planes(width, height, ColorSpace::Gray, vec![data])
    }

    /// Three-plane RGB image.
    pub fn rgb(width: usize, height: usize, r: Vec<u8>, g: Vec<u8>, b: Vec<u8>) -> Result<Self> {
        Self::from_planes(width, height, ColorSpace::Rgb, vec![r, g, b])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn space(&self) -> ColorSpace {
        self.space
    }

    /// Borrow one channel plane (row-major, `width * height` samples).
    pub fn plane(&self, channel: usize) -> &[u8] {
        &self.planes[channel]
    }

    /// Sample one pixel. Panics if out of bounds or the channel does not
    /// exist; descriptor code enforces margins before sampling.
    #[inline]
    pub fn sample(&self, x: usize, y: usize, channel: usize) -> u8 {
        debug_assert!(x < self.width && y < self.height);
        self.planes[channel][y * self.width + x]
    }
}

/// Discretized Gaussian used to pre-smooth images before pixel-pair tests.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SmoothingConfig {
    sigma: f64,
    kernel_size: usize,
}

impl SmoothingConfig {
    /// The classical pair-descriptor default: sigma 2, 9x9 window.
    pub const DEFAULT_PAIR: SmoothingConfig = SmoothingConfig {
        sigma: 2.0,
        kernel_size: 9,
    };

    pub fn new(sigma: f64, kernel_size: usize) -> Result<Self> {
        if sigma.is_nan() || sigma <= 0.0 {
            return Err(Error::InvalidSmoothing(format!(
                "sigma must be positive, got {sigma}"
            )));
        }
        if kernel_size == 0 || kernel_size.is_multiple_of(2) {
            return Err(Error::InvalidSmoothing(format!(
                "kernel size must be odd and >= 1, got {kernel_size}"
            )));
        }
        Ok(SmoothingConfig { sigma, kernel_size })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn kernel_size(&self) -> usize {
        self.kernel_size
    }

    /// Normalized 1D kernel weights; the effective 2D kernel is their outer
    /// product, which sums to 1 and is symmetric in both axes.
    pub fn weights_1d(&self) -> Vec<f64> {
        let half = (self.kernel_size / 2) as i64;
        let mut w: Vec<f64> = (-half..=half)
            .map(|i| (-((i * i) as f64) / (2.0 * self.sigma * self.sigma)).exp())
            .collect();
        let sum: f64 = w.iter().sum();
        for v in &mut w {
            *v /= sum;
        }
        w
    }
}

/// Load a binary PGM (P5) or PPM (P6) image; with the `png` feature, PNG
/// files are accepted through the same entry point. PGM yields a Gray image,
/// PPM an RGB image with the interleaved samples split into planes.
pub fn load_image(path: &Path) -> Result<PlanarImage> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    #[cfg(feature = "png")]
    if bytes.starts_with(&[0x89, b'P', b'N', b'G']) {
        return decode_png(&bytes);
    }
    decode_pnm(&bytes)
}

/// Write a Gray image as binary PGM (P5) or an RGB image as binary PPM (P6).
pub fn save_image(path: &Path, img: &PlanarImage) -> Result<()> {
    let mut out = Vec::with_capacity(img.width * img.height * img.space.plane_count() + 32);
    match img.space {
        ColorSpace::Gray => {
            out.extend_from_slice(format!("P5\n{} {}\n255\n", img.width, img.height).as_bytes());
            out.extend_from_slice(&img.planes[0]);
        }
        ColorSpace::Rgb => {
            out.extend_from_slice(format!("P6\n{} {}\n255\n", img.width, img.height).as_bytes());
            for i in 0..img.width * img.height {
                out.push(img.planes[0][i]);
                out.push(img.planes[1][i]);
                out.push(img.planes[2][i]);
            }
        }
        ColorSpace::YCbCr => {
            return Err(Error::UnsupportedFormat(
                "YCbCr images have no PNM encoding; convert before saving".into(),
            ))
        }
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

fn decode_pnm(bytes: &[u8]) -> Result<PlanarImage> {
    let magic = bytes.get(..2).ok_or_else(|| {
        Error::MalformedHeader("file shorter than the 2-byte magic number".into())
    })?;
    let channels = match magic {
        b"P5" => 1usize,
        b"P6" => 3usize,
        _ => {
            return Err(Error::UnsupportedFormat(format!(
                "unknown magic {:?} (expected P5 or P6)",
                String::from_utf8_lossy(magic)
            )))
        }
    };

    let mut pos = 2;
    let mut fields = [0u32; 3];
    for field in &mut fields {
        *field = next_header_value(bytes, &mut pos)?;
    }
    let (width, height, maxval) = (fields[0] as usize, fields[1] as usize, fields[2]);
    if maxval != 255 {
        return Err(Error::UnsupportedMaxval(maxval));
    }
    if width == 0 || height == 0 {
        return Err(Error::MalformedHeader(format!(
            "zero dimension {width}x{height}"
        )));
    }
    // Exactly one whitespace byte separates the header from the raster.
    match bytes.get(pos) {
        Some(b) if b.is_ascii_whitespace() => pos += 1,
        _ => {
            return Err(Error::MalformedHeader(
                "missing whitespace between header and pixel data".into(),
            ))
        }
    }

    let expected = width * height * channels;
    let data = &bytes[pos..];
    if data.len() < expected {
        return Err(Error::TruncatedData {
            expected,
            found: data.len(),
        });
    }
    let data = &data[..expected];

    if channels == 1 {
        PlanarImage::gray(width, height, data.to_vec())
    } else {
        let n = width * height;
        let mut planes = vec![
            Vec::with_capacity(n),
            Vec::with_capacity(n),
            Vec::with_capacity(n),
        ];
        for px in data.chunks_exact(3) {
            planes[0].push(px[0]);
            planes[1].push(px[1]);
            planes[2].push(px[2]);
        }
        let b = planes.pop().unwrap();
        let g = planes.pop().unwrap();
        let r = planes.pop().unwrap();
        PlanarImage::rgb(width, height, r, g, b)
    }
}

/// Read the next decimal header token, skipping whitespace and `#` comments.
fn next_header_value(bytes: &[u8], pos: &mut usize) -> Result<u32> {
    loop {
        match bytes.get(*pos) {
            Some(b) if b.is_ascii_whitespace() => *pos += 1,
            Some(b'#') => {
                while let Some(b) = bytes.get(*pos) {
                    *pos += 1;
                    if *b == b'\n' {
                        break;
                    }
                }
            }
            Some(b) if b.is_ascii_digit() => break,
            Some(b) => {
                return Err(Error::MalformedHeader(format!(
                    "unexpected byte {b:#04x} in header"
                )))
            }
            None => return Err(Error::MalformedHeader("header ended early".into())),
        }
    }
    let mut value: u64 = 0;
    while let Some(b) = bytes.get(*pos) {
        if !b.is_ascii_digit() {
            break;
        }
        value = value * 10 + (b - b'0') as u64;
        if value > u32::MAX as u64 {
            return Err(Error::MalformedHeader("header value overflows u32".into()));
        }
        *pos += 1;
    }
    Ok(value as u32)
}

#[cfg(feature = "png")]
fn decode_png(bytes: &[u8]) -> Result<PlanarImage> {
    let img = image::load_from_memory(bytes)
        .map_err(|e| Error::UnsupportedFormat(format!("png decode failed: {e}")))?;
    match img {
        image::DynamicImage::ImageLuma8(g) => {
            let (w, h) = (g.width() as usize, g.height() as usize);
            PlanarImage::gray(w, h, g.into_raw())
        }
        other => {
            let rgb = other.to_rgb8();
            let (w, h) = (rgb.width() as usize, rgb.height() as usize);
            let raw = rgb.into_raw();
            let n = w * h;
            let mut r = Vec::with_capacity(n);
            let mut g = Vec::with_capacity(n);
            let mut b = Vec::with_capacity(n);
            for px in raw.chunks_exact(3) {
                r.push(px[0]);
                g.push(px[1]);
                b.push(px[2]);
            }
            PlanarImage::rgb(w, h, r, g, b)
        }
    }
}

#[inline]
fn round_clamp_u8(v: f64) -> u8 {
    // Round half away from zero; inputs here are non-negative, so this is
    // round-half-up.
    let r = v.round();
    if r <= 0.0 {
        0
    } else if r >= 255.0 {
        255
    } else {
        r as u8
    }
}

/// BT.601 full-range luma: `round(0.299 R + 0.587 G + 0.114 B)`.
pub fn to_gray(img: &PlanarImage) -> Result<PlanarImage> {
    if img.space != ColorSpace::Rgb {
        return Err(Error::WrongColorSpace {
            expected: ColorSpace::Rgb,
            found: img.space,
        });
    }
    let (r, g, b) = (&img.planes[0], &img.planes[1], &img.planes[2]);
    let mut y = Vec::with_capacity(r.len());
    for i in 0..r.len() {
        let v = 0.299 * r[i] as f64 + 0.587 * g[i] as f64 + 0.114 * b[i] as f64;
        y.push(round_clamp_u8(v));
    }
    PlanarImage::gray(img.width, img.height, y)
}

/// Full-range (JPEG-style) BT.601 RGB -> YCbCr transform, rounded and
/// clamped per channel. Achromatic pixels map to Cb = Cr = 128 with
/// Y equal to [`to_gray`]'s output.
pub fn to_ycbcr(img: &PlanarImage) -> Result<PlanarImage> {
    if img.space != ColorSpace::Rgb {
        return Err(Error::WrongColorSpace {
            expected: ColorSpace::Rgb,
            found: img.space,
        });
    }
    let (rp, gp, bp) = (&img.planes[0], &img.planes[1], &img.planes[2]);
    let n = rp.len();
    let mut y = Vec::with_capacity(n);
    let mut cb = Vec::with_capacity(n);
    let mut cr = Vec::with_capacity(n);
    for i in 0..n {
        let (r, g, b) = (rp[i] as f64, gp[i] as f64, bp[i] as f64);
        y.push(round_clamp_u8(0.299 * r + 0.587 * g + 0.114 * b));
        cb.push(round_clamp_u8(
            128.0 - 0.168736 * r - 0.331264 * g + 0.5 * b,
        ));
        cr.push(round_clamp_u8(
            128.0 + 0.5 * r - 0.418688 * g - 0.081312 * b,
        ));
    }
    PlanarImage::from_planes(img.width, img.height, ColorSpace::YCbCr, vec![y, cb, cr])
}

/// Convolve each plane independently with the normalized 2D Gaussian.
/// Borders are handled by edge replication; the output has the same
/// dimensions and space. Intermediate sums are kept in f64 and rounded once,
/// so the result matches a direct 2D convolution exactly.
pub fn smooth(img: &PlanarImage, cfg: &SmoothingConfig) -> Result<PlanarImage> {
    let k = cfg.kernel_size;
    if k > img.width || k > img.height {
        return Err(Error::KernelLargerThanImage {
            kernel_size: k,
            width: img.width,
            height: img.height,
        });
    }
    let weights = cfg.weights_1d();
    let half = (k / 2) as i64;
    let (w, h) = (img.width, img.height);

    let planes = img
        .planes
        .iter()
        .map(|plane| {
            // Horizontal pass with x clamped to the row.
            let mut tmp = vec![0.0f64; w * h];
            for y in 0..h {
                let row = &plane[y * w..(y + 1) * w];
                for x in 0..w {
                    let mut acc = 0.0;
                    for (ki, wt) in weights.iter().enumerate() {
                        let sx = (x as i64 + ki as i64 - half).clamp(0, w as i64 - 1) as usize;
                        acc += wt * row[sx] as f64;
                    }
                    tmp[y * w + x] = acc;
                }
            }
            // Vertical pass with y clamped to the column, rounding once.
            let mut out = vec![0u8; w * h];
            for y in 0..h {
                for x in 0..w {
                    let mut acc = 0.0;
                    for (ki, wt) in weights.iter().enumerate() {
                        let sy = (y as i64 + ki as i64 - half).clamp(0, h as i64 - 1) as usize;
                        acc += wt * tmp[sy * w + x];
                    }
                    out[y * w + x] = round_clamp_u8(acc);
                }
            }
            out
        })
        .collect();

    PlanarImage::from_planes(w, h, img.space, planes)
}

/// What [`prepare_image`] had to do to an input image.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpaceConversion {
    /// Input already matches the target space; no work performed.
    None,
    ToGray,
    ToYCbCr,
}

/// Convert an image to the space a descriptor pattern samples in.
///
/// Gray patterns accept Gray input directly and RGB input via [`to_gray`];
/// YCbCr patterns accept YCbCr directly and RGB via [`to_ycbcr`]; RGB
/// patterns consume RGB input as-is, performing no conversion at all.
pub fn prepare_image<'a>(
    img: &'a PlanarImage,
    target: ColorSpace,
) -> Result<(Cow<'a, PlanarImage>, SpaceConversion)> {
    match (img.space, target) {
        (s, t) if s == t => Ok((Cow::Borrowed(img), SpaceConversion::None)),
        (ColorSpace::Rgb, ColorSpace::Gray) => {
            Ok((Cow::Owned(to_gray(img)?), SpaceConversion::ToGray))
        }
        (ColorSpace::Rgb, ColorSpace::YCbCr) => {
            Ok((Cow::Owned(to_ycbcr(img)?), SpaceConversion::ToYCbCr))
        }
        (input, pattern) => Err(Error::SpaceMismatch { input, pattern }),
    }
}
