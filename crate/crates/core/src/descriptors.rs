//! Packed binary descriptors extracted at keypoints via pair or triplet
//! patterns.
//!
//! Test `i` of the pattern decides bit `i` of the descriptor, stored
//! LSB-first inside 64-bit words: a three-test descriptor with outcomes
//! `(1, 0, 1)` packs to the integer 5. Pair tests compare two single pixels;
//! triplet tests compare an anchor patch against two companion patches by
//! sum of squared differences. Ties produce 0 in both families.

use std::borrow::Cow;
use std::fs;
use std::path::Path;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::imagery::{self, PlanarImage, SmoothingConfig, SpaceConversion};
use crate::patterns::{Pattern, PatternKind, TestEndpoint, TripletTest};
use crate::{Error, Result};

/// A detected interest point with its detector score.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Keypoint {
    pub x: u32,
    pub y: u32,
    pub response: f32,
}

/// Fixed-width bitstring; bit `i` holds the outcome of pattern test `i`.
/// Storage bits at positions `>= n_d` are always zero.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Descriptor {
    n_d: usize,
    words: Vec<u64>,
}

impl Descriptor {
    pub fn from_bits(bits: &[bool]) -> Self {
        let mut words = vec![0u64; bits.len().div_ceil(64)];
        for (i, &b) in bits.iter().enumerate() {
            if b {
                words[i / 64] |= 1 << (i % 64);
            }
        }
        Descriptor {
            n_d: bits.len(),
            words,
        }
    }

    pub fn n_d(&self) -> usize {
        self.n_d
    }

    pub fn bit(&self, i: usize) -> bool {
        assert!(i < self.n_d);
        (self.words[i / 64] >> (i % 64)) & 1 == 1
    }

    pub fn bits(&self) -> Vec<bool> {
        (0..self.n_d).map(|i| self.bit(i)).collect()
    }

    /// Number of tests that returned 1.
    pub fn count_ones(&self) -> u32 {
        self.words.iter().map(|w| w.count_ones()).sum()
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    /// Pack into `ceil(n_d / 8)` bytes, little-endian bit order within each
    /// byte (bit 0 of byte 0 is test 0).
    pub fn to_bytes(&self) -> Vec<u8> {
        let len = self.n_d.div_ceil(8);
        let mut out = Vec::with_capacity(self.words.len() * 8);
        for w in &self.words {
            out.extend_from_slice(&w.to_le_bytes());
        }
        out.truncate(len);
        out
    }

    /// Inverse of [`Descriptor::to_bytes`]. Padding bits past `n_d` must be
    /// zero; anything else indicates a corrupt or misdeclared dump.
    pub fn from_bytes(n_d: usize, bytes: &[u8]) -> Result<Self> {
        let expected = n_d.div_ceil(8);
        if bytes.len() != expected {
            return Err(Error::DescriptorFormat(format!(
                "descriptor of {n_d} bits needs {expected} bytes, got {}",
                bytes.len()
            )));
        }
        if !n_d.is_multiple_of(8) {
            let mask: u8 = (1u8 << (n_d % 8)).wrapping_sub(1);
            if bytes[expected - 1] & !mask != 0 {
                return Err(Error::DescriptorFormat(
                    "nonzero padding bits beyond the declared bit count".into(),
                ));
            }
        }
        let mut words = vec![0u64; n_d.div_ceil(64)];
        for (i, &b) in bytes.iter().enumerate() {
            words[i / 8] |= (b as u64) << (8 * (i % 8));
        }
        Ok(Descriptor { n_d, words })
    }
}

/// Pattern plus optional pre-smoothing: everything extraction needs besides
/// the image and keypoints.
#[derive(Debug, Clone, PartialEq)]
pub struct DescriptorConfig {
    pattern: Pattern,
    smoothing: Option<SmoothingConfig>,
}

impl DescriptorConfig {
    pub fn new(pattern: Pattern, smoothing: Option<SmoothingConfig>) -> Result<Self> {
        if let Some(s) = &smoothing {
            if s.kernel_size() as u32 > pattern.window() {
                return Err(Error::InvalidSmoothing(format!(
                    "kernel size {} exceeds the {} pixel sampling window",
                    s.kernel_size(),
                    pattern.window()
                )));
            }
        }
        Ok(DescriptorConfig { pattern, smoothing })
    }

    /// Family defaults: pair descriptors smooth with sigma 2 over 9x9;
    /// triplet descriptors skip smoothing, since patch averaging already
    /// suppresses noise and smoothing would cost high-frequency detail.
    pub fn with_defaults(pattern: Pattern) -> Self {
        let smoothing = match pattern.kind() {
            PatternKind::Pair => Some(SmoothingConfig::DEFAULT_PAIR),
            PatternKind::Triplet => None,
        };
        DescriptorConfig { pattern, smoothing }
    }

    pub fn pattern(&self) -> &Pattern {
        &self.pattern
    }

    pub fn smoothing(&self) -> Option<&SmoothingConfig> {
        self.smoothing.as_ref()
    }
}

/// Minimum distance a keypoint must keep from every image border so that
/// all samples, whole patches included, stay inside the image and outside
/// the smoothing kernel's replicated border band.
pub fn required_margin(cfg: &DescriptorConfig) -> u32 {
    cfg.pattern.sampling_extent()
        + cfg
            .smoothing
            .as_ref()
            .map_or(0, |s| (s.kernel_size() / 2) as u32)
}

#[inline]
fn value_at(img: &PlanarImage, kp: Keypoint, e: TestEndpoint, px: i64, py: i64) -> u8 {
    let x = (kp.x as i64 + e.dx as i64 + px) as usize;
    let y = (kp.y as i64 + e.dy as i64 + py) as usize;
    img.sample(x, y, e.channel as usize)
}

/// Single pair comparison: 1 iff the first sample is strictly darker than
/// the second; equal samples give 0. The caller must have enforced margins.
#[inline]
pub fn binary_test(img: &PlanarImage, kp: Keypoint, e1: TestEndpoint, e2: TestEndpoint) -> bool {
    value_at(img, kp, e1, 0, 0) < value_at(img, kp, e2, 0, 0)
}

/// Single triplet comparison: 1 iff the anchor patch is strictly farther
/// (by sum of squared differences over aligned samples) from companion 1
/// than from companion 2; ties give 0.
pub fn triplet_test(img: &PlanarImage, kp: Keypoint, t: &TripletTest, patch_size: u32) -> bool {
    let half = (patch_size / 2) as i64;
    let mut ssd1: u64 = 0;
    let mut ssd2: u64 = 0;
    for py in -half..=half {
        for px in -half..=half {
            let a = value_at(img, kp, t.anchor, px, py) as i64;
            let c1 = value_at(img, kp, t.companion1, px, py) as i64;
            let c2 = value_at(img, kp, t.companion2, px, py) as i64;
            ssd1 += ((a - c1) * (a - c1)) as u64;
            ssd2 += ((a - c2) * (a - c2)) as u64;
        }
    }
    ssd1 > ssd2
}

fn describe_one(img: &PlanarImage, kp: Keypoint, pattern: &Pattern) -> Descriptor {
    let n_d = pattern.len();
    let mut words = vec![0u64; n_d.div_ceil(64)];
    match pattern {
        Pattern::Pair(p) => {
            for (i, t) in p.tests().iter().enumerate() {
                if binary_test(img, kp, t.a, t.b) {
                    words[i / 64] |= 1 << (i % 64);
                }
            }
        }
        Pattern::Triplet(p) => {
            for (i, t) in p.triplets().iter().enumerate() {
                if triplet_test(img, kp, t, p.patch_size()) {
                    words[i / 64] |= 1 << (i % 64);
                }
            }
        }
    }
    Descriptor { n_d, words }
}

/// [`extract`] plus a record of the color-space conversion performed, so
/// callers can verify which input path was taken.
pub fn extract_traced(
    img: &PlanarImage,
    keypoints: &[Keypoint],
    cfg: &DescriptorConfig,
) -> Result<(Vec<Descriptor>, SpaceConversion)> {
    let (prepared, conversion) = imagery::prepare_image(img, cfg.pattern.space())?;
    let working: Cow<PlanarImage> = match &cfg.smoothing {
        Some(s) => Cow::Owned(imagery::smooth(&prepared, s)?),
        None => prepared,
    };

    let margin = required_margin(cfg);
    let (w, h) = (working.width() as i64, working.height() as i64);
    for (index, kp) in keypoints.iter().enumerate() {
        let (x, y) = (kp.x as i64, kp.y as i64);
        if x < margin as i64
            || y < margin as i64
            || x + margin as i64 >= w
            || y + margin as i64 >= h
        {
            return Err(Error::MarginViolation {
                index,
                x,
                y,
                margin,
            });
        }
    }

    // The image and pattern are shared read-only; keypoints are independent,
    // so any execution order produces the same ordered output.
    let img_ref: &PlanarImage = &working;
    #[cfg(feature = "parallel")]
    let descriptors = keypoints
        .par_iter()
        .map(|&kp| describe_one(img_ref, kp, &cfg.pattern))
        .collect();
    #[cfg(not(feature = "parallel"))]
    let descriptors = keypoints
        .iter()
        .map(|&kp| describe_one(img_ref, kp, &cfg.pattern))
        .collect();
    Ok((descriptors, conversion))
}

/// Extract one descriptor per keypoint, in keypoint order.
///
/// The input is converted to the pattern's space if needed (RGB input feeds
/// Gray patterns via luma reduction and YCbCr patterns via the full
/// transform; RGB patterns read RGB input directly with no conversion),
/// smoothed once if configured, then sampled. Every keypoint must satisfy
/// [`required_margin`].
pub fn extract(
    img: &PlanarImage,
    keypoints: &[Keypoint],
    cfg: &DescriptorConfig,
) -> Result<Vec<Descriptor>> {
    extract_traced(img, keypoints, cfg).map(|(d, _)| d)
}

const DESCRIPTOR_MAGIC: [u8; 4] = *b"BDSC";

/// Write a descriptor dump: magic, bit count, descriptor count (32-bit
/// little-endian), then `count * ceil(n_d / 8)` packed bytes.
pub fn save_descriptors(path: &Path, n_d: usize, descriptors: &[Descriptor]) -> Result<()> {
    let n_d_u32 = u32::try_from(n_d)
        .map_err(|_| Error::InvalidParameter(format!("bit count {n_d} exceeds u32")))?;
    let count = u32::try_from(descriptors.len())
        .map_err(|_| Error::InvalidParameter("too many descriptors for one dump".into()))?;
    let mut out = Vec::with_capacity(12 + descriptors.len() * n_d.div_ceil(8));
    out.extend_from_slice(&DESCRIPTOR_MAGIC);
    out.extend_from_slice(&n_d_u32.to_le_bytes());
    out.extend_from_slice(&count.to_le_bytes());
    for d in descriptors {
        if d.n_d != n_d {
            return Err(Error::LengthMismatch { a: n_d, b: d.n_d });
        }
        out.extend_from_slice(&d.to_bytes());
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Read a descriptor dump written by [`save_descriptors`].
pub fn load_descriptors(path: &Path) -> Result<(usize, Vec<Descriptor>)> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.len() < 12 {
        return Err(Error::DescriptorFormat(
            "file shorter than the 12-byte header".into(),
        ));
    }
    if bytes[..4] != DESCRIPTOR_MAGIC {
        return Err(Error::DescriptorFormat("bad magic number".into()));
    }
    let n_d = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let count = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    if n_d == 0 {
        return Err(Error::DescriptorFormat("declared bit count is zero".into()));
    }
    let bytes_per = n_d.div_ceil(8);
    let expected = count
        .checked_mul(bytes_per)
        .ok_or_else(|| Error::DescriptorFormat("descriptor payload size overflows".into()))?;
    let data = &bytes[12..];
    if data.len() < expected {
        return Err(Error::TruncatedData {
            expected,
            found: data.len(),
        });
    }
    if data.len() > expected {
        return Err(Error::DescriptorFormat(
            "trailing bytes after the last descriptor".into(),
        ));
    }
    let mut descriptors = Vec::with_capacity(count);
    for chunk in data.chunks_exact(bytes_per) {
        descriptors.push(Descriptor::from_bytes(n_d, chunk)?);
    }
    Ok((n_d, descriptors))
}
