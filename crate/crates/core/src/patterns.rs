//! Seeded sampling patterns: where and in which channel a descriptor looks.
//!
//! A pattern is the reproducible half of a descriptor. Spatial offsets are
//! drawn from an isotropic Gaussian whose standard deviation is one fifth of
//! the sampling window, rounded to integer pixels and rejection-resampled
//! back inside the window. Channel assignment depends on the target space;
//! YCbCr patterns never compare the luma channel against a chroma channel.
//!
//! Two independent generator streams are derived from one seed: stream 0
//! feeds every spatial draw, stream 1 feeds channel draws and the YCbCr
//! shuffle. Patterns for different spaces built from the same seed therefore
//! share their spatial layout, which makes cross-space comparisons differ
//! only in the channels they read.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use sha2::{Digest, Sha256};

use crate::imagery::ColorSpace;
use crate::{Error, Result};

/// Pattern file format revision.
pub const PATTERN_FORMAT_VERSION: u32 = 1;

/// Name of the fixed pseudo-random generator recorded in pattern files.
pub const RNG_NAME: &str = "chacha8";

const SPATIAL_STREAM: u64 = 0;
const CHANNEL_STREAM: u64 = 1;

/// One sampling site: an offset from the keypoint plus a channel index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TestEndpoint {
    pub dx: i32,
    pub dy: i32,
    pub channel: u8,
}

/// A two-endpoint intensity comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PairTest {
    pub a: TestEndpoint,
    pub b: TestEndpoint,
}

/// An anchor patch compared against two companion patches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TripletTest {
    pub anchor: TestEndpoint,
    pub companion1: TestEndpoint,
    pub companion2: TestEndpoint,
}

/// Which test family a pattern drives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PatternKind {
    Pair,
    Triplet,
}

impl PatternKind {
    pub fn tag(self) -> &'static str {
        match self {
            PatternKind::Pair => "pair",
            PatternKind::Triplet => "triplet",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Self> {
        match tag {
            "pair" => Some(PatternKind::Pair),
            "triplet" => Some(PatternKind::Triplet),
            _ => None,
        }
    }
}

/// Ordered pixel-pair tests plus the parameters that regenerate them.
#[derive(Debug, Clone, PartialEq)]
pub struct PairPattern {
    space: ColorSpace,
    window: u32,
    seed: u64,
    y_fraction: Option<f64>,
    tests: Vec<PairTest>,
}

/// Ordered patch-triplet tests plus the parameters that regenerate them.
#[derive(Debug, Clone, PartialEq)]
pub struct TripletPattern {
    space: ColorSpace,
    window: u32,
    patch_size: u32,
    seed: u64,
    y_fraction: Option<f64>,
    triplets: Vec<TripletTest>,
}

/// Either pattern family behind one interface for storage and extraction.
#[derive(Debug, Clone, PartialEq)]
pub enum Pattern {
    Pair(PairPattern),
    Triplet(TripletPattern),
}

fn check_window(window: u32) -> Result<()> {
    if window < 8 {
        return Err(Error::InvalidParameter(format!(
            "window must be at least 8 pixels, got {window}"
        )));
    }
    Ok(())
}

fn check_y_fraction(y_fraction: Option<f64>) -> Result<()> {
    if let Some(f) = y_fraction {
        if !(0.0..=1.0).contains(&f) {
            return Err(Error::InvalidParameter(format!(
                "y_fraction must lie in [0, 1], got {f}"
            )));
        }
    }
    Ok(())
}

/// Resolve the luma fraction: required only for YCbCr (default one half);
/// warned about and dropped for other spaces.
fn resolve_y_fraction(space: ColorSpace, y_fraction: Option<f64>) -> Result<Option<f64>> {
    check_y_fraction(y_fraction)?;
    match space {
        ColorSpace::YCbCr => Ok(Some(y_fraction.unwrap_or(0.5))),
        _ => {
            if y_fraction.is_some() {
                log::warn!("y_fraction only applies to ycbcr patterns; ignoring");
            }
            Ok(None)
        }
    }
}

fn check_endpoint(e: &TestEndpoint, space: ColorSpace, bound: i32, what: &str) -> Result<()> {
    if e.dx.abs() > bound || e.dy.abs() > bound {
        return Err(Error::InvalidParameter(format!(
            "{what} offset ({}, {}) exceeds bound {bound}",
            e.dx, e.dy
        )));
    }
    if (e.channel as usize) >= space.plane_count() {
        return Err(Error::InvalidParameter(format!(
            "channel {} invalid for {:?}",
            e.channel, space
        )));
    }
    Ok(())
}

/// Luma/chroma purity: a test either reads only channel 0 or only {1, 2}.
fn check_purity(space: ColorSpace, channels: &[u8]) -> Result<()> {
    if space == ColorSpace::YCbCr {
        let luma = channels.iter().filter(|&&c| c == 0).count();
        if luma != 0 && luma != channels.len() {
            return Err(Error::InvalidParameter(
                "ycbcr test mixes the luma channel with chroma channels".into(),
            ));
        }
    }
    Ok(())
}

impl PairPattern {
    /// Validating constructor; generation and deserialization both funnel
    /// through here so the invariants hold for every live pattern.
    pub fn from_tests(
        space: ColorSpace,
        window: u32,
        seed: u64,
        y_fraction: Option<f64>,
        tests: Vec<PairTest>,
    ) -> Result<Self> {
        check_window(window)?;
        check_y_fraction(y_fraction)?;
        if tests.is_empty() {
            return Err(Error::InvalidParameter(
                "pattern needs at least one test".into(),
            ));
        }
        let bound = (window / 2) as i32;
        for t in &tests {
            check_endpoint(&t.a, space, bound, "pair endpoint")?;
            check_endpoint(&t.b, space, bound, "pair endpoint")?;
            check_purity(space, &[t.a.channel, t.b.channel])?;
        }
        let y_fraction = if space == ColorSpace::YCbCr {
            y_fraction
        } else {
            None
        };
        Ok(PairPattern {
            space,
            window,
            seed,
            y_fraction,
            tests,
        })
    }

    pub fn space(&self) -> ColorSpace {
        self.space
    }

    pub fn window(&self) -> u32 {
        self.window
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn y_fraction(&self) -> Option<f64> {
        self.y_fraction
    }

    pub fn tests(&self) -> &[PairTest] {
        &self.tests
    }
}

impl TripletPattern {
    pub fn from_triplets(
        space: ColorSpace,
        window: u32,
        patch_size: u32,
        seed: u64,
        y_fraction: Option<f64>,
        triplets: Vec<TripletTest>,
    ) -> Result<Self> {
        check_window(window)?;
        check_patch(window, patch_size)?;
        check_y_fraction(y_fraction)?;
        if triplets.is_empty() {
            return Err(Error::InvalidParameter(
                "pattern needs at least one test".into(),
            ));
        }
        let bound = (window / 2) as i32 - (patch_size / 2) as i32;
        for t in &triplets {
            check_endpoint(&t.anchor, space, bound, "anchor")?;
            check_endpoint(&t.companion1, space, bound, "companion")?;
            check_endpoint(&t.companion2, space, bound, "companion")?;
            check_purity(
                space,
                &[t.anchor.channel, t.companion1.channel, t.companion2.channel],
            )?;
        }
        let y_fraction = if space == ColorSpace::YCbCr {
            y_fraction
        } else {
            None
        };
        Ok(TripletPattern {
            space,
            window,
            patch_size,
            seed,
            y_fraction,
            triplets,
        })
    }

    pub fn space(&self) -> ColorSpace {
        self.space
    }

    pub fn window(&self) -> u32 {
        self.window
    }

    pub fn patch_size(&self) -> u32 {
        self.patch_size
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn y_fraction(&self) -> Option<f64> {
        self.y_fraction
    }

    pub fn triplets(&self) -> &[TripletTest] {
        &self.triplets
    }
}

fn check_patch(window: u32, patch_size: u32) -> Result<()> {
    if patch_size == 0 || patch_size.is_multiple_of(2) {
        return Err(Error::InvalidParameter(format!(
            "patch size must be odd and >= 1, got {patch_size}"
        )));
    }
    if patch_size >= window {
        return Err(Error::InvalidParameter(format!(
            "patch size {patch_size} does not fit window {window}"
        )));
    }
    Ok(())
}

impl Pattern {
    pub fn kind(&self) -> PatternKind {
        match self {
            Pattern::Pair(_) => PatternKind::Pair,
            Pattern::Triplet(_) => PatternKind::Triplet,
        }
    }

    pub fn space(&self) -> ColorSpace {
        match self {
            Pattern::Pair(p) => p.space,
            Pattern::Triplet(t) => t.space,
        }
    }

    pub fn window(&self) -> u32 {
        match self {
            Pattern::Pair(p) => p.window,
            Pattern::Triplet(t) => t.window,
        }
    }

    /// Patch side length; zero for pair patterns, which sample single pixels.
    pub fn patch_size(&self) -> u32 {
        match self {
            Pattern::Pair(_) => 0,
            Pattern::Triplet(t) => t.patch_size,
        }
    }

    /// Number of tests, i.e. descriptor bits.
    pub fn len(&self) -> usize {
        match self {
            Pattern::Pair(p) => p.tests.len(),
            Pattern::Triplet(t) => t.triplets.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn seed(&self) -> u64 {
        match self {
            Pattern::Pair(p) => p.seed,
            Pattern::Triplet(t) => t.seed,
        }
    }

    pub fn y_fraction(&self) -> Option<f64> {
        match self {
            Pattern::Pair(p) => p.y_fraction,
            Pattern::Triplet(t) => t.y_fraction,
        }
    }

    /// Farthest pixel any test may touch: half the window plus half a patch.
    pub fn sampling_extent(&self) -> u32 {
        self.window() / 2 + self.patch_size() / 2
    }
}

impl From<PairPattern> for Pattern {
    fn from(p: PairPattern) -> Self {
        Pattern::Pair(p)
    }
}

impl From<TripletPattern> for Pattern {
    fn from(t: TripletPattern) -> Self {
        Pattern::Triplet(t)
    }
}

fn seeded_stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Draw one integer offset: Gaussian, rounded, resampled until within
/// `bound`. Resampling (rather than clamping) keeps the shape of the
/// distribution intact near the window border.
fn draw_offset(rng: &mut ChaCha8Rng, normal: &Normal<f64>, bound: i32) -> i32 {
    loop {
        let v = normal.sample(rng).round();
        if v.abs() <= bound as f64 {
            return v as i32;
        }
    }
}

fn luma_test_count(y_fraction: f64, n_d: usize) -> usize {
    (y_fraction * n_d as f64).floor() as usize
}

/// Generate `n_d` pixel-pair tests. Spatial offsets come from the seed's
/// spatial stream with standard deviation `window / 5` and bound
/// `window / 2`. Channels: Gray reads channel 0 everywhere; RGB draws each
/// endpoint's channel uniformly; YCbCr makes the first `floor(y_fraction *
/// n_d)` tests luma-only and the rest chroma-only, then shuffles the list so
/// the two groups interleave.
pub fn generate_pair_pattern(
    space: ColorSpace,
    n_d: usize,
    window: u32,
    seed: u64,
    y_fraction: Option<f64>,
) -> Result<PairPattern> {
    if n_d == 0 {
        return Err(Error::InvalidParameter(
            "test count must be at least 1".into(),
        ));
    }
    check_window(window)?;
    let y_fraction = resolve_y_fraction(space, y_fraction)?;

    let mut spatial = seeded_stream(seed, SPATIAL_STREAM);
    let mut chan = seeded_stream(seed, CHANNEL_STREAM);
    let normal = Normal::new(0.0, window as f64 / 5.0).expect("positive std");
    let bound = (window / 2) as i32;
    let n_luma = y_fraction.map(|f| luma_test_count(f, n_d));

    let mut tests = Vec::with_capacity(n_d);
    for i in 0..n_d {
        let (ax, ay) = (
            draw_offset(&mut spatial, &normal, bound),
            draw_offset(&mut spatial, &normal, bound),
        );
        let (bx, by) = (
            draw_offset(&mut spatial, &normal, bound),
            draw_offset(&mut spatial, &normal, bound),
        );
        let (ca, cb) = match space {
            ColorSpace::Gray => (0, 0),
            ColorSpace::Rgb => (chan.random_range(0..3u8), chan.random_range(0..3u8)),
            ColorSpace::YCbCr => {
                if i < n_luma.unwrap() {
                    (0, 0)
                } else {
                    (chan.random_range(1..3u8), chan.random_range(1..3u8))
                }
            }
        };
        tests.push(PairTest {
            a: TestEndpoint {
                dx: ax,
                dy: ay,
                channel: ca,
            },
            b: TestEndpoint {
                dx: bx,
                dy: by,
                channel: cb,
            },
        });
    }
    if space == ColorSpace::YCbCr {
        tests.shuffle(&mut chan);
    }
    PairPattern::from_tests(space, window, seed, y_fraction, tests)
}

/// Generate `n_d` patch-triplet tests. Identical scheme to
/// [`generate_pair_pattern`] with the bound tightened by half a patch so
/// whole patches stay inside the window; a luma/chroma split applies to all
/// three endpoints of a triplet at once.
pub fn generate_triplet_pattern(
    space: ColorSpace,
    n_d: usize,
    window: u32,
    patch_size: u32,
    seed: u64,
    y_fraction: Option<f64>,
) -> Result<TripletPattern> {
    if n_d == 0 {
        return Err(Error::InvalidParameter(
            "test count must be at least 1".into(),
        ));
    }
    check_window(window)?;
    check_patch(window, patch_size)?;
    let y_fraction = resolve_y_fraction(space, y_fraction)?;

    let mut spatial = seeded_stream(seed, SPATIAL_STREAM);
    let mut chan = seeded_stream(seed, CHANNEL_STREAM);
    let normal = Normal::new(0.0, window as f64 / 5.0).expect("positive std");
    let bound = (window / 2) as i32 - (patch_size / 2) as i32;
    let n_luma = y_fraction.map(|f| luma_test_count(f, n_d));

    let mut triplets = Vec::with_capacity(n_d);
    for i in 0..n_d {
        let mut coords = [0i32; 6];
        for c in &mut coords {
            *c = draw_offset(&mut spatial, &normal, bound);
        }
        let channels: [u8; 3] = match space {
            ColorSpace::Gray => [0, 0, 0],
            ColorSpace::Rgb => [
                chan.random_range(0..3u8),
                chan.random_range(0..3u8),
                chan.random_range(0..3u8),
            ],
            ColorSpace::YCbCr => {
                if i < n_luma.unwrap() {
                    [0, 0, 0]
                } else {
                    [
                        chan.random_range(1..3u8),
                        chan.random_range(1..3u8),
                        chan.random_range(1..3u8),
                    ]
                }
            }
        };
        triplets.push(TripletTest {
            anchor: TestEndpoint {
                dx: coords[0],
                dy: coords[1],
                channel: channels[0],
            },
            companion1: TestEndpoint {
                dx: coords[2],
                dy: coords[3],
                channel: channels[1],
            },
            companion2: TestEndpoint {
                dx: coords[4],
                dy: coords[5],
                channel: channels[2],
            },
        });
    }
    if space == ColorSpace::YCbCr {
        triplets.shuffle(&mut chan);
    }
    TripletPattern::from_triplets(space, window, patch_size, seed, y_fraction, triplets)
}

/// Import an externally produced triplet arrangement: one line of six
/// integers `ax ay c1x c1y c2x c2y` per triplet (blank lines and `#`
/// comments allowed). The spatial layout is taken verbatim in file order;
/// channels are assigned from the seed per the space's rules. For YCbCr a
/// random subset of `floor(y_fraction * n)` triplets becomes luma-only,
/// keeping the file order untouched.
pub fn load_triplet_arrangement(
    path: &Path,
    space: ColorSpace,
    window: u32,
    patch_size: u32,
    seed: u64,
    y_fraction: Option<f64>,
) -> Result<TripletPattern> {
    check_window(window)?;
    check_patch(window, patch_size)?;
    let y_fraction = resolve_y_fraction(space, y_fraction)?;
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;

    let bound = (window / 2) as i32 - (patch_size / 2) as i32;
    let mut offsets = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<i32> = line
            .split_whitespace()
            .map(|f| f.parse::<i32>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::PatternFormat(format!("arrangement line {}: {e}", lineno + 1)))?;
        if fields.len() != 6 {
            return Err(Error::PatternFormat(format!(
                "arrangement line {}: expected 6 integers, got {}",
                lineno + 1,
                fields.len()
            )));
        }
        if fields.iter().any(|v| v.abs() > bound) {
            return Err(Error::PatternFormat(format!(
                "arrangement line {}: offset exceeds bound {bound}",
                lineno + 1
            )));
        }
        offsets.push([
            fields[0], fields[1], fields[2], fields[3], fields[4], fields[5],
        ]);
    }
    if offsets.is_empty() {
        return Err(Error::PatternFormat(
            "arrangement file contains no triplets".into(),
        ));
    }

    let mut chan = seeded_stream(seed, CHANNEL_STREAM);
    let n = offsets.len();
    let mut luma_only = vec![false; n];
    if let Some(f) = y_fraction {
        for i in rand::seq::index::sample(&mut chan, n, luma_test_count(f, n)) {
            luma_only[i] = true;
        }
    }

    let mut triplets = Vec::with_capacity(n);
    for (i, o) in offsets.iter().enumerate() {
        let channels: [u8; 3] = match space {
            ColorSpace::Gray => [0, 0, 0],
            ColorSpace::Rgb => [
                chan.random_range(0..3u8),
                chan.random_range(0..3u8),
                chan.random_range(0..3u8),
            ],
            ColorSpace::YCbCr => {
                if luma_only[i] {
                    [0, 0, 0]
                } else {
                    [
                        chan.random_range(1..3u8),
                        chan.random_range(1..3u8),
                        chan.random_range(1..3u8),
                    ]
                }
            }
        };
        triplets.push(TripletTest {
            anchor: TestEndpoint {
                dx: o[0],
                dy: o[1],
                channel: channels[0],
            },
            companion1: TestEndpoint {
                dx: o[2],
                dy: o[3],
                channel: channels[1],
            },
            companion2: TestEndpoint {
                dx: o[4],
                dy: o[5],
                channel: channels[2],
            },
        });
    }
    TripletPattern::from_triplets(space, window, patch_size, seed, y_fraction, triplets)
}

fn format_y_fraction(f: Option<f64>) -> String {
    match f {
        Some(v) => format!("{v}"),
        None => "-".into(),
    }
}

/// Serialize everything except the trailing checksum line.
fn pattern_body(p: &Pattern) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "version {PATTERN_FORMAT_VERSION}");
    let _ = writeln!(s, "kind {}", p.kind().tag());
    let _ = writeln!(s, "space {}", p.space().tag());
    let _ = writeln!(s, "window {}", p.window());
    let _ = writeln!(s, "patch_size {}", p.patch_size());
    let _ = writeln!(s, "n_d {}", p.len());
    let _ = writeln!(s, "seed {}", p.seed());
    let _ = writeln!(s, "y_fraction {}", format_y_fraction(p.y_fraction()));
    let _ = writeln!(s, "rng {RNG_NAME}");
    match p {
        Pattern::Pair(p) => {
            for t in &p.tests {
                let _ = writeln!(
                    s,
                    "{} {} {} {} {} {}",
                    t.a.dx, t.a.dy, t.a.channel, t.b.dx, t.b.dy, t.b.channel
                );
            }
        }
        Pattern::Triplet(p) => {
            for t in &p.triplets {
                let _ = writeln!(
                    s,
                    "{} {} {} {} {} {} {} {} {}",
                    t.anchor.dx,
                    t.anchor.dy,
                    t.anchor.channel,
                    t.companion1.dx,
                    t.companion1.dy,
                    t.companion1.channel,
                    t.companion2.dx,
                    t.companion2.dy,
                    t.companion2.channel
                );
            }
        }
    }
    s
}

fn sha256_hex(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(bytes);
    let digest = h.finalize();
    let mut out = String::with_capacity(64);
    for b in digest {
        let _ = write!(out, "{b:02x}");
    }
    out
}

/// Content digest of a pattern: the checksum recorded in its file form.
pub fn pattern_checksum(p: &Pattern) -> String {
    sha256_hex(pattern_body(p).as_bytes())
}

/// Full textual file form, checksum line included.
pub fn pattern_to_string(p: &Pattern) -> String {
    let body = pattern_body(p);
    let sum = sha256_hex(body.as_bytes());
    format!("{body}checksum {sum}\n")
}

pub fn save_pattern(path: &Path, p: &Pattern) -> Result<()> {
    fs::write(path, pattern_to_string(p)).map_err(|e| Error::io(path, e))
}

pub fn load_pattern(path: &Path) -> Result<Pattern> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_pattern(&text)
}

/// Parse the textual pattern form, verifying the checksum over every byte
/// that precedes the checksum line.
pub fn parse_pattern(text: &str) -> Result<Pattern> {
    let idx = text
        .rfind("\nchecksum ")
        .ok_or_else(|| Error::PatternFormat("missing checksum line".into()))?;
    let body = &text[..idx + 1];
    let declared = text[idx + 1..]
        .trim_end()
        .strip_prefix("checksum ")
        .expect("rfind matched the prefix")
        .to_string();
    if sha256_hex(body.as_bytes()) != declared {
        return Err(Error::ChecksumMismatch);
    }

    let mut lines = body.lines();
    let mut header = |key: &str| -> Result<String> {
        let line = lines
            .next()
            .ok_or_else(|| Error::PatternFormat(format!("missing header line `{key}`")))?;
        match line.split_once(' ') {
            Some((k, v)) if k == key => Ok(v.trim().to_string()),
            _ => Err(Error::PatternFormat(format!(
                "expected header line `{key} ...`, got `{line}`"
            ))),
        }
    };

    let version: u32 = header("version")?
        .parse()
        .map_err(|_| Error::PatternFormat("version is not an integer".into()))?;
    if version != PATTERN_FORMAT_VERSION {
        return Err(Error::VersionMismatch {
            expected: PATTERN_FORMAT_VERSION,
            found: version,
        });
    }
    let kind = PatternKind::from_tag(&header("kind")?)
        .ok_or_else(|| Error::PatternFormat("unknown kind tag".into()))?;
    let space_tag = header("space")?;
    let space = ColorSpace::from_tag(&space_tag)
        .ok_or_else(|| Error::PatternFormat(format!("unknown space tag `{space_tag}`")))?;
    let window: u32 = header("window")?
        .parse()
        .map_err(|_| Error::PatternFormat("window is not an integer".into()))?;
    let patch_size: u32 = header("patch_size")?
        .parse()
        .map_err(|_| Error::PatternFormat("patch_size is not an integer".into()))?;
    let n_d: usize = header("n_d")?
        .parse()
        .map_err(|_| Error::PatternFormat("n_d is not an integer".into()))?;
    let seed: u64 = header("seed")?
        .parse()
        .map_err(|_| Error::PatternFormat("seed is not an integer".into()))?;
    let y_raw = header("y_fraction")?;
    let y_fraction = if y_raw == "-" {
        None
    } else {
        Some(
            y_raw
                .parse::<f64>()
                .map_err(|_| Error::PatternFormat("y_fraction is not a number".into()))?,
        )
    };
    let rng = header("rng")?;
    if rng != RNG_NAME {
        return Err(Error::PatternFormat(format!(
            "unsupported generator `{rng}` (this build produces `{RNG_NAME}`)"
        )));
    }

    let test_lines: Vec<&str> = lines.filter(|l| !l.trim().is_empty()).collect();
    if test_lines.len() != n_d {
        return Err(Error::PatternFormat(format!(
            "declared n_d {n_d} but found {} test lines",
            test_lines.len()
        )));
    }

    fn parse_fields(line: &str, want: usize) -> Result<Vec<i64>> {
        let fields: Vec<i64> = line
            .split_whitespace()
            .map(|f| f.parse::<i64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::PatternFormat(format!("bad test line `{line}`: {e}")))?;
        if fields.len() != want {
            return Err(Error::PatternFormat(format!(
                "test line `{line}` has {} fields, expected {want}",
                fields.len()
            )));
        }
        Ok(fields)
    }

    fn endpoint(dx: i64, dy: i64, channel: i64) -> Result<TestEndpoint> {
        let err = |what: &str| Error::PatternFormat(format!("{what} out of range"));
        Ok(TestEndpoint {
            dx: i32::try_from(dx).map_err(|_| err("dx"))?,
            dy: i32::try_from(dy).map_err(|_| err("dy"))?,
            channel: u8::try_from(channel).map_err(|_| err("channel"))?,
        })
    }

    match kind {
        PatternKind::Pair => {
            if patch_size != 0 {
                return Err(Error::PatternFormat(
                    "pair patterns must declare patch_size 0".into(),
                ));
            }
            let mut tests = Vec::with_capacity(n_d);
            for line in test_lines {
                let f = parse_fields(line, 6)?;
                tests.push(PairTest {
                    a: endpoint(f[0], f[1], f[2])?,
                    b: endpoint(f[3], f[4], f[5])?,
                });
            }
            Ok(Pattern::Pair(PairPattern::from_tests(
                space, window, seed, y_fraction, tests,
            )?))
        }
        PatternKind::Triplet => {
            let mut triplets = Vec::with_capacity(n_d);
            for line in test_lines {
                let f = parse_fields(line, 9)?;
                triplets.push(TripletTest {
                    anchor: endpoint(f[0], f[1], f[2])?,
                    companion1: endpoint(f[3], f[4], f[5])?,
                    companion2: endpoint(f[6], f[7], f[8])?,
                });
            }
            Ok(Pattern::Triplet(TripletPattern::from_triplets(
                space, window, patch_size, seed, y_fraction, triplets,
            )?))
        }
    }
}
