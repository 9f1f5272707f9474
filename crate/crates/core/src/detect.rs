//! Deterministic FAST corner detection on grayscale images.
//!
//! A pixel is a corner when at least 9 contiguous pixels on the 16-pixel
//! Bresenham circle of radius 3 are all brighter than center + threshold or
//! all darker than center - threshold. The response is the sum of absolute
//! center differences over the maximal qualifying arc; at most one arc can
//! qualify per pixel, since two disjoint arcs of 9 would need more than 16
//! circle pixels. Non-maximum suppression and ranking are fully ordered so
//! identical inputs always produce the identical keypoint list.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::descriptors::Keypoint;
use crate::imagery::{ColorSpace, PlanarImage};
use crate::{Error, Result};

/// Circle of radius 3 around the candidate, clockwise from 12 o'clock.
const CIRCLE: [(i32, i32); 16] = [
    (0, -3),
    (1, -3),
    (2, -2),
    (3, -1),
    (3, 0),
    (3, 1),
    (2, 2),
    (1, 3),
    (0, 3),
    (-1, 3),
    (-2, 2),
    (-3, 1),
    (-3, 0),
    (-3, -1),
    (-2, -2),
    (-1, -3),
];

/// Contiguous circle pixels required by the segment test.
const MIN_ARC: usize = 9;

/// Detector parameters; [`Default`] gives threshold 20, 512 keypoints, and
/// a 3 pixel suppression radius.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct DetectorConfig {
    /// Minimum contrast against the center for a circle pixel to count.
    pub threshold: u8,
    /// Keep at most this many keypoints after ranking by response.
    pub max_keypoints: usize,
    /// Euclidean radius within which only the locally dominant candidate
    /// survives.
    pub nms_radius: f64,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        DetectorConfig {
            threshold: 20,
            max_keypoints: 512,
            nms_radius: 3.0,
        }
    }
}

impl DetectorConfig {
    fn validate(&self) -> Result<()> {
        if self.threshold < 1 {
            return Err(Error::InvalidParameter(
                "threshold must be at least 1".into(),
            ));
        }
        if self.max_keypoints < 1 {
            return Err(Error::InvalidParameter(
                "max_keypoints must be at least 1".into(),
            ));
        }
        if self.nms_radius.is_nan() || self.nms_radius < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "suppression radius must be non-negative, got {}",
                self.nms_radius
            )));
        }
        Ok(())
    }
}

/// Longest circular run of set bits in a 16-bit mask: `(length, start)`.
fn longest_circular_run(mask: u16) -> (usize, usize) {
    if mask == 0 {
        return (0, 0);
    }
    if mask == 0xffff {
        return (16, 0);
    }
    // Scanning two copies of the mask captures wrap-around runs; with at
    // least one zero bit no run can exceed 16.
    let mut best = (0usize, 0usize);
    let mut len = 0usize;
    for i in 0..32usize {
        if mask >> (i % 16) & 1 == 1 {
            len += 1;
            if len > best.0 {
                best = (len, (i + 1 - len) % 16);
            }
        } else {
            len = 0;
        }
    }
    best
}

/// Segment test at one pixel: the SAD response over the qualifying arc, or
/// None when no arc of [`MIN_ARC`] contiguous pixels passes.
fn corner_response(plane: &[u8], width: usize, x: usize, y: usize, threshold: u8) -> Option<u32> {
    let c = plane[y * width + x] as i16;
    let t = threshold as i16;
    let mut vals = [0i16; 16];
    let mut bright: u16 = 0;
    let mut dark: u16 = 0;
    for (i, (dx, dy)) in CIRCLE.iter().enumerate() {
        let px = (x as i64 + *dx as i64) as usize;
        let py = (y as i64 + *dy as i64) as usize;
        let p = plane[py * width + px] as i16;
        vals[i] = p;
        if p > c + t {
            bright |= 1 << i;
        } else if p < c - t {
            dark |= 1 << i;
        }
    }
    let arc_sad = |mask: u16| -> Option<u32> {
        let (len, start) = longest_circular_run(mask);
        if len < MIN_ARC {
            return None;
        }
        Some(
            (0..len)
                .map(|k| (vals[(start + k) % 16] - c).unsigned_abs() as u32)
                .sum(),
        )
    };
    arc_sad(bright).or_else(|| arc_sad(dark))
}

struct Candidate {
    x: u32,
    y: u32,
    response: u32,
}

/// `j` beats `i` when it responds more strongly, or equally strongly from a
/// lexicographically smaller (y, x) position.
fn dominates(j: &Candidate, i: &Candidate) -> bool {
    j.response > i.response || (j.response == i.response && (j.y, j.x) < (i.y, i.x))
}

/// Keep every candidate that is not dominated by any other candidate within
/// the radius. Comparison is against all candidates, suppressed or not, so
/// the outcome is independent of processing order.
fn non_maximum_suppression(candidates: &[Candidate], radius: f64) -> Vec<bool> {
    let r2 = radius * radius;
    let cell = radius.ceil().max(1.0) as u64;
    let mut grid: HashMap<(u64, u64), Vec<usize>> = HashMap::new();
    for (i, c) in candidates.iter().enumerate() {
        grid.entry((c.x as u64 / cell, c.y as u64 / cell))
            .or_default()
            .push(i);
    }
    let mut keep = vec![true; candidates.len()];
    for (i, c) in candidates.iter().enumerate() {
        let (gx, gy) = (c.x as u64 / cell, c.y as u64 / cell);
        'outer: for nx in gx.saturating_sub(1)..=gx + 1 {
            for ny in gy.saturating_sub(1)..=gy + 1 {
                let Some(bucket) = grid.get(&(nx, ny)) else {
                    continue;
                };
                for &j in bucket {
                    if j == i {
                        continue;
                    }
                    let o = &candidates[j];
                    let dx = c.x as f64 - o.x as f64;
                    let dy = c.y as f64 - o.y as f64;
                    if dx * dx + dy * dy <= r2 && dominates(o, c) {
                        keep[i] = false;
                        break 'outer;
                    }
                }
            }
        }
    }
    keep
}

/// Detect corners on a grayscale image.
///
/// Output is sorted by descending response with (y, x) ascending as the tie
/// break, truncated to `max_keypoints`. Callers with color input convert
/// first; detection itself never inspects chroma.
pub fn detect_fast(img: &PlanarImage, cfg: &DetectorConfig) -> Result<Vec<Keypoint>> {
    cfg.validate()?;
    if img.space() != ColorSpace::Gray {
        return Err(Error::WrongColorSpace {
            expected: ColorSpace::Gray,
            found: img.space(),
        });
    }
    let (w, h) = (img.width(), img.height());
    if w < 7 || h < 7 {
        return Err(Error::ImageTooSmall {
            width: w,
            height: h,
        });
    }
    let plane = img.plane(0);

    let mut candidates = Vec::new();
    for y in 3..h - 3 {
        for x in 3..w - 3 {
            if let Some(response) = corner_response(plane, w, x, y, cfg.threshold) {
                candidates.push(Candidate {
                    x: x as u32,
                    y: y as u32,
                    response,
                });
            }
        }
    }

    let keep = non_maximum_suppression(&candidates, cfg.nms_radius);
    let mut survivors: Vec<&Candidate> = candidates
        .iter()
        .zip(&keep)
        .filter_map(|(c, &k)| k.then_some(c))
        .collect();
    survivors.sort_by(|a, b| {
        b.response
            .cmp(&a.response)
            .then_with(|| (a.y, a.x).cmp(&(b.y, b.x)))
    });
    survivors.truncate(cfg.max_keypoints);
    Ok(survivors
        .into_iter()
        .map(|c| Keypoint {
            x: c.x,
            y: c.y,
            response: c.response as f32,
        })
        .collect())
}

/// Write keypoints as text, one `x y response` per line.
pub fn save_keypoints(path: &Path, keypoints: &[Keypoint]) -> Result<()> {
    let mut out = String::new();
    for kp in keypoints {
        let _ = writeln!(out, "{} {} {}", kp.x, kp.y, kp.response);
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Read keypoints written by [`save_keypoints`] or by an external detector.
/// Blank lines and `#` comments are ignored.
pub fn load_keypoints(path: &Path) -> Result<Vec<Keypoint>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(Error::KeypointFormat {
                line: lineno + 1,
                msg: format!("expected `x y response`, got {} fields", fields.len()),
            });
        }
        let parse_u32 = |s: &str, what: &str| {
            s.parse::<u32>().map_err(|e| Error::KeypointFormat {
                line: lineno + 1,
                msg: format!("bad {what}: {e}"),
            })
        };
        let x = parse_u32(fields[0], "x")?;
        let y = parse_u32(fields[1], "y")?;
        let response = fields[2]
            .parse::<f32>()
            .map_err(|e| Error::KeypointFormat {
                line: lineno + 1,
                msg: format!("bad response: {e}"),
            })?;
        out.push(Keypoint { x, y, response });
    }
    Ok(out)
}
