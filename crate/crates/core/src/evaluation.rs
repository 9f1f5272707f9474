//! Homography-supervised matching evaluation over image pairs.
//!
//! The protocol: detect keypoints on the first image only, map them into
//! the second image through the ground-truth homography, drop keypoints too
//! close to a border in either image, extract descriptors at the original
//! and mapped positions, and match image-1 descriptors against image-2
//! descriptors. Because targets are extracted at the mapped positions in
//! keypoint order, a match is correct exactly when it lands on its own
//! index; the score is the percentage of correct matches. Color variants
//! are compared to the gray baseline via their relative improvement.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::descriptors::{self, required_margin, DescriptorConfig, Keypoint};
use crate::detect::{detect_fast, DetectorConfig};
use crate::imagery::{self, ColorSpace, SmoothingConfig};
use crate::matching::match_nearest;
use crate::patterns::{
    generate_pair_pattern, generate_triplet_pattern, pattern_checksum, Pattern, PatternKind,
};
use crate::{Error, Result};

/// Plane projective transform, row-major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Homography {
    h: [[f64; 3]; 3],
}

impl Homography {
    /// Validates non-singularity: the determinant, normalized by the cube of
    /// the largest absolute entry, must exceed 1e-9.
    pub fn new(h: [[f64; 3]; 3]) -> Result<Self> {
        let s = h.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
        if s == 0.0 {
            return Err(Error::SingularHomography);
        }
        let det = h[0][0] * (h[1][1] * h[2][2] - h[1][2] * h[2][1])
            - h[0][1] * (h[1][0] * h[2][2] - h[1][2] * h[2][0])
            + h[0][2] * (h[1][0] * h[2][1] - h[1][1] * h[2][0]);
        if (det / (s * s * s)).abs() <= 1e-9 {
            return Err(Error::SingularHomography);
        }
        Ok(Homography { h })
    }

    pub fn identity() -> Self {
        Homography {
            h: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
        }
    }

    pub fn matrix(&self) -> &[[f64; 3]; 3] {
        &self.h
    }

    /// Read nine whitespace-separated reals, row-major.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let vals: Vec<f64> = text
            .split_whitespace()
            .map(|t| t.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::HomographyFormat(format!("{}: {e}", path.display())))?;
        if vals.len() != 9 {
            return Err(Error::HomographyFormat(format!(
                "{}: expected 9 values, found {}",
                path.display(),
                vals.len()
            )));
        }
        Homography::new([
            [vals[0], vals[1], vals[2]],
            [vals[3], vals[4], vals[5]],
            [vals[6], vals[7], vals[8]],
        ])
    }

    /// Apply the transform with perspective division and round to the
    /// nearest integer pixel. Points whose homogeneous w lands within
    /// 1e-12 of zero have no finite image.
    pub fn map_point(&self, x: i64, y: i64) -> Result<(i64, i64)> {
        let (xf, yf) = (x as f64, y as f64);
        let w = self.h[2][0] * xf + self.h[2][1] * yf + self.h[2][2];
        if w.abs() <= 1e-12 {
            return Err(Error::PointAtInfinity { x, y });
        }
        let mx = (self.h[0][0] * xf + self.h[0][1] * yf + self.h[0][2]) / w;
        let my = (self.h[1][0] * xf + self.h[1][1] * yf + self.h[1][2]) / w;
        Ok((mx.round() as i64, my.round() as i64))
    }
}

/// One evaluation unit: two images related by a ground-truth homography.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImagePairTask {
    pub label: String,
    pub image1: PathBuf,
    pub image2: PathBuf,
    pub homography: PathBuf,
}

/// Parse a manifest: one `label image1 image2 homography` line per task,
/// whitespace-separated (labels therefore cannot contain spaces). Relative
/// paths resolve against the manifest's directory. Blank lines and `#`
/// comments are ignored.
pub fn load_manifest(path: &Path) -> Result<Vec<ImagePairTask>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    let resolve = |token: &str| {
        let p = PathBuf::from(token);
        if p.is_absolute() {
            p
        } else {
            base.join(p)
        }
    };
    let mut tasks = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.len() != 4 {
            return Err(Error::ManifestFormat {
                line: lineno + 1,
                msg: format!(
                    "expected `label image1 image2 homography`, got {} fields",
                    tokens.len()
                ),
            });
        }
        tasks.push(ImagePairTask {
            label: tokens[0].to_string(),
            image1: resolve(tokens[1]),
            image2: resolve(tokens[2]),
            homography: resolve(tokens[3]),
        });
    }
    Ok(tasks)
}

/// Build the five standard tasks of a benchmark image set laid out as
/// `img1..img6` plus `H1to2p..H1to6p`: image 1 against each of the others.
pub fn oxford_tasks(dir: &Path) -> Result<Vec<ImagePairTask>> {
    let set = dir
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "set".into());
    let find_image = |k: u32| -> Result<PathBuf> {
        for ext in ["ppm", "pgm", "png"] {
            let p = dir.join(format!("img{k}.{ext}"));
            if p.exists() {
                return Ok(p);
            }
        }
        Err(Error::Io {
            path: dir
                .join(format!("img{k}.{{ppm,pgm,png}}"))
                .display()
                .to_string(),
            source: std::io::Error::new(std::io::ErrorKind::NotFound, "image not found"),
        })
    };
    let image1 = find_image(1)?;
    let mut tasks = Vec::with_capacity(5);
    for k in 2..=6 {
        tasks.push(ImagePairTask {
            label: format!("{set} 1|{k}"),
            image1: image1.clone(),
            image2: find_image(k)?,
            homography: dir.join(format!("H1to{k}p")),
        });
    }
    Ok(tasks)
}

/// Percent change of a color score over the gray baseline:
/// `100 * (p_color - p_gray) / p_gray`. Undefined when the baseline is not
/// positive; reports render that as `-`.
pub fn relative_improvement(p_gray: f64, p_color: f64) -> Option<f64> {
    (p_gray > 0.0).then(|| 100.0 * (p_color - p_gray) / p_gray)
}

/// [`relative_improvement`] as a whole percentage, truncated toward zero
/// for display.
pub fn relative_improvement_percent(p_gray: f64, p_color: f64) -> Option<i64> {
    relative_improvement(p_gray, p_color).map(|v| v.trunc() as i64)
}

/// One report cell: a single descriptor variant on a single image pair.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ReportRow {
    pub label: String,
    /// Color space tag of the variant.
    pub variant: String,
    /// `pair` or `triplet`.
    pub kind: String,
    pub n_d: usize,
    pub patch_size: u32,
    /// Keypoints surviving the margin filter for this variant.
    pub n_total: usize,
    pub n_correct: usize,
    /// Percent of correct matches.
    pub score: f64,
    /// Relative improvement of this row's group's RGB variant over gray.
    pub rgb_ri: Option<f64>,
    /// Relative improvement of this row's group's YCbCr variant over gray.
    pub ycbcr_ri: Option<f64>,
}

/// A task the suite could not evaluate, with the reason.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct TaskFailure {
    pub label: String,
    pub error: String,
}

/// Aggregated suite outcome; failed tasks are recorded, not fatal.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SuiteReport {
    pub rows: Vec<ReportRow>,
    pub failures: Vec<TaskFailure>,
}

fn fits(x: i64, y: i64, margin: i64, width: usize, height: usize) -> bool {
    x >= margin && y >= margin && x + margin < width as i64 && y + margin < height as i64
}

/// Per-task relative-improvement columns: rows are grouped by
/// (kind, n_d, patch_size); within a group the gray score is the baseline
/// and every row of the group carries the group's RGB and YCbCr RIs.
fn fill_relative_improvements(rows: &mut [ReportRow]) {
    type Key = (String, usize, u32);
    let mut groups: HashMap<Key, [Option<f64>; 3]> = HashMap::new();
    for r in rows.iter() {
        let entry = groups
            .entry((r.kind.clone(), r.n_d, r.patch_size))
            .or_default();
        match r.variant.as_str() {
            "gray" => entry[0] = Some(r.score),
            "rgb" => entry[1] = Some(r.score),
            "ycbcr" => entry[2] = Some(r.score),
            _ => {}
        }
    }
    for r in rows.iter_mut() {
        let entry = &groups[&(r.kind.clone(), r.n_d, r.patch_size)];
        if let Some(gray) = entry[0] {
            r.rgb_ri = entry[1].and_then(|c| relative_improvement(gray, c));
            r.ycbcr_ri = entry[2].and_then(|c| relative_improvement(gray, c));
        }
    }
}

/// Evaluate every variant on one image pair. All variants share a single
/// detector pass on image 1; image 2 is never searched, its descriptors are
/// extracted at the homography-mapped keypoint positions. Color variants are
/// skipped with a notice when an input image carries no color.
pub fn run_pair(
    task: &ImagePairTask,
    variants: &[DescriptorConfig],
    det: &DetectorConfig,
) -> Result<Vec<ReportRow>> {
    let img1 = imagery::load_image(&task.image1)?;
    let img2 = imagery::load_image(&task.image2)?;
    let hom = Homography::from_file(&task.homography)?;

    let (gray1, _) = imagery::prepare_image(&img1, ColorSpace::Gray)?;
    let detected = detect_fast(&gray1, det)?;
    // Points without a finite image under the homography cannot be sampled
    // in image 2, so they are filtered exactly like margin violations.
    let mapped: Vec<Option<(i64, i64)>> = detected
        .iter()
        .map(|kp| hom.map_point(kp.x as i64, kp.y as i64).ok())
        .collect();

    let mut rows = Vec::new();
    for cfg in variants {
        let space = cfg.pattern().space();
        if space != ColorSpace::Gray
            && (img1.space() == ColorSpace::Gray || img2.space() == ColorSpace::Gray)
        {
            log::warn!(
                "{}: skipping {} variant, input images carry no color",
                task.label,
                space.tag()
            );
            continue;
        }

        let margin = required_margin(cfg) as i64;
        let mut originals = Vec::new();
        let mut counterparts = Vec::new();
        for (kp, m) in detected.iter().zip(&mapped) {
            let Some((mx, my)) = *m else { continue };
            if fits(
                kp.x as i64,
                kp.y as i64,
                margin,
                img1.width(),
                img1.height(),
            ) && fits(mx, my, margin, img2.width(), img2.height())
            {
                originals.push(*kp);
                counterparts.push(Keypoint {
                    x: mx as u32,
                    y: my as u32,
                    response: kp.response,
                });
            }
        }
        let n_total = originals.len();
        if n_total < 2 {
            return Err(Error::TooFewKeypoints { survived: n_total });
        }

        let queries = descriptors::extract(&img1, &originals, cfg)?;
        let targets = descriptors::extract(&img2, &counterparts, cfg)?;
        let matches = match_nearest(&queries, &targets)?;
        let n_correct = matches
            .iter()
            .filter(|m| m.best_index == m.query_index)
            .count();

        rows.push(ReportRow {
            label: task.label.clone(),
            variant: space.tag().to_string(),
            kind: cfg.pattern().kind().tag().to_string(),
            n_d: cfg.pattern().len(),
            patch_size: cfg.pattern().patch_size(),
            n_total,
            n_correct,
            score: 100.0 * n_correct as f64 / n_total as f64,
            rgb_ri: None,
            ycbcr_ri: None,
        });
    }
    fill_relative_improvements(&mut rows);
    Ok(rows)
}

/// Evaluate the full cross-product of tasks and variants. A failing task is
/// recorded in the report and the suite continues with the next one.
pub fn run_suite(
    tasks: &[ImagePairTask],
    variants: &[DescriptorConfig],
    det: &DetectorConfig,
) -> SuiteReport {
    let mut report = SuiteReport::default();
    for task in tasks {
        match run_pair(task, variants, det) {
            Ok(mut rows) => report.rows.append(&mut rows),
            Err(e) => {
                log::warn!("{}: {e}", task.label);
                report.failures.push(TaskFailure {
                    label: task.label.clone(),
                    error: e.to_string(),
                });
            }
        }
    }
    report
}

/// How variant construction picks pre-smoothing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SmoothingChoice {
    /// Pair patterns get the stock sigma-2 9x9 kernel, triplets none.
    FamilyDefault,
    Disabled,
    Fixed(SmoothingConfig),
}

/// Build descriptor variants over the cross-product of color spaces, bit
/// counts, and (for triplets) patch sizes. All variants share one seed, so
/// patterns across spaces share their spatial layout and differ only in
/// channel assignment; rows produced from these variants group naturally
/// for relative-improvement columns.
#[allow(clippy::too_many_arguments)]
pub fn build_variants(
    kind: PatternKind,
    spaces: &[ColorSpace],
    bit_counts: &[usize],
    patch_sizes: &[u32],
    window: u32,
    seed: u64,
    y_fraction: Option<f64>,
    smoothing: SmoothingChoice,
) -> Result<Vec<DescriptorConfig>> {
    let patches: &[u32] = match kind {
        PatternKind::Pair => &[0],
        PatternKind::Triplet => patch_sizes,
    };
    if bit_counts.is_empty() || patches.is_empty() || spaces.is_empty() {
        return Err(Error::InvalidParameter(
            "variant construction needs at least one space, bit count, and patch size".into(),
        ));
    }
    let mut variants = Vec::new();
    for &n_d in bit_counts {
        for &patch in patches {
            for &space in spaces {
                let yf = (space == ColorSpace::YCbCr).then_some(y_fraction).flatten();
                let pattern: Pattern = match kind {
                    PatternKind::Pair => {
                        generate_pair_pattern(space, n_d, window, seed, yf)?.into()
                    }
                    PatternKind::Triplet => {
                        generate_triplet_pattern(space, n_d, window, patch, seed, yf)?.into()
                    }
                };
                let cfg = match smoothing {
                    SmoothingChoice::FamilyDefault => DescriptorConfig::with_defaults(pattern),
                    SmoothingChoice::Disabled => DescriptorConfig::new(pattern, None)?,
                    SmoothingChoice::Fixed(s) => DescriptorConfig::new(pattern, Some(s))?,
                };
                variants.push(cfg);
            }
        }
    }
    Ok(variants)
}

/// CSV header shared by reports and the report-reading tests.
pub const REPORT_CSV_HEADER: &str =
    "label,variant,kind,n_d,patch_size,n_total,n_correct,score,rgb_ri,ycbcr_ri";

fn csv_float(v: f64) -> String {
    format!("{v:.4}")
}

fn csv_opt(v: Option<f64>) -> String {
    v.map(csv_float).unwrap_or_else(|| "-".into())
}

pub fn report_to_csv(rows: &[ReportRow]) -> String {
    let mut out = String::with_capacity(rows.len() * 64 + 80);
    out.push_str(REPORT_CSV_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            r.label.replace(' ', "_"),
            r.variant,
            r.kind,
            r.n_d,
            r.patch_size,
            r.n_total,
            r.n_correct,
            csv_float(r.score),
            csv_opt(r.rgb_ri),
            csv_opt(r.ycbcr_ri),
        );
    }
    out
}

pub fn save_report_csv(path: &Path, rows: &[ReportRow]) -> Result<()> {
    fs::write(path, report_to_csv(rows)).map_err(|e| Error::io(path, e))
}

/// Provenance block for one variant inside the JSON report.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct VariantMeta {
    pub variant: String,
    pub kind: PatternKind,
    pub n_d: usize,
    pub window: u32,
    pub patch_size: u32,
    pub seed: u64,
    pub y_fraction: Option<f64>,
    pub smoothing: Option<SmoothingConfig>,
    /// SHA-256 of the pattern's serialized body; regenerating the pattern
    /// file must reproduce it.
    pub pattern_checksum: String,
}

impl From<&DescriptorConfig> for VariantMeta {
    fn from(cfg: &DescriptorConfig) -> Self {
        let p = cfg.pattern();
        VariantMeta {
            variant: p.space().tag().to_string(),
            kind: p.kind(),
            n_d: p.len(),
            window: p.window(),
            patch_size: p.patch_size(),
            seed: p.seed(),
            y_fraction: p.y_fraction(),
            smoothing: cfg.smoothing().copied(),
            pattern_checksum: pattern_checksum(p),
        }
    }
}

/// Self-describing JSON report: results plus everything needed to reproduce
/// them.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ReportDocument {
    pub tool_version: String,
    pub detector: DetectorConfig,
    pub variants: Vec<VariantMeta>,
    pub rows: Vec<ReportRow>,
    pub failures: Vec<TaskFailure>,
}

impl ReportDocument {
    pub fn new(
        detector: DetectorConfig,
        variants: &[DescriptorConfig],
        suite: SuiteReport,
    ) -> Self {
        ReportDocument {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            detector,
            variants: variants.iter().map(VariantMeta::from).collect(),
            rows: suite.rows,
            failures: suite.failures,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization cannot fail")
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }
}
