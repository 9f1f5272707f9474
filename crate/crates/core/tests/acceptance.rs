//! Release gate for the toolkit: one test per numbered criterion.
//!
//! Criteria 1-7 and 11 are self-contained property and oracle checks.
//! Criteria 8-10 score descriptor variants on a benchmark directory of
//! homography-registered image sets (wall, graf, ubc, leuven, bikes laid out
//! as `img1..img6` + `H1to2p..H1to6p`); they look for it under the
//! `COLORBITS_OXFORD` environment variable or `data/oxford` at the repository
//! root, and report SKIP when it is absent.
//!
//! Run with `--show-output` (or `--nocapture`) to see one summary line per
//! criterion.

use std::env;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use colorbits::descriptors::{
    extract, extract_traced, required_margin, Descriptor, DescriptorConfig, Keypoint,
};
use colorbits::detect::{detect_fast, DetectorConfig};
use colorbits::evaluation::{
    build_variants, oxford_tasks, relative_improvement_percent, run_pair, ImagePairTask, ReportRow,
    SmoothingChoice,
};
use colorbits::imagery::{save_image, to_gray, ColorSpace, PlanarImage, SpaceConversion};
use colorbits::matching::{hamming, match_nearest, MatchResult};
use colorbits::patterns::{generate_pair_pattern, PairPattern, Pattern, PatternKind};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const WINDOW: u32 = 48;
const SEED: u64 = 7;

// ---------------------------------------------------------------------------
// Shared helpers
// ---------------------------------------------------------------------------

/// Random 8x8 color blocks with mild per-pixel noise: corner-rich, with
/// distinct chroma from block to block.
fn textured_rgb(width: usize, height: usize, seed: u64) -> PlanarImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bw = width.div_ceil(8);
    let bh = height.div_ceil(8);
    let colors: Vec<[u8; 3]> = (0..bw * bh).map(|_| rng.random()).collect();
    let mut planes = vec![vec![0u8; width * height]; 3];
    for y in 0..height {
        for x in 0..width {
            let base = colors[(y / 8) * bw + x / 8];
            for (c, plane) in planes.iter_mut().enumerate() {
                let noise: i16 = rng.random_range(-8..=8);
                plane[y * width + x] = (base[c] as i16 + noise).clamp(0, 255) as u8;
            }
        }
    }
    let [r, g, b] = <[Vec<u8>; 3]>::try_from(planes).unwrap();
    PlanarImage::rgb(width, height, r, g, b).unwrap()
}

fn random_descriptor(rng: &mut ChaCha8Rng, n_d: usize) -> Descriptor {
    let bits: Vec<bool> = (0..n_d).map(|_| rng.random()).collect();
    Descriptor::from_bits(&bits)
}

/// Interior grid of keypoints honoring `margin` on a `width x height` image.
fn grid_keypoints(width: usize, height: usize, margin: usize, count: usize) -> Vec<Keypoint> {
    let xs: Vec<usize> = (margin..width - margin).collect();
    let ys: Vec<usize> = (margin..height - margin).collect();
    let mut out = Vec::with_capacity(count);
    let cols = (count as f64).sqrt().ceil() as usize;
    let rows = count.div_ceil(cols);
    for r in 0..rows {
        for c in 0..cols {
            if out.len() == count {
                return out;
            }
            let x = xs[c * (xs.len() - 1) / cols.max(1)];
            let y = ys[r * (ys.len() - 1) / rows.max(1)];
            out.push(Keypoint {
                x: x as u32,
                y: y as u32,
                response: 1.0,
            });
        }
    }
    out
}

fn sample_std(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    var.sqrt()
}

// ---------------------------------------------------------------------------
// 1. Sampling statistics of generated patterns
// ---------------------------------------------------------------------------

#[test]
fn criterion_01_pattern_sampling_statistics() {
    const N_TESTS: usize = 50_000; // 100k endpoints

    let rgb = generate_pair_pattern(ColorSpace::Rgb, N_TESTS, WINDOW, SEED, None).unwrap();
    let mut xs = Vec::with_capacity(2 * N_TESTS);
    let mut ys = Vec::with_capacity(2 * N_TESTS);
    let mut channel_counts = [0usize; 3];
    for t in rgb.tests() {
        for e in [t.a, t.b] {
            xs.push(e.dx as f64);
            ys.push(e.dy as f64);
            channel_counts[e.channel as usize] += 1;
        }
    }

    let expected = WINDOW as f64 / 5.0;
    for (axis, std) in [("x", sample_std(&xs)), ("y", sample_std(&ys))] {
        assert!(
            (std - expected).abs() <= 0.05 * expected,
            "{axis} offset std {std:.3} outside 5% of {expected}"
        );
    }

    let total = (2 * N_TESTS) as f64;
    for (c, &count) in channel_counts.iter().enumerate() {
        let freq = count as f64 / total;
        assert!(
            (freq - 1.0 / 3.0).abs() <= 0.02,
            "channel {c} frequency {freq:.4} outside 1/3 +- 0.02"
        );
    }

    let ycc = generate_pair_pattern(ColorSpace::YCbCr, N_TESTS, WINDOW, SEED, None).unwrap();
    let violations = ycc
        .tests()
        .iter()
        .filter(|t| (t.a.channel == 0) != (t.b.channel == 0))
        .count();
    assert_eq!(violations, 0, "luma/chroma mixing in generated tests");

    println!(
        "criterion 1 PASS: offset std ({:.3}, {:.3}) vs {expected}, channel freqs {:?}, purity violations 0",
        sample_std(&xs),
        sample_std(&ys),
        channel_counts
    );
}

// ---------------------------------------------------------------------------
// 2. Matcher against a naive per-bit oracle
// ---------------------------------------------------------------------------

/// Reference matcher: per-bit distance, double loop, no bit tricks.
fn naive_match(queries: &[Descriptor], targets: &[Descriptor]) -> Vec<MatchResult> {
    queries
        .iter()
        .enumerate()
        .map(|(qi, q)| {
            let mut best_index = usize::MAX;
            let mut best = u32::MAX;
            let mut second = u32::MAX;
            for (ti, t) in targets.iter().enumerate() {
                let mut d = 0u32;
                for b in 0..q.n_d() {
                    if q.bit(b) != t.bit(b) {
                        d += 1;
                    }
                }
                if d < best {
                    second = best;
                    best = d;
                    best_index = ti;
                } else if d < second {
                    second = d;
                }
            }
            if targets.len() == 1 {
                second = best;
            }
            MatchResult {
                query_index: qi,
                best_index,
                distance: best,
                second_distance: second,
            }
        })
        .collect()
}

#[test]
fn criterion_02_matcher_equals_naive_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let queries: Vec<Descriptor> = (0..500).map(|_| random_descriptor(&mut rng, 512)).collect();
    let targets: Vec<Descriptor> = (0..500).map(|_| random_descriptor(&mut rng, 512)).collect();

    let fast = match_nearest(&queries, &targets).unwrap();
    let slow = naive_match(&queries, &targets);
    assert_eq!(fast, slow, "matcher disagrees with the per-bit oracle");

    println!("criterion 2 PASS: 500x500 512-bit match identical to naive oracle");
}

// ---------------------------------------------------------------------------
// 3. Hamming distance is a metric
// ---------------------------------------------------------------------------

#[test]
fn criterion_03_hamming_metric_properties() {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 1);
    for round in 0..1000 {
        let n_d = [64, 256, 512][round % 3];
        let a = random_descriptor(&mut rng, n_d);
        let b = random_descriptor(&mut rng, n_d);
        let c = random_descriptor(&mut rng, n_d);
        let ab = hamming(&a, &b).unwrap();
        let ba = hamming(&b, &a).unwrap();
        let ac = hamming(&a, &c).unwrap();
        let bc = hamming(&b, &c).unwrap();
        assert_eq!(hamming(&a, &a).unwrap(), 0, "identity violated");
        assert_eq!(ab, ba, "symmetry violated");
        assert!(
            ac <= ab + bc,
            "triangle inequality violated: {ac} > {ab} + {bc}"
        );
    }
    println!("criterion 3 PASS: 1000 random triples, zero metric violations");
}

// ---------------------------------------------------------------------------
// 4. Channel-equal images reduce color descriptors to grayscale ones
// ---------------------------------------------------------------------------

#[test]
fn criterion_04_channel_equal_images_reduce_to_gray() {
    let gray_pat = generate_pair_pattern(ColorSpace::Gray, 256, WINDOW, SEED, None).unwrap();
    let rgb_pat = generate_pair_pattern(ColorSpace::Rgb, 256, WINDOW, SEED, None).unwrap();
    let ycc_pat = generate_pair_pattern(ColorSpace::YCbCr, 256, WINDOW, SEED, None).unwrap();

    // The luma-only subset of the YCbCr pattern, rebuilt as a grayscale
    // pattern over the same spatial offsets.
    let luma_indices: Vec<usize> = ycc_pat
        .tests()
        .iter()
        .enumerate()
        .filter_map(|(i, t)| (t.a.channel == 0 && t.b.channel == 0).then_some(i))
        .collect();
    let luma_as_gray = PairPattern::from_tests(
        ColorSpace::Gray,
        WINDOW,
        SEED,
        None,
        luma_indices.iter().map(|&i| ycc_pat.tests()[i]).collect(),
    )
    .unwrap();
    assert!(!luma_indices.is_empty());

    let cfg_gray = DescriptorConfig::with_defaults(gray_pat.into());
    let cfg_rgb = DescriptorConfig::with_defaults(rgb_pat.into());
    let cfg_ycc = DescriptorConfig::with_defaults(ycc_pat.into());
    let cfg_luma = DescriptorConfig::with_defaults(luma_as_gray.into());
    let margin = required_margin(&cfg_gray) as usize;

    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 2);
    for image_index in 0..20 {
        let (w, h) = (96, 96);
        let data: Vec<u8> = (0..w * h).map(|_| rng.random()).collect();
        let gray_img = PlanarImage::gray(w, h, data.clone()).unwrap();
        let rgb_img = PlanarImage::rgb(w, h, data.clone(), data.clone(), data).unwrap();
        let kps = grid_keypoints(w, h, margin, 25);

        let d_gray = extract(&gray_img, &kps, &cfg_gray).unwrap();
        let d_rgb = extract(&rgb_img, &kps, &cfg_rgb).unwrap();
        assert_eq!(
            d_gray, d_rgb,
            "image {image_index}: rgb bits differ from gray bits"
        );

        let d_ycc = extract(&rgb_img, &kps, &cfg_ycc).unwrap();
        let d_luma = extract(&gray_img, &kps, &cfg_luma).unwrap();
        for (kp, (ycc, luma)) in d_ycc.iter().zip(&d_luma).enumerate() {
            for (j, &i) in luma_indices.iter().enumerate() {
                assert_eq!(
                    ycc.bit(i),
                    luma.bit(j),
                    "image {image_index}, keypoint {kp}: luma bit {i} differs from gray"
                );
            }
        }
    }
    println!(
        "criterion 4 PASS: 20 channel-equal images, rgb == gray and ycbcr luma subset == gray"
    );
}

// ---------------------------------------------------------------------------
// 5. Identity homography scores exactly 100%
// ---------------------------------------------------------------------------

fn stock_variants() -> Vec<DescriptorConfig> {
    build_variants(
        PatternKind::Pair,
        &[ColorSpace::Gray, ColorSpace::Rgb, ColorSpace::YCbCr],
        &[512],
        &[7],
        WINDOW,
        SEED,
        None,
        SmoothingChoice::FamilyDefault,
    )
    .unwrap()
}

#[test]
fn criterion_05_identity_pair_scores_100_percent() {
    let dir = tempfile::tempdir().unwrap();
    let img = textured_rgb(320, 240, 5);
    save_image(&dir.path().join("img1.ppm"), &img).unwrap();
    save_image(&dir.path().join("img2.ppm"), &img).unwrap();
    fs::write(dir.path().join("H.txt"), "1 0 0\n0 1 0\n0 0 1\n").unwrap();
    let task = ImagePairTask {
        label: "identity".into(),
        image1: dir.path().join("img1.ppm"),
        image2: dir.path().join("img2.ppm"),
        homography: dir.path().join("H.txt"),
    };

    let rows = run_pair(&task, &stock_variants(), &DetectorConfig::default()).unwrap();
    assert_eq!(rows.len(), 3);
    for row in &rows {
        assert!(
            row.n_total >= 50,
            "{} keypoints is too few to be meaningful",
            row.n_total
        );
        assert_eq!(
            row.n_correct, row.n_total,
            "{} variant missed matches",
            row.variant
        );
        assert_eq!(
            row.score, 100.0,
            "{} variant score not exactly 100",
            row.variant
        );
    }
    println!(
        "criterion 5 PASS: identity pair scores exactly 100% on {} keypoints for all variants",
        rows[0].n_total
    );
}

// ---------------------------------------------------------------------------
// 6. Corner detector against a brute-force oracle
// ---------------------------------------------------------------------------

/// Radius-3 digital circle derived independently: the 16 integer points with
/// squared radius 8..=10, ordered clockwise starting straight up.
fn oracle_ring() -> Vec<(i32, i32)> {
    let mut ring = Vec::new();
    for dy in -3i32..=3 {
        for dx in -3i32..=3 {
            let r2 = dx * dx + dy * dy;
            if (8..=10).contains(&r2) {
                ring.push((dx, dy));
            }
        }
    }
    assert_eq!(ring.len(), 16);
    // Clockwise angle from the upward direction, in [0, 2*pi).
    let angle = |&(dx, dy): &(i32, i32)| -> f64 {
        let a = (dx as f64).atan2(-dy as f64);
        if a < 0.0 {
            a + std::f64::consts::TAU
        } else {
            a
        }
    };
    ring.sort_by(|p, q| angle(p).partial_cmp(&angle(q)).unwrap());
    ring
}

/// Brute-force segment test: enumerate run beginnings per polarity, take the
/// longest circular run, and sum |p - c| over it when it spans 9 or more.
fn oracle_detect(plane: &[u8], width: usize, height: usize, cfg: &DetectorConfig) -> Vec<Keypoint> {
    let ring = oracle_ring();
    let mut candidates: Vec<(u32, u32, u32)> = Vec::new();
    for y in 3..height - 3 {
        for x in 3..width - 3 {
            let c = plane[y * width + x] as i32;
            let vals: Vec<i32> = ring
                .iter()
                .map(|&(dx, dy)| {
                    plane[(y as i32 + dy) as usize * width + (x as i32 + dx) as usize] as i32
                })
                .collect();
            let mut response = None;
            for polarity in [1i32, -1i32] {
                let hit = |v: i32| polarity * (v - c) > cfg.threshold as i32;
                if vals.iter().all(|&v| hit(v)) {
                    response = Some(vals.iter().map(|&v| (v - c).unsigned_abs()).sum());
                    break;
                }
                let mut best_len = 0usize;
                let mut best_start = 0usize;
                for s in 0..16 {
                    if !hit(vals[s]) || hit(vals[(s + 15) % 16]) {
                        continue; // not the beginning of a run
                    }
                    let mut len = 1;
                    while len < 16 && hit(vals[(s + len) % 16]) {
                        len += 1;
                    }
                    if len > best_len {
                        best_len = len;
                        best_start = s;
                    }
                }
                if best_len >= 9 {
                    response = Some(
                        (0..best_len)
                            .map(|k| (vals[(best_start + k) % 16] - c).unsigned_abs())
                            .sum(),
                    );
                    break;
                }
            }
            if let Some(r) = response {
                candidates.push((x as u32, y as u32, r));
            }
        }
    }

    // Quadratic suppression: drop anything beaten within the radius.
    let r2 = cfg.nms_radius * cfg.nms_radius;
    let mut kept: Vec<(u32, u32, u32)> = candidates
        .iter()
        .filter(|&&(x, y, r)| {
            !candidates.iter().any(|&(ox, oy, or)| {
                let d2 = (x as f64 - ox as f64).powi(2) + (y as f64 - oy as f64).powi(2);
                (ox, oy) != (x, y) && d2 <= r2 && (or > r || (or == r && (oy, ox) < (y, x)))
            })
        })
        .copied()
        .collect();
    kept.sort_by(|a, b| b.2.cmp(&a.2).then_with(|| (a.1, a.0).cmp(&(b.1, b.0))));
    kept.truncate(cfg.max_keypoints);
    kept.into_iter()
        .map(|(x, y, r)| Keypoint {
            x,
            y,
            response: r as f32,
        })
        .collect()
}

#[test]
fn criterion_06_detector_equals_brute_force_oracle() {
    let shapes = [
        (64, 64),
        (48, 64),
        (64, 48),
        (32, 32),
        (48, 48),
        (64, 40),
        (40, 64),
        (56, 56),
        (33, 47),
        (64, 56),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 3);
    let mut total = 0;
    for (i, &(w, h)) in shapes.iter().enumerate() {
        let data: Vec<u8> = (0..w * h).map(|_| rng.random()).collect();
        let img = PlanarImage::gray(w, h, data.clone()).unwrap();
        let cfg = DetectorConfig {
            threshold: [10, 20, 30][i % 3],
            max_keypoints: 512,
            nms_radius: [3.0, 0.0, 5.5][i % 3],
        };
        let fast = detect_fast(&img, &cfg).unwrap();
        let slow = oracle_detect(&data, w, h, &cfg);
        assert_eq!(fast, slow, "image {i} ({w}x{h}) disagrees with the oracle");
        total += fast.len();
    }
    println!("criterion 6 PASS: 10 synthetic images, {total} keypoints, all equal to the oracle");
}

// ---------------------------------------------------------------------------
// 7. Relative improvement display values
// ---------------------------------------------------------------------------

#[test]
fn criterion_07_relative_improvement_display() {
    assert_eq!(relative_improvement_percent(18.6, 36.3), Some(95));
    assert_eq!(relative_improvement_percent(4.3, 18.0), Some(318));
    println!("criterion 7 PASS: (18.6 -> 36.3) displays 95%, (4.3 -> 18.0) displays 318%");
}

// ---------------------------------------------------------------------------
// 8-10. Directional results on the benchmark dataset
// ---------------------------------------------------------------------------

fn benchmark_root() -> Option<PathBuf> {
    if let Ok(dir) = env::var("COLORBITS_OXFORD") {
        let p = PathBuf::from(dir);
        if p.is_dir() {
            return Some(p);
        }
    }
    let fallback = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/oxford");
    fallback.is_dir().then_some(fallback)
}

fn skip(criterion: u32) {
    println!(
        "criterion {criterion} SKIP: benchmark dataset not found \
         (set COLORBITS_OXFORD or place it under data/oxford)"
    );
}

/// Score of one variant in a single-task row set.
fn score_of(rows: &[ReportRow], variant: &str, n_d: usize) -> f64 {
    rows.iter()
        .find(|r| r.variant == variant && r.n_d == n_d)
        .unwrap_or_else(|| panic!("missing row for {variant}/{n_d}"))
        .score
}

fn run_set_task(root: &Path, set: &str, k: usize, variants: &[DescriptorConfig]) -> Vec<ReportRow> {
    let tasks = oxford_tasks(&root.join(set)).unwrap();
    run_pair(&tasks[k - 2], variants, &DetectorConfig::default()).unwrap()
}

#[test]
fn criterion_08_color_wins_on_structured_sets() {
    let Some(root) = benchmark_root() else {
        skip(8);
        return;
    };
    let variants = stock_variants();
    for (set, k) in [
        ("wall", 5),
        ("wall", 6),
        ("graf", 2),
        ("graf", 3),
        ("graf", 5),
    ] {
        let rows = run_set_task(&root, set, k, &variants);
        let gray = score_of(&rows, "gray", 512);
        let rgb = score_of(&rows, "rgb", 512);
        let ycc = score_of(&rows, "ycbcr", 512);
        assert!(
            ycc >= rgb && rgb >= gray,
            "{set} 1|{k}: expected ycbcr >= rgb >= gray, got {ycc:.1} / {rgb:.1} / {gray:.1}"
        );
        for (name, color) in [("rgb", rgb), ("ycbcr", ycc)] {
            assert!(
                color - gray >= 0.15 * gray,
                "{set} 1|{k}: {name} {color:.1} not 15% above gray {gray:.1}"
            );
        }
        println!("criterion 8: {set} 1|{k} gray {gray:.1} rgb {rgb:.1} ycbcr {ycc:.1}");
    }
    println!("criterion 8 PASS: color variants lead by >= 15% relative margin on all five pairs");
}

#[test]
fn criterion_09_color_holds_on_saturated_sets() {
    let Some(root) = benchmark_root() else {
        skip(9);
        return;
    };
    let variants = stock_variants();
    let cells: Vec<(&str, usize)> = [("ubc", 2..5), ("leuven", 2..7), ("bikes", 2..7)]
        .into_iter()
        .flat_map(|(set, ks)| ks.map(move |k| (set, k)))
        .collect();
    for (set, k) in cells {
        let rows = run_set_task(&root, set, k, &variants);
        let gray = score_of(&rows, "gray", 512);
        for variant in ["rgb", "ycbcr"] {
            let color = score_of(&rows, variant, 512);
            assert!(
                color >= gray - 5.0,
                "{set} 1|{k}: {variant} {color:.1} falls more than 5 points behind gray {gray:.1}"
            );
        }
        println!("criterion 9: {set} 1|{k} color holds up against gray");
    }
    println!("criterion 9 PASS: color never falls more than 5 points behind gray");
}

#[test]
fn criterion_10_gray_saturates_earlier_in_bits() {
    let Some(root) = benchmark_root() else {
        skip(10);
        return;
    };
    let variants = build_variants(
        PatternKind::Pair,
        &[ColorSpace::Gray, ColorSpace::YCbCr],
        &[128, 256, 512, 1024],
        &[7],
        WINDOW,
        SEED,
        None,
        SmoothingChoice::FamilyDefault,
    )
    .unwrap();
    let rows = run_set_task(&root, "wall", 5, &variants);
    let gray_gain = score_of(&rows, "gray", 1024) - score_of(&rows, "gray", 512);
    let ycc_gain = score_of(&rows, "ycbcr", 1024) - score_of(&rows, "ycbcr", 512);
    assert!(
        gray_gain < ycc_gain,
        "512 -> 1024 bits: gray gained {gray_gain:.2}, ycbcr only {ycc_gain:.2}"
    );
    println!("criterion 10 PASS: 512 -> 1024 bit gain gray {gray_gain:.2} < ycbcr {ycc_gain:.2}");
}

// ---------------------------------------------------------------------------
// 11. Throughput and the no-conversion fast path
// ---------------------------------------------------------------------------

fn min_time<T>(runs: usize, mut f: impl FnMut() -> T) -> Duration {
    (0..runs)
        .map(|_| {
            let t0 = Instant::now();
            std::hint::black_box(f());
            t0.elapsed()
        })
        .min()
        .unwrap()
}

#[test]
fn criterion_11_throughput_and_conversion_free_rgb() {
    let img = textured_rgb(800, 640, 5);
    let pattern: Pattern = generate_pair_pattern(ColorSpace::Rgb, 512, WINDOW, SEED, None)
        .unwrap()
        .into();
    let cfg = DescriptorConfig::with_defaults(pattern);
    let kps = grid_keypoints(800, 640, required_margin(&cfg) as usize, 1000);
    assert_eq!(kps.len(), 1000);

    // Warm up allocators and the worker pool before timing.
    let (descriptors, conversion) = extract_traced(&img, &kps, &cfg).unwrap();
    assert_eq!(descriptors.len(), 1000);
    assert_eq!(
        conversion,
        SpaceConversion::None,
        "rgb extraction on rgb input must not convert color spaces"
    );

    let t0 = Instant::now();
    let (timed, _) = extract_traced(&img, &kps, &cfg).unwrap();
    let elapsed = t0.elapsed();
    assert_eq!(timed.len(), 1000);
    assert!(
        elapsed < Duration::from_secs(1),
        "512-bit rgb extraction of 1000 keypoints took {elapsed:?}"
    );

    // Comparative timing with smoothing disabled on both sides, so the two
    // extractions perform the same number of samples and differ only in the
    // plane being read. The gray path additionally pays for its conversion.
    let rgb_plain = DescriptorConfig::new(
        generate_pair_pattern(ColorSpace::Rgb, 512, WINDOW, SEED, None)
            .unwrap()
            .into(),
        None,
    )
    .unwrap();
    let gray_plain = DescriptorConfig::new(
        generate_pair_pattern(ColorSpace::Gray, 512, WINDOW, SEED, None)
            .unwrap()
            .into(),
        None,
    )
    .unwrap();
    let gray_img = to_gray(&img).unwrap();

    let rgb_time = min_time(7, || extract(&img, &kps, &rgb_plain).unwrap());
    let gray_time = min_time(7, || extract(&gray_img, &kps, &gray_plain).unwrap());
    let conversion_time = min_time(7, || to_gray(&img).unwrap());
    assert!(
        rgb_time <= gray_time + conversion_time,
        "rgb {rgb_time:?} slower than gray {gray_time:?} + conversion {conversion_time:?}"
    );

    println!(
        "criterion 11 PASS: 1000x512-bit rgb extraction in {elapsed:?}; no conversion; \
         rgb {rgb_time:?} <= gray {gray_time:?} + conversion {conversion_time:?}"
    );
}
