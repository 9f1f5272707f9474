//! Hamming distance and brute-force nearest-neighbor matching over packed
//! descriptors.
//!
//! Distances are computed word-wise with XOR and population count; padding
//! bits are zero in every live [`Descriptor`], so they never contribute.
//! Matching is exhaustive: with the evaluation protocol's few hundred
//! targets per image, an index structure would only obscure the oracle.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::descriptors::Descriptor;
use crate::{Error, Result};

/// Nearest-neighbor outcome for one query descriptor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MatchResult {
    pub query_index: usize,
    pub best_index: usize,
    /// Hamming distance to the best target.
    pub distance: u32,
    /// Distance to the runner-up; equals `distance` when only one target
    /// exists. Exposed for ratio diagnostics, never used for scoring.
    pub second_distance: u32,
}

/// Number of differing bits between two equally sized descriptors.
pub fn hamming(a: &Descriptor, b: &Descriptor) -> Result<u32> {
    if a.n_d() != b.n_d() {
        return Err(Error::LengthMismatch {
            a: a.n_d(),
            b: b.n_d(),
        });
    }
    Ok(a.words()
        .iter()
        .zip(b.words())
        .map(|(x, y)| (x ^ y).count_ones())
        .sum())
}

fn nearest(query_index: usize, query: &Descriptor, targets: &[Descriptor]) -> Result<MatchResult> {
    let mut best = (u32::MAX, 0usize);
    let mut second = u32::MAX;
    for (i, t) in targets.iter().enumerate() {
        let d = hamming(query, t)?;
        if d < best.0 {
            second = best.0;
            best = (d, i);
        } else if d < second {
            second = d;
        }
    }
    if second == u32::MAX {
        second = best.0;
    }
    Ok(MatchResult {
        query_index,
        best_index: best.1,
        distance: best.0,
        second_distance: second,
    })
}

/// Match every query against all targets, returning one result per query in
/// query order. Distance ties go to the lowest target index, so output is
/// deterministic regardless of execution order.
pub fn match_nearest(queries: &[Descriptor], targets: &[Descriptor]) -> Result<Vec<MatchResult>> {
    if targets.is_empty() {
        return Err(Error::EmptyTargets);
    }
    #[cfg(feature = "parallel")]
    {
        queries
            .par_iter()
            .enumerate()
            .map(|(i, q)| nearest(i, q, targets))
            .collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        queries
            .iter()
            .enumerate()
            .map(|(i, q)| nearest(i, q, targets))
            .collect()
    }
}

const MATCH_CSV_HEADER: &str = "query_index,best_index,distance,second_distance";

/// Write match results as CSV with a fixed header line.
pub fn save_matches(path: &Path, matches: &[MatchResult]) -> Result<()> {
    let mut out = String::with_capacity(matches.len() * 16 + 40);
    out.push_str(MATCH_CSV_HEADER);
    out.push('\n');
    for m in matches {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            m.query_index, m.best_index, m.distance, m.second_distance
        );
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}
