//! Binary local-feature descriptors with color sampling.
//!
//! The crate implements pixel-pair (BRIEF-style) and patch-triplet
//! (LATCH-style) binary descriptors whose sampling patterns live in three
//! dimensions: two spatial offsets plus a color channel. Patterns can be
//! drawn in grayscale (the classical setup), in RGB (cross-channel
//! comparisons, no grayscale conversion), or in YCbCr (luma-only tests mixed
//! with chroma-only tests). Descriptors are packed bitstrings matched by
//! Hamming distance, and an evaluation harness scores matching performance
//! over image pairs related by a ground-truth homography.
//!
//! Module map:
//!
//! * [`imagery`] — planar 8-bit images, PNM I/O, color conversions, Gaussian
//!   smoothing.
//! * [`patterns`] — seeded generation and (de)serialization of sampling
//!   patterns.
//! * [`descriptors`] — binary tests and packed descriptor extraction.
//! * [`detect`] — a deterministic FAST-9 corner detector.
//! * [`matching`] — Hamming distance and brute-force nearest-neighbor
//!   matching.
//! * [`evaluation`] — the homography-mapped matching-score protocol and
//!   report generation.

pub mod descriptors;
pub mod detect;
mod error;
pub mod evaluation;
pub mod imagery;
pub mod matching;
pub mod patterns;

pub use error::{Error, Result};
