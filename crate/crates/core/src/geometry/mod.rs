//! Spatial verification of a loop candidate.
//!
//! Points are matched by Hamming distance with a ratio test. Lines are
//! matched the same way after discarding neighbours whose orientation,
//! corrected by the global in-plane rotation between the frames, disagrees
//! with the query line. Matched line endpoints join the point
//! correspondences in a RANSAC estimate of the fundamental matrix; a line
//! counts as an inlier when at least one of its endpoint pairs fits.

mod epipolar;
mod matching;
mod verify;

pub use epipolar::{eight_point, sampson_weight, symmetric_epipolar_distance, weighted_eight_point, Fundamental};
pub use matching::{
    global_rotation, match_lines, match_points, pair_endpoints, relative_orientation, RotationEstimate,
};
pub use verify::{match_frames, verify, verify_frames};

use crate::error::{Error, Result};

/// Which line matcher to run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LineMatcher {
    /// Orientation filter followed by the ratio test.
    Filtered,
    /// Ratio test on descriptors only.
    PlainNndr,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GeometryConfig {
    pub nndr_ratio: f64,
    /// Fallback acceptance when fewer than two neighbours exist.
    pub single_match_max_distance: u32,
    /// Radians.
    pub alpha_max: f64,
    /// Histogram bin width for the global rotation, radians.
    pub rotation_bin: f64,
    /// Minimum share of votes in the dominant bin for the rotation to be trusted.
    pub rotation_salience: f64,
    /// Only line pairs this close in Hamming distance vote for the rotation.
    pub rotation_prefilter: u32,
    pub line_matcher: LineMatcher,
    pub ransac_max_iterations: usize,
    pub ransac_confidence: f64,
    /// Pixels, symmetric epipolar distance.
    pub epipolar_tolerance: f64,
    pub min_inliers: usize,
    pub seed: u64,
}

impl Default for GeometryConfig {
    fn default() -> Self {
        GeometryConfig {
            nndr_ratio: 0.8,
            single_match_max_distance: 64,
            alpha_max: 10f64.to_radians(),
            rotation_bin: 10f64.to_radians(),
            rotation_salience: 0.1,
            rotation_prefilter: 64,
            line_matcher: LineMatcher::Filtered,
            ransac_max_iterations: 2000,
            ransac_confidence: 0.99,
            epipolar_tolerance: 3.0,
            min_inliers: 12,
            seed: 0,
        }
    }
}

impl GeometryConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.nndr_ratio > 0.0 && self.nndr_ratio <= 1.0) {
            return Err(Error::Config("nndr_ratio must be in (0, 1]".into()));
        }
        if !(self.rotation_bin > 0.0) {
            return Err(Error::Config("rotation bin width must be positive".into()));
        }
        if !(self.ransac_confidence > 0.0 && self.ransac_confidence < 1.0) {
            return Err(Error::Config("ransac_confidence must be in (0, 1)".into()));
        }
        if !(self.epipolar_tolerance > 0.0) {
            return Err(Error::Config("epipolar tolerance must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PointMatch {
    pub query: usize,
    pub train: usize,
    pub distance: u32,
}

/// How a matched line's endpoints correspond.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EndpointPairing {
    /// start with start, end with end.
    Parallel,
    /// start with end, end with start.
    Crossed,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LineMatch {
    pub query: usize,
    pub train: usize,
    pub distance: u32,
    pub pairing: EndpointPairing,
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct MatchSet {
    pub point_matches: Vec<PointMatch>,
    pub line_matches: Vec<LineMatch>,
    /// Global rotation used for line matching and endpoint pairing, radians.
    pub theta_g: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct VerificationResult {
    pub accepted: bool,
    /// Rank 2, unit Frobenius norm; `None` when no model was found.
    pub fundamental: Option<Fundamental>,
    pub point_inliers: usize,
    pub line_inliers: usize,
    pub theta_g: f64,
    /// One flag per entry of `MatchSet::point_matches`.
    pub point_inlier_mask: Vec<bool>,
    /// One flag per entry of `MatchSet::line_matches`.
    pub line_inlier_mask: Vec<bool>,
}

impl VerificationResult {
    pub fn rejected(theta_g: f64, n_points: usize, n_lines: usize) -> Self {
        VerificationResult {
            accepted: false,
            fundamental: None,
            point_inliers: 0,
            line_inliers: 0,
            theta_g,
            point_inlier_mask: vec![false; n_points],
            line_inlier_mask: vec![false; n_lines],
        }
    }

    pub fn total_inliers(&self) -> usize {
        self.point_inliers + self.line_inliers
    }
}
