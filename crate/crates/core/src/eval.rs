//! Precision-recall evaluation of decision logs against ground truth.
//!
//! Ground truth is text: `G <query_id> <match_id>` per valid pair and an
//! optional `TOL <n>` header. A detection `(q, m)` is correct when some
//! `(q, m')` is listed with `|m - m'| <= n`. Precision with no detections is 1.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{match_frames, verify, GeometryConfig, LineMatcher, VerificationResult};
use crate::pipeline::{LoopDecision, LoopStatus};
use crate::types::{FrameFeatures, FrameId};

#[derive(Clone, Debug, Default, PartialEq)]
pub struct GroundTruth {
    pub pairs: BTreeSet<(FrameId, FrameId)>,
    pub tolerance: u64,
}

impl GroundTruth {
    pub fn parse(text: &str) -> Result<Self> {
        let mut gt = GroundTruth::default();
        let mut seen_pair = false;
        for (i, line) in text.lines().enumerate() {
            let line_no = i + 1;
            let content = line.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let tok: Vec<&str> = content.split_whitespace().collect();
            let num = |s: &str| {
                s.parse::<u64>()
                    .map_err(|_| Error::parse(line_no, format!("invalid number {s:?}")))
            };
            match tok.as_slice() {
                ["TOL", n] if !seen_pair => gt.tolerance = num(n)?,
                ["TOL", _] => return Err(Error::parse(line_no, "TOL must precede all pairs")),
                ["G", q, m] => {
                    gt.pairs.insert((num(q)?, num(m)?));
                    seen_pair = true;
                }
                _ => return Err(Error::parse(line_no, format!("unrecognized record {content:?}"))),
            }
        }
        Ok(gt)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("TOL {}\n", self.tolerance);
        for (q, m) in &self.pairs {
            out.push_str(&format!("G {q} {m}\n"));
        }
        out
    }

    /// Queries that have at least one valid match.
    pub fn queries(&self) -> BTreeSet<FrameId> {
        self.pairs.iter().map(|&(q, _)| q).collect()
    }

    pub fn is_correct(&self, query: FrameId, matched: FrameId) -> bool {
        let lo = matched.saturating_sub(self.tolerance);
        let hi = matched.saturating_add(self.tolerance);
        self.pairs.range((query, lo)..=(query, hi)).next().is_some()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PrPoint {
    /// The `min_inliers` value this point was computed at.
    pub threshold: usize,
    pub precision: f64,
    pub recall: f64,
    pub tp: usize,
    pub fp: usize,
}

fn pr(tp: usize, fp: usize, positives: usize) -> (f64, f64) {
    let precision = if tp + fp == 0 {
        1.0
    } else {
        tp as f64 / (tp + fp) as f64
    };
    let recall = if positives == 0 {
        0.0
    } else {
        tp as f64 / positives as f64
    };
    (precision, recall)
}

/// Every frame `gt` mentions must appear in the log.
fn check_ids(decisions: &[LoopDecision], gt: &GroundTruth) -> Result<()> {
    let known: BTreeSet<FrameId> = decisions.iter().map(|d| d.frame_id).collect();
    let offending: BTreeSet<FrameId> = gt
        .pairs
        .iter()
        .flat_map(|&(q, m)| [q, m])
        .filter(|f| !known.contains(f))
        .collect();
    if offending.is_empty() {
        Ok(())
    } else {
        Err(Error::SequenceMismatch(offending.into_iter().collect()))
    }
}

fn classify<'a>(accepted: impl Iterator<Item = &'a LoopDecision>, gt: &GroundTruth) -> (usize, usize) {
    let mut tp = 0;
    let mut fp = 0;
    for d in accepted {
        match d.matched {
            Some(m) if gt.is_correct(d.frame_id, m) => tp += 1,
            _ => fp += 1,
        }
    }
    (tp, fp)
}

/// Classifies each accepted decision and returns precision and recall.
pub fn score_run(decisions: &[LoopDecision], gt: &GroundTruth) -> Result<PrPoint> {
    check_ids(decisions, gt)?;
    let (tp, fp) = classify(decisions.iter().filter(|d| d.is_accepted()), gt);
    let (precision, recall) = pr(tp, fp, gt.queries().len());
    Ok(PrPoint {
        threshold: 0,
        precision,
        recall,
        tp,
        fp,
    })
}

/// Replays the inlier counts of a run made at the lowest threshold: a frame
/// that reached verification is accepted at `threshold` when its total inlier
/// count is at least `threshold`. The accepted set therefore shrinks as the
/// threshold rises.
pub fn pr_sweep(decisions: &[LoopDecision], gt: &GroundTruth, thresholds: &[usize]) -> Result<Vec<PrPoint>> {
    check_ids(decisions, gt)?;
    let positives = gt.queries().len();
    let verified: Vec<&LoopDecision> = decisions
        .iter()
        .filter(|d| d.status != LoopStatus::NoCandidates && d.matched.is_some())
        .collect();
    Ok(thresholds
        .par_iter()
        .map(|&threshold| {
            let (tp, fp) = classify(verified.iter().copied().filter(|d| d.total_inliers() >= threshold), gt);
            let (precision, recall) = pr(tp, fp, positives);
            PrPoint {
                threshold,
                precision,
                recall,
                tp,
                fp,
            }
        })
        .collect())
}

/// Highest recall among points with precision 1, or 0.
pub fn max_recall_at_full_precision(points: &[PrPoint]) -> f64 {
    points
        .iter()
        .filter(|p| p.precision == 1.0)
        .map(|p| p.recall)
        .fold(0.0, f64::max)
}

pub fn pr_csv(points: &[PrPoint]) -> String {
    let mut out = String::from("threshold,precision,recall,tp,fp\n");
    for p in points {
        out.push_str(&format!(
            "{},{:?},{:?},{},{}\n",
            p.threshold, p.precision, p.recall, p.tp, p.fp
        ));
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalSummary {
    pub precision: f64,
    pub recall: f64,
    pub tp: usize,
    pub fp: usize,
    pub max_recall_at_p100: f64,
}

/// Scores a single run. Its maximum recall at full precision is its recall
/// if it made no false detection, else 0.
pub fn summarize(decisions: &[LoopDecision], gt: &GroundTruth) -> Result<EvalSummary> {
    let p = score_run(decisions, gt)?;
    Ok(EvalSummary {
        precision: p.precision,
        recall: p.recall,
        tp: p.tp,
        fp: p.fp,
        max_recall_at_p100: if p.precision == 1.0 { p.recall } else { 0.0 },
    })
}

impl fmt::Display for EvalSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "precision = {:?}", self.precision)?;
        writeln!(f, "recall = {:?}", self.recall)?;
        writeln!(f, "tp = {}", self.tp)?;
        writeln!(f, "fp = {}", self.fp)?;
        writeln!(f, "max_recall_at_p100 = {:?}", self.max_recall_at_p100)
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct LineInlierTable {
    pub pairs: usize,
    pub nndr_mean: f64,
    pub proposed_mean: f64,
}

impl fmt::Display for LineInlierTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "pairs = {}", self.pairs)?;
        writeln!(f, "matcher\tmean_line_inliers")?;
        writeln!(f, "nndr\t{:.2}", self.nndr_mean)?;
        writeln!(f, "proposed\t{:.2}", self.proposed_mean)
    }
}

fn verify_with(
    ft: &FrameFeatures,
    fc: &FrameFeatures,
    cfg: &GeometryConfig,
    matcher: LineMatcher,
) -> VerificationResult {
    let cfg = GeometryConfig {
        line_matcher: matcher,
        ..cfg.clone()
    };
    verify(ft, fc, &match_frames(ft, fc, &cfg), &cfg)
}

/// Verifies every pair with both line matchers and averages line inliers.
pub fn line_inlier_ab(pairs: &[(&FrameFeatures, &FrameFeatures)], cfg: &GeometryConfig) -> LineInlierTable {
    if pairs.is_empty() {
        return LineInlierTable::default();
    }
    let counts: Vec<(usize, usize)> = pairs
        .par_iter()
        .map(|(ft, fc)| {
            (
                verify_with(ft, fc, cfg, LineMatcher::PlainNndr).line_inliers,
                verify_with(ft, fc, cfg, LineMatcher::Filtered).line_inliers,
            )
        })
        .collect();
    let n = pairs.len() as f64;
    LineInlierTable {
        pairs: pairs.len(),
        nndr_mean: counts.iter().map(|c| c.0 as f64).sum::<f64>() / n,
        proposed_mean: counts.iter().map(|c| c.1 as f64).sum::<f64>() / n,
    }
}

/// The accepted `(query, match)` pairs of a run, looked up in `frames`.
pub fn accepted_pairs<'a>(
    decisions: &[LoopDecision],
    frames: &'a BTreeMap<FrameId, FrameFeatures>,
) -> Vec<(&'a FrameFeatures, &'a FrameFeatures)> {
    decisions
        .iter()
        .filter(|d| d.is_accepted())
        .filter_map(|d| Some((frames.get(&d.frame_id)?, frames.get(&d.matched?)?)))
        .collect()
}
