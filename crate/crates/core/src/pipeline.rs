//! Per-frame loop-closure detection.
//!
//! Each frame queries the point and line vocabularies, is then added to
//! both, and the fused candidates are grouped into islands. The
//! representative of the selected island is checked geometrically; a
//! verified island is preferred at the next frame. Recent frames inside the
//! gating window are never candidates.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::time::Instant;

use crate::error::{Error, Result};
use crate::features::ExtractionConfig;
use crate::fusion::{merge_lists, FusionConfig};
use crate::geometry::{verify_frames, GeometryConfig};
use crate::islands::{build_islands, retain_for_next, select_island, Island};
use crate::types::{FrameFeatures, FrameId};
use crate::vocab::{BinaryIndex, CandidateList, VocabConfig};

#[derive(Clone, Debug, PartialEq)]
pub struct PipelineConfig {
    pub extraction: ExtractionConfig,
    pub vocab: VocabConfig,
    pub fusion: FusionConfig,
    pub island_gap: u64,
    pub geometry: GeometryConfig,
    /// Frames `f >= t - gating_window` are not candidates for frame `t`.
    pub gating_window: u64,
    pub seed: u64,
    /// When false, every stage timing is written as zero so logs are reproducible.
    pub record_timings: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            extraction: ExtractionConfig::default(),
            vocab: VocabConfig::default(),
            fusion: FusionConfig::default(),
            island_gap: 3,
            geometry: GeometryConfig::default(),
            gating_window: 60,
            seed: 0,
            record_timings: true,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        self.extraction.validate()?;
        self.vocab.validate()?;
        self.geometry.validate()?;
        if !(self.fusion.penalty_factor >= 0.0) {
            return Err(Error::Config("penalty_factor must be non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LoopStatus {
    NoCandidates,
    RejectedVerification,
    Accepted,
}

impl LoopStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            LoopStatus::NoCandidates => "no_candidates",
            LoopStatus::RejectedVerification => "rejected_verification",
            LoopStatus::Accepted => "accepted",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "no_candidates" => Some(LoopStatus::NoCandidates),
            "rejected_verification" => Some(LoopStatus::RejectedVerification),
            "accepted" => Some(LoopStatus::Accepted),
            _ => None,
        }
    }
}

/// Milliseconds per stage.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct StageTimings {
    pub feature_extraction: f64,
    pub vocabulary_update: f64,
    pub candidate_search: f64,
    pub spatial_verification: f64,
}

impl StageTimings {
    pub fn total(&self) -> f64 {
        self.feature_extraction + self.vocabulary_update + self.candidate_search + self.spatial_verification
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LoopDecision {
    pub frame_id: FrameId,
    pub status: LoopStatus,
    /// The verified frame, or the rejected representative.
    pub matched: Option<FrameId>,
    pub beta: Option<f64>,
    pub point_inliers: usize,
    pub line_inliers: usize,
    pub timings: StageTimings,
}

impl LoopDecision {
    pub fn is_accepted(&self) -> bool {
        self.status == LoopStatus::Accepted
    }

    pub fn total_inliers(&self) -> usize {
        self.point_inliers + self.line_inliers
    }

    /// One tab-separated decision-log line, without the newline.
    pub fn to_log_line(&self) -> String {
        let t = &self.timings;
        format!(
            "{}\t{}\t{}\t{}\t{}\t{}\t{:.3}\t{:.3}\t{:.3}\t{:.3}",
            self.frame_id,
            self.status.as_str(),
            self.matched.map_or("-".to_string(), |m| m.to_string()),
            self.beta.map_or("-".to_string(), |b| b.to_string()),
            self.point_inliers,
            self.line_inliers,
            t.feature_extraction,
            t.vocabulary_update,
            t.candidate_search,
            t.spatial_verification,
        )
    }

    pub fn parse_log_line(line: &str, line_no: usize) -> Result<Self> {
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != 10 {
            return Err(Error::parse(line_no, format!("expected 10 fields, found {}", f.len())));
        }
        let bad = |what: &str| Error::parse(line_no, format!("invalid {what}"));
        let num = |s: &str, what: &str| s.parse::<f64>().map_err(|_| bad(what));
        let opt = |s: &str| s != "-";
        Ok(LoopDecision {
            frame_id: f[0].parse().map_err(|_| bad("frame id"))?,
            status: LoopStatus::parse(f[1]).ok_or_else(|| bad("status"))?,
            matched: if opt(f[2]) {
                Some(f[2].parse().map_err(|_| bad("matched id"))?)
            } else {
                None
            },
            beta: if opt(f[3]) { Some(num(f[3], "beta")?) } else { None },
            point_inliers: f[4].parse().map_err(|_| bad("point inliers"))?,
            line_inliers: f[5].parse().map_err(|_| bad("line inliers"))?,
            timings: StageTimings {
                feature_extraction: num(f[6], "timing")?,
                vocabulary_update: num(f[7], "timing")?,
                candidate_search: num(f[8], "timing")?,
                spatial_verification: num(f[9], "timing")?,
            },
        })
    }
}

pub fn write_decision_log(decisions: &[LoopDecision]) -> String {
    decisions.iter().map(|d| d.to_log_line() + "\n").collect()
}

pub fn parse_decision_log(text: &str) -> Result<Vec<LoopDecision>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'))
        .map(|(i, l)| LoopDecision::parse_log_line(l, i + 1))
        .collect()
}

fn elapsed_ms(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

/// Seed for verifying `query` against `candidate`, so RANSAC does not depend
/// on how many frames were verified before.
fn pair_seed(seed: u64, query: FrameId, candidate: FrameId) -> u64 {
    let mut z = seed ^ query.wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ candidate.rotate_left(32);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub struct Pipeline {
    cfg: PipelineConfig,
    points: BinaryIndex,
    lines: BinaryIndex,
    history: BTreeMap<FrameId, FrameFeatures>,
    retained: Option<Island>,
    last_frame: Option<FrameId>,
}

impl Pipeline {
    pub fn new(cfg: PipelineConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Pipeline {
            points: BinaryIndex::new(cfg.vocab.clone()),
            lines: BinaryIndex::new(cfg.vocab.clone()),
            cfg,
            history: BTreeMap::new(),
            retained: None,
            last_frame: None,
        })
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.cfg
    }

    pub fn point_index(&self) -> &BinaryIndex {
        &self.points
    }

    pub fn line_index(&self) -> &BinaryIndex {
        &self.lines
    }

    pub fn retained_island(&self) -> Option<&Island> {
        self.retained.as_ref()
    }

    pub fn process_frame(&mut self, features: FrameFeatures) -> Result<LoopDecision> {
        self.process_frame_timed(features, 0.0)
    }

    /// As [`process_frame`](Self::process_frame), reporting `extraction_ms`
    /// as the feature-extraction time.
    pub fn process_frame_timed(&mut self, features: FrameFeatures, extraction_ms: f64) -> Result<LoopDecision> {
        let t = features.frame_id;
        if self.last_frame.is_some_and(|last| t <= last) {
            return Err(Error::Usage(format!(
                "frame {t} arrived after frame {}",
                self.last_frame.unwrap_or_default()
            )));
        }
        let point_desc = features.point_descriptors();
        let line_desc = features.line_descriptors();
        let max = self.cfg.vocab.max_results;

        let search_start = Instant::now();
        let (mut point_list, mut line_list) = match t.checked_sub(self.cfg.gating_window) {
            Some(before) if before > 0 => rayon::join(
                || self.points.query_before(&point_desc, max, Some(before)),
                || self.lines.query_before(&line_desc, max, Some(before)),
            ),
            _ => (CandidateList::default(), CandidateList::default()),
        };
        point_list.query = t;
        line_list.query = t;
        let mut search_ms = elapsed_ms(search_start);

        let update_start = Instant::now();
        let (points, lines) = (&mut self.points, &mut self.lines);
        let (rp, rl) = rayon::join(
            || points.insert_frame(t, &point_desc),
            || lines.insert_frame(t, &line_desc),
        );
        rp?;
        rl?;
        let update_ms = elapsed_ms(update_start);

        let fuse_start = Instant::now();
        let fused = merge_lists(&point_list, &line_list, &self.cfg.fusion);
        let islands = build_islands(&fused, self.cfg.island_gap);
        let selection = select_island(&islands, self.retained.as_ref());
        search_ms += elapsed_ms(fuse_start);

        let verify_start = Instant::now();
        let mut decision = LoopDecision {
            frame_id: t,
            status: LoopStatus::NoCandidates,
            matched: None,
            beta: None,
            point_inliers: 0,
            line_inliers: 0,
            timings: StageTimings::default(),
        };
        let mut verified = false;
        if let Some(sel) = &selection {
            let candidate = &self.history[&sel.representative];
            let geometry = GeometryConfig {
                seed: pair_seed(self.cfg.seed, t, sel.representative),
                ..self.cfg.geometry.clone()
            };
            let (_, result) = verify_frames(&features, candidate, &geometry);
            verified = result.accepted;
            decision.status = if verified {
                LoopStatus::Accepted
            } else {
                LoopStatus::RejectedVerification
            };
            decision.matched = Some(sel.representative);
            decision.beta = Some(sel.representative_beta);
            decision.point_inliers = result.point_inliers;
            decision.line_inliers = result.line_inliers;
            log::debug!(
                "frame {t}: island [{}, {}] rep {} inliers {}+{} -> {}",
                sel.island.m,
                sel.island.n,
                sel.representative,
                result.point_inliers,
                result.line_inliers,
                decision.status.as_str()
            );
        }
        self.retained = retain_for_next(selection.as_ref(), verified);
        let verify_ms = elapsed_ms(verify_start);

        if self.cfg.record_timings {
            decision.timings = StageTimings {
                feature_extraction: extraction_ms,
                vocabulary_update: update_ms,
                candidate_search: search_ms,
                spatial_verification: if selection.is_some() { verify_ms } else { 0.0 },
            };
        }
        self.history.insert(t, features);
        self.last_frame = Some(t);
        Ok(decision)
    }
}

/// One frame from a source, with the time spent producing its features.
pub struct FrameInput {
    pub features: FrameFeatures,
    pub extraction_ms: f64,
}

impl From<FrameFeatures> for FrameInput {
    fn from(features: FrameFeatures) -> Self {
        FrameInput {
            features,
            extraction_ms: 0.0,
        }
    }
}

/// Counts and mean stage timings over a run.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunSummary {
    pub frames: usize,
    pub accepted: usize,
    pub rejected: usize,
    pub no_candidates: usize,
    pub mean: StageTimings,
}

impl RunSummary {
    pub fn from_decisions(decisions: &[LoopDecision]) -> Self {
        let mut s = RunSummary::default();
        for d in decisions {
            s.add(d);
        }
        s.finish();
        s
    }

    fn add(&mut self, d: &LoopDecision) {
        self.frames += 1;
        match d.status {
            LoopStatus::Accepted => self.accepted += 1,
            LoopStatus::RejectedVerification => self.rejected += 1,
            LoopStatus::NoCandidates => self.no_candidates += 1,
        }
        let m = &mut self.mean;
        m.feature_extraction += d.timings.feature_extraction;
        m.vocabulary_update += d.timings.vocabulary_update;
        m.candidate_search += d.timings.candidate_search;
        m.spatial_verification += d.timings.spatial_verification;
    }

    fn finish(&mut self) {
        if self.frames > 0 {
            let n = self.frames as f64;
            let m = &mut self.mean;
            m.feature_extraction /= n;
            m.vocabulary_update /= n;
            m.candidate_search /= n;
            m.spatial_verification /= n;
        }
    }
}

impl fmt::Display for RunSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "frames = {}", self.frames)?;
        writeln!(f, "accepted = {}", self.accepted)?;
        writeln!(f, "rejected_verification = {}", self.rejected)?;
        writeln!(f, "no_candidates = {}", self.no_candidates)?;
        writeln!(
            f,
            "{:<8}{:>10}{:>10}{:>10}{:>10}{:>10}",
            "", "FE", "VU", "SC", "SV", "Total"
        )?;
        let m = &self.mean;
        writeln!(
            f,
            "{:<8}{:>10.2}{:>10.2}{:>10.2}{:>10.2}{:>10.2}",
            "mean_ms",
            m.feature_extraction,
            m.vocabulary_update,
            m.candidate_search,
            m.spatial_verification,
            m.total()
        )
    }
}

/// Streams every frame through a fresh pipeline, passing each decision to
/// `sink`. Errors are tagged with the frame they occurred on.
pub fn run_sequence<I, S>(source: I, cfg: &PipelineConfig, mut sink: S) -> Result<RunSummary>
where
    I: IntoIterator<Item = Result<FrameInput>>,
    S: FnMut(&LoopDecision) -> Result<()>,
{
    let mut pipeline = Pipeline::new(cfg.clone())?;
    let mut summary = RunSummary::default();
    for (position, item) in source.into_iter().enumerate() {
        let input = item.map_err(|e| Error::Frame {
            frame: position as u64,
            source: Box::new(e),
        })?;
        let frame = input.features.frame_id;
        let tag = |e: Error| Error::Frame {
            frame,
            source: Box::new(e),
        };
        let decision = pipeline
            .process_frame_timed(input.features, input.extraction_ms)
            .map_err(tag)?;
        sink(&decision).map_err(tag)?;
        summary.add(&decision);
    }
    summary.finish();
    Ok(summary)
}

/// Runs a sequence held in memory and returns every decision.
pub fn run_features(frames: &[FrameFeatures], cfg: &PipelineConfig) -> Result<(Vec<LoopDecision>, RunSummary)> {
    let mut out = Vec::with_capacity(frames.len());
    let summary = run_sequence(frames.iter().cloned().map(|f| Ok(FrameInput::from(f))), cfg, |d| {
        out.push(d.clone());
        Ok(())
    })?;
    Ok((out, summary))
}

/// A sink writing decision-log lines.
pub fn log_writer<W: Write>(mut w: W) -> impl FnMut(&LoopDecision) -> Result<()> {
    move |d| writeln!(w, "{}", d.to_log_line()).map_err(|e| Error::io("decision log", e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Descriptor;

    fn frame(id: FrameId) -> FrameFeatures {
        FrameFeatures::new(id)
    }

    #[test]
    fn first_frame_has_no_candidates() {
        let mut p = Pipeline::new(PipelineConfig::default()).unwrap();
        let d = p.process_frame(frame(0)).unwrap();
        assert_eq!(d.status, LoopStatus::NoCandidates);
        assert_eq!(d.matched, None);
    }

    #[test]
    fn out_of_order_is_usage_error() {
        let mut p = Pipeline::new(PipelineConfig::default()).unwrap();
        p.process_frame(frame(5)).unwrap();
        assert!(matches!(p.process_frame(frame(5)), Err(Error::Usage(_))));
        assert!(matches!(p.process_frame(frame(3)), Err(Error::Usage(_))));
        p.process_frame(frame(6)).unwrap();
    }

    #[test]
    fn empty_frames_still_update_vocabularies() {
        let mut p = Pipeline::new(PipelineConfig::default()).unwrap();
        let mut f = frame(0);
        f.lines
            .push((crate::LineSegment::new([0.0, 0.0], [30.0, 0.0]), Descriptor::ones()));
        p.process_frame(f).unwrap();
        assert_eq!(p.point_index().frame_count(), 1);
        assert_eq!(p.line_index().frame_count(), 1);
        assert_eq!(p.line_index().tree().word_count(), 1);
    }

    #[test]
    fn log_line_round_trip() {
        let d = LoopDecision {
            frame_id: 12,
            status: LoopStatus::RejectedVerification,
            matched: Some(3),
            beta: Some(2.190890230020664),
            point_inliers: 7,
            line_inliers: 2,
            timings: StageTimings {
                feature_extraction: 1.5,
                vocabulary_update: 0.25,
                candidate_search: 3.0,
                spatial_verification: 0.125,
            },
        };
        let line = d.to_log_line();
        assert_eq!(line.split('\t').count(), 10);
        assert_eq!(LoopDecision::parse_log_line(&line, 1).unwrap(), d);
        let none = LoopDecision {
            matched: None,
            beta: None,
            status: LoopStatus::NoCandidates,
            ..d
        };
        assert_eq!(
            parse_decision_log(&write_decision_log(&[none.clone()])).unwrap(),
            vec![none]
        );
        assert!(LoopDecision::parse_log_line("1\tmaybe", 4).is_err());
    }

    #[test]
    fn empty_source_gives_empty_summary() {
        let (d, s) = run_features(&[], &PipelineConfig::default()).unwrap();
        assert!(d.is_empty());
        assert_eq!(s, RunSummary::default());
    }

    #[test]
    fn source_errors_carry_frame_context() {
        let src = vec![Ok(FrameInput::from(frame(0))), Err(Error::Format("bad".into()))];
        let err = run_sequence(src, &PipelineConfig::default(), |_| Ok(())).unwrap_err();
        assert!(matches!(err, Error::Frame { frame: 1, .. }));
    }

    #[test]
    fn pair_seed_depends_on_both_ids() {
        assert_ne!(pair_seed(0, 1, 2), pair_seed(0, 2, 1));
        assert_eq!(pair_seed(7, 100, 3), pair_seed(7, 100, 3));
    }
}
