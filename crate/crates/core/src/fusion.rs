//! Late fusion of the point and line candidate lists by a similarity-weighted
//! Borda count.
//!
//! Each list votes for its top `c` entries with `b = (c - i) * s̃` where `i`
//! is the zero-based rank. A frame voted by both lists scores the geometric
//! mean `sqrt(b_p * b_l)`; a frame voted by only one list scores
//! `penalty_factor * b`. When one list is empty the other decides alone and
//! `c` is its length.

use std::collections::BTreeMap;

use crate::types::FrameId;
use crate::vocab::CandidateList;

#[derive(Clone, Debug, PartialEq)]
pub struct FusionConfig {
    pub penalty_factor: f64,
}

impl Default for FusionConfig {
    fn default() -> Self {
        FusionConfig { penalty_factor: 0.5 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FusedCandidate {
    pub frame_id: FrameId,
    pub b_p: Option<f64>,
    pub b_l: Option<f64>,
    pub beta: f64,
}

/// Number of ranks each list votes for.
pub fn vote_count(points_len: usize, lines_len: usize) -> usize {
    match (points_len, lines_len) {
        (0, n) | (n, 0) => n,
        (p, l) => p.min(l),
    }
}

/// Borda scores of the top `c` entries, in list order.
pub fn borda_rank(list: &CandidateList, c: usize) -> Vec<(FrameId, f64)> {
    list.entries
        .iter()
        .take(c)
        .enumerate()
        .map(|(i, e)| (e.frame_id, (c - i) as f64 * e.normalized))
        .collect()
}

/// The fused list, `beta` descending with ties to the lower frame id.
pub fn merge_lists(points: &CandidateList, lines: &CandidateList, cfg: &FusionConfig) -> Vec<FusedCandidate> {
    let c = vote_count(points.len(), lines.len());
    let mut votes: BTreeMap<FrameId, (Option<f64>, Option<f64>)> = BTreeMap::new();
    for (f, b) in borda_rank(points, c) {
        votes.entry(f).or_default().0 = Some(b);
    }
    for (f, b) in borda_rank(lines, c) {
        votes.entry(f).or_default().1 = Some(b);
    }
    let mut fused: Vec<FusedCandidate> = votes
        .into_iter()
        .map(|(frame_id, (b_p, b_l))| {
            let beta = match (b_p, b_l) {
                (Some(p), Some(l)) => (p * l).sqrt(),
                (Some(b), None) | (None, Some(b)) => cfg.penalty_factor * b,
                (None, None) => unreachable!("every entry has at least one vote"),
            };
            FusedCandidate {
                frame_id,
                b_p,
                b_l,
                beta,
            }
        })
        .collect();
    fused.sort_by(|a, b| b.beta.total_cmp(&a.beta).then(a.frame_id.cmp(&b.frame_id)));
    fused
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vocab::Candidate;

    fn list(entries: &[(FrameId, f64)]) -> CandidateList {
        CandidateList {
            query: 0,
            entries: entries
                .iter()
                .map(|&(frame_id, normalized)| Candidate {
                    frame_id,
                    raw: normalized,
                    normalized,
                })
                .collect(),
        }
    }

    #[test]
    fn borda_examples() {
        let l = list(&[(1, 1.0), (2, 0.8), (3, 0.5)]);
        let b: Vec<f64> = borda_rank(&l, 3).into_iter().map(|x| x.1).collect();
        assert_eq!(b[0], 3.0);
        assert!((b[1] - 1.6).abs() < 1e-12);
        assert_eq!(b[2], 0.5);

        let b = borda_rank(&l, 1);
        assert_eq!(b, vec![(1, 1.0)]);

        let z = list(&[(1, 1.0), (2, 0.0)]);
        assert_eq!(borda_rank(&z, 2)[1].1, 0.0);
        assert!(borda_rank(&l, 0).is_empty());
    }

    #[test]
    fn geometric_mean_of_both_votes() {
        let p = list(&[(7, 1.0), (8, 1.0), (9, 1.0)]);
        let l = list(&[(7, 0.8), (3, 1.0), (4, 1.0)]);
        // point rank 0 with c = 3 -> 3.0; line rank 0 -> 3 * 0.8 = 2.4
        let fused = merge_lists(&p, &l, &FusionConfig::default());
        let f7 = fused.iter().find(|f| f.frame_id == 7).unwrap();
        assert!((f7.beta - (3.0f64 * 2.4).sqrt()).abs() < 1e-12);

        let p = list(&[(1, 1.0), (2, 0.8), (3, 0.5)]);
        let l = list(&[(5, 1.0), (2, 1.0), (6, 1.0)]);
        let fused = merge_lists(&p, &l, &FusionConfig::default());
        let f2 = fused.iter().find(|f| f.frame_id == 2).unwrap();
        assert!((f2.beta - (1.6f64 * 2.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn eq3_example_value() {
        assert!(((3.0f64 * 1.6).sqrt() - 2.1909).abs() < 1e-4);
    }

    #[test]
    fn zero_point_vote_annihilates() {
        let p = list(&[(1, 1.0), (2, 0.0)]);
        let l = list(&[(2, 1.0), (1, 1.0)]);
        let fused = merge_lists(&p, &l, &FusionConfig::default());
        assert_eq!(fused.iter().find(|f| f.frame_id == 2).unwrap().beta, 0.0);
    }

    #[test]
    fn one_empty_list_keeps_order() {
        let p = list(&[(4, 1.0), (9, 0.7), (2, 0.4)]);
        let empty = CandidateList::default();
        for (a, b) in [(&p, &empty), (&empty, &p)] {
            let fused = merge_lists(a, b, &FusionConfig::default());
            assert_eq!(fused.iter().map(|f| f.frame_id).collect::<Vec<_>>(), vec![4, 9, 2]);
            assert_eq!(fused[0].beta, 0.5 * 3.0);
        }
        assert!(merge_lists(&empty, &empty, &FusionConfig::default()).is_empty());
    }

    #[test]
    fn beyond_top_c_is_not_listed() {
        let p = list(&[(1, 1.0), (2, 0.9), (3, 0.8)]);
        let l = list(&[(3, 1.0)]);
        let fused = merge_lists(&p, &l, &FusionConfig::default());
        // c = 1: frame 3 only gets the line vote, frames 2 and 3 from points are dropped
        assert_eq!(fused.len(), 2);
        let f3 = fused.iter().find(|f| f.frame_id == 3).unwrap();
        assert_eq!(f3.b_p, None);
        assert_eq!(f3.beta, 0.5);
    }
}
