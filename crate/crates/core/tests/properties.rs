mod common;

use common::{brute_force_fusion, flip_bits, random_descriptor, rng, sorted_components, LinearIndex};
use lipo_core::fusion::{merge_lists, FusionConfig};
use lipo_core::geometry::{verify, GeometryConfig};
use lipo_core::islands::{build_islands, select_island};
use lipo_core::synth::{two_view_scene, TwoViewConfig};
use lipo_core::vocab::{BinaryIndex, Candidate, CandidateList, SearchMode, VocabConfig};
use lipo_core::{Descriptor, FrameId};
use proptest::prelude::*;

fn exact() -> VocabConfig {
    VocabConfig {
        search: SearchMode::Exact,
        ..Default::default()
    }
}

fn list(entries: &[(FrameId, f64)]) -> CandidateList {
    CandidateList {
        query: 1_000,
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

/// A ranked list over distinct ids with non-increasing scores in [0, 1].
fn arb_list(max_len: usize) -> impl Strategy<Value = Vec<(FrameId, f64)>> {
    (
        Just((0..12u64).collect::<Vec<_>>()).prop_shuffle(),
        0..=max_len,
        prop::collection::vec(0.0f64..=1.0, max_len),
    )
        .prop_map(|(ids, n, mut scores)| {
            scores.sort_by(|a, b| b.total_cmp(a));
            ids.into_iter().take(n).zip(scores).collect()
        })
}

#[test]
fn self_retrieval_over_fifty_frames() {
    let mut r = rng(11);
    let mut index = BinaryIndex::new(VocabConfig::default());
    let frames: Vec<Vec<Descriptor>> = (0..50)
        .map(|_| (0..40).map(|_| random_descriptor(&mut r)).collect())
        .collect();
    for (f, descs) in frames.iter().enumerate() {
        index.insert_frame(f as FrameId, descs).unwrap();
    }
    for (f, descs) in frames.iter().enumerate() {
        let top = index.query(descs, 5);
        assert_eq!(top.entries[0].frame_id, f as FrameId);
    }
}

#[test]
fn postings_count_every_descriptor() {
    let mut r = rng(12);
    let mut index = BinaryIndex::new(VocabConfig::default());
    let base: Vec<Descriptor> = (0..30).map(|_| random_descriptor(&mut r)).collect();
    let mut total = 0u64;
    for f in 0..20 {
        let descs: Vec<Descriptor> = base.iter().map(|d| flip_bits(d, 4, &mut r)).collect();
        total += descs.len() as u64;
        index.insert_frame(f, &descs).unwrap();
        assert_eq!(index.inverted_file().total_occurrences(), total);
    }
    assert!(index.tree().word_count() < total as usize);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn exact_search_matches_linear_scan(seed in any::<u64>(), n_frames in 1usize..10, per_frame in 1usize..30) {
        let mut r = rng(seed);
        let mut index = BinaryIndex::new(exact());
        let mut oracle = LinearIndex::new(exact());
        let mut frames = Vec::new();
        for f in 0..n_frames as FrameId {
            let descs: Vec<Descriptor> = (0..per_frame).map(|_| random_descriptor(&mut r)).collect();
            index.insert_frame(f, &descs).unwrap();
            oracle.insert(f, descs.clone());
            frames.push(descs);
        }
        prop_assume!(oracle.min_pairwise_distance() > exact().merge_threshold);
        let src = &frames[seed as usize % frames.len()];
        let query: Vec<Descriptor> = src.iter().map(|d| flip_bits(d, 10, &mut r)).collect();
        let got: Vec<FrameId> = index.query(&query, 10).entries.iter().map(|c| c.frame_id).collect();
        let want: Vec<FrameId> = oracle.query(&query, 10).iter().map(|e| e.0).collect();
        prop_assert_eq!(got, want);
    }

    #[test]
    fn fusion_matches_brute_force(points in arb_list(6), lines in arb_list(6), penalty in 0.0f64..=1.0) {
        let cfg = FusionConfig { penalty_factor: penalty };
        let fused = merge_lists(&list(&points), &list(&lines), &cfg);
        let oracle = brute_force_fusion(&points, &lines, penalty);
        prop_assert_eq!(fused.len(), oracle.len());
        for (f, o) in fused.iter().zip(&oracle) {
            prop_assert_eq!(f.frame_id, o.0);
            prop_assert!((f.beta - o.1).abs() <= 1e-12);
        }
    }

    #[test]
    fn geometric_mean_between_votes(points in arb_list(6), lines in arb_list(6)) {
        for c in merge_lists(&list(&points), &list(&lines), &FusionConfig::default()) {
            if let (Some(p), Some(l)) = (c.b_p, c.b_l) {
                prop_assert!(p.min(l) - 1e-12 <= c.beta && c.beta <= p.max(l) + 1e-12);
            }
        }
    }

    #[test]
    fn fusion_is_deterministic(points in arb_list(6), lines in arb_list(6)) {
        let cfg = FusionConfig::default();
        prop_assert_eq!(merge_lists(&list(&points), &list(&lines), &cfg), merge_lists(&list(&points), &list(&lines), &cfg));
    }

    #[test]
    fn islands_partition_candidates(points in arb_list(10), lines in arb_list(10), gap in 0u64..5) {
        let fused = merge_lists(&list(&points), &list(&lines), &FusionConfig::default());
        let islands = build_islands(&fused, gap);
        let members: usize = islands.iter().map(|i| i.members.len()).sum();
        prop_assert_eq!(members, fused.len());
        for isl in &islands {
            let sum: f64 = isl.members.iter().map(|m| m.1).sum();
            prop_assert!((isl.g * isl.span() as f64 - sum).abs() <= 1e-12 * sum.max(1.0));
        }
        let mut spans: Vec<(FrameId, FrameId)> = islands.iter().map(|i| (i.m, i.n)).collect();
        spans.sort_unstable();
        let ids: Vec<FrameId> = fused.iter().map(|c| c.frame_id).collect();
        prop_assert_eq!(spans, sorted_components(&ids, gap));
    }

    #[test]
    fn priority_overlaps_previous(points in arb_list(10), lines in arb_list(10), prev_points in arb_list(10)) {
        let cfg = FusionConfig::default();
        let previous = build_islands(&merge_lists(&list(&prev_points), &list(&[]), &cfg), 3);
        let islands = build_islands(&merge_lists(&list(&points), &list(&lines), &cfg), 3);
        if let (Some(prev), Some(sel)) = (previous.first(), select_island(&islands, previous.first())) {
            if sel.priority_used {
                prop_assert!(sel.island.overlaps(prev));
            } else {
                prop_assert!(islands.iter().all(|i| !i.overlaps(prev)));
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn verified_model_is_rank_two_and_bounded(seed in any::<u64>(), ratio in 0.0f64..0.5) {
        let scene = two_view_scene(&TwoViewConfig { outlier_ratio: ratio, ..Default::default() }, seed);
        let cfg = GeometryConfig { seed, ..Default::default() };
        let r = verify(&scene.query, &scene.candidate, &scene.matches, &cfg);
        prop_assert!(r.total_inliers() <= scene.matches.point_matches.len() + scene.matches.line_matches.len());
        if let Some(f) = r.fundamental {
            prop_assert!(f.determinant().abs() < 1e-9);
            prop_assert!((f.norm() - 1.0).abs() < 1e-9);
        }
    }
}

#[test]
fn clean_scenes_keep_planted_correspondences() {
    for seed in 0..20 {
        let scene = two_view_scene(&TwoViewConfig::default(), seed);
        let r = verify(
            &scene.query,
            &scene.candidate,
            &scene.matches,
            &GeometryConfig::default(),
        );
        let planted = scene.matches.point_matches.len() + scene.matches.line_matches.len();
        assert!(
            r.total_inliers() as f64 >= 0.95 * planted as f64,
            "scene {seed}: {} of {planted}",
            r.total_inliers()
        );
        assert!(r.accepted);
    }
}
