//! Reference implementations used as oracles by the integration tests.
//! Each one is written from the scoring rules directly, sharing no code with
//! the library beyond its data types.
#![allow(dead_code)]

use std::collections::BTreeMap;

use lipo_core::vocab::VocabConfig;
use lipo_core::{Descriptor, FrameId};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_descriptor(rng: &mut ChaCha8Rng) -> Descriptor {
    Descriptor::from_words(rng.random())
}

pub fn flip_bits(d: &Descriptor, bits: usize, rng: &mut ChaCha8Rng) -> Descriptor {
    let mut out = *d;
    for i in rand::seq::index::sample(rng, 256, bits) {
        out.flip_bit(i);
    }
    out
}

/// Bit-by-bit Hamming distance, independent of the word-level kernel.
pub fn bitwise_distance(a: &Descriptor, b: &Descriptor) -> u32 {
    (0..256).filter(|&i| a.bit(i) != b.bit(i)).count() as u32
}

/// Byte-level Hamming distance, fast enough for linear scans.
pub fn popcount_distance(a: &Descriptor, b: &Descriptor) -> u32 {
    a.to_bytes()
        .iter()
        .zip(b.to_bytes().iter())
        .map(|(x, y)| (x ^ y).count_ones())
        .sum()
}

/// Linear-scan index treating every stored descriptor as its own word.
/// Matches the vocabulary exactly when no two stored descriptors are within
/// the merge threshold of each other.
pub struct LinearIndex {
    cfg: VocabConfig,
    frames: Vec<(FrameId, Vec<Descriptor>)>,
}

impl LinearIndex {
    pub fn new(cfg: VocabConfig) -> Self {
        LinearIndex {
            cfg,
            frames: Vec::new(),
        }
    }

    pub fn insert(&mut self, id: FrameId, descs: Vec<Descriptor>) {
        self.frames.push((id, descs));
    }

    /// Smallest distance between any two stored descriptors.
    pub fn min_pairwise_distance(&self) -> u32 {
        let all: Vec<&Descriptor> = self.frames.iter().flat_map(|(_, d)| d).collect();
        let mut best = u32::MAX;
        for i in 0..all.len() {
            for j in 0..i {
                best = best.min(popcount_distance(all[i], all[j]));
            }
        }
        best
    }

    /// Ranked `(frame, raw, normalized)` after truncation and pruning.
    pub fn query(&self, descs: &[Descriptor], max_results: usize) -> Vec<(FrameId, f64, f64)> {
        let n = self.frames.len();
        let mut scores: BTreeMap<usize, f64> = BTreeMap::new();
        for q in descs {
            // nearest stored descriptor, ties to the earliest stored
            let mut best: Option<(usize, u32)> = None;
            for (fi, (_, ds)) in self.frames.iter().enumerate() {
                for d in ds {
                    let dist = popcount_distance(q, d);
                    if best.is_none_or(|(_, b)| dist < b) {
                        best = Some((fi, dist));
                    }
                }
            }
            let Some((fi, dist)) = best else { continue };
            if dist > self.cfg.max_word_distance {
                continue;
            }
            let tf = 1.0 / self.frames[fi].1.len() as f64;
            let idf = (1.0 + n as f64 / 1.0).ln();
            let sim = 1.0 - dist as f64 / 256.0;
            *scores.entry(fi).or_insert(0.0) += tf * idf * sim;
        }
        let mut ranked: Vec<(FrameId, f64)> = scores.into_iter().map(|(fi, s)| (self.frames[fi].0, s)).collect();
        ranked.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
        ranked.truncate(max_results);
        min_max(&ranked, self.cfg.prune_threshold)
    }
}

pub fn min_max(ranked: &[(FrameId, f64)], prune: f64) -> Vec<(FrameId, f64, f64)> {
    if ranked.is_empty() {
        return Vec::new();
    }
    let hi = ranked.iter().map(|r| r.1).fold(f64::MIN, f64::max);
    let lo = ranked.iter().map(|r| r.1).fold(f64::MAX, f64::min);
    ranked
        .iter()
        .map(|&(f, s)| (f, s, if hi == lo { 1.0 } else { (s - lo) / (hi - lo) }))
        .filter(|r| r.2 >= prune)
        .collect()
}

/// Fused score of every voted frame by direct evaluation of the Borda rules.
pub fn brute_force_fusion(points: &[(FrameId, f64)], lines: &[(FrameId, f64)], penalty: f64) -> Vec<(FrameId, f64)> {
    let c = if points.is_empty() {
        lines.len()
    } else if lines.is_empty() {
        points.len()
    } else {
        points.len().min(lines.len())
    };
    let vote = |list: &[(FrameId, f64)], f: FrameId| -> Option<f64> {
        let i = list.iter().position(|e| e.0 == f)?;
        (i < c).then(|| (c - i) as f64 * list[i].1)
    };
    let mut frames: Vec<FrameId> = points.iter().chain(lines).map(|e| e.0).collect();
    frames.sort_unstable();
    frames.dedup();
    let mut out: Vec<(FrameId, f64)> = frames
        .into_iter()
        .filter_map(|f| match (vote(points, f), vote(lines, f)) {
            (Some(p), Some(l)) => Some((f, (p * l).sqrt())),
            (Some(b), None) | (None, Some(b)) => Some((f, penalty * b)),
            (None, None) => None,
        })
        .collect();
    out.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    out
}

/// Island intervals as components of the sorted frame ids, split wherever
/// consecutive ids are more than `gap` apart.
pub fn sorted_components(frames: &[FrameId], gap: u64) -> Vec<(FrameId, FrameId)> {
    let mut f = frames.to_vec();
    f.sort_unstable();
    let mut out: Vec<(FrameId, FrameId)> = Vec::new();
    for x in f {
        match out.last_mut() {
            Some(last) if x - last.1 <= gap => last.1 = x,
            _ => out.push((x, x)),
        }
    }
    out
}
