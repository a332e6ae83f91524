//! Incremental bag-of-binary-words index: a hierarchical vocabulary plus an
//! inverted file, queried with tf-idf weighted similarity.
//!
//! For every query descriptor the nearest word `w` at distance `d` is found;
//! if `d <= max_word_distance`, every frame `f` holding `w` gains
//!
//! ```text
//! (n_fw / n_f) * ln(1 + N / df_w) * (1 - d / 256)
//! ```
//!
//! where `n_fw` is the number of descriptors of `f` assigned to `w`, `n_f` the
//! number of descriptors of `f`, `N` the number of indexed frames, and `df_w`
//! the number of frames containing `w`.

mod snapshot;
mod tree;

pub use snapshot::SNAPSHOT_MAGIC;
pub use tree::{NodeId, SearchMode, VocabTree, WordId};

use std::collections::{BTreeMap, HashMap};

use crate::descriptor::{Descriptor, DESCRIPTOR_BITS};
use crate::error::{Error, Result};
use crate::types::FrameId;

#[derive(Clone, Debug, PartialEq)]
pub struct VocabConfig {
    pub branching: usize,
    pub leaf_capacity: usize,
    /// A descriptor within this distance of its nearest word is merged into it.
    pub merge_threshold: u32,
    pub search: SearchMode,
    /// Nearest words farther than this do not vote.
    pub max_word_distance: u32,
    pub max_results: usize,
    pub prune_threshold: f64,
}

impl Default for VocabConfig {
    fn default() -> Self {
        VocabConfig {
            branching: 16,
            leaf_capacity: 150,
            merge_threshold: 16,
            search: SearchMode::Approximate { backtrack: 4 },
            max_word_distance: 80,
            max_results: 50,
            prune_threshold: 0.3,
        }
    }
}

impl VocabConfig {
    pub fn validate(&self) -> Result<()> {
        if self.branching < 2 {
            return Err(Error::Config("branching must be at least 2".into()));
        }
        if self.leaf_capacity < self.branching {
            return Err(Error::Config(
                "leaf_capacity must be at least the branching factor".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.prune_threshold) {
            return Err(Error::Config("prune_threshold must be in [0, 1]".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Candidate {
    pub frame_id: FrameId,
    pub raw: f64,
    pub normalized: f64,
}

/// Candidates for one query, raw score descending.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct CandidateList {
    pub query: FrameId,
    pub entries: Vec<Candidate>,
}

impl CandidateList {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Min-max normalization followed by pruning of entries below `prune_threshold`.
///
/// When every raw score is equal (including the single-entry case) all
/// normalized scores are 1.0.
pub fn normalize_scores(entries: &[(FrameId, f64)], prune_threshold: f64) -> Vec<Candidate> {
    if entries.is_empty() {
        return Vec::new();
    }
    let (min, max) = entries
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &(_, s)| {
            (lo.min(s), hi.max(s))
        });
    let range = max - min;
    entries
        .iter()
        .map(|&(frame_id, raw)| {
            let normalized = if range > 0.0 {
                ((raw - min) / range).clamp(0.0, 1.0)
            } else {
                1.0
            };
            Candidate {
                frame_id,
                raw,
                normalized,
            }
        })
        .filter(|c| c.normalized >= prune_threshold)
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Posting {
    /// Dense frame index, see [`BinaryIndex::frame_ids`].
    pub frame: u32,
    pub count: u32,
}

/// Word id to postings, in frame insertion order.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct InvertedFile {
    postings: Vec<Vec<Posting>>,
}

impl InvertedFile {
    pub fn postings(&self, word: WordId) -> &[Posting] {
        self.postings.get(word as usize).map(Vec::as_slice).unwrap_or(&[])
    }

    fn ensure_words(&mut self, n: usize) {
        if self.postings.len() < n {
            self.postings.resize_with(n, Vec::new);
        }
    }

    /// Sum of occurrence counts over all postings.
    pub fn total_occurrences(&self) -> u64 {
        self.postings.iter().flatten().map(|p| p.count as u64).sum()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BinaryIndex {
    cfg: VocabConfig,
    tree: VocabTree,
    inverted: InvertedFile,
    frame_ids: Vec<FrameId>,
    frame_sizes: Vec<u32>,
    lookup: HashMap<FrameId, u32>,
}

impl BinaryIndex {
    pub fn new(cfg: VocabConfig) -> Self {
        let tree = VocabTree::new(cfg.branching, cfg.leaf_capacity);
        BinaryIndex {
            cfg,
            tree,
            inverted: InvertedFile::default(),
            frame_ids: Vec::new(),
            frame_sizes: Vec::new(),
            lookup: HashMap::new(),
        }
    }

    pub fn config(&self) -> &VocabConfig {
        &self.cfg
    }

    pub fn tree(&self) -> &VocabTree {
        &self.tree
    }

    pub fn inverted_file(&self) -> &InvertedFile {
        &self.inverted
    }

    pub fn frame_ids(&self) -> &[FrameId] {
        &self.frame_ids
    }

    pub fn frame_count(&self) -> usize {
        self.frame_ids.len()
    }

    pub fn contains(&self, frame_id: FrameId) -> bool {
        self.lookup.contains_key(&frame_id)
    }

    pub fn is_empty(&self) -> bool {
        self.tree.word_count() == 0
    }

    /// Adds a frame's descriptors to the vocabulary and inverted file.
    pub fn insert_frame(&mut self, frame_id: FrameId, descriptors: &[Descriptor]) -> Result<()> {
        if self.contains(frame_id) {
            return Err(Error::Usage(format!("frame {frame_id} already indexed")));
        }
        let dense = self.frame_ids.len() as u32;
        self.frame_ids.push(frame_id);
        self.frame_sizes.push(descriptors.len() as u32);
        self.lookup.insert(frame_id, dense);

        let mut counts: BTreeMap<WordId, u32> = BTreeMap::new();
        for d in descriptors {
            let word = match self.tree.nearest_word(d, self.cfg.search) {
                Some((w, dist)) if dist <= self.cfg.merge_threshold => w,
                _ => self.tree.add_word(*d),
            };
            *counts.entry(word).or_default() += 1;
        }
        self.inverted.ensure_words(self.tree.word_count());
        for (word, count) in counts {
            self.inverted.postings[word as usize].push(Posting { frame: dense, count });
        }
        Ok(())
    }

    /// Top `max_results` frames, normalized and pruned.
    pub fn query(&self, descriptors: &[Descriptor], max_results: usize) -> CandidateList {
        self.query_before(descriptors, max_results, None)
    }

    /// As [`query`](Self::query), restricted to frames with id `< before` when set.
    pub fn query_before(
        &self,
        descriptors: &[Descriptor],
        max_results: usize,
        before: Option<FrameId>,
    ) -> CandidateList {
        let raw = self.raw_scores(descriptors, before);
        let mut ranked: Vec<(FrameId, f64)> = raw;
        ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        ranked.truncate(max_results);
        CandidateList {
            query: 0,
            entries: normalize_scores(&ranked, self.cfg.prune_threshold),
        }
    }

    /// Unsorted raw scores of every eligible frame that received a vote.
    pub fn raw_scores(&self, descriptors: &[Descriptor], before: Option<FrameId>) -> Vec<(FrameId, f64)> {
        let n_frames = self.frame_ids.len();
        if n_frames == 0 || self.is_empty() {
            return Vec::new();
        }
        let eligible: Vec<bool> = self.frame_ids.iter().map(|&f| before.is_none_or(|b| f < b)).collect();
        let mut scores = vec![0.0f64; n_frames];
        let mut touched = vec![false; n_frames];
        for d in descriptors {
            let Some((word, dist)) = self.tree.nearest_word(d, self.cfg.search) else {
                continue;
            };
            if dist > self.cfg.max_word_distance {
                continue;
            }
            let postings = self.inverted.postings(word);
            if postings.is_empty() {
                continue;
            }
            let idf = (1.0 + n_frames as f64 / postings.len() as f64).ln();
            let sim = 1.0 - dist as f64 / DESCRIPTOR_BITS as f64;
            for p in postings {
                let f = p.frame as usize;
                if !eligible[f] {
                    continue;
                }
                let tf = p.count as f64 / self.frame_sizes[f] as f64;
                scores[f] += tf * idf * sim;
                touched[f] = true;
            }
        }
        (0..n_frames)
            .filter(|&f| touched[f])
            .map(|f| (self.frame_ids[f], scores[f]))
            .collect()
    }

    pub fn to_snapshot(&self) -> Vec<u8> {
        snapshot::encode(self)
    }

    pub fn from_snapshot(bytes: &[u8]) -> Result<Self> {
        snapshot::decode(bytes)
    }

    pub(crate) fn frame_sizes(&self) -> &[u32] {
        &self.frame_sizes
    }

    pub(crate) fn from_parts(
        cfg: VocabConfig,
        tree: VocabTree,
        postings: Vec<Vec<Posting>>,
        frame_ids: Vec<FrameId>,
        frame_sizes: Vec<u32>,
    ) -> Self {
        let lookup = frame_ids.iter().enumerate().map(|(i, &f)| (f, i as u32)).collect();
        BinaryIndex {
            cfg,
            tree,
            inverted: InvertedFile { postings },
            frame_ids,
            frame_sizes,
            lookup,
        }
    }
}
