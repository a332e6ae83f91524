//! Versioned binary snapshot of a [`BinaryIndex`]. All integers little-endian.
//!
//! ```text
//! "LIPOVOC1"
//! u32 descriptor_bits
//! u32 branching, u32 leaf_capacity, u32 merge_threshold, u32 max_word_distance
//! u8 search (0 exact, 1 approximate), u32 backtrack
//! u32 max_results, f64 prune_threshold
//! u32 n_nodes  { [u8; 32] centroid, u32 n_children, u32..., u32 n_words, u32... }
//! u32 n_words  { [u8; 32] descriptor, u32 leaf }
//! u32 n_frames { u64 frame_id, u32 n_descriptors }
//! n_words x    { u32 n_postings, (u32 frame, u32 count)... }
//! ```

use super::tree::{Node, SearchMode, VocabTree};
use super::{BinaryIndex, Posting, VocabConfig};
use crate::descriptor::{Descriptor, DESCRIPTOR_BITS};
use crate::error::{Error, Result};

pub const SNAPSHOT_MAGIC: &[u8; 8] = b"LIPOVOC1";

struct Writer(Vec<u8>);

impl Writer {
    fn u8(&mut self, v: u8) {
        self.0.push(v);
    }
    fn u32(&mut self, v: u32) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn u64(&mut self, v: u64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn f64(&mut self, v: f64) {
        self.u64(v.to_bits());
    }
    fn len(&mut self, v: usize) {
        self.u32(u32::try_from(v).expect("snapshot section fits in u32"));
    }
    fn desc(&mut self, d: &Descriptor) {
        self.0.extend_from_slice(&d.to_bytes());
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.buf.len() - self.pos < n {
            return Err(Error::Format(format!("snapshot truncated at byte {}", self.pos)));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }
    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_bits(self.u64()?))
    }
    fn len(&mut self) -> Result<usize> {
        let n = self.u32()? as usize;
        // every element takes at least four bytes
        if n > (self.buf.len() - self.pos) / 4 + 1 {
            return Err(Error::Format(format!("implausible length {n} at byte {}", self.pos)));
        }
        Ok(n)
    }
    fn desc(&mut self) -> Result<Descriptor> {
        Ok(Descriptor::from_bytes(
            self.take(DESCRIPTOR_BITS / 8)?.try_into().expect("32 bytes"),
        ))
    }
}

pub(super) fn encode(index: &BinaryIndex) -> Vec<u8> {
    let mut w = Writer(Vec::new());
    w.0.extend_from_slice(SNAPSHOT_MAGIC);
    w.len(DESCRIPTOR_BITS);
    let cfg = index.config();
    w.len(cfg.branching);
    w.len(cfg.leaf_capacity);
    w.u32(cfg.merge_threshold);
    w.u32(cfg.max_word_distance);
    match cfg.search {
        SearchMode::Exact => {
            w.u8(0);
            w.u32(0);
        }
        SearchMode::Approximate { backtrack } => {
            w.u8(1);
            w.len(backtrack);
        }
    }
    w.len(cfg.max_results);
    w.f64(cfg.prune_threshold);

    let tree = index.tree();
    w.len(tree.nodes.len());
    for node in &tree.nodes {
        w.desc(&node.centroid);
        w.len(node.children.len());
        for &c in &node.children {
            w.u32(c);
        }
        w.len(node.words.len());
        for &id in &node.words {
            w.u32(id);
        }
    }
    w.len(tree.words.len());
    for (d, &leaf) in tree.words.iter().zip(&tree.word_leaf) {
        w.desc(d);
        w.u32(leaf);
    }
    w.len(index.frame_ids().len());
    for (&f, &n) in index.frame_ids().iter().zip(index.frame_sizes()) {
        w.u64(f);
        w.u32(n);
    }
    for word in 0..tree.words.len() {
        let postings = index.inverted_file().postings(word as u32);
        w.len(postings.len());
        for p in postings {
            w.u32(p.frame);
            w.u32(p.count);
        }
    }
    w.0
}

pub(super) fn decode(bytes: &[u8]) -> Result<BinaryIndex> {
    let mut r = Reader { buf: bytes, pos: 0 };
    if r.take(8)? != SNAPSHOT_MAGIC {
        return Err(Error::Format("not a vocabulary snapshot".into()));
    }
    let bits = r.u32()? as usize;
    if bits != DESCRIPTOR_BITS {
        return Err(Error::Format(format!(
            "snapshot descriptor width {bits}, expected {DESCRIPTOR_BITS}"
        )));
    }
    let branching = r.u32()? as usize;
    let leaf_capacity = r.u32()? as usize;
    let merge_threshold = r.u32()?;
    let max_word_distance = r.u32()?;
    let search = match (r.u8()?, r.u32()?) {
        (0, _) => SearchMode::Exact,
        (1, b) => SearchMode::Approximate { backtrack: b as usize },
        (t, _) => return Err(Error::Format(format!("unknown search mode {t}"))),
    };
    let max_results = r.u32()? as usize;
    let prune_threshold = r.f64()?;
    let cfg = VocabConfig {
        branching,
        leaf_capacity,
        merge_threshold,
        search,
        max_word_distance,
        max_results,
        prune_threshold,
    };

    let n_nodes = r.len()?;
    let mut nodes = Vec::with_capacity(n_nodes);
    for _ in 0..n_nodes {
        let centroid = r.desc()?;
        let n_children = r.len()?;
        let children = (0..n_children).map(|_| r.u32()).collect::<Result<Vec<_>>>()?;
        let n_words = r.len()?;
        let words = (0..n_words).map(|_| r.u32()).collect::<Result<Vec<_>>>()?;
        nodes.push(Node {
            centroid,
            children,
            words,
        });
    }
    let n_words = r.len()?;
    let mut words = Vec::with_capacity(n_words);
    let mut word_leaf = Vec::with_capacity(n_words);
    for _ in 0..n_words {
        words.push(r.desc()?);
        word_leaf.push(r.u32()?);
    }
    let n_frames = r.len()?;
    let mut frame_ids = Vec::with_capacity(n_frames);
    let mut frame_sizes = Vec::with_capacity(n_frames);
    for _ in 0..n_frames {
        frame_ids.push(r.u64()?);
        frame_sizes.push(r.u32()?);
    }
    let mut postings = Vec::with_capacity(n_words);
    for _ in 0..n_words {
        let n = r.len()?;
        let list = (0..n)
            .map(|_| {
                Ok(Posting {
                    frame: r.u32()?,
                    count: r.u32()?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        postings.push(list);
    }
    if r.pos != bytes.len() {
        return Err(Error::Format(format!(
            "{} trailing bytes in snapshot",
            bytes.len() - r.pos
        )));
    }
    validate(&nodes, &word_leaf, &postings, n_frames)?;
    let tree = VocabTree::from_parts(branching, leaf_capacity, nodes, words, word_leaf);
    Ok(BinaryIndex::from_parts(cfg, tree, postings, frame_ids, frame_sizes))
}

fn validate(nodes: &[Node], word_leaf: &[u32], postings: &[Vec<Posting>], n_frames: usize) -> Result<()> {
    if nodes.is_empty() {
        return Err(Error::Format("snapshot has no root node".into()));
    }
    let n_nodes = nodes.len() as u32;
    let n_words = word_leaf.len() as u32;
    for node in nodes {
        if node.children.iter().any(|&c| c == 0 || c >= n_nodes) || node.words.iter().any(|&w| w >= n_words) {
            return Err(Error::Format("snapshot node references out of range".into()));
        }
    }
    if word_leaf.iter().any(|&l| l >= n_nodes) {
        return Err(Error::Format("snapshot word leaf out of range".into()));
    }
    if postings.iter().flatten().any(|p| p.frame as usize >= n_frames) {
        return Err(Error::Format("snapshot posting references unknown frame".into()));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn built() -> BinaryIndex {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let mut index = BinaryIndex::new(VocabConfig {
            leaf_capacity: 12,
            ..Default::default()
        });
        for f in 0..20u64 {
            let descs: Vec<Descriptor> = (0..15).map(|_| Descriptor::from_words(rng.random())).collect();
            index.insert_frame(f * 3, &descs).unwrap();
        }
        index
    }

    #[test]
    fn bit_exact_round_trip() {
        let index = built();
        let bytes = index.to_snapshot();
        assert_eq!(&bytes[..8], SNAPSHOT_MAGIC);
        let back = BinaryIndex::from_snapshot(&bytes).unwrap();
        assert_eq!(back, index);
        assert_eq!(back.to_snapshot(), bytes);
    }

    #[test]
    fn rejects_truncation_and_bad_magic() {
        let bytes = built().to_snapshot();
        assert!(BinaryIndex::from_snapshot(&bytes[..bytes.len() - 3]).is_err());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(BinaryIndex::from_snapshot(&bad).is_err());
        let mut extra = bytes;
        extra.push(0);
        assert!(BinaryIndex::from_snapshot(&extra).is_err());
    }
}
