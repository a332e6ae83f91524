//! Incremental hierarchical vocabulary over binary descriptors.
//!
//! Leaves hold words. A new descriptor is routed greedily (nearest child
//! centroid at every level) and either merged into a nearby word or appended
//! to the reached leaf. A leaf that overflows is re-clustered into up to
//! `branching` children with k-majority; every word is then assigned to its
//! nearest child centroid, so greedy descent of a word's descriptor always
//! reaches the leaf that stores it. Routing centroids are never changed after
//! a node is created.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use crate::descriptor::{hamming, majority, Descriptor};

pub type WordId = u32;
pub type NodeId = u32;

const KMAJORITY_ITERATIONS: usize = 20;

#[derive(Clone, Debug, PartialEq)]
pub(crate) struct Node {
    pub(crate) centroid: Descriptor,
    pub(crate) children: Vec<NodeId>,
    pub(crate) words: Vec<WordId>,
}

impl Node {
    fn leaf(centroid: Descriptor, words: Vec<WordId>) -> Self {
        Node {
            centroid,
            children: Vec::new(),
            words,
        }
    }

    pub(crate) fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SearchMode {
    /// Linear scan over every word.
    Exact,
    /// Greedy descent plus a bounded number of extra leaves, best-first.
    Approximate { backtrack: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct VocabTree {
    branching: usize,
    leaf_capacity: usize,
    pub(crate) nodes: Vec<Node>,
    pub(crate) words: Vec<Descriptor>,
    pub(crate) word_leaf: Vec<NodeId>,
}

impl VocabTree {
    pub fn new(branching: usize, leaf_capacity: usize) -> Self {
        VocabTree {
            branching: branching.max(2),
            leaf_capacity: leaf_capacity.max(1),
            nodes: vec![Node::leaf(Descriptor::zeros(), Vec::new())],
            words: Vec::new(),
            word_leaf: Vec::new(),
        }
    }

    pub(crate) fn from_parts(
        branching: usize,
        leaf_capacity: usize,
        nodes: Vec<Node>,
        words: Vec<Descriptor>,
        word_leaf: Vec<NodeId>,
    ) -> Self {
        VocabTree {
            branching,
            leaf_capacity,
            nodes,
            words,
            word_leaf,
        }
    }

    pub fn branching(&self) -> usize {
        self.branching
    }

    pub fn leaf_capacity(&self) -> usize {
        self.leaf_capacity
    }

    pub fn word_count(&self) -> usize {
        self.words.len()
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn word(&self, id: WordId) -> &Descriptor {
        &self.words[id as usize]
    }

    pub fn leaf_of(&self, id: WordId) -> NodeId {
        self.word_leaf[id as usize]
    }

    pub fn node_centroid(&self, id: NodeId) -> &Descriptor {
        &self.nodes[id as usize].centroid
    }

    pub fn children(&self, id: NodeId) -> &[NodeId] {
        &self.nodes[id as usize].children
    }

    /// Edges on the longest root-to-leaf path.
    pub fn depth(&self) -> usize {
        let mut best = 0;
        let mut stack = vec![(0 as NodeId, 0usize)];
        while let Some((n, d)) = stack.pop() {
            best = best.max(d);
            for &c in &self.nodes[n as usize].children {
                stack.push((c, d + 1));
            }
        }
        best
    }

    fn nearest_child(&self, node: &Node, d: &Descriptor) -> NodeId {
        *node
            .children
            .iter()
            .min_by_key(|&&c| (hamming(d, &self.nodes[c as usize].centroid), c))
            .expect("internal node has children")
    }

    /// Leaf reached by greedy nearest-centroid descent.
    pub fn greedy_leaf(&self, d: &Descriptor) -> NodeId {
        let mut cur: NodeId = 0;
        loop {
            let node = &self.nodes[cur as usize];
            if node.is_leaf() {
                return cur;
            }
            cur = self.nearest_child(node, d);
        }
    }

    fn scan_leaf(&self, leaf: NodeId, d: &Descriptor, best: &mut Option<(WordId, u32)>) {
        for &w in &self.nodes[leaf as usize].words {
            let dist = hamming(d, &self.words[w as usize]);
            let better = match *best {
                None => true,
                Some((bw, bd)) => dist < bd || (dist == bd && w < bw),
            };
            if better {
                *best = Some((w, dist));
            }
        }
    }

    /// Nearest word and its distance; ties resolve to the lower word id.
    pub fn nearest_word(&self, d: &Descriptor, mode: SearchMode) -> Option<(WordId, u32)> {
        if self.words.is_empty() {
            return None;
        }
        let mut best = None;
        match mode {
            SearchMode::Exact => {
                for (w, c) in self.words.iter().enumerate() {
                    let dist = hamming(d, c);
                    if best.is_none_or(|(_, bd)| dist < bd) {
                        best = Some((w as WordId, dist));
                    }
                }
            }
            SearchMode::Approximate { backtrack } => {
                let mut frontier: BinaryHeap<Reverse<(u32, NodeId)>> = BinaryHeap::new();
                frontier.push(Reverse((0, 0)));
                let mut leaves_left = backtrack + 1;
                while leaves_left > 0 {
                    let Some(Reverse((_, start))) = frontier.pop() else {
                        break;
                    };
                    let mut cur = start;
                    loop {
                        let node = &self.nodes[cur as usize];
                        if node.is_leaf() {
                            break;
                        }
                        let next = self.nearest_child(node, d);
                        for &c in &node.children {
                            if c != next {
                                let cd = hamming(d, &self.nodes[c as usize].centroid);
                                frontier.push(Reverse((cd, c)));
                            }
                        }
                        cur = next;
                    }
                    self.scan_leaf(cur, d, &mut best);
                    leaves_left -= 1;
                }
            }
        }
        best
    }

    /// Stores `d` as a new word in its greedy leaf, splitting on overflow.
    pub fn add_word(&mut self, d: Descriptor) -> WordId {
        let id = self.words.len() as WordId;
        let leaf = self.greedy_leaf(&d);
        self.words.push(d);
        self.word_leaf.push(leaf);
        self.nodes[leaf as usize].words.push(id);
        if self.nodes[leaf as usize].words.len() > self.leaf_capacity {
            self.split(leaf);
        }
        id
    }

    fn split(&mut self, leaf: NodeId) {
        let members = self.nodes[leaf as usize].words.clone();
        let k = self.branching.min(members.len());
        // evenly spaced seeds keep the initial partition unbiased
        let mut centroids: Vec<Descriptor> = (0..k)
            .map(|i| self.words[members[i * members.len() / k] as usize])
            .collect();
        let assign = |centroids: &[Descriptor], words: &[Descriptor]| -> Vec<usize> {
            members
                .iter()
                .map(|&w| {
                    let d = &words[w as usize];
                    (0..centroids.len())
                        .min_by_key(|&c| (hamming(d, &centroids[c]), c))
                        .expect("k >= 1")
                })
                .collect()
        };
        let mut labels = assign(&centroids, &self.words);
        for _ in 0..KMAJORITY_ITERATIONS {
            for (c, centroid) in centroids.iter_mut().enumerate() {
                let group: Vec<&Descriptor> = members
                    .iter()
                    .zip(&labels)
                    .filter(|&(_, &l)| l == c)
                    .map(|(&w, _)| &self.words[w as usize])
                    .collect();
                if !group.is_empty() {
                    *centroid = majority(group);
                }
            }
            let next = assign(&centroids, &self.words);
            if next == labels {
                break;
            }
            labels = next;
        }
        let mut groups: Vec<Vec<WordId>> = vec![Vec::new(); centroids.len()];
        for (&w, &l) in members.iter().zip(&labels) {
            groups[l].push(w);
        }
        if groups.iter().filter(|g| !g.is_empty()).count() < 2 {
            return;
        }
        let mut children = Vec::new();
        for (centroid, group) in centroids.into_iter().zip(groups) {
            if group.is_empty() {
                continue;
            }
            let id = self.nodes.len() as NodeId;
            for &w in &group {
                self.word_leaf[w as usize] = id;
            }
            self.nodes.push(Node::leaf(centroid, group));
            children.push(id);
        }
        let node = &mut self.nodes[leaf as usize];
        node.words.clear();
        node.children = children;
    }
}
