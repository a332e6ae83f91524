//! Dynamic islands: temporally adjacent candidates grouped into frame
//! intervals and scored jointly.
//!
//! An island's score is the sum of its members' fused scores divided by the
//! span of its interval (`n - m + 1`), not by its member count, so sparse
//! islands are penalized.

use crate::fusion::FusedCandidate;
use crate::types::FrameId;

#[derive(Clone, Debug, PartialEq)]
pub struct Island {
    pub m: FrameId,
    pub n: FrameId,
    pub members: Vec<(FrameId, f64)>,
    pub g: f64,
}

impl Island {
    fn seed(frame: FrameId, beta: f64) -> Self {
        Island {
            m: frame,
            n: frame,
            members: vec![(frame, beta)],
            g: beta,
        }
    }

    pub fn span(&self) -> u64 {
        self.n - self.m + 1
    }

    pub fn overlaps(&self, other: &Island) -> bool {
        self.m <= other.n && other.m <= self.n
    }

    fn reaches(&self, frame: FrameId, gap: u64) -> bool {
        frame >= self.m.saturating_sub(gap) && frame <= self.n.saturating_add(gap)
    }

    fn within_gap(&self, other: &Island, gap: u64) -> bool {
        self.m.saturating_sub(gap) <= other.n && other.m <= self.n.saturating_add(gap)
    }

    fn absorb(&mut self, other: Island) {
        self.m = self.m.min(other.m);
        self.n = self.n.max(other.n);
        self.members.extend(other.members);
    }

    fn rescore(&mut self) {
        self.g = self.members.iter().map(|&(_, b)| b).sum::<f64>() / self.span() as f64;
    }
}

/// Groups candidates in list order. A candidate joins the first island whose
/// interval, widened by `gap`, contains it; islands that come within `gap` of
/// each other are merged. Output is sorted by score, ties to the earlier island.
pub fn build_islands(candidates: &[FusedCandidate], gap: u64) -> Vec<Island> {
    let mut islands: Vec<Island> = Vec::new();
    for c in candidates {
        match islands.iter().position(|isl| isl.reaches(c.frame_id, gap)) {
            None => islands.push(Island::seed(c.frame_id, c.beta)),
            Some(t) => {
                let isl = &mut islands[t];
                isl.m = isl.m.min(c.frame_id);
                isl.n = isl.n.max(c.frame_id);
                isl.members.push((c.frame_id, c.beta));
                merge_neighbours(&mut islands, t, gap);
            }
        }
    }
    for isl in &mut islands {
        isl.rescore();
    }
    islands.sort_by(|a, b| b.g.total_cmp(&a.g).then(a.m.cmp(&b.m)));
    islands
}

/// Merges into `t` every island that an extension brought within `gap`.
fn merge_neighbours(islands: &mut Vec<Island>, mut t: usize, gap: u64) {
    while let Some(i) = (0..islands.len()).find(|&i| i != t && islands[i].within_gap(&islands[t], gap)) {
        let other = islands.remove(i);
        if i < t {
            t -= 1;
        }
        islands[t].absorb(other);
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct IslandSelection {
    pub island: Island,
    pub representative: FrameId,
    pub representative_beta: f64,
    pub priority_used: bool,
}

/// Picks the best island overlapping `previous` if any, else the global best.
/// `islands` must be sorted by score as returned by [`build_islands`].
pub fn select_island(islands: &[Island], previous: Option<&Island>) -> Option<IslandSelection> {
    let first = islands.first()?;
    let priority = previous.and_then(|prev| islands.iter().find(|isl| isl.overlaps(prev)));
    let (island, priority_used) = match priority {
        Some(isl) => (isl, true),
        None => (first, false),
    };
    let &(representative, representative_beta) = island
        .members
        .iter()
        .max_by(|a, b| a.1.total_cmp(&b.1).then(b.0.cmp(&a.0)))
        .expect("islands are never empty");
    Some(IslandSelection {
        island: island.clone(),
        representative,
        representative_beta,
        priority_used,
    })
}

/// The island carried to the next frame: only a verified selection survives.
pub fn retain_for_next(selection: Option<&IslandSelection>, verified: bool) -> Option<Island> {
    match selection {
        Some(sel) if verified => Some(sel.island.clone()),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cands(items: &[(FrameId, f64)]) -> Vec<FusedCandidate> {
        items
            .iter()
            .map(|&(frame_id, beta)| FusedCandidate {
                frame_id,
                b_p: Some(beta),
                b_l: Some(beta),
                beta,
            })
            .collect()
    }

    fn island(m: FrameId, n: FrameId, g: f64) -> Island {
        Island {
            m,
            n,
            members: vec![(m, g)],
            g,
        }
    }

    #[test]
    fn single_island_score() {
        let isl = build_islands(&cands(&[(101, 4.0), (103, 3.0), (100, 2.0)]), 2);
        assert_eq!(isl.len(), 1);
        assert_eq!((isl[0].m, isl[0].n), (100, 103));
        assert!((isl[0].g - 9.0 / 4.0).abs() < 1e-12);
    }

    #[test]
    fn distant_frames_split() {
        let isl = build_islands(&cands(&[(500, 1.5), (100, 2.0)]), 2);
        assert_eq!(isl.len(), 2);
        assert_eq!(isl[0].g, 2.0);
        assert_eq!(isl[1].g, 1.5);
    }

    #[test]
    fn zero_beta_island() {
        let isl = build_islands(&cands(&[(7, 0.0)]), 3);
        assert_eq!(isl.len(), 1);
        assert_eq!(isl[0].g, 0.0);
        assert!(build_islands(&[], 3).is_empty());
    }

    #[test]
    fn bridging_candidate_merges_islands() {
        let isl = build_islands(&cands(&[(10, 3.0), (20, 2.0), (15, 1.0)]), 5);
        assert_eq!(isl.len(), 1);
        assert_eq!((isl[0].m, isl[0].n), (10, 20));
        assert_eq!(isl[0].members.len(), 3);
    }

    #[test]
    fn selection_truth_table() {
        let sel = select_island(&[island(10, 12, 3.0), island(50, 55, 2.0)], None).unwrap();
        assert_eq!(sel.island.m, 10);
        assert!(!sel.priority_used);

        let prev = island(100, 110, 1.0);
        let sel = select_island(&[island(400, 410, 5.0), island(105, 115, 1.0)], Some(&prev)).unwrap();
        assert_eq!((sel.island.m, sel.island.n), (105, 115));
        assert!(sel.priority_used);

        let sel = select_island(&[island(400, 410, 5.0), island(200, 215, 1.0)], Some(&prev)).unwrap();
        assert_eq!(sel.island.m, 400);
        assert!(!sel.priority_used);

        assert!(select_island(&[], Some(&prev)).is_none());
    }

    #[test]
    fn representative_is_max_beta_lowest_id() {
        let isl = build_islands(&cands(&[(5, 2.0), (3, 2.0), (4, 1.0)]), 1);
        let sel = select_island(&isl, None).unwrap();
        assert_eq!(sel.representative, 3);
        assert_eq!(sel.representative_beta, 2.0);
    }

    #[test]
    fn retention_requires_verification() {
        let isl = build_islands(&cands(&[(5, 2.0)]), 1);
        let sel = select_island(&isl, None);
        assert_eq!(retain_for_next(sel.as_ref(), true), Some(isl[0].clone()));
        assert_eq!(retain_for_next(sel.as_ref(), false), None);
        assert_eq!(retain_for_next(None, true), None);
    }
}
