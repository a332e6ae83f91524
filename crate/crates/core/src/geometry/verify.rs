use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::epipolar::{eight_point, sampson_weight, symmetric_epipolar_distance, weighted_eight_point, Fundamental};
use super::matching::{global_rotation, match_lines, match_points};
use super::{EndpointPairing, GeometryConfig, MatchSet, VerificationResult};
use crate::types::FrameFeatures;

const SAMPLE_SIZE: usize = 8;

/// A correspondence and the match it came from: points first, then lines.
struct Pool {
    x1: Vec<[f64; 2]>,
    x2: Vec<[f64; 2]>,
    unit: Vec<usize>,
    n_points: usize,
    n_lines: usize,
}

fn build_pool(ft: &FrameFeatures, fc: &FrameFeatures, matches: &MatchSet) -> Pool {
    let xy = |p: [f32; 2]| [p[0] as f64, p[1] as f64];
    let mut pool = Pool {
        x1: Vec::new(),
        x2: Vec::new(),
        unit: Vec::new(),
        n_points: matches.point_matches.len(),
        n_lines: matches.line_matches.len(),
    };
    for (k, m) in matches.point_matches.iter().enumerate() {
        let (a, b) = (&ft.points[m.query].0, &fc.points[m.train].0);
        pool.x1.push([a.x as f64, a.y as f64]);
        pool.x2.push([b.x as f64, b.y as f64]);
        pool.unit.push(k);
    }
    for (k, m) in matches.line_matches.iter().enumerate() {
        let (a, b) = (&ft.lines[m.query].0, &fc.lines[m.train].0);
        let (b0, b1) = match m.pairing {
            EndpointPairing::Parallel => (b.start, b.end),
            EndpointPairing::Crossed => (b.end, b.start),
        };
        for (p, q) in [(a.start, b0), (a.end, b1)] {
            pool.x1.push(xy(p));
            pool.x2.push(xy(q));
            pool.unit.push(pool.n_points + k);
        }
    }
    pool
}

struct Score {
    units: usize,
    /// Truncated squared residual, used to rank models.
    cost: f64,
    corr_inliers: Vec<bool>,
    unit_inliers: Vec<bool>,
}

fn score(pool: &Pool, f: &Fundamental, tol: f64) -> Score {
    let mut cost = 0.0;
    let corr_inliers: Vec<bool> = pool
        .x1
        .iter()
        .zip(&pool.x2)
        .map(|(a, b)| {
            let d = symmetric_epipolar_distance(f, *a, *b);
            cost += d.min(tol).powi(2);
            d <= tol
        })
        .collect();
    let mut unit_inliers = vec![false; pool.n_points + pool.n_lines];
    for (&u, &ok) in pool.unit.iter().zip(&corr_inliers) {
        unit_inliers[u] |= ok;
    }
    Score {
        units: unit_inliers.iter().filter(|&&b| b).count(),
        cost,
        corr_inliers,
        unit_inliers,
    }
}

/// Rejects samples with repeated or collinear points in either view.
fn degenerate(pts: &[[f64; 2]]) -> bool {
    for (i, p) in pts.iter().enumerate() {
        if pts[..i].iter().any(|q| (p[0] - q[0]).hypot(p[1] - q[1]) < 1e-3) {
            return true;
        }
    }
    let n = pts.len() as f64;
    let (mx, my) = pts.iter().fold((0.0, 0.0), |(x, y), p| (x + p[0] / n, y + p[1] / n));
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for p in pts {
        let (dx, dy) = (p[0] - mx, p[1] - my);
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    let tr = sxx + syy;
    let det = sxx * syy - sxy * sxy;
    let disc = (tr * tr / 4.0 - det).max(0.0).sqrt();
    let (hi, lo) = (tr / 2.0 + disc, tr / 2.0 - disc);
    lo <= 1e-6 * hi
}

const REFINE_ROUNDS: usize = 8;
const INNER_SAMPLES: usize = 10;
const INNER_SAMPLE_SIZE: usize = 16;

fn inlier_system(pool: &Pool, f: &Fundamental, mask: &[bool], pick: Option<&[usize]>) -> Option<Fundamental> {
    let (mut in1, mut in2, mut w) = (Vec::new(), Vec::new(), Vec::new());
    let mut add = |i: usize| {
        in1.push(pool.x1[i]);
        in2.push(pool.x2[i]);
        w.push(sampson_weight(f, pool.x1[i], pool.x2[i]));
    };
    match pick {
        Some(idx) => idx.iter().for_each(|&i| add(i)),
        None => (0..mask.len()).filter(|&i| mask[i]).for_each(&mut add),
    }
    weighted_eight_point(&in1, &in2, &w)
}

/// Reweighted refits on the inlier set while they lower the truncated cost.
fn reweight(pool: &Pool, mut f: Fundamental, mut s: Score, tol: f64) -> (Fundamental, Score) {
    for _ in 0..REFINE_ROUNDS {
        let Some(refit) = inlier_system(pool, &f, &s.corr_inliers, None) else {
            break;
        };
        let rs = score(pool, &refit, tol);
        if rs.cost >= s.cost {
            break;
        }
        let stable = rs.corr_inliers == s.corr_inliers;
        f = refit;
        s = rs;
        if stable {
            break;
        }
    }
    (f, s)
}

/// Local optimization of a new best model: reweighted refits, then refits
/// from random non-minimal subsets of its inliers.
fn refine(pool: &Pool, f: Fundamental, s: Score, tol: f64, rng: &mut ChaCha8Rng) -> (Fundamental, Score) {
    let (mut f, mut s) = reweight(pool, f, s, tol);
    let inliers: Vec<usize> = (0..s.corr_inliers.len()).filter(|&i| s.corr_inliers[i]).collect();
    if inliers.len() <= INNER_SAMPLE_SIZE {
        return (f, s);
    }
    for _ in 0..INNER_SAMPLES {
        let pick: Vec<usize> = sample(rng, inliers.len(), INNER_SAMPLE_SIZE)
            .into_iter()
            .map(|k| inliers[k])
            .collect();
        let Some(g) = inlier_system(pool, &f, &s.corr_inliers, Some(&pick)) else {
            continue;
        };
        let gs = score(pool, &g, tol);
        let (g, gs) = reweight(pool, g, gs, tol);
        if gs.cost < s.cost {
            f = g;
            s = gs;
        }
    }
    (f, s)
}

fn required_iterations(inlier_ratio: f64, confidence: f64) -> usize {
    let w = inlier_ratio.powi(SAMPLE_SIZE as i32);
    if w >= 1.0 {
        return 1;
    }
    if w <= 0.0 {
        return usize::MAX;
    }
    let n = (1.0 - confidence).ln() / (1.0 - w).ln();
    if n.is_finite() {
        n.ceil().max(1.0) as usize
    } else {
        usize::MAX
    }
}

/// RANSAC over the pooled point and line-endpoint correspondences. Inliers
/// are counted per match; a line is an inlier when either endpoint fits.
pub fn verify(ft: &FrameFeatures, fc: &FrameFeatures, matches: &MatchSet, cfg: &GeometryConfig) -> VerificationResult {
    let pool = build_pool(ft, fc, matches);
    let mut result = VerificationResult::rejected(matches.theta_g, pool.n_points, pool.n_lines);
    let n = pool.x1.len();
    if n < SAMPLE_SIZE {
        return result;
    }
    let tol = cfg.epipolar_tolerance;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut best: Option<(Fundamental, Score)> = None;
    let mut required = cfg.ransac_max_iterations;
    let mut iteration = 0;
    let mut s1 = [[0.0; 2]; SAMPLE_SIZE];
    let mut s2 = [[0.0; 2]; SAMPLE_SIZE];
    while iteration < required.min(cfg.ransac_max_iterations) {
        iteration += 1;
        for (k, i) in sample(&mut rng, n, SAMPLE_SIZE).into_iter().enumerate() {
            s1[k] = pool.x1[i];
            s2[k] = pool.x2[i];
        }
        if degenerate(&s1) || degenerate(&s2) {
            continue;
        }
        let Some(f) = eight_point(&s1, &s2) else {
            continue;
        };
        let s = score(&pool, &f, tol);
        if best.as_ref().is_none_or(|(_, b)| s.cost < b.cost) {
            let (f, s) = refine(&pool, f, s, tol, &mut rng);
            let ratio = s.corr_inliers.iter().filter(|&&b| b).count() as f64 / n as f64;
            required = required_iterations(ratio, cfg.ransac_confidence);
            best = Some((f, s));
        }
    }
    let Some((mut f, mut s)) = best else {
        return result;
    };
    if let Some(refit) = inlier_system(&pool, &f, &s.corr_inliers, None) {
        f = refit;
        s = score(&pool, &f, tol);
    }

    result.point_inlier_mask = s.unit_inliers[..pool.n_points].to_vec();
    result.line_inlier_mask = s.unit_inliers[pool.n_points..].to_vec();
    result.point_inliers = result.point_inlier_mask.iter().filter(|&&b| b).count();
    result.line_inliers = result.line_inlier_mask.iter().filter(|&&b| b).count();
    result.accepted = s.units >= cfg.min_inliers;
    result.fundamental = Some(f);
    result
}

/// Point matches, global rotation and line matches between two frames.
pub fn match_frames(ft: &FrameFeatures, fc: &FrameFeatures, cfg: &GeometryConfig) -> MatchSet {
    let point_matches = match_points(&ft.point_descriptors(), &fc.point_descriptors(), cfg);
    let rotation = global_rotation(&ft.lines, &fc.lines, cfg);
    let line_matches = match_lines(&ft.lines, &fc.lines, rotation, cfg, cfg.line_matcher);
    MatchSet {
        point_matches,
        line_matches,
        theta_g: rotation.theta,
    }
}

pub fn verify_frames(ft: &FrameFeatures, fc: &FrameFeatures, cfg: &GeometryConfig) -> (MatchSet, VerificationResult) {
    let matches = match_frames(ft, fc, cfg);
    let result = verify(ft, fc, &matches, cfg);
    (matches, result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::PointMatch;
    use crate::types::KeyPoint;
    use crate::Descriptor;

    fn frame_with_points(pts: &[[f64; 2]]) -> FrameFeatures {
        let mut f = FrameFeatures::new(0);
        for p in pts {
            f.points.push((
                KeyPoint {
                    x: p[0] as f32,
                    y: p[1] as f32,
                    orientation: 0.0,
                    response: 1.0,
                },
                Descriptor::zeros(),
            ));
        }
        f
    }

    fn identity_matches(n: usize) -> MatchSet {
        MatchSet {
            point_matches: (0..n)
                .map(|i| PointMatch {
                    query: i,
                    train: i,
                    distance: 0,
                })
                .collect(),
            ..Default::default()
        }
    }

    #[test]
    fn too_few_correspondences() {
        let pts: Vec<[f64; 2]> = (0..7).map(|i| [i as f64 * 10.0, (i * i) as f64]).collect();
        let f = frame_with_points(&pts);
        let r = verify(&f, &f, &identity_matches(7), &GeometryConfig::default());
        assert!(!r.accepted);
        assert!(r.fundamental.is_none());
        assert_eq!(r.total_inliers(), 0);
    }

    #[test]
    fn collinear_pool_finds_no_model() {
        let pts: Vec<[f64; 2]> = (0..20).map(|i| [i as f64 * 10.0, 5.0]).collect();
        let f = frame_with_points(&pts);
        let r = verify(&f, &f, &identity_matches(20), &GeometryConfig::default());
        assert!(!r.accepted);
        assert!(r.fundamental.is_none());
    }

    #[test]
    fn iteration_bound() {
        assert_eq!(required_iterations(1.0, 0.99), 1);
        assert_eq!(required_iterations(0.0, 0.99), usize::MAX);
        let n = required_iterations(0.5, 0.99);
        assert!((1170..=1180).contains(&n), "{n}");
    }

    #[test]
    fn degeneracy_checks() {
        let line: Vec<[f64; 2]> = (0..8).map(|i| [i as f64, 2.0 * i as f64]).collect();
        assert!(degenerate(&line));
        let mut dup: Vec<[f64; 2]> = (0..8).map(|i| [i as f64, (i * i) as f64]).collect();
        assert!(!degenerate(&dup));
        dup[3] = dup[4];
        assert!(degenerate(&dup));
    }
}
