use std::f64::consts::{PI, TAU};

use super::{EndpointPairing, GeometryConfig, LineMatch, LineMatcher, PointMatch};
use crate::descriptor::{hamming, Descriptor};
use crate::types::{wrap_two_pi, LineSegment};

/// `|a|` on the circle, in `[0, π]`.
fn circular_abs(a: f64) -> f64 {
    let w = a.rem_euclid(TAU);
    if w > PI {
        TAU - w
    } else {
        w
    }
}

/// Wraps into `(-π, π]`.
fn wrap_pi(a: f64) -> f64 {
    let w = a.rem_euclid(TAU);
    if w > PI {
        w - TAU
    } else {
        w
    }
}

/// Relative orientation `|θ_t - θ_c + θ_g|` between two undirected lines,
/// in `[0, π/2]` (hence in `[0, π)`).
pub fn relative_orientation(theta_t: f64, theta_c: f64, theta_g: f64) -> f64 {
    let d = (theta_t - theta_c + theta_g).rem_euclid(PI);
    let d = if d >= PI { 0.0 } else { d };
    d.min(PI - d)
}

/// Chooses the endpoint association that rotates line `t` onto line `c`
/// the least; ties go to [`EndpointPairing::Parallel`].
pub fn pair_endpoints(line_t: &LineSegment, line_c: &LineSegment, theta_g: f64) -> EndpointPairing {
    let (tt, tc) = (line_t.orientation(), line_c.orientation());
    let as_is = circular_abs(tt - tc + theta_g);
    let reversed = circular_abs(tt - (tc + PI) + theta_g);
    if reversed < as_is {
        EndpointPairing::Crossed
    } else {
        EndpointPairing::Parallel
    }
}

/// Best and second-best distances with the index of the best.
struct Neighbours {
    best: Option<(usize, u32)>,
    second: Option<u32>,
}

fn two_nearest(query: &Descriptor, train: &[Descriptor], mut keep: impl FnMut(usize) -> bool) -> Neighbours {
    let mut best: Option<(usize, u32)> = None;
    let mut second: Option<u32> = None;
    for (j, d) in train.iter().enumerate() {
        if !keep(j) {
            continue;
        }
        let dist = hamming(query, d);
        match best {
            Some((_, bd)) if dist >= bd => {
                if second.is_none_or(|s| dist < s) {
                    second = Some(dist);
                }
            }
            _ => {
                if let Some((_, bd)) = best {
                    second = Some(bd);
                }
                best = Some((j, dist));
            }
        }
    }
    Neighbours { best, second }
}

fn passes_ratio(n: &Neighbours, cfg: &GeometryConfig) -> Option<(usize, u32)> {
    let (j, d1) = n.best?;
    match n.second {
        None => (d1 <= cfg.single_match_max_distance).then_some((j, d1)),
        Some(d2) => ((d1 as f64) < cfg.nndr_ratio * d2 as f64).then_some((j, d1)),
    }
}

/// Ratio-test matches from `query` into `train`, kept only when mutual.
pub fn match_points(query: &[Descriptor], train: &[Descriptor], cfg: &GeometryConfig) -> Vec<PointMatch> {
    if query.is_empty() || train.is_empty() {
        return Vec::new();
    }
    let reverse: Vec<Option<usize>> = train
        .iter()
        .map(|d| two_nearest(d, query, |_| true).best.map(|(i, _)| i))
        .collect();
    query
        .iter()
        .enumerate()
        .filter_map(|(i, d)| {
            let (j, dist) = passes_ratio(&two_nearest(d, train, |_| true), cfg)?;
            (reverse[j] == Some(i)).then_some(PointMatch {
                query: i,
                train: j,
                distance: dist,
            })
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RotationEstimate {
    /// Radians in `(-π, π]`; 0 when unreliable.
    pub theta: f64,
    pub reliable: bool,
}

fn circular_mean(angles: impl Iterator<Item = f64>) -> f64 {
    let (s, c) = angles.fold((0.0, 0.0), |(s, c), a| (s + a.sin(), c + a.cos()));
    s.atan2(c)
}

/// Dominant orientation offset `θ_c - θ_t` among descriptor-plausible line pairs.
pub fn global_rotation(
    lines_t: &[(LineSegment, Descriptor)],
    lines_c: &[(LineSegment, Descriptor)],
    cfg: &GeometryConfig,
) -> RotationEstimate {
    let unreliable = RotationEstimate {
        theta: 0.0,
        reliable: false,
    };
    let mut diffs = Vec::new();
    for (st, dt) in lines_t {
        let tt = st.orientation();
        for (sc, dc) in lines_c {
            if hamming(dt, dc) <= cfg.rotation_prefilter {
                diffs.push(wrap_two_pi(sc.orientation() - tt));
            }
        }
    }
    if diffs.is_empty() {
        return unreliable;
    }
    let bins = ((TAU / cfg.rotation_bin).round() as usize).max(1);
    let width = TAU / bins as f64;
    let bin_of = |a: f64| ((a / width) as usize).min(bins - 1);
    let mut hist = vec![0usize; bins];
    for &d in &diffs {
        hist[bin_of(d)] += 1;
    }
    let (dominant, &mass) = hist
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))
        .expect("at least one bin");
    if (mass as f64) < cfg.rotation_salience * diffs.len() as f64 {
        return unreliable;
    }
    let coarse = circular_mean(diffs.iter().copied().filter(|&d| bin_of(d) == dominant));
    // refine over everything within a bin width of the coarse estimate
    let theta = circular_mean(diffs.iter().copied().filter(|&d| circular_abs(d - coarse) <= width));
    RotationEstimate {
        theta: wrap_pi(theta),
        reliable: true,
    }
}

/// Line matches from `lines_t` into `lines_c`. With the filtered matcher and
/// a reliable rotation, neighbours whose relative orientation exceeds
/// `alpha_max` are discarded before the ratio test.
pub fn match_lines(
    lines_t: &[(LineSegment, Descriptor)],
    lines_c: &[(LineSegment, Descriptor)],
    rotation: RotationEstimate,
    cfg: &GeometryConfig,
    matcher: LineMatcher,
) -> Vec<LineMatch> {
    if lines_t.is_empty() || lines_c.is_empty() {
        return Vec::new();
    }
    let filter = matcher == LineMatcher::Filtered && rotation.reliable;
    let theta_g = rotation.theta;
    let orient_t: Vec<f64> = lines_t.iter().map(|(s, _)| s.orientation()).collect();
    let orient_c: Vec<f64> = lines_c.iter().map(|(s, _)| s.orientation()).collect();
    let compatible = |i: usize, j: usize| -> bool {
        !filter || relative_orientation(orient_t[i], orient_c[j], theta_g) <= cfg.alpha_max
    };
    let desc_t: Vec<Descriptor> = lines_t.iter().map(|(_, d)| *d).collect();
    let desc_c: Vec<Descriptor> = lines_c.iter().map(|(_, d)| *d).collect();

    let reverse: Vec<Option<usize>> = (0..desc_c.len())
        .map(|j| {
            two_nearest(&desc_c[j], &desc_t, |i| compatible(i, j))
                .best
                .map(|(i, _)| i)
        })
        .collect();

    (0..desc_t.len())
        .filter_map(|i| {
            let (j, dist) = passes_ratio(&two_nearest(&desc_t[i], &desc_c, |j| compatible(i, j)), cfg)?;
            (reverse[j] == Some(i)).then(|| LineMatch {
                query: i,
                train: j,
                distance: dist,
                pairing: pair_endpoints(&lines_t[i].0, &lines_c[j].0, theta_g),
            })
        })
        .collect()
}
