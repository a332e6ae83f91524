//! Synthetic data with known answers: feature-level sequences with planted
//! revisits, two-view scenes with an analytic fundamental matrix, rotated
//! line scenes with look-alike distractors, and toy images.
//!
//! Features are generated directly rather than detected, so every
//! correspondence is known. A landmark carries a base descriptor and each
//! observation of it flips a few random bits.

use image::{GrayImage, Luma};
use nalgebra::{Matrix3, Rotation3, Vector3};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::descriptor::{Descriptor, DESCRIPTOR_BITS};
use crate::eval::GroundTruth;
use crate::geometry::{EndpointPairing, Fundamental, LineMatch, MatchSet, PointMatch};
use crate::types::{wrap_two_pi, FrameFeatures, FrameId, KeyPoint, LineSegment};

pub const IMAGE_WIDTH: f64 = 640.0;
pub const IMAGE_HEIGHT: f64 = 480.0;

/// Pinhole intrinsics, focal length 500 px, principal point at the image centre.
pub fn intrinsics() -> Matrix3<f64> {
    Matrix3::new(
        500.0,
        0.0,
        IMAGE_WIDTH / 2.0,
        0.0,
        500.0,
        IMAGE_HEIGHT / 2.0,
        0.0,
        0.0,
        1.0,
    )
}

fn random_descriptor(rng: &mut ChaCha8Rng) -> Descriptor {
    Descriptor::from_words(rng.random())
}

/// `d` with `bits` distinct random bits flipped.
pub fn perturb(d: &Descriptor, bits: usize, rng: &mut ChaCha8Rng) -> Descriptor {
    let mut out = *d;
    for i in rand::seq::index::sample(rng, DESCRIPTOR_BITS, bits.min(DESCRIPTOR_BITS)) {
        out.flip_bit(i);
    }
    out
}

fn skew(t: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -t.z, t.y, t.z, 0.0, -t.x, -t.y, t.x, 0.0)
}

/// World-to-camera pose: `x_cam = R (X - C)`.
#[derive(Clone, Copy, Debug)]
pub struct Pose {
    pub rotation: Rotation3<f64>,
    pub center: Vector3<f64>,
}

impl Pose {
    pub fn at(center: Vector3<f64>) -> Self {
        Pose {
            rotation: Rotation3::identity(),
            center,
        }
    }

    fn project(&self, x: &Vector3<f64>) -> Option<[f64; 2]> {
        let c = self.rotation * (x - self.center);
        if c.z < 0.5 {
            return None;
        }
        let p = intrinsics() * c;
        Some([p.x / p.z, p.y / p.z])
    }

    /// `F` with `x_bᵀ F x_a = 0` for pixels of `a` and `b` seeing the same point.
    pub fn fundamental(a: &Pose, b: &Pose) -> Fundamental {
        // x_b = R_b R_aᵀ x_a + R_b (C_a - C_b)
        let r = b.rotation * a.rotation.inverse();
        let t = b.rotation * (a.center - b.center);
        let kinv = intrinsics().try_inverse().expect("invertible intrinsics");
        let f = kinv.transpose() * skew(&t) * r.matrix() * kinv;
        f / f.norm()
    }
}

fn in_image(p: [f64; 2], margin: f64) -> bool {
    p[0] >= margin && p[0] < IMAGE_WIDTH - margin && p[1] >= margin && p[1] < IMAGE_HEIGHT - margin
}

struct PointLandmark {
    position: Vector3<f64>,
    orientation: f64,
    descriptor: Descriptor,
}

struct LineLandmark {
    a: Vector3<f64>,
    b: Vector3<f64>,
    descriptor: Descriptor,
}

/// Landmarks spread along a corridor, facing the camera.
pub struct World {
    points: Vec<PointLandmark>,
    lines: Vec<LineLandmark>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ObservationNoise {
    pub descriptor_bits: usize,
    pub pixel_sigma: f64,
    /// Unrelated features added to every frame.
    pub clutter_points: usize,
    pub clutter_lines: usize,
}

impl World {
    /// Landmarks with `x` in `[x_min, x_max]`, depth 4 to 10.
    pub fn corridor(x_min: f64, x_max: f64, points_per_metre: f64, lines_per_metre: f64, rng: &mut ChaCha8Rng) -> Self {
        let len = x_max - x_min;
        let n_points = (len * points_per_metre).round() as usize;
        let n_lines = (len * lines_per_metre).round() as usize;
        let points = (0..n_points)
            .map(|_| PointLandmark {
                position: Vector3::new(
                    rng.random_range(x_min..x_max),
                    rng.random_range(-2.5..2.5),
                    rng.random_range(4.0..10.0),
                ),
                orientation: rng.random_range(0.0..std::f64::consts::TAU),
                descriptor: random_descriptor(rng),
            })
            .collect();
        let lines = (0..n_lines)
            .map(|_| {
                let mid = Vector3::new(
                    rng.random_range(x_min..x_max),
                    rng.random_range(-2.5..2.5),
                    rng.random_range(4.0..10.0),
                );
                let phi: f64 = rng.random_range(0.0..std::f64::consts::PI);
                let half = rng.random_range(0.35..0.9);
                let dir = Vector3::new(phi.cos(), phi.sin(), 0.0) * half;
                LineLandmark {
                    a: mid - dir,
                    b: mid + dir,
                    descriptor: random_descriptor(rng),
                }
            })
            .collect();
        World { points, lines }
    }

    pub fn observe(
        &self,
        pose: &Pose,
        frame_id: FrameId,
        noise: &ObservationNoise,
        rng: &mut ChaCha8Rng,
    ) -> FrameFeatures {
        let jitter = Normal::new(0.0, noise.pixel_sigma.max(1e-12)).expect("valid sigma");
        let noisy = |p: [f64; 2], rng: &mut ChaCha8Rng| {
            [(p[0] + jitter.sample(rng)) as f32, (p[1] + jitter.sample(rng)) as f32]
        };
        // in-plane rotation of the camera, added to feature orientations
        let roll = {
            let x = pose.rotation * Vector3::x();
            x.y.atan2(x.x)
        };
        let mut frame = FrameFeatures::new(frame_id);
        for lm in &self.points {
            let Some(p) = pose.project(&lm.position) else { continue };
            if !in_image(p, 20.0) {
                continue;
            }
            let [x, y] = noisy(p, rng);
            frame.points.push((
                KeyPoint {
                    x,
                    y,
                    orientation: wrap_two_pi(lm.orientation + roll) as f32,
                    response: 1.0,
                },
                perturb(&lm.descriptor, noise.descriptor_bits, rng),
            ));
        }
        for lm in &self.lines {
            let (Some(a), Some(b)) = (pose.project(&lm.a), pose.project(&lm.b)) else {
                continue;
            };
            if !in_image(a, 5.0) || !in_image(b, 5.0) || (a[0] - b[0]).hypot(a[1] - b[1]) < 25.0 {
                continue;
            }
            let seg = LineSegment::new(noisy(a, rng), noisy(b, rng));
            frame
                .lines
                .push((seg, perturb(&lm.descriptor, noise.descriptor_bits, rng)));
        }
        for _ in 0..noise.clutter_points {
            let kp = KeyPoint {
                x: rng.random_range(20.0..IMAGE_WIDTH as f32 - 20.0),
                y: rng.random_range(20.0..IMAGE_HEIGHT as f32 - 20.0),
                orientation: rng.random_range(0.0..std::f32::consts::TAU),
                response: 0.5,
            };
            frame.points.push((kp, random_descriptor(rng)));
        }
        for _ in 0..noise.clutter_lines {
            let seg = random_segment(rng, 30.0, 120.0);
            frame.lines.push((seg, random_descriptor(rng)));
        }
        frame
    }
}

fn random_segment(rng: &mut ChaCha8Rng, min_len: f64, max_len: f64) -> LineSegment {
    loop {
        let c = [
            rng.random_range(10.0..IMAGE_WIDTH - 10.0),
            rng.random_range(10.0..IMAGE_HEIGHT - 10.0),
        ];
        let phi: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        let half = rng.random_range(min_len..max_len) / 2.0;
        let a = [c[0] - half * phi.cos(), c[1] - half * phi.sin()];
        let b = [c[0] + half * phi.cos(), c[1] + half * phi.sin()];
        if in_image(a, 2.0) && in_image(b, 2.0) {
            return LineSegment::new([a[0] as f32, a[1] as f32], [b[0] as f32, b[1] as f32]);
        }
    }
}

/// A camera sliding sideways along a corridor, revisiting earlier stretches
/// in blocks of consecutive frames.
#[derive(Clone, Debug, PartialEq)]
pub struct SequenceConfig {
    pub frames: usize,
    /// Metres travelled per frame.
    pub step: f64,
    pub blocks: usize,
    pub block_len: usize,
    /// First frame of the first revisited stretch.
    pub original_start: usize,
    /// First frame of the first revisiting block.
    pub query_start: usize,
    pub block_stride: usize,
    pub noise: ObservationNoise,
    /// Ground-truth frame tolerance.
    pub tolerance: u64,
    pub seed: u64,
}

impl SequenceConfig {
    /// 200 frames, 20 revisiting frames in four blocks of five.
    pub fn standard(seed: u64) -> Self {
        SequenceConfig {
            frames: 200,
            step: 0.25,
            blocks: 4,
            block_len: 5,
            original_start: 10,
            query_start: 110,
            block_stride: 20,
            noise: ObservationNoise {
                descriptor_bits: 6,
                pixel_sigma: 0.3,
                clutter_points: 20,
                clutter_lines: 5,
            },
            tolerance: 3,
            seed,
        }
    }

    /// 100 frames, 10 revisiting frames in two blocks of five.
    pub fn short(seed: u64) -> Self {
        SequenceConfig {
            frames: 100,
            blocks: 2,
            original_start: 5,
            query_start: 75,
            block_stride: 15,
            ..Self::standard(seed)
        }
    }

    /// `(query, original)` for every revisiting frame.
    pub fn revisits(&self) -> Vec<(FrameId, FrameId)> {
        (0..self.blocks)
            .flat_map(|b| {
                (0..self.block_len).map(move |k| {
                    let q = self.query_start + b * self.block_stride + k;
                    let o = self.original_start + b * self.block_stride + k;
                    (q as FrameId, o as FrameId)
                })
            })
            .filter(|&(q, _)| (q as usize) < self.frames)
            .collect()
    }
}

pub struct SyntheticSequence {
    pub frames: Vec<FrameFeatures>,
    pub ground_truth: GroundTruth,
    pub revisits: Vec<(FrameId, FrameId)>,
    pub poses: Vec<Pose>,
}

pub fn planted_sequence(cfg: &SequenceConfig) -> SyntheticSequence {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let extent = cfg.frames as f64 * cfg.step;
    let world = World::corridor(-8.0, extent + 8.0, 30.0, 6.0, &mut rng);
    let revisits = cfg.revisits();
    let original_of = |t: FrameId| revisits.iter().find(|r| r.0 == t).map(|r| r.1);
    let poses: Vec<Pose> = (0..cfg.frames as FrameId)
        .map(|t| match original_of(t) {
            Some(o) => Pose {
                rotation: Rotation3::from_euler_angles(0.0, 0.02, 0.035),
                center: Vector3::new(o as f64 * cfg.step + 0.15, 0.05, 0.2),
            },
            None => Pose::at(Vector3::new(t as f64 * cfg.step, 0.0, 0.0)),
        })
        .collect();
    let frames = poses
        .iter()
        .enumerate()
        .map(|(t, pose)| world.observe(pose, t as FrameId, &cfg.noise, &mut rng))
        .collect();
    SyntheticSequence {
        frames,
        ground_truth: GroundTruth {
            pairs: revisits.iter().copied().collect(),
            tolerance: cfg.tolerance,
        },
        revisits,
        poses,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TwoViewConfig {
    pub points: usize,
    pub lines: usize,
    pub pixel_sigma: f64,
    /// Share of point and line correspondences replaced by wrong ones.
    pub outlier_ratio: f64,
}

impl Default for TwoViewConfig {
    fn default() -> Self {
        TwoViewConfig {
            points: 60,
            lines: 20,
            pixel_sigma: 0.2,
            outlier_ratio: 0.0,
        }
    }
}

pub struct TwoViewScene {
    pub query: FrameFeatures,
    pub candidate: FrameFeatures,
    /// Identity matches, some of them planted outliers.
    pub matches: MatchSet,
    pub fundamental: Fundamental,
    pub point_outlier: Vec<bool>,
    pub line_outlier: Vec<bool>,
    /// Noise-free projections of the true correspondences.
    pub true_correspondences: Vec<([f64; 2], [f64; 2])>,
}

/// Two views of random points and segments from a known relative pose.
pub fn two_view_scene(cfg: &TwoViewConfig, seed: u64) -> TwoViewScene {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = Pose::at(Vector3::zeros());
    let b = Pose {
        rotation: Rotation3::from_euler_angles(
            rng.random_range(-0.08..0.08),
            rng.random_range(-0.08..0.08),
            rng.random_range(-0.08..0.08),
        ),
        center: Vector3::new(
            rng.random_range(-0.8..0.8),
            rng.random_range(-0.3..0.3),
            rng.random_range(-0.4..0.4),
        ),
    };
    let jitter = Normal::new(0.0, cfg.pixel_sigma.max(1e-12)).expect("valid sigma");
    let noisy =
        |p: [f64; 2], rng: &mut ChaCha8Rng| [(p[0] + jitter.sample(rng)) as f32, (p[1] + jitter.sample(rng)) as f32];
    let random_point = |rng: &mut ChaCha8Rng| {
        Vector3::new(
            rng.random_range(-4.0..4.0),
            rng.random_range(-3.0..3.0),
            rng.random_range(4.0..12.0),
        )
    };
    let visible = |x: &Vector3<f64>| -> Option<([f64; 2], [f64; 2])> {
        let (p, q) = (a.project(x)?, b.project(x)?);
        (in_image(p, 5.0) && in_image(q, 5.0)).then_some((p, q))
    };

    let mut query = FrameFeatures::new(1);
    let mut candidate = FrameFeatures::new(0);
    let mut truth = Vec::new();
    let kp = |xy: [f32; 2]| KeyPoint {
        x: xy[0],
        y: xy[1],
        orientation: 0.0,
        response: 1.0,
    };
    while query.points.len() < cfg.points {
        let Some((p, q)) = visible(&random_point(&mut rng)) else {
            continue;
        };
        let d = random_descriptor(&mut rng);
        query.points.push((kp(noisy(p, &mut rng)), d));
        candidate.points.push((kp(noisy(q, &mut rng)), d));
        truth.push((p, q));
    }
    while query.lines.len() < cfg.lines {
        let x0 = random_point(&mut rng);
        let dir = Vector3::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-0.2..0.2),
        );
        let x1 = x0 + dir;
        let (Some((p0, q0)), Some((p1, q1))) = (visible(&x0), visible(&x1)) else {
            continue;
        };
        if (p0[0] - p1[0]).hypot(p0[1] - p1[1]) < 25.0 || (q0[0] - q1[0]).hypot(q0[1] - q1[1]) < 25.0 {
            continue;
        }
        let d = random_descriptor(&mut rng);
        query
            .lines
            .push((LineSegment::new(noisy(p0, &mut rng), noisy(p1, &mut rng)), d));
        candidate
            .lines
            .push((LineSegment::new(noisy(q0, &mut rng), noisy(q1, &mut rng)), d));
        truth.push((p0, q0));
        truth.push((p1, q1));
    }

    let mut pick = |n: usize| -> Vec<bool> {
        let k = (n as f64 * cfg.outlier_ratio).round() as usize;
        let mut flags = vec![false; n];
        for i in rand::seq::index::sample(&mut rng, n, k.min(n)) {
            flags[i] = true;
        }
        flags
    };
    let point_outlier = pick(cfg.points);
    let line_outlier = pick(cfg.lines);
    for (i, &out) in point_outlier.iter().enumerate() {
        if out {
            let kp = &mut candidate.points[i].0;
            kp.x = rng.random_range(5.0..IMAGE_WIDTH as f32 - 5.0);
            kp.y = rng.random_range(5.0..IMAGE_HEIGHT as f32 - 5.0);
        }
    }
    for (i, &out) in line_outlier.iter().enumerate() {
        if out {
            candidate.lines[i].0 = random_segment(&mut rng, 30.0, 150.0);
        }
    }
    let true_correspondences = truth
        .iter()
        .enumerate()
        .filter(|&(k, _)| {
            if k < cfg.points {
                !point_outlier[k]
            } else {
                !line_outlier[(k - cfg.points) / 2]
            }
        })
        .map(|(_, &c)| c)
        .collect();
    let matches = MatchSet {
        point_matches: (0..cfg.points)
            .map(|i| PointMatch {
                query: i,
                train: i,
                distance: 0,
            })
            .collect(),
        line_matches: (0..cfg.lines)
            .map(|i| LineMatch {
                query: i,
                train: i,
                distance: 0,
                pairing: EndpointPairing::Parallel,
            })
            .collect(),
        theta_g: 0.0,
    };
    TwoViewScene {
        query,
        candidate,
        matches,
        fundamental: Pose::fundamental(&a, &b),
        point_outlier,
        line_outlier,
        true_correspondences,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RotatedLineConfig {
    pub lines: usize,
    pub rotation_deg: f64,
    /// Bits flipped in every candidate descriptor.
    pub descriptor_noise: usize,
    /// Candidate lines that copy the look of a true line at another orientation.
    pub aliases: usize,
    /// Smallest orientation offset of an alias, degrees.
    pub alias_min_offset_deg: f64,
}

impl Default for RotatedLineConfig {
    fn default() -> Self {
        RotatedLineConfig {
            lines: 50,
            rotation_deg: 15.0,
            descriptor_noise: 10,
            aliases: 20,
            alias_min_offset_deg: 30.0,
        }
    }
}

pub struct RotatedLineScene {
    pub query: FrameFeatures,
    pub candidate: FrameFeatures,
    /// Candidate index of each query line's true counterpart.
    pub truth: Vec<usize>,
    pub rotation: f64,
}

/// The candidate frame is the query frame rotated about the image centre.
pub fn rotated_line_scene(cfg: &RotatedLineConfig, seed: u64) -> RotatedLineScene {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let theta = cfg.rotation_deg.to_radians();
    let (s, c) = theta.sin_cos();
    let (cx, cy) = (IMAGE_WIDTH / 2.0, IMAGE_HEIGHT / 2.0);
    let shift = [rng.random_range(-8.0..8.0), rng.random_range(-8.0..8.0)];
    let rotate = |p: [f32; 2]| {
        let (x, y) = (p[0] as f64 - cx, p[1] as f64 - cy);
        [
            (cx + c * x - s * y + shift[0]) as f32,
            (cy + s * x + c * y + shift[1]) as f32,
        ]
    };
    let mut query = FrameFeatures::new(1);
    let mut cand: Vec<(LineSegment, Descriptor, Option<usize>)> = Vec::new();
    while query.lines.len() < cfg.lines {
        let seg = random_segment(&mut rng, 40.0, 140.0);
        let rs = LineSegment::new(rotate(seg.start), rotate(seg.end));
        if !in_image([rs.start[0] as f64, rs.start[1] as f64], 2.0)
            || !in_image([rs.end[0] as f64, rs.end[1] as f64], 2.0)
        {
            continue;
        }
        let d = random_descriptor(&mut rng);
        let i = query.lines.len();
        query.lines.push((seg, d));
        cand.push((rs, perturb(&d, cfg.descriptor_noise, &mut rng), Some(i)));
    }
    let sources = rand::seq::index::sample(&mut rng, cfg.lines, cfg.aliases.min(cfg.lines));
    for i in sources {
        let true_orientation = cand[i].0.orientation();
        let offset = rng
            .random_range(cfg.alias_min_offset_deg..180.0 - cfg.alias_min_offset_deg)
            .to_radians();
        let phi = true_orientation + offset;
        let len = rng.random_range(40.0..140.0);
        let seg = loop {
            let m = [
                rng.random_range(20.0..IMAGE_WIDTH - 20.0),
                rng.random_range(20.0..IMAGE_HEIGHT - 20.0),
            ];
            let (a, b) = (
                [m[0] - 0.5 * len * phi.cos(), m[1] - 0.5 * len * phi.sin()],
                [m[0] + 0.5 * len * phi.cos(), m[1] + 0.5 * len * phi.sin()],
            );
            if in_image(a, 2.0) && in_image(b, 2.0) {
                break LineSegment::new([a[0] as f32, a[1] as f32], [b[0] as f32, b[1] as f32]);
            }
        };
        let d = perturb(&query.lines[i].1, cfg.descriptor_noise, &mut rng);
        cand.push((seg, d, None));
    }
    cand.shuffle(&mut rng);
    let mut truth = vec![0; cfg.lines];
    let mut candidate = FrameFeatures::new(0);
    for (j, (seg, d, src)) in cand.into_iter().enumerate() {
        if let Some(i) = src {
            truth[i] = j;
        }
        candidate.lines.push((seg, d));
    }
    RotatedLineScene {
        query,
        candidate,
        truth,
        rotation: theta,
    }
}

/// A textured grey image of overlapping rectangles, seen from a camera
/// shifted `offset` pixels to the right.
pub fn toy_image(seed: u64, offset: u32, width: u32, height: u32) -> GrayImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let world_w = width + 400;
    let rects: Vec<(u32, u32, u32, u32, u8)> = (0..40)
        .map(|_| {
            let w = rng.random_range(8..80.min(width / 2).max(9));
            let h = rng.random_range(8..80.min(height / 2).max(9));
            (
                rng.random_range(0..world_w - w),
                rng.random_range(0..height - h),
                w,
                h,
                rng.random(),
            )
        })
        .collect();
    let mut img = GrayImage::from_pixel(width, height, Luma([128]));
    for y in 0..height {
        for x in 0..width {
            let wx = x + offset;
            let mut v = 100 + ((wx / 7 + y / 5) % 3) as u8 * 10;
            for &(rx, ry, rw, rh, shade) in &rects {
                if wx >= rx && wx < rx + rw && y >= ry && y < ry + rh {
                    v = shade;
                }
            }
            img.put_pixel(x, y, Luma([v]));
        }
    }
    img
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::symmetric_epipolar_distance;

    #[test]
    fn revisit_schedule() {
        let cfg = SequenceConfig::standard(1);
        let r = cfg.revisits();
        assert_eq!(r.len(), 20);
        assert!(r.iter().all(|&(q, o)| q - o > 60 + cfg.tolerance));
        assert_eq!(SequenceConfig::short(1).revisits().len(), 10);
    }

    #[test]
    fn sequence_is_deterministic_and_populated() {
        let cfg = SequenceConfig::short(5);
        let a = planted_sequence(&cfg);
        let b = planted_sequence(&cfg);
        assert_eq!(a.frames, b.frames);
        for f in &a.frames {
            assert!(f.points.len() > 100, "{} points", f.points.len());
            assert!(f.lines.len() > 15, "{} lines", f.lines.len());
        }
    }

    #[test]
    fn analytic_fundamental_fits_noise_free_views() {
        let s = two_view_scene(&TwoViewConfig::default(), 7);
        for (p, q) in &s.true_correspondences {
            assert!(symmetric_epipolar_distance(&s.fundamental, *p, *q) < 1e-6);
        }
        assert!(s.fundamental.determinant().abs() < 1e-9);
    }

    #[test]
    fn outlier_share() {
        let cfg = TwoViewConfig {
            outlier_ratio: 0.3,
            ..Default::default()
        };
        let s = two_view_scene(&cfg, 8);
        assert_eq!(s.point_outlier.iter().filter(|&&b| b).count(), 18);
        assert_eq!(s.line_outlier.iter().filter(|&&b| b).count(), 6);
    }

    #[test]
    fn rotated_scene_truth() {
        let cfg = RotatedLineConfig::default();
        let s = rotated_line_scene(&cfg, 3);
        assert_eq!(s.candidate.lines.len(), cfg.lines + cfg.aliases);
        for (i, &j) in s.truth.iter().enumerate() {
            let d = s.query.lines[i].0.orientation() - s.candidate.lines[j].0.orientation();
            let d = wrap_two_pi(-d);
            assert!((d - s.rotation).abs() < 1e-4, "{}", d.to_degrees());
        }
    }

    #[test]
    fn toy_image_shifts() {
        let a = toy_image(1, 0, 64, 48);
        let b = toy_image(1, 8, 64, 48);
        assert_eq!(a.get_pixel(20, 10), b.get_pixel(12, 10));
    }
}
