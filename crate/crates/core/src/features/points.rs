//! FAST-9 corners with intensity-centroid orientation and a steered
//! 256-comparison binary patch descriptor.

use std::f64::consts::TAU;
use std::sync::OnceLock;

use image::GrayImage;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::ExtractionConfig;
use crate::descriptor::{Descriptor, DESCRIPTOR_BITS};
use crate::types::{wrap_two_pi, KeyPoint};

/// Radius of the disc used for the intensity centroid.
const ORIENTATION_RADIUS: i32 = 15;
/// Sampling pattern points lie within this radius before rotation.
const PATTERN_RADIUS: f64 = 13.0;
/// Keypoints closer than this to the border are dropped.
const BORDER: i32 = 18;
const ANGLE_BINS: usize = 32;
const PATTERN_SEED: u64 = 0x4c49_504f_4f52_4221;

const CIRCLE: [(i32, i32); 16] = [
    (0, -3),
    (1, -3),
    (2, -2),
    (3, -1),
    (3, 0),
    (3, 1),
    (2, 2),
    (1, 3),
    (0, 3),
    (-1, 3),
    (-2, 2),
    (-3, 1),
    (-3, 0),
    (-3, -1),
    (-2, -2),
    (-1, -3),
];

type Pair = ((i8, i8), (i8, i8));

struct Patterns {
    rotated: Vec<Vec<Pair>>,
}

fn patterns() -> &'static Patterns {
    static PATTERNS: OnceLock<Patterns> = OnceLock::new();
    PATTERNS.get_or_init(|| {
        let mut rng = ChaCha8Rng::seed_from_u64(PATTERN_SEED);
        let normal = Normal::new(0.0, 31.0 / 5.0).expect("valid sigma");
        let sample = |rng: &mut ChaCha8Rng| loop {
            let x: f64 = normal.sample(rng);
            let y: f64 = normal.sample(rng);
            let (x, y) = (x.round(), y.round());
            if x.hypot(y) <= PATTERN_RADIUS {
                return (x, y);
            }
        };
        let mut base = Vec::with_capacity(DESCRIPTOR_BITS);
        while base.len() < DESCRIPTOR_BITS {
            let a = sample(&mut rng);
            let b = sample(&mut rng);
            if a != b {
                base.push((a, b));
            }
        }
        let rotated = (0..ANGLE_BINS)
            .map(|bin| {
                let angle = bin as f64 * TAU / ANGLE_BINS as f64;
                let (s, c) = angle.sin_cos();
                let rot =
                    |(x, y): (f64, f64)| -> (i8, i8) { ((c * x - s * y).round() as i8, (s * x + c * y).round() as i8) };
                base.iter().map(|&(a, b)| (rot(a), rot(b))).collect()
            })
            .collect();
        Patterns { rotated }
    })
}

fn fast_score(img: &GrayImage, x: i32, y: i32, threshold: i32) -> Option<f32> {
    let center = img.get_pixel(x as u32, y as u32).0[0] as i32;
    let mut ring = [0i32; 16];
    for (k, (dx, dy)) in CIRCLE.iter().enumerate() {
        ring[k] = img.get_pixel((x + dx) as u32, (y + dy) as u32).0[0] as i32;
    }
    // quick rejection on the four compass pixels
    let brighter = |v: i32| v > center + threshold;
    let darker = |v: i32| v < center - threshold;
    let compass = [ring[0], ring[4], ring[8], ring[12]];
    if compass.iter().filter(|&&v| brighter(v)).count() < 2 && compass.iter().filter(|&&v| darker(v)).count() < 2 {
        return None;
    }
    let mut is_corner = false;
    for cmp in [&brighter as &dyn Fn(i32) -> bool, &darker] {
        let mut run = 0;
        for k in 0..32 {
            if cmp(ring[k % 16]) {
                run += 1;
                if run >= 9 {
                    is_corner = true;
                    break;
                }
            } else {
                run = 0;
            }
        }
    }
    if !is_corner {
        return None;
    }
    let bright: i32 = ring
        .iter()
        .filter(|&&v| brighter(v))
        .map(|&v| v - center - threshold)
        .sum();
    let dark: i32 = ring
        .iter()
        .filter(|&&v| darker(v))
        .map(|&v| center - v - threshold)
        .sum();
    Some(bright.max(dark) as f32)
}

/// Separable [1 4 6 4 1] / 16 smoothing with clamped borders.
pub(super) fn smooth(img: &GrayImage) -> Vec<f32> {
    let (w, h) = (img.width() as i32, img.height() as i32);
    let k = [1.0f32, 4.0, 6.0, 4.0, 1.0];
    let at = |x: i32, y: i32| img.get_pixel(x.clamp(0, w - 1) as u32, y.clamp(0, h - 1) as u32).0[0] as f32;
    let mut tmp = vec![0f32; (w * h) as usize];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (i, kv) in k.iter().enumerate() {
                acc += kv * at(x + i as i32 - 2, y);
            }
            tmp[(y * w + x) as usize] = acc / 16.0;
        }
    }
    let mut out = vec![0f32; (w * h) as usize];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (i, kv) in k.iter().enumerate() {
                let yy = (y + i as i32 - 2).clamp(0, h - 1);
                acc += kv * tmp[(yy * w + x) as usize];
            }
            out[(y * w + x) as usize] = acc / 16.0;
        }
    }
    out
}

fn intensity_centroid_angle(img: &GrayImage, x: i32, y: i32) -> f64 {
    let r = ORIENTATION_RADIUS;
    let (mut m10, mut m01) = (0i64, 0i64);
    for dy in -r..=r {
        for dx in -r..=r {
            if dx * dx + dy * dy > r * r {
                continue;
            }
            let v = img.get_pixel((x + dx) as u32, (y + dy) as u32).0[0] as i64;
            m10 += dx as i64 * v;
            m01 += dy as i64 * v;
        }
    }
    wrap_two_pi((m01 as f64).atan2(m10 as f64))
}

fn describe(smoothed: &[f32], width: i32, x: i32, y: i32, angle: f64) -> Descriptor {
    let bin = ((angle / TAU * ANGLE_BINS as f64).round() as usize) % ANGLE_BINS;
    let pattern = &patterns().rotated[bin];
    let at = |dx: i8, dy: i8| smoothed[((y + dy as i32) * width + x + dx as i32) as usize];
    let mut d = Descriptor::zeros();
    for (i, &((ax, ay), (bx, by))) in pattern.iter().enumerate() {
        if at(ax, ay) < at(bx, by) {
            d.set_bit(i, true);
        }
    }
    d
}

/// Detects up to `cfg.max_points` corners, strongest first.
pub fn extract_points(image: &GrayImage, cfg: &ExtractionConfig) -> Vec<(KeyPoint, Descriptor)> {
    let (w, h) = (image.width() as i32, image.height() as i32);
    if w <= 2 * BORDER || h <= 2 * BORDER || cfg.max_points == 0 {
        return Vec::new();
    }
    let threshold = cfg.fast_threshold as i32;
    let mut scores = vec![0f32; (w * h) as usize];
    for y in BORDER..h - BORDER {
        for x in BORDER..w - BORDER {
            if let Some(s) = fast_score(image, x, y, threshold) {
                scores[(y * w + x) as usize] = s;
            }
        }
    }

    let mut corners = Vec::new();
    for y in BORDER..h - BORDER {
        for x in BORDER..w - BORDER {
            let s = scores[(y * w + x) as usize];
            if s <= 0.0 {
                continue;
            }
            let mut is_max = true;
            'nms: for dy in -1..=1 {
                for dx in -1..=1 {
                    if dx == 0 && dy == 0 {
                        continue;
                    }
                    let n = scores[((y + dy) * w + x + dx) as usize];
                    // ties go to the earlier pixel in raster order
                    if n > s || (n == s && (dy < 0 || (dy == 0 && dx < 0))) {
                        is_max = false;
                        break 'nms;
                    }
                }
            }
            if is_max {
                corners.push((x, y, s));
            }
        }
    }
    corners.sort_by(|a, b| {
        b.2.partial_cmp(&a.2)
            .expect("finite scores")
            .then(a.1.cmp(&b.1))
            .then(a.0.cmp(&b.0))
    });
    corners.truncate(cfg.max_points);

    let smoothed = smooth(image);
    corners
        .into_iter()
        .map(|(x, y, s)| {
            let angle = intensity_centroid_angle(image, x, y);
            let kp = KeyPoint {
                x: x as f32,
                y: y as f32,
                orientation: angle as f32,
                response: s,
            };
            (kp, describe(&smoothed, w, x, y, angle))
        })
        .collect()
}
