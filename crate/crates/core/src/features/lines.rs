//! Line segments by gradient-orientation region growing, described with a
//! binary band descriptor.
//!
//! Detection follows the usual level-line scheme: 2x2 gradients, seeds taken
//! in decreasing magnitude, 8-connected growth while the level-line angle
//! stays within 22.5 degrees of the region angle, then a rectangle fit along
//! the principal axis. Regions survive when they are long enough and fill at
//! least 70% of their rectangle.
//!
//! The descriptor splits a line-aligned support region into `band_count`
//! bands of `band_width` rows. Each band gets an 8-vector (mean and standard
//! deviation of the four signed gradient projections over the band and its
//! neighbours). A fixed list of 32 band pairs is compared component-wise,
//! 8 bits per pair. The list is ordered by band distance and then by first
//! band: all adjacent pairs, all distance-2 pairs, and so on until 32 pairs
//! are taken (see [`band_pairs`]).

use std::collections::VecDeque;
use std::f64::consts::{FRAC_PI_8, PI, TAU};

use image::GrayImage;

use super::points::smooth;
use super::ExtractionConfig;
use crate::descriptor::Descriptor;
use crate::types::LineSegment;

pub(super) const PAIR_COUNT: usize = 32;
const ANGLE_TOLERANCE: f64 = FRAC_PI_8;
const MIN_DENSITY: f64 = 0.7;
const MIN_REGION_PIXELS: usize = 5;

/// The band pairs compared by the descriptor, in bit order.
pub fn band_pairs(band_count: usize) -> Vec<(usize, usize)> {
    let mut pairs = Vec::with_capacity(PAIR_COUNT);
    'outer: for dist in 1..band_count {
        for a in 0..band_count - dist {
            pairs.push((a, a + dist));
            if pairs.len() == PAIR_COUNT {
                break 'outer;
            }
        }
    }
    pairs
}

struct LevelLines {
    width: usize,
    height: usize,
    magnitude: Vec<f64>,
    angle: Vec<f64>,
}

impl LevelLines {
    fn new(img: &GrayImage) -> Self {
        let (w, h) = (img.width() as usize, img.height() as usize);
        let mut magnitude = vec![0.0; w * h];
        let mut angle = vec![0.0; w * h];
        let at = |x: usize, y: usize| img.get_pixel(x as u32, y as u32).0[0] as f64;
        for y in 0..h.saturating_sub(1) {
            for x in 0..w.saturating_sub(1) {
                let (a, b, c, d) = (at(x, y), at(x + 1, y), at(x, y + 1), at(x + 1, y + 1));
                let gx = 0.5 * (b + d - a - c);
                let gy = 0.5 * (c + d - a - b);
                magnitude[y * w + x] = gx.hypot(gy);
                angle[y * w + x] = gx.atan2(-gy);
            }
        }
        LevelLines {
            width: w,
            height: h,
            magnitude,
            angle,
        }
    }
}

fn angle_diff(a: f64, b: f64) -> f64 {
    let mut d = (a - b).rem_euclid(TAU);
    if d > PI {
        d = TAU - d;
    }
    d
}

struct Region {
    pixels: Vec<(usize, usize)>,
    angle: f64,
}

fn grow_region(ll: &LevelLines, used: &mut [bool], threshold: f64, seed: usize) -> Region {
    let w = ll.width;
    let mut pixels = vec![(seed % w, seed / w)];
    used[seed] = true;
    let mut sum_c = ll.angle[seed].cos();
    let mut sum_s = ll.angle[seed].sin();
    let mut region_angle = ll.angle[seed];
    let mut queue = VecDeque::from([seed]);
    while let Some(idx) = queue.pop_front() {
        let (x, y) = ((idx % w) as i64, (idx / w) as i64);
        for dy in -1..=1i64 {
            for dx in -1..=1i64 {
                let (nx, ny) = (x + dx, y + dy);
                if nx < 0 || ny < 0 || nx >= w as i64 - 1 || ny >= ll.height as i64 - 1 {
                    continue;
                }
                let n = ny as usize * w + nx as usize;
                if used[n] || ll.magnitude[n] <= threshold {
                    continue;
                }
                if angle_diff(ll.angle[n], region_angle) > ANGLE_TOLERANCE {
                    continue;
                }
                used[n] = true;
                pixels.push((nx as usize, ny as usize));
                sum_c += ll.angle[n].cos();
                sum_s += ll.angle[n].sin();
                region_angle = sum_s.atan2(sum_c);
                queue.push_back(n);
            }
        }
    }
    Region {
        pixels,
        angle: region_angle,
    }
}

fn fit_segment(ll: &LevelLines, region: &Region, min_length: f64) -> Option<LineSegment> {
    if region.pixels.len() < MIN_REGION_PIXELS {
        return None;
    }
    let w = ll.width;
    let mut total = 0.0;
    let (mut cx, mut cy) = (0.0, 0.0);
    for &(x, y) in &region.pixels {
        let m = ll.magnitude[y * w + x];
        total += m;
        cx += m * (x as f64 + 0.5);
        cy += m * (y as f64 + 0.5);
    }
    cx /= total;
    cy /= total;
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for &(x, y) in &region.pixels {
        let m = ll.magnitude[y * w + x];
        let (dx, dy) = (x as f64 + 0.5 - cx, y as f64 + 0.5 - cy);
        sxx += m * dx * dx;
        syy += m * dy * dy;
        sxy += m * dx * dy;
    }
    let phi = 0.5 * (2.0 * sxy).atan2(sxx - syy);
    let (mut ux, mut uy) = (phi.cos(), phi.sin());
    if ux * region.angle.cos() + uy * region.angle.sin() < 0.0 {
        ux = -ux;
        uy = -uy;
    }
    let (mut lmin, mut lmax, mut wmin, mut wmax) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for &(x, y) in &region.pixels {
        let (dx, dy) = (x as f64 + 0.5 - cx, y as f64 + 0.5 - cy);
        let l = dx * ux + dy * uy;
        let t = -dx * uy + dy * ux;
        lmin = lmin.min(l);
        lmax = lmax.max(l);
        wmin = wmin.min(t);
        wmax = wmax.max(t);
    }
    let length = lmax - lmin;
    if length < min_length {
        return None;
    }
    let width = (wmax - wmin + 1.0).max(1.0);
    let density = region.pixels.len() as f64 / ((length + 1.0) * width);
    if density < MIN_DENSITY {
        return None;
    }
    let clamp_x = |v: f64| v.clamp(0.0, (ll.width - 1) as f64) as f32;
    let clamp_y = |v: f64| v.clamp(0.0, (ll.height - 1) as f64) as f32;
    let start = [clamp_x(cx + lmin * ux), clamp_y(cy + lmin * uy)];
    let end = [clamp_x(cx + lmax * ux), clamp_y(cy + lmax * uy)];
    let seg = LineSegment::new(start, end);
    (seg.length() >= min_length).then_some(seg)
}

/// Detects segments, longest first, without descriptors.
pub fn detect_segments(image: &GrayImage, cfg: &ExtractionConfig) -> Vec<LineSegment> {
    if image.width() < 3 || image.height() < 3 || cfg.max_lines == 0 {
        return Vec::new();
    }
    let ll = LevelLines::new(image);
    let threshold = 2.0 / ANGLE_TOLERANCE.sin();
    let mut order: Vec<usize> = (0..ll.magnitude.len())
        .filter(|&i| ll.magnitude[i] > threshold)
        .collect();
    order.sort_by(|&a, &b| {
        ll.magnitude[b]
            .partial_cmp(&ll.magnitude[a])
            .expect("finite magnitude")
            .then(a.cmp(&b))
    });
    let mut used = vec![false; ll.magnitude.len()];
    let mut segments = Vec::new();
    for seed in order {
        if used[seed] {
            continue;
        }
        let region = grow_region(&ll, &mut used, threshold, seed);
        if let Some(seg) = fit_segment(&ll, &region, cfg.min_line_length) {
            segments.push(seg);
        }
    }
    segments.sort_by(|a, b| {
        b.length()
            .partial_cmp(&a.length())
            .expect("finite length")
            .then(a.start[1].total_cmp(&b.start[1]))
            .then(a.start[0].total_cmp(&b.start[0]))
    });
    segments.truncate(cfg.max_lines);
    segments
}

struct GradientField {
    width: usize,
    height: usize,
    gx: Vec<f32>,
    gy: Vec<f32>,
}

impl GradientField {
    fn new(img: &GrayImage) -> Self {
        let (w, h) = (img.width() as usize, img.height() as usize);
        let s = smooth(img);
        let mut gx = vec![0f32; w * h];
        let mut gy = vec![0f32; w * h];
        for y in 1..h.saturating_sub(1) {
            for x in 1..w.saturating_sub(1) {
                gx[y * w + x] = 0.5 * (s[y * w + x + 1] - s[y * w + x - 1]);
                gy[y * w + x] = 0.5 * (s[(y + 1) * w + x] - s[(y - 1) * w + x]);
            }
        }
        GradientField {
            width: w,
            height: h,
            gx,
            gy,
        }
    }

    fn sample(&self, x: f64, y: f64) -> (f64, f64) {
        if x < 0.0 || y < 0.0 || x > (self.width - 1) as f64 || y > (self.height - 1) as f64 {
            return (0.0, 0.0);
        }
        let (x0, y0) = (x.floor() as usize, y.floor() as usize);
        let (x1, y1) = ((x0 + 1).min(self.width - 1), (y0 + 1).min(self.height - 1));
        let (fx, fy) = (x - x0 as f64, y - y0 as f64);
        let lerp = |f: &[f32]| {
            let top = f[y0 * self.width + x0] as f64 * (1.0 - fx) + f[y0 * self.width + x1] as f64 * fx;
            let bot = f[y1 * self.width + x0] as f64 * (1.0 - fx) + f[y1 * self.width + x1] as f64 * fx;
            top * (1.0 - fy) + bot * fy
        };
        (lerp(&self.gx), lerp(&self.gy))
    }
}

fn describe_with(field: &GradientField, seg: &LineSegment, cfg: &ExtractionConfig) -> Descriptor {
    let rows = cfg.band_count * cfg.band_width;
    let theta = seg.orientation();
    let (dl_x, dl_y) = (theta.cos(), theta.sin());
    let (dp_x, dp_y) = (-dl_y, dl_x);
    let length = seg.length();
    let samples = length.floor() as usize + 1;
    let sigma = 0.5 * (rows as f64 - 1.0).max(1.0);
    let half = 0.5 * (rows as f64 - 1.0);

    // per-row sums of [+perp, -perp, +along, -along]
    let mut row_stats = vec![[0.0f64; 4]; rows];
    for (r, stats) in row_stats.iter_mut().enumerate() {
        let offset = r as f64 - half;
        let weight = (-offset * offset / (2.0 * sigma * sigma)).exp();
        for i in 0..samples {
            let t = i as f64;
            let x = seg.start[0] as f64 + t * dl_x + offset * dp_x;
            let y = seg.start[1] as f64 + t * dl_y + offset * dp_y;
            let (gx, gy) = field.sample(x, y);
            let g_perp = gx * dp_x + gy * dp_y;
            let g_along = gx * dl_x + gy * dl_y;
            stats[0] += g_perp.max(0.0);
            stats[1] += (-g_perp).max(0.0);
            stats[2] += g_along.max(0.0);
            stats[3] += (-g_along).max(0.0);
        }
        for v in stats.iter_mut() {
            *v *= weight / samples as f64;
        }
    }

    let bands: Vec<[f64; 8]> = (0..cfg.band_count)
        .map(|b| {
            let lo = b.saturating_sub(1) * cfg.band_width;
            let hi = ((b + 2).min(cfg.band_count)) * cfg.band_width;
            let n = (hi - lo) as f64;
            let mut bd = [0.0; 8];
            for k in 0..4 {
                let mean = row_stats[lo..hi].iter().map(|s| s[k]).sum::<f64>() / n;
                let var = row_stats[lo..hi].iter().map(|s| (s[k] - mean).powi(2)).sum::<f64>() / n;
                bd[k] = mean;
                bd[4 + k] = var.sqrt();
            }
            bd
        })
        .collect();

    let mut desc = Descriptor::zeros();
    for (p, &(a, b)) in band_pairs(cfg.band_count).iter().enumerate() {
        for k in 0..8 {
            if bands[a][k] > bands[b][k] {
                desc.set_bit(p * 8 + k, true);
            }
        }
    }
    desc
}

/// Describes one segment on `image`.
pub fn describe_line(image: &GrayImage, seg: &LineSegment, cfg: &ExtractionConfig) -> Descriptor {
    describe_with(&GradientField::new(image), seg, cfg)
}

pub fn extract_lines(image: &GrayImage, cfg: &ExtractionConfig) -> Vec<(LineSegment, Descriptor)> {
    let segments = detect_segments(image, cfg);
    if segments.is_empty() {
        return Vec::new();
    }
    let field = GradientField::new(image);
    segments
        .into_iter()
        .map(|s| {
            let d = describe_with(&field, &s, cfg);
            (s, d)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::descriptor::hamming;

    fn rectangle_image() -> GrayImage {
        GrayImage::from_fn(200, 160, |x, y| {
            if (50..150).contains(&x) && (40..120).contains(&y) {
                image::Luma([0])
            } else {
                image::Luma([255])
            }
        })
    }

    #[test]
    fn pair_list_is_fixed() {
        let pairs = band_pairs(9);
        assert_eq!(pairs.len(), 32);
        assert_eq!(&pairs[..3], &[(0, 1), (1, 2), (2, 3)]);
        assert_eq!(pairs[8], (0, 2));
        assert_eq!(pairs[15], (0, 3));
        assert_eq!(&pairs[30..], &[(0, 6), (1, 7)]);
        let mut dedup = pairs.clone();
        dedup.sort();
        dedup.dedup();
        assert_eq!(dedup.len(), 32);
    }

    #[test]
    fn uniform_image_has_no_lines() {
        let img = GrayImage::from_pixel(100, 100, image::Luma([77]));
        assert!(extract_lines(&img, &ExtractionConfig::default()).is_empty());
    }

    #[test]
    fn rectangle_edges_recovered() {
        let img = rectangle_image();
        let lines = extract_lines(&img, &ExtractionConfig::default());
        assert!(lines.len() >= 4, "got {} lines", lines.len());
        // distance from a point to the nearest rectangle edge (boundary at 49.5.. pixel centres)
        let edge_distance = |p: [f32; 2]| -> f64 {
            let (x, y) = (p[0] as f64, p[1] as f64);
            let (x0, x1, y0, y1) = (50.0, 150.0, 40.0, 120.0);
            let d_seg = |ax: f64, ay: f64, bx: f64, by: f64| {
                let (vx, vy) = (bx - ax, by - ay);
                let t = (((x - ax) * vx + (y - ay) * vy) / (vx * vx + vy * vy)).clamp(0.0, 1.0);
                (x - ax - t * vx).hypot(y - ay - t * vy)
            };
            [
                d_seg(x0, y0, x1, y0),
                d_seg(x1, y0, x1, y1),
                d_seg(x1, y1, x0, y1),
                d_seg(x0, y1, x0, y0),
            ]
            .into_iter()
            .fold(f64::MAX, f64::min)
        };
        let good = lines
            .iter()
            .filter(|(s, _)| edge_distance(s.start) <= 3.0 && edge_distance(s.end) <= 3.0)
            .count();
        assert!(good >= 4, "only {good} segments on the rectangle edges");
        for (s, _) in &lines {
            assert!(s.length() >= 25.0);
        }
    }

    #[test]
    fn same_segment_same_descriptor() {
        let img = rectangle_image();
        let cfg = ExtractionConfig::default();
        let seg = LineSegment::new([50.0, 40.0], [150.0, 40.0]);
        let a = describe_line(&img, &seg, &cfg);
        let b = describe_line(&img, &seg, &cfg);
        assert_eq!(hamming(&a, &b), 0);
        assert_eq!(extract_lines(&img, &cfg), extract_lines(&img, &cfg));
    }
}
