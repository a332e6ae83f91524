//! Per-frame feature types shared across the engine.

use std::f64::consts::TAU;

use crate::descriptor::Descriptor;

/// Monotonically increasing frame timestamp.
pub type FrameId = u64;

/// Wraps an angle into `[0, 2π)`.
pub fn wrap_two_pi(theta: f64) -> f64 {
    let w = theta.rem_euclid(TAU);
    // rem_euclid can round up to exactly TAU for tiny negative inputs
    if w >= TAU {
        0.0
    } else {
        w
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KeyPoint {
    pub x: f32,
    pub y: f32,
    /// Radians in `[0, 2π)`.
    pub orientation: f32,
    pub response: f32,
}

impl KeyPoint {
    pub fn in_bounds(&self, width: u32, height: u32) -> bool {
        self.x >= 0.0 && self.y >= 0.0 && self.x < width as f32 && self.y < height as f32
    }
}

/// A directed image segment. Orientation and length are derived from the
/// endpoints so they can never disagree with them.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LineSegment {
    pub start: [f32; 2],
    pub end: [f32; 2],
}

impl LineSegment {
    pub fn new(start: [f32; 2], end: [f32; 2]) -> Self {
        LineSegment { start, end }
    }

    /// Direction from start to end, in `[0, 2π)`.
    pub fn orientation(&self) -> f64 {
        let dx = (self.end[0] - self.start[0]) as f64;
        let dy = (self.end[1] - self.start[1]) as f64;
        wrap_two_pi(dy.atan2(dx))
    }

    pub fn length(&self) -> f64 {
        let dx = (self.end[0] - self.start[0]) as f64;
        let dy = (self.end[1] - self.start[1]) as f64;
        dx.hypot(dy)
    }

    pub fn reversed(&self) -> Self {
        LineSegment {
            start: self.end,
            end: self.start,
        }
    }

    pub fn midpoint(&self) -> [f64; 2] {
        [
            0.5 * (self.start[0] as f64 + self.end[0] as f64),
            0.5 * (self.start[1] as f64 + self.end[1] as f64),
        ]
    }
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct FrameFeatures {
    pub frame_id: FrameId,
    pub points: Vec<(KeyPoint, Descriptor)>,
    pub lines: Vec<(LineSegment, Descriptor)>,
}

impl FrameFeatures {
    pub fn new(frame_id: FrameId) -> Self {
        FrameFeatures {
            frame_id,
            points: Vec::new(),
            lines: Vec::new(),
        }
    }

    /// True when the frame carries neither points nor lines.
    pub fn is_empty(&self) -> bool {
        self.points.is_empty() && self.lines.is_empty()
    }

    pub fn point_descriptors(&self) -> Vec<Descriptor> {
        self.points.iter().map(|(_, d)| *d).collect()
    }

    pub fn line_descriptors(&self) -> Vec<Descriptor> {
        self.lines.iter().map(|(_, d)| *d).collect()
    }
}
