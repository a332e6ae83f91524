//! Image description: oriented binary keypoints, line segments with binary
//! band descriptors, and the text feature-file format.

mod image_io;
mod io;
mod lines;
mod points;

pub use image_io::{load_grayscale, luma_bt601};
pub use io::{load_features, parse_features, save_features, write_features};
pub use lines::{band_pairs, describe_line, detect_segments, extract_lines};
pub use points::extract_points;

use image::GrayImage;

use crate::error::{Error, Result};
use crate::types::{FrameFeatures, FrameId};

#[derive(Clone, Debug, PartialEq)]
pub struct ExtractionConfig {
    pub max_points: usize,
    pub max_lines: usize,
    pub min_line_length: f64,
    pub fast_threshold: u8,
    pub band_count: usize,
    pub band_width: usize,
}

impl Default for ExtractionConfig {
    fn default() -> Self {
        ExtractionConfig {
            max_points: 1000,
            max_lines: 300,
            min_line_length: 25.0,
            fast_threshold: 20,
            band_count: 9,
            band_width: 7,
        }
    }
}

impl ExtractionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.band_count.is_multiple_of(2) {
            return Err(Error::Config(format!(
                "band_count must be odd, got {}",
                self.band_count
            )));
        }
        if self.band_count * (self.band_count - 1) / 2 < lines::PAIR_COUNT {
            return Err(Error::Config(format!(
                "band_count {} yields fewer than {} band pairs",
                self.band_count,
                lines::PAIR_COUNT
            )));
        }
        if self.band_width == 0 {
            return Err(Error::Config("band_width must be >= 1".into()));
        }
        if !(self.min_line_length > 0.0) {
            return Err(Error::Config("min_line_length must be positive".into()));
        }
        Ok(())
    }
}

/// Points and lines are extracted concurrently.
pub fn extract_frame(image: &GrayImage, frame_id: FrameId, cfg: &ExtractionConfig) -> FrameFeatures {
    let (points, lines) = rayon::join(|| extract_points(image, cfg), || extract_lines(image, cfg));
    FrameFeatures {
        frame_id,
        points,
        lines,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_is_valid() {
        ExtractionConfig::default().validate().unwrap();
    }

    #[test]
    fn even_band_count_rejected() {
        let cfg = ExtractionConfig {
            band_count: 10,
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
        let cfg = ExtractionConfig {
            band_count: 7,
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
    }
}
