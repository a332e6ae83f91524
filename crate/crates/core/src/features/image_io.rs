use std::path::Path;

use image::{DynamicImage, GrayImage};

use crate::error::{Error, Result};

/// ITU-R BT.601 luma, rounded to nearest.
pub fn luma_bt601(image: &DynamicImage) -> GrayImage {
    match image {
        DynamicImage::ImageLuma8(g) => g.clone(),
        other => {
            let rgb = other.to_rgb8();
            GrayImage::from_fn(rgb.width(), rgb.height(), |x, y| {
                let p = rgb.get_pixel(x, y).0;
                let v = 0.299 * p[0] as f64 + 0.587 * p[1] as f64 + 0.114 * p[2] as f64;
                image::Luma([v.round().clamp(0.0, 255.0) as u8])
            })
        }
    }
}

/// Loads a PGM/PNG raster as 8-bit grayscale.
pub fn load_grayscale(path: &Path) -> Result<GrayImage> {
    let img = image::open(path).map_err(|e| Error::Image {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    Ok(luma_bt601(&img))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bt601_weights() {
        let rgb = image::RgbImage::from_pixel(1, 1, image::Rgb([255, 0, 0]));
        let g = luma_bt601(&DynamicImage::ImageRgb8(rgb));
        assert_eq!(g.get_pixel(0, 0).0[0], 76);
        let rgb = image::RgbImage::from_pixel(1, 1, image::Rgb([0, 255, 0]));
        let g = luma_bt601(&DynamicImage::ImageRgb8(rgb));
        assert_eq!(g.get_pixel(0, 0).0[0], 150);
    }
}
