//! Image and JSON file formats: 8-bit grayscale and RGB PNGs, indexed
//! region PNGs with a fixed palette, lane masks, and atomic JSON writes.

use std::fs;
use std::io::BufWriter;
use std::path::Path;

use crate::appearance::ColorImage;
use crate::models::LaneMask;
use crate::render2d::ImageF;
use crate::render3d::{Region, RegionImage};
use crate::{Error, Result};

/// Fixed 4-color palette of region PNGs, ordered left offroad, right
/// offroad, road, lane.
pub const REGION_PALETTE: [[u8; 3]; 4] = [
    [46, 125, 50],   // left offroad: green
    [121, 85, 72],   // right offroad: brown
    [96, 96, 96],    // road: gray
    [255, 235, 59],  // lane: yellow
];

/// Writes an intensity image as an 8-bit grayscale PNG (0 maps to black).
pub fn save_gray_png(img: &ImageF, path: &Path) -> Result<()> {
    let (w, h) = img.dims();
    let buf: Vec<u8> = img
        .pixels()
        .iter()
        .map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8)
        .collect();
    image::GrayImage::from_raw(w as u32, h as u32, buf)
        .expect("buffer sized from image")
        .save(path)?;
    Ok(())
}

/// Loads a PNG as a grayscale intensity image. RGB inputs are reduced by
/// luminance (0.299 R + 0.587 G + 0.114 B). With `invert` unset the image
/// is inverted automatically when its mean intensity exceeds 0.5, so that
/// ink reads as 1 and background as 0 for dark-on-light corpora.
pub fn load_gray_png(path: &Path, invert: Option<bool>) -> Result<ImageF> {
    let img = image::open(path)?.into_rgb8();
    let (w, h) = (img.width() as usize, img.height() as usize);
    let mut out = ImageF::zeros(w, h);
    for (x, y, p) in img.enumerate_pixels() {
        let lum = 0.299 * p[0] as f64 + 0.587 * p[1] as f64 + 0.114 * p[2] as f64;
        out.set(x as usize, y as usize, lum / 255.0);
    }
    let mean = out.sum() / (w * h) as f64;
    let flip = invert.unwrap_or(mean > 0.5);
    if flip {
        for v in out.pixels_mut() {
            *v = 1.0 - *v;
        }
    }
    Ok(out)
}

pub fn save_color_png(img: &ColorImage, path: &Path) -> Result<()> {
    let (w, h) = img.dims();
    let mut buf = Vec::with_capacity(w * h * 3);
    for p in img.pixels() {
        for c in p {
            buf.push(c.clamp(0.0, 255.0).round() as u8);
        }
    }
    image::RgbImage::from_raw(w as u32, h as u32, buf)
        .expect("buffer sized from image")
        .save(path)?;
    Ok(())
}

pub fn load_color_png(path: &Path) -> Result<ColorImage> {
    let img = image::open(path)?.into_rgb8();
    let (w, h) = (img.width() as usize, img.height() as usize);
    let pixels = img
        .pixels()
        .map(|p| [p[0] as f64, p[1] as f64, p[2] as f64])
        .collect();
    ColorImage::new(w, h, pixels)
}

/// Writes a region labeling as an indexed PNG carrying [`REGION_PALETTE`].
pub fn save_region_png(labels: &RegionImage, path: &Path) -> Result<()> {
    let file = fs::File::create(path)?;
    let mut encoder = png::Encoder::new(
        BufWriter::new(file),
        labels.width() as u32,
        labels.height() as u32,
    );
    encoder.set_color(png::ColorType::Indexed);
    encoder.set_depth(png::BitDepth::Eight);
    let palette: Vec<u8> = REGION_PALETTE.iter().flatten().copied().collect();
    encoder.set_palette(palette);
    let mut writer = encoder
        .write_header()
        .map_err(|e| Error::Io(format!("png header: {e}")))?;
    writer
        .write_image_data(labels.labels())
        .map_err(|e| Error::Io(format!("png data: {e}")))?;
    Ok(())
}

/// Loads a region labeling from a PNG whose colors are exactly the entries
/// of [`REGION_PALETTE`] (indexed or plain RGB).
pub fn load_region_png(path: &Path) -> Result<RegionImage> {
    let img = image::open(path)?.into_rgb8();
    let (w, h) = (img.width() as usize, img.height() as usize);
    let mut labels = Vec::with_capacity(w * h);
    for p in img.pixels() {
        let rgb = [p[0], p[1], p[2]];
        let label = REGION_PALETTE
            .iter()
            .position(|c| *c == rgb)
            .ok_or_else(|| {
                Error::Data(format!(
                    "{}: color {rgb:?} is not in the 4-region palette",
                    path.display()
                ))
            })?;
        labels.push(label as u8);
    }
    RegionImage::from_labels(w, h, labels)
}

/// Writes a lane mask as a black/white grayscale PNG.
pub fn save_mask_png(mask: &LaneMask, path: &Path) -> Result<()> {
    let (w, h) = mask.dims();
    let buf: Vec<u8> = mask.lane().iter().map(|b| if *b { 255 } else { 0 }).collect();
    image::GrayImage::from_raw(w as u32, h as u32, buf)
        .expect("buffer sized from mask")
        .save(path)?;
    Ok(())
}

pub fn load_mask_png(path: &Path) -> Result<LaneMask> {
    let img = image::open(path)?.into_luma8();
    let (w, h) = (img.width() as usize, img.height() as usize);
    let lane = img.pixels().map(|p| p[0] > 127).collect();
    LaneMask::new(w, h, lane)
}

/// Serializes JSON to a temporary file and renames it into place.
pub fn write_json_atomic(path: &Path, value: &serde_json::Value) -> Result<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, format!("{}\n", serde_json::to_string_pretty(value)?))?;
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn read_json(path: &Path) -> Result<serde_json::Value> {
    let text = fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}
