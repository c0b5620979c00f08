//! Glyph masters and the scale / rotate / place rasterizer.

use std::sync::OnceLock;

use super::image::ImageF;
use crate::{Error, Result};

/// Number of glyph identities: A-Z followed by 0-9.
pub const GLYPH_COUNT: usize = 36;

const BUILTIN_ASSET: &str = include_str!("../../assets/glyphs.txt");

/// The character rendered by glyph identity `id`.
pub fn glyph_char(id: u8) -> char {
    assert!((id as usize) < GLYPH_COUNT, "glyph id {id} out of range");
    if id < 26 {
        (b'A' + id) as char
    } else {
        (b'0' + id - 26) as char
    }
}

/// Inverse of [`glyph_char`]; `None` for characters outside A-Z0-9.
pub fn glyph_id(ch: char) -> Option<u8> {
    match ch {
        'A'..='Z' => Some(ch as u8 - b'A'),
        '0'..='9' => Some(ch as u8 - b'0' + 26),
        _ => None,
    }
}

/// 36 single-channel master bitmaps, indexed A-Z then 0-9, each stored as an
/// ink-coverage image of its nominal size (0 background, 1 full ink).
/// Immutable after load.
#[derive(Debug, Clone)]
pub struct GlyphBank {
    masters: Vec<ImageF>,
}

impl GlyphBank {
    /// The bank embedded in the library (see `assets/glyphs.txt`).
    pub fn builtin() -> &'static GlyphBank {
        static BANK: OnceLock<GlyphBank> = OnceLock::new();
        BANK.get_or_init(|| {
            GlyphBank::parse(BUILTIN_ASSET).expect("embedded glyph asset is well formed")
        })
    }

    /// Loads a bank from the documented asset format: records of
    /// `glyph <char> <width> <height>` followed by `<height>` lines of
    /// row-major hex, two digits per pixel (00 background, FF full ink).
    pub fn from_path(path: &std::path::Path) -> Result<GlyphBank> {
        let text = std::fs::read_to_string(path)?;
        GlyphBank::parse(&text)
    }

    pub fn parse(text: &str) -> Result<GlyphBank> {
        let mut masters: Vec<Option<ImageF>> = vec![None; GLYPH_COUNT];
        let mut lines = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'));
        while let Some(header) = lines.next() {
            let mut parts = header.split_whitespace();
            if parts.next() != Some("glyph") {
                return Err(Error::Data(format!("expected glyph record, got: {header}")));
            }
            let ch = parts
                .next()
                .and_then(|s| s.chars().next())
                .ok_or_else(|| Error::Data("glyph record missing character".into()))?;
            let id = glyph_id(ch)
                .ok_or_else(|| Error::Data(format!("glyph character {ch} outside A-Z0-9")))?;
            let w: usize = parts
                .next()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| Error::Data("bad glyph width".into()))?;
            let h: usize = parts
                .next()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| Error::Data("bad glyph height".into()))?;
            let digits = 2 * w;
            let mut img = ImageF::zeros(w, h);
            for y in 0..h {
                let row = lines
                    .next()
                    .ok_or_else(|| Error::Data(format!("glyph {ch} truncated at row {y}")))?;
                if row.len() != digits {
                    return Err(Error::Data(format!(
                        "glyph {ch} row {y}: expected {digits} hex digits, got {}",
                        row.len()
                    )));
                }
                for x in 0..w {
                    let byte = u8::from_str_radix(&row[2 * x..2 * x + 2], 16).map_err(|_| {
                        Error::Data(format!("glyph {ch}: bad hex byte at column {x}"))
                    })?;
                    img.set(x, y, byte as f64 / 255.0);
                }
            }
            masters[id as usize] = Some(img);
        }
        let masters: Vec<ImageF> = masters
            .into_iter()
            .enumerate()
            .map(|(i, m)| {
                m.ok_or_else(|| Error::Data(format!("missing glyph {}", glyph_char(i as u8))))
            })
            .collect::<Result<_>>()?;
        Ok(GlyphBank { masters })
    }

    /// Builds a bank directly from master images (tests and custom fonts).
    pub fn from_masters(masters: Vec<ImageF>) -> Result<GlyphBank> {
        if masters.len() != GLYPH_COUNT {
            return Err(Error::Data(format!(
                "a glyph bank needs {GLYPH_COUNT} masters, got {}",
                masters.len()
            )));
        }
        Ok(GlyphBank { masters })
    }

    pub fn master(&self, id: u8) -> &ImageF {
        &self.masters[id as usize]
    }
}

/// Pose of one glyph slot: identity, integer pixel position of the scaled
/// bitmap's top-left corner, target size, rotation about the scaled bitmap's
/// center, per-glyph blur bandwidth, and a presence flag.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GlyphPlacement {
    pub glyph_id: u8,
    pub pos_x: i64,
    pub pos_y: i64,
    pub size_x: u32,
    pub size_y: u32,
    pub rotation: f64,
    pub blur: f64,
    pub present: bool,
}

#[inline]
fn bilinear(img: &ImageF, x: f64, y: f64) -> f64 {
    let (w, h) = img.dims();
    if x <= -1.0 || y <= -1.0 || x >= w as f64 || y >= h as f64 {
        return 0.0;
    }
    let x0 = x.floor();
    let y0 = y.floor();
    let fx = x - x0;
    let fy = y - y0;
    let sample = |ix: i64, iy: i64| -> f64 {
        if ix < 0 || iy < 0 || ix >= w as i64 || iy >= h as i64 {
            0.0
        } else {
            img.get(ix as usize, iy as usize)
        }
    };
    let x0 = x0 as i64;
    let y0 = y0 as i64;
    (1.0 - fx) * (1.0 - fy) * sample(x0, y0)
        + fx * (1.0 - fy) * sample(x0 + 1, y0)
        + (1.0 - fx) * fy * sample(x0, y0 + 1)
        + fx * fy * sample(x0 + 1, y0 + 1)
}

/// Scales a master to (size_x, size_y) by bilinear sampling. Equal sizes
/// reproduce the master exactly.
fn scale_master(master: &ImageF, size_x: u32, size_y: u32) -> ImageF {
    let (mw, mh) = master.dims();
    let (sw, sh) = (size_x as usize, size_y as usize);
    ImageF::from_fn(sw, sh, |x, y| {
        let u = (x as f64 + 0.5) * mw as f64 / sw as f64 - 0.5;
        let v = (y as f64 + 0.5) * mh as f64 / sh as f64 - 0.5;
        bilinear(master, u.clamp(0.0, mw as f64 - 1.0), v.clamp(0.0, mh as f64 - 1.0))
    })
}


/// Pixel bounding box of a (w, h) bitmap rotated about its center:
/// top-left offset relative to the unrotated bitmap's origin, plus the box
/// dimensions. Zero rotation gives ((0, 0), w, h).
pub(crate) fn rotated_bbox(w: usize, h: usize, rotation_deg: f64) -> (i64, i64, usize, usize) {
    if rotation_deg == 0.0 || w == 0 || h == 0 {
        return (0, 0, w, h);
    }
    let theta = rotation_deg.to_radians();
    let (sin, cos) = theta.sin_cos();
    let cx = (w as f64 - 1.0) / 2.0;
    let cy = (h as f64 - 1.0) / 2.0;
    let mut min_x = f64::INFINITY;
    let mut min_y = f64::INFINITY;
    let mut max_x = f64::NEG_INFINITY;
    let mut max_y = f64::NEG_INFINITY;
    for (px, py) in [(0.0, 0.0), (w as f64 - 1.0, 0.0), (0.0, h as f64 - 1.0), (w as f64 - 1.0, h as f64 - 1.0)] {
        let rx = cx + cos * (px - cx) - sin * (py - cy);
        let ry = cy + sin * (px - cx) + cos * (py - cy);
        min_x = min_x.min(rx);
        min_y = min_y.min(ry);
        max_x = max_x.max(rx);
        max_y = max_y.max(ry);
    }
    let dx = min_x.floor() as i64;
    let dy = min_y.floor() as i64;
    let pw = (max_x.ceil() as i64 - dx + 1) as usize;
    let ph = (max_y.ceil() as i64 - dy + 1) as usize;
    (dx, dy, pw, ph)
}

/// The scaled and rotated glyph as a tight patch, returned with the offset
/// of its top-left corner relative to the placement position. Intensities
/// depend only on identity, size and rotation, never on position.
pub(crate) fn rasterize_patch(
    bank: &GlyphBank,
    glyph_id: u8,
    size_x: u32,
    size_y: u32,
    rotation_deg: f64,
) -> (i64, i64, ImageF) {
    if size_x == 0 || size_y == 0 {
        return (0, 0, ImageF::zeros(1, 1));
    }
    let scaled = scale_master(bank.master(glyph_id), size_x, size_y);
    let (sw, sh) = scaled.dims();
    if rotation_deg == 0.0 {
        return (0, 0, scaled);
    }

    let (dx, dy, pw, ph) = rotated_bbox(sw, sh, rotation_deg);
    let theta = rotation_deg.to_radians();
    let (sin, cos) = theta.sin_cos();
    let cx = (sw as f64 - 1.0) / 2.0;
    let cy = (sh as f64 - 1.0) / 2.0;

    let patch = ImageF::from_fn(pw, ph, |x, y| {
        // Inverse rotation back into scaled-bitmap coordinates.
        let lx = (x as i64 + dx) as f64;
        let ly = (y as i64 + dy) as f64;
        let sx = cx + cos * (lx - cx) + sin * (ly - cy);
        let sy = cy - sin * (lx - cx) + cos * (ly - cy);
        bilinear(&scaled, sx, sy)
    });
    (dx, dy, patch)
}

/// Rasterizes one placed glyph onto an otherwise empty canvas: the master is
/// scaled to (size_x, size_y) with bilinear sampling, rotated about the
/// scaled bitmap's center with bilinear resampling, placed with its top-left
/// at (pos_x, pos_y), and clipped to the canvas. Degenerate sizes and absent
/// placements render an empty canvas.
pub fn rasterize_glyph(
    bank: &GlyphBank,
    placement: &GlyphPlacement,
    canvas_w: usize,
    canvas_h: usize,
) -> ImageF {
    let mut canvas = ImageF::zeros(canvas_w, canvas_h);
    if !placement.present || placement.size_x == 0 || placement.size_y == 0 {
        return canvas;
    }
    let (dx, dy, patch) = rasterize_patch(
        bank,
        placement.glyph_id,
        placement.size_x,
        placement.size_y,
        placement.rotation,
    );
    canvas.blend_max(&patch, placement.pos_x + dx, placement.pos_y + dy);
    canvas
}
