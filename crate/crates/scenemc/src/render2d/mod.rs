//! Deterministic 2D glyph rasterizer with per-glyph and global Gaussian
//! blur and max compositing, plus the Gaussian pixel likelihood.

mod glyphs;
mod image;

pub use glyphs::{
    glyph_char, glyph_id, rasterize_glyph, GlyphBank, GlyphPlacement, GLYPH_COUNT,
};
pub use image::{
    composite, gaussian_blur, gaussian_pixel_loglik, ImageF, BLUR_IDENTITY_CUTOFF,
};

pub(crate) use glyphs::{rasterize_patch, rotated_bbox};

/// Full text-scene pipeline: each present glyph is rasterized and blurred
/// with its own bandwidth, the layers are max-composited, and the composite
/// is blurred with `global_blur`.
pub fn render_text_scene(
    bank: &GlyphBank,
    placements: &[GlyphPlacement],
    global_blur: f64,
    canvas_w: usize,
    canvas_h: usize,
) -> ImageF {
    let layers: Vec<ImageF> = placements
        .iter()
        .filter(|p| p.present)
        .map(|p| gaussian_blur(&rasterize_glyph(bank, p, canvas_w, canvas_h), p.blur))
        .collect();
    let composed = composite(&layers, canvas_w, canvas_h)
        .expect("glyph layers share the canvas dimensions");
    gaussian_blur(&composed, global_blur)
}
