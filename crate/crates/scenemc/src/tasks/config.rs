//! JSON-file configuration for the batch tasks. Every prior constant is
//! overridable but defaults to the shipped model's value, so running the
//! text task with no config uses the standard prior with the canvas taken
//! from the input image.

use serde::{Deserialize, Serialize};

use crate::models::TextModelConfig;

/// Constraints applied by rejection when synthesizing text scenes. The
/// defaults accept every prior draw.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConstraints {
    /// Bounds on the number of present glyphs.
    pub min_present: usize,
    pub max_present: usize,
    /// Maximum pairwise box overlap, measured as intersection area over the
    /// smaller box's area.
    pub max_overlap: f64,
    /// Upper bounds on the per-glyph and global blur of the truth scene.
    pub max_glyph_blur: f64,
    pub max_global_blur: f64,
    /// Minimum glyph size along each axis.
    pub min_size: i64,
    /// Require present glyph boxes to lie fully inside the canvas.
    pub require_inside: bool,
}

impl Default for SynthConstraints {
    fn default() -> Self {
        SynthConstraints {
            min_present: 0,
            max_present: usize::MAX,
            max_overlap: 1.0,
            max_glyph_blur: f64::INFINITY,
            max_global_blur: f64::INFINITY,
            min_size: 0,
            require_inside: false,
        }
    }
}

/// On-disk text-task configuration; absent fields fall back to the standard
/// prior constants.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct TextConfigFile {
    pub canvas_w: Option<usize>,
    pub canvas_h: Option<usize>,
    pub max_glyphs: Option<usize>,
    pub blur_scale: Option<f64>,
    pub rotation_max: Option<f64>,
    pub pos_max: Option<i64>,
    pub size_max: Option<i64>,
    /// Force or suppress intensity inversion when loading images; unset
    /// means automatic (invert when the mean intensity exceeds 0.5).
    pub invert: Option<bool>,
    pub constraints: Option<SynthConstraints>,
}

impl TextConfigFile {
    /// Resolves against the standard constants, with the canvas taken from
    /// `fallback_canvas` (usually the input image) when not pinned here.
    pub fn resolve(&self, fallback_canvas: (usize, usize)) -> TextModelConfig {
        let defaults = TextModelConfig::for_canvas(
            self.canvas_w.unwrap_or(fallback_canvas.0),
            self.canvas_h.unwrap_or(fallback_canvas.1),
        );
        TextModelConfig {
            max_glyphs: self.max_glyphs.unwrap_or(defaults.max_glyphs),
            blur_scale: self.blur_scale.unwrap_or(defaults.blur_scale),
            rotation_max: self.rotation_max.unwrap_or(defaults.rotation_max),
            pos_max: self.pos_max.unwrap_or(defaults.pos_max),
            size_max: self.size_max.unwrap_or(defaults.size_max),
            ..defaults
        }
    }

    pub fn from_path(path: &std::path::Path) -> crate::Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| crate::Error::Config(e.to_string()))
    }
}
