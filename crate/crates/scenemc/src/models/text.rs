//! The glyph-reading scene model: up to ten independently posed glyphs,
//! per-glyph and global blur control variables, a blur applied to the
//! observed image, and a Gaussian pixel likelihood whose tolerance is
//! itself inferred.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use crate::engine::{Address, AddressSpace, Dist, SceneModel, Trace, Value, Values};
use crate::render2d::{
    gaussian_blur, gaussian_pixel_loglik, rasterize_patch, rotated_bbox, GlyphBank,
    GlyphPlacement, ImageF, BLUR_IDENTITY_CUTOFF,
};
use crate::{Error, Result};

/// Variables per glyph slot, in address order.
pub const PER_GLYPH: usize = 8;

/// Offsets of the per-glyph variables within a slot.
pub mod slot {
    pub const PRESENT: usize = 0;
    pub const POS_X: usize = 1;
    pub const POS_Y: usize = 2;
    pub const SIZE_X: usize = 3;
    pub const SIZE_Y: usize = 4;
    pub const ROTATION: usize = 5;
    pub const GLYPH_ID: usize = 6;
    pub const BLUR: usize = 7;
}

/// Prior constants of the text model. Defaults reproduce the shipped
/// program: ten glyph slots, positions and sizes on 0..=200 and 0..=100,
/// rotation within +-20 degrees, and 7*Beta(1,2) blur bandwidths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TextModelConfig {
    pub canvas_w: usize,
    pub canvas_h: usize,
    pub max_glyphs: usize,
    pub blur_scale: f64,
    pub rotation_max: f64,
    pub pos_max: i64,
    pub size_max: i64,
}

impl TextModelConfig {
    pub fn for_canvas(canvas_w: usize, canvas_h: usize) -> Self {
        TextModelConfig {
            canvas_w,
            canvas_h,
            max_glyphs: 10,
            blur_scale: 7.0,
            rotation_max: 20.0,
            pos_max: 200,
            size_max: 100,
        }
    }

    /// Total number of random variables: 8 per glyph plus the global blur,
    /// the data blur and the likelihood tolerance.
    pub fn address_count(&self) -> usize {
        self.max_glyphs * PER_GLYPH + 3
    }

    /// The model's ordered address bank with its priors.
    pub fn address_space(&self) -> AddressSpace {
        let mut entries = Vec::with_capacity(self.address_count());
        for i in 0..self.max_glyphs {
            let beta = Dist::ScaledBeta { scale: self.blur_scale, a: 1.0, b: 2.0 };
            entries.push((
                Address::new(format!("glyph[{i}].present")),
                Dist::Bernoulli { p: 0.5 },
            ));
            entries.push((
                Address::new(format!("glyph[{i}].pos_x")),
                Dist::UniformDiscrete { lo: 0, hi: self.pos_max },
            ));
            entries.push((
                Address::new(format!("glyph[{i}].pos_y")),
                Dist::UniformDiscrete { lo: 0, hi: self.pos_max },
            ));
            entries.push((
                Address::new(format!("glyph[{i}].size_x")),
                Dist::UniformDiscrete { lo: 0, hi: self.size_max },
            ));
            entries.push((
                Address::new(format!("glyph[{i}].size_y")),
                Dist::UniformDiscrete { lo: 0, hi: self.size_max },
            ));
            entries.push((
                Address::new(format!("glyph[{i}].rotation")),
                Dist::UniformContinuous { lo: -self.rotation_max, hi: self.rotation_max },
            ));
            entries.push((
                Address::new(format!("glyph[{i}].glyph_id")),
                Dist::UniformDiscrete { lo: 0, hi: 35 },
            ));
            entries.push((Address::new(format!("glyph[{i}].blur")), beta));
        }
        let beta = Dist::ScaledBeta { scale: self.blur_scale, a: 1.0, b: 2.0 };
        entries.push((Address::new("global_blur"), beta));
        entries.push((Address::new("data_blur"), beta));
        entries.push((Address::new("epsilon"), Dist::Gamma { shape: 1.0, rate: 1.0 }));
        AddressSpace::new(entries).expect("text model addresses are valid")
    }
}

#[derive(Clone, PartialEq, Eq, Hash)]
struct LayerKey {
    glyph_id: u8,
    pos_x: i64,
    pos_y: i64,
    size_x: u32,
    size_y: u32,
    rotation_bits: u64,
    blur_bits: u64,
}

/// A rendered-and-blurred glyph layer, stored either as a tight patch with
/// a canvas offset or as a full canvas when the glyph meets the border.
struct Layer {
    off_x: i64,
    off_y: i64,
    img: ImageF,
}

const LAYER_CACHE_CAP: usize = 96;

/// The bound text model: configuration, glyph bank and observed image are
/// fixed; rendering and likelihood are pure functions of the trace values.
/// Internal memo tables only cache those pure results, so clones (one per
/// chain) behave identically.
pub struct TextModel {
    cfg: TextModelConfig,
    space: AddressSpace,
    bank: Arc<GlyphBank>,
    data: Arc<ImageF>,
    layers: Mutex<HashMap<LayerKey, Arc<Layer>>>,
    blurred_data: Mutex<Option<(u64, Arc<ImageF>)>>,
}

impl Clone for TextModel {
    fn clone(&self) -> Self {
        TextModel {
            cfg: self.cfg,
            space: self.space.clone(),
            bank: Arc::clone(&self.bank),
            data: Arc::clone(&self.data),
            layers: Mutex::new(HashMap::new()),
            blurred_data: Mutex::new(None),
        }
    }
}

/// Binds the text model to an observed image. The image dimensions must
/// match the configured canvas.
pub fn text_model(cfg: TextModelConfig, data: ImageF) -> Result<TextModel> {
    text_model_with_bank(cfg, data, Arc::new(GlyphBank::builtin().clone()))
}

pub fn text_model_with_bank(
    cfg: TextModelConfig,
    data: ImageF,
    bank: Arc<GlyphBank>,
) -> Result<TextModel> {
    if data.dims() != (cfg.canvas_w, cfg.canvas_h) {
        return Err(Error::Config(format!(
            "data image is {:?} but the configured canvas is {:?}",
            data.dims(),
            (cfg.canvas_w, cfg.canvas_h)
        )));
    }
    Ok(TextModel {
        space: cfg.address_space(),
        cfg,
        bank,
        data: Arc::new(data),
        layers: Mutex::new(HashMap::new()),
        blurred_data: Mutex::new(None),
    })
}

impl TextModel {
    pub fn config(&self) -> &TextModelConfig {
        &self.cfg
    }

    pub fn bank(&self) -> &GlyphBank {
        &self.bank
    }

    pub fn data(&self) -> &ImageF {
        &self.data
    }

    /// The placement encoded in glyph slot `i` of `values`.
    pub fn placement(&self, values: Values<'_>, i: usize) -> GlyphPlacement {
        let base = i * PER_GLYPH;
        GlyphPlacement {
            present: values.bool_at(base + slot::PRESENT),
            pos_x: values.int_at(base + slot::POS_X),
            pos_y: values.int_at(base + slot::POS_Y),
            size_x: values.int_at(base + slot::SIZE_X) as u32,
            size_y: values.int_at(base + slot::SIZE_Y) as u32,
            rotation: values.real_at(base + slot::ROTATION),
            glyph_id: values.int_at(base + slot::GLYPH_ID) as u8,
            blur: values.real_at(base + slot::BLUR),
        }
    }

    pub fn placements(&self, values: Values<'_>) -> Vec<GlyphPlacement> {
        (0..self.cfg.max_glyphs).map(|i| self.placement(values, i)).collect()
    }

    pub fn global_blur(&self, values: Values<'_>) -> f64 {
        values.real_at(self.cfg.max_glyphs * PER_GLYPH)
    }

    pub fn data_blur(&self, values: Values<'_>) -> f64 {
        values.real_at(self.cfg.max_glyphs * PER_GLYPH + 1)
    }

    pub fn epsilon(&self, values: Values<'_>) -> f64 {
        values.real_at(self.cfg.max_glyphs * PER_GLYPH + 2)
    }

    /// The observed image blurred with the given data-blur bandwidth
    /// (memoized on the bandwidth).
    pub fn blurred_data(&self, data_blur: f64) -> Arc<ImageF> {
        let bits = data_blur.to_bits();
        let mut memo = self.blurred_data.lock().unwrap();
        if let Some((k, img)) = memo.as_ref() {
            if *k == bits {
                return Arc::clone(img);
            }
        }
        let img = Arc::new(gaussian_blur(&self.data, data_blur));
        *memo = Some((bits, Arc::clone(&img)));
        img
    }

    /// Builds (or fetches) the rasterized-and-blurred layer for a present
    /// placement. When the blur-dilated patch lies fully inside the canvas
    /// the layer is kept as a tight patch; the composition is bit-identical
    /// to rasterizing and blurring at canvas size because every clamped
    /// read beyond the patch sees the zeros that are really there.
    fn layer(&self, p: &GlyphPlacement) -> Arc<Layer> {
        let key = LayerKey {
            glyph_id: p.glyph_id,
            pos_x: p.pos_x,
            pos_y: p.pos_y,
            size_x: p.size_x,
            size_y: p.size_y,
            rotation_bits: p.rotation.to_bits(),
            blur_bits: p.blur.to_bits(),
        };
        {
            let cache = self.layers.lock().unwrap();
            if let Some(layer) = cache.get(&key) {
                return Arc::clone(layer);
            }
        }
        let layer = Arc::new(self.build_layer(p));
        let mut cache = self.layers.lock().unwrap();
        if cache.len() >= LAYER_CACHE_CAP {
            cache.clear();
        }
        cache.insert(key, Arc::clone(&layer));
        layer
    }

    fn build_layer(&self, p: &GlyphPlacement) -> Layer {
        let (cw, ch) = (self.cfg.canvas_w, self.cfg.canvas_h);
        if p.size_x == 0 || p.size_y == 0 {
            return Layer { off_x: 0, off_y: 0, img: ImageF::zeros(1, 1) };
        }
        let (dx, dy, patch) = rasterize_patch(&self.bank, p.glyph_id, p.size_x, p.size_y, p.rotation);
        let r = if p.blur < BLUR_IDENTITY_CUTOFF { 0 } else { (3.0 * p.blur).ceil() as i64 };
        let (pw, ph) = patch.dims();
        let x0 = p.pos_x + dx - r;
        let y0 = p.pos_y + dy - r;
        let x1 = p.pos_x + dx + pw as i64 + r;
        let y1 = p.pos_y + dy + ph as i64 + r;
        if x0 >= 0 && y0 >= 0 && x1 <= cw as i64 && y1 <= ch as i64 {
            // Interior fast path: blur the zero-padded patch.
            let mut padded = ImageF::zeros(pw + 2 * r as usize, ph + 2 * r as usize);
            padded.blend_max(&patch, r, r);
            Layer { off_x: x0, off_y: y0, img: gaussian_blur(&padded, p.blur) }
        } else {
            // The dilated patch meets the canvas border; fall back to the
            // full-canvas pipeline so edge clamping matches exactly.
            let mut canvas = ImageF::zeros(cw, ch);
            canvas.blend_max(&patch, p.pos_x + dx, p.pos_y + dy);
            Layer { off_x: 0, off_y: 0, img: gaussian_blur(&canvas, p.blur) }
        }
    }
}

impl SceneModel for TextModel {
    type Render = ImageF;

    fn space(&self) -> &AddressSpace {
        &self.space
    }

    fn render(&self, values: Values<'_>) -> ImageF {
        let mut canvas = ImageF::zeros(self.cfg.canvas_w, self.cfg.canvas_h);
        for i in 0..self.cfg.max_glyphs {
            let p = self.placement(values, i);
            if !p.present {
                continue;
            }
            let layer = self.layer(&p);
            canvas.blend_max(&layer.img, layer.off_x, layer.off_y);
        }
        gaussian_blur(&canvas, self.global_blur(values))
    }

    fn log_likelihood(&self, rendered: &ImageF, values: Values<'_>) -> f64 {
        let data = self.blurred_data(self.data_blur(values));
        gaussian_pixel_loglik(&data, rendered, self.epsilon(values))
            .expect("dimensions agree and the tolerance prior is positive")
    }
}

/// Axis-aligned bounding box of one placed glyph.
fn placed_box(p: &GlyphPlacement) -> (f64, f64, f64, f64) {
    let (dx, dy, w, h) = rotated_bbox(p.size_x as usize, p.size_y as usize, p.rotation);
    ((p.pos_x + dx) as f64, (p.pos_y + dy) as f64, w as f64, h as f64)
}

/// One read character with its bounding box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CharBox {
    pub ch: char,
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

impl CharBox {
    fn center(&self) -> (f64, f64) {
        (self.x + self.w / 2.0, self.y + self.h / 2.0)
    }
}

/// An ordered reading: present glyphs sorted by ascending x position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TextReading {
    pub text: String,
    pub boxes: Vec<CharBox>,
}

/// Extracts the reading encoded by trace values under `cfg`: present glyphs
/// ordered by pos_x (ties by slot index).
pub fn reading_from_values(cfg: &TextModelConfig, values: Values<'_>) -> TextReading {
    let mut glyphs: Vec<(i64, usize, GlyphPlacement)> = Vec::new();
    for i in 0..cfg.max_glyphs {
        let base = i * PER_GLYPH;
        let p = GlyphPlacement {
            present: values.bool_at(base + slot::PRESENT),
            pos_x: values.int_at(base + slot::POS_X),
            pos_y: values.int_at(base + slot::POS_Y),
            size_x: values.int_at(base + slot::SIZE_X) as u32,
            size_y: values.int_at(base + slot::SIZE_Y) as u32,
            rotation: values.real_at(base + slot::ROTATION),
            glyph_id: values.int_at(base + slot::GLYPH_ID) as u8,
            blur: values.real_at(base + slot::BLUR),
        };
        if p.present {
            glyphs.push((p.pos_x, i, p));
        }
    }
    glyphs.sort_by_key(|(x, i, _)| (*x, *i));
    let mut text = String::new();
    let mut boxes = Vec::new();
    for (_, _, p) in &glyphs {
        let ch = crate::render2d::glyph_char(p.glyph_id);
        let (x, y, w, h) = placed_box(p);
        text.push(ch);
        boxes.push(CharBox { ch, x, y, w, h });
    }
    TextReading { text, boxes }
}

/// Extracts a reading directly from a trace JSON document (address string
/// to value), scanning glyph slots until one is missing. Used to recover
/// ground truth from saved scene files without knowing the configuration.
pub fn reading_from_trace_json(json: &serde_json::Value) -> Result<TextReading> {
    let obj = json
        .as_object()
        .ok_or_else(|| Error::Data("trace JSON must be an object".into()))?;
    let mut glyphs: Vec<(i64, usize, GlyphPlacement)> = Vec::new();
    for i in 0.. {
        let key = |field: &str| format!("glyph[{i}].{field}");
        let Some(present) = obj.get(&key("present")) else { break };
        let present = present
            .as_bool()
            .ok_or_else(|| Error::Data(format!("glyph[{i}].present is not a bool")))?;
        let int = |field: &str| -> Result<i64> {
            obj.get(&key(field))
                .and_then(|v| v.as_i64())
                .ok_or_else(|| Error::Data(format!("glyph[{i}].{field} missing or not an int")))
        };
        let real = |field: &str| -> Result<f64> {
            obj.get(&key(field))
                .and_then(|v| v.as_f64())
                .ok_or_else(|| Error::Data(format!("glyph[{i}].{field} missing or not a real")))
        };
        let p = GlyphPlacement {
            present,
            pos_x: int("pos_x")?,
            pos_y: int("pos_y")?,
            size_x: int("size_x")? as u32,
            size_y: int("size_y")? as u32,
            rotation: real("rotation")?,
            glyph_id: int("glyph_id")? as u8,
            blur: real("blur")?,
        };
        if p.present {
            glyphs.push((p.pos_x, i, p));
        }
    }
    glyphs.sort_by_key(|(x, i, _)| (*x, *i));
    let mut text = String::new();
    let mut boxes = Vec::new();
    for (_, _, p) in &glyphs {
        let ch = crate::render2d::glyph_char(p.glyph_id);
        let (x, y, w, h) = placed_box(p);
        text.push(ch);
        boxes.push(CharBox { ch, x, y, w, h });
    }
    Ok(TextReading { text, boxes })
}

/// The hard decision rule: among posterior samples, pick the one whose
/// rendering has the lowest squared reconstruction error against the
/// (sample-blurred) observed image; ties go to the earliest sample.
pub fn decide_text(model: &TextModel, samples: &[Trace<ImageF>]) -> Result<TextReading> {
    let (reading, _, _) = decide_text_detailed(model, samples)?;
    Ok(reading)
}

/// [`decide_text`] plus the winning sample index and its reconstruction
/// error.
pub fn decide_text_detailed(
    model: &TextModel,
    samples: &[Trace<ImageF>],
) -> Result<(TextReading, usize, f64)> {
    if samples.is_empty() {
        return Err(Error::Usage("decide_text needs at least one sample".into()));
    }
    let mut best = 0usize;
    let mut best_err = f64::INFINITY;
    for (i, trace) in samples.iter().enumerate() {
        let values = trace.values();
        let data = model.blurred_data(model.data_blur(values));
        let err: f64 = data
            .pixels()
            .iter()
            .zip(trace.cached_render.pixels())
            .map(|(d, r)| (d - r) * (d - r))
            .sum();
        if err < best_err {
            best_err = err;
            best = i;
        }
    }
    let reading = reading_from_values(model.config(), samples[best].values());
    Ok((reading, best, best_err))
}

/// Greedy one-to-one character detection rate: predicted and truth glyphs
/// are matched by ascending box-center distance, a pair is admissible when
/// the centers are within half the truth glyph's larger side, and a match
/// counts only when the characters agree. The rate is matches / |truth|;
/// an empty truth reads as 1.
pub fn char_detection_rate(predicted: &TextReading, truth: &TextReading) -> f64 {
    if truth.boxes.is_empty() {
        return 1.0;
    }
    let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
    for (pi, p) in predicted.boxes.iter().enumerate() {
        for (ti, t) in truth.boxes.iter().enumerate() {
            let (px, py) = p.center();
            let (tx, ty) = t.center();
            let dist = ((px - tx).powi(2) + (py - ty).powi(2)).sqrt();
            if dist <= t.w.max(t.h) / 2.0 {
                pairs.push((dist, pi, ti));
            }
        }
    }
    pairs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut pred_used = vec![false; predicted.boxes.len()];
    let mut truth_used = vec![false; truth.boxes.len()];
    let mut matches = 0usize;
    for (_, pi, ti) in pairs {
        if pred_used[pi] || truth_used[ti] {
            continue;
        }
        pred_used[pi] = true;
        truth_used[ti] = true;
        if predicted.boxes[pi].ch == truth.boxes[ti].ch {
            matches += 1;
        }
    }
    matches as f64 / truth.boxes.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{init_trace, run_chain, ChainConfig, Choice};
    use crate::render2d::render_text_scene;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn small_cfg() -> TextModelConfig {
        TextModelConfig {
            canvas_w: 60,
            canvas_h: 50,
            pos_max: 40,
            size_max: 30,
            ..TextModelConfig::for_canvas(60, 50)
        }
    }

    fn test_data(cfg: &TextModelConfig) -> ImageF {
        ImageF::from_fn(cfg.canvas_w, cfg.canvas_h, |x, y| {
            ((x * 7 + y * 13) % 17) as f64 / 17.0
        })
    }

    #[test]
    fn address_bank_layout() {
        let cfg = TextModelConfig::for_canvas(200, 200);
        let model = text_model(cfg, ImageF::zeros(200, 200)).unwrap();
        let space = model.space();
        assert_eq!(space.len(), 83);
        // Bernoulli + UniformDiscrete sites: 6 per glyph, none global.
        assert_eq!(space.enumerable().len(), 60);
        assert_eq!(space.address(0).as_str(), "glyph[0].present");
        assert_eq!(space.address(9).as_str(), "glyph[1].pos_x");
        assert_eq!(space.address(80).as_str(), "global_blur");
        assert_eq!(space.address(82).as_str(), "epsilon");
        assert_eq!(*space.dist(14), Dist::UniformDiscrete { lo: 0, hi: 35 });
    }

    #[test]
    fn prior_sample_likelihood_is_finite() {
        let cfg = small_cfg();
        let model = text_model(cfg, test_data(&cfg)).unwrap();
        for seed in 0..30 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let trace = init_trace(&model, &mut rng).unwrap();
            assert!(trace.cached_loglik.is_finite());
        }
    }

    #[test]
    fn trace_prior_factorizes_over_addresses() {
        let cfg = small_cfg();
        let model = text_model(cfg, test_data(&cfg)).unwrap();
        for seed in 0..10 {
            let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
            let trace = init_trace(&model, &mut rng).unwrap();
            let direct: f64 = trace
                .choices()
                .iter()
                .map(|c| c.dist.log_density(&c.value))
                .sum();
            assert!((trace.log_prior() - direct).abs() < 1e-12);
        }
    }

    #[test]
    fn dimension_mismatch_is_config_error() {
        let cfg = small_cfg();
        assert!(matches!(
            text_model(cfg, ImageF::zeros(10, 10)),
            Err(Error::Config(_))
        ));
    }

    /// The cached patch-based renderer must agree bit for bit with the
    /// plain rasterize / blur / composite / blur pipeline, including
    /// glyphs that are clipped by the canvas border.
    #[test]
    fn cached_render_matches_reference_pipeline() {
        let cfg = small_cfg();
        let model = text_model(cfg, test_data(&cfg)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for round in 0..40 {
            let mut trace = init_trace(&model, &mut rng).unwrap();
            if round % 2 == 0 {
                // Force a border-clipped glyph through the slow path.
                let choices = trace.choices_mut();
                choices[0] = Choice::new(Value::Bool(true), *model.space().dist(0));
                choices[slot::POS_X] =
                    Choice::new(Value::Int(cfg.pos_max), *model.space().dist(slot::POS_X));
                choices[slot::SIZE_X] =
                    Choice::new(Value::Int(cfg.size_max), *model.space().dist(slot::SIZE_X));
                choices[slot::SIZE_Y] =
                    Choice::new(Value::Int(cfg.size_max), *model.space().dist(slot::SIZE_Y));
            }
            let values = trace.values();
            let fast = model.render(values);
            let reference = render_text_scene(
                model.bank(),
                &model.placements(values),
                model.global_blur(values),
                cfg.canvas_w,
                cfg.canvas_h,
            );
            assert_eq!(fast, reference, "round {round}");
            // And again through the warm cache.
            assert_eq!(model.render(values), reference);
        }
    }

    #[test]
    fn likelihood_matches_direct_composition() {
        let cfg = small_cfg();
        let model = text_model(cfg, test_data(&cfg)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let trace = init_trace(&model, &mut rng).unwrap();
        let values = trace.values();
        let direct = gaussian_pixel_loglik(
            &gaussian_blur(model.data(), model.data_blur(values)),
            &trace.cached_render,
            model.epsilon(values),
        )
        .unwrap();
        assert!((trace.cached_loglik - direct).abs() < 1e-12);
    }

    /// With data rendered from a known one-glyph scene at near-zero blur,
    /// conditional scoring of glyph_id at the true placement puts the true
    /// identity first.
    #[test]
    fn posterior_concentrates_on_true_glyph() {
        let cfg = TextModelConfig {
            canvas_w: 48,
            canvas_h: 48,
            max_glyphs: 1,
            pos_max: 20,
            size_max: 36,
            ..TextModelConfig::for_canvas(48, 48)
        };
        let true_id = crate::render2d::glyph_id('R').unwrap();
        let truth = GlyphPlacement {
            glyph_id: true_id,
            pos_x: 8,
            pos_y: 6,
            size_x: 30,
            size_y: 34,
            rotation: 0.0,
            blur: 0.0,
            present: true,
        };
        let data = render_text_scene(GlyphBank::builtin(), &[truth], 0.0, 48, 48);
        let model = text_model(cfg, data).unwrap();

        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut trace = init_trace(&model, &mut rng).unwrap();
        {
            let space = model.space().clone();
            let choices = trace.choices_mut();
            let mut set = |idx: usize, v: Value| choices[idx] = Choice::new(v, *space.dist(idx));
            set(slot::PRESENT, Value::Bool(true));
            set(slot::POS_X, Value::Int(truth.pos_x));
            set(slot::POS_Y, Value::Int(truth.pos_y));
            set(slot::SIZE_X, Value::Int(truth.size_x as i64));
            set(slot::SIZE_Y, Value::Int(truth.size_y as i64));
            set(slot::ROTATION, Value::Real(0.0));
            set(slot::BLUR, Value::Real(0.0));
            set(PER_GLYPH, Value::Real(0.0)); // global_blur
            set(PER_GLYPH + 1, Value::Real(0.0)); // data_blur
            set(PER_GLYPH + 2, Value::Real(0.3)); // epsilon
        }
        let mut scores = Vec::new();
        for id in 0..36i64 {
            trace.choices_mut()[slot::GLYPH_ID] =
                Choice::new(Value::Int(id), *model.space().dist(slot::GLYPH_ID));
            let rendered = model.render(trace.values());
            scores.push(model.log_likelihood(&rendered, trace.values()));
        }
        let argmax = scores
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap()
            .0;
        assert_eq!(argmax, true_id as usize);
    }

    #[test]
    fn reading_orders_by_pos_x() {
        let cfg = small_cfg();
        let model = text_model(cfg, test_data(&cfg)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        let mut trace = init_trace(&model, &mut rng).unwrap();
        let space = model.space().clone();
        {
            let choices = trace.choices_mut();
            for i in 0..cfg.max_glyphs {
                let base = i * PER_GLYPH;
                let present = i < 3;
                choices[base + slot::PRESENT] =
                    Choice::new(Value::Bool(present), *space.dist(base + slot::PRESENT));
                choices[base + slot::POS_X] = Choice::new(
                    Value::Int((30 - 10 * i as i64).max(0)),
                    *space.dist(base + slot::POS_X),
                );
                choices[base + slot::GLYPH_ID] =
                    Choice::new(Value::Int(i as i64), *space.dist(base + slot::GLYPH_ID));
                choices[base + slot::SIZE_X] =
                    Choice::new(Value::Int(10), *space.dist(base + slot::SIZE_X));
                choices[base + slot::SIZE_Y] =
                    Choice::new(Value::Int(10), *space.dist(base + slot::SIZE_Y));
            }
        }
        let reading = reading_from_values(&cfg, trace.values());
        // Slots 0,1,2 are present at x = 30, 20, 10: reading is reversed.
        assert_eq!(reading.text, "CBA");
        assert!(reading.boxes.windows(2).all(|w| w[0].x <= w[1].x));
    }

    #[test]
    fn decide_text_prefers_lowest_reconstruction_error() {
        let cfg = small_cfg();
        // Data that equals a rendered scene: that sample must win.
        let truth = GlyphPlacement {
            glyph_id: 0,
            pos_x: 12,
            pos_y: 10,
            size_x: 24,
            size_y: 28,
            rotation: 0.0,
            blur: 0.0,
            present: true,
        };
        let data = render_text_scene(GlyphBank::builtin(), &[truth], 0.0, 60, 50);
        let model = text_model(cfg, data).unwrap();

        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let mut samples = Vec::new();
        for _ in 0..4 {
            samples.push(init_trace(&model, &mut rng).unwrap());
        }
        // Craft a perfect sample: true glyph, everything else absent.
        let mut perfect = init_trace(&model, &mut rng).unwrap();
        {
            let space = model.space().clone();
            let choices = perfect.choices_mut();
            for i in 0..cfg.max_glyphs {
                let base = i * PER_GLYPH;
                choices[base + slot::PRESENT] =
                    Choice::new(Value::Bool(i == 0), *space.dist(base + slot::PRESENT));
            }
            let mut set = |idx: usize, v: Value| choices[idx] = Choice::new(v, *space.dist(idx));
            set(slot::POS_X, Value::Int(truth.pos_x));
            set(slot::POS_Y, Value::Int(truth.pos_y));
            set(slot::SIZE_X, Value::Int(truth.size_x as i64));
            set(slot::SIZE_Y, Value::Int(truth.size_y as i64));
            set(slot::ROTATION, Value::Real(0.0));
            set(slot::GLYPH_ID, Value::Int(0));
            set(slot::BLUR, Value::Real(0.0));
            set(cfg.max_glyphs * PER_GLYPH, Value::Real(0.0));
            set(cfg.max_glyphs * PER_GLYPH + 1, Value::Real(0.0));
        }
        let render = model.render(perfect.values());
        let loglik = model.log_likelihood(&render, perfect.values());
        let perfect = Trace::from_parts(perfect.choices().to_vec(), render, loglik);
        samples.push(perfect);

        let (reading, best, err) = decide_text_detailed(&model, &samples).unwrap();
        assert_eq!(best, samples.len() - 1);
        assert!(err < 1e-18);
        assert_eq!(reading.text, "A");

        // Single sample: trivially selected.
        let (_, only, _) = decide_text_detailed(&model, &samples[..1]).unwrap();
        assert_eq!(only, 0);

        // Exact tie: earliest index wins.
        let dup = samples[samples.len() - 1].clone();
        let tied = vec![samples[samples.len() - 1].clone(), dup];
        let (_, first, _) = decide_text_detailed(&model, &tied).unwrap();
        assert_eq!(first, 0);
    }

    #[test]
    fn detection_rate_cases() {
        let mk = |ch: char, x: f64| CharBox { ch, x, y: 0.0, w: 10.0, h: 12.0 };
        let truth = TextReading {
            text: "AB3".into(),
            boxes: vec![mk('A', 0.0), mk('B', 20.0), mk('3', 40.0)],
        };
        assert_eq!(char_detection_rate(&truth, &truth), 1.0);
        assert_eq!(
            char_detection_rate(&TextReading { text: String::new(), boxes: vec![] }, &truth),
            0.0
        );
        // One correct character plus a far-away spurious one: 1/3.
        let predicted = TextReading {
            text: "AZ".into(),
            boxes: vec![mk('A', 0.5), mk('Z', 200.0)],
        };
        let rate = char_detection_rate(&predicted, &truth);
        assert!((rate - 1.0 / 3.0).abs() < 1e-12);
        // A geometric match with the wrong character does not count.
        let wrong = TextReading { text: "Q".into(), boxes: vec![mk('Q', 0.5)] };
        assert_eq!(char_detection_rate(&wrong, &truth), 0.0);
    }

    /// A short chain on a tiny canvas exercises the full model through the
    /// engine; mainly a smoke check that caches, Gibbs sweeps and MH steps
    /// cooperate.
    #[test]
    fn short_chain_runs_clean() {
        let cfg = TextModelConfig {
            canvas_w: 32,
            canvas_h: 32,
            max_glyphs: 2,
            pos_max: 16,
            size_max: 16,
            ..TextModelConfig::for_canvas(32, 32)
        };
        let truth = GlyphPlacement {
            glyph_id: 5,
            pos_x: 4,
            pos_y: 4,
            size_x: 14,
            size_y: 14,
            rotation: 0.0,
            blur: 0.0,
            present: true,
        };
        let data = render_text_scene(GlyphBank::builtin(), &[truth], 0.5, 32, 32);
        let model = text_model(cfg, data).unwrap();
        let config = ChainConfig::new(300, 9).with_record_every(50);
        let (samples, diag) = run_chain(&model, &config).unwrap();
        assert_eq!(samples.len(), 1);
        assert_eq!(diag.rows.len(), 6);
        assert!(samples[0].cached_loglik.is_finite());
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let _: f64 = rng.gen();
    }
}
