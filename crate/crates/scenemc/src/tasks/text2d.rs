//! Text-scene synthesis and inference.

use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::config::{SynthConstraints, TextConfigFile};
use super::{chain_seed, parallel_map, RunManifest};
use crate::engine::{run_chain, ChainConfig, ChainDiagnostics, Choice, SceneModel, Trace};
use crate::models::text::{reading_from_values, PER_GLYPH};
use crate::models::{decide_text_detailed, text_model, TextModelConfig, TextReading};
use crate::render2d::{render_text_scene, GlyphBank, GlyphPlacement, ImageF};
use crate::{io, Error, Result};

/// Default synthesis canvas when the config pins none; matches the 0..=200
/// position prior.
const DEFAULT_SYNTH_CANVAS: (usize, usize) = (200, 200);

#[derive(Debug, Clone)]
pub struct Synth2dRequest {
    pub config: TextConfigFile,
    pub count: usize,
    pub seed: u64,
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone)]
pub struct SynthItem {
    pub stem: String,
    pub image_path: PathBuf,
    pub truth_path: PathBuf,
    pub reading: TextReading,
    pub image: ImageF,
}

#[derive(Debug, Clone)]
pub struct Synth2dOutput {
    pub items: Vec<SynthItem>,
    pub manifest_path: PathBuf,
    pub config: TextModelConfig,
}

fn box_overlap(a: (f64, f64, f64, f64), b: (f64, f64, f64, f64)) -> f64 {
    let ix = (a.0 + a.2).min(b.0 + b.2) - a.0.max(b.0);
    let iy = (a.1 + a.3).min(b.1 + b.3) - a.1.max(b.1);
    if ix <= 0.0 || iy <= 0.0 {
        return 0.0;
    }
    let inter = ix * iy;
    let smaller = (a.2 * a.3).min(b.2 * b.3);
    if smaller <= 0.0 {
        0.0
    } else {
        inter / smaller
    }
}

fn satisfies_constraints(
    cfg: &TextModelConfig,
    cons: &SynthConstraints,
    placements: &[GlyphPlacement],
    global_blur: f64,
) -> bool {
    let present: Vec<&GlyphPlacement> = placements.iter().filter(|p| p.present).collect();
    if present.len() < cons.min_present || present.len() > cons.max_present {
        return false;
    }
    if global_blur >= cons.max_global_blur {
        return false;
    }
    let mut boxes = Vec::with_capacity(present.len());
    for p in &present {
        if (p.size_x as i64) < cons.min_size || (p.size_y as i64) < cons.min_size {
            return false;
        }
        if p.blur >= cons.max_glyph_blur {
            return false;
        }
        let (dx, dy, w, h) =
            crate::render2d::rotated_bbox(p.size_x as usize, p.size_y as usize, p.rotation);
        let bx = ((p.pos_x + dx) as f64, (p.pos_y + dy) as f64, w as f64, h as f64);
        if cons.require_inside
            && (bx.0 < 0.0
                || bx.1 < 0.0
                || bx.0 + bx.2 > cfg.canvas_w as f64
                || bx.1 + bx.3 > cfg.canvas_h as f64)
        {
            return false;
        }
        boxes.push(bx);
    }
    for i in 0..boxes.len() {
        for j in i + 1..boxes.len() {
            if box_overlap(boxes[i], boxes[j]) >= cons.max_overlap {
                return false;
            }
        }
    }
    true
}

/// Draws `count` constrained prior scenes, rendering each to a PNG and
/// saving its trace as the ground-truth JSON.
pub fn synth2d(req: &Synth2dRequest) -> Result<Synth2dOutput> {
    let cfg = req.config.resolve(DEFAULT_SYNTH_CANVAS);
    let cons = req.config.constraints.unwrap_or_default();
    let space = cfg.address_space();
    let bank = GlyphBank::builtin();
    std::fs::create_dir_all(&req.out_dir)?;

    let mut manifest = RunManifest::begin(
        "synth2d",
        serde_json::json!({ "model": cfg, "constraints": cons, "count": req.count }),
        req.seed,
        vec![],
        &req.out_dir,
    );

    let mut rng = ChaCha8Rng::seed_from_u64(req.seed);
    let mut items = Vec::with_capacity(req.count);
    for index in 0..req.count {
        let mut tries = 0usize;
        let choices = loop {
            tries += 1;
            if tries > 100_000 {
                return Err(Error::Data(
                    "synthesis constraints rejected 100000 consecutive prior draws".into(),
                ));
            }
            let mut choices = Vec::with_capacity(space.len());
            for (_, dist) in space.iter() {
                choices.push(Choice::new(dist.sample(&mut rng)?, *dist));
            }
            let trace: Trace<()> = Trace::from_parts(choices, (), 0.0);
            let values = trace.values();
            let placements: Vec<GlyphPlacement> = (0..cfg.max_glyphs)
                .map(|i| placement_at(values, i))
                .collect();
            let global_blur = values.real_at(cfg.max_glyphs * PER_GLYPH);
            if satisfies_constraints(&cfg, &cons, &placements, global_blur) {
                break trace;
            }
        };

        let values = choices.values();
        let placements: Vec<GlyphPlacement> =
            (0..cfg.max_glyphs).map(|i| placement_at(values, i)).collect();
        let global_blur = values.real_at(cfg.max_glyphs * PER_GLYPH);
        let image = render_text_scene(bank, &placements, global_blur, cfg.canvas_w, cfg.canvas_h);

        let stem = format!("item_{index:03}");
        let image_path = req.out_dir.join(format!("{stem}.png"));
        let truth_path = req.out_dir.join(format!("{stem}.truth.json"));
        io::save_gray_png(&image, &image_path)?;
        io::write_json_atomic(&truth_path, &choices.to_json(&space))?;
        manifest.record(&image_path)?;
        manifest.record(&truth_path)?;

        items.push(SynthItem {
            stem,
            image_path,
            truth_path,
            reading: reading_from_values(&cfg, values),
            image,
        });
    }

    let manifest_path = manifest.finish(&req.out_dir, "manifest.json")?;
    Ok(Synth2dOutput { items, manifest_path, config: cfg })
}

fn placement_at(values: crate::engine::Values<'_>, i: usize) -> GlyphPlacement {
    use crate::models::text::slot;
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

#[derive(Debug, Clone)]
pub struct Infer2dRequest {
    pub image: PathBuf,
    pub config: TextConfigFile,
    pub chains: usize,
    pub steps: usize,
    pub seed: u64,
    pub gibbs_probability: f64,
    pub record_every: usize,
    pub samples_per_chain: usize,
    pub out_dir: PathBuf,
}

impl Infer2dRequest {
    pub fn new(image: PathBuf, steps: usize, seed: u64, out_dir: PathBuf) -> Self {
        Infer2dRequest {
            image,
            config: TextConfigFile::default(),
            chains: 5,
            steps,
            seed,
            gibbs_probability: 0.1,
            record_every: 10,
            samples_per_chain: 100,
            out_dir,
        }
    }
}

/// One chain's retained samples and diagnostics.
pub struct ChainRun {
    pub samples: Vec<Trace<ImageF>>,
    pub diagnostics: ChainDiagnostics,
}

pub struct Infer2dOutput {
    pub stem: String,
    pub reading: TextReading,
    pub best_chain: usize,
    pub reconstruction_error: f64,
    pub chains: Vec<ChainRun>,
    pub reading_path: PathBuf,
    pub config: TextModelConfig,
}

/// Runs independent chains on one image, applies the lowest-reconstruction-
/// error decision rule to the chains' final samples, and writes the reading
/// JSON, per-chain diagnostics CSVs and the winning rendering.
pub fn infer2d(req: &Infer2dRequest) -> Result<Infer2dOutput> {
    if req.chains == 0 {
        return Err(Error::Config("at least one chain is required".into()));
    }
    let data = io::load_gray_png(&req.image, req.config.invert)?;
    let cfg = req.config.resolve(data.dims());
    let model = text_model(cfg, data)?;
    std::fs::create_dir_all(&req.out_dir)?;

    let stem = req
        .image
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "image".into());

    let thin = (req.steps / req.samples_per_chain.max(1)).max(1);
    let configs: Vec<ChainConfig> = (0..req.chains)
        .map(|i| {
            ChainConfig::new(req.steps, chain_seed(req.seed, i as u64))
                .with_gibbs_probability(req.gibbs_probability)
                .with_record_every(req.record_every)
                .with_thin(thin)
        })
        .collect();

    let runs: Vec<Result<(Vec<Trace<ImageF>>, ChainDiagnostics)>> =
        parallel_map(configs, |config| {
            let local = model.clone();
            run_chain(&local, &config)
        });
    let mut chains = Vec::with_capacity(req.chains);
    for run in runs {
        let (samples, diagnostics) = run?;
        chains.push(ChainRun { samples, diagnostics });
    }

    let finals: Vec<Trace<ImageF>> = chains
        .iter()
        .map(|c| c.samples.last().expect("steps >= thin yields a sample").clone())
        .collect();
    let (reading, best_chain, reconstruction_error) = decide_text_detailed(&model, &finals)?;

    let mut manifest = RunManifest::begin(
        "infer2d",
        serde_json::json!({
            "model": cfg,
            "chains": req.chains,
            "steps": req.steps,
            "gibbs_probability": req.gibbs_probability,
            "record_every": req.record_every,
            "samples_per_chain": req.samples_per_chain,
        }),
        req.seed,
        vec![req.image.display().to_string()],
        &req.out_dir,
    );

    let reading_path = req.out_dir.join(format!("{stem}.reading.json"));
    io::write_json_atomic(&reading_path, &serde_json::to_value(&reading)?)?;
    manifest.record(&reading_path)?;

    for (i, chain) in chains.iter().enumerate() {
        let path = req.out_dir.join(format!("{stem}.chain{i:02}.csv"));
        std::fs::write(&path, chain.diagnostics.to_csv())?;
        manifest.record(&path)?;
    }

    let best_path = req.out_dir.join(format!("{stem}.best.png"));
    io::save_gray_png(&finals[best_chain].cached_render, &best_path)?;
    manifest.record(&best_path)?;
    manifest.finish(&req.out_dir, &format!("{stem}.manifest.json"))?;

    Ok(Infer2dOutput {
        stem,
        reading,
        best_chain,
        reconstruction_error,
        chains,
        reading_path,
        config: cfg,
    })
}

/// Convenience wrapper used by tests: infer directly on an in-memory image.
pub(crate) fn infer2d_in_memory(
    data: ImageF,
    cfg: TextModelConfig,
    req_chains: usize,
    steps: usize,
    seed: u64,
    gibbs_probability: f64,
    samples_per_chain: usize,
) -> Result<(TextReading, Vec<ChainRun>, usize)> {
    let model = text_model(cfg, data)?;
    let thin = (steps / samples_per_chain.max(1)).max(1);
    let configs: Vec<ChainConfig> = (0..req_chains)
        .map(|i| {
            ChainConfig::new(steps, chain_seed(seed, i as u64))
                .with_gibbs_probability(gibbs_probability)
                .with_thin(thin)
        })
        .collect();
    let runs = parallel_map(configs, |config| {
        let local = model.clone();
        run_chain(&local, &config)
    });
    let mut chains = Vec::new();
    for run in runs {
        let (samples, diagnostics) = run?;
        chains.push(ChainRun { samples, diagnostics });
    }
    let finals: Vec<Trace<ImageF>> =
        chains.iter().map(|c| c.samples.last().unwrap().clone()).collect();
    let (reading, best, _) = decide_text_detailed(&model, &finals)?;
    Ok((reading, chains, best))
}

/// Mean blur of present glyphs in one trace; `None` when no glyph is
/// present.
pub fn mean_present_blur(cfg: &TextModelConfig, trace: &Trace<ImageF>) -> Option<f64> {
    use crate::models::text::slot;
    let values = trace.values();
    let mut total = 0.0;
    let mut count = 0usize;
    for i in 0..cfg.max_glyphs {
        let base = i * PER_GLYPH;
        if values.bool_at(base + slot::PRESENT) {
            total += values.real_at(base + slot::BLUR);
            count += 1;
        }
    }
    (count > 0).then(|| total / count as f64)
}
