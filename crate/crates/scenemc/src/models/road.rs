//! The road-finding scene model: seven prior variables describing a
//! ground-plane road strip, rendered to a 4-region segmentation and scored
//! with the pseudo-count-smoothed appearance likelihood.

use crate::appearance::{quantize, region_loglik, AppearanceModel, ColorImage, QuantizedImage};
use crate::engine::{Address, AddressSpace, Dist, SceneModel, Trace, Values};
use crate::render3d::{render_road, Camera, Region, RegionImage, RoadScene};
use crate::{Error, Result};

/// Indices of the road model's addresses.
pub mod site {
    pub const ROAD_WIDTH: usize = 0;
    pub const ROAD_HEIGHT: usize = 1;
    pub const LANE_POS_X: usize = 2;
    pub const LANE_POS_Y: usize = 3;
    pub const LANE_POS_Z: usize = 4;
    pub const LANE_SIZE: usize = 5;
    pub const EPS: usize = 6;
}

/// Camera plus the candidate appearance models for a frame.
#[derive(Debug, Clone)]
pub struct RoadModelConfig {
    pub camera: Camera,
    pub appearance_models: Vec<AppearanceModel>,
}

impl RoadModelConfig {
    pub fn new(camera: Camera, appearance_models: Vec<AppearanceModel>) -> Result<Self> {
        if appearance_models.is_empty() {
            return Err(Error::Config("at least one appearance model is required".into()));
        }
        Ok(RoadModelConfig { camera, appearance_models })
    }
}

/// The seven-variable address bank of the road model.
pub fn road_space() -> AddressSpace {
    AddressSpace::new(vec![
        (Address::new("road_width"), Dist::UniformDiscrete { lo: 5, hi: 8 }),
        (Address::new("road_height"), Dist::UniformDiscrete { lo: 70, hi: 150 }),
        (Address::new("lane_pos_x"), Dist::UniformContinuous { lo: -1.0, hi: 1.0 }),
        (Address::new("lane_pos_y"), Dist::UniformContinuous { lo: -5.0, hi: 0.0 }),
        (Address::new("lane_pos_z"), Dist::UniformContinuous { lo: 1.0, hi: 3.5 }),
        (Address::new("lane_size"), Dist::UniformContinuous { lo: 0.10, hi: 0.35 }),
        (Address::new("eps"), Dist::Gamma { shape: 1.0, rate: 1.0 }),
    ])
    .expect("road model addresses are valid")
}

/// The road model bound to one frame and one appearance model. The frame is
/// quantized against the model's centroids once, at construction.
#[derive(Debug, Clone)]
pub struct RoadModel {
    camera: Camera,
    space: AddressSpace,
    appearance: AppearanceModel,
    quantized: QuantizedImage,
}

/// Binds the road model to a frame using one appearance model.
pub fn road_model(camera: Camera, frame: &ColorImage, appearance: AppearanceModel) -> Result<RoadModel> {
    if frame.dims() != (camera.image_w, camera.image_h) {
        return Err(Error::Config(format!(
            "frame is {:?} but the camera renders {:?}",
            frame.dims(),
            (camera.image_w, camera.image_h)
        )));
    }
    appearance.validate()?;
    let quantized = quantize(frame, &appearance.centroids);
    Ok(RoadModel { camera, space: road_space(), appearance, quantized })
}

impl RoadModel {
    pub fn camera(&self) -> &Camera {
        &self.camera
    }

    pub fn appearance(&self) -> &AppearanceModel {
        &self.appearance
    }

    pub fn scene(&self, values: Values<'_>) -> RoadScene {
        RoadScene {
            road_width: values.int_at(site::ROAD_WIDTH),
            road_height: values.int_at(site::ROAD_HEIGHT),
            lane_pos_x: values.real_at(site::LANE_POS_X),
            lane_pos_y: values.real_at(site::LANE_POS_Y),
            lane_pos_z: values.real_at(site::LANE_POS_Z),
            lane_size: values.real_at(site::LANE_SIZE),
        }
    }

    pub fn eps(&self, values: Values<'_>) -> f64 {
        values.real_at(site::EPS)
    }
}

impl SceneModel for RoadModel {
    type Render = RegionImage;

    fn space(&self) -> &AddressSpace {
        &self.space
    }

    fn render(&self, values: Values<'_>) -> RegionImage {
        render_road(&self.scene(values), &self.camera)
    }

    fn log_likelihood(&self, rendered: &RegionImage, values: Values<'_>) -> f64 {
        region_loglik(&self.quantized, rendered, &self.appearance.theta, self.eps(values))
            .expect("dimensions agree and the eps prior is positive")
    }
}

/// Binary lane indicator used for evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct LaneMask {
    width: usize,
    height: usize,
    lane: Vec<bool>,
}

impl LaneMask {
    pub fn new(width: usize, height: usize, lane: Vec<bool>) -> Result<Self> {
        if lane.len() != width * height {
            return Err(Error::Data("mask buffer does not match dimensions".into()));
        }
        Ok(LaneMask { width, height, lane })
    }

    /// Lane pixels of a region labeling.
    pub fn from_regions(labels: &RegionImage) -> LaneMask {
        LaneMask {
            width: labels.width(),
            height: labels.height(),
            lane: labels.labels().iter().map(|l| *l == Region::Lane as u8).collect(),
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn lane(&self) -> &[bool] {
        &self.lane
    }
}

/// Fraction of pixels whose lane/non-lane classification matches the truth
/// mask.
pub fn lane_pixel_accuracy(predicted: &RegionImage, truth: &LaneMask) -> Result<f64> {
    if predicted.dims() != truth.dims() {
        return Err(Error::Usage(format!(
            "prediction is {:?}, truth mask is {:?}",
            predicted.dims(),
            truth.dims()
        )));
    }
    let agree = predicted
        .labels()
        .iter()
        .zip(truth.lane.iter())
        .filter(|(l, t)| (**l == Region::Lane as u8) == **t)
        .count();
    Ok(agree as f64 / truth.lane.len() as f64)
}

/// Maximum-likelihood selection over appearance models and their posterior
/// samples: returns the region image of the highest-scoring (model, sample)
/// pair along with both indices. Ties resolve to the lowest indices.
pub fn decide_road(
    per_model_samples: &[Vec<Trace<RegionImage>>],
) -> Result<(RegionImage, usize, usize)> {
    if per_model_samples.is_empty() || per_model_samples.iter().any(|s| s.is_empty()) {
        return Err(Error::Usage(
            "decide_road needs at least one sample for every appearance model".into(),
        ));
    }
    let mut best: Option<(f64, usize, usize)> = None;
    for (m, samples) in per_model_samples.iter().enumerate() {
        for (s, trace) in samples.iter().enumerate() {
            let score = trace.cached_loglik;
            let better = match best {
                None => true,
                Some((b, _, _)) => score > b,
            };
            if better {
                best = Some((score, m, s));
            }
        }
    }
    let (_, m, s) = best.unwrap();
    Ok((per_model_samples[m][s].cached_render.clone(), m, s))
}
