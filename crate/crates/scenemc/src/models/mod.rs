//! The two concrete scene models and their hard-decision rules.

pub mod road;
pub mod text;

pub use road::{
    road_space,
    decide_road, lane_pixel_accuracy, road_model, LaneMask, RoadModel, RoadModelConfig,
};
pub use text::{
    char_detection_rate, decide_text, decide_text_detailed, reading_from_values, text_model,
    text_model_with_bank, CharBox, TextModel, TextModelConfig, TextReading,
};
