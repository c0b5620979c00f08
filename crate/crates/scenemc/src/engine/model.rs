//! The contract a scene model presents to the inference engine.

use super::trace::{AddressSpace, Values};

/// A generative image-interpretation model: an ordered bank of prior choices,
/// a deterministic renderer from choice values to a model-specific rendering,
/// and a stochastic likelihood scoring that rendering against the observed
/// data the model was built around.
///
/// `render` and `log_likelihood` must be pure functions of their arguments
/// (observed data and any configuration are fixed at construction), so a
/// model may be shared or cloned across concurrently running chains.
pub trait SceneModel {
    /// Renderer output: a grayscale image, a region labeling, ...
    type Render: Clone;

    /// The fixed address bank; its length is the variable count K.
    fn space(&self) -> &AddressSpace;

    /// Deterministic rendering of the scene described by `values`.
    fn render(&self, values: Values<'_>) -> Self::Render;

    /// Log likelihood of the observed data given `rendered` and the current
    /// control-variable values.
    fn log_likelihood(&self, rendered: &Self::Render, values: Values<'_>) -> f64;
}
