//! Generative scene models inverted by generic single-site MCMC.
//!
//! The toolkit treats image interpretation as analysis by synthesis: a model
//! is a stochastic scene generator, a deterministic approximate renderer, a
//! stochastic likelihood linking the rendering to observed pixels, and a set
//! of fidelity control variables (blur badwidths, likelihood tolerances) that
//! are inferred alongside the scene. Inference is a uniform mixture of
//! single-variable Metropolis-Hastings transitions that resimulate one random
//! choice from its prior, optionally mixed with enumerative Gibbs updates for
//! finite-support variables.
//!
//! Two concrete models ship with the crate:
//!
//! * a 2D text reader that localizes and identifies up to ten alphanumeric
//!   glyphs under per-glyph and global Gaussian blur ([`models::text`]), and
//! * a 3D road finder that projects a parametric ground-plane road through a
//!   pinhole camera into a four-region segmentation scored against a
//!   quantized color appearance model ([`models::road`]).
//!
//! See the `examples/` directory for runnable walkthroughs of each major
//! capability, and [`tasks`] for the batch operations behind the `scenemc`
//! command-line tool.

pub mod appearance;
pub mod engine;
mod error;
pub mod io;
pub mod models;
pub mod render2d;
pub mod render3d;
pub mod tasks;

pub use error::Error;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;
