//! Grayscale intensity grid and the pixel-level kernels that operate on it.

use crate::{Error, Result};

/// A width x height grayscale image with row-major intensities in [0, 1].
/// Serves both as renderer output and as observed data.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageF {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl ImageF {
    pub fn zeros(width: usize, height: usize) -> Self {
        assert!(width >= 1 && height >= 1, "images must be at least 1x1");
        ImageF { width, height, data: vec![0.0; width * height] }
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut img = ImageF::zeros(width, height);
        for y in 0..height {
            for x in 0..width {
                img.data[y * width + x] = f(x, y);
            }
        }
        img
    }

    pub fn from_vec(width: usize, height: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), width * height);
        ImageF { width, height, data }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: f64) {
        self.data[y * self.width + x] = v;
    }

    pub fn pixels(&self) -> &[f64] {
        &self.data
    }

    pub fn pixels_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    pub fn max_value(&self) -> f64 {
        self.data.iter().cloned().fold(0.0, f64::max)
    }

    /// Pixel-wise max of `other` placed with its top-left at (dx, dy);
    /// portions falling outside `self` are clipped.
    pub fn blend_max(&mut self, other: &ImageF, dx: i64, dy: i64) {
        for oy in 0..other.height {
            let y = dy + oy as i64;
            if y < 0 || y >= self.height as i64 {
                continue;
            }
            for ox in 0..other.width {
                let x = dx + ox as i64;
                if x < 0 || x >= self.width as i64 {
                    continue;
                }
                let idx = y as usize * self.width + x as usize;
                let v = other.data[oy * other.width + ox];
                if v > self.data[idx] {
                    self.data[idx] = v;
                }
            }
        }
    }

    /// Copies the rectangle of `self` starting at (x0, y0); the rectangle
    /// must lie fully inside.
    pub fn crop(&self, x0: usize, y0: usize, w: usize, h: usize) -> ImageF {
        assert!(x0 + w <= self.width && y0 + h <= self.height);
        let mut out = ImageF::zeros(w, h);
        for y in 0..h {
            let src = (y0 + y) * self.width + x0;
            out.data[y * w..(y + 1) * w].copy_from_slice(&self.data[src..src + w]);
        }
        out
    }
}

/// Below this bandwidth the blur kernel is treated as the identity.
pub const BLUR_IDENTITY_CUTOFF: f64 = 0.05;

fn gaussian_weights(sigma: f64) -> Vec<f64> {
    let radius = (3.0 * sigma).ceil() as i64;
    let mut w: Vec<f64> = (-radius..=radius)
        .map(|d| (-(d as f64) * (d as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let z: f64 = w.iter().sum();
    for v in w.iter_mut() {
        *v /= z;
    }
    w
}

/// Separable Gaussian blur with a discrete kernel truncated at radius
/// ceil(3 sigma) and renormalized to sum exactly one. Edges are handled by
/// clamp-to-edge extension; bandwidths below [`BLUR_IDENTITY_CUTOFF`] return
/// the input unchanged.
pub fn gaussian_blur(img: &ImageF, sigma: f64) -> ImageF {
    assert!(!sigma.is_nan(), "blur bandwidth must not be NaN");
    if sigma < BLUR_IDENTITY_CUTOFF {
        return img.clone();
    }
    let weights = gaussian_weights(sigma);
    let radius = (weights.len() / 2) as i64;
    let (w, h) = img.dims();

    // Horizontal pass.
    let mut tmp = ImageF::zeros(w, h);
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (i, wt) in weights.iter().enumerate() {
                let sx = (x as i64 + i as i64 - radius).clamp(0, w as i64 - 1) as usize;
                acc += wt * img.get(sx, y);
            }
            tmp.set(x, y, acc);
        }
    }
    // Vertical pass.
    let mut out = ImageF::zeros(w, h);
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (i, wt) in weights.iter().enumerate() {
                let sy = (y as i64 + i as i64 - radius).clamp(0, h as i64 - 1) as usize;
                acc += wt * tmp.get(x, sy);
            }
            out.set(x, y, acc);
        }
    }
    out
}

/// Pixel-wise maximum across layers. All layers must have the canvas
/// dimensions; an empty list yields an all-zero canvas.
pub fn composite(layers: &[ImageF], canvas_w: usize, canvas_h: usize) -> Result<ImageF> {
    let mut out = ImageF::zeros(canvas_w, canvas_h);
    for layer in layers {
        if layer.dims() != (canvas_w, canvas_h) {
            return Err(Error::Usage(format!(
                "composite layer is {:?}, canvas is {:?}",
                layer.dims(),
                (canvas_w, canvas_h)
            )));
        }
        for (o, v) in out.data.iter_mut().zip(layer.data.iter()) {
            if *v > *o {
                *o = *v;
            }
        }
    }
    Ok(out)
}

/// Log density of `data` under independent per-pixel Gaussians centered on
/// `rendered` with common standard deviation `sigma`.
pub fn gaussian_pixel_loglik(data: &ImageF, rendered: &ImageF, sigma: f64) -> Result<f64> {
    if data.dims() != rendered.dims() {
        return Err(Error::Usage(format!(
            "data is {:?}, rendering is {:?}",
            data.dims(),
            rendered.dims()
        )));
    }
    if !(sigma > 0.0) {
        return Err(Error::Parameter(format!("likelihood sigma must be > 0, got {sigma}")));
    }
    let n = data.data.len() as f64;
    let sse: f64 = data
        .data
        .iter()
        .zip(rendered.data.iter())
        .map(|(d, r)| (d - r) * (d - r))
        .sum();
    Ok(-n * (sigma.ln() + 0.5 * (2.0 * std::f64::consts::PI).ln()) - sse / (2.0 * sigma * sigma))
}
