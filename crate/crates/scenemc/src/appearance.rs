//! Quantized color appearance model: k-means clustering of RGB values,
//! per-region cluster histograms, and the pseudo-count-smoothed region
//! likelihood.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::render3d::{Region, RegionImage};
use crate::{Error, Result};

/// Default cluster count.
pub const DEFAULT_K: usize = 20;

/// An RGB image with channel values in [0, 255].
#[derive(Debug, Clone, PartialEq)]
pub struct ColorImage {
    width: usize,
    height: usize,
    pixels: Vec<[f64; 3]>,
}

impl ColorImage {
    pub fn new(width: usize, height: usize, pixels: Vec<[f64; 3]>) -> Result<Self> {
        if pixels.len() != width * height {
            return Err(Error::Data("pixel buffer does not match dimensions".into()));
        }
        Ok(ColorImage { width, height, pixels })
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> [f64; 3]) -> Self {
        let pixels = (0..width * height).map(|i| f(i % width, i / width)).collect();
        ColorImage { width, height, pixels }
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
    pub fn get(&self, x: usize, y: usize) -> [f64; 3] {
        self.pixels[y * self.width + x]
    }

    pub fn pixels(&self) -> &[[f64; 3]] {
        &self.pixels
    }
}

/// Cluster-index image produced by [`quantize`]; every bin is < k.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantizedImage {
    width: usize,
    height: usize,
    bins: Vec<u8>,
}

impl QuantizedImage {
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
    pub fn bin(&self, x: usize, y: usize) -> u8 {
        self.bins[y * self.width + x]
    }

    pub fn bins(&self) -> &[u8] {
        &self.bins
    }
}

#[inline]
fn dist2(a: [f64; 3], b: [f64; 3]) -> f64 {
    let dr = a[0] - b[0];
    let dg = a[1] - b[1];
    let db = a[2] - b[2];
    dr * dr + dg * dg + db * db
}

/// k-means fit with the per-iteration clustering objective (sum of squared
/// distances to the assigned centroid, recorded after each assignment).
#[derive(Debug, Clone)]
pub struct KmeansFit {
    pub centroids: Vec<[f64; 3]>,
    pub objective_trace: Vec<f64>,
}

/// Lloyd's algorithm with k-means++ seeding. Iterates to an assignment
/// fixpoint or 100 iterations; a cluster left empty is reseeded to the pixel
/// currently farthest from its assigned centroid. Deterministic under a
/// fixed seed.
pub fn kmeans_fit(pixels: &[[f64; 3]], k: usize, seed: u64) -> Result<KmeansFit> {
    if k == 0 {
        return Err(Error::Parameter("k must be >= 1".into()));
    }
    if pixels.len() < k {
        return Err(Error::Data(format!(
            "k-means needs at least k={k} pixels, got {}",
            pixels.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // k-means++ seeding: squared-distance-weighted draws.
    let mut centroids: Vec<[f64; 3]> = Vec::with_capacity(k);
    centroids.push(pixels[rng.gen_range(0..pixels.len())]);
    let mut d2: Vec<f64> = pixels.iter().map(|p| dist2(*p, centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let mut u = rng.gen::<f64>() * total;
            let mut idx = pixels.len() - 1;
            for (i, w) in d2.iter().enumerate() {
                if u < *w {
                    idx = i;
                    break;
                }
                u -= w;
            }
            pixels[idx]
        } else {
            pixels[rng.gen_range(0..pixels.len())]
        };
        centroids.push(next);
        for (i, p) in pixels.iter().enumerate() {
            d2[i] = d2[i].min(dist2(*p, next));
        }
    }

    let mut assignment = vec![0usize; pixels.len()];
    let mut objective_trace = Vec::new();
    for _ in 0..100 {
        // Assignment phase; ties go to the lowest cluster index.
        let mut changed = false;
        let mut objective = 0.0;
        for (i, p) in pixels.iter().enumerate() {
            let mut best = 0usize;
            let mut best_d = dist2(*p, centroids[0]);
            for (c, centroid) in centroids.iter().enumerate().skip(1) {
                let d = dist2(*p, *centroid);
                if d < best_d {
                    best_d = d;
                    best = c;
                }
            }
            objective += best_d;
            if assignment[i] != best {
                assignment[i] = best;
                changed = true;
            }
        }
        objective_trace.push(objective);
        if !changed && objective_trace.len() > 1 {
            break;
        }

        // Update phase.
        let mut sums = vec![[0.0f64; 3]; k];
        let mut counts = vec![0usize; k];
        for (i, p) in pixels.iter().enumerate() {
            let c = assignment[i];
            counts[c] += 1;
            for ch in 0..3 {
                sums[c][ch] += p[ch];
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                for ch in 0..3 {
                    centroids[c][ch] = sums[c][ch] / counts[c] as f64;
                }
            } else {
                // Reseed an empty cluster to the pixel farthest from its
                // assigned centroid.
                let far = (0..pixels.len())
                    .max_by(|a, b| {
                        let da = dist2(pixels[*a], centroids[assignment[*a]]);
                        let db = dist2(pixels[*b], centroids[assignment[*b]]);
                        da.partial_cmp(&db).unwrap()
                    })
                    .unwrap();
                centroids[c] = pixels[far];
            }
        }
    }

    Ok(KmeansFit { centroids, objective_trace })
}

/// The centroids of [`kmeans_fit`].
pub fn kmeans_cluster(pixels: &[[f64; 3]], k: usize, seed: u64) -> Result<Vec<[f64; 3]>> {
    Ok(kmeans_fit(pixels, k, seed)?.centroids)
}

/// Maps every pixel to its nearest centroid in squared RGB distance, ties
/// broken by the lowest index.
pub fn quantize(img: &ColorImage, centroids: &[[f64; 3]]) -> QuantizedImage {
    assert!(!centroids.is_empty() && centroids.len() <= 256);
    let bins = img
        .pixels
        .iter()
        .map(|p| {
            let mut best = 0usize;
            let mut best_d = dist2(*p, centroids[0]);
            for (c, centroid) in centroids.iter().enumerate().skip(1) {
                let d = dist2(*p, *centroid);
                if d < best_d {
                    best_d = d;
                    best = c;
                }
            }
            best as u8
        })
        .collect();
    QuantizedImage { width: img.width, height: img.height, bins }
}

/// Per-region histograms over cluster bins: theta[r][b] is the fraction of
/// region-r pixels quantized to bin b. A region with no pixels gets the
/// uniform histogram.
pub fn build_histograms(
    q: &QuantizedImage,
    labels: &RegionImage,
    k: usize,
) -> Result<[Vec<f64>; 4]> {
    if q.dims() != labels.dims() {
        return Err(Error::Usage(format!(
            "quantized image is {:?}, labels are {:?}",
            q.dims(),
            labels.dims()
        )));
    }
    let mut counts = [vec![0usize; k], vec![0usize; k], vec![0usize; k], vec![0usize; k]];
    let mut totals = [0usize; 4];
    for (bin, label) in q.bins.iter().zip(labels.labels()) {
        counts[*label as usize][*bin as usize] += 1;
        totals[*label as usize] += 1;
    }
    let mut theta: [Vec<f64>; 4] = counts.map(|c| c.iter().map(|n| *n as f64).collect());
    for r in 0..4 {
        if totals[r] == 0 {
            theta[r] = vec![1.0 / k as f64; k];
        } else {
            for v in theta[r].iter_mut() {
                *v /= totals[r] as f64;
            }
        }
    }
    Ok(theta)
}

/// Log likelihood of the quantized image given the labeling: the product
/// over pixels of (theta_label[bin] + eps) / Z_label with the pseudo-count
/// normalizer Z_r = sum_b (theta_r[b] + eps) = 1 + k*eps for normalized
/// theta.
pub fn region_loglik(
    q: &QuantizedImage,
    labels: &RegionImage,
    theta: &[Vec<f64>; 4],
    eps: f64,
) -> Result<f64> {
    if q.dims() != labels.dims() {
        return Err(Error::Usage(format!(
            "quantized image is {:?}, labels are {:?}",
            q.dims(),
            labels.dims()
        )));
    }
    if !(eps > 0.0) {
        return Err(Error::Parameter(format!("pseudo-count eps must be > 0, got {eps}")));
    }
    let k = theta[0].len();

    // Tally (region, bin) occupancy, then spend only 4k logarithms.
    let mut counts = [vec![0usize; k], vec![0usize; k], vec![0usize; k], vec![0usize; k]];
    for (bin, label) in q.bins.iter().zip(labels.labels()) {
        counts[*label as usize][*bin as usize] += 1;
    }
    let mut total = 0.0;
    for r in 0..4 {
        let z: f64 = theta[r].iter().sum::<f64>() + k as f64 * eps;
        for (b, n) in counts[r].iter().enumerate() {
            if *n > 0 {
                total += *n as f64 * ((theta[r][b] + eps) / z).ln();
            }
        }
    }
    Ok(total)
}

/// Cluster centroids plus one histogram per region, learned from a labeled
/// training image. Immutable once built; shareable across chains.
#[derive(Debug, Clone, PartialEq)]
pub struct AppearanceModel {
    pub centroids: Vec<[f64; 3]>,
    /// Histograms ordered left offroad, right offroad, road, lane.
    pub theta: [Vec<f64>; 4],
}

#[derive(Serialize, Deserialize)]
struct ThetaJson {
    left: Vec<f64>,
    right: Vec<f64>,
    road: Vec<f64>,
    lane: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct AppearanceJson {
    centroids: Vec<[f64; 3]>,
    theta: ThetaJson,
}

impl AppearanceModel {
    pub fn k(&self) -> usize {
        self.centroids.len()
    }

    pub fn theta_for(&self, region: Region) -> &[f64] {
        &self.theta[region as usize]
    }

    /// Learns an appearance model from a frame and its region labeling:
    /// k-means over all RGB values, then per-region bin histograms.
    pub fn train(
        frame: &ColorImage,
        labels: &RegionImage,
        k: usize,
        seed: u64,
    ) -> Result<AppearanceModel> {
        if frame.dims() != labels.dims() {
            return Err(Error::Usage(format!(
                "frame is {:?}, labels are {:?}",
                frame.dims(),
                labels.dims()
            )));
        }
        let centroids = kmeans_cluster(frame.pixels(), k, seed)?;
        let q = quantize(frame, &centroids);
        let theta = build_histograms(&q, labels, k)?;
        Ok(AppearanceModel { centroids, theta })
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.centroids.len();
        for (r, t) in self.theta.iter().enumerate() {
            if t.len() != k {
                return Err(Error::Data(format!(
                    "theta row {r} has {} entries, expected {k}",
                    t.len()
                )));
            }
            if t.iter().any(|v| *v < 0.0) {
                return Err(Error::Data(format!("theta row {r} has negative entries")));
            }
            let sum: f64 = t.iter().sum();
            if (sum - 1.0).abs() > 1e-9 {
                return Err(Error::Data(format!("theta row {r} sums to {sum}")));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> serde_json::Value {
        let json = AppearanceJson {
            centroids: self.centroids.clone(),
            theta: ThetaJson {
                left: self.theta[0].clone(),
                right: self.theta[1].clone(),
                road: self.theta[2].clone(),
                lane: self.theta[3].clone(),
            },
        };
        serde_json::to_value(json).expect("appearance model serializes")
    }

    pub fn from_json(value: serde_json::Value) -> Result<AppearanceModel> {
        let json: AppearanceJson = serde_json::from_value(value)?;
        let model = AppearanceModel {
            centroids: json.centroids,
            theta: [json.theta.left, json.theta.right, json.theta.road, json.theta.lane],
        };
        model.validate()?;
        Ok(model)
    }
}
