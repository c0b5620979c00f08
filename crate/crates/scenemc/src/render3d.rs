//! Projects a parametric ground-plane road scene through a fixed pinhole
//! camera into a 4-region segmentation image.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// The four surface labels of a road segmentation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[repr(u8)]
pub enum Region {
    LeftOffroad = 0,
    RightOffroad = 1,
    Road = 2,
    Lane = 3,
}

impl Region {
    pub const ALL: [Region; 4] =
        [Region::LeftOffroad, Region::RightOffroad, Region::Road, Region::Lane];

    pub fn from_u8(v: u8) -> Option<Region> {
        match v {
            0 => Some(Region::LeftOffroad),
            1 => Some(Region::RightOffroad),
            2 => Some(Region::Road),
            3 => Some(Region::Lane),
            _ => None,
        }
    }
}

/// Scene parameters of the road model, all within their prior supports:
/// integer road width (5..8) and depth extent (70..150) in scene units, the
/// 3D offset of the road's near corner, and the lane stripe width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoadScene {
    pub road_width: i64,
    pub road_height: i64,
    pub lane_pos_x: f64,
    pub lane_pos_y: f64,
    pub lane_pos_z: f64,
    pub lane_size: f64,
}

/// Fixed pinhole camera. The convention is camera-centered coordinates with
/// x to the right, y down in the image, and z forward; scene coordinates use
/// y up, so the renderer negates y when projecting ground geometry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Camera {
    pub focal_length: f64,
    pub cx: f64,
    pub cy: f64,
    pub image_w: usize,
    pub image_h: usize,
}

impl Camera {
    /// The standard rig: principal point at the image center and a focal
    /// length of half the image width (320px for a 640x480 canvas, scaled
    /// proportionally for other sizes).
    pub fn standard(image_w: usize, image_h: usize) -> Camera {
        Camera {
            focal_length: image_w as f64 / 2.0,
            cx: image_w as f64 / 2.0,
            cy: image_h as f64 / 2.0,
            image_w,
            image_h,
        }
    }
}

/// Pinhole projection `u = f*x/z + cx, v = f*y/z + cy`; `None` marks points
/// at or behind the camera plane.
pub fn project(point: [f64; 3], cam: &Camera) -> Option<(f64, f64)> {
    let [x, y, z] = point;
    if z <= 0.0 {
        return None;
    }
    Some((cam.focal_length * x / z + cam.cx, cam.focal_length * y / z + cam.cy))
}

/// A width x height grid of [`Region`] labels.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionImage {
    width: usize,
    height: usize,
    labels: Vec<u8>,
}

impl RegionImage {
    pub fn filled(width: usize, height: usize, region: Region) -> Self {
        assert!(width >= 1 && height >= 1);
        RegionImage { width, height, labels: vec![region as u8; width * height] }
    }

    pub fn from_labels(width: usize, height: usize, labels: Vec<u8>) -> Result<Self> {
        if labels.len() != width * height {
            return Err(Error::Data("label buffer does not match dimensions".into()));
        }
        if let Some(bad) = labels.iter().find(|l| Region::from_u8(**l).is_none()) {
            return Err(Error::Data(format!("label {bad} outside 0..=3")));
        }
        Ok(RegionImage { width, height, labels })
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
    pub fn get(&self, x: usize, y: usize) -> Region {
        Region::from_u8(self.labels[y * self.width + x]).unwrap()
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, region: Region) {
        self.labels[y * self.width + x] = region as u8;
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn count(&self, region: Region) -> usize {
        self.labels.iter().filter(|l| **l == region as u8).count()
    }

    /// Run-length-encoded text form: a `width height` header line followed
    /// by one line per row of `label x count` tokens such as `2x13 3x2`.
    pub fn to_rle(&self) -> String {
        let mut out = format!("{} {}\n", self.width, self.height);
        for y in 0..self.height {
            let row = &self.labels[y * self.width..(y + 1) * self.width];
            let mut tokens: Vec<String> = Vec::new();
            let mut run_label = row[0];
            let mut run_len = 1usize;
            for &l in &row[1..] {
                if l == run_label {
                    run_len += 1;
                } else {
                    tokens.push(format!("{run_label}x{run_len}"));
                    run_label = l;
                    run_len = 1;
                }
            }
            tokens.push(format!("{run_label}x{run_len}"));
            out.push_str(&tokens.join(" "));
            out.push('\n');
        }
        out
    }

    pub fn from_rle(text: &str) -> Result<RegionImage> {
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| Error::Data("empty RLE text".into()))?;
        let mut parts = header.split_whitespace();
        let width: usize = parts
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Data("bad RLE width".into()))?;
        let height: usize = parts
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Data("bad RLE height".into()))?;
        let mut labels = Vec::with_capacity(width * height);
        for (y, line) in lines.take(height).enumerate() {
            let before = labels.len();
            for token in line.split_whitespace() {
                let (label, count) = token
                    .split_once('x')
                    .ok_or_else(|| Error::Data(format!("bad RLE token {token}")))?;
                let label: u8 = label
                    .parse()
                    .map_err(|_| Error::Data(format!("bad RLE label in {token}")))?;
                if Region::from_u8(label).is_none() {
                    return Err(Error::Data(format!("RLE label {label} outside 0..=3")));
                }
                let count: usize = count
                    .parse()
                    .map_err(|_| Error::Data(format!("bad RLE count in {token}")))?;
                labels.extend(std::iter::repeat(label).take(count));
            }
            if labels.len() - before != width {
                return Err(Error::Data(format!("RLE row {y} does not sum to width")));
            }
        }
        if labels.len() != width * height {
            return Err(Error::Data("RLE text truncated".into()));
        }
        Ok(RegionImage { width, height, labels })
    }
}

/// A convex polygon in image coordinates with a point-inside test.
struct ConvexPoly {
    corners: [(f64, f64); 4],
}

impl ConvexPoly {
    fn bbox(&self) -> (f64, f64, f64, f64) {
        let mut b = (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
        for (x, y) in &self.corners {
            b.0 = b.0.min(*x);
            b.1 = b.1.min(*y);
            b.2 = b.2.max(*x);
            b.3 = b.3.max(*y);
        }
        b
    }

    /// Inside test by consistent cross-product sign over the edge loop;
    /// boundary points count as inside.
    fn contains(&self, px: f64, py: f64) -> bool {
        let n = self.corners.len();
        let mut pos = false;
        let mut neg = false;
        for i in 0..n {
            let (x0, y0) = self.corners[i];
            let (x1, y1) = self.corners[(i + 1) % n];
            let cross = (x1 - x0) * (py - y0) - (y1 - y0) * (px - x0);
            if cross > 0.0 {
                pos = true;
            } else if cross < 0.0 {
                neg = true;
            }
            if pos && neg {
                return false;
            }
        }
        true
    }
}

/// Projects the corners of an axis-aligned ground rectangle spanning
/// x in [x0, x1], z in [z0, z1] at height `y_scene` (scene coordinates,
/// y up).
fn project_ground_quad(
    x0: f64,
    x1: f64,
    z0: f64,
    z1: f64,
    y_scene: f64,
    cam: &Camera,
) -> Option<ConvexPoly> {
    let y_cam = -y_scene;
    let corners = [[x0, y_cam, z0], [x1, y_cam, z0], [x1, y_cam, z1], [x0, y_cam, z1]];
    let mut projected = [(0.0, 0.0); 4];
    for (i, c) in corners.into_iter().enumerate() {
        projected[i] = project(c, cam)?;
    }
    Some(ConvexPoly { corners: projected })
}

fn fill(poly: &ConvexPoly, region: Region, out: &mut RegionImage) {
    let (min_x, min_y, max_x, max_y) = poly.bbox();
    let x_hi = (max_x.ceil() as i64).min(out.width as i64 - 1);
    let y_hi = (max_y.ceil() as i64).min(out.height as i64 - 1);
    if x_hi < 0 || y_hi < 0 {
        return;
    }
    let x_lo = min_x.floor().max(0.0) as usize;
    let y_lo = min_y.floor().max(0.0) as usize;
    for y in y_lo..=y_hi as usize {
        for x in x_lo..=x_hi as usize {
            if poly.contains(x as f64, y as f64) {
                out.set(x, y, region);
            }
        }
    }
}

/// Renders the road scene: a ground-plane strip with its near corner at
/// (lane_pos_x, lane_pos_y, lane_pos_z), extending `road_width` scene units
/// laterally and `road_height` in depth, carrying one lane stripe of width
/// `lane_size` along each edge. Pixels outside the strip are labeled left or
/// right offroad by their side of the projected road centerline.
pub fn render_road(scene: &RoadScene, cam: &Camera) -> RegionImage {
    let x0 = scene.lane_pos_x;
    let x1 = scene.lane_pos_x + scene.road_width as f64;
    let z0 = scene.lane_pos_z;
    let z1 = scene.lane_pos_z + scene.road_height as f64;
    let y = scene.lane_pos_y;

    // Offroad background, split by the projected centerline.
    let mid = (x0 + x1) / 2.0;
    let near = project([mid, -y, z0], cam);
    let far = project([mid, -y, z1], cam);
    let mut out = RegionImage::filled(cam.image_w, cam.image_h, Region::RightOffroad);
    if let (Some(p0), Some(p1)) = (near, far) {
        let (mut dx, mut dy) = (p1.0 - p0.0, p1.1 - p0.1);
        if dx == 0.0 && dy == 0.0 {
            // Degenerate centerline: treat it as pointing straight up.
            (dx, dy) = (0.0, -1.0);
        }
        for py in 0..cam.image_h {
            for px in 0..cam.image_w {
                let cross = dx * (py as f64 - p0.1) - dy * (px as f64 - p0.0);
                if cross < 0.0 {
                    out.set(px, py, Region::LeftOffroad);
                }
            }
        }
    }

    // Road strip, then the two lane stripes along its edges.
    if let Some(road) = project_ground_quad(x0, x1, z0, z1, y, cam) {
        fill(&road, Region::Road, &mut out);
    }
    let stripe = scene.lane_size;
    if let Some(left) = project_ground_quad(x0, x0 + stripe, z0, z1, y, cam) {
        fill(&left, Region::Lane, &mut out);
    }
    if let Some(right) = project_ground_quad(x1 - stripe, x1, z0, z1, y, cam) {
        fill(&right, Region::Lane, &mut out);
    }
    out
}
