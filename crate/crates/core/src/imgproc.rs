//! Raster preprocessing: grayscale conversion, inversion, binarization,
//! connected component labeling and hole filling.

use std::collections::VecDeque;
use std::str::FromStr;

use image::DynamicImage;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// 8-bit single channel image, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self> {
        if pixels.len() != width * height {
            return Err(Error::InvalidInput(format!(
                "{}x{} image needs {} pixels, got {}",
                width,
                height,
                width * height,
                pixels.len()
            )));
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Self {
        Self {
            width,
            height,
            pixels: vec![value; width * height],
        }
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

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.pixels[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, value: u8) {
        self.pixels[y * self.width + x] = value;
    }

    /// 256-bin intensity histogram.
    pub fn histogram(&self) -> [u64; 256] {
        let mut hist = [0u64; 256];
        for &p in &self.pixels {
            hist[p as usize] += 1;
        }
        hist
    }

    pub fn to_image(&self) -> image::GrayImage {
        image::GrayImage::from_raw(self.width as u32, self.height as u32, self.pixels.clone())
            .expect("buffer length matches dimensions")
    }
}

/// Two-level image with values in {0, 1}, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryImage {
    width: usize,
    height: usize,
    bits: Vec<u8>,
}

impl BinaryImage {
    pub fn new(width: usize, height: usize, bits: Vec<u8>) -> Result<Self> {
        if bits.len() != width * height {
            return Err(Error::InvalidInput(format!(
                "{}x{} binary image needs {} values, got {}",
                width,
                height,
                width * height,
                bits.len()
            )));
        }
        if bits.iter().any(|&b| b > 1) {
            return Err(Error::InvalidInput(
                "binary image values must be 0 or 1".into(),
            ));
        }
        Ok(Self {
            width,
            height,
            bits,
        })
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            bits: vec![0; width * height],
        }
    }

    /// Builds an image from rows of `0`/`1` values; handy for small fixtures.
    pub fn from_rows(rows: &[&[u8]]) -> Result<Self> {
        let height = rows.len();
        let width = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != width) {
            return Err(Error::InvalidInput("ragged rows".into()));
        }
        Self::new(width, height, rows.concat())
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

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x] == 1
    }

    pub fn set(&mut self, x: usize, y: usize, on: bool) {
        self.bits[y * self.width + x] = on as u8;
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b == 1).count()
    }
}

/// Connected component labels; 0 is background and regions are `1..=region_count`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMap {
    width: usize,
    height: usize,
    labels: Vec<u32>,
    region_count: u32,
}

impl LabelMap {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn get(&self, x: usize, y: usize) -> u32 {
        self.labels[y * self.width + x]
    }

    pub fn region_count(&self) -> u32 {
        self.region_count
    }

    /// Pixel coordinates `(x, y)` of every region, indexed by `label - 1`,
    /// each list in raster order.
    pub fn region_pixels(&self) -> Vec<Vec<(usize, usize)>> {
        let mut out = vec![Vec::new(); self.region_count as usize];
        for y in 0..self.height {
            for x in 0..self.width {
                let l = self.labels[y * self.width + x];
                if l > 0 {
                    out[l as usize - 1].push((x, y));
                }
            }
        }
        out
    }
}

/// Binarization threshold: a fixed level or Otsu's automatic choice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Threshold {
    #[default]
    Auto,
    Fixed(u8),
}

impl FromStr for Threshold {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("auto") {
            return Ok(Threshold::Auto);
        }
        s.parse::<u8>().map(Threshold::Fixed).map_err(|_| {
            Error::InvalidInput(format!("threshold must be 'auto' or 0-255, got '{s}'"))
        })
    }
}

impl std::fmt::Display for Threshold {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Threshold::Auto => f.write_str("auto"),
            Threshold::Fixed(t) => write!(f, "{t}"),
        }
    }
}

const LUMA_R: f64 = 0.2989;
const LUMA_G: f64 = 0.5870;
const LUMA_B: f64 = 0.1140;

fn luma(r: u8, g: u8, b: u8) -> u8 {
    let v = LUMA_R * r as f64 + LUMA_G * g as f64 + LUMA_B * b as f64;
    v.round().clamp(0.0, 255.0) as u8
}

/// Converts interleaved 8-bit samples with `channels` channels to gray.
pub fn to_gray_raw(width: usize, height: usize, channels: u8, data: &[u8]) -> Result<GrayImage> {
    match channels {
        1 => GrayImage::new(width, height, data.to_vec()),
        3 => {
            if data.len() != width * height * 3 {
                return Err(Error::InvalidInput(format!(
                    "expected {} RGB samples, got {}",
                    width * height * 3,
                    data.len()
                )));
            }
            let pixels = data
                .chunks_exact(3)
                .map(|c| luma(c[0], c[1], c[2]))
                .collect();
            GrayImage::new(width, height, pixels)
        }
        other => Err(Error::UnsupportedChannels(other)),
    }
}

/// Converts a decoded raster to gray. Only 1- and 3-channel images are
/// accepted; 16-bit samples are reduced to 8 bits first.
pub fn to_gray(image: &DynamicImage) -> Result<GrayImage> {
    let (w, h) = (image.width() as usize, image.height() as usize);
    match image {
        DynamicImage::ImageLuma8(buf) => to_gray_raw(w, h, 1, buf.as_raw()),
        DynamicImage::ImageLuma16(_) => to_gray_raw(w, h, 1, image.to_luma8().as_raw()),
        DynamicImage::ImageRgb8(buf) => to_gray_raw(w, h, 3, buf.as_raw()),
        DynamicImage::ImageRgb16(_) | DynamicImage::ImageRgb32F(_) => {
            to_gray_raw(w, h, 3, image.to_rgb8().as_raw())
        }
        other => Err(Error::UnsupportedChannels(other.color().channel_count())),
    }
}

/// Maps every pixel `x` to `255 - x`.
pub fn invert(g: &GrayImage) -> GrayImage {
    GrayImage {
        width: g.width,
        height: g.height,
        pixels: g.pixels.iter().map(|&p| 255 - p).collect(),
    }
}

/// Otsu's threshold: the level `t` maximising between-class variance when
/// class 0 holds intensities `<= t`. Returns `None` for single-valued
/// (or empty) histograms.
pub fn otsu_level(hist: &[u64; 256]) -> Option<u8> {
    let total: u64 = hist.iter().sum();
    if total == 0 || hist.iter().filter(|&&c| c > 0).count() < 2 {
        return None;
    }
    let total_f = total as f64;
    let sum_all: f64 = hist
        .iter()
        .enumerate()
        .map(|(i, &c)| i as f64 * c as f64)
        .sum();

    let mut w0 = 0.0;
    let mut sum0 = 0.0;
    let mut best = (0u8, f64::NEG_INFINITY);
    for (t, &count) in hist.iter().enumerate().take(255) {
        w0 += count as f64;
        sum0 += t as f64 * count as f64;
        let w1 = total_f - w0;
        if w0 == 0.0 || w1 == 0.0 {
            continue;
        }
        let mean0 = sum0 / w0;
        let mean1 = (sum_all - sum0) / w1;
        let between = w0 * w1 * (mean0 - mean1).powi(2);
        if between > best.1 {
            best = (t as u8, between);
        }
    }
    Some(best.0)
}

/// Resolves the threshold that `binarize` will use for this image.
pub fn resolve_threshold(g: &GrayImage, spec: Threshold) -> u8 {
    match spec {
        Threshold::Fixed(t) => t,
        Threshold::Auto => {
            match otsu_level(&g.histogram()) {
                Some(t) => t,
                None => {
                    let level = g.pixels.first().copied().unwrap_or(0);
                    log::warn!("uniform image (all pixels {level}); automatic threshold yields no foreground");
                    level
                }
            }
        }
    }
}

/// Pixel becomes 1 iff its intensity is strictly above the threshold.
pub fn binarize(g: &GrayImage, spec: Threshold) -> BinaryImage {
    let t = resolve_threshold(g, spec);
    BinaryImage {
        width: g.width,
        height: g.height,
        bits: g.pixels.iter().map(|&p| (p > t) as u8).collect(),
    }
}

struct DisjointSet {
    parent: Vec<u32>,
}

impl DisjointSet {
    fn new() -> Self {
        // slot 0 is the background
        Self { parent: vec![0] }
    }

    fn make(&mut self) -> u32 {
        let id = self.parent.len() as u32;
        self.parent.push(id);
        id
    }

    fn find(&mut self, mut x: u32) -> u32 {
        while self.parent[x as usize] != x {
            let grand = self.parent[self.parent[x as usize] as usize];
            self.parent[x as usize] = grand;
            x = grand;
        }
        x
    }

    fn union(&mut self, a: u32, b: u32) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi as usize] = lo;
        }
    }
}

/// Two-pass 8-connected labeling. Final labels are numbered in raster order
/// of each region's first pixel.
pub fn label_components(b: &BinaryImage) -> LabelMap {
    let (w, h) = b.dims();
    let mut provisional = vec![0u32; w * h];
    let mut sets = DisjointSet::new();

    for y in 0..h {
        for x in 0..w {
            if !b.get(x, y) {
                continue;
            }
            // already-visited 8-neighbours: W, NW, N, NE
            let mut neighbours = [0u32; 4];
            if x > 0 {
                neighbours[0] = provisional[y * w + x - 1];
            }
            if y > 0 {
                let row = (y - 1) * w;
                if x > 0 {
                    neighbours[1] = provisional[row + x - 1];
                }
                neighbours[2] = provisional[row + x];
                if x + 1 < w {
                    neighbours[3] = provisional[row + x + 1];
                }
            }
            let mut current = 0;
            for &n in neighbours.iter().filter(|&&n| n > 0) {
                if current == 0 {
                    current = n;
                } else {
                    sets.union(current, n);
                }
            }
            if current == 0 {
                current = sets.make();
            }
            provisional[y * w + x] = current;
        }
    }

    let mut remap = vec![0u32; sets.parent.len()];
    let mut next = 0u32;
    let mut labels = provisional;
    for l in labels.iter_mut() {
        if *l == 0 {
            continue;
        }
        let root = sets.find(*l) as usize;
        if remap[root] == 0 {
            next += 1;
            remap[root] = next;
        }
        *l = remap[root];
    }

    LabelMap {
        width: w,
        height: h,
        labels,
        region_count: next,
    }
}

/// Fills every background pixel that cannot reach the border through
/// 4-connected background.
pub fn fill_holes(b: &BinaryImage) -> BinaryImage {
    let (w, h) = b.dims();
    let mut outside = vec![false; w * h];
    let mut queue = VecDeque::new();

    let seed =
        |x: usize, y: usize, outside: &mut Vec<bool>, queue: &mut VecDeque<(usize, usize)>| {
            let i = y * w + x;
            if !b.get(x, y) && !outside[i] {
                outside[i] = true;
                queue.push_back((x, y));
            }
        };
    for x in 0..w {
        seed(x, 0, &mut outside, &mut queue);
        if h > 1 {
            seed(x, h - 1, &mut outside, &mut queue);
        }
    }
    for y in 0..h {
        seed(0, y, &mut outside, &mut queue);
        if w > 1 {
            seed(w - 1, y, &mut outside, &mut queue);
        }
    }

    while let Some((x, y)) = queue.pop_front() {
        let mut visit = |nx: usize, ny: usize| {
            let i = ny * w + nx;
            if !b.get(nx, ny) && !outside[i] {
                outside[i] = true;
                queue.push_back((nx, ny));
            }
        };
        if x > 0 {
            visit(x - 1, y);
        }
        if x + 1 < w {
            visit(x + 1, y);
        }
        if y > 0 {
            visit(x, y - 1);
        }
        if y + 1 < h {
            visit(x, y + 1);
        }
    }

    BinaryImage {
        width: w,
        height: h,
        bits: outside.iter().map(|&o| (!o) as u8).collect(),
    }
}
