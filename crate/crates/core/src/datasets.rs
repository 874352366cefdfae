//! Grayscale image datasets: IDX (MNIST family) and USPS CSV loaders plus
//! zero-padding onto a square canvas.
//!
//! Intensities are always stored in `[0, 1]`. IDX bytes are divided by 255;
//! CSV values are rescaled globally (one min/max over the whole file) since
//! USPS distributions ship in different ranges.

use std::path::Path;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::features::{Domain, FeatureMatrix};

pub const IDX_IMAGES_MAGIC: u32 = 0x0000_0803;
pub const IDX_LABELS_MAGIC: u32 = 0x0000_0801;

pub const USPS_SIDE: usize = 16;
pub const USPS_CLASSES: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    height: usize,
    width: usize,
    pixels: Vec<f64>,
}

impl Image {
    /// Row-major pixels; every value must lie in `[0, 1]`.
    pub fn new(height: usize, width: usize, pixels: Vec<f64>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::Dimension(format!("image shape {height}x{width}")));
        }
        if pixels.len() != height * width {
            return Err(Error::Dimension(format!(
                "{} pixels for a {height}x{width} image",
                pixels.len()
            )));
        }
        if let Some(v) = pixels.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::Range(format!("pixel intensity {v} outside [0,1]")));
        }
        Ok(Self {
            height,
            width,
            pixels,
        })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.pixels[row * self.width + col]
    }

    pub fn sum(&self) -> f64 {
        self.pixels.iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImageSet {
    images: Vec<Image>,
    labels: Option<Vec<usize>>,
    n_classes: usize,
}

impl ImageSet {
    pub fn new(images: Vec<Image>, labels: Option<Vec<usize>>, n_classes: usize) -> Result<Self> {
        if let Some(first) = images.first() {
            if let Some(bad) = images
                .iter()
                .position(|im| im.height != first.height || im.width != first.width)
            {
                return Err(Error::Dimension(format!(
                    "image {bad} is {}x{}, expected {}x{}",
                    images[bad].height, images[bad].width, first.height, first.width
                )));
            }
        }
        if let Some(labels) = &labels {
            if labels.len() != images.len() {
                return Err(Error::Consistency(format!(
                    "{} labels for {} images",
                    labels.len(),
                    images.len()
                )));
            }
            if let Some(l) = labels.iter().find(|&&l| l >= n_classes) {
                return Err(Error::Range(format!(
                    "label {l} outside [0,{n_classes})"
                )));
            }
        }
        Ok(Self {
            images,
            labels,
            n_classes,
        })
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    pub fn images(&self) -> &[Image] {
        &self.images
    }

    pub fn labels(&self) -> Option<&[usize]> {
        self.labels.as_deref()
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    /// `(height, width)` of every image, or `None` for an empty set.
    pub fn shape(&self) -> Option<(usize, usize)> {
        self.images.first().map(|im| (im.height, im.width))
    }

    pub fn label_histogram(&self) -> Option<Vec<usize>> {
        self.labels.as_ref().map(|labels| {
            let mut hist = vec![0; self.n_classes];
            for &l in labels {
                hist[l] += 1;
            }
            hist
        })
    }

    /// Indices of the samples labeled `class`.
    pub fn class_indices(&self, class: usize) -> Vec<usize> {
        match &self.labels {
            Some(labels) => labels
                .iter()
                .enumerate()
                .filter(|(_, &l)| l == class)
                .map(|(i, _)| i)
                .collect(),
            None => Vec::new(),
        }
    }

    /// Concatenates two sets with the same image shape.
    pub fn concat(mut self, other: ImageSet) -> Result<ImageSet> {
        let labels = match (self.labels.take(), other.labels) {
            (Some(mut a), Some(b)) => {
                a.extend(b);
                Some(a)
            }
            (None, None) => None,
            _ => {
                return Err(Error::Consistency(
                    "cannot concatenate labeled and unlabeled sets".into(),
                ))
            }
        };
        let mut images = self.images;
        images.extend(other.images);
        ImageSet::new(images, labels, self.n_classes.max(other.n_classes))
    }

    /// Image-domain features: column i holds the row-major pixels of image i.
    pub fn to_feature_matrix(&self) -> FeatureMatrix {
        let dim = self.shape().map_or(0, |(h, w)| h * w);
        if self.is_empty() {
            return FeatureMatrix::empty(dim, Domain::Image);
        }
        let mut samples = Array2::zeros((self.len(), dim));
        for (mut row, im) in samples.rows_mut().into_iter().zip(&self.images) {
            row.assign(&ndarray::ArrayView1::from(&im.pixels[..]));
        }
        FeatureMatrix::from_parts_unchecked(samples.reversed_axes(), Domain::Image)
    }
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::io(path, e))
}

fn be_u32(bytes: &[u8], offset: usize, field: &str) -> Result<u32> {
    bytes
        .get(offset..offset + 4)
        .map(|b| u32::from_be_bytes(b.try_into().unwrap()))
        .ok_or_else(|| Error::format(field, "header truncated"))
}

/// Parses an IDX image file (magic 0x00000803) held in memory.
pub fn parse_idx_images(bytes: &[u8]) -> Result<Vec<Image>> {
    let magic = be_u32(bytes, 0, "magic")?;
    if magic != IDX_IMAGES_MAGIC {
        return Err(Error::format(
            "magic",
            format!("expected {IDX_IMAGES_MAGIC:#010x} for an image file, found {magic:#010x}"),
        ));
    }
    let n = be_u32(bytes, 4, "image count")? as usize;
    let rows = be_u32(bytes, 8, "rows")? as usize;
    let cols = be_u32(bytes, 12, "columns")? as usize;
    if n > 0 && (rows == 0 || cols == 0) {
        return Err(Error::format("rows", format!("zero image dimension {rows}x{cols}")));
    }
    let pixels = rows * cols;
    let payload = &bytes[16..];
    if payload.len() != n * pixels {
        return Err(Error::format(
            "payload",
            format!(
                "header declares {n} images of {rows}x{cols} ({} bytes) but payload has {} bytes",
                n * pixels,
                payload.len()
            ),
        ));
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    payload
        .chunks_exact(pixels)
        .map(|chunk| Image::new(rows, cols, chunk.iter().map(|&b| f64::from(b) / 255.0).collect()))
        .collect()
}

/// Parses an IDX label file (magic 0x00000801) held in memory.
pub fn parse_idx_labels(bytes: &[u8]) -> Result<Vec<usize>> {
    let magic = be_u32(bytes, 0, "magic")?;
    if magic != IDX_LABELS_MAGIC {
        return Err(Error::format(
            "magic",
            format!("expected {IDX_LABELS_MAGIC:#010x} for a label file, found {magic:#010x}"),
        ));
    }
    let n = be_u32(bytes, 4, "label count")? as usize;
    let payload = &bytes[8..];
    if payload.len() != n {
        return Err(Error::format(
            "payload",
            format!("header declares {n} labels but payload has {} bytes", payload.len()),
        ));
    }
    Ok(payload.iter().map(|&b| b as usize).collect())
}

/// Loads an IDX image file and, optionally, its label file.
///
/// The class count is one past the largest label (zero when unlabeled).
pub fn load_idx(images_path: &Path, labels_path: Option<&Path>) -> Result<ImageSet> {
    let images = parse_idx_images(&read_file(images_path)?)?;
    let labels = match labels_path {
        Some(p) => {
            let labels = parse_idx_labels(&read_file(p)?)?;
            if labels.len() != images.len() {
                return Err(Error::Consistency(format!(
                    "{} has {} labels but {} has {} images",
                    p.display(),
                    labels.len(),
                    images_path.display(),
                    images.len()
                )));
            }
            Some(labels)
        }
        None => None,
    };
    let n_classes = labels
        .as_ref()
        .and_then(|l| l.iter().max().map(|m| m + 1))
        .unwrap_or(0);
    ImageSet::new(images, labels, n_classes)
}

/// Parses labeled CSV images: one row per image, label first, then
/// `side·side` intensities in row-major order. When `side` is `None` it is
/// inferred from the first row. Intensities are min-max rescaled to `[0, 1]`
/// over the whole file.
pub fn parse_csv_images(text: &str, side: Option<usize>, n_classes: Option<usize>) -> Result<ImageSet> {
    let mut labels = Vec::new();
    let mut raw: Vec<Vec<f64>> = Vec::new();
    let mut side = side;
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let s = match side {
            Some(s) => s,
            None => {
                let n_pix = fields.len().saturating_sub(1);
                let s = (n_pix as f64).sqrt().round() as usize;
                if s == 0 || s * s != n_pix {
                    return Err(Error::format(
                        format!("row {idx}"),
                        format!("{n_pix} intensities do not form a square image"),
                    ));
                }
                side = Some(s);
                s
            }
        };
        if fields.len() != 1 + s * s {
            return Err(Error::format(
                format!("row {idx}"),
                format!("expected {} fields, found {}", 1 + s * s, fields.len()),
            ));
        }
        let label_f: f64 = fields[0]
            .parse()
            .map_err(|_| Error::format(format!("row {idx}"), format!("bad label {:?}", fields[0])))?;
        if label_f < 0.0 || label_f.fract() != 0.0 || n_classes.is_some_and(|c| label_f >= c as f64) {
            return Err(Error::Range(format!(
                "row {idx}: label {label_f} outside [0,{})",
                n_classes.map_or("inf".to_string(), |c| c.to_string())
            )));
        }
        labels.push(label_f as usize);
        let values = fields[1..]
            .iter()
            .enumerate()
            .map(|(j, f)| {
                f.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| Error::format(format!("row {idx}"), format!("bad intensity {f:?} in field {}", j + 1)))
            })
            .collect::<Result<Vec<f64>>>()?;
        raw.push(values);
    }
    let (lo, hi) = raw
        .iter()
        .flatten()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let span = hi - lo;
    let s = side.unwrap_or(1);
    let images = raw
        .into_iter()
        .map(|values| {
            let pixels = values
                .into_iter()
                .map(|v| if span > 0.0 { ((v - lo) / span).clamp(0.0, 1.0) } else { 0.0 })
                .collect();
            Image::new(s, s, pixels)
        })
        .collect::<Result<Vec<_>>>()?;
    let n_classes = n_classes.unwrap_or_else(|| labels.iter().max().map_or(0, |m| m + 1));
    ImageSet::new(images, Some(labels), n_classes)
}

/// Loads the USPS digits from a header-free CSV with 257 fields per row:
/// the digit label (0–9) followed by the 16×16 intensities.
pub fn load_usps(path: &Path) -> Result<ImageSet> {
    let bytes = read_file(path)?;
    let text = String::from_utf8(bytes).map_err(|_| Error::format("encoding", "USPS file is not UTF-8"))?;
    parse_csv_images(&text, Some(USPS_SIDE), Some(USPS_CLASSES))
}

/// Loads a generic labeled CSV image file, inferring the square side.
pub fn load_csv_images(path: &Path) -> Result<ImageSet> {
    let bytes = read_file(path)?;
    let text = String::from_utf8(bytes).map_err(|_| Error::format("encoding", "CSV file is not UTF-8"))?;
    parse_csv_images(&text, None, None)
}

/// Centers every image on a `target`×`target` zero canvas.
pub fn pad_and_normalize(set: &ImageSet, target: usize) -> Result<ImageSet> {
    if target == 0 {
        return Err(Error::Parameter("padding target must be positive".into()));
    }
    let Some((h, w)) = set.shape() else {
        return Ok(set.clone());
    };
    if target < h || target < w {
        return Err(Error::Dimension(format!(
            "cannot pad {h}x{w} images onto a {target}x{target} canvas"
        )));
    }
    let top = (target - h) / 2;
    let left = (target - w) / 2;
    let images = set
        .images
        .iter()
        .map(|im| {
            let mut pixels = vec![0.0; target * target];
            for r in 0..h {
                let dst = (top + r) * target + left;
                pixels[dst..dst + w].copy_from_slice(&im.pixels[r * w..(r + 1) * w]);
            }
            Image {
                height: target,
                width: target,
                pixels,
            }
        })
        .collect();
    Ok(ImageSet {
        images,
        labels: set.labels.clone(),
        n_classes: set.n_classes,
    })
}
