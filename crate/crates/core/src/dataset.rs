//! MNIST ingestion and the empirical joint of private attribute, digit and
//! quantized white-pixel histogram.
//!
//! * `S = 1[digit = 5]` is the private attribute,
//! * `Z` is the digit label (the semantic),
//! * `H ∈ {1..7}` buckets the fraction of white pixels after binarization (the task).

use std::path::Path;

use rayon::prelude::*;

use crate::axes::{F, S};
use crate::probcore::{Axis, JointTable};
use crate::{Error, IdxError, Result};

pub const IMAGES_MAGIC: u32 = 0x0000_0803;
pub const LABELS_MAGIC: u32 = 0x0000_0801;

/// Default binarization threshold: pixels at or above it are white.
pub const DEFAULT_THRESHOLD: u8 = 128;

/// Upper (exclusive) edges of intervals 1..6; interval 7 is `[0.35, 1]`.
pub const INTERVAL_EDGES: [f64; 6] = [0.1, 0.15, 0.2, 0.25, 0.3, 0.35];

pub const NUM_INTERVALS: usize = INTERVAL_EDGES.len() + 1;
pub const NUM_DIGITS: usize = 10;
pub const PRIVATE_DIGIT: u8 = 5;

/// Axis name of the digit label.
pub const Z: &str = "Z";
/// Axis name of the histogram interval label.
pub const HIST: &str = "H";

/// File names probed for the training split, decompressed.
pub const TRAIN_IMAGES: [&str; 2] = ["train-images-idx3-ubyte", "train-images.idx3-ubyte"];
pub const TRAIN_LABELS: [&str; 2] = ["train-labels-idx1-ubyte", "train-labels.idx1-ubyte"];

/// Labelled greyscale images.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImageSet {
    rows: usize,
    cols: usize,
    pixels: Vec<u8>,
    labels: Vec<u8>,
}

impl ImageSet {
    pub fn new(rows: usize, cols: usize, pixels: Vec<u8>, labels: Vec<u8>) -> Result<Self> {
        let per = rows * cols;
        if per == 0 || pixels.len() != per * labels.len() {
            return Err(IdxError::CountMismatch {
                images: pixels.len().checked_div(per).unwrap_or(0),
                labels: labels.len(),
            }
            .into());
        }
        Ok(Self {
            rows,
            cols,
            pixels,
            labels,
        })
    }

    pub fn count(&self) -> usize {
        self.labels.len()
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn image(&self, i: usize) -> &[u8] {
        let per = self.rows * self.cols;
        &self.pixels[i * per..(i + 1) * per]
    }

    pub fn images(&self) -> impl Iterator<Item = &[u8]> {
        self.pixels.chunks_exact(self.rows * self.cols)
    }
}

fn read_u32(bytes: &[u8], offset: usize, file: &'static str) -> std::result::Result<u32, IdxError> {
    bytes
        .get(offset..offset + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or(IdxError::Truncated {
            file,
            expected: offset + 4,
            found: bytes.len(),
        })
}

fn payload<'a>(
    bytes: &'a [u8],
    header: usize,
    len: usize,
    file: &'static str,
) -> std::result::Result<&'a [u8], IdxError> {
    let expected = header + len;
    if bytes.len() < expected {
        return Err(IdxError::Truncated {
            file,
            expected,
            found: bytes.len(),
        });
    }
    Ok(&bytes[header..expected])
}

/// Decodes an IDX image file (magic 2051) and an IDX label file (magic 2049).
pub fn parse_idx(images: &[u8], labels: &[u8]) -> std::result::Result<ImageSet, IdxError> {
    let magic = read_u32(images, 0, "images")?;
    if magic != IMAGES_MAGIC {
        return Err(IdxError::BadMagic {
            file: "images",
            expected: IMAGES_MAGIC,
            found: magic,
        });
    }
    let count = read_u32(images, 4, "images")? as usize;
    let rows = read_u32(images, 8, "images")? as usize;
    let cols = read_u32(images, 12, "images")? as usize;
    let pixels = payload(images, 16, count * rows * cols, "images")?;

    let magic = read_u32(labels, 0, "labels")?;
    if magic != LABELS_MAGIC {
        return Err(IdxError::BadMagic {
            file: "labels",
            expected: LABELS_MAGIC,
            found: magic,
        });
    }
    let n_labels = read_u32(labels, 4, "labels")? as usize;
    if n_labels != count {
        return Err(IdxError::CountMismatch {
            images: count,
            labels: n_labels,
        });
    }
    let label_bytes = payload(labels, 8, n_labels, "labels")?;
    Ok(ImageSet {
        rows,
        cols,
        pixels: pixels.to_vec(),
        labels: label_bytes.to_vec(),
    })
}

/// Encodes an image set back into IDX image and label files.
pub fn encode_idx(set: &ImageSet) -> (Vec<u8>, Vec<u8>) {
    let mut images = Vec::with_capacity(16 + set.pixels.len());
    for v in [
        IMAGES_MAGIC,
        set.count() as u32,
        set.rows as u32,
        set.cols as u32,
    ] {
        images.extend_from_slice(&v.to_be_bytes());
    }
    images.extend_from_slice(&set.pixels);
    let mut labels = Vec::with_capacity(8 + set.count());
    for v in [LABELS_MAGIC, set.count() as u32] {
        labels.extend_from_slice(&v.to_be_bytes());
    }
    labels.extend_from_slice(&set.labels);
    (images, labels)
}

fn read_first(dir: &Path, names: &[&str]) -> Result<Vec<u8>> {
    for name in names {
        let path = dir.join(name);
        if path.is_file() {
            return std::fs::read(&path).map_err(|source| Error::Io {
                path: path.display().to_string(),
                source,
            });
        }
    }
    let path = dir.join(names[0]);
    Err(Error::Io {
        path: path.display().to_string(),
        source: std::io::Error::new(std::io::ErrorKind::NotFound, "file not found"),
    })
}

/// Loads the decompressed training split from `dir`.
pub fn load_training_set(dir: &Path) -> Result<ImageSet> {
    let images = read_first(dir, &TRAIN_IMAGES)?;
    let labels = read_first(dir, &TRAIN_LABELS)?;
    Ok(parse_idx(&images, &labels)?)
}

/// Fraction of pixels at or above `threshold`.
pub fn histogram_ratio(image: &[u8], threshold: u8) -> f64 {
    if image.is_empty() {
        return 0.0;
    }
    let white = image.iter().filter(|&&p| p >= threshold).count();
    white as f64 / image.len() as f64
}

/// Interval label in `1..=7` for a white-pixel ratio.
pub fn interval_label(ratio: f64) -> Result<u8> {
    if !(0.0..=1.0).contains(&ratio) {
        return Err(Error::OutOfRange {
            name: "histogram ratio",
            value: ratio,
            range: "[0, 1]".into(),
        });
    }
    let idx = INTERVAL_EDGES.iter().take_while(|&&e| ratio >= e).count();
    Ok(idx as u8 + 1)
}

/// Empirical joint over `S ∈ {0,1}`, `Z ∈ {0..9}`, `H ∈ {1..7}`, with raw counts.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentJoint {
    counts: Vec<u64>,
    joint: JointTable,
}

impl ExperimentJoint {
    fn axes() -> Vec<Axis> {
        vec![
            Axis::indexed(S, 2),
            Axis::indexed(Z, NUM_DIGITS),
            Axis::new(HIST, (1..=NUM_INTERVALS).map(|i| i.to_string()).collect()),
        ]
    }

    /// Builds the joint from `(digit, interval index 0..7)` counts.
    pub fn from_digit_interval_counts(counts: &[[u64; NUM_INTERVALS]; NUM_DIGITS]) -> Result<Self> {
        let mut cells = vec![0u64; 2 * NUM_DIGITS * NUM_INTERVALS];
        for (z, row) in counts.iter().enumerate() {
            let s = usize::from(z as u8 == PRIVATE_DIGIT);
            for (h, &c) in row.iter().enumerate() {
                cells[(s * NUM_DIGITS + z) * NUM_INTERVALS + h] = c;
            }
        }
        if cells.iter().all(|&c| c == 0) {
            return Err(Error::EmptyDataset);
        }
        let joint = JointTable::from_counts(Self::axes(), &cells)?;
        Ok(Self {
            counts: cells,
            joint,
        })
    }

    /// Counts laid out like the joint's cells (`S`, then `Z`, then `H`).
    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// The joint over axes `S`, `Z`, `H`.
    pub fn joint(&self) -> &JointTable {
        &self.joint
    }

    /// The same joint with the digit axis named `F`, ready for the bound and mechanism routines.
    pub fn role_joint(&self) -> JointTable {
        self.joint
            .rename_axis(Z, F)
            .expect("digit axis is present and F is unused")
    }

    fn digit_interval(&self) -> Vec<[u64; NUM_INTERVALS]> {
        let mut out = vec![[0u64; NUM_INTERVALS]; NUM_DIGITS];
        for s in 0..2 {
            for (z, row) in out.iter_mut().enumerate() {
                for (h, v) in row.iter_mut().enumerate() {
                    *v += self.counts[(s * NUM_DIGITS + z) * NUM_INTERVALS + h];
                }
            }
        }
        out
    }

    /// Empirical `P(H | Z)`; digits that never occur get an all-zero row.
    pub fn kernel_h_given_z(&self) -> Vec<Vec<f64>> {
        self.digit_interval()
            .iter()
            .map(|row| {
                let n: u64 = row.iter().sum();
                row.iter()
                    .map(|&c| if n == 0 { 0.0 } else { c as f64 / n as f64 })
                    .collect()
            })
            .collect()
    }

    /// Empirical `P(S | H)`; intervals that never occur get an all-zero row.
    pub fn kernel_s_given_h(&self) -> Vec<Vec<f64>> {
        let di = self.digit_interval();
        (0..NUM_INTERVALS)
            .map(|h| {
                let fives = di[PRIVATE_DIGIT as usize][h];
                let n: u64 = di.iter().map(|row| row[h]).sum();
                if n == 0 {
                    vec![0.0, 0.0]
                } else {
                    vec![(n - fives) as f64 / n as f64, fives as f64 / n as f64]
                }
            })
            .collect()
    }
}

/// Counts every image into its `(S, Z, H)` cell and normalizes.
pub fn build_experiment_joint(imgs: &ImageSet, threshold: u8) -> Result<ExperimentJoint> {
    if imgs.count() == 0 {
        return Err(Error::EmptyDataset);
    }
    if let Some(&bad) = imgs.labels().iter().find(|&&l| l as usize >= NUM_DIGITS) {
        return Err(Error::BadLabel(bad));
    }
    let per = imgs.rows() * imgs.cols();
    let counts = imgs
        .pixels()
        .par_chunks_exact(per)
        .zip(imgs.labels().par_iter())
        .map(|(image, &digit)| {
            let h = interval_label(histogram_ratio(image, threshold))?;
            Ok((digit as usize, h as usize - 1))
        })
        .try_fold(
            || [[0u64; NUM_INTERVALS]; NUM_DIGITS],
            |mut acc, cell: Result<(usize, usize)>| {
                let (z, h) = cell?;
                acc[z][h] += 1;
                Ok::<_, Error>(acc)
            },
        )
        .try_reduce(
            || [[0u64; NUM_INTERVALS]; NUM_DIGITS],
            |mut a, b| {
                for (ra, rb) in a.iter_mut().zip(b.iter()) {
                    for (x, y) in ra.iter_mut().zip(rb.iter()) {
                        *x += y;
                    }
                }
                Ok(a)
            },
        )?;
    ExperimentJoint::from_digit_interval_counts(&counts)
}
