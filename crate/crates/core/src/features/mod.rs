//! Local image descriptors and edge extraction.
//!
//! `sift_like` is the descriptor half of SIFT only — gradient orientation
//! histograms over a fixed-size patch at a given point, no keypoint
//! detection and no scale/rotation invariance, because every consumer in
//! this pipeline computes descriptors at known points.

mod edges;
mod hog;
mod sift;

pub use edges::{edges, edges_with, EdgeMap};
pub use hog::{hog, hog_len, HogParams};
pub use sift::{sift_like, sift_like_from_gradients, GradientField, SIFT_DIM};

use crate::geom::Point;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DescriptorKind {
    Sift,
    Hog,
}

/// A fixed-length normalized feature vector anchored at an image point.
#[derive(Debug, Clone, PartialEq)]
pub struct Descriptor {
    pub values: Vec<f32>,
    pub kind: DescriptorKind,
    pub anchor: Point,
    pub patch_size: u32,
    /// Set when the patch had to be clamped at the frame border.
    pub clamped: bool,
}

impl Descriptor {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Euclidean distance between two descriptors of equal length.
    pub fn l2(&self, other: &Descriptor) -> f32 {
        l2(&self.values, &other.values)
    }
}

pub(crate) fn l2(a: &[f32], b: &[f32]) -> f32 {
    debug_assert_eq!(a.len(), b.len());
    let mut sum = 0.0f32;
    for (x, y) in a.iter().zip(b) {
        let d = x - y;
        sum += d * d;
    }
    sum.sqrt()
}

/// L2 distance accumulated in f64; the metric used by the ANN index.
pub(crate) fn l2_f64(a: &[f32], b: &[f32]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut sum = 0.0f64;
    for (x, y) in a.iter().zip(b) {
        let d = (*x - *y) as f64;
        sum += d * d;
    }
    sum.sqrt()
}
