//! Unsupervised visual learning from motion on grayscale video.
//!
//! The pipeline stages, bottom to top:
//!
//! - [`frameio`] — frame sequences (PGM), scripted synthetic scenes with
//!   ground truth.
//! - [`flow`] — dense block-matching optical flow and per-cell motion
//!   transfer.
//! - [`features`] — SIFT-like and HOG descriptors, Canny edges.
//! - [`mover`] — the grid-of-cells 'mover' event detector (dual
//!   backgrounds, per-cell state machine, event locking).
//! - [`tracker`] — descriptor-voting tracker that extends detections into
//!   short patch-harvesting tracks.
//! - [`annkde`] — approximate nearest-neighbor index with Gaussian KDE
//!   scoring, the appearance store behind all detectors.
//! - [`partmodel`] — star-structured part model with two-frame adaptive
//!   inference and online updates.
//! - [`learner`] — internally supervised co-training of appearance and
//!   context hand detectors.
//! - [`gaze`] — gaze-direction learning supervised by mover events.
//! - [`eval`] — shared metrics (PR curves, center matching, Jaccard,
//!   spatial coverage).

pub mod annkde;
pub mod error;
pub mod eval;
pub mod features;
pub mod flow;
pub mod frameio;
pub mod gaze;
pub mod geom;
pub mod learner;
pub mod mover;
pub mod partmodel;
pub mod tracker;

pub use error::{Error, Result};
pub use geom::Point;
