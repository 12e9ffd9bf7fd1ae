//! Gaze-direction learning supervised by mover events.
//!
//! Each event annotates one face image: shortly before the middle of the
//! event the gaze is assumed to point from the face center to the event
//! cell. A HOG descriptor of the face region is associated with that unit
//! direction; prediction is a similarity-weighted average over the 10
//! nearest training descriptors.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::features::{hog, HogParams};
use crate::frameio::FrameSequence;
use crate::geom::{Point, Rect};
use crate::mover::MoverEvent;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GazeSource {
    AutoMover,
    Manual,
}

/// One face image with its gaze direction label.
#[derive(Debug, Clone)]
pub struct GazeSample {
    pub face_center: Point,
    pub descriptor: Vec<f32>,
    /// Unit vector from face center toward the target.
    pub direction: Point,
    pub source: GazeSource,
    /// Sequence the sample came from; drives the leave-one-sequence-out
    /// protocol.
    pub seq_id: usize,
    pub frame: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct GazeParams {
    /// Neighbors consulted per prediction.
    pub k: usize,
    /// Side of the square face region for HOG.
    pub face_rect_size: u32,
    /// Frames before the event middle at which gaze points to the target.
    pub lead_frames: usize,
    /// Cell size used to resolve event cell centers.
    pub cell_size: usize,
}

impl Default for GazeParams {
    fn default() -> Self {
        GazeParams {
            k: 10,
            face_rect_size: 40,
            lead_frames: 10,
            cell_size: 30,
        }
    }
}

/// A trained gaze model: labeled samples queried by k-NN.
#[derive(Debug, Clone, Default)]
pub struct GazeModel {
    pub samples: Vec<GazeSample>,
}

/// Annotate events with gaze directions: at `(onset+offset)/2 -
/// lead_frames`, if a face exists there, direction = face center to event
/// cell center. Events without a face (or with a negative annotation
/// frame) are skipped.
pub fn annotate(
    seq: &FrameSequence,
    events: &[MoverEvent],
    faces: &[(usize, Point)],
    seq_id: usize,
    params: &GazeParams,
) -> Vec<GazeSample> {
    let face_by_frame: BTreeMap<usize, Point> = faces.iter().copied().collect();
    let mut out = Vec::new();
    for e in events {
        let mid = (e.onset_frame + e.offset_frame + 1) / 2; // round half up
        let Some(frame_idx) = mid.checked_sub(params.lead_frames) else {
            continue;
        };
        if frame_idx >= seq.len() {
            continue;
        }
        let Some(&face) = face_by_frame.get(&frame_idx) else {
            continue; // no face detected: ignore this event
        };
        let cs = params.cell_size as f32;
        let cell_center = Point::new(
            e.cell.0 as f32 * cs + cs / 2.0,
            e.cell.1 as f32 * cs + cs / 2.0,
        );
        let Some(direction) = Point::new(cell_center.x - face.x, cell_center.y - face.y).normalized() else {
            continue;
        };
        let rect = Rect::centered(face, params.face_rect_size, params.face_rect_size);
        let Some(rect) = rect.clamped_into(seq.width() as u32, seq.height() as u32) else {
            continue;
        };
        let Ok(descriptor) = hog(&seq.frames[frame_idx], rect, &HogParams::default()) else {
            continue;
        };
        out.push(GazeSample {
            face_center: face,
            descriptor: descriptor.values,
            direction,
            source: GazeSource::AutoMover,
            seq_id,
            frame: frame_idx,
        });
    }
    out
}

/// Prediction outcome; `direction` is `None` when the weighted sum of
/// neighbor directions cancels to zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GazePrediction {
    pub direction: Option<Point>,
}

/// Similarity-weighted average of the k nearest samples' directions
/// (weights `1/(d + 1e-6)`).
pub fn predict(model: &GazeModel, descriptor: &[f32], params: &GazeParams) -> Result<GazePrediction> {
    if model.samples.is_empty() {
        return Err(Error::EmptyIndex);
    }
    let k = params.k.min(model.samples.len());
    let mut dists: Vec<(usize, f64)> = model
        .samples
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let mut sum = 0.0f64;
            for (a, b) in s.descriptor.iter().zip(descriptor) {
                let d = (*a - *b) as f64;
                sum += d * d;
            }
            (i, sum.sqrt())
        })
        .collect();
    dists.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    dists.truncate(k);

    let mut sx = 0.0f64;
    let mut sy = 0.0f64;
    for (i, d) in dists {
        let w = 1.0 / (d + 1e-6);
        sx += w * model.samples[i].direction.x as f64;
        sy += w * model.samples[i].direction.y as f64;
    }
    let norm = (sx * sx + sy * sy).sqrt();
    if norm <= 1e-9 {
        return Ok(GazePrediction { direction: None });
    }
    Ok(GazePrediction {
        direction: Some(Point::new((sx / norm) as f32, (sy / norm) as f32)),
    })
}

/// Angle between two unit directions in degrees.
pub fn angular_error_deg(a: Point, b: Point) -> f64 {
    let dot = (a.x * b.x + a.y * b.y) as f64;
    dot.clamp(-1.0, 1.0).acos().to_degrees()
}

#[derive(Debug, Clone)]
pub struct GazeEval {
    /// Fraction of predictions within the threshold.
    pub accuracy: f64,
    /// (threshold degrees, cumulative accuracy) for 0..=180.
    pub curve: Vec<(u32, f64)>,
    /// Expected accuracy when predicting by drawing directions from the
    /// training distribution, at the same threshold.
    pub chance: f64,
    pub tested: usize,
    pub degenerate: usize,
}

/// Evaluate a model on held-out samples at `threshold_deg`.
///
/// Chance is computed exactly: the average over all (training direction,
/// test truth) pairs of the hit indicator.
pub fn evaluate(model: &GazeModel, test: &[GazeSample], threshold_deg: f64, params: &GazeParams) -> Result<GazeEval> {
    if test.is_empty() {
        return Err(Error::Protocol("no test samples".into()));
    }
    let mut errors = Vec::with_capacity(test.len());
    let mut degenerate = 0usize;
    for t in test {
        match predict(model, &t.descriptor, params)?.direction {
            Some(dir) => errors.push(angular_error_deg(dir, t.direction)),
            None => {
                degenerate += 1;
                errors.push(180.0);
            }
        }
    }
    let accuracy = errors.iter().filter(|&&e| e <= threshold_deg).count() as f64 / errors.len() as f64;
    let curve: Vec<(u32, f64)> = (0..=180)
        .map(|t| {
            let acc = errors.iter().filter(|&&e| e <= t as f64).count() as f64 / errors.len() as f64;
            (t, acc)
        })
        .collect();

    let mut hit = 0usize;
    let mut total = 0usize;
    for train in &model.samples {
        for t in test {
            total += 1;
            if angular_error_deg(train.direction, t.direction) <= threshold_deg {
                hit += 1;
            }
        }
    }
    let chance = if total > 0 { hit as f64 / total as f64 } else { 0.0 };
    Ok(GazeEval {
        accuracy,
        curve,
        chance,
        tested: test.len(),
        degenerate,
    })
}

/// Leave-one-sequence-out: for each sequence id, train on the rest and
/// test on it; aggregate accuracy/chance over all folds.
pub fn evaluate_loso(samples: &[GazeSample], threshold_deg: f64, params: &GazeParams) -> Result<GazeEval> {
    let mut by_seq: BTreeMap<usize, Vec<GazeSample>> = BTreeMap::new();
    for s in samples {
        by_seq.entry(s.seq_id).or_default().push(s.clone());
    }
    if by_seq.len() < 2 {
        return Err(Error::Protocol("leave-one-out needs >= 2 sequences".into()));
    }
    let mut all_errors: Vec<f64> = Vec::new();
    let mut degenerate = 0usize;
    let mut chance_hit = 0usize;
    let mut chance_total = 0usize;
    for (&seq_id, test) in &by_seq {
        let train: Vec<GazeSample> = samples.iter().filter(|s| s.seq_id != seq_id).cloned().collect();
        let model = GazeModel { samples: train };
        for t in test {
            match predict(&model, &t.descriptor, params)?.direction {
                Some(dir) => all_errors.push(angular_error_deg(dir, t.direction)),
                None => {
                    degenerate += 1;
                    all_errors.push(180.0);
                }
            }
            for tr in &model.samples {
                chance_total += 1;
                if angular_error_deg(tr.direction, t.direction) <= threshold_deg {
                    chance_hit += 1;
                }
            }
        }
    }
    let n = all_errors.len().max(1) as f64;
    let accuracy = all_errors.iter().filter(|&&e| e <= threshold_deg).count() as f64 / n;
    let curve = (0..=180)
        .map(|t| {
            let acc = all_errors.iter().filter(|&&e| e <= t as f64).count() as f64 / n;
            (t, acc)
        })
        .collect();
    Ok(GazeEval {
        accuracy,
        curve,
        chance: if chance_total > 0 {
            chance_hit as f64 / chance_total as f64
        } else {
            0.0
        },
        tested: all_errors.len(),
        degenerate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frameio::Frame;

    fn sample(dir: (f32, f32), descriptor: Vec<f32>, seq_id: usize) -> GazeSample {
        GazeSample {
            face_center: Point::new(50.0, 50.0),
            descriptor,
            direction: Point::new(dir.0, dir.1).normalized().unwrap(),
            source: GazeSource::Manual,
            seq_id,
            frame: 0,
        }
    }

    #[test]
    fn annotation_frame_and_direction() {
        let frames: Vec<Frame> = (0..60).map(|i| Frame::from_fn(200, 160, i, |_, _| 0.5)).collect();
        let seq = FrameSequence::new(frames, 25).unwrap();
        let events = vec![MoverEvent {
            frame: 50,
            cell: (5, 4), // cell center (165, 135)
            center: Point::new(165.0, 135.0),
            onset_frame: 20,
            offset_frame: 40,
        }];
        // Face at (100, 50): direction to (165,135) is not axis-aligned.
        let faces = vec![(20usize, Point::new(100.0, 50.0))];
        let params = GazeParams::default();
        let samples = annotate(&seq, &events, &faces, 0, &params);
        assert_eq!(samples.len(), 1);
        assert_eq!(samples[0].frame, 20); // (20+40)/2 - 10
        let d = samples[0].direction;
        let want = Point::new(65.0, 85.0).normalized().unwrap();
        assert!((d.x - want.x).abs() < 1e-6 && (d.y - want.y).abs() < 1e-6);

        // 3-4-5 triangle: face (100,50), target cell center (160,130).
        let events = vec![MoverEvent {
            frame: 50,
            cell: (4, 3),
            center: Point::new(135.0, 105.0),
            onset_frame: 20,
            offset_frame: 40,
        }];
        let mut p = params;
        p.cell_size = 30;
        // cell (4,3) center = (135, 105); pick a face making a 3-4-5.
        let faces = vec![(20usize, Point::new(135.0 - 60.0, 105.0 - 80.0))];
        let samples = annotate(&seq, &events, &faces, 0, &p);
        let d = samples[0].direction;
        assert!((d.x - 0.6).abs() < 1e-6 && (d.y - 0.8).abs() < 1e-6);

        // No face rows: zero samples.
        assert!(annotate(&seq, &events, &[], 0, &params).is_empty());
    }

    #[test]
    fn predict_dominant_neighbor() {
        let mut samples = vec![sample((1.0, 0.0), vec![0.0; 16], 0)];
        for _ in 0..9 {
            samples.push(sample((0.0, 1.0), vec![10.0; 16], 0));
        }
        let model = GazeModel { samples };
        let p = predict(&model, &[0.0; 16], &GazeParams::default()).unwrap();
        let dir = p.direction.unwrap();
        let err = angular_error_deg(dir, Point::new(1.0, 0.0));
        assert!(err < 1.0, "err {err}");
    }

    #[test]
    fn predict_two_equal_neighbors_bisects() {
        let samples = vec![
            sample((1.0, 0.0), vec![1.0; 16], 0),
            sample((0.0, 1.0), vec![-1.0; 16], 0),
        ];
        let model = GazeModel { samples };
        let p = predict(&model, &[0.0; 16], &GazeParams { k: 2, ..Default::default() }).unwrap();
        let dir = p.direction.unwrap();
        let s = std::f32::consts::FRAC_1_SQRT_2;
        assert!((dir.x - s).abs() < 1e-5 && (dir.y - s).abs() < 1e-5);
    }

    #[test]
    fn opposite_neighbors_degenerate() {
        let samples = vec![
            sample((1.0, 0.0), vec![1.0; 16], 0),
            sample((-1.0, 0.0), vec![-1.0; 16], 0),
        ];
        let model = GazeModel { samples };
        let p = predict(&model, &[0.0; 16], &GazeParams { k: 2, ..Default::default() }).unwrap();
        assert!(p.direction.is_none());
    }

    #[test]
    fn perfect_predictor_hits_every_threshold() {
        // Model trained with the test sample's own descriptor dominates.
        let train: Vec<GazeSample> = (0..12)
            .map(|i| {
                let angle = i as f32 * 0.5;
                sample((angle.cos(), angle.sin()), vec![i as f32; 8], 0)
            })
            .collect();
        let model = GazeModel { samples: train.clone() };
        let eval = evaluate(&model, &[train[3].clone()], 20.0, &GazeParams { k: 1, ..Default::default() }).unwrap();
        assert_eq!(eval.accuracy, 1.0);
        assert!(eval.curve.iter().skip(1).all(|&(_, acc)| acc == 1.0));
    }

    #[test]
    fn chance_for_isotropic_directions_near_analytic() {
        // Uniformly spread directions: chance at 20 degrees is about
        // (2*20)/360 = 0.111.
        let n = 72;
        let train: Vec<GazeSample> = (0..n)
            .map(|i| {
                let a = i as f32 * std::f32::consts::TAU / n as f32;
                sample((a.cos(), a.sin()), vec![i as f32; 4], 0)
            })
            .collect();
        let test: Vec<GazeSample> = (0..n)
            .map(|i| {
                let a = (i as f32 + 0.5) * std::f32::consts::TAU / n as f32;
                sample((a.cos(), a.sin()), vec![i as f32; 4], 1)
            })
            .collect();
        let model = GazeModel { samples: train };
        let eval = evaluate(&model, &test, 20.0, &GazeParams::default()).unwrap();
        assert!((eval.chance - 40.0 / 360.0).abs() < 0.01, "chance {}", eval.chance);
    }

    #[test]
    fn accuracy_curve_monotone() {
        let train: Vec<GazeSample> = (0..20)
            .map(|i| {
                let a = i as f32 * 0.3;
                sample((a.cos(), a.sin()), vec![(i % 7) as f32; 8], 0)
            })
            .collect();
        let test: Vec<GazeSample> = (0..10)
            .map(|i| {
                let a = i as f32 * 0.61 + 0.1;
                sample((a.cos(), a.sin()), vec![(i % 5) as f32 + 0.5; 8], 1)
            })
            .collect();
        let model = GazeModel { samples: train };
        let eval = evaluate(&model, &test, 20.0, &GazeParams::default()).unwrap();
        for w in eval.curve.windows(2) {
            assert!(w[0].1 <= w[1].1 + 1e-12);
        }
    }
}
