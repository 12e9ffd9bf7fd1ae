//! Internally supervised learning loops: harvest patches from mover events
//! and tracks, train an appearance detector on the noisy self-labels,
//! combine it with a pluggable context detector, and iterate with growing
//! portions of confident detections.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::annkde::{AnnIndex, KdeParams, DEFAULT_KDE_K};
use crate::error::{Error, Result};
use crate::features::{sift_like_from_gradients, GradientField, SIFT_DIM};
use crate::flow::FlowParams;
use crate::frameio::{Frame, FrameSequence};
use crate::geom::Point;
use crate::mover::MoverEvent;
use crate::partmodel::{Gaussian2, Part, PartModel, PartModelParams, VotingMap};
use crate::tracker::{self, Track, TrackerParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Mover,
    Tracked,
    SelfDetected,
    RandomBackground,
}

/// Where a patch came from.
#[derive(Debug, Clone, Copy)]
pub struct PatchSource {
    pub frame: usize,
    pub center: Point,
    pub provenance: Provenance,
}

/// Positive and negative training patches.
#[derive(Debug, Clone, Default)]
pub struct PatchSet {
    pub positives: Vec<(Frame, PatchSource)>,
    pub negatives: Vec<(Frame, PatchSource)>,
    /// Patches dropped because the frame was too small.
    pub skipped: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct LearnerParams {
    /// Side of harvested patches.
    pub patch_size: u32,
    /// Min distance from a negative center to every positive center in the
    /// same frame.
    pub neg_min_distance: f32,
    /// Descriptor sampling grid inside positive patches.
    pub grid_step: usize,
    /// Kernel std dev of the baseline context offset density, px.
    pub context_sigma: f32,
    /// Appearance lattice stride for detection passes.
    pub detect_stride: usize,
    /// ANN approximation during detection.
    pub kde_epsilon: f64,
    pub kde_max_leaves: usize,
}

impl Default for LearnerParams {
    fn default() -> Self {
        LearnerParams {
            patch_size: 90,
            neg_min_distance: 60.0,
            grid_step: 5,
            context_sigma: 15.0,
            detect_stride: 3,
            kde_epsilon: 0.5,
            kde_max_leaves: 192,
        }
    }
}

/// Positives at every event center and every tracked center; an equal
/// count of random background negatives away from all positives.
pub fn harvest_initial(
    seq: &FrameSequence,
    events: &[MoverEvent],
    tracks: &[Track],
    params: &LearnerParams,
    seed: u64,
) -> PatchSet {
    let mut set = PatchSet::default();
    let size = params.patch_size;
    for e in events {
        match seq.frames.get(e.frame).and_then(|f| f.patch(e.center, size, size)) {
            Some(p) => set.positives.push((
                p,
                PatchSource {
                    frame: e.frame,
                    center: e.center,
                    provenance: Provenance::Mover,
                },
            )),
            None => set.skipped += 1,
        }
    }
    for t in tracks {
        for (i, c) in t.centers.iter().enumerate() {
            let frame_idx = t.start_frame + i;
            match seq.frames.get(frame_idx).and_then(|f| f.patch(*c, size, size)) {
                Some(p) => set.positives.push((
                    p,
                    PatchSource {
                        frame: frame_idx,
                        center: *c,
                        provenance: Provenance::Tracked,
                    },
                )),
                None => set.skipped += 1,
            }
        }
    }
    sample_negatives(&mut set, seq, params, seed);
    set
}

/// Fill `set.negatives` to match the positive count with random background
/// patches at least `neg_min_distance` from every positive in their frame.
pub fn sample_negatives(set: &mut PatchSet, seq: &FrameSequence, params: &LearnerParams, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_0f_ba5e);
    let size = params.patch_size;
    let margin = size as f32 / 2.0;
    let frames_with_pos: Vec<usize> = {
        let mut v: Vec<usize> = set.positives.iter().map(|(_, s)| s.frame).collect();
        v.sort_unstable();
        v.dedup();
        v
    };
    if frames_with_pos.is_empty() || (seq.width() as u32) < size || (seq.height() as u32) < size {
        return;
    }
    let need = set.positives.len();
    let mut attempts = 0usize;
    while set.negatives.len() < need && attempts < need * 200 {
        attempts += 1;
        let frame_idx = frames_with_pos[rng.gen_range(0..frames_with_pos.len())];
        let x = rng.gen_range(margin..seq.width() as f32 - margin);
        let y = rng.gen_range(margin..seq.height() as f32 - margin);
        let c = Point::new(x, y);
        let clash = set
            .positives
            .iter()
            .any(|(_, s)| s.frame == frame_idx && s.center.distance(c) < params.neg_min_distance);
        if clash {
            continue;
        }
        if let Some(p) = seq.frames[frame_idx].patch(c, size, size) {
            set.negatives.push((
                p,
                PatchSource {
                    frame: frame_idx,
                    center: c,
                    provenance: Provenance::RandomBackground,
                },
            ));
        }
    }
}

/// Train the one-part "ANN-star" appearance detector: descriptors sampled
/// on a grid inside positive patches; negatives set the acceptance
/// threshold at equal error.
pub fn train_appearance(patches: &PatchSet, params: &LearnerParams) -> Result<PartModel> {
    if patches.positives.len() < 10 {
        return Err(Error::InsufficientData(format!(
            "need >= 10 positive patches, got {}",
            patches.positives.len()
        )));
    }
    let mut model_params = PartModelParams::default();
    model_params.appearance_stride = params.detect_stride;
    model_params.center_stride = params.detect_stride;
    model_params.kde_epsilon = params.kde_epsilon;
    model_params.kde_max_leaves = params.kde_max_leaves;

    // Collect grid descriptors from positives, deduplicating exact
    // duplicates so repeated patches cannot shift the score distribution.
    let mut index = AnnIndex::new(SIFT_DIM);
    let mut seen = std::collections::HashSet::new();
    let half = model_params.patch_size as i32 / 2;
    for (patch, src) in &patches.positives {
        let grads = GradientField::new(patch);
        let step = params.grid_step;
        let mut y = half;
        while y < patch.height() as i32 - half {
            let mut x = half;
            while x < patch.width() as i32 - half {
                let d = sift_like_from_gradients(&grads, Point::new(x as f32, y as f32), model_params.patch_size);
                let key: Vec<u32> = d.values.iter().map(|v| v.to_bits()).collect();
                if seen.insert(key) {
                    index.insert(&d.values, src.frame as u64)?;
                }
                x += step as i32;
            }
            y += step as i32;
        }
    }
    if index.is_empty() {
        return Err(Error::InsufficientData("no descriptors harvested".into()));
    }

    let h = index.median_neighbor_distance();
    let kde = KdeParams {
        h,
        k: DEFAULT_KDE_K.min(index.len()),
        norm_mode: model_params.norm_mode,
    };
    let part = Part {
        index,
        kde,
        train_geom: Gaussian2::fit(&[(0.0, 0.0)], model_params.cov_floor),
        online_geom: None,
        success_threshold: f64::NEG_INFINITY,
    };
    let mut model = PartModel {
        parts: vec![part],
        params: model_params,
        log_p_center: 0.0,
        accept_threshold: f64::NEG_INFINITY,
        object_half: params.patch_size as usize / 2,
    };

    // Equal-error threshold over the distinct patch scores.
    let score_patch = |m: &PartModel, p: &Frame| m.detect_static(p).0.score;
    let mut pos_scores: Vec<f64> = patches.positives.iter().map(|(p, _)| score_patch(&model, p)).collect();
    let mut neg_scores: Vec<f64> = patches.negatives.iter().map(|(p, _)| score_patch(&model, p)).collect();
    pos_scores.sort_by(f64::total_cmp);
    pos_scores.dedup();
    neg_scores.sort_by(f64::total_cmp);
    neg_scores.dedup();
    model.accept_threshold = equal_error_threshold(&pos_scores, &neg_scores);
    model.parts[0].success_threshold = model.accept_threshold;
    Ok(model)
}

/// Threshold minimizing |false-negative rate - false-positive rate| over
/// two sorted, deduplicated score sets.
fn equal_error_threshold(pos: &[f64], neg: &[f64]) -> f64 {
    if neg.is_empty() {
        return pos.first().copied().unwrap_or(0.0);
    }
    let mut candidates: Vec<f64> = pos.iter().chain(neg).copied().collect();
    candidates.sort_by(f64::total_cmp);
    candidates.dedup();
    let mut best = f64::MAX;
    let mut best_t = candidates[0];
    for &t in &candidates {
        let fnr = pos.iter().filter(|&&s| s < t).count() as f64 / pos.len() as f64;
        let fpr = neg.iter().filter(|&&s| s >= t).count() as f64 / neg.len() as f64;
        let gap = (fnr - fpr).abs();
        if gap < best {
            best = gap;
            best_t = t;
        }
    }
    best_t
}

/// A detector that votes for target locations relative to a reference
/// point (the stand-in for body-context models).
pub trait ContextDetector {
    fn detect(&self, frame: &Frame, reference: Point) -> VotingMap;
}

/// Offset-density context baseline: a Gaussian mixture over reference to
/// target offsets fitted from confident detections. Uniform until fitted.
#[derive(Debug, Clone, Default)]
pub struct BaselineContext {
    pub offsets: Vec<Point>,
    pub sigma: f32,
}

impl BaselineContext {
    pub fn new(sigma: f32) -> BaselineContext {
        BaselineContext {
            offsets: Vec::new(),
            sigma,
        }
    }

    pub fn fit(&mut self, offsets: Vec<Point>) {
        self.offsets = offsets;
    }
}

impl ContextDetector for BaselineContext {
    fn detect(&self, frame: &Frame, reference: Point) -> VotingMap {
        let w = frame.width();
        let h = frame.height();
        let mut map = VotingMap::new(w, h);
        if self.offsets.is_empty() {
            let u = 1.0 / (w * h) as f32;
            for y in 0..h {
                for x in 0..w {
                    map.set(x, y, u);
                }
            }
            return map;
        }
        let reach = (4.0 * self.sigma).ceil() as i32;
        let inv = 1.0 / (2.0 * self.sigma * self.sigma);
        for off in &self.offsets {
            let cx = reference.x + off.x;
            let cy = reference.y + off.y;
            let x0 = ((cx as i32) - reach).max(0);
            let y0 = ((cy as i32) - reach).max(0);
            let x1 = ((cx as i32) + reach).min(w as i32 - 1);
            let y1 = ((cy as i32) + reach).min(h as i32 - 1);
            for y in y0..=y1 {
                for x in x0..=x1 {
                    let dx = x as f32 - cx;
                    let dy = y as f32 - cy;
                    let v = map.at(x as usize, y as usize) + (-(dx * dx + dy * dy) * inv).exp();
                    map.set(x as usize, y as usize, v);
                }
            }
        }
        // Normalize to a discrete probability map.
        let sum = map.sum() as f32;
        if sum > 0.0 {
            let mut out = VotingMap::new(w, h);
            for y in 0..h {
                for x in 0..w {
                    out.set(x, y, map.at(x, y) / sum);
                }
            }
            return out;
        }
        map
    }
}

/// Min-max normalize each map to [0,1], then average. A constant map
/// normalizes to all zeros.
pub fn combine(a: &VotingMap, b: &VotingMap) -> Result<VotingMap> {
    if a.width != b.width || a.height != b.height {
        return Err(Error::Dimension("voting map dims differ".into()));
    }
    let norm = |m: &VotingMap| -> Vec<f32> {
        let lo = m.values().iter().copied().fold(f32::MAX, f32::min);
        let hi = m.values().iter().copied().fold(f32::MIN, f32::max);
        if hi - lo <= 0.0 {
            return vec![0.0; m.values().len()];
        }
        m.values().iter().map(|v| (v - lo) / (hi - lo)).collect()
    };
    let na = norm(a);
    let nb = norm(b);
    let vals: Vec<f32> = na.iter().zip(&nb).map(|(x, y)| (x + y) / 2.0).collect();
    VotingMap::from_values(a.width, a.height, vals)
}

/// Appearance detector plus optional fitted context.
#[derive(Debug, Clone)]
pub struct CombinedDetector {
    pub appearance: PartModel,
    pub context: Option<BaselineContext>,
}

/// One per-frame detection from a pass over a corpus.
#[derive(Debug, Clone, Copy)]
pub struct FrameDetection {
    pub video: usize,
    pub frame: usize,
    pub center: Point,
    /// Raw appearance log-score at the chosen location; comparable across
    /// frames (combined maps are normalized per frame).
    pub score: f64,
}

impl CombinedDetector {
    /// Detect in one frame: combined (or appearance-only) map argmax,
    /// scored by the raw appearance term at that location.
    pub fn detect_frame(&self, frame: &Frame, face: Option<Point>) -> Result<(Point, f64, VotingMap)> {
        let maps = self.appearance.appearance_maps(frame);
        let (_, app_map) = self.appearance.detect_with_temporal(frame, &maps, None);
        let final_map = match (&self.context, face) {
            (Some(ctx), Some(f)) => combine(&app_map, &ctx.detect(frame, f))?,
            _ => app_map,
        };
        let (center, _) = final_map.argmax();
        let score = maps[0].at(center.x as f64, center.y as f64);
        Ok((center, score, final_map))
    }
}

/// Training corpus: sequences with optional per-frame face centers.
pub struct CorpusVideo {
    pub seq: FrameSequence,
    pub faces: Vec<Option<Point>>,
}

#[derive(Debug, Clone, Copy)]
pub struct CotrainConfig {
    pub iterations: usize,
    pub portions: [f64; 3],
    pub use_tracking: bool,
    pub use_context: bool,
    pub seed: u64,
    /// At most this many confident detections are extended by tracking per
    /// iteration (tracking is the expensive step).
    pub track_cap: usize,
}

impl Default for CotrainConfig {
    fn default() -> Self {
        CotrainConfig {
            iterations: 3,
            portions: [0.02, 0.10, 0.20],
            use_tracking: true,
            use_context: true,
            seed: 0,
            track_cap: 8,
        }
    }
}

/// One stage of the co-training loop: the detector plus the confident
/// self-labels that trained it (empty for the initial stage).
#[derive(Debug, Clone)]
pub struct CotrainStage {
    pub detector: CombinedDetector,
    pub labels: Vec<FrameDetection>,
}

/// Iteratively re-train appearance+context from growing portions of the
/// most confident self-detections. Returns every stage (initial first).
pub fn co_train(
    initial: CombinedDetector,
    videos: &[CorpusVideo],
    config: &CotrainConfig,
    learner_params: &LearnerParams,
    tracker_params: &TrackerParams,
    flow_params: &FlowParams,
) -> Result<Vec<CotrainStage>> {
    let mut stages = vec![CotrainStage {
        detector: initial,
        labels: Vec::new(),
    }];
    for iter in 0..config.iterations {
        let current = &stages.last().unwrap().detector;

        // Detection pass over the full corpus.
        let mut detections: Vec<FrameDetection> = Vec::new();
        for (vi, video) in videos.iter().enumerate() {
            for (fi, frame) in video.seq.frames.iter().enumerate() {
                let face = video.faces.get(fi).copied().flatten();
                let (center, score, _) = current.detect_frame(frame, face)?;
                detections.push(FrameDetection {
                    video: vi,
                    frame: fi,
                    center,
                    score,
                });
            }
        }
        if detections.is_empty() {
            break;
        }
        detections.sort_by(|a, b| {
            b.score
                .total_cmp(&a.score)
                .then(a.video.cmp(&b.video))
                .then(a.frame.cmp(&b.frame))
        });
        let portion = config.portions[iter.min(config.portions.len() - 1)];
        let take = ((portion * detections.len() as f64).ceil() as usize).clamp(1, detections.len());
        let confident = &detections[..take];

        // Harvest self-labeled patches, optionally extended by tracking.
        let mut set = PatchSet::default();
        let mut context_offsets: Vec<Point> = Vec::new();
        let mut tracked = 0usize;
        for det in confident {
            let video = &videos[det.video];
            let size = learner_params.patch_size;
            match video.seq.frames[det.frame].patch(det.center, size, size) {
                Some(p) => set.positives.push((
                    p,
                    PatchSource {
                        frame: det.frame,
                        center: det.center,
                        provenance: Provenance::SelfDetected,
                    },
                )),
                None => set.skipped += 1,
            }
            if let Some(face) = video.faces.get(det.frame).copied().flatten() {
                context_offsets.push(Point::new(det.center.x - face.x, det.center.y - face.y));
            }
            if config.use_tracking && tracked < config.track_cap {
                tracked += 1;
                let t = tracker::track(
                    &video.seq,
                    det.frame,
                    det.center,
                    det.frame as u64,
                    tracker_params,
                    flow_params,
                )?;
                for (i, c) in t.centers.iter().enumerate().skip(1) {
                    let fi = t.start_frame + i;
                    if let Some(p) = video.seq.frames[fi].patch(*c, size, size) {
                        set.positives.push((
                            p,
                            PatchSource {
                                frame: fi,
                                center: *c,
                                provenance: Provenance::Tracked,
                            },
                        ));
                    }
                    if let Some(face) = videos[det.video].faces.get(fi).copied().flatten() {
                        context_offsets.push(Point::new(c.x - face.x, c.y - face.y));
                    }
                }
            }
        }

        // Negatives from the union of source frames (first video wins the
        // sampling; keep it simple and deterministic).
        for (vi, video) in videos.iter().enumerate() {
            let mut sub = PatchSet {
                positives: set
                    .positives
                    .iter()
                    .filter(|(_, s)| confident.iter().any(|d| d.video == vi && d.frame == s.frame))
                    .cloned()
                    .collect(),
                ..Default::default()
            };
            if sub.positives.is_empty() {
                continue;
            }
            sample_negatives(&mut sub, &video.seq, learner_params, config.seed ^ (iter as u64) << 8 ^ vi as u64);
            set.negatives.extend(sub.negatives);
        }

        if set.positives.len() < 10 {
            break; // too few confident detections; keep previous detector
        }
        let appearance = train_appearance(&set, learner_params)?;
        let context = if config.use_context {
            let mut ctx = BaselineContext::new(learner_params.context_sigma);
            ctx.fit(context_offsets);
            Some(ctx)
        } else {
            None
        };
        stages.push(CotrainStage {
            detector: CombinedDetector { appearance, context },
            labels: confident.to_vec(),
        });
    }
    Ok(stages)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn combine_is_symmetric_and_keeps_argmax() {
        let mut a = VotingMap::new(10, 10);
        a.set(3, 4, 5.0);
        a.set(7, 7, 2.0);
        let c1 = combine(&a, &a).unwrap();
        assert_eq!(c1.argmax().0, a.argmax().0);
        let mut b = VotingMap::new(10, 10);
        b.set(7, 7, 9.0);
        let ab = combine(&a, &b).unwrap();
        let ba = combine(&b, &a).unwrap();
        assert_eq!(ab.values(), ba.values());
    }

    #[test]
    fn combine_breaks_appearance_tie_with_context() {
        // Two equal appearance peaks; context supports one of them.
        let mut app = VotingMap::new(20, 10);
        app.set(4, 5, 1.0);
        app.set(15, 5, 1.0);
        let mut ctx = VotingMap::new(20, 10);
        ctx.set(15, 5, 0.5);
        let combined = combine(&app, &ctx).unwrap();
        assert_eq!(combined.argmax().0, Point::new(15.0, 5.0));
    }

    #[test]
    fn constant_map_normalizes_to_zero() {
        let a = VotingMap::new(8, 8); // all zeros = constant
        let mut b = VotingMap::new(8, 8);
        b.set(2, 2, 1.0);
        let c = combine(&a, &b).unwrap();
        // a contributed nothing; argmax comes from b.
        assert_eq!(c.argmax().0, Point::new(2.0, 2.0));
        assert!((c.at(2, 2) - 0.5).abs() < 1e-6);
    }

    #[test]
    fn unfitted_context_is_uniform_and_fitted_peaks_at_offset() {
        let frame = Frame::from_fn(80, 60, 0, |_, _| 0.5);
        let ctx = BaselineContext::new(10.0);
        let map = ctx.detect(&frame, Point::new(20.0, 20.0));
        let first = map.at(0, 0);
        assert!(map.values().iter().all(|v| (v - first).abs() < 1e-9));
        assert!((map.sum() - 1.0).abs() < 1e-6);

        let mut ctx = BaselineContext::new(6.0);
        ctx.fit(vec![Point::new(30.0, 15.0), Point::new(30.0, 15.0), Point::new(31.0, 16.0)]);
        let map = ctx.detect(&frame, Point::new(20.0, 20.0));
        let (peak, _) = map.argmax();
        assert!(peak.distance(Point::new(50.0, 35.0)) <= 2.0, "peak {peak:?}");
        assert!((map.sum() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn equal_error_threshold_separates_clean_sets() {
        let pos = [1.0, 2.0, 3.0, 4.0];
        let neg = [-4.0, -3.0, -2.0, -1.0];
        let t = equal_error_threshold(&pos, &neg);
        assert!(t > -1.0 && t <= 1.0, "threshold {t}");
    }
}
