//! Shared drivers for the acceptance criteria: corpus construction,
//! detection pipelines and experiment loops.

use movervision::eval::{pr_curve, Detection, PrCurve, Truth};
use movervision::flow::FlowParams;
use movervision::frameio::{synthesize_scene, FrameSequence, GroundTruth, SceneScript};
use movervision::geom::Point;
use movervision::mover::{detect_events, MoverEvent, MoverParams};
use movervision::tracker::{filter_moving_events, Track, TrackerParams};

/// One global lock so timed criteria are not distorted by parallel tests.
pub static GATE: std::sync::Mutex<()> = std::sync::Mutex::new(());

pub fn flow_params() -> FlowParams {
    FlowParams::default()
}

pub fn mover_params() -> MoverParams {
    MoverParams::default()
}

pub fn filter_params() -> TrackerParams {
    TrackerParams {
        max_frames: 15,
        harvest_context: false,
        ..TrackerParams::default()
    }
}

/// Full mover pipeline: detect + tracking post-filter.
pub fn detect_filtered(seq: &FrameSequence) -> (Vec<MoverEvent>, Vec<Track>) {
    let det = detect_events(seq, &mover_params(), &flow_params()).expect("detection runs");
    let (events, tracks) =
        filter_moving_events(seq, &det.events, 10.0, &filter_params(), &flow_params()).expect("filter runs");
    (events, tracks)
}

/// Event matches an interaction iff its cell lies in the 3x3 neighborhood
/// of the contact cell and it fires at or after contact.
pub fn event_matches(event: &MoverEvent, truth_point: Point, truth_frame: usize, cell_size: f32) -> bool {
    let cell_center = Point::new(
        event.cell.0 as f32 * cell_size + cell_size / 2.0,
        event.cell.1 as f32 * cell_size + cell_size / 2.0,
    );
    cell_center.distance(truth_point) <= 1.5 * cell_size * std::f32::consts::SQRT_2 && event.frame >= truth_frame
}

/// Recall plus the all-detections-near-contacts flag for one scene.
pub struct SceneScore {
    pub truths: usize,
    pub hits: usize,
    pub false_events: usize,
}

pub fn score_events(events: &[MoverEvent], gt: &GroundTruth, cell_size: f32) -> SceneScore {
    let mut hits = 0;
    for it in &gt.interactions {
        if events.iter().any(|e| event_matches(e, it.point, it.frame, cell_size)) {
            hits += 1;
        }
    }
    let false_events = events
        .iter()
        .filter(|e| !gt.interactions.iter().any(|it| event_matches(e, it.point, it.frame, cell_size)))
        .count();
    SceneScore {
        truths: gt.interactions.len(),
        hits,
        false_events,
    }
}

pub fn render(script: &SceneScript) -> (FrameSequence, GroundTruth) {
    synthesize_scene(script).expect("script renders")
}

/// PR of per-frame detections against per-frame truth centers.
pub fn frame_pr(dets: &[(usize, Point, f64)], truths: &[(usize, Point)], radius: f32) -> PrCurve {
    let d: Vec<Detection> = dets
        .iter()
        .map(|&(frame, center, score)| Detection {
            frame,
            center,
            score,
            rect: None,
        })
        .collect();
    let t: Vec<Truth> = truths
        .iter()
        .map(|&(frame, center)| Truth { frame, center })
        .collect();
    pr_curve(&d, &t, radius).expect("pr curve")
}
