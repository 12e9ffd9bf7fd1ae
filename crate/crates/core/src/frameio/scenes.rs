//! Ready-made script builders for the standard synthetic corpora used by
//! experiments and tests: pickup/putdown scenes, autonomous-motion control
//! scenes, scaled renderings, morphing-object sequences and gaze scenes.

use super::script::*;
use super::synth::{HAND_DWELL, HAND_SPEED};
use crate::geom::Point;

/// A pickup/putdown corpus script: `n_events` alternating interactions at
/// spread-out cells of a `width x height` scene, scheduled back to back.
pub fn interaction_script(width: u32, height: u32, n_events: usize, seed: u64) -> SceneScript {
    let cells_y = height / SCRIPT_CELL_SIZE;
    interaction_script_in_rows(width, height, n_events, seed, 1..cells_y.saturating_sub(1))
}

/// Like [`interaction_script`] but with targets restricted to a row band.
pub fn interaction_script_in_rows(
    width: u32,
    height: u32,
    n_events: usize,
    seed: u64,
    rows: std::ops::Range<u32>,
) -> SceneScript {
    let cells_x = width / SCRIPT_CELL_SIZE;
    // Interior target cells only, and away from the staging corners.
    let candidates: Vec<(u32, u32)> = rows
        .flat_map(|cy| (1..cells_x.saturating_sub(1)).map(move |cx| (cx, cy)))
        .collect();
    assert!(!candidates.is_empty(), "scene too small for interactions");

    let targets: Vec<(u32, u32)> = (0..n_events)
        .map(|i| candidates[((seed as usize).wrapping_mul(31).wrapping_add(i * 7)) % candidates.len()])
        .collect();

    // Mirror the planner's staging-corner choice to schedule tightly.
    let target_pts: Vec<Point> = targets
        .iter()
        .map(|&(cx, cy)| {
            Point::new(
                (cx * SCRIPT_CELL_SIZE + SCRIPT_CELL_SIZE / 2) as f32,
                (cy * SCRIPT_CELL_SIZE + SCRIPT_CELL_SIZE / 2) as f32,
            )
        })
        .collect();
    let corners = [
        Point::new(16.0, 16.0),
        Point::new(width as f32 - 16.0, 16.0),
        Point::new(16.0, height as f32 - 16.0),
        Point::new(width as f32 - 16.0, height as f32 - 16.0),
    ];
    let home = corners
        .iter()
        .max_by(|a, b| {
            let da = target_pts.iter().map(|t| a.distance(*t)).fold(f32::MAX, f32::min);
            let db = target_pts.iter().map(|t| b.distance(*t)).fold(f32::MAX, f32::min);
            da.total_cmp(&db)
        })
        .copied()
        .unwrap();

    let mut interactions = Vec::new();
    let mut cursor = 15usize;
    for (i, (&cell, target)) in targets.iter().zip(&target_pts).enumerate() {
        let kind = if i % 2 == 0 {
            InteractionKind::Pickup
        } else {
            InteractionKind::Putdown
        };
        let travel = (home.distance(*target) / HAND_SPEED).ceil() as usize;
        let window = 2 * travel + HAND_DWELL + 18;
        interactions.push(InteractionScript {
            kind,
            cell,
            start_frame: cursor,
            end_frame: cursor + window,
        });
        cursor += window + 2;
    }
    SceneScript {
        width,
        height,
        frames: cursor + 28,
        fps: super::DEFAULT_FPS,
        background: BackgroundSpec::default(),
        actors: vec![],
        interactions,
        hand: None,
        face: None,
        noise_sigma: 0.01,
        light_drift: 0.0,
        seed,
    }
}

/// A control scene of purely autonomous object motions (no hand).
pub fn autonomous_script(width: u32, height: u32, n_moves: usize, seed: u64) -> SceneScript {
    let cells_x = width / SCRIPT_CELL_SIZE;
    let cells_y = height / SCRIPT_CELL_SIZE;
    let candidates: Vec<(u32, u32)> = (1..cells_y.saturating_sub(1))
        .flat_map(|cy| (1..cells_x.saturating_sub(1)).map(move |cx| (cx, cy)))
        .collect();
    let window = 58usize;
    let interactions = (0..n_moves)
        .map(|i| {
            let idx = ((seed as usize).wrapping_mul(17).wrapping_add(i * 11)) % candidates.len();
            let start = 15 + i * window;
            InteractionScript {
                kind: InteractionKind::Autonomous,
                cell: candidates[idx],
                start_frame: start,
                end_frame: start + window - 2,
            }
        })
        .collect();
    SceneScript {
        width,
        height,
        frames: 15 + n_moves * window + 25,
        fps: super::DEFAULT_FPS,
        background: BackgroundSpec::default(),
        actors: vec![],
        interactions,
        hand: None,
        face: None,
        noise_sigma: 0.01,
        light_drift: 0.0,
        seed,
    }
}

/// Bilinear spatial resampling of a whole sequence, as in the scale study:
/// the same footage rendered at `factor` of its original size.
pub fn resample_sequence(seq: &super::FrameSequence, factor: f32) -> super::FrameSequence {
    let w = ((seq.width() as f32 * factor).round() as usize).max(1);
    let h = ((seq.height() as f32 * factor).round() as usize).max(1);
    let frames = seq
        .frames
        .iter()
        .map(|src| {
            super::Frame::from_fn(w, h, src.index, |x, y| {
                let fx = (x as f32 + 0.5) / factor - 0.5;
                let fy = (y as f32 + 0.5) / factor - 0.5;
                let x0 = fx.floor() as i32;
                let y0 = fy.floor() as i32;
                let tx = fx - x0 as f32;
                let ty = fy - y0 as f32;
                src.get_clamped(x0, y0) * (1.0 - tx) * (1.0 - ty)
                    + src.get_clamped(x0 + 1, y0) * tx * (1.0 - ty)
                    + src.get_clamped(x0, y0 + 1) * (1.0 - tx) * ty
                    + src.get_clamped(x0 + 1, y0 + 1) * tx * ty
            })
        })
        .collect();
    super::FrameSequence::new(frames, seq.fps).expect("resampled frames share dimensions")
}

/// Ground truth for a resampled sequence: points scale, timing does not.
pub fn scale_ground_truth(gt: &super::GroundTruth, factor: f32) -> super::GroundTruth {
    let sp = |p: Point| Point::new(p.x * factor, p.y * factor);
    super::GroundTruth {
        interactions: gt
            .interactions
            .iter()
            .map(|it| super::GtInteraction {
                point: sp(it.point),
                ..*it
            })
            .collect(),
        hand_centers: gt.hand_centers.iter().map(|c| c.map(sp)).collect(),
        faces: gt
            .faces
            .iter()
            .map(|f| {
                f.map(|pose| super::FacePose {
                    center: sp(pose.center),
                    direction: pose.direction,
                })
            })
            .collect(),
        actor_centers: gt
            .actor_centers
            .iter()
            .map(|per_frame| per_frame.iter().map(|c| c.map(sp)).collect())
            .collect(),
    }
}

/// A gaze scene: a static face glyph watching a sequence of pickups at
/// spread-out targets.
pub fn gaze_script(width: u32, height: u32, n_events: usize, seed: u64) -> SceneScript {
    let mut script = interaction_script(width, height, n_events, seed);
    // A centered face spreads the target directions over the full circle.
    let fx = width as f32 * 0.5 + if seed % 2 == 0 { 8.0 } else { -6.0 };
    let fy = height as f32 * 0.5 + if seed % 3 == 0 { 6.0 } else { -8.0 };
    script.face = Some(FaceSpec {
        x: fx,
        y: fy,
        size: 40,
    });
    script
}

/// Offsets of the two morph-scene parts from the object center.
pub const MORPH_PART_OFFSETS: [(f32, f32); 2] = [(-14.0, 0.0), (14.0, 0.0)];

/// Part sprite of the morphing object. The texture interpolates from the
/// base texture to a second one over `morph` frames.
fn morph_part_sprite(seed: u64, part: usize, morph: Option<MorphSpec>) -> SpriteSpec {
    SpriteSpec {
        width: 12,
        height: 12,
        level: 0.45,
        contrast: 0.4,
        texture_seed: seed.wrapping_add(101 + part as u64 * 7919),
        morph,
    }
}

fn morph_target_seed(seed: u64, part: usize) -> u64 {
    seed.wrapping_add(40_409 + part as u64 * 15_013)
}

/// A sequence of the two-part object translating while its part textures
/// morph toward a second appearance; a static distractor carries the
/// fully-morphed texture of part 0 to tempt drifting updates.
/// Returns the frames plus per-frame object centers.
pub fn morph_scene(width: u32, height: u32, frames: usize, seed: u64) -> (super::FrameSequence, Vec<Point>) {
    let start = Point::new(width as f32 * 0.28, height as f32 * 0.42);
    let end = Point::new(width as f32 * 0.72, height as f32 * 0.58);
    let waypoints = |off: (f32, f32)| {
        vec![
            Waypoint {
                frame: 0,
                x: start.x + off.0,
                y: start.y + off.1,
            },
            Waypoint {
                frame: frames - 1,
                x: end.x + off.0,
                y: end.y + off.1,
            },
        ]
    };
    let actors: Vec<ActorScript> = MORPH_PART_OFFSETS
        .iter()
        .enumerate()
        .map(|(pi, &off)| ActorScript {
            sprite: morph_part_sprite(
                seed,
                pi,
                Some(MorphSpec {
                    to_texture_seed: morph_target_seed(seed, pi),
                    start_frame: 5,
                    end_frame: frames.saturating_sub(5),
                    from_phase: 0.0,
                    to_phase: 1.0,
                }),
            ),
            waypoints: waypoints(off),
        })
        .collect();
    // Distractor: static sprite already wearing part 0's final texture.
    let distractor = ActorScript {
        sprite: SpriteSpec {
            morph: None,
            texture_seed: morph_target_seed(seed, 0),
            ..morph_part_sprite(seed, 0, None)
        },
        waypoints: vec![
            Waypoint {
                frame: 0,
                x: width as f32 * 0.5,
                y: height as f32 * 0.22,
            },
            Waypoint {
                frame: frames - 1,
                x: width as f32 * 0.5,
                y: height as f32 * 0.22,
            },
        ],
    };
    let script = SceneScript {
        width,
        height,
        frames,
        fps: super::DEFAULT_FPS,
        background: BackgroundSpec::Textured {
            level: 0.75,
            contrast: 0.05,
            grain: 9,
        },
        actors: actors.into_iter().chain(std::iter::once(distractor)).collect(),
        interactions: vec![],
        hand: None,
        face: None,
        noise_sigma: 0.005,
        light_drift: 0.0,
        seed,
    };
    let (seq, _) = super::synthesize_scene(&script).expect("morph scene script is valid");
    let centers = (0..frames)
        .map(|f| {
            let t = f as f32 / (frames - 1).max(1) as f32;
            Point::new(start.x + (end.x - start.x) * t, start.y + (end.y - start.y) * t)
        })
        .collect();
    (seq, centers)
}

/// Static training/test stills of the morph object at `phase` 0 (initial
/// texture) or 1 (fully morphed), one frame per requested center.
pub fn morph_stills(
    width: u32,
    height: u32,
    centers: &[Point],
    phase: f32,
    seed: u64,
) -> super::FrameSequence {
    let frames: Vec<super::Frame> = centers
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let actors: Vec<ActorScript> = MORPH_PART_OFFSETS
                .iter()
                .enumerate()
                .map(|(pi, &off)| ActorScript {
                    sprite: morph_part_sprite(
                        seed,
                        pi,
                        // Morph window [0,0]: any frame >= 0 renders at the
                        // target texture; scale by phase via the window.
                        if phase > 0.0 {
                            Some(MorphSpec {
                                to_texture_seed: morph_target_seed(seed, pi),
                                start_frame: 0,
                                end_frame: 0,
                                from_phase: phase,
                                to_phase: phase,
                            })
                        } else {
                            None
                        },
                    ),
                    waypoints: vec![Waypoint {
                        frame: 0,
                        x: c.x + off.0,
                        y: c.y + off.1,
                    }],
                })
                .collect();
            let script = SceneScript {
                width,
                height,
                frames: 1,
                fps: super::DEFAULT_FPS,
                background: BackgroundSpec::Textured {
                    level: 0.75,
                    contrast: 0.05,
                    grain: 9,
                },
                actors,
                interactions: vec![],
                hand: None,
                face: None,
                noise_sigma: 0.005,
                light_drift: 0.0,
                seed: seed.wrapping_add(i as u64 * 7741),
            };
            let (mut seq, _) = super::synthesize_scene(&script).expect("still script is valid");
            let mut frame = seq.frames.remove(0);
            frame.index = i;
            frame
        })
        .collect();
    super::FrameSequence::new(frames, super::DEFAULT_FPS).expect("stills share dimensions")
}

/// Shared hand textures of the co-training corpus: every video shows the
/// same hand, morphing between the same two appearances.
const COTRAIN_HAND_BASE: u64 = 0xabcd_1234;
const COTRAIN_HAND_TARGET: u64 = 0x00de_fea7;

/// A co-training corpus video: a hand performing pickups under a watching
/// face, its appearance sweeping the morph phases `phase.0..phase.1` over
/// the video. Targets sit in the rows below the face so hand positions
/// correlate with face-relative offsets. A static hand-lookalike
/// distractor (mid-morph texture) sits in the top band.
pub fn cotrain_script(width: u32, height: u32, n_events: usize, phase: (f32, f32), seed: u64) -> SceneScript {
    let cells_y = height / SCRIPT_CELL_SIZE;
    let mut script = interaction_script_in_rows(width, height, n_events, seed, (cells_y / 2)..cells_y - 1);
    let hand = SpriteSpec {
        morph: Some(MorphSpec {
            to_texture_seed: COTRAIN_HAND_TARGET,
            start_frame: 5,
            end_frame: script.frames.saturating_sub(5),
            from_phase: phase.0,
            to_phase: phase.1,
        }),
        ..SpriteSpec::hand_default(COTRAIN_HAND_BASE)
    };
    // hand_default derives the texture from the seed; pin it directly.
    let hand = SpriteSpec {
        texture_seed: COTRAIN_HAND_BASE,
        ..hand
    };
    script.hand = Some(hand);
    script.face = Some(FaceSpec {
        x: width as f32 * 0.5,
        y: height as f32 * 0.22,
        size: 40,
    });
    // The distractor wears the hand's mid-morph appearance, frozen.
    script.actors.push(ActorScript {
        sprite: SpriteSpec {
            texture_seed: COTRAIN_HAND_BASE,
            morph: Some(MorphSpec {
                to_texture_seed: COTRAIN_HAND_TARGET,
                start_frame: 0,
                end_frame: 0,
                from_phase: 0.5,
                to_phase: 0.5,
            }),
            ..SpriteSpec::hand_default(COTRAIN_HAND_BASE)
        },
        waypoints: vec![
            Waypoint {
                frame: 0,
                x: width as f32 * 0.8,
                y: height as f32 * 0.18,
            },
            Waypoint {
                frame: script.frames - 1,
                x: width as f32 * 0.8,
                y: height as f32 * 0.18,
            },
        ],
    });
    script
}
