//! Deterministic scripted scene rendering.
//!
//! The synthesizer choreographs hand pickups/putdowns and autonomous object
//! motions on a textured background, renders everything at whole-pixel
//! positions, and emits exact ground truth. Rendering is a pure function of
//! the script; the same script yields bit-identical frames.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::script::*;
use super::{FacePose, Frame, FrameSequence, GroundTruth, GtInteraction};
use crate::error::{Error, Result};
use crate::geom::{Point, Rect};

/// Frames the hand rests at the target between approach and retreat.
pub const HAND_DWELL: usize = 6;
/// Hand travel speed in pixels per frame.
pub const HAND_SPEED: f32 = 3.0;
/// Autonomous object travel speed in pixels per frame.
pub const AUTONOMOUS_SPEED: f32 = 2.5;

/// Resolved timing of one scripted interaction.
#[derive(Debug, Clone, Copy)]
pub struct PlannedInteraction {
    pub kind: InteractionKind,
    pub target: Point,
    /// Frame the sprite departs its rest position.
    pub depart: usize,
    /// First frame of contact at the target.
    pub contact: usize,
    /// First frame of the retreat (hand) or `contact` (autonomous).
    pub retreat: usize,
    /// Frame the sprite is back at rest.
    pub done: usize,
    /// Rest position the motion starts from.
    pub origin: Point,
}

/// The fully resolved choreography of a script.
#[derive(Debug, Clone)]
pub struct ScenePlan {
    pub hand_home: Option<Point>,
    pub interactions: Vec<PlannedInteraction>,
}

fn travel_frames(from: Point, to: Point, speed: f32) -> usize {
    (from.distance(to) / speed).ceil() as usize
}

fn sprite_rect_in_frame(center: Point, spec: &SpriteSpec, w: u32, h: u32) -> bool {
    let r = Rect::centered(center, spec.width, spec.height);
    r.x >= 0 && r.y >= 0 && r.right() <= w as i32 && r.bottom() <= h as i32
}

impl SceneScript {
    fn hand_spec(&self) -> SpriteSpec {
        self.hand.unwrap_or_else(|| SpriteSpec::hand_default(self.seed))
    }

    /// Resolve rest positions and timing for every interaction.
    pub fn plan(&self) -> Result<ScenePlan> {
        let hand_spec = self.hand_spec();
        let needs_hand = self
            .interactions
            .iter()
            .any(|i| i.kind != InteractionKind::Autonomous);

        let hand_home = if needs_hand {
            Some(self.pick_hand_home(&hand_spec)?)
        } else {
            None
        };

        let mut planned = Vec::new();
        let mut hand_busy_until = 0usize;
        let mut sorted: Vec<&InteractionScript> = self.interactions.iter().collect();
        sorted.sort_by_key(|i| i.start_frame);
        for it in sorted {
            if it.end_frame > self.frames || it.start_frame >= it.end_frame {
                return Err(Error::Script(format!(
                    "interaction window {}..{} outside sequence of {} frames",
                    it.start_frame, it.end_frame, self.frames
                )));
            }
            let target = it.target();
            let p = match it.kind {
                InteractionKind::Autonomous => {
                    let origin = self.autonomous_origin(it)?;
                    let travel = travel_frames(origin, target, AUTONOMOUS_SPEED);
                    let depart = it.start_frame;
                    let contact = depart + travel;
                    if contact > it.end_frame {
                        return Err(Error::Script(format!(
                            "autonomous window {}..{} too short for travel of {travel} frames",
                            it.start_frame, it.end_frame
                        )));
                    }
                    PlannedInteraction {
                        kind: it.kind,
                        target,
                        depart,
                        contact,
                        retreat: contact,
                        done: contact,
                        origin,
                    }
                }
                _ => {
                    let home = hand_home.expect("hand interactions imply a home");
                    let travel = travel_frames(home, target, HAND_SPEED);
                    let depart = it.start_frame.max(hand_busy_until);
                    let contact = depart + travel;
                    let retreat = contact + HAND_DWELL;
                    let done = retreat + travel;
                    if done > it.end_frame {
                        return Err(Error::Script(format!(
                            "interaction window {}..{} too short: needs {} frames of travel+dwell",
                            it.start_frame,
                            it.end_frame,
                            2 * travel + HAND_DWELL
                        )));
                    }
                    if depart > it.start_frame {
                        return Err(Error::Script(format!(
                            "hand interactions overlap near frame {}",
                            it.start_frame
                        )));
                    }
                    hand_busy_until = done + 1;
                    PlannedInteraction {
                        kind: it.kind,
                        target,
                        depart,
                        contact,
                        retreat,
                        done,
                        origin: home,
                    }
                }
            };
            planned.push(p);
        }
        Ok(ScenePlan {
            hand_home,
            interactions: planned,
        })
    }

    /// Rest position for the hand: the frame-corner staging point farthest
    /// from the scripted targets (so approaches cross several cells).
    fn pick_hand_home(&self, hand: &SpriteSpec) -> Result<Point> {
        let margin_x = (hand.width / 2 + 4) as f32;
        let margin_y = (hand.height / 2 + 4) as f32;
        let corners = [
            Point::new(margin_x, margin_y),
            Point::new(self.width as f32 - margin_x, margin_y),
            Point::new(margin_x, self.height as f32 - margin_y),
            Point::new(self.width as f32 - margin_x, self.height as f32 - margin_y),
        ];
        let targets: Vec<Point> = self
            .interactions
            .iter()
            .filter(|i| i.kind != InteractionKind::Autonomous)
            .map(|i| i.target())
            .collect();
        let best = corners
            .iter()
            .max_by(|a, b| {
                let da = targets.iter().map(|t| a.distance(*t)).fold(f32::MAX, f32::min);
                let db = targets.iter().map(|t| b.distance(*t)).fold(f32::MAX, f32::min);
                da.total_cmp(&db)
            })
            .copied()
            .expect("corner list non-empty");
        let min_dist = targets.iter().map(|t| best.distance(*t)).fold(f32::MAX, f32::min);
        // The approach must sweep enough cells that incoming motion at the
        // target originates from mobile cells.
        if min_dist < 2.5 * SCRIPT_CELL_SIZE as f32 {
            return Err(Error::Script(format!(
                "target too close to every staging corner ({min_dist:.0} px); \
                 enlarge the frame or move the target"
            )));
        }
        if !sprite_rect_in_frame(best, hand, self.width, self.height) {
            return Err(Error::Script("frame too small for the hand sprite".into()));
        }
        Ok(best)
    }

    /// Rest position for an autonomous object: offset from the target,
    /// pushed toward the frame center so the path stays in-frame.
    fn autonomous_origin(&self, it: &InteractionScript) -> Result<Point> {
        let target = it.target();
        let center = Point::new(self.width as f32 / 2.0, self.height as f32 / 2.0);
        let dir = Point::new(center.x - target.x, center.y - target.y)
            .normalized()
            .unwrap_or(Point::new(1.0, 0.0));
        let dist = 2.5 * SCRIPT_CELL_SIZE as f32;
        let origin = Point::new(target.x + dir.x * dist, target.y + dir.y * dist);
        let spec = SpriteSpec::object_default(self.seed ^ it.start_frame as u64);
        if !sprite_rect_in_frame(origin, &spec, self.width, self.height)
            || !sprite_rect_in_frame(target, &spec, self.width, self.height)
        {
            return Err(Error::Script(format!(
                "autonomous path at cell {:?} leaves the frame",
                it.cell
            )));
        }
        Ok(origin)
    }
}

/// A sprite texture: row-major intensities, possibly morphing over time.
struct Texture {
    w: usize,
    h: usize,
    from: Vec<f32>,
    to: Option<(Vec<f32>, MorphSpec)>,
}

impl Texture {
    fn synth(spec: &SpriteSpec) -> Texture {
        let from = blocky(spec.width, spec.height, spec.level, spec.contrast, spec.texture_seed);
        let to = spec.morph.map(|m| {
            (
                blocky(spec.width, spec.height, spec.level, spec.contrast, m.to_texture_seed),
                m,
            )
        });
        Texture {
            w: spec.width as usize,
            h: spec.height as usize,
            from,
            to,
        }
    }

    fn value(&self, x: usize, y: usize, frame: usize) -> f32 {
        let a = self.from[y * self.w + x];
        match &self.to {
            None => a,
            Some((to, m)) => {
                let t = if m.end_frame <= m.start_frame {
                    1.0 // degenerate window: the morph has completed
                } else if frame <= m.start_frame {
                    0.0
                } else if frame >= m.end_frame {
                    1.0
                } else {
                    (frame - m.start_frame) as f32 / (m.end_frame - m.start_frame) as f32
                };
                let phase = m.from_phase + (m.to_phase - m.from_phase) * t;
                a * (1.0 - phase) + to[y * self.w + x] * phase
            }
        }
    }
}

/// Random 3x3-pixel blocks around `level`; crisp internal edges give the
/// sprite a strong gradient signature.
fn blocky(w: u32, h: u32, level: f32, contrast: f32, seed: u64) -> Vec<f32> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bw = (w as usize + 2) / 3;
    let bh = (h as usize + 2) / 3;
    let blocks: Vec<f32> = (0..bw * bh)
        .map(|_| level + contrast * (rng.gen::<f32>() * 2.0 - 1.0))
        .collect();
    let mut out = Vec::with_capacity((w * h) as usize);
    for y in 0..h as usize {
        for x in 0..w as usize {
            out.push(blocks[(y / 3) * bw + x / 3].clamp(0.0, 1.0));
        }
    }
    out
}

/// Smooth value-noise background, bilinear over a random lattice.
struct BackgroundField {
    level: f32,
    contrast: f32,
    grain: usize,
    lattice: Vec<f32>,
    lw: usize,
}

impl BackgroundField {
    fn synth(spec: &BackgroundSpec, w: u32, h: u32, seed: u64) -> BackgroundField {
        match *spec {
            BackgroundSpec::Uniform { level } => BackgroundField {
                level,
                contrast: 0.0,
                grain: 1,
                lattice: vec![0.0],
                lw: 1,
            },
            BackgroundSpec::Textured { level, contrast, grain } => {
                let grain = grain.max(2) as usize;
                let lw = w as usize / grain + 2;
                let lh = h as usize / grain + 2;
                let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xbac4_67d9_13ef_55a1);
                let lattice = (0..lw * lh).map(|_| rng.gen::<f32>() * 2.0 - 1.0).collect();
                BackgroundField {
                    level,
                    contrast,
                    grain,
                    lattice,
                    lw,
                }
            }
        }
    }

    fn value(&self, x: usize, y: usize) -> f32 {
        if self.contrast == 0.0 {
            return self.level;
        }
        let fx = x as f32 / self.grain as f32;
        let fy = y as f32 / self.grain as f32;
        let x0 = fx as usize;
        let y0 = fy as usize;
        let tx = fx - x0 as f32;
        let ty = fy - y0 as f32;
        let at = |i: usize, j: usize| self.lattice[j * self.lw + i];
        let v = at(x0, y0) * (1.0 - tx) * (1.0 - ty)
            + at(x0 + 1, y0) * tx * (1.0 - ty)
            + at(x0, y0 + 1) * (1.0 - tx) * ty
            + at(x0 + 1, y0 + 1) * tx * ty;
        (self.level + self.contrast * v).clamp(0.0, 1.0)
    }
}

fn blit(frame: &mut Frame, tex: &Texture, center: Point, frame_idx: usize) {
    let cx = center.x.round() as i32;
    let cy = center.y.round() as i32;
    let x0 = cx - tex.w as i32 / 2;
    let y0 = cy - tex.h as i32 / 2;
    for ty in 0..tex.h {
        let y = y0 + ty as i32;
        if y < 0 || y >= frame.height() as i32 {
            continue;
        }
        for tx in 0..tex.w {
            let x = x0 + tx as i32;
            if x < 0 || x >= frame.width() as i32 {
                continue;
            }
            frame.set(x as usize, y as usize, tex.value(tx, ty, frame_idx));
        }
    }
}

/// Anti-aliased oriented wedge: a triangle pointing along `dir` plus a
/// bright dot near the tip; its HOG is strongly direction-informative.
fn draw_face(frame: &mut Frame, face: &FaceSpec, dir: Point) {
    let size = face.size as f32;
    let c = Point::new(face.x, face.y);
    let apex = c.add(dir.x * size * 0.42, dir.y * size * 0.42);
    let base = c.add(-dir.x * size * 0.28, -dir.y * size * 0.28);
    let perp = Point::new(-dir.y, dir.x);
    let b1 = base.add(perp.x * size * 0.30, perp.y * size * 0.30);
    let b2 = base.add(-perp.x * size * 0.30, -perp.y * size * 0.30);
    let dot = c.add(dir.x * size * 0.30, dir.y * size * 0.30);

    let half = (face.size / 2) as i32;
    let x0 = (face.x as i32 - half).max(0);
    let y0 = (face.y as i32 - half).max(0);
    let x1 = (face.x as i32 + half).min(frame.width() as i32 - 1);
    let y1 = (face.y as i32 + half).min(frame.height() as i32 - 1);

    let edge = |a: Point, b: Point, p: Point| (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x);
    for y in y0..=y1 {
        for x in x0..=x1 {
            // 2x2 supersampling keeps the wedge rotation-faithful.
            let mut cover = 0.0;
            for (sx, sy) in [(0.25, 0.25), (0.75, 0.25), (0.25, 0.75), (0.75, 0.75)] {
                let p = Point::new(x as f32 + sx, y as f32 + sy);
                let inside = edge(apex, b1, p) <= 0.0 && edge(b1, b2, p) <= 0.0 && edge(b2, apex, p) <= 0.0;
                if inside {
                    cover += 0.25;
                }
            }
            if cover > 0.0 {
                let bgv = frame.get(x as usize, y as usize);
                frame.set(x as usize, y as usize, bgv * (1.0 - cover) + 0.05 * cover);
            }
            let p = Point::new(x as f32 + 0.5, y as f32 + 0.5);
            let d = p.distance(dot);
            if d < 3.0 {
                let a = (3.0 - d).min(1.0);
                let bgv = frame.get(x as usize, y as usize);
                frame.set(x as usize, y as usize, bgv * (1.0 - a) + 0.95 * a);
            }
        }
    }
}

fn lerp(a: Point, b: Point, t: f32) -> Point {
    Point::new(a.x + (b.x - a.x) * t, a.y + (b.y - a.y) * t)
}

/// Position of a planned hand motion at `frame`, or its rest position.
fn hand_position(plan: &ScenePlan, frame: usize) -> Option<Point> {
    let home = plan.hand_home?;
    for p in &plan.interactions {
        if p.kind == InteractionKind::Autonomous {
            continue;
        }
        if frame < p.depart {
            continue;
        }
        if frame <= p.contact {
            let span = (p.contact - p.depart).max(1) as f32;
            return Some(lerp(p.origin, p.target, (frame - p.depart) as f32 / span));
        }
        if frame < p.retreat {
            return Some(p.target);
        }
        if frame <= p.done {
            let span = (p.done - p.retreat).max(1) as f32;
            return Some(lerp(p.target, p.origin, (frame - p.retreat) as f32 / span));
        }
    }
    Some(home)
}

fn autonomous_position(p: &PlannedInteraction, frame: usize) -> Point {
    if frame < p.depart {
        p.origin
    } else if frame <= p.contact {
        let span = (p.contact - p.depart).max(1) as f32;
        lerp(p.origin, p.target, (frame - p.depart) as f32 / span)
    } else {
        p.target
    }
}

/// Gaze direction schedule: the face looks at the target of the upcoming
/// (or ongoing) hand interaction.
fn gaze_direction(plan: &ScenePlan, face: Point, frame: usize) -> Point {
    let mut current: Option<&PlannedInteraction> = None;
    for p in plan.interactions.iter().filter(|p| p.kind != InteractionKind::Autonomous) {
        if frame <= p.done {
            current = Some(p);
            break;
        }
        current = Some(p);
    }
    match current {
        Some(p) => Point::new(p.target.x - face.x, p.target.y - face.y)
            .normalized()
            .unwrap_or(Point::new(1.0, 0.0)),
        None => Point::new(1.0, 0.0),
    }
}

/// Render a script into frames plus exact ground truth.
pub fn synthesize_scene(script: &SceneScript) -> Result<(FrameSequence, GroundTruth)> {
    let plan = script.plan()?;
    let bg = BackgroundField::synth(&script.background, script.width, script.height, script.seed);
    let hand_spec = script.hand_spec();
    let hand_tex = Texture::synth(&hand_spec);

    // One object sprite per hand interaction, one per autonomous move.
    let object_texs: Vec<(SpriteSpec, Texture)> = plan
        .interactions
        .iter()
        .enumerate()
        .map(|(i, _)| {
            let spec = SpriteSpec::object_default(script.seed.wrapping_add(i as u64 * 1315));
            let tex = Texture::synth(&spec);
            (spec, tex)
        })
        .collect();

    let actor_texs: Vec<Texture> = script.actors.iter().map(|a| Texture::synth(&a.sprite)).collect();
    for actor in &script.actors {
        if actor.waypoints.is_empty() {
            return Err(Error::Script("actor without waypoints".into()));
        }
        for wp in &actor.waypoints {
            if !sprite_rect_in_frame(Point::new(wp.x, wp.y), &actor.sprite, script.width, script.height) {
                return Err(Error::Script("actor trajectory leaves the frame".into()));
            }
        }
    }

    let mut frames = Vec::with_capacity(script.frames);
    let mut gt = GroundTruth {
        actor_centers: vec![Vec::with_capacity(script.frames); script.actors.len()],
        ..Default::default()
    };

    for p in &plan.interactions {
        gt.interactions.push(GtInteraction {
            kind: p.kind,
            frame: p.contact,
            point: p.target,
        });
    }

    for f in 0..script.frames {
        let drift = script.light_drift * f as f32;
        let mut frame = Frame::from_fn(script.width as usize, script.height as usize, f, |x, y| {
            bg.value(x, y) + drift
        });

        // Autonomous objects and placed/carried interaction objects.
        let hand_pos = hand_position(&plan, f);
        for (i, p) in plan.interactions.iter().enumerate() {
            let (_, tex) = &object_texs[i];
            match p.kind {
                InteractionKind::Autonomous => {
                    blit(&mut frame, tex, autonomous_position(p, f), f);
                }
                InteractionKind::Pickup => {
                    if f < p.retreat {
                        blit(&mut frame, tex, p.target, f);
                    } else if let Some(hp) = hand_pos {
                        // Carried by the hand from the retreat on; a sudden
                        // disappearance would inject spurious motion.
                        blit(&mut frame, tex, hp.add(5.0, 5.0), f);
                    }
                }
                InteractionKind::Putdown => {
                    if f >= p.depart && f < p.contact {
                        if let Some(hp) = hand_pos {
                            blit(&mut frame, tex, hp.add(5.0, 5.0), f);
                        }
                    } else if f >= p.contact {
                        blit(&mut frame, tex, p.target, f);
                    }
                }
            }
        }

        // Scripted actors.
        for (ai, actor) in script.actors.iter().enumerate() {
            let pos = actor_position(actor, f);
            gt.actor_centers[ai].push(pos);
            if let Some(pos) = pos {
                blit(&mut frame, &actor_texs[ai], pos, f);
            }
        }

        // The hand is drawn last so it occludes carried objects.
        if let Some(hp) = hand_pos {
            blit(&mut frame, &hand_tex, hp, f);
        }
        gt.hand_centers.push(hand_pos);

        if let Some(face) = &script.face {
            let center = Point::new(face.x, face.y);
            let dir = gaze_direction(&plan, center, f);
            draw_face(&mut frame, face, dir);
            gt.faces.push(Some(FacePose { center, direction: dir }));
        } else {
            gt.faces.push(None);
        }

        if script.noise_sigma > 0.0 {
            let mut rng =
                ChaCha8Rng::seed_from_u64(script.seed ^ (f as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
            let sigma = script.noise_sigma;
            for y in 0..frame.height() {
                for x in 0..frame.width() {
                    // Box-Muller keeps us off extra dependencies.
                    let u1: f32 = rng.gen::<f32>().max(1e-12);
                    let u2: f32 = rng.gen();
                    let z = (-2.0 * u1.ln()).sqrt() * (2.0 * std::f32::consts::PI * u2).cos();
                    let v = frame.get(x, y) + sigma * z;
                    frame.set(x, y, v);
                }
            }
        }

        frames.push(frame);
    }

    Ok((FrameSequence::new(frames, script.fps)?, gt))
}

fn actor_position(actor: &ActorScript, frame: usize) -> Option<Point> {
    let wps = &actor.waypoints;
    let first = wps.first()?;
    let last = wps.last()?;
    if frame < first.frame || frame > last.frame {
        return None;
    }
    for pair in wps.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        if frame >= a.frame && frame <= b.frame {
            let span = (b.frame - a.frame).max(1) as f32;
            let t = (frame - a.frame) as f32 / span;
            return Some(lerp(Point::new(a.x, a.y), Point::new(b.x, b.y), t));
        }
    }
    Some(Point::new(last.x, last.y))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn empty_script() -> SceneScript {
        SceneScript {
            width: 120,
            height: 90,
            frames: 10,
            fps: 25,
            background: BackgroundSpec::Uniform { level: 0.5 },
            actors: vec![],
            interactions: vec![],
            hand: None,
            face: None,
            noise_sigma: 0.0,
            light_drift: 0.0,
            seed: 1,
        }
    }

    #[test]
    fn empty_script_is_static() {
        let (seq, gt) = synthesize_scene(&empty_script()).unwrap();
        assert_eq!(seq.len(), 10);
        assert!(gt.interactions.is_empty());
        for f in &seq.frames {
            assert_eq!(f.pixels(), seq.frames[0].pixels());
        }
    }

    #[test]
    fn same_seed_is_bit_identical() {
        let mut script = empty_script();
        script.noise_sigma = 0.01;
        script.interactions.push(InteractionScript {
            kind: InteractionKind::Autonomous,
            cell: (3, 1),
            start_frame: 2,
            end_frame: 40,
        });
        script.frames = 45;
        let (a, _) = synthesize_scene(&script).unwrap();
        let (b, _) = synthesize_scene(&script).unwrap();
        for (fa, fb) in a.frames.iter().zip(&b.frames) {
            assert_eq!(fa.pixels(), fb.pixels());
        }
    }

    #[test]
    fn pickup_removes_object_from_region() {
        let script = SceneScript {
            width: 240,
            height: 180,
            frames: 140,
            interactions: vec![InteractionScript {
                kind: InteractionKind::Pickup,
                cell: (4, 3),
                start_frame: 15,
                end_frame: 135,
            }],
            ..empty_script_240()
        };
        let (seq, gt) = synthesize_scene(&script).unwrap();
        assert_eq!(gt.interactions.len(), 1);
        let it = gt.interactions[0];
        let region = Rect::centered(it.point, 30, 30);

        // Before any hand arrives vs. well after the retreat: the object's
        // disappearance must exceed the mover change threshold.
        let before = seq.frames[5].region(region);
        let plan = script.plan().unwrap();
        let after_frame = (plan.interactions[0].done + 12).min(seq.len() - 1);
        let after = seq.frames[after_frame].region(region);
        let big_diffs = before
            .iter()
            .zip(&after)
            .filter(|(a, b)| (*a - *b).abs() >= 0.1)
            .count();
        assert!(big_diffs >= 5, "only {big_diffs} pixels changed by >= 0.1");

        // One frame before contact the object is still in place.
        let pre_contact = seq.frames[it.frame - 1].region(region);
        let still_there = pre_contact
            .iter()
            .zip(&after)
            .filter(|(a, b)| (*a - *b).abs() >= 0.1)
            .count();
        assert!(still_there >= 5);
        assert_eq!(it.kind, InteractionKind::Pickup);
    }

    fn empty_script_240() -> SceneScript {
        SceneScript {
            width: 240,
            height: 180,
            frames: 140,
            fps: 25,
            background: BackgroundSpec::default(),
            actors: vec![],
            interactions: vec![],
            hand: None,
            face: None,
            noise_sigma: 0.0,
            light_drift: 0.0,
            seed: 11,
        }
    }

    #[test]
    fn infeasible_trajectory_is_script_error() {
        let mut script = empty_script();
        // 120x90 frame: every corner is < 2.5 cells from cell (1,1).
        script.interactions.push(InteractionScript {
            kind: InteractionKind::Pickup,
            cell: (1, 1),
            start_frame: 5,
            end_frame: 9,
        });
        assert!(matches!(synthesize_scene(&script), Err(Error::Script(_))));
    }

    #[test]
    fn face_points_at_target() {
        let mut script = empty_script_240();
        script.frames = 220;
        script.face = Some(FaceSpec {
            x: 50.0,
            y: 40.0,
            size: 40,
        });
        script.interactions.push(InteractionScript {
            kind: InteractionKind::Pickup,
            cell: (5, 4),
            start_frame: 15,
            end_frame: 215,
        });
        let (_, gt) = synthesize_scene(&script).unwrap();
        let pose = gt.faces[20].unwrap();
        let expect = Point::new(165.0 - 50.0, 135.0 - 40.0).normalized().unwrap();
        assert!((pose.direction.x - expect.x).abs() < 1e-5);
        assert!((pose.direction.y - expect.y).abs() < 1e-5);
    }
}
