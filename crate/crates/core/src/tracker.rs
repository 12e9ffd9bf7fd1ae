//! Descriptor-voting tracker.
//!
//! Each detection is extended into a short track: descriptors taken at
//! edge points inside a 30x30 patch are matched to descriptors at every
//! pixel of a 90x90 search region in the next frame; surviving matches,
//! weighted by optical flow magnitude, vote for the new center through
//! their stored offsets. Tracks harvest a patch per frame for training.

use crate::error::{Error, Result};
use crate::features::{edges, sift_like_from_gradients, GradientField};
use crate::flow::{dense_flow_with, FlowParams};
use crate::frameio::{Frame, FrameSequence};
use crate::geom::{Point, Rect};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TerminationReason {
    MaxLen,
    Stationary,
    Merged,
}

#[derive(Debug, Clone)]
pub struct Track {
    pub id: u64,
    pub start_frame: usize,
    /// Center per frame, starting at `start_frame`.
    pub centers: Vec<Point>,
    /// 30x30 patch per frame.
    pub patches: Vec<Frame>,
    /// 90x90 context patch per frame when harvested.
    pub context_patches: Vec<Frame>,
    pub terminated: TerminationReason,
}

impl Track {
    pub fn end_frame(&self) -> usize {
        self.start_frame + self.centers.len().saturating_sub(1)
    }

    pub fn center_at(&self, frame: usize) -> Option<Point> {
        frame
            .checked_sub(self.start_frame)
            .and_then(|i| self.centers.get(i).copied())
    }

    /// Net displacement of the track start to end.
    pub fn net_displacement(&self) -> f32 {
        match (self.centers.first(), self.centers.last()) {
            (Some(a), Some(b)) => a.distance(*b),
            _ => 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct TrackerParams {
    /// Side of the tracked object patch.
    pub patch_size: u32,
    /// Side of the next-frame search region.
    pub search_size: u32,
    /// Descriptor grid spacing inside the patch.
    pub grid_step: usize,
    /// Hard cap on track length in frames.
    pub max_frames: usize,
    /// Matches moving farther than this are discarded.
    pub max_displacement: f32,
    /// Tracks whose centers come this close on a shared frame merge.
    pub merge_radius: f32,
    /// Net displacement below this over `stationary_window` frames
    /// terminates the track.
    pub stationary_displacement: f32,
    pub stationary_window: usize,
    /// Patch size of the SIFT-like descriptors.
    pub descriptor_patch: u32,
    /// Harvest 90x90 context patches alongside the 30x30 ones.
    pub harvest_context: bool,
}

impl Default for TrackerParams {
    fn default() -> Self {
        TrackerParams {
            patch_size: 30,
            search_size: 90,
            grid_step: 5,
            max_frames: 50,
            max_displacement: 30.0,
            merge_radius: 15.0,
            stationary_displacement: 2.0,
            stationary_window: 25,
            descriptor_patch: 16,
            harvest_context: true,
        }
    }
}

/// Track forward from `start_center` at `start_frame`.
pub fn track(
    seq: &FrameSequence,
    start_frame: usize,
    start_center: Point,
    id: u64,
    params: &TrackerParams,
    flow_params: &FlowParams,
) -> Result<Track> {
    if start_frame >= seq.len() {
        return Err(Error::Param(format!(
            "track start frame {start_frame} beyond sequence of {}",
            seq.len()
        )));
    }
    let w = seq.width();
    let h = seq.height();
    let margin = (params.patch_size / 2) as f32;
    let clamp_center = |c: Point| -> Point {
        Point::new(
            c.x.clamp(margin, w as f32 - 1.0 - margin),
            c.y.clamp(margin, h as f32 - 1.0 - margin),
        )
    };

    let mut centers = vec![clamp_center(start_center)];
    let mut reason = TerminationReason::MaxLen;

    while centers.len() < params.max_frames {
        let f = start_frame + centers.len() - 1;
        if f + 1 >= seq.len() {
            break;
        }
        let current = *centers.last().unwrap();
        match step_vote(seq, f, current, params, flow_params)? {
            Some(next) => centers.push(clamp_center(next)),
            None => {
                reason = TerminationReason::Stationary;
                break;
            }
        }
        // "Stops moving for a second": near-zero net displacement over the
        // trailing window.
        if centers.len() > params.stationary_window {
            let prev = centers[centers.len() - 1 - params.stationary_window];
            if centers.last().unwrap().distance(prev) < params.stationary_displacement {
                reason = TerminationReason::Stationary;
                break;
            }
        }
    }

    let mut patches = Vec::with_capacity(centers.len());
    let mut context_patches = Vec::new();
    for (i, c) in centers.iter().enumerate() {
        let frame = &seq.frames[start_frame + i];
        patches.push(
            frame
                .patch(*c, params.patch_size, params.patch_size)
                .expect("patch smaller than frame"),
        );
        if params.harvest_context {
            if let Some(p) = frame.patch(*c, params.search_size, params.search_size) {
                context_patches.push(p);
            }
        }
    }

    Ok(Track {
        id,
        start_frame,
        centers,
        patches,
        context_patches,
        terminated: reason,
    })
}

/// One tracking step: descriptor matching plus offset voting. `None` means
/// no valid matches survived.
fn step_vote(
    seq: &FrameSequence,
    frame_idx: usize,
    center: Point,
    params: &TrackerParams,
    flow_params: &FlowParams,
) -> Result<Option<Point>> {
    let cur = &seq.frames[frame_idx];
    let next = &seq.frames[frame_idx + 1];
    let w = cur.width() as i32;
    let h = cur.height() as i32;

    // Descriptor anchors: edge points sampled at grid resolution inside
    // the object patch — each grid point anchors to the nearest Canny
    // edge pixel within its grid cell, if any.
    let edge_map = edges(cur);
    let patch = Rect::centered(center, params.patch_size, params.patch_size);
    let mut anchors = Vec::new();
    let step = params.grid_step as i32;
    let half = step / 2;
    let mut gy = patch.y.max(0);
    while gy < patch.bottom().min(h) {
        let mut gx = patch.x.max(0);
        while gx < patch.right().min(w) {
            if gx % step == 0 && gy % step == 0 {
                let mut best: Option<(i32, i32, i32)> = None;
                for dy in -half..=half {
                    for dx in -half..=half {
                        let (x, y) = (gx + dx, gy + dy);
                        if x < 0 || y < 0 || x >= w || y >= h {
                            continue;
                        }
                        if edge_map.at(x as usize, y as usize) {
                            let d2 = dx * dx + dy * dy;
                            if best.map_or(true, |(bd, _, _)| d2 < bd) {
                                best = Some((d2, x, y));
                            }
                        }
                    }
                }
                if let Some((_, x, y)) = best {
                    anchors.push((x, y));
                }
                gx += step;
            } else {
                gx += 1;
            }
        }
        if gy % step == 0 {
            gy += step;
        } else {
            gy += 1;
        }
    }
    if anchors.is_empty() {
        return Ok(None);
    }

    let cur_grads = GradientField::new(cur);
    let next_grads = GradientField::new(next);
    let flow = dense_flow_with(cur, next, flow_params)?;

    let search = Rect::centered(center, params.search_size, params.search_size)
        .intersect(&Rect::new(0, 0, w as u32, h as u32))
        .ok_or_else(|| Error::DegenerateRegion("search region outside frame".into()))?;

    // Descriptors at every pixel of the search region in the next frame.
    let sw = search.w as usize;
    let sh = search.h as usize;
    let mut region_descs: Vec<Vec<f32>> = Vec::with_capacity(sw * sh);
    for y in 0..sh {
        for x in 0..sw {
            let p = Point::new((search.x + x as i32) as f32, (search.y + y as i32) as f32);
            region_descs.push(sift_like_from_gradients(&next_grads, p, params.descriptor_patch).values);
        }
    }

    // Vote grid over displacement space: new center = old center + match
    // displacement, which stays within +-max_displacement.
    let vote_r = params.max_displacement as i32;
    let vw = (2 * vote_r + 1) as usize;
    let mut votes = vec![0.0f32; vw * vw];
    let mut any = false;

    for &(ax, ay) in &anchors {
        let desc = sift_like_from_gradients(&cur_grads, Point::new(ax as f32, ay as f32), params.descriptor_patch);
        // Nearest descriptor in the search region by L2 (squared, early
        // bail once the partial sum exceeds the best).
        let mut best = f32::MAX;
        let mut best_pos = (0usize, 0usize);
        for y in 0..sh {
            for x in 0..sw {
                let cand = &region_descs[y * sw + x];
                let mut sum = 0.0f32;
                for (a, b) in desc.values.iter().zip(cand) {
                    let d = a - b;
                    sum += d * d;
                    if sum >= best {
                        break;
                    }
                }
                if sum < best {
                    best = sum;
                    best_pos = (x, y);
                }
            }
        }
        let mx = search.x + best_pos.0 as i32;
        let my = search.y + best_pos.1 as i32;
        let dx = mx - ax;
        let dy = my - ay;
        if (dx == 0 && dy == 0) || ((dx * dx + dy * dy) as f32).sqrt() > params.max_displacement {
            continue; // did not move, or moved too far
        }
        let weight = flow.magnitude(ax as usize, ay as usize);
        if weight <= 0.0 {
            continue;
        }
        let vx = dx + vote_r;
        let vy = dy + vote_r;
        if vx >= 0 && vy >= 0 && (vx as usize) < vw && (vy as usize) < vw {
            votes[vy as usize * vw + vx as usize] += weight;
            any = true;
        }
    }
    if !any {
        return Ok(None);
    }

    // 3x3 box blur then argmax (ties resolve to the first index).
    let blurred: Vec<f32> = (0..vw * vw)
        .map(|i| {
            let (x, y) = ((i % vw) as i32, (i / vw) as i32);
            let mut sum = 0.0;
            for dy in -1i32..=1 {
                for dx in -1i32..=1 {
                    let nx = x + dx;
                    let ny = y + dy;
                    if nx >= 0 && ny >= 0 && nx < vw as i32 && ny < vw as i32 {
                        sum += votes[ny as usize * vw + nx as usize];
                    }
                }
            }
            sum
        })
        .collect();
    let best = blurred
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1).then(b.0.cmp(&a.0)))
        .map(|(i, _)| i)
        .unwrap();
    let dx = (best % vw) as i32 - vote_r;
    let dy = (best / vw) as i32 - vote_r;
    Ok(Some(Point::new(center.x + dx as f32, center.y + dy as f32)))
}

/// Merge tracks whose centers come within the merge radius on a shared
/// frame. On overlap the older track's centers win. Runs to fixpoint, so
/// it is idempotent.
pub fn merge_tracks(mut tracks: Vec<Track>, params: &TrackerParams) -> Vec<Track> {
    loop {
        let mut merged_any = false;
        'outer: for i in 0..tracks.len() {
            for j in i + 1..tracks.len() {
                if tracks_intersect(&tracks[i], &tracks[j], params.merge_radius) {
                    let b = tracks.remove(j);
                    let a = tracks.remove(i);
                    tracks.push(merge_pair(a, b));
                    merged_any = true;
                    break 'outer;
                }
            }
        }
        if !merged_any {
            break;
        }
    }
    tracks.sort_by_key(|t| (t.start_frame, t.id));
    tracks
}

fn tracks_intersect(a: &Track, b: &Track, radius: f32) -> bool {
    let lo = a.start_frame.max(b.start_frame);
    let hi = a.end_frame().min(b.end_frame());
    (lo..=hi).any(|f| match (a.center_at(f), b.center_at(f)) {
        (Some(ca), Some(cb)) => ca.distance(cb) <= radius,
        _ => false,
    })
}

fn merge_pair(a: Track, b: Track) -> Track {
    // The older track (or lower id) dominates overlapping frames.
    let (old, new) = if (a.start_frame, a.id) <= (b.start_frame, b.id) {
        (a, b)
    } else {
        (b, a)
    };
    let start = old.start_frame.min(new.start_frame);
    let end = old.end_frame().max(new.end_frame());
    let mut centers = Vec::with_capacity(end - start + 1);
    let mut patches = Vec::with_capacity(end - start + 1);
    let mut context_patches = Vec::new();
    for f in start..=end {
        let (src, idx) = if old.center_at(f).is_some() {
            (&old, f - old.start_frame)
        } else {
            (&new, f - new.start_frame)
        };
        centers.push(src.centers[idx]);
        patches.push(src.patches[idx].clone());
        if let Some(p) = src.context_patches.get(idx) {
            context_patches.push(p.clone());
        }
    }
    let reason = if old.end_frame() >= new.end_frame() {
        old.terminated
    } else {
        new.terminated
    };
    Track {
        id: old.id,
        start_frame: start,
        centers,
        patches,
        context_patches,
        terminated: reason,
    }
}

/// Post-filter on mover events: track each detection from its offset
/// frame (the mover's last moving moment there) and drop events whose
/// track barely moves — an object that merely started or stopped moving
/// is not a mover.
pub fn filter_moving_events(
    seq: &FrameSequence,
    events: &[crate::mover::MoverEvent],
    min_net_displacement: f32,
    params: &TrackerParams,
    flow_params: &FlowParams,
) -> Result<(Vec<crate::mover::MoverEvent>, Vec<Track>)> {
    let mut kept = Vec::new();
    let mut tracks = Vec::new();
    for (i, e) in events.iter().enumerate() {
        let t = track(seq, e.offset_frame, e.center, i as u64, params, flow_params)?;
        if t.net_displacement() >= min_net_displacement {
            kept.push(*e);
            tracks.push(t);
        }
    }
    Ok((kept, tracks))
}

/// Tracks as CSV: `track_id,frame,x,y`.
pub fn tracks_to_csv(tracks: &[Track]) -> String {
    use std::fmt::Write as _;
    let mut out = String::from("track_id,frame,x,y\n");
    for t in tracks {
        for (i, c) in t.centers.iter().enumerate() {
            let _ = writeln!(out, "{},{},{:.2},{:.2}", t.id, t.start_frame + i, c.x, c.y);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn make_track(id: u64, start: usize, pts: &[(f32, f32)]) -> Track {
        Track {
            id,
            start_frame: start,
            centers: pts.iter().map(|&(x, y)| Point::new(x, y)).collect(),
            patches: pts.iter().map(|_| Frame::new(4, 4, 0)).collect(),
            context_patches: vec![],
            terminated: TerminationReason::MaxLen,
        }
    }

    #[test]
    fn disjoint_tracks_unchanged() {
        let tracks = vec![
            make_track(0, 0, &[(10.0, 10.0), (12.0, 10.0)]),
            make_track(1, 0, &[(200.0, 200.0), (202.0, 200.0)]),
        ];
        let merged = merge_tracks(tracks, &TrackerParams::default());
        assert_eq!(merged.len(), 2);
    }

    #[test]
    fn overlapping_tracks_merge_and_idempotent() {
        let tracks = vec![
            make_track(0, 0, &[(10.0, 10.0), (13.0, 10.0), (16.0, 10.0), (19.0, 10.0)]),
            make_track(1, 2, &[(17.0, 10.0), (20.0, 10.0), (23.0, 10.0)]),
        ];
        let merged = merge_tracks(tracks, &TrackerParams::default());
        assert_eq!(merged.len(), 1);
        let t = &merged[0];
        assert_eq!(t.start_frame, 0);
        assert_eq!(t.centers.len(), 5);
        // Overlap keeps the older track's centers.
        assert_eq!(t.centers[2], Point::new(16.0, 10.0));
        assert_eq!(t.centers[3], Point::new(19.0, 10.0));
        assert_eq!(t.centers[4], Point::new(23.0, 10.0));

        let again = merge_tracks(merged.clone(), &TrackerParams::default());
        assert_eq!(again.len(), merged.len());
        assert_eq!(again[0].centers, merged[0].centers);
    }

    #[test]
    fn continuity_bound_holds_by_construction() {
        let t = make_track(0, 0, &[(10.0, 10.0), (30.0, 10.0)]);
        for w in t.centers.windows(2) {
            assert!(w[0].distance(w[1]) <= 30.0 + 1e-6);
        }
    }
}
