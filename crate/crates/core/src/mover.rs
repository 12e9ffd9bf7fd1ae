//! The grid-of-cells 'mover' event detector.
//!
//! Each frame is divided into 30x30-pixel cells. Every cell keeps a short
//! term background (exponential moving average, reset on change) used to
//! detect that the cell is changing, and a long term background (frozen
//! while unstable) whose gradient magnitudes decide whether an interaction
//! actually altered the cell. A five-state machine per cell turns the
//! change/motion observations into 'mover' events: an object entered the
//! cell, left it, and the settled appearance differs from what was there
//! before.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::flow::{cell_transfer_with, dense_flow_with, CellTransfer, FlowField, FlowParams};
use crate::frameio::{Frame, FrameSequence};
use crate::geom::{Point, Rect};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CellState {
    Rejected,
    Stable,
    StartChanging,
    Incoming,
    Outgoing,
}

impl CellState {
    pub fn as_str(&self) -> &'static str {
        match self {
            CellState::Rejected => "rejected",
            CellState::Stable => "stable",
            CellState::StartChanging => "start_changing",
            CellState::Incoming => "incoming",
            CellState::Outgoing => "outgoing",
        }
    }
}

/// Detector tunables. Pixel thresholds are absolute counts, as in the
/// qualitative description they implement.
#[derive(Debug, Clone, Copy)]
pub struct MoverParams {
    /// Cell side in pixels.
    pub cell_size: usize,
    /// EMA rate of the short term background.
    pub ema_alpha: f32,
    /// Intensity difference that makes a pixel count as differing.
    pub change_threshold: f32,
    /// Differing pixels needed to call a cell changed.
    pub change_pixel_count: usize,
    /// Moving pixels needed for incoming/outgoing motion.
    pub motion_pixel_count: usize,
    /// Frames after first incoming motion before a cell counts as mobile.
    pub mobile_age: usize,
    /// Allowed frames in start_changing without incoming motion.
    pub w_start_changing: usize,
    /// Max frames since leaving stable before an outgoing cell is rejected.
    pub w_total: usize,
    /// Max frames since the last outgoing motion before returning to
    /// incoming.
    pub w_out: usize,
    /// Consecutive unchanged frames that make a cell stable.
    pub s_stable: usize,
    /// Fraction of 3x3-area pixels moving that suppresses a detection.
    pub large_motion_fraction: f32,
    /// Flow magnitude at which a pixel counts toward large-scale motion.
    pub large_motion_magnitude: f32,
    /// Flow magnitude for lock-on moving-object masks (and cell transfer).
    pub moving_pixel_threshold: f32,
    /// Record state transitions for instrumentation.
    pub record_transitions: bool,
}

impl Default for MoverParams {
    fn default() -> Self {
        MoverParams {
            cell_size: 30,
            ema_alpha: 0.05,
            change_threshold: 0.1,
            change_pixel_count: 5,
            motion_pixel_count: 5,
            mobile_age: 3,
            w_start_changing: 5,
            w_total: 75,
            w_out: 12,
            s_stable: 10,
            large_motion_fraction: 0.5,
            large_motion_magnitude: 0.2,
            moving_pixel_threshold: 1.0,
            record_transitions: false,
        }
    }
}

/// A detected spatiotemporal 'mover' event.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MoverEvent {
    /// Frame of detection (the cell re-stabilized here).
    pub frame: usize,
    /// Grid coordinates of the triggering cell.
    pub cell: (usize, usize),
    /// Locked center of mass of the moving object, or the cell center.
    pub center: Point,
    /// First incoming-motion frame of the episode.
    pub onset_frame: usize,
    /// Last outgoing-motion frame of the episode.
    pub offset_frame: usize,
}

/// Per-cell bookkeeping.
#[derive(Debug, Clone)]
pub struct CellRecord {
    pub state: CellState,
    short_bg: Vec<f32>,
    long_bg: Vec<f32>,
    pub last_incoming_frame: Option<usize>,
    /// First incoming motion since the cell last stabilized; drives the
    /// mobile flag.
    pub first_incoming_frame: Option<usize>,
    pub left_stable_frame: Option<usize>,
    pub last_outgoing_frame: Option<usize>,
    pub mobile: bool,
    unchanged_run: usize,
    w: usize,
    h: usize,
}

impl CellRecord {
    fn new(region: &[f32], w: usize, h: usize) -> CellRecord {
        CellRecord {
            state: CellState::Rejected,
            short_bg: region.to_vec(),
            long_bg: region.to_vec(),
            last_incoming_frame: None,
            first_incoming_frame: None,
            left_stable_frame: None,
            last_outgoing_frame: None,
            mobile: false,
            unchanged_run: 0,
            w,
            h,
        }
    }

    /// Count of pixels differing from the short term background by at
    /// least the change threshold reaches the pixel count.
    pub fn is_changed(&self, region: &[f32], params: &MoverParams) -> bool {
        debug_assert_eq!(region.len(), self.short_bg.len());
        let mut count = 0;
        for (r, b) in region.iter().zip(&self.short_bg) {
            if (r - b).abs() >= params.change_threshold {
                count += 1;
                if count >= params.change_pixel_count {
                    return true;
                }
            }
        }
        false
    }

    /// Same test on gradient magnitudes against the long term background;
    /// gradients make the comparison insensitive to lighting changes.
    pub fn differs_long_term(&self, region: &[f32], params: &MoverParams) -> bool {
        let region_grad = grad_mag(region, self.w, self.h);
        let long_grad = grad_mag(&self.long_bg, self.w, self.h);
        let mut count = 0;
        for (r, b) in region_grad.iter().zip(&long_grad) {
            if (r - b).abs() >= params.change_threshold {
                count += 1;
                if count >= params.change_pixel_count {
                    return true;
                }
            }
        }
        false
    }

    /// Short term EMA (reset on change); long term only while stable and
    /// settled. Standalone form of the per-step update: tracks the quiet
    /// run from the change test alone.
    pub fn update_backgrounds(&mut self, region: &[f32], params: &MoverParams) {
        let changed = self.is_changed(region, params);
        if changed {
            self.unchanged_run = 0;
        } else {
            self.unchanged_run += 1;
        }
        self.apply_background_update(region, changed, params);
    }

    fn apply_background_update(&mut self, region: &[f32], changed: bool, params: &MoverParams) {
        if changed {
            self.short_bg.copy_from_slice(region);
        } else {
            let a = params.ema_alpha;
            for (b, r) in self.short_bg.iter_mut().zip(region) {
                *b = a * r + (1.0 - a) * *b;
            }
        }
        // The long term background stores the settled appearance: update
        // only while stable, currently quiet, and with not even a single
        // pixel differing — a slowly encroaching object must never leak
        // into the long-term memory (the 5-pixel change test can miss a
        // 1-4 pixel corner).
        if self.state == CellState::Stable && self.unchanged_run >= params.s_stable {
            let spotless = region
                .iter()
                .zip(&self.short_bg)
                .all(|(r, b)| (r - b).abs() < params.change_threshold);
            if spotless {
                self.long_bg.copy_from_slice(region);
            }
        }
    }

    pub fn short_bg(&self) -> &[f32] {
        &self.short_bg
    }

    pub fn long_bg(&self) -> &[f32] {
        &self.long_bg
    }
}

/// Sobel gradient magnitude of a region (border-clamped), scaled into
/// intensity units.
fn grad_mag(region: &[f32], w: usize, h: usize) -> Vec<f32> {
    let at = |x: i32, y: i32| -> f32 {
        let x = x.clamp(0, w as i32 - 1) as usize;
        let y = y.clamp(0, h as i32 - 1) as usize;
        region[y * w + x]
    };
    let mut out = vec![0.0f32; w * h];
    for y in 0..h as i32 {
        for x in 0..w as i32 {
            let gx = at(x + 1, y - 1) + 2.0 * at(x + 1, y) + at(x + 1, y + 1)
                - at(x - 1, y - 1)
                - 2.0 * at(x - 1, y)
                - at(x - 1, y + 1);
            let gy = at(x - 1, y + 1) + 2.0 * at(x, y + 1) + at(x + 1, y + 1)
                - at(x - 1, y - 1)
                - 2.0 * at(x, y - 1)
                - at(x + 1, y - 1);
            out[(y as usize) * w + x as usize] = (gx * gx + gy * gy).sqrt() / 4.0;
        }
    }
    out
}

/// One observed state transition, for instrumentation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TransitionRecord {
    pub frame: usize,
    pub cell: (usize, usize),
    pub from: CellState,
    pub to: CellState,
}

/// The full detector state over a frame grid.
#[derive(Debug, Clone)]
pub struct GridState {
    pub params: MoverParams,
    width: usize,
    height: usize,
    cells_x: usize,
    cells_y: usize,
    cells: Vec<CellRecord>,
    cursor: usize,
    pub transitions: Vec<TransitionRecord>,
}

impl GridState {
    /// Seed backgrounds from the first frame; all cells start rejected.
    pub fn init(first: &Frame, params: MoverParams) -> GridState {
        let cells_x = first.width().div_ceil(params.cell_size);
        let cells_y = first.height().div_ceil(params.cell_size);
        let mut cells = Vec::with_capacity(cells_x * cells_y);
        for cy in 0..cells_y {
            for cx in 0..cells_x {
                let rect = cell_rect_raw(cx, cy, params.cell_size, first.width(), first.height());
                let region = first.region(rect);
                cells.push(CellRecord::new(&region, rect.w as usize, rect.h as usize));
            }
        }
        GridState {
            params,
            width: first.width(),
            height: first.height(),
            cells_x,
            cells_y,
            cells,
            cursor: first.index,
            transitions: Vec::new(),
        }
    }

    pub fn cells_x(&self) -> usize {
        self.cells_x
    }

    pub fn cells_y(&self) -> usize {
        self.cells_y
    }

    pub fn cell(&self, cx: usize, cy: usize) -> &CellRecord {
        &self.cells[cy * self.cells_x + cx]
    }

    pub fn cell_rect(&self, cx: usize, cy: usize) -> Rect {
        cell_rect_raw(cx, cy, self.params.cell_size, self.width, self.height)
    }

    pub fn cell_center(&self, cx: usize, cy: usize) -> Point {
        self.cell_rect(cx, cy).center()
    }

    /// Advance one frame. `flow` and `transfer` describe motion between the
    /// previous frame and this one.
    pub fn step(&mut self, frame: &Frame, flow: &FlowField, transfer: &CellTransfer) -> Result<Vec<MoverEvent>> {
        if frame.index != self.cursor + 1 {
            return Err(Error::Sequencing {
                expected: self.cursor + 1,
                got: frame.index,
            });
        }
        if frame.width() != self.width || frame.height() != self.height {
            return Err(Error::Dimension("frame size changed mid-sequence".into()));
        }
        let t = frame.index;
        self.cursor = t;

        // Mobility of source cells is judged as of the previous frame.
        let prev_mobile: Vec<bool> = self.cells.iter().map(|c| c.mobile).collect();
        let mut events = Vec::new();

        for cy in 0..self.cells_y {
            for cx in 0..self.cells_x {
                let idx = cy * self.cells_x + cx;
                let rect = cell_rect_raw(cx, cy, self.params.cell_size, self.width, self.height);
                let region = frame.region(rect);

                let changed = self.cells[idx].is_changed(&region, &self.params);
                let incoming = transfer.pixels_in[idx] >= self.params.motion_pixel_count as u32;
                let outgoing = transfer.pixels_out[idx] >= self.params.motion_pixel_count as u32;
                let moving = transfer.moving[idx] >= self.params.motion_pixel_count as u32;
                let mobile_incoming_pixels: u32 = transfer
                    .incoming_from(idx)
                    .iter()
                    .filter(|(src, _)| prev_mobile[*src])
                    .map(|(_, n)| *n)
                    .sum();
                let mobile_incoming = mobile_incoming_pixels >= self.params.motion_pixel_count as u32;

                let cell = &mut self.cells[idx];
                if incoming {
                    cell.last_incoming_frame = Some(t);
                    cell.first_incoming_frame.get_or_insert(t);
                }
                if outgoing {
                    cell.last_outgoing_frame = Some(t);
                }
                // Stability means no change AND no moving objects in the
                // cell; either resets the quiet run.
                if changed || moving || incoming {
                    cell.unchanged_run = 0;
                } else {
                    cell.unchanged_run += 1;
                }
                let stable_ready = cell.unchanged_run >= self.params.s_stable;

                let from = cell.state;
                let mut emit = false;
                let to = match from {
                    CellState::Rejected => {
                        if stable_ready {
                            CellState::Stable
                        } else {
                            from
                        }
                    }
                    CellState::Stable => {
                        if changed {
                            cell.left_stable_frame = Some(t);
                            CellState::StartChanging
                        } else {
                            from
                        }
                    }
                    CellState::StartChanging => {
                        if incoming {
                            if mobile_incoming {
                                CellState::Incoming
                            } else {
                                CellState::Rejected
                            }
                        } else if t.saturating_sub(cell.left_stable_frame.unwrap_or(t))
                            > self.params.w_start_changing
                        {
                            CellState::Rejected
                        } else if stable_ready {
                            CellState::Stable
                        } else {
                            from
                        }
                    }
                    CellState::Incoming => {
                        if outgoing {
                            CellState::Outgoing
                        } else if stable_ready {
                            CellState::Stable
                        } else {
                            from
                        }
                    }
                    CellState::Outgoing => {
                        if t.saturating_sub(cell.left_stable_frame.unwrap_or(t)) > self.params.w_total {
                            CellState::Rejected
                        } else if stable_ready {
                            emit = true;
                            CellState::Stable
                        } else if t.saturating_sub(cell.last_outgoing_frame.unwrap_or(t)) > self.params.w_out {
                            CellState::Incoming
                        } else {
                            from
                        }
                    }
                };

                if emit {
                    let differs = cell.differs_long_term(&region, &self.params);
                    let onset = cell.first_incoming_frame.unwrap_or_else(|| cell.left_stable_frame.unwrap_or(t));
                    let offset = cell.last_outgoing_frame.unwrap_or(t);
                    if differs && !self.large_scale_motion(flow, cx, cy) {
                        let center = self
                            .lock_center(flow, (cx, cy))
                            .unwrap_or_else(|| cell_rect_raw(cx, cy, self.params.cell_size, self.width, self.height).center());
                        events.push(MoverEvent {
                            frame: t,
                            cell: (cx, cy),
                            center,
                            onset_frame: onset,
                            offset_frame: offset,
                        });
                    }
                }

                let cell = &mut self.cells[idx];
                if stable_ready {
                    // (Re)stabilizing clears the mobility episode.
                    cell.first_incoming_frame = None;
                    cell.mobile = false;
                } else {
                    cell.mobile = cell
                        .first_incoming_frame
                        .map_or(false, |f| t.saturating_sub(f) >= self.params.mobile_age);
                }

                if self.params.record_transitions && to != from {
                    self.transitions.push(TransitionRecord {
                        frame: t,
                        cell: (cx, cy),
                        from,
                        to,
                    });
                }
                let cell = &mut self.cells[idx];
                cell.state = to;
                cell.apply_background_update(&region, changed, &self.params);
            }
        }
        Ok(events)
    }

    /// At least `large_motion_fraction` of the 3x3-cell-area pixels have
    /// flow magnitude at or above `large_motion_magnitude`.
    fn large_scale_motion(&self, flow: &FlowField, cx: usize, cy: usize) -> bool {
        let area = self.neighborhood_rect(cx, cy);
        let mut moving = 0usize;
        let mut total = 0usize;
        for y in area.y..area.bottom() {
            for x in area.x..area.right() {
                total += 1;
                if flow.magnitude(x as usize, y as usize) >= self.params.large_motion_magnitude {
                    moving += 1;
                }
            }
        }
        total > 0 && moving as f32 / total as f32 >= self.params.large_motion_fraction
    }

    fn neighborhood_rect(&self, cx: usize, cy: usize) -> Rect {
        let cs = self.params.cell_size as i32;
        let r = Rect::new(
            (cx as i32 - 1) * cs,
            (cy as i32 - 1) * cs,
            (3 * cs) as u32,
            (3 * cs) as u32,
        );
        r.intersect(&Rect::new(0, 0, self.width as u32, self.height as u32))
            .unwrap_or(Rect::new(0, 0, 1, 1))
    }

    /// Center of mass of the largest moving object in the 3x3 cell area:
    /// moving-pixel mask, 5x5 morphological close, largest 8-connected
    /// component.
    pub fn lock_center(&self, flow: &FlowField, cell: (usize, usize)) -> Option<Point> {
        let area = self.neighborhood_rect(cell.0, cell.1);
        let w = area.w as usize;
        let h = area.h as usize;
        let mut mask = vec![false; w * h];
        let mut any = false;
        for y in 0..h {
            for x in 0..w {
                if flow.magnitude(area.x as usize + x, area.y as usize + y) >= self.params.moving_pixel_threshold {
                    mask[y * w + x] = true;
                    any = true;
                }
            }
        }
        if !any {
            return None;
        }
        let closed = morph_close(&mask, w, h, 2);

        // Largest 8-connected component of the closed mask.
        let mut seen = vec![false; w * h];
        let mut best: Option<(usize, f64, f64)> = None; // (size, sum_x, sum_y)
        for start in 0..w * h {
            if !closed[start] || seen[start] {
                continue;
            }
            let mut stack = vec![start];
            seen[start] = true;
            let mut size = 0usize;
            let mut sx = 0.0;
            let mut sy = 0.0;
            while let Some(i) = stack.pop() {
                size += 1;
                sx += (i % w) as f64;
                sy += (i / w) as f64;
                let (ix, iy) = ((i % w) as i32, (i / w) as i32);
                for dy in -1i32..=1 {
                    for dx in -1i32..=1 {
                        let nx = ix + dx;
                        let ny = iy + dy;
                        if nx < 0 || ny < 0 || nx >= w as i32 || ny >= h as i32 {
                            continue;
                        }
                        let j = ny as usize * w + nx as usize;
                        if closed[j] && !seen[j] {
                            seen[j] = true;
                            stack.push(j);
                        }
                    }
                }
            }
            if best.map_or(true, |(bs, _, _)| size > bs) {
                best = Some((size, sx, sy));
            }
        }
        best.map(|(size, sx, sy)| {
            Point::new(
                area.x as f32 + (sx / size as f64) as f32,
                area.y as f32 + (sy / size as f64) as f32,
            )
        })
    }

    /// All state transitions seen so far land on the allowed edge set.
    pub fn transitions_are_legal(&self) -> bool {
        use CellState::*;
        self.transitions.iter().all(|t| {
            matches!(
                (t.from, t.to),
                (Rejected, Stable)
                    | (Stable, StartChanging)
                    | (StartChanging, Incoming)
                    | (StartChanging, Rejected)
                    | (StartChanging, Stable)
                    | (Incoming, Outgoing)
                    | (Incoming, Stable)
                    | (Outgoing, Stable)
                    | (Outgoing, Rejected)
                    | (Outgoing, Incoming)
            )
        })
    }
}

fn cell_rect_raw(cx: usize, cy: usize, cell_size: usize, width: usize, height: usize) -> Rect {
    let x = cx * cell_size;
    let y = cy * cell_size;
    Rect::new(
        x as i32,
        y as i32,
        cell_size.min(width - x) as u32,
        cell_size.min(height - y) as u32,
    )
}

/// Square dilation followed by erosion with radius `r` (a `2r+1` mask).
fn morph_close(mask: &[bool], w: usize, h: usize, r: i32) -> Vec<bool> {
    let mut dilated = vec![false; w * h];
    for y in 0..h as i32 {
        for x in 0..w as i32 {
            if !mask[y as usize * w + x as usize] {
                continue;
            }
            for dy in -r..=r {
                for dx in -r..=r {
                    let nx = x + dx;
                    let ny = y + dy;
                    if nx >= 0 && ny >= 0 && nx < w as i32 && ny < h as i32 {
                        dilated[ny as usize * w + nx as usize] = true;
                    }
                }
            }
        }
    }
    let mut closed = vec![false; w * h];
    for y in 0..h as i32 {
        for x in 0..w as i32 {
            let mut all = true;
            'scan: for dy in -r..=r {
                for dx in -r..=r {
                    let nx = x + dx;
                    let ny = y + dy;
                    if nx < 0 || ny < 0 || nx >= w as i32 || ny >= h as i32 {
                        continue; // outside counts as don't-care for closing
                    }
                    if !dilated[ny as usize * w + nx as usize] {
                        all = false;
                        break 'scan;
                    }
                }
            }
            closed[y as usize * w + x as usize] = all;
        }
    }
    closed
}

/// Result of running the detector over a whole sequence.
#[derive(Debug, Clone)]
pub struct MoverDetection {
    pub events: Vec<MoverEvent>,
    pub grid: GridState,
}

/// Convenience driver: flow + transfer + state machine over a sequence.
///
/// Emitted events are re-locked against the flow at their offset frame
/// (the last time the mover was seen moving there); by the emission frame
/// itself the mover has usually left the area.
pub fn detect_events(seq: &FrameSequence, params: &MoverParams, flow_params: &FlowParams) -> Result<MoverDetection> {
    if seq.is_empty() {
        return Err(Error::Dimension("empty sequence".into()));
    }
    let mut grid = GridState::init(&seq.frames[0], *params);
    let mut events = Vec::new();
    // Offset frames trail emission by at most the stability window plus
    // the outgoing-gap window.
    let keep = params.s_stable + params.w_out + 4;
    let mut recent_flows: std::collections::VecDeque<(usize, FlowField)> = std::collections::VecDeque::new();
    for t in 1..seq.len() {
        let flow = dense_flow_with(&seq.frames[t - 1], &seq.frames[t], flow_params)?;
        let transfer = cell_transfer_with(&flow, params.cell_size, params.moving_pixel_threshold);
        let mut step_events = grid.step(&seq.frames[t], &flow, &transfer)?;
        recent_flows.push_back((t, flow));
        if recent_flows.len() > keep {
            recent_flows.pop_front();
        }
        for e in &mut step_events {
            if let Some((_, offset_flow)) = recent_flows.iter().find(|(f, _)| *f == e.offset_frame) {
                if let Some(c) = grid.lock_center(offset_flow, e.cell) {
                    e.center = c;
                }
            }
        }
        events.extend(step_events);
    }
    Ok(MoverDetection { events, grid })
}

/// Events as CSV: `frame,cell_x,cell_y,center_x,center_y,onset,offset`.
pub fn events_to_csv(events: &[MoverEvent]) -> String {
    let mut out = String::from("frame,cell_x,cell_y,center_x,center_y,onset,offset\n");
    for e in events {
        let _ = writeln!(
            out,
            "{},{},{},{:.2},{:.2},{},{}",
            e.frame, e.cell.0, e.cell.1, e.center.x, e.center.y, e.onset_frame, e.offset_frame
        );
    }
    out
}

pub fn events_from_csv(text: &str) -> Result<Vec<MoverEvent>> {
    let mut rdr = csv::ReaderBuilder::new().from_reader(text.as_bytes());
    let mut out = Vec::new();
    for record in rdr.records() {
        let rec = record.map_err(|e| Error::Format(format!("events csv: {e}")))?;
        if rec.len() != 7 {
            return Err(Error::Format("events csv needs 7 columns".into()));
        }
        let p = |i: usize| -> Result<usize> {
            rec[i].parse().map_err(|_| Error::Format(format!("bad integer {:?}", &rec[i])))
        };
        let f = |i: usize| -> Result<f32> {
            rec[i].parse().map_err(|_| Error::Format(format!("bad float {:?}", &rec[i])))
        };
        out.push(MoverEvent {
            frame: p(0)?,
            cell: (p(1)?, p(2)?),
            center: Point::new(f(3)?, f(4)?),
            onset_frame: p(5)?,
            offset_frame: p(6)?,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> MoverParams {
        MoverParams::default()
    }

    fn uniform_cell(v: f32) -> CellRecord {
        CellRecord::new(&vec![v; 900], 30, 30)
    }

    #[test]
    fn is_changed_threshold_cases() {
        let cell = uniform_cell(0.5);
        // 4 pixels at diff 0.5: below the 5-pixel count.
        let mut region = vec![0.5f32; 900];
        for v in region.iter_mut().take(4) {
            *v = 1.0;
        }
        assert!(!cell.is_changed(&region, &params()));
        // 5 pixels at diff exactly 0.1 ("at least" is inclusive).
        let mut region = vec![0.5f32; 900];
        for v in region.iter_mut().take(5) {
            *v = 0.5 + 0.1;
        }
        assert!(cell.is_changed(&region, &params()));
        // Identical region.
        assert!(!cell.is_changed(&vec![0.5; 900], &params()));
    }

    #[test]
    fn brightness_offset_does_not_differ_long_term() {
        // A textured cell offset by +0.3 keeps its gradients.
        let tex: Vec<f32> = (0..900).map(|i| 0.2 + 0.3 * ((i % 30) / 6 % 2) as f32).collect();
        let cell = CellRecord::new(&tex, 30, 30);
        let offset: Vec<f32> = tex.iter().map(|v| (v + 0.3).min(1.0)).collect();
        assert!(!cell.differs_long_term(&offset, &params()));
        assert!(!cell.differs_long_term(&tex, &params()));
        // Removing the texture (flat region) kills the gradients.
        assert!(cell.differs_long_term(&vec![0.35; 900], &params()));
    }

    #[test]
    fn short_bg_ema_converges_analytically() {
        let p = params();
        let mut cell = uniform_cell(0.5);
        let region = vec![0.58f32; 900]; // below the change threshold
        for _ in 0..100 {
            cell.update_backgrounds(&region, &p);
        }
        // Analytic EMA: diff_n = (1 - alpha)^n * diff_0.
        let expect = 0.08 * (1.0f32 - p.ema_alpha).powi(100);
        let diff = (cell.short_bg()[0] - 0.58).abs();
        assert!(diff < 1e-3, "diff {diff}");
        assert!((diff - expect).abs() < 1e-4, "diff {diff} vs analytic {expect}");
    }

    #[test]
    fn changed_cell_resets_short_bg() {
        let p = params();
        let mut cell = uniform_cell(0.5);
        let region = vec![0.9f32; 900];
        cell.update_backgrounds(&region, &p);
        assert!(cell.short_bg().iter().all(|&v| v == 0.9));
    }

    #[test]
    fn long_bg_frozen_unless_stable() {
        let p = params();
        let mut cell = uniform_cell(0.5);
        cell.state = CellState::Incoming;
        for _ in 0..2 * p.s_stable {
            cell.update_backgrounds(&vec![0.52; 900], &p);
        }
        assert!(cell.long_bg().iter().all(|&v| v == 0.5));
        // Stable state alone is not enough: the quiet run must have
        // reached the stability window too.
        cell.state = CellState::Stable;
        cell.unchanged_run = 0;
        cell.update_backgrounds(&vec![0.52; 900], &p);
        assert!(cell.long_bg().iter().all(|&v| v == 0.5));
        for _ in 0..p.s_stable {
            cell.update_backgrounds(&vec![0.52; 900], &p);
        }
        assert!(cell.long_bg().iter().all(|&v| v == 0.52));
    }

    #[test]
    fn lock_center_cases() {
        let frame = Frame::from_fn(90, 90, 0, |_, _| 0.5);
        let grid = GridState::init(&frame, params());
        // No moving pixels.
        let flow = FlowField::zero(90, 90);
        assert!(grid.lock_center(&flow, (1, 1)).is_none());

        // A single 6x6 blob.
        let mut dx = vec![0.0f32; 90 * 90];
        let dy = vec![0.0f32; 90 * 90];
        for y in 40..46 {
            for x in 50..56 {
                dx[y * 90 + x] = 2.0;
            }
        }
        let flow = FlowField::from_components(90, 90, dx.clone(), dy.clone()).unwrap();
        let c = grid.lock_center(&flow, (1, 1)).unwrap();
        assert!((c.x - 52.5).abs() <= 0.5 && (c.y - 42.5).abs() <= 0.5, "{c:?}");

        // Two blobs: 40 px vs 10 px, well separated; largest wins.
        let mut dx = vec![0.0f32; 90 * 90];
        for y in 30..38 {
            for x in 30..35 {
                dx[y * 90 + x] = 2.0; // 40 px
            }
        }
        for y in 70..72 {
            for x in 70..75 {
                dx[y * 90 + x] = 2.0; // 10 px
            }
        }
        let flow = FlowField::from_components(90, 90, dx, dy).unwrap();
        let c = grid.lock_center(&flow, (1, 1)).unwrap();
        assert!((c.x - 32.0).abs() <= 1.0 && (c.y - 33.5).abs() <= 1.0, "{c:?}");
    }

    #[test]
    fn step_rejects_non_consecutive_frame() {
        let frame0 = Frame::from_fn(60, 60, 0, |_, _| 0.5);
        let mut frame2 = Frame::from_fn(60, 60, 2, |_, _| 0.5);
        frame2.index = 2;
        let mut grid = GridState::init(&frame0, params());
        let flow = FlowField::zero(60, 60);
        let transfer = cell_transfer_with(&flow, 30, 1.0);
        assert!(matches!(
            grid.step(&frame2, &flow, &transfer),
            Err(Error::Sequencing { expected: 1, got: 2 })
        ));
    }

    #[test]
    fn events_csv_round_trip() {
        let events = vec![MoverEvent {
            frame: 62,
            cell: (4, 3),
            center: Point::new(133.25, 101.5),
            onset_frame: 40,
            offset_frame: 52,
        }];
        let text = events_to_csv(&events);
        let back = events_from_csv(&text).unwrap();
        assert_eq!(back.len(), 1);
        assert_eq!(back[0].frame, 62);
        assert_eq!(back[0].cell, (4, 3));
        assert!((back[0].center.x - 133.25).abs() < 0.01);
    }
}
