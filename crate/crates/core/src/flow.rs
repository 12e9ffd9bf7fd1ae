//! Dense optical flow between consecutive frames, per-cell motion transfer
//! counts and region velocity aggregation.
//!
//! The flow estimator is coarse-to-fine block matching: integer pyramid
//! levels, SSD cost over a 9x9 window, search radius ±4 per level, with
//! parabolic sub-pixel refinement at the finest level. Downstream modules
//! only rely on the contract (translation accuracy, near-zero flow on
//! static content), so the algorithm is swappable.

use crate::error::{Error, Result};
use crate::frameio::Frame;
use crate::geom::Point;

/// Per-pixel displacement field between two consecutive frames.
#[derive(Debug, Clone)]
pub struct FlowField {
    width: usize,
    height: usize,
    dx: Vec<f32>,
    dy: Vec<f32>,
}

impl FlowField {
    pub fn zero(width: usize, height: usize) -> FlowField {
        FlowField {
            width,
            height,
            dx: vec![0.0; width * height],
            dy: vec![0.0; width * height],
        }
    }

    /// Build from explicit components; used by tests constructing fields by
    /// hand.
    pub fn from_components(width: usize, height: usize, dx: Vec<f32>, dy: Vec<f32>) -> Result<FlowField> {
        if dx.len() != width * height || dy.len() != width * height {
            return Err(Error::Dimension("flow component size mismatch".into()));
        }
        if dx.iter().chain(dy.iter()).any(|v| !v.is_finite()) {
            return Err(Error::Dimension("flow must be finite".into()));
        }
        Ok(FlowField { width, height, dx, dy })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn at(&self, x: usize, y: usize) -> (f32, f32) {
        let i = y * self.width + x;
        (self.dx[i], self.dy[i])
    }

    #[inline]
    pub fn magnitude(&self, x: usize, y: usize) -> f32 {
        let (dx, dy) = self.at(x, y);
        (dx * dx + dy * dy).sqrt()
    }

    #[inline]
    fn set(&mut self, x: usize, y: usize, dx: f32, dy: f32) {
        let i = y * self.width + x;
        self.dx[i] = dx;
        self.dy[i] = dy;
    }

    /// Serialize as the debug dump format: 16-byte header (`FLOW\0` padded
    /// to 8 bytes, then u32 LE width and height), then all dx as f32 LE,
    /// then all dy.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(16 + 8 * self.dx.len());
        out.extend_from_slice(b"FLOW\0\0\0\0");
        out.extend_from_slice(&(self.width as u32).to_le_bytes());
        out.extend_from_slice(&(self.height as u32).to_le_bytes());
        for v in self.dx.iter().chain(self.dy.iter()) {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<FlowField> {
        if bytes.len() < 16 || &bytes[0..8] != b"FLOW\0\0\0\0" {
            return Err(Error::Format("bad flow dump header".into()));
        }
        let w = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
        let h = u32::from_le_bytes(bytes[12..16].try_into().unwrap()) as usize;
        let n = w * h;
        if bytes.len() != 16 + 8 * n {
            return Err(Error::Format("flow dump length mismatch".into()));
        }
        let read_f32s = |off: usize| -> Vec<f32> {
            (0..n)
                .map(|i| f32::from_le_bytes(bytes[off + 4 * i..off + 4 * i + 4].try_into().unwrap()))
                .collect()
        };
        FlowField::from_components(w, h, read_f32s(16), read_f32s(16 + 4 * n))
    }
}

/// Tunables for [`dense_flow`].
#[derive(Debug, Clone, Copy)]
pub struct FlowParams {
    /// Half-size of the SSD matching window (window is `2r+1` squared).
    pub window_radius: usize,
    /// Integer search radius per pyramid level.
    pub search_radius: i32,
    /// Pyramid levels (1 = no pyramid).
    pub levels: usize,
    /// Mean-squared-difference margin under which the predicted
    /// displacement is kept as-is. Makes static noisy regions report zero
    /// flow and skips the full search on unchanged content.
    pub accept_mse: f32,
    /// Pixels with flow magnitude at or above this are verified by a
    /// backward match; inconsistent ones are zeroed (kills occlusion
    /// artifacts). Set to `f32::INFINITY` to disable.
    pub verify_from: f32,
}

impl Default for FlowParams {
    fn default() -> Self {
        FlowParams {
            window_radius: 4,
            search_radius: 4,
            levels: 3,
            accept_mse: 0.002,
            verify_from: 1.0,
        }
    }
}

/// Dense optical flow from `prev` to `next` with default parameters.
pub fn dense_flow(prev: &Frame, next: &Frame) -> Result<FlowField> {
    dense_flow_with(prev, next, &FlowParams::default())
}

pub fn dense_flow_with(prev: &Frame, next: &Frame, params: &FlowParams) -> Result<FlowField> {
    if prev.width() != next.width() || prev.height() != next.height() {
        return Err(Error::Dimension(format!(
            "flow inputs {}x{} vs {}x{}",
            prev.width(),
            prev.height(),
            next.width(),
            next.height()
        )));
    }

    // Build pyramids; stop early if a level would be smaller than the
    // matching window.
    let min_dim = 2 * params.window_radius + 1;
    let mut pyr_prev = vec![prev.clone()];
    let mut pyr_next = vec![next.clone()];
    for _ in 1..params.levels {
        let p = pyr_prev.last().unwrap();
        if p.width() / 2 < min_dim || p.height() / 2 < min_dim {
            break;
        }
        pyr_prev.push(downsample(p));
        pyr_next.push(downsample(pyr_next.last().unwrap()));
    }

    let mut flow: Option<FlowField> = None;
    for level in (0..pyr_prev.len()).rev() {
        let p = &pyr_prev[level];
        let n = &pyr_next[level];
        let predicted = match &flow {
            None => FlowField::zero(p.width(), p.height()),
            Some(coarse) => upsample_flow(coarse, p.width(), p.height()),
        };
        flow = Some(match_level(p, n, &predicted, params, level == 0));
    }
    let mut flow = flow.expect("at least one pyramid level");
    if params.verify_from.is_finite() {
        verify_backward(prev, next, &mut flow, params);
    }
    Ok(flow)
}

/// Zero out forward vectors whose backward match disagrees. Only pixels at
/// or above `verify_from` magnitude are checked; occluded regions produce
/// confident-looking junk matches that fail this test.
fn verify_backward(prev: &Frame, next: &Frame, flow: &mut FlowField, params: &FlowParams) {
    let r = params.window_radius as i32;
    let s = params.search_radius;
    let w = flow.width();
    let h = flow.height();
    for y in 0..h {
        for x in 0..w {
            let (dx, dy) = flow.at(x, y);
            if (dx * dx + dy * dy).sqrt() < params.verify_from {
                continue;
            }
            let qx = (x as f32 + dx).round() as i32;
            let qy = (y as f32 + dy).round() as i32;
            if qx < 0 || qy < 0 || qx >= w as i32 || qy >= h as i32 {
                flow.set(x, y, 0.0, 0.0);
                continue;
            }
            // Best backward displacement around the negated forward one.
            let bx = (-dx).round() as i32;
            let by = (-dy).round() as i32;
            let mut best = f32::MAX;
            let mut best_u = (bx, by);
            for sy in -s..=s {
                for sx in -s..=s {
                    let cost = window_mse(next, prev, qx, qy, bx + sx, by + sy, r, best);
                    if cost < best {
                        best = cost;
                        best_u = (bx + sx, by + sy);
                    }
                }
            }
            let ex = best_u.0 as f32 + dx;
            let ey = best_u.1 as f32 + dy;
            if (ex * ex + ey * ey).sqrt() > 1.5 {
                flow.set(x, y, 0.0, 0.0);
            }
        }
    }
}

fn downsample(src: &Frame) -> Frame {
    let w = src.width() / 2;
    let h = src.height() / 2;
    Frame::from_fn(w, h, src.index, |x, y| {
        (src.get(2 * x, 2 * y)
            + src.get(2 * x + 1, 2 * y)
            + src.get(2 * x, 2 * y + 1)
            + src.get(2 * x + 1, 2 * y + 1))
            / 4.0
    })
}

fn upsample_flow(coarse: &FlowField, w: usize, h: usize) -> FlowField {
    let mut out = FlowField::zero(w, h);
    for y in 0..h {
        let cy = (y / 2).min(coarse.height - 1);
        for x in 0..w {
            let cx = (x / 2).min(coarse.width - 1);
            let (dx, dy) = coarse.at(cx, cy);
            out.set(x, y, dx * 2.0, dy * 2.0);
        }
    }
    out
}

/// Mean squared difference between the window at `p` in `prev` and the
/// window at `p + d` in `next`, with border clamping. Aborts early once the
/// accumulated sum exceeds `bail_at * count`.
#[inline]
fn window_mse(prev: &Frame, next: &Frame, px: i32, py: i32, dx: i32, dy: i32, r: i32, bail_at: f32) -> f32 {
    let mut sum = 0.0f32;
    let count = ((2 * r + 1) * (2 * r + 1)) as f32;
    let bail_sum = bail_at * count;
    for wy in -r..=r {
        for wx in -r..=r {
            let a = prev.get_clamped(px + wx, py + wy);
            let b = next.get_clamped(px + dx + wx, py + dy + wy);
            let d = a - b;
            sum += d * d;
        }
        if sum > bail_sum {
            return f32::MAX;
        }
    }
    sum / count
}

fn match_level(prev: &Frame, next: &Frame, predicted: &FlowField, params: &FlowParams, finest: bool) -> FlowField {
    let w = prev.width();
    let h = prev.height();
    let r = params.window_radius as i32;
    let s = params.search_radius;
    let mut out = FlowField::zero(w, h);

    for y in 0..h {
        for x in 0..w {
            let (pdx, pdy) = predicted.at(x, y);
            let pdx_i = pdx.round() as i32;
            let pdy_i = pdy.round() as i32;

            // If the prediction already matches at noise level, keep it.
            let pred_cost = window_mse(prev, next, x as i32, y as i32, pdx_i, pdy_i, r, f32::MAX);
            if pred_cost <= params.accept_mse {
                out.set(x, y, pdx_i as f32, pdy_i as f32);
                continue;
            }

            // Search around the pyramid prediction, and around the zero
            // anchor as well: a badly matching prediction may be pyramid
            // junk that would otherwise hide a nearby true match.
            let mut anchors = vec![(pdx_i, pdy_i, pred_cost)];
            if pdx_i != 0 || pdy_i != 0 {
                let zero_cost = window_mse(prev, next, x as i32, y as i32, 0, 0, r, f32::MAX);
                anchors.push((0, 0, zero_cost));
            }

            let side = (2 * s + 1) as usize;
            let mut best = f32::MAX;
            let mut best_d = (pdx_i, pdy_i);
            let mut grids: Vec<((i32, i32), Vec<f32>)> = Vec::with_capacity(anchors.len());
            for &(ax, ay, a_cost) in &anchors {
                let mut grid = vec![f32::MAX; side * side];
                for sy in -s..=s {
                    for sx in -s..=s {
                        let cost = if sx == 0 && sy == 0 {
                            a_cost
                        } else {
                            // Bail past best+margin: such candidates can
                            // neither win nor matter as runner-up in the
                            // ambiguity test below.
                            let bail = if best == f32::MAX { f32::MAX } else { best + params.accept_mse };
                            window_mse(prev, next, x as i32, y as i32, ax + sx, ay + sy, r, bail)
                        };
                        grid[(sy + s) as usize * side + (sx + s) as usize] = cost;
                        if cost < best {
                            best = cost;
                            best_d = (ax + sx, ay + sy);
                        }
                    }
                }
                grids.push(((ax, ay), grid));
            }
            let (best_anchor, best_grid) = grids
                .iter()
                .find(|((ax, ay), _)| {
                    (best_d.0 - ax).abs() <= s && (best_d.1 - ay).abs() <= s
                })
                .map(|(a, g)| (*a, g))
                .expect("winner lies in some window");

            // Ambiguity: a near-equal minimum elsewhere in displacement
            // space means the match is unreliable (typical at occlusions
            // over self-similar background); report no motion.
            let mut runner_up = f32::MAX;
            for ((ax, ay), grid) in &grids {
                for sy in -s..=s {
                    for sx in -s..=s {
                        let d = (ax + sx, ay + sy);
                        if (d.0 - best_d.0).abs().max((d.1 - best_d.1).abs()) < 2 {
                            continue;
                        }
                        let c = grid[(sy + s) as usize * side + (sx + s) as usize];
                        if c < runner_up {
                            runner_up = c;
                        }
                    }
                }
            }
            if runner_up - best <= params.accept_mse {
                out.set(x, y, 0.0, 0.0);
                continue;
            }

            // Margin preferences: stillness first, then the prediction;
            // otherwise take the best match with sub-pixel refinement at
            // the finest level (1-D parabola per axis).
            let zero_cost = anchors.last().map(|&(ax, ay, c)| if ax == 0 && ay == 0 { c } else { f32::MAX });
            if pdx_i == 0 && pdy_i == 0 {
                if pred_cost - best <= params.accept_mse {
                    out.set(x, y, 0.0, 0.0);
                    continue;
                }
            } else if let Some(zc) = zero_cost {
                if zc - best <= params.accept_mse {
                    out.set(x, y, 0.0, 0.0);
                    continue;
                }
                if pred_cost - best <= params.accept_mse {
                    out.set(x, y, pdx_i as f32, pdy_i as f32);
                    continue;
                }
            }

            let (mut fx, mut fy) = (best_d.0 as f32, best_d.1 as f32);
            if finest {
                let ix = (best_d.0 - best_anchor.0 + s) as usize;
                let iy = (best_d.1 - best_anchor.1 + s) as usize;
                if ix > 0 && ix < side - 1 {
                    let (c_m, c_0, c_p) = (
                        best_grid[iy * side + ix - 1],
                        best_grid[iy * side + ix],
                        best_grid[iy * side + ix + 1],
                    );
                    if c_m.is_finite() && c_p.is_finite() {
                        let denom = c_m - 2.0 * c_0 + c_p;
                        if denom > 1e-12 {
                            fx += (0.5 * (c_m - c_p) / denom).clamp(-0.5, 0.5);
                        }
                    }
                }
                if iy > 0 && iy < side - 1 {
                    let (c_m, c_0, c_p) = (
                        best_grid[(iy - 1) * side + ix],
                        best_grid[iy * side + ix],
                        best_grid[(iy + 1) * side + ix],
                    );
                    if c_m.is_finite() && c_p.is_finite() {
                        let denom = c_m - 2.0 * c_0 + c_p;
                        if denom > 1e-12 {
                            fy += (0.5 * (c_m - c_p) / denom).clamp(-0.5, 0.5);
                        }
                    }
                }
            }
            out.set(x, y, fx, fy);
        }
    }
    out
}

/// Per-cell motion bookkeeping for one frame step.
#[derive(Debug, Clone)]
pub struct CellTransfer {
    pub cells_x: usize,
    pub cells_y: usize,
    pub cell_size: usize,
    /// Moving pixels that left each cell (destination differs or off-frame).
    pub pixels_out: Vec<u32>,
    /// Moving pixels that arrived in each cell from a different cell.
    pub pixels_in: Vec<u32>,
    /// Moving pixels located in each cell, crossing or not.
    pub moving: Vec<u32>,
    /// For each destination cell, count of arrivals per source cell.
    pub sources: Vec<Vec<(usize, u32)>>,
}

/// Flow magnitude at or above which a pixel counts as moving.
pub const MOVING_PIXEL_THRESHOLD: f32 = 1.0;

impl CellTransfer {
    #[inline]
    pub fn cell_index(&self, cx: usize, cy: usize) -> usize {
        cy * self.cells_x + cx
    }

    pub fn incoming_from(&self, cell: usize) -> &[(usize, u32)] {
        &self.sources[cell]
    }
}

/// Count moving pixels crossing cell boundaries.
///
/// A pixel moves iff its flow magnitude is at least
/// [`MOVING_PIXEL_THRESHOLD`]; it contributes to `pixels_out` of its source
/// cell and, when it lands in a different in-frame cell, to `pixels_in` of
/// the destination (with the source recorded).
pub fn cell_transfer(flow: &FlowField, cell_size: usize) -> CellTransfer {
    cell_transfer_with(flow, cell_size, MOVING_PIXEL_THRESHOLD)
}

pub fn cell_transfer_with(flow: &FlowField, cell_size: usize, moving_threshold: f32) -> CellTransfer {
    assert!(cell_size >= 1);
    let cells_x = flow.width().div_ceil(cell_size);
    let cells_y = flow.height().div_ceil(cell_size);
    let n = cells_x * cells_y;
    let mut t = CellTransfer {
        cells_x,
        cells_y,
        cell_size,
        pixels_out: vec![0; n],
        pixels_in: vec![0; n],
        moving: vec![0; n],
        sources: vec![Vec::new(); n],
    };
    for y in 0..flow.height() {
        for x in 0..flow.width() {
            let (dx, dy) = flow.at(x, y);
            if (dx * dx + dy * dy).sqrt() < moving_threshold {
                continue;
            }
            let src = (y / cell_size) * cells_x + x / cell_size;
            t.moving[src] += 1;
            let nx = (x as f32 + dx).round() as i32;
            let ny = (y as f32 + dy).round() as i32;
            if nx < 0 || ny < 0 || nx >= flow.width() as i32 || ny >= flow.height() as i32 {
                t.pixels_out[src] += 1; // leaves the frame
                continue;
            }
            let dst = (ny as usize / cell_size) * cells_x + nx as usize / cell_size;
            if dst != src {
                t.pixels_out[src] += 1;
                t.pixels_in[dst] += 1;
                match t.sources[dst].iter_mut().find(|(c, _)| *c == src) {
                    Some((_, count)) => *count += 1,
                    None => t.sources[dst].push((src, 1)),
                }
            }
        }
    }
    t
}

/// Motion of an object/part region.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Velocity {
    pub vx: f32,
    pub vy: f32,
}

/// Weighted mean flow over a pixel mask.
pub fn region_velocity(flow: &FlowField, mask: &[(usize, usize)], weights: &[f32]) -> Result<Velocity> {
    if mask.is_empty() || mask.len() != weights.len() {
        return Err(Error::DegenerateRegion(format!(
            "mask of {} pixels with {} weights",
            mask.len(),
            weights.len()
        )));
    }
    let mut sum_w = 0.0f64;
    let mut sx = 0.0f64;
    let mut sy = 0.0f64;
    for (&(x, y), &w) in mask.iter().zip(weights) {
        if w < 0.0 {
            return Err(Error::DegenerateRegion("negative weight".into()));
        }
        let (dx, dy) = flow.at(x, y);
        sum_w += w as f64;
        sx += w as f64 * dx as f64;
        sy += w as f64 * dy as f64;
    }
    if sum_w <= 0.0 {
        return Err(Error::DegenerateRegion("zero weight sum".into()));
    }
    Ok(Velocity {
        vx: (sx / sum_w) as f32,
        vy: (sy / sum_w) as f32,
    })
}

/// Velocity of a rectangular region weighted by flow magnitude, falling
/// back to the unweighted mean when nothing moves.
pub fn region_velocity_flow_weighted(flow: &FlowField, center: Point, half: usize) -> Velocity {
    let x0 = (center.x.round() as i32 - half as i32).max(0) as usize;
    let y0 = (center.y.round() as i32 - half as i32).max(0) as usize;
    let x1 = ((center.x.round() as i32 + half as i32) as usize).min(flow.width() - 1);
    let y1 = ((center.y.round() as i32 + half as i32) as usize).min(flow.height() - 1);
    let mut mask = Vec::new();
    let mut weights = Vec::new();
    for y in y0..=y1 {
        for x in x0..=x1 {
            mask.push((x, y));
            weights.push(flow.magnitude(x, y));
        }
    }
    match region_velocity(flow, &mask, &weights) {
        Ok(v) => v,
        Err(_) => {
            let uniform = vec![1.0; mask.len()];
            region_velocity(flow, &mask, &uniform).unwrap_or(Velocity { vx: 0.0, vy: 0.0 })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frameio::Frame;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn textured_frame(w: usize, h: usize, seed: u64) -> Frame {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let vals: Vec<f32> = (0..w * h).map(|_| rng.gen()).collect();
        Frame::from_pixels(w, h, vals, 0).unwrap()
    }

    #[test]
    fn identical_frames_zero_flow() {
        let f = textured_frame(48, 40, 3);
        let flow = dense_flow(&f, &f).unwrap();
        for y in 0..40 {
            for x in 0..48 {
                assert!(flow.magnitude(x, y) <= 1e-6);
            }
        }
    }

    #[test]
    fn shifted_patch_recovers_translation() {
        // Textured 20x20 patch on a flat background, shifted by (3, 0).
        let patch = textured_frame(20, 20, 7);
        let place = |ox: usize| {
            Frame::from_fn(80, 60, 0, |x, y| {
                if x >= ox && x < ox + 20 && y >= 20 && y < 40 {
                    0.2 + 0.6 * patch.get(x - ox, y - 20)
                } else {
                    0.5
                }
            })
        };
        let prev = place(30);
        let next = place(33);
        let flow = dense_flow(&prev, &next).unwrap();
        let mut err_sum = 0.0;
        let mut count = 0;
        for y in 24..36 {
            for x in 34..46 {
                let (dx, dy) = flow.at(x, y);
                err_sum += (dx - 3.0).abs() + (dy - 0.0).abs();
                count += 2;
            }
        }
        assert!(err_sum / count as f32 <= 0.5, "mean error {}", err_sum / count as f32);
    }

    #[test]
    fn static_noisy_background_is_quiet() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut noisy = || {
            let v: Vec<f32> = (0..60 * 48)
                .map(|_| (0.5 + 0.01 * (rng.gen::<f32>() - 0.5)).clamp(0.0, 1.0))
                .collect();
            Frame::from_pixels(60, 48, v, 0).unwrap()
        };
        let prev = noisy();
        let next = noisy();
        let flow = dense_flow(&prev, &next).unwrap();
        for y in 0..48 {
            for x in 0..60 {
                assert!(flow.magnitude(x, y) <= 0.1, "flow {} at {},{}", flow.magnitude(x, y), x, y);
            }
        }
    }

    #[test]
    fn uncorrelated_noise_is_finite() {
        let a = textured_frame(40, 30, 1);
        let b = textured_frame(40, 30, 2);
        let flow = dense_flow(&a, &b).unwrap();
        for y in 0..30 {
            for x in 0..40 {
                let (dx, dy) = flow.at(x, y);
                assert!(dx.is_finite() && dy.is_finite());
            }
        }
    }

    #[test]
    fn dimension_mismatch_is_error() {
        let a = Frame::new(10, 10, 0);
        let b = Frame::new(12, 10, 1);
        assert!(matches!(dense_flow(&a, &b), Err(Error::Dimension(_))));
    }

    #[test]
    fn transfer_counts_by_hand() {
        // 10 pixels in cell (0,0) flowing into adjacent cell (1,0).
        let mut flow = FlowField::zero(20, 10);
        for y in 0..10 {
            flow.set(8, y, 4.0, 0.0); // x=8 + 4 -> 12, crosses the 10-px cell border
        }
        let t = cell_transfer(&flow, 10);
        let a = t.cell_index(0, 0);
        let b = t.cell_index(1, 0);
        assert_eq!(t.pixels_out[a], 10);
        assert_eq!(t.pixels_in[b], 10);
        assert_eq!(t.incoming_from(b), &[(a, 10)]);
    }

    #[test]
    fn zero_flow_no_transfer() {
        let flow = FlowField::zero(30, 30);
        let t = cell_transfer(&flow, 10);
        assert!(t.pixels_in.iter().all(|&c| c == 0));
        assert!(t.pixels_out.iter().all(|&c| c == 0));
    }

    #[test]
    fn below_threshold_pixel_does_not_move() {
        let mut flow = FlowField::zero(20, 10);
        flow.set(9, 5, 0.9, 0.0);
        let t = cell_transfer(&flow, 10);
        assert!(t.pixels_out.iter().all(|&c| c == 0));
    }

    #[test]
    fn transfer_conservation() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let mut flow = FlowField::zero(40, 40);
        let mut expected_out = 0u32;
        for y in 0..40 {
            for x in 0..40 {
                if rng.gen::<f32>() < 0.2 {
                    let dx = rng.gen_range(-5.0..5.0);
                    let dy = rng.gen_range(-5.0..5.0);
                    flow.set(x, y, dx, dy);
                    if (dx * dx + dy * dy).sqrt() >= 1.0 {
                        let nx = (x as f32 + dx).round() as i32;
                        let ny = (y as f32 + dy).round() as i32;
                        let off = nx < 0 || ny < 0 || nx >= 40 || ny >= 40;
                        let crossed = off
                            || (nx as usize / 10, ny as usize / 10) != (x / 10, y / 10);
                        if crossed {
                            expected_out += 1;
                        }
                    }
                }
            }
        }
        let t = cell_transfer(&flow, 10);
        assert_eq!(t.pixels_out.iter().sum::<u32>(), expected_out);
    }

    #[test]
    fn region_velocity_examples() {
        let mut flow = FlowField::zero(10, 10);
        for y in 0..10 {
            for x in 0..10 {
                flow.set(x, y, 2.0, 1.0);
            }
        }
        let mask = vec![(1, 1), (5, 5), (7, 2)];
        let v = region_velocity(&flow, &mask, &[1.0, 1.0, 1.0]).unwrap();
        assert_eq!(v, Velocity { vx: 2.0, vy: 1.0 });

        let mut flow = FlowField::zero(10, 10);
        flow.set(0, 0, 0.0, 0.0);
        flow.set(4, 0, 4.0, 0.0);
        let v = region_velocity(&flow, &[(0, 0), (4, 0)], &[1.0, 1.0]).unwrap();
        assert_eq!(v, Velocity { vx: 2.0, vy: 0.0 });

        // Magnitude-weighted: (1,0) w=1 and (3,0) w=3 -> 2.5.
        let mut flow = FlowField::zero(10, 10);
        flow.set(0, 0, 1.0, 0.0);
        flow.set(1, 0, 3.0, 0.0);
        let v = region_velocity(&flow, &[(0, 0), (1, 0)], &[1.0, 3.0]).unwrap();
        assert!((v.vx - 2.5).abs() < 1e-6 && v.vy == 0.0);
    }

    #[test]
    fn empty_mask_is_error() {
        let flow = FlowField::zero(4, 4);
        assert!(region_velocity(&flow, &[], &[]).is_err());
        assert!(region_velocity(&flow, &[(0, 0)], &[0.0]).is_err());
    }

    #[test]
    fn flow_dump_round_trip() {
        let mut flow = FlowField::zero(5, 3);
        flow.set(1, 2, 1.5, -0.25);
        let bytes = flow.to_bytes();
        assert_eq!(&bytes[0..8], b"FLOW\0\0\0\0");
        assert_eq!(bytes.len(), 16 + 8 * 15);
        let back = FlowField::from_bytes(&bytes).unwrap();
        assert_eq!(back.at(1, 2), (1.5, -0.25));
        assert_eq!(back.at(0, 0), (0.0, 0.0));
    }

    #[test]
    fn translation_covariance() {
        // Shifting both frames by the same integer vector shifts the flow.
        let base = textured_frame(64, 48, 13);
        let shifted_pair = |ox: i32, oy: i32| {
            let prev = Frame::from_fn(64, 48, 0, |x, y| base.get_clamped(x as i32 + ox, y as i32 + oy));
            let next = Frame::from_fn(64, 48, 0, |x, y| {
                base.get_clamped(x as i32 + ox - 2, y as i32 + oy - 1)
            });
            dense_flow(&prev, &next).unwrap()
        };
        let f0 = shifted_pair(0, 0);
        let f1 = shifted_pair(3, 2);
        // Compare interior flow (border band may be unreliable).
        for y in 12..36 {
            for x in 12..52 {
                let a = f0.at(x + 3, y + 2);
                let b = f1.at(x, y);
                assert!(
                    (a.0 - b.0).abs() <= 1.0 && (a.1 - b.1).abs() <= 1.0,
                    "at ({x},{y}): f0[{},{}]={a:?} f1={b:?}",
                    x + 3,
                    y + 2
                );
            }
        }
    }
}
