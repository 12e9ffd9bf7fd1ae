//! Histogram-of-oriented-gradients descriptor with the usual defaults:
//! 8x8-pixel cells, 2x2-cell blocks at 1-cell stride, 9 unsigned
//! orientation bins, L2-hys block normalization.

use super::{Descriptor, DescriptorKind};
use crate::error::{Error, Result};
use crate::frameio::Frame;
use crate::geom::Rect;

#[derive(Debug, Clone, Copy)]
pub struct HogParams {
    pub cell_size: usize,
    pub block_cells: usize,
    pub bins: usize,
}

impl Default for HogParams {
    fn default() -> Self {
        HogParams {
            cell_size: 8,
            block_cells: 2,
            bins: 9,
        }
    }
}

const CLIP: f32 = 0.2;

/// HOG descriptor of `rect` within `frame`.
pub fn hog(frame: &Frame, rect: Rect, params: &HogParams) -> Result<Descriptor> {
    let frame_rect = Rect::new(0, 0, frame.width() as u32, frame.height() as u32);
    if rect.intersect(&frame_rect) != Some(rect) {
        return Err(Error::Size("hog rect outside frame".into()));
    }
    let cells_x = rect.w as usize / params.cell_size;
    let cells_y = rect.h as usize / params.cell_size;
    if cells_x < params.block_cells || cells_y < params.block_cells {
        return Err(Error::Size(format!(
            "hog rect {}x{} smaller than one block",
            rect.w, rect.h
        )));
    }

    // Per-cell orientation histograms (unsigned gradients, linear
    // interpolation between neighboring bins).
    let mut cells = vec![0.0f32; cells_x * cells_y * params.bins];
    let bin_width = std::f32::consts::PI / params.bins as f32;
    for cy in 0..cells_y {
        for cx in 0..cells_x {
            let base = (cy * cells_x + cx) * params.bins;
            for py in 0..params.cell_size {
                for px in 0..params.cell_size {
                    let x = rect.x + (cx * params.cell_size + px) as i32;
                    let y = rect.y + (cy * params.cell_size + py) as i32;
                    let gx = (frame.get_clamped(x + 1, y) - frame.get_clamped(x - 1, y)) / 2.0;
                    let gy = (frame.get_clamped(x, y + 1) - frame.get_clamped(x, y - 1)) / 2.0;
                    let mag = (gx * gx + gy * gy).sqrt();
                    if mag == 0.0 {
                        continue;
                    }
                    let mut angle = gy.atan2(gx);
                    if angle < 0.0 {
                        angle += std::f32::consts::PI;
                    }
                    if angle >= std::f32::consts::PI {
                        angle -= std::f32::consts::PI;
                    }
                    let pos = angle / bin_width - 0.5;
                    let b0 = pos.floor();
                    let frac = pos - b0;
                    let i0 = ((b0 as i32).rem_euclid(params.bins as i32)) as usize;
                    let i1 = (i0 + 1) % params.bins;
                    cells[base + i0] += mag * (1.0 - frac);
                    cells[base + i1] += mag * frac;
                }
            }
        }
    }

    // Blocks of block_cells x block_cells cells at 1-cell stride, each
    // L2-hys normalized.
    let blocks_x = cells_x - params.block_cells + 1;
    let blocks_y = cells_y - params.block_cells + 1;
    let block_len = params.block_cells * params.block_cells * params.bins;
    let mut values = Vec::with_capacity(blocks_x * blocks_y * block_len);
    for by in 0..blocks_y {
        for bx in 0..blocks_x {
            let mut block = Vec::with_capacity(block_len);
            for cy in 0..params.block_cells {
                for cx in 0..params.block_cells {
                    let base = ((by + cy) * cells_x + bx + cx) * params.bins;
                    block.extend_from_slice(&cells[base..base + params.bins]);
                }
            }
            l2_hys(&mut block);
            values.extend_from_slice(&block);
        }
    }

    // Whole-descriptor normalization so L2 distances are scale-comparable.
    let norm = values.iter().map(|v| v * v).sum::<f32>().sqrt();
    if norm > 1e-12 {
        values.iter_mut().for_each(|v| *v /= norm);
    }

    Ok(Descriptor {
        values,
        kind: DescriptorKind::Hog,
        anchor: rect.center(),
        patch_size: rect.w,
        clamped: false,
    })
}

fn l2_hys(block: &mut [f32]) {
    let norm = block.iter().map(|v| v * v).sum::<f32>().sqrt();
    if norm <= 1e-12 {
        return;
    }
    block.iter_mut().for_each(|v| *v = (*v / norm).min(CLIP));
    let norm2 = block.iter().map(|v| v * v).sum::<f32>().sqrt();
    if norm2 > 1e-12 {
        block.iter_mut().for_each(|v| *v /= norm2);
    }
}

/// Descriptor length for a given rect under `params`.
pub fn hog_len(rect_w: u32, rect_h: u32, params: &HogParams) -> usize {
    let cells_x = rect_w as usize / params.cell_size;
    let cells_y = rect_h as usize / params.cell_size;
    let blocks_x = cells_x.saturating_sub(params.block_cells - 1);
    let blocks_y = cells_y.saturating_sub(params.block_cells - 1);
    blocks_x * blocks_y * params.block_cells * params.block_cells * params.bins
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_rect_zero_descriptor() {
        let f = Frame::from_fn(80, 80, 0, |_, _| 0.6);
        let d = hog(&f, Rect::new(8, 8, 64, 64), &HogParams::default()).unwrap();
        assert!(d.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn descriptor_length_64x64_is_1764() {
        let f = Frame::from_fn(80, 80, 0, |x, y| ((x * 3 + y) % 9) as f32 / 9.0);
        let d = hog(&f, Rect::new(8, 8, 64, 64), &HogParams::default()).unwrap();
        assert_eq!(d.values.len(), 1764);
        assert_eq!(hog_len(64, 64, &HogParams::default()), 1764);
    }

    #[test]
    fn brightness_offset_invariance() {
        let f1 = Frame::from_fn(64, 64, 0, |x, y| ((x + 2 * y) % 13) as f32 / 26.0);
        let f2 = Frame::from_fn(64, 64, 0, |x, y| 0.4 + ((x + 2 * y) % 13) as f32 / 26.0);
        let r = Rect::new(16, 16, 32, 32);
        let d1 = hog(&f1, r, &HogParams::default()).unwrap();
        let d2 = hog(&f2, r, &HogParams::default()).unwrap();
        for (a, b) in d1.values.iter().zip(&d2.values) {
            assert!((a - b).abs() < 1e-5);
        }
    }

    #[test]
    fn too_small_rect_is_size_error() {
        let f = Frame::from_fn(40, 40, 0, |_, _| 0.5);
        assert!(matches!(
            hog(&f, Rect::new(0, 0, 12, 12), &HogParams::default()),
            Err(Error::Size(_))
        ));
    }
}
