//! Output helpers: atomic file writes and detector-state overlays.

use std::path::Path;

use movervision::frameio::Frame;
use movervision::mover::{CellState, GridState};

/// Write via a temp file + rename so partial outputs never appear.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    let tmp = path.with_extension(format!(
        "{}.tmp",
        path.extension().and_then(|e| e.to_str()).unwrap_or("out")
    ));
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path)
}

fn state_color(state: CellState) -> Option<[u8; 3]> {
    match state {
        CellState::Stable => Some([224, 208, 64]),       // yellow
        CellState::StartChanging => Some([235, 140, 52]), // orange
        CellState::Incoming => Some([64, 96, 235]),      // blue
        CellState::Outgoing => Some([64, 200, 80]),      // green
        CellState::Rejected => None,                     // uncolored
    }
}

/// Render the frame with state-colored cell borders; cells that emitted an
/// event this frame are filled translucent red.
pub fn render_overlay(frame: &Frame, grid: &GridState, event_cells: &[(usize, usize)]) -> image::RgbImage {
    let w = frame.width() as u32;
    let h = frame.height() as u32;
    let mut img = image::RgbImage::from_fn(w, h, |x, y| {
        let v = (frame.get(x as usize, y as usize) * 255.0).round() as u8;
        image::Rgb([v, v, v])
    });
    for cy in 0..grid.cells_y() {
        for cx in 0..grid.cells_x() {
            let rect = grid.cell_rect(cx, cy);
            if let Some(color) = state_color(grid.cell(cx, cy).state) {
                for x in rect.x..rect.right() {
                    for t in 0..2i32 {
                        blend(&mut img, x, rect.y + t, color, 0.9);
                        blend(&mut img, x, rect.bottom() - 1 - t, color, 0.9);
                    }
                }
                for y in rect.y..rect.bottom() {
                    for t in 0..2i32 {
                        blend(&mut img, rect.x + t, y, color, 0.9);
                        blend(&mut img, rect.right() - 1 - t, y, color, 0.9);
                    }
                }
            }
            if event_cells.contains(&(cx, cy)) {
                for y in rect.y..rect.bottom() {
                    for x in rect.x..rect.right() {
                        blend(&mut img, x, y, [230, 40, 40], 0.45);
                    }
                }
            }
        }
    }
    img
}

fn blend(img: &mut image::RgbImage, x: i32, y: i32, color: [u8; 3], alpha: f32) {
    if x < 0 || y < 0 || x >= img.width() as i32 || y >= img.height() as i32 {
        return;
    }
    let p = img.get_pixel_mut(x as u32, y as u32);
    for c in 0..3 {
        p.0[c] = (p.0[c] as f32 * (1.0 - alpha) + color[c] as f32 * alpha).round() as u8;
    }
}
