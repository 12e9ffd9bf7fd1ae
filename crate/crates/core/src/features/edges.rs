//! Canny edge detection: Gaussian smoothing, Sobel gradients, non-maximum
//! suppression, hysteresis.

use crate::frameio::Frame;

/// Boolean per-pixel edge mask.
#[derive(Debug, Clone)]
pub struct EdgeMap {
    width: usize,
    height: usize,
    mask: Vec<bool>,
}

impl EdgeMap {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn at(&self, x: usize, y: usize) -> bool {
        self.mask[y * self.width + x]
    }

    pub fn count(&self) -> usize {
        self.mask.iter().filter(|&&b| b).count()
    }

    pub fn points(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let w = self.width;
        self.mask
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(move |(i, _)| (i % w, i / w))
    }
}

/// Canny edges with the default thresholds (low 0.05, high 0.15 on
/// gradient magnitude).
pub fn edges(frame: &Frame) -> EdgeMap {
    edges_with(frame, 0.05, 0.15)
}

pub fn edges_with(frame: &Frame, low: f32, high: f32) -> EdgeMap {
    assert!(0.0 < low && low < high, "thresholds must satisfy 0 < low < high");
    let w = frame.width();
    let h = frame.height();

    let smoothed = gaussian_smooth(frame);

    // Sobel gradients.
    let mut mag = vec![0.0f32; w * h];
    let mut dir_x = vec![0.0f32; w * h];
    let mut dir_y = vec![0.0f32; w * h];
    let at = |f: &Vec<f32>, x: i32, y: i32| -> f32 {
        let x = x.clamp(0, w as i32 - 1) as usize;
        let y = y.clamp(0, h as i32 - 1) as usize;
        f[y * w + x]
    };
    for y in 0..h as i32 {
        for x in 0..w as i32 {
            let gx = at(&smoothed, x + 1, y - 1) + 2.0 * at(&smoothed, x + 1, y)
                + at(&smoothed, x + 1, y + 1)
                - at(&smoothed, x - 1, y - 1)
                - 2.0 * at(&smoothed, x - 1, y)
                - at(&smoothed, x - 1, y + 1);
            let gy = at(&smoothed, x - 1, y + 1) + 2.0 * at(&smoothed, x, y + 1)
                + at(&smoothed, x + 1, y + 1)
                - at(&smoothed, x - 1, y - 1)
                - 2.0 * at(&smoothed, x, y - 1)
                - at(&smoothed, x + 1, y - 1);
            let i = y as usize * w + x as usize;
            mag[i] = (gx * gx + gy * gy).sqrt() / 4.0; // scale into intensity units
            dir_x[i] = gx;
            dir_y[i] = gy;
        }
    }

    // Non-maximum suppression along the quantized gradient direction.
    let mut thin = vec![0.0f32; w * h];
    for y in 1..h.saturating_sub(1) {
        for x in 1..w.saturating_sub(1) {
            let i = y * w + x;
            if mag[i] == 0.0 {
                continue;
            }
            let angle = dir_y[i].atan2(dir_x[i]);
            let deg = angle.to_degrees();
            let deg = if deg < 0.0 { deg + 180.0 } else { deg };
            let (n1, n2) = if !(22.5..157.5).contains(&deg) {
                (mag[i - 1], mag[i + 1])
            } else if deg < 67.5 {
                (mag[i - w - 1], mag[i + w + 1])
            } else if deg < 112.5 {
                (mag[i - w], mag[i + w])
            } else {
                (mag[i - w + 1], mag[i + w - 1])
            };
            if mag[i] >= n1 && mag[i] >= n2 {
                thin[i] = mag[i];
            }
        }
    }

    // Hysteresis: strong pixels seed, weak pixels join if 8-connected to a
    // seed.
    let mut mask = vec![false; w * h];
    let mut stack = Vec::new();
    for i in 0..w * h {
        if thin[i] >= high && !mask[i] {
            mask[i] = true;
            stack.push(i);
            while let Some(j) = stack.pop() {
                let (jx, jy) = (j % w, j / w);
                for dy in -1i32..=1 {
                    for dx in -1i32..=1 {
                        if dx == 0 && dy == 0 {
                            continue;
                        }
                        let nx = jx as i32 + dx;
                        let ny = jy as i32 + dy;
                        if nx < 0 || ny < 0 || nx >= w as i32 || ny >= h as i32 {
                            continue;
                        }
                        let k = ny as usize * w + nx as usize;
                        if !mask[k] && thin[k] >= low {
                            mask[k] = true;
                            stack.push(k);
                        }
                    }
                }
            }
        }
    }

    EdgeMap { width: w, height: h, mask }
}

/// 5-tap Gaussian (sigma = 1.0), separable.
fn gaussian_smooth(frame: &Frame) -> Vec<f32> {
    const K: [f32; 5] = [0.054488685, 0.24420134, 0.40261996, 0.24420134, 0.054488685];
    let w = frame.width();
    let h = frame.height();
    let mut tmp = vec![0.0f32; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut sum = 0.0;
            for (k, &kv) in K.iter().enumerate() {
                sum += kv * frame.get_clamped(x as i32 + k as i32 - 2, y as i32);
            }
            tmp[y * w + x] = sum;
        }
    }
    let mut out = vec![0.0f32; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut sum = 0.0;
            for (k, &kv) in K.iter().enumerate() {
                let yy = (y as i32 + k as i32 - 2).clamp(0, h as i32 - 1) as usize;
                sum += kv * tmp[yy * w + x];
            }
            out[y * w + x] = sum;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_frame_no_edges() {
        let f = Frame::from_fn(32, 32, 0, |_, _| 0.7);
        assert_eq!(edges(&f).count(), 0);
    }

    #[test]
    fn step_edge_yields_thin_chain() {
        let f = Frame::from_fn(40, 40, 0, |x, _| if x < 20 { 0.2 } else { 0.8 });
        let map = edges(&f);
        // Expect a connected roughly-vertical chain near x = 19..20, one
        // pixel wide per row in the interior.
        let mut rows_hit = 0;
        for y in 4..36 {
            let hits: Vec<usize> = (0..40).filter(|&x| map.at(x, y)).collect();
            assert!(!hits.is_empty(), "row {y} has no edge");
            assert!(hits.len() <= 2, "row {y} edge too thick: {hits:?}");
            for &x in &hits {
                assert!((x as i32 - 19).abs() <= 1, "edge at x={x}");
            }
            rows_hit += 1;
        }
        assert_eq!(rows_hit, 32);
    }

    #[test]
    fn edge_count_monotone_in_high_threshold() {
        let f = Frame::from_fn(48, 48, 0, |x, y| {
            0.5 + 0.3 * ((x as f32 / 5.0).sin() * (y as f32 / 7.0).cos())
        });
        let mut last = usize::MAX;
        for high in [0.02, 0.05, 0.1, 0.2] {
            let count = edges_with(&f, 0.01, high).count();
            assert!(count <= last);
            last = count;
        }
    }
}
