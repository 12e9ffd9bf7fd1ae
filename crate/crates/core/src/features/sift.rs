//! SIFT-like descriptor: 4x4 spatial cells x 8 orientation bins of
//! Gaussian-weighted gradient magnitude, L2-normalized, clipped at 0.2 and
//! renormalized.

use super::{Descriptor, DescriptorKind};
use crate::frameio::Frame;
use crate::geom::Point;

pub const SIFT_DIM: usize = 128;
const SPATIAL_CELLS: usize = 4;
const ORI_BINS: usize = 8;
const CLIP: f32 = 0.2;

/// Precomputed central-difference gradients for a frame, shared when many
/// descriptors are taken from the same image.
pub struct GradientField {
    width: usize,
    height: usize,
    gx: Vec<f32>,
    gy: Vec<f32>,
}

impl GradientField {
    pub fn new(frame: &Frame) -> GradientField {
        let w = frame.width();
        let h = frame.height();
        let mut gx = vec![0.0; w * h];
        let mut gy = vec![0.0; w * h];
        for y in 0..h {
            for x in 0..w {
                let i = y * w + x;
                gx[i] = (frame.get_clamped(x as i32 + 1, y as i32)
                    - frame.get_clamped(x as i32 - 1, y as i32))
                    / 2.0;
                gy[i] = (frame.get_clamped(x as i32, y as i32 + 1)
                    - frame.get_clamped(x as i32, y as i32 - 1))
                    / 2.0;
            }
        }
        GradientField { width: w, height: h, gx, gy }
    }

    #[inline]
    fn at_clamped(&self, x: i32, y: i32) -> (f32, f32) {
        let x = x.clamp(0, self.width as i32 - 1) as usize;
        let y = y.clamp(0, self.height as i32 - 1) as usize;
        let i = y * self.width + x;
        (self.gx[i], self.gy[i])
    }
}

/// Descriptor at `center` over a `patch_size` square patch.
pub fn sift_like(frame: &Frame, center: Point, patch_size: u32) -> Descriptor {
    let grads = GradientField::new(frame);
    sift_like_from_gradients(&grads, center, patch_size)
}

/// Same as [`sift_like`] but reusing a precomputed gradient field.
pub fn sift_like_from_gradients(grads: &GradientField, center: Point, patch_size: u32) -> Descriptor {
    let patch = patch_size.max(SPATIAL_CELLS as u32) as i32;
    let half = patch / 2;
    let x0 = center.x.round() as i32 - half;
    let y0 = center.y.round() as i32 - half;
    let clamped = x0 < 0
        || y0 < 0
        || x0 + patch > grads.width as i32
        || y0 + patch > grads.height as i32;

    let mut hist = vec![0.0f32; SPATIAL_CELLS * SPATIAL_CELLS * ORI_BINS];
    let cell = patch as f32 / SPATIAL_CELLS as f32;
    let sigma = patch as f32 / 2.0;
    let inv_two_sigma2 = 1.0 / (2.0 * sigma * sigma);

    for py in 0..patch {
        for px in 0..patch {
            let (gx, gy) = grads.at_clamped(x0 + px, y0 + py);
            let mag = (gx * gx + gy * gy).sqrt();
            if mag == 0.0 {
                continue;
            }
            let du = px as f32 + 0.5 - patch as f32 / 2.0;
            let dv = py as f32 + 0.5 - patch as f32 / 2.0;
            let weight = (-(du * du + dv * dv) * inv_two_sigma2).exp();

            let angle = gy.atan2(gx); // [-pi, pi]
            let bin_f = (angle + std::f32::consts::PI) / (2.0 * std::f32::consts::PI) * ORI_BINS as f32;
            let bin0 = bin_f.floor() as usize % ORI_BINS;
            let bin1 = (bin0 + 1) % ORI_BINS;
            let frac = bin_f - bin_f.floor();

            let cx = ((px as f32 / cell) as usize).min(SPATIAL_CELLS - 1);
            let cy = ((py as f32 / cell) as usize).min(SPATIAL_CELLS - 1);
            let base = (cy * SPATIAL_CELLS + cx) * ORI_BINS;
            hist[base + bin0] += weight * mag * (1.0 - frac);
            hist[base + bin1] += weight * mag * frac;
        }
    }

    normalize_clip_renormalize(&mut hist);
    Descriptor {
        values: hist,
        kind: DescriptorKind::Sift,
        anchor: center,
        patch_size,
        clamped,
    }
}

fn normalize_clip_renormalize(v: &mut [f32]) {
    let norm = v.iter().map(|x| x * x).sum::<f32>().sqrt();
    if norm <= 1e-12 {
        v.iter_mut().for_each(|x| *x = 0.0);
        return;
    }
    v.iter_mut().for_each(|x| *x = (*x / norm).min(CLIP));
    let norm2 = v.iter().map(|x| x * x).sum::<f32>().sqrt();
    if norm2 > 1e-12 {
        v.iter_mut().for_each(|x| *x /= norm2);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_patch_zero_descriptor() {
        let f = Frame::from_fn(32, 32, 0, |_, _| 0.4);
        let d = sift_like(&f, Point::new(16.0, 16.0), 16);
        assert_eq!(d.values.len(), SIFT_DIM);
        assert!(d.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn brightness_offset_invariance() {
        let f1 = Frame::from_fn(32, 32, 0, |x, y| ((x * 7 + y * 3) % 11) as f32 / 22.0);
        let f2 = Frame::from_fn(32, 32, 0, |x, y| 0.3 + ((x * 7 + y * 3) % 11) as f32 / 22.0);
        let d1 = sift_like(&f1, Point::new(16.0, 16.0), 16);
        let d2 = sift_like(&f2, Point::new(16.0, 16.0), 16);
        for (a, b) in d1.values.iter().zip(&d2.values) {
            assert!((a - b).abs() < 1e-5);
        }
    }

    #[test]
    fn vertical_step_edge_concentrates_horizontal_bins() {
        // Step at x=16: gradient is purely +x, angle 0, which lands in bin 4
        // (angle + pi covers half the circle).
        let f = Frame::from_fn(32, 32, 0, |x, _| if x < 16 { 0.2 } else { 0.8 });
        let d = sift_like(&f, Point::new(16.0, 16.0), 16);
        let mut by_bin = [0.0f32; ORI_BINS];
        for (i, v) in d.values.iter().enumerate() {
            by_bin[i % ORI_BINS] += v;
        }
        let total: f32 = by_bin.iter().sum();
        // +x gradients, angle 0 -> bin_f = 4.0 exactly; splitting puts all
        // mass in bin 4 (frac = 0).
        assert!(total > 0.0);
        assert!(by_bin[4] / total > 0.99, "bins: {by_bin:?}");
    }

    #[test]
    fn jitter_small_noise_patches_far() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let mut tex = vec![0.0f32; 40 * 40];
        // Smooth texture: random lattice blurred once, so 1-px jitter moves
        // the descriptor only slightly.
        let raw: Vec<f32> = (0..40 * 40).map(|_| rng.gen()).collect();
        for y in 1..39 {
            for x in 1..39 {
                let mut sum = 0.0;
                for dy in -1i32..=1 {
                    for dx in -1i32..=1 {
                        sum += raw[((y as i32 + dy) * 40 + x as i32 + dx) as usize];
                    }
                }
                tex[y * 40 + x] = sum / 9.0;
            }
        }
        let f = Frame::from_pixels(40, 40, tex, 0).unwrap();
        let d0 = sift_like(&f, Point::new(20.0, 20.0), 16);
        let d1 = sift_like(&f, Point::new(21.0, 20.0), 16);
        assert!(d0.l2(&d1) < 0.5, "jitter distance {}", d0.l2(&d1));

        // Independent smooth random textures are far apart.
        let smooth_noise = |seed: u64| {
            let mut r = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let raw: Vec<f32> = (0..32 * 32).map(|_| r.gen()).collect();
            let mut out = vec![0.5f32; 32 * 32];
            for y in 1..31 {
                for x in 1..31 {
                    let mut sum = 0.0;
                    for dy in -1i32..=1 {
                        for dx in -1i32..=1 {
                            sum += raw[((y as i32 + dy) * 32 + x as i32 + dx) as usize];
                        }
                    }
                    out[y * 32 + x] = sum / 9.0;
                }
            }
            Frame::from_pixels(32, 32, out, 0).unwrap()
        };
        let fa = smooth_noise(101);
        let fb = smooth_noise(202);
        let da = sift_like(&fa, Point::new(16.0, 16.0), 16);
        let db = sift_like(&fb, Point::new(16.0, 16.0), 16);
        assert!(da.l2(&db) > 0.8, "noise distance {}", da.l2(&db));
    }

    #[test]
    fn norm_at_most_one() {
        let f = Frame::from_fn(32, 32, 0, |x, y| ((x ^ y) % 7) as f32 / 7.0);
        let d = sift_like(&f, Point::new(16.0, 16.0), 16);
        let norm: f32 = d.values.iter().map(|v| v * v).sum::<f32>().sqrt();
        assert!(norm <= 1.0 + 1e-6);
    }

    #[test]
    fn border_patch_sets_clamped_flag() {
        let f = Frame::from_fn(20, 20, 0, |x, _| x as f32 / 20.0);
        let d = sift_like(&f, Point::new(2.0, 2.0), 16);
        assert!(d.clamped);
        let d2 = sift_like(&f, Point::new(10.0, 10.0), 16);
        assert!(!d2.clamped);
    }
}
