//! Star-structured object/part model with two-frame adaptive inference.
//!
//! An object is a center plus N parts. Part appearance is a KDE over
//! nearest-neighbor descriptor distances (the ANN index), part geometry a
//! two-component Gaussian mixture over center-to-part offsets (a training
//! component and an online component updated during tracking). Inference
//! maximizes the joint score over a candidate-center grid; parts are
//! conditionally independent given the center, so a per-part max inside a
//! search window is exact.
//!
//! The two-frame mode adds temporal consistency terms: the previous
//! interpretation plus measured region velocities imply Gaussian predicted
//! locations for the center and every part.

use serde::{Deserialize, Serialize};

use crate::annkde::{AnnIndex, KdeParams, NormMode, DEFAULT_KDE_K};
use crate::error::{Error, Result};
use crate::features::{sift_like_from_gradients, GradientField};
use crate::flow::{region_velocity_flow_weighted, FlowField, Velocity};
use crate::frameio::Frame;
use crate::geom::Point;

/// A 2-D Gaussian over offsets with online mean/covariance updates.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Gaussian2 {
    pub mean: [f64; 2],
    /// Covariance entries (xx, xy, yy), regularized by the floor.
    pub cov: [f64; 3],
    pub n: usize,
}

impl Gaussian2 {
    pub fn fit(samples: &[(f64, f64)], floor: f64) -> Gaussian2 {
        let n = samples.len().max(1) as f64;
        let mx = samples.iter().map(|s| s.0).sum::<f64>() / n;
        let my = samples.iter().map(|s| s.1).sum::<f64>() / n;
        let mut xx = 0.0;
        let mut xy = 0.0;
        let mut yy = 0.0;
        for s in samples {
            xx += (s.0 - mx) * (s.0 - mx);
            xy += (s.0 - mx) * (s.1 - my);
            yy += (s.1 - my) * (s.1 - my);
        }
        Gaussian2 {
            mean: [mx, my],
            cov: [xx / n + floor, xy / n, yy / n + floor],
            n: samples.len(),
        }
    }

    /// Running update with a new sample, re-applying the floor.
    pub fn update(&mut self, sample: (f64, f64), floor: f64) {
        // Recover raw second moments, add the sample, re-floor.
        let n = self.n as f64;
        let (mx, my) = (self.mean[0], self.mean[1]);
        let sxx = (self.cov[0] - floor) * n + n * mx * mx;
        let sxy = self.cov[1] * n + n * mx * my;
        let syy = (self.cov[2] - floor) * n + n * my * my;
        let n1 = n + 1.0;
        let (sx, sy) = (n * mx + sample.0, n * my + sample.1);
        let (mx1, my1) = (sx / n1, sy / n1);
        let sxx1 = sxx + sample.0 * sample.0;
        let sxy1 = sxy + sample.0 * sample.1;
        let syy1 = syy + sample.1 * sample.1;
        self.mean = [mx1, my1];
        self.cov = [
            (sxx1 / n1 - mx1 * mx1).max(0.0) + floor,
            sxy1 / n1 - mx1 * my1,
            (syy1 / n1 - my1 * my1).max(0.0) + floor,
        ];
        self.n += 1;
    }

    pub fn logpdf(&self, off: (f64, f64)) -> f64 {
        let (dx, dy) = (off.0 - self.mean[0], off.1 - self.mean[1]);
        let (a, b, c) = (self.cov[0], self.cov[1], self.cov[2]);
        let det = (a * c - b * b).max(1e-12);
        let quad = (c * dx * dx - 2.0 * b * dx * dy + a * dy * dy) / det;
        -0.5 * quad - 0.5 * det.ln() - (2.0 * std::f64::consts::PI).ln()
    }

    /// Largest marginal standard deviation; sizes search windows.
    pub fn max_std(&self) -> f64 {
        self.cov[0].max(self.cov[2]).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UpdateMode {
    /// Insert new appearances and fold offsets into the online Gaussian.
    Gradual,
    /// Replace appearance and geometry with the current frame's.
    Replace,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PartModelParams {
    /// Descriptor patch side at part locations.
    pub patch_size: u32,
    /// Candidate-center grid stride.
    pub center_stride: usize,
    /// Appearance-map lattice stride (part locations snap to it).
    pub appearance_stride: usize,
    /// Temporal std dev of the object center (Eq.-3 term).
    pub sigma_c: f64,
    /// Temporal std dev of each part.
    pub sigma_i: f64,
    /// Covariance regularization floor, px^2.
    pub cov_floor: f64,
    /// Part search window half-extent in multiples of geometry std.
    pub window_sigmas: f64,
    /// Online geometry participates once it has this many samples.
    pub min_online_samples: usize,
    /// ANN search approximation for appearance scoring.
    pub kde_epsilon: f64,
    /// Leaf-visit budget for appearance scoring (usize::MAX = unbounded).
    pub kde_max_leaves: usize,
    /// KDE exponent convention.
    pub norm_mode: NormMode,
}

impl Default for PartModelParams {
    fn default() -> Self {
        PartModelParams {
            patch_size: 16,
            center_stride: 2,
            appearance_stride: 2,
            sigma_c: 4.0,
            sigma_i: 3.0,
            cov_floor: 1.0,
            window_sigmas: 3.0,
            min_online_samples: 5,
            kde_epsilon: 0.0,
            kde_max_leaves: usize::MAX,
            norm_mode: NormMode::Unsquared,
        }
    }
}

/// One part: appearance store plus offset geometry.
#[derive(Debug, Clone)]
pub struct Part {
    pub index: AnnIndex,
    pub kde: KdeParams,
    pub train_geom: Gaussian2,
    pub online_geom: Option<Gaussian2>,
    /// Median training-time posterior; the success-flag gate.
    pub success_threshold: f64,
}

impl Part {
    /// log P(X|C) under the two-component mixture. The online component
    /// joins once it has enough samples; weights are uniform.
    pub fn geometry_logpdf(&self, off: (f64, f64), params: &PartModelParams) -> f64 {
        match &self.online_geom {
            Some(online) if online.n >= params.min_online_samples => {
                let a = self.train_geom.logpdf(off);
                let b = online.logpdf(off);
                // log(0.5 e^a + 0.5 e^b), stabilized.
                let m = a.max(b);
                m + (0.5 * (a - m).exp() + 0.5 * (b - m).exp()).ln()
            }
            _ => self.train_geom.logpdf(off),
        }
    }

    fn window_centers(&self, params: &PartModelParams) -> Vec<(f64, f64, f64)> {
        let mut out = vec![(
            self.train_geom.mean[0],
            self.train_geom.mean[1],
            self.train_geom.max_std(),
        )];
        if let Some(online) = &self.online_geom {
            if online.n >= params.min_online_samples {
                out.push((online.mean[0], online.mean[1], online.max_std()));
            }
        }
        out
    }
}

/// The full object interpretation of one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct Interpretation {
    pub center: Point,
    pub parts: Vec<Point>,
    pub part_success: Vec<bool>,
    pub part_scores: Vec<f64>,
    pub score: f64,
}

/// Dense detection-confidence grid (non-negative, finite).
#[derive(Debug, Clone, PartialEq)]
pub struct VotingMap {
    pub width: usize,
    pub height: usize,
    values: Vec<f32>,
}

impl VotingMap {
    pub fn new(width: usize, height: usize) -> VotingMap {
        VotingMap {
            width,
            height,
            values: vec![0.0; width * height],
        }
    }

    pub fn from_values(width: usize, height: usize, values: Vec<f32>) -> Result<VotingMap> {
        if values.len() != width * height {
            return Err(Error::Dimension("voting map size mismatch".into()));
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::Param("voting map must be finite and non-negative".into()));
        }
        Ok(VotingMap { width, height, values })
    }

    #[inline]
    pub fn at(&self, x: usize, y: usize) -> f32 {
        self.values[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: f32) {
        self.values[y * self.width + x] = v;
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn argmax(&self) -> (Point, f32) {
        let mut best = 0usize;
        for i in 1..self.values.len() {
            if self.values[i] > self.values[best] {
                best = i;
            }
        }
        (
            Point::new((best % self.width) as f32, (best / self.width) as f32),
            self.values[best],
        )
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().map(|&v| v as f64).sum()
    }
}

/// Object center plus part centers on one training image.
#[derive(Debug, Clone)]
pub struct TrainAnnotation {
    pub center: Point,
    pub parts: Vec<Point>,
}

/// Memoized per-part appearance log-scores on a lattice.
pub struct AppearanceMap {
    stride: usize,
    lat_w: usize,
    lat_h: usize,
    width: usize,
    height: usize,
    values: Vec<f64>,
}

impl AppearanceMap {
    /// Log appearance score at the lattice point nearest to (x, y).
    pub fn at(&self, x: f64, y: f64) -> f64 {
        let lx = ((x / self.stride as f64).round() as usize).min(self.lat_w - 1);
        let ly = ((y / self.stride as f64).round() as usize).min(self.lat_h - 1);
        self.values[ly * self.lat_w + lx]
    }

    /// Lattice points covering the frame.
    pub fn lattice(&self) -> impl Iterator<Item = Point> + '_ {
        let s = self.stride;
        (0..self.lat_h).flat_map(move |ly| (0..self.lat_w).map(move |lx| Point::new((lx * s) as f32, (ly * s) as f32)))
    }

    pub fn snap(&self, p: Point) -> Point {
        let lx = ((p.x as f64 / self.stride as f64).round() as usize).min(self.lat_w - 1);
        let ly = ((p.y as f64 / self.stride as f64).round() as usize).min(self.lat_h - 1);
        Point::new((lx * self.stride) as f32, (ly * self.stride) as f32)
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }
}

#[derive(Debug, Clone)]
pub struct PartModel {
    pub parts: Vec<Part>,
    pub params: PartModelParams,
    /// Uniform log prior over centers; a constant that must not affect the
    /// interpretation.
    pub log_p_center: f64,
    /// Acceptance threshold on log scores, calibrated at init.
    pub accept_threshold: f64,
    /// Half-extent of the object region used for velocity measurement.
    pub object_half: usize,
}

impl PartModel {
    /// Supervised initialization from annotated static images.
    pub fn init_static(images: &[Frame], annotations: &[TrainAnnotation], params: PartModelParams) -> Result<PartModel> {
        if images.len() < 2 {
            return Err(Error::InsufficientData(format!(
                "need at least 2 training images, got {}",
                images.len()
            )));
        }
        if images.len() != annotations.len() {
            return Err(Error::InsufficientData("one annotation per image required".into()));
        }
        let n_parts = annotations[0].parts.len();
        if n_parts == 0 || annotations.iter().any(|a| a.parts.len() != n_parts) {
            return Err(Error::InsufficientData("annotations must share a part count >= 1".into()));
        }

        let grads: Vec<GradientField> = images.iter().map(GradientField::new).collect();
        let mut parts = Vec::with_capacity(n_parts);
        let mut max_off: f64 = 0.0;
        for pi in 0..n_parts {
            let mut index = AnnIndex::new(crate::features::SIFT_DIM);
            let mut offsets = Vec::with_capacity(images.len());
            for (img, (g, ann)) in grads.iter().zip(annotations).enumerate() {
                let d = sift_like_from_gradients(g, ann.parts[pi], params.patch_size);
                index.insert(&d.values, img as u64)?;
                let off = (
                    (ann.parts[pi].x - ann.center.x) as f64,
                    (ann.parts[pi].y - ann.center.y) as f64,
                );
                offsets.push(off);
                max_off = max_off.max(off.0.abs()).max(off.1.abs());
            }
            let train_geom = Gaussian2::fit(&offsets, params.cov_floor);
            let h = index.median_neighbor_distance();
            let kde = KdeParams {
                h,
                k: DEFAULT_KDE_K.min(index.len()),
                norm_mode: params.norm_mode,
            };
            parts.push(Part {
                index,
                kde,
                train_geom,
                online_geom: None,
                success_threshold: f64::NEG_INFINITY, // calibrated below
            });
        }

        let mut model = PartModel {
            parts,
            params,
            log_p_center: 0.0,
            accept_threshold: f64::NEG_INFINITY,
            object_half: (max_off.ceil() as usize + params.patch_size as usize / 2).max(8),
        };

        // Calibrate per-part success thresholds (median training posterior
        // at the annotated locations) and the model acceptance threshold
        // (lowest training self-detection score).
        let mut per_part: Vec<Vec<f64>> = vec![Vec::new(); n_parts];
        for (g, ann) in grads.iter().zip(annotations) {
            for pi in 0..n_parts {
                let off = (
                    (ann.parts[pi].x - ann.center.x) as f64,
                    (ann.parts[pi].y - ann.center.y) as f64,
                );
                let d = sift_like_from_gradients(g, ann.parts[pi], model.params.patch_size);
                let app = model.appearance_log_at(pi, &d.values);
                per_part[pi].push(model.parts[pi].geometry_logpdf(off, &model.params) + app);
            }
        }
        for (pi, scores) in per_part.iter_mut().enumerate() {
            scores.sort_by(f64::total_cmp);
            model.parts[pi].success_threshold = scores[scores.len() / 2];
        }
        let mut self_scores: Vec<f64> = images
            .iter()
            .map(|img| model.detect_static(img).0.score)
            .collect();
        self_scores.sort_by(f64::total_cmp);
        model.accept_threshold = self_scores[0];
        Ok(model)
    }

    pub fn n_parts(&self) -> usize {
        self.parts.len()
    }

    /// Log KDE appearance score of a descriptor under part `pi`.
    pub fn appearance_log_at(&self, pi: usize, descriptor: &[f32]) -> f64 {
        let part = &self.parts[pi];
        let score = part
            .index
            .score(descriptor, &part.kde, self.params.kde_epsilon, self.params.kde_max_leaves)
            .unwrap_or(0.0);
        score.max(1e-300).ln()
    }

    /// Dense per-part appearance maps on the lattice.
    pub fn appearance_maps(&self, frame: &Frame) -> Vec<AppearanceMap> {
        let grads = GradientField::new(frame);
        let s = self.params.appearance_stride;
        let lat_w = frame.width().div_ceil(s);
        let lat_h = frame.height().div_ceil(s);
        (0..self.parts.len())
            .map(|pi| {
                let mut values = Vec::with_capacity(lat_w * lat_h);
                for ly in 0..lat_h {
                    for lx in 0..lat_w {
                        let p = Point::new((lx * s) as f32, (ly * s) as f32);
                        let d = sift_like_from_gradients(&grads, p, self.params.patch_size);
                        values.push(self.appearance_log_at(pi, &d.values));
                    }
                }
                AppearanceMap {
                    stride: s,
                    lat_w,
                    lat_h,
                    width: frame.width(),
                    height: frame.height(),
                    values,
                }
            })
            .collect()
    }

    /// Lattice points in the part search window around center `c`.
    pub fn part_window(&self, pi: usize, c: Point, maps: &AppearanceMap) -> Vec<Point> {
        let s = self.params.appearance_stride as f64;
        let mut pts = Vec::new();
        let mut seen = std::collections::BTreeSet::new();
        for (mx, my, std) in self.parts[pi].window_centers(&self.params) {
            let r = (self.params.window_sigmas * std).max(2.0 * s);
            let cx = c.x as f64 + mx;
            let cy = c.y as f64 + my;
            let x0 = (((cx - r) / s).floor() * s).max(0.0);
            let y0 = (((cy - r) / s).floor() * s).max(0.0);
            let mut y = y0;
            while y <= (cy + r).min(maps.height as f64 - 1.0) {
                let mut x = x0;
                while x <= (cx + r).min(maps.width as f64 - 1.0) {
                    let key = ((x / s) as i64, (y / s) as i64);
                    if seen.insert(key) {
                        pts.push(Point::new(x as f32, y as f32));
                    }
                    x += s;
                }
                y += s;
            }
        }
        pts
    }

    /// Static detection: maximize `log P(C) + sum_i max_X [log P(X|C) +
    /// log P(F|X)]` over the candidate grid.
    pub fn detect_static(&self, frame: &Frame) -> (Interpretation, VotingMap) {
        let maps = self.appearance_maps(frame);
        self.detect_with_temporal(frame, &maps, None)
    }

    /// Two-frame inference: the previous interpretation plus measured
    /// velocities add Gaussian consistency terms for the center and parts.
    pub fn infer_two_frame(&self, prev: &Interpretation, frame_t1: &Frame, flow: &FlowField) -> Interpretation {
        let maps = self.appearance_maps(frame_t1);
        let v_c = region_velocity_flow_weighted(flow, prev.center, self.object_half);
        let v_parts: Vec<Velocity> = prev
            .parts
            .iter()
            .map(|p| region_velocity_flow_weighted(flow, *p, self.params.patch_size as usize / 2))
            .collect();
        let temporal = Temporal {
            center_mean: (prev.center.x as f64 + v_c.vx as f64, prev.center.y as f64 + v_c.vy as f64),
            part_means: prev
                .parts
                .iter()
                .zip(&v_parts)
                .map(|(p, v)| (p.x as f64 + v.vx as f64, p.y as f64 + v.vy as f64))
                .collect(),
        };
        self.detect_with_temporal(frame_t1, &maps, Some(&temporal)).0
    }

    /// Shared maximization. Exposed for the exactness oracle via
    /// `appearance_maps` + `part_window` + `geometry_logpdf`.
    pub fn detect_with_temporal(
        &self,
        frame: &Frame,
        maps: &[AppearanceMap],
        temporal: Option<&Temporal>,
    ) -> (Interpretation, VotingMap) {
        let stride = self.params.center_stride;
        let two_sc2 = 2.0 * self.params.sigma_c * self.params.sigma_c;
        let two_si2 = 2.0 * self.params.sigma_i * self.params.sigma_i;

        let mut best: Option<Interpretation> = None;
        let mut votes = VotingMap::new(frame.width(), frame.height());
        let mut raw_scores: Vec<(usize, usize, f64)> = Vec::new();
        let mut max_score = f64::NEG_INFINITY;

        let mut cy = 0usize;
        while cy < frame.height() {
            let mut cx = 0usize;
            while cx < frame.width() {
                let c = Point::new(cx as f32, cy as f32);
                let mut score = self.log_p_center;
                if let Some(t) = temporal {
                    let dx = cx as f64 - t.center_mean.0;
                    let dy = cy as f64 - t.center_mean.1;
                    score += -(dx * dx + dy * dy) / two_sc2;
                }
                let mut parts = Vec::with_capacity(self.parts.len());
                let mut part_scores = Vec::with_capacity(self.parts.len());
                for pi in 0..self.parts.len() {
                    let mut best_p = f64::NEG_INFINITY;
                    let mut best_x = c;
                    for x in self.part_window(pi, c, &maps[pi]) {
                        let off = ((x.x - c.x) as f64, (x.y - c.y) as f64);
                        let mut s = self.parts[pi].geometry_logpdf(off, &self.params)
                            + maps[pi].at(x.x as f64, x.y as f64);
                        if let Some(t) = temporal {
                            let dx = x.x as f64 - t.part_means[pi].0;
                            let dy = x.y as f64 - t.part_means[pi].1;
                            s += -(dx * dx + dy * dy) / two_si2;
                        }
                        if s > best_p {
                            best_p = s;
                            best_x = x;
                        }
                    }
                    score += best_p;
                    parts.push(best_x);
                    part_scores.push(best_p);
                }
                raw_scores.push((cx, cy, score));
                if score > max_score {
                    max_score = score;
                }
                let is_better = best.as_ref().map_or(true, |b| score > b.score);
                if is_better {
                    let part_success = part_scores
                        .iter()
                        .enumerate()
                        .map(|(pi, &s)| s >= self.parts[pi].success_threshold)
                        .collect();
                    best = Some(Interpretation {
                        center: c,
                        parts,
                        part_success,
                        part_scores,
                        score,
                    });
                }
                cx += stride;
            }
            cy += stride;
        }

        // Confidence grid: exp(score - max), spread over each stride block.
        for (cx, cy, s) in raw_scores {
            let v = ((s - max_score).exp()) as f32;
            for y in cy..(cy + stride).min(frame.height()) {
                for x in cx..(cx + stride).min(frame.width()) {
                    votes.set(x, y, v);
                }
            }
        }
        (best.expect("at least one candidate center"), votes)
    }

    /// Online model update after a detection.
    pub fn update(&mut self, frame: &Frame, interp: &Interpretation, mode: UpdateMode) {
        let grads = GradientField::new(frame);
        for pi in 0..self.parts.len() {
            if !interp.part_success[pi] {
                continue; // failed parts leave the model untouched
            }
            let d = sift_like_from_gradients(&grads, interp.parts[pi], self.params.patch_size);
            let off = (
                (interp.parts[pi].x - interp.center.x) as f64,
                (interp.parts[pi].y - interp.center.y) as f64,
            );
            let part = &mut self.parts[pi];
            match mode {
                UpdateMode::Gradual => {
                    part.index
                        .insert(&d.values, frame.index as u64)
                        .expect("descriptor dims fixed");
                    part.kde.k = DEFAULT_KDE_K.min(part.index.len());
                    match &mut part.online_geom {
                        Some(g) => g.update(off, self.params.cov_floor),
                        None => {
                            let mut g = Gaussian2::fit(&[off], self.params.cov_floor);
                            g.n = 1;
                            part.online_geom = Some(g);
                        }
                    }
                }
                UpdateMode::Replace => {
                    let mut index = AnnIndex::new(part.index.dim());
                    index.insert(&d.values, frame.index as u64).expect("descriptor dims fixed");
                    part.index = index;
                    part.kde.k = 1;
                    part.train_geom = Gaussian2::fit(&[off], self.params.cov_floor);
                    part.online_geom = None;
                }
            }
        }
    }

    /// Per-frame static detection with a multiplicative threshold decay
    /// after every accepted frame (applied in log space), floored at 10%
    /// of the initial threshold.
    pub fn detect_with_decay(&self, frames: &[Frame], decay_rate: f64) -> Vec<DecayDetection> {
        let mut log_threshold = self.accept_threshold;
        let floor = self.accept_threshold + (0.1f64).ln();
        let mut out = Vec::with_capacity(frames.len());
        for frame in frames {
            let (interp, _) = self.detect_static(frame);
            let accepted = interp.score >= log_threshold;
            out.push(DecayDetection {
                frame: frame.index,
                interpretation: interp,
                accepted,
                threshold: log_threshold,
            });
            if accepted && decay_rate > 0.0 {
                log_threshold = (log_threshold + (1.0 - decay_rate).ln()).max(floor);
            }
        }
        out
    }

    /// Serialize: `u32 LE` JSON header length, JSON header, then one
    /// ANNKDE01 block per part.
    pub fn to_bytes(&self) -> Vec<u8> {
        #[derive(Serialize)]
        struct Header<'a> {
            params: &'a PartModelParams,
            log_p_center: f64,
            accept_threshold: f64,
            object_half: usize,
            parts: Vec<PartHeader>,
        }
        let blocks: Vec<Vec<u8>> = self.parts.iter().map(|p| p.index.to_bytes()).collect();
        let header = Header {
            params: &self.params,
            log_p_center: self.log_p_center,
            accept_threshold: self.accept_threshold,
            object_half: self.object_half,
            parts: self
                .parts
                .iter()
                .zip(&blocks)
                .map(|(p, b)| PartHeader {
                    kde: p.kde,
                    train_geom: p.train_geom.clone(),
                    online_geom: p.online_geom.clone(),
                    success_threshold: p.success_threshold,
                    block_len: b.len(),
                })
                .collect(),
        };
        let json = serde_json::to_vec(&header).expect("model header serializes");
        let mut out = Vec::with_capacity(4 + json.len() + blocks.iter().map(Vec::len).sum::<usize>());
        out.extend_from_slice(&(json.len() as u32).to_le_bytes());
        out.extend_from_slice(&json);
        for b in blocks {
            out.extend_from_slice(&b);
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<PartModel> {
        if bytes.len() < 4 {
            return Err(Error::Format("model file too short".into()));
        }
        let jlen = u32::from_le_bytes(bytes[0..4].try_into().unwrap()) as usize;
        if bytes.len() < 4 + jlen {
            return Err(Error::Format("model header truncated".into()));
        }
        #[derive(Deserialize)]
        struct Header {
            params: PartModelParams,
            log_p_center: f64,
            accept_threshold: f64,
            object_half: usize,
            parts: Vec<PartHeader>,
        }
        let header: Header = serde_json::from_slice(&bytes[4..4 + jlen])
            .map_err(|e| Error::Format(format!("bad model header: {e}")))?;
        let mut off = 4 + jlen;
        let mut parts = Vec::with_capacity(header.parts.len());
        for ph in header.parts {
            if bytes.len() < off + ph.block_len {
                return Err(Error::Format("model block truncated".into()));
            }
            let index = AnnIndex::from_bytes(&bytes[off..off + ph.block_len])?;
            off += ph.block_len;
            parts.push(Part {
                index,
                kde: ph.kde,
                train_geom: ph.train_geom,
                online_geom: ph.online_geom,
                success_threshold: ph.success_threshold,
            });
        }
        Ok(PartModel {
            parts,
            params: header.params,
            log_p_center: header.log_p_center,
            accept_threshold: header.accept_threshold,
            object_half: header.object_half,
        })
    }
}

#[derive(Serialize, Deserialize)]
struct PartHeader {
    kde: KdeParams,
    train_geom: Gaussian2,
    online_geom: Option<Gaussian2>,
    success_threshold: f64,
    block_len: usize,
}

/// Predicted means of the Eq.-3 consistency Gaussians.
#[derive(Debug, Clone)]
pub struct Temporal {
    pub center_mean: (f64, f64),
    pub part_means: Vec<(f64, f64)>,
}

/// Result row of [`PartModel::detect_with_decay`].
#[derive(Debug, Clone)]
pub struct DecayDetection {
    pub frame: usize,
    pub interpretation: Interpretation,
    pub accepted: bool,
    pub threshold: f64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Two-part object: textured squares at fixed offsets from the center.
    fn render_object(center: Point, seed: u64) -> Frame {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let tex: Vec<f32> = (0..400).map(|_| rng.gen()).collect();
        Frame::from_fn(96, 72, 0, |x, y| {
            let p = Point::new(x as f32, y as f32);
            for (k, off) in [(-14.0f32, 0.0f32), (14.0, 0.0)].iter().enumerate() {
                let px = center.x + off.0;
                let py = center.y + off.1;
                if (p.x - px).abs() <= 6.0 && (p.y - py).abs() <= 6.0 {
                    let ix = (p.x - px + 6.0) as usize;
                    let iy = (p.y - py + 6.0) as usize;
                    return 0.15 + 0.7 * tex[(k * 169 + iy * 13 + ix) % 400];
                }
            }
            0.5
        })
    }

    fn annotation(center: Point) -> TrainAnnotation {
        TrainAnnotation {
            center,
            parts: vec![center.add(-14.0, 0.0), center.add(14.0, 0.0)],
        }
    }

    fn train_model() -> PartModel {
        let centers = [
            Point::new(40.0, 36.0),
            Point::new(52.0, 32.0),
            Point::new(46.0, 40.0),
        ];
        let images: Vec<Frame> = centers.iter().map(|c| render_object(*c, 5)).collect();
        let anns: Vec<TrainAnnotation> = centers.iter().map(|c| annotation(*c)).collect();
        PartModel::init_static(&images, &anns, PartModelParams::default()).unwrap()
    }

    #[test]
    fn init_requires_two_images() {
        let img = render_object(Point::new(40.0, 36.0), 5);
        let err = PartModel::init_static(
            &[img],
            &[annotation(Point::new(40.0, 36.0))],
            PartModelParams::default(),
        );
        assert!(matches!(err, Err(Error::InsufficientData(_))));
    }

    #[test]
    fn identical_offsets_hit_covariance_floor() {
        let model = train_model();
        for part in &model.parts {
            assert!((part.train_geom.cov[0] - 1.0).abs() < 1e-9);
            assert!((part.train_geom.cov[2] - 1.0).abs() < 1e-9);
            assert!(part.train_geom.cov[1].abs() < 1e-9);
        }
        assert!((model.parts[0].train_geom.mean[0] + 14.0).abs() < 1e-9);
        assert!((model.parts[1].train_geom.mean[0] - 14.0).abs() < 1e-9);
    }

    #[test]
    fn detects_training_images_at_annotations() {
        let model = train_model();
        let c = Point::new(44.0, 34.0);
        let img = render_object(c, 5);
        let (interp, votes) = model.detect_static(&img);
        assert!(interp.center.distance(c) <= 4.0, "center {:?}", interp.center);
        for (pi, off) in [(-14.0f32, 0.0f32), (14.0, 0.0)].iter().enumerate() {
            let want = c.add(off.0, off.1);
            assert!(
                interp.parts[pi].distance(want) <= 3.0,
                "part {pi} at {:?} vs {:?}",
                interp.parts[pi],
                want
            );
        }
        // VotingMap argmax matches the interpretation center block.
        let (vm_argmax, _) = votes.argmax();
        assert!(vm_argmax.distance(interp.center) <= model.params.center_stride as f32 * 1.5);
    }

    #[test]
    fn uniform_center_prior_does_not_change_interpretation() {
        let model = train_model();
        let img = render_object(Point::new(44.0, 34.0), 5);
        let (a, _) = model.detect_static(&img);
        let mut shifted = model.clone();
        shifted.log_p_center = 7.25;
        let (b, _) = shifted.detect_static(&img);
        assert_eq!(a.center, b.center);
        assert_eq!(a.parts, b.parts);
        assert!((b.score - a.score - 7.25).abs() < 1e-9);
    }

    #[test]
    fn temporal_term_maximized_at_predicted_position() {
        // With a constant appearance term the argmax must sit at
        // C^p + V dt regardless of sigma.
        let model = train_model();
        let frame = Frame::from_fn(96, 72, 1, |_, _| 0.5); // uniform: appearance constant
        let prev = Interpretation {
            center: Point::new(40.0, 36.0),
            parts: vec![Point::new(26.0, 36.0), Point::new(54.0, 36.0)],
            part_success: vec![true, true],
            part_scores: vec![0.0, 0.0],
            score: 0.0,
        };
        for (vx, vy) in [(0.0, 0.0), (3.0, 0.0)] {
            let mut dx = vec![0.0f32; 96 * 72];
            let mut dyv = vec![0.0f32; 96 * 72];
            for v in dx.iter_mut() {
                *v = vx;
            }
            for v in dyv.iter_mut() {
                *v = vy;
            }
            let flow = FlowField::from_components(96, 72, dx, dyv).unwrap();
            for sigma in [2.0, 6.0] {
                let mut m = model.clone();
                m.params.sigma_c = sigma;
                let interp = m.infer_two_frame(&prev, &frame, &flow);
                let want = prev.center.add(vx, vy);
                assert!(
                    interp.center.distance(want) <= m.params.center_stride as f32,
                    "sigma {sigma} v=({vx},{vy}): got {:?} want {:?}",
                    interp.center,
                    want
                );
            }
        }
    }

    #[test]
    fn gradual_update_grows_replace_keeps_size() {
        let mut gradual = train_model();
        let mut replace = train_model();
        let img = render_object(Point::new(44.0, 34.0), 5);
        let (interp, _) = gradual.detect_static(&img);
        assert!(interp.part_success.iter().any(|&s| s));
        let before: Vec<usize> = gradual.parts.iter().map(|p| p.index.len()).collect();
        gradual.update(&img, &interp, UpdateMode::Gradual);
        for (pi, part) in gradual.parts.iter().enumerate() {
            assert!(part.index.len() >= before[pi]);
        }
        replace.update(&img, &interp, UpdateMode::Replace);
        for (pi, part) in replace.parts.iter().enumerate() {
            if interp.part_success[pi] {
                assert_eq!(part.index.len(), 1);
            }
        }
    }

    #[test]
    fn decay_zero_keeps_threshold_fixed() {
        let model = train_model();
        let frames: Vec<Frame> = (0..3)
            .map(|i| {
                let mut f = render_object(Point::new(44.0, 34.0), 5);
                f.index = i;
                f
            })
            .collect();
        let rows = model.detect_with_decay(&frames, 0.0);
        assert!(rows.iter().all(|r| r.threshold == model.accept_threshold));
        // Recall is non-decreasing in the decay rate: acceptance at decay 0
        // implies acceptance at decay 0.02 (thresholds only drop).
        let rows2 = model.detect_with_decay(&frames, 0.02);
        for (a, b) in rows.iter().zip(&rows2) {
            assert!(b.threshold <= a.threshold + 1e-12);
            if a.accepted {
                assert!(b.accepted);
            }
        }
    }

    #[test]
    fn model_serialization_round_trip() {
        let model = train_model();
        let bytes = model.to_bytes();
        let back = PartModel::from_bytes(&bytes).unwrap();
        assert_eq!(back.parts.len(), model.parts.len());
        assert_eq!(back.parts[0].index.len(), model.parts[0].index.len());
        let img = render_object(Point::new(44.0, 34.0), 5);
        let (a, _) = model.detect_static(&img);
        let (b, _) = back.detect_static(&img);
        assert_eq!(a.center, b.center);
        assert!((a.score - b.score).abs() < 1e-9);
    }
}
