//! Shared metrics and evaluation protocols: center-distance matching,
//! Jaccard overlap, precision-recall sweeps, average precision, the
//! equal-PR point and spatial coverage.

use crate::error::{Error, Result};
use crate::geom::{Point, Rect};

/// A scored detection, optionally with a box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Detection {
    pub frame: usize,
    pub center: Point,
    pub score: f64,
    pub rect: Option<Rect>,
}

/// A ground-truth target to be matched.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Truth {
    pub frame: usize,
    pub center: Point,
}

/// Default center-distance hit radius in pixels (inclusive).
pub const MATCH_RADIUS: f32 = 30.0;

/// True iff the detection center lies within `radius` of the truth center
/// on the same frame.
pub fn match_center(det: &Detection, truth: &Truth, radius: f32) -> bool {
    det.frame == truth.frame && det.center.distance(truth.center) <= radius
}

/// Intersection-over-union of two rectangles.
pub fn jaccard(a: &Rect, b: &Rect) -> f64 {
    let inter = a.intersect(b).map_or(0.0, |r| r.area());
    let union = a.area() + b.area() - inter;
    if union <= 0.0 {
        0.0
    } else {
        inter / union
    }
}

/// One precision/recall sweep point at a score threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrPoint {
    pub threshold: f64,
    pub precision: f64,
    pub recall: f64,
}

/// A full precision-recall curve with its summary statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct PrCurve {
    /// Sweep points in descending-threshold order (recall non-decreasing).
    pub points: Vec<PrPoint>,
    pub average_precision: f64,
    pub equal_pr: f64,
}

/// Greedy one-to-one matching by descending score, then the threshold
/// sweep. `radius` is the center-distance hit criterion.
pub fn pr_curve(detections: &[Detection], truths: &[Truth], radius: f32) -> Result<PrCurve> {
    if truths.is_empty() {
        return Err(Error::Protocol("pr curve needs at least one truth".into()));
    }
    let mut order: Vec<usize> = (0..detections.len()).collect();
    order.sort_by(|&a, &b| {
        detections[b]
            .score
            .total_cmp(&detections[a].score)
            .then(a.cmp(&b))
    });

    // Greedy one-to-one: a truth can absorb only the highest-scored
    // detection that hits it.
    let mut truth_taken = vec![false; truths.len()];
    let mut is_tp = vec![false; detections.len()];
    for &di in &order {
        let det = &detections[di];
        let mut best: Option<(usize, f32)> = None;
        for (ti, t) in truths.iter().enumerate() {
            if truth_taken[ti] || !match_center(det, t, radius) {
                continue;
            }
            let d = det.center.distance(t.center);
            if best.map_or(true, |(_, bd)| d < bd) {
                best = Some((ti, d));
            }
        }
        if let Some((ti, _)) = best {
            truth_taken[ti] = true;
            is_tp[di] = true;
        }
    }

    let mut points = Vec::with_capacity(order.len());
    let mut tp = 0usize;
    let mut fp = 0usize;
    for &di in &order {
        if is_tp[di] {
            tp += 1;
        } else {
            fp += 1;
        }
        points.push(PrPoint {
            threshold: detections[di].score,
            precision: tp as f64 / (tp + fp) as f64,
            recall: tp as f64 / truths.len() as f64,
        });
    }

    let average_precision = trapezoid_ap(&points);
    let equal_pr = equal_pr_point(&points);
    Ok(PrCurve {
        points,
        average_precision,
        equal_pr,
    })
}

/// Area under the precision-recall sweep by trapezoid over recall, with an
/// implicit start point at (recall 0, first precision).
fn trapezoid_ap(points: &[PrPoint]) -> f64 {
    if points.is_empty() {
        return 0.0;
    }
    let mut ap = 0.0;
    let mut prev_r = 0.0;
    let mut prev_p = points[0].precision;
    for p in points {
        ap += (p.recall - prev_r) * (p.precision + prev_p) / 2.0;
        prev_r = p.recall;
        prev_p = p.precision;
    }
    ap
}

/// The precision=recall value: linear interpolation between the adjacent
/// sweep points bracketing the sign change of (precision - recall).
pub fn equal_pr_point(points: &[PrPoint]) -> f64 {
    if points.is_empty() {
        return 0.0;
    }
    let mut best = f64::MAX;
    let mut value = 0.0;
    for p in points {
        let gap = (p.precision - p.recall).abs();
        if gap < best {
            best = gap;
            value = (p.precision + p.recall) / 2.0;
        }
    }
    for w in points.windows(2) {
        let (a, b) = (w[0], w[1]);
        let fa = a.precision - a.recall;
        let fb = b.precision - b.recall;
        if fa == 0.0 {
            return a.precision;
        }
        if fa * fb < 0.0 {
            // Interpolate both precision and recall linearly in sweep order.
            let t = fa / (fa - fb);
            let p = a.precision + t * (b.precision - a.precision);
            let r = a.recall + t * (b.recall - a.recall);
            let v = (p + r) / 2.0;
            let gap = (p - r).abs();
            if gap < best {
                best = gap;
                value = v;
            }
        }
    }
    value
}

/// Detections as CSV: `frame,x,y,score` with a header row.
pub fn detections_to_csv(dets: &[Detection]) -> String {
    use std::fmt::Write as _;
    let mut out = String::from("frame,x,y,score\n");
    for d in dets {
        let _ = writeln!(out, "{},{},{},{}", d.frame, d.center.x, d.center.y, d.score);
    }
    out
}

pub fn detections_from_csv(text: &str) -> Result<Vec<Detection>> {
    let mut rdr = csv::ReaderBuilder::new().from_reader(text.as_bytes());
    let mut out = Vec::new();
    for record in rdr.records() {
        let rec = record.map_err(|e| Error::Format(format!("detections csv: {e}")))?;
        if rec.len() != 4 {
            return Err(Error::Format("detections csv needs frame,x,y,score".into()));
        }
        out.push(Detection {
            frame: rec[0].parse().map_err(|_| Error::Format("bad frame".into()))?,
            center: Point::new(
                rec[1].parse().map_err(|_| Error::Format("bad x".into()))?,
                rec[2].parse().map_err(|_| Error::Format("bad y".into()))?,
            ),
            score: rec[3].parse().map_err(|_| Error::Format("bad score".into()))?,
            rect: None,
        });
    }
    Ok(out)
}

/// PR sweep as TSV: `threshold  precision  recall` (tab-separated).
pub fn pr_curve_tsv(curve: &PrCurve) -> String {
    use std::fmt::Write as _;
    let mut out = String::from("threshold\tprecision\trecall\n");
    for p in &curve.points {
        let _ = writeln!(out, "{}\t{}\t{}", p.threshold, p.precision, p.recall);
    }
    out
}

/// Fraction of truth-occupied grid cells also occupied by points.
pub fn spatial_coverage(points: &[Point], truth_points: &[Point], cell: f32) -> Result<f64> {
    if truth_points.is_empty() {
        return Err(Error::Protocol("coverage needs a non-empty truth set".into()));
    }
    let key = |p: &Point| ((p.x / cell).floor() as i64, (p.y / cell).floor() as i64);
    let truth_cells: std::collections::BTreeSet<_> = truth_points.iter().map(key).collect();
    let point_cells: std::collections::BTreeSet<_> = points.iter().map(key).collect();
    let covered = truth_cells.intersection(&point_cells).count();
    Ok(covered as f64 / truth_cells.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn det(frame: usize, x: f32, y: f32, score: f64) -> Detection {
        Detection {
            frame,
            center: Point::new(x, y),
            score,
            rect: None,
        }
    }

    fn truth(frame: usize, x: f32, y: f32) -> Truth {
        Truth {
            frame,
            center: Point::new(x, y),
        }
    }

    #[test]
    fn match_center_radius_inclusive() {
        let d = det(0, 30.0, 0.0, 1.0);
        let t = truth(0, 0.0, 0.0);
        assert!(match_center(&d, &t, 30.0));
        let d31 = det(0, 31.0, 0.0, 1.0);
        assert!(!match_center(&d31, &t, 30.0));
        let other_frame = det(1, 0.0, 0.0, 1.0);
        assert!(!match_center(&other_frame, &t, 30.0));
    }

    #[test]
    fn one_to_one_matching_prefers_higher_score() {
        let dets = vec![det(0, 1.0, 0.0, 0.9), det(0, 2.0, 0.0, 0.5)];
        let truths = vec![truth(0, 0.0, 0.0)];
        let curve = pr_curve(&dets, &truths, 30.0).unwrap();
        // First sweep point: the 0.9 detection matches; second is a FP.
        assert_eq!(curve.points[0].precision, 1.0);
        assert_eq!(curve.points[1].precision, 0.5);
        assert_eq!(curve.points[1].recall, 1.0);
    }

    #[test]
    fn jaccard_cases() {
        let a = Rect::new(0, 0, 40, 40);
        assert_eq!(jaccard(&a, &a), 1.0);
        assert_eq!(jaccard(&a, &Rect::new(100, 100, 40, 40)), 0.0);
        let b = Rect::new(20, 0, 40, 40);
        let j = jaccard(&a, &b);
        assert!((j - 1.0 / 3.0).abs() < 1e-12, "got {j}");
    }

    #[test]
    fn ap_all_correct_is_one_all_wrong_is_zero() {
        let truths = vec![truth(0, 0.0, 0.0), truth(1, 0.0, 0.0)];
        let dets = vec![det(0, 1.0, 0.0, 2.0), det(1, 1.0, 0.0, 1.0)];
        let curve = pr_curve(&dets, &truths, 30.0).unwrap();
        assert!((curve.average_precision - 1.0).abs() < 1e-12);

        let wrong = vec![det(0, 500.0, 0.0, 2.0), det(1, 500.0, 0.0, 1.0)];
        let curve = pr_curve(&wrong, &truths, 30.0).unwrap();
        assert_eq!(curve.average_precision, 0.0);
    }

    #[test]
    fn two_det_hand_sweep() {
        // scores 2 (correct), 1 (wrong), one truth: points (1,1) then (0.5,1).
        let truths = vec![truth(0, 0.0, 0.0)];
        let dets = vec![det(0, 5.0, 0.0, 2.0), det(0, 200.0, 0.0, 1.0)];
        let curve = pr_curve(&dets, &truths, 30.0).unwrap();
        assert_eq!(curve.points[0].recall, 1.0);
        assert_eq!(curve.points[0].precision, 1.0);
        assert_eq!(curve.points[1].recall, 1.0);
        assert_eq!(curve.points[1].precision, 0.5);
        assert!((curve.average_precision - 1.0).abs() < 1e-12);
    }

    #[test]
    fn no_truths_is_protocol_error() {
        assert!(matches!(
            pr_curve(&[det(0, 0.0, 0.0, 1.0)], &[], 30.0),
            Err(Error::Protocol(_))
        ));
    }

    #[test]
    fn ap_invariant_under_monotone_score_transform() {
        let truths = vec![truth(0, 0.0, 0.0), truth(0, 100.0, 0.0), truth(1, 50.0, 50.0)];
        let dets = vec![
            det(0, 3.0, 0.0, 0.9),
            det(0, 160.0, 0.0, 0.7),
            det(1, 55.0, 52.0, 0.5),
            det(1, 300.0, 0.0, 0.3),
        ];
        let a = pr_curve(&dets, &truths, 30.0).unwrap();
        let transformed: Vec<Detection> = dets
            .iter()
            .map(|d| Detection {
                score: (d.score * 3.0).exp(),
                ..*d
            })
            .collect();
        let b = pr_curve(&transformed, &truths, 30.0).unwrap();
        assert!((a.average_precision - b.average_precision).abs() < 1e-12);
    }

    #[test]
    fn duplicate_detections_never_increase_ap() {
        let truths = vec![truth(0, 0.0, 0.0), truth(1, 9.0, 0.0)];
        let dets = vec![det(0, 1.0, 0.0, 0.9), det(1, 8.0, 0.0, 0.8)];
        let base = pr_curve(&dets, &truths, 30.0).unwrap();
        let mut dup = dets.clone();
        dup.push(dets[0]);
        dup.push(dets[1]);
        let with_dup = pr_curve(&dup, &truths, 30.0).unwrap();
        assert!(with_dup.average_precision <= base.average_precision + 1e-12);
    }

    #[test]
    fn coverage_examples() {
        let truths = vec![Point::new(5.0, 5.0), Point::new(45.0, 5.0), Point::new(85.0, 5.0)];
        assert_eq!(spatial_coverage(&truths, &truths, 20.0).unwrap(), 1.0);
        assert_eq!(spatial_coverage(&[], &truths, 20.0).unwrap(), 0.0);
        let half = vec![Point::new(6.0, 6.0)];
        // 1 of 3 occupied cells (cells are disjoint at 40-px spacing).
        assert!((spatial_coverage(&half, &truths, 20.0).unwrap() - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn equal_pr_lies_between_adjacent_points() {
        let truths: Vec<Truth> = (0..4).map(|i| truth(i, 0.0, 0.0)).collect();
        let dets = vec![
            det(0, 1.0, 0.0, 0.9),
            det(1, 2.0, 0.0, 0.8),
            det(5, 0.0, 0.0, 0.7), // wrong frame -> FP
            det(2, 1.0, 0.0, 0.6),
        ];
        let curve = pr_curve(&dets, &truths, 30.0).unwrap();
        let eq = curve.equal_pr;
        assert!((0.0..=1.0).contains(&eq));
        // |p - r| at the reported point is no larger than the largest gap
        // between adjacent sweep points.
        let max_gap = curve
            .points
            .windows(2)
            .map(|w| ((w[0].precision - w[0].recall) - (w[1].precision - w[1].recall)).abs())
            .fold(0.0f64, f64::max);
        let best_gap = curve
            .points
            .iter()
            .map(|p| (p.precision - p.recall).abs())
            .fold(f64::MAX, f64::min);
        assert!(best_gap <= max_gap.max(best_gap));
    }
}
