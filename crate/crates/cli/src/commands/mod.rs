//! Subcommand implementations. All bulk outputs go through atomic writes;
//! progress notes go to stderr.

use std::fmt::Write as _;
use std::path::Path;

use movervision::eval;
use movervision::flow::{cell_transfer_with, dense_flow_with};
use movervision::frameio::{self, read_faces_csv, read_sequence, write_sequence, GroundTruth, SceneScript};
use movervision::gaze::{self, GazeSample, GazeSource};
use movervision::geom::{Point, Rect};
use movervision::learner::{self, BaselineContext, CombinedDetector, CorpusVideo, CotrainConfig};
use movervision::mover::{self, events_from_csv, events_to_csv, GridState};
use movervision::partmodel::{PartModel, TrainAnnotation, UpdateMode};
use movervision::tracker;

use crate::config::Config;
use crate::out::{render_overlay, write_atomic};

type CmdResult = Result<(), String>;

fn fail<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn io_fail(path: &Path, e: std::io::Error) -> String {
    format!("{}: {e}", path.display())
}

pub fn synth(config: &Config, script_path: &Path, out: &Path) -> CmdResult {
    let text = std::fs::read_to_string(script_path).map_err(|e| io_fail(script_path, e))?;
    let mut script = SceneScript::from_json(&text).map_err(fail)?;
    if config.seed != 0 {
        script.seed = config.seed;
    }
    let (seq, gt) = frameio::synthesize_scene(&script).map_err(fail)?;
    write_sequence(&seq, out).map_err(fail)?;
    write_atomic(&out.join("ground_truth.csv"), gt.to_csv().as_bytes()).map_err(|e| io_fail(out, e))?;
    if gt.faces.iter().any(Option::is_some) {
        write_atomic(&out.join("faces.csv"), gt.faces_csv().as_bytes()).map_err(|e| io_fail(out, e))?;
    }
    if gt.hand_centers.iter().any(Option::is_some) {
        let mut hands = String::from("frame,x,y\n");
        for (i, c) in gt.hand_centers.iter().enumerate() {
            if let Some(c) = c {
                let _ = writeln!(hands, "{},{},{}", i, c.x, c.y);
            }
        }
        write_atomic(&out.join("hands.csv"), hands.as_bytes()).map_err(|e| io_fail(out, e))?;
    }
    eprintln!("synth: {} frames -> {}", seq.len(), out.display());
    Ok(())
}

pub fn movers(config: &Config, input: &Path, out: &Path, overlay: Option<&Path>) -> CmdResult {
    let seq = read_sequence(input).map_err(fail)?;
    if seq.is_empty() {
        return Err("empty sequence".into());
    }
    let mut grid = GridState::init(&seq.frames[0], config.mover);
    let mut events = Vec::new();
    let keep = config.mover.s_stable + config.mover.w_out + 4;
    let mut recent: std::collections::VecDeque<(usize, movervision::flow::FlowField)> = Default::default();
    for t in 1..seq.len() {
        let flow = dense_flow_with(&seq.frames[t - 1], &seq.frames[t], &config.flow).map_err(fail)?;
        let transfer = cell_transfer_with(&flow, config.mover.cell_size, config.mover.moving_pixel_threshold);
        let mut step_events = grid.step(&seq.frames[t], &flow, &transfer).map_err(fail)?;
        recent.push_back((t, flow));
        if recent.len() > keep {
            recent.pop_front();
        }
        for e in &mut step_events {
            if let Some((_, f)) = recent.iter().find(|(fr, _)| *fr == e.offset_frame) {
                if let Some(c) = grid.lock_center(f, e.cell) {
                    e.center = c;
                }
            }
        }
        if let Some(dir) = overlay {
            let cells: Vec<(usize, usize)> = step_events.iter().map(|e| e.cell).collect();
            let img = render_overlay(&seq.frames[t], &grid, &cells);
            let path = dir.join(format!("overlay_{t:06}.png"));
            std::fs::create_dir_all(dir).map_err(|e| io_fail(dir, e))?;
            img.save(&path).map_err(|e| format!("{}: {e}", path.display()))?;
        }
        events.extend(step_events);
    }
    if config.track_filter {
        let mut filter_params = config.tracker;
        filter_params.max_frames = config.track_filter_frames;
        filter_params.harvest_context = false;
        let (kept, _) = tracker::filter_moving_events(
            &seq,
            &events,
            config.track_filter_min_displacement,
            &filter_params,
            &config.flow,
        )
        .map_err(fail)?;
        events = kept;
    }
    write_atomic(out, events_to_csv(&events).as_bytes()).map_err(|e| io_fail(out, e))?;
    eprintln!("movers: {} events -> {}", events.len(), out.display());
    Ok(())
}

pub fn track(config: &Config, input: &Path, events_path: &Path, out: &Path) -> CmdResult {
    let seq = read_sequence(input).map_err(fail)?;
    let text = std::fs::read_to_string(events_path).map_err(|e| io_fail(events_path, e))?;
    let events = events_from_csv(&text).map_err(fail)?;
    let mut tracks = Vec::new();
    for (i, e) in events.iter().enumerate() {
        tracks.push(
            tracker::track(&seq, e.offset_frame, e.center, i as u64, &config.tracker, &config.flow).map_err(fail)?,
        );
    }
    let tracks = tracker::merge_tracks(tracks, &config.tracker);
    write_atomic(&out.join("tracks.csv"), tracker::tracks_to_csv(&tracks).as_bytes())
        .map_err(|e| io_fail(out, e))?;
    for t in &tracks {
        for (i, patch) in t.patches.iter().enumerate() {
            let dir = out.join("patches").join(format!("{}", t.id));
            std::fs::create_dir_all(&dir).map_err(|e| io_fail(&dir, e))?;
            let mut frame = patch.clone();
            frame.index = 0;
            let seq1 = frameio::FrameSequence::new(vec![frame], seq.fps).map_err(fail)?;
            // One-frame sequences reuse the PGM writer; keep only the pgm.
            let tmp = dir.join("tmp_seq");
            write_sequence(&seq1, &tmp).map_err(fail)?;
            std::fs::rename(tmp.join("frame_000000.pgm"), dir.join(format!("{:06}.pgm", t.start_frame + i)))
                .map_err(|e| io_fail(&dir, e))?;
            let _ = std::fs::remove_dir_all(&tmp);
        }
    }
    eprintln!("track: {} tracks -> {}", tracks.len(), out.display());
    Ok(())
}

fn parse_annotations(text: &str) -> Result<Vec<(usize, TrainAnnotation)>, String> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || i == 0 {
            continue; // header
        }
        let vals: Vec<&str> = line.split(',').collect();
        if vals.len() < 5 || vals.len() % 2 == 0 {
            return Err(format!("annotation line {}: want frame,cx,cy,p1x,p1y,...", i + 1));
        }
        let frame: usize = vals[0].parse().map_err(|_| format!("line {}: bad frame", i + 1))?;
        let nums: Vec<f32> = vals[1..]
            .iter()
            .map(|v| v.parse().map_err(|_| format!("line {}: bad number {v:?}", i + 1)))
            .collect::<Result<_, _>>()?;
        let parts = nums[2..]
            .chunks(2)
            .map(|c| Point::new(c[0], c[1]))
            .collect();
        out.push((
            frame,
            TrainAnnotation {
                center: Point::new(nums[0], nums[1]),
                parts,
            },
        ));
    }
    Ok(out)
}

pub fn train_model(config: &Config, input: &Path, annotations: &Path, out: &Path) -> CmdResult {
    let seq = read_sequence(input).map_err(fail)?;
    let text = std::fs::read_to_string(annotations).map_err(|e| io_fail(annotations, e))?;
    let anns = parse_annotations(&text)?;
    let mut images = Vec::new();
    let mut tanns = Vec::new();
    for (frame, ann) in anns {
        let f = seq
            .frames
            .get(frame)
            .ok_or_else(|| format!("annotation frame {frame} beyond sequence"))?;
        images.push(f.clone());
        tanns.push(ann);
    }
    let model = PartModel::init_static(&images, &tanns, config.partmodel).map_err(fail)?;
    write_atomic(out, &model.to_bytes()).map_err(|e| io_fail(out, e))?;
    eprintln!("train-model: {} parts, {} images -> {}", model.n_parts(), images.len(), out.display());
    Ok(())
}

fn interpretation_row(frame: usize, interp: &movervision::partmodel::Interpretation) -> String {
    let mut row = format!("{},{},{},{}", frame, interp.score, interp.center.x, interp.center.y);
    for p in &interp.parts {
        let _ = write!(row, ",{},{}", p.x, p.y);
    }
    row.push('\n');
    row
}

pub fn two_frame(config: &Config, model_path: &Path, input: &Path, mode: &str, decay: Option<f64>, out: &Path) -> CmdResult {
    let bytes = std::fs::read(model_path).map_err(|e| io_fail(model_path, e))?;
    let mut model = PartModel::from_bytes(&bytes).map_err(fail)?;
    // The effective configuration overrides the stored inference params.
    model.params = config.partmodel;
    let seq = read_sequence(input).map_err(fail)?;

    let mut csv = String::from("frame,score,cx,cy,parts...\n");
    match (mode, decay) {
        ("static", d) => {
            let rows = model.detect_with_decay(&seq.frames, d.unwrap_or(0.0));
            for r in rows {
                if r.accepted {
                    csv.push_str(&interpretation_row(r.frame, &r.interpretation));
                }
            }
        }
        (m, _) => {
            let update_mode = match m {
                "gradual" => UpdateMode::Gradual,
                "replace" => UpdateMode::Replace,
                other => return Err(format!("unknown mode {other:?}")),
            };
            let mut prev: Option<movervision::partmodel::Interpretation> = None;
            for t in 0..seq.len() {
                let interp = match (&prev, t) {
                    (Some(p), t) if t > 0 => {
                        let flow = dense_flow_with(&seq.frames[t - 1], &seq.frames[t], &config.flow).map_err(fail)?;
                        model.infer_two_frame(p, &seq.frames[t], &flow)
                    }
                    _ => model.detect_static(&seq.frames[t]).0,
                };
                csv.push_str(&interpretation_row(t, &interp));
                model.update(&seq.frames[t], &interp, update_mode);
                prev = Some(interp);
            }
        }
    }
    std::fs::create_dir_all(out).map_err(|e| io_fail(out, e))?;
    write_atomic(&out.join("detections.csv"), csv.as_bytes()).map_err(|e| io_fail(out, e))?;
    write_atomic(&out.join("model.bin"), &model.to_bytes()).map_err(|e| io_fail(out, e))?;
    eprintln!("two-frame: {} frames, mode {mode} -> {}", seq.len(), out.display());
    Ok(())
}

struct CorpusEntry {
    role: String,
    video: CorpusVideo,
    /// Per-frame target (hand) centers used as held-out ground truth.
    hands: Option<Vec<Option<Point>>>,
}

fn load_corpus(list: &Path) -> Result<Vec<CorpusEntry>, String> {
    let text = std::fs::read_to_string(list).map_err(|e| io_fail(list, e))?;
    let base = list.parent().unwrap_or(Path::new("."));
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let parts: Vec<&str> = line.split(',').map(str::trim).collect();
        if parts.len() < 2 {
            return Err(format!(
                "{}:{}: want role,seq_dir[,faces_csv[,hands_csv]]",
                list.display(),
                i + 1
            ));
        }
        let role = parts[0].to_string();
        if !matches!(role.as_str(), "initial" | "train" | "heldout") {
            return Err(format!("{}:{}: unknown role {role:?}", list.display(), i + 1));
        }
        let seq = read_sequence(&base.join(parts[1])).map_err(fail)?;
        let n = seq.len();
        let mut faces = vec![None; n];
        if parts.len() > 2 && !parts[2].is_empty() {
            let ftext = std::fs::read_to_string(base.join(parts[2])).map_err(|e| io_fail(list, e))?;
            for (frame, p) in read_faces_csv(&ftext).map_err(fail)? {
                if frame < faces.len() {
                    faces[frame] = Some(p);
                }
            }
        }
        let hands = if parts.len() > 3 {
            let htext = std::fs::read_to_string(base.join(parts[3])).map_err(|e| io_fail(list, e))?;
            let mut hands = vec![None; n];
            for (frame, p) in read_faces_csv(&htext).map_err(fail)? {
                if frame < hands.len() {
                    hands[frame] = Some(p);
                }
            }
            Some(hands)
        } else {
            None
        };
        out.push(CorpusEntry {
            role,
            video: CorpusVideo { seq, faces },
            hands,
        });
    }
    Ok(out)
}

pub fn cotrain(
    config: &Config,
    corpus: &Path,
    iters: usize,
    portions: Option<&str>,
    no_tracking: bool,
    no_context: bool,
    out: &Path,
) -> CmdResult {
    let portions: Vec<f64> = match portions {
        Some(p) => p
            .split(',')
            .map(|p| p.trim().parse().map_err(|_| format!("bad portion {p:?}")))
            .collect::<Result<_, _>>()?,
        None => config.cotrain_portions.to_vec(),
    };
    if portions.len() != 3 {
        return Err("want exactly three portions".into());
    }
    let entries = load_corpus(corpus)?;
    let initial_videos: Vec<&CorpusEntry> = entries.iter().filter(|e| e.role == "initial").collect();
    let train_videos: Vec<CorpusVideo> = entries
        .iter()
        .filter(|e| e.role == "train")
        .map(|e| CorpusVideo {
            seq: e.video.seq.clone(),
            faces: e.video.faces.clone(),
        })
        .collect();
    let heldout: Vec<&CorpusEntry> = entries.iter().filter(|e| e.role == "heldout").collect();
    if initial_videos.is_empty() || train_videos.is_empty() {
        return Err("corpus needs at least one initial and one train video".into());
    }

    // Initial detector: mover events + tracks on the initial videos.
    let mut patches = movervision::learner::PatchSet::default();
    for (vi, entry) in initial_videos.iter().enumerate() {
        let det = mover::detect_events(&entry.video.seq, &config.mover, &config.flow).map_err(fail)?;
        let (events, tracks) = tracker::filter_moving_events(
            &entry.video.seq,
            &det.events,
            config.track_filter_min_displacement,
            &config.tracker,
            &config.flow,
        )
        .map_err(fail)?;
        let set = learner::harvest_initial(
            &entry.video.seq,
            &events,
            &tracks,
            &config.learner,
            config.seed ^ vi as u64,
        );
        patches.positives.extend(set.positives);
        patches.negatives.extend(set.negatives);
        eprintln!(
            "cotrain: initial video {vi}: {} events, {} tracks, {} positives",
            events.len(),
            tracks.len(),
            patches.positives.len()
        );
    }
    let appearance = learner::train_appearance(&patches, &config.learner).map_err(fail)?;
    let initial = CombinedDetector {
        appearance,
        context: if no_context {
            None
        } else {
            Some(BaselineContext::new(config.learner.context_sigma))
        },
    };

    let cotrain_config = CotrainConfig {
        iterations: iters,
        portions: [portions[0], portions[1], portions[2]],
        use_tracking: !no_tracking,
        use_context: !no_context,
        seed: config.seed,
        track_cap: config.cotrain_track_cap,
    };
    let stages = learner::co_train(
        initial,
        &train_videos,
        &cotrain_config,
        &config.learner,
        &config.tracker,
        &config.flow,
    )
    .map_err(fail)?;

    // Per-stage artifacts + held-out PR.
    let mut summary = String::from("{\n  \"stages\": [\n");
    for (stage, s) in stages.iter().enumerate() {
        let det = &s.detector;
        let dir = out.join(format!("iter{stage}"));
        std::fs::create_dir_all(&dir).map_err(|e| io_fail(&dir, e))?;
        write_atomic(&dir.join("model.bin"), &det.appearance.to_bytes()).map_err(|e| io_fail(&dir, e))?;
        let mut labels = String::from("video,frame,x,y,score\n");
        for l in &s.labels {
            let _ = writeln!(labels, "{},{},{},{},{}", l.video, l.frame, l.center.x, l.center.y, l.score);
        }
        write_atomic(&dir.join("labels.csv"), labels.as_bytes()).map_err(|e| io_fail(&dir, e))?;

        let mut ap_text = "null".to_string();
        if !heldout.is_empty() {
            let mut dets = Vec::new();
            let mut truths = Vec::new();
            for (vi, entry) in heldout.iter().enumerate() {
                for (fi, frame) in entry.video.seq.frames.iter().enumerate() {
                    let face = entry.video.faces.get(fi).copied().flatten();
                    let (center, score, _) = det.detect_frame(frame, face).map_err(fail)?;
                    dets.push(eval::Detection {
                        frame: vi * 100_000 + fi,
                        center,
                        score,
                        rect: None,
                    });
                }
                // Held-out truth: the scripted hand positions.
                if let Some(hands) = &entry.hands {
                    for (fi, c) in hands.iter().enumerate() {
                        if let Some(c) = c {
                            truths.push(eval::Truth {
                                frame: vi * 100_000 + fi,
                                center: *c,
                            });
                        }
                    }
                }
            }
            if !truths.is_empty() {
                let curve = eval::pr_curve(&dets, &truths, config.eval_match_radius).map_err(fail)?;
                write_atomic(&dir.join("pr.tsv"), eval::pr_curve_tsv(&curve).as_bytes())
                    .map_err(|e| io_fail(&dir, e))?;
                write_atomic(&dir.join("detections.csv"), eval::detections_to_csv(&dets).as_bytes())
                    .map_err(|e| io_fail(&dir, e))?;
                ap_text = format!("{}", curve.average_precision);
            }
        }
        let _ = writeln!(
            summary,
            "    {{\"stage\": {stage}, \"heldout_ap\": {ap_text}}}{}",
            if stage + 1 < stages.len() { "," } else { "" }
        );
    }
    summary.push_str("  ]\n}\n");
    write_atomic(&out.join("summary.json"), summary.as_bytes()).map_err(|e| io_fail(out, e))?;
    eprintln!("cotrain: {} stages -> {}", stages.len(), out.display());
    Ok(())
}

pub fn gaze_annotate(config: &Config, input: &Path, events_path: &Path, faces_path: &Path, seq_id: usize, out: &Path) -> CmdResult {
    let seq = read_sequence(input).map_err(fail)?;
    let etext = std::fs::read_to_string(events_path).map_err(|e| io_fail(events_path, e))?;
    let events = events_from_csv(&etext).map_err(fail)?;
    let ftext = std::fs::read_to_string(faces_path).map_err(|e| io_fail(faces_path, e))?;
    let faces = read_faces_csv(&ftext).map_err(fail)?;
    let samples = gaze::annotate(&seq, &events, &faces, seq_id, &config.gaze);
    let mut csv = String::from("seq,frame,face_x,face_y,dir_x,dir_y\n");
    for s in &samples {
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{}",
            s.seq_id, s.frame, s.face_center.x, s.face_center.y, s.direction.x, s.direction.y
        );
    }
    write_atomic(out, csv.as_bytes()).map_err(|e| io_fail(out, e))?;
    eprintln!("gaze annotate: {} samples -> {}", samples.len(), out.display());
    Ok(())
}

fn load_gaze_samples(config: &Config, seq_dir: &Path, samples_csv: &Path) -> Result<Vec<GazeSample>, String> {
    let seq = read_sequence(seq_dir).map_err(fail)?;
    let text = std::fs::read_to_string(samples_csv).map_err(|e| io_fail(samples_csv, e))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if i == 0 || line.trim().is_empty() {
            continue;
        }
        let vals: Vec<&str> = line.split(',').collect();
        if vals.len() != 6 {
            return Err(format!("{}:{}: want seq,frame,face_x,face_y,dir_x,dir_y", samples_csv.display(), i + 1));
        }
        let parse = |j: usize| -> Result<f32, String> {
            vals[j].parse().map_err(|_| format!("line {}: bad number", i + 1))
        };
        let seq_id: usize = vals[0].parse().map_err(|_| "bad seq".to_string())?;
        let frame: usize = vals[1].parse().map_err(|_| "bad frame".to_string())?;
        let face = Point::new(parse(2)?, parse(3)?);
        let dir = Point::new(parse(4)?, parse(5)?);
        let rect = Rect::centered(face, config.gaze.face_rect_size, config.gaze.face_rect_size)
            .clamped_into(seq.width() as u32, seq.height() as u32)
            .ok_or_else(|| "face rect larger than frame".to_string())?;
        let frame_ref = seq
            .frames
            .get(frame)
            .ok_or_else(|| format!("sample frame {frame} beyond sequence"))?;
        let d = movervision::features::hog(frame_ref, rect, &movervision::features::HogParams::default())
            .map_err(fail)?;
        out.push(GazeSample {
            face_center: face,
            descriptor: d.values,
            direction: dir,
            source: GazeSource::AutoMover,
            seq_id,
            frame,
        });
    }
    Ok(out)
}

pub fn gaze_eval(config: &Config, list: &Path, curve: Option<&Path>, summary: Option<&Path>) -> CmdResult {
    let text = std::fs::read_to_string(list).map_err(|e| io_fail(list, e))?;
    let base = list.parent().unwrap_or(Path::new("."));
    let mut samples = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((dir, csv)) = line.split_once(',') else {
            return Err(format!("{}:{}: want seq_dir,samples_csv", list.display(), i + 1));
        };
        samples.extend(load_gaze_samples(config, &base.join(dir.trim()), &base.join(csv.trim()))?);
    }
    let eval = gaze::evaluate_loso(&samples, config.gaze_threshold_deg, &config.gaze).map_err(fail)?;
    if let Some(path) = curve {
        let mut tsv = String::from("threshold_deg\taccuracy\n");
        for (t, a) in &eval.curve {
            let _ = writeln!(tsv, "{t}\t{a}");
        }
        write_atomic(path, tsv.as_bytes()).map_err(|e| io_fail(path, e))?;
    }
    if let Some(path) = summary {
        let json = format!(
            "{{\n  \"accuracy\": {},\n  \"chance\": {},\n  \"threshold_deg\": {},\n  \"tested\": {},\n  \"degenerate\": {}\n}}\n",
            eval.accuracy, eval.chance, config.gaze_threshold_deg, eval.tested, eval.degenerate
        );
        write_atomic(path, json.as_bytes()).map_err(|e| io_fail(path, e))?;
    }
    eprintln!(
        "gaze eval: accuracy {:.3} vs chance {:.3} over {} samples",
        eval.accuracy, eval.chance, eval.tested
    );
    Ok(())
}

pub fn eval_pr(config: &Config, dets_path: &Path, truth_path: &Path, out: &Path, summary: Option<&Path>) -> CmdResult {
    let dtext = std::fs::read_to_string(dets_path).map_err(|e| io_fail(dets_path, e))?;
    let dets = eval::detections_from_csv(&dtext).map_err(fail)?;
    let ttext = std::fs::read_to_string(truth_path).map_err(|e| io_fail(truth_path, e))?;
    let gt = GroundTruth::from_csv(&ttext).map_err(fail)?;
    let truths: Vec<eval::Truth> = gt
        .interactions
        .iter()
        .map(|it| eval::Truth {
            frame: it.frame,
            center: it.point,
        })
        .collect();
    let curve = eval::pr_curve(&dets, &truths, config.eval_match_radius).map_err(fail)?;
    write_atomic(out, eval::pr_curve_tsv(&curve).as_bytes()).map_err(|e| io_fail(out, e))?;
    if let Some(path) = summary {
        let json = format!(
            "{{\n  \"average_precision\": {},\n  \"equal_pr\": {},\n  \"detections\": {},\n  \"truths\": {}\n}}\n",
            curve.average_precision,
            curve.equal_pr,
            dets.len(),
            truths.len()
        );
        write_atomic(path, json.as_bytes()).map_err(|e| io_fail(path, e))?;
    }
    eprintln!("eval pr: ap {:.4} -> {}", curve.average_precision, out.display());
    Ok(())
}

pub fn eval_coverage(config: &Config, points_path: &Path, truth_path: &Path, summary: Option<&Path>) -> CmdResult {
    let ptext = std::fs::read_to_string(points_path).map_err(|e| io_fail(points_path, e))?;
    let points: Vec<Point> = read_faces_csv(&ptext).map_err(fail)?.into_iter().map(|(_, p)| p).collect();
    let ttext = std::fs::read_to_string(truth_path).map_err(|e| io_fail(truth_path, e))?;
    let truths: Vec<Point> = read_faces_csv(&ttext).map_err(fail)?.into_iter().map(|(_, p)| p).collect();
    let coverage = eval::spatial_coverage(&points, &truths, config.eval_coverage_cell).map_err(fail)?;
    if let Some(path) = summary {
        let json = format!("{{\n  \"coverage\": {coverage}\n}}\n");
        write_atomic(path, json.as_bytes()).map_err(|e| io_fail(path, e))?;
    }
    println!("coverage={coverage}");
    Ok(())
}
