//! Effective run configuration: every tunable of every module, with the
//! module defaults, overridable from a key=value file and `--set` flags.

use std::fmt::Write as _;
use std::path::Path;

use movervision::annkde::NormMode;
use movervision::flow::FlowParams;
use movervision::gaze::GazeParams;
use movervision::learner::LearnerParams;
use movervision::mover::MoverParams;
use movervision::partmodel::PartModelParams;
use movervision::tracker::TrackerParams;

#[derive(Debug, Clone)]
pub struct Config {
    pub flow: FlowParams,
    pub mover: MoverParams,
    pub tracker: TrackerParams,
    pub partmodel: PartModelParams,
    pub learner: LearnerParams,
    pub gaze: GazeParams,
    /// Mover events are dropped when their track moves less than this.
    pub track_filter_min_displacement: f32,
    /// Apply the tracking post-filter in the movers command.
    pub track_filter: bool,
    /// Frames tracked by the post-filter (shorter than harvest tracks).
    pub track_filter_frames: usize,
    /// Per-iteration tracked-detection cap in co-training.
    pub cotrain_track_cap: usize,
    pub cotrain_iterations: usize,
    pub cotrain_portions: [f64; 3],
    pub eval_match_radius: f32,
    pub eval_coverage_cell: f32,
    pub gaze_threshold_deg: f64,
    pub seed: u64,
    pub jobs: usize,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            flow: FlowParams::default(),
            mover: MoverParams::default(),
            tracker: TrackerParams::default(),
            partmodel: PartModelParams::default(),
            learner: LearnerParams::default(),
            gaze: GazeParams::default(),
            track_filter_min_displacement: 10.0,
            track_filter: true,
            track_filter_frames: 15,
            cotrain_track_cap: 8,
            cotrain_iterations: 3,
            cotrain_portions: [0.02, 0.10, 0.20],
            eval_match_radius: 30.0,
            eval_coverage_cell: 20.0,
            gaze_threshold_deg: 20.0,
            seed: 0,
            jobs: 1,
        }
    }
}

macro_rules! config_keys {
    ($($key:literal => $($path:ident).+ , $parse:ident);* $(;)?) => {
        pub fn entries(&self) -> Vec<(String, String)> {
            let mut out: Vec<(String, String)> = vec![
                $(($key.to_string(), fmt_value(&self.$($path).+))),*
            ];
            out.sort();
            out
        }

        pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
            match key {
                $($key => {
                    self.$($path).+ = $parse(key, value)?;
                    Ok(())
                })*
                _ => Err(format!("unknown config key {key:?}")),
            }
        }
    };
}

fn fmt_value<T: std::fmt::Debug>(v: &T) -> String {
    format!("{v:?}")
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, String> {
    value.parse().map_err(|_| format!("bad value {value:?} for {key}"))
}

fn parse_bool(key: &str, value: &str) -> Result<bool, String> {
    match value {
        "true" | "1" => Ok(true),
        "false" | "0" => Ok(false),
        _ => Err(format!("bad value {value:?} for {key} (want true/false)")),
    }
}

fn parse_portions(key: &str, value: &str) -> Result<[f64; 3], String> {
    let cleaned = value.trim_start_matches('[').trim_end_matches(']');
    let nums: Vec<f64> = cleaned
        .split(',')
        .map(|v| v.trim().parse().map_err(|_| format!("bad value {value:?} for {key}")))
        .collect::<Result<_, _>>()?;
    if nums.len() != 3 {
        return Err(format!("{key} wants exactly three portions"));
    }
    Ok([nums[0], nums[1], nums[2]])
}

fn parse_norm_mode(key: &str, value: &str) -> Result<NormMode, String> {
    match value.to_ascii_lowercase().as_str() {
        "unsquared" => Ok(NormMode::Unsquared),
        "squared" => Ok(NormMode::Squared),
        _ => Err(format!("bad value {value:?} for {key} (want unsquared/squared)")),
    }
}

impl Config {
    config_keys! {
        "flow.window_radius" => flow.window_radius, parse_num;
        "flow.search_radius" => flow.search_radius, parse_num;
        "flow.levels" => flow.levels, parse_num;
        "flow.accept_mse" => flow.accept_mse, parse_num;
        "flow.verify_from" => flow.verify_from, parse_num;
        "mover.cell_size" => mover.cell_size, parse_num;
        "mover.ema_alpha" => mover.ema_alpha, parse_num;
        "mover.change_threshold" => mover.change_threshold, parse_num;
        "mover.change_pixel_count" => mover.change_pixel_count, parse_num;
        "mover.motion_pixel_count" => mover.motion_pixel_count, parse_num;
        "mover.mobile_age" => mover.mobile_age, parse_num;
        "mover.w_start_changing" => mover.w_start_changing, parse_num;
        "mover.w_total" => mover.w_total, parse_num;
        "mover.w_out" => mover.w_out, parse_num;
        "mover.s_stable" => mover.s_stable, parse_num;
        "mover.large_motion_fraction" => mover.large_motion_fraction, parse_num;
        "mover.large_motion_magnitude" => mover.large_motion_magnitude, parse_num;
        "mover.moving_pixel_threshold" => mover.moving_pixel_threshold, parse_num;
        "mover.track_filter" => track_filter, parse_bool;
        "mover.track_filter_min_displacement" => track_filter_min_displacement, parse_num;
        "mover.track_filter_frames" => track_filter_frames, parse_num;
        "tracker.patch_size" => tracker.patch_size, parse_num;
        "tracker.search_size" => tracker.search_size, parse_num;
        "tracker.grid_step" => tracker.grid_step, parse_num;
        "tracker.max_frames" => tracker.max_frames, parse_num;
        "tracker.max_displacement" => tracker.max_displacement, parse_num;
        "tracker.merge_radius" => tracker.merge_radius, parse_num;
        "tracker.stationary_displacement" => tracker.stationary_displacement, parse_num;
        "tracker.stationary_window" => tracker.stationary_window, parse_num;
        "tracker.descriptor_patch" => tracker.descriptor_patch, parse_num;
        "tracker.harvest_context" => tracker.harvest_context, parse_bool;
        "partmodel.patch_size" => partmodel.patch_size, parse_num;
        "partmodel.center_stride" => partmodel.center_stride, parse_num;
        "partmodel.appearance_stride" => partmodel.appearance_stride, parse_num;
        "partmodel.sigma_c" => partmodel.sigma_c, parse_num;
        "partmodel.sigma_i" => partmodel.sigma_i, parse_num;
        "partmodel.cov_floor" => partmodel.cov_floor, parse_num;
        "partmodel.window_sigmas" => partmodel.window_sigmas, parse_num;
        "partmodel.min_online_samples" => partmodel.min_online_samples, parse_num;
        "partmodel.kde_epsilon" => partmodel.kde_epsilon, parse_num;
        "partmodel.kde_max_leaves" => partmodel.kde_max_leaves, parse_num;
        "partmodel.norm_mode" => partmodel.norm_mode, parse_norm_mode;
        "learner.patch_size" => learner.patch_size, parse_num;
        "learner.neg_min_distance" => learner.neg_min_distance, parse_num;
        "learner.grid_step" => learner.grid_step, parse_num;
        "learner.context_sigma" => learner.context_sigma, parse_num;
        "learner.detect_stride" => learner.detect_stride, parse_num;
        "learner.kde_epsilon" => learner.kde_epsilon, parse_num;
        "learner.kde_max_leaves" => learner.kde_max_leaves, parse_num;
        "learner.iterations" => cotrain_iterations, parse_num;
        "learner.portions" => cotrain_portions, parse_portions;
        "learner.track_cap" => cotrain_track_cap, parse_num;
        "gaze.k" => gaze.k, parse_num;
        "gaze.face_rect_size" => gaze.face_rect_size, parse_num;
        "gaze.lead_frames" => gaze.lead_frames, parse_num;
        "gaze.cell_size" => gaze.cell_size, parse_num;
        "gaze.threshold_deg" => gaze_threshold_deg, parse_num;
        "eval.match_radius" => eval_match_radius, parse_num;
        "eval.coverage_cell" => eval_coverage_cell, parse_num;
        "run.seed" => seed, parse_num;
        "run.jobs" => jobs, parse_num;
    }

    /// Load overrides from a key=value file ('#' comments allowed).
    pub fn apply_file(&mut self, path: &Path) -> Result<(), String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| format!("{}:{}: expected key=value", path.display(), lineno + 1))?;
            self.set(key.trim(), value.trim())
                .map_err(|e| format!("{}:{}: {e}", path.display(), lineno + 1))?;
        }
        Ok(())
    }

    /// Dump the effective configuration as sorted key=value lines.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for (k, v) in self.entries() {
            let _ = writeln!(out, "{k}={v}");
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn set_and_dump_round_trip() {
        let mut c = Config::default();
        c.set("mover.cell_size", "24").unwrap();
        c.set("flow.accept_mse", "0.004").unwrap();
        c.set("mover.track_filter", "false").unwrap();
        assert_eq!(c.mover.cell_size, 24);
        assert!(!c.track_filter);
        let dump = c.dump();
        assert!(dump.contains("mover.cell_size=24"));
        assert!(dump.contains("flow.accept_mse=0.004"));
        assert!(c.set("no.such.key", "1").is_err());
    }
}
