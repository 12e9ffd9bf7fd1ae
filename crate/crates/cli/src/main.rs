//! Batch front end for the movervision pipeline.
//!
//! Exit codes: 0 success, 1 processing error, 2 configuration error.
//! Logs go to stderr; data goes to files only.

mod commands;
mod config;
mod out;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::Config;

#[derive(Parser)]
#[command(name = "movervision", version, about = "Mover-event detection and unsupervised visual learning on grayscale video")]
struct Cli {
    /// key=value configuration file applied before --set overrides.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override one configuration key (repeatable), e.g. --set mover.cell_size=24.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    sets: Vec<String>,
    /// Random seed for all stochastic steps.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for per-sequence parallelism.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Print the effective configuration and exit.
    #[arg(long, global = true)]
    print_config: bool,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand)]
enum Command {
    /// Render a scripted synthetic scene into a frame directory.
    Synth {
        /// Scene script (JSON).
        #[arg(long)]
        script: PathBuf,
        /// Output sequence directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Detect mover events in a sequence directory.
    Movers {
        #[arg(long = "in")]
        input: PathBuf,
        /// Events CSV output.
        #[arg(long)]
        out: PathBuf,
        /// Also write state-colored overlay PNGs here.
        #[arg(long)]
        overlay: Option<PathBuf>,
    },
    /// Track detected events and export tracks + patches.
    Track {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        events: PathBuf,
        /// Output directory (tracks.csv + patches/).
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a star part model from annotated stills.
    TrainModel {
        /// Stills sequence directory.
        #[arg(long = "in")]
        input: PathBuf,
        /// Annotations CSV: frame,cx,cy,p1x,p1y,...
        #[arg(long)]
        annotations: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the two-frame adaptive model over a sequence.
    TwoFrame {
        #[arg(long)]
        model: PathBuf,
        #[arg(long = "in")]
        input: PathBuf,
        /// Online update mode.
        #[arg(long, value_parser = ["gradual", "replace", "static"], default_value = "gradual")]
        mode: String,
        /// Threshold decay rate for the static-detector baseline.
        #[arg(long)]
        decay: Option<f64>,
        /// Output directory (detections.csv + model.bin).
        #[arg(long)]
        out: PathBuf,
    },
    /// Iterative appearance/context co-training over a corpus.
    Cotrain {
        /// Corpus list: lines `role,seq_dir[,faces_csv]` with role
        /// initial|train|heldout.
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, default_value_t = 3)]
        iters: usize,
        /// Comma-separated confident-detection portions per iteration
        /// (defaults to the configured learner.portions).
        #[arg(long)]
        portions: Option<String>,
        #[arg(long)]
        no_tracking: bool,
        #[arg(long)]
        no_context: bool,
        /// Run directory for per-iteration artifacts.
        #[arg(long)]
        out: PathBuf,
    },
    /// Gaze learning from mover events.
    Gaze {
        #[command(subcommand)]
        cmd: GazeCommand,
    },
    /// Shared evaluation utilities.
    Eval {
        #[command(subcommand)]
        cmd: EvalCommand,
    },
}

#[derive(Subcommand)]
enum GazeCommand {
    /// Annotate events with gaze directions (samples CSV).
    Annotate {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        events: PathBuf,
        #[arg(long)]
        faces: PathBuf,
        /// Sequence id recorded in the samples.
        #[arg(long, default_value_t = 0)]
        seq_id: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Leave-one-sequence-out evaluation over annotated sequences.
    Eval {
        /// List file: lines `seq_dir,samples_csv`.
        #[arg(long)]
        list: PathBuf,
        /// Threshold curve TSV output.
        #[arg(long)]
        curve: Option<PathBuf>,
        /// Summary JSON output.
        #[arg(long)]
        summary: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum EvalCommand {
    /// Precision-recall of detections against ground truth.
    Pr {
        /// Detections CSV: frame,x,y,score (header row).
        #[arg(long)]
        dets: PathBuf,
        /// Ground truth CSV: kind,frame,x,y (header row).
        #[arg(long)]
        truth: PathBuf,
        /// PR sweep TSV output.
        #[arg(long)]
        out: PathBuf,
        /// Summary JSON output.
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Spatial coverage of points against truth points.
    Coverage {
        /// Points CSV: frame,x,y (header row).
        #[arg(long)]
        points: PathBuf,
        #[arg(long)]
        truth: PathBuf,
        #[arg(long)]
        summary: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();

    let mut config = Config::default();
    if let Some(path) = &cli.config {
        if let Err(e) = config.apply_file(path) {
            eprintln!("config error: {e}");
            return ExitCode::from(2);
        }
    }
    for s in &cli.sets {
        let Some((key, value)) = s.split_once('=') else {
            eprintln!("config error: --set wants KEY=VALUE, got {s:?}");
            return ExitCode::from(2);
        };
        if let Err(e) = config.set(key.trim(), value.trim()) {
            eprintln!("config error: {e}");
            return ExitCode::from(2);
        }
    }
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(jobs) = cli.jobs {
        config.jobs = jobs.max(1);
    }

    if cli.print_config {
        print!("{}", config.dump());
        return ExitCode::SUCCESS;
    }

    let Some(command) = cli.command else {
        eprintln!("config error: no command given (try --help)");
        return ExitCode::from(2);
    };

    let result = match command {
        Command::Synth { script, out } => commands::synth(&config, &script, &out),
        Command::Movers { input, out, overlay } => commands::movers(&config, &input, &out, overlay.as_deref()),
        Command::Track { input, events, out } => commands::track(&config, &input, &events, &out),
        Command::TrainModel {
            input,
            annotations,
            out,
        } => commands::train_model(&config, &input, &annotations, &out),
        Command::TwoFrame {
            model,
            input,
            mode,
            decay,
            out,
        } => commands::two_frame(&config, &model, &input, &mode, decay, &out),
        Command::Cotrain {
            corpus,
            iters,
            portions,
            no_tracking,
            no_context,
            out,
        } => commands::cotrain(&config, &corpus, iters, portions.as_deref(), no_tracking, no_context, &out),
        Command::Gaze { cmd } => match cmd {
            GazeCommand::Annotate {
                input,
                events,
                faces,
                seq_id,
                out,
            } => commands::gaze_annotate(&config, &input, &events, &faces, seq_id, &out),
            GazeCommand::Eval { list, curve, summary } => {
                commands::gaze_eval(&config, &list, curve.as_deref(), summary.as_deref())
            }
        },
        Command::Eval { cmd } => match cmd {
            EvalCommand::Pr {
                dets,
                truth,
                out,
                summary,
            } => commands::eval_pr(&config, &dets, &truth, &out, summary.as_deref()),
            EvalCommand::Coverage { points, truth, summary } => {
                commands::eval_coverage(&config, &points, &truth, summary.as_deref())
            }
        },
    };

    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
