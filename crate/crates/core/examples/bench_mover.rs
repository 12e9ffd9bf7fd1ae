//! Rough timing of the mover pipeline per frame at a few scene sizes.

use std::time::Instant;

use movervision::flow::FlowParams;
use movervision::frameio::{interaction_script, synthesize_scene};
use movervision::mover::{detect_events, MoverParams};

fn main() {
    for (w, h) in [(200u32, 150u32), (240, 180), (480, 360)] {
        let script = interaction_script(w, h, 1, 3);
        let t0 = Instant::now();
        let (seq, _) = synthesize_scene(&script).unwrap();
        let synth = t0.elapsed();
        let t1 = Instant::now();
        let det = detect_events(&seq, &MoverParams::default(), &FlowParams::default()).unwrap();
        let detect = t1.elapsed();
        println!(
            "{w}x{h}: {} frames, synth {:.2}s, detect {:.2}s ({:.1} ms/frame), {} events",
            seq.len(),
            synth.as_secs_f64(),
            detect.as_secs_f64(),
            detect.as_secs_f64() * 1000.0 / seq.len() as f64,
            det.events.len()
        );
    }
}
