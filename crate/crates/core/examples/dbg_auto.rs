//! Debug harness: trace the autonomous-motion control scene.

use movervision::flow::{cell_transfer_with, dense_flow_with, FlowParams};
use movervision::frameio::{autonomous_script, synthesize_scene};
use movervision::mover::{GridState, MoverParams};

fn main() {
    let script = autonomous_script(240, 180, 4, 7);
    for it in &script.interactions {
        println!("scripted: {:?}", it);
    }
    let plan = script.plan().unwrap();
    for p in &plan.interactions {
        println!("plan: {:?}", p);
    }
    let (seq, _) = synthesize_scene(&script).unwrap();
    let params = MoverParams {
        record_transitions: true,
        ..MoverParams::default()
    };
    let mut grid = GridState::init(&seq.frames[0], params);
    for t in 1..seq.len() {
        let flow = dense_flow_with(&seq.frames[t - 1], &seq.frames[t], &FlowParams::default()).unwrap();
        let transfer = cell_transfer_with(&flow, params.cell_size, params.moving_pixel_threshold);
        if t == 54 {
            // Probe cell (5,4) just before the suspicious event.
            let rect = grid.cell_rect(5, 4);
            let region = seq.frames[t].region(rect);
            let cell = grid.cell(5, 4);
            let lb = cell.long_bg();
            let mut big = 0;
            for (i, (r, b)) in region.iter().zip(lb).enumerate() {
                if (r - b).abs() >= 0.05 {
                    big += 1;
                    if big < 12 {
                        println!("  raw diff at ({}, {}): {} vs {}", i % 30, i / 30, r, b);
                    }
                }
            }
            println!("t=54 cell(5,4) raw pixels differing >= 0.05: {big}");
        }
        let events = grid.step(&seq.frames[t], &flow, &transfer).unwrap();
        for e in events {
            println!("t={t} EVENT {e:?}");
        }
    }
    for tr in &grid.transitions {
        if tr.cell == (5, 2) || tr.cell == (4, 2) {
            println!("{:?}", tr);
        }
    }
}
