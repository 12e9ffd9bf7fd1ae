//! Debug harness: trace cell histories on the single-pickup scene.

use movervision::flow::{cell_transfer_with, dense_flow_with, FlowParams};
use movervision::frameio::{interaction_script, synthesize_scene, InteractionKind, InteractionScript};
use movervision::mover::{CellState, GridState, MoverParams};

fn main() {
    let mut script = interaction_script(240, 180, 1, 3);
    script.interactions = vec![InteractionScript {
        kind: InteractionKind::Pickup,
        cell: (4, 3),
        start_frame: 15,
        end_frame: script.frames - 10,
    }];
    let plan = script.plan().unwrap();
    println!("plan: {:?}", plan.interactions[0]);
    println!("home: {:?}", plan.hand_home);
    let (seq, _) = synthesize_scene(&script).unwrap();
    let params = MoverParams {
        record_transitions: true,
        ..MoverParams::default()
    };
    let mut grid = GridState::init(&seq.frames[0], params);
    let watch = [(3usize, 2usize), (4, 3), (0, 0)];
    for t in 1..seq.len() {
        let flow = dense_flow_with(&seq.frames[t - 1], &seq.frames[t], &FlowParams::default()).unwrap();
        let transfer = cell_transfer_with(&flow, params.cell_size, params.moving_pixel_threshold);
        let before: Vec<(CellState, bool, bool)> = watch
            .iter()
            .map(|&(x, y)| {
                let rect = grid.cell_rect(x, y);
                let region = seq.frames[t].region(rect);
                let c = grid.cell(x, y);
                (
                    c.state,
                    c.is_changed(&region, &params),
                    c.differs_long_term(&region, &params),
                )
            })
            .collect();
        let events = grid.step(&seq.frames[t], &flow, &transfer).unwrap();
        for (i, &(x, y)) in watch.iter().enumerate() {
            let c = grid.cell(x, y);
            let idx = transfer.cell_index(x, y);
            let (st, changed, differs) = before[i];
            if st != c.state || transfer.pixels_in[idx] > 0 || transfer.pixels_out[idx] > 0 || changed {
                println!(
                    "t={t} cell({x},{y}) {:?}->{:?} in={} out={} mobile={} changed={changed} differs={differs}",
                    st,
                    c.state,
                    transfer.pixels_in[idx],
                    transfer.pixels_out[idx],
                    c.mobile,
                );
            }
        }
        for e in events {
            println!("t={t} EVENT {e:?}");
        }
    }
}
