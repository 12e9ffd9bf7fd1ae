//! Debug harness: tracker behavior from a mover event on the pickup scene.

use movervision::flow::FlowParams;
use movervision::frameio::{interaction_script, synthesize_scene, InteractionKind, InteractionScript};
use movervision::mover::{detect_events, MoverParams};
use movervision::tracker::{track, TrackerParams};

fn main() {
    let mut script = interaction_script(240, 180, 1, 3);
    script.interactions = vec![InteractionScript {
        kind: InteractionKind::Pickup,
        cell: (4, 3),
        start_frame: 15,
        end_frame: script.frames - 10,
    }];
    let (seq, gt) = synthesize_scene(&script).unwrap();
    let det = detect_events(&seq, &MoverParams::default(), &FlowParams::default()).unwrap();
    println!("events: {:?}", det.events);
    for e in &det.events {
        let t = track(
            &seq,
            e.offset_frame,
            e.center,
            0,
            &TrackerParams::default(),
            &FlowParams::default(),
        )
        .unwrap();
        println!(
            "track from ({}, {:?}): len={} net={} reason={:?}",
            e.offset_frame,
            e.center,
            t.centers.len(),
            t.net_displacement(),
            t.terminated
        );
        for (i, c) in t.centers.iter().enumerate() {
            let hand = gt.hand_centers[e.offset_frame + i];
            println!("  f={} center=({:.1},{:.1}) hand={:?}", e.offset_frame + i, c.x, c.y, hand);
        }

        // Replicate the anchor selection of the failing step.
        let f = e.offset_frame + t.centers.len() - 1;
        let cur = &seq.frames[f];
        let c = *t.centers.last().unwrap();
        let edge_map = movervision::features::edges(cur);
        let mut anchors = 0;
        let mut edge_in_patch = 0;
        for y in (c.y as i32 - 15).max(0)..(c.y as i32 + 15).min(179) {
            for x in (c.x as i32 - 15).max(0)..(c.x as i32 + 15).min(239) {
                if edge_map.at(x as usize, y as usize) {
                    edge_in_patch += 1;
                    if x % 5 == 0 && y % 5 == 0 {
                        anchors += 1;
                    }
                }
            }
        }
        println!("failing step f={f}: edges_in_patch={edge_in_patch} lattice_anchors={anchors}");
    }
}
