//! Scene script types. Scripts are plain JSON documents; see `SceneScript`
//! for the schema.

use serde::{Deserialize, Serialize};

use crate::geom::Point;

/// Default cell size used to translate interaction cell coordinates into
/// pixel targets; matches the mover grid.
pub const SCRIPT_CELL_SIZE: u32 = 30;

/// A deterministic scene description. Rendering is a pure function of the
/// script (including its `seed`).
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SceneScript {
    pub width: u32,
    pub height: u32,
    /// Total frame count of the rendered sequence.
    pub frames: usize,
    #[serde(default = "default_fps")]
    pub fps: u32,
    #[serde(default)]
    pub background: BackgroundSpec,
    /// Explicitly scripted sprites (autonomous objects, morph targets).
    #[serde(default)]
    pub actors: Vec<ActorScript>,
    /// High-level interactions choreographed by the synthesizer.
    #[serde(default)]
    pub interactions: Vec<InteractionScript>,
    /// Hand sprite parameters; defaults are used when absent but
    /// interactions need a hand.
    #[serde(default)]
    pub hand: Option<SpriteSpec>,
    /// Static face glyph whose orientation tracks the scripted targets.
    #[serde(default)]
    pub face: Option<FaceSpec>,
    /// Per-pixel i.i.d. Gaussian noise sigma, clamped to [0,1] after adding.
    #[serde(default = "default_noise")]
    pub noise_sigma: f32,
    /// Additive per-frame brightness ramp (units of intensity per frame).
    #[serde(default)]
    pub light_drift: f32,
    pub seed: u64,
}

fn default_fps() -> u32 {
    super::DEFAULT_FPS
}

fn default_noise() -> f32 {
    0.01
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BackgroundSpec {
    /// Flat intensity.
    Uniform { level: f32 },
    /// Smooth value-noise texture around `level` with peak amplitude
    /// `contrast`, lattice spacing `grain` pixels.
    Textured { level: f32, contrast: f32, grain: u32 },
}

impl Default for BackgroundSpec {
    fn default() -> Self {
        BackgroundSpec::Textured {
            level: 0.5,
            contrast: 0.08,
            grain: 8,
        }
    }
}

/// Texture and size of a rendered sprite (blocky random texture).
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct SpriteSpec {
    pub width: u32,
    pub height: u32,
    /// Mean intensity of the sprite texture.
    pub level: f32,
    /// Peak amplitude of the texture blocks around `level`.
    pub contrast: f32,
    pub texture_seed: u64,
    /// Optional gradual texture morph toward a second texture.
    #[serde(default)]
    pub morph: Option<MorphSpec>,
}

impl SpriteSpec {
    pub fn hand_default(seed: u64) -> SpriteSpec {
        SpriteSpec {
            width: 24,
            height: 24,
            level: 0.2,
            contrast: 0.15,
            texture_seed: seed ^ 0x9e37_79b9_7f4a_7c15,
            morph: None,
        }
    }

    pub fn object_default(seed: u64) -> SpriteSpec {
        SpriteSpec {
            width: 18,
            height: 18,
            level: 0.8,
            contrast: 0.15,
            texture_seed: seed ^ 0x517c_c1b7_2722_0a95,
            morph: None,
        }
    }
}

/// Linear texture interpolation toward the texture drawn from
/// `to_texture_seed` over frames `[start_frame, end_frame]`, covering the
/// morph phases `[from_phase, to_phase]` (defaults: the full 0..1 sweep).
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct MorphSpec {
    pub to_texture_seed: u64,
    pub start_frame: usize,
    pub end_frame: usize,
    #[serde(default)]
    pub from_phase: f32,
    #[serde(default = "phase_one")]
    pub to_phase: f32,
}

fn phase_one() -> f32 {
    1.0
}

/// An explicitly scripted sprite following piecewise-linear waypoints.
/// The sprite is visible from the first waypoint's frame to the last's.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ActorScript {
    pub sprite: SpriteSpec,
    pub waypoints: Vec<Waypoint>,
}

/// Sprite center at `frame`; positions between waypoints interpolate
/// linearly and are rounded to whole pixels when rendered.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct Waypoint {
    pub frame: usize,
    pub x: f32,
    pub y: f32,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq, Hash)]
#[serde(rename_all = "snake_case")]
pub enum InteractionKind {
    Pickup,
    Putdown,
    Autonomous,
}

impl InteractionKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            InteractionKind::Pickup => "pickup",
            InteractionKind::Putdown => "putdown",
            InteractionKind::Autonomous => "autonomous",
        }
    }

    pub fn parse(s: &str) -> Option<InteractionKind> {
        match s {
            "pickup" => Some(InteractionKind::Pickup),
            "putdown" => Some(InteractionKind::Putdown),
            "autonomous" => Some(InteractionKind::Autonomous),
            _ => None,
        }
    }
}

/// A choreographed interaction at a target grid cell.
///
/// For `pickup`/`putdown` the synthesizer plans a hand trajectory: approach
/// from the hand's rest position, dwell at the target, retreat. For
/// `autonomous` an object sprite translates into the target cell on its own
/// and stops there. `start_frame..end_frame` is the window in which the
/// whole motion must fit.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct InteractionScript {
    pub kind: InteractionKind,
    /// Target cell in grid coordinates (30x30-pixel cells).
    pub cell: (u32, u32),
    pub start_frame: usize,
    pub end_frame: usize,
}

impl InteractionScript {
    /// Pixel center of the target cell.
    pub fn target(&self) -> Point {
        Point::new(
            (self.cell.0 * SCRIPT_CELL_SIZE + SCRIPT_CELL_SIZE / 2) as f32,
            (self.cell.1 * SCRIPT_CELL_SIZE + SCRIPT_CELL_SIZE / 2) as f32,
        )
    }
}

/// A static face glyph: an oriented wedge whose direction follows the
/// scripted interaction targets.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct FaceSpec {
    pub x: f32,
    pub y: f32,
    #[serde(default = "default_face_size")]
    pub size: u32,
}

fn default_face_size() -> u32 {
    40
}

impl SceneScript {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("script serializes")
    }

    pub fn from_json(text: &str) -> crate::Result<SceneScript> {
        serde_json::from_str(text).map_err(|e| crate::Error::Script(format!("bad script json: {e}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn script_json_round_trip() {
        let script = SceneScript {
            width: 240,
            height: 180,
            frames: 100,
            fps: 25,
            background: BackgroundSpec::default(),
            actors: vec![],
            interactions: vec![InteractionScript {
                kind: InteractionKind::Pickup,
                cell: (4, 3),
                start_frame: 10,
                end_frame: 80,
            }],
            hand: None,
            face: Some(FaceSpec {
                x: 60.0,
                y: 40.0,
                size: 40,
            }),
            noise_sigma: 0.01,
            light_drift: 0.0,
            seed: 7,
        };
        let back = SceneScript::from_json(&script.to_json()).unwrap();
        assert_eq!(back, script);
    }

    #[test]
    fn interaction_target_is_cell_center() {
        let it = InteractionScript {
            kind: InteractionKind::Pickup,
            cell: (4, 4),
            start_frame: 0,
            end_frame: 10,
        };
        assert_eq!(it.target(), Point::new(135.0, 135.0));
    }
}
