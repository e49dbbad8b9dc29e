use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::types::{Color, Direction, ObjectKind};
use super::EnvError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskKind {
    GoToObj,
    OpenDoor,
    PickupLoc,
}

impl TaskKind {
    pub const ALL: [TaskKind; 3] = [TaskKind::GoToObj, TaskKind::OpenDoor, TaskKind::PickupLoc];

    pub fn name(self) -> &'static str {
        match self {
            TaskKind::GoToObj => "gotoobj",
            TaskKind::OpenDoor => "opendoor",
            TaskKind::PickupLoc => "pickuploc",
        }
    }
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TaskKind {
    type Err = EnvError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "gotoobj" => Ok(TaskKind::GoToObj),
            "opendoor" => Ok(TaskKind::OpenDoor),
            "pickuploc" => Ok(TaskKind::PickupLoc),
            _ => Err(EnvError::UnknownTask(s.to_string())),
        }
    }
}

/// What counts as success for door missions.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DoorGoal {
    /// The target door has been toggled open.
    #[default]
    Open,
    /// The agent stands next to the target door, facing it.
    GoTo,
}

/// Room quadrant used by location-described pickup missions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quadrant {
    TopLeft,
    TopRight,
    BottomLeft,
    BottomRight,
}

impl Quadrant {
    pub const ALL: [Quadrant; 4] = [
        Quadrant::TopLeft,
        Quadrant::TopRight,
        Quadrant::BottomLeft,
        Quadrant::BottomRight,
    ];

    /// Quadrant of interior cell `(x, y)` in a `width`×`height` room.
    pub fn of(x: u8, y: u8, width: u8, height: u8) -> Quadrant {
        let left = x < width / 2;
        let top = y < height / 2;
        match (top, left) {
            (true, true) => Quadrant::TopLeft,
            (true, false) => Quadrant::TopRight,
            (false, true) => Quadrant::BottomLeft,
            (false, false) => Quadrant::BottomRight,
        }
    }

    pub fn phrase(self) -> &'static str {
        match self {
            Quadrant::TopLeft => "in the top-left corner",
            Quadrant::TopRight => "in the top-right corner",
            Quadrant::BottomLeft => "in the bottom-left corner",
            Quadrant::BottomRight => "in the bottom-right corner",
        }
    }
}

/// A side of the room relative to the agent's initial facing.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RelativeSide {
    Left,
    Right,
    Front,
    Behind,
}

impl RelativeSide {
    pub const ALL: [RelativeSide; 4] = [
        RelativeSide::Left,
        RelativeSide::Right,
        RelativeSide::Front,
        RelativeSide::Behind,
    ];

    pub fn phrase(self) -> &'static str {
        match self {
            RelativeSide::Left => "on your left",
            RelativeSide::Right => "on your right",
            RelativeSide::Front => "in front of you",
            RelativeSide::Behind => "behind you",
        }
    }

    /// World direction of this side for an agent facing `facing`.
    pub fn world_direction(self, facing: Direction) -> Direction {
        match self {
            RelativeSide::Left => facing.left(),
            RelativeSide::Right => facing.right(),
            RelativeSide::Front => facing,
            RelativeSide::Behind => facing.left().left(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "type", content = "value")]
pub enum Location {
    Quadrant(Quadrant),
    Side(RelativeSide),
}

impl Location {
    pub fn phrase(self) -> &'static str {
        match self {
            Location::Quadrant(q) => q.phrase(),
            Location::Side(s) => s.phrase(),
        }
    }
}

/// The goal of an episode. `target_pos` is resolved at reset time.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Mission {
    pub task: TaskKind,
    pub target_kind: ObjectKind,
    pub target_color: Color,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub location: Option<Location>,
    pub target_pos: (u8, u8),
    #[serde(default)]
    pub door_goal: DoorGoal,
    pub text: String,
}

impl Mission {
    pub fn go_to(kind: ObjectKind, color: Color, pos: (u8, u8)) -> Mission {
        Mission {
            task: TaskKind::GoToObj,
            target_kind: kind,
            target_color: color,
            location: None,
            target_pos: pos,
            door_goal: DoorGoal::Open,
            text: format!("go to the {} {}", color.name(), kind.name()),
        }
    }

    /// Door mission described by color (`side == None`) or by side.
    pub fn open_door(
        color: Color,
        pos: (u8, u8),
        side: Option<RelativeSide>,
        door_goal: DoorGoal,
    ) -> Mission {
        let text = match side {
            None => format!("open the {} door", color.name()),
            Some(s) => format!("open the door {}", s.phrase()),
        };
        Mission {
            task: TaskKind::OpenDoor,
            target_kind: ObjectKind::Door,
            target_color: color,
            location: side.map(Location::Side),
            target_pos: pos,
            door_goal,
            text,
        }
    }

    pub fn pickup_loc(kind: ObjectKind, color: Color, pos: (u8, u8), quadrant: Quadrant) -> Mission {
        Mission {
            task: TaskKind::PickupLoc,
            target_kind: kind,
            target_color: color,
            location: Some(Location::Quadrant(quadrant)),
            target_pos: pos,
            door_goal: DoorGoal::Open,
            text: format!(
                "pick up the {} {} {}",
                color.name(),
                kind.name(),
                quadrant.phrase()
            ),
        }
    }
}

/// Closed vocabulary of every word the mission grammar can produce.
pub const MISSION_VOCAB: [&str; 30] = [
    "go", "to", "the", "open", "pick", "up", "door", "key", "ball", "box", "red", "green", "blue",
    "purple", "yellow", "grey", "on", "your", "left", "right", "in", "front", "of", "you",
    "behind", "top-left", "top-right", "bottom-left", "bottom-right", "corner",
];
