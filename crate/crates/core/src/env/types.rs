use std::fmt;

use serde::{Deserialize, Serialize};

/// The seven primitive actions. Integer codes are shared by every part of the
/// system: observation features, hints, prompts and the policy head.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Action {
    TurnLeft = 0,
    TurnRight = 1,
    Forward = 2,
    Pickup = 3,
    Drop = 4,
    Toggle = 5,
    Done = 6,
}

impl Action {
    pub const COUNT: usize = 7;
    pub const ALL: [Action; 7] = [
        Action::TurnLeft,
        Action::TurnRight,
        Action::Forward,
        Action::Pickup,
        Action::Drop,
        Action::Toggle,
        Action::Done,
    ];

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: u8) -> Option<Action> {
        Action::ALL.get(code as usize).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            Action::TurnLeft => "turn left",
            Action::TurnRight => "turn right",
            Action::Forward => "move forward",
            Action::Pickup => "pick up",
            Action::Drop => "drop",
            Action::Toggle => "toggle",
            Action::Done => "done",
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Facing direction. Codes follow the MiniGrid convention (0 = east, clockwise).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    East = 0,
    South = 1,
    West = 2,
    North = 3,
}

impl Direction {
    pub const ALL: [Direction; 4] = [
        Direction::East,
        Direction::South,
        Direction::West,
        Direction::North,
    ];

    pub fn from_code(code: u8) -> Direction {
        Direction::ALL[(code % 4) as usize]
    }

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn left(self) -> Direction {
        Direction::from_code(self.code() + 3)
    }

    pub fn right(self) -> Direction {
        Direction::from_code(self.code() + 1)
    }

    /// Unit step in grid coordinates (x = column, y = row, origin top-left).
    pub fn delta(self) -> (i32, i32) {
        match self {
            Direction::East => (1, 0),
            Direction::South => (0, 1),
            Direction::West => (-1, 0),
            Direction::North => (0, -1),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Direction::East => "east",
            Direction::South => "south",
            Direction::West => "west",
            Direction::North => "north",
        }
    }

    pub fn arrow(self) -> char {
        match self {
            Direction::East => '>',
            Direction::South => 'v',
            Direction::West => '<',
            Direction::North => '^',
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Color {
    Red = 0,
    Green = 1,
    Blue = 2,
    Purple = 3,
    Yellow = 4,
    Grey = 5,
}

impl Color {
    pub const COUNT: usize = 6;
    pub const ALL: [Color; 6] = [
        Color::Red,
        Color::Green,
        Color::Blue,
        Color::Purple,
        Color::Yellow,
        Color::Grey,
    ];

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn name(self) -> &'static str {
        match self {
            Color::Red => "red",
            Color::Green => "green",
            Color::Blue => "blue",
            Color::Purple => "purple",
            Color::Yellow => "yellow",
            Color::Grey => "grey",
        }
    }
}

impl fmt::Display for Color {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Object kinds that can occupy a cell. `Floor` is an empty cell.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ObjectKind {
    Wall,
    Floor,
    Key,
    Ball,
    Box,
    Door,
}

impl ObjectKind {
    pub const COUNT: usize = 6;
    pub const ALL: [ObjectKind; 6] = [
        ObjectKind::Wall,
        ObjectKind::Floor,
        ObjectKind::Key,
        ObjectKind::Ball,
        ObjectKind::Box,
        ObjectKind::Door,
    ];
    /// Kinds that can be picked up and carried.
    pub const CARRYABLE: [ObjectKind; 3] = [ObjectKind::Key, ObjectKind::Ball, ObjectKind::Box];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            ObjectKind::Wall => "wall",
            ObjectKind::Floor => "floor",
            ObjectKind::Key => "key",
            ObjectKind::Ball => "ball",
            ObjectKind::Box => "box",
            ObjectKind::Door => "door",
        }
    }

    pub fn is_carryable(self) -> bool {
        matches!(self, ObjectKind::Key | ObjectKind::Ball | ObjectKind::Box)
    }

    /// Index in the MiniGrid object table used by observation triples.
    pub fn observation_code(self) -> u8 {
        match self {
            ObjectKind::Floor => obs_code::EMPTY,
            ObjectKind::Wall => obs_code::WALL,
            ObjectKind::Door => obs_code::DOOR,
            ObjectKind::Key => obs_code::KEY,
            ObjectKind::Ball => obs_code::BALL,
            ObjectKind::Box => obs_code::BOX,
        }
    }
}

impl fmt::Display for ObjectKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// MiniGrid object-table codes (11 entries) used in view triples.
pub mod obs_code {
    pub const UNSEEN: u8 = 0;
    pub const EMPTY: u8 = 1;
    pub const WALL: u8 = 2;
    pub const FLOOR: u8 = 3;
    pub const DOOR: u8 = 4;
    pub const KEY: u8 = 5;
    pub const BALL: u8 = 6;
    pub const BOX: u8 = 7;
    pub const GOAL: u8 = 8;
    pub const LAVA: u8 = 9;
    pub const AGENT: u8 = 10;
    pub const KINDS: usize = 11;
    pub const COLORS: usize = 6;
    pub const STATES: usize = 3;
    pub const STATE_OPEN: u8 = 0;
    pub const STATE_CLOSED: u8 = 1;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DoorState {
    Open,
    Closed,
}

impl DoorState {
    pub fn name(self) -> &'static str {
        match self {
            DoorState::Open => "open",
            DoorState::Closed => "closed",
        }
    }
}

/// Contents of a grid cell.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GridObject {
    pub kind: ObjectKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub color: Option<Color>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub door_state: Option<DoorState>,
}

impl GridObject {
    pub const WALL: GridObject = GridObject {
        kind: ObjectKind::Wall,
        color: None,
        door_state: None,
    };
    pub const FLOOR: GridObject = GridObject {
        kind: ObjectKind::Floor,
        color: None,
        door_state: None,
    };

    /// A carryable object (key, ball or box).
    pub fn item(kind: ObjectKind, color: Color) -> GridObject {
        debug_assert!(kind.is_carryable());
        GridObject {
            kind,
            color: Some(color),
            door_state: None,
        }
    }

    pub fn door(color: Color, state: DoorState) -> GridObject {
        GridObject {
            kind: ObjectKind::Door,
            color: Some(color),
            door_state: Some(state),
        }
    }

    pub fn is_floor(&self) -> bool {
        self.kind == ObjectKind::Floor
    }

    pub fn is_wall(&self) -> bool {
        self.kind == ObjectKind::Wall
    }

    /// Anything that is neither floor nor wall.
    pub fn is_object(&self) -> bool {
        !self.is_floor() && !self.is_wall()
    }

    pub fn is_open_door(&self) -> bool {
        self.kind == ObjectKind::Door && self.door_state == Some(DoorState::Open)
    }

    /// Whether the agent may enter this cell.
    pub fn can_overlap(&self) -> bool {
        self.is_floor() || self.is_open_door()
    }

    /// Whether vision passes through this cell.
    pub fn see_behind(&self) -> bool {
        match self.kind {
            ObjectKind::Wall => false,
            ObjectKind::Door => self.door_state == Some(DoorState::Open),
            _ => true,
        }
    }

    pub fn matches(&self, kind: ObjectKind, color: Color) -> bool {
        self.kind == kind && self.color == Some(color)
    }

    /// "red key", "blue door"; walls and floor have no color.
    pub fn describe(&self) -> String {
        match self.color {
            Some(c) => format!("{} {}", c.name(), self.kind.name()),
            None => self.kind.name().to_string(),
        }
    }

    /// Observation triple (kind, color, state) in MiniGrid codes.
    pub fn observation_triple(&self) -> [u8; 3] {
        let state = match self.door_state {
            Some(DoorState::Open) => obs_code::STATE_OPEN,
            Some(DoorState::Closed) => obs_code::STATE_CLOSED,
            None => 0,
        };
        [
            self.kind.observation_code(),
            self.color.map(Color::code).unwrap_or(0),
            state,
        ]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct AgentPose {
    pub x: u8,
    pub y: u8,
    pub dir: Direction,
}

impl AgentPose {
    pub fn new(x: u8, y: u8, dir: Direction) -> AgentPose {
        AgentPose { x, y, dir }
    }

    /// Cell directly ahead; may lie outside the grid.
    pub fn front(&self) -> (i32, i32) {
        let (dx, dy) = self.dir.delta();
        (self.x as i32 + dx, self.y as i32 + dy)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn action_codes_are_stable() {
        for (i, a) in Action::ALL.iter().enumerate() {
            assert_eq!(a.code() as usize, i);
            assert_eq!(Action::from_code(i as u8), Some(*a));
        }
        assert_eq!(Action::Forward.code(), 2);
        assert_eq!(Action::from_code(7), None);
    }

    #[test]
    fn turning_cycles() {
        for d in Direction::ALL {
            assert_eq!(d.left().right(), d);
            assert_eq!(d.left().left().left().left(), d);
        }
        assert_eq!(Direction::North.right(), Direction::East);
        assert_eq!(Direction::North.left(), Direction::West);
    }

    #[test]
    fn non_door_objects_have_no_state() {
        let k = GridObject::item(ObjectKind::Key, Color::Red);
        assert!(k.door_state.is_none());
        assert_eq!(k.observation_triple(), [obs_code::KEY, 0, 0]);
        let d = GridObject::door(Color::Blue, DoorState::Closed);
        assert_eq!(d.observation_triple(), [obs_code::DOOR, 2, 1]);
        assert!(!d.can_overlap());
        assert!(GridObject::door(Color::Blue, DoorState::Open).can_overlap());
    }
}
